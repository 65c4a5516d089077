"""Report serialization.

Structured output is JSON with every float written to 17 significant
digits (NaN and infinities become ``null``), so values round-trip exactly
and identical reports give identical bytes. Tabular output is one CSV row
per trial.
"""
import io
import json
import math
from fractions import Fraction

import numpy as np

TABLE_COLUMNS = ("trial_index", "seed", "nu", "deviation", "epsilon", "rho_avg",
                 "hamming_d", "class")
FORMATS = ("structured", "table")


def _fmt_float(x):
    if math.isnan(x) or math.isinf(x):
        return "null"
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _encode(obj, out, indent, level):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        out.write("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(_fmt_float(float(obj)))
    elif isinstance(obj, Fraction):
        out.write(json.dumps(str(obj)))
    elif isinstance(obj, str):
        out.write(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            out.write(("," if i else "") + pad + json.dumps(str(k)) + ": ")
            _encode(v, out, indent, level + 1)
        out.write(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not len(items):
            out.write("[]")
            return
        scalar = all(not isinstance(v, (dict, list, tuple)) for v in items)
        out.write("[")
        for i, v in enumerate(items):
            if scalar:
                out.write(", " if i else "")
            else:
                out.write(("," if i else "") + pad)
            _encode(v, out, indent, level + 1)
        out.write("]" if scalar else end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_structured(obj, indent=1):
    buf = io.StringIO()
    _encode(obj, buf, indent, 0)
    buf.write("\n")
    return buf.getvalue().encode("utf-8")


def loads_structured(data):
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return _fmt_float(v).replace("null", "")
    return str(v)


def table_rows(outcomes):
    yield ",".join(TABLE_COLUMNS)
    for o in outcomes:
        yield ",".join(_cell(v) for v in (o.trial_index, o.seed, o.nu, o.deviation,
                                          o.epsilon, o.rho_avg, o.hamming_d,
                                          o.outcome_class))


def write_report(report, fmt="structured"):
    """Serialize an experiment report (or any ``to_dict``-able report) to bytes."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    if fmt == "structured":
        payload = report.to_dict() if hasattr(report, "to_dict") else report
        return dumps_structured(payload)
    if not hasattr(report, "outcomes"):
        raise ValueError("table format needs a report with per-trial outcomes")
    return "".join(row + "\n" for row in table_rows(report.outcomes)).encode("utf-8")


def save_report(report, path, fmt="structured"):
    data = write_report(report, fmt)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
    return data
