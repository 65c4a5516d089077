"""YAML configuration documents.

Example::

    source:
      order: 1
      p1: [0.3, 0.6]          # or: random: {seed: 42, floor: 0.05}
    learner:
      order: 1
    experiment:
      train_length: 10000
      test_length: 100000
      min_length: 1000
      delta: 0.05
      trials: 500
      seed: 7
      strict: false
      workers: 1
      state_cap: 65536
    tolerances:
      residual: 1.0e-10
      identity: 1.0e-12
    verify:
      draws: 10000
      trainings: 1000
      reps: 2000
    output:
      format: structured
      path: null

Only ``source`` is required. Unknown keys are rejected.
"""
import os
from dataclasses import dataclass, field

import yaml

from markov_mistakes.errors import ConfigError
from markov_mistakes.harness import ExperimentConfig, SourceSpec
from markov_mistakes.markov import DEFAULT_FLOOR
from markov_mistakes.report import FORMATS

SEED_ENV = "MARKOV_MISTAKES_SEED"

_SECTIONS = {
    "source": {"order", "p1", "random"},
    "learner": {"order"},
    "experiment": {"train_length", "test_length", "min_length", "delta", "trials",
                   "seed", "strict", "workers", "state_cap"},
    "tolerances": {"residual", "identity"},
    "verify": {"draws", "trainings", "reps"},
    "output": {"format", "path"},
}
_RANDOM_KEYS = {"seed", "floor"}


@dataclass(frozen=True)
class VerifyOptions:
    draws: int = 10_000
    trainings: int = 1000
    reps: int = 2000


@dataclass(frozen=True)
class OutputOptions:
    format: str = "structured"
    path: str | None = None


@dataclass(frozen=True)
class ConfigDocument:
    experiment: ExperimentConfig
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    output: OutputOptions = field(default_factory=OutputOptions)
    seed_source: str = "config"


def _int(value, key, lo=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{key}: must be >= {lo}, got {value}")
    return value


def _float(value, key):
    if isinstance(value, str):
        # PyYAML reads "1e-10" (no dot) as a string
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _section(doc, name):
    sec = doc.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: expected a mapping, got {type(sec).__name__}")
    unknown = set(sec) - _SECTIONS[name]
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown key")
    return sec


def _source(sec):
    if "order" not in sec:
        raise ConfigError("source.order: required")
    order = _int(sec["order"], "source.order", 1)
    has_p1, has_random = "p1" in sec, "random" in sec
    if has_p1 == has_random:
        raise ConfigError("source: give exactly one of p1 or random")
    if has_p1:
        p1 = sec["p1"]
        if not isinstance(p1, list):
            raise ConfigError("source.p1: expected a list of probabilities")
        vals = []
        for i, v in enumerate(p1):
            v = _float(v, f"source.p1[{i}]")
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"source.p1[{i}]: {v} is outside [0, 1]")
            vals.append(v)
        if len(vals) != 2**order:
            raise ConfigError(
                f"source.p1: length {len(vals)} does not match 2**order = {2**order}"
            )
        return SourceSpec(order=order, p1=tuple(vals))
    rnd = sec["random"]
    if not isinstance(rnd, dict):
        raise ConfigError("source.random: expected a mapping")
    unknown = set(rnd) - _RANDOM_KEYS
    if unknown:
        raise ConfigError(f"source.random.{sorted(unknown)[0]}: unknown key")
    if "seed" not in rnd:
        raise ConfigError("source.random.seed: required")
    floor = _float(rnd.get("floor", DEFAULT_FLOOR), "source.random.floor")
    if not 0.0 <= floor < 0.5:
        raise ConfigError(f"source.random.floor: must lie in [0, 0.5), got {floor}")
    return SourceSpec(order=order, random_seed=_int(rnd["seed"], "source.random.seed", 0),
                      floor=floor)


def parse_document(text, *, environ=None):
    """Parse and validate a configuration document."""
    environ = os.environ if environ is None else environ
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a mapping")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    if "source" not in doc:
        raise ConfigError("source: required section")
    source = _source(_section(doc, "source"))
    learner = _section(doc, "learner")
    exp = _section(doc, "experiment")
    tol = _section(doc, "tolerances")
    ver = _section(doc, "verify")
    out = _section(doc, "output")

    kwargs = {}
    if "order" in learner:
        kwargs["learner_order"] = _int(learner["order"], "learner.order", 1)
    for key in ("train_length", "test_length", "min_length", "trials", "workers"):
        if key in exp:
            kwargs[key] = _int(exp[key], f"experiment.{key}", 1)
    if "state_cap" in exp:
        kwargs["state_cap"] = _int(exp["state_cap"], "experiment.state_cap", 2)
    seed_source = "config"
    if "seed" in exp:
        kwargs["seed"] = _int(exp["seed"], "experiment.seed", 0)
    elif environ.get(SEED_ENV):
        try:
            kwargs["seed"] = int(environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV}: not an integer") from exc
        seed_source = f"env:{SEED_ENV}"
    else:
        seed_source = "default"
    if "delta" in exp:
        delta = _float(exp["delta"], "experiment.delta")
        if not 0.0 < delta < 1.0:
            raise ConfigError(f"delta: must lie in (0, 1), got {delta}")
        kwargs["delta"] = delta
    if "strict" in exp:
        if not isinstance(exp["strict"], bool):
            raise ConfigError("experiment.strict: expected true or false")
        kwargs["strict"] = exp["strict"]
    if "residual" in tol:
        kwargs["residual_tol"] = _float(tol["residual"], "tolerances.residual")
    if "identity" in tol:
        kwargs["identity_tol"] = _float(tol["identity"], "tolerances.identity")
    try:
        experiment = ExperimentConfig(source=source, **kwargs)
    except ConfigError as exc:
        raise ConfigError(f"experiment: {exc}") from exc

    verify = VerifyOptions(**{k: _int(v, f"verify.{k}", 1) for k, v in ver.items()})
    fmt = out.get("format", "structured")
    if fmt not in FORMATS:
        raise ConfigError(f"output.format: must be one of {FORMATS}, got {fmt!r}")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path: expected a string")
    return ConfigDocument(experiment, verify, OutputOptions(fmt, path), seed_source)


def parse_config(text, *, environ=None):
    """Parse a document and return just its :class:`ExperimentConfig`."""
    return parse_document(text, environ=environ).experiment


def dump_document(doc):
    """YAML text that :func:`parse_document` maps back to ``doc``."""
    cfg = doc.experiment if isinstance(doc, ConfigDocument) else doc
    src = cfg.source
    source = {"order": src.order}
    if src.p1 is not None:
        source["p1"] = [float(v) for v in src.p1]
    else:
        source["random"] = {"seed": src.random_seed, "floor": float(src.floor)}
    data = {
        "source": source,
        "learner": {"order": cfg.learner_order},
        "experiment": {
            "train_length": cfg.train_length,
            "test_length": cfg.test_length,
            "min_length": cfg.min_length,
            "delta": float(cfg.delta),
            "trials": cfg.trials,
            "seed": cfg.seed,
            "strict": cfg.strict,
            "workers": cfg.workers,
            "state_cap": cfg.state_cap,
        },
        "tolerances": {"residual": float(cfg.residual_tol),
                       "identity": float(cfg.identity_tol)},
    }
    if isinstance(doc, ConfigDocument):
        data["verify"] = {"draws": doc.verify.draws, "trainings": doc.verify.trainings,
                          "reps": doc.verify.reps}
        data["output"] = {"format": doc.output.format, "path": doc.output.path}
    return yaml.safe_dump(data, sort_keys=False)

