"""Command-line entry point ``markov-mistakes``.

Exit codes: 0 success, 1 configuration error, 2 theorem-assumption
violation (non-ergodic source, or non-reversible under strict mode),
3 numerical failure.
"""
import argparse
import sys
from dataclasses import asdict, replace

import numpy as np

from markov_mistakes import kernels
from markov_mistakes.bound import epsilon_bound
from markov_mistakes.config import ConfigDocument, OutputOptions, parse_document
from markov_mistakes.errors import AssumptionError, ConfigError, NumericalError
from markov_mistakes.harness import Teacher, run_experiment
from markov_mistakes.lemmas import verify_lemmas
from markov_mistakes.markov import generate_sequence
from markov_mistakes.report import FORMATS, dumps_structured, write_report
from markov_mistakes.rng import PRNG_ID

EXIT_OK, EXIT_CONFIG, EXIT_ASSUMPTION, EXIT_NUMERICAL = 0, 1, 2, 3


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML configuration document")
    common.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--format", choices=FORMATS, help="output format")

    parser = argparse.ArgumentParser(prog="markov-mistakes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="stationary and spectral summary of the source")
    p = sub.add_parser("simulate", parents=[common], help="emit one test-length sequence")
    p.add_argument("--length", type=_positive, help="emitted bits (default: test_length)")
    p = sub.add_parser("bound", parents=[common], help="evaluate epsilon for explicit parameters")
    p.add_argument("--ell", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p = sub.add_parser("experiment", parents=[common], help="Monte Carlo coverage experiment")
    p.add_argument("--trials", type=_positive)
    p.add_argument("--workers", type=_positive)
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the creation time from the report")
    p = sub.add_parser("verify", parents=[common], help="lemma verification suites")
    p.add_argument("--draws", type=_positive)
    return parser


def _load(args):
    if not args.config:
        raise ConfigError("--config PATH is required for this command")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
    doc = parse_document(text)
    exp = doc.experiment
    seed_source = doc.seed_source
    if args.seed is not None:
        exp = replace(exp, seed=args.seed)
        seed_source = "cli"
    if getattr(args, "trials", None):
        exp = replace(exp, trials=args.trials)
    if getattr(args, "workers", None):
        exp = replace(exp, workers=args.workers)
    fmt = args.format or doc.output.format
    out = args.out or doc.output.path
    return ConfigDocument(exp, doc.verify, OutputOptions(fmt, out), seed_source)


def _emit(data, path):
    if path:
        try:
            with open(path, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _table(header, rows):
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def cmd_analyze(args):
    doc = _load(args)
    teacher = Teacher.from_config(doc.experiment)
    an = teacher.analysis
    if doc.output.format == "table":
        rows = [(s, teacher.model.p1[s], an.pi[s]) for s in range(teacher.model.n_states)]
        return _table(("state", "p1", "pi"), rows), doc.output.path
    payload = {"order": teacher.model.order, "p1": teacher.model.p1, "pi": an.pi,
               **an.summary(), "learner_order": doc.experiment.learner_order,
               "induced_p": teacher.induced.p, "window_law": teacher.induced.window_law}
    return dumps_structured(payload), doc.output.path


def cmd_simulate(args):
    doc = _load(args)
    cfg = doc.experiment
    teacher = Teacher.from_config(cfg)
    length = args.length or cfg.test_length
    seq = generate_sequence(teacher.model, teacher.analysis, length, cfg.warmup_len,
                            cfg.seed, allow_nonergodic=not cfg.strict)
    if doc.output.format == "table":
        rows = [(t, int(b)) for t, b in enumerate(seq.bits)]
        return _table(("t", "bit"), rows), doc.output.path
    return dumps_structured({
        "seed": cfg.seed, "seed_source": doc.seed_source, "prng": PRNG_ID,
        "warmup_len": seq.warmup_len, "emitted_len": length,
        "bits": "".join("1" if b else "0" for b in seq.bits.tolist()),
    }), doc.output.path


def cmd_bound(args):
    res = epsilon_bound(args.ell, args.k, args.rho, args.delta, args.gamma)
    if args.format == "table":
        d = asdict(res)
        return _table(tuple(d), [tuple("" if v is None else v for v in d.values())]), args.out
    return dumps_structured(asdict(res)), args.out


def cmd_experiment(args):
    doc = _load(args)
    report = run_experiment(doc.experiment, seed_source=doc.seed_source,
                            timestamp=not args.no_timestamp)
    c = report.counts
    cov = "n/a" if report.coverage is None else f"{report.coverage:.4f}"
    print(f"trials={doc.experiment.trials} evaluable={report.evaluable} coverage={cov} "
          f"covered={c['covered']} uncovered={c['uncovered']} short={c['short']} "
          f"inadmissible={c['inadmissible']} undefined={c['undefined']} "
          f"backend={kernels.BACKEND}", file=sys.stderr)
    return write_report(report, doc.output.format), doc.output.path


def cmd_verify(args):
    doc = _load(args)
    opts = doc.verify
    draws = args.draws or opts.draws
    rep = verify_lemmas(doc.experiment, draws=draws, trainings=opts.trainings, reps=opts.reps)
    for suite in rep.suites():
        print(f"{suite}: {'PASS' if rep.suite_passed(suite) else 'FAIL'}", file=sys.stderr)
    if doc.output.format == "table":
        rows = [(c.suite, c.label, np.format_float_positional(c.empirical),
                 repr(c.theoretical), repr(c.stderr), c.draws,
                 "skip" if c.skipped else ("pass" if c.passed else "fail"))
                for c in rep.checks]
        return _table(("suite", "label", "empirical", "theoretical", "stderr", "draws",
                       "status"), rows), doc.output.path
    return dumps_structured(rep.to_dict()), doc.output.path


COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "bound": cmd_bound,
    "experiment": cmd_experiment,
    "verify": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        data, out = COMMANDS[args.command](args)
        _emit(data, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionError as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
