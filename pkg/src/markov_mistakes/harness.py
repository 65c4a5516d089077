"""Seeded end-to-end trials and coverage aggregation.

One trial trains a learner on a fresh teacher sequence, tests it on an
independent sequence, and checks whether the 0-prediction mistake
frequency lies within the bound of the realised ``rho_avg``.
"""
import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

from markov_mistakes.bound import epsilon_bound, rho_profile
from markov_mistakes.errors import ConfigError, NonErgodicError, NonReversibleError
from markov_mistakes.learner import (
    empirical_deviation,
    predict,
    select_zero_subsequence,
    train,
)
from markov_mistakes.markov import (
    DEFAULT_FLOOR,
    DEFAULT_STATE_CAP,
    IDENTITY_TOL,
    RESIDUAL_TOL,
    analyze_source,
    build_source,
    check_order,
    generate_sequence,
    induced_conditional,
)
from markov_mistakes.report import dumps_structured
from markov_mistakes.rng import PRNG_ID, derive_seed

TOOL_VERSION = "0.1.0"

OUTCOME_CLASSES = ("covered", "uncovered", "short", "inadmissible", "undefined")


@dataclass(frozen=True)
class SourceSpec:
    """Teacher description: explicit ``p1`` or a randomization seed."""

    order: int
    p1: tuple | None = None
    random_seed: int | None = None
    floor: float = DEFAULT_FLOOR

    def build(self, state_cap=DEFAULT_STATE_CAP):
        return build_source(self.order, self.p1, seed=self.random_seed,
                            floor=self.floor, state_cap=state_cap)


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceSpec
    learner_order: int = 1
    train_length: int = 10_000
    test_length: int = 100_000
    min_length: int = 1_000
    delta: float = 0.05
    trials: int = 100
    seed: int = 0
    strict: bool = False
    workers: int = 1
    state_cap: int = DEFAULT_STATE_CAP
    residual_tol: float = RESIDUAL_TOL
    identity_tol: float = IDENTITY_TOL

    def __post_init__(self):
        if not isinstance(self.source, SourceSpec):
            raise ConfigError("source must be a SourceSpec")
        for name in ("train_length", "test_length", "min_length", "trials", "workers"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.min_length > self.test_length:
            raise ConfigError(
                f"min_length {self.min_length} exceeds test_length {self.test_length}"
            )
        check_order(self.source.order, self.state_cap, "source.order")
        check_order(self.learner_order, self.state_cap, "learner.order")

    @property
    def warmup_len(self):
        return max(self.learner_order, self.source.order)

    def to_dict(self):
        d = asdict(self)
        if d["source"]["p1"] is not None:
            d["source"]["p1"] = list(d["source"]["p1"])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        src = dict(d.pop("source"))
        if src.get("p1") is not None:
            src["p1"] = tuple(float(x) for x in src["p1"])
        return cls(source=SourceSpec(**src), **d)


@dataclass(frozen=True)
class TrialOutcome:
    trial_index: int
    seed: int
    nu: int
    deviation: float | None
    epsilon: float | None
    rho_avg: float
    admissible: bool | None
    defined: bool
    short: bool
    covered: bool | None
    hamming_d: int
    outcome_class: str

    def to_dict(self):
        return asdict(self)


def classify(defined, admissible, short, covered):
    """Single class per trial; undefined beats inadmissible beats short."""
    if not defined:
        return "undefined"
    if not admissible:
        return "inadmissible"
    if short:
        return "short"
    return "covered" if covered else "uncovered"


@dataclass(frozen=True, eq=False)
class Teacher:
    """A source prepared for trials: model, its analysis and the learner's view of it."""

    model: object
    analysis: object
    induced: object

    @classmethod
    def from_config(cls, config):
        model = config.source.build(config.state_cap)
        analysis = analyze_source(model, residual_tol=config.residual_tol,
                                  identity_tol=config.identity_tol)
        if config.strict:
            if not analysis.ergodic:
                raise NonErgodicError(
                    "strict mode requires an ergodic source: " + "; ".join(analysis.notes)
                )
            if not analysis.reversible:
                raise NonReversibleError(
                    f"strict mode requires a reversible source "
                    f"(detailed-balance defect {analysis.balance_defect:.3e})"
                )
        induced = induced_conditional(model, analysis, config.learner_order,
                                      state_cap=config.state_cap)
        return cls(model, analysis, induced)


def run_trial(config, teacher, seed, trial_index=0, backend=None):
    """Train, predict, select and bound for one trial seed."""
    model, analysis = teacher.model, teacher.analysis
    allow = not config.strict
    k = config.learner_order
    warm = config.warmup_len
    training = generate_sequence(model, analysis, config.train_length, warm,
                                 derive_seed(seed, 0), allow_nonergodic=allow,
                                 backend=backend)
    test = generate_sequence(model, analysis, config.test_length, warm,
                             derive_seed(seed, 1), allow_nonergodic=allow,
                             backend=backend)
    learner = train(training, k, state_cap=config.state_cap, backend=backend)
    trace = predict(learner, test, backend=backend)
    sub = select_zero_subsequence(trace)
    profile = rho_profile(learner.m, teacher.induced.p)
    bound = epsilon_bound(config.min_length, k, profile.rho_avg, config.delta,
                          analysis.gamma)
    deviation = empirical_deviation(sub, analysis.beta) if sub.nu >= 1 else None
    short = sub.nu < config.min_length
    covered = None
    if bound.defined and bound.admissible and not short:
        covered = deviation <= bound.epsilon
    return TrialOutcome(
        trial_index=int(trial_index),
        seed=int(seed),
        nu=sub.nu,
        deviation=deviation,
        epsilon=bound.epsilon,
        rho_avg=profile.rho_avg,
        admissible=bound.admissible,
        defined=bound.defined,
        short=short,
        covered=covered,
        hamming_d=learner.hamming_weight,
        outcome_class=classify(bound.defined, bound.admissible, short, covered),
    )


def _trial_job(args):
    config, teacher, index = args
    return run_trial(config, teacher, derive_seed(config.seed, index), index)


@dataclass
class ExperimentReport:
    config: dict
    source: dict
    outcomes: list
    counts: dict
    evaluable: int
    coverage: float | None
    max_deviation: float | None
    provenance: dict = field(default_factory=dict)
    content_hash: str = ""

    def hashed_part(self):
        d = self.to_dict()
        d.pop("content_hash")
        d["provenance"] = {k: v for k, v in d["provenance"].items() if k != "created_unix"}
        return d

    def compute_hash(self):
        return hashlib.sha256(dumps_structured(self.hashed_part())).hexdigest()

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["outcomes"] = [o.to_dict() for o in self.outcomes]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["outcomes"] = [TrialOutcome(**o) for o in d["outcomes"]]
        return cls(**d)


def summarize(outcomes):
    counts = {c: 0 for c in OUTCOME_CLASSES}
    for o in outcomes:
        counts[o.outcome_class] += 1
    evaluable = counts["covered"] + counts["uncovered"]
    coverage = counts["covered"] / evaluable if evaluable else None
    devs = [o.deviation for o in outcomes if o.deviation is not None]
    return counts, evaluable, coverage, (max(devs) if devs else None)


def run_experiment(config, *, workers=None, teacher=None, seed_source="config",
                   timestamp=True):
    """Run ``config.trials`` seeded trials and aggregate coverage.

    Trials are independent; with ``workers > 1`` they run in a process pool
    and are merged back in trial-index order, so the report does not depend
    on the worker count.
    """
    workers = config.workers if workers is None else workers
    if teacher is None:
        teacher = Teacher.from_config(config)
    jobs = [(config, teacher, i) for i in range(config.trials)]
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_trial_job, jobs,
                                     chunksize=max(1, config.trials // (4 * workers))))
    else:
        outcomes = [_trial_job(j) for j in jobs]
    counts, evaluable, coverage, max_dev = summarize(outcomes)
    source = teacher.analysis.summary()
    source["p1"] = [float(x) for x in teacher.model.p1]
    source["order"] = teacher.model.order
    source["induced_p"] = [None if math.isnan(x) else float(x) for x in teacher.induced.p]
    provenance = {"tool": "markov_mistakes", "tool_version": TOOL_VERSION, "prng": PRNG_ID,
                  "seed_source": seed_source}
    if timestamp:
        provenance["created_unix"] = int(time.time())
    # the worker count and kernel backend do not change results, so neither
    # is recorded; serial and parallel runs give byte-identical reports
    recorded = config.to_dict()
    recorded.pop("workers")
    report = ExperimentReport(
        config=recorded,
        source=source,
        outcomes=outcomes,
        counts=counts,
        evaluable=evaluable,
        coverage=coverage,
        max_deviation=max_dev,
        provenance=provenance,
    )
    report.content_hash = report.compute_hash()
    return report


def with_overrides(config, **changes):
    changes = {k: v for k, v in changes.items() if v is not None}
    return replace(config, **changes) if changes else config

