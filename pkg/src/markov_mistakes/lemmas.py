"""Monte Carlo checks of the inequalities behind the deviation bound.

Four suites:

``poisson_tails``
    Lower/upper tail of the mean of heterogeneous Bernoulli trials against
    ``exp(-n p eps^2 / 2)`` and ``exp(-n p eps^2 / 4)``.
``decision_concentration``
    Frequency of a trained decision vector landing outside set A against
    ``2 exp(-2^k rho eps^2 / 4)``, averaged over training draws.
``fixed_rule_deviation``
    P(nu >= ell and deviation > eps) for a frozen decision vector against
    ``2 exp(-2 ell gamma eps^2)``.
``set_a``
    Exhaustive exact set-A size against its closed-form upper bound.

A Monte Carlo check passes when ``empirical <= bound + 3 * se`` where
``se = sqrt(b (1 - b) / draws)`` and ``b = min(bound, 1)``: the standard
error of a frequency whose true value sits exactly on the bound.
"""
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binom

from markov_mistakes.bound import (
    chernoff_lower_tail,
    chernoff_upper_tail,
    decision_concentration_bound,
    fixed_rule_deviation_bound,
    rho_profile,
    set_a_cardinality,
)
from markov_mistakes.harness import Teacher
from markov_mistakes.learner import LearnerModel, predict, select_zero_subsequence, train
from markov_mistakes.markov import (
    analyze_source,
    build_source,
    generate_sequence,
    induced_conditional,
)
from markov_mistakes.rng import PRNG_ID, derive_seed, make_rng

SIGMAS = 3.0


@dataclass(frozen=True)
class LemmaCheck:
    suite: str
    label: str
    params: dict
    empirical: float
    theoretical: float
    stderr: float
    draws: int
    passed: bool
    skipped: bool = False


@dataclass
class LemmaReport:
    checks: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks if not c.skipped)

    def suite_passed(self, suite):
        return all(c.passed for c in self.checks if c.suite == suite and not c.skipped)

    def suites(self):
        return sorted({c.suite for c in self.checks})

    def to_dict(self):
        per_suite = {s: self.suite_passed(s) for s in self.suites()}
        return {
            "config": self.config,
            "passed": self.passed,
            "suites": per_suite,
            "checks": [asdict(c) for c in self.checks],
            "provenance": self.provenance,
        }


def _mc_check(suite, label, params, hits, draws, bound):
    emp = hits / draws
    b = min(bound, 1.0)
    se = float(np.sqrt(b * (1.0 - b) / draws))
    return LemmaCheck(suite, label, params, float(emp), float(bound), se, int(draws),
                      bool(emp <= bound + SIGMAS * se))


def poisson_tails(rng, draws=10_000, counts=(20, 100), eps_grid=(0.0, 0.25, 0.5, 1.0)):
    checks = []
    for n in counts:
        for lo, hi in ((0.05, 0.6), (0.3, 0.9)):
            p = rng.uniform(lo, hi, size=n)
            pbar = float(p.mean())
            means = (rng.random((draws, n)) < p).sum(axis=1) / n
            for eps in eps_grid:
                params = {"n": n, "p_range": [lo, hi], "p_mean": pbar, "eps": eps}
                low = int(np.count_nonzero(means < (1 - eps) * pbar))
                high = int(np.count_nonzero(means > (1 + eps) * pbar))
                checks.append(_mc_check("poisson_tails", "lower", params, low, draws,
                                        chernoff_lower_tail(n, pbar, eps)))
                checks.append(_mc_check("poisson_tails", "upper", params, high, draws,
                                        chernoff_upper_tail(n, pbar, eps)))
    return checks


def decision_concentration(config, teacher, seed, trainings=1000,
                           eps_grid=(0.25, 0.5, 1.0), orders=None):
    checks = []
    if orders is None:
        orders = sorted({config.learner_order, min(config.learner_order + 2, 6)})
    warm_base = teacher.model.order
    for k in orders:
        induced = induced_conditional(teacher.model, teacher.analysis, k)
        warm = max(k, warm_base)
        weights, rhos = [], []
        for r in range(trainings):
            seq = generate_sequence(teacher.model, teacher.analysis, config.train_length,
                                    warm, derive_seed(seed, r), allow_nonergodic=True)
            learner = train(seq, k)
            rhos.append(rho_profile(learner.m, induced.p).rho_avg)
            weights.append(learner.hamming_weight)
        weights = np.array(weights, dtype=np.float64)
        rhos = np.array(rhos)
        usable = rhos > 0.0
        for eps in eps_grid:
            mean = (2.0**k) * rhos[usable]
            ratio = weights[usable] / mean
            outside = int(np.count_nonzero((ratio < 1 - eps) | (ratio > 1 + eps)))
            bound = float(np.mean([decision_concentration_bound(k, r, eps)
                                   for r in rhos[usable]])) if usable.any() else 2.0
            params = {"k": k, "eps": eps, "train_length": config.train_length,
                      "rho_mean": float(rhos[usable].mean()) if usable.any() else 0.0,
                      "undefined_draws": int((~usable).sum())}
            checks.append(_mc_check("decision_concentration", f"k={k}", params,
                                    outside, int(usable.sum()) or 1, bound))
    return checks


def _fixed_rule_case(label, model, analysis, d, ell, n, eps_grid, seed, reps):
    learner = LearnerModel.from_decisions(d)
    warm = max(learner.order, model.order)
    devs = np.empty(reps)
    nus = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        seq = generate_sequence(model, analysis, n, warm, derive_seed(seed, r),
                                allow_nonergodic=True)
        sub = select_zero_subsequence(predict(learner, seq))
        nus[r] = sub.nu
        devs[r] = abs(sub.ones / sub.nu - analysis.beta) if sub.nu else 0.0
    checks = []
    for eps in eps_grid:
        hits = int(np.count_nonzero((nus >= ell) & (devs > eps)))
        params = {"ell": ell, "n": n, "gamma": analysis.gamma, "beta": analysis.beta,
                  "eps": eps, "d": [int(v) for v in d], "p1": [float(v) for v in model.p1]}
        checks.append(_mc_check("fixed_rule_deviation", label, params, hits, reps,
                                fixed_rule_deviation_bound(ell, analysis.gamma, eps)))
    return checks, devs, nus


def fixed_rule_deviation(config, teacher, seed, reps=2000,
                         eps_grid=(0.02, 0.03, 0.05, 0.08)):
    ell = config.min_length
    checks = []

    fair = build_source(1, (0.5, 0.5))
    fair_an = analyze_source(fair)
    cases, devs, nus = _fixed_rule_case("iid_fair_all_zero", fair, fair_an, [0, 0], ell,
                                        ell, eps_grid, derive_seed(seed, 0), reps)
    checks += cases
    # exact binomial cross-check of the same Monte Carlo tail
    ones = np.arange(ell + 1)
    pmf = binom.pmf(ones, ell, 0.5)
    for eps in eps_grid:
        # same floating-point predicate as the simulation, enumerated over Bin(ell, 1/2)
        exact = float(pmf[np.abs(ones / ell - fair_an.beta) > eps].sum())
        emp = float(np.mean(devs > eps))
        se = float(np.sqrt(max(exact * (1 - exact), 1e-12) / reps))
        checks.append(LemmaCheck("fixed_rule_deviation", "iid_fair_binomial_oracle",
                                 {"ell": ell, "eps": eps}, emp, exact, se, reps,
                                 bool(abs(emp - exact) <= 4 * se + 1.0 / reps)))

    biased = build_source(1, (0.3, 0.3))
    biased_an = analyze_source(biased)
    k = config.learner_order
    d = make_rng(derive_seed(seed, 1)).integers(0, 2, size=1 << k)
    d[0] = 0
    cases, _, _ = _fixed_rule_case("iid_biased_random_d", biased, biased_an, d, ell,
                                   4 * ell, eps_grid, derive_seed(seed, 2), reps)
    checks += cases

    an = teacher.analysis
    if an.ergodic and an.reversible:
        cases, _, _ = _fixed_rule_case("configured_source_all_zero", teacher.model, an,
                                       [0, 0], ell, ell, eps_grid, derive_seed(seed, 3), reps)
        checks += cases
    else:
        checks.append(LemmaCheck("fixed_rule_deviation", "configured_source_all_zero",
                                 {"reason": "source not ergodic and reversible"},
                                 0.0, 0.0, 0.0, 0, True, skipped=True))
    return checks


def set_a_suite(orders=(1, 2, 3, 4), rhos=(0.1, 0.2, 0.3, 0.4),
                eps_grid=tuple(np.round(np.linspace(0.0, 1.5, 31), 10))):
    checks = []
    for k in orders:
        for rho in rhos:
            for eps in eps_grid:
                res = set_a_cardinality(k, rho, float(eps))
                if not res.bound_applicable:
                    continue
                upper = float(res.upper_bound) if res.upper_bound is not None else float("inf")
                checks.append(LemmaCheck(
                    "set_a", f"k={k}", {"k": k, "rho": rho, "eps": float(eps),
                                        "lower_index": res.lower_index,
                                        "upper_index": res.upper_index},
                    float(res.exact), upper, 0.0, 0, bool(res.holds)))
    return checks


def verify_lemmas(config, *, draws=10_000, trainings=1000, reps=2000, teacher=None):
    """Run all four suites for ``config`` and collect the checks."""
    if teacher is None:
        teacher = Teacher.from_config(config)
    rng = make_rng(derive_seed(config.seed, 0))
    report = LemmaReport(config=config.to_dict(),
                         provenance={"prng": PRNG_ID, "draws": draws,
                                     "trainings": trainings, "reps": reps,
                                     "sigmas": SIGMAS})
    report.checks += poisson_tails(rng, draws=draws)
    report.checks += decision_concentration(config, teacher, derive_seed(config.seed, 1),
                                            trainings=trainings)
    report.checks += fixed_rule_deviation(config, teacher, derive_seed(config.seed, 2),
                                          reps=reps)
    report.checks += set_a_suite()
    return report
