"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (shown in the terminal summary and on
stdout) and then asserts the criterion at its stated tolerance and runtime.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from markov_mistakes import kernels
from markov_mistakes.bound import (
    binomial_tail_exact,
    binomial_tail_log,
    binomial_tail_rho,
    rho_profile,
)
from markov_mistakes.harness import ExperimentConfig, SourceSpec, Teacher, run_experiment
from markov_mistakes.learner import LearnerModel, predict, select_zero_subsequence, train
from markov_mistakes.lemmas import verify_lemmas
from markov_mistakes.markov import (
    BitSequence,
    analyze_source,
    build_source,
    generate_sequence,
    induced_conditional,
)
from markov_mistakes.rng import derive_seed, make_rng

pytestmark = pytest.mark.acceptance


def report(record, number, name, passed, detail, elapsed, limit):
    ok = bool(passed) and elapsed < limit
    line = f"{detail} time={elapsed:.2f}s/<{limit:g}s"
    record(number, name, ok, line)
    print(f"{'PASS' if ok else 'FAIL'}  [{number}] {name}  {line}")
    return ok


def test_01_two_state_analytic(record_criterion):
    t0 = time.perf_counter()
    an = analyze_source(build_source(1, (0.3, 0.6)))
    errs = {
        "pi": float(np.max(np.abs(an.pi - [4 / 7, 3 / 7]))),
        "beta": abs(an.beta - 3 / 7),
        "lambda": abs(an.second_eigenvalue - 0.3),
        "gamma": abs(an.gamma - 7 / 13),
    }
    elapsed = time.perf_counter() - t0
    worst = max(errs.values())
    ok = report(record_criterion, 1, "two-state analytic suite",
                worst <= 1e-12 and an.reversible,
                f"max_abs_err={worst:.2e} reversible={an.reversible}", elapsed, 1.0)
    assert ok


def test_02_stationary_residual(record_criterion):
    t0 = time.perf_counter()
    worst_res, worst_beta, bad = 0.0, 0.0, []
    for i in range(100):
        order = 1 + i % 8
        m = build_source(order, seed=derive_seed(2024, i))
        an = analyze_source(m)
        T = m.transition_matrix(sparse=True)
        res = float(np.max(np.abs(T.T @ an.pi - an.pi)))
        db = abs(an.beta - an.beta_from_states)
        worst_res, worst_beta = max(worst_res, res), max(worst_beta, db)
        if not an.ergodic or res > 1e-10 or db > 1e-12:
            bad.append(i)
    elapsed = time.perf_counter() - t0
    ok = report(record_criterion, 2, "stationary residual (100 sources, k*=1..8)", not bad,
                f"max_residual={worst_res:.2e} max_beta_gap={worst_beta:.2e} bad={bad}",
                elapsed, 30.0)
    assert ok


def test_03_induced_conditional_oracle(record_criterion):
    t0 = time.perf_counter()
    m = build_source(3, seed=31)
    an = analyze_source(m)
    n = 10**6
    worst_z, checked = 0.0, 0
    for k in (1, 2, 3, 5):
        ind = induced_conditional(m, an, k)
        warm = max(k, 3)
        seq = generate_sequence(m, an, n, warm, seed=derive_seed(303, k))
        fit = train(seq, k)
        for i in np.flatnonzero(ind.reachable):
            mi = int(fit.m[i])
            p = float(ind.p[i])
            if mi == 0:
                continue
            se = math.sqrt(p * (1 - p) / mi)
            z = abs(fit.counts1[i] / mi - p) / se
            worst_z = max(worst_z, z)
            checked += 1
    elapsed = time.perf_counter() - t0
    ok = report(record_criterion, 3, "induced-conditional oracle (k=1,2,3,5)",
                worst_z <= 4.0 and checked == 2 + 4 + 8 + 32,
                f"max_z={worst_z:.2f} states_checked={checked}", elapsed, 60.0)
    assert ok


def test_04_rho_closed_form(record_criterion):
    t0 = time.perf_counter()
    cases = [((0, 0.37), 0.0), ((1, 0.37), 0.37), ((2, 0.5), 0.25), ((4, 0.5), 0.3125),
             ((3, 0.6), 0.648)]
    worst_abs = max(abs(binomial_tail_rho(*a) - want) for a, want in cases)
    worst_rel = 0.0
    for p in [round(0.1 * i, 1) for i in range(1, 10)]:
        for mi in range(0, 65):
            exact = float(binomial_tail_exact(mi, p))
            logv = binomial_tail_log(mi, p)
            rel = abs(logv - exact) / exact if exact else abs(logv)
            worst_rel = max(worst_rel, rel)
    elapsed = time.perf_counter() - t0
    ok = report(record_criterion, 4, "rho closed-form suite",
                worst_abs <= 1e-12 and worst_rel <= 1e-10,
                f"max_abs_err={worst_abs:.2e} max_rel_log_vs_exact={worst_rel:.2e}",
                elapsed, 10.0)
    assert ok


REFERENCE = ExperimentConfig(source=SourceSpec(1, (0.3, 0.6)), learner_order=1,
                             train_length=10**4, test_length=10**5, min_length=10**3,
                             delta=0.05, trials=500, seed=20240501)


def test_05_theorem_coverage(record_criterion):
    t0 = time.perf_counter()
    rep = run_experiment(REFERENCE, timestamp=False)
    elapsed = time.perf_counter() - t0
    n_eval = rep.evaluable
    # coverage ignoring admissibility, for the record only
    raw = [o for o in rep.outcomes if o.defined and not o.short]
    raw_cov = (sum(o.deviation <= o.epsilon for o in raw) / len(raw)) if raw else float("nan")
    if n_eval:
        floor = 0.95 - 3 * math.sqrt(0.95 * 0.05 / n_eval)
        passed = rep.coverage >= floor
        cov = f"{rep.coverage:.4f} (floor {floor:.4f})"
    else:
        passed, cov = False, "undefined"
    eps = [o.epsilon for o in rep.outcomes if o.epsilon is not None]
    ok = report(record_criterion, 5, "coverage over evaluable trials (N=500)", passed,
                f"coverage={cov} evaluable={n_eval} counts={rep.counts} "
                f"rho_avg_mean={np.mean([o.rho_avg for o in rep.outcomes]):.4f} "
                f"eps_median={np.median(eps) if eps else float('nan'):.3f} "
                f"coverage_ignoring_admissibility={raw_cov:.4f}", elapsed, 300.0)
    assert ok


def test_06_mismatched_order(record_criterion):
    t0 = time.perf_counter()
    trials = 50
    rho = {}
    phat_gap = {}
    for k in (1, 2):
        cfg = ExperimentConfig(source=SourceSpec(2, (0.1, 0.9, 0.9, 0.1)), learner_order=k,
                               train_length=10**4, test_length=10**4, min_length=100,
                               delta=0.05, trials=trials, seed=606)
        teacher = Teacher.from_config(cfg)
        rhos, gaps = [], []
        for i in range(trials):
            seed = derive_seed(cfg.seed, i)
            training = generate_sequence(teacher.model, teacher.analysis, cfg.train_length,
                                         cfg.warmup_len, derive_seed(seed, 0))
            learner = train(training, k)
            rhos.append(rho_profile(learner.m, teacher.induced.p).rho_avg)
            gaps.append(float(np.nanmean(np.abs(learner.phat - 0.5))))
        rho[k] = float(np.mean(rhos))
        phat_gap[k] = float(np.mean(gaps))
    elapsed = time.perf_counter() - t0
    ok = report(record_criterion, 6, "mismatched order: rho(k=2) < rho(k=1)",
                rho[2] < rho[1],
                f"rho_k1={rho[1]:.5f} rho_k2={rho[2]:.5f} "
                f"mean|phat-1/2|_k1={phat_gap[1]:.4f} mean|phat-1/2|_k2={phat_gap[2]:.4f}",
                elapsed, 180.0)
    assert ok


LEMMA_CONFIGS = [
    ExperimentConfig(source=SourceSpec(1, (0.3, 0.6)), learner_order=1, seed=7),
    ExperimentConfig(source=SourceSpec(3, random_seed=5, floor=0.3), learner_order=3,
                     train_length=200, test_length=4000, min_length=1000, seed=8),
]


def test_07_lemma_suites(record_criterion):
    t0 = time.perf_counter()
    status = {}
    for cfg in LEMMA_CONFIGS:
        rep = verify_lemmas(cfg)
        for s in rep.suites():
            status[s] = status.get(s, True) and rep.suite_passed(s)
    elapsed = time.perf_counter() - t0
    ok = report(record_criterion, 7, "lemma suites",
                len(status) == 4 and all(status.values()),
                " ".join(f"{s}={'pass' if v else 'fail'}" for s, v in sorted(status.items())),
                elapsed, 300.0)
    assert ok


def test_08_trace_invariants(record_criterion):
    t0 = time.perf_counter()
    rng = make_rng(808)
    failures = 0
    for r in range(1000):
        k = int(rng.integers(1, 6))
        n = int(rng.integers(1, 3000))
        bits = rng.integers(0, 2, size=k + n).astype(np.uint8)
        d = rng.integers(0, 2, size=1 << k)
        trace = predict(LearnerModel.from_decisions(d), BitSequence(bits, k))
        sub = select_zero_subsequence(trace)
        ok_xor = np.array_equal(trace.xi, trace.x ^ trace.y)
        ok_len = sub.nu + int(trace.y.sum()) == n
        ok_ones = sub.ones == int(trace.x[trace.y == 0].sum())
        failures += not (ok_xor and ok_len and ok_ones)
    elapsed = time.perf_counter() - t0
    ok = report(record_criterion, 8, "trace invariants (1000 traces)", failures == 0,
                f"failures={failures}", elapsed, 30.0)
    assert ok


def test_09_decision_vector_mean(record_criterion):
    t0 = time.perf_counter()
    m = build_source(2, seed=909, floor=0.3)
    an = analyze_source(m)
    k = 2
    ind = induced_conditional(m, an, k)
    diffs = []
    for r in range(2000):
        seq = generate_sequence(m, an, 300, 2, seed=derive_seed(909, r))
        learner = train(seq, k)
        prof = rho_profile(learner.m, ind.p)
        diffs.append(learner.hamming_weight - float(prof.rho.sum()))
    diffs = np.array(diffs)
    se = diffs.std(ddof=1) / math.sqrt(diffs.size)
    z = abs(diffs.mean()) / se
    elapsed = time.perf_counter() - t0
    ok = report(record_criterion, 9, "decision-vector mean", z <= 4.0,
                f"mean={diffs.mean():+.4f} se={se:.4f} z={z:.2f}", elapsed, 120.0)
    assert ok


def _cli_experiment(cfg_path, out_path, *extra):
    cmd = [sys.executable, "-m", "markov_mistakes.cli", "experiment", "--config",
           str(cfg_path), "--out", str(out_path), *extra]
    subprocess.run(cmd, check=True, capture_output=True)
    return out_path.read_bytes()


def _strip_timestamp(data):
    d = json.loads(data)
    d["provenance"].pop("created_unix", None)
    return json.dumps(d, sort_keys=True).encode()


def test_10_determinism(record_criterion, tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(
        "source:\n  order: 1\n  p1: [0.3, 0.6]\n"
        "experiment:\n  train_length: 10000\n  test_length: 100000\n  min_length: 1000\n"
        "  delta: 0.05\n  trials: 100\n  seed: 424242\n"
    )
    a = _cli_experiment(cfg, tmp_path / "a.json")
    b = _cli_experiment(cfg, tmp_path / "b.json")
    par = _cli_experiment(cfg, tmp_path / "p.json", "--workers", "4")
    plain = [_cli_experiment(cfg, tmp_path / f"n{w}.json", "--no-timestamp", "--workers", w)
             for w in ("1", "3")]
    tab = [_cli_experiment(cfg, tmp_path / f"t{w}.csv", "--format", "table", "--workers", w)
           for w in ("1", "2")]
    same = (_strip_timestamp(a) == _strip_timestamp(b) == _strip_timestamp(par)
            and plain[0] == plain[1] and tab[0] == tab[1]
            and json.loads(a)["content_hash"] == json.loads(par)["content_hash"])
    elapsed = time.perf_counter() - t0
    ok = report(record_criterion, 10, "determinism (serial and parallel)", same,
                f"hash={json.loads(a)['content_hash'][:16]} backend={kernels.BACKEND}",
                elapsed, 300.0)
    assert ok
