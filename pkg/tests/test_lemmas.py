from markov_mistakes.harness import ExperimentConfig, SourceSpec, Teacher
from markov_mistakes.learner import LearnerModel, predict, select_zero_subsequence
from markov_mistakes.lemmas import (
    _mc_check,
    decision_concentration,
    fixed_rule_deviation,
    poisson_tails,
    set_a_suite,
    verify_lemmas,
)
from markov_mistakes.markov import analyze_source, build_source, generate_sequence
from markov_mistakes.rng import make_rng

CFG = ExperimentConfig(source=SourceSpec(1, (0.3, 0.6)), train_length=500,
                       test_length=4000, min_length=300, seed=21)


def test_mc_check_rule():
    ok = _mc_check("s", "l", {}, hits=60, draws=1000, bound=0.05)
    assert ok.passed  # 0.06 <= 0.05 + 3 * 0.0069
    bad = _mc_check("s", "l", {}, hits=80, draws=1000, bound=0.05)
    assert not bad.passed
    assert _mc_check("s", "l", {}, hits=1000, draws=1000, bound=1.7).passed


def test_poisson_tails_small():
    checks = poisson_tails(make_rng(1), draws=2000)
    assert checks and all(c.passed for c in checks)
    assert {c.label for c in checks} == {"lower", "upper"}


def test_decision_concentration_small():
    cfg = ExperimentConfig(source=SourceSpec(3, random_seed=5, floor=0.3), learner_order=3,
                           train_length=200, test_length=4000, min_length=500, seed=3)
    checks = decision_concentration(cfg, Teacher.from_config(cfg), 5, trainings=200)
    assert all(c.passed for c in checks)
    assert any(c.empirical > 0 for c in checks)


def test_fixed_rule_small():
    checks = fixed_rule_deviation(CFG, Teacher.from_config(CFG), 9, reps=300)
    labels = {c.label for c in checks}
    assert {"iid_fair_all_zero", "iid_fair_binomial_oracle", "iid_biased_random_d",
            "configured_source_all_zero"} <= labels
    assert all(c.passed for c in checks)


def test_fixed_rule_skips_nonreversible():
    cfg = ExperimentConfig(source=SourceSpec(2, (0.2, 0.7, 0.4, 0.9)), learner_order=2,
                           train_length=500, test_length=2000, min_length=300, seed=2)
    checks = fixed_rule_deviation(cfg, Teacher.from_config(cfg), 1, reps=100)
    skipped = [c for c in checks if c.skipped]
    assert [c.label for c in skipped] == ["configured_source_all_zero"]


def test_set_a_suite_all_hold():
    checks = set_a_suite()
    assert len(checks) > 100 and all(c.passed for c in checks)
    k3 = [c for c in checks if c.params["k"] == 3 and c.params["rho"] == 0.2]
    assert k3


def test_set_a_reference_case_in_suite():
    checks = set_a_suite(orders=(3,), rhos=(0.25,), eps_grid=(0.5,))
    assert len(checks) == 1
    assert checks[0].empirical == 92 and checks[0].theoretical == 112


def test_verify_report_shape():
    rep = verify_lemmas(CFG, draws=300, trainings=30, reps=100)
    assert rep.suites() == ["decision_concentration", "fixed_rule_deviation",
                            "poisson_tails", "set_a"]
    d = rep.to_dict()
    assert d["passed"] == rep.passed and set(d["suites"]) == set(rep.suites())


def test_state_dependent_selection_is_not_beta():
    # frozen d=(0,1) on the two-state source selects the bits that follow a 0,
    # whose frequency is p(1|0) = 0.3 rather than beta = 3/7
    m = build_source(1, (0.3, 0.6))
    an = analyze_source(m)
    seq = generate_sequence(m, an, 200_000, 1, seed=4)
    sub = select_zero_subsequence(predict(LearnerModel.from_decisions([0, 1]), seq))
    freq = sub.ones / sub.nu
    assert abs(freq - 0.3) < 0.01
    assert abs(freq - an.beta) > 0.1
