"""Markov teacher / Markov learner prediction game.

A binary order-k* Markov source (the teacher) produces training and test
sequences; an order-k frequency learner makes MAP bit predictions. The
package measures how far the frequency of 1s in the mistakes made on
0-predictions drifts from the source's stationary bit frequency, evaluates
the closed-form deviation bound, and checks the bound and its supporting
inequalities by seeded Monte Carlo.
"""
from markov_mistakes.bound import (
    BoundResult,
    RhoProfile,
    binomial_tail_rho,
    epsilon_bound,
    rho_profile,
    set_a_cardinality,
    theoretical_tail_bounds,
)
from markov_mistakes.harness import (
    ExperimentConfig,
    ExperimentReport,
    SourceSpec,
    TrialOutcome,
    derive_seed,
    run_experiment,
    run_trial,
)
from markov_mistakes.learner import (
    LearnerModel,
    MistakeSubsequence,
    PredictionTrace,
    empirical_deviation,
    predict,
    select_one_subsequence,
    select_zero_subsequence,
    train,
)
from markov_mistakes.markov import (
    BitSequence,
    InducedConditional,
    StationaryAnalysis,
    TransitionModel,
    analyze_source,
    build_source,
    generate_sequence,
    induced_conditional,
)

__version__ = "0.1.0"

__all__ = [
    "BitSequence",
    "BoundResult",
    "ExperimentConfig",
    "ExperimentReport",
    "InducedConditional",
    "LearnerModel",
    "MistakeSubsequence",
    "PredictionTrace",
    "RhoProfile",
    "SourceSpec",
    "StationaryAnalysis",
    "TransitionModel",
    "TrialOutcome",
    "analyze_source",
    "binomial_tail_rho",
    "build_source",
    "derive_seed",
    "empirical_deviation",
    "epsilon_bound",
    "generate_sequence",
    "induced_conditional",
    "predict",
    "rho_profile",
    "run_experiment",
    "run_trial",
    "select_one_subsequence",
    "select_zero_subsequence",
    "set_a_cardinality",
    "theoretical_tail_bounds",
    "train",
]
