"""Order-k frequency learner with MAP bit prediction."""
from dataclasses import dataclass

import numpy as np

from markov_mistakes import kernels
from markov_mistakes.errors import ConfigError, EmptySubsequenceError
from markov_mistakes.markov import DEFAULT_STATE_CAP, check_order


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LearnerModel:
    """Trained learner.

    ``m[i]`` counts visits to state ``i`` and ``counts1[i]`` the type-1
    transitions taken from it. ``phat`` is NaN for unvisited states, whose
    decision is 0.
    """

    order: int
    counts1: np.ndarray
    m: np.ndarray
    phat: np.ndarray
    d: np.ndarray

    @property
    def hamming_weight(self):
        return int(self.d.sum())

    @classmethod
    def from_counts(cls, order, counts1, m):
        counts1 = np.asarray(counts1, dtype=np.int64)
        m = np.asarray(m, dtype=np.int64)
        with np.errstate(invalid="ignore", divide="ignore"):
            phat = np.where(m > 0, counts1 / np.where(m > 0, m, 1), np.nan)
        # p̂ > 1/2 decided in integers to avoid rounding at the tie
        d = ((m > 0) & (2 * counts1 > m)).astype(np.uint8)
        return cls(
            order=int(order),
            counts1=_frozen(counts1, np.int64),
            m=_frozen(m, np.int64),
            phat=_frozen(phat, np.float64),
            d=_frozen(d, np.uint8),
        )

    @classmethod
    def from_decisions(cls, d):
        """A learner frozen on decision vector ``d`` (one pseudo-visit per state)."""
        d = np.asarray(d, dtype=np.int64)
        k = int(np.log2(len(d)))
        if len(d) != 1 << k or k < 1 or not np.isin(d, (0, 1)).all():
            raise ConfigError("decision vector must be binary with length 2**k, k >= 1")
        return cls.from_counts(k, d, np.ones_like(d))


def train(training, order, *, state_cap=DEFAULT_STATE_CAP, backend=None):
    """Fit an order-``order`` learner on ``training`` (a :class:`BitSequence`).

    The learner starts in the state given by the youngest ``order`` warm-up
    bits and counts one transition per emitted bit.
    """
    k = check_order(order, state_cap)
    if training.warmup_len < k:
        raise ConfigError(
            f"training warm-up {training.warmup_len} is shorter than learner order {k}"
        )
    if len(training.bits) - training.warmup_len < 1:
        raise ConfigError("training sequence has no emitted bits")
    m, counts1 = kernels.transition_counts(training.bits, k, training.warmup_len,
                                           backend=backend)
    return LearnerModel.from_counts(k, counts1, m)


@dataclass(frozen=True, eq=False)
class PredictionTrace:
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    states: np.ndarray

    def __len__(self):
        return len(self.x)


def predict(model, test, *, backend=None):
    """Predict every emitted bit of ``test``; the state advances on the true bit."""
    if test.warmup_len < model.order:
        raise ConfigError(
            f"test warm-up {test.warmup_len} is shorter than learner order {model.order}"
        )
    states, y = kernels.predict_states(test.bits, model.order, test.warmup_len,
                                       model.d, backend=backend)
    x = np.asarray(test.bits[test.warmup_len:], dtype=np.uint8)
    return PredictionTrace(
        x=_frozen(x, np.uint8),
        y=_frozen(y, np.uint8),
        xi=_frozen(x ^ y, np.uint8),
        states=_frozen(states, np.int64),
    )


@dataclass(frozen=True, eq=False)
class MistakeSubsequence:
    bits: np.ndarray
    indices: np.ndarray

    @property
    def nu(self):
        return int(len(self.bits))

    @property
    def ones(self):
        return int(self.bits.sum())


def _select(trace, prediction):
    idx = np.flatnonzero(trace.y == prediction)
    return MistakeSubsequence(bits=_frozen(trace.xi[idx], np.uint8),
                              indices=_frozen(idx, np.int64))


def select_zero_subsequence(trace):
    """Mistake bits at the times the learner predicted 0 (these equal the input bits)."""
    return _select(trace, 0)


def select_one_subsequence(trace):
    """Mistake bits at the times the learner predicted 1. Diagnostic only."""
    return _select(trace, 1)


def empirical_deviation(sub, beta):
    """``|ones/nu - beta|`` for a non-empty subsequence."""
    if sub.nu == 0:
        raise EmptySubsequenceError("frequency of an empty subsequence is undefined")
    return abs(sub.ones / sub.nu - float(beta))
