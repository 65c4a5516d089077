"""Deviation bound for the 0-prediction mistake subsequence, and the closed
forms used along the way.

``rho_i`` is the chance that a learner state ends up predicting 1, i.e.
P(Binomial(m_i, p(1|i)) > m_i / 2) with a strict inequality; ``rho_avg`` is
its average over the ``2**k`` learner states.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from markov_mistakes.errors import ConfigError

EXACT_TAIL_MAX = 64
SET_A_MAX_ORDER = 20


def _check_prob(p, name="p"):
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ConfigError(f"{name} must lie in [0, 1], got {p!r}")
    return p


def _check_count(m, name="m_i"):
    if isinstance(m, bool) or int(m) != m or m < 0:
        raise ConfigError(f"{name} must be a non-negative integer, got {m!r}")
    return int(m)


def binomial_tail_exact(m_i, p):
    """P(Bin(m_i, p) > m_i/2) as an exact rational in the binary value of ``p``."""
    m_i = _check_count(m_i)
    q = Fraction(_check_prob(p))
    r = 1 - q
    return sum(
        (math.comb(m_i, j) * q**j * r ** (m_i - j) for j in range(m_i // 2 + 1, m_i + 1)),
        Fraction(0),
    )


def binomial_tail_log(m_i, p):
    """P(Bin(m_i, p) > m_i/2) summed in log space with log-gamma coefficients."""
    m_i = _check_count(m_i)
    p = _check_prob(p)
    lo = m_i // 2 + 1
    if lo > m_i:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    j = np.arange(lo, m_i + 1, dtype=np.float64)
    log_terms = (
        gammaln(m_i + 1.0) - gammaln(j + 1.0) - gammaln(m_i - j + 1.0)
        + j * math.log(p) + (m_i - j) * math.log1p(-p)
    )
    return float(min(1.0, math.exp(logsumexp(log_terms))))


def binomial_tail_rho(m_i, p):
    """rho for one learner state: exact below 65 visits, log space above."""
    m_i = _check_count(m_i)
    p = _check_prob(p)
    if m_i <= EXACT_TAIL_MAX:
        return float(binomial_tail_exact(m_i, p))
    return binomial_tail_log(m_i, p)


@dataclass(frozen=True, eq=False)
class RhoProfile:
    rho: np.ndarray
    rho_avg: float
    m: np.ndarray
    p_true: np.ndarray


def rho_profile(m, p_true):
    m = np.asarray(m, dtype=np.int64)
    p_true = np.asarray(p_true, dtype=np.float64)
    if m.shape != p_true.shape or m.ndim != 1:
        raise ConfigError(f"length mismatch: m {m.shape} vs p_true {p_true.shape}")
    rho = np.zeros(len(m))
    for i, (mi, pi) in enumerate(zip(m.tolist(), p_true.tolist())):
        if mi == 0:
            continue
        if math.isnan(pi):
            raise ConfigError(f"state {i} was visited but its conditional is undefined")
        rho[i] = binomial_tail_rho(mi, pi)
    for a in (rho, m, p_true):
        a.setflags(write=False)
    return RhoProfile(rho=rho, rho_avg=float(rho.mean()), m=m, p_true=p_true)


@dataclass(frozen=True)
class BoundResult:
    """Both branches of the bound and the resulting epsilon.

    With ``rho_avg == 0`` the bound is undefined: ``defined`` is False and
    ``epsilon``, ``term1``, ``term2`` and ``admissible`` are None.
    """

    ell: int
    k: int
    delta: float
    gamma: float
    rho_avg: float
    term1: float | None
    term2: float | None
    epsilon: float | None
    active_branch: str | None
    admissible: bool | None
    defined: bool


def epsilon_bound(ell, k, rho_avg, delta, gamma):
    if isinstance(ell, bool) or int(ell) != ell or ell < 1:
        raise ConfigError(f"ell must be a positive integer, got {ell!r}")
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must lie in (0, 1), got {delta!r}")
    if not 0.0 < gamma <= 1.0:
        raise ConfigError(f"gamma must lie in (0, 1], got {gamma!r}")
    rho = _check_prob(rho_avg, "rho_avg")
    ell, k = int(ell), int(k)
    if rho == 0.0:
        return BoundResult(ell, k, float(delta), float(gamma), rho,
                           None, None, None, None, None, False)
    complexity = 3.0 * rho * 2.0 ** (k - 1) * (math.log(1.0 / rho) + 1.0)
    term1 = (math.log(4.0 / delta) + complexity + k) / (2.0 * ell * gamma)
    term2 = math.log(1.0 / delta) / (2.0**k * rho)
    branch = "term1" if term1 >= term2 else "term2"
    eps = math.sqrt(max(term1, term2))
    return BoundResult(ell, k, float(delta), float(gamma), rho, term1, term2, eps,
                       branch, (1.0 + eps) * rho < 0.5, True)


def _as_fraction(x):
    # decimal reading of the float, so 0.1 * 10 lands on 1 rather than 1 + 2**-53
    return Fraction(repr(float(x)))


def _floor(q):
    return q.numerator // q.denominator


def _ceil(q):
    return -((-q.numerator) // q.denominator)


@dataclass(frozen=True)
class SetACardinality:
    """Typical-decision-set size versus its closed-form upper bound.

    ``upper_bound`` is exact (a Fraction) and None when the geometric-series
    bound does not apply.
    """

    exact: int
    upper_bound: Fraction | None
    bound_applicable: bool
    lower_index: int
    upper_index: int
    empty: bool

    @property
    def holds(self):
        return self.upper_bound is None or self.exact <= self.upper_bound


def set_a_cardinality(k, rho_avg, eps):
    """Count decision vectors with weight in ``[(1-eps) 2^k rho, (1+eps) 2^k rho]``.

    The sum runs over ``floor((1-eps) 2^k rho) .. ceil((1+eps) 2^k rho)``,
    clipped to ``[0, 2^k]``.
    """
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= SET_A_MAX_ORDER:
        raise ConfigError(f"k must be an integer in [1, {SET_A_MAX_ORDER}], got {k!r}")
    if not 0.0 < rho_avg < 1.0:
        raise ConfigError(f"rho_avg must lie in (0, 1), got {rho_avg!r}")
    if not eps >= 0.0:
        raise ConfigError(f"eps must be non-negative, got {eps!r}")
    n = 1 << int(k)
    rho, e = _as_fraction(rho_avg), _as_fraction(eps)
    lo = max(0, _floor((1 - e) * n * rho))
    c = _ceil((1 + e) * n * rho)
    hi = min(n, c)
    empty = lo > hi
    exact = 0 if empty else sum(math.comb(n, i) for i in range(lo, hi + 1))
    applicable = e < 1 / (2 * rho) - 1
    upper = None
    if applicable and n - 2 * c + 1 > 0:
        # C(n, c) / (1 - c / (n - c + 1))
        upper = Fraction(math.comb(n, c) * (n - c + 1), n - 2 * c + 1)
    return SetACardinality(exact, upper, bool(applicable), lo, hi, empty)


def chernoff_lower_tail(n, p, eps):
    """Bound on P(mean < (1 - eps) p) for n independent Bernoulli trials."""
    return math.exp(-n * p * eps**2 / 2.0)


def chernoff_upper_tail(n, p, eps):
    """Bound on P(mean > (1 + eps) p), exponent eps**2 / 4 as printed."""
    return math.exp(-n * p * eps**2 / 4.0)


def decision_concentration_bound(k, rho_avg, eps):
    """Bound on the chance that a trained decision vector falls outside set A."""
    return 2.0 * math.exp(-(2.0**k) * rho_avg * eps**2 / 4.0)


def fixed_rule_deviation_bound(ell, gamma, eps):
    """Bound on P(nu >= ell and deviation > eps) for a frozen decision vector."""
    return 2.0 * math.exp(-2.0 * ell * gamma * eps**2)


def log_binomial_upper(n, k):
    """``k (ln(n/k) + 1)``, an upper bound on ``ln C(n, k)``."""
    if k == 0:
        return 0.0
    return k * (math.log(n / k) + 1.0)


def theoretical_tail_bounds(*, n=None, p=None, eps=None, k=None, rho_avg=None,
                            ell=None, gamma=None, comb_n=None, comb_k=None):
    """Evaluate every closed-form bound whose parameters are supplied."""
    out = {}
    if eps is not None and eps < 0:
        raise ConfigError(f"eps must be non-negative, got {eps!r}")
    if n is not None and p is not None and eps is not None:
        if n < 1 or not 0.0 <= p <= 1.0:
            raise ConfigError("chernoff bounds need n >= 1 and p in [0, 1]")
        out["chernoff_lower"] = chernoff_lower_tail(n, p, eps)
        out["chernoff_upper"] = chernoff_upper_tail(n, p, eps)
    if k is not None and rho_avg is not None and eps is not None:
        out["decision_concentration"] = decision_concentration_bound(k, _check_prob(rho_avg, "rho_avg"), eps)
    if ell is not None and gamma is not None and eps is not None:
        if ell < 1 or not 0.0 < gamma <= 1.0:
            raise ConfigError("fixed-rule bound needs ell >= 1 and gamma in (0, 1]")
        out["fixed_rule_deviation"] = fixed_rule_deviation_bound(ell, gamma, eps)
    if comb_n is not None and comb_k is not None:
        if not 0 <= comb_k <= comb_n or comb_n < 1:
            raise ConfigError("combination bound needs 0 <= comb_k <= comb_n")
        out["log_comb"] = math.log(math.comb(comb_n, comb_k))
        out["log_comb_bound"] = log_binomial_upper(comb_n, comb_k)
    return out
