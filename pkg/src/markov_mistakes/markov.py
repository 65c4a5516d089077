"""Binary order-k Markov sources on the de Bruijn state graph.

A state of order ``k`` is an integer in ``[0, 2**k)`` whose binary digits
are the last ``k`` emitted bits, oldest bit most significant. Emitting bit
``x`` from state ``s`` moves to ``shift(s, x) = ((s << 1) & (2**k - 1)) | x``,
so each state has exactly two out-edges: type-0 and type-1.
"""
from dataclasses import dataclass, field
from functools import reduce
from math import gcd

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import breadth_first_order, connected_components

from markov_mistakes import kernels
from markov_mistakes.errors import (
    ConfigError,
    NonErgodicError,
    NumericalError,
    StateCapError,
)
from markov_mistakes.rng import make_rng

DEFAULT_STATE_CAP = 2**16
DEFAULT_FLOOR = 0.05
RESIDUAL_TOL = 1e-10
IDENTITY_TOL = 1e-12
BALANCE_TOL = 1e-10
# eigenvalues this close to zero are reported as exactly zero
EIG_ZERO_TOL = 1e-13
# above this many states, eigenvalues come from ARPACK instead of LAPACK
DENSE_EIG_LIMIT = 4096
# non-symmetric dense eigvals is much slower; switch to ARPACK earlier
NONREV_DENSE_LIMIT = 1024


def shift(state, bit, order):
    return ((state << 1) & ((1 << order) - 1)) | bit


def state_bits(state, order):
    """Binary vector of ``state``, oldest bit first."""
    return [(state >> (order - 1 - j)) & 1 for j in range(order)]


def check_order(order, state_cap=DEFAULT_STATE_CAP, what="order"):
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)):
        raise ConfigError(f"{what} must be an integer, got {order!r}")
    if order < 1:
        raise ConfigError(f"{what} must be >= 1, got {order}")
    if 2**order > state_cap:
        raise StateCapError(
            f"{what}={order} needs 2**{order} states, above the state cap {state_cap}"
        )
    return int(order)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """Order-``order`` binary source; ``p1[s]`` is P(next bit = 1 | state s)."""

    order: int
    p1: np.ndarray

    @property
    def n_states(self):
        return 1 << self.order

    def transition_matrix(self, sparse=False):
        n = self.n_states
        s = np.arange(n)
        zero_to = (s << 1) & (n - 1)
        rows = np.concatenate([s, s])
        cols = np.concatenate([zero_to, zero_to | 1])
        vals = np.concatenate([1.0 - self.p1, self.p1])
        T = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        T.eliminate_zeros()
        return T if sparse else T.toarray()

    def __eq__(self, other):
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return self.order == other.order and np.array_equal(self.p1, other.p1)

    __hash__ = None


def build_source(order, p1=None, *, seed=None, floor=DEFAULT_FLOOR,
                 state_cap=DEFAULT_STATE_CAP):
    """Build a :class:`TransitionModel`.

    Pass either an explicit ``p1`` vector of length ``2**order`` or a
    ``seed``; with a seed, each entry is drawn uniformly from
    ``[floor, 1 - floor]``.
    """
    order = check_order(order, state_cap)
    n = 1 << order
    if p1 is None:
        if seed is None:
            raise ConfigError("build_source needs p1 or a randomization seed")
        if not 0.0 <= floor < 0.5:
            raise ConfigError(f"floor must lie in [0, 0.5), got {floor}")
        p1 = make_rng(seed).uniform(floor, 1.0 - floor, size=n)
    else:
        p1 = np.asarray(p1, dtype=np.float64)
        if p1.ndim != 1 or p1.shape[0] != n:
            raise ConfigError(
                f"p1 must have length 2**{order} = {n}, got shape {p1.shape}"
            )
        bad = np.flatnonzero(~((p1 >= 0.0) & (p1 <= 1.0)))
        if bad.size:
            raise ConfigError(
                f"p1[{bad[0]}] = {p1[bad[0]]!r} is outside [0, 1]"
            )
    return TransitionModel(order, _frozen(p1, np.float64))


@dataclass(frozen=True, eq=False)
class StationaryAnalysis:
    """Stationary law and spectral summary of a source.

    ``second_eigenvalue`` is the second-largest eigenvalue of the chain on
    its recurrent class and is only meaningful when ``reversible``; it is NaN
    otherwise. ``lambda_magnitude`` (the subdominant eigenvalue modulus) is
    always filled in. ``gamma`` uses ``max(0, second_eigenvalue)`` for
    reversible chains and falls back to ``lambda_magnitude`` otherwise.
    """

    pi: np.ndarray
    beta: float
    beta_from_states: float
    ergodic: bool
    reversible: bool
    second_eigenvalue: float
    lambda_magnitude: float
    lambda0: float
    gamma: float
    period: int
    recurrent_states: np.ndarray
    residual: float
    balance_defect: float
    notes: tuple = field(default=())

    @property
    def within_assumptions(self):
        """True when the chain is ergodic and reversible."""
        return self.ergodic and self.reversible

    def summary(self):
        return {
            "beta": self.beta,
            "second_eigenvalue": self.second_eigenvalue,
            "lambda_magnitude": self.lambda_magnitude,
            "lambda0": self.lambda0,
            "gamma": self.gamma,
            "ergodic": self.ergodic,
            "reversible": self.reversible,
            "period": self.period,
            "residual": self.residual,
            "balance_defect": self.balance_defect,
            "notes": list(self.notes),
        }


def _support_graph(model):
    n = model.n_states
    s = np.arange(n)
    zero_to = (s << 1) & (n - 1)
    keep0 = model.p1 < 1.0
    keep1 = model.p1 > 0.0
    rows = np.concatenate([s[keep0], s[keep1]])
    cols = np.concatenate([zero_to[keep0], (zero_to | 1)[keep1]])
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))


def _closed_classes(graph):
    n_comp, labels = connected_components(graph, directed=True, connection="strong")
    coo = graph.tocoo()
    leaks = np.zeros(n_comp, dtype=bool)
    leaks[labels[coo.row][labels[coo.row] != labels[coo.col]]] = True
    closed = [np.flatnonzero(labels == c) for c in range(n_comp) if not leaks[c]]
    return n_comp, closed


def _period(graph, members):
    sub = graph[members][:, members]
    order, _ = breadth_first_order(sub, 0, directed=True, return_predecessors=True)
    level = np.full(len(members), -1, dtype=np.int64)
    level[0] = 0
    csr = sub.tocsr()
    for u in order:
        for v in csr.indices[csr.indptr[u]:csr.indptr[u + 1]]:
            if level[v] < 0:
                level[v] = level[u] + 1
    coo = sub.tocoo()
    diffs = np.abs(level[coo.row] + 1 - level[coo.col])
    return int(reduce(gcd, diffs.tolist(), 0))


def _stationary(T_c):
    """Solve pi (T - I) = 0, sum(pi) = 1 on an irreducible block."""
    n = T_c.shape[0]
    if n == 1:
        return np.ones(1)
    A = (T_c.T - sp.identity(n, format="csr")).tolil()
    A[n - 1, :] = np.ones(n)
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    A = A.tocsc()
    lu = spla.splu(A)
    pi = lu.solve(rhs)
    # one step of iterative refinement
    pi = pi + lu.solve(rhs - A @ pi)
    pi = np.where(pi < 0.0, 0.0, pi)
    return pi / pi.sum()


def _spectrum(model, members, T_c, pi_c, reversible):
    """(second eigenvalue or NaN, subdominant modulus) on the recurrent block."""
    n = T_c.shape[0]
    if n == 1:
        return 0.0, 0.0
    if reversible:
        root = np.sqrt(pi_c)
        if n <= DENSE_EIG_LIMIT:
            S = (root[:, None] * T_c.toarray()) / root[None, :]
            S = 0.5 * (S + S.T)
            w = scipy.linalg.eigvalsh(S)[::-1]
        else:
            D, Dinv = sp.diags(root), sp.diags(1.0 / root)
            S = D @ T_c @ Dinv
            S = 0.5 * (S + S.T)
            top = spla.eigsh(S, k=2, which="LA", return_eigenvectors=False)
            bottom = spla.eigsh(S, k=1, which="SA", return_eigenvectors=False)
            w = np.concatenate([np.sort(top)[::-1], bottom])
        rest = w[1:]
        lam = float(rest[0])
        mag = float(np.max(np.abs(rest)))
        if abs(lam) <= EIG_ZERO_TOL:
            lam = 0.0
        if mag <= EIG_ZERO_TOL:
            mag = 0.0
        return lam, mag
    if n <= NONREV_DENSE_LIMIT:
        # T has nilpotent Jordan blocks at 0 whose LAPACK eigenvalues scatter
        # by eps**(1/order); order steps of the walk kill them, so take the
        # spectrum of T**order and map moduli back with the order-th root
        w = scipy.linalg.eigvals(_k_step(model, members))
    else:
        Tt = T_c.T.tocsr()

        def left_k_step(v):
            for _ in range(model.order):
                v = Tt @ v
            return v

        op = spla.LinearOperator((n, n), matvec=left_k_step, dtype=np.float64)
        w = spla.eigs(op, k=3, which="LM", return_eigenvectors=False, tol=1e-12)
    w = np.delete(w, np.argmin(np.abs(w - 1.0)))
    mag = float(np.max(np.abs(w))) if w.size else 0.0
    if mag <= EIG_ZERO_TOL:
        return float("nan"), 0.0
    return float("nan"), mag ** (1.0 / model.order)


def _k_step(model, members, chunk=512):
    """``T**order`` restricted to ``members``, built from path products.

    After ``order`` steps from state ``i`` the chain sits in the state whose
    bits are exactly the ``order`` emitted bits, so ``T**order[i, j]`` is the
    probability of emitting the bits of ``j`` starting from ``i``.
    """
    k, mask = model.order, model.n_states - 1
    j = members[None, :]
    out = np.empty((members.size, members.size))
    for lo in range(0, members.size, chunk):
        i = members[lo:lo + chunk, None]
        prob = np.ones((i.shape[0], members.size))
        for t in range(k):
            state = ((i << t) | (j >> (k - t))) & mask
            bit = (j >> (k - 1 - t)) & 1
            p = model.p1[state]
            prob *= np.where(bit == 1, p, 1.0 - p)
        out[lo:lo + chunk] = prob
    return out


def analyze_source(model, *, residual_tol=RESIDUAL_TOL, identity_tol=IDENTITY_TOL,
                   balance_tol=BALANCE_TOL):
    """Stationary distribution, ergodicity, reversibility and spectral gap.

    Raises :class:`NonErgodicError` when the stationary law is not unique
    (more than one closed class). A unichain source whose recurrent class
    is periodic, or which has transient states, is analysed on its
    recurrent class and reported with ``ergodic=False``.
    """
    n = model.n_states
    graph = _support_graph(model)
    n_comp, closed = _closed_classes(graph)
    if len(closed) > 1:
        shown = "; ".join(
            "{" + ", ".join(str(int(s)) for s in c[:8]) + (", ..." if c.size > 8 else "") + "}"
            for c in closed[:4]
        )
        raise NonErgodicError(
            f"stationary distribution is not unique: {len(closed)} closed classes "
            f"(absorbing components {shown})"
        )
    members = closed[0]
    period = _period(graph, members)
    notes = []
    if members.size < n:
        transient = np.setdiff1d(np.arange(n), members)
        notes.append(
            f"{transient.size} transient state(s) unreachable from the recurrent class, "
            f"e.g. {transient[:8].tolist()}"
        )
    if period != 1:
        notes.append(f"recurrent class is periodic with period {period}")
    ergodic = members.size == n and period == 1

    T = model.transition_matrix(sparse=True)
    T_c = T[members][:, members].tocsr()
    pi = np.zeros(n)
    pi[members] = _stationary(T_c)
    residual = float(np.max(np.abs(T.T @ pi - pi)))
    if residual > residual_tol:
        raise NumericalError(
            f"stationary solve residual {residual:.3e} exceeds {residual_tol:.0e}"
        )

    flux = sp.diags(pi) @ T
    defect = flux - flux.T
    balance_defect = float(np.max(np.abs(defect.data))) if defect.nnz else 0.0
    reversible = balance_defect <= balance_tol
    if not reversible:
        notes.append("non-reversible: outside the theorem's assumptions")

    try:
        lam, mag = _spectrum(model, members, T_c, pi[members], reversible)
    except (spla.ArpackNoConvergence, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"eigen-solver did not converge: {exc}") from exc
    lambda0 = max(0.0, lam) if reversible else mag
    gamma = 1.0 if lambda0 == 0.0 else (1.0 - lambda0) / (1.0 + lambda0)

    beta = float(pi @ model.p1)
    beta_states = float(pi[1::2].sum())
    if abs(beta - beta_states) > identity_tol:
        raise NumericalError(
            f"stationary bit frequency mismatch {abs(beta - beta_states):.3e}"
        )
    return StationaryAnalysis(
        pi=_frozen(pi, np.float64),
        beta=beta,
        beta_from_states=beta_states,
        ergodic=bool(ergodic),
        reversible=bool(reversible),
        second_eigenvalue=lam,
        lambda_magnitude=mag,
        lambda0=float(lambda0),
        gamma=float(gamma),
        period=period,
        recurrent_states=_frozen(members, np.int64),
        residual=residual,
        balance_defect=balance_defect,
        notes=tuple(notes),
    )


@dataclass(frozen=True, eq=False)
class BitSequence:
    """Bits with a warm-up prefix that fixes the initial state(s)."""

    bits: np.ndarray
    warmup_len: int

    def __post_init__(self):
        if not 0 <= self.warmup_len <= len(self.bits):
            raise ValueError(
                f"warmup_len {self.warmup_len} outside [0, {len(self.bits)}]"
            )

    @property
    def emitted(self):
        return self.bits[self.warmup_len:]

    def __len__(self):
        return len(self.bits)

    def __eq__(self, other):
        if not isinstance(other, BitSequence):
            return NotImplemented
        return self.warmup_len == other.warmup_len and np.array_equal(self.bits, other.bits)

    __hash__ = None


def sample_state(pi, u):
    """Inverse-CDF draw of a state from ``pi`` given a uniform ``u``."""
    cdf = np.cumsum(pi)
    s = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    s = min(s, len(pi) - 1)
    while pi[s] <= 0.0:
        s -= 1
    return s


def generate_sequence(model, analysis, emitted_len, warmup_len, seed=None, *,
                      rng=None, allow_nonergodic=False, backend=None):
    """Draw ``warmup_len + emitted_len`` bits from the source at stationarity.

    The initial state is sampled from ``analysis.pi`` and written out as the
    first ``model.order`` bits; the chain then runs for the remaining
    warm-up and emitted bits. Pass either ``seed`` or a ready ``rng``.
    """
    if not analysis.ergodic and not allow_nonergodic:
        raise NonErgodicError("cannot sample from a non-ergodic source")
    if emitted_len < 1:
        raise ConfigError(f"emitted_len must be >= 1, got {emitted_len}")
    if warmup_len < model.order:
        raise ConfigError(
            f"warmup_len {warmup_len} is shorter than the source order {model.order}"
        )
    if rng is None:
        if seed is None:
            raise ConfigError("generate_sequence needs a seed or an rng")
        rng = make_rng(seed)
    s0 = sample_state(analysis.pi, rng.random())
    prefix = np.array(state_bits(s0, model.order), dtype=np.uint8)
    uniforms = rng.random(warmup_len - model.order + emitted_len)
    rest, _ = kernels.markov_walk(model.p1, model.order, s0, uniforms, backend=backend)
    return BitSequence(np.concatenate([prefix, rest]), int(warmup_len))


@dataclass(frozen=True, eq=False)
class InducedConditional:
    """P(next bit = 1 | last ``order`` bits = i) under the stationary source.

    ``window_law[i]`` is the stationary probability of the ``order``-bit
    window ``i``; entries with zero probability are unreachable and their
    ``p`` is NaN when it cannot be defined.
    """

    order: int
    p: np.ndarray
    window_law: np.ndarray
    reachable: np.ndarray


def window_law(model, analysis, order):
    """Stationary law of ``order``-bit windows."""
    ks = model.order
    if order <= ks:
        idx = np.arange(model.n_states) & ((1 << order) - 1)
        return np.bincount(idx, weights=analysis.pi, minlength=1 << order)
    law = np.asarray(analysis.pi, dtype=np.float64)
    mask = model.n_states - 1
    for j in range(ks, order):
        w = np.arange(1 << j)
        p = model.p1[w & mask]
        nxt = np.empty(1 << (j + 1))
        nxt[w << 1] = law * (1.0 - p)
        nxt[(w << 1) | 1] = law * p
        law = nxt
    return law


def induced_conditional(model, analysis, learner_order, *, state_cap=DEFAULT_STATE_CAP):
    """Conditional type-1 probabilities seen by an order-``learner_order`` learner."""
    k = check_order(learner_order, state_cap, "learner_order")
    ks = model.order
    law = window_law(model, analysis, k)
    if k >= ks:
        p = np.asarray(model.p1)[np.arange(1 << k) & (model.n_states - 1)].astype(np.float64)
    else:
        idx = np.arange(model.n_states) & ((1 << k) - 1)
        num = np.bincount(idx, weights=analysis.pi * model.p1, minlength=1 << k)
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(law > 0.0, num / np.where(law > 0.0, law, 1.0), np.nan)
    return InducedConditional(
        order=k,
        p=_frozen(p, np.float64),
        window_law=_frozen(law, np.float64),
        reachable=_frozen(law > 0.0, bool),
    )
