"""Backend selection for the hot loops.

The compiled Cython extension is used when importable; otherwise the
pure-Python fallback. Set ``MARKOV_MISTAKES_BACKEND=python`` to force the
fallback (used by the benchmark and the cross-backend tests).
"""
import os

import numpy as np

from markov_mistakes import _pykernels

try:
    from markov_mistakes import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels


def available_backends():
    return sorted(_BACKENDS)


def _select():
    wanted = os.environ.get("MARKOV_MISTAKES_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in _BACKENDS:
            raise ImportError(
                f"MARKOV_MISTAKES_BACKEND={wanted!r} is not available "
                f"(have {available_backends()})"
            )
        return wanted
    return "cython" if "cython" in _BACKENDS else "python"


BACKEND = _select()


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    name = name or BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r} (have {available_backends()})")
    return _BACKENDS[name]


def markov_walk(p1, order, state, uniforms, backend=None):
    """Run the source from ``state`` consuming one uniform per emitted bit.

    Bit ``t`` is 1 exactly when ``uniforms[t] < p1[state]``. Returns the
    emitted bits and the final state.
    """
    impl = get_backend(backend)
    p1 = np.ascontiguousarray(p1, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    bits, final = impl.markov_walk(p1, int(order), int(state), uniforms)
    return bits, int(final)


def transition_counts(bits, order, warmup, backend=None):
    """Per-state visit counts and type-1 transition counts over ``bits[warmup:]``."""
    impl = get_backend(backend)
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    return impl.transition_counts(bits, int(order), int(warmup))


def predict_states(bits, order, warmup, decisions, backend=None):
    """Learner states and predictions ``decisions[state]`` for each bit past ``warmup``."""
    impl = get_backend(backend)
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    decisions = np.ascontiguousarray(decisions, dtype=np.uint8)
    return impl.predict_states(bits, int(order), int(warmup), decisions)
