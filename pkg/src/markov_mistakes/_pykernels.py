"""Pure-Python/numpy implementation of the inner loops.

Used when the compiled ``_ckernels`` extension is unavailable. Output is
identical to the compiled version for identical inputs.
"""
import numpy as np


def markov_walk(p1, order, state, uniforms):
    mask = (1 << order) - 1
    p = p1.tolist()
    out = bytearray(len(uniforms))
    for t, u in enumerate(uniforms.tolist()):
        x = 1 if u < p[state] else 0
        out[t] = x
        state = ((state << 1) & mask) | x
    return np.frombuffer(bytes(out), dtype=np.uint8).copy(), state


def window_states(bits, order, warmup):
    """State (youngest ``order`` bits) in force just before each bit past ``warmup``."""
    n = len(bits) - warmup
    states = np.zeros(n, dtype=np.int64)
    b = bits.astype(np.int64)
    for j in range(order):
        # bit at lag j+1 carries weight 2**j
        start = warmup - 1 - j
        states |= b[start:start + n] << j
    return states


def transition_counts(bits, order, warmup):
    n_states = 1 << order
    states = window_states(bits, order, warmup)
    x = bits[warmup:].astype(np.int64)
    visits = np.bincount(states, minlength=n_states).astype(np.int64)
    ones = np.bincount(states, weights=x, minlength=n_states).astype(np.int64)
    return visits, ones


def predict_states(bits, order, warmup, decisions):
    states = window_states(bits, order, warmup)
    return states, decisions[states].astype(np.uint8)
