# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for sequence generation, training and prediction.

Must stay bit-for-bit equivalent to ``_pykernels``.
"""
import numpy as np

from libc.stdint cimport int64_t, uint8_t


def markov_walk(const double[::1] p1, int order, Py_ssize_t state,
                const double[::1] uniforms):
    cdef Py_ssize_t n = uniforms.shape[0]
    cdef Py_ssize_t mask = (<Py_ssize_t>1 << order) - 1
    cdef Py_ssize_t t
    cdef uint8_t x
    out = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] bits = out
    with nogil:
        for t in range(n):
            x = 1 if uniforms[t] < p1[state] else 0
            bits[t] = x
            state = ((state << 1) & mask) | x
    return out, state


cdef inline Py_ssize_t _window(const uint8_t[::1] bits, Py_ssize_t end, int order) nogil:
    cdef Py_ssize_t s = 0
    cdef Py_ssize_t j
    for j in range(end - order, end):
        s = (s << 1) | bits[j]
    return s


def transition_counts(const uint8_t[::1] bits, int order, Py_ssize_t warmup):
    cdef Py_ssize_t n_states = <Py_ssize_t>1 << order
    cdef Py_ssize_t mask = n_states - 1
    cdef Py_ssize_t t, s
    cdef uint8_t x
    visits_arr = np.zeros(n_states, dtype=np.int64)
    ones_arr = np.zeros(n_states, dtype=np.int64)
    cdef int64_t[::1] visits = visits_arr
    cdef int64_t[::1] ones = ones_arr
    with nogil:
        s = _window(bits, warmup, order)
        for t in range(warmup, bits.shape[0]):
            x = bits[t]
            visits[s] += 1
            ones[s] += x
            s = ((s << 1) & mask) | x
    return visits_arr, ones_arr


def predict_states(const uint8_t[::1] bits, int order, Py_ssize_t warmup,
                   const uint8_t[::1] decisions):
    cdef Py_ssize_t n = bits.shape[0] - warmup
    cdef Py_ssize_t mask = (<Py_ssize_t>1 << order) - 1
    cdef Py_ssize_t t, s
    states_arr = np.empty(n, dtype=np.int64)
    y_arr = np.empty(n, dtype=np.uint8)
    cdef int64_t[::1] states = states_arr
    cdef uint8_t[::1] y = y_arr
    with nogil:
        s = _window(bits, warmup, order)
        for t in range(n):
            states[t] = s
            y[t] = decisions[s]
            s = ((s << 1) & mask) | bits[warmup + t]
    return states_arr, y_arr
