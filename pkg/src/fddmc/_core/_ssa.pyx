# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Gillespie direct-method kernel for the three-state receptor ensemble.

Mirrors ``_ssa_py.ssa_advance`` operation for operation so both backends
produce identical series from the same uniform stream.
"""

from libc.math cimport log


def ssa_advance(long long[::1] state, double[::1] rates, double t,
                double t_first, double dt, long long[::1] out, Py_ssize_t k,
                double[::1] uniforms, Py_ssize_t pos):
    cdef long long n_rm = state[0]
    cdef long long n_ri = state[1]
    cdef long long n_r = state[2]
    cdef double bind_m = rates[0]
    cdef double off_m = rates[1]
    cdef double bind_i = rates[2]
    cdef double off_i = rates[3]
    cdef Py_ssize_t n_out = out.shape[0]
    cdef Py_ssize_t n_u = uniforms.shape[0]
    cdef double a1, a2, a3, a4, a0, t_next, pick

    with nogil:
        while k < n_out:
            a1 = bind_m * n_r
            a2 = off_m * n_rm
            a3 = bind_i * n_r
            a4 = off_i * n_ri
            a0 = a1 + a2 + a3 + a4
            if a0 <= 0.0:
                while k < n_out:
                    out[k] = n_rm + n_ri
                    k += 1
                break
            if pos + 2 > n_u:
                break
            t_next = t - log(uniforms[pos]) / a0
            while k < n_out and t_first + k * dt < t_next:
                out[k] = n_rm + n_ri
                k += 1
            if k >= n_out:
                pos += 2
                t = t_next
                break
            pick = uniforms[pos + 1] * a0
            if pick < a1:
                n_r -= 1
                n_rm += 1
            elif pick < a1 + a2:
                n_rm -= 1
                n_r += 1
            elif pick < a1 + a2 + a3:
                n_r -= 1
                n_ri += 1
            else:
                n_ri -= 1
                n_r += 1
            t = t_next
            pos += 2

    state[0] = n_rm
    state[1] = n_ri
    state[2] = n_r
    return t, k, pos
