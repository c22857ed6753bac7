# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: tridiagonal sweeps, the cascade Crank-Nicolson march
and the three-term recurrence for the second homogeneous solution."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _factor(const double[:] sub, const double[:] dia, const double[:] sup,
                  double[:] cp, double[:] inv) noexcept nogil:
    cdef Py_ssize_t n = dia.shape[0], i
    cdef double den
    inv[0] = 1.0 / dia[0]
    if n > 1:
        cp[0] = sup[0] * inv[0]
    for i in range(1, n):
        den = dia[i] - sub[i - 1] * cp[i - 1]
        inv[i] = 1.0 / den
        if i < n - 1:
            cp[i] = sup[i] * inv[i]


cdef void _solve(const double[:] sub, const double[:] cp, const double[:] inv,
                 double[:] x) noexcept nogil:
    # x holds the right-hand side on entry and the solution on exit
    cdef Py_ssize_t n = x.shape[0], i
    x[0] = x[0] * inv[0]
    for i in range(1, n):
        x[i] = (x[i] - sub[i - 1] * x[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]


cdef void _tri_apply(const double[:] sub, const double[:] dia, const double[:] sup,
                     const double[:] u, double[:] out) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0], i
    for i in range(n):
        out[i] = dia[i] * u[i]
        if i > 0:
            out[i] += sub[i - 1] * u[i - 1]
        if i < n - 1:
            out[i] += sup[i] * u[i + 1]


def thomas_solve(const double[:] sub, const double[:] dia, const double[:] sup, const double[:] rhs):
    cdef Py_ssize_t n = dia.shape[0]
    cdef double[:] cp = np.empty(max(n - 1, 1))
    cdef double[:] inv = np.empty(n)
    x = np.array(rhs, dtype=np.float64, copy=True)
    cdef double[:] xv = x
    with nogil:
        _factor(sub, dia, sup, cp, inv)
        _solve(sub, cp, inv, xv)
    return x


def cn_cascade_march(const double[:] sub, const double[:] dia, const double[:] sup,
                     const double[:] csub, const double[:] cdia, const double[:] csup,
                     const double[:] lead0, const double[:] follow0,
                     const double[:, :] lead_src, double dt):
    cdef Py_ssize_t n = dia.shape[0]
    cdef Py_ssize_t m = lead_src.shape[0]
    cdef Py_ssize_t k, i
    cdef double half = 0.5 * dt

    lead = np.empty((m + 1, n))
    follow = np.empty((m + 1, n))
    cdef double[:, :] L = lead
    cdef double[:, :] F = follow
    L[0, :] = lead0
    F[0, :] = follow0

    # implicit matrix I + dt/2 * A, factored once
    cdef double[:] isub = np.empty(max(n - 1, 1))
    cdef double[:] idia = np.empty(n)
    cdef double[:] isup = np.empty(max(n - 1, 1))
    cdef double[:] cp = np.empty(max(n - 1, 1))
    cdef double[:] inv = np.empty(n)
    cdef double[:] work = np.empty(n)
    cdef double[:] avg = np.empty(n)
    cdef double[:] tmp = np.empty(n)

    with nogil:
        for i in range(n):
            idia[i] = 1.0 + half * dia[i]
            if i < n - 1:
                isub[i] = half * sub[i]
                isup[i] = half * sup[i]
        _factor(isub, idia, isup, cp, inv)

        for k in range(m):
            _tri_apply(sub, dia, sup, L[k, :], tmp)
            for i in range(n):
                work[i] = L[k, i] - half * tmp[i] + dt * lead_src[k, i]
            _solve(isub, cp, inv, work)
            for i in range(n):
                L[k + 1, i] = work[i]
                avg[i] = 0.5 * (L[k, i] + work[i])

            _tri_apply(sub, dia, sup, F[k, :], tmp)
            for i in range(n):
                work[i] = F[k, i] - half * tmp[i]
            _tri_apply(csub, cdia, csup, avg, tmp)
            for i in range(n):
                work[i] += dt * tmp[i]
            _solve(isub, cp, inv, work)
            for i in range(n):
                F[k + 1, i] = work[i]

    return lead, follow


def recurrence_march(const double[:] gmid, const double[:] shift, double u0, double u1):
    """Run gmid[j] (u[j+1]-u[j]) - gmid[j-1] (u[j]-u[j-1]) = shift[j] u[j]."""
    cdef Py_ssize_t n = gmid.shape[0], j
    out = np.empty(n + 1)
    cdef double[:] u = out
    u[0] = u0
    u[1] = u1
    with nogil:
        for j in range(1, n):
            u[j + 1] = u[j] + (gmid[j - 1] * (u[j] - u[j - 1]) + shift[j] * u[j]) / gmid[j]
    return out
