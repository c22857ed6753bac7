"""Pure-Python versions of the compiled kernels.

Same signatures and same arithmetic order as ``_core.pyx`` so the two backends
agree to rounding.
"""

import numpy as np


def _factor(sub, dia, sup):
    n = len(dia)
    cp = [0.0] * max(n - 1, 1)
    inv = [0.0] * n
    inv[0] = 1.0 / dia[0]
    if n > 1:
        cp[0] = sup[0] * inv[0]
    for i in range(1, n):
        inv[i] = 1.0 / (dia[i] - sub[i - 1] * cp[i - 1])
        if i < n - 1:
            cp[i] = sup[i] * inv[i]
    return cp, inv


def _solve(sub, cp, inv, x):
    n = len(x)
    x[0] = x[0] * inv[0]
    for i in range(1, n):
        x[i] = (x[i] - sub[i - 1] * x[i - 1]) * inv[i]
    for i in range(n - 2, -1, -1):
        x[i] = x[i] - cp[i] * x[i + 1]
    return x


def _tri_apply(sub, dia, sup, u):
    out = dia * u
    out[1:] += sub * u[:-1]
    out[:-1] += sup * u[1:]
    return out


def thomas_solve(sub, dia, sup, rhs):
    sub = [float(v) for v in sub]
    cp, inv = _factor(sub, list(map(float, dia)), list(map(float, sup)))
    return np.array(_solve(sub, cp, inv, [float(v) for v in rhs]))


def cn_cascade_march(sub, dia, sup, csub, cdia, csup, lead0, follow0, lead_src, dt):
    sub, dia, sup = (np.asarray(a, dtype=float) for a in (sub, dia, sup))
    csub, cdia, csup = (np.asarray(a, dtype=float) for a in (csub, cdia, csup))
    lead_src = np.asarray(lead_src, dtype=float)
    n = len(dia)
    m = lead_src.shape[0]
    half = 0.5 * dt

    isub = (half * sub).tolist()
    cp, inv = _factor(isub, (1.0 + half * dia).tolist(), (half * sup).tolist())

    lead = np.empty((m + 1, n))
    follow = np.empty((m + 1, n))
    lead[0] = lead0
    follow[0] = follow0
    for k in range(m):
        rhs = lead[k] - half * _tri_apply(sub, dia, sup, lead[k]) + dt * lead_src[k]
        lead[k + 1] = _solve(isub, cp, inv, rhs.tolist())
        avg = 0.5 * (lead[k] + lead[k + 1])
        rhs = follow[k] - half * _tri_apply(sub, dia, sup, follow[k])
        rhs += dt * _tri_apply(csub, cdia, csup, avg)
        follow[k + 1] = _solve(isub, cp, inv, rhs.tolist())
    return lead, follow


def recurrence_march(gmid, shift, u0, u1):
    gmid = [float(v) for v in gmid]
    shift = [float(v) for v in shift]
    n = len(gmid)
    u = [0.0] * (n + 1)
    u[0] = float(u0)
    u[1] = float(u1)
    for j in range(1, n):
        u[j + 1] = u[j] + (gmid[j - 1] * (u[j] - u[j - 1]) + shift[j] * u[j]) / gmid[j]
    return np.array(u)
