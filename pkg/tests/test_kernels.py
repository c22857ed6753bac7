import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_lab import kernels

BACKENDS = [kernels.fallback] + ([kernels.compiled] if kernels.compiled is not None else [])


def _system(n, rng):
    off = -1.0 - rng.random(n - 1)
    dia = 4.0 + rng.random(n)
    return off, dia


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_thomas_matches_banded_solver(mod):
    rng = np.random.default_rng(0)
    off, dia = _system(50, rng)
    sup = off + 0.1 * rng.random(49)
    rhs = rng.normal(size=50)
    ab = np.zeros((3, 50))
    ab[0, 1:], ab[1], ab[2, :-1] = sup, dia, off
    ref = scipy.linalg.solve_banded((1, 1), ab, rhs)
    np.testing.assert_allclose(mod.thomas_solve(off, dia, sup, rhs), ref, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_cascade_march_matches_block_crank_nicolson(mod):
    rng = np.random.default_rng(1)
    n, m, dt = 12, 7, 0.05
    off, dia = _system(n, rng)
    csub, cdia, csup = rng.normal(size=n - 1), rng.normal(size=n), rng.normal(size=n - 1)
    lead0, follow0 = rng.normal(size=n), rng.normal(size=n)
    src = rng.normal(size=(m, n))
    A = np.diag(dia) + np.diag(off, -1) + np.diag(off, 1)
    C = np.diag(cdia) + np.diag(csub, -1) + np.diag(csup, 1)
    # lead' = -A lead + src, follow' = -A follow + C lead
    M = np.block([[A, np.zeros((n, n))], [-C, A]])
    Ip = np.eye(2 * n) + 0.5 * dt * M
    Im = np.eye(2 * n) - 0.5 * dt * M
    y = np.concatenate([lead0, follow0])
    lead, follow = mod.cn_cascade_march(off, dia, off, csub, cdia, csup, lead0, follow0, src, dt)
    for k in range(m):
        y = np.linalg.solve(Ip, Im @ y + dt * np.concatenate([src[k], np.zeros(n)]))
        np.testing.assert_allclose(lead[k + 1], y[:n], rtol=1e-11, atol=1e-12)
        np.testing.assert_allclose(follow[k + 1], y[n:], rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_recurrence_march_solves_three_term_relation(mod):
    rng = np.random.default_rng(2)
    gm = 1.0 + rng.random(30)
    shift = -0.01 * rng.random(31)
    u = mod.recurrence_march(gm, shift, 1.0, 1.1)
    assert u.shape == (31,)
    for j in range(1, 30):
        # gm[j] (u[j+1] - u[j]) - gm[j-1] (u[j] - u[j-1]) = shift[j] u[j]
        lhs = gm[j] * (u[j + 1] - u[j]) - gm[j - 1] * (u[j] - u[j - 1])
        assert lhs == pytest.approx(shift[j] * u[j], abs=1e-12 * (1 + abs(u[j])))


@pytest.mark.skipif(kernels.compiled is None, reason="compiled extension not built")
@settings(max_examples=25, deadline=None)
@given(st.integers(3, 40), st.integers(1, 20), st.floats(1e-4, 0.5), st.integers(0, 2 ** 31))
def test_backends_agree(n, m, dt, seed):
    rng = np.random.default_rng(seed)
    off, dia = _system(n, rng)
    cs = [rng.normal(size=n - 1), rng.normal(size=n), rng.normal(size=n - 1)]
    l0, f0 = rng.normal(size=n), rng.normal(size=n)
    src = rng.normal(size=(m, n))
    a = kernels.compiled.cn_cascade_march(off, dia, off, *cs, l0, f0, src, dt)
    b = kernels.fallback.cn_cascade_march(off, dia, off, *cs, l0, f0, src, dt)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-13, atol=1e-13)
    rhs = rng.normal(size=n)
    np.testing.assert_allclose(kernels.compiled.thomas_solve(off, dia, off, rhs),
                               kernels.fallback.thomas_solve(off, dia, off, rhs), rtol=1e-13, atol=1e-14)
    gm = 1.0 + rng.random(n)
    sh = -0.01 * rng.random(n + 1)
    np.testing.assert_allclose(kernels.compiled.recurrence_march(gm, sh, 1.0, 1.0),
                               kernels.fallback.recurrence_march(gm, sh, 1.0, 1.0), rtol=1e-13)


def test_compiled_accepts_read_only_inputs():
    if kernels.compiled is None:
        pytest.skip("compiled extension not built")
    x = np.ones(5)
    x.setflags(write=False)
    out = kernels.compiled.thomas_solve(-x[:4], 4 * x, -x[:4], x)
    assert np.all(np.isfinite(out))


def test_pure_python_switch():
    env = dict(os.environ, CASCADE_LAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from cascade_lab import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
