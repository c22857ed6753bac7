import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from cascade_lab.errors import ConfigurationError, EllipticityError, NumericalError
from cascade_lab.grid import ControlDomain, GridFunction, build_mesh, integrate, l2_norm
from cascade_lab.spectral import (
    EigenPair,
    Multiplicity,
    assemble_operator,
    build_spectrum,
    compute_coupling_integral,
    coupling_source,
    eigensolve,
    second_homogeneous_solution,
    solve_generalized_eigenfunction,
)

from conftest import SQ2PI, laplacian


def _gamma_lin(x):
    return 1.0 + x / math.pi


def _shoot(lam, x_end=math.pi, u0=(0.0, 1.0), dense=False):
    """Integrate (gamma u')' + lam u = 0 as a first-order system in (u, gamma u')."""
    def rhs(x, y):
        return [y[1] / _gamma_lin(x), -lam * y[0]]
    return solve_ivp(rhs, (0.0, x_end), list(u0), method="DOP853", rtol=1e-12, atol=1e-13,
                     dense_output=dense)


def _shooting_eigenvalues(K):
    # bracket sign changes of u(pi; lam) on a fine lam grid, then bisect
    grid = np.linspace(0.1, (K + 1.5) ** 2, 600)
    vals = [_shoot(l).y[0, -1] for l in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa * fb < 0:
            roots.append(brentq(lambda l: _shoot(l).y[0, -1], a, b, xtol=1e-13))
        if len(roots) == K:
            break
    return np.array(roots)


def test_laplacian_stencil():
    mesh, op = laplacian(8)
    h2 = mesh.h ** 2
    np.testing.assert_allclose(op.diag, 2.0 / h2, rtol=1e-15)
    np.testing.assert_allclose(op.off, -1.0 / h2, rtol=1e-15)


def test_shift_stencil():
    mesh = build_mesh(8)
    op = assemble_operator(GridFunction.constant(mesh, 1.0), GridFunction.constant(mesh, 5.0))
    np.testing.assert_allclose(op.diag, 2.0 / mesh.h ** 2 + 5.0, rtol=1e-15)


def test_ellipticity_violation():
    mesh = build_mesh(16)
    g = np.ones(17)
    g[5] = -0.1
    with pytest.raises(EllipticityError):
        assemble_operator(GridFunction(mesh, g), GridFunction.zeros(mesh))


def test_laplacian_spectrum_k3():
    mesh, op = laplacian(800)
    pairs = eigensolve(op, 3)
    for k, pr in enumerate(pairs, start=1):
        # second-order FD: lam_h = k^2 (1 - k^2 h^2 / 12 + ...)
        assert pr.lam == pytest.approx(k * k, rel=k * k * mesh.h ** 2 / 10)
        err = l2_norm(pr.phi - GridFunction(mesh, SQ2PI * np.sin(k * mesh.nodes)))
        assert err < 1e-5
        assert pr.phi.values[1] > 0


def test_potential_shift():
    mesh = build_mesh(800)
    base = eigensolve(assemble_operator(GridFunction.constant(mesh, 1.0), GridFunction.zeros(mesh)), 4)
    shifted = eigensolve(assemble_operator(GridFunction.constant(mesh, 1.0),
                                           GridFunction.constant(mesh, 5.0)), 4)
    for a, b in zip(base, shifted):
        assert b.lam == pytest.approx(a.lam + 5.0, rel=1e-12)
        assert np.max(np.abs(a.phi.values - b.phi.values)) < 1e-10


def test_variable_gamma_matches_shooting_oracle():
    mesh = build_mesh(1000)
    op = assemble_operator(GridFunction(mesh, _gamma_lin(mesh.nodes)), GridFunction.zeros(mesh))
    lams = np.array([p.lam for p in eigensolve(op, 5)])
    oracle = _shooting_eigenvalues(5)
    np.testing.assert_allclose(lams, oracle, rtol=1e-4)


def test_orthonormality():
    mesh = build_mesh(1200)
    op = assemble_operator(GridFunction(mesh, _gamma_lin(mesh.nodes)), GridFunction.constant(mesh, 0.3))
    pairs = eigensolve(op, 8)
    G = np.array([[integrate(a.phi * b.phi) for b in pairs] for a in pairs])
    assert np.max(np.abs(G - np.eye(8))) < 1e-8


def test_K_out_of_range():
    _, op = laplacian(16)
    with pytest.raises(ConfigurationError):
        eigensolve(op, 16)
    with pytest.raises(ConfigurationError):
        eigensolve(op, 0)


def test_near_degenerate_pair_is_reported():
    # a tall symmetric barrier splits (0, pi) into two identical wells
    mesh = build_mesh(400)
    x = mesh.nodes
    g0 = np.where(np.abs(x - math.pi / 2) < 0.4, 1e4, 0.0)
    op = assemble_operator(GridFunction.constant(mesh, 1.0), GridFunction(mesh, g0))
    with pytest.raises(NumericalError, match="near-degenerate"):
        eigensolve(op, 2)


@pytest.mark.parametrize("k", range(1, 11))
def test_coupling_integral_closed_forms(k):
    mesh, op = laplacian(800)
    pr = eigensolve(op, k)[-1]
    zero, one = GridFunction.zeros(mesh), GridFunction.constant(mesh, 1.0)
    two_x = GridFunction(mesh, 2.0 * mesh.nodes)
    assert compute_coupling_integral(zero, one, pr) == pytest.approx(1.0, abs=1e-6)
    assert compute_coupling_integral(two_x, zero, pr) == pytest.approx(-1.0, abs=1e-6)
    assert compute_coupling_integral(zero, zero, pr) == 0.0


def test_psi_zero_for_zero_coupling():
    mesh, op = laplacian(200)
    zero = GridFunction.zeros(mesh)
    pr = eigensolve(op, 2)[1]
    ps = solve_generalized_eigenfunction(op, pr, zero, zero, ControlDomain.of((1.0, 2.0)))
    assert np.max(np.abs(ps.psi.values)) == 0.0


def test_psi_residual_and_orthogonality():
    mesh, op = laplacian(800)
    p = GridFunction.zeros(mesh)
    q = GridFunction(mesh, np.sin(mesh.nodes))
    om = ControlDomain.of((1.0, 2.0))
    pr = eigensolve(op, 1)[0]
    ps = solve_generalized_eigenfunction(op, pr, p, q, om)
    assert ps.residual < 1e-6
    assert abs(ps.ortho) < 1e-8
    # independent residual, recomputed here from the matrix
    I = compute_coupling_integral(p, q, pr)
    rhs = coupling_source(p, q, pr.phi) + I * pr.phi
    r = op.apply(ps.psi.values) - pr.lam * ps.psi.values - rhs.values
    r[[0, -1]] = 0.0
    # the bordered solve absorbs the O(h^2) quadrature mismatch in I into its multiplier
    r += ps.solvability_defect * pr.phi.values
    assert l2_norm(GridFunction(mesh, r)) < 1e-6 * l2_norm(rhs)


def test_fredholm_recovers_I():
    mesh, op = laplacian(800)
    x = mesh.nodes
    p = GridFunction(mesh, 0.3 * np.cos(x))
    q = GridFunction(mesh, 1.0 + x)
    pr = eigensolve(op, 3)[2]
    ps = solve_generalized_eigenfunction(op, pr, p, q, ControlDomain.of((0.4, 1.1)))
    F = coupling_source(p, q, pr.phi).values[1:-1]
    phi = pr.phi.values[1:-1]
    # phi^T (L - lam) psi = 0 exactly, hence the discrete I solves phi^T (F + I phi) = 0
    I_discrete = -(phi @ F) / (phi @ phi)
    I = compute_coupling_integral(p, q, pr)
    assert I_discrete == pytest.approx(I - ps.solvability_defect, abs=1e-10)
    assert I_discrete == pytest.approx(I, abs=1e-4)


def test_psi_normalization_impossible_under_barrier():
    # phi_1 is exponentially small under a tall potential barrier
    mesh = build_mesh(400)
    g0 = np.where(mesh.nodes > 2.0, 1e6, 0.0)
    op = assemble_operator(GridFunction.constant(mesh, 1.0), GridFunction(mesh, g0))
    pr = eigensolve(op, 1)[0]
    zero = GridFunction.zeros(mesh)
    with pytest.raises(NumericalError, match="normalization"):
        solve_generalized_eigenfunction(op, pr, zero, zero, ControlDomain.of((2.5, 2.8)))


def test_chi_is_cosine_for_laplacian():
    mesh, op = laplacian(1000)
    pr = eigensolve(op, 1)[0]
    sec = second_homogeneous_solution(op, pr)
    # W = phi'(0) chi(0) = 1 and phi'(0) = sqrt(2/pi)
    ref = math.sqrt(math.pi / 2) * np.cos(mesh.nodes)
    assert l2_norm(sec.chi - GridFunction(mesh, ref)) / l2_norm(GridFunction(mesh, ref)) < 1e-4


def test_wronskian_constant():
    mesh = build_mesh(600)
    op = assemble_operator(GridFunction(mesh, _gamma_lin(mesh.nodes)), GridFunction.zeros(mesh))
    for pr in eigensolve(op, 4):
        w = second_homogeneous_solution(op, pr).wronskian
        assert np.max(np.abs(w - 1.0)) < 1e-6


def test_chi_matches_shooting_oracle():
    mesh = build_mesh(1000)
    x = mesh.nodes
    op = assemble_operator(GridFunction(mesh, _gamma_lin(x)), GridFunction.zeros(mesh))
    lam = _shooting_eigenvalues(2)[1]
    # oracle phi: Dirichlet at 0, unit flux, normalized in L2
    sol = _shoot(lam, dense=True)
    u = sol.sol(x)
    norm = math.sqrt(integrate(GridFunction(mesh, u[0] ** 2)))
    dphi0 = 1.0 / (_gamma_lin(0.0) * norm)  # phi'(0) after normalization
    # chi: zero slope at 0, gamma(0) phi'(0) chi(0) = 1
    chi0 = 1.0 / (_gamma_lin(0.0) * dphi0)
    ref = _shoot(lam, u0=(chi0, 0.0), dense=True).sol(x)[0]
    pr = eigensolve(op, 2)[1]
    chi = second_homogeneous_solution(op, pr).chi
    rel = l2_norm(chi - GridFunction(mesh, ref)) / l2_norm(GridFunction(mesh, ref))
    assert rel < 1e-4


def test_chi_overflow_reported():
    mesh, op = laplacian(16)
    big = EigenPair(0, -1e300, eigensolve(op, 1)[0].phi)
    with pytest.raises(NumericalError, match="rescale"):
        second_homogeneous_solution(op, big)


def test_multiplicity_classification():
    mesh, op = laplacian(400)
    x = mesh.nodes
    om = ControlDomain.of((1.0, 2.0))
    # q - p'/2 = 0 identically gives I = 0 for every mode
    c = 0.7
    sp = build_spectrum(op, 4, GridFunction(mesh, 2 * c * x), GridFunction.constant(mesh, c), om)
    assert all(m.multiplicity is Multiplicity.DOUBLE for m in sp)
    sp = build_spectrum(op, 4, GridFunction.zeros(mesh), GridFunction.constant(mesh, c), om)
    assert all(m.multiplicity is Multiplicity.SIMPLE for m in sp)
    assert np.allclose([m.I for m in sp], c, atol=1e-6)
