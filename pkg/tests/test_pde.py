import math

import numpy as np
import pytest

from cascade_lab.errors import ConfigurationError, NumericalError
from cascade_lab.grid import ControlDomain, GridFunction, build_mesh, l2_norm
from cascade_lab.pde import (
    CouplingTerms,
    SystemState,
    TimeMesh,
    duality_residual,
    duality_terms,
    simulate_forward,
    solve_dual,
)
from cascade_lab.spectral import assemble_operator, build_spectrum, eigensolve

from conftest import SQ2PI, bump, laplacian

OMEGA = ControlDomain.of((1.8, 2.8))


def _rel(a: np.ndarray, b: np.ndarray, mesh) -> float:
    return l2_norm(GridFunction(mesh, a - b)) / l2_norm(GridFunction(mesh, b))


def _zero_coupling(mesh):
    return CouplingTerms(GridFunction.zeros(mesh), GridFunction.zeros(mesh))


def test_time_mesh_validation():
    with pytest.raises(ConfigurationError):
        TimeMesh(0.0, 100)
    with pytest.raises(ConfigurationError):
        TimeMesh(1.0, 10)
    assert TimeMesh(2.0, 100).dt == 0.02


def test_state_enforces_dirichlet():
    mesh = build_mesh(16)
    s = SystemState(GridFunction.constant(mesh, 1.0), GridFunction.constant(mesh, 2.0))
    assert s.y1.values[0] == s.y2.values[-1] == 0.0 and s.y1.values[3] == 1.0


def test_pure_heat_decay():
    mesh, op = laplacian(400)
    phi = GridFunction(mesh, SQ2PI * np.sin(mesh.nodes))
    tr = simulate_forward(SystemState(phi, phi), _zero_coupling(mesh), None, op, OMEGA, TimeMesh(1.0, 1000))
    for j in (250, 500, 1000):
        ref = math.exp(-tr.times[j]) * phi.values
        assert _rel(tr.c1[j], ref, mesh) < 1e-4
        assert _rel(tr.c2[j], ref, mesh) < 1e-4


def test_zero_stays_zero():
    mesh, op = laplacian(100)
    x = mesh.nodes
    cp = CouplingTerms(GridFunction(mesh, np.cos(x)), GridFunction(mesh, x))
    tr = simulate_forward(SystemState.zeros(mesh), cp, None, op, OMEGA, TimeMesh(1.0, 100))
    assert np.all(tr.c1 == 0.0) and np.all(tr.c2 == 0.0)


def test_cascade_resonance():
    # y2' + y2 = -y1 in the phi_1 coefficient with y1 = e^{-t}
    mesh, op = laplacian(400)
    phi = GridFunction(mesh, SQ2PI * np.sin(mesh.nodes))
    cp = CouplingTerms(GridFunction.zeros(mesh), GridFunction.constant(mesh, 1.0))
    tr = simulate_forward(SystemState(phi, GridFunction.zeros(mesh)), cp, None, op, OMEGA, TimeMesh(1.0, 1000))
    for j in (300, 1000):
        t = tr.times[j]
        assert _rel(tr.c2[j], -t * math.exp(-t) * phi.values, mesh) < 1e-4


def test_first_component_ignores_coupling():
    mesh, op = laplacian(200)
    x = mesh.nodes
    y0 = SystemState(GridFunction(mesh, np.sin(x) + 0.3 * np.sin(3 * x)), GridFunction(mesh, np.sin(2 * x)))
    tm = TimeMesh(0.5, 200)
    a = simulate_forward(y0, _zero_coupling(mesh), None, op, OMEGA, tm)
    b = simulate_forward(y0, CouplingTerms(GridFunction(mesh, 3 * np.cos(x)), GridFunction(mesh, 1 + x)),
                         None, op, OMEGA, tm)
    np.testing.assert_array_equal(a.c1, b.c1)
    assert np.max(np.abs(a.c2 - b.c2)) > 1e-3


def test_free_decay_monotone():
    mesh, op = laplacian(200)
    x = mesh.nodes
    y0 = SystemState(GridFunction(mesh, x * (math.pi - x)), GridFunction(mesh, np.sin(3 * x)))
    tr = simulate_forward(y0, _zero_coupling(mesh), None, op, OMEGA, TimeMesh(1.0, 200))
    norms = [math.hypot(l2_norm(s.y1), l2_norm(s.y2)) for s in (tr.state(j) for j in range(201))]
    assert np.all(np.diff(norms) < 0)
    cp = CouplingTerms(GridFunction.zeros(mesh), GridFunction(mesh, bump(x, 0.3, 0.6)))
    tr = simulate_forward(y0, cp, None, op, OMEGA, TimeMesh(1.0, 200))
    n1 = [l2_norm(GridFunction(mesh, tr.c1[j])) for j in range(201)]
    assert np.all(np.diff(n1) < 0)


def test_blowup_reported():
    mesh = build_mesh(64)
    op = assemble_operator(GridFunction.constant(mesh, 1.0), GridFunction.constant(mesh, -1e3))
    phi = GridFunction(mesh, np.sin(mesh.nodes))
    with pytest.raises(NumericalError, match="grew"):
        simulate_forward(SystemState(phi, phi), _zero_coupling(mesh), None, op, OMEGA, TimeMesh(1.0, 200))


def test_control_array_shape_checked():
    mesh, op = laplacian(64)
    with pytest.raises(ConfigurationError):
        simulate_forward(SystemState.zeros(mesh), _zero_coupling(mesh), np.zeros((10, 65)), op, OMEGA,
                         TimeMesh(1.0, 64))


@pytest.mark.parametrize("k", [0, 2])
def test_dual_phi_decay(k):
    mesh, op = laplacian(400)
    x = mesh.nodes
    cp = CouplingTerms(GridFunction(mesh, 0.5 * np.cos(x)), GridFunction(mesh, bump(x, 0.3, 0.6)))
    pr = eigensolve(op, k + 1)[k]
    tm = TimeMesh(1.0, 2000)
    du = solve_dual(SystemState(pr.phi, GridFunction.zeros(mesh)), cp, op, tm)
    for j in (0, 1000):
        s = 1.0 - tm.nodes[j]
        assert _rel(du.c1[j], math.exp(-s * pr.lam) * pr.phi.values, mesh) < 1e-4
        assert np.max(np.abs(du.c2[j])) == 0.0


def test_dual_psi_simple(desk):
    for mode in desk.spectrum.modes[:3]:
        du = solve_dual(SystemState(mode.psi, mode.phi), desk.coupling, desk.op, desk.time_mesh)
        for j in (0, 700, 1500):
            s = 1.0 - desk.time_mesh.nodes[j]
            e = math.exp(-s * mode.lam)
            ref1 = e * (mode.psi.values - s * mode.I * mode.phi.values)
            assert _rel(du.c1[j], ref1, desk.mesh) < 1e-3
            assert _rel(du.c2[j], e * mode.phi.values, desk.mesh) < 1e-4


def test_dual_psi_double():
    mesh, op = laplacian(400)
    x = mesh.nodes
    p, q = GridFunction(mesh, 1.4 * x), GridFunction.constant(mesh, 0.7)
    sp = build_spectrum(op, 2, p, q, OMEGA)
    mode = sp[1]
    assert not mode.is_simple
    tm = TimeMesh(1.0, 2000)
    du = solve_dual(SystemState(mode.psi, mode.phi), CouplingTerms(p, q), op, tm)
    e = math.exp(-mode.lam)
    assert _rel(du.c1[0], e * mode.psi.values, mesh) < 1e-4
    assert _rel(du.c2[0], e * mode.phi.values, mesh) < 1e-4


def test_duality_free(desk):
    xi_F = SystemState(desk.spectrum[0].psi, desk.spectrum[1].phi)
    fw = simulate_forward(desk.y0, desk.coupling, None, desk.op, desk.omega, desk.time_mesh)
    du = solve_dual(xi_F, desk.coupling, desk.op, desk.time_mesh)
    lhs, rhs = duality_terms(fw, du, None, desk.omega)
    assert rhs == 0.0 and abs(lhs) < 1e-4
    assert duality_residual(fw, du, None, desk.omega) < 1e-4


def test_duality_arbitrary_control():
    mesh, op = laplacian(200)
    x = mesh.nodes
    cp = CouplingTerms(GridFunction(mesh, 0.4 * np.sin(2 * x)), GridFunction(mesh, 1 + np.cos(x)))
    tm = TimeMesh(0.7, 400)
    rng = np.random.default_rng(3)
    th = tm.nodes[:-1] + 0.5 * tm.dt
    v = 20.0 * np.outer(np.cos(3 * th) + rng.normal(), np.sin(2 * x) + rng.normal() * np.cos(x))
    xi_F = SystemState(GridFunction(mesh, rng.normal(size=201)), GridFunction(mesh, rng.normal(size=201)))
    fw = simulate_forward(SystemState.zeros(mesh), cp, v, op, OMEGA, tm)
    du = solve_dual(xi_F, cp, op, tm)
    lhs, rhs = duality_terms(fw, du, v, OMEGA)
    # y0 = 0, so the left side is (y(T), xi_F)
    h = mesh.h
    assert lhs == pytest.approx(h * float(fw.c1[-1] @ du.c1[-1] + fw.c2[-1] @ du.c2[-1]), rel=1e-14)
    assert abs(lhs) > 1e-3
    assert duality_residual(fw, du, v, OMEGA) < 1e-10


def test_duality_all_zero():
    mesh, op = laplacian(64)
    tm = TimeMesh(1.0, 64)
    fw = simulate_forward(SystemState.zeros(mesh), _zero_coupling(mesh), None, op, OMEGA, tm)
    du = solve_dual(SystemState.zeros(mesh), _zero_coupling(mesh), op, tm)
    assert duality_residual(fw, du, np.zeros((64, 65)), OMEGA) == 0.0
