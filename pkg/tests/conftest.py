import math

import numpy as np
import pytest

from cascade_lab.grid import ControlDomain, GridFunction, build_mesh
from cascade_lab.pde import CouplingTerms, SystemState, TimeMesh
from cascade_lab.spectral import assemble_operator, build_spectrum

SQ2PI = math.sqrt(2.0 / math.pi)


def bump(x, a, b, amp=1.0):
    """C1 bump ``(1 - z^2)^2`` supported on [a, b]."""
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    z = (x - c) / r
    return amp * np.where(np.abs(z) < 1.0, (1.0 - z * z) ** 2, 0.0)


def smooth_bump(x, a, b):
    """C-infinity bump supported on [a, b]."""
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    z = (x - c) / r
    out = np.zeros_like(x)
    m = np.abs(z) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - z[m] ** 2))
    return out


def laplacian(n):
    mesh = build_mesh(n)
    return mesh, assemble_operator(GridFunction.constant(mesh, 1.0), GridFunction.zeros(mesh))


class Desk:
    """The q-bump scenario: p = 0, q = bump on (0.3, 0.6), omega = (1.8, 2.8)."""

    def __init__(self, n=400, K=6, T=1.0, m=2000):
        self.mesh, self.op = laplacian(n)
        x = self.mesh.nodes
        self.p = GridFunction.zeros(self.mesh)
        self.q = GridFunction(self.mesh, bump(x, 0.3, 0.6))
        self.omega = ControlDomain.of((1.8, 2.8))
        self.spectrum = build_spectrum(self.op, K, self.p, self.q, self.omega)
        self.coupling = CouplingTerms(self.p, self.q)
        self.y0 = SystemState(GridFunction(self.mesh, np.sin(x)), GridFunction(self.mesh, np.sin(x)))
        self.time_mesh = TimeMesh(T, m)


@pytest.fixture(scope="session")
def desk():
    return Desk()


# acceptance lines, filled by test_acceptance and printed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
