"""Forward and adjoint simulation of the controlled cascade system.

Time stepping is Crank-Nicolson on the whole block system. Because the
coupling is lower triangular, each step is two tridiagonal solves: the lead
component first, then the coupled one with the coupling applied to the
average of the lead component's old and new values. The adjoint solver runs
the transposed block scheme backwards in time, so the discrete duality
pairing holds to rounding in the nodal inner product ``h * sum``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, NumericalError
from .grid import ControlDomain, GridFunction, Mesh, differentiate
from .spectral import SturmLiouvilleOperator

BLOWUP_FACTOR = 1e8


@dataclass(frozen=True, eq=False)
class SystemState:
    y1: GridFunction
    y2: GridFunction

    def __post_init__(self):
        if self.y1.mesh != self.y2.mesh:
            raise ConfigurationError("state components live on different meshes")
        if abs(self.y1.values[0]) + abs(self.y1.values[-1]) + abs(self.y2.values[0]) + abs(self.y2.values[-1]) > 0:
            # Dirichlet ends are enforced rather than rejected
            v1 = self.y1.values.copy()
            v2 = self.y2.values.copy()
            v1[[0, -1]] = 0.0
            v2[[0, -1]] = 0.0
            object.__setattr__(self, "y1", GridFunction(self.y1.mesh, v1))
            object.__setattr__(self, "y2", GridFunction(self.y2.mesh, v2))

    @property
    def mesh(self) -> Mesh:
        return self.y1.mesh

    @classmethod
    def zeros(cls, mesh: Mesh) -> "SystemState":
        return cls(GridFunction.zeros(mesh), GridFunction.zeros(mesh))

    def stacked(self) -> np.ndarray:
        return np.stack([self.y1.values, self.y2.values])


@dataclass(frozen=True, eq=False)
class CouplingTerms:
    p: GridFunction
    q: GridFunction

    @property
    def dp(self) -> GridFunction:
        return differentiate(self.p)


@dataclass(frozen=True, eq=False)
class TimeMesh:
    T: float
    m_steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigurationError(f"horizon T must be > 0, got {self.T}")
        if int(self.m_steps) != self.m_steps or self.m_steps < 64:
            raise ConfigurationError(f"m_steps must be an integer >= 64, got {self.m_steps}")

    @property
    def dt(self) -> float:
        return self.T / self.m_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.m_steps + 1) * self.dt


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Nodal snapshots; ``c1``/``c2`` have shape ``(m_steps + 1, n_cells + 1)``."""

    times: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    mesh: Mesh
    labels: tuple[str, str] = ("y1", "y2")

    def state(self, j: int) -> SystemState:
        return SystemState(GridFunction(self.mesh, self.c1[j]), GridFunction(self.mesh, self.c2[j]))

    @property
    def initial(self) -> SystemState:
        return self.state(0)

    @property
    def final(self) -> SystemState:
        return self.state(-1)

    def to_csv(self, path, every: int = 1) -> None:
        x = self.mesh.nodes
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", *self.labels])
            for j in range(0, len(self.times), every):
                for i in range(len(x)):
                    w.writerow([f"{self.times[j]:.10g}", f"{x[i]:.10g}",
                                f"{self.c1[j, i]:.12e}", f"{self.c2[j, i]:.12e}"])


def _forward_coupling(coupling: CouplingTerms, mesh: Mesh):
    # interior rows of -q y - p D y, D centered with Dirichlet zeros
    p = coupling.p.values
    q = coupling.q.values
    n = mesh.n_cells
    c = 1.0 / (2.0 * mesh.h)
    csub = p[2:n] * c
    cdia = -q[1:n]
    csup = -p[1:n - 1] * c
    return csub, cdia, csup


def _check_blowup(arrays, reference: float, what: str):
    peak = max(float(np.max(np.abs(a))) for a in arrays)
    if not math.isfinite(peak) or peak > BLOWUP_FACTOR * max(reference, np.finfo(float).tiny):
        raise NumericalError(
            f"{what}: solution norm grew to {peak:.3g} (> {BLOWUP_FACTOR:g} x reference {reference:.3g})"
        )


def _control_source(v, omega: ControlDomain, mesh: Mesh, time_mesh: TimeMesh) -> np.ndarray:
    m = time_mesh.m_steps
    if v is None:
        return np.zeros((m, mesh.n_cells - 1))
    half = v.half_step_values() if hasattr(v, "half_step_values") else np.asarray(v, dtype=float)
    if half.shape != (m, mesh.n_cells + 1):
        raise ConfigurationError(f"control has shape {half.shape}, expected {(m, mesh.n_cells + 1)}")
    return (half * omega.indicator(mesh))[:, 1:-1]


def simulate_forward(y0: SystemState, coupling: CouplingTerms, v, op: SturmLiouvilleOperator,
                     omega: ControlDomain, time_mesh: TimeMesh) -> Trajectory:
    """Integrate the controlled cascade on ``[0, T]``.

    ``v`` is a SynthesizedControl (or an array of half-step samples of shape
    ``(m_steps, n_cells + 1)``), or None for the free evolution.
    """
    mesh = op.mesh
    src = _control_source(v, omega, mesh, time_mesh)
    csub, cdia, csup = _forward_coupling(coupling, mesh)
    lead, follow = kernels.cn_cascade_march(
        op.off, op.diag, op.off, csub, cdia, csup,
        np.ascontiguousarray(y0.y1.values[1:-1]), np.ascontiguousarray(y0.y2.values[1:-1]),
        np.ascontiguousarray(src), time_mesh.dt,
    )
    ref = max(np.max(np.abs(y0.stacked())), time_mesh.dt * float(np.sum(np.max(np.abs(src), axis=1))) if src.size else 0.0)
    _check_blowup((lead, follow), ref, "forward simulation")
    m = time_mesh.m_steps
    y1 = np.zeros((m + 1, mesh.n_cells + 1))
    y2 = np.zeros_like(y1)
    y1[:, 1:-1] = lead
    y2[:, 1:-1] = follow
    return Trajectory(time_mesh.nodes, y1, y2, mesh, ("y1", "y2"))


def solve_dual(xi_F: SystemState, coupling: CouplingTerms, op: SturmLiouvilleOperator,
               time_mesh: TimeMesh) -> Trajectory:
    """Backward adjoint solve from ``xi(T) = xi_F``; snapshots ordered by increasing t."""
    mesh = op.mesh
    csub, cdia, csup = _forward_coupling(coupling, mesh)
    m = time_mesh.m_steps
    # transpose of the coupling block; xi2 leads, xi1 follows
    lead, follow = kernels.cn_cascade_march(
        op.off, op.diag, op.off, csup, cdia, csub,
        np.ascontiguousarray(xi_F.y2.values[1:-1]), np.ascontiguousarray(xi_F.y1.values[1:-1]),
        np.zeros((m, mesh.n_cells - 1)), time_mesh.dt,
    )
    _check_blowup((lead, follow), float(np.max(np.abs(xi_F.stacked()))), "adjoint simulation")
    xi1 = np.zeros((m + 1, mesh.n_cells + 1))
    xi2 = np.zeros_like(xi1)
    xi1[:, 1:-1] = follow[::-1]
    xi2[:, 1:-1] = lead[::-1]
    return Trajectory(time_mesh.nodes, xi1, xi2, mesh, ("xi1", "xi2"))


def nodal_pairing(a1, a2, b1, b2, h: float) -> float:
    return h * float(np.dot(a1, b1) + np.dot(a2, b2))


def duality_terms(forward: Trajectory, dual: Trajectory, v, omega: ControlDomain) -> tuple[float, float]:
    """Both sides of ``(y(T), xi(T)) - (y0, xi(0)) = int_0^T int_omega v xi1``."""
    if forward.c1.shape != dual.c1.shape or forward.mesh != dual.mesh:
        raise ConfigurationError("forward and dual trajectories use different grids")
    mesh = forward.mesh
    h = mesh.h
    lhs = (nodal_pairing(forward.c1[-1], forward.c2[-1], dual.c1[-1], dual.c2[-1], h)
           - nodal_pairing(forward.c1[0], forward.c2[0], dual.c1[0], dual.c2[0], h))
    if v is None:
        return lhs, 0.0
    dt = float(forward.times[1] - forward.times[0])
    half = v.half_step_values() if hasattr(v, "half_step_values") else np.asarray(v, dtype=float)
    src = half * omega.indicator(mesh)
    xi_avg = 0.5 * (dual.c1[:-1] + dual.c1[1:])
    rhs = dt * h * float(np.sum(src * xi_avg))
    return lhs, rhs


def duality_residual(forward: Trajectory, dual: Trajectory, v, omega: ControlDomain) -> float:
    lhs, rhs = duality_terms(forward, dual, v, omega)
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))
