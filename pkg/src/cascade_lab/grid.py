"""Uniform mesh on [0, pi], nodal grid functions, quadrature and differences.

All integrals in the package go through :func:`quadrature_weights`, so that
inner products over sub-intervals (the control set, the components of its
complement) are linear functionals with explicit weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

MIN_CELLS = 8
_EDGE_SLACK = 1e-12


@dataclass(frozen=True)
class Mesh:
    """Uniform partition of [0, pi] into ``n_cells`` cells."""

    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < MIN_CELLS:
            raise ConfigurationError(f"n_cells must be an integer >= {MIN_CELLS}, got {self.n_cells}")

    @property
    def h(self) -> float:
        return math.pi / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.h

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    def snap(self, x: float) -> int:
        """Index of the node nearest to ``x``."""
        if x < -_EDGE_SLACK or x > math.pi + _EDGE_SLACK:
            raise DomainError(f"point {x} outside [0, pi]")
        return int(min(max(round(x / self.h), 0), self.n_cells))


def build_mesh(n_cells: int) -> Mesh:
    return Mesh(n_cells)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real nodal samples on a mesh."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.mesh.n_cells + 1,):
            raise ConfigurationError(
                f"expected {self.mesh.n_cells + 1} values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("grid function has non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, mesh: Mesh, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(mesh, np.broadcast_to(np.asarray(fn(mesh.nodes), dtype=float), (mesh.n_cells + 1,)))

    @classmethod
    def constant(cls, mesh: Mesh, c: float) -> "GridFunction":
        return cls(mesh, np.full(mesh.n_cells + 1, float(c)))

    @classmethod
    def zeros(cls, mesh: Mesh) -> "GridFunction":
        return cls.constant(mesh, 0.0)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.mesh != self.mesh:
                raise ConfigurationError("grid functions live on different meshes")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.mesh, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.mesh, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.mesh, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.mesh, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.mesh, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.mesh, -self.values)

    def __len__(self):
        return len(self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class Interval:
    a: float
    b: float
    closed_flags: tuple[bool, bool] = (True, True)

    def __post_init__(self):
        if not (self.a < self.b):
            raise ConfigurationError(f"a < b required, got [{self.a}, {self.b}]")
        if self.a < -_EDGE_SLACK or self.b > math.pi + _EDGE_SLACK:
            raise DomainError(f"interval [{self.a}, {self.b}] outside [0, pi]")

    @property
    def length(self) -> float:
        return self.b - self.a


def node_range(mesh: Mesh, over: Interval | tuple[float, float] | None) -> tuple[int, int]:
    """Snapped node indices ``(i0, i1)`` of an interval (inclusive)."""
    if over is None:
        return 0, mesh.n_cells
    a, b = (over.a, over.b) if isinstance(over, Interval) else over
    if a < -_EDGE_SLACK or b > math.pi + _EDGE_SLACK:
        raise DomainError(f"interval [{a}, {b}] outside [0, pi]")
    return mesh.snap(a), mesh.snap(b)


def simpson_weights(n_intervals: int, step: float) -> np.ndarray:
    """Composite Simpson weights on ``n_intervals + 1`` equispaced points.

    An odd interval count gets a trapezoid on the last cell.
    """
    w = np.zeros(n_intervals + 1)
    if n_intervals <= 0:
        return w
    even = n_intervals - (n_intervals % 2)
    if even:
        w[0:even + 1:2] += 2.0 * step / 3.0
        w[1:even:2] += 4.0 * step / 3.0
        w[0] -= step / 3.0
        w[even] -= step / 3.0
    if n_intervals % 2:
        w[-2] += 0.5 * step
        w[-1] += 0.5 * step
    return w


def _range_weights(mesh: Mesh, i0: int, i1: int) -> np.ndarray:
    w = np.zeros(mesh.n_cells + 1)
    if i1 > i0:
        w[i0:i1 + 1] = simpson_weights(i1 - i0, mesh.h)
    return w


def quadrature_weights(mesh: Mesh, over: Interval | tuple[float, float] | None = None) -> np.ndarray:
    """Composite Simpson weights on the snapped node range of ``over``.

    An odd cell count gets a trapezoid on its last cell.
    """
    return _range_weights(mesh, *node_range(mesh, over))


def integrate(f: GridFunction | np.ndarray, over: Interval | tuple[float, float] | None = None,
              mesh: Mesh | None = None) -> float:
    if isinstance(f, GridFunction):
        mesh, vals = f.mesh, f.values
    else:
        vals = np.asarray(f, dtype=float)
        if mesh is None:
            raise ConfigurationError("a mesh is required to integrate a bare array")
    return float(quadrature_weights(mesh, over) @ vals)


def inner(f: GridFunction, g: GridFunction, over=None) -> float:
    return integrate(f * g, over)


def l2_norm(f: GridFunction, over=None) -> float:
    return math.sqrt(max(integrate(f * f, over), 0.0))


def _diff_values(vals: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(vals)
    if len(vals) < 3:
        out[:] = (vals[-1] - vals[0]) / (h * max(len(vals) - 1, 1))
        return out
    out[1:-1] = (vals[2:] - vals[:-2]) / (2.0 * h)
    out[0] = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h)
    out[-1] = (3.0 * vals[-1] - 4.0 * vals[-2] + vals[-3]) / (2.0 * h)
    return out


def differentiate(f: GridFunction, over: Interval | tuple[float, float] | None = None) -> GridFunction:
    """Second-order finite differences.

    Centered at interior nodes, one-sided second order at the ends. With
    ``over`` the stencil only reads nodes of that interval (one-sided at its
    ends) and the result is zero elsewhere.
    """
    mesh = f.mesh
    if over is None:
        return GridFunction(mesh, _diff_values(f.values, mesh.h))
    i0, i1 = node_range(mesh, over)
    out = np.zeros(mesh.n_cells + 1)
    if i1 > i0:
        out[i0:i1 + 1] = _diff_values(f.values[i0:i1 + 1], mesh.h)
    return GridFunction(mesh, out)


@dataclass(frozen=True)
class ControlDomain:
    """The control set as a finite union of open intervals inside (0, pi).

    Overlapping or touching pieces are merged on construction.
    """

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        raw = [tuple(map(float, iv)) for iv in self.intervals]
        if not raw:
            raise ConfigurationError("control domain must contain at least one interval")
        for a, b in raw:
            if not a < b:
                raise ConfigurationError(f"a < b required in control interval [{a}, {b}]")
            if a < -_EDGE_SLACK or b > math.pi + _EDGE_SLACK:
                raise DomainError(f"control interval [{a}, {b}] outside [0, pi]")
        raw.sort()
        merged = [list(raw[0])]
        for a, b in raw[1:]:
            if a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        object.__setattr__(self, "intervals", tuple((a, b) for a, b in merged))

    @classmethod
    def of(cls, *intervals: Sequence[float]) -> "ControlDomain":
        return cls(tuple(tuple(iv) for iv in intervals))

    @property
    def measure(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def node_ranges(self, mesh: Mesh) -> list[tuple[int, int]]:
        out = []
        for a, b in self.intervals:
            i0, i1 = mesh.snap(a), mesh.snap(b)
            if i1 <= i0:
                raise ConfigurationError(
                    f"control interval ({a}, {b}) collapses on a mesh with h={mesh.h:.4g}"
                )
            if out and i0 <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], i1))
            else:
                out.append((i0, i1))
        return out

    def snapping_distance(self, mesh: Mesh) -> float:
        return max(
            max(abs(a - mesh.snap(a) * mesh.h), abs(b - mesh.snap(b) * mesh.h))
            for a, b in self.intervals
        )

    def weights(self, mesh: Mesh) -> np.ndarray:
        """Quadrature weights of the L2(omega) inner product."""
        w = np.zeros(mesh.n_cells + 1)
        for i0, i1 in self.node_ranges(mesh):
            w += _range_weights(mesh, i0, i1)
        return w

    def node_mask(self, mesh: Mesh) -> np.ndarray:
        """Boolean mask of nodes in the (snapped) closure of omega."""
        m = np.zeros(mesh.n_cells + 1, dtype=bool)
        for i0, i1 in self.node_ranges(mesh):
            m[i0:i1 + 1] = True
        return m

    def indicator(self, mesh: Mesh) -> np.ndarray:
        """Nodal indicator of omega, 1/2 at endpoints inside (0, pi) (trapezoid-consistent)."""
        ind = np.zeros(mesh.n_cells + 1)
        for i0, i1 in self.node_ranges(mesh):
            ind[i0:i1 + 1] = 1.0
            if i0 > 0:
                ind[i0] = 0.5
            if i1 < mesh.n_cells:
                ind[i1] = 0.5
        return ind

    def restrict(self, f: GridFunction) -> GridFunction:
        return GridFunction(f.mesh, np.where(self.node_mask(f.mesh), f.values, 0.0))

    def inner(self, f: GridFunction, g: GridFunction) -> float:
        return float(self.weights(f.mesh) @ (f.values * g.values))

    def norm(self, f: GridFunction) -> float:
        return math.sqrt(max(self.inner(f, f), 0.0))

    def covers(self, support_mask: np.ndarray, mesh: Mesh) -> bool:
        """True if some node of the open set omega lies in ``support_mask``."""
        interior = np.zeros(mesh.n_cells + 1, dtype=bool)
        for i0, i1 in self.node_ranges(mesh):
            interior[i0 + 1:i1] = True
        return bool(np.any(interior & support_mask))


def as_grid_function(mesh: Mesh, f) -> GridFunction:
    """Coerce a constant, callable, array or GridFunction onto ``mesh``."""
    if isinstance(f, GridFunction):
        if f.mesh != mesh:
            raise ConfigurationError("grid function lives on a different mesh")
        return f
    if callable(f):
        return GridFunction.from_callable(mesh, f)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 0:
        return GridFunction.constant(mesh, float(arr))
    return GridFunction(mesh, arr)


def l2_norm_values(mesh: Mesh, values: np.ndarray) -> float:
    return math.sqrt(max(float(quadrature_weights(mesh) @ (values * values)), 0.0))


__all__ = [
    "ControlDomain",
    "GridFunction",
    "Interval",
    "Mesh",
    "as_grid_function",
    "build_mesh",
    "differentiate",
    "inner",
    "integrate",
    "l2_norm",
    "l2_norm_values",
    "node_range",
    "quadrature_weights",
    "simpson_weights",
]
