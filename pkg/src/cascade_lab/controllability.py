"""Approximate controllability test and minimal null-control time estimate.

Both rest on moment vectors of a coupling source ``F`` over the connected
components of the closure of ``(0, pi) \\ omega``: the integral of ``F phi``
on every component, plus the integral of ``F chi`` (second homogeneous
solution) on components that do not touch the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotApproximatelyControllable
from .grid import ControlDomain, GridFunction, Mesh, differentiate, l2_norm
from .spectral import GeneralizedEigenData, Spectrum, SturmLiouvilleOperator, coupling_source

RANK_TOL = 1e-8
TOL_ZERO = 1e-6

NOT_IN_LAMBDA_TILDE = "NOT_IN_LAMBDA_TILDE"
RANK_1 = "RANK_1"
RANK_0 = "RANK_0"
CONTROLLABLE = "CONTROLLABLE"
NOT_CONTROLLABLE = "NOT_CONTROLLABLE"


@dataclass(frozen=True)
class Component:
    """Closed interval ``[a, b]`` of the complement closure, in node indices ``[i0, i1]``."""

    i0: int
    i1: int
    a: float
    b: float
    touches_boundary: bool

    @property
    def diam(self) -> float:
        return self.b - self.a

    def weights(self, mesh: Mesh) -> np.ndarray:
        # plain nodal sum over the closed component: it obeys the discrete
        # Green identity exactly, so moments of (L - lam) u with u = 0 on
        # omega vanish to rounding (first order as a quadrature)
        w = np.zeros(mesh.n_cells + 1)
        w[self.i0:self.i1 + 1] = mesh.h
        return w


@dataclass(frozen=True)
class ComponentSet:
    components: tuple[Component, ...]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    @property
    def interior(self) -> tuple[Component, ...]:
        return tuple(c for c in self.components if not c.touches_boundary)


def complement_components(omega: ControlDomain, mesh: Mesh) -> ComponentSet:
    n = mesh.n_cells
    comps = []
    start = 0
    for i0, i1 in omega.node_ranges(mesh):
        if i0 > start:
            comps.append((start, i0))
        start = i1
    if start < n:
        comps.append((start, n))
    return ComponentSet(tuple(
        Component(j0, j1, j0 * mesh.h, j1 * mesh.h, j0 == 0 or j1 == n) for j0, j1 in comps
    ))


def moment_vector(f: GridFunction, C: Component, phi: GridFunction, chi: GridFunction) -> np.ndarray:
    w = C.weights(f.mesh)
    first = float(w @ (f.values * phi.values))
    second = 0.0 if C.touches_boundary else float(w @ (f.values * chi.values))
    return np.array([first, second])


@dataclass(frozen=True)
class MomentFamily:
    vectors: np.ndarray  # (n_components, 2)
    rank: int
    N1: float
    N2: float

    @property
    def N(self) -> float:
        return max(self.N1, self.N2)


def moment_family(F: GridFunction, mode: GeneralizedEigenData, comps: ComponentSet,
                  rank_tol: float = RANK_TOL) -> MomentFamily:
    vecs = np.array([moment_vector(F, C, mode.phi, mode.chi) for C in comps]).reshape(-1, 2)
    fn = l2_norm(F)
    rank = 0
    for C, v in zip(comps, vecs):
        if np.any(np.abs(v) > rank_tol * fn * C.diam):
            rank = 1
    N1 = float(np.max(np.abs(vecs[:, 0]))) if len(vecs) else 0.0
    inner_rows = [v[1] for C, v in zip(comps, vecs) if not C.touches_boundary]
    N2 = float(np.max(np.abs(inner_rows))) if inner_rows else 0.0
    return MomentFamily(vecs, rank, N1, N2)


def component_norms(k: int, F: GridFunction, omega: ControlDomain, spectrum: Spectrum) -> MomentFamily:
    """Moment norms N_{k,1}, N_{k,2} and N_k of F for mode ``k`` (0-based)."""
    return moment_family(F, spectrum[k], complement_components(omega, F.mesh))


def _source_on_omega(p: GridFunction, q: GridFunction, phi: GridFunction,
                     omega: ControlDomain) -> np.ndarray:
    # the derivative only reads nodes inside each piece of omega
    mesh = phi.mesh
    out = np.zeros(mesh.n_cells + 1)
    pphi = p * phi
    for i0, i1 in omega.node_ranges(mesh):
        d = differentiate(pphi, (i0 * mesh.h, i1 * mesh.h)).values
        out[i0:i1 + 1] = d[i0:i1 + 1] - (q.values * phi.values)[i0:i1 + 1]
    return out


def lambda_tilde_test(p: GridFunction, q: GridFunction, mode, omega: ControlDomain,
                      tol_zero: float = TOL_ZERO) -> bool:
    """True when ``-q phi + (p phi)'`` vanishes on omega (relative to its full norm)."""
    phi = mode.phi
    mesh = phi.mesh
    F_om = _source_on_omega(p, q, phi, omega)
    num = math.sqrt(max(omega.weights(mesh) @ (F_om * F_om), 0.0))
    den = max(l2_norm(coupling_source(p, q, phi)), np.finfo(float).tiny)
    return num <= tol_zero * den


@dataclass(frozen=True)
class ModeVerdict:
    k: int
    lam: float
    in_lambda_tilde: bool
    rank: int | None
    verdict: str
    moments: np.ndarray | None = None


@dataclass(frozen=True)
class ACReport:
    modes: tuple[ModeVerdict, ...]
    K: int
    zero_coupling: bool

    @property
    def controllable(self) -> bool:
        return all(m.verdict != RANK_0 for m in self.modes)

    @property
    def verdict(self) -> str:
        return f"{CONTROLLABLE if self.controllable else NOT_CONTROLLABLE}(K={self.K})"

    @property
    def lambda_tilde(self) -> list[int]:
        return [m.k for m in self.modes if m.in_lambda_tilde]


def check_approx_controllability(p: GridFunction, q: GridFunction, spectrum: Spectrum,
                                 omega: ControlDomain, K: int | None = None,
                                 tol_zero: float = TOL_ZERO,
                                 rank_tol: float = RANK_TOL) -> ACReport:
    """Rank test on the modes whose coupling source vanishes on omega.

    The verdict covers the first K modes only.
    """
    K = len(spectrum) if K is None else K
    comps = complement_components(omega, spectrum.mesh)
    out = []
    for mode in spectrum.modes[:K]:
        if not lambda_tilde_test(p, q, mode, omega, tol_zero):
            out.append(ModeVerdict(mode.k, mode.lam, False, None, NOT_IN_LAMBDA_TILDE))
            continue
        fam = moment_family(coupling_source(p, q, mode.phi), mode, comps, rank_tol)
        out.append(ModeVerdict(mode.k, mode.lam, True, fam.rank,
                               RANK_1 if fam.rank else RANK_0, fam.vectors))
    zero = p.sup_norm() == 0.0 and q.sup_norm() == 0.0
    return ACReport(tuple(out), K, zero)


def uc_oracle(op: SturmLiouvilleOperator, lam: float, F: GridFunction, omega: ControlDomain,
              tol: float = 1e-6) -> tuple[bool, float]:
    """Least-squares test for a solution of ``(L - lam) u = F`` vanishing on omega.

    Returns ``(solvable, relative_residual)``. Independent of the moment
    machinery; meant as a cross-check.
    """
    mesh = op.mesh
    n = mesh.n_cells - 1
    A = op.sparse(lam).toarray()
    free = ~omega.node_mask(mesh)[1:-1]
    b = F.values[1:-1]
    bn = np.linalg.norm(b)
    if bn == 0.0:
        return True, 0.0
    cols = A[:, free]
    # column scaling keeps lstsq well-posed
    s = np.linalg.norm(cols, axis=0)
    s[s == 0] = 1.0
    u, *_ = np.linalg.lstsq(cols / s, b, rcond=None)
    r = np.linalg.norm(cols @ (u / s) - b) / bn
    return bool(r < tol), float(r)


def uc_criterion(F: GridFunction, mode: GeneralizedEigenData, omega: ControlDomain,
                 tol: float = 1e-6) -> bool:
    """``F = 0`` on omega and every moment vector vanishes, both relative to ``||F||``."""
    mesh = F.mesh
    fn = l2_norm(F)
    if fn == 0.0:
        return True
    if omega.norm(F) > tol * fn:
        return False
    comps = complement_components(omega, mesh)
    return moment_family(F, mode, comps, rank_tol=tol).rank == 0


def support_mask(f: GridFunction, rel: float = 1e-12) -> np.ndarray:
    scale = f.sup_norm()
    return np.abs(f.values) > rel * scale if scale > 0 else np.zeros(len(f), dtype=bool)


def time_source(spectrum: Spectrum, mode: GeneralizedEigenData) -> GridFunction:
    """``I phi + (p phi)' - q phi`` for one mode."""
    return mode.I * mode.phi + coupling_source(spectrum.p, spectrum.q, mode.phi)


@dataclass(frozen=True)
class T0Report:
    norms: np.ndarray
    lambdas: np.ndarray
    ratios: np.ndarray
    T0_hat: float
    window: tuple[int, int]  # 0-based inclusive mode range used for the max
    monotone: bool
    hypothesis_ok: bool = True
    notes: list[str] = field(default_factory=list)


def min_time_from_norms(norms, lambdas, zero_tol=0.0) -> T0Report:
    """Finite-window surrogate of ``limsup -ln N_k / lam_k``: max over the last half."""
    norms = np.asarray(norms, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    tol = np.broadcast_to(np.asarray(zero_tol, dtype=float), norms.shape)
    bad = np.flatnonzero(norms <= tol)
    if bad.size:
        raise NotApproximatelyControllable(
            f"moment norm N_k vanishes for k = {[int(i) + 1 for i in bad]}; "
            "minimal control time undefined"
        )
    ratios = -np.log(norms) / lambdas
    K = len(norms)
    lo = (K - 1) // 2
    tail = ratios[lo:]
    d = np.diff(tail)
    monotone = bool(np.all(d <= 0) or np.all(d >= 0))
    return T0Report(norms, lambdas, ratios, float(np.max(tail)) + 0.0, (lo, K - 1), monotone)


def estimate_min_control_time(spectrum: Spectrum, K: int | None = None,
                              rank_tol: float = RANK_TOL) -> T0Report:
    K = len(spectrum) if K is None else K
    mesh = spectrum.mesh
    omega = spectrum.omega
    comps = complement_components(omega, mesh)
    max_diam = max((C.diam for C in comps), default=0.0)
    norms, tols = [], []
    for mode in spectrum.modes[:K]:
        F = time_source(spectrum, mode)
        norms.append(moment_family(F, mode, comps, rank_tol).N)
        tols.append(rank_tol * l2_norm(F) * max_diam)
    rep = min_time_from_norms(norms, spectrum.lambdas[:K], np.array(tols))
    supp = support_mask(spectrum.p) | support_mask(spectrum.q)
    ok = not omega.covers(supp, mesh)
    notes = [] if ok else ["(supp p U supp q) meets omega: minimal-time formula not guaranteed"]
    return T0Report(rep.norms, rep.lambdas, rep.ratios, rep.T0_hat, rep.window,
                    rep.monotone, ok, notes)
