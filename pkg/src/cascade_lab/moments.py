"""Moment-method null control synthesis.

A control is a finite sum of (time profile) x (spatial shape in omega). The
time profiles form a biorthogonal family to the adjoint flow factors
``e^{-lam s}`` and ``s e^{-lam s}`` (``s = T - t``, time to go); the shapes
are first components of adjoint (generalized) eigenvectors cut to omega.

Two samplings of the time axis are supported:

``continuous``
    profiles at the time nodes, Simpson weights, exact exponentials.
``scheme``
    profiles at half steps, weight ``dt``, and the Crank-Nicolson adjoint
    flow in place of the exponentials; spatial pairings use the same nodal
    weights as the simulator. Moments are then met by the simulated system
    up to rounding, not just up to the discretization error.

In both cases the flow of a generalized eigenvector ``Psi`` picks up
``I * df0/dlam * Phi``, where ``f0`` is the scalar decay factor; that is
``-s I e^{-lam s}`` in the continuous case. Under ``scheme`` that ``I`` is
the discrete value carried by the matrices (``I_discrete``), so the Psi
moments close to rounding as well.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, ConfigurationError, HorizonTooShort, NumericalError
from .grid import ControlDomain, GridFunction, Mesh, quadrature_weights, simpson_weights
from .pde import SystemState, TimeMesh
from .spectral import GeneralizedEigenData, Spectrum, eigensolve

MAX_FAMILY = 40
MIN_SEPARATION = 1e-6
GRAM_COND_MAX = 1e14
PSI_OMEGA_FLOOR = 1e-10
SETTLE_DECAYS = 8.0
SETTLE_MAX_FRACTION = 0.25

CONTINUOUS = "continuous"
SCHEME = "scheme"


@dataclass(frozen=True, eq=False)
class MomentQuadrature:
    """Time sampling, flow factors and spatial pairing weights for one kind."""

    time_mesh: TimeMesh
    kind: str = CONTINUOUS

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, SCHEME):
            raise ConfigurationError(f"unknown quadrature kind {self.kind!r}")

    @property
    def T(self) -> float:
        return self.time_mesh.T

    @property
    def samples(self) -> np.ndarray:
        t = self.time_mesh.nodes
        return t if self.kind == CONTINUOUS else 0.5 * (t[:-1] + t[1:])

    def weights(self, window: tuple[int, int] | None = None) -> np.ndarray:
        """Sample weights, zero outside the node window ``[j0, j1]``."""
        m = self.time_mesh.m_steps
        j0, j1 = (0, m) if window is None else window
        if not 0 <= j0 < j1 <= m:
            raise ConfigurationError(f"time window {window} outside [0, {m}]")
        if self.kind == CONTINUOUS:
            w = np.zeros(m + 1)
            w[j0:j1 + 1] = simpson_weights(j1 - j0, self.time_mesh.dt)
        else:
            w = np.zeros(m)
            w[j0:j1] = self.time_mesh.dt
        return w

    def factors(self, lam: float, duration):
        """Flow factors ``(f0, df0/dlam)`` over a duration (scalar or array)."""
        duration = np.asarray(duration, dtype=float)
        if self.kind == CONTINUOUS:
            f0 = np.exp(-lam * duration)
            return f0, -duration * f0
        dt = self.time_mesh.dt
        n = np.rint(duration / dt)
        den = 1.0 + 0.5 * dt * lam
        rho = (1.0 - 0.5 * dt * lam) / den
        drho = -dt / den ** 2
        f0 = rho ** n
        with np.errstate(divide="ignore", invalid="ignore"):
            f1 = np.where(n > 0, n * rho ** np.maximum(n - 1, 0) * drho, 0.0)
        return f0, f1

    def sampled_flow(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        """Flow factors from T back to each sample."""
        s = self.T - self.time_mesh.nodes
        f0, f1 = self.factors(lam, s)
        if self.kind == SCHEME:
            # the scheme pairs half-step controls with step averages
            f0 = 0.5 * (f0[:-1] + f0[1:])
            f1 = 0.5 * (f1[:-1] + f1[1:])
        return f0, f1

    def omega_weights(self, mesh: Mesh, omega: ControlDomain) -> np.ndarray:
        if self.kind == CONTINUOUS:
            return omega.weights(mesh)
        return omega.indicator(mesh) * mesh.h

    def domain_weights(self, mesh: Mesh) -> np.ndarray:
        if self.kind == CONTINUOUS:
            return quadrature_weights(mesh)
        w = np.full(mesh.n_cells + 1, mesh.h)
        w[[0, -1]] = 0.0
        return w


@dataclass(frozen=True, eq=False)
class BiorthogonalFamily:
    """Samples of ``r_{0,lam}`` and ``r_{1,lam}``.

    ``r0[k]`` pairs to one with the flow factor ``e0`` of ``lambdas[k]`` and
    to zero with every other basis function; ``r1[k]`` likewise with ``e1``
    (``~ s e^{-lam s}``). ``gram_condition`` is the condition number of the
    Gram matrix after symmetric diagonal equilibration.
    """

    lambdas: np.ndarray
    quadrature: MomentQuadrature
    window: tuple[int, int]
    weights: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    gram_condition: float
    residual: float

    def __len__(self):
        return len(self.lambdas)

    @property
    def T(self) -> float:
        return self.quadrature.T

    @property
    def times(self) -> np.ndarray:
        return self.quadrature.samples

    def basis(self) -> np.ndarray:
        return _flow_basis(self.lambdas, self.quadrature)

    def pairing_matrix(self) -> np.ndarray:
        """``P[i, j] = int e_i r_j``, interleaved ``(e0, e1)`` per lambda."""
        return (self.basis() * self.weights) @ _interleave(self.r0, self.r1).T

    def norms(self) -> tuple[np.ndarray, np.ndarray]:
        w = self.weights
        return np.sqrt((self.r0 ** 2) @ w), np.sqrt((self.r1 ** 2) @ w)


def _interleave(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty((2 * a.shape[0], a.shape[1]))
    out[0::2] = a
    out[1::2] = b
    return out


def _flow_basis(lambdas, quad: MomentQuadrature) -> np.ndarray:
    rows = []
    for lam in lambdas:
        f0, f1 = quad.sampled_flow(lam)
        rows += [f0, -f1]
    return np.array(rows)


def build_biorthogonal(lambdas, time_mesh: TimeMesh, quadrature: MomentQuadrature | None = None,
                       window: tuple[int, int] | None = None, refine: int = 2) -> BiorthogonalFamily:
    """Minimal-norm biorthogonal family inside the span of the flow factors.

    The Gram system is never formed: with ``A = sqrt(W) E^T`` (columns
    equilibrated), ``r = W^{-1/2} Q R^{-T}`` from a thin QR of ``A``, then
    ``refine`` steps of ``r <- r (2 I - E W r)``. Profiles vanish outside
    the node window ``[j0, j1]``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ConfigurationError("lambdas must be a non-empty 1D sequence")
    if 2 * lambdas.size > MAX_FAMILY:
        raise ConfigurationError(f"2 x {lambdas.size} exponentials exceed the limit of {MAX_FAMILY}")
    srt = np.sort(lambdas)
    if srt.size > 1 and np.min(np.diff(srt)) < MIN_SEPARATION:
        raise ConfigurationError(f"lambdas must be distinct (separation >= {MIN_SEPARATION:g})")
    quad = MomentQuadrature(time_mesh) if quadrature is None else quadrature
    if quad.time_mesh is not time_mesh and (quad.time_mesh.T != time_mesh.T
                                            or quad.time_mesh.m_steps != time_mesh.m_steps):
        raise ConfigurationError("quadrature and time mesh disagree")
    window = (0, time_mesh.m_steps) if window is None else tuple(window)
    w = quad.weights(window)
    act = w > 0
    E = _flow_basis(lambdas, quad)
    sw = np.sqrt(w[act])
    A = sw[:, None] * E[:, act].T
    d = np.linalg.norm(A, axis=0)
    if np.any(d == 0):
        raise NumericalError("a basis function vanishes under the time quadrature")
    Q, R = np.linalg.qr(A / d)
    sv = np.linalg.svd(R, compute_uv=False)
    cond = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else math.inf
    if not cond <= GRAM_COND_MAX:
        raise ConditioningError(
            f"Gram condition {cond:.3g} > {GRAM_COND_MAX:g}: use fewer modes or a longer horizon"
        )
    n2 = E.shape[0]
    Rs = np.zeros((len(w), n2))
    Rs[act] = (Q @ np.linalg.solve(R, np.eye(n2)).T) / d / sw[:, None]
    eye = np.eye(n2)
    for _ in range(refine):
        Rs = Rs @ (2.0 * eye - (E * w) @ Rs)
    resid = float(np.max(np.abs((E * w) @ Rs - eye)))
    return BiorthogonalFamily(lambdas, quad, window, w, Rs[:, 0::2].T.copy(), Rs[:, 1::2].T.copy(),
                              cond, resid)


def coupling_for(mode: GeneralizedEigenData, quad: MomentQuadrature | None) -> float:
    """``I`` as seen by the flow: the discrete value under the scheme quadrature."""
    if quad is not None and quad.kind == SCHEME:
        return mode.I_discrete
    return mode.I


@dataclass(frozen=True)
class Pairings:
    a: float  # (y, Phi)
    b: float  # (y, Psi)


def pairings(y0: SystemState, mode: GeneralizedEigenData, weights: np.ndarray | None = None) -> Pairings:
    """``(y0, Phi) = (y0_1, phi)`` and ``(y0, Psi) = (y0_1, psi) + (y0_2, phi)``."""
    w = quadrature_weights(mode.phi.mesh) if weights is None else weights
    phi, psi = mode.phi.values, mode.psi.values
    a = float(w @ (y0.y1.values * phi))
    b = float(w @ (y0.y1.values * psi + y0.y2.values * phi))
    return Pairings(a, b)


def free_pairings(P: Pairings, mode: GeneralizedEigenData, t: float,
                  quad: MomentQuadrature | None = None) -> Pairings:
    """Pairings of the uncontrolled state at time t from those at time 0."""
    if quad is None:
        f0, f1 = math.exp(-mode.lam * t), -t * math.exp(-mode.lam * t)
    else:
        f0, f1 = (float(v) for v in quad.factors(mode.lam, t))
    return Pairings(f0 * P.a, f0 * P.b + coupling_for(mode, quad) * f1 * P.a)


@dataclass(frozen=True, eq=False)
class ModeCoefficients:
    """Amplitudes and shapes for one mode.

    Simple: ``alpha r0 f + beta r1 g`` with ``f = g = phi 1_omega``.
    Double: ``r0 (gamma_c h + theta_c h_tilde)``.
    """

    k: int
    lam: float
    simple: bool
    c0: float  # alpha or gamma_c
    c1: float  # beta or theta_c
    shape0: GridFunction
    shape1: GridFunction
    beta_second_term: float = 0.0

    @property
    def alpha(self) -> float:
        self._want(True)
        return self.c0

    @property
    def beta(self) -> float:
        self._want(True)
        return self.c1

    @property
    def gamma_c(self) -> float:
        self._want(False)
        return self.c0

    @property
    def theta_c(self) -> float:
        self._want(False)
        return self.c1

    def _want(self, simple: bool):
        if self.simple != simple:
            raise AttributeError("coefficient not defined for this multiplicity")


@dataclass(frozen=True, eq=False)
class ControlCoefficients:
    modes: tuple[ModeCoefficients, ...]

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([m.lam for m in self.modes])

    def max_abs(self) -> float:
        return max((max(abs(m.c0), abs(m.c1)) for m in self.modes), default=0.0)


def _restrict(values: np.ndarray, w_om: np.ndarray, mesh: Mesh) -> GridFunction:
    return GridFunction(mesh, np.where(w_om > 0, values, 0.0))


def _simple(P: Pairings, mode: GeneralizedEigenData, f0: float, f1: float,
            w_om: np.ndarray, I: float) -> ModeCoefficients:
    if not mode.is_simple:
        raise ConfigurationError(f"mode {mode.k + 1} is double (|I| <= tol_I); use the double formulas")
    mesh = mode.phi.mesh
    phi, psi = mode.phi.values, mode.psi.values
    n2 = float(w_om @ (phi * phi))
    if n2 <= 0.0:
        raise NumericalError(f"phi_{mode.k + 1} vanishes on omega")
    o = float(w_om @ (phi * psi))
    rhs_phi = -f0 * P.a
    rhs_psi = -(f0 * P.b + I * f1 * P.a)
    alpha = rhs_phi / n2
    second = alpha * o / (I * n2)
    beta = -rhs_psi / (I * n2) + second
    f = _restrict(phi, w_om, mesh)
    return ModeCoefficients(mode.k, mode.lam, True, alpha, beta, f, f, second)


def _double(P: Pairings, mode: GeneralizedEigenData, f0: float, f1: float,
            w_om: np.ndarray, I: float) -> ModeCoefficients:
    if mode.is_simple:
        raise ConfigurationError(f"mode {mode.k + 1} is simple; use the simple formulas")
    mesh = mode.phi.mesh
    phi, psi = mode.phi.values, mode.psi.values
    n_phi = float(w_om @ (phi * phi))
    n_psi = float(w_om @ (psi * psi))
    if math.sqrt(max(n_psi, 0.0)) <= PSI_OMEGA_FLOOR:
        raise NumericalError(f"||psi_{mode.k + 1}||_omega = {math.sqrt(max(n_psi, 0.0)):.3g}: degenerate shape")
    o = float(w_om @ (phi * psi))
    h = _restrict(phi / n_phi, w_om, mesh)
    ht = _restrict(psi / n_psi, w_om, mesh)
    rhs = np.array([-f0 * P.a, -(f0 * P.b + I * f1 * P.a)])
    # cross terms vanish when (phi, psi)_omega = 0 under these weights
    M = np.array([[1.0, o / n_psi], [o / n_phi, 1.0]])
    g, th = np.linalg.solve(M, rhs)
    return ModeCoefficients(mode.k, mode.lam, False, float(g), float(th), h, ht)


def _resolve_quad(T: float, omega: ControlDomain, quad: MomentQuadrature | None, mesh: Mesh):
    if quad is None:
        return None, omega.weights(mesh), quadrature_weights(mesh)
    if abs(quad.T - T) > 1e-12 * max(T, 1.0):
        raise ConfigurationError("quadrature horizon differs from T")
    return quad, quad.omega_weights(mesh, omega), quad.domain_weights(mesh)


def _flow_factors(lam: float, duration: float, quad: MomentQuadrature | None) -> tuple[float, float]:
    if quad is None:
        e = math.exp(-lam * duration)
        return e, -duration * e
    f0, f1 = quad.factors(lam, duration)
    return float(f0), float(f1)


def coefficients_simple(y0: SystemState, mode: GeneralizedEigenData, T: float,
                        omega: ControlDomain, quad: MomentQuadrature | None = None) -> ModeCoefficients:
    quad, w_om, w_all = _resolve_quad(T, omega, quad, mode.phi.mesh)
    f0, f1 = _flow_factors(mode.lam, T, quad)
    return _simple(pairings(y0, mode, w_all), mode, f0, f1, w_om, coupling_for(mode, quad))


def coefficients_double(y0: SystemState, mode: GeneralizedEigenData, T: float,
                        omega: ControlDomain, quad: MomentQuadrature | None = None) -> ModeCoefficients:
    quad, w_om, w_all = _resolve_quad(T, omega, quad, mode.phi.mesh)
    f0, f1 = _flow_factors(mode.lam, T, quad)
    return _double(pairings(y0, mode, w_all), mode, f0, f1, w_om, coupling_for(mode, quad))


def control_coefficients(y0: SystemState, spectrum: Spectrum, T: float, K: int | None = None,
                         quad: MomentQuadrature | None = None, t_start: float = 0.0) -> ControlCoefficients:
    """Coefficients for the first K modes, steering from the free state at ``t_start``."""
    K = len(spectrum) if K is None else K
    mesh = spectrum.mesh
    quad, w_om, w_all = _resolve_quad(T, spectrum.omega, quad, mesh)
    out = []
    for mode in spectrum.modes[:K]:
        P = free_pairings(pairings(y0, mode, w_all), mode, t_start, quad)
        f0, f1 = _flow_factors(mode.lam, T - t_start, quad)
        out.append((_simple if mode.is_simple else _double)(P, mode, f0, f1, w_om, coupling_for(mode, quad)))
    return ControlCoefficients(tuple(out))


@dataclass(frozen=True, eq=False)
class SynthesizedControl:
    """``v(t, x) = sum_j profiles[j](t) shapes[j](x)`` at the quadrature samples.

    ``weights`` are the time weights used for every pairing with this control;
    they vanish outside the active window.
    """

    quadrature: MomentQuadrature
    profiles: np.ndarray  # (n_terms, n_samples)
    shapes: np.ndarray  # (n_terms, n_cells + 1)
    weights: np.ndarray
    active_window: tuple[float, float]
    mesh: Mesh

    @property
    def time_mesh(self) -> TimeMesh:
        return self.quadrature.time_mesh

    @property
    def times(self) -> np.ndarray:
        return self.quadrature.samples

    def values(self) -> np.ndarray:
        """Samples of v, shape ``(n_samples, n_cells + 1)``."""
        if self.profiles.shape[0] == 0:
            return np.zeros((len(self.times), self.mesh.n_cells + 1))
        return self.profiles.T @ self.shapes

    def half_step_values(self) -> np.ndarray:
        P = self.profiles
        if self.quadrature.kind == CONTINUOUS:
            P = 0.5 * (P[:, :-1] + P[:, 1:])
        if P.shape[0] == 0:
            return np.zeros((self.time_mesh.m_steps, self.mesh.n_cells + 1))
        return P.T @ self.shapes

    def l2_norm(self, omega: ControlDomain) -> float:
        """``||v||`` in L2((0,T) x omega) under this control's quadrature."""
        wx = self.quadrature.omega_weights(self.mesh, omega)
        G = (self.shapes * wx) @ self.shapes.T
        M = (self.profiles * self.weights) @ self.profiles.T
        return math.sqrt(max(float(np.sum(G * M)), 0.0))

    def to_csv(self, path, every: int = 1, footer: str | None = None) -> None:
        x = self.mesh.nodes
        v = self.values()
        t = self.times
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "v"])
            for j in range(0, len(t), every):
                for i in range(len(x)):
                    w.writerow([f"{t[j]:.10g}", f"{x[i]:.10g}", f"{v[j, i]:.12e}"])
            if footer:
                fh.write(footer + "\n")


def assemble_control(coeffs: ControlCoefficients, biortho: BiorthogonalFamily,
                     time_mesh: TimeMesh | None = None) -> SynthesizedControl:
    lam_c = coeffs.lambdas
    if len(lam_c) != len(biortho) or not np.allclose(lam_c, biortho.lambdas, rtol=1e-12, atol=0):
        raise ConfigurationError("coefficient modes and biorthogonal family modes differ")
    if time_mesh is not None and (time_mesh.T != biortho.T
                                  or time_mesh.m_steps != biortho.quadrature.time_mesh.m_steps):
        raise ConfigurationError("biorthogonal family does not live on this time mesh")
    mesh = coeffs.modes[0].shape0.mesh
    profiles, shapes = [], []
    for i, mc in enumerate(coeffs.modes):
        if mc.simple:
            profiles += [mc.c0 * biortho.r0[i], mc.c1 * biortho.r1[i]]
            shapes += [mc.shape0.values, mc.shape1.values]
        else:
            profiles.append(biortho.r0[i])
            shapes.append(mc.c0 * mc.shape0.values + mc.c1 * mc.shape1.values)
    dt = biortho.quadrature.time_mesh.dt
    j0, j1 = biortho.window
    return SynthesizedControl(biortho.quadrature, np.array(profiles), np.array(shapes),
                              biortho.weights, (j0 * dt, j1 * dt), mesh)


@dataclass(frozen=True)
class MomentResidual:
    k: int
    basis: str  # "Phi" or "Psi"
    lhs: float
    rhs: float

    @property
    def relative(self) -> float:
        return (self.lhs - self.rhs) / max(1.0, abs(self.rhs))


def verify_moment_equations(v: SynthesizedControl | None, spectrum: Spectrum, y0: SystemState,
                            T: float, omega: ControlDomain | None = None, K: int | None = None,
                            quad: MomentQuadrature | None = None) -> list[MomentResidual]:
    """Signed differences of ``int int v xi_1 = -(y0, xi(0))`` for every Phi_k, Psi_k.

    ``xi`` is the adjoint flow of each basis vector in closed form. The
    quadrature is the control's own (or continuous when ``v`` is None).
    """
    omega = spectrum.omega if omega is None else omega
    K = len(spectrum) if K is None else K
    mesh = spectrum.mesh
    if v is not None:
        quad = v.quadrature
    elif quad is None:
        quad = MomentQuadrature(TimeMesh(T, 64))
    if abs(quad.T - T) > 1e-12 * max(T, 1.0):
        raise ConfigurationError("control horizon differs from T")
    w_om = quad.omega_weights(mesh, omega)
    w_all = quad.domain_weights(mesh)
    out = []
    for mode in spectrum.modes[:K]:
        P = pairings(y0, mode, w_all)
        f0, f1 = (float(z) for z in quad.factors(mode.lam, T))
        I = coupling_for(mode, quad)
        rhs_phi = -f0 * P.a
        rhs_psi = -(f0 * P.b + I * f1 * P.a)
        if v is None:
            lhs_phi = lhs_psi = 0.0
        else:
            e0, e1 = quad.sampled_flow(mode.lam)
            sp = (v.shapes * w_om) @ mode.phi.values
            ss = (v.shapes * w_om) @ mode.psi.values
            g_phi = sp @ v.profiles
            g_psi = ss @ v.profiles
            wt = v.weights
            lhs_phi = float((wt * e0) @ g_phi)
            lhs_psi = float((wt * e0) @ g_psi + I * ((wt * e1) @ g_phi))
        out.append(MomentResidual(mode.k, "Phi", lhs_phi, rhs_phi))
        out.append(MomentResidual(mode.k, "Psi", lhs_psi, rhs_psi))
    return out


def max_moment_residual(res: list[MomentResidual]) -> float:
    return max((abs(r.relative) for r in res), default=0.0)


def settle_time(spectrum: Spectrum, K: int, active: float, decays: float = SETTLE_DECAYS) -> float:
    """Idle time before T that lets the first unsteered mode decay by ``e^{-decays}``."""
    if len(spectrum) > K:
        lam_next = spectrum[K].lam
    else:
        lam_next = eigensolve(spectrum.op, K + 1)[-1].lam
    return min(decays / lam_next, SETTLE_MAX_FRACTION * active)


def _even_floor(x: float, dt: float) -> int:
    j = int(math.floor(x / dt + 1e-9))
    return j - (j % 2)


def synthesize(y0: SystemState, spectrum: Spectrum, time_mesh: TimeMesh, K: int | None = None,
               kind: str = SCHEME, t_start: float = 0.0, settle: float | None = None) -> SynthesizedControl:
    """Moment control active on ``[t_start, T - settle]``.

    ``settle=None`` picks :func:`settle_time`; pass 0 for a control active
    up to T. Both ends are snapped to even time nodes.
    """
    K = len(spectrum) if K is None else K
    if K < 1 or K > len(spectrum):
        raise ConfigurationError(f"K={K} outside [1, {len(spectrum)}]")
    dt = time_mesh.dt
    m = time_mesh.m_steps
    j0 = _even_floor(t_start, dt)
    if settle is None:
        settle = settle_time(spectrum, K, time_mesh.T - j0 * dt)
    j1 = m - _even_floor(settle, dt)
    if j1 - j0 < 2:
        raise HorizonTooShort("active control window is empty")
    quad = MomentQuadrature(time_mesh, kind)
    co = control_coefficients(y0, spectrum, time_mesh.T, K, quad, t_start=j0 * dt)
    fam = build_biorthogonal(spectrum.lambdas[:K], time_mesh, quad, window=(j0, j1))
    return assemble_control(co, fam, time_mesh)


def two_phase_control(y0: SystemState, T: float, T0_hat: float, spectrum: Spectrum,
                      time_mesh: TimeMesh | None = None, K: int | None = None,
                      kind: str = SCHEME, settle: float | None = None,
                      m_steps: int = 2000) -> SynthesizedControl:
    """Idle up to ``t_s = min(T0_hat, T/2)``, then steer the free state to zero."""
    if not T > T0_hat:
        raise HorizonTooShort(f"T = {T} must exceed the estimated minimal time {T0_hat}")
    if time_mesh is None:
        time_mesh = TimeMesh(T, m_steps)
    elif abs(time_mesh.T - T) > 1e-12 * T:
        raise ConfigurationError("time mesh horizon differs from T")
    ts = min(max(T0_hat, 0.0), 0.5 * T)
    return synthesize(y0, spectrum, time_mesh, K, kind, t_start=ts, settle=settle)
