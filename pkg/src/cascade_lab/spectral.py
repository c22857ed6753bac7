"""Sturm-Liouville eigenpairs and generalized eigenfunction data.

The scalar operator ``-(gamma u')' + gamma0 u`` with Dirichlet ends is
discretized in flux form with midpoint diffusion values, which gives a
symmetric tridiagonal matrix on the interior nodes. Everything downstream
(``psi``, the second homogeneous solution ``chi``, the moment integrals, the
time stepping) reuses that same matrix, so discrete identities hold exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from . import kernels
from .errors import ConfigurationError, EllipticityError, NumericalError
from .grid import (
    ControlDomain,
    GridFunction,
    Mesh,
    differentiate,
    integrate,
    l2_norm,
    quadrature_weights,
)

PHI_OMEGA_FLOOR = 1e-8
DEGENERACY_GAP = 1e-6


class Multiplicity(enum.Enum):
    SIMPLE = "simple"
    DOUBLE = "double"


@dataclass(frozen=True, eq=False)
class SturmLiouvilleOperator:
    """Discrete ``-(gamma u')' + gamma0 u`` on the interior nodes.

    ``diag`` and ``off`` hold the symmetric tridiagonal matrix (size
    ``n_cells - 1``); ``gamma_mid`` holds the diffusion at cell midpoints.
    """

    mesh: Mesh
    gamma: GridFunction
    gamma0: GridFunction
    gamma_mid: np.ndarray
    diag: np.ndarray
    off: np.ndarray

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Apply the operator to nodal values; Dirichlet ends are ignored."""
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        ui = u[1:-1]
        res = self.diag * ui
        res[1:] += self.off * ui[:-1]
        res[:-1] += self.off * ui[1:]
        # boundary couplings (zero for Dirichlet data)
        res[0] -= self.gamma_mid[0] * u[0] / self.mesh.h ** 2
        res[-1] -= self.gamma_mid[-1] * u[-1] / self.mesh.h ** 2
        out[1:-1] = res
        return out

    def sparse(self, shift: float = 0.0) -> scipy.sparse.csc_matrix:
        return scipy.sparse.diags(
            [self.off, self.diag - shift, self.off], [-1, 0, 1], format="csc"
        )


def assemble_operator(gamma: GridFunction, gamma0: GridFunction) -> SturmLiouvilleOperator:
    mesh = gamma.mesh
    if gamma0.mesh != mesh:
        raise ConfigurationError("gamma and gamma0 must share a mesh")
    if np.min(gamma.values) <= 0.0:
        raise EllipticityError(f"min gamma = {np.min(gamma.values):.3g} must be > 0")
    h2 = mesh.h ** 2
    gm = 0.5 * (gamma.values[:-1] + gamma.values[1:])
    diag = (gm[:-1] + gm[1:]) / h2 + gamma0.values[1:-1]
    off = -gm[1:-1] / h2
    return SturmLiouvilleOperator(mesh, gamma, gamma0, gm, diag, off)


@dataclass(frozen=True, eq=False)
class EigenPair:
    k: int  # 0-based index; mode k has k interior zeros
    lam: float
    phi: GridFunction


def eigensolve(op: SturmLiouvilleOperator, K: int) -> list[EigenPair]:
    """The K smallest eigenpairs, L2-normalized by quadrature, with phi'(0) > 0."""
    mesh = op.mesh
    if K < 1 or K > mesh.n_cells - 1:
        raise ConfigurationError(f"K={K} must lie in [1, n_cells - 1 = {mesh.n_cells - 1}]")
    try:
        lams, vecs = scipy.linalg.eigh_tridiagonal(
            op.diag, op.off, select="i", select_range=(0, K - 1)
        )
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc
    gaps = np.diff(lams)
    if np.any(gaps < DEGENERACY_GAP * np.abs(lams[1:])):
        i = int(np.argmin(gaps / np.abs(lams[1:])))
        raise NumericalError(
            f"near-degenerate discrete eigenvalues at k={i}, {i + 1}: "
            f"{lams[i]:.12g}, {lams[i + 1]:.12g}"
        )
    w = quadrature_weights(mesh)
    pairs = []
    for k in range(K):
        phi = np.zeros(mesh.n_cells + 1)
        phi[1:-1] = vecs[:, k]
        phi /= math.sqrt(w @ (phi * phi))
        if phi[1] < 0:
            phi = -phi
        pairs.append(EigenPair(k, float(lams[k]), GridFunction(mesh, phi)))
    return pairs


def coupling_source(p: GridFunction, q: GridFunction, phi: GridFunction) -> GridFunction:
    """``d/dx(p phi) - q phi``: the coupling right-hand side for one mode."""
    return differentiate(p * phi) - q * phi


def compute_coupling_integral(p: GridFunction, q: GridFunction, pair: EigenPair) -> float:
    """``I = int (q - p'/2) phi^2`` over (0, pi)."""
    dp = differentiate(p)
    return integrate((q - 0.5 * dp) * pair.phi * pair.phi)


def default_tol_I(p: GridFunction, q: GridFunction) -> float:
    return 1e-8 * (q.sup_norm() + differentiate(p).sup_norm() + 1.0)


@dataclass(frozen=True, eq=False)
class PsiSolve:
    psi: GridFunction
    residual: float  # relative L2 residual of (L - lam) psi = rhs
    solvability_defect: float  # multiplier on phi in the bordered solve
    ortho: float  # (phi, psi)_{L2(omega)}


def _bordered_solve(op: SturmLiouvilleOperator, lam: float, phi: np.ndarray,
                    rhs: np.ndarray, wphi: np.ndarray) -> tuple[np.ndarray, float]:
    n = op.mesh.n_cells - 1
    A = op.sparse(lam)
    col = scipy.sparse.csc_matrix(phi[1:-1].reshape(-1, 1))
    row = scipy.sparse.csc_matrix(wphi[1:-1].reshape(1, -1))
    M = scipy.sparse.bmat([[A, col], [row, None]], format="csc")
    b = np.concatenate([rhs[1:-1], [0.0]])
    sol = scipy.sparse.linalg.spsolve(M, b)
    if not np.all(np.isfinite(sol)):
        raise NumericalError("bordered system for psi is singular")
    u = np.zeros(n + 2)
    u[1:-1] = sol[:-1]
    return u, float(sol[-1])


def solve_generalized_eigenfunction(op: SturmLiouvilleOperator, pair: EigenPair,
                                    p: GridFunction, q: GridFunction,
                                    omega: ControlDomain, I: float | None = None) -> PsiSolve:
    """Solve ``(L - lam) psi = (p phi)' - q phi + I phi`` with ``(phi, psi)_omega = 0``."""
    mesh = op.mesh
    phi = pair.phi
    w_om = omega.weights(mesh)
    phi_om = math.sqrt(max(w_om @ (phi.values ** 2), 0.0))
    if phi_om < PHI_OMEGA_FLOOR:
        raise NumericalError(
            f"||phi_{pair.k + 1}||_L2(omega) = {phi_om:.3g}: psi normalization impossible "
            "(discretization too coarse for omega?)"
        )
    if I is None:
        I = compute_coupling_integral(p, q, pair)
    rhs = coupling_source(p, q, phi) + I * phi
    u, c = _bordered_solve(op, pair.lam, phi.values, rhs.values, w_om * phi.values)
    psi = GridFunction(mesh, u)
    res = op.apply(u) - pair.lam * u - rhs.values
    res[[0, -1]] = 0.0
    rhs_norm = l2_norm(rhs)
    rel = l2_norm(GridFunction(mesh, res)) / rhs_norm if rhs_norm > 0 else 0.0
    return PsiSolve(psi, rel, c, float(w_om @ (phi.values * u)))


@dataclass(frozen=True, eq=False)
class SecondSolution:
    chi: GridFunction
    wronskian: np.ndarray  # staggered discrete Wronskian, one value per cell


def second_homogeneous_solution(op: SturmLiouvilleOperator, pair: EigenPair) -> SecondSolution:
    """Second solution of ``(L - lam) u = 0`` marched from x = 0.

    Starts with ``chi'(0) = 0`` and is scaled so that the Wronskian
    ``gamma (phi' chi - phi chi')`` equals 1; it does not satisfy the
    Dirichlet condition at pi.
    """
    mesh = op.mesh
    h = mesh.h
    gm = op.gamma_mid
    shift = h * h * (op.gamma0.values - pair.lam)
    # ghost node u_{-1} = u_1 enforces a zero slope at x = 0
    u1 = 1.0 + shift[0] / (2.0 * gm[0])
    chi = kernels.recurrence_march(gm, shift, 1.0, u1)
    if not np.all(np.isfinite(chi)):
        raise NumericalError(
            f"second solution overflowed at lambda={pair.lam:.6g}; rescale or lower K"
        )
    phi = pair.phi.values
    w = gm * (phi[1:] * chi[:-1] - phi[:-1] * chi[1:]) / h
    chi = chi / w[0]
    w = w / w[0]
    return SecondSolution(GridFunction(mesh, chi), w)


@dataclass(frozen=True, eq=False)
class GeneralizedEigenData:
    pair: EigenPair
    I: float
    psi: GridFunction
    chi: GridFunction
    multiplicity: Multiplicity
    psi_residual: float = 0.0
    solvability_defect: float = 0.0

    @property
    def k(self) -> int:
        return self.pair.k

    @property
    def lam(self) -> float:
        return self.pair.lam

    @property
    def phi(self) -> GridFunction:
        return self.pair.phi

    @property
    def is_simple(self) -> bool:
        return self.multiplicity is Multiplicity.SIMPLE

    @property
    def I_discrete(self) -> float:
        """The coupling integral the discrete Jordan relation actually carries.

        ``phi^T (L - lam) psi = 0`` exactly, so the matrix pairs ``psi`` with
        ``I - solvability_defect`` rather than with the quadrature value.
        """
        return self.I - self.solvability_defect


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigen data for the first K modes of one coupled problem."""

    op: SturmLiouvilleOperator
    p: GridFunction
    q: GridFunction
    omega: ControlDomain
    modes: tuple[GeneralizedEigenData, ...]
    tol_I: float

    @property
    def mesh(self) -> Mesh:
        return self.op.mesh

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([m.lam for m in self.modes])

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, i):
        return self.modes[i]


def build_spectrum(op: SturmLiouvilleOperator, K: int, p: GridFunction, q: GridFunction,
                   omega: ControlDomain, tol_I: float | None = None) -> Spectrum:
    if tol_I is None:
        tol_I = default_tol_I(p, q)
    modes = []
    for pair in eigensolve(op, K):
        I = compute_coupling_integral(p, q, pair)
        ps = solve_generalized_eigenfunction(op, pair, p, q, omega, I=I)
        chi = second_homogeneous_solution(op, pair).chi
        mult = Multiplicity.DOUBLE if abs(I) <= tol_I else Multiplicity.SIMPLE
        modes.append(GeneralizedEigenData(pair, I, ps.psi, chi, mult,
                                          ps.residual, ps.solvability_defect))
    return Spectrum(op, p, q, omega, tuple(modes), tol_I)


def fit_psi_bound(spectrum: Spectrum) -> float:
    """Smallest C with ||psi_k|| <= C (1 + sqrt(lam_k)) over the computed modes."""
    return max(l2_norm(m.psi) / (1.0 + math.sqrt(abs(m.lam))) for m in spectrum)


def min_phi_omega_sq(spectrum: Spectrum) -> float:
    return min(spectrum.omega.norm(m.phi) ** 2 for m in spectrum)
