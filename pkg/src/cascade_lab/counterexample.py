"""An order-one coupling that meets omega yet breaks approximate controllability.

On an interval ``omega = (a, b)`` where ``phi_k`` has no zero, take
``p = 1/phi_k`` there, so ``(p phi_k)' = 0`` on omega. Outside, ``p`` is a
C1 cubic blend ``p0`` (zero value and slope at the domain end) plus a
quadratic ``theta = s (x - a)^2`` whose scale cancels the moment
``int (p phi_k)' phi_k`` over the outer piece. Mode k then has a coupling
source vanishing on omega with zero moments: the Hautus test fails.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .controllability import (
    RANK_0,
    _source_on_omega,
    check_approx_controllability,
    complement_components,
    uc_oracle,
)
from .errors import ConfigurationError, NumericalError
from .grid import ControlDomain, GridFunction, differentiate, l2_norm
from .spectral import Spectrum, coupling_source

PHI_FLOOR = 1e-3
SCALE_FLOOR = 1e-14


@dataclass(frozen=True)
class CounterexampleSpec:
    """Mode index ``k`` (1-based) and ``omega = (a, b)``.

    The derived fields are filled by :func:`construct_counterexample_p`.
    """

    k: int = 1
    a: float = math.pi / 4
    b: float = 3 * math.pi / 4
    s_a: float | None = None
    s_b: float | None = None
    left_cubic: tuple[float, ...] | None = None  # Hermite data (p(a), p'(a))
    right_cubic: tuple[float, ...] | None = None
    beta_hat: tuple[float, float] | None = None  # int (x - c) phi^2 over each outer piece

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if not 0.0 < self.a < self.b < math.pi:
            raise ConfigurationError(f"need 0 < a < b < pi, got a={self.a}, b={self.b}")

    @property
    def omega(self) -> ControlDomain:
        return ControlDomain.of((self.a, self.b))


def _hermite(x, x0, x1, y0, d0, y1, d1):
    """Cubic on [x0, x1] with prescribed end values and slopes."""
    L = x1 - x0
    t = (x - x0) / L
    h00 = 2 * t ** 3 - 3 * t ** 2 + 1
    h10 = t ** 3 - 2 * t ** 2 + t
    h01 = -2 * t ** 3 + 3 * t ** 2
    h11 = t ** 3 - t ** 2
    return h00 * y0 + h10 * L * d0 + h01 * y1 + h11 * L * d1


def _inv_phi_data(phi: GridFunction, i: int, side: int) -> tuple[float, float]:
    """Value and slope of 1/phi at node i, slope one-sided into omega."""
    v = phi.values
    h = phi.mesh.h
    if side > 0:  # omega to the right of i
        d = (-3 * v[i] + 4 * v[i + 1] - v[i + 2]) / (2 * h)
    else:
        d = (3 * v[i] - 4 * v[i - 1] + v[i - 2]) / (2 * h)
    return 1.0 / v[i], -d / v[i] ** 2


def construct_counterexample_p(spec: CounterexampleSpec, spectrum: Spectrum) -> tuple[GridFunction, CounterexampleSpec]:
    """Build p on the spectrum's mesh; returns it with the filled-in spec."""
    mesh = spectrum.mesh
    if spec.k > len(spectrum):
        raise ConfigurationError(f"mode k={spec.k} not in the computed spectrum (K={len(spectrum)})")
    mode = spectrum[spec.k - 1]
    phi = mode.phi
    omega = spec.omega
    (ia, ib), = omega.node_ranges(mesh)
    if ia < 2 or ib > mesh.n_cells - 2:
        raise ConfigurationError("omega must stay away from the domain ends")
    seg = phi.values[ia:ib + 1]
    if np.min(np.abs(seg)) < PHI_FLOOR or np.min(seg) * np.max(seg) <= 0:
        raise ConfigurationError(
            f"phi_{spec.k} has (near) zeros on [a, b] (min |phi| = {np.min(np.abs(seg)):.3g})"
        )
    x = mesh.nodes
    p = np.zeros(mesh.n_cells + 1)
    p[ia:ib + 1] = 1.0 / seg

    ya, da = _inv_phi_data(phi, ia, +1)
    yb, db = _inv_phi_data(phi, ib, -1)
    xa, xb = x[ia], x[ib]
    left = slice(0, ia)
    right = slice(ib + 1, mesh.n_cells + 1)
    p0 = p.copy()
    p0[left] = _hermite(x[left], 0.0, xa, 0.0, 0.0, ya, da)
    p0[right] = _hermite(x[right], xb, math.pi, yb, db, 0.0, 0.0)
    tha = np.zeros_like(p)
    thb = np.zeros_like(p)
    tha[left] = (x[left] - xa) ** 2
    thb[right] = (x[right] - xb) ** 2

    # cancel the outer moments with the same functional the rank test uses
    comps = complement_components(omega, mesh)
    wl = next(C for C in comps if C.i0 == 0).weights(mesh)
    wr = next(C for C in comps if C.i1 == mesh.n_cells).weights(mesh)
    v = phi.values

    def moment(w, f):
        return float(w @ (differentiate(GridFunction(mesh, f * v)).values * v))

    al_a, B_a = moment(wl, p0), moment(wl, tha)
    al_b, B_b = moment(wr, p0), moment(wr, thb)
    if abs(B_a) < SCALE_FLOOR or abs(B_b) < SCALE_FLOOR:
        raise NumericalError("degenerate scaling: theta moment vanishes")
    s_a, s_b = -al_a / B_a, -al_b / B_b
    p_out = p0 + s_a * tha + s_b * thb

    beta_hat = (float(wl @ ((x - xa) * v * v * (x <= xa))),
                float(wr @ ((x - xb) * v * v * (x >= xb))))
    filled = CounterexampleSpec(spec.k, spec.a, spec.b, s_a, s_b, (ya, da), (yb, db), beta_hat)
    return GridFunction(mesh, p_out), filled


@dataclass
class CertificateCheck:
    name: str
    value: float
    threshold: float | None
    passed: bool


@dataclass
class CounterexampleCertificate:
    k: int
    checks: list[CertificateCheck] = field(default_factory=list)
    verdict: str = ""
    mode_verdict: str = ""
    zero_coupling: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return all(c.passed for c in self.checks)

    def rows(self) -> list[list[str]]:
        out = [["check", "value", "threshold", "passed"]]
        for c in self.checks:
            out.append([c.name, f"{c.value:.6e}", "" if c.threshold is None else f"{c.threshold:g}",
                        str(c.passed)])
        return out

    def to_csv(self, path, footer: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerows(self.rows())
            w.writerow(["verdict", self.verdict, "", str(self.certified)])
            if footer:
                fh.write(footer + "\n")

    def to_text(self) -> str:
        lines = [f"counterexample certificate, mode k={self.k}"]
        for c in self.checks:
            thr = "" if c.threshold is None else f" (< {c.threshold:g})"
            lines.append(f"  {c.name}: {c.value:.3e}{thr} {'ok' if c.passed else 'FAIL'}")
        lines.append(f"  mode verdict: {self.mode_verdict}; overall: {self.verdict}")
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


def certify_counterexample(p: GridFunction, spec: CounterexampleSpec, spectrum: Spectrum,
                           omega: ControlDomain | None = None, tol_deriv: float = 1e-6,
                           tol_outer: float = 1e-8, tol_uc: float = 1e-6) -> CounterexampleCertificate:
    """Check that mode k cannot be steered: a report, never an exception."""
    omega = spec.omega if omega is None else omega
    mesh = spectrum.mesh
    mode = spectrum[spec.k - 1]
    phi = mode.phi
    q = GridFunction.zeros(mesh)
    cert = CounterexampleCertificate(spec.k)

    pphi = p * phi
    d_om = _source_on_omega(p, q, phi, omega)
    num = math.sqrt(max(omega.weights(mesh) @ (d_om * d_om), 0.0))
    den = l2_norm(pphi)
    rel = num / den if den > 0 else 0.0
    cert.checks.append(CertificateCheck("deriv_p_phi_on_omega_rel", rel, tol_deriv, rel < tol_deriv))

    F = coupling_source(p, q, phi)
    comps = complement_components(omega, mesh)
    for C in comps:
        if not C.touches_boundary:
            continue
        val = abs(float(C.weights(mesh) @ (F.values * phi.values)))
        name = "outer_integral_left" if C.i0 == 0 else "outer_integral_right"
        cert.checks.append(CertificateCheck(name, val, tol_outer, val < tol_outer))

    rep = check_approx_controllability(p, q, spectrum, omega, K=len(spectrum))
    mv = rep.modes[spec.k - 1]
    cert.mode_verdict = mv.verdict
    cert.verdict = rep.verdict
    cert.zero_coupling = rep.zero_coupling
    cert.checks.append(CertificateCheck("mode_rank", float(mv.rank if mv.rank is not None else -1),
                                        None, mv.verdict == RANK_0))

    ok, res = uc_oracle(spectrum.op, mode.lam, F, omega, tol=tol_uc)
    cert.checks.append(CertificateCheck("uc_oracle_residual", res, tol_uc, ok))
    if rep.zero_coupling:
        cert.notes.append("zero coupling: every mode is trivially obstructed")
    sup_p = np.abs(p.values) > 0
    if not omega.node_mask(mesh)[sup_p].any():
        cert.notes.append("supp p does not meet omega")
    return cert

