"""Command line entry point: ``cascade <subcommand> --config <path>``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ProblemConfig, parse_config
from .controllability import check_approx_controllability, estimate_min_control_time
from .counterexample import CounterexampleSpec, certify_counterexample, construct_counterexample_p
from .errors import CascadeError
from .grid import ControlDomain, GridFunction, Mesh, build_mesh, l2_norm
from .moments import (
    max_moment_residual,
    pairings,
    synthesize,
    two_phase_control,
    verify_moment_equations,
)
from .pde import CouplingTerms, SystemState, TimeMesh, duality_residual, simulate_forward, solve_dual
from .spectral import Spectrum, SturmLiouvilleOperator, assemble_operator, build_spectrum

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
MAX_SNAPSHOTS = 101


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class Problem:
    cfg: ProblemConfig
    mesh: Mesh
    op: SturmLiouvilleOperator
    p: GridFunction
    q: GridFunction
    omega: ControlDomain
    y0: SystemState
    time_mesh: TimeMesh
    _spectrum: Spectrum | None = None

    @property
    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            self._spectrum = build_spectrum(self.op, self.cfg.K, self.p, self.q, self.omega, self.cfg.tol_I)
        return self._spectrum

    @property
    def coupling(self) -> CouplingTerms:
        return CouplingTerms(self.p, self.q)


def build_problem(cfg: ProblemConfig) -> Problem:
    mesh = build_mesh(cfg.n_cells)
    op = assemble_operator(cfg.gamma.on(mesh, "gamma"), cfg.gamma0.on(mesh, "gamma0"))
    y0 = SystemState(cfg.y0[0].on(mesh, "y0[0]"), cfg.y0[1].on(mesh, "y0[1]"))
    return Problem(cfg, mesh, op, cfg.p.on(mesh, "p"), cfg.q.on(mesh, "q"), cfg.control_domain,
                   y0, TimeMesh(cfg.T, cfg.m_steps))


def _footer(cfg: ProblemConfig, tol_I: float | None = None) -> str:
    ti = cfg.tol_I if tol_I is None else tol_I
    ti = "auto" if ti is None else f"{ti:.3g}"
    return f"# config={cfg.digest()} tol_I={ti} tol_zero={cfg.tol_zero:g} rank_tol={cfg.rank_tol:g}"


def _write_rows(path: Path, header, rows, footer: str, tail=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        if tail is not None:
            w.writerow(tail)
        fh.write(footer + "\n")


def _g(x: float) -> str:
    return f"{x:.12e}"


def cmd_spectrum(pb: Problem, out: Path) -> int:
    sp = pb.spectrum
    rows = [[m.k + 1, _g(m.lam), _g(m.I), m.multiplicity.value.upper(), _g(pb.omega.norm(m.phi) ** 2)]
            for m in sp]
    _write_rows(out / "spectrum.csv", ["k", "lambda", "I_lambda", "multiplicity", "phi_omega_sq"], rows,
                _footer(pb.cfg, sp.tol_I))
    for r in rows:
        print(f"k={r[0]:>2} lambda={float(r[1]):.8f} I={float(r[2]):+.3e} {r[3]}")
    return EXIT_OK


def cmd_check_ac(pb: Problem, out: Path) -> int:
    cfg = pb.cfg
    rep = check_approx_controllability(pb.p, pb.q, pb.spectrum, pb.omega, cfg.K, cfg.tol_zero, cfg.rank_tol)
    rows = [[m.k + 1, int(m.in_lambda_tilde), "" if m.rank is None else m.rank, m.verdict] for m in rep.modes]
    _write_rows(out / "check_ac.csv", ["k", "in_lambda_tilde", "rank", "verdict"], rows,
                _footer(cfg, pb.spectrum.tol_I), ["overall", "", "", rep.verdict])
    if rep.zero_coupling:
        print("note: p = q = 0, the second component is uncontrolled")
    print(rep.verdict)
    return EXIT_OK


def cmd_estimate_t0(pb: Problem, out: Path) -> int:
    rep = estimate_min_control_time(pb.spectrum, pb.cfg.K, pb.cfg.rank_tol)
    rows = [[k + 1, _g(n), _g(t)] for k, (n, t) in enumerate(zip(rep.norms, rep.ratios))]
    _write_rows(out / "estimate_t0.csv", ["k", "N_k", "t_k"], rows, _footer(pb.cfg, pb.spectrum.tol_I),
                ["T0_hat", _g(rep.T0_hat), ""])
    for n in rep.notes:
        print(f"note: {n}")
    if not rep.monotone:
        print("note: t_k not monotone over the window; the estimate is unreliable")
    print(f"T0_hat={rep.T0_hat:.6g} (window k={rep.window[0] + 1}..{rep.window[1] + 1})")
    return EXIT_OK


def _control(pb: Problem):
    syn = pb.cfg.synthesis
    if syn.get("two_phase"):
        t0 = estimate_min_control_time(pb.spectrum, pb.cfg.K, pb.cfg.rank_tol).T0_hat
        return two_phase_control(pb.y0, pb.cfg.T, t0, pb.spectrum, pb.time_mesh, pb.cfg.K,
                                 syn["kind"], syn["settle"])
    return synthesize(pb.y0, pb.spectrum, pb.time_mesh, pb.cfg.K, syn["kind"], settle=syn["settle"])


def _every(pb: Problem) -> int:
    return max(1, pb.cfg.m_steps // (MAX_SNAPSHOTS - 1))


def _emit_control(pb: Problem, out: Path):
    v = _control(pb)
    res = verify_moment_equations(v, pb.spectrum, pb.y0, pb.cfg.T)
    foot = _footer(pb.cfg, pb.spectrum.tol_I)
    v.to_csv(out / "control.csv", every=_every(pb), footer=foot)
    _write_rows(out / "moments.csv", ["k", "basis", "lhs", "rhs", "relative"],
                [[r.k + 1, r.basis, _g(r.lhs), _g(r.rhs), _g(r.relative)] for r in res], foot)
    return v, res


def cmd_synthesize(pb: Problem, out: Path) -> int:
    v, res = _emit_control(pb, out)
    print(f"active window [{v.active_window[0]:.6g}, {v.active_window[1]:.6g}], "
          f"||v|| = {v.l2_norm(pb.omega):.6e}")
    print(f"max moment residual {max_moment_residual(res):.3e}")
    return EXIT_OK


def _state_norm(s: SystemState) -> float:
    return math.hypot(l2_norm(s.y1), l2_norm(s.y2))


def cmd_simulate(pb: Problem, out: Path) -> int:
    tr = simulate_forward(pb.y0, pb.coupling, None, pb.op, pb.omega, pb.time_mesh)
    _write_traj(pb, tr, out)
    n0, nT = _state_norm(pb.y0), _state_norm(tr.final)
    print(f"free evolution: ||y(T)|| = {nT:.6e}, ||y(T)||/||y0|| = {nT / n0 if n0 else 0.0:.6e}")
    return EXIT_OK


def _write_traj(pb: Problem, tr, out: Path):
    path = out / "trajectory.csv"
    tr.to_csv(path, every=_every(pb))
    with open(path, "a") as fh:
        fh.write(_footer(pb.cfg) + "\n")


def cmd_counterexample(pb: Problem, out: Path) -> int:
    cx = pb.cfg.counterexample
    spec = CounterexampleSpec(int(cx["k"]), float(cx["a"]), float(cx["b"]))
    zero = GridFunction.zeros(pb.mesh)
    sp = build_spectrum(pb.op, max(pb.cfg.K, spec.k), zero, zero, spec.omega)
    p, filled = construct_counterexample_p(spec, sp)
    cert = certify_counterexample(p, filled, sp)
    cert.to_csv(out / "certificate.csv", footer=_footer(pb.cfg))
    print(cert.to_text())
    return EXIT_OK


def cmd_full_run(pb: Problem, out: Path) -> int:
    v, res = _emit_control(pb, out)
    tr = simulate_forward(pb.y0, pb.coupling, v, pb.op, pb.omega, pb.time_mesh)
    _write_traj(pb, tr, out)
    sp = pb.spectrum
    m0 = sp[0]
    dual = solve_dual(SystemState(m0.psi, m0.phi), pb.coupling, pb.op, pb.time_mesh)
    dres = duality_residual(tr, dual, v, pb.omega)
    n0, nT = _state_norm(pb.y0), _state_norm(tr.final)
    w = np.full(pb.mesh.n_cells + 1, pb.mesh.h)
    proj = [(pr.a, pr.b) for pr in (pairings(tr.final, m, w) for m in sp)]
    rel_proj = float(np.linalg.norm(proj)) / n0 if n0 else 0.0
    ratio = nT / n0 if n0 else 0.0
    rows = [["final_relative_norm", _g(ratio)], ["projection_relative", _g(rel_proj)],
            ["max_moment_residual", _g(max_moment_residual(res))], ["duality_residual", _g(dres)],
            ["control_l2_norm", _g(v.l2_norm(pb.omega))]]
    _write_rows(out / "summary.csv", ["quantity", "value"], rows, _footer(pb.cfg, sp.tol_I))
    print(f"||y(T)||/||y0|| = {ratio:.6e}  projection = {rel_proj:.3e}  duality = {dres:.3e}")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "check-ac": cmd_check_ac,
    "estimate-t0": cmd_estimate_t0,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "counterexample": cmd_counterexample,
    "full-run": cmd_full_run,
}


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cascade", description="Controllability toolkit for a 1D parabolic cascade system.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON problem file")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--modes", type=int, default=None, help="override K")
    ap.add_argument("--horizon", type=float, default=None, help="override T")
    ap.add_argument("--debug", action="store_true", help="show tracebacks")
    return ap


def _origin(exc: BaseException) -> str:
    for fr in reversed(traceback.extract_tb(exc.__traceback__)):
        p = Path(fr.filename)
        if p.parent.name in ("cascade_lab", "kernels"):
            return p.stem
    return "cli"


def run(command: str, cfg: ProblemConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[command](build_problem(cfg), out)


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.modes is not None or args.horizon is not None:
            cfg = cfg.with_overrides(args.modes, args.horizon)
        return run(args.command, cfg, Path(args.out))
    except CascadeError as exc:
        if args.debug:
            traceback.print_exc()
        print(f"error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
