"""JSON problem configuration and coefficient function specs."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import ControlDomain, GridFunction, Mesh

DEFAULTS = {
    "n_cells": 800,
    "K": 6,
    "T": 1.0,
    "m_steps": 2000,
    "tol_I": None,  # None: 1e-8 (||q||_inf + ||p'||_inf + 1)
    "tol_zero": 1e-6,
    "rank_tol": 1e-8,
}

KINDS = ("constant", "polynomial", "sine_combo", "bump", "table")


def _num(where: str, v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigurationError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


@dataclass(frozen=True)
class FunctionSpec:
    """Coefficient function on [0, pi].

    kinds: ``constant`` (value), ``polynomial`` (coeffs, ascending powers),
    ``sine_combo`` (terms ``[[k, amplitude], ...]``), ``bump`` (center,
    width = support length, amplitude; profile ``(1 - z^2)^2``, which is C1
    with compact support), ``table`` (path to a CSV of ``x,value`` rows,
    linearly interpolated; needs at least ``n_cells + 1`` rows).
    """

    kind: str
    params: dict = field(default_factory=dict)
    base_dir: str = "."

    @classmethod
    def parse(cls, where: str, raw, base_dir: str = ".") -> "FunctionSpec":
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return cls("constant", {"value": _num(where, raw)}, base_dir)
        if not isinstance(raw, dict) or "kind" not in raw:
            raise ConfigurationError(f"{where}: expected a number or an object with 'kind'")
        kind = raw["kind"]
        if kind not in KINDS:
            raise ConfigurationError(f"{where}.kind: unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
        p = {k: v for k, v in raw.items() if k != "kind"}
        if kind == "constant":
            _num(f"{where}.value", p.get("value"))
        elif kind == "polynomial":
            c = p.get("coeffs")
            if not isinstance(c, list) or not c:
                raise ConfigurationError(f"{where}.coeffs: expected a non-empty list")
            for i, v in enumerate(c):
                _num(f"{where}.coeffs[{i}]", v)
        elif kind == "sine_combo":
            t = p.get("terms")
            if not isinstance(t, list) or not t:
                raise ConfigurationError(f"{where}.terms: expected a non-empty list of [k, amplitude]")
            for i, pair in enumerate(t):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ConfigurationError(f"{where}.terms[{i}]: expected [k, amplitude]")
                _num(f"{where}.terms[{i}][0]", pair[0])
                _num(f"{where}.terms[{i}][1]", pair[1])
        elif kind == "bump":
            for key in ("center", "width"):
                _num(f"{where}.{key}", p.get(key))
            _num(f"{where}.amplitude", p.setdefault("amplitude", 1.0))
            if p["width"] <= 0:
                raise ConfigurationError(f"{where}.width: must be > 0")
        elif kind == "table":
            path = p.get("path")
            if not isinstance(path, str):
                raise ConfigurationError(f"{where}.path: expected a file path")
            full = Path(base_dir) / path
            if not full.is_file():
                raise ConfigurationError(f"{where}.path: file not found: {full}")
        return cls(kind, p, base_dir)

    def evaluate(self, x: np.ndarray, where: str = "function") -> np.ndarray:
        p = self.params
        if self.kind == "constant":
            return np.full_like(x, float(p["value"]))
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, np.asarray(p["coeffs"], dtype=float))
        if self.kind == "sine_combo":
            out = np.zeros_like(x)
            for k, amp in p["terms"]:
                out += amp * np.sin(k * x)
            return out
        if self.kind == "bump":
            z = (x - p["center"]) / (0.5 * p["width"])
            return p["amplitude"] * np.where(np.abs(z) < 1.0, (1.0 - z * z) ** 2, 0.0)
        full = Path(self.base_dir) / p["path"]
        try:
            data = np.loadtxt(full, delimiter=",", ndmin=2, comments="#")
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"{where}.path: cannot read {full}: {exc}") from exc
        if data.shape[1] < 2:
            raise ConfigurationError(f"{where}.path: need two columns x,value in {full}")
        if data.shape[0] < len(x):
            raise ConfigurationError(
                f"{where}.path: {data.shape[0]} rows in {full}, need at least n_cells + 1 = {len(x)}"
            )
        order = np.argsort(data[:, 0])
        return np.interp(x, data[order, 0], data[order, 1])

    def on(self, mesh: Mesh, where: str = "function") -> GridFunction:
        vals = self.evaluate(mesh.nodes, where)
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError(f"{where}: non-finite values on the mesh")
        return GridFunction(mesh, vals)

    def to_json(self):
        return {"kind": self.kind, **self.params}


@dataclass(frozen=True)
class ProblemConfig:
    n_cells: int
    K: int
    T: float
    m_steps: int
    gamma: FunctionSpec
    gamma0: FunctionSpec
    p: FunctionSpec
    q: FunctionSpec
    omega: tuple[tuple[float, float], ...]
    y0: tuple[FunctionSpec, FunctionSpec]
    tol_I: float | None
    tol_zero: float
    rank_tol: float
    synthesis: dict
    counterexample: dict

    def canonical(self) -> dict:
        return {
            "n_cells": self.n_cells, "K": self.K, "T": self.T, "m_steps": self.m_steps,
            "gamma": self.gamma.to_json(), "gamma0": self.gamma0.to_json(),
            "p": self.p.to_json(), "q": self.q.to_json(),
            "omega": [list(iv) for iv in self.omega],
            "y0": [self.y0[0].to_json(), self.y0[1].to_json()],
            "tol_I": self.tol_I, "tol_zero": self.tol_zero, "rank_tol": self.rank_tol,
            "synthesis": self.synthesis, "counterexample": self.counterexample,
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, K: int | None = None, T: float | None = None) -> "ProblemConfig":
        raw = self.canonical()
        if K is not None:
            raw["K"] = K
        if T is not None:
            raw["T"] = T
        return config_from_dict(raw, self.gamma.base_dir)

    @property
    def control_domain(self) -> ControlDomain:
        return ControlDomain.of(*self.omega)


def _int(where: str, v, lo: int) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigurationError(f"{where}: expected an integer, got {v!r}")
    if v < lo:
        raise ConfigurationError(f"{where}: must be >= {lo}, got {v}")
    return int(v)


def _omega(raw) -> tuple[tuple[float, float], ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigurationError("omega: expected a non-empty list of [a, b]")
    out = []
    for i, iv in enumerate(raw):
        if not isinstance(iv, list) or len(iv) != 2:
            raise ConfigurationError(f"omega[{i}]: expected [a, b]")
        a, b = _num(f"omega[{i}][0]", iv[0]), _num(f"omega[{i}][1]", iv[1])
        if not a < b:
            raise ConfigurationError(f"omega[{i}]: a < b required, got [{a}, {b}]")
        if a < 0 or b > math.pi:
            raise ConfigurationError(f"omega[{i}]: interval must lie in [0, pi]")
        out.append((a, b))
    return tuple(out)


def config_from_dict(raw: dict, base_dir: str = ".") -> ProblemConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config: top level must be an object")
    raw = copy.deepcopy(raw)
    known = set(DEFAULTS) | {"gamma", "gamma0", "p", "q", "omega", "y0", "synthesis", "counterexample"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigurationError(f"config: unknown field(s) {', '.join(extra)}")
    if "omega" not in raw:
        raise ConfigurationError("omega: required field missing")
    v = {**DEFAULTS, **raw}
    n = _int("n_cells", v["n_cells"], 8)
    K = _int("K", v["K"], 1)
    if K > n - 1:
        raise ConfigurationError(f"K: must be <= n_cells - 1 = {n - 1}")
    T = _num("T", v["T"])
    if T <= 0:
        raise ConfigurationError("T: must be > 0")
    m = _int("m_steps", v["m_steps"], 64)
    fs = {key: FunctionSpec.parse(key, raw.get(key, dflt), base_dir)
          for key, dflt in (("gamma", 1.0), ("gamma0", 0.0), ("p", 0.0), ("q", 0.0))}
    y0raw = raw.get("y0", [{"kind": "sine_combo", "terms": [[1, 1.0]]}] * 2)
    if not isinstance(y0raw, list) or len(y0raw) != 2:
        raise ConfigurationError("y0: expected [y1_spec, y2_spec]")
    y0 = (FunctionSpec.parse("y0[0]", y0raw[0], base_dir), FunctionSpec.parse("y0[1]", y0raw[1], base_dir))
    tol_I = None if v["tol_I"] is None else _num("tol_I", v["tol_I"])
    for key in ("tol_zero", "rank_tol"):
        if _num(key, v[key]) <= 0:
            raise ConfigurationError(f"{key}: must be > 0")
    syn = {"kind": "scheme", "settle": None, "two_phase": False, **(raw.get("synthesis") or {})}
    if syn["kind"] not in ("scheme", "continuous"):
        raise ConfigurationError("synthesis.kind: expected 'scheme' or 'continuous'")
    if syn["settle"] is not None and _num("synthesis.settle", syn["settle"]) < 0:
        raise ConfigurationError("synthesis.settle: must be >= 0")
    cx = {"k": 1, "a": math.pi / 4, "b": 3 * math.pi / 4, **(raw.get("counterexample") or {})}
    _int("counterexample.k", cx["k"], 1)
    if not 0 < _num("counterexample.a", cx["a"]) < _num("counterexample.b", cx["b"]) < math.pi:
        raise ConfigurationError("counterexample: 0 < a < b < pi required")
    return ProblemConfig(n, K, T, m, fs["gamma"], fs["gamma0"], fs["p"], fs["q"], _omega(raw["omega"]),
                         y0, tol_I, float(v["tol_zero"]), float(v["rank_tol"]), syn, cx)


def parse_config(path) -> ProblemConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config: file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config: malformed JSON in {path}: {exc}") from exc
    return config_from_dict(raw, str(path.parent))
