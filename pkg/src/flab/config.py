"""Plain ``block.key = value`` experiment configs.

Lines are ``key = value``; ``#`` starts a comment. Lists are comma separated,
time windows are written ``a:b``. Example::

    mesh.extents = 8
    mesh.origins = -4
    mesh.n_cells = 512
    nl.kind = pure_power
    nl.m = 2
    datum.kind = zkb
    datum.t = 0.01
    solver.t_end = 0.5
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .mesh import BoxMesh, make_mesh
from .nonlinearity import Nonlinearity, build_two_power, pure_power
from .solver import SolverConfig

DATUM_KINDS = (
    "constant",
    "cosine-perturbation",
    "delta-like",
    "zkb",
    "glued",
    "odd-bump",
    "custom-expression",
)
NL_KINDS = ("pure_power", "two_power")
MANDATORY = ("mesh.extents", "mesh.n_cells", "nl.kind", "datum.kind", "solver.t_end")


class ConfigError(ValueError):
    pass


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _window(s):
    a, b = s.split(":")
    a, b = float(a), float(b)
    if not 0 <= a < b:
        raise ValueError(f"bad window {s}")
    return (a, b)


SCHEMA = {
    "preset": str,
    "seed": int,
    "mesh.dim": int,
    "mesh.extents": _floats,
    "mesh.origins": _floats,
    "mesh.n_cells": _ints,
    "nl.kind": str,
    "nl.m": float,
    "nl.m1": float,
    "nl.m2": float,
    "nl.a": float,
    "nl.b": float,
    "nl.scale": float,
    "datum.kind": str,
    "datum.value": float,
    "datum.amplitude": float,
    "datum.mode": int,
    "datum.mass": float,
    "datum.width": float,
    "datum.center": _floats,
    "datum.shape": str,
    "datum.m": float,
    "datum.t": float,
    "datum.tau": float,
    "datum.ell_mass": float,
    "datum.ell_peak": float,
    "datum.expr": str,
    "solver.t_end": float,
    "solver.dt0": float,
    "solver.dt_growth": float,
    "solver.dt_max": float,
    "solver.newton_tol": float,
    "solver.newton_max_iter": int,
    "solver.linear_tol": float,
    "solver.records": int,
    "solver.record_times": _floats,
    "analysis.q0": float,
    "analysis.p_set": _floats,
    "analysis.early_window": _window,
    "analysis.late_window": _window,
    "analysis.seeds": int,
    "analysis.late_t_end": float,
    "output.series": str,
    "output.verdict": str,
}


@dataclass(frozen=True)
class NlBlock:
    kind: str = "pure_power"
    m: Optional[float] = None
    m1: Optional[float] = None
    m2: Optional[float] = None
    a: float = 0.5
    b: float = 2.0
    scale: float = 1.0

    @property
    def small_exponent(self) -> float:
        return self.m if self.kind == "pure_power" else self.m1

    @property
    def large_exponent(self) -> float:
        return self.m if self.kind == "pure_power" else self.m2

    def build(self) -> Nonlinearity:
        if self.kind == "pure_power":
            return pure_power(self.m, self.scale)
        return build_two_power(self.m1, self.m2, self.a, self.b, self.scale)


@dataclass(frozen=True)
class DatumBlock:
    kind: str
    value: float = 1.0
    amplitude: float = 0.1
    mode: int = 1
    mass: float = 1.0
    width: Optional[float] = None
    center: Optional[tuple] = None
    shape: str = "cap"
    m: Optional[float] = None
    t: float = 0.01
    tau: float = 1e-3
    ell_mass: float = 0.5
    ell_peak: float = 0.25
    expr: Optional[str] = None


@dataclass(frozen=True)
class AnalysisBlock:
    q0: float = 1.0
    p_set: tuple = (1.0, 2.0, 4.0)
    early_window: Optional[tuple] = None
    late_window: Optional[tuple] = None
    seeds: int = 20
    late_t_end: float = 5000.0


@dataclass(frozen=True)
class OutputBlock:
    series: Optional[str] = None
    verdict: Optional[str] = None


@dataclass(frozen=True)
class ExperimentConfig:
    mesh: BoxMesh
    nl: NlBlock
    datum: DatumBlock
    solver: SolverConfig
    analysis: AnalysisBlock = field(default_factory=AnalysisBlock)
    output: OutputBlock = field(default_factory=OutputBlock)
    preset: Optional[str] = None
    seed: int = 0

    def build_nl(self) -> Nonlinearity:
        return self.nl.build()

    def echo(self) -> str:
        """Every key with its effective value, in ``key = value`` form."""
        m = self.mesh
        out = [
            ("preset", self.preset),
            ("seed", self.seed),
            ("mesh.dim", m.dim),
            ("mesh.extents", m.extents),
            ("mesh.origins", m.origins),
            ("mesh.n_cells", m.n_cells),
        ]
        for block, name in ((self.nl, "nl"), (self.datum, "datum"), (self.analysis, "analysis"), (self.output, "output")):
            out += [(f"{name}.{f.name}", getattr(block, f.name)) for f in fields(block)]
        s = self.solver
        out += [
            ("solver.t_end", s.t_end),
            ("solver.dt0", s.dt0),
            ("solver.dt_growth", s.dt_growth),
            ("solver.dt_max", s.dt_max),
            ("solver.newton_tol", s.newton_tol),
            ("solver.newton_max_iter", s.newton_max_iter),
            ("solver.linear_tol", s.linear_tol),
        ]
        if isinstance(s.record_times, int):
            out.append(("solver.records", s.record_times))
        else:
            out.append(("solver.record_times", tuple(s.record_times)))
        lines = []
        for k, v in out:
            if v is None:
                continue
            text = f"{v[0]!r}:{v[1]!r}" if k.endswith("_window") else _fmt(v)
            lines.append(f"{k} = {text}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _tokenize(text: str):
    """Yield ``(key, raw_value, line_number)`` with duplicate detection."""
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        yield key, value, lineno


def parse_pairs(text: str) -> dict:
    """Typed ``{key: (value, line)}`` without cross-key validation."""
    out = {}
    for key, raw, lineno in _tokenize(text):
        conv = SCHEMA[key]
        try:
            out[key] = (conv(raw), lineno)
        except ValueError:
            raise ConfigError(f"line {lineno}: cannot read {key} = {raw!r}") from None
    return out


def merge(base: str, override: str) -> str:
    """Config text with the keys of ``override`` replacing those of ``base``."""
    over = {k for k, _, _ in _tokenize(override)}
    kept = [
        ln for ln in base.splitlines()
        if ln.split("#", 1)[0].split("=", 1)[0].strip() not in over
    ]
    return "\n".join(kept) + "\n" + override


def parse_config(text: str) -> ExperimentConfig:
    pairs = parse_pairs(text)
    for key in MANDATORY:
        if key not in pairs:
            raise ConfigError(f"missing mandatory key {key!r}")

    def get(key, default=None):
        return pairs[key][0] if key in pairs else default

    def line(key):
        return pairs[key][1] if key in pairs else "?"

    def fail(key, msg):
        raise ConfigError(f"line {line(key)}: {msg}")

    # mesh
    extents = get("mesh.extents")
    dim = get("mesh.dim", len(extents))
    origins = get("mesh.origins", (0.0,) * dim)
    n_cells = get("mesh.n_cells")
    if len(n_cells) == 1 and dim > 1:
        n_cells = n_cells * dim
    try:
        mesh = make_mesh(dim, extents, origins, n_cells)
    except ValueError as exc:
        fail("mesh.extents", f"invalid mesh: {exc}")

    # nonlinearity
    kind = get("nl.kind")
    if kind not in NL_KINDS:
        fail("nl.kind", f"nl.kind must be one of {NL_KINDS}")
    if kind == "pure_power":
        if get("nl.m") is None:
            fail("nl.kind", "pure_power needs nl.m")
        if not get("nl.m") > 1:
            fail("nl.m", "m must exceed 1")
    else:
        for k in ("nl.m1", "nl.m2"):
            if get(k) is None:
                fail("nl.kind", f"two_power needs {k}")
            if not get(k) > 1:
                fail(k, f"{k.split('.')[1]} must exceed 1")
    if get("nl.scale", 1.0) <= 0:
        fail("nl.scale", "scale must be positive")
    nl = NlBlock(
        kind=kind,
        m=get("nl.m"),
        m1=get("nl.m1"),
        m2=get("nl.m2"),
        a=get("nl.a", 0.5),
        b=get("nl.b", 2.0),
        scale=get("nl.scale", 1.0),
    )
    try:
        nl.build()
    except ValueError as exc:
        fail("nl.kind", str(exc))

    # datum
    dkind = get("datum.kind")
    if dkind not in DATUM_KINDS:
        fail("datum.kind", f"datum.kind must be one of {DATUM_KINDS}")
    if dkind == "custom-expression" and get("datum.expr") is None:
        fail("datum.kind", "custom-expression needs datum.expr")
    dvals = {f.name: get(f"datum.{f.name}") for f in fields(DatumBlock) if f"datum.{f.name}" in pairs}
    dvals["kind"] = dkind
    datum = DatumBlock(**dvals)

    # solver
    records = get("solver.record_times", get("solver.records", 40))
    skw = dict(
        t_end=get("solver.t_end"),
        dt0=get("solver.dt0", 1e-5),
        dt_growth=get("solver.dt_growth", 1.05),
        dt_max=get("solver.dt_max"),
        newton_tol=get("solver.newton_tol"),
        newton_max_iter=get("solver.newton_max_iter", 50),
        linear_tol=get("solver.linear_tol", 1e-12),
        record_times=records,
    )
    try:
        solver = SolverConfig(**skw)
    except ValueError as exc:
        fail("solver.t_end", str(exc))

    avals = {f.name: get(f"analysis.{f.name}") for f in fields(AnalysisBlock) if f"analysis.{f.name}" in pairs}
    if avals.get("q0", 1.0) < 1:
        fail("analysis.q0", "q0 must be at least 1")
    analysis = AnalysisBlock(**avals)
    solver = replace(solver, p_set=tuple(int(p) if float(p).is_integer() else p for p in analysis.p_set))
    output = OutputBlock(series=get("output.series"), verdict=get("output.verdict"))
    return ExperimentConfig(
        mesh=mesh,
        nl=nl,
        datum=datum,
        solver=solver,
        analysis=analysis,
        output=output,
        preset=get("preset"),
        seed=get("seed", 0),
    )


def box_center(mesh: BoxMesh) -> tuple:
    return tuple(o + 0.5 * L for o, L in zip(mesh.origins, mesh.extents))

