"""Preset verification experiments and their verdicts.

Each preset has a default config (``DEFAULTS``); user configs override it key
by key. ``run_preset`` returns the verdict and the time series it produced.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis as an
from . import reference as ref
from .config import ExperimentConfig, box_center, merge, parse_config
from .datum import build_datum
from .io import Check, Verdict, emit_series, fmt
from .mesh import Field, make_mesh
from .rng import SplitMix64
from .solver import SolverAbort, run

DEFAULTS = {
    "barenblatt-validate": """
        mesh.extents = 8
        mesh.origins = -4
        mesh.n_cells = 512
        nl.kind = pure_power
        nl.m = 2
        datum.kind = zkb
        datum.mass = 1
        datum.t = 0.01
        solver.t_end = 0.5
        solver.dt0 = 1e-5
        solver.dt_max = 1e-3
        solver.records = 20
    """,
    "smoothing": """
        mesh.extents = 4
        mesh.origins = -2
        mesh.n_cells = 1024
        nl.kind = two_power
        nl.m1 = 3
        nl.m2 = 2
        datum.kind = delta-like
        datum.mass = 1
        datum.width = 0.02
        solver.t_end = 0.02
        solver.dt0 = 1e-5
        solver.dt_max = 1e-3
        solver.records = 60
        analysis.late_t_end = 5000
    """,
    "zero-mean": """
        mesh.extents = 2
        mesh.origins = -1
        mesh.n_cells = 512
        nl.kind = pure_power
        nl.m = 2
        datum.kind = custom-expression
        datum.expr = 0.5*sin(pi*x)
        solver.t_end = 200
        solver.dt0 = 1e-4
        solver.dt_max = 2
        solver.records = 80
    """,
    "mean-convergence": """
        mesh.extents = 1
        mesh.n_cells = 256
        nl.kind = pure_power
        nl.m = 2
        datum.kind = cosine-perturbation
        datum.value = 1
        datum.amplitude = 0.1
        solver.t_end = 1.5
        solver.dt0 = 1e-5
        solver.dt_max = 1e-3
        solver.records = 200
    """,
    "sharpness": """
        mesh.extents = 4
        mesh.origins = -2
        mesh.n_cells = 1024
        nl.kind = two_power
        nl.m1 = 3
        nl.m2 = 2
        datum.kind = glued
        datum.mass = 1
        datum.tau = 1e-3
        datum.ell_mass = 0.5
        datum.ell_peak = 0.25
        solver.t_end = 0.1
        solver.dt0 = 1e-6
        solver.dt_max = 1e-3
        solver.records = 60
    """,
    "invariants": """
        mesh.extents = 1
        mesh.n_cells = 64
        nl.kind = two_power
        nl.m1 = 2.5
        nl.m2 = 1.8
        datum.kind = constant
        solver.t_end = 0.5
        solver.dt0 = 1e-4
        solver.dt_growth = 1.1
        solver.dt_max = 0.02
        solver.records = 15
        analysis.seeds = 20
    """,
    "poincare": """
        mesh.extents = 3.141592653589793
        mesh.n_cells = 256
        nl.kind = pure_power
        nl.m = 2
        datum.kind = constant
        solver.t_end = 1
    """,
}

PRESETS = tuple(DEFAULTS)


def _dedent(text: str) -> str:
    return "\n".join(ln.strip() for ln in text.strip().splitlines()) + "\n"


def preset_config(name: str, override: str = "") -> ExperimentConfig:
    if name not in DEFAULTS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = f"preset = {name}\n" + _dedent(DEFAULTS[name])
    if override.strip():
        text = merge(text, _strip_preset(override))
    return parse_config(text)


def _strip_preset(text: str) -> str:
    return "\n".join(ln for ln in text.splitlines() if ln.split("=", 1)[0].strip() != "preset")


def run_experiment(cfg: ExperimentConfig):
    """Build the datum of ``cfg`` and evolve it; returns the time series."""
    nl = cfg.build_nl()
    u0 = build_datum(cfg)
    series = run(u0, nl, cfg.solver)
    series.meta.update(q0=cfg.analysis.q0)
    return series


def _rel_check(name, theorem, predicted, measured, rel_tol):
    ok = abs(measured - predicted) <= rel_tol * abs(predicted)
    return Check(name, theorem, fmt(predicted), fmt(measured), f"rel {rel_tol:g}", ok)


# -- presets ------------------------------------------------------------------------


def _barenblatt(cfg):
    nl = cfg.build_nl()
    d = cfg.datum
    m = d.m if d.m is not None else cfg.nl.large_exponent
    p = ref.make_zkb(m, cfg.mesh.dim, d.mass, d.center or box_center(cfg.mesh))
    u0 = ref.zkb_field(cfg.mesh, p, d.t)
    series = run(u0, nl, cfg.solver)
    t_end = cfg.solver.t_end
    exact = ref.zkb_eval(p, cfg.mesh.centers(), t_end).reshape(-1)
    err = float(np.max(np.abs(series.final.values - exact)) / np.max(exact))
    interior = cfg.mesh.contains_ball(p.x0, ref.zkb_support_radius(p, t_end))
    drift = float(np.max(np.abs(series["mass"] - series["mass"][0])))
    checks = [
        Check("support_interior", "ZKB reference: support stays inside the box", "true", str(interior).lower(), "exact", interior),
        Check("linf_relative_error", "ZKB self-similar solution", "0", fmt(err), "abs 0.02", err <= 0.02),
        Check("mass_drift", "mass conservation", "0", fmt(drift), "abs 1e-9", drift <= 1e-9 * (1 + d.mass)),
    ]
    return checks, {"series": series}


def _smoothing(cfg):
    nl = cfg.build_nl()
    N, q0 = cfg.mesh.dim, cfg.analysis.q0
    dt0 = cfg.solver.dt0
    early = cfg.analysis.early_window or (3.0 * dt0, cfg.solver.t_end)

    u0 = build_datum(cfg)
    pred = an.predict_rates(q0, N, cfg.nl.small_exponent, cfg.nl.large_exponent, an.lp_norm(u0, q0))
    short = run(u0, nl, cfg.solver)
    fit = an.fit_power_rate(short, "linf", early)
    checks = [
        _rel_check("short_time_exponent", "smoothing estimate, short-time branch t^(-N/(2q0+N(m2-1)))", -pred.short_exp, fit.slope, 0.15),
    ]

    # zero-mean mirror datum, run far into the m1-dominated regime
    L = cfg.mesh.extents[0]
    c = box_center(cfg.mesh)
    center = (c[0] - 0.375 * L,) + tuple(c[1:])
    late_cfg = replace(
        cfg,
        datum=replace(cfg.datum, kind="odd-bump", center=center),
        solver=replace(
            cfg.solver,
            t_end=cfg.analysis.late_t_end,
            dt_max=cfg.analysis.late_t_end / 40.0,
            record_times=150,
        ),
    )
    long = run(build_datum(late_cfg), nl, late_cfg.solver)
    e2 = an.fit_power_rate(long, "linf", early)
    t_star = an.detect_t_star(long)
    late_window = cfg.analysis.late_window or an.window_where(long, "linf", 0.05, 0.5, t_min=t_star or 0.0)
    late = an.fit_power_rate(long, "linf", late_window)
    target = -pred.short_exp
    checks += [
        Check(
            "crossover_early_slope", "smoothing estimate, short-time branch t^(-N/(2q0+N(m2-1)))", fmt(target), fmt(e2.slope),
            f"abs {0.05 / 0.33:.6g}", abs(e2.slope - target) <= 0.05 / 0.33,
        ),
        Check(
            "crossover_late_slope", "zero-mean long-time decay K t^(-1/(m1-1))",
            fmt(-pred.zero_mean_long_exp), fmt(late.slope),
            f"<= early - 0.1 = {fmt(e2.slope - 0.1)}", late.slope <= e2.slope - 0.1,
        ),
    ]
    return checks, {"series": short, "crossover": long}


def _zero_mean(cfg):
    nl = cfg.build_nl()
    u0 = build_datum(cfg)
    series = run(u0, nl, cfg.solver)
    window = cfg.analysis.late_window or an.last_decade(series)
    fit = an.fit_power_rate(series, "linf", window)
    pred = an.predict_rates(cfg.analysis.q0, cfg.mesh.dim, cfg.nl.small_exponent, cfg.nl.large_exponent)
    worst_mean = float(np.max(np.abs(series["mean"])))
    checks = [
        _rel_check("long_time_exponent", "zero-mean long-time decay K t^(-1/(m1-1))",
                   -pred.zero_mean_long_exp, fit.slope, 0.15),
        Check("mean_preserved", "mass conservation", "0", fmt(worst_mean), "abs 1e-10", worst_mean <= 1e-10),
    ]
    return checks, {"series": series}


def _mean_convergence(cfg):
    nl = cfg.build_nl()
    u0 = build_datum(cfg)
    mean0 = float(np.mean(u0.values))
    series = run(u0, nl, cfg.solver)
    C_P = an.poincare_constant_box(cfg.mesh.extents)
    pred = an.predict_rates(1.0, cfg.mesh.dim, cfg.nl.small_exponent, cfg.nl.large_exponent,
                            mean0=mean0, nl=nl, C_P=C_P)
    dev = series.deviation_inf(mean0)
    window = cfg.analysis.late_window or an.window_where(series, dev, 1e-8, 1e-3)
    fit = an.fit_exp_rate(series, dev, window)
    checks = [
        _rel_check("exponential_rate", "nonzero-mean convergence exp(-phi'(mean) t / C_P^2)",
                   pred.nonzero_mean_rate, fit.rate, 0.10),
    ]
    return checks, {"series": series}


def _sharpness(cfg):
    nl = cfg.build_nl()
    u0 = build_datum(cfg)
    series = run(u0, nl, cfg.solver)
    norm = an.lp_norm(u0, 1.0)
    pred = an.predict_rates(1.0, cfg.mesh.dim, cfg.nl.small_exponent, cfg.nl.large_exponent, norm)
    ratio = an.envelope_ratio(series, pred, norm)
    tau = cfg.datum.tau
    lo, hi = cfg.analysis.early_window or (2.0 * tau, cfg.solver.t_end)
    sel = (series.t >= lo) & (series.t <= hi)
    spread = float(np.max(ratio[sel]) / np.min(ratio[sel]))
    bound = cfg.datum.mass + cfg.datum.ell_mass
    checks = [
        Check("envelope_ratio_spread", "smoothing estimate is sharp for short times", "<= 3", fmt(spread), "max/min <= 3", spread <= 3.0),
        Check("realized_K", "smoothing estimate constant K (measured)", "finite", fmt(np.max(ratio[sel])), "finite positive",
              bool(np.isfinite(np.max(ratio[sel])) and np.min(ratio[sel]) > 0)),
        Check("glued_mass", "glued datum mass ||u_hat||_1 <= 1 + l", fmt(bound), fmt(norm), "<= predicted", norm <= bound * (1 + 1e-9)),
    ]
    return checks, {"series": series}


def _invariant_metrics(args):
    mesh, nl, solver, seed = args
    g = SplitMix64(seed)
    u0 = g.uniform(mesh.size, -2.0, 2.0)
    v0 = u0 - g.uniform(mesh.size, 0.0, 1.0)
    su = run(Field(mesh, u0), nl, solver, keep_fields=True)
    sv = run(Field(mesh, v0), nl, solver, keep_fields=True)
    vol = mesh.cell_volume
    out = {}
    l1_u0 = vol * np.abs(u0).sum()
    out["mass"] = float(np.max(np.abs(su["mass"] - su["mass"][0]))) / (1.0 + l1_u0)

    worst = -np.inf
    for s in (su, sv):
        for col in ("l1", "l2", "l4", "linf"):
            y = s[col]
            prior_min = np.minimum.accumulate(y)[:-1]
            worst = max(worst, float(np.max(y[1:] / prior_min - 1.0)) if prior_min.min() > 0 else 0.0)
    out["nonexp"] = worst

    d0 = vol * np.abs(u0 - v0).sum()
    diffs = np.array([vol * np.abs(a.values - b.values).sum() for a, b in zip(su.fields, sv.fields)])
    out["l1"] = float(np.max(diffs - d0)) / (1.0 + d0)
    out["comparison"] = float(max(np.max(b.values - a.values) for a, b in zip(su.fields, sv.fields)))
    out["energy"] = float(max(np.max(np.diff(su["energy_psi"])), np.max(np.diff(sv["energy_psi"]))))
    eps = 1e-9 * (1.0 + np.max(np.abs(u0)))
    out["max_principle"] = float(max(su["max"].max() - u0.max(), u0.min() - su["min"].min())) - eps
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FLAB_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def _invariants(cfg):
    nl = cfg.build_nl()
    meshes = [cfg.mesh, make_mesh(2, (1.0, 1.0), (0.0, 0.0), (16, 16))]
    jobs = [(m, nl, cfg.solver, cfg.seed + k) for m in meshes for k in range(cfg.analysis.seeds)]
    threads = _threads()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_invariant_metrics, jobs))
    else:
        results = [_invariant_metrics(j) for j in jobs]
    worst = {k: max(r[k] for r in results) for k in results[0]}
    rows = [
        ("mass_conservation", "mass conservation", "mass", 1e-9),
        ("non_expansivity", "non-expansivity of L^p norms, p in {1,2,4,inf}", "nonexp", 1e-8),
        ("l1_contraction", "L1 contraction", "l1", 1e-8),
        ("comparison", "comparison principle (v0 <= u0 implies v <= u)", "comparison", 1e-8),
        ("energy_decay", "psi-energy inequality", "energy", 1e-8),
        ("max_principle", "maximum principle of the scheme", "max_principle", 0.0),
    ]
    checks = [
        Check(name, thm, "<= 0", fmt(worst[key]), f"slack {tol:g}", worst[key] <= tol)
        for name, thm, key, tol in rows
    ]
    return checks, {}


def _poincare(cfg):
    box = an.poincare_constant_box(cfg.mesh.extents)
    num = an.poincare_constant_numeric(cfg.mesh)
    ok = abs(num - box) <= 1e-3 * box
    return [Check("poincare_constant", "Poincare inequality, best constant 1/sqrt(lambda_1)",
                  fmt(box), fmt(num), "rel 1e-3", ok)], {}


_RUNNERS = {
    "barenblatt-validate": _barenblatt,
    "smoothing": _smoothing,
    "zero-mean": _zero_mean,
    "mean-convergence": _mean_convergence,
    "sharpness": _sharpness,
    "invariants": _invariants,
    "poincare": _poincare,
}


def run_preset(name: str, cfg: ExperimentConfig | None = None):
    """Execute preset ``name``; returns ``(Verdict, {label: TimeSeries})``."""
    cfg = cfg if cfg is not None else preset_config(name)
    try:
        checks, series = _RUNNERS[name](cfg)
    except an.FitError as exc:
        return Verdict(name, [], error=f"fit failure: {exc}"), {}
    except SolverAbort as exc:
        return Verdict(name, [], error=f"solver abort: {exc}", aborted=True), {}
    return Verdict(name, checks), series


def write_artifacts(verdict: Verdict, series: dict, cfg: ExperimentConfig, outdir=".") -> list:
    """Write the verdict and every series as CSV; paths follow ``cfg.output`` when set."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for label, s in series.items():
        if label == "series" and cfg.output.series:
            path = Path(cfg.output.series)
        else:
            path = outdir / f"{verdict.preset}-{label}.csv"
        written.append(emit_series(s, path))
    vpath = Path(cfg.output.verdict) if cfg.output.verdict else outdir / f"{verdict.preset}-verdict.txt"
    written.append(verdict.write(vpath))
    return written
