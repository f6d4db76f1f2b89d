"""Command line front end.

    flab run <config>
    flab verify <preset> [--config FILE] [--outdir DIR]
    flab rates <series.csv> --window tA:tB [--exp] [--quantity NAME]
    flab check-phi <config>
    flab poincare <config>

Exit codes: 0 pass, 1 verdict failure, 2 usage or config error, 3 solver abort.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis as an
from .config import ConfigError, parse_config
from .io import emit_series, read_series
from .nonlinearity import verify_growth_conditions
from .presets import PRESETS, preset_config, run_experiment, run_preset, write_artifacts
from .solver import SolverAbort

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _window(text):
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like tA:tB, got {text!r}") from None
    if not 0 <= a < b:
        raise argparse.ArgumentTypeError("window needs 0 <= tA < tB")
    return a, b


def cmd_run(args) -> int:
    cfg = parse_config(_read(args.config))
    if cfg.preset:
        return _verify(cfg.preset, _read(args.config), args.outdir)
    sys.stderr.write(cfg.echo())
    series = run_experiment(cfg)
    out = Path(cfg.output.series) if cfg.output.series else Path(args.outdir) / (Path(args.config).stem + ".csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_series(series, out)
    print(f"series={out}")
    print(f"records={len(series)}")
    print(f"steps={series.meta.get('steps')}")
    return EXIT_PASS


def _verify(preset: str, override: str, outdir) -> int:
    cfg = preset_config(preset, override)
    verdict, series = run_preset(preset, cfg)
    write_artifacts(verdict, series, cfg, outdir)
    print("\n".join(verdict.lines()))
    if verdict.aborted:
        return EXIT_ABORT
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    override = _read(args.config) if args.config else ""
    return _verify(args.preset, override, args.outdir)


def cmd_rates(args) -> int:
    series = read_series(args.csv)
    if args.exp:
        fit = an.fit_exp_rate(series, args.quantity or "dev_inf", args.window)
        print(f"rate={fit.rate!r}")
    else:
        fit = an.fit_power_rate(series, args.quantity or "linf", args.window)
        print(f"slope={fit.slope!r}")
    print(f"intercept={fit.intercept!r}")
    print(f"r2={fit.r2!r}")
    print(f"n={fit.n}")
    return EXIT_PASS


def cmd_check_phi(args) -> int:
    cfg = parse_config(_read(args.config))
    nl = cfg.build_nl()
    rep = verify_growth_conditions(nl, cfg.nl.small_exponent, cfg.nl.large_exponent, u_max=args.u_max)
    for k, v in nl.describe().items():
        print(f"{k}={v}")
    print(f"smooth={str(nl.smooth).lower()}")
    print(f"c1={rep.c1_best!r}")
    print(f"c2={rep.c2_best!r}")
    print(f"pass={str(rep.ok).lower()}")
    return EXIT_PASS if rep.ok else EXIT_FAIL


def cmd_poincare(args) -> int:
    cfg = parse_config(_read(args.config))
    box = an.poincare_constant_box(cfg.mesh.extents)
    num = an.poincare_constant_numeric(cfg.mesh)
    print(f"C_P_box={box!r}")
    print(f"C_P_numeric={num!r}")
    print(f"relative_gap={abs(num - box) / box!r}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flab", description="Filtration equation solver and verification lab.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evolve the datum of a config and write its time series")
    r.add_argument("config")
    r.add_argument("--outdir", default=".")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="run a preset experiment and write its verdict")
    v.add_argument("preset", choices=PRESETS)
    v.add_argument("--config", help="key = value overrides on top of the preset defaults")
    v.add_argument("--outdir", default=".")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("rates", help="fit a power or exponential rate to a series CSV")
    f.add_argument("csv")
    f.add_argument("--window", type=_window, required=True)
    f.add_argument("--exp", action="store_true", help="exponential instead of power fit")
    f.add_argument("--quantity", help="column to fit (default linf, or dev_inf with --exp)")
    f.set_defaults(func=cmd_rates)

    c = sub.add_parser("check-phi", help="sample the growth conditions of the configured phi")
    c.add_argument("config")
    c.add_argument("--u-max", type=float, default=10.0)
    c.set_defaults(func=cmd_check_phi)

    q = sub.add_parser("poincare", help="box and numeric Poincare constants of the configured mesh")
    q.add_argument("config")
    q.set_defaults(func=cmd_poincare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverAbort as exc:
        print(f"error=solver abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ConfigError, an.FitError, OSError, KeyError, ValueError) as exc:
        print(f"error={exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
