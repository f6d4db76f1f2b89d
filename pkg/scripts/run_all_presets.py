"""Run every preset, write CSVs and verdicts to an output directory, print a summary.

    python3 scripts/run_all_presets.py [outdir]
"""
import sys
import time
from pathlib import Path

from flab.presets import PRESETS, preset_config, run_preset, write_artifacts


def main(outdir="results"):
    outdir = Path(outdir)
    failed = []
    for name in PRESETS:
        cfg = preset_config(name)
        t0 = time.perf_counter()
        verdict, series = run_preset(name, cfg)
        write_artifacts(verdict, series, cfg, outdir)
        print(f"{name:22s} pass={str(verdict.passed).lower():5s} {time.perf_counter() - t0:6.1f}s")
        for c in verdict.checks:
            print(f"    {c.name:26s} predicted={c.predicted:>22s} measured={c.measured}")
        if not verdict.passed:
            failed.append(name)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
