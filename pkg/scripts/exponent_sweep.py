"""Short-time smoothing exponent across (m1, m2) pairs, fitted vs predicted.

    FLAB_THREADS=4 python3 scripts/exponent_sweep.py > sweep.csv

Uses the smoothing preset datum (delta-like, mass 1) and fits ||u||_inf on
[3 dt0, t_end]. Runs are independent and spread over FLAB_THREADS processes.
"""
import itertools
import os
from concurrent.futures import ProcessPoolExecutor

from flab import analysis as an
from flab.datum import build_datum
from flab.presets import preset_config
from flab.solver import run

M1 = (2.0, 3.0, 4.0)
M2 = (1.5, 2.0, 2.5)


def one(pair):
    m1, m2 = pair
    cfg = preset_config("smoothing", f"nl.m1 = {m1}\nnl.m2 = {m2}\n")
    series = run(build_datum(cfg), cfg.build_nl(), cfg.solver)
    fit = an.fit_power_rate(series, "linf", (3 * cfg.solver.dt0, cfg.solver.t_end))
    pred = an.predict_rates(1.0, cfg.mesh.dim, m1, m2)
    return m1, m2, -pred.short_exp, fit.slope, fit.r2


def main():
    workers = int(os.environ.get("FLAB_THREADS", os.cpu_count() or 1))
    pairs = list(itertools.product(M1, M2))
    with ProcessPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(one, pairs))
    print("m1,m2,predicted_slope,fitted_slope,r2")
    for r in rows:
        print(",".join(repr(float(x)) for x in r))


if __name__ == "__main__":
    main()
