"""Backward Euler finite volumes for u_t = Laplacian(phi(u)) with zero-flux walls.

Each step solves

    U - U_old - dt * L phi(U) = 0

by damped Newton. The Jacobian is I - dt * L * diag(phi'(U)); it is
tridiagonal in 1D (banded LU) and sparse in 2D (Jacobi-preconditioned GMRES).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, gmres

from .analysis import TimeSeries, field_record, series_from_records
from .mesh import Field, neumann_laplacian

log = logging.getLogger(__name__)


class StepFailure(RuntimeError):
    """Newton stagnated; the caller should retry with a smaller step."""


class SolverAbort(RuntimeError):
    """Too many consecutive step failures."""


@dataclass(frozen=True)
class SolverConfig:
    t_end: float
    dt0: float = 1e-5
    dt_growth: float = 1.05
    dt_max: Optional[float] = None  # defaults to t_end / 100
    newton_tol: Optional[float] = None  # defaults to 1e-10 * (1 + ||u0||_inf)
    newton_max_iter: int = 50
    linear_tol: float = 1e-12
    record_times: Union[int, Sequence[float]] = 40
    p_set: tuple = (1, 2, 4)
    max_halvings: int = 30
    max_failures: int = 10

    def __post_init__(self):
        if self.dt_max is None:
            object.__setattr__(self, "dt_max", max(self.dt0, self.t_end / 100.0))
        if not (0.0 < self.dt0 <= self.dt_max <= self.t_end):
            raise ValueError(
                f"need 0 < dt0 <= dt_max <= t_end, got {self.dt0}, {self.dt_max}, {self.t_end}"
            )
        if self.dt_growth < 1.0:
            raise ValueError("dt_growth must be at least 1")
        if self.newton_tol is not None and not self.newton_tol > 0.0:
            raise ValueError("newton_tol must be positive")

    def record_grid(self, t0: float = 0.0) -> np.ndarray:
        if isinstance(self.record_times, (int, np.integer)):
            start = t0 + self.dt0
            grid = np.geomspace(start, self.t_end, int(self.record_times)) if self.t_end > start else []
        else:
            grid = np.asarray(sorted(self.record_times), dtype=float)
        grid = np.asarray([x for x in grid if t0 < x < self.t_end] + [self.t_end])
        return np.unique(grid)


@dataclass
class StepReport:
    dt_used: float
    newton_iters: int
    final_residual: float
    linear_iters_total: int = 0


def apply_diffusion(f: Field, nl) -> np.ndarray:
    """Discrete zero-flux Laplacian of phi(u), one value per cell."""
    return _diffuse(nl.phi(f.values).reshape(f.mesh.shape), f.mesh.h).reshape(-1)


def _diffuse(w: np.ndarray, h) -> np.ndarray:
    out = np.zeros_like(w)
    for axis, hx in enumerate(h):
        flux = np.diff(w, axis=axis) / hx**2
        lo = [slice(None)] * w.ndim
        hi = [slice(None)] * w.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        out[tuple(lo)] += flux
        out[tuple(hi)] -= flux
    return out


class _Stepper:
    """Per-mesh cache of the Laplacian pieces used by the Newton solves."""

    def __init__(self, mesh, nl, cfg: SolverConfig):
        self.mesh, self.nl, self.cfg = mesh, nl, cfg
        if mesh.dim == 1:
            n, h = mesh.n_cells[0], mesh.h[0]
            self.diag_L = np.full(n, -2.0 / h**2)
            self.diag_L[0] = self.diag_L[-1] = -1.0 / h**2
            self.off_L = 1.0 / h**2
        else:
            self.L = neumann_laplacian(mesh)
            self.diag_L = self.L.diagonal()

    def residual(self, U, U_old, dt):
        w = self.nl.phi(U).reshape(self.mesh.shape)
        return U - U_old - dt * _diffuse(w, self.mesh.h).reshape(-1)

    def newton_direction(self, U, F, dt):
        D = self.nl.phi_prime(U)
        if self.mesh.dim == 1:
            ab = np.empty((3, U.size))
            ab[0, 1:] = -dt * self.off_L * D[1:]
            ab[0, 0] = 0.0
            ab[1] = 1.0 - dt * self.diag_L * D
            ab[2, :-1] = -dt * self.off_L * D[:-1]
            ab[2, -1] = 0.0
            return solve_banded((1, 1), ab, -F), 0
        J = (sp.identity(U.size, format="csr") - dt * (self.L @ sp.diags(D))).tocsr()
        inv_diag = 1.0 / J.diagonal()
        M = LinearOperator(J.shape, matvec=lambda x: inv_diag * x)
        count = [0]

        def cb(_):
            count[0] += 1

        delta, info = gmres(
            J, -F, rtol=self.cfg.linear_tol, atol=0.0, M=M, restart=50, maxiter=200,
            callback=cb, callback_type="pr_norm",
        )
        if info < 0:
            raise StepFailure("GMRES breakdown")
        return delta, count[0]

    def step(self, f: Field, dt: float, tol: float):
        cfg = self.cfg
        U_old = f.values
        U = U_old.copy()
        F = self.residual(U, U_old, dt)
        fnorm = np.linalg.norm(F)
        lin_total = 0
        for it in range(1, cfg.newton_max_iter + 1):
            delta, lin = self.newton_direction(U, F, dt)
            lin_total += lin
            lam = 1.0
            for _ in range(cfg.max_halvings + 1):
                U_try = U + lam * delta
                F_try = self.residual(U_try, U_old, dt)
                if np.max(np.abs(F_try)) <= tol or np.linalg.norm(F_try) < fnorm:
                    break
                lam *= 0.5
            else:
                raise StepFailure(f"line search failed at Newton iteration {it}")
            U, F, fnorm = U_try, F_try, np.linalg.norm(F_try)
            res = float(np.max(np.abs(F)))
            if res <= tol:
                return Field(f.mesh, U, f.time + dt), StepReport(dt, it, res, lin_total)
        raise StepFailure(f"no convergence in {cfg.newton_max_iter} Newton iterations")


def _default_tol(u: np.ndarray) -> float:
    return 1e-10 * (1.0 + float(np.max(np.abs(u))))


def step_backward_euler(f: Field, nl, dt: float, cfg: SolverConfig):
    """One implicit step; returns ``(new_field, StepReport)``.

    Raises :class:`StepFailure` when Newton stagnates.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    tol = cfg.newton_tol if cfg.newton_tol is not None else _default_tol(f.values)
    return _Stepper(f.mesh, nl, cfg).step(f, dt, tol)


def run(u0: Field, nl, cfg: SolverConfig, keep_fields: bool = False) -> TimeSeries:
    """Advance ``u0`` to ``cfg.t_end`` with geometrically growing steps.

    A record is taken at ``u0.time`` and at every time of ``cfg.record_grid``;
    steps are shortened to land on record times exactly.
    """
    stepper = _Stepper(u0.mesh, nl, cfg)
    tol = cfg.newton_tol if cfg.newton_tol is not None else _default_tol(u0.values)
    targets = list(cfg.record_grid(u0.time))

    f = u0.copy()
    records = [field_record(f, nl, cfg.p_set)]
    snaps = [f.copy()] if keep_fields else []
    dt = cfg.dt0
    failures = 0
    n_steps = newton_total = 0
    for target in targets:
        while f.time < target:
            remaining = target - f.time
            land = min(dt, cfg.dt_max) >= remaining * (1.0 - 1e-12)
            step = remaining if land else min(dt, cfg.dt_max)
            try:
                g, rep = stepper.step(f, step, tol)
            except StepFailure as exc:
                failures += 1
                log.debug("step failure at t=%g dt=%g: %s", f.time, step, exc)
                if failures >= cfg.max_failures:
                    raise SolverAbort(
                        f"{failures} consecutive step failures at t={f.time:g}"
                    ) from exc
                dt = step / 2.0
                continue
            failures = 0
            n_steps += 1
            newton_total += rep.newton_iters
            g.time = target if land else g.time
            f = g
            if not land or step >= dt:
                dt = min(dt * cfg.dt_growth, cfg.dt_max)
        records.append(field_record(f, nl, cfg.p_set))
        if keep_fields:
            snaps.append(f.copy())

    meta = {
        "mesh": f"dim={u0.mesh.dim} extents={u0.mesh.extents} n_cells={u0.mesh.n_cells}",
        "nl": nl.describe(),
        "steps": n_steps,
        "newton_iters": newton_total,
    }
    series = series_from_records(records, meta)
    series.fields = snaps
    series.final = f
    return series
