"""Norm tracking, decay-rate fits, predicted rates and Poincare constants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .mesh import BoxMesh, Field, neumann_laplacian

COLUMNS = ("t", "mass", "mean", "min", "max", "l1", "l2", "l4", "linf", "energy_psi")


class FitError(ValueError):
    pass


# -- norms and time series -----------------------------------------------------


def lp_norm(f: Field, p: float) -> float:
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    return float((f.mesh.cell_volume * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


@dataclass
class TimeSeries:
    """Column store of per-record diagnostics.

    ``columns`` maps each name in :data:`COLUMNS` (plus ``l<p>`` for extra
    exponents) to a float array. ``fields`` holds snapshots when requested.
    """

    columns: dict = field(default_factory=lambda: {c: np.empty(0) for c in COLUMNS})
    meta: dict = field(default_factory=dict)
    fields: list = field(default_factory=list)
    final: Optional[Field] = None

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name):
        if name == "dev_inf":
            return self.deviation_inf()
        return self.columns[name]

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    @classmethod
    def from_columns(cls, **cols) -> "TimeSeries":
        n = len(cols["t"])
        out = {c: np.full(n, np.nan) for c in COLUMNS}
        out.update({k: np.asarray(v, dtype=float) for k, v in cols.items()})
        return cls(columns=out)

    def deviation_inf(self, level: Optional[float] = None) -> np.ndarray:
        """sup |u - level| per record, recovered from the min/max columns."""
        level = self.columns["mean"] if level is None else level
        return np.maximum(self.columns["max"] - level, level - self.columns["min"])

    def check(self):
        t = self.t
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("record times must be strictly increasing")
        for name, col in self.columns.items():
            if len(col) != len(t):
                raise ValueError(f"column {name} has the wrong length")


def field_record(f: Field, nl, p_set=(1, 2, 4)) -> dict:
    u = f.values
    vol = f.mesh.cell_volume
    mass = vol * float(np.sum(u))
    rec = {
        "t": f.time,
        "mass": mass,
        "mean": mass / f.mesh.measure,
        "min": float(np.min(u)),
        "max": float(np.max(u)),
        "linf": float(np.max(np.abs(u))),
        "energy_psi": vol * float(np.sum(nl.psi(u))),
    }
    for p in sorted(set(p_set) | {1, 2, 4}):
        rec[f"l{p:g}"] = lp_norm(f, p)
    return rec


def series_from_records(records: list, meta: Optional[dict] = None) -> TimeSeries:
    names = list(COLUMNS) + [k for k in records[0] if k not in COLUMNS] if records else list(COLUMNS)
    cols = {k: np.array([r[k] for r in records], dtype=float) for k in names}
    ts = TimeSeries(columns=cols, meta=dict(meta or {}))
    ts.check()
    return ts


# -- exponent utilities ----------------------------------------------------------


def theta(s: float, r: float, N: int) -> float:
    """Gagliardo-Nirenberg interpolation exponent 2N(r-s) / (r[2N - s(N-2)])."""
    if N <= 2:
        ok = 0.0 < s <= r < math.inf
    else:
        crit = 2.0 * N / (N - 2.0)
        ok = (0.0 < s <= r <= crit) or (crit <= r <= s < math.inf)
    if not ok:
        raise ValueError(f"(s, r) = ({s}, {r}) outside the admissible range for N={N}")
    return 2.0 * N * (r - s) / (r * (2.0 * N - s * (N - 2.0)))


def moser_p_recurrence(k: int, q0: float, N: int, m1: float) -> float:
    p = float(q0)
    for _ in range(k):
        p = (N + 2.0) / N * p + m1 - 1.0
    return p


def moser_p(k: int, q0: float, N: int, m1: float) -> float:
    """Closed form of p_{k+1} = (N+2)/N p_k + m1 - 1 with p_0 = q0.

    The geometric ratio is (N+2)/N; the variant with ratio (N+2)/2 only agrees
    with the recurrence when N = 2.
    """
    if q0 < 1:
        raise ValueError("q0 must be at least 1")
    shift = N * (m1 - 1.0) / 2.0
    return (q0 + shift) * ((N + 2.0) / N) ** k - shift


@dataclass(frozen=True)
class RatePrediction:
    q0: float
    N: int
    m1: float
    m2: float
    short_exp: float
    long_exp: float
    crossover_t: float
    zero_mean_short_exp: float
    zero_mean_long_exp: float
    nonzero_mean_rate: Optional[float] = None

    def envelope(self, t, u0_norm: float):
        """Bracketed smoothing bound with unit constant, branch chosen by t."""
        t = np.asarray(t, dtype=float)
        two_q = 2.0 * self.q0

        def branch(m, exp):
            return t ** (-exp) * u0_norm ** (two_q / (two_q + self.N * (m - 1.0))) + u0_norm

        with np.errstate(divide="ignore"):
            return np.where(
                t < self.crossover_t,
                branch(self.m2, self.short_exp),
                branch(self.m1, self.long_exp),
            )


def predict_rates(
    q0: float,
    N: int,
    m1: float,
    m2: float,
    u0_norm_q0: float = 1.0,
    mean0: float = 0.0,
    nl=None,
    C_P: Optional[float] = None,
) -> RatePrediction:
    if q0 < 1:
        raise ValueError("q0 must be at least 1")
    rate = None
    if mean0 != 0.0 and nl is not None and C_P is not None:
        if not C_P > 0:
            raise ValueError("C_P must be positive")
        rate = float(nl.phi_prime(mean0)) / C_P**2
    return RatePrediction(
        q0=q0,
        N=N,
        m1=m1,
        m2=m2,
        short_exp=N / (2.0 * q0 + N * (m2 - 1.0)),
        long_exp=N / (2.0 * q0 + N * (m1 - 1.0)),
        crossover_t=u0_norm_q0 ** (2.0 * q0 / N),
        zero_mean_short_exp=1.0 / (m2 - 1.0),
        zero_mean_long_exp=1.0 / (m1 - 1.0),
        nonzero_mean_rate=rate,
    )


# -- Poincare constants ------------------------------------------------------------


def poincare_constant_box(extents, dim: Optional[int] = None) -> float:
    """1/sqrt(lambda_1) with lambda_1 = (pi / longest side)^2."""
    extents = np.atleast_1d(np.asarray(extents, dtype=float))
    if dim is not None and len(extents) != dim:
        raise ValueError("extents do not match dim")
    if np.any(extents <= 0):
        raise ValueError("extents must be positive")
    return float(np.max(extents) / math.pi)


def smallest_neumann_eigenvalue(mesh: BoxMesh, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Inverse power iteration for the first nonzero eigenvalue of -Laplacian.

    Each sweep solves -L y = x on the mean-zero subspace through the bordered
    system [[-L, 1], [1^T, 0]], then re-projects constants out of y.
    """
    A = -neumann_laplacian(mesh)
    n = A.shape[0]
    ones = np.ones(n)
    bordered = sp.bmat([[A, sp.csr_matrix(ones[:, None])], [sp.csr_matrix(ones[None, :]), None]])
    lu = splu(bordered.tocsc())

    rng = np.random.default_rng(12345)
    x = rng.standard_normal(n)
    x -= x.mean()
    x /= np.linalg.norm(x)
    lam_old = np.inf
    for _ in range(max_iter):
        y = lu.solve(np.append(x, 0.0))[:n]
        y -= y.mean()
        x = y / np.linalg.norm(y)
        lam = float(x @ (A @ x))
        if abs(lam - lam_old) <= tol * abs(lam):
            return lam
        lam_old = lam
    raise RuntimeError("inverse power iteration did not converge")


def poincare_constant_numeric(mesh: BoxMesh, tol: float = 1e-10) -> float:
    return 1.0 / math.sqrt(smallest_neumann_eigenvalue(mesh, tol=tol))


# -- rate fitting -----------------------------------------------------------------


@dataclass(frozen=True)
class PowerFit:
    slope: float
    intercept: float
    r2: float
    n: int


@dataclass(frozen=True)
class ExpFit:
    rate: float
    intercept: float
    r2: float
    n: int


def _values(series: TimeSeries, quantity):
    if isinstance(quantity, str):
        return np.asarray(series[quantity], dtype=float)
    if callable(quantity):
        return np.asarray(quantity(series), dtype=float)
    return np.asarray(quantity, dtype=float)


def _window(series, y, t_window):
    t = series.t
    mask = np.ones_like(t, dtype=bool) if t_window is None else (t >= t_window[0]) & (t <= t_window[1])
    return t[mask], y[mask]


def _linfit(x, y):
    if len(x) < 5:
        raise FitError(f"need at least 5 records in the window, got {len(x)}")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), r2


def fit_power_rate(series: TimeSeries, quantity="linf", t_window=None) -> PowerFit:
    """Least squares of log(value) against log(t); the slope is the exponent."""
    t, y = _window(series, _values(series, quantity), t_window)
    if np.any(t <= 0) or np.any(y <= 0):
        raise FitError("power fits need positive times and values")
    slope, intercept, r2 = _linfit(np.log(t), np.log(y))
    return PowerFit(slope, intercept, r2, len(t))


def fit_exp_rate(series: TimeSeries, quantity="dev_inf", t_window=None) -> ExpFit:
    """Least squares of log(value) against t; rate = -slope."""
    t, y = _window(series, _values(series, quantity), t_window)
    if np.any(y <= 0):
        raise FitError("exponential fits need positive values")
    slope, intercept, r2 = _linfit(t, np.log(y))
    return ExpFit(-slope, intercept, r2, len(t))


def window_where(series: TimeSeries, quantity, lo: float, hi: float, t_min: float = 0.0):
    """Smallest time window holding every record with lo <= value <= hi and t >= t_min."""
    y = _values(series, quantity)
    t = series.t
    mask = (y >= lo) & (y <= hi) & (t >= t_min)
    if not mask.any():
        raise FitError(f"no records with values in [{lo}, {hi}]")
    return float(t[mask].min()), float(t[mask].max())


def last_decade(series: TimeSeries):
    t_end = float(series.t[-1])
    return t_end / 10.0, t_end


# -- diagnostics -----------------------------------------------------------------


def envelope_ratio(series: TimeSeries, pred: RatePrediction, u0_norm: float) -> np.ndarray:
    """||u(t)||_inf over the unit-constant smoothing envelope; NaN at t = 0.

    The maximum over records is the realised constant of the bound.
    """
    t = series.t
    out = np.full(len(t), np.nan)
    pos = t > 0
    out[pos] = series["linf"][pos] / pred.envelope(t[pos], u0_norm)
    return out


def detect_t_star(series: TimeSeries) -> Optional[float]:
    """Last time at which ||u||_inf exceeds 1, interpolated in log t."""
    t, y = series.t, series["linf"]
    above = np.nonzero(y > 1.0)[0]
    if above.size == 0:
        return None
    k = int(above[-1])
    if k == len(t) - 1:
        return float(t[k])
    t0, t1, y0, y1 = t[k], t[k + 1], y[k], y[k + 1]
    if y1 == y0:
        return float(t1)
    frac = np.log(y0) / (np.log(y0) - np.log(y1)) if y1 > 0 else (y0 - 1.0) / (y0 - y1)
    if t0 <= 0:
        return float(t0 + frac * (t1 - t0))
    return float(np.exp(np.log(t0) + frac * (np.log(t1) - np.log(t0))))
