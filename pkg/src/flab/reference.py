"""Barenblatt (ZKB) solutions of u_t = Laplacian(|u|^(m-1) u) and derived data.

The profile with mass M centred at x0 is

    U(x, t) = t^-alpha * (C - kappa |x - x0|^2 t^(-2 beta))_+^(1/(m-1))

with beta = 1/(N(m-1)+2), alpha = N beta, kappa = (m-1) beta / (2m).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .mesh import BoxMesh, Field


def zkb_exponents(m: float, N: int):
    if not m > 1.0:
        raise ValueError(f"m must exceed 1, got {m}")
    beta = 1.0 / (N * (m - 1.0) + 2.0)
    alpha = N * beta
    kappa = (m - 1.0) * beta / (2.0 * m)
    return alpha, beta, kappa


def _profile_integral(C: float, m: float, N: int, kappa: float) -> float:
    """Free-space integral of (C - kappa |xi|^2)_+^(1/(m-1)) by adaptive quadrature."""
    if C <= 0.0:
        return 0.0
    p = 1.0 / (m - 1.0)
    R = math.sqrt(C / kappa)
    surface = 2.0 if N == 1 else 2.0 * math.pi
    val, _ = integrate.quad(
        lambda r: r ** (N - 1) * (C - kappa * r * r) ** p, 0.0, R,
        epsabs=0.0, epsrel=1e-13, limit=200,
    )
    return surface * val


def zkb_mass_closed_form(C: float, m: float, N: int) -> float:
    """Beta-function evaluation of the profile integral (N = 1 or 2)."""
    _, _, kappa = zkb_exponents(m, N)
    p = 1.0 / (m - 1.0)
    if N == 1:
        return C ** (p + 0.5) / math.sqrt(kappa) * special.beta(0.5, p + 1.0)
    return math.pi * C ** (p + 1.0) / (kappa * (p + 1.0))


def zkb_normalize(m: float, N: int, mass: float, rtol: float = 1e-10) -> float:
    """C such that the profile integral equals ``mass``, by bisection."""
    if not mass > 0.0:
        raise ValueError("mass must be positive")
    _, _, kappa = zkb_exponents(m, N)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if _profile_integral(hi, m, N, kappa) >= mass:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RuntimeError("could not bracket the normalisation constant")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _profile_integral(mid, m, N, kappa) < mass:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ZkbProfile:
    m: float
    N: int
    mass: float
    x0: tuple
    alpha: float
    beta: float
    kappa: float
    C: float

    def __call__(self, *coords, t):
        return zkb_eval(self, coords, t)

    @property
    def peak_constant(self) -> float:
        """C^(1/(m-1)), the value of t^alpha ||U(t)||_inf."""
        return self.C ** (1.0 / (self.m - 1.0))


def make_zkb(m: float, N: int, mass: float = 1.0, x0=None) -> ZkbProfile:
    alpha, beta, kappa = zkb_exponents(m, N)
    x0 = (0.0,) * N if x0 is None else tuple(float(c) for c in np.atleast_1d(x0))
    if len(x0) != N:
        raise ValueError("centre dimension does not match N")
    return ZkbProfile(m, N, float(mass), x0, alpha, beta, kappa, zkb_normalize(m, N, mass))


def _r2(coords, x0):
    return sum((np.asarray(c, dtype=float) - c0) ** 2 for c, c0 in zip(coords, x0))


def zkb_eval(p: ZkbProfile, x, t: float):
    """Profile value at points ``x`` (a sequence of coordinate arrays) and time t."""
    if not t > 0.0:
        raise ValueError("ZKB profiles are evaluated at t > 0 only")
    coords = (x,) if p.N == 1 and not isinstance(x, tuple) else tuple(x)
    base = p.C - p.kappa * _r2(coords, p.x0) * t ** (-2.0 * p.beta)
    return t ** (-p.alpha) * np.maximum(base, 0.0) ** (1.0 / (p.m - 1.0))


def zkb_support_radius(p: ZkbProfile, t: float) -> float:
    if not t > 0.0:
        raise ValueError("t must be positive")
    return math.sqrt(p.C / p.kappa) * t**p.beta


def zkb_time_for_peak(p: ZkbProfile, peak: float) -> float:
    """Time at which the profile maximum equals ``peak``."""
    return (p.peak_constant / peak) ** (1.0 / p.alpha)


def zkb_field(mesh: BoxMesh, p: ZkbProfile, t: float) -> Field:
    if not mesh.contains_ball(p.x0, zkb_support_radius(p, t)):
        raise ValueError("profile support leaves the box")
    return Field(mesh, zkb_eval(p, mesh.centers(), t), t)


# -- mollified deltas ---------------------------------------------------------------


def _bump(r, width, shape):
    s = np.clip(r / width, 0.0, 1.0)
    if shape == "cap":
        return 1.0 - s**2
    if shape == "cosine":
        return np.cos(0.5 * np.pi * s) ** 2
    raise ValueError(f"unknown bump shape {shape!r}")


def delta_like(mesh: BoxMesh, x0, width: float, mass: float, shape: str = "cap") -> Field:
    """Compact bump of radius ``width`` around ``x0`` rescaled to discrete mass ``mass``."""
    x0 = tuple(float(c) for c in np.atleast_1d(x0))
    if width < 2.0 * mesh.max_h:
        raise ValueError(f"width {width} below two cells ({2 * mesh.max_h})")
    if not mesh.contains_ball(x0, width):
        raise ValueError("bump support would touch the boundary")
    r = np.sqrt(_r2(mesh.centers(), x0))
    vals = np.where(r < width, _bump(r, width, shape), 0.0)
    raw = mesh.cell_volume * vals.sum()
    if raw <= 0.0:
        raise ValueError("bump covers no cell centre")
    return Field(mesh, vals * (mass / raw), 0.0)


def odd_bump(mesh: BoxMesh, x0, width: float, mass: float, shape: str = "cap") -> Field:
    """Positive bump at x0 minus its mirror image through the box centre; zero mean."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    centre = np.asarray(mesh.origins) + 0.5 * np.asarray(mesh.extents)
    plus = delta_like(mesh, x0, width, mass, shape)
    minus = delta_like(mesh, 2.0 * centre - x0, width, mass, shape)
    vals = plus.values - minus.values
    return Field(mesh, vals - vals.mean(), 0.0)


# -- glued subsolution datum and rescalings ---------------------------------------------


def glued_datum(mesh: BoxMesh, p_star: ZkbProfile, p_ell: ZkbProfile, tau: float, t0: float) -> Field:
    """Cellwise max of p_star at time tau and p_ell at time tau + t0."""
    if not (tau > 0.0 and t0 > 0.0):
        raise ValueError("tau and t0 must be positive")
    for p, t in ((p_star, tau), (p_ell, tau + t0)):
        if not mesh.contains_ball(p.x0, zkb_support_radius(p, t)):
            raise ValueError("glued datum support leaves the box")
    coords = mesh.centers()
    vals = np.maximum(zkb_eval(p_star, coords, tau), zkb_eval(p_ell, coords, tau + t0))
    return Field(mesh, vals, 0.0)


def parabolic_rescale(func, lam: float, tau: float, x0):
    """(x, t) -> func(x0 + lam (x - x0), lam^2 (t + tau)).

    ``func`` takes a tuple of coordinate arrays and a time.
    """
    if not lam > 0.0 or tau < 0.0:
        raise ValueError("need lam > 0 and tau >= 0")
    x0 = tuple(np.atleast_1d(x0))

    def rescaled(x, t):
        y = tuple(c0 + lam * (np.asarray(c) - c0) for c, c0 in zip(x, x0))
        return func(y, lam**2 * (t + tau))

    return rescaled


def mass_rescale(func, alpha: float, N: int, x0):
    """(x, t) -> func(x0 + alpha^(-1/N) (x - x0), alpha^(-2/N) t); multiplies mass by alpha."""
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    x0 = tuple(np.atleast_1d(x0))
    s = alpha ** (-1.0 / N)

    def rescaled(x, t):
        y = tuple(c0 + s * (np.asarray(c) - c0) for c, c0 in zip(x, x0))
        return func(y, s**2 * t)

    return rescaled


