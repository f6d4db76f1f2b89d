"""Diffusion nonlinearities phi, their derivatives and primitives.

Two families are supported:

* ``PurePower``: phi(u) = scale * |u|^(m-1) u
* ``TwoPower``: phi(u) = |u|^(m1-1) u for |u| <= a, |u|^(m2-1) u for |u| >= b,
  joined on (a, b) by a monotone cubic bridge, all times ``scale``.

Every model is odd in u, so only the positive half-line is stored.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np


class Kind(str, enum.Enum):
    PURE_POWER = "pure_power"
    TWO_POWER = "two_power"


class ConstructionError(ValueError):
    """No strictly increasing bridge exists for the requested joins."""


@dataclass(frozen=True)
class GrowthReport:
    c1_best: float
    c2_best: float
    ok: bool


def _check_finite(u):
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("phi evaluated at a non-finite argument")
    return u


def _hermite_coeffs(a, b, fa, fb, da, db):
    """Power-basis coefficients of the cubic in s = u - a, lowest order first."""
    h = b - a
    c0 = fa
    c1 = da
    c2 = (3.0 * (fb - fa) / h - 2.0 * da - db) / h
    c3 = (da + db - 2.0 * (fb - fa) / h) / h**2
    return (c0, c1, c2, c3)


def _cubic_is_increasing(coeffs, h, n=2001):
    c0, c1, c2, c3 = coeffs
    s = np.linspace(0.0, h, n)
    d = c1 + 2.0 * c2 * s + 3.0 * c3 * s**2
    # interior critical point of the derivative (a parabola in s)
    if c3 != 0.0:
        s_star = -c2 / (3.0 * c3)
        if 0.0 < s_star < h:
            d = np.append(d, c1 + 2.0 * c2 * s_star + 3.0 * c3 * s_star**2)
    return bool(np.all(d > 0.0))


@dataclass(frozen=True)
class Nonlinearity:
    kind: Kind
    m1: float
    m2: float
    a: float = 0.5
    b: float = 2.0
    scale: float = 1.0
    bridge: tuple = field(default=(), repr=False)
    smooth: bool = True  # False only when the bridge derivatives had to be clamped

    @property
    def m(self) -> float:
        if self.kind is not Kind.PURE_POWER:
            raise AttributeError("m is defined for PurePower models only")
        return self.m1

    # -- evaluation on |u| >= 0 (unscaled) ---------------------------------

    def _region_masks(self, x):
        if self.kind is Kind.PURE_POWER:
            return x >= 0, np.zeros_like(x, dtype=bool), np.zeros_like(x, dtype=bool)
        low = x <= self.a
        high = x >= self.b
        mid = ~(low | high)
        return low, mid, high

    def _phi_abs(self, x):
        out = np.empty_like(x)
        low, mid, high = self._region_masks(x)
        out[low] = x[low] ** self.m1
        out[high] = x[high] ** self.m2
        if mid.any():
            c0, c1, c2, c3 = self.bridge
            s = x[mid] - self.a
            out[mid] = c0 + s * (c1 + s * (c2 + s * c3))
        return out

    def _dphi_abs(self, x):
        out = np.empty_like(x)
        low, mid, high = self._region_masks(x)
        out[low] = self.m1 * x[low] ** (self.m1 - 1.0)
        out[high] = self.m2 * x[high] ** (self.m2 - 1.0)
        if mid.any():
            _, c1, c2, c3 = self.bridge
            s = x[mid] - self.a
            out[mid] = c1 + s * (2.0 * c2 + 3.0 * c3 * s)
        return out

    def _bridge_integral(self, s):
        c0, c1, c2, c3 = self.bridge
        return s * (c0 + s * (c1 / 2.0 + s * (c2 / 3.0 + s * c3 / 4.0)))

    def _psi_abs(self, x):
        out = np.empty_like(x)
        low, mid, high = self._region_masks(x)
        out[low] = x[low] ** (self.m1 + 1.0) / (self.m1 + 1.0)
        if self.kind is Kind.TWO_POWER:
            psi_a = self.a ** (self.m1 + 1.0) / (self.m1 + 1.0)
            psi_b = psi_a + self._bridge_integral(self.b - self.a)
            out[mid] = psi_a + self._bridge_integral(x[mid] - self.a)
            out[high] = psi_b + (x[high] ** (self.m2 + 1.0) - self.b ** (self.m2 + 1.0)) / (
                self.m2 + 1.0
            )
        return out

    # -- public API ----------------------------------------------------------

    def phi(self, u):
        u = _check_finite(u)
        x = np.abs(np.atleast_1d(u))
        out = self.scale * np.sign(np.atleast_1d(u)) * self._phi_abs(x)
        return out.reshape(u.shape) if u.ndim else float(out[0])

    def phi_prime(self, u):
        u = _check_finite(u)
        x = np.abs(np.atleast_1d(u))
        out = self.scale * self._dphi_abs(x)
        return out.reshape(u.shape) if u.ndim else float(out[0])

    def psi(self, u):
        u = _check_finite(u)
        x = np.abs(np.atleast_1d(u))
        out = self.scale * self._psi_abs(x)
        return out.reshape(u.shape) if u.ndim else float(out[0])

    def joins(self) -> tuple:
        return () if self.kind is Kind.PURE_POWER else (self.a, self.b)

    def describe(self) -> dict:
        if self.kind is Kind.PURE_POWER:
            return {"kind": self.kind.value, "m": self.m1, "scale": self.scale}
        return {
            "kind": self.kind.value,
            "m1": self.m1,
            "m2": self.m2,
            "a": self.a,
            "b": self.b,
            "scale": self.scale,
        }


def pure_power(m: float, scale: float = 1.0) -> Nonlinearity:
    if not m > 1.0:
        raise ValueError(f"m must exceed 1, got {m}")
    if not scale > 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    return Nonlinearity(Kind.PURE_POWER, m1=float(m), m2=float(m), scale=float(scale))


def build_two_power(
    m1: float, m2: float, a: float = 0.5, b: float = 2.0, scale: float = 1.0
) -> Nonlinearity:
    """Splice |u|^m1 (small |u|) to |u|^m2 (large |u|) with a cubic Hermite bridge.

    The bridge matches values and slopes at ``a`` and ``b``. When the plain
    Hermite cubic is not increasing, the endpoint slopes are clamped with the
    Fritsch-Carlson limiter, which keeps monotonicity but gives up the C^1 joins.
    """
    if not (m1 > 1.0 and m2 > 1.0):
        raise ValueError(f"exponents must exceed 1, got m1={m1}, m2={m2}")
    if not (0.0 < a < b):
        raise ValueError(f"need 0 < a < b, got a={a}, b={b}")
    if not scale > 0.0:
        raise ValueError(f"scale must be positive, got {scale}")

    fa, fb = a**m1, b**m2
    da, db = m1 * a ** (m1 - 1.0), m2 * b ** (m2 - 1.0)
    h = b - a
    secant = (fb - fa) / h
    if secant <= 0.0:
        raise ConstructionError(
            f"phi(a)={fa:g} >= phi(b)={fb:g}: no increasing bridge on [{a}, {b}]"
        )

    coeffs = _hermite_coeffs(a, b, fa, fb, da, db)
    smooth = True
    if not _cubic_is_increasing(coeffs, h):
        alpha, beta = da / secant, db / secant
        # strictly inside the Fritsch-Carlson circle alpha^2 + beta^2 <= 9
        r = np.hypot(alpha, beta)
        tau = min(1.0, 2.99 / r)
        da, db = tau * da, tau * db
        coeffs = _hermite_coeffs(a, b, fa, fb, da, db)
        if not _cubic_is_increasing(coeffs, h):
            raise ConstructionError(f"monotone bridge unobtainable on [{a}, {b}]")
        smooth = False
        warnings.warn(
            f"bridge slopes clamped on [{a}, {b}]; phi' is discontinuous at the joins",
            stacklevel=2,
        )

    return Nonlinearity(
        Kind.TWO_POWER,
        m1=float(m1),
        m2=float(m2),
        a=float(a),
        b=float(b),
        scale=float(scale),
        bridge=tuple(float(c) for c in coeffs),
        smooth=smooth,
    )


def verify_growth_conditions(
    nl, m1: float, m2: float, u_max: float = 10.0, n: int = 1000, floor: float = 1e-6
) -> GrowthReport:
    """Best constants c1, c2 with c1|u|^(m1-1) <= phi'(u) on |u| <= 1 and
    c2|u|^(m2-1) <= phi'(u) on 1 < |u| <= u_max, estimated by sampling.

    Sampling reaches down to |u| = 1e-8, so a ratio that decays to zero shows up
    as a tiny constant; the check passes only when both exceed ``floor``.
    ``nl`` only needs a vectorised ``phi_prime``.
    """
    if not u_max > 1.0:
        raise ValueError("u_max must exceed 1")
    if n < 100:
        raise ValueError("need at least 100 samples")
    small = np.unique(np.concatenate([np.geomspace(1e-8, 1.0, n), [0.5, 1.0]]))
    large = np.unique(np.concatenate([np.geomspace(1.0, u_max, n + 1)[1:], [min(2.0, u_max)]]))
    large = large[large > 1.0]
    joins = getattr(nl, "joins", lambda: ())()
    extra_small = [j for j in joins if 0.0 < j <= 1.0]
    extra_large = [j for j in joins if 1.0 < j <= u_max]
    small = np.unique(np.concatenate([small, extra_small]))
    large = np.unique(np.concatenate([large, extra_large]))

    def ratio(x, m):
        both = np.concatenate([x, -x])
        return np.asarray(nl.phi_prime(both), dtype=float) / np.abs(both) ** (m - 1.0)

    c1 = float(np.min(ratio(small, m1)))
    c2 = float(np.min(ratio(large, m2)))
    return GrowthReport(c1_best=c1, c2_best=c2, ok=bool(c1 > floor and c2 > floor))
