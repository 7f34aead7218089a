"""Unimodal map families: the quadratic maps t - x^2 and their real-analytic
one-parameter perturbations, with critical-orbit machinery.

Parameters are handled as offsets t from a base value t0 and clamped to a
window [t_min, t_max]; outside the window the map is frozen at the window
edge.  Critical orbits and derivative products are exponentially unstable,
so long orbits (K > 30) run in extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath as mp
import numpy as np

from .errors import (
    DegenerateOrbitError,
    DomainError,
    EscapeError,
    FracsusValueError,
)

__all__ = [
    "DirectionField",
    "UnimodalFamily",
    "CriticalOrbitData",
    "MTCertificate",
    "beta_endpoint",
    "clamp_parameter",
    "map_eval",
    "map_derivative",
    "critical_orbit",
    "ce_exponent",
    "ce_limit_estimate",
    "detect_mt",
    "misiurewicz_gap",
    "bisect_mt_parameter",
    "MT_BISECTION_BRACKET",
]

EXTENDED_PRECISION_K = 30
ESCAPE_SLACK = 1e-6
ESCAPE_RUN = 3

# bracket on which c_4(t) = c_3(t) has its unique root (the preperiodic
# parameter whose orbit lands on the positive fixed point after 3 steps)
MT_BISECTION_BRACKET = (1.5, 1.6)


@dataclass(frozen=True)
class DirectionField:
    """Named closed-form analytic perturbation direction X.

    kinds: "constant" (coefficients=(c,)), "polynomial" (ascending
    coefficients), "cosine" (coefficients=(amplitude, omega, phase) for
    amplitude*cos(omega*y + phase)).
    """

    kind: str
    coefficients: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.kind not in ("constant", "polynomial", "cosine"):
            raise DomainError(f"unknown direction kind {self.kind!r}")
        if self.kind == "constant" and len(self.coefficients) != 1:
            raise DomainError("constant direction takes one coefficient")
        if self.kind == "cosine" and len(self.coefficients) != 3:
            raise DomainError("cosine direction takes (amplitude, omega, phase)")
        if self.kind == "polynomial" and not self.coefficients:
            raise DomainError("polynomial direction needs coefficients")

    def value(self, y):
        if self.kind == "constant":
            return self.coefficients[0] * np.ones_like(np.asarray(y, dtype=float))
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(y, self.coefficients)
        amp, omega, phase = self.coefficients
        return amp * np.cos(omega * np.asarray(y, dtype=float) + phase)

    def derivative(self, y):
        if self.kind == "constant":
            return np.zeros_like(np.asarray(y, dtype=float))
        if self.kind == "polynomial":
            der = np.polynomial.polynomial.polyder(np.asarray(self.coefficients))
            return np.polynomial.polynomial.polyval(y, der)
        amp, omega, phase = self.coefficients
        return -amp * omega * np.sin(omega * np.asarray(y, dtype=float) + phase)

    def value_mp(self, y):
        if self.kind == "constant":
            return mp.mpf(self.coefficients[0])
        if self.kind == "polynomial":
            acc = mp.mpf(0)
            for c in reversed(self.coefficients):
                acc = acc * y + mp.mpf(c)
            return acc
        amp, omega, phase = self.coefficients
        return mp.mpf(amp) * mp.cos(mp.mpf(omega) * y + mp.mpf(phase))

    def derivative_mp(self, y):
        if self.kind == "constant":
            return mp.mpf(0)
        if self.kind == "polynomial":
            acc = mp.mpf(0)
            coeffs = [k * c for k, c in enumerate(self.coefficients)][1:]
            for c in reversed(coeffs):
                acc = acc * y + mp.mpf(c)
            return acc
        amp, omega, phase = self.coefficients
        return -mp.mpf(amp) * mp.mpf(omega) * mp.sin(mp.mpf(omega) * y + mp.mpf(phase))

    def describe(self) -> str:
        return f"{self.kind}{self.coefficients}"


UNIT_DIRECTION = DirectionField("constant", (1.0,))


@dataclass(frozen=True)
class UnimodalFamily:
    """A clamped one-parameter family around base parameter t0.

    kind "quadratic": f_{t0+t}(x) = (t0 + clamp(t)) - x^2.
    kind "generalized": f_{t0+t} = f_{t0} + clamp(t) * X(f_{t0}(.)) for a
    named analytic direction X (X = 1 recovers the quadratic family).

    The window must keep t0 + t_min above 1; the upper edge may reach past
    the orbit-admissible range because parameter shifts are also used at the
    function level, where no iteration happens (orbit routines detect escape
    on their own).
    """

    kind: str = "quadratic"
    t0: float = 2.0
    window: tuple[float, float] = (-0.05, 0.05)
    direction: DirectionField = UNIT_DIRECTION

    def __post_init__(self):
        if self.kind not in ("quadratic", "generalized"):
            raise DomainError(f"unknown family kind {self.kind!r}")
        t_min, t_max = self.window
        if not (t_min < 0.0 < t_max):
            raise DomainError("window must satisfy t_min < 0 < t_max")
        if not 1.0 < self.t0 <= 2.0:
            raise DomainError(f"base parameter t0={self.t0} outside (1, 2]")
        if not self.t0 + t_min > 1.0:
            raise DomainError("t0 + t_min must stay above 1")

    @property
    def t_min(self) -> float:
        return self.window[0]

    @property
    def t_max(self) -> float:
        return self.window[1]

    def interval_endpoint(self, t: float = 0.0) -> float:
        """beta such that [-beta, beta] is the invariant interval at offset t."""
        return beta_endpoint(self.t0 + clamp_parameter(self, t))

    def describe(self) -> str:
        if self.kind == "quadratic":
            return f"quadratic(t0={self.t0}, window={self.window})"
        return f"generalized(t0={self.t0}, window={self.window}, X={self.direction.describe()})"


def beta_endpoint(t: float) -> float:
    """Positive root of beta^2 - beta = t, the invariant-interval endpoint."""
    if 1.0 + 4.0 * t < 0.0:
        raise DomainError(f"no invariant interval for t={t}")
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t))


def clamp_parameter(family: UnimodalFamily, t: float) -> float:
    """Clamp the offset t to the family window (idempotent)."""
    if math.isnan(t):
        raise DomainError("parameter offset is NaN")
    return min(max(t, family.t_min), family.t_max)


def map_eval(family: UnimodalFamily, t: float, x):
    """f_{t0 + clamp(t)}(x); vectorized in x."""
    xv = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xv)) or not math.isfinite(t):
        raise DomainError("map_eval requires finite inputs")
    tt = clamp_parameter(family, t)
    base = family.t0 - xv * xv
    if family.kind == "quadratic":
        out = base + tt
    else:
        out = base + tt * family.direction.value(base)
    return float(out) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


def map_derivative(family: UnimodalFamily, t: float, x):
    """Spatial derivative of f_{t0 + clamp(t)} at x; -2x for the quadratic."""
    xv = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xv)) or not math.isfinite(t):
        raise DomainError("map_derivative requires finite inputs")
    tt = clamp_parameter(family, t)
    if family.kind == "quadratic":
        out = -2.0 * xv
    else:
        base = family.t0 - xv * xv
        out = -2.0 * xv * (1.0 + tt * family.direction.derivative(base))
    return float(out) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


@dataclass(frozen=True)
class CriticalOrbitData:
    """Post-critical orbit with derivative products along it.

    orbit[k] = c_k = f^k(0) for k = 0..K; derivatives[k-1] = D_k with
    D_1 = 1 and D_{k+1} = D_k * f'(c_k); signs[k-1] = sgn(D_k).
    log2_abs_derivatives carries log2|D_k| for overflow-free products.
    """

    orbit: np.ndarray
    derivatives: np.ndarray
    signs: np.ndarray
    log2_abs_derivatives: np.ndarray
    length: int

    def anchor_points(self) -> np.ndarray:
        """Post-critical points c_1..c_K."""
        return self.orbit[1:]


def _orbit_float(family: UnimodalFamily, t: float, K: int):
    tt = clamp_parameter(family, t)
    beta = beta_endpoint(family.t0 + tt) if family.kind == "quadratic" else family.interval_endpoint(t)
    limit = beta + ESCAPE_SLACK
    c = [0.0]
    d_log2 = [0.0]
    d_sign = [1]
    x = 0.0
    outside = 0
    for k in range(K):
        x = map_eval(family, tt, x)
        c.append(x)
        outside = outside + 1 if abs(x) > limit else 0
        if outside >= ESCAPE_RUN:
            raise EscapeError(
                f"orbit escaped |x|={abs(x):.6g} > {limit:.6g} at step {k + 1} (t0+t={family.t0 + tt})"
            )
        if k < K - 1:
            der = map_derivative(family, tt, x)
            if der == 0.0:
                raise DegenerateOrbitError(f"derivative vanished at orbit point c_{k + 1}={x}")
            d_log2.append(d_log2[-1] + math.log2(abs(der)))
            d_sign.append(d_sign[-1] * (1 if der > 0 else -1))
    return np.array(c), np.array(d_log2), np.array(d_sign, dtype=int)


def _orbit_extended(family: UnimodalFamily, t: float, K: int):
    tt = clamp_parameter(family, t)
    beta = beta_endpoint(family.t0 + tt) if family.kind == "quadratic" else family.interval_endpoint(t)
    limit = beta + ESCAPE_SLACK
    dps = max(30, int(0.62 * K) + 20)
    with mp.workdps(dps):
        t0 = mp.mpf(family.t0)
        ttm = mp.mpf(tt)
        x = mp.mpf(0)
        c = [0.0]
        d_log2 = [0.0]
        d_sign = [1]
        acc_log2 = mp.mpf(0)
        outside = 0
        for k in range(K):
            base = t0 - x * x
            if family.kind == "quadratic":
                x = base + ttm
            else:
                x = base + ttm * family.direction.value_mp(base)
            c.append(float(x))
            outside = outside + 1 if abs(x) > limit else 0
            if outside >= ESCAPE_RUN:
                raise EscapeError(
                    f"orbit escaped |x|={float(abs(x)):.6g} > {limit:.6g} at step {k + 1}"
                )
            if k < K - 1:
                if family.kind == "quadratic":
                    der = -2 * x
                else:
                    der = -2 * x * (1 + ttm * family.direction.derivative_mp(t0 - x * x))
                if der == 0:
                    raise DegenerateOrbitError(f"derivative vanished at orbit point c_{k + 1}")
                acc_log2 += mp.log(abs(der)) / mp.log(2)
                d_log2.append(float(acc_log2))
                d_sign.append(d_sign[-1] * (1 if der > 0 else -1))
    return np.array(c), np.array(d_log2), np.array(d_sign, dtype=int)


def critical_orbit(family: UnimodalFamily, t: float, K: int) -> CriticalOrbitData:
    """Orbit of the critical point 0 with derivative products D_k.

    Uses extended precision beyond K = 30 because roundoff grows like the
    derivative product itself.
    """
    if K < 1:
        raise FracsusValueError(f"orbit length K={K} must be >= 1")
    if K > EXTENDED_PRECISION_K:
        c, d_log2, d_sign = _orbit_extended(family, t, K)
    else:
        c, d_log2, d_sign = _orbit_float(family, t, K)
    with np.errstate(over="ignore"):
        derivs = d_sign * np.exp2(d_log2)
    return CriticalOrbitData(
        orbit=c,
        derivatives=derivs,
        signs=d_sign.copy(),
        log2_abs_derivatives=d_log2,
        length=K,
    )


def ce_exponent(family: UnimodalFamily, t: float, K: int):
    """Collet-Eckmann growth estimate lambda_hat = |D_K|^(1/(K-1)) together
    with the per-step sequence |D_k|^(1/(k-1)), k = 2..K.

    lambda_hat > 1 signals exponential derivative growth along the
    post-critical orbit; the caller does the comparison.
    """
    if K < 2:
        raise FracsusValueError(f"ce_exponent needs K >= 2, got {K}")
    data = critical_orbit(family, t, K)
    ks = np.arange(2, K + 1)
    per_step = np.exp2(data.log2_abs_derivatives[ks - 1] / (ks - 1))
    lam_hat = float(per_step[-1])
    return lam_hat, per_step


def ce_limit_estimate(per_step: Sequence[float], tail_fraction: float = 0.5) -> float:
    """Extrapolate the limit of |D_k|^(1/(k-1)) as k grows.

    log of the per-step sequence is affine in 1/(k-1) once the orbit settles
    onto its asymptotic cycle structure, so a linear fit in 1/(k-1) over the
    tail recovers the limit to high accuracy at modest K.
    """
    seq = np.asarray(per_step, dtype=float)
    if seq.size < 4:
        raise FracsusValueError("need at least 4 per-step values to extrapolate")
    ks = np.arange(2, seq.size + 2)
    start = int(seq.size * (1.0 - tail_fraction))
    xs = 1.0 / (ks[start:] - 1.0)
    ys = np.log(seq[start:])
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(np.exp(intercept))


@dataclass(frozen=True)
class MTCertificate:
    """Certificate that the orbit is preperiodic onto a hyperbolic cycle."""

    preperiod: int
    period: int
    multiplier: float
    residual: float


def detect_mt(family: UnimodalFamily, t: float, K: int, tol: float = 1e-9) -> MTCertificate | None:
    """Scan the orbit for a recurrence c_l ~ c_{l+p} with cycle multiplier
    above 1; smallest preperiod wins, then smallest period."""
    if tol <= 0.0:
        raise FracsusValueError("tolerance must be positive")
    data = critical_orbit(family, t, K)
    c = data.orbit
    log2d = data.log2_abs_derivatives
    for ell in range(1, K):
        for p in range(1, K - ell + 1):
            residual = abs(c[ell] - c[ell + p])
            if residual <= tol:
                log2_mult = log2d[ell + p - 1] - log2d[ell - 1]
                multiplier = float(np.exp2(log2_mult))
                if multiplier > 1.0:
                    return MTCertificate(
                        preperiod=ell, period=p, multiplier=multiplier, residual=residual
                    )
    return None


def misiurewicz_gap(data: CriticalOrbitData) -> float:
    """Distance of the post-critical set {c_k : k >= 1} to the critical point."""
    if data.length < 1:
        raise FracsusValueError("empty orbit")
    return float(np.min(np.abs(data.orbit[1:])))


def bisect_mt_parameter(
    lo: float = MT_BISECTION_BRACKET[0],
    hi: float = MT_BISECTION_BRACKET[1],
    land: int = 4,
    on: int = 3,
    tol: float = 1e-14,
) -> float:
    """Bisection for the parameter where c_land(t) = c_on(t).

    With the defaults this is the preperiodic parameter in (1.5, 1.6) whose
    critical orbit lands on the positive fixed point after three steps.
    """

    def h(t: float) -> float:
        x = 0.0
        vals = []
        for _ in range(max(land, on)):
            x = t - x * x
            vals.append(x)
        return vals[land - 1] - vals[on - 1]

    f_lo, f_hi = h(lo), h(hi)
    if f_lo * f_hi > 0.0:
        raise DomainError(f"no sign change for c_{land} - c_{on} on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = h(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)
