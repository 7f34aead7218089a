"""Composite Gauss-Legendre / Gauss-Jacobi quadrature on graded meshes.

All integrals in this package reduce to dot products ``weights @ f(nodes)``
assembled here.  Power-law endpoint behaviour ``(t - a)^alpha`` with
``alpha > -1`` is handled by grading panels geometrically toward the
singular point and closing the mesh with a single Gauss-Jacobi sliver whose
weights absorb the algebraic factor, so integrands are always evaluated at
strictly interior nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import DomainError

__all__ = [
    "QuadratureSpec",
    "SingularMark",
    "build_mesh",
    "integrate",
    "integrate_function",
    "gauss_legendre_panel",
    "gauss_jacobi_panel",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs for the graded composite quadrature.

    panel_order      Gauss points per panel.
    grading_ratio    geometric ratio of successive panel widths toward a
                     singular endpoint (in (0, 1)).
    grading_levels   number of graded panels per singular endpoint.
    tail_cutoff      floor for the Marchaud far-field cutoff U_max; the
                     effective cutoff never falls below the distance needed
                     to exhaust a compact support.
    inner_cutoff     scale delta separating the graded difference-quotient
                     region from standard panels in Marchaud integrals.
    """

    panel_order: int = 16
    grading_ratio: float = 0.5
    grading_levels: int = 48
    tail_cutoff: float = 8.0
    inner_cutoff: float = 1e-6

    def __post_init__(self):
        if self.panel_order < 4:
            raise DomainError("panel_order must be >= 4")
        if not 0.0 < self.grading_ratio < 1.0:
            raise DomainError("grading_ratio must lie in (0, 1)")
        if self.grading_levels < 1:
            raise DomainError("grading_levels must be >= 1")
        if self.inner_cutoff <= 0.0:
            raise DomainError("inner_cutoff must be positive")
        if self.tail_cutoff <= self.inner_cutoff:
            raise DomainError("tail_cutoff must exceed inner_cutoff")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class SingularMark:
    """A breakpoint of the integrand with known one-sided exponents.

    ``alpha_below``/``alpha_above`` describe the algebraic behaviour
    ``|t - point|^alpha`` on each side; ``None`` means the integrand is
    smooth there (the mesh still splits at the point, so jump
    discontinuities are safe).  Exponents must exceed -1.
    """

    point: float
    alpha_below: float | None = None
    alpha_above: float | None = None


@lru_cache(maxsize=64)
def _gl_rule(n: int):
    x, w = roots_legendre(n)
    return x, w


@lru_cache(maxsize=256)
def _gj_rule(n: int, alpha: float):
    # weight (1 + x)^alpha on [-1, 1]: singular factor at the left endpoint
    x, w = roots_jacobi(n, 0.0, alpha)
    return x, w


def gauss_legendre_panel(a: float, b: float, n: int):
    """Nodes/weights integrating smooth f over [a, b]."""
    x, w = _gl_rule(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_jacobi_panel(a: float, b: float, n: int, alpha: float, at_lo: bool):
    """Nodes/weights integrating f ~ |t - e|^alpha over [a, b].

    The algebraic factor at the endpoint e (a if ``at_lo`` else b) is folded
    into the weights, so the raw f is evaluated at the returned nodes.
    """
    if alpha <= -1.0:
        raise DomainError(f"endpoint exponent {alpha} is not integrable")
    if alpha == 0.0:
        return gauss_legendre_panel(a, b, n)
    x, w = _gj_rule(n, alpha)
    half = 0.5 * (b - a)
    if at_lo:
        nodes = a + half * (x + 1.0)
        dist = nodes - a
    else:
        nodes = b - half * (x + 1.0)
        dist = b - nodes
    weights = (half ** (1.0 + alpha)) * w * dist ** (-alpha)
    return nodes, weights


def _graded_breaks(a: float, b: float, toward_lo: bool, spec: QuadratureSpec):
    """Geometric panel boundaries over [a, b] graded toward one endpoint.

    The ladder stops once panels reach ~1e-8 of the singular endpoint's
    magnitude: below that scale, node coordinates lose relative precision
    against the endpoint, while the closing Gauss-Jacobi sliver already
    integrates the remaining mass to higher order in the sliver width.
    """
    width = b - a
    point = a if toward_lo else b
    min_width = max(1e-8 * abs(point), 1e-300)
    ratios = spec.grading_ratio ** np.arange(spec.grading_levels + 1)
    ratios = ratios[width * ratios > min_width]
    if ratios.size < 2:
        ratios = np.array([1.0, spec.grading_ratio])
    if toward_lo:
        pts = a + width * ratios[::-1]
        return np.concatenate(([a], pts))
    pts = b - width * ratios
    return np.concatenate((pts, [b]))


def _panel_block(lo_arr, hi_arr, n: int):
    """Vectorized GL nodes/weights for a batch of panels."""
    x, w = _gl_rule(n)
    half = 0.5 * (hi_arr - lo_arr)
    mid = 0.5 * (hi_arr + lo_arr)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def _segment_mesh(a, b, alpha_lo, alpha_hi, spec, subcount):
    """Mesh for one elementary interval with at most one singular endpoint.

    Both endpoints singular -> split at the midpoint and recurse.
    """
    if a >= b:
        return [], []
    if alpha_lo is not None and alpha_hi is not None:
        mid = 0.5 * (a + b)
        xs1, ws1 = _segment_mesh(a, mid, alpha_lo, None, spec, subcount)
        xs2, ws2 = _segment_mesh(mid, b, None, alpha_hi, spec, subcount)
        return xs1 + xs2, ws1 + ws2

    n = spec.panel_order
    xs: list[np.ndarray] = []
    ws: list[np.ndarray] = []

    if alpha_lo is None and alpha_hi is None:
        pieces = max(1, int(subcount(a, b)))
        edges = np.linspace(a, b, pieces + 1)
        x, w = _panel_block(edges[:-1], edges[1:], n)
        return [x], [w]

    toward_lo = alpha_lo is not None
    alpha = alpha_lo if toward_lo else alpha_hi
    breaks = _graded_breaks(a, b, toward_lo, spec)

    # innermost sliver: Gauss-Jacobi with the known exponent
    if toward_lo:
        sx, sw = gauss_jacobi_panel(breaks[0], breaks[1], n, alpha, at_lo=True)
        body = breaks[1:]
    else:
        sx, sw = gauss_jacobi_panel(breaks[-2], breaks[-1], n, alpha, at_lo=False)
        body = breaks[:-1]
    xs.append(sx)
    ws.append(sw)

    lo_arr = body[:-1]
    hi_arr = body[1:]
    counts = np.array([max(1, int(subcount(lo, hi))) for lo, hi in zip(lo_arr, hi_arr)])
    if np.all(counts == 1):
        x, w = _panel_block(lo_arr, hi_arr, n)
        xs.append(x)
        ws.append(w)
    else:
        for lo, hi, c in zip(lo_arr, hi_arr, counts):
            edges = np.linspace(lo, hi, c + 1)
            x, w = _panel_block(edges[:-1], edges[1:], n)
            xs.append(x)
            ws.append(w)
    return xs, ws


def build_mesh(
    lo: float,
    hi: float,
    marks: Sequence[SingularMark] = (),
    spec: QuadratureSpec = DEFAULT_SPEC,
    subcount: Callable[[float, float], int] | None = None,
):
    """Assemble nodes/weights over [lo, hi] honouring singular marks.

    Marks outside (lo, hi) are dropped except that marks sitting exactly on
    an endpoint contribute their inward-facing exponent.  ``subcount(a, b)``
    may request extra uniform subdivisions of smooth panels (used for
    oscillatory factors).
    """
    if not hi > lo:
        raise DomainError(f"empty integration interval [{lo}, {hi}]")
    if subcount is None:
        subcount = lambda a, b: 1

    scale = max(abs(lo), abs(hi), hi - lo)
    tol = 1e-14 * scale

    pts: list[SingularMark] = []
    alpha_at_lo: float | None = None
    alpha_at_hi: float | None = None
    for m in sorted(marks, key=lambda m: m.point):
        if m.point <= lo + tol:
            if abs(m.point - lo) <= tol and m.alpha_above is not None:
                alpha_at_lo = _merge_alpha(alpha_at_lo, m.alpha_above)
            continue
        if m.point >= hi - tol:
            if abs(m.point - hi) <= tol and m.alpha_below is not None:
                alpha_at_hi = _merge_alpha(alpha_at_hi, m.alpha_below)
            continue
        if pts and abs(m.point - pts[-1].point) <= tol:
            last = pts[-1]
            pts[-1] = SingularMark(
                last.point,
                _merge_alpha(last.alpha_below, m.alpha_below),
                _merge_alpha(last.alpha_above, m.alpha_above),
            )
        else:
            pts.append(m)
    cut = [lo] + [m.point for m in pts] + [hi]
    alpha_above = [alpha_at_lo] + [m.alpha_above for m in pts]
    alpha_below = [m.alpha_below for m in pts] + [alpha_at_hi]

    xs: list[np.ndarray] = []
    ws: list[np.ndarray] = []
    for i in range(len(cut) - 1):
        sx, sw = _segment_mesh(cut[i], cut[i + 1], alpha_above[i], alpha_below[i], spec, subcount)
        xs.extend(sx)
        ws.extend(sw)
    return np.concatenate(xs), np.concatenate(ws)


def _merge_alpha(a: float | None, b: float | None):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def integrate(f_values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.dot(weights, f_values))


def integrate_function(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    marks: Sequence[SingularMark] = (),
    spec: QuadratureSpec = DEFAULT_SPEC,
    subcount: Callable[[float, float], int] | None = None,
) -> float:
    """Integrate a vectorized callable over [lo, hi]."""
    nodes, weights = build_mesh(lo, hi, marks, spec, subcount)
    return integrate(np.asarray(f(nodes), dtype=float), weights)
