"""Fractional calculus on power-law atoms and grid functions.

The algebra of truncated power atoms ``c * (sigma*(x-a))^beta`` is closed
under one-sided fractional integration and differentiation (Gamma-ratio
closed forms).  Everything outside that algebra (opposite sides, truncation
corrections, grid remainders) goes through singularity-aware quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln, gammasgn

from .errors import (
    DomainError,
    InsufficientDataError,
    SingularityError,
    UnsupportedSideError,
)
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    SingularMark,
    build_mesh,
    gauss_jacobi_panel,
    integrate,
)

__all__ = [
    "PowerAtom",
    "AtomSum",
    "GridFunction",
    "gamma_ratio",
    "beta_function",
    "frac_integral_atom",
    "marchaud_atom",
    "frac_integral_numeric",
    "marchaud_numeric",
    "marchaud_total_integral",
    "singularity_exponent_fit",
    "pinned_power_fit",
]

SIDE_NAMES = {"+": 1, "-": -1, "−": -1, 1: 1, -1: -1}


def _parse_side(side) -> int:
    try:
        return SIDE_NAMES[side]
    except (KeyError, TypeError):
        raise DomainError(f"unknown side {side!r}; expected '+' or '-'") from None


# --------------------------------------------------------------------------
# Gamma utilities
# --------------------------------------------------------------------------

def _is_gamma_pole(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def gamma_ratio(num: float, den: float) -> float:
    """Gamma(num) / Gamma(den) through log-Gamma (sign-aware)."""
    if not (math.isfinite(num) and math.isfinite(den)):
        raise DomainError("gamma_ratio arguments must be finite")
    if _is_gamma_pole(num) or _is_gamma_pole(den):
        raise DomainError(f"Gamma pole at ({num}, {den})")
    sign = gammasgn(num) * gammasgn(den)
    return float(sign * np.exp(gammaln(num) - gammaln(den)))


def beta_function(x: float, y: float) -> float:
    """B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)."""
    for v in (x, y):
        if _is_gamma_pole(v):
            raise DomainError(f"Gamma pole at {v}")
    if _is_gamma_pole(x + y):
        return 0.0
    sign = gammasgn(x) * gammasgn(y) * gammasgn(x + y)
    return float(sign * np.exp(gammaln(x) + gammaln(y) - gammaln(x + y)))


def reciprocal_gamma(x: float) -> float:
    """1 / Gamma(x); zero at the poles."""
    if _is_gamma_pole(x):
        return 0.0
    return gamma_ratio(1.0, x)


# --------------------------------------------------------------------------
# Domain types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerAtom:
    """Signed truncated power law
    c * 1_{lower_cut < sigma(x-a) < width} (sigma(x-a))^beta.

    The invariant-density decomposition only needs beta = -1/2 and +1/2 with
    lower_cut = 0; the algebra stays open to any locally integrable exponent
    beta > -1 (fractional integration raises beta by eta) and to inner
    truncations (lower_cut > 0 represents the far tail that a width
    truncation removes from an untruncated atom).
    """

    coefficient: float
    exponent: float
    anchor: float = 0.0
    side: int = 1
    width: float = math.inf
    lower_cut: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "side", _parse_side(self.side))
        if self.exponent <= -1.0:
            raise DomainError(f"atom exponent {self.exponent} <= -1 is not integrable")
        if not self.width > 0.0:
            raise DomainError("atom width must be positive")
        if not 0.0 <= self.lower_cut < self.width:
            raise DomainError("need 0 <= lower_cut < width")
        if not math.isfinite(self.anchor) or not math.isfinite(self.coefficient):
            raise DomainError("atom anchor/coefficient must be finite")

    @property
    def support(self) -> tuple[float, float]:
        if self.side > 0:
            return self.anchor + self.lower_cut, self.anchor + self.width
        return self.anchor - self.width, self.anchor - self.lower_cut

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = self.side * (x - self.anchor)
        out = np.zeros_like(d)
        mask = (d > self.lower_cut) & (d < self.width)
        if np.any(mask):
            out[mask] = self.coefficient * d[mask] ** self.exponent
        return out

    def mass(self) -> float:
        """Integral over the support (infinite for untruncated atoms)."""
        if math.isinf(self.width):
            return math.copysign(math.inf, self.coefficient) if self.coefficient else 0.0
        q = self.exponent + 1.0
        return self.coefficient * (self.width**q - self.lower_cut**q) / q

    def scaled(self, factor: float) -> "PowerAtom":
        return replace(self, coefficient=self.coefficient * factor)


@dataclass(frozen=True)
class GridFunction:
    """Uniform-cell function on (lo, hi): N cell values, linear interpolation
    between cell centers, flat up to the domain edges, zero outside."""

    lo: float
    hi: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 2:
            raise DomainError("GridFunction needs at least 2 values")
        if not np.all(np.isfinite(vals)):
            raise DomainError("GridFunction values must be finite")
        if not self.hi > self.lo:
            raise DomainError("GridFunction domain must be nondegenerate")

    @property
    def n_cells(self) -> int:
        return self.values.size

    @property
    def cell_width(self) -> float:
        return (self.hi - self.lo) / self.values.size

    @property
    def centers(self) -> np.ndarray:
        h = self.cell_width
        return self.lo + h * (np.arange(self.values.size) + 0.5)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.centers, self.values, left=self.values[0], right=self.values[-1])
        return np.where((x >= self.lo) & (x <= self.hi), out, 0.0)

    def integral(self) -> float:
        return float(np.sum(self.values) * self.cell_width)

    def cumulative(self, points) -> np.ndarray:
        """Exact integral of the interpolant from lo to each point."""
        pts = np.clip(np.asarray(points, dtype=float), self.lo, self.hi)
        knots = np.concatenate(([self.lo], self.centers, [self.hi]))
        vals = np.concatenate(([self.values[0]], self.values, [self.values[-1]]))
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(knots))))
        idx = np.clip(np.searchsorted(knots, pts, side="right") - 1, 0, knots.size - 2)
        t = pts - knots[idx]
        w = knots[idx + 1] - knots[idx]
        slope = (vals[idx + 1] - vals[idx]) / np.where(w > 0, w, 1.0)
        return cum[idx] + vals[idx] * t + 0.5 * slope * t * t


@dataclass(frozen=True)
class AtomSum:
    """Finite sum of power atoms plus an optional smooth grid remainder."""

    atoms: tuple[PowerAtom, ...] = ()
    smooth: GridFunction | None = None

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for atom in self.atoms:
            out += atom.evaluate(x)
        if self.smooth is not None:
            out += self.smooth.evaluate(x)
        return out

    def __call__(self, x):
        return self.evaluate(x)

    def mass(self) -> float:
        total = sum(a.mass() for a in self.atoms)
        if self.smooth is not None:
            total += self.smooth.integral()
        return total

    def support_hull(self) -> tuple[float, float]:
        los, his = [], []
        for a in self.atoms:
            lo, hi = a.support
            los.append(lo)
            his.append(hi)
        if self.smooth is not None:
            los.append(self.smooth.lo)
            his.append(self.smooth.hi)
        if not los:
            raise DomainError("empty AtomSum has no support")
        return min(los), max(his)

    def marks(self) -> list[SingularMark]:
        """Breakpoints with one-sided exponents, for quadrature meshes.

        Exponent 0.0 (jumps, truncation edges, domain ends) still requests
        panel grading toward the point; only the singular-free outer side of
        an anchor is left unmarked.
        """
        out: list[SingularMark] = []
        for a in self.atoms:
            if a.lower_cut == 0.0:
                if a.side > 0:
                    out.append(SingularMark(a.anchor, 0.0, a.exponent))
                else:
                    out.append(SingularMark(a.anchor, a.exponent, 0.0))
            else:
                inner = a.anchor + a.side * a.lower_cut
                out.append(SingularMark(inner, 0.0, 0.0))
            if math.isfinite(a.width):
                edge = a.anchor + a.side * a.width
                out.append(SingularMark(edge, 0.0, 0.0))
        if self.smooth is not None:
            out.append(SingularMark(self.smooth.lo, 0.0, 0.0))
            out.append(SingularMark(self.smooth.hi, 0.0, 0.0))
        return out

    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        """Exact integrals over the bins delimited by ``edges``.

        Atoms are integrated in closed form (the only sound way to project a
        nearly non-integrable spike onto a grid); the smooth part uses the
        exact integral of its interpolant.
        """
        edges = np.asarray(edges, dtype=float)
        masses = np.zeros(edges.size - 1)
        for a in self.atoms:
            d = a.side * (edges - a.anchor)
            d = np.clip(d, a.lower_cut, a.width if math.isfinite(a.width) else np.inf)
            anti = a.coefficient * d ** (a.exponent + 1.0) / (a.exponent + 1.0)
            masses += a.side * np.diff(anti)
        if self.smooth is not None:
            own = np.linspace(self.smooth.lo, self.smooth.hi, self.smooth.n_cells + 1)
            if own.size == edges.size and np.allclose(own, edges, atol=1e-12):
                # cell-average semantics: the grid's own cells carry exactly
                # value * width of mass
                masses += self.smooth.values * self.smooth.cell_width
            else:
                masses += np.diff(self.smooth.cumulative(edges))
        return masses

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for a in self.atoms:
            h.update(np.array([a.coefficient, a.exponent, a.anchor, a.side, a.width, a.lower_cut]).tobytes())
        if self.smooth is not None:
            h.update(np.array([self.smooth.lo, self.smooth.hi]).tobytes())
            h.update(self.smooth.values.tobytes())
        return h.hexdigest()


def _as_atomsum(g) -> AtomSum:
    if isinstance(g, AtomSum):
        return g
    if isinstance(g, GridFunction):
        return AtomSum(atoms=(), smooth=g)
    if isinstance(g, PowerAtom):
        return AtomSum(atoms=(g,))
    raise DomainError(f"expected AtomSum/GridFunction/PowerAtom, got {type(g).__name__}")


# --------------------------------------------------------------------------
# Closed forms on untruncated atoms
# --------------------------------------------------------------------------

def frac_integral_atom(atom: PowerAtom, eta: float) -> PowerAtom:
    """Same-side fractional integral of an untruncated atom.

    Raises the exponent by eta and multiplies the coefficient by
    Gamma(beta+1)/Gamma(beta+1+eta).
    """
    if math.isfinite(atom.width) or atom.lower_cut != 0.0:
        raise UnsupportedSideError("closed form requires an untruncated atom; use frac_integral_numeric")
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"fractional order eta={eta} outside [0, 1]")
    if eta == 0.0:
        return atom
    factor = gamma_ratio(atom.exponent + 1.0, atom.exponent + 1.0 + eta)
    return replace(atom, coefficient=atom.coefficient * factor, exponent=atom.exponent + eta)


def marchaud_atom(atom: PowerAtom, eta: float) -> PowerAtom:
    """Same-side Marchaud derivative of an untruncated atom (left inverse of
    frac_integral_atom): exponent beta - eta, coefficient times
    Gamma(beta+1)/Gamma(beta+1-eta)."""
    if math.isfinite(atom.width) or atom.lower_cut != 0.0:
        raise UnsupportedSideError("closed form requires an untruncated atom; use marchaud_numeric")
    if not 0.0 <= eta < min(1.0, atom.exponent + 1.0):
        raise DomainError(f"eta={eta} outside [0, min(1, beta+1)) for beta={atom.exponent}")
    if eta == 0.0:
        return atom
    factor = gamma_ratio(atom.exponent + 1.0, atom.exponent + 1.0 - eta)
    return replace(atom, coefficient=atom.coefficient * factor, exponent=atom.exponent - eta)


# --------------------------------------------------------------------------
# Numeric interval fractional integral
# --------------------------------------------------------------------------

def frac_integral_numeric(
    g,
    eta: float,
    side: str,
    x: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Interval fractional integral of g at x over its support hull.

    side "a+": (1/Gamma(eta)) int_lo^x g(t) (x-t)^(eta-1) dt
    side "b-": (1/Gamma(eta)) int_x^hi g(t) (t-x)^(eta-1) dt
    """
    if not 0.0 < eta < 1.0:
        raise DomainError(f"eta={eta} outside (0, 1)")
    if side not in ("a+", "b-"):
        raise DomainError(f"side must be 'a+' or 'b-', got {side!r}")
    gs = _as_atomsum(g)
    lo, hi = gs.support_hull()
    if not lo <= x <= hi:
        raise DomainError(f"x={x} outside the support hull [{lo}, {hi}]")

    for a in gs.atoms:
        if abs(a.anchor - x) < 1e-14 and a.exponent + eta <= 0.0:
            raise DomainError(
                f"non-integrable combination: atom exponent {a.exponent} + eta {eta} <= 0 at x"
            )

    if side == "a+":
        if not math.isfinite(lo):
            raise DomainError("side 'a+' requires a finite lower support bound")
        if x <= lo:
            return 0.0
        marks = gs.marks() + [SingularMark(x, eta - 1.0, None)]
        nodes, weights = build_mesh(lo, x, marks, spec)
        kern = (x - nodes) ** (eta - 1.0)
    else:
        if not math.isfinite(hi):
            raise DomainError("side 'b-' requires a finite upper support bound")
        if x >= hi:
            return 0.0
        marks = gs.marks() + [SingularMark(x, None, eta - 1.0)]
        nodes, weights = build_mesh(x, hi, marks, spec)
        kern = (nodes - x) ** (eta - 1.0)

    vals = gs.evaluate(nodes) * kern
    return integrate(vals, weights) * reciprocal_gamma(eta)


# --------------------------------------------------------------------------
# Numeric Marchaud derivatives
# --------------------------------------------------------------------------

def _side_token(side) -> int:
    if side in ("two-sided", "both", 0):
        return 0
    return _parse_side(side)


def _shifted_marks(gs: AtomSum, x: float, sigma: int) -> list[SingularMark]:
    """Marks of u -> g(x - sigma*u) on u > 0."""
    out = []
    for m in gs.marks():
        u_star = sigma * (x - m.point)
        if u_star <= 0.0:
            continue
        if sigma > 0:
            out.append(SingularMark(u_star, m.alpha_above, m.alpha_below))
        else:
            out.append(SingularMark(u_star, m.alpha_below, m.alpha_above))
    return out


def _far_tail(gs: AtomSum, x: float, sigma: int, eta: float, u_max: float, spec: QuadratureSpec) -> float:
    """int_{u_max}^inf g(x - sigma u) u^(-1-eta) du via v = u_max / u."""
    unbounded = [
        a
        for a in gs.atoms
        if not math.isfinite(a.width) and (a.side == -1 if sigma > 0 else a.side == 1)
    ]
    if not unbounded:
        return 0.0
    beta_max = max(a.exponent for a in unbounded)
    if beta_max >= 0.0:
        raise DomainError("Marchaud derivative of an unbounded function diverges")
    alpha0 = eta - 1.0 - beta_max
    nodes, weights = build_mesh(0.0, 1.0, [SingularMark(0.0, None, alpha0)], spec)
    y = x - sigma * (u_max / nodes)
    vals = gs.evaluate(y) * nodes ** (eta - 1.0)
    return integrate(vals, weights) * u_max ** (-eta)


def _marchaud_one_sided(gs: AtomSum, eta: float, sigma: int, x: float, spec: QuadratureSpec) -> float:
    lo, hi = gs.support_hull()
    for a in gs.atoms:
        if (
            a.exponent < 0.0
            and a.lower_cut == 0.0
            and abs(x - a.anchor) < 1e-13 * max(1.0, abs(a.anchor))
        ):
            raise SingularityError(f"Marchaud evaluation at singular anchor {a.anchor}")

    far_edge = lo if sigma > 0 else hi
    if math.isfinite(far_edge):
        u_needed = sigma * (x - far_edge)
        u_max = max(spec.tail_cutoff, u_needed + 1.0)
        tail_int = 0.0
    else:
        u_max = max(spec.tail_cutoff, abs(x) + spec.tail_cutoff)
        tail_int = _far_tail(gs, x, sigma, eta, u_max, spec)

    gx = float(gs.evaluate(np.array([x]))[0])

    marks = [
        SingularMark(0.0, None, -eta),
        SingularMark(min(spec.inner_cutoff, 0.5 * u_max), 0.0, 0.0),
    ]
    marks += _shifted_marks(gs, x, sigma)
    nodes, weights = build_mesh(0.0, u_max, marks, spec)
    vals = (gx - gs.evaluate(x - sigma * nodes)) * nodes ** (-1.0 - eta)
    body = integrate(vals, weights)

    boundary = gx * u_max ** (-eta) / eta
    return (eta * reciprocal_gamma(1.0 - eta)) * (body + boundary - tail_int)


def marchaud_numeric(
    g,
    eta: float,
    side,
    x: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Marchaud fractional derivative of g at x by difference-quotient
    quadrature: (eta/Gamma(1-eta)) int_0^inf (g(x) - g(x -/+ u)) u^(-1-eta) du,
    with graded panels near u = 0 and every translated breakpoint, and an
    analytic far-field beyond the support.

    side '+', '-' or 'two-sided' (the latter is (M_+ - M_-)/2).
    """
    if not 0.0 < eta < 0.5:
        raise DomainError(f"eta={eta} outside (0, 1/2)")
    gs = _as_atomsum(g)
    token = _side_token(side)
    if token == 0:
        plus = _marchaud_one_sided(gs, eta, +1, x, spec)
        minus = _marchaud_one_sided(gs, eta, -1, x, spec)
        return 0.5 * (plus - minus)
    return _marchaud_one_sided(gs, eta, token, x, spec)


def marchaud_total_integral(
    g,
    eta: float,
    domain: tuple[float, float] | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
    evaluator=None,
) -> float:
    """int_R M^eta[g] dx for compactly supported g: numeric integral over a
    wide domain plus the closed-form algebraic tails outside it.

    Vanishes identically in exact arithmetic (Fubini cancellation).  An
    alternative pointwise evaluator of the two-sided derivative may be
    supplied (defaults to marchaud_numeric on g itself).
    """
    gs = _as_atomsum(g)
    lo, hi = gs.support_hull()
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("total integral requires compact support")
    if domain is None:
        pad = 0.5 * (hi - lo) + 1.0
        domain = (lo - pad, hi + pad)
    big_lo, big_hi = domain
    if big_lo >= lo or big_hi <= hi:
        raise DomainError("integration domain must strictly contain the support")

    # shallow x-mesh: keeps nodes clear of the anchors and the cost linear
    xspec = QuadratureSpec(
        panel_order=12,
        grading_ratio=spec.grading_ratio,
        grading_levels=min(spec.grading_levels, 18),
        tail_cutoff=spec.tail_cutoff,
        inner_cutoff=spec.inner_cutoff,
    )

    xmarks = []
    for a in gs.atoms:
        alpha = min(a.exponent - eta, 0.0)
        xmarks.append(SingularMark(a.anchor, alpha, alpha))
        if math.isfinite(a.width):
            edge = a.anchor + a.side * a.width
            xmarks.append(SingularMark(edge, -eta, -eta))
    if gs.smooth is not None:
        xmarks.append(SingularMark(gs.smooth.lo, -eta, -eta))
        xmarks.append(SingularMark(gs.smooth.hi, -eta, -eta))

    if evaluator is None:
        uspec = QuadratureSpec(
            panel_order=12,
            grading_ratio=spec.grading_ratio,
            grading_levels=min(spec.grading_levels, 28),
            tail_cutoff=spec.tail_cutoff,
            inner_cutoff=spec.inner_cutoff,
        )
        evaluator = lambda xx: marchaud_numeric(gs, eta, "two-sided", xx, uspec)
    nodes, weights = build_mesh(big_lo, big_hi, xmarks, xspec)
    vals = np.array([evaluator(float(xx)) for xx in nodes])
    numeric = integrate(vals, weights)

    # outer tails: for x > big_hi only M_+ survives, for x < big_lo only M_-
    pref = 0.5 * reciprocal_gamma(1.0 - eta)
    g_marks = gs.marks()
    n2, w2 = build_mesh(lo, hi, g_marks, spec)
    gv = gs.evaluate(n2)
    tail_right = -pref * integrate(gv * (big_hi - n2) ** (-eta), w2)
    tail_left = pref * integrate(gv * (n2 - big_lo) ** (-eta), w2)
    return numeric + tail_right + tail_left


# --------------------------------------------------------------------------
# Log-log singularity diagnostics
# --------------------------------------------------------------------------

def singularity_exponent_fit(samples) -> tuple[float, float, float]:
    """Least-squares fit of log|value| against log(distance).

    samples: iterable of (distance, value) pairs, distances positive and
    spanning at least two decades.  Returns (exponent, amplitude, r2).
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("samples must be (distance, value) pairs")
    d = arr[:, 0]
    v = np.abs(arr[:, 1])
    if np.any(d <= 0.0):
        raise DomainError("distances must be positive")
    keep = v > 0.0
    d, v = d[keep], v[keep]
    if d.size < 8:
        raise InsufficientDataError(f"need >= 8 usable samples, got {d.size}")
    if d.max() / d.min() < 100.0:
        raise DomainError("distances must span at least two decades")
    X = np.log(d)
    Y = np.log(v)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(np.exp(intercept)), r2


def pinned_power_fit(
    distances: np.ndarray,
    values: np.ndarray,
    exponents: Sequence[float] = (-0.5, 0.5, 0.0),
) -> tuple[np.ndarray, float]:
    """Linear least squares of values against the basis d^e for pinned
    exponents e.  Returns (coefficients, r2)."""
    d = np.asarray(distances, dtype=float)
    v = np.asarray(values, dtype=float)
    if np.any(d <= 0.0):
        raise DomainError("distances must be positive")
    A = np.stack([d**e for e in exponents], axis=1)
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = v - A @ coef
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return coef, r2
