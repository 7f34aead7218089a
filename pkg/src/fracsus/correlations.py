"""Correlation coefficients a_j = int phi(f^j x) psi(x) dx and their decay.

Two routes compute each coefficient: direct quadrature of the pulled-back
observable (accurate while the oscillation of f^j is resolvable) and the
Ulam matrix route (psi projected onto bins by exact integration, evolved by
sparse matrix powers).  The geometric decay rate fitted on log|a_j| sets
the holomorphy-radius estimates downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .density import UlamOperator, cached_ulam
from .errors import (
    DomainError,
    FracsusValueError,
    InsufficientDataError,
    MethodError,
)
from .family import UnimodalFamily, beta_endpoint
from .fraccalc import AtomSum
from .quadrature import DEFAULT_SPEC, QuadratureSpec, SingularMark, build_mesh, integrate

__all__ = [
    "Observable",
    "CoefficientSequence",
    "DecayFit",
    "iterate_map",
    "monotone_breakpoints",
    "correlation_coefficient",
    "correlation_sequence",
    "decay_fit",
    "DEFAULT_J_SWITCH",
]

DEFAULT_J_SWITCH = 10
NOISE_FLOOR_REL = 1e-13


# --------------------------------------------------------------------------
# observables
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Observable:
    """Bounded observable on the dynamical interval.

    kinds: "constant" (value,), "polynomial" (ascending coefficients),
    "cosine" (omega, phase), "indicator" (lo, hi).
    """

    kind: str
    params: tuple[float, ...]
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in ("constant", "polynomial", "cosine", "indicator"):
            raise DomainError(f"unknown observable kind {self.kind!r}")
        if self.kind == "indicator" and (len(self.params) != 2 or self.params[0] >= self.params[1]):
            raise DomainError("indicator needs (lo, hi) with lo < hi")
        if self.kind == "cosine" and len(self.params) != 2:
            raise DomainError("cosine needs (omega, phase)")
        if self.kind == "constant" and len(self.params) != 1:
            raise DomainError("constant needs a single value")
        if not self.description:
            object.__setattr__(self, "description", f"{self.kind}{self.params}")

    @staticmethod
    def constant(value: float) -> "Observable":
        return Observable("constant", (value,))

    @staticmethod
    def polynomial(coefficients: Sequence[float]) -> "Observable":
        return Observable("polynomial", tuple(coefficients))

    @staticmethod
    def cosine(omega: float, phase: float = 0.0) -> "Observable":
        return Observable("cosine", (omega, phase))

    @staticmethod
    def indicator(lo: float, hi: float) -> "Observable":
        return Observable("indicator", (lo, hi))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.params[0])
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, self.params)
        if self.kind == "cosine":
            omega, phase = self.params
            return np.cos(omega * x + phase)
        lo, hi = self.params
        return ((x >= lo) & (x < hi)).astype(float)

    def __call__(self, x):
        return self.evaluate(x)

    def bin_averages(self, edges: np.ndarray) -> np.ndarray:
        """Exact cell averages over the bins delimited by ``edges``."""
        edges = np.asarray(edges, dtype=float)
        h = np.diff(edges)
        if self.kind == "constant":
            return np.full(edges.size - 1, self.params[0])
        if self.kind == "polynomial":
            anti = np.polynomial.polynomial.polyint(np.asarray(self.params))
            vals = np.polynomial.polynomial.polyval(edges, anti)
            return np.diff(vals) / h
        if self.kind == "cosine":
            omega, phase = self.params
            if omega == 0.0:
                return np.full(edges.size - 1, math.cos(phase))
            anti = np.sin(omega * edges + phase) / omega
            return np.diff(anti) / h
        lo, hi = self.params
        overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
        return overlap / h

    def oscillation_rate(self) -> float:
        """Phase-change rate per unit of image variation (for panel counts)."""
        if self.kind == "cosine":
            return abs(self.params[0])
        if self.kind == "polynomial":
            degree = len(self.params) - 1
            return max(degree, 1) * 1.6
        if self.kind == "indicator":
            return 2.0
        return 0.0


# --------------------------------------------------------------------------
# pulled-back observables phi o f^j
# --------------------------------------------------------------------------

def iterate_map(family: UnimodalFamily, j: int, x) -> np.ndarray:
    """f_{t0}^j(x), vectorized (the base map; both family kinds agree at
    offset 0)."""
    y = np.asarray(x, dtype=float).copy()
    for _ in range(j):
        y = family.t0 - y * y
    return y


_PIECES_CACHE: dict = {}


def monotone_breakpoints(family: UnimodalFamily, j: int) -> np.ndarray:
    """Critical points of f^j on the invariant interval: the union of the
    preimages of the critical point up to depth j-1, sorted."""
    key = (family.t0, j)
    if key in _PIECES_CACHE:
        return _PIECES_CACHE[key]
    beta = beta_endpoint(family.t0)
    pts = np.array([0.0])
    layer = np.array([0.0])
    for _ in range(j - 1):
        arg = family.t0 - layer
        arg = arg[arg >= 0.0]
        roots = np.sqrt(arg)
        layer = np.concatenate([roots, -roots])
        layer = layer[np.abs(layer) <= beta]
        pts = np.concatenate([pts, layer])
    pts = np.unique(pts)
    _PIECES_CACHE[key] = pts
    return pts


class _VariationTable:
    """Cumulative image variation of f^j along the interval, per monotone
    piece; supports fast queries for oscillation-aware panel counts."""

    def __init__(self, family: UnimodalFamily, j: int, lo: float, hi: float):
        self.family = family
        self.j = j
        inner = monotone_breakpoints(family, j) if j > 0 else np.array([])
        knots = np.concatenate([[lo], inner[(inner > lo) & (inner < hi)], [hi]])
        self.knots = knots
        self.values = iterate_map(family, j, knots)
        seg = np.abs(np.diff(self.values))
        self.cum = np.concatenate([[0.0], np.cumsum(seg)])

    def _v_at(self, x: float) -> float:
        i = int(np.clip(np.searchsorted(self.knots, x) - 1, 0, self.knots.size - 2))
        fx = float(iterate_map(self.family, self.j, np.array([x]))[0])
        return self.cum[i] + abs(fx - self.values[i])

    def variation(self, a: float, b: float) -> float:
        return abs(self._v_at(b) - self._v_at(a))


# --------------------------------------------------------------------------
# coefficients
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientSequence:
    """a_j, j = 0..J, with the method used at each index."""

    values: np.ndarray
    methods: tuple[str, ...]
    eta: float | None = None
    kind: str = "correlation"
    observable: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.size < 5:
            raise FracsusValueError("coefficient sequences need J >= 4")
        if not np.all(np.isfinite(vals)):
            raise FracsusValueError("coefficient values must be finite")

    @property
    def J(self) -> int:
        return self.values.size - 1


@dataclass(frozen=True)
class DecayFit:
    """Fitted geometric envelope |a_j| ~ C_hat * theta_hat^j."""

    theta_hat: float
    C_hat: float
    j_lo: int
    j_hi: int
    r2: float


def _psi_bins(psi, op: UlamOperator) -> np.ndarray:
    """Project psi onto the Ulam cells (densities, not masses)."""
    if hasattr(psi, "bin_masses"):
        return psi.bin_masses(op.edges) / op.cell_width
    raise DomainError(f"psi of type {type(psi).__name__} cannot be projected onto bins")


def _quadrature_coefficient(
    family: UnimodalFamily,
    phi: Observable,
    psi,
    j: int,
    spec: QuadratureSpec,
    obs_shift: float,
) -> float:
    beta = beta_endpoint(family.t0)
    lo, hi = -beta, beta
    marks = list(psi.marks()) if hasattr(psi, "marks") else []
    if j > 0:
        for b in monotone_breakpoints(family, j):
            if lo < b < hi:
                marks.append(SingularMark(float(b), None, None))
    table = _VariationTable(family, j, lo, hi)
    rate = phi.oscillation_rate()

    def subcount(a: float, b: float) -> int:
        if rate == 0.0:
            return 1
        waves = table.variation(a, b) * rate / (2.0 * math.pi)
        return max(1, int(math.ceil(waves / 1.5)))

    nodes, weights = build_mesh(lo, hi, marks, spec, subcount)
    vals = phi.evaluate(iterate_map(family, j, nodes + obs_shift)) * psi.evaluate(nodes)
    return integrate(vals, weights)


def correlation_coefficient(
    family: UnimodalFamily,
    phi: Observable,
    psi,
    j: int,
    spec: QuadratureSpec = DEFAULT_SPEC,
    method: str = "quadrature",
    j_switch: int = DEFAULT_J_SWITCH,
    n_bins: int = 4096,
    ulam: UlamOperator | None = None,
    obs_shift: float = 0.0,
) -> float:
    """One correlation coefficient int phi(f^j (x + shift)) psi(x) dx.

    method "quadrature" integrates directly on a mesh graded to psi's
    singularities and subdivided against the oscillation of f^j (only
    available for j <= j_switch); method "ulam" projects psi onto bins
    (atoms integrated exactly per bin), applies the matrix j times, and
    pairs with exact bin averages of phi.
    """
    if j < 0:
        raise FracsusValueError("j must be nonnegative")
    if method == "quadrature":
        if j > j_switch:
            raise MethodError(
                f"quadrature method limited to j <= {j_switch}; f^{j} oscillates beyond "
                "fixed-order panel resolution"
            )
        return _quadrature_coefficient(family, phi, psi, j, spec, obs_shift)
    if method != "ulam":
        raise DomainError(f"unknown method {method!r}")
    if obs_shift != 0.0:
        raise MethodError("observable shifts are only supported by the quadrature method")
    op = ulam if ulam is not None else cached_ulam(family, 0.0, n_bins)
    vec = _psi_bins(psi, op)
    for _ in range(j):
        vec = op.apply_density(vec)
    phi_avg = phi.bin_averages(op.edges)
    return float(np.dot(phi_avg, vec) * op.cell_width)


def correlation_sequence(
    family: UnimodalFamily,
    phi: Observable,
    psi,
    J: int,
    spec: QuadratureSpec = DEFAULT_SPEC,
    j_switch: int = DEFAULT_J_SWITCH,
    n_bins: int = 4096,
    ulam: UlamOperator | None = None,
    eta: float | None = None,
    kind: str = "correlation",
) -> CoefficientSequence:
    """a_j for j = 0..J: quadrature route up to j_switch, Ulam beyond."""
    if J < 4:
        raise FracsusValueError("need J >= 4")
    op = ulam if ulam is not None else cached_ulam(family, 0.0, n_bins)
    values = np.empty(J + 1)
    methods: list[str] = []
    vec = _psi_bins(psi, op)
    phi_avg = phi.bin_averages(op.edges)
    for j in range(J + 1):
        if j <= j_switch:
            values[j] = _quadrature_coefficient(family, phi, psi, j, spec, 0.0)
            methods.append("quadrature")
        else:
            values[j] = float(np.dot(phi_avg, vec) * op.cell_width)
            methods.append("ulam")
        if j < J:
            vec = op.apply_density(vec)
    return CoefficientSequence(
        values=values,
        methods=tuple(methods),
        eta=eta,
        kind=kind,
        observable=phi.description,
    )


def decay_fit(
    seq: CoefficientSequence | np.ndarray,
    window: tuple[int, int] | None = None,
    noise_floor_rel: float = NOISE_FLOOR_REL,
) -> DecayFit:
    """Least squares on log|a_j| over the window: theta_hat = exp(slope),
    C_hat = exp(intercept).  Points below the noise floor are excluded."""
    values = seq.values if isinstance(seq, CoefficientSequence) else np.asarray(seq, dtype=float)
    J = values.size - 1
    if window is None:
        window = (min(5, max(J - 5, 0)), max(J - 2, 1))
    j_lo, j_hi = window
    j_hi = min(j_hi, J)
    if j_hi <= j_lo:
        raise FracsusValueError(f"empty fit window {window}")
    js = np.arange(j_lo, j_hi + 1)
    mags = np.abs(values[js])
    floor = noise_floor_rel * float(np.max(np.abs(values))) if np.any(values != 0.0) else 0.0
    usable = mags > floor
    if np.count_nonzero(usable) < 5:
        raise InsufficientDataError(
            f"only {int(np.count_nonzero(usable))} usable points above the noise floor"
        )
    X = js[usable].astype(float)
    Y = np.log(mags[usable])
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(
        theta_hat=float(np.exp(slope)),
        C_hat=float(np.exp(intercept)),
        j_lo=int(j_lo),
        j_hi=int(j_hi),
        r2=r2,
    )
