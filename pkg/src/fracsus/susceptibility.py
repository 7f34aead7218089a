"""The three pre-threshold fractional susceptibility coefficient families.

* response: a_j = - int_I phi(f^j x) M^eta[rho](x) dx (two-sided Marchaud
  in space of the invariant density, leading minus sign included);
* frozen:  a_j = + int_I phi(f^j x) kappa(x) dx where kappa is the
  two-sided Marchaud derivative in the parameter of t -> L_{t0+clamp(t)} rho
  at t = 0;
* semifreddo: the same t-kernel but integrated only over a finite union of
  parameter intervals Omega, in the Fubini order (correlate per t-node,
  then integrate against sgn(t)|t|^{-1-eta} with prefactor eta/(2 Gamma(1-eta))).

Clamping makes every t-integral global: contributions beyond the window
collapse to closed-form edge terms of the frozen map.  The shift identity
L_{t0} g(x) = L_{t0+t} g(x + t X(x-ish)) turns parameter shifts into
arguments shifts, which is both the fast path and a cross-checkable one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .correlations import (
    DEFAULT_J_SWITCH,
    CoefficientSequence,
    DecayFit,
    Observable,
    correlation_sequence,
    decay_fit,
    iterate_map,
    monotone_breakpoints,
    _VariationTable,
)
from .density import (
    DensityModel,
    UlamOperator,
    _h_inverse,
    cached_ulam,
    density_marchaud_marks,
    marchaud_of_density,
)
from .errors import (
    DomainError,
    FracsusValueError,
    InsufficientDataError,
    SingularityError,
)
from .family import UnimodalFamily, beta_endpoint, clamp_parameter
from .fraccalc import AtomSum, PowerAtom, gamma_ratio, pinned_power_fit, reciprocal_gamma
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    SingularMark,
    build_mesh,
    gauss_legendre_panel,
    integrate,
)

__all__ = [
    "OmegaSet",
    "SusceptibilityRequest",
    "SeriesEvaluation",
    "RadiusEstimate",
    "TabulatedKernel",
    "marchaud_density_kernel",
    "frozen_kernel",
    "frozen_density_kernel",
    "response_coefficients",
    "frozen_coefficients",
    "semifreddo_coefficients",
    "susceptibility_coefficients",
    "evaluate_series",
    "radius_estimate",
]


# --------------------------------------------------------------------------
# request plumbing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OmegaSet:
    """Finite union of disjoint, ordered parameter intervals (offsets)."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        for a, b in ivs:
            if not a < b:
                raise DomainError(f"empty Omega interval ({a}, {b})")
        for (a1, b1), (a2, b2) in zip(ivs, ivs[1:]):
            if b1 > a2:
                raise DomainError("Omega intervals must be disjoint and ordered")

    @property
    def empty(self) -> bool:
        return len(self.intervals) == 0

    def clip(self, lo: float, hi: float) -> "OmegaSet":
        out = []
        for a, b in self.intervals:
            a2, b2 = max(a, lo), min(b, hi)
            if a2 < b2:
                out.append((a2, b2))
        return OmegaSet(tuple(out))


@dataclass(frozen=True)
class SusceptibilityRequest:
    """One susceptibility computation: which series, at which fractional
    index, against which observable."""

    kind: str
    eta: float
    observable: Observable
    J: int = 40
    omega: OmegaSet | None = None
    n_bins: int = 4096
    j_switch: int = DEFAULT_J_SWITCH
    t_ratio: float = 0.5
    t_levels: int = 40
    t_inner: float = 1e-8
    quad: QuadratureSpec = DEFAULT_SPEC

    def __post_init__(self):
        if self.kind not in ("response", "frozen", "semifreddo"):
            raise DomainError(f"unknown susceptibility kind {self.kind!r}")
        if not 0.0 <= self.eta < 0.5:
            raise DomainError(f"eta={self.eta} outside [0, 1/2)")
        if self.J < 4:
            raise DomainError("J must be >= 4")
        if self.kind == "semifreddo" and self.omega is None:
            raise DomainError("semifreddo requests need an Omega set")
        if not 0.0 < self.t_ratio < 1.0:
            raise DomainError("t_ratio must lie in (0, 1)")


@dataclass(frozen=True)
class SeriesEvaluation:
    """Truncated complex evaluation with geometric tail bound."""

    z: complex
    value: complex
    tail_bound: float
    divergent_bound: bool
    J_used: int


@dataclass(frozen=True)
class RadiusEstimate:
    radius: float
    method: str
    diagnostics: dict


# --------------------------------------------------------------------------
# tabulated kernels
# --------------------------------------------------------------------------

def _interp_cumulative(xp: np.ndarray, fp: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Exact integral from xp[0] of the piecewise-linear interpolant, at
    arbitrary points (clipped to the knot range)."""
    pts = np.clip(edges, xp[0], xp[-1])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (fp[1:] + fp[:-1]) * np.diff(xp))])
    idx = np.clip(np.searchsorted(xp, pts, side="right") - 1, 0, xp.size - 2)
    t = pts - xp[idx]
    w = xp[idx + 1] - xp[idx]
    slope = (fp[idx + 1] - fp[idx]) / np.where(w > 0, w, 1.0)
    return cum[idx] + fp[idx] * t + 0.5 * slope * t * t


@dataclass(frozen=True)
class TabulatedKernel:
    """Correlation kernel = explicit power atoms + interpolated residual.

    The residual table is sampled on a uniform grid plus geometric wings
    toward every singular point; the leading algebraic behaviour at each
    singular point is peeled off into fitted atoms, so the residual stays
    interpolable.  Supports the correlation-method protocol (evaluate /
    marks / bin_masses), restricted to the domain [lo, hi].
    """

    atoms: tuple[PowerAtom, ...]
    knots: np.ndarray
    residual: np.ndarray
    lo: float
    hi: float
    mark_list: tuple[SingularMark, ...]

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a in self.atoms:
            out += a.evaluate(x)
        out += np.interp(x, self.knots, self.residual)
        return np.where((x >= self.lo) & (x <= self.hi), out, 0.0)

    def __call__(self, x):
        return self.evaluate(x)

    def marks(self) -> list[SingularMark]:
        return list(self.mark_list)

    def bin_masses(self, edges: np.ndarray) -> np.ndarray:
        masses = AtomSum(atoms=self.atoms).bin_masses(edges)
        masses += np.diff(_interp_cumulative(self.knots, self.residual, edges))
        return masses

    def mass(self) -> float:
        return float(np.sum(self.bin_masses(np.array([self.lo, self.hi]))))


def build_tabulated_kernel(
    pointwise: Callable[[np.ndarray], np.ndarray],
    domain: tuple[float, float],
    singularities: Sequence[tuple[float, float]],
    n_uniform: int = 4096,
    wing_levels: int = 26,
    wing_fit_points: int = 6,
    extra_marks: Sequence[SingularMark] = (),
) -> TabulatedKernel:
    """Sample a pointwise kernel into atoms + residual table.

    singularities: (position, exponent) pairs; at each, the leading
    coefficient of |x - p|^exponent is fitted per side on the innermost wing
    samples and peeled off before tabulation.
    """
    lo, hi = domain
    h = (hi - lo) / n_uniform
    knots = [lo + h * (np.arange(n_uniform) + 0.5)]
    for p, _ in singularities:
        wing = np.array([])
        scales = h * 0.5 ** np.arange(1, wing_levels + 1)
        scales = scales[scales > 1e-9 * max(1.0, abs(p))]
        for s in (+1, -1):
            pts = p + s * scales
            wing = np.concatenate([wing, pts[(pts > lo) & (pts < hi)]])
        knots.append(wing)
    xs = np.unique(np.concatenate(knots))
    vals = pointwise(xs)

    atoms: list[PowerAtom] = []
    resid = vals.copy()
    for p, alpha in singularities:
        if alpha >= 0.0:
            continue
        for s in (+1, -1):
            d = s * (xs - p)
            sel = (d > 0.0) & (d < h)
            if np.count_nonzero(sel) < wing_fit_points:
                continue
            order = np.argsort(d[sel])
            dd = d[sel][order][:wing_fit_points]
            vv = resid[sel][order][:wing_fit_points]
            coef = float(np.mean(vv * dd ** (-alpha)))
            if coef == 0.0:
                continue
            width = min(0.5, (hi - p) if s > 0 else (p - lo))
            if width <= 0.0:
                continue
            atom = PowerAtom(coef, alpha, p, s, width)
            atoms.append(atom)
            resid -= atom.evaluate(xs)

    mark_list = [SingularMark(p, a, a) for p, a in singularities]
    mark_list += [SingularMark(lo, 0.0, 0.0), SingularMark(hi, 0.0, 0.0)]
    mark_list += list(extra_marks)
    for a in atoms:
        edge = a.anchor + a.side * a.width
        if lo < edge < hi:
            mark_list.append(SingularMark(edge, 0.0, 0.0))
    return TabulatedKernel(
        atoms=tuple(atoms),
        knots=xs,
        residual=resid,
        lo=lo,
        hi=hi,
        mark_list=tuple(mark_list),
    )


_KERNEL_CACHE: dict = {}


def _family_cache_key(family: UnimodalFamily):
    return (
        family.kind,
        family.t0,
        family.window,
        family.direction.kind,
        family.direction.coefficients,
    )


def marchaud_density_kernel(
    family: UnimodalFamily,
    model: DensityModel,
    eta: float,
    n_bins: int = 4096,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> TabulatedKernel:
    """psi = 1_I M^eta[rho-model], tabulated once per (family, model, eta)."""
    key = ("marchaud", _family_cache_key(family), model.fingerprint(), eta, n_bins)
    if key in _KERNEL_CACHE:
        return _KERNEL_CACHE[key]
    beta = beta_endpoint(family.t0)
    sing = [(a.anchor, a.exponent - eta) for a in model.spike_part.atoms if a.exponent < 0.0]
    light = replace(spec, panel_order=max(12, spec.panel_order - 4))

    def pointwise(xs: np.ndarray) -> np.ndarray:
        return np.asarray(marchaud_of_density(model, eta, xs, light))

    extra = [
        SingularMark(a.anchor + a.side * a.width, -eta, -eta)
        for a in model.spike_part.atoms
        if math.isfinite(a.width)
    ]
    kern = build_tabulated_kernel(
        pointwise, (-beta, beta), sing, n_uniform=n_bins, extra_marks=extra
    )
    _KERNEL_CACHE[key] = kern
    return kern


# --------------------------------------------------------------------------
# frozen kernel (Marchaud derivative in the parameter)
# --------------------------------------------------------------------------

def _clamped_curve(family: UnimodalFamily, density, x: float, u: np.ndarray, route: str) -> np.ndarray:
    """F(u) = (L_{t0 + clamp(u)} rho)(x) for a vector of offsets u."""
    tt = np.clip(u, family.t_min, family.t_max)
    if route == "shift":
        if family.kind == "quadratic":
            args = x - tt
            return _density_eval(density, args)
        zs = np.array([float(_h_inverse(family, t, x)) for t in tt])
        jac = 1.0 + tt * np.asarray(family.direction.derivative(zs))
        return _density_eval(density, zs) / jac
    from .density import transfer_pointwise
    from .errors import NoPreimageError

    out = np.empty(tt.size)
    for i, t in enumerate(tt):
        try:
            out[i] = transfer_pointwise(family, float(t), density, x)
        except NoPreimageError:
            # x above the shifted critical value: the preimage sum is empty
            out[i] = 0.0
    return out


def _density_eval(density, x) -> np.ndarray:
    if hasattr(density, "evaluate"):
        return np.asarray(density.evaluate(np.asarray(x, dtype=float)))
    return np.asarray(density(np.asarray(x, dtype=float)))


def _density_anchors(density) -> list[float]:
    if isinstance(density, DensityModel):
        return [a.anchor for a in density.spike_part.atoms if a.exponent < 0.0]
    return []


def frozen_kernel(
    family: UnimodalFamily,
    density,
    eta: float,
    x: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    route: str = "shift",
    include_tails: bool = True,
) -> float:
    """Two-sided Marchaud derivative in the parameter of the clamped curve
    t -> (L_{t0+clamp(t)} rho)(x), at t = 0:

        (eta / 2 Gamma(1-eta)) int_0^inf [F(u) - F(-u)] u^(-1-eta) du .

    Beyond the window the curve is constant, so the tail is the closed form
    F(+-T) T^(-eta) / (2 Gamma(1-eta)); with include_tails=False the
    integral stops at the window edges (the semifreddo full-window object).

    route "shift" uses the exact conjugation of parameter shifts into
    argument shifts; route "direct" re-evaluates the transfer operator at
    each shifted parameter (cross-check path).
    """
    if not 0.0 < eta < 0.5:
        raise DomainError(f"eta={eta} outside (0, 1/2)")
    if route not in ("shift", "direct"):
        raise DomainError(f"unknown route {route!r}")
    t_plus, t_minus = family.t_max, -family.t_min
    u_max = max(t_plus, t_minus)

    # singular alignment guard: x must not sit on an anchor or its clamped
    # translates (the curve endpoint would be evaluated on a spike)
    for c in _density_anchors(density):
        for off in (0.0, t_plus, -t_minus):
            if abs(x - (c + off)) < 1e-12 * max(1.0, abs(c)):
                raise SingularityError(f"frozen kernel aligned with anchor {c} at x={x}")

    marks = [SingularMark(0.0, None, -eta)]
    if u_max > 2.0 * spec.inner_cutoff:
        marks.append(SingularMark(spec.inner_cutoff, 0.0, 0.0))
    if t_plus < u_max:
        marks.append(SingularMark(t_plus, 0.0, 0.0))
    if t_minus < u_max:
        marks.append(SingularMark(t_minus, 0.0, 0.0))
    for c in _density_anchors(density):
        for u_star, lim in ((x - c, t_plus), (c - x, t_minus)):
            if 0.0 < u_star < lim:
                marks.append(SingularMark(u_star, -0.5, -0.5))

    def integrand(u: np.ndarray) -> np.ndarray:
        up = _clamped_curve(family, density, x, u, route)
        um = _clamped_curve(family, density, x, -u, route)
        return (up - um) * u ** (-1.0 - eta)

    nodes, weights = build_mesh(0.0, u_max, marks, spec)
    body = integrate(integrand(nodes), weights)

    tail = 0.0
    if include_tails:
        f_plus = float(_clamped_curve(family, density, x, np.array([t_plus]), route)[0])
        f_minus = float(_clamped_curve(family, density, x, np.array([-t_minus]), route)[0])
        tail = (f_plus * t_plus**-eta - f_minus * t_minus**-eta) / eta
    pref = 0.5 * eta * reciprocal_gamma(1.0 - eta)
    return pref * (body + tail)


def frozen_density_kernel(
    family: UnimodalFamily,
    model: DensityModel,
    eta: float,
    n_bins: int = 4096,
    spec: QuadratureSpec = DEFAULT_SPEC,
    include_tails: bool = True,
) -> TabulatedKernel:
    """The frozen kernel tabulated on the correlation grid (cached; the
    dominant cost of the frozen series, reused across j and phi)."""
    key = (
        "frozen",
        _family_cache_key(family),
        model.fingerprint(),
        eta,
        n_bins,
        include_tails,
    )
    if key in _KERNEL_CACHE:
        return _KERNEL_CACHE[key]
    beta = beta_endpoint(family.t0)
    light = replace(spec, panel_order=max(12, spec.panel_order - 4), grading_levels=32)
    anchors = _density_anchors(model)
    t_plus, t_minus = family.t_max, -family.t_min

    sing: list[tuple[float, float]] = []
    for c in anchors:
        sing.append((c, -0.5 - eta))
        for off, active in ((t_plus, include_tails), (-t_minus, include_tails)):
            p = c + off
            if -beta < p < beta and active:
                sing.append((p, -0.5))

    def pointwise(xs: np.ndarray) -> np.ndarray:
        return np.array(
            [frozen_kernel(family, model, eta, float(x), light, "shift", include_tails) for x in xs]
        )

    kern = build_tabulated_kernel(pointwise, (-beta, beta), sing, n_uniform=n_bins)
    _KERNEL_CACHE[key] = kern
    return kern


# --------------------------------------------------------------------------
# coefficient assemblies
# --------------------------------------------------------------------------

def response_coefficients(
    family: UnimodalFamily,
    request: SusceptibilityRequest,
    model: DensityModel,
    ulam: UlamOperator | None = None,
) -> CoefficientSequence:
    """a_j = - int_I phi(f^j x) M^eta[rho](x) dx (leading minus included)."""
    if request.eta == 0.0:
        return CoefficientSequence(
            values=np.zeros(request.J + 1),
            methods=("exact-zero",) * (request.J + 1),
            eta=0.0,
            kind="response",
            observable=request.observable.description,
        )
    kern = marchaud_density_kernel(family, model, request.eta, request.n_bins, request.quad)
    seq = correlation_sequence(
        family,
        request.observable,
        kern,
        request.J,
        spec=request.quad,
        j_switch=request.j_switch,
        n_bins=request.n_bins,
        ulam=ulam,
        eta=request.eta,
        kind="response",
    )
    return replace(seq, values=-seq.values)


def frozen_coefficients(
    family: UnimodalFamily,
    request: SusceptibilityRequest,
    model: DensityModel,
    ulam: UlamOperator | None = None,
    include_tails: bool = True,
) -> CoefficientSequence:
    """a_j = + int_I phi(f^j x) kappa(x) dx for the frozen t-kernel."""
    kern = frozen_density_kernel(
        family, model, request.eta, request.n_bins, request.quad, include_tails
    )
    return correlation_sequence(
        family,
        request.observable,
        kern,
        request.J,
        spec=request.quad,
        j_switch=request.j_switch,
        n_bins=request.n_bins,
        ulam=ulam,
        eta=request.eta,
        kind="frozen",
    )


def _t_panels(request: SusceptibilityRequest, t_hi: float) -> list[tuple[float, float]]:
    """Geometric ladder on (t_inner, t_hi], graded toward 0."""
    panels = []
    hi = t_hi
    for _ in range(request.t_levels):
        lo = hi * request.t_ratio
        if lo <= request.t_inner:
            panels.append((request.t_inner, hi))
            return panels
        panels.append((lo, hi))
        hi = lo
    panels.append((max(request.t_inner, hi * request.t_ratio**8), hi))
    return panels


def _clip_panels(panels, omega: OmegaSet, orient: int):
    """Intersect t>0 ladder panels with Omega (or its mirror for t<0)."""
    out = []
    for a, b in panels:
        for lo, hi in omega.intervals:
            if orient < 0:
                lo, hi = -hi, -lo
            a2, b2 = max(a, lo), min(b, hi)
            if a2 < b2:
                out.append((a2, b2))
    return out


def semifreddo_coefficients(
    family: UnimodalFamily,
    request: SusceptibilityRequest,
    model: DensityModel,
    ulam: UlamOperator | None = None,
) -> CoefficientSequence:
    """Fubini-ordered assembly: for each t-node of a graded grid over Omega,
    correlate phi o f^j against (L_{t0+t} - L_{t0}) rho via the shift
    identity, then integrate in t against sgn(t) |t|^(-1-eta) with the
    prefactor eta / (2 Gamma(1-eta))."""
    eta = request.eta
    J = request.J
    phi = request.observable
    omega = request.omega if request.omega is not None else OmegaSet(())
    omega = omega.clip(family.t_min, family.t_max)
    zero = CoefficientSequence(
        values=np.zeros(J + 1),
        methods=("exact-zero",) * (J + 1),
        eta=eta,
        kind="semifreddo",
        observable=phi.description,
    )
    if omega.empty:
        return zero
    if eta == 0.0:
        return zero

    op = ulam if ulam is not None else cached_ulam(family, 0.0, request.n_bins)
    beta = beta_endpoint(family.t0)
    lo, hi = -beta, beta
    psi = model.as_atom_sum()

    # shared x-meshes and pulled-back observable values per j <= j_switch
    j_quad = min(request.j_switch, J)
    meshes = []
    base_vals = []
    for j in range(j_quad + 1):
        marks = list(psi.marks())
        if j > 0:
            for b in monotone_breakpoints(family, j):
                if lo < b < hi:
                    marks.append(SingularMark(float(b), None, None))
        table = _VariationTable(family, j, lo, hi)
        rate = phi.oscillation_rate()

        def subcount(a, b, table=table, rate=rate):
            if rate == 0.0:
                return 1
            waves = table.variation(a, b) * rate / (2.0 * math.pi)
            return max(1, int(math.ceil(waves / 1.5)))

        nodes, weights = build_mesh(lo, hi, marks, request.quad, subcount)
        psi_vals = psi.evaluate(nodes)
        meshes.append((nodes, weights, psi_vals))
        base_vals.append(float(np.dot(weights, phi.evaluate(iterate_map(family, j, nodes)) * psi_vals)))

    phi_avg = phi.bin_averages(op.edges)
    vec_base = psi.bin_masses(op.edges) / op.cell_width
    base_ulam = np.empty(J + 1)
    vec = vec_base.copy()
    for j in range(J + 1):
        base_ulam[j] = float(np.dot(phi_avg, vec) * op.cell_width)
        if j < J:
            vec = op.apply_density(vec)

    # t-quadrature nodes over Omega, graded toward 0 on each side
    t_nodes: list[float] = []
    t_weights: list[float] = []
    n_gl = request.quad.panel_order
    for orient, t_hi in ((+1, family.t_max), (-1, -family.t_min)):
        panels = _clip_panels(_t_panels(request, t_hi), omega, orient)
        for a, b in panels:
            xg, wg = gauss_legendre_panel(a, b, n_gl)
            t_nodes.extend((orient * xg).tolist())
            t_weights.extend(wg.tolist())

    values = np.zeros(J + 1)
    methods = ["quadrature"] * (j_quad + 1) + ["ulam"] * (J - j_quad)
    for t, w in zip(t_nodes, t_weights):
        tt = clamp_parameter(family, t)
        weight = w * math.copysign(1.0, t) * abs(t) ** (-1.0 - eta)
        corr = np.empty(J + 1)
        if family.kind == "quadratic":
            shift_map = lambda y, s=tt: y + s
            inv_edges = op.edges - tt
        else:
            shift_map = lambda y, s=tt: y + s * np.asarray(family.direction.value(y))
            inv_edges = _h_inverse(family, tt, op.edges)
        for j in range(j_quad + 1):
            nodes, wts, psi_vals = meshes[j]
            shifted = float(
                np.dot(wts, phi.evaluate(iterate_map(family, j, shift_map(nodes))) * psi_vals)
            )
            corr[j] = shifted - base_vals[j]
        vec = psi.bin_masses(inv_edges) / op.cell_width
        for j in range(J + 1):
            if j > j_quad:
                corr[j] = float(np.dot(phi_avg, vec) * op.cell_width) - base_ulam[j]
            if j < J:
                vec = op.apply_density(vec)
        values += weight * corr
    values *= 0.5 * eta * reciprocal_gamma(1.0 - eta)
    return CoefficientSequence(
        values=values,
        methods=tuple(methods),
        eta=eta,
        kind="semifreddo",
        observable=phi.description,
    )


def susceptibility_coefficients(
    family: UnimodalFamily,
    request: SusceptibilityRequest,
    model: DensityModel,
    ulam: UlamOperator | None = None,
) -> CoefficientSequence:
    if request.kind == "response":
        return response_coefficients(family, request, model, ulam)
    if request.kind == "frozen":
        return frozen_coefficients(family, request, model, ulam)
    return semifreddo_coefficients(family, request, model, ulam)


# --------------------------------------------------------------------------
# series evaluation and radius
# --------------------------------------------------------------------------

def evaluate_series(seq: CoefficientSequence, fit: DecayFit | None, z: complex) -> SeriesEvaluation:
    """Horner-evaluated truncated series plus the geometric tail bound
    C_hat theta_hat^(J+1) |z|^(J+1) / (1 - theta_hat |z|)."""
    zc = complex(z)
    acc = 0.0 + 0.0j
    for a in seq.values[::-1]:
        acc = acc * zc + a
    J = seq.J
    if fit is None:
        return SeriesEvaluation(zc, acc, math.inf, True, J)
    q = fit.theta_hat * abs(zc)
    if q >= 1.0:
        return SeriesEvaluation(zc, acc, math.inf, True, J)
    tail = fit.C_hat * q ** (J + 1) / (1.0 - q)
    return SeriesEvaluation(zc, acc, tail, False, J)


def radius_estimate(
    seq: CoefficientSequence | np.ndarray,
    window: tuple[int, int] | None = None,
    noise_floor_rel: float = 1e-13,
) -> RadiusEstimate:
    """Root-test radius 1 / limsup |a_j|^(1/j), approximated over the fit
    window by extrapolating log |a_j|^(1/j) linearly in 1/j (exact for
    geometric data); the ratio test is reported as a diagnostic."""
    values = seq.values if isinstance(seq, CoefficientSequence) else np.asarray(seq, dtype=float)
    J = values.size - 1
    if window is None:
        window = (min(5, max(J - 8, 1)), max(J - 2, 2))
    j_lo, j_hi = max(window[0], 1), min(window[1], J)
    mags = np.abs(values)
    if not np.any(mags > 0.0):
        return RadiusEstimate(math.inf, "root-test", {"usable": 0, "window": (j_lo, j_hi)})
    floor = noise_floor_rel * float(np.max(mags))
    js = np.arange(j_lo, j_hi + 1)
    usable = mags[js] > floor
    if np.count_nonzero(usable) < 8:
        raise InsufficientDataError(
            f"radius estimate needs >= 8 usable coefficients, got {int(np.count_nonzero(usable))}"
        )
    js_u = js[usable].astype(float)
    roots = np.log(mags[js][usable]) / js_u
    slope, intercept = np.polyfit(1.0 / js_u, roots, 1)
    radius = float(np.exp(-intercept))

    ratios = []
    for j in js[:-1]:
        if mags[j] > floor and mags[j + 1] > floor:
            ratios.append(mags[j + 1] / mags[j])
    ratio_radius = float(1.0 / np.median(ratios)) if ratios else math.inf
    diags = {
        "usable": int(np.count_nonzero(usable)),
        "window": (int(j_lo), int(j_hi)),
        "ratio_radius": ratio_radius,
        "root_intercept": float(intercept),
    }
    return RadiusEstimate(radius, "root-test", diags)
