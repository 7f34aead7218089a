import math

import numpy as np
import pytest

from fracsus.errors import DomainError, InsufficientDataError, UnsupportedSideError
from fracsus.fraccalc import (
    AtomSum,
    GridFunction,
    PowerAtom,
    beta_function,
    frac_integral_atom,
    frac_integral_numeric,
    gamma_ratio,
    marchaud_atom,
    marchaud_numeric,
    marchaud_total_integral,
    pinned_power_fit,
    singularity_exponent_fit,
)

SQRT_PI = 1.7724538509055160273

# 50-digit Gamma-function oracle values, frozen
G_HALF_OVER_G_QUARTER = 0.48887053372346189882
G_15_OVER_G_18 = 0.95151639213129193498
G_15_OVER_G_125 = 0.97774106744692379763


# ---------------------------------------------------------------- gamma

def test_gamma_ratio_trivial_cases():
    assert abs(gamma_ratio(0.5, 1.0) - SQRT_PI) < 1e-14
    assert gamma_ratio(0.5, 0.5) == 1.0


def test_gamma_ratio_against_high_precision_oracle():
    assert abs(gamma_ratio(0.5, 0.25) - G_HALF_OVER_G_QUARTER) < 1e-14


def test_gamma_ratio_pole_rejected():
    with pytest.raises(DomainError):
        gamma_ratio(-1.0, 0.5)
    with pytest.raises(DomainError):
        gamma_ratio(0.5, 0.0)


def test_beta_function_half_half():
    assert abs(beta_function(0.5, 0.5) - math.pi) < 1e-13


# ---------------------------------------------------------------- atoms

def test_atom_evaluation_support_and_truncation():
    atom = PowerAtom(2.0, -0.5, anchor=1.0, side=-1, width=0.5)
    x = np.array([0.4, 0.75, 0.999, 1.0, 1.5])
    v = atom.evaluate(x)
    assert v[0] == 0.0  # beyond the truncation width
    assert abs(v[1] - 2.0 * 0.25**-0.5) < 1e-14
    assert v[3] == 0.0  # anchor itself excluded
    assert v[4] == 0.0  # wrong side


def test_atom_validation():
    with pytest.raises(DomainError):
        PowerAtom(1.0, -1.0)
    with pytest.raises(DomainError):
        PowerAtom(1.0, 0.5, width=0.0)
    with pytest.raises(DomainError):
        PowerAtom(1.0, 0.5, side="x")


def test_atomsum_mass_and_bins():
    atom = PowerAtom(1.0, -0.5, anchor=0.0, side=1, width=1.0)
    s = AtomSum(atoms=(atom,))
    assert abs(s.mass() - 2.0) < 1e-14
    edges = np.linspace(0.0, 1.0, 5)
    masses = s.bin_masses(edges)
    assert abs(masses.sum() - 2.0) < 1e-14
    # first bin holds sqrt(0.25)*2 = 1.0 of the total mass
    assert abs(masses[0] - 1.0) < 1e-14


def test_gridfunction_interpolation_and_integral():
    g = GridFunction(0.0, 1.0, np.array([1.0, 3.0]))
    assert abs(g.integral() - 2.0) < 1e-14
    assert g.evaluate(np.array([-0.1]))[0] == 0.0
    assert abs(g.evaluate(np.array([0.5]))[0] - 2.0) < 1e-14
    cum = g.cumulative([0.25, 1.0])
    assert abs(cum[1] - 2.0) < 1e-14


# ------------------------------------------------- closed-form operators

def test_frac_integral_atom_spike_to_constant():
    # the -1/2 spike integrates to the constant sqrt(pi) at eta = 1/2
    atom = PowerAtom(1.0, -0.5, anchor=0.0, side=1)
    out = frac_integral_atom(atom, 0.5)
    assert abs(out.coefficient - SQRT_PI) < 1e-14
    assert out.exponent == 0.0


def test_frac_integral_atom_eta_zero_identity():
    atom = PowerAtom(1.0, 0.5, anchor=0.0, side=1)
    assert frac_integral_atom(atom, 0.0) == atom


def test_frac_integral_atom_gamma_coefficient():
    atom = PowerAtom(1.0, 0.5, anchor=0.0, side=1)
    out = frac_integral_atom(atom, 0.3)
    assert abs(out.coefficient - G_15_OVER_G_18) < 1e-14
    assert abs(out.exponent - 0.8) < 1e-15


def test_frac_integral_atom_requires_untruncated():
    with pytest.raises(UnsupportedSideError):
        frac_integral_atom(PowerAtom(1.0, 0.5, width=1.0), 0.3)


def test_marchaud_atom_gamma_coefficient():
    atom = PowerAtom(1.0, 0.5, anchor=0.0, side=1)
    out = marchaud_atom(atom, 0.25)
    assert abs(out.coefficient - G_15_OVER_G_125) < 1e-14
    assert abs(out.exponent - 0.25) < 1e-15


def test_marchaud_atom_rejects_too_large_eta():
    with pytest.raises(DomainError):
        marchaud_atom(PowerAtom(1.0, -0.5), 0.6)


def test_left_inverse_identity_atom_level():
    atom = PowerAtom(0.7, -0.5, anchor=0.3, side=-1)
    back = marchaud_atom(frac_integral_atom(atom, 0.25), 0.25)
    assert abs(back.coefficient - atom.coefficient) < 1e-12
    assert abs(back.exponent - atom.exponent) < 1e-15


@pytest.mark.parametrize("beta", [-0.5, 0.0, 0.5])
def test_semigroup_identity(beta):
    rng = np.random.RandomState(7)
    for _ in range(5):
        a = rng.uniform(0.05, 0.6)
        b = rng.uniform(0.05, min(0.9 - a, 0.35))
        atom = PowerAtom(1.3, beta, anchor=-0.2, side=1)
        two_step = frac_integral_atom(frac_integral_atom(atom, a), b)
        one_step = frac_integral_atom(atom, a + b)
        assert abs(two_step.coefficient - one_step.coefficient) < 1e-12
        assert two_step.exponent == pytest.approx(one_step.exponent, abs=1e-15)


# ------------------------------------------------- numeric frac integral

def test_frac_integral_numeric_spike_reproduces_constant():
    atom = PowerAtom(1.0, -0.5, anchor=0.0, side=1)
    val = frac_integral_numeric(AtomSum(atoms=(atom,)), 0.5, "a+", 0.5)
    assert abs(val - SQRT_PI) < 1e-6


def test_frac_integral_numeric_constant_closed_form():
    g = GridFunction(0.0, 1.0, np.ones(8))
    val = frac_integral_numeric(g, 0.5, "b-", 0.0)
    assert abs(val - 2.0 / SQRT_PI) < 1e-8
    # same integral read from the other endpoint
    val2 = frac_integral_numeric(g, 0.5, "a+", 1.0)
    assert abs(val2 - 2.0 / SQRT_PI) < 1e-8


def test_frac_integral_numeric_matches_atom_route():
    atom = PowerAtom(1.0, 0.5, anchor=0.0, side=1)
    val = frac_integral_numeric(AtomSum(atoms=(atom,)), 0.3, "a+", 1.0)
    assert abs(val - G_15_OVER_G_18) < 1e-6


@pytest.mark.parametrize("eta", [0.1, 0.25, 0.4])
@pytest.mark.parametrize("beta", [-0.5, 0.5])
def test_frac_integral_numeric_vs_closed_form_random_points(eta, beta):
    rng = np.random.RandomState(42)
    atom = PowerAtom(1.0, beta, anchor=0.0, side=1)
    closed = frac_integral_atom(atom, eta)
    s = AtomSum(atoms=(atom,))
    for x in rng.uniform(0.02, 3.0, size=6):
        num = frac_integral_numeric(s, eta, "a+", float(x))
        exact = closed.coefficient * x**closed.exponent
        assert abs(num - exact) < 1e-6 * abs(exact)


def test_frac_integral_numeric_non_integrable_combination():
    atom = PowerAtom(1.0, -0.5, anchor=0.0, side=1)
    with pytest.raises(DomainError):
        frac_integral_numeric(AtomSum(atoms=(atom,)), 0.4, "a+", 0.0)


# ------------------------------------------------- numeric Marchaud

def test_marchaud_numeric_constant_two_sided_vanishes():
    atom = PowerAtom(1.0, 0.0, anchor=0.0, side=1, width=2.0)
    sym = AtomSum(atoms=(PowerAtom(1.0, 0.0, -1.0, 1, 2.0),))
    val = marchaud_numeric(sym, 0.3, "two-sided", 0.0)
    assert abs(val) < 1e-12


def test_marchaud_numeric_matches_closed_form_growing_atom():
    atom = PowerAtom(1.0, 0.5, anchor=0.0, side=1)
    closed = marchaud_atom(atom, 0.25)
    val = marchaud_numeric(AtomSum(atoms=(atom,)), 0.25, "+", 1.0)
    assert abs(val - closed.coefficient) < 1e-5


def test_marchaud_numeric_truncated_atom_vs_dense_trapezoid_oracle():
    # g = (2-y)^(-1/2) on (1, 2); independent dense graded trapezoid of the
    # difference-quotient integral at x = 1.5, side '-'
    eta = 0.25
    x = 1.5
    atom = PowerAtom(1.0, -0.5, anchor=2.0, side=-1, width=1.0)
    s = AtomSum(atoms=(atom,))

    def g(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        m = (y > 1.0) & (y < 2.0)
        out[m] = (2.0 - y[m]) ** -0.5
        return out

    gx = g(np.array([x]))[0]
    # u in (0, 0.5): approach the anchor singularity; graded log mesh
    u1 = np.concatenate([
        np.geomspace(1e-12, 0.25, 300_000),
        0.5 - np.geomspace(1e-12, 0.25, 300_000)[::-1],
    ])
    f1 = (gx - g(x + u1)) * u1 ** (-1.0 - eta)
    i1 = np.trapezoid(f1, u1)
    # u in (0.5, U): g(x+u) = 0
    U = 50.0
    u2 = np.geomspace(0.5, U, 400_000)
    f2 = gx * u2 ** (-1.0 - eta)
    i2 = np.trapezoid(f2, u2)
    # analytic remainder beyond U
    i3 = gx * U**-eta / eta
    oracle = (eta / math.gamma(1.0 - eta)) * (i1 + i2 + i3)

    val = marchaud_numeric(s, eta, "-", x)
    assert abs(val - oracle) < 1e-4


def test_marchaud_numeric_translation_invariance():
    base = None
    for h in (0.0, -3.7, 11.25):
        s = AtomSum(atoms=(PowerAtom(1.0, -0.5, anchor=2.0 + h, side=-1, width=1.0),))
        val = marchaud_numeric(s, 0.3, "two-sided", 1.4 + h)
        if base is None:
            base = val
        else:
            assert abs(val - base) < 1e-9 * max(1.0, abs(base))


def test_marchaud_numeric_linearity_in_coefficients():
    # fixed singular structure, varying coefficients: exactly linear
    rng = np.random.RandomState(3)
    a1 = PowerAtom(1.0, -0.5, anchor=0.0, side=1, width=1.0)
    a2 = PowerAtom(1.0, 0.5, anchor=0.5, side=-1, width=1.0)
    x = 0.3
    eta = 0.25
    m1 = marchaud_numeric(AtomSum(atoms=(a1, a2.scaled(0.0))), eta, "two-sided", x)
    m2 = marchaud_numeric(AtomSum(atoms=(a1.scaled(0.0), a2)), eta, "two-sided", x)
    for _ in range(5):
        c1, c2 = rng.uniform(-2, 2, size=2)
        combo = AtomSum(atoms=(a1.scaled(c1), a2.scaled(c2)))
        val = marchaud_numeric(combo, eta, "two-sided", x)
        assert abs(val - (c1 * m1 + c2 * m2)) < 1e-12 * max(1.0, abs(val))


def test_marchaud_inverts_frac_integral_numerically():
    # numeric-level Marchaud of the exact fractional integral returns g
    eta = 0.25
    atoms = (
        PowerAtom(0.8, -0.5, anchor=0.0, side=1),
        PowerAtom(-0.3, 0.25, anchor=0.0, side=1),
        PowerAtom(0.5, 0.5, anchor=0.0, side=1),
    )
    integrated = AtomSum(atoms=tuple(frac_integral_atom(a, eta) for a in atoms))
    original = AtomSum(atoms=atoms)
    for x in (0.2, 0.7, 1.9):
        val = marchaud_numeric(integrated, eta, "+", x)
        ref = float(original.evaluate(np.array([x]))[0])
        assert abs(val - ref) < 1e-5 * max(1.0, abs(ref))


def test_marchaud_total_integral_cancels():
    s = AtomSum(
        atoms=(
            PowerAtom(0.6, -0.5, anchor=0.0, side=1, width=1.0),
            PowerAtom(0.4, 0.5, anchor=1.5, side=-1, width=0.8),
        )
    )
    total = marchaud_total_integral(s, 0.3)
    assert abs(total) < 1e-4


def test_marchaud_numeric_eta_range_enforced():
    s = AtomSum(atoms=(PowerAtom(1.0, 0.0, 0.0, 1, 1.0),))
    with pytest.raises(DomainError):
        marchaud_numeric(s, 0.5, "+", 0.5)
    with pytest.raises(DomainError):
        marchaud_numeric(s, 0.0, "+", 0.5)


# ------------------------------------------------- exponent fits

def test_singularity_exponent_fit_exact_power():
    d = 2.0 ** -np.arange(3, 13)
    samples = [(float(x), float(x**-0.75)) for x in d]
    slope, amp, r2 = singularity_exponent_fit(samples)
    assert abs(slope + 0.75) < 1e-10
    assert abs(amp - 1.0) < 1e-10
    assert r2 > 1.0 - 1e-12


def test_singularity_exponent_fit_amplitude():
    d = np.geomspace(1e-4, 1e-1, 12)
    samples = [(float(x), float(3.0 * x**-0.5)) for x in d]
    slope, amp, r2 = singularity_exponent_fit(samples)
    assert abs(slope + 0.5) < 1e-10
    assert abs(amp - 3.0) < 1e-9


def test_singularity_exponent_fit_validation():
    with pytest.raises(DomainError):
        singularity_exponent_fit([(-1.0, 1.0)] * 10)
    with pytest.raises(InsufficientDataError):
        singularity_exponent_fit([(0.5, 1.0)] * 5)
    with pytest.raises(DomainError):
        singularity_exponent_fit([(x, 1.0) for x in np.linspace(0.5, 1.0, 10)])


def test_pinned_power_fit_recovers_components():
    d = np.geomspace(1e-3, 0.3, 40)
    v = 2.0 * d**-0.5 + 0.7 * d**0.5 + 0.1
    coef, r2 = pinned_power_fit(d, v, (-0.5, 0.5, 0.0))
    assert np.allclose(coef, [2.0, 0.7, 0.1], atol=1e-10)
    assert r2 > 1.0 - 1e-12
