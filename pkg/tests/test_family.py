import math

import mpmath as mp
import numpy as np
import pytest

from fracsus.errors import (
    DegenerateOrbitError,
    DomainError,
    EscapeError,
    FracsusValueError,
)
from fracsus.family import (
    DirectionField,
    UnimodalFamily,
    beta_endpoint,
    bisect_mt_parameter,
    ce_exponent,
    ce_limit_estimate,
    clamp_parameter,
    critical_orbit,
    detect_mt,
    map_derivative,
    map_eval,
    misiurewicz_gap,
)


def quad(t0=2.0, window=(-0.1, 0.1)):
    return UnimodalFamily(kind="quadratic", t0=t0, window=window)


# ------------------------------------------------------------- map basics

def test_map_eval_trivial_values():
    f = quad()
    assert map_eval(f, 0.0, 0.0) == 2.0
    assert map_eval(f, 0.0, 2.0) == -2.0


def test_map_eval_clamps_parameter():
    f = quad()
    assert map_eval(f, 0.5, 0.0) == pytest.approx(2.1)
    assert map_eval(f, -3.0, 0.0) == pytest.approx(1.9)


def test_map_eval_rejects_non_finite():
    f = quad()
    with pytest.raises(DomainError):
        map_eval(f, 0.0, math.nan)
    with pytest.raises(DomainError):
        map_eval(f, math.inf, 1.0)


def test_map_derivative_values():
    f = quad()
    assert map_derivative(f, 0.0, 2.0) == -4.0
    assert map_derivative(f, 0.0, 0.0) == 0.0
    f15 = quad(t0=1.5)
    assert map_derivative(f15, 0.0, -0.75) == 1.5


def test_clamp_parameter_cases():
    f = quad()
    assert clamp_parameter(f, 0.25) == 0.1
    assert clamp_parameter(f, -3.0) == -0.1
    assert clamp_parameter(f, 0.05) == 0.05


def test_clamp_idempotent():
    f = quad()
    for t in np.linspace(-5, 5, 41):
        assert clamp_parameter(f, clamp_parameter(f, t)) == clamp_parameter(f, t)


def test_family_validation():
    with pytest.raises(DomainError):
        UnimodalFamily(t0=0.9)
    with pytest.raises(DomainError):
        UnimodalFamily(t0=1.02, window=(-0.1, 0.1))  # t0 + t_min <= 1
    with pytest.raises(DomainError):
        UnimodalFamily(window=(0.1, 0.2))


def test_generalized_matches_quadratic_with_unit_direction():
    f = quad()
    g = UnimodalFamily(kind="generalized", t0=2.0, window=(-0.1, 0.1),
                       direction=DirectionField("constant", (1.0,)))
    xs = np.linspace(-2.0, 2.0, 1000)
    for t in (-0.07, 0.0, 0.02):
        fv = map_eval(f, t, xs)
        gv = map_eval(g, t, xs)
        assert np.max(np.abs(fv - gv)) < 1e-14


def test_generalized_family_identity_pointwise():
    # f_{t0+t} = f_{t0} + t * X(f_{t0}(x)) by construction
    X = DirectionField("polynomial", (0.3, -0.1, 0.02))
    g = UnimodalFamily(kind="generalized", t0=1.8, window=(-0.05, 0.05), direction=X)
    xs = np.linspace(-1.9, 1.9, 257)
    for t in (-0.04, 0.013):
        lhs = map_eval(g, t, xs)
        base = map_eval(g, 0.0, xs)
        rhs = base + t * X.value(base)
        assert np.max(np.abs(lhs - rhs)) < 1e-14


# ------------------------------------------------------------- orbits

def test_critical_orbit_t0_2():
    data = critical_orbit(quad(), 0.0, 3)
    assert np.allclose(data.orbit, [0.0, 2.0, -2.0, -2.0])
    assert np.allclose(data.derivatives, [1.0, -4.0, -16.0])
    assert list(data.signs) == [1, -1, -1]


def test_orbit_chain_rule_consistency():
    f = quad(t0=1.9)
    data = critical_orbit(f, 0.0, 25)
    for k in range(1, data.length):
        ratio = data.derivatives[k] / data.derivatives[k - 1]
        expected = map_derivative(f, 0.0, data.orbit[k])
        assert abs(ratio - expected) < 1e-12 * max(1.0, abs(expected))


def test_orbit_matches_direct_iteration():
    rng = np.random.RandomState(11)
    for t0 in rng.uniform(1.3, 1.99, size=8):
        f = quad(t0=float(t0), window=(-0.01, 0.01))
        K = int(rng.randint(5, 30))
        data = critical_orbit(f, 0.0, K)
        x = 0.0
        for _ in range(K):
            x = map_eval(f, 0.0, x)
        assert abs(x - data.orbit[-1]) < 1e-12 * max(1.0, abs(x))


def test_orbit_escape_detected():
    # clamped above the admissible range the critical orbit leaves the interval
    f = quad(t0=2.0, window=(-0.1, 0.5))
    with pytest.raises(EscapeError):
        critical_orbit(f, 0.5, 20)


def test_degenerate_orbit_error():
    # binary-exact construction sending the orbit back to the critical point:
    # t = 0.0625 and X = -8 give c_1 = 1.5 - 0.5 = 1.0, c_2 = 0.5 - 0.5 = 0.0
    f = UnimodalFamily(
        kind="generalized",
        t0=1.5,
        window=(-0.01, 0.0625),
        direction=DirectionField("constant", (-8.0,)),
    )
    with pytest.raises(DegenerateOrbitError):
        critical_orbit(f, 0.0625, 5)


def test_mt_bisection_parameter_value():
    t_star = bisect_mt_parameter()
    assert abs(t_star - 1.5436890126920763) < 1e-11
    p = 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * t_star))
    data = critical_orbit(UnimodalFamily(t0=t_star, window=(-0.05, 0.05)), 0.0, 4)
    assert np.allclose(data.orbit, [0.0, t_star, -p, p, p], atol=1e-10)


# ------------------------------------------------------------- CE exponent

def test_ce_exponent_t0_2_exact():
    lam, per_step = ce_exponent(quad(), 0.0, 20)
    assert lam == 4.0
    assert per_step.shape == (19,)


def test_ce_exponent_mt_parameter_limit():
    # oracle: extended-precision direct product along the orbit, K-th root,
    # then extrapolation of the affine-in-1/(K-1) tail
    t_star = bisect_mt_parameter()
    f = UnimodalFamily(t0=t_star, window=(-0.05, 0.05))
    lam, per_step = ce_exponent(f, 0.0, 40)
    two_p = -1.0 + math.sqrt(1.0 + 4.0 * t_star)

    with mp.workdps(60):
        x = mp.mpf(0)
        acc = mp.mpf(1)
        for _ in range(39):
            x = mp.mpf(t_star) - x * x
            acc *= abs(-2 * x)
        oracle_lam = float(acc ** (mp.mpf(1) / 39))
    assert abs(lam - oracle_lam) < 1e-12 * oracle_lam

    est = ce_limit_estimate(per_step)
    assert abs(est - two_p) < 1e-3


def test_ce_exponent_below_one_at_neutral_parameter():
    # t0 = 1.25 has a non-repelling cycle; derivative products decay
    f = UnimodalFamily(t0=1.25, window=(-0.05, 0.05))
    lam, _ = ce_exponent(f, 0.0, 40)

    with mp.workdps(60):
        x = mp.mpf(0)
        acc = mp.mpf(1)
        for _ in range(39):
            x = mp.mpf("1.25") - x * x
            acc *= abs(-2 * x)
        oracle = float(acc ** (mp.mpf(1) / 39))
    assert lam < 1.0
    assert abs(lam - oracle) < 1e-10 * max(1.0, oracle)


def test_ce_exponent_validation():
    with pytest.raises(FracsusValueError):
        ce_exponent(quad(), 0.0, 1)


# ------------------------------------------------------------- MT detection

def test_detect_mt_chebyshev():
    cert = detect_mt(quad(), 0.0, 10, tol=1e-12)
    assert cert is not None
    assert (cert.preperiod, cert.period) == (2, 1)
    assert abs(cert.multiplier - 4.0) < 1e-12


def test_detect_mt_bisection_parameter():
    t_star = bisect_mt_parameter()
    f = UnimodalFamily(t0=t_star, window=(-0.05, 0.05))
    cert = detect_mt(f, 0.0, 10, tol=1e-9)
    assert cert is not None
    assert (cert.preperiod, cert.period) == (3, 1)
    two_p = -1.0 + math.sqrt(1.0 + 4.0 * t_star)
    assert abs(cert.multiplier - two_p) < 1e-6


def test_detect_mt_none_at_generic_parameter():
    # oracle: exhaustive recurrence scan of the orbit
    f = UnimodalFamily(t0=1.7, window=(-0.05, 0.05))
    data = critical_orbit(f, 0.0, 10)
    c = data.orbit
    min_gap = min(
        abs(c[l] - c[l + p]) for l in range(1, 10) for p in range(1, 11 - l)
    )
    assert min_gap > 1e-12
    assert detect_mt(f, 0.0, 10, tol=1e-12) is None


def test_detect_mt_tolerance_validation():
    with pytest.raises(FracsusValueError):
        detect_mt(quad(), 0.0, 10, tol=-1.0)


# ------------------------------------------------------------- gap

def test_misiurewicz_gap_values():
    data = critical_orbit(quad(), 0.0, 6)
    assert misiurewicz_gap(data) == 2.0
    data1 = critical_orbit(quad(), 0.0, 1)
    assert misiurewicz_gap(data1) == 2.0
    t_star = bisect_mt_parameter()
    f = UnimodalFamily(t0=t_star, window=(-0.05, 0.05))
    p = 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * t_star))
    gap = misiurewicz_gap(critical_orbit(f, 0.0, 12))
    assert abs(gap - p) < 1e-9


def test_beta_endpoint_fixed_point_identity():
    for t in (1.2, 1.5436890127, 2.0):
        beta = beta_endpoint(t)
        assert abs((beta * beta - beta) - t) < 1e-12
        # f_t(beta) = -beta and f_t(0) = t <= beta
        assert abs((t - beta * beta) + beta) < 1e-12
        assert t <= beta + 1e-12
