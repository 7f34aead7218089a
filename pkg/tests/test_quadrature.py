import math

import numpy as np
import pytest

from fracsus.errors import DomainError
from fracsus.quadrature import (
    QuadratureSpec,
    SingularMark,
    build_mesh,
    gauss_jacobi_panel,
    gauss_legendre_panel,
    integrate,
    integrate_function,
)


def test_gauss_legendre_panel_polynomial_exact():
    x, w = gauss_legendre_panel(-1.0, 3.0, 8)
    val = integrate(x**7 - 2 * x**3 + 1.0, w)
    exact = (3.0**8 - 1.0) / 8 - 2 * (3.0**4 - 1.0) / 4 + 4.0
    assert abs(val - exact) < 1e-12 * abs(exact)


def test_gauss_jacobi_panel_absorbs_left_singularity():
    # int_0^1 t^(-1/2) (1 + t) dt = 2 + 2/3; raw integrand at the nodes
    x, w = gauss_jacobi_panel(0.0, 1.0, 12, -0.5, at_lo=True)
    val = integrate(x**-0.5 * (1.0 + x), w)
    assert abs(val - (2.0 + 2.0 / 3.0)) < 1e-13


def test_gauss_jacobi_panel_right_singularity():
    # int_0^1 (1-t)^(-0.75) dt = 4
    x, w = gauss_jacobi_panel(0.0, 1.0, 12, -0.75, at_lo=False)
    val = integrate((1.0 - x) ** -0.75, w)
    assert abs(val - 4.0) < 1e-12


def test_build_mesh_interior_singularity():
    # int_0^2 |x - 1|^(-1/2) dx = 4
    marks = [SingularMark(1.0, -0.5, -0.5)]
    val = integrate_function(lambda x: np.abs(x - 1.0) ** -0.5, 0.0, 2.0, marks)
    assert abs(val - 4.0) < 1e-10


def test_build_mesh_endpoint_exponent_from_mark():
    # mark sitting exactly on the lower endpoint supplies its inward exponent
    marks = [SingularMark(0.0, None, -0.9)]
    val = integrate_function(lambda x: x**-0.9, 0.0, 1.0, marks)
    assert abs(val - 10.0) < 1e-9


def test_build_mesh_jump_split_only():
    f = lambda x: np.where(x < 0.5, 1.0, 3.0)
    val = integrate_function(f, 0.0, 1.0, [SingularMark(0.5, None, None)])
    assert abs(val - 2.0) < 1e-14


def test_subcount_resolves_oscillation():
    omega = 200.0
    f = lambda x: np.cos(omega * x)
    exact = math.sin(omega) / omega
    sub = lambda a, b: max(1, int(omega * (b - a) / 2.5))
    val = integrate_function(f, 0.0, 1.0, [], subcount=sub)
    assert abs(val - exact) < 1e-10


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(panel_order=2)
    with pytest.raises(DomainError):
        QuadratureSpec(grading_ratio=1.5)
    with pytest.raises(DomainError):
        QuadratureSpec(inner_cutoff=-1.0)
    with pytest.raises(DomainError):
        build_mesh(1.0, 1.0)


def test_mesh_nodes_strictly_interior():
    marks = [SingularMark(0.3, -0.5, -0.5)]
    nodes, _ = build_mesh(0.0, 1.0, marks)
    assert np.all(nodes > 0.0) and np.all(nodes < 1.0)
    assert np.all(np.abs(nodes - 0.3) > 0.0)
