import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from pie_solver.errors import InvalidArgumentError
from pie_solver.quadrature import Domain, QuadratureRule, gauss_legendre, integrate, tensor_rule, uniform_grid


def test_single_node_rule_is_the_midpoint(unit):
    rule = gauss_legendre(1, unit)
    assert_allclose(rule.nodes, [0.5])
    assert_allclose(rule.weights, [1.0])


def test_two_point_rule_matches_closed_form(unit):
    rule = gauss_legendre(2, unit)
    offset = 0.5 / math.sqrt(3.0)
    assert_allclose(rule.nodes, [0.5 - offset, 0.5 + offset], rtol=0, atol=1e-15)
    assert_allclose(rule.weights, [0.5, 0.5], rtol=0, atol=1e-15)


@pytest.mark.parametrize("n", [3, 8, 24, 64])
def test_weights_sum_to_interval_length(n):
    domain = Domain(-2.0, 3.0)
    rule = gauss_legendre(n, domain)
    assert math.fsum(rule.weights) == pytest.approx(5.0, abs=1e-13)
    assert np.all(rule.weights > 0)
    assert np.all(np.diff(rule.nodes) > 0)
    assert rule.nodes[0] > domain.a and rule.nodes[-1] < domain.b


def test_nodes_are_symmetric_about_the_midpoint(unit):
    rule = gauss_legendre(7, unit)
    assert_allclose(rule.nodes + rule.nodes[::-1], np.ones(7), atol=1e-15)
    assert rule.nodes[3] == 0.5


def test_exact_for_polynomials_up_to_degree_2n_minus_1(unit):
    n = 5
    rule = gauss_legendre(n, unit)
    for degree in range(2 * n):
        value = integrate(rule, rule.nodes ** degree)
        assert value.real == pytest.approx(1.0 / (degree + 1), abs=1e-14)


def test_smooth_integrand_converges(unit):
    rule = gauss_legendre(24, unit)
    assert integrate(rule, np.exp(rule.nodes)).real == pytest.approx(math.e - 1, abs=1e-14)


def test_integrate_complex_samples(unit):
    rule = gauss_legendre(4, unit)
    value = integrate(rule, (1 + 2j) * np.ones(4))
    assert value == pytest.approx(1 + 2j)


@pytest.mark.parametrize("n", [0, -3, True, 2.5])
def test_invalid_node_count(unit, n):
    with pytest.raises(InvalidArgumentError):
        gauss_legendre(n, unit)


def test_invalid_domain():
    with pytest.raises(InvalidArgumentError):
        Domain(1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        Domain(0.0, math.inf)


def test_rule_rejects_bad_weights(unit):
    with pytest.raises(InvalidArgumentError):
        QuadratureRule(unit, np.array([0.25, 0.75]), np.array([0.2, 0.2]))
    with pytest.raises(InvalidArgumentError):
        QuadratureRule(unit, np.array([0.0, 0.5]), np.array([0.5, 0.5]))


def test_rule_arrays_are_read_only(unit):
    rule = gauss_legendre(3, unit)
    with pytest.raises(ValueError):
        rule.nodes[0] = 0.1


def test_integrate_rejects_length_mismatch(unit):
    with pytest.raises(InvalidArgumentError):
        integrate(gauss_legendre(3, unit), [1.0, 2.0])


def test_tensor_rule_is_row_major(unit):
    r1, r2 = gauss_legendre(2, unit), gauss_legendre(3, unit)
    product = tensor_rule(r1, r2)
    assert product.shape == (2, 3)
    assert product.nodes.shape == (6, 2)
    assert_allclose(product.nodes[1], [r1.nodes[0], r2.nodes[1]])
    assert math.fsum(product.weights) == pytest.approx(1.0, abs=1e-14)
    assert product.domain.measure == 1.0


def test_uniform_grid_includes_endpoints():
    grid = uniform_grid(Domain(0.0, 2.0), 64)
    assert grid.size == 65
    assert grid[0] == 0.0 and grid[-1] == 2.0
    assert_allclose(np.diff(grid), 2.0 / 64)


@seed(5)
@settings(max_examples=50, deadline=None)
@given(
    f=arrays(np.float64, 9, elements=st.floats(min_value=-10.0, max_value=10.0)),
    g=arrays(np.float64, 9, elements=st.floats(min_value=-10.0, max_value=10.0)),
    alpha=st.complex_numbers(max_magnitude=5.0),
    beta=st.floats(min_value=-5.0, max_value=5.0),
)
def test_integrate_is_linear(f, g, alpha, beta):
    rule = gauss_legendre(9, Domain(-1.0, 2.0))
    combined = integrate(rule, alpha * f + beta * g)
    separate = alpha * integrate(rule, f) + beta * integrate(rule, g)
    assert abs(combined - separate) <= 1e-11
