import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pie_solver.errors import ConfigError, ExpressionSyntaxError, InvalidArgumentError, KernelEvaluationError
from pie_solver.expr import free_variables
from pie_solver.kernel import (
    adjoint_kernel,
    builtin_kernel,
    check_condition_I,
    describe,
    kernel_from_config,
    kernel_from_expression,
    rhs_from_expression,
    sample_rhs,
    separable_kernel,
)
from pie_solver.quadrature import gauss_legendre


def test_builtin_kernels_match_their_formulas():
    example1 = builtin_kernel("example1")
    example2 = builtin_kernel("example2")
    assert example1(0.3, 0.7, 0.5) == pytest.approx(math.exp(0.3 - 0.7 + 0.5))
    assert example2(0.3, 0.7, 0.5) == pytest.approx(math.exp(-0.4) * 0.5)
    assert example1.is_separable and example2.label == "example2"


def test_unknown_builtin():
    with pytest.raises(InvalidArgumentError):
        builtin_kernel("example3")


def test_separable_factors_check_their_variables(unit):
    with pytest.raises(InvalidArgumentError):
        separable_kernel("exp(s)", "1", "y", unit)


def test_kernel_broadcasts_over_grids(unit):
    k = kernel_from_expression("x + 2*s + 3*y", unit)
    x = np.linspace(0, 1, 4)
    values = k(x[:, None], x[None, :], 0.5)
    assert values.shape == (4, 4)
    assert values[1, 2] == pytest.approx(x[1] + 2 * x[2] + 1.5)


def test_non_finite_kernel_value_names_the_point(unit):
    k = kernel_from_expression("exp(1000*x)", unit)
    with pytest.raises(KernelEvaluationError) as info:
        k(np.array([0.1, 0.9]), 0.0, 0.0)
    assert info.value.point == (0.9, 0.0, 0.0)


def test_rhs_may_not_use_s(unit):
    with pytest.raises(InvalidArgumentError):
        rhs_from_expression("x*s", unit)
    g = rhs_from_expression("x + y", unit)
    grid = sample_rhs(g, np.array([0.1, 0.2]), np.array([1.0, 2.0, 3.0]))
    assert grid.shape == (2, 3)
    assert grid[1, 2] == pytest.approx(3.2)


@pytest.mark.parametrize(
    "config, label",
    [
        ({"type": "builtin", "name": "example2"}, "example2"),
        ({"type": "expr", "k": "exp(x-s)*y"}, "exp(x-s)*y"),
        ({"type": "separable", "p": "exp(x)", "q": "exp(-s)", "r": "y", "a": 0, "b": 2}, None),
    ],
)
def test_kernel_from_config(config, label):
    k = kernel_from_config(config)
    if label:
        assert k.label == label
    assert k(0.2, 0.1, 0.5) == pytest.approx(math.exp(0.1) * 0.5)


@pytest.mark.parametrize(
    "config",
    [
        {"type": "expr"},
        {"type": "spline"},
        {"type": "separable", "p": "exp(x)", "q": "exp(-s)"},
        {"type": "expr", "k": "x", "a": 1, "b": 0},
        {"type": "expr", "k": "x", "a": "zero"},
        ["not", "an", "object"],
    ],
)
def test_bad_kernel_configs(config):
    with pytest.raises(ConfigError):
        kernel_from_config(config)


def test_bad_kernel_expression_is_a_syntax_error():
    with pytest.raises(ExpressionSyntaxError):
        kernel_from_config({"type": "expr", "k": "exp(x-"})


def test_adjoint_swaps_x_and_s(unit):
    k = kernel_from_expression("x + 10*s + 100*y", unit)
    adjoint = adjoint_kernel(k)
    assert adjoint(1.0, 2.0, 3.0) == pytest.approx(k(2.0, 1.0, 3.0))


def test_adjoint_keeps_separable_structure():
    adjoint = adjoint_kernel(builtin_kernel("example1"))
    assert adjoint.is_separable
    assert free_variables(adjoint.structure.p) == {"x"}
    assert free_variables(adjoint.structure.q) == {"s"}
    assert adjoint(0.2, 0.6, 0.1) == pytest.approx(math.exp(0.6 - 0.2 + 0.1))
    assert adjoint.structure.product(0.2, 0.6, 0.1) == pytest.approx(adjoint(0.2, 0.6, 0.1))


def test_scaled_kernel():
    k = builtin_kernel("example2").scaled(3.0)
    assert k(0.0, 0.0, 0.5) == pytest.approx(1.5)
    assert k.structure.scale == 3.0


def test_condition_I_bound_for_example2(rule24):
    report = check_condition_I(builtin_kernel("example2"), rule24, rule24)
    factor = (math.e ** 2 - 1) * (1 - math.e ** -2) / 4
    assert_allclose(report.per_t, factor * rule24.nodes ** 2, rtol=1e-12)
    assert report.sup_b == pytest.approx(factor * rule24.nodes[-1] ** 2, rel=1e-12)
    assert factor == pytest.approx(1.381097, abs=1e-6)


def test_describe():
    assert describe(builtin_kernel("example1")) == {"label": "example1", "a": 0.0, "b": 1.0, "separable": True}


def test_condition_I_bound_is_stable_under_rule_refinement(unit):
    k = kernel_from_expression("sin(x+s)*y + exp(-x*s)", unit)
    t_rule = gauss_legendre(10, unit)
    coarse = check_condition_I(k, gauss_legendre(16, unit), t_rule)
    fine = check_condition_I(k, gauss_legendre(32, unit), t_rule)
    assert_allclose(coarse.per_t, fine.per_t, rtol=1e-12)
    assert coarse.sup_b == pytest.approx(fine.sup_b, rel=1e-12)
