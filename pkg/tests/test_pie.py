import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pie_solver.errors import (
    CharacteristicParameterError,
    ConditionIIDivergentError,
    IndeterminateClassificationError,
    InvalidArgumentError,
    InvalidWitnessError,
)
from pie_solver.kernel import builtin_kernel, kernel_from_expression, rhs_from_expression
from pie_solver.pie import (
    ConditionIIVerdict,
    Verdict,
    adjoint_class_check,
    adjoint_eigen_check,
    check_condition_II,
    classify,
    condition_II_family,
    detect_eigenvalues,
    determinant_profile,
    multiplicity_witnesses,
    solve,
)
from pie_solver.quadrature import Domain, uniform_grid

G_EXAMPLE = "exp(x)*y^0.5"


def _classify(kernel, kappa, rule):
    return classify(determinant_profile(kernel, kappa, rule))


def test_profile_at_zero_kappa_is_identically_one(rule24):
    profile = determinant_profile(builtin_kernel("example1"), 0, rule24)
    assert profile.y_nodes.size == 65
    assert np.all(profile.values == 1)


def test_profile_refines_around_the_zero(rule24):
    profile = determinant_profile(builtin_kernel("example1"), 0.5, rule24, y_depth=6)
    assert profile.y_nodes.size > 65
    spacing = np.diff(profile.y_nodes)
    near = np.abs(profile.y_nodes[:-1] - math.log(2)) < 1 / 64
    assert spacing[near].min() == pytest.approx(1 / 64 / 2 ** 6)
    assert np.all(spacing > 0)
    assert abs(profile.evaluate_at(0.3) - (1 - 0.5 * math.exp(0.3))) <= 1e-12


def test_profile_rejects_negative_depth(rule24):
    with pytest.raises(InvalidArgumentError):
        determinant_profile(builtin_kernel("example1"), 0.5, rule24, y_depth=-1)


@pytest.mark.parametrize("kappa", [0.2, 1.5, 2.0, 0.3 + 0.4j])
def test_regular_parameters_of_example1(rule24, kappa):
    result = _classify(builtin_kernel("example1"), kappa, rule24)
    assert result.verdict is Verdict.REGULAR
    assert result.zeros == () and result.intervals == ()
    assert result.min_abs_det > 1e-8


@pytest.mark.parametrize("kappa", [0.4, 0.5, 0.9, 1.0])
def test_essential_parameters_of_example1(rule24, kappa):
    result = _classify(builtin_kernel("example1"), kappa, rule24)
    assert result.verdict is Verdict.ESSENTIAL
    assert len(result.zeros) == 1
    assert result.zeros[0].y0 == pytest.approx(max(0.0, math.log(1 / kappa)), abs=1e-6)


@pytest.mark.parametrize("kernel, kappa", [
    (builtin_kernel("example1"), 0.5),
    (builtin_kernel("example2"), 0.3 + 0.4j),
    (kernel_from_expression("cos(x*s) + x*y", Domain(0.0, 1.0)), 0.3),
])
def test_scaled_kernel_at_scaled_parameter_has_the_same_profile(rule24, kernel, kappa):
    c = 2.5
    own = determinant_profile(kernel, kappa, rule24)
    scaled = determinant_profile(kernel.scaled(c), kappa / c, rule24)
    for y in uniform_grid(kernel.domain, 32):
        assert abs(own.evaluate_at(y) - scaled.evaluate_at(y)) <= 1e-12
    assert classify(own).verdict is classify(scaled).verdict


def test_zero_location_and_order(rule24):
    result = _classify(builtin_kernel("example1"), 0.5, rule24)
    assert abs(result.zeros[0].y0 - math.log(2)) <= 1e-6
    assert result.zeros[0].order_estimate == pytest.approx(1.0, abs=0.05)
    assert result.min_abs_det <= 1e-8


def test_example2_kappa_two_has_a_zero_at_one_half(rule24):
    result = _classify(builtin_kernel("example2"), 2.0, rule24)
    assert result.verdict is Verdict.ESSENTIAL
    assert result.zeros[0].y0 == pytest.approx(0.5, abs=1e-6)
    assert result.to_dict()["verdict"] == "essential"


def test_constant_kernel_is_characteristic_at_one(rule24):
    result = _classify(kernel_from_expression("1", rule24.domain), 1.0, rule24)
    assert result.verdict is Verdict.CHARACTERISTIC
    assert result.intervals == ((0.0, 1.0),)
    assert result.zeros == ()


def test_zero_kernel_is_regular_everywhere(rule24):
    result = _classify(kernel_from_expression("0", rule24.domain), 5.0, rule24)
    assert result.verdict is Verdict.REGULAR
    assert result.min_abs_det == 1.0


def test_near_zero_within_a_decade_of_the_threshold_is_indeterminate(rule24):
    # |D1| bottoms out at 5e-8 near y = 1/2
    with pytest.raises(IndeterminateClassificationError):
        _classify(builtin_kernel("example2"), 2.0 + 1e-7j, rule24)


def test_classify_rejects_bad_tolerances(rule24):
    profile = determinant_profile(builtin_kernel("example1"), 0.5, rule24)
    with pytest.raises(InvalidArgumentError):
        classify(profile, zero_tol=10.0)


def test_solve_reproduces_the_explicit_solution(rule24):
    g = rhs_from_expression(G_EXAMPLE, rule24.domain)
    solution = solve(builtin_kernel("example2"), g, 0.5, rule24, rule24)
    x, y = np.meshgrid(rule24.nodes, rule24.nodes, indexing="ij")
    assert_allclose(solution.f_values, np.exp(x) * np.sqrt(y) / (1 - 0.5 * y), rtol=0, atol=1e-8)
    assert solution.residual_max <= 1e-9
    assert solution.class_used.verdict is Verdict.REGULAR
    assert solution.condition_II is None
    assert solution.excluded == ()


def test_minor_method_agrees_with_resolvent(rule12):
    k = kernel_from_expression("cos(x*s) + x*y", rule12.domain)
    g = rhs_from_expression("exp(-x)*(1+y)", rule12.domain)
    resolvent = solve(k, g, 0.4, rule12, rule12)
    minor = solve(k, g, 0.4, rule12, rule12, method="minor")
    assert np.max(np.abs(resolvent.f_values - minor.f_values)) <= 1e-10


def test_solve_rejects_unknown_method(rule12):
    g = rhs_from_expression("1", rule12.domain)
    with pytest.raises(InvalidArgumentError):
        solve(builtin_kernel("example2"), g, 0.5, rule12, rule12, method="neumann")


def test_zero_kappa_returns_g(rule12):
    g = rhs_from_expression("x + y", rule12.domain)
    solution = solve(builtin_kernel("example1"), g, 0, rule12, rule12)
    assert_allclose(solution.f_values, rule12.nodes[:, None] + rule12.nodes[None, :], rtol=0, atol=0)


@pytest.mark.parametrize("kappa", [0.2, 2.0])
def test_homogeneous_equation_has_only_the_trivial_solution(rule24, kappa):
    zero = rhs_from_expression("0", rule24.domain)
    solution = solve(builtin_kernel("example1"), zero, kappa, rule24, rule24)
    assert np.max(np.abs(solution.f_values)) <= 1e-12


def test_characteristic_parameter_is_refused(rule12):
    g = rhs_from_expression("1", rule12.domain)
    with pytest.raises(CharacteristicParameterError) as info:
        solve(kernel_from_expression("1", rule12.domain), g, 1.0, rule12, rule12)
    assert info.value.exit_code == 5
    assert info.value.to_dict()["class"]["verdict"] == "characteristic"


def test_divergent_condition_II_is_refused(rule24):
    g = rhs_from_expression(G_EXAMPLE, rule24.domain)
    with pytest.raises(ConditionIIDivergentError) as info:
        solve(builtin_kernel("example2"), g, 2.0, rule24, rule24)
    report = info.value.report
    assert report.verdict is ConditionIIVerdict.DIVERGENT
    assert report.zero_diagnostics[0].status == "divergent"
    assert info.value.parameter_class.zeros[0].y0 == pytest.approx(0.5, abs=1e-6)


def test_divergent_integral_grows_like_one_over_epsilon(rule24):
    # ∫ y c / (1 - 2y)^2 outside |y - 1/2| < eps equals (c / 4)(1/eps - 2), c = (e^2 - 1) / 2
    kernel = builtin_kernel("example2")
    profile = determinant_profile(kernel, 2.0, rule24)
    report = check_condition_II(rhs_from_expression(G_EXAMPLE, rule24.domain), profile, classify(profile))
    c = (math.e ** 2 - 1) / 2
    expected = [c / 4 * (1 / eps - 2) for eps in report.radii]
    assert_allclose(report.integral_estimates, expected, rtol=1e-6)


def test_cancelling_rhs_passes_condition_II(rule24):
    g = rhs_from_expression("(1-2*y)*" + G_EXAMPLE, rule24.domain)
    solution = solve(builtin_kernel("example2"), g, 2.0, rule24, rule24)
    assert solution.condition_II.verdict is ConditionIIVerdict.FINITE
    keep = np.abs(1 - 2 * rule24.nodes) > 0.05
    exact = np.exp(rule24.nodes)[:, None] * np.sqrt(rule24.nodes)[None, :]
    assert np.max(np.abs(solution.f_values[:, keep] - exact[:, keep])) <= 1e-7


def test_homogeneous_equation_at_an_essential_parameter(rule24):
    zero = rhs_from_expression("0", rule24.domain)
    profile = determinant_profile(builtin_kernel("example2"), 2.0, rule24)
    report = check_condition_II(zero, profile, classify(profile))
    assert report.integral_estimates == (0.0, 0.0, 0.0)
    assert report.zero_diagnostics[0].status == "ok"
    assert report.verdict is ConditionIIVerdict.FINITE

    solution = solve(builtin_kernel("example2"), zero, 2.0, rule24, rule24)
    assert solution.condition_II.verdict is ConditionIIVerdict.FINITE
    assert np.max(np.abs(solution.f_values)) <= 1e-12


def test_condition_II_without_zeros_is_finite(rule24):
    profile = determinant_profile(builtin_kernel("example2"), 0.5, rule24)
    report = check_condition_II(rhs_from_expression(G_EXAMPLE, rule24.domain), profile, classify(profile))
    assert report.verdict is ConditionIIVerdict.FINITE
    assert len(report.integral_estimates) == 1


def test_condition_II_zero_at_the_boundary_is_indeterminate(rule24):
    # kappa = 1 puts the zero of 1 - kappa e^y at y = 0
    profile = determinant_profile(builtin_kernel("example1"), 1.0, rule24)
    parameter_class = classify(profile)
    g = rhs_from_expression("exp(x)*y^3", rule24.domain)
    report = check_condition_II(g, profile, parameter_class)
    assert report.zero_diagnostics[0].status == "boundary"
    assert report.verdict is ConditionIIVerdict.INDETERMINATE


def test_admissible_family_passes_condition_II(rule24):
    profile = determinant_profile(builtin_kernel("example2"), 2.0, rule24)
    reports = condition_II_family(rhs_from_expression(G_EXAMPLE, rule24.domain), profile, classify(profile), count=3)
    assert [r.verdict for r in reports] == [ConditionIIVerdict.FINITE] * 3


def test_constant_kernel_has_eigenvalue_one(rule24):
    report = detect_eigenvalues(kernel_from_expression("1", rule24.domain), rule24)
    assert len(report.detected) == 1
    found = report.detected[0]
    assert found.value == pytest.approx(1.0, abs=1e-10)
    assert found.support == (0.0, 1.0)


def test_example2_has_no_eigenvalues(rule24):
    report = detect_eigenvalues(builtin_kernel("example2"), rule24)
    assert report.detected == ()
    assert_allclose(report.curves[:, 0].real, report.y_nodes, atol=1e-12)


def test_zero_kernel_has_zero_curves(rule12):
    report = detect_eigenvalues(kernel_from_expression("0", rule12.domain), rule12)
    assert report.detected == ()
    assert np.all(report.curves == 0)


def test_witnesses_for_constant_kernel(rule24):
    residuals = multiplicity_witnesses(
        kernel_from_expression("1", rule24.domain), 1.0, np.ones(rule24.size),
        ["1", "y", "sin(y)", "y^2"], rule24, rule24,
    )
    assert max(residuals) <= 1e-10


def test_zero_witness_is_rejected(rule12):
    with pytest.raises(InvalidWitnessError):
        multiplicity_witnesses(
            kernel_from_expression("1", rule12.domain), 1.0, np.ones(rule12.size), ["0"], rule12, rule12
        )


@pytest.mark.parametrize("b", ["x*y", "s + 1"])
def test_witness_depending_on_x_or_s_is_rejected(rule12, b):
    with pytest.raises(InvalidArgumentError, match="may only use y"):
        multiplicity_witnesses(
            kernel_from_expression("1", rule12.domain), 1.0, np.ones(rule12.size), ["y", b], rule12, rule12
        )


@pytest.mark.parametrize("name, kappa", [("example1", 0.3 + 0.4j), ("example2", 0.3 + 0.4j), ("example2", 2.0)])
def test_adjoint_conjugation(rule24, name, kappa):
    assert adjoint_class_check(builtin_kernel(name), kappa, rule24) <= 1e-12


def test_adjoint_eigenvalues_are_conjugate(rule12):
    pairs = adjoint_eigen_check(kernel_from_expression("exp(x-s)", rule12.domain), rule12)
    assert len(pairs) == 1
    own, other = pairs[0]
    assert own.value == pytest.approx(1.0, abs=1e-10)
    assert other.value == pytest.approx(1.0, abs=1e-10)
