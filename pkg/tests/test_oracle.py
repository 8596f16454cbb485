import numpy as np
import pytest
from numpy.testing import assert_allclose

from pie_solver.command_modules.verify_command import random_separable_kernels
from pie_solver.errors import ConvergenceError, DegenerateSystemError, SizeLimitError
from pie_solver.fredholm import assemble_slice
from pie_solver.kernel import builtin_kernel, kernel_from_expression, rhs_from_expression, sample_rhs
from pie_solver.oracle import assemble_full, neumann_solve, solve_full
from pie_solver.pie import solve
from pie_solver.quadrature import gauss_legendre

G_EXAMPLE = "exp(x)*y^0.5"


def test_zero_kernel_gives_zero_matrix(rule12):
    op = assemble_full(kernel_from_expression("0", rule12.domain), rule12, rule12)
    assert op.matrix.shape == (144, 144)
    assert not np.any(op.matrix)


def test_blocks_match_the_slices_and_nothing_else(unit):
    x_rule, y_rule = gauss_legendre(3, unit), gauss_legendre(4, unit)
    k = builtin_kernel("example2")
    op = assemble_full(k, x_rule, y_rule)
    n = x_rule.size
    for j, y in enumerate(y_rule.nodes):
        block = op.matrix[j * n:(j + 1) * n, j * n:(j + 1) * n]
        assert_allclose(block, assemble_slice(k, x_rule, y).weighted, rtol=0, atol=0)
    mask = np.kron(np.eye(y_rule.size), np.ones((n, n))) == 0
    assert np.all(op.matrix[mask] == 0)


def test_two_by_two_blocks_scale_with_y(unit):
    rule = gauss_legendre(2, unit)
    op = assemble_full(builtin_kernel("example2"), rule, rule)
    y1, y2 = rule.nodes
    assert_allclose(op.matrix[2:, 2:], op.matrix[:2, :2] * (y2 / y1), rtol=1e-14)


def test_size_guard(unit):
    with pytest.raises(SizeLimitError):
        assemble_full(builtin_kernel("example2"), gauss_legendre(65, unit), gauss_legendre(64, unit))


def test_zero_kappa_returns_g(rule12):
    op = assemble_full(builtin_kernel("example1"), rule12, rule12)
    g = np.arange(144, dtype=float).reshape(12, 12)
    assert_allclose(solve_full(op, 0, g), g, rtol=0, atol=0)


def test_full_solve_matches_the_explicit_solution(rule24):
    g = rhs_from_expression(G_EXAMPLE, rule24.domain)
    op = assemble_full(builtin_kernel("example2"), rule24, rule24)
    f = solve_full(op, 0.5, sample_rhs(g, rule24.nodes, rule24.nodes))
    x, y = np.meshgrid(rule24.nodes, rule24.nodes, indexing="ij")
    assert np.max(np.abs(f - np.exp(x) * np.sqrt(y) / (1 - 0.5 * y))) <= 1e-8


def test_full_solve_agrees_with_slice_solve(rule12):
    g = rhs_from_expression(G_EXAMPLE, rule12.domain)
    cases = [(builtin_kernel("example2"), 0.5)] + [(k, 0.25) for k in random_separable_kernels(5)]
    for k, kappa in cases:
        f = solve(k, g, kappa, rule12, rule12).f_values
        full = solve_full(assemble_full(k, rule12, rule12), kappa, sample_rhs(g, rule12.nodes, rule12.nodes))
        assert np.max(np.abs(f - full)) <= 1e-12


def test_singular_full_system(unit):
    rule = gauss_legendre(4, unit)
    op = assemble_full(kernel_from_expression("1", unit), rule, rule)
    with pytest.raises(DegenerateSystemError):
        solve_full(op, 1.0, np.ones((4, 4)))


def test_neumann_series_matches_full_solve(rule12):
    k = builtin_kernel("example2")
    g = rhs_from_expression(G_EXAMPLE, rule12.domain)
    full = solve_full(assemble_full(k, rule12, rule12), 0.5, sample_rhs(g, rule12.nodes, rule12.nodes))
    neumann = neumann_solve(k, g, 0.5, rule12, rule12, tol=1e-10)
    assert np.max(np.abs(neumann - full)) <= 1e-9


def test_three_solvers_agree_at_a_quarter(rule12):
    g = rhs_from_expression("cos(x)*(1+y)", rule12.domain)
    for name in ("example1", "example2"):
        k = builtin_kernel(name)
        sliced = solve(k, g, 0.25, rule12, rule12).f_values
        full = solve_full(assemble_full(k, rule12, rule12), 0.25, sample_rhs(g, rule12.nodes, rule12.nodes))
        neumann = neumann_solve(k, g, 0.25, rule12, rule12)
        assert np.max(np.abs(sliced - full)) <= 1e-8
        assert np.max(np.abs(neumann - full)) <= 1e-8


def test_neumann_at_zero_kappa_is_g(rule12):
    g = rhs_from_expression("x*y", rule12.domain)
    f = neumann_solve(builtin_kernel("example1"), g, 0, rule12, rule12)
    assert_allclose(f, sample_rhs(g, rule12.nodes, rule12.nodes), rtol=0, atol=0)


def test_neumann_refuses_outside_its_disc(rule12):
    g = rhs_from_expression("1", rule12.domain)
    with pytest.raises(ConvergenceError):
        neumann_solve(builtin_kernel("example1"), g, 2.0, rule12, rule12)
