"""
Brute-force reference solvers used to cross-check the slice-wise solver.

The full discretized operator is assembled as one dense matrix on the tensor
grid and solved monolithically. It is built straight from kernel samples and
never goes through the slice machinery, so agreement with pie.solve is
meaningful evidence.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from pie_solver.errors import ConvergenceError, DegenerateSystemError, InvalidArgumentError, SizeLimitError
from pie_solver.kernel import Kernel, RightHandSide, sample_rhs
from pie_solver.quadrature import QuadratureRule

logger = logging.getLogger(__name__)

MAX_UNKNOWNS = 4096
DIVERGENCE_STREAK = 3


@dataclass(frozen=True, eq=False)
class FullOperator:
    """
    Dense matrix of T1 on the tensor grid, y-major ordering.

    Unknown (i, j) sits at index j * n + i, so slice j occupies the block
    [j*n, (j+1)*n) and every off-diagonal block is zero.
    """

    matrix: np.ndarray
    x_rule: QuadratureRule = field(repr=False)
    y_rule: QuadratureRule = field(repr=False)

    @property
    def shape(self):
        return self.x_rule.size, self.y_rule.size


def assemble_full(k: Kernel, x_rule: QuadratureRule, y_rule: QuadratureRule) -> FullOperator:
    """
    Materialize the block-diagonal matrix of T1.

    Raises:
        SizeLimitError: More than MAX_UNKNOWNS grid unknowns
    """
    n, m = x_rule.size, y_rule.size
    if n * m > MAX_UNKNOWNS:
        raise SizeLimitError(f"full operator with {n}x{m}={n * m} unknowns exceeds the limit of {MAX_UNKNOWNS}")
    x, w = x_rule.nodes, x_rule.weights
    matrix = np.zeros((n * m, n * m))
    for j, y in enumerate(y_rule.nodes):
        block = slice(j * n, (j + 1) * n)
        matrix[block, block] = k(x[:, None], x[None, :], y) * w[None, :]
    matrix.setflags(write=False)
    return FullOperator(matrix=matrix, x_rule=x_rule, y_rule=y_rule)


def _to_vector(grid: np.ndarray) -> np.ndarray:
    return np.asarray(grid).T.ravel()


def _to_grid(vector: np.ndarray, n: int, m: int) -> np.ndarray:
    return vector.reshape(m, n).T


def solve_full(op: FullOperator, kappa: complex, g_grid: np.ndarray) -> np.ndarray:
    """
    Solve (I - kappa T) f = g as one dense system.

    Args:
        op: Assembled operator
        kappa: Equation parameter
        g_grid: Right-hand side samples g[i, j] = g(x_i, y_j)

    Returns:
        numpy.ndarray: Complex grid f[i, j]

    Raises:
        DegenerateSystemError: System singular at working precision
    """
    n, m = op.shape
    g_grid = np.asarray(g_grid)
    if g_grid.shape != (n, m):
        raise InvalidArgumentError(f"right-hand side grid must have shape {(n, m)}, got {g_grid.shape}")
    kappa = complex(kappa)
    rhs = _to_vector(g_grid).astype(complex)
    if kappa == 0:
        return _to_grid(rhs, n, m).copy()

    system = np.eye(n * m, dtype=complex) - kappa * op.matrix
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(system, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * n * m * max(pivots.max(), 1.0):
        raise DegenerateSystemError(
            f"I - kappa T is singular at working precision for kappa={kappa} (smallest pivot {pivots.min():.3e})"
        )
    f = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    logger.debug("full solve of %d unknowns at kappa=%s", n * m, kappa)
    return _to_grid(f, n, m)


def neumann_solve(
    k: Kernel,
    g: RightHandSide,
    kappa: complex,
    x_rule: QuadratureRule,
    y_rule: QuadratureRule,
    max_iter: int = 1000,
    tol: float = 1e-12,
) -> np.ndarray:
    """
    Sum the Neumann series f = sum_k kappa^k T1^k g on the tensor grid.

    Iteration stops once the max-norm of the latest term drops below tol.

    Raises:
        ConvergenceError: Spectral radius of kappa A W reaches 1 on some slice,
            the terms grow for three consecutive steps, or max_iter is hit
    """
    if tol <= 0 or max_iter < 1:
        raise InvalidArgumentError("neumann_solve needs tol > 0 and max_iter >= 1")
    kappa = complex(kappa)
    x, w = x_rule.nodes, x_rule.weights
    # weighted[i, l, j] = k(x_i, x_l, y_j) w_l
    weighted = k(x[:, None, None], x[None, :, None], y_rule.nodes[None, None, :]) * w[None, :, None]

    if kappa != 0:
        for j, y in enumerate(y_rule.nodes):
            rho = float(np.max(np.abs(scipy.linalg.eigvals(kappa * weighted[:, :, j]))))
            if rho >= 1.0:
                raise ConvergenceError(
                    f"Neumann series diverges: spectral radius {rho:.4g} >= 1 at y={y:.6g}"
                )

    term = sample_rhs(g, x, y_rule.nodes).astype(complex)
    f = term.copy()
    previous: Optional[float] = None
    streak = 0
    for iteration in range(1, max_iter + 1):
        term = kappa * np.einsum("ilj,lj->ij", weighted, term)
        f += term
        increment = float(np.max(np.abs(term)))
        if increment < tol:
            logger.debug("Neumann series converged after %d terms", iteration)
            return f
        if previous is not None and increment > previous:
            streak += 1
            if streak >= DIVERGENCE_STREAK:
                raise ConvergenceError(f"Neumann series terms grew for {streak} consecutive iterations")
        else:
            streak = 0
        previous = increment
    raise ConvergenceError(f"Neumann series did not reach tol={tol:g} in {max_iter} iterations")
