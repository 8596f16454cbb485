"""
Nyström machinery for one slice y of the partial integral operator.

For fixed y the kernel k(., ., y) defines an ordinary integral operator K_y.
On quadrature nodes x_i with weights w_i it acts on samples as A W, where
A_ij = k(x_i, x_j, y) and W = diag(w). Everything the determinant theory
needs per slice (the Fredholm determinant of E - kappa K_y, its minor, the
resolvent solve and the spectrum) is computed from that matrix.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from pie_solver.config.settings import get_solver_settings
from pie_solver.errors import (
    ConvergenceDomainError,
    InvalidArgumentError,
    NearSingularSliceError,
    NumericError,
)
from pie_solver.kernel import Kernel
from pie_solver.quadrature import QuadratureRule

logger = logging.getLogger(__name__)

_POWER_ITERATIONS = 96


@dataclass(frozen=True, eq=False)
class SliceMatrix:
    """Kernel values A_ij = k(x_i, x_j, y) on the nodes of one rule."""

    y: float
    entries: np.ndarray
    rule: QuadratureRule = field(repr=False)

    @property
    def size(self) -> int:
        return self.rule.size

    @property
    def weighted(self) -> np.ndarray:
        """A W: the discrete action of K_y on node samples."""
        return self.entries * self.rule.weights[None, :]


@dataclass(frozen=True)
class SliceDeterminant:
    value: complex
    kappa: complex
    method: str  # "direct" or "series"
    y: float


@dataclass(frozen=True, eq=False)
class ResolventSolve:
    """Solution u of (I - kappa A W) u = g on one slice."""

    solution: np.ndarray
    residual_norm: float
    determinant: complex


@dataclass(frozen=True, eq=False)
class MinorMatrix:
    """Discrete Fredholm minor M = det * R with R = A (I - kappa W A)^-1."""

    entries: np.ndarray
    kappa: complex
    determinant: complex


def assemble_slice(k: Kernel, rule: QuadratureRule, y: float) -> SliceMatrix:
    """
    Sample the kernel on the node grid at a fixed y.

    Args:
        k: Kernel of the operator
        rule: Rule providing nodes x_i and weights w_i
        y: Slice parameter in [a, b]

    Returns:
        SliceMatrix: A_ij = k(x_i, x_j, y)
    """
    domain = rule.domain
    if not domain.a <= y <= domain.b:
        raise InvalidArgumentError(f"slice parameter y={y!r} lies outside [{domain.a}, {domain.b}]")
    x = rule.nodes
    entries = np.array(k(x[:, None], x[None, :], y), dtype=float)
    entries.setflags(write=False)
    return SliceMatrix(y=float(y), entries=entries, rule=rule)


def _shifted(slice_: SliceMatrix, kappa: complex) -> np.ndarray:
    return np.eye(slice_.size, dtype=complex) - complex(kappa) * slice_.weighted


def _lu(matrix: np.ndarray):
    with warnings.catch_warnings():
        # an exactly singular factor is a legitimate zero determinant
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    det = complex(np.prod(np.diag(lu)))
    if swaps % 2:
        det = -det
    return lu, piv, det


def determinant_direct(slice_: SliceMatrix, kappa: complex) -> SliceDeterminant:
    """det(I - kappa A W) from an LU factorization with partial pivoting."""
    kappa = complex(kappa)
    if kappa == 0:
        return SliceDeterminant(value=1 + 0j, kappa=kappa, method="direct", y=slice_.y)
    _, _, det = _lu(_shifted(slice_, kappa))
    return SliceDeterminant(value=det, kappa=kappa, method="direct", y=slice_.y)


def estimate_spectral_radius(matrix: np.ndarray, iterations: int = _POWER_ITERATIONS) -> float:
    """
    Power-iteration estimate of the spectral radius.

    The growth rate is averaged over the second half of the iterations, which
    also handles a dominant complex-conjugate pair. The start vector is fixed
    so the estimate is reproducible.
    """
    n = matrix.shape[0]
    v = np.random.default_rng(0).standard_normal(n).astype(complex)
    v /= np.linalg.norm(v)
    log_growth = 0.0
    counted = 0
    for it in range(iterations):
        v = matrix @ v
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return 0.0
        v /= norm
        if it >= iterations // 2:
            log_growth += np.log(norm)
            counted += 1
    return float(np.exp(log_growth / counted))


def determinant_series(slice_: SliceMatrix, kappa: complex, max_terms: int) -> SliceDeterminant:
    """
    Trace-series determinant exp(-sum_{m=1}^{M} kappa^m tr((A W)^m) / m).

    Valid only inside the disc where the spectral radius of kappa A W is below
    one; serves as an independent check of determinant_direct.

    Raises:
        ConvergenceDomainError: Estimated spectral radius is 1 or more
    """
    if max_terms < 1:
        raise InvalidArgumentError("max_terms must be at least 1")
    kappa = complex(kappa)
    if kappa == 0:
        return SliceDeterminant(value=1 + 0j, kappa=kappa, method="series", y=slice_.y)
    b = kappa * slice_.weighted
    rho = estimate_spectral_radius(b)
    if rho >= 1.0:
        raise ConvergenceDomainError(
            f"trace series diverges at y={slice_.y!r}: spectral radius estimate {rho:.4g} >= 1"
        )
    power = np.eye(slice_.size, dtype=complex)
    log_det = 0j
    for m in range(1, max_terms + 1):
        power = power @ b
        log_det -= np.trace(power) / m
    return SliceDeterminant(value=complex(np.exp(log_det)), kappa=kappa, method="series", y=slice_.y)


def resolvent_solve(
    slice_: SliceMatrix,
    kappa: complex,
    g_samples: Sequence[complex],
    degeneracy_tol: Optional[float] = None,
) -> ResolventSolve:
    """
    Solve the slice equation (I - kappa A W) u = g.

    The determinant comes from the same LU factorization as the solve.

    Args:
        slice_: Assembled slice
        kappa: Equation parameter
        g_samples: Right-hand side at the nodes
        degeneracy_tol: |det| below this (relative to det at kappa = 0, which is 1)
            declares the slice near-singular; defaults to the solver settings

    Returns:
        ResolventSolve: Node values, residual 2-norm and determinant

    Raises:
        NearSingularSliceError: |det| inside the degeneracy band
    """
    g = np.asarray(g_samples, dtype=complex)
    if g.shape != (slice_.size,):
        raise InvalidArgumentError(f"expected {slice_.size} right-hand side samples, got shape {g.shape}")
    kappa = complex(kappa)
    if kappa == 0:
        return ResolventSolve(solution=g.copy(), residual_norm=0.0, determinant=1 + 0j)
    tol = get_solver_settings().degeneracy_tol if degeneracy_tol is None else degeneracy_tol

    system = _shifted(slice_, kappa)
    lu, piv, det = _lu(system)
    if abs(det) < tol:
        raise NearSingularSliceError(slice_.y, abs(det))
    u = scipy.linalg.lu_solve((lu, piv), g, check_finite=False)
    residual = float(np.linalg.norm(system @ u - g))
    logger.debug("slice y=%.6g: |det|=%.3e residual=%.3e", slice_.y, abs(det), residual)
    return ResolventSolve(solution=u, residual_norm=residual, determinant=det)


def _adjugate(matrix: np.ndarray) -> np.ndarray:
    """adj(C) = det(C) C^-1 through the SVD; finite even when C is singular."""
    u, sigma, vh = scipy.linalg.svd(matrix)
    n = sigma.size
    cofactor = np.empty(n)
    for i in range(n):
        cofactor[i] = np.prod(np.delete(sigma, i))
    phase = np.linalg.det(u) * np.linalg.det(vh)
    return phase * (vh.conj().T * cofactor[None, :]) @ u.conj().T


def minor_matrix(slice_: SliceMatrix, kappa: complex, degeneracy_tol: Optional[float] = None) -> MinorMatrix:
    """
    Discrete Fredholm minor of E - kappa K_y.

    M = det * A (I - kappa W A)^-1, so that the resolvent solution satisfies
    u = g + kappa (M / det) W g. Away from the degeneracy band M is formed
    from a linear solve; inside it M = A adj(I - kappa W A), which stays
    finite where the resolvent blows up.
    """
    kappa = complex(kappa)
    a = slice_.entries.astype(complex)
    if kappa == 0:
        return MinorMatrix(entries=a, kappa=kappa, determinant=1 + 0j)
    tol = get_solver_settings().degeneracy_tol if degeneracy_tol is None else degeneracy_tol

    det = determinant_direct(slice_, kappa).value
    shifted = np.eye(slice_.size, dtype=complex) - kappa * (slice_.rule.weights[:, None] * a)
    if abs(det) >= tol:
        # R = A C^-1  <=>  C^T R^T = A^T
        resolvent = scipy.linalg.solve(shifted.T, a.T, check_finite=False).T
        entries = det * resolvent
    else:
        logger.debug("slice y=%.6g: minor through adjugate, |det|=%.3e", slice_.y, abs(det))
        entries = a @ _adjugate(shifted)
    return MinorMatrix(entries=entries, kappa=kappa, determinant=det)


def slice_eigenvalues(slice_: SliceMatrix) -> np.ndarray:
    """
    Eigenvalues of W^1/2 A W^1/2 (similar to A W), largest modulus first.

    Ties in modulus are broken by real part, then imaginary part, both
    descending, so the order is reproducible.
    """
    root_w = np.sqrt(slice_.rule.weights)
    symmetrized = root_w[:, None] * slice_.entries * root_w[None, :]
    try:
        values = scipy.linalg.eigvals(symmetrized, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"eigenvalue solver failed at y={slice_.y!r}: {e}") from e
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((-values.imag, -values.real, -np.abs(values)))
    return values[order]
