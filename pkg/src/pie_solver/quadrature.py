"""
Quadrature rules on [a, b] and tensor grids.

The Gauss-Legendre rule is the only discretization of the measure on the
domain; every slice matrix, profile and oracle draws its nodes from here.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from pie_solver.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

_NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class Domain:
    """The interval [a, b] raised to the power nu (nu is 1 or 2 here)."""

    a: float
    b: float
    nu: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise InvalidArgumentError(f"domain needs finite a < b, got [{self.a}, {self.b}]")
        if not 1 <= self.nu <= 2:
            raise InvalidArgumentError(f"domain dimension nu must be 1 or 2, got {self.nu}")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def measure(self) -> float:
        return self.length ** self.nu


def _frozen(values: Sequence[float]) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights of a Gauss-type rule on a 1-D domain."""

    domain: Domain
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))
        if self.nodes.ndim != 1 or self.nodes.shape != self.weights.shape or self.nodes.size == 0:
            raise InvalidArgumentError("nodes and weights must be non-empty 1-D arrays of equal length")
        if np.any(self.nodes <= self.domain.a) or np.any(self.nodes >= self.domain.b):
            raise InvalidArgumentError("quadrature nodes must lie strictly inside the domain")
        if np.any(np.diff(self.nodes) <= 0):
            raise InvalidArgumentError("quadrature nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise InvalidArgumentError("quadrature weights must be positive")
        total = math.fsum(self.weights)
        if abs(total - self.domain.length) > 1e-12 * self.domain.length:
            raise InvalidArgumentError(f"weights sum to {total!r}, expected {self.domain.length!r}")

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True, eq=False)
class ProductRule:
    """Tensor product of two 1-D rules; nodes are (u, v) pairs in row-major order."""

    domain: Domain
    nodes: np.ndarray
    weights: np.ndarray
    shape: tuple

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def __len__(self) -> int:
        return self.size


def _legendre_with_derivative(n: int, t: np.ndarray):
    """P_n(t) and P_n'(t) by the three-term recurrence."""
    p_prev = np.ones_like(t)
    p = t.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * t * p - (k - 1) * p_prev) / k
    dp = n * (t * p - p_prev) / (t * t - 1.0)
    return p, dp


def gauss_legendre(n: int, domain: Domain) -> QuadratureRule:
    """
    Build the n-point Gauss-Legendre rule mapped to [a, b].

    Roots of P_n are found by Newton iteration from Chebyshev initial guesses;
    the rule is exact for polynomials of degree up to 2n - 1.

    Args:
        n: Number of nodes (n >= 1)
        domain: Interval the rule is mapped to

    Returns:
        QuadratureRule: Nodes in increasing order with positive weights
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"Gauss-Legendre rule needs n >= 1, got {n!r}")
    n = int(n)

    k = np.arange(1, n + 1)
    t = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    if n == 1:
        t = np.zeros(1)

    for _ in range(_NEWTON_MAX_ITER):
        p, dp = _legendre_with_derivative(n, t)
        step = p / dp
        t = t - step
        if np.max(np.abs(step)) <= 4 * np.finfo(float).eps:
            break
    else:
        logger.warning("Newton iteration for %d-point Gauss-Legendre rule hit the iteration cap", n)

    _, dp = _legendre_with_derivative(n, t)
    w = 2.0 / ((1.0 - t * t) * dp * dp)

    # roots come out in decreasing order
    t = t[::-1]
    w = w[::-1]
    if n % 2 == 1:
        t[n // 2] = 0.0
    t = 0.5 * (t - t[::-1])
    w = 0.5 * (w + w[::-1])

    half = 0.5 * domain.length
    mid = 0.5 * (domain.a + domain.b)
    nodes = mid + half * t
    weights = half * w
    # pin the total to the measure of the interval
    weights = weights * (domain.length / math.fsum(weights))
    return QuadratureRule(domain=Domain(domain.a, domain.b, 1), nodes=nodes, weights=weights)


def integrate(rule: Union[QuadratureRule, ProductRule], samples: Sequence[complex]) -> complex:
    """
    Apply a rule to sampled integrand values.

    Summation is compensated (math.fsum on real and imaginary parts) so
    results do not depend on run or platform.

    Args:
        rule: Quadrature rule whose nodes the samples were taken at
        samples: Integrand values, one per node

    Returns:
        complex: Sum of w_i * samples_i
    """
    values = np.asarray(samples)
    if values.ndim != 1 or values.size != rule.size:
        raise InvalidArgumentError(f"expected {rule.size} samples, got shape {values.shape}")
    products = np.asarray(rule.weights, dtype=float) * values
    real = math.fsum(np.real(products).tolist())
    imag = math.fsum(np.imag(products).tolist()) if np.iscomplexobj(products) else 0.0
    return complex(real, imag)


def tensor_rule(rule_1: QuadratureRule, rule_2: QuadratureRule) -> ProductRule:
    """Product rule on [a, b]^2 with weights w1_i * w2_j in row-major node order."""
    if rule_1.domain.a != rule_2.domain.a or rule_1.domain.b != rule_2.domain.b:
        raise InvalidArgumentError("tensor product needs both rules on the same interval")
    u, v = np.meshgrid(rule_1.nodes, rule_2.nodes, indexing="ij")
    nodes = _frozen(np.column_stack([u.ravel(), v.ravel()]))
    weights = _frozen(np.outer(rule_1.weights, rule_2.weights).ravel())
    domain = Domain(rule_1.domain.a, rule_1.domain.b, 2)
    return ProductRule(domain=domain, nodes=nodes, weights=weights, shape=(rule_1.size, rule_2.size))


def uniform_grid(domain: Domain, intervals: int) -> np.ndarray:
    """Equally spaced points a = y_0 < ... < y_m = b (endpoints included)."""
    if intervals < 1:
        raise InvalidArgumentError("uniform grid needs at least one interval")
    grid = domain.a + domain.length * np.arange(intervals + 1) / intervals
    grid[-1] = domain.b
    return grid
