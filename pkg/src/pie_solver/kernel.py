"""
Kernels k(x, s, y) of the partial integral operator and right-hand sides g(x, y).

Also builds the adjoint kernel and reports the boundedness condition (I):
b(t) = ∫∫ |k(x, s, t)|^2 dx ds must stay below some M on the domain.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional

import numpy as np

from pie_solver.errors import ConfigError, InvalidArgumentError, KernelEvaluationError
from pie_solver.expr import Expression, evaluate, free_variables, parse, rename_variables
from pie_solver.quadrature import Domain, QuadratureRule

logger = logging.getLogger(__name__)

KernelFunction = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
RhsFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

BUILTIN_KERNELS = ("example1", "example2")


def _check_finite(values: np.ndarray, coords: List[np.ndarray], what: str, names: str):
    if np.all(np.isfinite(values)):
        return
    index = tuple(np.argwhere(~np.isfinite(values))[0])
    point = tuple(float(np.broadcast_to(c, values.shape)[index]) for c in coords)
    raise KernelEvaluationError(f"non-finite {what} value ({names})", point)


@dataclass(frozen=True)
class SeparableFactors:
    """Declared structure k(x, s, y) = scale * p(x) * q(s) * r(y)."""

    p: Expression
    q: Expression
    r: Expression
    scale: float = 1.0

    def __post_init__(self):
        for factor, allowed in ((self.p, {"x"}), (self.q, {"s"}), (self.r, {"y"})):
            extra = free_variables(factor) - allowed
            if extra:
                raise InvalidArgumentError(
                    f"separable factor '{factor.source}' may only use {sorted(allowed)}, found {sorted(extra)}"
                )

    def product(self, x, s, y) -> np.ndarray:
        return self.scale * evaluate(self.p, x=x) * evaluate(self.q, s=s) * evaluate(self.r, y=y)


@dataclass(frozen=True, eq=False)
class Kernel:
    """Real continuous kernel on the cube of the domain."""

    func: KernelFunction
    domain: Domain
    structure: Optional[SeparableFactors] = None
    label: str = "kernel"

    def __call__(self, x, s, y) -> np.ndarray:
        x, s, y = np.asarray(x, dtype=float), np.asarray(s, dtype=float), np.asarray(y, dtype=float)
        shape = np.broadcast(x, s, y).shape
        values = np.broadcast_to(np.asarray(self.func(x, s, y), dtype=float), shape)
        _check_finite(values, [x, s, y], "kernel", "x, s, y")
        return values

    @property
    def is_separable(self) -> bool:
        return self.structure is not None

    def scaled(self, c: float) -> "Kernel":
        """Kernel c * k, keeping the declared separable structure."""
        c = float(c)
        structure = None
        if self.structure is not None:
            st = self.structure
            structure = SeparableFactors(st.p, st.q, st.r, st.scale * c)
        base = self.func
        return Kernel(lambda x, s, y: c * base(x, s, y), self.domain, structure, f"{c!r}*{self.label}")


@dataclass(frozen=True, eq=False)
class RightHandSide:
    """Known free term g(x, y) of the equation."""

    func: RhsFunction
    domain: Domain
    label: str = "g"

    def __call__(self, x, y) -> np.ndarray:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        values = np.broadcast_to(np.asarray(self.func(x, y), dtype=float), shape)
        _check_finite(values, [x, y], "right-hand side", "x, y")
        return values


@dataclass(frozen=True)
class BoundReport:
    """Values of b(t) on a t-grid and their maximum."""

    sup_b: float
    t_grid: QuadratureRule = field(repr=False)
    per_t: np.ndarray = field(repr=False)


# ---------------------------------------------------------------- constructors

def kernel_from_expression(text: str, domain: Domain) -> Kernel:
    """General kernel from an expression in x, s, y."""
    expr = parse(text)
    return Kernel(lambda x, s, y: evaluate(expr, x, s, y), domain, None, expr.source)


def separable_kernel(p: str, q: str, r: str, domain: Domain) -> Kernel:
    """Kernel p(x) q(s) r(y) with declared separable structure."""
    factors = SeparableFactors(parse(p), parse(q), parse(r))
    label = f"({factors.p.source})*({factors.q.source})*({factors.r.source})"
    return Kernel(factors.product, domain, factors, label)


def builtin_kernel(name: str) -> Kernel:
    """
    Kernels of the two worked examples, both on [0, 1].

    example1 is e^(x-s) e^y, whose determinant is 1 - kappa e^y;
    example2 is e^(x-s) y, whose determinant is 1 - kappa y.
    """
    unit = Domain(0.0, 1.0)
    if name == "example1":
        kernel = separable_kernel("exp(x)", "exp(-s)", "exp(y)", unit)
    elif name == "example2":
        kernel = separable_kernel("exp(x)", "exp(-s)", "y", unit)
    else:
        raise InvalidArgumentError(f"unknown builtin kernel {name!r}; choose from {', '.join(BUILTIN_KERNELS)}")
    return Kernel(kernel.func, kernel.domain, kernel.structure, name)


def rhs_from_expression(text: str, domain: Domain) -> RightHandSide:
    """Right-hand side from an expression in x and y only."""
    expr = parse(text)
    if "s" in free_variables(expr):
        raise InvalidArgumentError(f"right-hand side '{text}' may only use x and y")
    return RightHandSide(lambda x, y: evaluate(expr, x=x, y=y), domain, expr.source)


def _domain_from_config(config: Mapping[str, Any]) -> Domain:
    try:
        return Domain(float(config.get("a", 0.0)), float(config.get("b", 1.0)))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"kernel domain bounds must be numbers: {e}") from e


def kernel_from_config(config: Mapping[str, Any]) -> Kernel:
    """
    Build a kernel from its JSON config object.

    Accepted shapes:
        {"type": "expr", "k": "exp(x-s)*y", "a": 0, "b": 1}
        {"type": "separable", "p": "exp(x)", "q": "exp(-s)", "r": "y", "a": 0, "b": 1}
        {"type": "builtin", "name": "example2"}

    Raises:
        ConfigError: Unknown type or missing fields
        ExpressionSyntaxError: A kernel string does not parse
    """
    if not isinstance(config, Mapping):
        raise ConfigError("kernel config must be a JSON object")
    kind = config.get("type")
    try:
        if kind == "builtin":
            return builtin_kernel(str(config["name"]))
        if kind == "expr":
            return kernel_from_expression(str(config["k"]), _domain_from_config(config))
        if kind == "separable":
            return separable_kernel(
                str(config["p"]), str(config["q"]), str(config["r"]), _domain_from_config(config)
            )
    except KeyError as e:
        raise ConfigError(f"kernel config of type {kind!r} is missing field {e}") from e
    except InvalidArgumentError as e:
        raise ConfigError(str(e)) from e
    raise ConfigError(f"kernel type must be one of expr, separable, builtin; got {kind!r}")


# ---------------------------------------------------------------- operations

def adjoint_kernel(k: Kernel) -> Kernel:
    """
    Kernel of the adjoint operator: k*(x, s, y) = conj k(s, x, y).

    Kernels are real, so conjugation is the identity and only the first two
    arguments swap. Separable structure is carried over with p and q exchanged.
    """
    structure = None
    if k.structure is not None:
        st = k.structure
        structure = SeparableFactors(
            p=rename_variables(st.q, {"s": "x"}),
            q=rename_variables(st.p, {"x": "s"}),
            r=st.r,
            scale=st.scale,
        )
    base = k.func
    return Kernel(lambda x, s, y: base(s, x, y), k.domain, structure, f"adjoint({k.label})")


def check_condition_I(k: Kernel, rule: QuadratureRule, t_rule: QuadratureRule) -> BoundReport:
    """
    Sample b(t) = ∫∫ |k(x, s, t)|^2 dx ds on the nodes of t_rule.

    Continuous kernels on a compact box always satisfy condition (I), so the
    report is diagnostic and never blocks a solve.

    Args:
        k: Kernel to check
        rule: Inner rule for the x and s integrals
        t_rule: Rule whose nodes are the t-grid

    Returns:
        BoundReport: b at every t-node and its maximum
    """
    x = rule.nodes[:, None]
    s = rule.nodes[None, :]
    w = rule.weights
    per_t = np.empty(t_rule.size)
    for i, t in enumerate(t_rule.nodes):
        values = k(x, s, t)
        per_t[i] = float(w @ (values * values) @ w)
    per_t.setflags(write=False)
    sup_b = float(np.max(per_t))
    logger.debug("condition (I): sup b(t) = %.6g over %d t-nodes", sup_b, t_rule.size)
    return BoundReport(sup_b=sup_b, t_grid=t_rule, per_t=per_t)


def sample_rhs(g: RightHandSide, x_nodes: np.ndarray, y_nodes: np.ndarray) -> np.ndarray:
    """Grid values g[i, j] = g(x_i, y_j)."""
    return np.array(g(x_nodes[:, None], y_nodes[None, :]), dtype=float)


def describe(k: Kernel) -> Dict[str, Any]:
    """Short JSON-friendly summary used in command output."""
    return {
        "label": k.label,
        "a": k.domain.a,
        "b": k.domain.b,
        "separable": k.is_separable,
    }


__all__ = [
    "BUILTIN_KERNELS",
    "BoundReport",
    "Kernel",
    "RightHandSide",
    "SeparableFactors",
    "adjoint_kernel",
    "builtin_kernel",
    "check_condition_I",
    "describe",
    "kernel_from_config",
    "kernel_from_expression",
    "rhs_from_expression",
    "sample_rhs",
    "separable_kernel",
]
