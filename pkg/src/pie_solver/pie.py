"""
Solvability theory of the partial integral equation f - kappa T1 f = g.

T1 acts slice-wise in y, so the equation splits into one Fredholm equation
per y. The slice determinants D1(y; kappa) form a continuous function of y
whose zero set decides everything here:

- no zeros: kappa is regular and f = g + kappa B g is the unique solution;
- zeros on a set of positive measure: kappa is characteristic and 1/kappa
  is an eigenvalue of T1 (no solvability theory, the solver refuses);
- zeros on a null set: kappa is essential and the solution exists exactly
  when the free term passes condition (II).
"""

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.integrate
import scipy.optimize

from pie_solver.config.settings import get_solver_settings
from pie_solver.errors import (
    CharacteristicParameterError,
    ConditionIIDivergentError,
    ConsistencyError,
    IndeterminateClassificationError,
    InvalidArgumentError,
    InvalidWitnessError,
    NearSingularSliceError,
    PropertyViolationError,
)
from pie_solver.expr import Expression, evaluate, free_variables, parse
from pie_solver.fredholm import (
    assemble_slice,
    determinant_direct,
    minor_matrix,
    resolvent_solve,
    slice_eigenvalues,
)
from pie_solver.kernel import Kernel, RightHandSide, adjoint_kernel
from pie_solver.quadrature import Domain, QuadratureRule, uniform_grid

logger = logging.getLogger(__name__)

BASE_INTERVALS = 64
ORDER_DELTA = 1e-3
ORDER_MARGIN = 0.1
CAUCHY_RTOL = 0.05
EXCLUSION_RADIUS = 0.01
LEADING_CURVES = 4


class Verdict(str, enum.Enum):
    REGULAR = "regular"
    ESSENTIAL = "essential"
    CHARACTERISTIC = "characteristic"


class ConditionIIVerdict(str, enum.Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"
    INDETERMINATE = "indeterminate"


# ---------------------------------------------------------------- types

@dataclass(frozen=True, eq=False)
class DeterminantProfile:
    """Samples of D1(y; kappa) on a refined y-grid for one kappa."""

    kappa: complex
    y_nodes: np.ndarray
    values: np.ndarray
    x_rule: QuadratureRule = field(repr=False)
    refinement_depth: int
    kernel: Kernel = field(repr=False)
    zero_tol: float

    @property
    def domain(self) -> Domain:
        return self.x_rule.domain

    @property
    def scale(self) -> float:
        """Normalization for relative zero tests; D1 at kappa = 0 is 1."""
        return max(1.0, float(np.max(np.abs(self.values))))

    def evaluate_at(self, y: float) -> complex:
        """D1(y; kappa) at an arbitrary y with this profile's kernel and rule."""
        return _determinant_at(self.kernel, self.x_rule, self.kappa, y)


@dataclass(frozen=True)
class ZeroEstimate:
    y0: float
    order_estimate: float


@dataclass(frozen=True)
class ParameterClass:
    """Classification verdict for one kappa."""

    verdict: Verdict
    zeros: Tuple[ZeroEstimate, ...] = ()
    intervals: Tuple[Tuple[float, float], ...] = ()
    min_abs_det: float = math.inf
    threshold: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "zeros": [{"y0": z.y0, "order": _finite_or_none(z.order_estimate)} for z in self.zeros],
            "intervals": [[lo, hi] for lo, hi in self.intervals],
            "min_abs_det": self.min_abs_det,
        }


@dataclass(frozen=True)
class ZeroDiagnostic:
    y0: float
    det_order: float
    numerator_order: float
    status: str  # "ok", "divergent", "ambiguous", "boundary"


@dataclass(frozen=True)
class ConditionIIReport:
    """Evidence on the integrability of G(y) / |D1(y)|^2."""

    verdict: ConditionIIVerdict
    integral_estimates: Tuple[float, ...]
    zero_diagnostics: Tuple[ZeroDiagnostic, ...] = ()
    radii: Tuple[float, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "integral_estimates": list(self.integral_estimates),
            "radii": list(self.radii),
            "zeros": [
                {
                    "y0": d.y0,
                    "det_order": _finite_or_none(d.det_order),
                    "numerator_order": _finite_or_none(d.numerator_order),
                    "status": d.status,
                }
                for d in self.zero_diagnostics
            ],
        }


@dataclass(frozen=True, eq=False)
class PieSolution:
    """Grid solution f_values[i, j] ~ f(x_i, y_j)."""

    f_values: np.ndarray
    residual_max: float
    class_used: ParameterClass
    condition_II: Optional[ConditionIIReport]
    x_nodes: np.ndarray = field(repr=False)
    y_nodes: np.ndarray = field(repr=False)
    excluded: Tuple[int, ...] = ()


@dataclass(frozen=True)
class DetectedEigenvalue:
    value: complex
    support: Tuple[float, float]


@dataclass(frozen=True, eq=False)
class EigenReport:
    y_nodes: np.ndarray
    curves: np.ndarray  # curves[j, c]: c-th largest-modulus slice eigenvalue at y_nodes[j]
    detected: Tuple[DetectedEigenvalue, ...]


def _finite_or_none(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


# ---------------------------------------------------------------- profile

def _determinant_at(k: Kernel, x_rule: QuadratureRule, kappa: complex, y: float) -> complex:
    return determinant_direct(assemble_slice(k, x_rule, y), kappa).value


def _settings_or(value, name):
    return getattr(get_solver_settings(), name) if value is None else value


def determinant_profile(
    k: Kernel,
    kappa: complex,
    x_rule: QuadratureRule,
    y_depth: Optional[int] = None,
    zero_tol: Optional[float] = None,
) -> DeterminantProfile:
    """
    Sample D1(y; kappa) on a 65-point uniform grid, then refine.

    Each refinement level bisects the intervals where Re D1 changes sign and
    the intervals next to local minima of |D1| below 10 * zero_tol. Intervals
    lying inside a run of vanishing values are left alone.

    Args:
        k: Kernel of the operator
        kappa: Equation parameter
        x_rule: Rule used inside every slice
        y_depth: Number of refinement levels (>= 0)
        zero_tol: Relative zero tolerance steering the refinement

    Returns:
        DeterminantProfile
    """
    y_depth = _settings_or(y_depth, "y_depth")
    zero_tol = _settings_or(zero_tol, "zero_tol")
    if y_depth < 0:
        raise InvalidArgumentError(f"y_depth must be non-negative, got {y_depth}")
    kappa = complex(kappa)

    y = uniform_grid(x_rule.domain, BASE_INTERVALS)
    d = np.array([_determinant_at(k, x_rule, kappa, t) for t in y])
    scale = max(1.0, float(np.max(np.abs(d))))
    threshold = zero_tol * scale

    for level in range(y_depth):
        flagged = _intervals_to_refine(d, threshold)
        if not flagged:
            break
        new_y = np.array([0.5 * (y[j] + y[j + 1]) for j in flagged])
        new_d = np.array([_determinant_at(k, x_rule, kappa, t) for t in new_y])
        y = np.concatenate([y, new_y])
        d = np.concatenate([d, new_d])
        order = np.argsort(y, kind="stable")
        y, d = y[order], d[order]
        logger.debug("profile level %d: %d new nodes", level + 1, new_y.size)

    y.setflags(write=False)
    d.setflags(write=False)
    return DeterminantProfile(
        kappa=kappa, y_nodes=y, values=d, x_rule=x_rule,
        refinement_depth=y_depth, kernel=k, zero_tol=zero_tol,
    )


def _intervals_to_refine(d: np.ndarray, threshold: float) -> List[int]:
    absd = np.abs(d)
    re = d.real
    small = absd <= threshold
    flagged = set()
    last = d.size - 1
    for j in range(last):
        if small[j] and small[j + 1]:
            continue
        if re[j] * re[j + 1] < 0:
            flagged.add(j)
    for j in range(d.size):
        if absd[j] >= 10 * threshold:
            continue
        left = absd[j - 1] if j > 0 else math.inf
        right = absd[j + 1] if j < last else math.inf
        if small[j] and ((j > 0 and small[j - 1]) or (j < last and small[j + 1])):
            continue
        if absd[j] <= left and absd[j] <= right:
            if j > 0:
                flagged.add(j - 1)
            if j < last:
                flagged.add(j)
    return sorted(flagged)


# ---------------------------------------------------------------- classification

def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    runs = []
    start = None
    for j, flag in enumerate(mask):
        if flag and start is None:
            start = j
        elif not flag and start is not None:
            runs.append((start, j - 1))
            start = None
    if start is not None:
        runs.append((start, mask.size - 1))
    return runs


def _order_estimate(f: Callable[[float], float], y0: float, domain: Domain) -> float:
    """Slope of log f(y) against log |y - y0| over offsets delta * 2^k."""
    delta = ORDER_DELTA * domain.length
    logs_h, logs_f = [], []
    for k in range(4):
        h = delta * 2 ** k
        for t in (y0 + h, y0 - h):
            if domain.a <= t <= domain.b:
                value = f(t)
                if value > 0:
                    logs_h.append(math.log(h))
                    logs_f.append(math.log(value))
    if len(set(logs_h)) < 2:
        return math.nan
    return float(np.polyfit(logs_h, logs_f, 1)[0])


def _minimize_abs(profile: DeterminantProfile, lo: float, hi: float):
    result = scipy.optimize.minimize_scalar(
        lambda t: abs(profile.evaluate_at(t)), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12 * profile.domain.length},
    )
    return float(result.x), float(result.fun)


def classify(
    profile: DeterminantProfile,
    zero_tol: Optional[float] = None,
    measure_tol: Optional[float] = None,
) -> ParameterClass:
    """
    Decide whether the profile's kappa is regular, essential or characteristic.

    Nodes with |D1| <= zero_tol * max(1, max |D1|) are zero candidates. Runs of
    candidates spanning at least measure_tol * (b - a) are characteristic
    intervals. Shorter runs, sign changes of Re D1 and deep local minima of
    |D1| are followed to a point y0 (brentq or bounded minimization) and kept
    as essential zeros when |D1(y0)| is below the threshold; their order comes
    from a log-log regression of |D1| around y0.

    Raises:
        IndeterminateClassificationError: A local minimum of |D1| settles
            between the threshold and ten times the threshold
    """
    zero_tol = _settings_or(zero_tol, "zero_tol")
    measure_tol = _settings_or(measure_tol, "measure_tol")
    if not (0 < zero_tol < 1 and 0 < measure_tol < 1):
        raise InvalidArgumentError("zero_tol and measure_tol must lie in (0, 1)")

    domain = profile.domain
    y, d = profile.y_nodes, profile.values
    absd = np.abs(d)
    threshold = zero_tol * profile.scale
    small = absd <= threshold
    last = y.size - 1
    min_length = measure_tol * domain.length

    intervals = []
    in_interval = np.zeros(y.size, dtype=bool)
    short_runs = []
    for j0, j1 in _runs(small):
        if y[j1] - y[j0] >= min_length:
            intervals.append((float(y[j0]), float(y[j1])))
            in_interval[j0:j1 + 1] = True
        else:
            short_runs.append((j0, j1))

    if intervals:
        result = ParameterClass(
            verdict=Verdict.CHARACTERISTIC, intervals=tuple(intervals),
            min_abs_det=float(np.min(absd)), threshold=threshold,
        )
        logger.info("kappa=%s: characteristic on %s", profile.kappa, intervals)
        return result

    found: List[Tuple[float, float]] = []

    def too_close_to_call(value: float, where: float):
        if threshold < value <= 10 * threshold:
            raise IndeterminateClassificationError(
                f"|D1| reaches {value:.3e} near y={where:.6g}, within a decade of the zero "
                f"threshold {threshold:.3e}; rerun with a larger y_depth or finer nx"
            )

    for j0, j1 in short_runs:
        best = j0 + int(np.argmin(absd[j0:j1 + 1]))
        y0, value = float(y[best]), float(absd[best])
        t, v = _minimize_abs(profile, float(y[max(j0 - 1, 0)]), float(y[min(j1 + 1, last)]))
        if v < value:
            y0, value = t, v
        found.append((y0, value))

    sign_change = np.zeros(y.size, dtype=bool)
    for j in range(last):
        if d[j].real * d[j + 1].real < 0:
            sign_change[j] = sign_change[j + 1] = True
            y0 = scipy.optimize.brentq(
                lambda t: profile.evaluate_at(t).real, y[j], y[j + 1],
                xtol=1e-14 * domain.length, rtol=4 * np.finfo(float).eps,
            )
            value = abs(profile.evaluate_at(y0))
            if value <= threshold:
                found.append((float(y0), value))
            else:
                too_close_to_call(value, y0)

    deep = math.sqrt(zero_tol) * profile.scale
    for j in range(y.size):
        if small[j] or sign_change[j] or absd[j] > deep:
            continue
        left = absd[j - 1] if j > 0 else math.inf
        right = absd[j + 1] if j < last else math.inf
        if absd[j] <= left and absd[j] <= right:
            t, v = _minimize_abs(profile, float(y[max(j - 1, 0)]), float(y[min(j + 1, last)]))
            if v <= threshold:
                found.append((t, v))
            else:
                too_close_to_call(v, t)

    zeros = _merge_zeros(found, 1e-8 * domain.length)
    if not zeros:
        logger.info("kappa=%s: regular (min |D1| = %.3e)", profile.kappa, float(np.min(absd)))
        return ParameterClass(verdict=Verdict.REGULAR, min_abs_det=float(np.min(absd)), threshold=threshold)

    estimates = tuple(
        ZeroEstimate(y0, _order_estimate(lambda t: abs(profile.evaluate_at(t)), y0, domain))
        for y0, _ in zeros
    )
    min_abs = min(float(np.min(absd)), min(v for _, v in zeros))
    logger.info("kappa=%s: essential, zeros at %s", profile.kappa, [z.y0 for z in estimates])
    return ParameterClass(verdict=Verdict.ESSENTIAL, zeros=estimates, min_abs_det=min_abs, threshold=threshold)


def _merge_zeros(found: List[Tuple[float, float]], tol: float) -> List[Tuple[float, float]]:
    merged: List[Tuple[float, float]] = []
    for y0, value in sorted(found):
        if merged and y0 - merged[-1][0] <= tol:
            if value < merged[-1][1]:
                merged[-1] = (y0, value)
            continue
        merged.append((y0, value))
    return merged


# ---------------------------------------------------------------- condition (II)

def _slice_energy(g: RightHandSide, x_rule: QuadratureRule, y: float) -> float:
    """G(y) = ∫ |g(s, y)|^2 ds by the x-rule."""
    values = g(x_rule.nodes, y)
    return float(x_rule.weights @ np.abs(values) ** 2)


def _complement(domain: Domain, centers: Sequence[float], radius: float) -> List[Tuple[float, float]]:
    segments = []
    cursor = domain.a
    for c in sorted(centers):
        lo, hi = c - radius, c + radius
        if lo > cursor:
            segments.append((cursor, min(lo, domain.b)))
        cursor = max(cursor, hi)
    if cursor < domain.b:
        segments.append((cursor, domain.b))
    return [(lo, hi) for lo, hi in segments if hi > lo]


def _integrate(func: Callable[[float], float], segments: List[Tuple[float, float]]) -> float:
    total = 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", scipy.integrate.IntegrationWarning)
        for lo, hi in segments:
            value, _ = scipy.integrate.quad(func, lo, hi, limit=200, epsabs=0.0, epsrel=1e-10)
            total += value
    for w in caught:
        logger.warning("condition (II) integral: %s", w.message)
    return total


def check_condition_II(
    g: RightHandSide,
    profile: DeterminantProfile,
    class_: ParameterClass,
    radius: Optional[float] = None,
) -> ConditionIIReport:
    """
    Test whether ∫ G(y) / |D1(y)|^2 dy is finite, G(y) = ∫ |g(s, y)|^2 ds.

    Two pieces of evidence are combined. The order test compares the
    vanishing order p of G with the order m of D1 at each zero: the integrand
    behaves like |y - y0|^(2p - 2m), integrable iff 2p - 2m > -1 (decided with
    a 0.1 margin). The Cauchy test integrates over the domain minus balls of
    radius eps, eps/2, eps/4 around the zeros: relative changes below 5% count
    as convergence, doubling per halving as divergence.

    Args:
        g: Right-hand side
        profile: Determinant profile at the kappa being solved
        class_: Its classification
        radius: Largest exclusion radius; defaults to 0.01 * (b - a)

    Returns:
        ConditionIIReport
    """
    if class_.verdict is Verdict.CHARACTERISTIC:
        raise InvalidArgumentError("condition (II) applies to regular or essential parameters only")
    domain = profile.domain
    x_rule = profile.x_rule

    def integrand(t: float) -> float:
        return _slice_energy(g, x_rule, t) / abs(profile.evaluate_at(t)) ** 2

    if not class_.zeros:
        estimate = _integrate(integrand, [(domain.a, domain.b)])
        return ConditionIIReport(verdict=ConditionIIVerdict.FINITE, integral_estimates=(estimate,))

    eps = EXCLUSION_RADIUS * domain.length if radius is None else radius
    radii = (eps, eps / 2, eps / 4)
    centers = [z.y0 for z in class_.zeros]
    estimates = tuple(_integrate(integrand, _complement(domain, centers, r)) for r in radii)

    delta = ORDER_DELTA * domain.length
    diagnostics = []
    for zero in class_.zeros:
        p, one_sided = _numerator_order(g, x_rule, zero.y0, domain, delta)
        m = zero.order_estimate
        if one_sided or not math.isfinite(m):
            status = "boundary" if one_sided else "ambiguous"
        else:
            margin = 2 * p - 2 * m
            if margin > -1 + ORDER_MARGIN:
                status = "ok"
            elif margin <= -1 - ORDER_MARGIN:
                status = "divergent"
            else:
                status = "ambiguous"
        diagnostics.append(ZeroDiagnostic(zero.y0, m, p, status))

    growing = all(
        later >= 2 * earlier > 0 for earlier, later in zip(estimates, estimates[1:])
    )
    # identical estimates (G = 0 near every zero included) count as converged
    cauchy = all(
        later == earlier or abs(later - earlier) < CAUCHY_RTOL * abs(earlier)
        for earlier, later in zip(estimates, estimates[1:])
    )
    if growing or any(d.status == "divergent" for d in diagnostics):
        verdict = ConditionIIVerdict.DIVERGENT
    elif cauchy and all(d.status == "ok" for d in diagnostics):
        verdict = ConditionIIVerdict.FINITE
    else:
        verdict = ConditionIIVerdict.INDETERMINATE
    if verdict is ConditionIIVerdict.INDETERMINATE:
        logger.warning("condition (II) indeterminate: estimates %s, zeros %s", estimates, diagnostics)
    else:
        logger.info("condition (II) %s: estimates %s", verdict.value, estimates)
    return ConditionIIReport(
        verdict=verdict, integral_estimates=estimates, zero_diagnostics=tuple(diagnostics), radii=radii
    )


def _numerator_order(g: RightHandSide, x_rule: QuadratureRule, y0: float, domain: Domain, delta: float):
    """Vanishing order of G at y0 from 8 points on [y0 + delta, y0 + 8 delta] (or the mirror side)."""
    one_sided = y0 - 8 * delta < domain.a or y0 + 8 * delta > domain.b
    side = 1.0 if y0 + 8 * delta <= domain.b else -1.0
    offsets = delta * np.arange(1, 9)
    logs_h, logs_g = [], []
    for h in offsets:
        t = y0 + side * h
        if not domain.a <= t <= domain.b:
            continue
        value = _slice_energy(g, x_rule, t)
        if value > 0:
            logs_h.append(math.log(h))
            logs_g.append(math.log(value))
    if len(logs_h) < 2:
        # G vanishes identically next to the zero
        return math.inf, one_sided
    return float(np.polyfit(logs_h, logs_g, 1)[0]), one_sided


def condition_II_family(
    g_base: RightHandSide,
    profile: DeterminantProfile,
    class_: ParameterClass,
    count: int = 4,
) -> List[ConditionIIReport]:
    """
    Check condition (II) for members of the admissible family at an essential kappa.

    Member j is g_base(x, y) * y^j * prod over zeros of |y - y0|^m, m the
    estimated order rounded up (order estimates within 0.1 of an integer
    count as that integer). It vanishes at every zero at least as fast as D1,
    so all members should pass.
    """
    if class_.verdict is not Verdict.ESSENTIAL:
        raise InvalidArgumentError("the admissible family is defined at essential parameters")
    powers = []
    for zero in class_.zeros:
        m = zero.order_estimate
        powers.append((zero.y0, max(1, math.ceil(m - ORDER_MARGIN)) if math.isfinite(m) else 1))
    reports = []
    for j in range(count):
        def member(x, y, j=j):
            damping = np.ones_like(np.asarray(y, dtype=float))
            for y0, m in powers:
                damping = damping * np.abs(y - y0) ** m
            return g_base.func(x, y) * np.asarray(y, dtype=float) ** j * damping
        g_j = RightHandSide(member, g_base.domain, f"{g_base.label}*y^{j}*damping")
        reports.append(check_condition_II(g_j, profile, class_))
    return reports


# ---------------------------------------------------------------- solve

def solve(
    k: Kernel,
    g: RightHandSide,
    kappa: complex,
    x_rule: QuadratureRule,
    y_rule: QuadratureRule,
    y_depth: Optional[int] = None,
    zero_tol: Optional[float] = None,
    measure_tol: Optional[float] = None,
    method: str = "resolvent",
) -> PieSolution:
    """
    Solve f - kappa T1 f = g on the tensor grid x_rule x y_rule.

    kappa is classified first. At a regular kappa every slice is solved; at an
    essential kappa condition (II) is checked, and slices inside the
    degeneracy band are left out (NaN columns listed in `excluded`).

    Args:
        k: Kernel of T1
        g: Right-hand side
        kappa: Equation parameter
        x_rule: Rule in the integration variable
        y_rule: Rule supplying the y-nodes of the returned grid
        y_depth, zero_tol, measure_tol: Classification controls (settings by default)
        method: "resolvent" (slice LU solve) or "minor" (f = g + kappa (M / D1) W g)

    Returns:
        PieSolution

    Raises:
        CharacteristicParameterError: kappa is characteristic
        ConditionIIDivergentError: kappa is essential and g fails condition (II)
        ConsistencyError: A slice at a regular kappa has a vanishing determinant
    """
    if method not in ("resolvent", "minor"):
        raise InvalidArgumentError(f"unknown solve method {method!r}")
    zero_tol = _settings_or(zero_tol, "zero_tol")
    kappa = complex(kappa)

    profile = determinant_profile(k, kappa, x_rule, y_depth, zero_tol)
    class_ = classify(profile, zero_tol, measure_tol)
    if class_.verdict is Verdict.CHARACTERISTIC:
        raise CharacteristicParameterError(
            f"kappa={kappa} is characteristic: D1 vanishes on {list(class_.intervals)}; "
            "no solvability theory applies",
            class_,
        )

    report = None
    if class_.verdict is Verdict.ESSENTIAL:
        report = check_condition_II(g, profile, class_)
        if report.verdict is ConditionIIVerdict.DIVERGENT:
            raise ConditionIIDivergentError(
                f"kappa={kappa} is essential and condition (II) diverges: "
                "f = g + kappa B g is not square integrable",
                report, class_,
            )

    degeneracy_tol = get_solver_settings().degeneracy_tol
    x = x_rule.nodes
    f = np.empty((x_rule.size, y_rule.size), dtype=complex)
    residual_max = 0.0
    excluded = []
    for j, y in enumerate(y_rule.nodes):
        slice_ = assemble_slice(k, x_rule, y)
        g_j = g(x, y).astype(complex)
        try:
            if method == "resolvent":
                solved = resolvent_solve(slice_, kappa, g_j, degeneracy_tol)
                u, residual, det = solved.solution, solved.residual_norm, solved.determinant
            else:
                u, residual, det = _minor_solve(slice_, kappa, g_j, degeneracy_tol)
        except NearSingularSliceError as e:
            if class_.verdict is Verdict.REGULAR:
                raise ConsistencyError(f"regular kappa={kappa} but {e}") from e
            logger.warning("excluding slice y=%.6g from the essential solve (|D1|=%.3e)", y, e.abs_det)
            f[:, j] = np.nan
            excluded.append(j)
            continue
        if class_.verdict is Verdict.REGULAR and abs(det) <= class_.threshold:
            raise ConsistencyError(
                f"regular kappa={kappa} but |D1({y:.6g})| = {abs(det):.3e} is below the zero threshold"
            )
        f[:, j] = u
        residual_max = max(residual_max, residual)

    logger.info("solved %d slices (%d excluded), residual_max=%.3e", y_rule.size, len(excluded), residual_max)
    return PieSolution(
        f_values=f, residual_max=residual_max, class_used=class_, condition_II=report,
        x_nodes=x_rule.nodes, y_nodes=y_rule.nodes, excluded=tuple(excluded),
    )


def _minor_solve(slice_, kappa: complex, g: np.ndarray, degeneracy_tol: float):
    minor = minor_matrix(slice_, kappa, degeneracy_tol)
    if kappa != 0 and abs(minor.determinant) < degeneracy_tol:
        raise NearSingularSliceError(slice_.y, abs(minor.determinant))
    w = slice_.rule.weights
    u = g + kappa * (minor.entries / minor.determinant) @ (w * g)
    residual = float(np.linalg.norm(u - kappa * slice_.weighted @ u - g))
    return u, residual, minor.determinant


# ---------------------------------------------------------------- eigenvalues

def _presence_run(spectra: List[np.ndarray], start: int, value: complex, eig_tol: float) -> Tuple[int, int, complex]:
    """Widest run of consecutive nodes around `start` whose spectrum holds `value` within eig_tol."""

    def nearest(j: int) -> Optional[complex]:
        distances = np.abs(spectra[j] - value)
        best = int(np.argmin(distances))
        return spectra[j][best] if distances[best] <= eig_tol else None

    matched = [nearest(start)]
    lo = hi = start
    while lo > 0 and (found := nearest(lo - 1)) is not None:
        lo -= 1
        matched.append(found)
    while hi < len(spectra) - 1 and (found := nearest(hi + 1)) is not None:
        hi += 1
        matched.append(found)
    return lo, hi, complex(np.mean(matched))


def detect_eigenvalues(
    k: Kernel,
    x_rule: QuadratureRule,
    y_depth: Optional[int] = None,
    eig_tol: Optional[float] = None,
    measure_tol: Optional[float] = None,
    zero_tol: Optional[float] = None,
    cross_validate: bool = True,
) -> EigenReport:
    """
    Find eigenvalues of T1: values a slice eigenvalue keeps on a y-set of positive measure.

    Every leading slice eigenvalue (largest modulus first) is a candidate. A
    nonzero candidate is reported when the slice spectra keep a value within
    eig_tol of it on consecutive y-nodes spanning at least
    measure_tol * (b - a). Each detection is cross-checked by classifying
    kappa = 1 / lambda, which must come out characteristic.

    Raises:
        ConsistencyError: A detection fails the cross-check
    """
    eig_tol = _settings_or(eig_tol, "eig_tol")
    measure_tol = _settings_or(measure_tol, "measure_tol")
    if eig_tol <= 0 or measure_tol <= 0:
        raise InvalidArgumentError("tolerances must be positive")
    domain = x_rule.domain
    y = uniform_grid(domain, BASE_INTERVALS)
    spectra = [slice_eigenvalues(assemble_slice(k, x_rule, t)) for t in y]
    count = min(LEADING_CURVES, x_rule.size)
    curves = np.array([s[:count] for s in spectra])

    min_length = measure_tol * domain.length
    detected: List[DetectedEigenvalue] = []
    for j in range(y.size):
        for value in curves[j]:
            if abs(value) <= eig_tol:
                continue
            if any(
                abs(d.value - value) <= eig_tol and d.support[0] <= y[j] <= d.support[1] for d in detected
            ):
                continue
            lo, hi, mean = _presence_run(spectra, j, value, eig_tol)
            if y[hi] - y[lo] >= min_length:
                detected.append(DetectedEigenvalue(mean, (float(y[lo]), float(y[hi]))))

    if cross_validate:
        for item in detected:
            profile = determinant_profile(k, 1 / item.value, x_rule, y_depth, zero_tol)
            verdict = classify(profile, zero_tol, measure_tol).verdict
            if verdict is not Verdict.CHARACTERISTIC:
                raise ConsistencyError(
                    f"eigenvalue {item.value} detected on {item.support} but kappa=1/lambda "
                    f"classifies as {verdict.value}"
                )
    logger.info("detected eigenvalues: %s", [(d.value, d.support) for d in detected])
    return EigenReport(y_nodes=y, curves=curves, detected=tuple(detected))


def _overlaps(first: Tuple[float, float], second: Tuple[float, float]) -> bool:
    return first[0] <= second[1] and second[0] <= first[1]


def multiplicity_witnesses(
    k: Kernel,
    lambda_: complex,
    phi: Sequence[complex],
    b_functions: Sequence[Union[Expression, str]],
    x_rule: QuadratureRule,
    y_rule: QuadratureRule,
) -> List[float]:
    """
    Relative residuals ||T1 f - lambda f|| / ||f|| for f(x, y) = b(y) phi(x).

    If phi is an eigenfunction of the slices with eigenvalue lambda, every
    bounded b gives another eigenfunction of T1, so the residuals stay at
    rounding level however many b are tried.

    Raises:
        InvalidArgumentError: phi has the wrong length or some b uses x or s
        InvalidWitnessError: Some f has zero grid norm
    """
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (x_rule.size,):
        raise InvalidArgumentError(f"phi needs {x_rule.size} samples, got shape {phi.shape}")
    x, y = x_rule.nodes, y_rule.nodes
    wx, wy = x_rule.weights, y_rule.weights
    values = k(x[:, None, None], x[None, :, None], y[None, None, :])  # k(x_i, x_l, y_j)
    grid_weights = wx[:, None] * wy[None, :]

    residuals = []
    for b in b_functions:
        expr = parse(b) if isinstance(b, str) else b
        extra = free_variables(expr) - {"y"}
        if extra:
            raise InvalidArgumentError(f"witness b(y) = {expr.source} may only use y, found {sorted(extra)}")
        b_values = np.asarray(evaluate(expr, y=y), dtype=float) * np.ones_like(y)
        f = phi[:, None] * b_values[None, :]
        norm = math.sqrt(float(np.sum(grid_weights * np.abs(f) ** 2)))
        if norm == 0.0:
            raise InvalidWitnessError(f"witness b(y) = {expr.source} gives a zero function")
        t1f = np.einsum("ilj,l,lj->ij", values, wx, f)
        defect = t1f - lambda_ * f
        residuals.append(math.sqrt(float(np.sum(grid_weights * np.abs(defect) ** 2))) / norm)
    return residuals


# ---------------------------------------------------------------- adjoint checks

def adjoint_class_check(
    k: Kernel,
    kappa: complex,
    x_rule: QuadratureRule,
    y_depth: Optional[int] = None,
    zero_tol: Optional[float] = None,
    measure_tol: Optional[float] = None,
) -> float:
    """
    Check conj D1(y; kappa) = D1~(y; conj kappa) for the adjoint kernel.

    Returns the largest discrepancy over the profile nodes of (k, kappa) and
    requires both parameters to receive the same verdict.

    Raises:
        PropertyViolationError: Verdicts differ
    """
    kappa = complex(kappa)
    adjoint = adjoint_kernel(k)
    profile = determinant_profile(k, kappa, x_rule, y_depth, zero_tol)
    adjoint_profile = determinant_profile(adjoint, kappa.conjugate(), x_rule, y_depth, zero_tol)
    discrepancy = max(
        abs(np.conj(value) - adjoint_profile.evaluate_at(t)) for t, value in zip(profile.y_nodes, profile.values)
    )
    verdict = classify(profile, zero_tol, measure_tol).verdict
    adjoint_verdict = classify(adjoint_profile, zero_tol, measure_tol).verdict
    if verdict is not adjoint_verdict:
        raise PropertyViolationError(
            f"kappa={kappa} is {verdict.value} for the kernel but conj kappa is "
            f"{adjoint_verdict.value} for its adjoint"
        )
    return float(discrepancy)


def adjoint_eigen_check(
    k: Kernel,
    x_rule: QuadratureRule,
    y_depth: Optional[int] = None,
    eig_tol: Optional[float] = None,
    measure_tol: Optional[float] = None,
) -> List[Tuple[DetectedEigenvalue, DetectedEigenvalue]]:
    """
    Every eigenvalue lambda of T1 must reappear as conj lambda for the adjoint.

    Returns:
        Matched (kernel, adjoint) detection pairs

    Raises:
        PropertyViolationError: Some lambda has no conjugate partner
    """
    eig_tol = _settings_or(eig_tol, "eig_tol")
    own = detect_eigenvalues(k, x_rule, y_depth, eig_tol, measure_tol)
    other = detect_eigenvalues(adjoint_kernel(k), x_rule, y_depth, eig_tol, measure_tol)
    pairs = []
    for item in own.detected:
        partner = next(
            (
                cand for cand in other.detected
                if abs(cand.value - np.conj(item.value)) <= 10 * eig_tol
                and _overlaps(cand.support, item.support)
            ),
            None,
        )
        if partner is None:
            raise PropertyViolationError(f"eigenvalue {item.value} has no conjugate partner for the adjoint")
        pairs.append((item, partner))
    if len(other.detected) != len(own.detected):
        raise PropertyViolationError(
            f"kernel has {len(own.detected)} eigenvalues but its adjoint has {len(other.detected)}"
        )
    return pairs
