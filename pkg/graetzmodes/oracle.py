"""
Independent numerical cross-checks.

The references never come from the closure series: the eigen-equation
is integrated as a first-order system with scipy's DOP853 pair, the
operator F is evaluated by nested adaptive quadrature and Bessel functions
come from their power series. ``verify`` compares these against the series
path and collects the results in a report. The quadrature check samples the
lower closure functions only as the input of F.
"""

import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.optimize import brentq

from graetzmodes.config import DEFAULT_SETTINGS, SolverSettings
from graetzmodes.domain import BoundaryKind, DomainSpec, Geometry
from graetzmodes.errors import InvalidParameter, NoConvergence, QuadratureFailure, StepFailure
from graetzmodes.logging import get_logger, log_and_raise, log_processing_complete, log_processing_start
from graetzmodes.logpoly import to_mpf

logger = get_logger(__name__)

RTOL = 1e-10
QUAD_TOLERANCE = 1e-11


@dataclass(frozen=True)
class ShootingResult:
    """Boundary data of the regular solution at the outer wall.

    ``estimated_error`` is the larger of the start-point (epsilon halving) and
    integrator (tighter tolerance) differences in value_at_R.
    """

    eigenvalue: float
    value_at_R: float
    derivative_at_R: float
    estimated_error: float

    def functional(self, kind: BoundaryKind) -> float:
        return self.value_at_R if BoundaryKind(kind) == BoundaryKind.DIRICHLET else self.derivative_at_R


# series start near the axis


def _ratio_coefficients(spec: DomainSpec, j: int) -> List[float]:
    return [float(c) for c in spec.velocity_over_conductivity(j)]


def _apply_origin_operator(terms: Dict[int, float], n: int) -> Dict[int, float]:
    # r^s -> r^(s+2) / ((s+2)^2 - n^2)
    return {s + 2: c / ((s + 2) ** 2 - n ** 2) for s, c in terms.items()}


def _start_series(ratio: Sequence[float], n: int, lam: float) -> Dict[int, float]:
    """r^n + lambda t_1 + lambda^2 t_2 as exponent -> coefficient."""
    t0 = {n: 1.0}
    product = {}
    for s, c in t0.items():
        for k, a in enumerate(ratio):
            product[s + k] = product.get(s + k, 0.0) + a * c
    t1 = _apply_origin_operator(product, n)
    rhs = {}
    for s, c in t1.items():
        for k, a in enumerate(ratio):
            rhs[s + k] = rhs.get(s + k, 0.0) + a * c
    rhs[n] = rhs.get(n, 0.0) - 1.0
    t2 = _apply_origin_operator(rhs, n)
    series = dict(t0)
    for terms, weight in ((t1, lam), (t2, lam ** 2)):
        for s, c in terms.items():
            series[s] = series.get(s, 0.0) + weight * c
    return series


def _series_state(series: Dict[int, float], r: float) -> np.ndarray:
    value = sum(c * r ** s for s, c in series.items())
    slope = sum(s * c * r ** (s - 1) for s, c in series.items() if s)
    return np.array([value, slope])


def _right_hand_side(ratio: Sequence[float], n: int, lam: float, cylindrical: bool) -> Callable:
    coefficients = np.array(ratio if ratio else [0.0])

    def rhs(r, y):
        potential = lam * np.polynomial.polynomial.polyval(r, coefficients) - lam ** 2
        if cylindrical:
            return [y[1], potential * y[0] - y[1] / r + n * n * y[0] / (r * r)]
        return [y[1], potential * y[0]]
    return rhs


def _integrate(spec: DomainSpec, n: int, lam: float, start: float, state: np.ndarray, rtol: float) -> np.ndarray:
    cylindrical = spec.geometry == Geometry.CYLINDRICAL
    # the regular solution starts at its smallest size; tolerances follow it
    length = abs(start) if cylindrical else 1.0
    atol = 1e-3 * rtol * max(abs(state[0]), abs(state[1]) * length, 1e-300)
    position = start
    for j, layer in enumerate(spec.layers):
        lo, hi = (float(b) for b in spec.compartment_bounds(j))
        if j > 0:
            # flux continuity: k_(j-1) T'_- = k_j T'_+
            state = np.array([state[0], state[1] * float(spec.layers[j - 1].conductivity)
                              / float(layer.conductivity)])
        lo = max(lo, position)
        solution = solve_ivp(_right_hand_side(_ratio_coefficients(spec, j), n, lam, cylindrical),
                             (lo, hi), state, method='DOP853', rtol=rtol, atol=atol)
        if solution.status != 0:
            log_and_raise(f"Integrator failed: {solution.message}", StepFailure, logger,
                          compartment=j, location=float(solution.t[-1]), lambda_=lam)
        state = solution.y[:, -1]
        position = hi
    return state


def _shoot_once(spec: DomainSpec, n: int, lam: float, epsilon: float, kind: BoundaryKind,
                rtol: float) -> np.ndarray:
    if spec.geometry == Geometry.CYLINDRICAL:
        series = _start_series(_ratio_coefficients(spec, 0), n, lam)
        return _integrate(spec, n, lam, epsilon, _series_state(series, epsilon), rtol)
    wall = float(spec.lower_wall)
    state = np.array([1.0, 0.0]) if kind == BoundaryKind.NEUMANN else np.array([0.0, 1.0])
    return _integrate(spec, n, lam, wall, state, rtol)


def shoot(spec: DomainSpec, n: int, lam: float, start_epsilon: Optional[float] = None,
          boundary: BoundaryKind = BoundaryKind.NEUMANN, rtol: float = RTOL) -> ShootingResult:
    """Integrate the regular solution of the eigen-equation out to the wall.

    Cylindrical runs start at r = start_epsilon (default 1e-6 r_1) from
    r^n + lambda t_1 + lambda^2 t_2; planar runs start at x = -R from the
    seed of ``boundary`` (Neumann: T = 1, T' = 0; Dirichlet: T = 0, T' = 1).
    """
    if n < 0:
        raise InvalidParameter(f"Azimuthal index must be non-negative, got {n}")
    lam = float(lam)
    kind = BoundaryKind(boundary)
    first = float(spec.breakpoints[1])
    epsilon = 1e-6 * first if start_epsilon is None else float(start_epsilon)
    if spec.geometry == Geometry.CYLINDRICAL and not 0 < epsilon < first:
        raise InvalidParameter(f"start_epsilon must lie in (0, {first}), got {epsilon}")

    value, slope = _shoot_once(spec, n, lam, epsilon, kind, rtol)
    checks = [_shoot_once(spec, n, lam, epsilon, kind, rtol * 1e-2)[0]]
    if spec.geometry == Geometry.CYLINDRICAL:
        checks.append(_shoot_once(spec, n, lam, epsilon / 2, kind, rtol)[0])
    error = max(abs(value - other) for other in checks)
    return ShootingResult(lam, float(value), float(slope), float(error))


# quadrature version of F


def _checked_quad(func: Callable, lo: float, hi: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter('error', IntegrationWarning)
        try:
            value, _ = quad(func, lo, hi, epsabs=QUAD_TOLERANCE, epsrel=QUAD_TOLERANCE, limit=200)
        except IntegrationWarning as e:
            log_and_raise(f"Quadrature did not converge: {e}", QuadratureFailure, logger, lower=lo, upper=hi)
    return value


def quad_F(f: Callable[[float], float], n: int, lower: float, r: float,
           geometry: Geometry = Geometry.CYLINDRICAL) -> float:
    """F[f](r) by nested adaptive quadrature.

    Cylindrical: ``r^n int_lower^r s^(-2n-1) int_lower^s t^(n+1) f(t) dt ds``;
    planar: ``int_lower^x int_lower^s f(t) dt ds``.
    """
    lower, r = float(lower), float(r)
    if Geometry(geometry) == Geometry.PLANAR:
        if n != 0:
            raise InvalidParameter("Planar F only supports n = 0")
        return _checked_quad(lambda s: _checked_quad(f, lower, s), lower, r)

    def outer(s):
        if s == 0:
            return 0.0
        return s ** (-2 * n - 1) * _checked_quad(lambda t: t ** (n + 1) * f(t), lower, s)
    return r ** n * _checked_quad(outer, lower, r)


# Bessel reference


def bessel_j(n: int, x: float, precision: int = 40) -> float:
    """J_n(x) from its power series in mpmath arithmetic."""
    if n < 0:
        raise InvalidParameter(f"Bessel order must be non-negative, got {n}")
    with mpmath.workdps(precision + int(abs(x)) // 2):
        half = mpmath.mpf(x) / 2
        term = half ** n / factorial(n)
        total = term
        m = 0
        while True:
            m += 1
            term = -term * half * half / (m * (m + n))
            total += term
            if abs(term) < mpmath.eps * max(abs(total), 1) and m > abs(x):
                break
        return float(total)


def bessel_j_derivative(n: int, x: float) -> float:
    if n == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))


def bessel_zeros(n: int, count: int, derivative: bool = False, step: float = 0.05) -> List[float]:
    """First positive zeros of J_n (or J_n') by a sign-change scan refined with brentq."""
    func = (lambda x: bessel_j_derivative(n, x)) if derivative else (lambda x: bessel_j(n, x))
    zeros = []
    limit = n + (count + 2) * np.pi + 10.0
    x = step
    left = func(x)
    while len(zeros) < count and x < limit:
        right = func(x + step)
        if left == 0:
            zeros.append(x)
        elif left * right < 0:
            zeros.append(brentq(func, x, x + step, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        x += step
        left = right
    if len(zeros) < count:
        log_and_raise("Bessel zero scan ended early", NoConvergence, logger, n=n, found=len(zeros),
                      requested=count)
    return zeros


# verification report


@dataclass(frozen=True)
class Check:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


@dataclass
class VerificationReport:
    label: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, error: float, tolerance: float) -> None:
        self.checks.append(Check(name, float(error), float(tolerance)))

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {'check': c.name, 'error': c.error, 'tolerance': c.tolerance, 'passed': c.passed}
            for c in self.checks
        ], columns=['check', 'error', 'tolerance', 'passed'])


def _coefficient(value) -> mpmath.mpf:
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def _power_sum(coefficients: Sequence[mpmath.mpf], lam: float) -> float:
    x = mpmath.mpf(float(lam))
    return float(mpmath.fsum(c * x ** p for p, c in enumerate(coefficients)))


def _first_function_check(spec: DomainSpec, table, max_order: int = 4) -> Tuple[int, float]:
    """Relative gap between quad_F and the closure at the end of the first compartment.

    In the first compartment every t_p is the pure particular part
    F[(v/k) t_(p-1) - t_(p-2)], so the lowest p with a nonzero right-hand side
    is checked. Returns (p, gap); p is 0 when every candidate vanished.
    """
    ratio = _ratio_coefficients(spec, 0) or [0.0]
    lo, hi = (float(b) for b in spec.compartment_bounds(0))
    n = table.n if spec.geometry == Geometry.CYLINDRICAL else 0
    pieces = [poly.pieces[0] for poly in table.t]

    def sampled(p: int, x: float) -> float:
        if p < 0:
            return 0.0
        return float(to_mpf(pieces[p].evaluate(mpmath.mpf(x))))

    for p in range(1, min(table.order, max_order) + 1):
        def integrand(x, p=p):
            return np.polynomial.polynomial.polyval(x, ratio) * sampled(p - 1, x) - sampled(p - 2, x)
        reference = quad_F(integrand, n, lo, hi, spec.geometry)
        if reference == 0.0:
            continue
        closure_value = float(to_mpf(pieces[p].evaluate(table.t[p].breakpoints[1])))
        return p, abs(closure_value - reference) / abs(reference)
    return 0, float('inf')


def verify(spec: DomainSpec, kind: BoundaryKind, n: int = 0, order: Optional[int] = None, points: int = 50,
           settings: SolverSettings = DEFAULT_SETTINGS, label: str = 'configuration',
           min_roots: int = 2) -> VerificationReport:
    """Series-vs-shooting on a lambda grid, quad_F vs the closure and eigenvalue functionals.

    The eigenvalue check fails when fewer than ``min_roots`` eigenvalues lie
    inside the trust radius.
    """
    from graetzmodes.closure import build_closure
    from graetzmodes.spectrum import find_eigenvalues, series_polynomial, trust_radius

    start = time.perf_counter()
    kind = BoundaryKind(kind)
    log_processing_start("verification", label=label, n=n, boundary=kind.value)
    report = VerificationReport(label)
    table = build_closure(spec, n, order, kind, settings)
    radius = trust_radius(table, kind, settings=settings)

    grid = np.linspace(-0.9 * radius, 0.9 * radius, points)
    series_values, series_slopes, shot_values, shot_slopes = [], [], [], []
    with mpmath.workdps(table.precision):
        values = [_coefficient(c) for c in table.c_value]
        slopes = [_coefficient(c) for c in table.c_deriv]
        for lam in grid:
            series_values.append(_power_sum(values, lam))
            series_slopes.append(_power_sum(slopes, lam))
            shot = shoot(spec, n, float(lam), boundary=kind)
            shot_values.append(shot.value_at_R)
            shot_slopes.append(shot.derivative_at_R)
    value_scale = max(max(abs(v) for v in shot_values), 1e-300)
    slope_scale = max(max(abs(v) for v in shot_slopes), 1e-300)
    report.add('series vs shooting: T(R)',
               max(abs(a - b) for a, b in zip(series_values, shot_values)) / value_scale, 1e-6)
    report.add("series vs shooting: T'(R)",
               max(abs(a - b) for a, b in zip(series_slopes, shot_slopes)) / slope_scale, 1e-6)

    if table.order >= 1:
        p, gap = _first_function_check(spec, table)
        report.add(f'quadrature F vs closed-form t_{p}', gap, 1e-9)

    eigenvalues = find_eigenvalues(series_polynomial(table, kind), table, kind, settings=settings,
                                   radius=radius).eigenvalues
    wall = float(spec.radius)
    worst = 0.0
    for lam in eigenvalues:
        shot = shoot(spec, n, float(lam), boundary=kind)
        scale = max(abs(shot.value_at_R), wall * abs(shot.derivative_at_R), 1e-300)
        functional = shot.value_at_R if kind == BoundaryKind.DIRICHLET else wall * shot.derivative_at_R
        worst = max(worst, abs(functional) / scale)
    if len(eigenvalues) < min_roots:
        logger.warning(f"Too few eigenvalues to compare | found={len(eigenvalues)} | required={min_roots} | "
                       f"trust_radius={radius:.6g}")
        worst = float('inf')
    report.add(f'eigenvalue functionals ({len(eigenvalues)} roots)', worst, 1e-6)

    log_processing_complete("verification", time.perf_counter() - start, label=label, passed=report.passed)
    return report
