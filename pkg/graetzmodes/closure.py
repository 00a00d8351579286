"""
Closure functions of the transverse eigenproblem.

For an azimuthal index n the eigen-profile is the power series
``T_lambda = sum_p t_p lambda^p`` whose coefficients obey

    k_j (Delta_n t_p + t_(p-2)) = v_j t_(p-1)      in compartment j

with continuity of t_p and of k t_p' across every interface. Each t_p is a
piecewise log-polynomial built compartment by compartment: the particular part
``F_j[f_(p-1)]`` anchored at the compartment's inner edge plus the homogeneous
continuation ``alpha_j psi1 + beta_j psi2`` fixed by the transmission system.
"""

import time
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import mpmath
import pandas as pd

from graetzmodes.config import DEFAULT_SETTINGS, SolverSettings
from graetzmodes.domain import BoundaryKind, DomainSpec, Geometry
from graetzmodes.errors import (
    InexactLogarithm,
    InvalidParameter,
    SingularInterfaceSystem,
    UnsupportedIndex,
)
from graetzmodes.logging import (
    get_logger,
    log_and_raise,
    log_computation,
    log_processing_complete,
    log_processing_start,
)
from graetzmodes.logpoly import LogPoly, PiecewiseLogPoly, apply_F, to_mpf
from graetzmodes.utils import write_csv

logger = get_logger(__name__)


@dataclass(frozen=True)
class ClosureTable:
    """Closure functions t_0..t_P of one azimuthal index.

    Attributes:
        spec: domain the table was built for
        n: azimuthal index
        order: highest computed p
        boundary: seed family used for planar tables (None for cylindrical)
        t: closure functions t_0..t_P
        c_value: t_p(R)
        c_deriv: t_p'(R)
        velocity_bound: max(||v/k||_inf, 1)
        exact: whether the coefficients are exact rationals
        precision: decimal digits of the mpf arithmetic used for values
    """

    spec: DomainSpec
    n: int
    order: int
    boundary: Optional[BoundaryKind]
    t: Tuple[PiecewiseLogPoly, ...]
    c_value: Tuple
    c_deriv: Tuple
    velocity_bound: float
    exact: bool
    precision: int

    @property
    def geometry(self) -> Geometry:
        return self.spec.geometry

    @property
    def radius(self):
        return self.spec.radius

    @property
    def length_scale(self) -> float:
        """rho in the tail bound: max(R, 1), planar max(2R, 1)."""
        size = float(self.radius) if self.geometry == Geometry.CYLINDRICAL else 2 * float(self.radius)
        return max(size, 1.0)

    @property
    def bound_is_heuristic(self) -> bool:
        return self.length_scale > 1.0

    @property
    def seed_exponent(self) -> int:
        if self.geometry == Geometry.CYLINDRICAL:
            return self.n
        return 1 if self.boundary == BoundaryKind.DIRICHLET else 0

    def truncated(self, order: int) -> 'ClosureTable':
        """The same table cut at a lower order."""
        if not 0 <= order <= self.order:
            raise InvalidParameter(f"Cannot truncate order {self.order} table to {order}")
        return replace(self, order=order, t=self.t[:order + 1],
                       c_value=self.c_value[:order + 1], c_deriv=self.c_deriv[:order + 1])


def _homogeneous(n: int, geometry: Geometry) -> Tuple[LogPoly, LogPoly]:
    """psi1, psi2 spanning the kernel of the transverse operator."""
    if geometry == Geometry.PLANAR:
        return LogPoly.constant(Fraction(1)), LogPoly.monomial(Fraction(1), 1)
    if n == 0:
        return LogPoly.constant(Fraction(1)), LogPoly.monomial(Fraction(1), 0, 1)
    return LogPoly.monomial(Fraction(1), n), LogPoly.monomial(Fraction(1), -n)


def _seed(n: int, geometry: Geometry, boundary: Optional[BoundaryKind], wall) -> LogPoly:
    if geometry == Geometry.CYLINDRICAL:
        return LogPoly.monomial(Fraction(1), n)
    if boundary == BoundaryKind.DIRICHLET:
        # x + R: zero at the left wall
        return LogPoly.polynomial([-wall, Fraction(1)])
    return LogPoly.constant(Fraction(1))


class _ClosureBuilder:
    """Runs the recursion in one arithmetic mode (exact or mpf)."""

    def __init__(self, spec: DomainSpec, n: int, boundary: Optional[BoundaryKind], exact: bool):
        self.spec = spec
        self.n = n
        self.boundary = boundary
        self.exact = exact
        self.convert = (lambda value: value) if exact else to_mpf
        self.points = tuple(self.convert(b) for b in spec.breakpoints)
        self.conductivities = [self.convert(layer.conductivity) for layer in spec.layers]
        self.ratios = [
            tuple(self.convert(c) for c in spec.velocity_over_conductivity(j))
            for j in range(spec.compartment_count)
        ]
        self.psi1, self.psi2 = _homogeneous(n, spec.geometry)
        if not exact:
            self.psi1, self.psi2 = self.psi1.to_mpf(), self.psi2.to_mpf()

    def _value(self, poly: LogPoly, x):
        return self.convert(poly.evaluate(x, self.exact))

    def _slope(self, poly: LogPoly, x):
        return self.convert(poly.evaluate_derivative(x, self.exact))

    def continue_across(self, particular: Sequence[LogPoly]) -> PiecewiseLogPoly:
        """Attach the homogeneous part of every outer compartment from the transmission system."""
        pieces = [particular[0]]
        for j in range(1, len(particular)):
            x = self.points[j]
            inner = pieces[j - 1]
            value = self._value(inner, x)
            flux = self._slope(inner, x) * self.conductivities[j - 1] / self.conductivities[j]
            a11, a12 = self._value(self.psi1, x), self._value(self.psi2, x)
            a21, a22 = self._slope(self.psi1, x), self._slope(self.psi2, x)
            det = a11 * a22 - a12 * a21
            if det == 0:
                log_and_raise("Interface system is singular", SingularInterfaceSystem, logger,
                              interface=j, coordinate=x)
            alpha = (value * a22 - a12 * flux) / det
            beta = (a11 * flux - a21 * value) / det
            pieces.append(self.psi1.scale(alpha) + self.psi2.scale(beta) + particular[j])
        return PiecewiseLogPoly(self.points, tuple(pieces))

    def run(self, order: int, history: Sequence[PiecewiseLogPoly] = ()) -> List[PiecewiseLogPoly]:
        """t_0..t_order, resuming after the functions already in ``history``."""
        m = self.spec.compartment_count
        geometry = self.spec.geometry
        t = list(history)
        if not t:
            seed = _seed(self.n, geometry, self.boundary, self.spec.lower_wall)
            if not self.exact:
                seed = seed.to_mpf()
            t.append(self.continue_across([seed] + [LogPoly()] * (m - 1)))
        zero = PiecewiseLogPoly(self.points, (LogPoly(),) * m)
        previous2 = t[-2] if len(t) > 1 else zero
        for p in range(len(t), order + 1):
            previous = t[-1]
            particular = []
            for j in range(m):
                rhs = previous.pieces[j].mul_poly(self.ratios[j]) - previous2.pieces[j]
                particular.append(apply_F(rhs, self.n, self.points[j], geometry))
            t.append(self.continue_across(particular))
            previous2 = previous
            # one log power per resonant interface crossing
            assert t[-1].max_log_power <= m, "log power grew beyond the compartment count"
        return t


def _wall_coefficients(spec: DomainSpec, t: Sequence[PiecewiseLogPoly], exact: bool):
    """t_p(R) and t_p'(R) for every closure function in ``t``."""
    radius = spec.radius if exact else to_mpf(spec.radius)
    last = [poly.pieces[-1] for poly in t]
    return (tuple(piece.evaluate(radius) for piece in last),
            tuple(piece.evaluate_derivative(radius) for piece in last))


def build_closure(
    spec: DomainSpec,
    n: int,
    order: Optional[int] = None,
    boundary: Optional[BoundaryKind] = None,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ClosureTable:
    """Build t_0..t_P for index n.

    Rational domains are built in exact arithmetic; if a logarithm of an
    interface coordinate other than 1 is needed the build restarts in mpf at
    ``settings.precision`` digits. ``boundary`` selects the planar seed
    (Neumann-type t_0 = 1 or Dirichlet-type t_0 = x + R) and is ignored for
    cylindrical domains.
    """
    order = settings.order if order is None else order
    if order < 0:
        log_and_raise("Closure order must be non-negative", InvalidParameter, logger, order=order)
    if n < 0:
        log_and_raise("Azimuthal index must be non-negative", InvalidParameter, logger, n=n)
    if spec.geometry == Geometry.PLANAR:
        if n != 0:
            log_and_raise("Planar closure functions only support n = 0", UnsupportedIndex, logger, n=n)
        boundary = BoundaryKind(boundary) if boundary is not None else BoundaryKind.NEUMANN
    else:
        boundary = None

    start = time.perf_counter()
    log_processing_start("closure build", geometry=spec.geometry.value, n=n, order=order,
                         boundary=boundary.value if boundary else None)
    with mpmath.workdps(settings.precision):
        exact = spec.is_rational
        try:
            t = _ClosureBuilder(spec, n, boundary, exact).run(order)
        except InexactLogarithm as e:
            log_computation("exact closure needs an irrational logarithm; rebuilding in mpf",
                            value=e.value, precision=settings.precision)
            exact = False
            t = _ClosureBuilder(spec, n, boundary, exact).run(order)

        c_value, c_deriv = _wall_coefficients(spec, t, exact)

    table = ClosureTable(
        spec=spec,
        n=n,
        order=order,
        boundary=boundary,
        t=tuple(t),
        c_value=c_value,
        c_deriv=c_deriv,
        velocity_bound=max(spec.max_velocity_ratio(), 1.0),
        exact=exact,
        precision=settings.precision,
    )
    log_processing_complete("closure build", time.perf_counter() - start, n=n, order=order,
                            exact=exact, M=f"{table.velocity_bound:.6g}")
    return table


def extend_closure(table: ClosureTable, order: int,
                   settings: SolverSettings = DEFAULT_SETTINGS) -> ClosureTable:
    """Continue the recursion of ``table`` up to ``order``.

    The functions already computed are reused in the table's own arithmetic.
    A table of at least ``order`` is returned truncated.
    """
    if order <= table.order:
        return table.truncated(order)
    spec = table.spec
    start = time.perf_counter()
    log_processing_start("closure extension", n=table.n, order=table.order, target=order)
    with mpmath.workdps(table.precision):
        try:
            t = _ClosureBuilder(spec, table.n, table.boundary, table.exact).run(order, table.t)
        except InexactLogarithm:
            # the exact prefix never needed the offending logarithm; start over in mpf
            return build_closure(spec, table.n, order, table.boundary,
                                 settings.with_overrides(precision=table.precision))
        c_value, c_deriv = _wall_coefficients(spec, t, table.exact)
    extended = replace(table, order=order, t=tuple(t), c_value=c_value, c_deriv=c_deriv)
    log_processing_complete("closure extension", time.perf_counter() - start, n=table.n, order=order)
    return extended


def _k_coefficient(table: ClosureTable, i: int) -> mpmath.mpf:
    """K_i of the pure-diffusion iterates tau_i = K_i r^(n+2i)."""
    if table.geometry == Geometry.PLANAR:
        return 1 / mpmath.factorial(2 * i)
    return 1 / (mpmath.mpf(4) ** i * mpmath.factorial(i) * mpmath.rf(table.n + 1, i))


def tail_bound(table: ClosureTable, abs_lambda, from_order: Optional[int] = None,
               max_terms: int = 100000) -> mpmath.mpf:
    """Bound on ``sum_{p > from_order} |t_p| |lambda|^p``.

    Uses ``alpha_p = (2M)^p K_(max(i-1,0)) rho^(e+2i)`` for p = 2i or 2i+1,
    where rho is the length scale of the table. The bound is rigorous for
    rho = 1 and a trust indicator otherwise.
    """
    from_order = table.order if from_order is None else from_order
    with mpmath.workdps(max(table.precision, 30)):
        lam = abs(to_mpf(abs_lambda))
        if lam == 0:
            return mpmath.mpf(0)
        growth = 2 * mpmath.mpf(table.velocity_bound) * lam
        rho = mpmath.mpf(table.length_scale)
        cutoff = mpmath.mpf(10) ** (-table.precision)
        total = mpmath.mpf(0)
        previous = mpmath.mpf(0)
        for p in range(from_order + 1, from_order + 1 + max_terms):
            i = p // 2
            term = growth ** p * _k_coefficient(table, max(i - 1, 0)) * rho ** (table.seed_exponent + 2 * i)
            total += term
            # past the peak and negligible
            if term <= previous and term < cutoff * total:
                break
            previous = term
        return total


def transmission_defects(table: ClosureTable) -> pd.DataFrame:
    """Value and flux jumps of every t_p at every interface."""
    records = []
    conductivities = [layer.conductivity for layer in table.spec.layers]
    with mpmath.workdps(table.precision):
        for p, poly in enumerate(table.t):
            for interface in range(1, poly.compartment_count):
                (v_in, d_in), (v_out, d_out) = poly.one_sided(interface)
                value_jump = abs(to_mpf(v_out) - to_mpf(v_in))
                flux_jump = abs(to_mpf(conductivities[interface]) * to_mpf(d_out)
                                - to_mpf(conductivities[interface - 1]) * to_mpf(d_in))
                records.append({
                    'p': p,
                    'interface': interface,
                    'coordinate': float(poly.breakpoints[interface]),
                    'value_jump': float(value_jump),
                    'flux_jump': float(flux_jump),
                })
    return pd.DataFrame.from_records(
        records, columns=['p', 'interface', 'coordinate', 'value_jump', 'flux_jump'])


def _format_coefficient(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return mpmath.nstr(value, 17, min_fixed=-1, max_fixed=-1)


def table_frame(table: ClosureTable) -> pd.DataFrame:
    rows = []
    for p, poly in enumerate(table.t):
        for j, piece in enumerate(poly.pieces):
            for (s, q), value in piece.terms:
                rows.append({
                    'p': p,
                    'compartment': j,
                    'exponent': s,
                    'log_power': q,
                    'coefficient': _format_coefficient(value),
                })
    return pd.DataFrame.from_records(
        rows, columns=['p', 'compartment', 'exponent', 'log_power', 'coefficient'])


def export_csv(table: ClosureTable, path: Union[str, Path]) -> Path:
    """Write one row per term: p, compartment, exponent, log_power, coefficient."""
    path = write_csv(table_frame(table), path)
    logger.info(f"Closure table written to {path} | order={table.order}")
    return path


def _latex_coefficient(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        sign = '-' if value < 0 else ''
        return f"{sign}\\frac{{{abs(value.numerator)}}}{{{value.denominator}}}"
    return mpmath.nstr(value, 17)


def _latex_piece(piece: LogPoly, variable: str) -> str:
    if piece.is_zero:
        return '0'
    parts = []
    for (s, q), value in piece.terms:
        factor = _latex_coefficient(value)
        if s:
            factor += f" {variable}^{{{s}}}"
        if q:
            factor += f" \\ln^{{{q}}} {variable}" if q > 1 else f" \\ln {variable}"
        parts.append(factor)
    return ' + '.join(parts).replace('+ -', '- ')


def export_latex(table: ClosureTable, max_order: Optional[int] = None) -> str:
    """LaTeX ``align`` block listing t_p on each compartment."""
    variable = 'r' if table.geometry == Geometry.CYLINDRICAL else 'x'
    last = table.order if max_order is None else min(max_order, table.order)
    lines = ['\\begin{align*}']
    for p in range(last + 1):
        for j, piece in enumerate(table.t[p].pieces):
            lines.append(f"t_{{{table.n},{p}}}^{{({j + 1})}}({variable}) &= "
                         f"{_latex_piece(piece, variable)} \\\\")
    lines.append('\\end{align*}')
    return '\n'.join(lines)
