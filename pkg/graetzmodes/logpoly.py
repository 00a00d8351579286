"""
Log-polynomials: finite sums of ``c * r**s * ln(r)**q``.

This is the closed-form function class of the closure functions and the
eigenmodes. It is closed under multiplication by polynomials, differentiation,
antidifferentiation and the inverse transverse operator ``F`` used by the
closure recursion.

Coefficients are either exact rationals (:class:`fractions.Fraction`) or
mpmath ``mpf`` values. Mixing the two promotes to ``mpf`` at the working
precision of the caller's ``mpmath.workdps`` context.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import mpmath

from graetzmodes.domain import Geometry
from graetzmodes.errors import (
    DivergentIntegral,
    EvaluationAtSingularity,
    InexactLogarithm,
    UnsupportedIndex,
)
from graetzmodes.logging import get_logger, log_and_raise

logger = get_logger(__name__)

Coefficient = Union[Fraction, mpmath.mpf]
Key = Tuple[int, int]


def to_mpf(value) -> mpmath.mpf:
    """Convert a rational, integer, float or mpf to mpf at the current precision."""
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def _is_exact(value) -> bool:
    return isinstance(value, (Fraction, int)) and not isinstance(value, bool)


def _promote(a, b):
    if _is_exact(a) and _is_exact(b):
        return a, b
    return to_mpf(a), to_mpf(b)


def _plus(a, b):
    a, b = _promote(a, b)
    return a + b


def _times(a, b):
    a, b = _promote(a, b)
    return a * b


def _is_zero(value) -> bool:
    return value == 0


@dataclass(frozen=True)
class LogPoly:
    """Immutable map ``(exponent, log_power) -> coefficient`` without zero entries."""

    terms: Tuple[Tuple[Key, Coefficient], ...] = ()

    @classmethod
    def from_dict(cls, terms: Dict[Key, Coefficient]) -> 'LogPoly':
        return cls(tuple(sorted((k, v) for k, v in terms.items() if not _is_zero(v))))

    @classmethod
    def zero(cls) -> 'LogPoly':
        return cls()

    @classmethod
    def constant(cls, value) -> 'LogPoly':
        return cls.from_dict({(0, 0): value})

    @classmethod
    def monomial(cls, coefficient, exponent: int, log_power: int = 0) -> 'LogPoly':
        if log_power < 0:
            raise ValueError("log power must be non-negative")
        return cls.from_dict({(exponent, log_power): coefficient})

    @classmethod
    def polynomial(cls, coefficients: Sequence) -> 'LogPoly':
        """Ordinary polynomial from ascending coefficients."""
        return cls.from_dict({(k, 0): c for k, c in enumerate(coefficients)})

    @classmethod
    def combine(cls, polys: Iterable['LogPoly'], weights: Iterable) -> 'LogPoly':
        """Weighted sum ``sum w_i a_i`` accumulated in a single pass."""
        acc: Dict[Key, Coefficient] = {}
        for poly, weight in zip(polys, weights):
            if _is_zero(weight):
                continue
            for key, value in poly.terms:
                term = _times(value, weight)
                acc[key] = _plus(acc[key], term) if key in acc else term
        return cls.from_dict(acc)

    def as_dict(self) -> Dict[Key, Coefficient]:
        return dict(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(v) for _, v in self.terms)

    @property
    def max_log_power(self) -> int:
        return max((q for (_, q), _ in self.terms), default=0)

    @property
    def min_exponent(self) -> Optional[int]:
        return min((s for (s, _), _ in self.terms), default=None)

    def coefficient(self, exponent: int, log_power: int = 0) -> Coefficient:
        return self.as_dict().get((exponent, log_power), Fraction(0))

    def to_mpf(self) -> 'LogPoly':
        return LogPoly(tuple((k, to_mpf(v)) for k, v in self.terms))

    # arithmetic

    def __add__(self, other: 'LogPoly') -> 'LogPoly':
        acc = self.as_dict()
        for key, value in other.terms:
            acc[key] = _plus(acc[key], value) if key in acc else value
        return LogPoly.from_dict(acc)

    def __neg__(self) -> 'LogPoly':
        return LogPoly(tuple((k, -v) for k, v in self.terms))

    def __sub__(self, other: 'LogPoly') -> 'LogPoly':
        return self + (-other)

    def scale(self, factor) -> 'LogPoly':
        if _is_zero(factor):
            return LogPoly()
        return LogPoly.from_dict({k: _times(v, factor) for k, v in self.terms})

    def mul_monomial(self, exponent: int) -> 'LogPoly':
        """Multiply by r**exponent."""
        return LogPoly(tuple(((s + exponent, q), v) for (s, q), v in self.terms))

    def mul_poly(self, coefficients: Sequence) -> 'LogPoly':
        """Multiply by the polynomial with ascending coefficients."""
        acc: Dict[Key, Coefficient] = {}
        for k, c in enumerate(coefficients):
            if _is_zero(c):
                continue
            for (s, q), value in self.terms:
                key = (s + k, q)
                term = _times(value, c)
                acc[key] = _plus(acc[key], term) if key in acc else term
        return LogPoly.from_dict(acc)

    def multiply(self, other: 'LogPoly') -> 'LogPoly':
        acc: Dict[Key, Coefficient] = {}
        for (s1, q1), v1 in self.terms:
            for (s2, q2), v2 in other.terms:
                key = (s1 + s2, q1 + q2)
                term = _times(v1, v2)
                acc[key] = _plus(acc[key], term) if key in acc else term
        return LogPoly.from_dict(acc)

    # calculus

    def differentiate(self) -> 'LogPoly':
        """d/dr [r^s ln^q r] = s r^(s-1) ln^q r + q r^(s-1) ln^(q-1) r."""
        acc: Dict[Key, Coefficient] = {}
        for (s, q), value in self.terms:
            if s != 0:
                key = (s - 1, q)
                term = _times(value, s)
                acc[key] = _plus(acc[key], term) if key in acc else term
            if q > 0:
                key = (s - 1, q - 1)
                term = _times(value, q)
                acc[key] = _plus(acc[key], term) if key in acc else term
        return LogPoly.from_dict(acc)

    def antiderivative(self) -> 'LogPoly':
        """Antiderivative without integration constant.

        For a != -1 the antiderivative of y^a ln^q y is
        y^(a+1) sum_k (-1)^k q!/(q-k)! ln^(q-k) y / (a+1)^(k+1);
        for a == -1 it is ln^(q+1) y / (q+1).
        """
        acc: Dict[Key, Coefficient] = {}
        for (s, q), value in self.terms:
            if s == -1:
                parts = [((0, q + 1), Fraction(1, q + 1))]
            else:
                b = s + 1
                parts = [
                    ((b, q - k), Fraction((-1) ** k * factorial(q) // factorial(q - k), b ** (k + 1)))
                    for k in range(q + 1)
                ]
            for key, factor in parts:
                term = _times(value, factor)
                acc[key] = _plus(acc[key], term) if key in acc else term
        return LogPoly.from_dict(acc)

    def integrate(self, lower, upper, exact: bool = False) -> Coefficient:
        """Definite integral over [lower, upper] in closed form."""
        primitive = self.antiderivative()
        return _minus(primitive.evaluate(upper, exact), primitive.evaluate(lower, exact))

    # evaluation

    def evaluate(self, x, exact: bool = False) -> Coefficient:
        """Value at x.

        Exact rational input with exact coefficients gives an exact result when
        no logarithm of a value other than 1 is needed. With ``exact=True`` such
        a logarithm raises InexactLogarithm instead of falling back to mpf.
        At x = 0 the limit is returned for terms with positive exponent.
        """
        if not self.terms:
            return Fraction(0) if _is_exact(x) or exact else mpmath.mpf(0)
        if x == 0:
            return self._limit_at_zero()

        needs_log = any(q > 0 for (_, q), _ in self.terms) and x != 1
        if _is_exact(x) and self.is_exact and not needs_log:
            x = Fraction(x)
            return sum((v * x ** s for (s, q), v in self.terms if q == 0), Fraction(0))
        if needs_log and exact:
            raise InexactLogarithm(x)
        if needs_log and x < 0:
            log_and_raise(f"Logarithmic terms cannot be evaluated at {x}",
                          EvaluationAtSingularity, logger)

        xm = to_mpf(x)
        log_x = mpmath.log(xm) if needs_log else mpmath.mpf(0)
        values = []
        for (s, q), v in self.terms:
            if q > 0 and not needs_log:
                continue
            values.append(to_mpf(v) * xm ** s * log_x ** q)
        return mpmath.fsum(values)

    def _limit_at_zero(self) -> Coefficient:
        result = Fraction(0) if self.is_exact else mpmath.mpf(0)
        for (s, q), v in self.terms:
            if s > 0:
                continue
            if s == 0 and q == 0:
                result = _plus(result, v)
                continue
            log_and_raise("Log-polynomial is singular at the origin", EvaluationAtSingularity,
                          logger, exponent=s, log_power=q)
        return result

    def evaluate_derivative(self, x, exact: bool = False) -> Coefficient:
        return self.differentiate().evaluate(x, exact)

    def __str__(self) -> str:
        if not self.terms:
            return '0'
        parts = []
        for (s, q), v in self.terms:
            factor = str(v) if _is_exact(v) else mpmath.nstr(v, 12)
            if s:
                factor += f'*r^{s}'
            if q:
                factor += f'*ln(r)^{q}'
            parts.append(factor)
        return ' + '.join(parts)


def _minus(a, b):
    a, b = _promote(a, b)
    return a - b


def add(a: LogPoly, b: LogPoly) -> LogPoly:
    return a + b


def scale(a: LogPoly, factor) -> LogPoly:
    return a.scale(factor)


def mul_poly(a: LogPoly, coefficients: Sequence) -> LogPoly:
    return a.mul_poly(coefficients)


def multiply(a: LogPoly, b: LogPoly) -> LogPoly:
    return a.multiply(b)


def differentiate(a: LogPoly) -> LogPoly:
    return a.differentiate()


def antiderivative(a: LogPoly) -> LogPoly:
    return a.antiderivative()


def integrate(a: LogPoly, lower, upper, exact: bool = False) -> Coefficient:
    return a.integrate(lower, upper, exact)


def evaluate(a: LogPoly, x, exact: bool = False) -> Coefficient:
    return a.evaluate(x, exact)


def evaluate_derivative(a: LogPoly, x, exact: bool = False) -> Coefficient:
    return a.evaluate_derivative(x, exact)


def _anchored(primitive: LogPoly, lower, exact: bool) -> LogPoly:
    """primitive minus its value at lower, so that the result vanishes there."""
    value = primitive.evaluate(lower, exact)
    return primitive - LogPoly.constant(value)


def apply_F(a: LogPoly, n: int, lower, geometry: Geometry) -> LogPoly:
    """Inverse of the transverse operator anchored at ``lower``.

    Cylindrical: ``F[f](r) = r^n int_L^r x^-(2n+1) int_L^x y^(n+1) f(y) dy dx``,
    which solves ``Delta_n F[f] = f``. Planar: plain double antiderivative
    from L. The result vanishes at L, and so does its derivative when L > 0
    (planar: always).
    """
    exact = a.is_exact and _is_exact(lower)
    if Geometry(geometry) == Geometry.PLANAR:
        if n != 0:
            log_and_raise("Planar closure functions only support n = 0", UnsupportedIndex, logger, n=n)
        inner = _anchored(a.antiderivative(), lower, exact)
        return _anchored(inner.antiderivative(), lower, exact)

    if lower == 0:
        for (s, q), _ in a.terms:
            if s < n or q > 0:
                log_and_raise("F diverges at the origin for this right-hand side", DivergentIntegral,
                              logger, n=n, exponent=s, log_power=q)
        # r^s -> r^(s+2) / ((s+2)^2 - n^2)
        return LogPoly.from_dict({
            (s + 2, 0): _times(v, Fraction(1, (s + 2) ** 2 - n ** 2)) for (s, _), v in a.terms
        })

    if lower < 0:
        log_and_raise("Cylindrical lower limit must be non-negative", EvaluationAtSingularity,
                      logger, lower=lower)
    inner = _anchored(a.mul_monomial(n + 1).antiderivative(), lower, exact)
    outer = _anchored(inner.mul_monomial(-(2 * n + 1)).antiderivative(), lower, exact)
    return outer.mul_monomial(n)


def laplacian(a: LogPoly, n: int, geometry: Geometry) -> LogPoly:
    """Delta_n a = a'' + a'/r - n^2 a/r^2 (cylindrical) or a'' (planar)."""
    first = a.differentiate()
    second = first.differentiate()
    if Geometry(geometry) == Geometry.PLANAR:
        if n != 0:
            log_and_raise("Planar operator only supports n = 0", UnsupportedIndex, logger, n=n)
        return second
    return second + first.mul_monomial(-1) - a.mul_monomial(-2).scale(n * n)


@dataclass(frozen=True)
class PiecewiseLogPoly:
    """One LogPoly per compartment between consecutive breakpoints."""

    breakpoints: Tuple
    pieces: Tuple[LogPoly, ...]

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) - 1:
            raise ValueError(
                f"{len(self.breakpoints)} breakpoints need {len(self.breakpoints) - 1} pieces, "
                f"got {len(self.pieces)}")

    @property
    def compartment_count(self) -> int:
        return len(self.pieces)

    @property
    def is_exact(self) -> bool:
        return all(piece.is_exact for piece in self.pieces)

    @property
    def max_log_power(self) -> int:
        return max(piece.max_log_power for piece in self.pieces)

    def piece_index(self, x) -> int:
        # mpf does not compare with Fraction
        if _is_exact(x) and all(_is_exact(b) for b in self.breakpoints):
            points = self.breakpoints
        else:
            points = [float(b) for b in self.breakpoints]
            x = float(x)
        if x < points[0] or x > points[-1]:
            return -1
        for j in range(self.compartment_count):
            if x <= points[j + 1]:
                return j
        return self.compartment_count - 1

    def _piece(self, x) -> LogPoly:
        j = self.piece_index(x)
        if j < 0:
            log_and_raise(f"Coordinate {x} lies outside [{self.breakpoints[0]}, {self.breakpoints[-1]}]",
                          EvaluationAtSingularity, logger)
        return self.pieces[j]

    def evaluate(self, x, exact: bool = False) -> Coefficient:
        return self._piece(x).evaluate(x, exact)

    def evaluate_derivative(self, x, exact: bool = False) -> Coefficient:
        return self._piece(x).evaluate_derivative(x, exact)

    def one_sided(self, interface: int, exact: bool = False) -> Tuple[Tuple[Coefficient, Coefficient],
                                                                       Tuple[Coefficient, Coefficient]]:
        """(value, derivative) at breakpoint ``interface`` from the inner and outer piece."""
        x = self.breakpoints[interface]
        inner, outer = self.pieces[interface - 1], self.pieces[interface]
        return ((inner.evaluate(x, exact), inner.evaluate_derivative(x, exact)),
                (outer.evaluate(x, exact), outer.evaluate_derivative(x, exact)))

    def map(self, func) -> 'PiecewiseLogPoly':
        return PiecewiseLogPoly(self.breakpoints, tuple(func(piece) for piece in self.pieces))

    def scale(self, factor) -> 'PiecewiseLogPoly':
        return self.map(lambda piece: piece.scale(factor))

    def to_mpf(self) -> 'PiecewiseLogPoly':
        return self.map(LogPoly.to_mpf)

    def __add__(self, other: 'PiecewiseLogPoly') -> 'PiecewiseLogPoly':
        return PiecewiseLogPoly(self.breakpoints, tuple(a + b for a, b in zip(self.pieces, other.pieces)))

    @classmethod
    def combine(cls, polys: Sequence['PiecewiseLogPoly'], weights: Sequence) -> 'PiecewiseLogPoly':
        polys = list(polys)
        weights = list(weights)
        pieces = tuple(
            LogPoly.combine([poly.pieces[j] for poly in polys], weights)
            for j in range(polys[0].compartment_count)
        )
        return cls(polys[0].breakpoints, pieces)

    def integrate(self, weight_exponent: int = 0, exact: bool = False) -> Coefficient:
        """Integral of r^weight_exponent times the function over the whole domain."""
        total: Coefficient = Fraction(0)
        for j, piece in enumerate(self.pieces):
            lo, hi = self.breakpoints[j], self.breakpoints[j + 1]
            total = _plus(total, piece.mul_monomial(weight_exponent).integrate(lo, hi, exact))
        return total
