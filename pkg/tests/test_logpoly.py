# tests/test_logpoly.py

from fractions import Fraction

import mpmath
import pytest

from graetzmodes.domain import Geometry
from graetzmodes.errors import DivergentIntegral, EvaluationAtSingularity, InexactLogarithm, UnsupportedIndex
from graetzmodes.logpoly import LogPoly, PiecewiseLogPoly, apply_F, laplacian


def test_F_of_one_on_the_disk():
    result = apply_F(LogPoly.constant(Fraction(1)), 0, Fraction(0), Geometry.CYLINDRICAL)
    assert result == LogPoly.monomial(Fraction(1, 4), 2)


def test_F_of_r_for_first_index():
    result = apply_F(LogPoly.monomial(Fraction(1), 1), 1, Fraction(0), Geometry.CYLINDRICAL)
    assert result == LogPoly.monomial(Fraction(1, 8), 3)


def test_F_of_poiseuille_profile():
    pe = Fraction(10)
    result = apply_F(LogPoly.polynomial([pe, 0, -pe]), 0, Fraction(0), Geometry.CYLINDRICAL)
    assert result.coefficient(2) == pe / 4
    assert result.coefficient(4) == -pe / 16
    assert result.evaluate_derivative(Fraction(1)) == Fraction(5, 2)


def test_F_away_from_the_axis_inverts_the_operator():
    rhs = LogPoly.monomial(Fraction(1), 1)
    result = apply_F(rhs, 0, Fraction(1), Geometry.CYLINDRICAL)
    assert result.max_log_power == 1
    assert laplacian(result, 0, Geometry.CYLINDRICAL) == rhs
    assert result.evaluate(Fraction(1)) == 0
    assert result.evaluate_derivative(Fraction(1)) == 0


def test_planar_F_is_a_double_antiderivative():
    result = apply_F(LogPoly.constant(Fraction(1)), 0, Fraction(-1), Geometry.PLANAR)
    assert result == LogPoly.polynomial([Fraction(1, 2), Fraction(1), Fraction(1, 2)])
    with pytest.raises(UnsupportedIndex):
        apply_F(LogPoly.constant(Fraction(1)), 1, Fraction(-1), Geometry.PLANAR)


def test_F_diverges_for_low_powers_at_the_axis():
    with pytest.raises(DivergentIntegral):
        apply_F(LogPoly.constant(Fraction(1)), 1, Fraction(0), Geometry.CYLINDRICAL)


def test_differentiate_and_antiderivative():
    r_log_r = LogPoly.monomial(Fraction(1), 1, 1)
    assert r_log_r.differentiate() == LogPoly.from_dict({(0, 1): Fraction(1), (0, 0): Fraction(1)})
    assert LogPoly.monomial(Fraction(1), -1).antiderivative() == LogPoly.monomial(Fraction(1), 0, 1)
    assert r_log_r.differentiate().antiderivative() == r_log_r


def test_exact_integration_and_logarithms():
    assert LogPoly.monomial(Fraction(1), 2).integrate(Fraction(0), Fraction(1)) == Fraction(1, 3)
    log_over_r = LogPoly.monomial(Fraction(1), -1, 1)
    with mpmath.workdps(30):
        assert float(log_over_r.integrate(1, mpmath.e)) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(InexactLogarithm):
        log_over_r.evaluate(Fraction(2), exact=True)


def test_singular_terms_at_the_origin():
    with pytest.raises(EvaluationAtSingularity):
        LogPoly.monomial(Fraction(1), 0, 1).evaluate(0)
    assert LogPoly.polynomial([Fraction(3), Fraction(1)]).evaluate(0) == 3


def test_multiply_and_combine():
    a = LogPoly.polynomial([Fraction(1), Fraction(1)])
    assert a.multiply(a) == LogPoly.polynomial([1, 2, 1])
    combined = LogPoly.combine([a, LogPoly.constant(Fraction(1))], [Fraction(2), Fraction(-2)])
    assert combined == LogPoly.monomial(Fraction(2), 1)
    assert (a - a).is_zero


def test_piecewise_lookup_and_mixed_arithmetic():
    poly = PiecewiseLogPoly(
        (Fraction(0), Fraction(1), Fraction(2)),
        (LogPoly.monomial(Fraction(1), 2), LogPoly.polynomial([Fraction(-1), Fraction(2)])),
    )
    assert poly.piece_index(Fraction(1)) == 0
    assert poly.piece_index(Fraction(3, 2)) == 1
    assert poly.piece_index(3) == -1
    with mpmath.workdps(30):
        assert poly.piece_index(mpmath.mpf('1.5')) == 1
        assert float(poly.evaluate(mpmath.mpf('1.5'))) == pytest.approx(2.0)
    (inner, outer) = poly.one_sided(1)
    assert inner == outer == (1, 2)
    # int_0^2 of the function: 1/3 + 2
    assert poly.integrate() == Fraction(7, 3)
    with pytest.raises(EvaluationAtSingularity):
        poly.evaluate(Fraction(5, 2))


def test_piecewise_needs_matching_pieces():
    with pytest.raises(ValueError):
        PiecewiseLogPoly((Fraction(0), Fraction(1)), ())
