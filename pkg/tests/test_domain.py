# tests/test_domain.py

from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import trapezoid

from graetzmodes.domain import (
    BoundaryKind,
    BoundarySpec,
    DomainSpec,
    Geometry,
    LayerSpec,
    SourceSpec,
    as_exact,
    builtin,
    double_pass,
    heated_pipe,
    validate,
    validate_boundary,
)
from graetzmodes.errors import DomainValidationError, InvalidParameter


def test_as_exact_keeps_decimals_rational():
    assert as_exact(0.1) == Fraction(1, 10)
    assert as_exact("3/4") == Fraction(3, 4)
    assert as_exact(2) == Fraction(2)


def test_as_exact_rejects_garbage():
    with pytest.raises(InvalidParameter):
        as_exact("two")
    with pytest.raises(InvalidParameter):
        as_exact(float('nan'))


def test_layer_drops_trailing_zero_coefficients():
    layer = LayerSpec.create(1, [1, 0, 0])
    assert layer.velocity == (Fraction(1),)
    assert LayerSpec.create(2, [0, 0]).is_solid


def test_heated_pipe_layout(heated_pipe_problem):
    spec, boundary = heated_pipe_problem
    assert spec.geometry == Geometry.CYLINDRICAL
    assert spec.breakpoints == (0, 1, 2)
    assert spec.radius == 2
    assert spec.layers[0].velocity == (1, 0, -1)
    assert spec.layers[1].is_solid
    assert boundary.kind == BoundaryKind.NEUMANN
    assert boundary.source.support == (0.0, 1.0)


def test_heated_pipe_flux_and_perimeter(heated_pipe_problem):
    spec, _ = heated_pipe_problem
    assert spec.reduced_flux() == Fraction(1, 4)
    assert float(spec.flux()) == pytest.approx(np.pi / 2)
    assert float(spec.perimeter() / spec.flux()) == pytest.approx(8.0)
    assert not spec.is_equilibrated()


def test_double_pass_is_equilibrated(double_pass_problem):
    spec, _ = double_pass_problem
    assert spec.geometry == Geometry.PLANAR
    assert spec.breakpoints == (-2, -1, 0, 1, 2)
    assert spec.reduced_flux() == 0
    assert spec.is_equilibrated()
    # 6 Pe x (1 - x) peaks at x = 1/2
    assert spec.max_velocity_ratio() == pytest.approx(1.5)


def test_locate_assigns_interfaces_to_inner_side(heated_pipe_problem):
    spec, _ = heated_pipe_problem
    assert spec.locate(0.5) == 0
    assert spec.locate(1.0) == 0
    assert spec.locate(1.5) == 1
    assert spec.locate(2.5) == -1
    assert not spec.contains(-0.1)


def test_validate_collects_every_violation():
    spec = DomainSpec.create('cylindrical', [2, 1], [LayerSpec.create(-1), LayerSpec.create(1)])
    with pytest.raises(DomainValidationError) as excinfo:
        validate(spec)
    assert set(excinfo.value.codes) == {'NonIncreasingInterfaces', 'NonPositiveConductivity'}


def test_validate_layer_count_and_symmetry():
    spec = DomainSpec.create('planar', [-1, 0, 2], [LayerSpec.create(1)])
    with pytest.raises(DomainValidationError) as excinfo:
        validate(spec)
    assert 'LayerCountMismatch' in excinfo.value.codes
    assert 'AsymmetricPlanarDomain' in excinfo.value.codes


def test_empty_domain_is_rejected():
    with pytest.raises(DomainValidationError) as excinfo:
        validate(DomainSpec.create('cylindrical', [], []))
    assert 'EmptyDomain' in excinfo.value.codes


def test_validate_boundary_half_width():
    boundary = BoundarySpec(BoundaryKind.NEUMANN, SourceSpec.raised_cosine(1, 0, 0))
    with pytest.raises(DomainValidationError):
        validate_boundary(boundary)


def test_raised_cosine_integrates_to_one():
    source = SourceSpec.raised_cosine(1, 0.5, 0.5)
    assert source.total == pytest.approx(1.0)
    assert float(source.primitive(10.0)) == pytest.approx(1.0)
    assert float(source.primitive(-10.0)) == 0.0
    z = np.linspace(-0.5, 1.5, 4001)
    assert trapezoid(source.value(z), z) == pytest.approx(1.0, abs=1e-6)


def test_raised_cosine_primitives_are_consistent():
    source = SourceSpec.raised_cosine(2, 0.5, 0.5)
    z = np.linspace(-1.0, 3.0, 2001)
    step = 1e-6
    numeric = (source.primitive(z + step) - source.primitive(z - step)) / (2 * step)
    assert np.allclose(numeric, source.value(z), atol=1e-6)
    numeric = (source.second_primitive(z + step) - source.second_primitive(z - step)) / (2 * step)
    assert np.allclose(numeric, source.primitive(z), atol=1e-6)


def test_zero_source_is_identically_zero():
    source = SourceSpec.zero()
    assert source.is_zero
    assert np.all(source.value([0.0, 0.5]) == 0.0)
    assert source.total == 0.0


def test_builtin_lookup():
    spec, boundary = builtin('double-pass', pe=2, x0=None)
    assert spec.layers[2].velocity == (0, 12, -12)
    assert boundary.source.center == 0.0
    with pytest.raises(InvalidParameter):
        builtin('triple-pass')
    with pytest.raises(InvalidParameter):
        heated_pipe(-1)
    with pytest.raises(InvalidParameter):
        double_pass(1, x0=3, radius=2)
