"""
Layered domain configurations.

A domain is a stack of compartments in the transverse coordinate, either
concentric (cylindrical, ``0 < r_1 < ... < r_m = R``) or parallel
(planar, ``-R = x_0 < ... < x_m = R``). Each compartment has a constant
conductivity and a polynomial velocity (empty for a solid layer).

All quantities are dimensionless. Inputs that are integers, fractions or
decimal literals are kept as exact rationals so the closure recursion can run
in exact arithmetic.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from numbers import Number
from typing import List, Sequence, Tuple, Union

import mpmath
import numpy as np
from numpy.polynomial import polynomial as npoly

from graetzmodes.errors import DomainValidationError, InvalidParameter
from graetzmodes.logging import get_logger, log_and_raise

logger = get_logger(__name__)

Scalar = Union[Fraction, mpmath.mpf]


class Geometry(str, Enum):
    CYLINDRICAL = 'cylindrical'
    PLANAR = 'planar'


class BoundaryKind(str, Enum):
    DIRICHLET = 'dirichlet'
    NEUMANN = 'neumann'


class SourceKind(str, Enum):
    ZERO = 'zero'
    RAISED_COSINE = 'raised_cosine'


def as_exact(value) -> Scalar:
    """Convert a user supplied number to an exact rational when possible.

    Floats go through their shortest decimal representation, so ``0.1``
    becomes ``1/10``; strings accept ``"p/q"`` and decimal literals.
    High-precision mpmath values are kept as they are.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidParameter(f"Expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise InvalidParameter(f"Expected a finite number, got {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidParameter(f"Cannot read {value!r} as a number")
    if isinstance(value, mpmath.mpf):
        return value
    if isinstance(value, Number):
        return as_exact(float(value))
    raise InvalidParameter(f"Expected a number, got {value!r}")


@dataclass(frozen=True)
class LayerSpec:
    """One compartment: conductivity k_j and velocity coefficients (ascending powers)."""

    conductivity: Scalar
    velocity: Tuple[Scalar, ...] = ()

    @classmethod
    def create(cls, conductivity, velocity: Sequence = ()) -> 'LayerSpec':
        coefficients = [as_exact(c) for c in velocity]
        while coefficients and coefficients[-1] == 0:
            coefficients.pop()
        return cls(as_exact(conductivity), tuple(coefficients))

    @property
    def is_solid(self) -> bool:
        return all(c == 0 for c in self.velocity)

    def velocity_at(self, x):
        """Velocity at x (float or array)."""
        if self.is_solid:
            return np.zeros_like(np.asarray(x, dtype=float))
        return npoly.polyval(x, [float(c) for c in self.velocity])


@dataclass(frozen=True)
class SourceSpec:
    """Lateral source g(z).

    The raised cosine window is ``A (1 - cos(pi (z - z0 + h) / h))`` on
    ``[z0 - h, z0 + h]`` and zero elsewhere: it vanishes at both edges and
    peaks at 2A in the centre. h = 1/2 gives ``1 - cos(2 pi (z - z0 + 1/2))``.
    """

    kind: SourceKind = SourceKind.ZERO
    amplitude: float = 0.0
    center: float = 0.0
    half_width: float = 0.5

    @classmethod
    def raised_cosine(cls, amplitude=1, center=0, half_width=Fraction(1, 2)) -> 'SourceSpec':
        return cls(SourceKind.RAISED_COSINE, float(amplitude), float(center), float(half_width))

    @classmethod
    def zero(cls) -> 'SourceSpec':
        return cls(SourceKind.ZERO)

    @property
    def is_zero(self) -> bool:
        return self.kind == SourceKind.ZERO or self.amplitude == 0

    @property
    def support(self) -> Tuple[float, float]:
        return (self.center - self.half_width, self.center + self.half_width)

    @property
    def frequency(self) -> float:
        return np.pi / self.half_width

    @property
    def total(self) -> float:
        """Integral of g over the real line."""
        if self.is_zero:
            return 0.0
        return 2.0 * self.amplitude * self.half_width

    def _phase(self, z):
        lo, hi = self.support
        zc = np.clip(z, lo, hi)
        return zc, self.frequency * (zc - lo)

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if self.is_zero:
            return np.zeros_like(z)
        lo, hi = self.support
        inside = (z >= lo) & (z <= hi)
        return np.where(inside, self.amplitude * (1.0 - np.cos(self.frequency * (z - lo))), 0.0)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        if self.is_zero:
            return np.zeros_like(z)
        lo, hi = self.support
        inside = (z >= lo) & (z <= hi)
        w = self.frequency
        return np.where(inside, self.amplitude * w * np.sin(w * (z - lo)), 0.0)

    def primitive(self, z):
        """G(z), the integral of g from -infinity to z."""
        z = np.asarray(z, dtype=float)
        if self.is_zero:
            return np.zeros_like(z)
        lo, _ = self.support
        zc, theta = self._phase(z)
        return self.amplitude * ((zc - lo) - np.sin(theta) / self.frequency)

    def second_primitive(self, z):
        """The integral of G from -infinity to z."""
        z = np.asarray(z, dtype=float)
        if self.is_zero:
            return np.zeros_like(z)
        lo, hi = self.support
        zc, theta = self._phase(z)
        w = self.frequency
        inside = self.amplitude * (0.5 * (zc - lo) ** 2 + (np.cos(theta) - 1.0) / w ** 2)
        return inside + self.total * np.maximum(z - hi, 0.0)


@dataclass(frozen=True)
class BoundarySpec:
    kind: BoundaryKind
    source: SourceSpec = field(default_factory=SourceSpec.zero)


@dataclass(frozen=True)
class DomainSpec:
    """Layered transverse geometry.

    Attributes:
        geometry: cylindrical or planar
        interfaces: cylindrical r_1..r_m; planar x_0..x_m
        layers: one LayerSpec per compartment
    """

    geometry: Geometry
    interfaces: Tuple[Scalar, ...]
    layers: Tuple[LayerSpec, ...]

    @classmethod
    def create(cls, geometry, interfaces: Sequence, layers: Sequence[LayerSpec]) -> 'DomainSpec':
        return cls(Geometry(geometry), tuple(as_exact(x) for x in interfaces), tuple(layers))

    @property
    def compartment_count(self) -> int:
        return len(self.layers)

    @property
    def breakpoints(self) -> Tuple[Scalar, ...]:
        """Compartment boundaries including the origin / left wall."""
        if self.geometry == Geometry.CYLINDRICAL:
            return (Fraction(0),) + tuple(self.interfaces)
        return tuple(self.interfaces)

    @property
    def radius(self) -> Scalar:
        return self.interfaces[-1]

    @property
    def lower_wall(self) -> Scalar:
        """Transverse coordinate where the closure recursion starts."""
        return self.breakpoints[0]

    def compartment_bounds(self, j: int) -> Tuple[Scalar, Scalar]:
        points = self.breakpoints
        return points[j], points[j + 1]

    def locate(self, x: float) -> int:
        """Index of the compartment holding x (interfaces belong to the inner side)."""
        points = [float(p) for p in self.breakpoints]
        if x < points[0] - 1e-14 or x > points[-1] + 1e-14:
            return -1
        for j in range(self.compartment_count):
            if x <= points[j + 1]:
                return j
        return self.compartment_count - 1

    def contains(self, x: float) -> bool:
        return self.locate(x) >= 0

    def velocity_over_conductivity(self, j: int) -> Tuple[Scalar, ...]:
        layer = self.layers[j]
        return tuple(c / layer.conductivity for c in layer.velocity)

    @property
    def is_rational(self) -> bool:
        values = list(self.interfaces)
        for layer in self.layers:
            values.append(layer.conductivity)
            values.extend(layer.velocity)
        return all(isinstance(v, Fraction) for v in values)

    def reduced_flux(self) -> Scalar:
        """Flux integral without the 2*pi factor: int v r dr (cylindrical) or int v dx (planar)."""
        convert = (lambda value: value) if self.is_rational else _mpf
        total = convert(Fraction(0))
        shift = 2 if self.geometry == Geometry.CYLINDRICAL else 1
        for j, layer in enumerate(self.layers):
            lo, hi = (convert(b) for b in self.compartment_bounds(j))
            for k, coefficient in enumerate(layer.velocity):
                total += convert(coefficient) * (hi ** (k + shift) - lo ** (k + shift)) / (k + shift)
        return total

    def flux(self) -> mpmath.mpf:
        """Total convective flux Q over the cross-section."""
        reduced = _mpf(self.reduced_flux())
        if self.geometry == Geometry.CYLINDRICAL:
            return 2 * mpmath.pi * reduced
        return reduced

    def perimeter(self) -> mpmath.mpf:
        """Heated wall measure: 2 pi R (cylindrical) or the two walls per unit width (planar)."""
        if self.geometry == Geometry.CYLINDRICAL:
            return 2 * mpmath.pi * _mpf(self.radius)
        return mpmath.mpf(2)

    def is_equilibrated(self, tolerance: float = 1e-12) -> bool:
        reduced = self.reduced_flux()
        if isinstance(reduced, Fraction):
            return reduced == 0
        return abs(reduced) <= tolerance

    def max_velocity_ratio(self) -> float:
        """Sup norm of v/k over the domain, from endpoint and critical-point values."""
        best = 0.0
        for j in range(self.compartment_count):
            coefficients = [float(c) for c in self.velocity_over_conductivity(j)]
            if not coefficients:
                continue
            lo, hi = (float(b) for b in self.compartment_bounds(j))
            candidates = [lo, hi]
            if len(coefficients) > 2:
                for root in npoly.polyroots(npoly.polyder(coefficients)):
                    if abs(root.imag) < 1e-12 and lo <= root.real <= hi:
                        candidates.append(root.real)
            best = max(best, float(np.max(np.abs(npoly.polyval(candidates, coefficients)))))
        return best


def _mpf(value) -> mpmath.mpf:
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def validate(spec: DomainSpec) -> DomainSpec:
    """Check the domain invariants; return the spec or raise with every violation."""
    violations: List[str] = []

    if not spec.layers:
        violations.append("EmptyDomain: at least one layer is required")

    expected_points = len(spec.layers) if spec.geometry == Geometry.CYLINDRICAL else len(spec.layers) + 1
    if spec.layers and len(spec.interfaces) != expected_points:
        violations.append(
            f"LayerCountMismatch: {len(spec.layers)} layers need {expected_points} interface coordinates, "
            f"got {len(spec.interfaces)}")

    points = list(spec.breakpoints)
    if any(b <= a for a, b in zip(points, points[1:])):
        violations.append(
            f"NonIncreasingInterfaces: coordinates {[str(p) for p in points]} must be strictly increasing")
    if spec.geometry == Geometry.PLANAR and len(points) >= 2 and points[0] != -points[-1]:
        violations.append(
            f"AsymmetricPlanarDomain: walls must sit at -R and R, got {points[0]} and {points[-1]}")

    for j, layer in enumerate(spec.layers):
        if not layer.conductivity > 0:
            violations.append(
                f"NonPositiveConductivity: layer {j} has conductivity {layer.conductivity}")

    if violations:
        logger.error(f"Domain validation failed | violations={len(violations)}")
        raise DomainValidationError(violations)
    return spec


def validate_boundary(boundary: BoundarySpec) -> BoundarySpec:
    source = boundary.source
    if source.kind == SourceKind.RAISED_COSINE and not source.half_width > 0:
        raise DomainValidationError(
            [f"NonPositiveHalfWidth: source half width is {source.half_width}"])
    return boundary


def heated_pipe(pe, r0=1, radius=2, kind: BoundaryKind = BoundaryKind.NEUMANN) -> Tuple[DomainSpec, BoundarySpec]:
    """Poiseuille flow in a pipe of radius r0 inside a solid wall up to R, heated through the wall."""
    pe, r0, radius = as_exact(pe), as_exact(r0), as_exact(radius)
    if not pe > 0:
        log_and_raise("Peclet number must be positive", InvalidParameter, logger, pe=pe)
    if not 0 < r0 < radius:
        log_and_raise("Pipe radius must satisfy 0 < r0 < R", InvalidParameter, logger, r0=r0, R=radius)
    spec = DomainSpec(
        Geometry.CYLINDRICAL,
        (r0, radius),
        (LayerSpec.create(1, [pe, 0, -pe / r0 ** 2]), LayerSpec.create(1)),
    )
    source = SourceSpec.raised_cosine(1, Fraction(1, 2), Fraction(1, 2))
    return validate(spec), BoundarySpec(BoundaryKind(kind), source)


def double_pass(pe, x0=1, radius=2) -> Tuple[DomainSpec, BoundarySpec]:
    """Counter-current planar channel |x| <= x0 between solid walls, heated on both walls.

    The profile 6 sigma(x) Pe |x|/x0 (1 - |x|/x0) is split at x = 0 into two
    polynomials of opposite sign.
    """
    pe, x0, radius = as_exact(pe), as_exact(x0), as_exact(radius)
    if not pe > 0:
        log_and_raise("Peclet number must be positive", InvalidParameter, logger, pe=pe)
    if not 0 < x0 < radius:
        log_and_raise("Channel half gap must satisfy 0 < x0 < R", InvalidParameter, logger, x0=x0, R=radius)
    lower_fluid = LayerSpec.create(1, [0, 6 * pe / x0, 6 * pe / x0 ** 2])
    upper_fluid = LayerSpec.create(1, [0, 6 * pe / x0, -6 * pe / x0 ** 2])
    spec = DomainSpec(
        Geometry.PLANAR,
        (-radius, -x0, Fraction(0), x0, radius),
        (LayerSpec.create(1), lower_fluid, upper_fluid, LayerSpec.create(1)),
    )
    source = SourceSpec.raised_cosine(1, 0, Fraction(1, 2))
    return validate(spec), BoundarySpec(BoundaryKind.NEUMANN, source)


def pure_diffusion(radius=1, geometry: Geometry = Geometry.CYLINDRICAL, conductivity=1,
                   kind: BoundaryKind = BoundaryKind.DIRICHLET) -> Tuple[DomainSpec, BoundarySpec]:
    """Single solid layer; its spectrum is given by Bessel (or trigonometric) zeros."""
    radius = as_exact(radius)
    if not radius > 0:
        log_and_raise("Radius must be positive", InvalidParameter, logger, R=radius)
    interfaces = (radius,) if Geometry(geometry) == Geometry.CYLINDRICAL else (-radius, radius)
    spec = DomainSpec(Geometry(geometry), interfaces, (LayerSpec.create(conductivity),))
    return validate(spec), BoundarySpec(BoundaryKind(kind), SourceSpec.zero())


BUILTINS = {
    'heated-pipe': heated_pipe,
    'double-pass': double_pass,
    'pure-diffusion': pure_diffusion,
}


def builtin(name: str, **params) -> Tuple[DomainSpec, BoundarySpec]:
    """Return one of the shipped configurations by name."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        log_and_raise(f"Unknown builtin configuration '{name}'", InvalidParameter, logger,
                      available=', '.join(sorted(BUILTINS)))
    try:
        return factory(**{k: v for k, v in params.items() if v is not None})
    except TypeError as e:
        log_and_raise(f"Invalid parameters for builtin '{name}': {e}", InvalidParameter, logger)
