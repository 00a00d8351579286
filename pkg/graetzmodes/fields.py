"""
Assembled temperature fields T(x, z) for axisymmetric lateral sources.

Three solution families:

- Dirichlet lateral source ``T = g``:
  ``T = g(z) + sum_i alpha_i C_i(z) T_i(x)``
- Neumann source with net flow (Q != 0):
  ``T = (P/Q) G(z) + sum_i alpha_i C_i(z) T_i(x)``
- Neumann source, equilibrated exchanger (Q = 0):
  ``T = a GG(z) + G(z) (a T_0(x) + b) + sum_i alpha_i C_i(z) T_i(x)``

where G and GG are the first and second primitives of g, P the heated
perimeter, T_0 the adiabatic kernel and ``C_i = c_i(z) exp(lambda_i z)`` the
damped source convolutions (upstream modes integrate the source ahead of z,
downstream modes behind it). The gauge is T -> 0 as z -> -inf.
"""

import time
from dataclasses import dataclass, field as dataclass_field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import pandas as pd
from numpy.polynomial import legendre
from scipy.optimize import minimize_scalar

from graetzmodes.config import DEFAULT_SETTINGS, SolverSettings
from graetzmodes.domain import BoundaryKind, BoundarySpec, DomainSpec, Geometry, SourceKind, SourceSpec
from graetzmodes.errors import (
    DivergentConvolution,
    FamilyMismatch,
    InexactLogarithm,
    InvalidParameter,
    NotEquilibrated,
    OutOfDomain,
    TrustRadiusTooSmall,
    ZeroDenominator,
)
from graetzmodes.logging import (
    get_logger,
    log_and_raise,
    log_computation,
    log_processing_complete,
    log_processing_start,
)
from graetzmodes.logpoly import LogPoly, PiecewiseLogPoly, to_mpf
from graetzmodes.spectrum import (
    DOWNSTREAM,
    UPSTREAM,
    EigenMode,
    Spectrum,
    classify,
    compute_spectrum,
    eigenmode,
)

logger = get_logger(__name__)


class Family(str, Enum):
    DIRICHLET_LATERAL = 'dirichlet_lateral'
    NEUMANN_NON_EQUILIBRATED = 'neumann_non_equilibrated'
    NEUMANN_EQUILIBRATED = 'neumann_equilibrated'


def family_for(spec: DomainSpec, kind: BoundaryKind) -> Family:
    if BoundaryKind(kind) == BoundaryKind.DIRICHLET:
        return Family.DIRICHLET_LATERAL
    if spec.is_equilibrated():
        return Family.NEUMANN_EQUILIBRATED
    return Family.NEUMANN_NON_EQUILIBRATED


def _uniform(*values):
    """Keep exact rationals when every value is one, else promote all to mpf."""
    if all(isinstance(v, (Fraction, int)) for v in values):
        return tuple(Fraction(v) for v in values)
    return tuple(to_mpf(v) for v in values)


# adiabatic kernel


@dataclass(frozen=True)
class KernelT0:
    """Solution of div(k grad T_0) = v with zero wall flux, zero cross-section mean."""

    profile: PiecewiseLogPoly
    gauge: str = 'zero-mean'
    note: str = 'a and b shift jointly with the gauge; a T_0 + b is gauge invariant'

    def value(self, x) -> mpmath.mpf:
        return to_mpf(self.profile.evaluate(x))


def _measure_exponent(spec: DomainSpec) -> int:
    return 1 if spec.geometry == Geometry.CYLINDRICAL else 0


def _kernel_pieces(spec: DomainSpec, exact: bool) -> List[LogPoly]:
    convert = (lambda value: value) if exact else to_mpf
    weight = _measure_exponent(spec)
    pieces = []
    flux = convert(Fraction(0))
    level = convert(Fraction(0))
    for j, layer in enumerate(spec.layers):
        lo, hi = (convert(b) for b in spec.compartment_bounds(j))
        velocity = LogPoly.polynomial([convert(c) for c in layer.velocity])
        primitive = velocity.mul_monomial(weight).antiderivative()
        # cumulative transverse flux through the coordinate surface at x
        cumulative = primitive + LogPoly.constant(flux - convert(primitive.evaluate(lo, exact)))
        slope = cumulative.mul_monomial(-weight).scale(1 / convert(layer.conductivity))
        shape = slope.antiderivative()
        piece = shape + LogPoly.constant(level - convert(shape.evaluate(lo, exact)))
        pieces.append(piece)
        flux = convert(cumulative.evaluate(hi, exact))
        level = convert(piece.evaluate(hi, exact))
    return pieces


def adiabatic_kernel(spec: DomainSpec, settings: SolverSettings = DEFAULT_SETTINGS) -> KernelT0:
    """T_0 in closed form with the additive constant fixed by a zero cross-section mean."""
    if not spec.is_equilibrated():
        log_and_raise("Adiabatic kernel needs zero net flux", NotEquilibrated, logger,
                      flux=mpmath.nstr(spec.flux(), 12))
    with mpmath.workdps(settings.precision):
        exact = spec.is_rational
        try:
            pieces = _kernel_pieces(spec, exact)
        except InexactLogarithm:
            exact = False
            pieces = _kernel_pieces(spec, exact)
        points = spec.breakpoints if exact else tuple(to_mpf(b) for b in spec.breakpoints)
        profile = PiecewiseLogPoly(points, tuple(pieces))

        weight = _measure_exponent(spec)
        total = profile.integrate(weight)
        lo, hi = points[0], points[-1]
        volume = (hi ** 2 - lo ** 2) / 2 if weight else hi - lo
        total, volume = _uniform(total, volume)
        mean = total / volume
        profile = profile.map(lambda piece: piece - LogPoly.constant(mean))
    log_computation("adiabatic kernel", exact=exact, mean_shift=str(mean))
    return KernelT0(profile)


def exchange_constants(spec: DomainSpec, kernel: KernelT0) -> Tuple:
    """(a, b) of the equilibrated family.

    Cylindrical: ``a = R / int_0^R (v T_0 - k) r dr``,
    ``b = (a^2/R) int_0^R (2k - v T_0) T_0 r dr + a T_0(R)``.
    Planar: ``a = 2 / int_-R^R (v T_0 - k) dx``,
    ``b = (a^2/2) int_-R^R (2k - v T_0) T_0 dx + a (T_0(-R) + T_0(R)) / 2``.
    """
    weight = _measure_exponent(spec)
    profile = kernel.profile
    exchange = Fraction(0)
    source = Fraction(0)
    for j, layer in enumerate(spec.layers):
        lo, hi = profile.breakpoints[j], profile.breakpoints[j + 1]
        piece = profile.pieces[j]
        k = LogPoly.constant(layer.conductivity)
        v_t0 = piece.mul_poly(layer.velocity)
        exchange_part = (v_t0 - k).mul_monomial(weight).integrate(lo, hi)
        source_part = (k.scale(2) - v_t0).multiply(piece).mul_monomial(weight).integrate(lo, hi)
        exchange, exchange_part = _uniform(exchange, exchange_part)
        exchange += exchange_part
        source, source_part = _uniform(source, source_part)
        source += source_part

    radius = spec.radius
    if exchange == 0:
        log_and_raise("Exchange integral vanishes", ZeroDenominator, logger)
    if spec.geometry == Geometry.CYLINDRICAL:
        wall = profile.evaluate(profile.breakpoints[-1])
        radius, exchange, source, wall = _uniform(radius, exchange, source, wall)
        a = radius / exchange
        b = a * a / radius * source + a * wall
    else:
        walls = (profile.evaluate(profile.breakpoints[0]), profile.evaluate(profile.breakpoints[-1]))
        exchange, source, left, right = _uniform(exchange, source, *walls)
        a = 2 / exchange
        b = a * a / 2 * source + a * (left + right) / 2
    log_computation("exchange constants", a=str(a), b=str(b))
    return a, b


# source convolutions


def damped_convolution(source: SourceSpec, lam: float, derivative: bool, z) -> np.ndarray:
    """C(z) = c(z) exp(lambda z) in closed form for the raised cosine window.

    Upstream (lambda > 0): ``C = int_z^inf s(xi) exp(lambda (z - xi)) dxi``;
    downstream (lambda < 0): ``C = -int_-inf^z s(xi) exp(lambda (z - xi)) dxi``,
    with s = g, or g' when ``derivative`` is set. Both satisfy C' = lambda C - s.
    """
    z = np.asarray(z, dtype=float)
    if source.is_zero:
        return np.zeros_like(z)
    if source.kind != SourceKind.RAISED_COSINE:
        raise InvalidParameter(f"No closed-form convolution for source kind {source.kind}")
    lam = float(lam)
    amplitude, w = source.amplitude, source.frequency
    lo, hi = source.support
    denominator = lam ** 2 + w ** 2

    def primitive(xi, zz):
        # antiderivative in xi of s(xi) exp(lambda (zz - xi))
        theta = w * (xi - lo)
        damping = np.exp(lam * (zz - xi))
        if derivative:
            return amplitude * w * damping * (-lam * np.sin(theta) - w * np.cos(theta)) / denominator
        return amplitude * damping * (-1.0 / lam - (-lam * np.cos(theta) + w * np.sin(theta)) / denominator)

    # z is clamped where C vanishes so the exponentials stay bounded
    if lam > 0:
        zz = np.minimum(z, hi)
        value = primitive(hi, zz) - primitive(np.maximum(zz, lo), zz)
        return np.where(z > hi, 0.0, value)
    zz = np.maximum(z, lo)
    value = -(primitive(np.minimum(zz, hi), zz) - primitive(lo, zz))
    return np.where(z < lo, 0.0, value)


def source_convolutions(source: SourceSpec, lam: float, family: Family, z,
                        mode_class: Optional[str] = None) -> np.ndarray:
    """c_i(z) itself (without the exp(lambda z) factor).

    ``mode_class`` must agree with the sign of lambda; the integral diverges otherwise.
    """
    lam = float(lam)
    if lam == 0 or (mode_class is not None and mode_class != classify(lam)):
        log_and_raise("Convolution class does not match the eigenvalue sign", DivergentConvolution,
                      logger, lambda_=lam, mode_class=mode_class)
    derivative = Family(family) == Family.DIRICHLET_LATERAL
    z = np.asarray(z, dtype=float)
    return damped_convolution(source, lam, derivative, z) * np.exp(-lam * z)


# cross-section quadrature


@dataclass(frozen=True)
class CrossSection:
    """Gauss-Legendre nodes over every compartment with the dOmega measure."""

    nodes: np.ndarray
    weights: np.ndarray
    conductivity: np.ndarray
    velocity: np.ndarray

    @classmethod
    def build(cls, spec: DomainSpec, count: int) -> 'CrossSection':
        base_nodes, base_weights = legendre.leggauss(count)
        nodes, weights, conductivity, velocity = [], [], [], []
        for j, layer in enumerate(spec.layers):
            lo, hi = (float(b) for b in spec.compartment_bounds(j))
            x = 0.5 * (hi - lo) * base_nodes + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * base_weights
            if spec.geometry == Geometry.CYLINDRICAL:
                w = w * 2.0 * np.pi * x
            nodes.append(x)
            weights.append(w)
            conductivity.append(np.full_like(x, float(layer.conductivity)))
            velocity.append(layer.velocity_at(x))
        return cls(np.concatenate(nodes), np.concatenate(weights),
                   np.concatenate(conductivity), np.concatenate(velocity))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


# mode terms


@dataclass(frozen=True)
class ModeTerm:
    """One eigenmode in the field expansion.

    Attributes:
        mode: eigenmode with its raw (seed-normalized) profile
        scale: multiplier of the raw profile (1/||Phi|| for energy normalization)
        amplitude: alpha_i for the scaled profile
        norm_squared: ||Phi||^2 = 2 int k T^2 - int v T^2 / lambda of the raw profile
        wall_functional: int over the wall of T (Neumann) or k dT/dn (Dirichlet), raw profile
        k_integral: int k T dOmega of the scaled profile
        v_integral: int v T dOmega of the scaled profile
    """

    mode: EigenMode
    scale: float
    amplitude: float
    norm_squared: float
    wall_functional: float
    k_integral: float
    v_integral: float

    @property
    def eigenvalue(self) -> float:
        return float(self.mode.eigenvalue)

    @property
    def classification(self) -> str:
        return classify(self.mode.eigenvalue)

    @property
    def weight(self) -> float:
        """Coefficient of the raw profile in the field."""
        return self.amplitude * self.scale

    def value(self, x) -> float:
        return self.scale * float(self.mode.value(x))


def _wall_functional(spec: DomainSpec, mode: EigenMode, kind: BoundaryKind) -> mpmath.mpf:
    radius = spec.radius
    with mpmath.workdps(mode.precision):
        if spec.geometry == Geometry.CYLINDRICAL:
            if kind == BoundaryKind.NEUMANN:
                return 2 * mpmath.pi * to_mpf(radius) * mode.value(radius)
            k = to_mpf(spec.layers[-1].conductivity)
            return 2 * mpmath.pi * to_mpf(radius) * k * mode.derivative(radius)
        left = spec.lower_wall
        if kind == BoundaryKind.NEUMANN:
            return mode.value(radius) + mode.value(left)
        # outward normals: +x at R, -x at -R
        return (to_mpf(spec.layers[-1].conductivity) * mode.derivative(radius)
                - to_mpf(spec.layers[0].conductivity) * mode.derivative(left))


def _linear_integrals(spec: DomainSpec, mode: EigenMode) -> Tuple[float, float]:
    """int k T and int v T over the cross-section in closed form."""
    weight = _measure_exponent(spec)
    factor = 2 * mpmath.pi if spec.geometry == Geometry.CYLINDRICAL else mpmath.mpf(1)
    with mpmath.workdps(mode.precision):
        k_total = mpmath.mpf(0)
        v_total = mpmath.mpf(0)
        for j, layer in enumerate(spec.layers):
            lo, hi = mode.profile.breakpoints[j], mode.profile.breakpoints[j + 1]
            piece = mode.profile.pieces[j].mul_monomial(weight)
            k_total += to_mpf(layer.conductivity) * to_mpf(piece.integrate(lo, hi))
            if layer.velocity:
                v_total += to_mpf(piece.mul_poly(layer.velocity).integrate(lo, hi))
        return float(factor * k_total), float(factor * v_total)


def mode_term(spec: DomainSpec, mode: EigenMode, kind: BoundaryKind, section: CrossSection,
              normalization: str = 'energy') -> ModeTerm:
    """Norm, wall functional and amplitude of one eigenmode.

    Neumann: ``alpha = S / (lambda ||Phi||^2)``; Dirichlet: ``alpha = -D / (lambda^2 ||Phi||^2)``
    for the raw profile, rescaled to the chosen normalization.
    """
    lam = float(mode.eigenvalue)
    values = np.array([float(mode.value(x)) for x in section.nodes])
    k_square = section.integrate(section.conductivity * values ** 2)
    v_square = section.integrate(section.velocity * values ** 2)
    norm_squared = 2.0 * k_square - v_square / lam
    if not norm_squared > 0:
        log_and_raise("Mode norm is not positive", ZeroDenominator, logger, lambda_=lam,
                      norm_squared=norm_squared)

    functional = float(_wall_functional(spec, mode, kind))
    if kind == BoundaryKind.NEUMANN:
        raw_amplitude = functional / (lam * norm_squared)
    else:
        raw_amplitude = -functional / (lam ** 2 * norm_squared)

    scale = 1.0 / np.sqrt(norm_squared) if normalization == 'energy' else 1.0
    k_integral, v_integral = _linear_integrals(spec, mode)
    return ModeTerm(
        mode=mode,
        scale=scale,
        amplitude=raw_amplitude / scale,
        norm_squared=norm_squared,
        wall_functional=functional,
        k_integral=k_integral * scale,
        v_integral=v_integral * scale,
    )


def mode_amplitudes(spectrum: Spectrum, bc: Optional[BoundaryKind] = None, mode_count: Optional[int] = None,
                    settings: SolverSettings = DEFAULT_SETTINGS) -> List[ModeTerm]:
    """Eigenmodes of the spectrum (closest to zero first in each class) with their amplitudes."""
    kind = BoundaryKind(bc) if bc is not None else spectrum.boundary
    spec = spectrum.table.spec
    section = CrossSection.build(spec, settings.quadrature_nodes)
    selected = spectrum if mode_count is None else spectrum.limited(mode_count)
    terms = []
    for lam in selected.downstream() + selected.upstream():
        mode = eigenmode(spectrum.table, lam, kind, radius=spectrum.trust_radius, settings=settings)
        terms.append(mode_term(spec, mode, kind, section, settings.normalization))
    return terms


# solution field


@dataclass(frozen=True)
class SolutionField:
    """Baseline plus truncated mode sum.

    Attributes:
        family: solution family
        spec: domain
        boundary: boundary kind and source
        terms: mode terms, downstream first
        p_over_q: P/Q for the non-equilibrated family
        a, b: exchange constants for the equilibrated family
        kernel: adiabatic kernel for the equilibrated family
        normalization: mode normalization convention
        quadrature_nodes: Gauss-Legendre nodes per compartment for flux integrals
    """

    family: Family
    spec: DomainSpec
    boundary: BoundarySpec
    terms: Tuple[ModeTerm, ...]
    p_over_q: Optional[float] = None
    a: Optional[object] = None
    b: Optional[object] = None
    kernel: Optional[KernelT0] = None
    normalization: str = 'energy'
    quadrature_nodes: int = 64
    _profile_cache: Dict = dataclass_field(default_factory=dict, compare=False, repr=False)

    @property
    def source(self) -> SourceSpec:
        return self.boundary.source

    @property
    def uses_source_derivative(self) -> bool:
        return self.family == Family.DIRICHLET_LATERAL

    def downstream_terms(self) -> List[ModeTerm]:
        return [t for t in self.terms if t.classification == DOWNSTREAM]

    def upstream_terms(self) -> List[ModeTerm]:
        return [t for t in self.terms if t.classification == UPSTREAM]

    def mode_values(self, x: float) -> np.ndarray:
        """Raw profile values of every mode at x, cached per coordinate."""
        key = float(x)
        if key not in self._profile_cache:
            self._profile_cache[key] = np.array([float(t.mode.value(key)) for t in self.terms])
        return self._profile_cache[key]

    def kernel_value(self, x: float) -> float:
        return float(self.kernel.value(float(x))) if self.kernel is not None else 0.0

    def source_term(self, z) -> np.ndarray:
        return self.source.derivative(z) if self.uses_source_derivative else self.source.value(z)


def _check_inside(spec: DomainSpec, x: float) -> None:
    if not spec.contains(float(x)):
        lo, hi = float(spec.breakpoints[0]), float(spec.breakpoints[-1])
        log_and_raise(f"Transverse coordinate {x} lies outside [{lo}, {hi}]", OutOfDomain, logger)


def _convolution_matrix(field: SolutionField, z: np.ndarray) -> np.ndarray:
    return np.array([damped_convolution(field.source, t.eigenvalue, field.uses_source_derivative, z)
                     for t in field.terms]).reshape(len(field.terms), z.size)


def _baseline(field: SolutionField, kernel_value: float, z: np.ndarray) -> np.ndarray:
    source = field.source
    if field.family == Family.DIRICHLET_LATERAL:
        return source.value(z)
    if field.family == Family.NEUMANN_NON_EQUILIBRATED:
        return field.p_over_q * source.primitive(z)
    a, b = float(field.a), float(field.b)
    return a * source.second_primitive(z) + source.primitive(z) * (a * kernel_value + b)


def _baseline_slope(field: SolutionField, kernel_value: float, z: np.ndarray) -> np.ndarray:
    source = field.source
    if field.family == Family.DIRICHLET_LATERAL:
        return source.derivative(z)
    if field.family == Family.NEUMANN_NON_EQUILIBRATED:
        return field.p_over_q * source.value(z)
    a, b = float(field.a), float(field.b)
    return a * source.primitive(z) + source.value(z) * (a * kernel_value + b)


def evaluate_field(field: SolutionField, x: float, z) -> Union[float, np.ndarray]:
    """T(x, z); z may be a scalar or an array."""
    _check_inside(field.spec, x)
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    weights = np.array([t.weight for t in field.terms])
    result = _baseline(field, field.kernel_value(x), zz)
    if field.terms:
        result = result + (weights * field.mode_values(x)) @ _convolution_matrix(field, zz)
    return float(result[0]) if scalar else result


def axial_derivative(field: SolutionField, x: float, z) -> Union[float, np.ndarray]:
    """dT/dz using C' = lambda C - s for every mode."""
    _check_inside(field.spec, x)
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    result = _baseline_slope(field, field.kernel_value(x), zz)
    if field.terms:
        weights = np.array([t.weight for t in field.terms])
        lams = np.array([t.eigenvalue for t in field.terms])
        convolutions = _convolution_matrix(field, zz)
        slopes = lams[:, None] * convolutions - field.source_term(zz)[None, :]
        result = result + (weights * field.mode_values(x)) @ slopes
    return float(result[0]) if scalar else result


def default_stations(spec: DomainSpec) -> List[float]:
    """Every breakpoint and every compartment midpoint."""
    points = [float(b) for b in spec.breakpoints]
    stations = []
    for lo, hi in zip(points, points[1:]):
        stations.extend([lo, 0.5 * (lo + hi)])
    stations.append(points[-1])
    return stations


def profile(field: SolutionField, stations: Optional[Sequence[float]] = None,
            z_grid: Optional[Sequence[float]] = None) -> pd.DataFrame:
    """Table with a z column and one temperature column per transverse station."""
    stations = default_stations(field.spec) if stations is None else list(stations)
    if z_grid is None:
        lo, hi = field.source.support
        z_grid = np.linspace(lo - 3.0, hi + 6.0, 181)
    z_grid = np.asarray(z_grid, dtype=float)
    coordinate = 'r' if field.spec.geometry == Geometry.CYLINDRICAL else 'x'
    data = {'z': z_grid}
    for x in stations:
        data[f"T({coordinate}={x:g})"] = evaluate_field(field, x, z_grid)
    return pd.DataFrame(data)


def cross_section_flux(field: SolutionField, z, section: Optional[CrossSection] = None) -> np.ndarray:
    """F(z) = int (v T - k dT/dz) dOmega by Gauss-Legendre quadrature of the assembled field."""
    section = section or CrossSection.build(field.spec, field.quadrature_nodes)
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    total = np.zeros_like(zz)
    for x, w, k, v in zip(section.nodes, section.weights, section.conductivity, section.velocity):
        total += w * (v * evaluate_field(field, x, zz) - k * axial_derivative(field, x, zz))
    return total


def balance_grid(field: SolutionField, points: int = 400) -> np.ndarray:
    """[z0 - 5, z0 + 5 / min|lambda|] with the source window centre z0."""
    lams = [abs(t.eigenvalue) for t in field.terms]
    smallest = min(lams) if lams else 1.0
    center = field.source.center
    return np.linspace(center - 5.0, center + 5.0 / smallest, points)


def heat_balance(field: SolutionField, z_grid: Optional[Sequence[float]] = None) -> pd.DataFrame:
    """Flux derivative against the wall source.

    ``flux_derivative`` is the central difference of F on the grid (one-sided at
    the ends); ``wall_source`` is P times the average of g over the same stencil,
    so the two agree up to mode truncation. ``defect`` is F(z) - P G(z).
    """
    if field.family == Family.DIRICHLET_LATERAL:
        raise InvalidParameter("Heat balance is defined for Neumann families")
    z = balance_grid(field) if z_grid is None else np.asarray(z_grid, dtype=float)
    perimeter = float(field.spec.perimeter())
    flux = cross_section_flux(field, z)
    primitive = field.source.primitive(z)
    flux_derivative = np.gradient(flux, z)
    wall_source = perimeter * np.gradient(primitive, z)
    return pd.DataFrame({
        'z': z,
        'flux': flux,
        'flux_derivative': flux_derivative,
        'wall_source': wall_source,
        'defect': flux - perimeter * primitive,
    })


def heat_balance_error(balance: pd.DataFrame) -> float:
    """max |dF/dz - P g| relative to max |P g|."""
    scale = float(np.max(np.abs(balance['wall_source'])))
    if scale == 0:
        return float(np.max(np.abs(balance['flux_derivative'])))
    return float(np.max(np.abs(balance['flux_derivative'] - balance['wall_source'])) / scale)


def assemble(spec: DomainSpec, boundary: BoundarySpec, spectrum: Spectrum, mode_count: Optional[int] = None,
             family: Optional[Family] = None, settings: SolverSettings = DEFAULT_SETTINGS) -> SolutionField:
    """Combine baseline and modes into a SolutionField."""
    start = time.perf_counter()
    expected = family_for(spec, boundary.kind)
    if family is not None and Family(family) != expected:
        log_and_raise("Solution family does not match the configuration", FamilyMismatch, logger,
                      requested=Family(family).value, expected=expected.value)
    if spectrum.boundary != boundary.kind:
        log_and_raise("Spectrum was computed for another boundary kind", FamilyMismatch, logger,
                      spectrum=spectrum.boundary.value, boundary=boundary.kind.value)
    if spectrum.n != 0:
        log_and_raise("Field assembly uses the n = 0 spectrum", InvalidParameter, logger, n=spectrum.n)
    mode_count = settings.mode_count if mode_count is None else mode_count
    if mode_count < 1:
        log_and_raise("mode_count must be at least 1", InvalidParameter, logger, mode_count=mode_count)

    log_processing_start("field assembly", family=expected.value, mode_count=mode_count)
    terms = mode_amplitudes(spectrum, boundary.kind, mode_count, settings)
    for label, count in ((DOWNSTREAM, len([t for t in terms if t.classification == DOWNSTREAM])),
                         (UPSTREAM, len([t for t in terms if t.classification == UPSTREAM]))):
        if count == 0:
            log_and_raise(f"No {label} modes inside the trust radius", TrustRadiusTooSmall, logger,
                          order=spectrum.order, trust_radius=f"{spectrum.trust_radius:.6g}")
        if count < mode_count:
            logger.warning(f"Only {count} {label} modes inside the trust radius | requested={mode_count} | "
                           f"trust_radius={spectrum.trust_radius:.6g}")

    p_over_q = a = b = kernel = None
    if expected == Family.NEUMANN_NON_EQUILIBRATED:
        p_over_q = float(spec.perimeter() / spec.flux())
    elif expected == Family.NEUMANN_EQUILIBRATED:
        kernel = adiabatic_kernel(spec, settings)
        a, b = exchange_constants(spec, kernel)

    field = SolutionField(
        family=expected,
        spec=spec,
        boundary=boundary,
        terms=tuple(terms),
        p_over_q=p_over_q,
        a=a,
        b=b,
        kernel=kernel,
        normalization=settings.normalization,
        quadrature_nodes=settings.quadrature_nodes,
    )
    log_processing_complete("field assembly", time.perf_counter() - start, family=expected.value,
                            modes=len(terms))
    return field


def solve(spec: DomainSpec, boundary: BoundarySpec, mode_count: Optional[int] = None,
          order: Optional[int] = None, settings: SolverSettings = DEFAULT_SETTINGS) -> SolutionField:
    """Spectrum for n = 0 and field assembly in one call.

    The closure order is raised up to ``settings.max_order`` until both
    classes hold ``mode_count`` eigenvalues.
    """
    wanted = settings.mode_count if mode_count is None else mode_count
    spectrum = compute_spectrum(spec, boundary.kind, 0, order, settings=settings, min_per_class=wanted)
    return assemble(spec, boundary, spectrum, mode_count, settings=settings)


def _wall_excess_decay(z: np.ndarray, excess: np.ndarray, start: int) -> float:
    """Distance from index ``start`` until the excess falls below 1/e of its value there."""
    target = abs(excess[start]) / np.e
    for k in range(start + 1, len(z)):
        if abs(excess[k]) <= target:
            # linear interpolation inside the crossing cell
            above, below = abs(excess[k - 1]), abs(excess[k])
            weight = (above - target) / (above - below) if above != below else 1.0
            return float(z[k - 1] + weight * (z[k] - z[k - 1]) - z[start])
    return float('nan')


def _refine_maximum(field: SolutionField, wall: float, z: np.ndarray, index: int) -> Tuple[float, float]:
    """Wall maximum near grid index ``index`` by a bounded scalar search."""
    lo, hi = z[max(index - 1, 0)], z[min(index + 1, len(z) - 1)]
    best = minimize_scalar(lambda s: -evaluate_field(field, wall, s), bounds=(lo, hi), method='bounded',
                           options={'xatol': 1e-10})
    if best.success and -best.fun >= evaluate_field(field, wall, z[index]):
        return float(best.x), float(-best.fun)
    return float(z[index]), float(evaluate_field(field, wall, z[index]))


def summary(field: SolutionField, points: int = 2001) -> Dict[str, float]:
    """Far-field behaviour, wall hot spot and downstream decay length."""
    spec = field.spec
    wall = float(spec.radius)
    downstream = [abs(t.eigenvalue) for t in field.downstream_terms()]
    slowest = min(downstream) if downstream else 1.0
    lo, hi = field.source.support
    z_far = field.source.center + 40.0 / slowest
    z_up = lo - 20.0

    z = np.linspace(lo - 2.0, max(hi + 10.0 / slowest, hi + 2.0), points)
    wall_values = evaluate_field(field, wall, z)
    hottest = int(np.argmax(wall_values))
    hot_z, hot_value = _refine_maximum(field, wall, z, hottest)

    result = {
        'family': field.family.value,
        'modes_downstream': len(field.downstream_terms()),
        'modes_upstream': len(field.upstream_terms()),
        'upstream_value': evaluate_field(field, wall, z_up),
        'far_field_z': z_far,
        'far_field_wall': evaluate_field(field, wall, z_far),
        'hot_spot_z': hot_z,
        'hot_spot_value': hot_value,
        'slowest_downstream_rate': slowest,
    }
    if field.family == Family.NEUMANN_NON_EQUILIBRATED:
        plateau = field.p_over_q * field.source.total
        result['plateau'] = plateau
        result['decay_length'] = _wall_excess_decay(z, wall_values - plateau, hottest)
    elif field.family == Family.NEUMANN_EQUILIBRATED:
        result['far_field_slope'] = float(field.a) * field.source.total
        result['a'] = float(field.a)
        result['b'] = float(field.b)
    else:
        result['plateau'] = 0.0
        result['decay_length'] = _wall_excess_decay(z, wall_values, hottest)
    return result
