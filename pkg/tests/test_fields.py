# tests/test_fields.py

import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from graetzmodes.config import SolverSettings
from graetzmodes.domain import BoundaryKind, BoundarySpec, SourceSpec, double_pass, heated_pipe, pure_diffusion
from graetzmodes.errors import (
    DivergentConvolution,
    FamilyMismatch,
    InvalidParameter,
    NotEquilibrated,
    OutOfDomain,
    TrustRadiusTooSmall,
)
from graetzmodes.fields import (
    Family,
    adiabatic_kernel,
    assemble,
    axial_derivative,
    damped_convolution,
    default_stations,
    evaluate_field,
    exchange_constants,
    family_for,
    heat_balance,
    heat_balance_error,
    mode_amplitudes,
    profile,
    solve,
    source_convolutions,
    summary,
)
from graetzmodes.oracle import bessel_j
from graetzmodes.spectrum import compute_spectrum

SOURCE = SourceSpec.raised_cosine(1, Fraction(1, 2), Fraction(1, 2))


def _g(xi):
    return 1.0 - math.cos(2 * math.pi * (xi - 0.5)) if 0.0 <= xi <= 1.0 else 0.0


def _dg(xi):
    return 2 * math.pi * math.sin(2 * math.pi * (xi - 0.5)) if 0.0 <= xi <= 1.0 else 0.0


def _quad(func, lo, hi):
    value, _ = quad(func, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
    return value


# convolutions


@pytest.mark.parametrize("lam", [-1.3, -0.4, 0.7, 2.5])
def test_damped_convolution_matches_quadrature(lam):
    for z in (-0.5, 0.3, 0.8, 1.7):
        # the integrand lives on the window [0, 1]
        if lam > 0:
            lo, hi, sign = max(z, 0.0), 1.0, 1.0
        else:
            lo, hi, sign = 0.0, min(z, 1.0), -1.0
        expected = 0.0
        if lo < hi:
            expected = sign * _quad(lambda xi: _g(xi) * math.exp(lam * (z - xi)), lo, hi)
        assert float(damped_convolution(SOURCE, lam, False, z)) == pytest.approx(expected, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("lam", [-1.3, 0.7])
@pytest.mark.parametrize("derivative", [False, True])
def test_damped_convolution_ode(lam, derivative):
    # the grid avoids the window edges, where C has a kink in its third derivative
    z = np.linspace(-1.0, 2.0, 600)
    step = 1e-6
    forcing = SOURCE.derivative(z) if derivative else SOURCE.value(z)
    numeric = (damped_convolution(SOURCE, lam, derivative, z + step)
               - damped_convolution(SOURCE, lam, derivative, z - step)) / (2 * step)
    expected = lam * damped_convolution(SOURCE, lam, derivative, z) - forcing
    assert np.allclose(numeric, expected, atol=1e-5)


def test_downstream_convolution_is_constant_past_the_window():
    lam = -1.3
    c = source_convolutions(SOURCE, lam, Family.NEUMANN_NON_EQUILIBRATED, [2.0, 5.0], mode_class='downstream')
    expected = -_quad(lambda xi: _g(xi) * math.exp(-lam * xi), 0.0, 1.0)
    assert c == pytest.approx([expected, expected], rel=1e-10)


def test_upstream_convolution_decays_far_upstream():
    value = damped_convolution(SOURCE, 1.3, False, -20.0)
    assert abs(float(value)) < 1e-10
    assert float(damped_convolution(SOURCE, 1.3, False, 1.5)) == 0.0


def test_dirichlet_convolution_uses_the_source_derivative():
    lam = -0.9
    z = 0.6
    expected = -_quad(lambda xi: _dg(xi) * math.exp(lam * (z - xi)), 0.0, z)
    c = source_convolutions(SOURCE, lam, Family.DIRICHLET_LATERAL, z)
    assert float(c) * math.exp(lam * z) == pytest.approx(expected, rel=1e-9)


def test_convolution_class_must_match_sign():
    with pytest.raises(DivergentConvolution):
        source_convolutions(SOURCE, 1.0, Family.NEUMANN_NON_EQUILIBRATED, 0.0, mode_class='downstream')
    with pytest.raises(DivergentConvolution):
        source_convolutions(SOURCE, 0.0, Family.NEUMANN_NON_EQUILIBRATED, 0.0)


def test_zero_source_convolution():
    assert np.all(damped_convolution(SourceSpec.zero(), -1.0, False, np.linspace(-1, 1, 5)) == 0.0)


# kernel and exchange constants


def test_double_pass_kernel(double_pass_problem):
    spec, _ = double_pass_problem
    kernel = adiabatic_kernel(spec)
    for x in (Fraction(1, 4), Fraction(1, 2), Fraction(1)):
        expected = -x + x ** 3 - x ** 4 / 2
        assert kernel.profile.evaluate(x) == expected
        assert kernel.profile.evaluate(-x) == -expected
    assert kernel.profile.evaluate(Fraction(2)) == Fraction(-1, 2)
    assert kernel.profile.evaluate(Fraction(3, 2)) == Fraction(-1, 2)
    assert kernel.gauge == 'zero-mean'


def test_double_pass_exchange_constants(double_pass_problem):
    spec, _ = double_pass_problem
    assert exchange_constants(spec, adiabatic_kernel(spec)) == (Fraction(-35, 83), 0)


@pytest.mark.parametrize("pe, x0, radius", [(2, '1/2', 1), (3, '3/4', 2), ('1/2', 1, 3)])
def test_exchange_constants_closed_form(pe, x0, radius):
    spec, _ = double_pass(pe, x0=x0, radius=radius)
    pe, x0, radius = Fraction(pe), Fraction(x0), Fraction(radius)
    a, b = exchange_constants(spec, adiabatic_kernel(spec))
    assert a == Fraction(-35) / (13 * pe ** 2 * x0 ** 3 + 35 * radius)
    assert b == 0


def test_kernel_of_pure_conduction_is_constant():
    slab, _ = pure_diffusion(radius=1, geometry='planar')
    kernel = adiabatic_kernel(slab)
    assert kernel.profile.pieces[0].is_zero
    assert exchange_constants(slab, kernel) == (-1, 0)

    disk, _ = pure_diffusion(radius=1)
    assert exchange_constants(disk, adiabatic_kernel(disk)) == (-2, 0)


def test_kernel_needs_zero_net_flux(heated_pipe_problem):
    spec, _ = heated_pipe_problem
    with pytest.raises(NotEquilibrated):
        adiabatic_kernel(spec)


def test_family_selection(heated_pipe_problem, double_pass_problem):
    assert family_for(heated_pipe_problem[0], BoundaryKind.NEUMANN) == Family.NEUMANN_NON_EQUILIBRATED
    assert family_for(double_pass_problem[0], BoundaryKind.NEUMANN) == Family.NEUMANN_EQUILIBRATED
    assert family_for(heated_pipe_problem[0], BoundaryKind.DIRICHLET) == Family.DIRICHLET_LATERAL


# amplitudes on the pure-diffusion disk


@pytest.fixture(scope="module")
def disk():
    spec, _ = pure_diffusion(radius=1)
    return spec


@pytest.fixture(scope="module")
def dirichlet_spectrum(disk):
    return compute_spectrum(disk, BoundaryKind.DIRICHLET, 0, order=80)


@pytest.fixture(scope="module")
def dirichlet_field(disk, dirichlet_spectrum):
    boundary = BoundarySpec(BoundaryKind.DIRICHLET, SOURCE)
    return assemble(disk, boundary, dirichlet_spectrum, mode_count=3)


def test_neumann_disk_amplitude_and_norm(disk):
    spectrum = compute_spectrum(disk, BoundaryKind.NEUMANN, 0, order=80)
    raw = mode_amplitudes(spectrum, mode_count=1, settings=SolverSettings(normalization='none'))
    energy = mode_amplitudes(spectrum, mode_count=1)
    for term, scaled in zip(raw, energy):
        mu = abs(term.eigenvalue)
        j0 = bessel_j(0, mu)
        assert term.norm_squared == pytest.approx(2 * math.pi * j0 ** 2, rel=1e-10)
        assert term.amplitude == pytest.approx(1 / (term.eigenvalue * j0), rel=1e-10)
        assert scaled.weight == pytest.approx(term.weight, rel=1e-12)
        # alpha lambda = 2 pi R T(R) for the normalized profile
        assert scaled.amplitude * scaled.eigenvalue == pytest.approx(2 * math.pi * scaled.value(1), rel=1e-10)


def test_dirichlet_disk_amplitudes(dirichlet_spectrum):
    terms = mode_amplitudes(dirichlet_spectrum, mode_count=2, settings=SolverSettings(normalization='none'))
    assert [t.classification for t in terms] == ['downstream', 'downstream', 'upstream', 'upstream']
    for term in terms:
        mu = abs(term.eigenvalue)
        assert abs(term.value(1)) < 1e-12
        assert term.amplitude == pytest.approx(1 / (mu * bessel_j(1, mu)), rel=1e-10)


def test_dirichlet_field_matches_the_wall_source(dirichlet_field):
    assert dirichlet_field.family == Family.DIRICHLET_LATERAL
    z = np.linspace(-1.0, 2.0, 61)
    assert np.allclose(evaluate_field(dirichlet_field, 1.0, z), SOURCE.value(z), atol=1e-10)


def test_axial_derivative_matches_finite_differences(dirichlet_field):
    z = np.linspace(-1.03, 2.47, 36)
    step = 1e-6
    numeric = (evaluate_field(dirichlet_field, 0.5, z + step) - evaluate_field(dirichlet_field, 0.5, z - step)) \
        / (2 * step)
    assert np.allclose(axial_derivative(dirichlet_field, 0.5, z), numeric, atol=1e-5)


def test_dirichlet_field_profile_and_summary(disk, dirichlet_field):
    assert default_stations(disk) == [0.0, 0.5, 1.0]
    frame = profile(dirichlet_field, z_grid=np.linspace(-2, 3, 11))
    assert list(frame.columns) == ['z', 'T(r=0)', 'T(r=0.5)', 'T(r=1)']
    assert frame.shape == (11, 4)

    result = summary(dirichlet_field)
    assert result['family'] == 'dirichlet_lateral'
    assert result['modes_downstream'] == 3 and result['modes_upstream'] == 3
    assert result['plateau'] == 0.0
    assert abs(result['far_field_wall']) < 1e-10
    assert result['hot_spot_value'] == pytest.approx(2.0, rel=1e-3)


def test_dirichlet_field_rejects_heat_balance(dirichlet_field):
    with pytest.raises(InvalidParameter):
        heat_balance(dirichlet_field)


def test_out_of_domain(dirichlet_field):
    with pytest.raises(OutOfDomain):
        evaluate_field(dirichlet_field, 1.5, 0.0)


def test_zero_source_gives_zero_field(disk, dirichlet_spectrum):
    boundary = BoundarySpec(BoundaryKind.DIRICHLET, SourceSpec.zero())
    field = assemble(disk, boundary, dirichlet_spectrum, mode_count=2)
    assert np.all(evaluate_field(field, 0.5, [-1.0, 0.0, 1.0]) == 0.0)


def test_assembly_guards(disk, dirichlet_spectrum):
    boundary = BoundarySpec(BoundaryKind.DIRICHLET, SOURCE)
    with pytest.raises(FamilyMismatch):
        assemble(disk, boundary, dirichlet_spectrum, family=Family.NEUMANN_EQUILIBRATED)
    with pytest.raises(FamilyMismatch):
        assemble(disk, BoundarySpec(BoundaryKind.NEUMANN, SOURCE), dirichlet_spectrum)
    with pytest.raises(InvalidParameter):
        assemble(disk, boundary, dirichlet_spectrum, mode_count=0)
    with pytest.raises(InvalidParameter):
        assemble(disk, boundary, replace(dirichlet_spectrum, n=1))


def test_assembly_needs_both_mode_classes(disk, dirichlet_spectrum):
    boundary = BoundarySpec(BoundaryKind.DIRICHLET, SOURCE)
    pairs = [(lam, d) for lam, d in zip(dirichlet_spectrum.eigenvalues, dirichlet_spectrum.diagnostics) if lam < 0]
    downstream_only = replace(dirichlet_spectrum, eigenvalues=tuple(p[0] for p in pairs),
                              diagnostics=tuple(p[1] for p in pairs))
    with pytest.raises(TrustRadiusTooSmall):
        assemble(disk, boundary, downstream_only, mode_count=2)


def test_solve_raises_the_order_until_modes_fit(disk):
    boundary = BoundarySpec(BoundaryKind.DIRICHLET, SOURCE)
    settings = SolverSettings(order=12, order_step=20, max_order=100)
    field = solve(disk, boundary, mode_count=4, settings=settings)
    assert len(field.downstream_terms()) == 4
    assert len(field.upstream_terms()) == 4


def test_solve_fails_when_the_order_cap_leaves_a_class_empty(disk):
    boundary = BoundarySpec(BoundaryKind.DIRICHLET, SOURCE)
    settings = SolverSettings(order=12, max_order=12)
    with pytest.raises(TrustRadiusTooSmall):
        solve(disk, boundary, settings=settings)


# full problems


@pytest.fixture(scope="module")
def heated_pipe_field():
    spec, boundary = heated_pipe(1)
    return solve(spec, boundary, mode_count=8, order=160)


@pytest.mark.slow
def test_heated_pipe_far_field(heated_pipe_field):
    field = heated_pipe_field
    assert field.family == Family.NEUMANN_NON_EQUILIBRATED
    assert field.p_over_q == pytest.approx(8.0)
    slowest = min(abs(t.eigenvalue) for t in field.downstream_terms())
    z_far = 0.5 + 40.0 / slowest
    for r in (0.0, 0.5, 1.0, 1.5, 2.0):
        assert evaluate_field(field, r, z_far) == pytest.approx(8.0, rel=1e-4)
        assert abs(evaluate_field(field, r, -20.0)) < 1e-6


@pytest.mark.slow
def test_heated_pipe_amplitudes(heated_pipe_field):
    for term in heated_pipe_field.terms:
        assert term.amplitude * term.eigenvalue == pytest.approx(4 * math.pi * term.value(2.0), rel=1e-10)
        # zero wall flux: int v T = lambda int k T
        assert term.v_integral == pytest.approx(term.eigenvalue * term.k_integral, rel=1e-8, abs=1e-10)


@pytest.mark.slow
def test_heated_pipe_balance_outside_the_window(heated_pipe_field):
    balance = heat_balance(heated_pipe_field, z_grid=[-4.0, -3.0, -2.0, 3.0, 4.0, 6.0])
    assert list(balance.columns) == ['z', 'flux', 'flux_derivative', 'wall_source', 'defect']
    assert np.abs(balance['defect']).max() < 1e-7
    assert balance['flux'].iloc[-1] == pytest.approx(4 * math.pi, rel=1e-8)


@pytest.mark.slow
def test_heated_pipe_summary(heated_pipe_field):
    result = summary(heated_pipe_field)
    assert result['plateau'] == pytest.approx(8.0)
    assert result['far_field_wall'] == pytest.approx(8.0, rel=1e-4)
    assert abs(result["upstream_value"]) < 1e-6
    assert result["hot_spot_value"] >= result["far_field_wall"] - 1e-9


@pytest.mark.slow
def test_double_pass_far_field_slope():
    spec, boundary = double_pass(1)
    field = solve(spec, boundary, mode_count=3, order=120)
    assert field.family == Family.NEUMANN_EQUILIBRATED
    assert field.a == Fraction(-35, 83)
    slowest = min(abs(t.eigenvalue) for t in field.downstream_terms())
    z1 = 0.5 + 40.0 / slowest
    z2 = z1 + 10.0
    for x in (-2.0, -0.5, 0.0, 0.5, 2.0):
        slope = (evaluate_field(field, x, z2) - evaluate_field(field, x, z1)) / (z2 - z1)
        assert slope == pytest.approx(-35 / 83, rel=1e-8)
    balance = heat_balance(field, z_grid=[z1, z1 + 1.0, z2])
    assert np.abs(balance['defect']).max() < 1e-7


@pytest.mark.slow
def test_heated_pipe_balance_inside_the_window(heated_pipe_field):
    balance = heat_balance(heated_pipe_field)
    assert balance['z'].min() < 0.0 and balance['z'].max() > 1.0
    assert heat_balance_error(balance) < 1e-4


@pytest.mark.slow
def test_double_pass_balance_inside_the_window():
    spec, boundary = double_pass(1)
    field = solve(spec, boundary)
    assert heat_balance_error(heat_balance(field)) < 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("problem", [heated_pipe, double_pass])
def test_default_settings_deliver_the_requested_modes(problem):
    spec, boundary = problem(1)
    field = solve(spec, boundary)
    assert len(field.downstream_terms()) == SolverSettings().mode_count
    assert len(field.upstream_terms()) == SolverSettings().mode_count


@pytest.mark.slow
def test_heated_pipe_hot_spot_and_decay_length_over_peclet():
    decay_lengths = []
    for pe in (0.1, 1, 10, 100):
        spec, boundary = heated_pipe(pe)
        result = summary(solve(spec, boundary))
        assert abs(result['hot_spot_z'] - 0.5) < 0.1
        assert result['plateau'] == pytest.approx(8.0 / pe)
        decay_lengths.append(result['decay_length'])
    assert all(np.isfinite(decay_lengths))
    assert decay_lengths == sorted(decay_lengths)
    assert len(set(decay_lengths)) == len(decay_lengths)
