"""
Eigenvalues and eigenmodes from the truncated closure series.

An eigenvalue of index n is a real zero of the boundary functional
``sum_p c_p lambda^p`` (value of the closure series at the wall for Dirichlet
problems, its derivative for Neumann problems). Roots are located with the
companion matrix of the trust-radius scaled polynomial, cross-checked by a
sign-change scan on the real axis, and polished by safeguarded Newton
iterations on the full series in mpmath.

Positive eigenvalues are upstream modes (decaying toward z -> -inf), negative
ones downstream modes.
"""

import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import mpmath
import pandas as pd
from numpy.polynomial import polynomial as npoly

from graetzmodes.closure import ClosureTable, build_closure, extend_closure, tail_bound
from graetzmodes.config import DEFAULT_SETTINGS, SolverSettings
from graetzmodes.domain import BoundaryKind, DomainSpec, Geometry
from graetzmodes.errors import (
    InvalidParameter,
    TrustRadiusTooSmall,
    UnsupportedIndex,
)
from graetzmodes.logging import (
    get_logger,
    log_and_raise,
    log_computation,
    log_processing_complete,
    log_processing_start,
)
from graetzmodes.logpoly import PiecewiseLogPoly, laplacian, to_mpf
from graetzmodes.utils import write_csv

logger = get_logger(__name__)

UPSTREAM = 'upstream'
DOWNSTREAM = 'downstream'


def classify(eigenvalue) -> str:
    return UPSTREAM if eigenvalue > 0 else DOWNSTREAM


@dataclass(frozen=True)
class RootDiagnostics:
    polish_residual: float
    stability_gap: float
    polished: bool
    stable: bool


@dataclass(frozen=True)
class Spectrum:
    """Real eigenvalues of one azimuthal index, sorted ascending."""

    n: int
    boundary: BoundaryKind
    eigenvalues: Tuple[mpmath.mpf, ...]
    diagnostics: Tuple[RootDiagnostics, ...]
    order: int
    trust_radius: float
    table: ClosureTable

    @property
    def bound_is_heuristic(self) -> bool:
        return self.table.bound_is_heuristic

    def upstream(self) -> List[mpmath.mpf]:
        return [lam for lam in self.eigenvalues if lam > 0]

    def downstream(self) -> List[mpmath.mpf]:
        """Negative eigenvalues, closest to zero first."""
        return sorted((lam for lam in self.eigenvalues if lam < 0), key=abs)

    def limited(self, count: int) -> 'Spectrum':
        """Keep the ``count`` eigenvalues closest to zero in each class."""
        keep = set(self.downstream()[:count]) | set(self.upstream()[:count])
        pairs = [(lam, d) for lam, d in zip(self.eigenvalues, self.diagnostics) if lam in keep]
        return replace(self, eigenvalues=tuple(p[0] for p in pairs), diagnostics=tuple(p[1] for p in pairs))

    def frame(self) -> pd.DataFrame:
        """Columns: n, index, lambda, class, residual, stability_gap."""
        rows = []
        ranks = {}
        for lam in self.downstream():
            ranks[lam] = len(ranks) + 1
        for i, lam in enumerate(self.upstream(), start=1):
            ranks[lam] = i
        for lam, diag in zip(self.eigenvalues, self.diagnostics):
            rows.append({
                'n': self.n,
                'index': ranks[lam],
                'lambda': float(lam),
                'class': classify(lam),
                'residual': diag.polish_residual,
                'stability_gap': diag.stability_gap,
            })
        return pd.DataFrame.from_records(
            rows, columns=['n', 'index', 'lambda', 'class', 'residual', 'stability_gap'])

    def export_csv(self, path: Optional[Union[str, Path]] = None) -> Optional[Path]:
        return write_csv(self.frame(), path)


@dataclass(frozen=True)
class EigenMode:
    """Truncated eigen-profile ``sum_p t_p lambda^p`` with its diagnostics.

    Attributes:
        eigenvalue: lambda
        n: azimuthal index
        profile: piecewise log-polynomial in mpf
        residual: max |Delta_n T + lambda^2 T - lambda (v/k) T| / max |T| on the samples
        truncation_residual: the same quantity from the closed form
            lambda^(P+1) (t_(P-1) + lambda t_P - (v/k) t_P)
        transmission_jump: largest value or flux jump at an interface, relative to max |T|
        max_abs: max |T| on the samples
    """

    eigenvalue: mpmath.mpf
    n: int
    profile: PiecewiseLogPoly
    residual: float
    truncation_residual: float
    transmission_jump: float
    max_abs: float
    precision: int = 80

    @property
    def classification(self) -> str:
        return classify(self.eigenvalue)

    def value(self, x) -> mpmath.mpf:
        with mpmath.workdps(self.precision):
            return to_mpf(self.profile.evaluate(x))

    def derivative(self, x) -> mpmath.mpf:
        with mpmath.workdps(self.precision):
            return to_mpf(self.profile.evaluate_derivative(x))


def series_polynomial(table: ClosureTable, bc: BoundaryKind) -> Tuple:
    """(c_0, ..., c_P): values t_p(R) for Dirichlet, derivatives t_p'(R) for Neumann."""
    bc = BoundaryKind(bc)
    if table.boundary is not None and table.boundary != bc:
        log_and_raise("Planar closure table was built for another boundary kind", InvalidParameter,
                      logger, table=table.boundary.value, requested=bc.value)
    return table.c_value if bc == BoundaryKind.DIRICHLET else table.c_deriv


def _series(coeffs: Sequence[mpmath.mpf], lam):
    """Value and derivative of sum c_p lam^p by Horner."""
    value = 0
    slope = 0
    for c in reversed(coeffs):
        slope = slope * lam + value
        value = value * lam + c
    return value, slope


def _scale(coeffs: Sequence[mpmath.mpf], lam) -> mpmath.mpf:
    """sum |c_p| |lam|^p, the size against which the series is judged."""
    r = abs(lam)
    total = mpmath.mpf(0)
    for c in reversed(coeffs):
        total = total * r + abs(c)
    return total


def _relative_residual(coeffs, lam) -> float:
    scale = _scale(coeffs, lam)
    if scale == 0:
        return 0.0
    return float(abs(_series(coeffs, lam)[0]) / scale)


def _last_terms(coeffs: Sequence[mpmath.mpf], lam, window: int) -> mpmath.mpf:
    """Largest |c_p lam^p| among the last ``window`` computed terms."""
    r = abs(lam)
    order = len(coeffs) - 1
    first = max(order - window + 1, 0)
    return max(abs(coeffs[p]) * r ** p for p in range(first, order + 1))


def trust_radius(table: ClosureTable, bc: BoundaryKind, tolerance: Optional[float] = None,
                 settings: SolverSettings = DEFAULT_SETTINGS, upper: float = 1e4) -> float:
    """Largest |lambda| at which the truncated series can be trusted.

    With ``settings.trust_estimate == 'terms'`` the neglected tail is estimated
    from the last computed terms: twice the largest of the last
    ``max(stability_drop, 4)`` values |c_p lambda^p| must stay below
    ``tolerance * max(|f(mu)|, |mu f'(mu)|)`` for mu = +lambda and -lambda.
    That bounds the relative shift of a root at |lambda| by ``tolerance``.
    With ``'bound'`` the a-priori tail_bound is compared to sum |c_p lambda^p|.
    """
    tolerance = settings.tail_tolerance if tolerance is None else tolerance
    window = max(settings.stability_drop, 4)
    with mpmath.workdps(table.precision):
        coeffs = [to_mpf(c) for c in series_polynomial(table, bc)]

        def trusted_by_terms(lam: float) -> bool:
            lam = mpmath.mpf(lam)
            tail = 2 * _last_terms(coeffs, lam, window)
            for mu in (lam, -lam):
                value, slope = _series(coeffs, mu)
                if not tail < tolerance * max(abs(value), abs(mu * slope)):
                    return False
            return True

        def trusted_by_bound(lam: float) -> bool:
            lam = mpmath.mpf(lam)
            return tail_bound(table, lam) < tolerance * _scale(coeffs, lam)

        trusted = trusted_by_bound if settings.trust_estimate == 'bound' else trusted_by_terms
        good = 0.0
        bad = 0.25
        while trusted(bad):
            good = bad
            bad *= 1.25
            if bad > upper:
                return upper
        if good == 0.0:
            log_computation("trust radius below the first probe", radius=bad)
        for _ in range(40):
            middle = 0.5 * (good + bad)
            if trusted(middle):
                good = middle
            else:
                bad = middle
    log_computation("trust radius", n=table.n, order=table.order, radius=f"{good:.6g}",
                    estimate=settings.trust_estimate,
                    heuristic=settings.trust_estimate == 'bound' and table.bound_is_heuristic)
    return good


def _newton(coeffs, start, max_iterations: int, complex_plane: bool):
    """Safeguarded Newton iteration; returns (root, converged)."""
    z = mpmath.mpc(start) if complex_plane else mpmath.mpf(start)
    f, df = _series(coeffs, z)
    tiny = mpmath.mpf(10) ** (-(mpmath.mp.dps - 10))
    for _ in range(max_iterations):
        if f == 0:
            return z, True
        if df == 0:
            return z, False
        step = f / df
        trial = z - step
        f_trial, df_trial = _series(coeffs, trial)
        halvings = 0
        while abs(f_trial) > abs(f) and halvings < 40:
            step /= 2
            trial = z - step
            f_trial, df_trial = _series(coeffs, trial)
            halvings += 1
        z, f, df = trial, f_trial, df_trial
        if abs(step) <= tiny * max(1, abs(z)):
            return z, True
    return z, False


def _candidates(coeffs: Sequence[mpmath.mpf], radius: float, scan_points: int = 2000) -> List[complex]:
    """Companion-matrix roots of the scaled polynomial plus real sign changes.

    The scan runs in working precision: near the trust radius the series
    cancels far below double precision.
    """
    rho = mpmath.mpf(radius)
    scaled = [float(c * rho ** p) for p, c in enumerate(coeffs)]
    biggest = max((abs(d) for d in scaled), default=0.0)
    if biggest == 0.0:
        return []
    # terms below this size cannot move a root inside the unit disk
    while scaled and abs(scaled[-1]) < 1e-25 * biggest:
        scaled.pop()
    low = 0
    while low < len(scaled) and scaled[low] == 0.0:
        low += 1
    reduced = scaled[low:]
    found: List[complex] = []
    if len(reduced) > 1:
        found.extend(complex(root) * radius for root in npoly.polyroots(reduced))

    grid = [rho * (2 * mpmath.mpf(k) / scan_points - 1) for k in range(scan_points + 1)]
    values = [mpmath.sign(_series(coeffs, x)[0]) for x in grid]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fa * fb < 0:
            found.append(complex(float((a + b) / 2)))
    return found


def find_eigenvalues(
    coeffs: Sequence,
    table: ClosureTable,
    bc: BoundaryKind,
    search: Optional[Tuple[float, float]] = None,
    tol: Optional[float] = None,
    settings: SolverSettings = DEFAULT_SETTINGS,
    radius: Optional[float] = None,
) -> Spectrum:
    """Real nonzero zeros of ``sum c_p lambda^p`` inside the trust radius.

    Args:
        coeffs: series coefficients (see series_polynomial)
        table: closure table they came from
        bc: boundary kind
        search: optional (lambda_min, lambda_max) window; must lie inside the trust radius
        tol: tail tolerance for the trust radius
        settings: solver settings
        radius: precomputed trust radius

    Returns:
        Spectrum with per-root polish residual and order-stability gap
    """
    bc = BoundaryKind(bc)
    start = time.perf_counter()
    log_processing_start("eigenvalue search", n=table.n, bc=bc.value, order=table.order)
    radius = trust_radius(table, bc, tol, settings) if radius is None else radius
    if search is not None:
        lo, hi = search
        if lo > hi:
            log_and_raise("Search interval is empty", InvalidParameter, logger, lambda_min=lo, lambda_max=hi)
        if max(abs(lo), abs(hi)) >= radius:
            log_and_raise("Search interval exceeds the trust radius", TrustRadiusTooSmall, logger,
                          lambda_min=lo, lambda_max=hi, trust_radius=f"{radius:.6g}")

    with mpmath.workdps(table.precision):
        series = [to_mpf(c) for c in coeffs]
        reduced_order = max(table.order - settings.stability_drop, 0)
        truncated = series[:reduced_order + 1]
        merge_distance = mpmath.mpf(10) ** (-(table.precision // 2))

        roots: List[Tuple[mpmath.mpf, RootDiagnostics]] = []
        for guess in _candidates(series, radius):
            if abs(guess) >= 1.05 * radius:
                continue
            z, _ = _newton(series, mpmath.mpc(guess.real, guess.imag), settings.newton_max_iterations, True)
            if abs(mpmath.im(z)) > settings.imag_tolerance:
                continue
            lam = mpmath.re(z)
            if abs(lam) >= radius or abs(lam) < settings.kernel_threshold:
                continue
            lam, converged = _newton(series, lam, settings.newton_max_iterations, False)
            if abs(lam) >= radius or abs(lam) < settings.kernel_threshold:
                continue
            if any(abs(lam - other) <= merge_distance * max(1, abs(lam)) for other, _ in roots):
                continue
            residual = _relative_residual(series, lam)
            polished = converged and residual < settings.polish_tolerance
            if not polished:
                logger.warning(f"Newton polish did not converge; root kept unpolished | "
                               f"lambda={mpmath.nstr(lam, 15)} | residual={residual:.3g}")
            moved, moved_ok = _newton(truncated, lam, settings.newton_max_iterations, False)
            gap = float(abs(moved - lam) / abs(lam)) if moved_ok else float('inf')
            stable = gap < settings.stability_tolerance
            if not stable:
                logger.warning(f"Order-unstable eigenvalue | lambda={mpmath.nstr(lam, 15)} | gap={gap:.3g}")
            roots.append((lam, RootDiagnostics(residual, gap, polished, stable)))

        roots.sort(key=lambda item: item[0])
        if search is not None:
            roots = [item for item in roots if search[0] <= item[0] <= search[1]]

    spectrum = Spectrum(
        n=table.n,
        boundary=bc,
        eigenvalues=tuple(lam for lam, _ in roots),
        diagnostics=tuple(d for _, d in roots),
        order=table.order,
        trust_radius=radius,
        table=table,
    )
    log_processing_complete("eigenvalue search", time.perf_counter() - start, n=table.n,
                            upstream=len(spectrum.upstream()), downstream=len(spectrum.downstream()),
                            trust_radius=f"{radius:.6g}")
    return spectrum


def compute_spectrum(spec: DomainSpec, bc: BoundaryKind, n: int = 0, order: Optional[int] = None,
                     search: Optional[Tuple[float, float]] = None,
                     settings: SolverSettings = DEFAULT_SETTINGS,
                     min_per_class: Optional[int] = None) -> Spectrum:
    """Build the closure table and find its eigenvalues in one call.

    With ``min_per_class`` the order is raised by ``settings.order_step`` (up
    to ``settings.max_order``) while either class holds fewer roots.
    """
    table = build_closure(spec, n, order, boundary=bc, settings=settings)
    spectrum = find_eigenvalues(series_polynomial(table, bc), table, bc, search, settings=settings)
    if min_per_class is None:
        return spectrum
    while (min(len(spectrum.upstream()), len(spectrum.downstream())) < min_per_class
           and table.order < settings.max_order):
        target = min(table.order + settings.order_step, settings.max_order)
        log_computation("too few modes inside the trust radius; raising the order", n=n,
                        order=table.order, target=target, upstream=len(spectrum.upstream()),
                        downstream=len(spectrum.downstream()), wanted=min_per_class)
        table = extend_closure(table, target, settings)
        spectrum = find_eigenvalues(series_polynomial(table, bc), table, bc, search, settings=settings)
    return spectrum


def _sample_points(profile: PiecewiseLogPoly, count: int) -> List[List[mpmath.mpf]]:
    """Interior sample points per compartment (midpoints of an even split)."""
    per_piece = max(count // profile.compartment_count, 2)
    samples = []
    for j in range(profile.compartment_count):
        lo, hi = to_mpf(profile.breakpoints[j]), to_mpf(profile.breakpoints[j + 1])
        samples.append([lo + (hi - lo) * (k + mpmath.mpf(1) / 2) / per_piece for k in range(per_piece)])
    return samples


def eigenmode(table: ClosureTable, lam, bc: Optional[BoundaryKind] = None,
              radius: Optional[float] = None,
              settings: SolverSettings = DEFAULT_SETTINGS) -> EigenMode:
    """Truncated eigen-profile at lambda with ODE residual and transmission diagnostics."""
    bc = BoundaryKind(bc) if bc is not None else (table.boundary or BoundaryKind.DIRICHLET)
    with mpmath.workdps(table.precision):
        lam = to_mpf(lam)
        if lam != 0:
            radius = trust_radius(table, bc, settings=settings) if radius is None else radius
            if abs(lam) >= radius:
                log_and_raise("Eigenmode requested outside the trust radius", TrustRadiusTooSmall, logger,
                              lambda_=mpmath.nstr(lam, 12), trust_radius=f"{radius:.6g}")

        weights = [lam ** p for p in range(table.order + 1)]
        profile = PiecewiseLogPoly.combine(table.t, weights)
        if profile.is_exact:
            profile = profile.to_mpf()

        spec = table.spec
        geometry = spec.geometry
        ratios = [[to_mpf(c) for c in spec.velocity_over_conductivity(j)] for j in range(spec.compartment_count)]
        last, before = table.t[-1], table.t[-2] if table.order >= 1 else None

        max_abs = mpmath.mpf(0)
        max_residual = mpmath.mpf(0)
        max_truncation = mpmath.mpf(0)
        for j, points in enumerate(_sample_points(profile, settings.residual_samples)):
            piece = profile.pieces[j]
            operator = laplacian(piece, table.n, geometry) + piece.scale(lam ** 2) \
                - piece.mul_poly(ratios[j]).scale(lam)
            closed = last.pieces[j].scale(lam) - last.pieces[j].mul_poly(ratios[j])
            if before is not None:
                closed = closed + before.pieces[j]
            closed = closed.scale(lam ** (table.order + 1))
            for x in points:
                max_abs = max(max_abs, abs(to_mpf(piece.evaluate(x))))
                max_residual = max(max_residual, abs(to_mpf(operator.evaluate(x))))
                max_truncation = max(max_truncation, abs(to_mpf(closed.evaluate(x))))

        conductivities = [to_mpf(layer.conductivity) for layer in spec.layers]
        max_jump = mpmath.mpf(0)
        for interface in range(1, profile.compartment_count):
            (v_in, d_in), (v_out, d_out) = profile.one_sided(interface)
            max_jump = max(max_jump, abs(to_mpf(v_out) - to_mpf(v_in)),
                           abs(conductivities[interface] * to_mpf(d_out)
                               - conductivities[interface - 1] * to_mpf(d_in)))

        scale = max_abs if max_abs > 0 else mpmath.mpf(1)
        mode = EigenMode(
            eigenvalue=lam,
            n=table.n,
            profile=profile,
            residual=float(max_residual / scale),
            truncation_residual=float(max_truncation / scale),
            transmission_jump=float(max_jump / scale),
            max_abs=float(max_abs),
            precision=table.precision,
        )
    log_computation("eigenmode", n=table.n, lambda_=mpmath.nstr(lam, 12), residual=f"{mode.residual:.3g}",
                    jump=f"{mode.transmission_jump:.3g}")
    return mode


def full_spectrum(spec: DomainSpec, bc: BoundaryKind, n_max: int, count_per_n: Optional[int] = None,
                  order: Optional[int] = None,
                  settings: SolverSettings = DEFAULT_SETTINGS) -> List[Tuple[int, Spectrum]]:
    """Spectra for n = 0..n_max; see merge_spectra for the global sorted list."""
    if n_max < 0:
        log_and_raise("n_max must be non-negative", InvalidParameter, logger, n_max=n_max)
    if spec.geometry == Geometry.PLANAR and n_max > 0:
        log_and_raise("Planar spectra only support n = 0", UnsupportedIndex, logger, n_max=n_max)
    spectra = []
    for n in range(n_max + 1):
        spectrum = compute_spectrum(spec, bc, n, order, settings=settings, min_per_class=count_per_n)
        if count_per_n is not None:
            spectrum = spectrum.limited(count_per_n)
        spectra.append((n, spectrum))
    return spectra


def merge_spectra(spectra: Sequence[Tuple[int, Spectrum]]) -> List[Tuple[mpmath.mpf, int]]:
    """All eigenvalues as (lambda, n), sorted by lambda then n."""
    merged = [(lam, n) for n, spectrum in spectra for lam in spectrum.eigenvalues]
    return sorted(merged, key=lambda item: (item[0], item[1]))


def spectra_frame(spectra: Sequence[Tuple[int, Spectrum]]) -> pd.DataFrame:
    frames = [spectrum.frame() for _, spectrum in spectra]
    if not frames:
        return pd.DataFrame(columns=['n', 'index', 'lambda', 'class', 'residual', 'stability_gap'])
    return pd.concat(frames, ignore_index=True)


def mode_profile_table(modes: Sequence[EigenMode], grid: Sequence[float], coordinate: str = 'r') -> pd.DataFrame:
    """Mode values on a transverse grid: one column per mode."""
    data = {coordinate: [float(x) for x in grid]}
    for mode in modes:
        column = [float(mode.value(float(x))) for x in grid]
        data[f"n={mode.n} lambda={float(mode.eigenvalue):.12g}"] = column
    return pd.DataFrame(data)
