"""
Numerical settings for graetzmodes.

Every tolerance and default order used by the solver is collected in a single
frozen dataclass so that a run is fully described by (configuration file,
settings). Configuration files may override any field under ``settings:``.
"""

from dataclasses import dataclass, fields, replace
from typing import Any, Dict

from graetzmodes.errors import ConfigError


NORMALIZATIONS = ('energy', 'none')
TRUST_ESTIMATES = ('terms', 'bound')


@dataclass(frozen=True)
class SolverSettings:
    """Solver defaults.

    Attributes:
        order: truncation order P of the closure series
        precision: working precision in decimal digits for the mpmath paths
        tail_tolerance: relative tail size accepted inside the trust radius
        imag_tolerance: largest imaginary part of a root accepted as real
        kernel_threshold: roots with |lambda| below this belong to the kernel
        stability_tolerance: relative root movement tolerated when the order drops
        stability_drop: order drop used for the stability check
        polish_tolerance: relative boundary-functional size accepted after polishing
        newton_max_iterations: cap on safeguarded Newton steps per root
        residual_samples: sample points per eigenmode for the ODE residual
        quadrature_nodes: Gauss-Legendre nodes per compartment for mode integrals
        normalization: eigenmode normalization convention ('energy' or 'none')
        mode_count: default number of modes per class in field assembly
        trust_estimate: how the trust radius is judged, from the last computed
            series terms ('terms') or from the a-priori tail bound ('bound')
        max_order: largest order the solver may raise P to while collecting modes
        order_step: increment of P per retry when a mode class is short
    """

    order: int = 60
    precision: int = 80
    tail_tolerance: float = 1e-12
    imag_tolerance: float = 1e-9
    kernel_threshold: float = 1e-8
    stability_tolerance: float = 1e-9
    stability_drop: int = 4
    polish_tolerance: float = 1e-10
    newton_max_iterations: int = 60
    residual_samples: int = 50
    quadrature_nodes: int = 64
    normalization: str = 'energy'
    mode_count: int = 8
    trust_estimate: str = 'terms'
    max_order: int = 200
    order_step: int = 40

    def __post_init__(self):
        if self.order < 0:
            raise ConfigError(f"order must be non-negative, got {self.order}")
        if self.precision < 20:
            raise ConfigError(
                f"precision must be at least 20 digits, got {self.precision}")
        if self.stability_drop < 1 or self.stability_drop > max(self.order, 1):
            raise ConfigError(
                f"stability_drop must lie in [1, order], got {self.stability_drop}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(
                f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}")
        if self.mode_count < 1:
            raise ConfigError(f"mode_count must be at least 1, got {self.mode_count}")
        if self.trust_estimate not in TRUST_ESTIMATES:
            raise ConfigError(
                f"trust_estimate must be one of {TRUST_ESTIMATES}, got {self.trust_estimate!r}")
        if self.order_step < 1:
            raise ConfigError(f"order_step must be at least 1, got {self.order_step}")

    def with_overrides(self, **overrides: Any) -> 'SolverSettings':
        """Return a copy with the given fields replaced; None values are ignored."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"Unknown solver settings: {', '.join(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def as_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_SETTINGS = SolverSettings()
