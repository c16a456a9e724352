"""Momentum-spread laboratory for an entangled Gaussian photon pair.

Computes the heralded momentum spread of one photon after its partner
passes (or is inferred to pass) a slit, under three detection schemes,
with adaptive quadrature and an independent Monte Carlo cross-check.
"""

__version__ = "0.1.0"

from .conditioning import (
    Central,
    Conditioned,
    DetectionScheme,
    Inclusive,
    SlitConfig,
    central_amplitude,
    conditioned_amplitude,
    inclusive_density,
    kappa_integrated_density,
    passage_probability,
)
from .observables import (
    DegenerateDensityError,
    SpreadResult,
    TotalVarianceReport,
    cd_small_a_formula,
    cd_wide_slit_limit,
    id_formula,
    physical_slit_estimate,
    spread,
    total_variance_report,
)
from .oracle import (
    EnvelopeViolationError,
    InsufficientAcceptanceError,
    OracleConfig,
    SampleStats,
    sample_central,
    sample_inclusive,
    zscore_report,
)
from .quadrature import (
    DEFAULT_SPEC,
    IntegralResult,
    QuadratureSpec,
    ToleranceError,
    integrate_finite,
    integrate_many,
    integrate_many_real_line,
    integrate_real_line,
)
from .state import (
    Amplitude,
    GaussianPairState,
    derived_widths,
    psi_mixed,
    psi_momentum,
    psi_position,
)

__all__ = [
    "__version__",
    "Amplitude",
    "GaussianPairState",
    "psi_momentum",
    "psi_mixed",
    "psi_position",
    "derived_widths",
    "QuadratureSpec",
    "DEFAULT_SPEC",
    "IntegralResult",
    "ToleranceError",
    "integrate_finite",
    "integrate_many",
    "integrate_real_line",
    "integrate_many_real_line",
    "SlitConfig",
    "DetectionScheme",
    "Central",
    "Inclusive",
    "Conditioned",
    "central_amplitude",
    "conditioned_amplitude",
    "inclusive_density",
    "kappa_integrated_density",
    "passage_probability",
    "SpreadResult",
    "TotalVarianceReport",
    "DegenerateDensityError",
    "spread",
    "total_variance_report",
    "cd_small_a_formula",
    "id_formula",
    "cd_wide_slit_limit",
    "physical_slit_estimate",
    "OracleConfig",
    "SampleStats",
    "InsufficientAcceptanceError",
    "EnvelopeViolationError",
    "sample_inclusive",
    "sample_central",
    "zscore_report",
]
