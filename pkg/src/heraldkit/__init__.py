"""heraldkit: simulation and analysis of heralded single-photon sources.

Covers the full chain from a below-threshold cavity source through homodyne
trace synthesis, matched-filter quadrature extraction, maximum-likelihood
state reconstruction, and loss correction, with budget and filter arithmetic
for the surrounding apparatus.
"""

__version__ = "0.1.0"

from .fock import (
    DensityMatrix,
    QuadratureSample,
    WignerGrid,
    apply_loss,
    fidelity_with_fock,
    fock_wavefunction,
    invert_loss,
    quadrature_pdf,
    wigner,
    wigner_grid,
)
from .opo import (
    ConditioningPath,
    EfficiencyBudget,
    FilterSpec,
    OpoParams,
    cascade_rejection,
    escape_efficiency,
    expected_vacuum,
    fp_transmission,
    heralded_state,
    heralding_stats,
    total_detection_efficiency,
    two_photon_fraction,
)
from .traces import (
    NoiseModel,
    QuadratureSampler,
    TemporalMode,
    TimeTrace,
    TraceSet,
    build_temporal_mode,
    run_acquisition,
    sample_quadrature,
    synthesize_trace,
)
from .extraction import (
    QuadratureData,
    calibrate_shot_noise,
    extract_all,
    extract_quadrature,
    scan_gamma,
)
from .tomography import (
    ReconstructionResult,
    TomographySettings,
    bootstrap_errors,
    loglikelihood,
    maxlik_reconstruct,
    reconstruct_diagonal,
)

__all__ = [
    "__version__",
    "DensityMatrix",
    "QuadratureSample",
    "WignerGrid",
    "apply_loss",
    "fidelity_with_fock",
    "fock_wavefunction",
    "invert_loss",
    "quadrature_pdf",
    "wigner",
    "wigner_grid",
    "ConditioningPath",
    "EfficiencyBudget",
    "FilterSpec",
    "OpoParams",
    "cascade_rejection",
    "escape_efficiency",
    "expected_vacuum",
    "fp_transmission",
    "heralded_state",
    "heralding_stats",
    "total_detection_efficiency",
    "two_photon_fraction",
    "NoiseModel",
    "QuadratureSampler",
    "TemporalMode",
    "TimeTrace",
    "TraceSet",
    "build_temporal_mode",
    "run_acquisition",
    "sample_quadrature",
    "synthesize_trace",
    "QuadratureData",
    "calibrate_shot_noise",
    "extract_all",
    "extract_quadrature",
    "scan_gamma",
    "ReconstructionResult",
    "TomographySettings",
    "bootstrap_errors",
    "loglikelihood",
    "maxlik_reconstruct",
    "reconstruct_diagonal",
]
