"""Typical subspaces, high-probability compression and fidelity bounds for
ergodic quantum information sources, at desk scale."""

from .linalg import (
    Spectrum,
    density_spectrum,
    hermitian_eig,
    kron,
    matrix_sqrt_psd,
    partial_trace,
    trace_norm,
)
from .sources import (
    ClassSpectrum,
    ConsistencyReport,
    IIDSource,
    RotatedMarkovSource,
    SourceModel,
    block_state,
    check_consistency,
    class_spectrum,
    entropy_rate_exact,
    stationary_distribution,
    word_probabilities,
)
from .typicality import (
    HighProbSubspace,
    TypicalSubspace,
    high_prob_rate_sweep,
    high_prob_subspace,
    ky_fan_mass,
    relative_entropy,
    typical_projector,
    von_neumann_entropy,
)
from .channels import (
    CompressionScheme,
    KrausChannel,
    apply,
    build_compression,
    build_decompression,
    compose,
    identity_channel,
    make_scheme,
    roundtrip_entanglement_fidelity,
    unitary_channel,
)
from .fidelity import (
    DecompositionFidelityBounds,
    Ensemble,
    EnsembleItem,
    check_inequalities,
    decomposition_fidelity_bounds,
    eigen_ensemble,
    ensemble_fidelity,
    entanglement_fidelity_kraus,
    entanglement_fidelity_purification,
    fidelity,
    trace_distance,
)
from .experiments import (
    ExperimentConfig,
    ReportRow,
    build_source,
    load_config,
    run_aep,
    run_compress,
    run_subrate,
)
from .validation import SuiteResult, reference_sources, run_all

__version__ = "0.1.0"
