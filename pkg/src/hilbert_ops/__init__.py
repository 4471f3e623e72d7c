"""Learning as operator estimation in Hilbert spaces.

Sampled function spaces and bases, kernel ridge regression, spectral
multipliers with learnable thresholds, wavelet scattering, operator and
Koopman (EDMD) regression, relation operators for reasoning over
embeddings, and l1 sparse recovery.
"""

from .errors import (
    ConformabilityError,
    DegeneracyError,
    DivergenceError,
    HilbertOpsError,
    NumericalError,
    PreconditionError,
)
from .function_space import (
    Basis,
    BasisKind,
    CoefficientVector,
    SampledFunction,
    analyze,
    inner_product,
    make_basis,
    norm,
    project_onto_span,
    synthesize,
)
from .kernels import KernelDescriptor, KernelModel, fit_krr, predict
from .operator_learning import Dictionary, KoopmanModel, OperatorMatrix, SnapshotPairs, fit_edmd, fit_operator_ridge, forecast, koopman_eigs
from .reasoning import EmbeddingStore, ReasoningTriple, RelationOperator, analogy, compose, fit_relation, fit_relation_family
from .scattering import FilterBank, ScatteringCoefficients, build_filter_bank, scatter
from .sparse_recovery import RecoveryResult, SensingSystem, fista, ista
from .spectral import MultiplierBank, Spectrum, ThresholdParams, fit_threshold, forward_transform, inverse_transform

__version__ = "0.1.0"
