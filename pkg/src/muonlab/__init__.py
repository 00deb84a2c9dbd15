"""Muon optimizer variants, orthogonalization, convergence bounds and batch-size experiments."""

from .exceptions import (
    ArtifactIOError,
    BoundViolation,
    ConfigError,
    DegenerateInputError,
    DimensionError,
    FitError,
    InfeasibleBatchError,
    MuonlabError,
    NumericError,
    StabilityConditionError,
)
from .matcore import frobenius_inner, frobenius_norm, nuclear_norm, singular_values, spectral_norm, svd
from .optimizer import (
    BaselineConfig,
    BaselineKind,
    BaselineState,
    LrScaling,
    MuonConfig,
    MuonState,
    Variant,
    baseline_step,
    muon_step,
    scaled_lr,
)
from .orthogonalize import (
    OrthKind,
    OrthMethod,
    newton_schulz5,
    orthogonalize,
    orthogonalize_exact,
    quintic,
    quintic_iterate,
)
from .problems import (
    FiniteSumLeastSquares,
    NoisyQuadratic,
    ProblemConfig,
    ProblemKind,
    ProblemOracle,
    TwoLayerNet,
)
from .theory import (
    BoundBreakdown,
    BoundConstants,
    ComplexityModel,
    critical_batch,
    critical_batch_muon,
    grad_norm_bound,
    momentum_tracking_bound,
    param_norm_bound,
    sfo_complexity,
    steps_needed,
    theorem_bound,
)

__version__ = "0.1.0"
