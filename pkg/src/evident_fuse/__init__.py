"""Dirichlet opinions, conflict-resolving multi-view fusion and evidential training."""

__version__ = "0.1.0"

from .errors import (
    DimensionError,
    InfiniteStrengthError,
    TotalConflictError,
    TrainingError,
    ValidationError,
)
from .opinion import (
    ClassProbabilities,
    DirichletOpinion,
    Evidence,
    evidence_from_opinion,
    expected_probabilities,
    opinion_from_evidence,
)
from .fusion import (
    CrfWeights,
    FusionOutcome,
    combine_all,
    conflict_mass,
    crf_weights,
    ds_combine_pair,
    ider_combine_all,
    ider_combine_pair,
)
from .special import digamma, log_gamma, trigamma
from .loss import (
    AnnealSchedule,
    LossBreakdown,
    adjusted_ce,
    kl_to_uniform,
    loss_gradient,
    masked_alpha,
    total_loss,
)
