"""Combination rules for Dirichlet opinions.

Two rules are provided.  ``ider_*`` is the impartial rule: the reduced
Dempster products plus a conflict resolution factor (CRF) equal to the
per-component average of both inputs, renormalized to unit mass.  ``ds_*`` is
reduced Dempster's rule, kept as the baseline it is compared against.

Every array function broadcasts over leading batch dimensions: beliefs have
shape ``(..., K)`` and uncertainties ``(...)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, TotalConflictError, ValidationError
from .opinion import DirichletOpinion, Evidence, evidence_from_opinion

RULES = ("ider", "ds")


@dataclass(frozen=True)
class CrfWeights:
    belief_weights: np.ndarray
    uncertainty_weight: float


@dataclass(frozen=True)
class FusionOutcome:
    """Result of a combination.

    ``recovered_evidence`` is None when the fused opinion is fully certain
    (u = 0), since such an opinion has no finite evidence.  ``normalizer`` is
    the total mass before renormalization; for a chained fold it is the value
    from the final pairwise step.
    """

    opinion: DirichletOpinion
    recovered_evidence: Optional[Evidence]
    conflict: float
    normalizer: float
    rule: str = "ider"

    def to_json(self) -> dict:
        return {
            "beliefs": self.opinion.beliefs.tolist(),
            "uncertainty": self.opinion.uncertainty,
            "evidence": None if self.recovered_evidence is None
            else self.recovered_evidence.values.tolist(),
            "conflict": self.conflict,
            "normalizer": self.normalizer,
            "rule": self.rule,
        }


def _check_pair(o1: DirichletOpinion, o2: DirichletOpinion) -> None:
    if o1.class_count != o2.class_count:
        raise DimensionError(
            f"opinions have different class counts: {o1.class_count} vs {o2.class_count}"
        )


# ---------------------------------------------------------------------------
# array kernels

def conflict_array(b1, b2):
    """Sum over i != j of b1[i] * b2[j]."""
    b1 = np.asarray(b1, dtype=np.float64)
    b2 = np.asarray(b2, dtype=np.float64)
    c = b1.sum(axis=-1) * b2.sum(axis=-1) - np.sum(b1 * b2, axis=-1)
    return np.clip(c, 0.0, 1.0)


def _dempster_terms(b1, u1, b2, u2):
    # (b1*u2 + b2*u1) is grouped so that swapping the operands is bitwise exact
    u1 = np.asarray(u1, dtype=np.float64)[..., None]
    u2 = np.asarray(u2, dtype=np.float64)[..., None]
    return b1 * b2 + (b1 * u2 + b2 * u1), (u1 * u2)[..., 0]


def ider_raw_array(b1, u1, b2, u2):
    """Unnormalized impartial masses ``(b_hat, u_hat)``."""
    b1 = np.asarray(b1, dtype=np.float64)
    b2 = np.asarray(b2, dtype=np.float64)
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    b_hat, u_hat = _dempster_terms(b1, u1, b2, u2)
    return b_hat + 0.5 * (b1 + b2), u_hat + 0.5 * (u1 + u2)


def ider_pair_array(b1, u1, b2, u2):
    """Normalized impartial combination; returns ``(beliefs, u, conflict, normalizer)``."""
    b_hat, u_hat = ider_raw_array(b1, u1, b2, u2)
    norm = b_hat.sum(axis=-1) + u_hat
    return b_hat / norm[..., None], u_hat / norm, conflict_array(b1, b2), norm


def ds_pair_array(b1, u1, b2, u2):
    """Reduced Dempster's rule.  Rows in total conflict come back as NaN.

    The normalizer is accumulated as the surviving mass rather than 1 - C,
    which avoids cancellation when C is close to 1.
    """
    b1 = np.asarray(b1, dtype=np.float64)
    b2 = np.asarray(b2, dtype=np.float64)
    b_hat, u_hat = _dempster_terms(b1, u1, b2, u2)
    norm = b_hat.sum(axis=-1) + u_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        beliefs = b_hat / norm[..., None]
        unc = u_hat / norm
    bad = norm <= 0
    beliefs = np.where(bad[..., None], np.nan, beliefs)
    unc = np.where(bad, np.nan, unc)
    return beliefs, unc, conflict_array(b1, b2), norm


def fold_array(beliefs: Sequence[np.ndarray], uncertainties: Sequence[np.ndarray], rule: str = "ider"):
    """Left-to-right fold of a pairwise rule over views.

    Returns ``(beliefs, u, max_conflict, last_normalizer)``.
    """
    if rule not in RULES:
        raise ValidationError(f"unknown fusion rule {rule!r}; expected one of {RULES}")
    if len(beliefs) == 0 or len(beliefs) != len(uncertainties):
        raise ValidationError("need at least one view, with matching beliefs and uncertainties")
    pair = ider_pair_array if rule == "ider" else ds_pair_array
    b = np.asarray(beliefs[0], dtype=np.float64)
    u = np.asarray(uncertainties[0], dtype=np.float64)
    conflict = np.zeros(u.shape)
    norm = np.ones(u.shape)
    for b_next, u_next in zip(beliefs[1:], uncertainties[1:]):
        b, u, c, norm = pair(b, u, b_next, u_next)
        conflict = np.maximum(conflict, c)
    return b, u, conflict, norm


# ---------------------------------------------------------------------------
# opinion-level API

def crf_weights(o1: DirichletOpinion, o2: DirichletOpinion) -> CrfWeights:
    _check_pair(o1, o2)
    return CrfWeights(
        0.5 * (o1.beliefs + o2.beliefs), 0.5 * (o1.uncertainty + o2.uncertainty)
    )


def conflict_mass(o1: DirichletOpinion, o2: DirichletOpinion) -> float:
    _check_pair(o1, o2)
    return float(conflict_array(o1.beliefs, o2.beliefs))


def _outcome(beliefs, unc, conflict, norm, rule) -> FusionOutcome:
    # renormalized masses can stray from 1 by a few ulp; DirichletOpinion checks 1e-9
    opinion = DirichletOpinion(np.clip(beliefs, 0.0, 1.0), float(np.clip(unc, 0.0, 1.0)))
    evidence = evidence_from_opinion(opinion) if opinion.uncertainty > 0 else None
    return FusionOutcome(opinion, evidence, float(conflict), float(norm), rule)


def ider_combine_pair(o1: DirichletOpinion, o2: DirichletOpinion) -> FusionOutcome:
    """Impartial combination of two opinions.

    >>> a = DirichletOpinion([0.99, 0.0, 0.01], 0.0)
    >>> b = DirichletOpinion([0.0, 0.99, 0.01], 0.0)
    >>> out = ider_combine_pair(a, b)
    >>> [round(float(x), 5) for x in out.opinion.beliefs], round(out.normalizer, 6)
    ([0.49495, 0.49495, 0.0101], 1.0001)
    """
    _check_pair(o1, o2)
    return _outcome(
        *ider_pair_array(o1.beliefs, o1.uncertainty, o2.beliefs, o2.uncertainty), "ider"
    )


def ds_combine_pair(o1: DirichletOpinion, o2: DirichletOpinion) -> FusionOutcome:
    """Reduced Dempster combination; raises TotalConflictError when C = 1."""
    _check_pair(o1, o2)
    beliefs, unc, conflict, norm = ds_pair_array(
        o1.beliefs, o1.uncertainty, o2.beliefs, o2.uncertainty
    )
    if not norm > 0:
        raise TotalConflictError(
            "Dempster's rule undefined: the opinions are in total conflict (C = 1), "
            "the degenerate case of Zadeh's example"
        )
    return _outcome(beliefs, unc, conflict, norm, "ds")


def ider_combine_all(opinions: Sequence[DirichletOpinion]) -> FusionOutcome:
    """Fold ``ider_combine_pair`` over views in the given order.

    The rule is commutative but not associative, so view order is part of the
    result.  ``conflict`` is the largest pairwise-step conflict seen.
    """
    return combine_all(opinions, "ider")


def combine_all(opinions: Sequence[DirichletOpinion], rule: str = "ider") -> FusionOutcome:
    opinions = list(opinions)
    if not opinions:
        raise ValidationError("cannot combine an empty list of opinions")
    if rule not in RULES:
        raise ValidationError(f"unknown fusion rule {rule!r}; expected one of {RULES}")
    step = ider_combine_pair if rule == "ider" else ds_combine_pair
    acc = opinions[0]
    conflict, norm = 0.0, 1.0
    for nxt in opinions[1:]:
        out = step(acc, nxt)
        acc = out.opinion
        conflict = max(conflict, out.conflict)
        norm = out.normalizer
    evidence = evidence_from_opinion(acc) if acc.uncertainty > 0 else None
    return FusionOutcome(acc, evidence, conflict, norm, rule)
