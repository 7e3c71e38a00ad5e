"""Evidence, Dirichlet opinions and the maps between them.

Under a uniform Dirichlet prior, evidence ``e`` induces ``alpha = e + 1`` and
strength ``S = sum(alpha)``.  The opinion carries belief ``b_k = e_k / S`` per
class and uncertainty ``u = K / S``; the K + 1 masses sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import InfiniteStrengthError, ValidationError

TOL = 1e-9


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if arr.size < 2:
        raise ValidationError(f"{name} needs at least 2 classes, got {arr.size}")
    arr.setflags(write=False)
    return arr


def _check_keys(obj: Mapping[str, Any], required: set[str], kind: str) -> None:
    if not isinstance(obj, Mapping):
        raise ValidationError(f"{kind} JSON must be an object, got {type(obj).__name__}")
    keys = set(obj)
    missing = required - keys
    unknown = keys - required
    if missing:
        raise ValidationError(f"{kind} JSON missing field(s): {sorted(missing)}")
    if unknown:
        raise ValidationError(f"{kind} JSON has unknown field(s): {sorted(unknown)}")


@dataclass(frozen=True, eq=False)
class Evidence:
    """Non-negative per-class evidence, the raw output of an evidential head."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_vector(self.values, "evidence")
        for k, v in enumerate(arr):
            if not np.isfinite(v):
                raise ValidationError(f"evidence[{k}] is not finite: {v}")
            if v < 0:
                raise ValidationError(f"evidence[{k}] is negative: {v}")
        object.__setattr__(self, "values", arr)

    @property
    def class_count(self) -> int:
        return self.values.size

    @property
    def alpha(self) -> np.ndarray:
        return self.values + 1.0

    def __eq__(self, other):
        return isinstance(other, Evidence) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"Evidence({self.values.tolist()})"

    def to_json(self) -> dict:
        return {"evidence": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "Evidence":
        _check_keys(obj, {"evidence"}, "evidence")
        return cls(obj["evidence"])


@dataclass(frozen=True, eq=False)
class DirichletOpinion:
    """Belief masses over K classes plus an uncertainty mass; all sum to one."""

    beliefs: np.ndarray
    uncertainty: float

    def __post_init__(self):
        b = _as_vector(self.beliefs, "beliefs")
        u = float(self.uncertainty)
        if not (np.all(np.isfinite(b)) and np.isfinite(u)):
            raise ValidationError("opinion masses must be finite")
        for k, v in enumerate(b):
            if v < 0 or v > 1:
                raise ValidationError(f"beliefs[{k}] = {v} outside [0, 1]")
        if u < 0 or u > 1:
            raise ValidationError(f"uncertainty = {u} outside [0, 1]")
        total = b.sum() + u
        if abs(total - 1.0) > TOL:
            raise ValidationError(f"beliefs + uncertainty = {total!r}, expected 1")
        object.__setattr__(self, "beliefs", b)
        object.__setattr__(self, "uncertainty", u)

    @property
    def class_count(self) -> int:
        return self.beliefs.size

    @classmethod
    def vacuous(cls, class_count: int) -> "DirichletOpinion":
        """Total ignorance: no belief anywhere, u = 1."""
        return cls(np.zeros(class_count), 1.0)

    def __eq__(self, other):
        return (
            isinstance(other, DirichletOpinion)
            and np.array_equal(self.beliefs, other.beliefs)
            and self.uncertainty == other.uncertainty
        )

    def __repr__(self):
        return f"DirichletOpinion(beliefs={self.beliefs.tolist()}, uncertainty={self.uncertainty})"

    def allclose(self, other: "DirichletOpinion", atol: float = TOL) -> bool:
        return (
            self.class_count == other.class_count
            and np.allclose(self.beliefs, other.beliefs, rtol=0, atol=atol)
            and abs(self.uncertainty - other.uncertainty) <= atol
        )

    def to_json(self) -> dict:
        return {"beliefs": self.beliefs.tolist(), "uncertainty": self.uncertainty}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "DirichletOpinion":
        _check_keys(obj, {"beliefs", "uncertainty"}, "opinion")
        return cls(obj["beliefs"], obj["uncertainty"])


@dataclass(frozen=True, eq=False)
class ClassProbabilities:
    """Expected class probabilities ``alpha_k / S`` of a Dirichlet."""

    probs: np.ndarray

    def __post_init__(self):
        p = _as_vector(self.probs, "probs")
        if np.any(p < 0) or abs(p.sum() - 1.0) > TOL:
            raise ValidationError("probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "probs", p)

    def __repr__(self):
        return f"ClassProbabilities({self.probs.tolist()})"


def _coerce_evidence(e) -> Evidence:
    return e if isinstance(e, Evidence) else Evidence(e)


def opinion_from_evidence(e: Evidence) -> DirichletOpinion:
    """Map evidence to its subjective-logic opinion.

    >>> opinion_from_evidence(Evidence([4, 0, 0, 0]))
    DirichletOpinion(beliefs=[0.5, 0.0, 0.0, 0.0], uncertainty=0.5)
    """
    e = _coerce_evidence(e)
    strength = e.alpha.sum()
    return DirichletOpinion(e.values / strength, e.class_count / strength)


def evidence_from_opinion(o: DirichletOpinion) -> Evidence:
    """Invert the evidence-to-opinion map: ``S = K / u`` and ``e_k = b_k * S``.

    Exact for every opinion with ``u > 0``; beliefs are non-negative, so the
    recovered evidence is too.  Raises InfiniteStrengthError for ``u = 0``.
    """
    if o.uncertainty <= 0:
        raise InfiniteStrengthError(
            "infinite Dirichlet strength: an opinion with u = 0 has no finite evidence"
        )
    return Evidence(o.beliefs * (o.class_count / o.uncertainty))


def expected_probabilities(e: Evidence) -> ClassProbabilities:
    alpha = _coerce_evidence(e).alpha
    return ClassProbabilities(alpha / alpha.sum())


# Array forms used on batches of evidence, shape (..., K).

def opinions_from_evidence_array(evidence: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(beliefs, uncertainty)`` for a batch of evidence rows."""
    evidence = np.asarray(evidence, dtype=np.float64)
    strength = evidence.sum(axis=-1) + evidence.shape[-1]
    return evidence / strength[..., None], evidence.shape[-1] / strength


def evidence_from_opinion_array(beliefs: np.ndarray, uncertainty: np.ndarray) -> np.ndarray:
    """Batched inverse map; rows with ``u = 0`` come back as ``inf``."""
    beliefs = np.asarray(beliefs, dtype=np.float64)
    uncertainty = np.asarray(uncertainty, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = beliefs * (beliefs.shape[-1] / uncertainty)[..., None]
    out[uncertainty <= 0] = np.inf
    return out
