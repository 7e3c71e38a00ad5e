"""Evidential training objective.

The per-sample loss is the expected cross-entropy under ``Dir(alpha)`` plus
an annealed KL divergence from ``Dir(alpha_tilde)`` to the uniform Dirichlet,
where ``alpha_tilde`` resets the true class's parameter to 1 so only
misleading evidence is penalised.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError
from .special import digamma, log_gamma, trigamma


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear ramp ``lambda(t) = lambda_max * min(1, t / ramp_epochs)``."""

    lambda_max: float = 1.0
    ramp_epochs: int = 10

    def __post_init__(self):
        if not self.lambda_max > 0:
            raise ValidationError("lambda_max must be > 0")
        if int(self.ramp_epochs) != self.ramp_epochs or self.ramp_epochs < 1:
            raise ValidationError("ramp_epochs must be an integer >= 1")

    def __call__(self, epoch: float) -> float:
        if epoch < 0:
            raise ValidationError("epoch must be >= 0")
        return self.lambda_max * min(1.0, epoch / self.ramp_epochs)


@dataclass(frozen=True)
class LossBreakdown:
    adjusted_ce: float
    kl: float
    lam: float
    total: float

    def to_json(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out


def _check(alpha, label):
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim != 1 or a.size < 2:
        raise ValidationError("alpha must be a vector of at least 2 classes")
    if not np.all(np.isfinite(a)) or np.any(a < 1):
        bad = int(np.argmax(~np.isfinite(a) | (a < 1)))
        raise ValidationError(f"alpha[{bad}] = {a[bad]} violates alpha >= 1")
    if label is not None and not (0 <= int(label) < a.size and int(label) == label):
        raise ValidationError(f"label {label!r} out of range [0, {a.size})")
    return a


def masked_alpha(alpha, label: int) -> np.ndarray:
    """Reset the true class's Dirichlet parameter to 1."""
    a = _check(alpha, label).copy()
    a[int(label)] = 1.0
    return a


def adjusted_ce(alpha, label: int) -> float:
    """Expected cross-entropy ``psi(S) - psi(alpha_label)``."""
    a = _check(alpha, label)
    return digamma(a.sum()) - digamma(a[int(label)])


def kl_to_uniform(alpha_tilde) -> float:
    """KL(Dir(alpha_tilde) || Dir(1, ..., 1))."""
    a = _check(alpha_tilde, None)
    return float(kl_to_uniform_batch(a[None, :])[0])


def total_loss(alpha, label: int, schedule: AnnealSchedule, epoch: float) -> LossBreakdown:
    ce = adjusted_ce(alpha, label)
    kl = kl_to_uniform(masked_alpha(alpha, label))
    lam = schedule(epoch)
    return LossBreakdown(ce, kl, lam, ce + lam * kl)


def loss_gradient(alpha, label: int, lam: float) -> np.ndarray:
    """Analytic d(total)/d(alpha) for a single sample."""
    a = _check(alpha, label)
    return loss_gradient_batch(a[None, :], np.array([int(label)]), lam)[0]


# Batched forms: alpha has shape (N, K), labels shape (N,).

def adjusted_ce_batch(alpha: np.ndarray, labels: np.ndarray) -> np.ndarray:
    rows = np.arange(alpha.shape[0])
    return digamma(alpha.sum(axis=1)) - digamma(alpha[rows, labels])


def masked_alpha_batch(alpha: np.ndarray, labels: np.ndarray) -> np.ndarray:
    out = alpha.copy()
    out[np.arange(alpha.shape[0]), labels] = 1.0
    return out


def kl_to_uniform_batch(alpha_tilde: np.ndarray) -> np.ndarray:
    k = alpha_tilde.shape[1]
    s = alpha_tilde.sum(axis=1)
    # entries equal to 1 contribute exactly nothing; skipping them keeps
    # KL(Dir(1) || Dir(1)) at 0 instead of summed rounding of logGamma(1)
    lg = np.where(alpha_tilde == 1.0, 0.0, log_gamma(alpha_tilde))
    kl = (
        log_gamma(s)
        - log_gamma(float(k))
        - lg.sum(axis=1)
        + ((alpha_tilde - 1.0) * (digamma(alpha_tilde) - digamma(s)[:, None])).sum(axis=1)
    )
    return np.maximum(kl, 0.0)


def total_loss_batch(alpha, labels, lam):
    """Per-sample ``(adjusted_ce, kl, total)`` arrays."""
    ce = adjusted_ce_batch(alpha, labels)
    kl = kl_to_uniform_batch(masked_alpha_batch(alpha, labels))
    return ce, kl, ce + lam * kl


def loss_gradient_batch(alpha: np.ndarray, labels: np.ndarray, lam: float) -> np.ndarray:
    """Per-sample gradient of ``adjusted_ce + lam * kl`` with respect to alpha.

    The true class's parameter is masked out of the KL term, so its KL
    gradient is zero.
    """
    rows = np.arange(alpha.shape[0])
    k = alpha.shape[1]
    grad = np.repeat(trigamma(alpha.sum(axis=1))[:, None], k, axis=1)
    grad[rows, labels] -= trigamma(alpha[rows, labels])
    if lam:
        at = masked_alpha_batch(alpha, labels)
        s = at.sum(axis=1)
        g_kl = (at - 1.0) * trigamma(at) - ((s - k) * trigamma(s))[:, None]
        g_kl[rows, labels] = 0.0
        grad += lam * g_kl
    return grad
