"""Digamma, trigamma and log-gamma for positive real arguments.

Each function shifts its argument up to ``SHIFT`` with the recurrence
``f(x) = f(x + 1) - correction(x)`` and then evaluates the asymptotic
expansion.  All three accept scalars or arrays and return float64.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError

SHIFT = 6.0
_MAX_STEPS = int(SHIFT) + 1
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _prepare(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValidationError(f"{name} is defined here only for finite x > 0")
    return arr


def _finish(x, out):
    return float(out) if np.ndim(x) == 0 else out


def digamma(x):
    """Logarithmic derivative of the gamma function.

    Absolute error below 1e-12 for x >= 1e-3.

    >>> round(digamma(1.0), 10)
    -0.5772156649
    """
    z = _prepare(x, "digamma")
    acc = np.zeros_like(z)
    for _ in range(_MAX_STEPS):
        low = z < SHIFT
        acc -= np.where(low, 1.0 / z, 0.0)
        z = np.where(low, z + 1.0, z)
    r = 1.0 / (z * z)
    series = r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (
        1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r / 12))))))
    return _finish(x, acc + np.log(z) - 0.5 / z - series)


def trigamma(x):
    """Derivative of digamma."""
    z = _prepare(x, "trigamma")
    acc = np.zeros_like(z)
    for _ in range(_MAX_STEPS):
        low = z < SHIFT
        acc += np.where(low, 1.0 / (z * z), 0.0)
        z = np.where(low, z + 1.0, z)
    inv = 1.0 / z
    r = inv * inv
    series = inv + 0.5 * r + inv * r * (1.0 / 6 - r * (1.0 / 30 - r * (1.0 / 42 - r * (
        1.0 / 30 - r * (5.0 / 66 - r * (691.0 / 2730 - r * 7.0 / 6))))))
    return _finish(x, acc + series)


def log_gamma(x):
    """Natural log of the gamma function, via Stirling's series.

    >>> round(log_gamma(0.5), 10)
    0.5723649429
    """
    z = _prepare(x, "log_gamma")
    prod = np.ones_like(z)
    for _ in range(_MAX_STEPS):
        low = z < SHIFT
        prod = np.where(low, prod * z, prod)
        z = np.where(low, z + 1.0, z)
    inv = 1.0 / z
    r = inv * inv
    series = inv * (1.0 / 12 - r * (1.0 / 360 - r * (1.0 / 1260 - r * (
        1.0 / 1680 - r * (1.0 / 1188 - r * (691.0 / 360360 - r / 156))))))
    out = (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series - np.log(prod)
    return _finish(x, out)
