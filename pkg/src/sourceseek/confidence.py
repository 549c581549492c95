"""Poisson confidence bounds.

All logarithms are natural.  Functions accept scalars or numpy arrays for the
count / mean argument; ``delta`` may also be an array broadcastable against it.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError


class Interval(NamedTuple):
    lcb: float
    ucb: float

    def contains(self, value: float) -> bool:
        return self.lcb <= value <= self.ucb


class EnvelopeInterval(NamedTuple):
    lcb_bar: float
    ucb_bar: float


def _log_inv(delta):
    d = np.asarray(delta, dtype=float)
    if np.any(~(d > 0)) or np.any(~(d < 1)):
        raise InvalidArgumentError(f"delta must lie in (0, 1), got {delta}")
    return np.log(1.0 / d)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _counts(n):
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise InvalidArgumentError("counts must be nonnegative")
    return n


def u_plus(n, delta):
    """Upper bounding function: 2 L + N + sqrt(2 N L), L = log(1/delta)."""
    L = _log_inv(delta)
    n = _counts(n)
    return _out(2.0 * L + n + np.sqrt(2.0 * n * L))


def u_minus(n, delta):
    L = _log_inv(delta)
    n = _counts(n)
    return _out(np.maximum(0.0, n - np.sqrt(2.0 * n * L)))


def ubar_plus(mu, delta):
    """Deterministic envelope above ``u_plus`` for N ~ Poisson(mu)."""
    L = _log_inv(delta)
    mu = _counts(mu)
    return _out(mu + (14.0 / 3.0) * L + 2.0 * np.sqrt(2.0 * mu * L))


def ubar_minus(mu, delta):
    L = _log_inv(delta)
    mu = _counts(mu)
    return _out(np.maximum(0.0, mu - 2.0 * np.sqrt(2.0 * mu * L)))


def round_delta(delta_total: float, n_cells: int, round_i: int) -> float:
    """Per-interval confidence for round ``round_i`` (1-indexed)."""
    if round_i < 1:
        raise InvalidArgumentError("round index must be >= 1")
    if not 0 < delta_total < 1:
        raise InvalidArgumentError("delta_total must lie in (0, 1)")
    return delta_total / (4.0 * n_cells * round_i ** 2)


def pointwise_interval(n, tau, delta):
    """Rate interval [U-(N)/tau, U+(N)/tau].  Vectorised when ``n`` is an array."""
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(~(tau_arr > 0)):
        raise InvalidArgumentError("dwell time must be positive")
    lo = np.asarray(u_minus(n, delta)) / tau_arr
    hi = np.asarray(u_plus(n, delta)) / tau_arr
    if lo.ndim == 0:
        return Interval(float(lo), float(hi))
    return lo, hi


def envelope_interval(mu, tau, delta) -> EnvelopeInterval:
    """Deterministic [LCB-bar, UCB-bar] for a cell of rate ``mu`` dwelled on for ``tau``."""
    if not tau > 0:
        raise InvalidArgumentError("dwell time must be positive")
    return EnvelopeInterval(ubar_minus(tau * mu, delta) / tau, ubar_plus(tau * mu, delta) / tau)
