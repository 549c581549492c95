"""Rescaled least-squares rate estimation in information-filter form.

Each count y_j is modelled as approximately Gaussian with variance estimated
by the plug-in ``y_j + b``.  The state accumulates the information matrix
``lambda = sum row row^T`` and ``beta = sum row * y_tilde``; solving gives the
rate estimate and the diagonal of the posterior covariance.

Two row weightings are supported:

``"plugin"``
    row = h / (y + b), y_tilde = y / (y + b).
``"inverse_variance"``
    row = h / sqrt(y + b), y_tilde = y / sqrt(y + b); this is the weighting
    under which ``inv(lambda)`` is the covariance of the estimate.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional

import numpy as np
from scipy import linalg

from .confidence import Interval
from .errors import InvalidArgumentError, SingularSystemError

WEIGHTINGS = ("plugin", "inverse_variance")


def _scale(y, b, weighting):
    if weighting == "plugin":
        return np.asarray(y, dtype=float) + b
    if weighting == "inverse_variance":
        return np.sqrt(np.asarray(y, dtype=float) + b)
    raise InvalidArgumentError(f"unknown weighting {weighting!r}")


def rescaled_row(h_col, y_j: float, b: float = 1.0, weighting: str = "plugin"):
    """Rescale one measurement's sensitivity column and count.

    ``h_col`` should already include the exposure time, so that
    ``h_col @ mu`` is the expected count.
    """
    if not b > 0:
        raise InvalidArgumentError("bias b must be positive")
    if y_j < 0:
        raise InvalidArgumentError("counts must be nonnegative")
    s = float(_scale(y_j, b, weighting))
    return np.asarray(h_col, dtype=float) / s, float(y_j) / s


def dwell_row(h_col, counts, b: float = 1.0, weighting: str = "plugin"):
    """Collapse repeated measurements from one pose into a single equivalent row.

    Applying :func:`rescaled_row` to every count in ``counts`` (all sharing
    ``h_col``) and updating once per count gives exactly the same
    ``(lambda, beta)`` as one update with the returned row.
    """
    if not b > 0:
        raise InvalidArgumentError("bias b must be positive")
    counts = np.asarray(counts, dtype=float)
    s = _scale(counts, b, weighting)
    w = float(np.sum(1.0 / s ** 2))
    root = math.sqrt(w)
    return np.asarray(h_col, dtype=float) * root, float(np.sum(counts / s ** 2)) / root


@dataclass
class PosteriorSummary:
    mu_hat: np.ndarray
    sigma_diag: np.ndarray

    @property
    def rates(self) -> np.ndarray:
        """Estimates clamped at zero, for reporting."""
        return np.maximum(self.mu_hat, 0.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["cell_index", "mu_hat", "sigma"])
            for i, (m, s) in enumerate(zip(self.rates, np.sqrt(self.sigma_diag))):
                w.writerow([i, repr(float(m)), repr(float(s))])


@dataclass
class EstimatorState:
    n_cells: int
    bias_b: float = 1.0
    lam: np.ndarray = field(default=None, repr=False)
    beta: np.ndarray = field(default=None, repr=False)
    n_measurements: int = 0

    def __post_init__(self):
        if not self.bias_b > 0:
            raise InvalidArgumentError("bias b must be positive")
        if self.lam is None:
            self.lam = np.zeros((self.n_cells, self.n_cells))
        if self.beta is None:
            self.beta = np.zeros(self.n_cells)

    def copy(self) -> "EstimatorState":
        return EstimatorState(self.n_cells, self.bias_b, self.lam.copy(), self.beta.copy(), self.n_measurements)


def update(state: EstimatorState, row, y_tilde: float) -> EstimatorState:
    """Rank-one information update, in place; returns ``state`` for chaining."""
    row = np.asarray(row, dtype=float)
    if row.shape != (state.n_cells,):
        raise InvalidArgumentError(f"row has shape {row.shape}, expected ({state.n_cells},)")
    state.lam += np.outer(row, row)
    state.beta += row * y_tilde
    state.n_measurements += 1
    return state


def update_many(state: EstimatorState, rows, y_tilde, n_measurements: Optional[int] = None) -> EstimatorState:
    """Batched form of :func:`update` for rows stacked as (m, n_cells)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    y_tilde = np.asarray(y_tilde, dtype=float).reshape(-1)
    if rows.shape[1] != state.n_cells or rows.shape[0] != y_tilde.size:
        raise InvalidArgumentError("dimension mismatch in batched update")
    state.lam += rows.T @ rows
    state.beta += rows.T @ y_tilde
    state.n_measurements += rows.shape[0] if n_measurements is None else n_measurements
    return state


def default_ridge(state: EstimatorState) -> float:
    return 1e-9 * float(np.trace(state.lam)) / state.n_cells


def solve(state: EstimatorState, ridge: Optional[float] = None) -> PosteriorSummary:
    """Cholesky solve of (lambda + ridge I) mu = beta and the diagonal of its inverse."""
    if ridge is None:
        ridge = default_ridge(state)
    if ridge < 0:
        raise InvalidArgumentError("ridge must be nonnegative")
    A = state.lam + ridge * np.eye(state.n_cells)
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SingularSystemError("information matrix is singular or not positive definite") from exc
    mu_hat = linalg.cho_solve(factor, state.beta)
    inv = linalg.cho_solve(factor, np.eye(state.n_cells))
    sigma = np.diag(inv).copy()
    if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
        raise SingularSystemError("posterior variances are not positive")
    return PosteriorSummary(mu_hat, sigma)


def gaussian_interval(mu_hat_k: float, sigma_kk: float, z: float) -> Interval:
    if not sigma_kk > 0:
        raise InvalidArgumentError("variance must be positive")
    half = z * math.sqrt(sigma_kk)
    return Interval(max(0.0, mu_hat_k - half), max(0.0, mu_hat_k + half))


def gaussian_intervals(post: PosteriorSummary, z: float):
    """Vectorised :func:`gaussian_interval` over all cells; returns (lcb, ucb)."""
    half = z * np.sqrt(post.sigma_diag)
    return np.maximum(0.0, post.mu_hat - half), np.maximum(0.0, post.mu_hat + half)


def alpha_of_delta(delta_i: float) -> float:
    """Two-sided standard-normal quantile: Phi^{-1}(1 - delta/2)."""
    if not 0 < delta_i < 1:
        raise InvalidArgumentError("delta must lie in (0, 1)")
    return NormalDist().inv_cdf(1.0 - delta_i / 2.0)
