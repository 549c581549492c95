"""Brute-force reference implementations for tests.

Nothing here imports the production numerics; each function is a direct,
slow transcription meant to be obviously right.
"""
from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np


def dense_solve(rows, y_tilde, ridge: float = 0.0):
    """Normal equations formed and inverted explicitly.  Returns (mu_hat, sigma_diag)."""
    A = np.asarray(rows, dtype=float)
    y = np.asarray(y_tilde, dtype=float)
    if A.ndim != 2 or A.shape[0] != y.size:
        raise ValueError("rows and y_tilde have inconsistent shapes")
    n = A.shape[1]
    G = np.zeros((n, n))
    rhs = np.zeros(n)
    for r, v in zip(A, y):
        for a in range(n):
            rhs[a] += r[a] * v
            for b in range(n):
                G[a, b] += r[a] * r[b]
    G += ridge * np.eye(n)
    if np.linalg.matrix_rank(G) < n:
        raise np.linalg.LinAlgError("normal equations are singular")
    inv = np.linalg.inv(G)
    return inv @ rhs, np.diag(inv).copy()


def _kth_desc(values, j):
    """j-th largest (1-based) by full sort; j <= 0 -> +inf, j > len -> -inf."""
    if j <= 0:
        return math.inf
    ordered = sorted(values, reverse=True)
    if j > len(ordered):
        return -math.inf
    return ordered[j - 1]


def naive_elim(intervals: dict, k: int, s_top):
    """One elimination step over ``intervals`` (cell -> (lcb, ucb)) for candidates = its keys.

    Returns (new_s_top, new_s_i) as sets.
    """
    s_top = set(s_top)
    cand = list(intervals)
    if not cand:
        return s_top, set()
    ucbs = [intervals[x][1] for x in cand]
    lcbs = [intervals[x][0] for x in cand]
    t_top = _kth_desc(ucbs, k - len(s_top) + 1)
    new_top = s_top | {x for x in cand if intervals[x][0] > t_top}
    t_bot = _kth_desc(lcbs, k - len(new_top))
    new_s = {x for x in cand if x not in new_top and intervals[x][1] >= t_bot}
    return new_top, new_s


def brute_objective(sigma_diag, centers, positions, c: float = 1.0) -> float:
    """Triple loop over look-ahead samples, cells and coordinates."""
    total = 0.0
    for p in positions:
        for j, x in enumerate(centers):
            d2 = 0.0
            for a in range(3):
                d2 += (x[a] - p[a]) ** 2
            total += sigma_diag[j] * c / d2
    return total


def bezier_point(cp, s: float):
    p0, p1, p2 = (np.asarray(v, dtype=float) for v in cp)
    return (1 - s) ** 2 * p0 + 2 * (1 - s) * s * p1 + s ** 2 * p2


def _binom_sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def mc_coverage(mu: float, delta: float, n_draws: int = 100_000, seed: int = 0,
                bounds: Optional[dict[str, Callable]] = None) -> dict:
    """Empirical failure rates of the Poisson bounding functions.

    ``bounds`` maps ``"u_plus"``, ``"u_minus"``, ``"ubar_plus"``, ``"ubar_minus"``
    to the functions under test; when omitted the closed forms are written out
    here.  Returns rates of mu > U_+(N), mu < U_-(N) and of the envelope nesting
    failing (U_+ > Ubar_+ or U_- < Ubar_-), each with its binomial sigma.
    """
    if n_draws < 10_000:
        raise ValueError("n_draws must be at least 10^4")
    L = math.log(1.0 / delta)
    if bounds is None:
        bounds = {
            "u_plus": lambda n, d: 2 * L + n + np.sqrt(2 * n * L),
            "u_minus": lambda n, d: np.maximum(0.0, n - np.sqrt(2 * n * L)),
            "ubar_plus": lambda m, d: m + 14.0 / 3.0 * L + 2 * math.sqrt(2 * m * L),
            "ubar_minus": lambda m, d: max(0.0, m - 2 * math.sqrt(2 * m * L)),
        }
    rng = np.random.default_rng(seed)
    n = rng.poisson(mu, size=n_draws).astype(float)
    up = np.asarray(bounds["u_plus"](n, delta))
    lo = np.asarray(bounds["u_minus"](n, delta))
    ubp = float(bounds["ubar_plus"](mu, delta))
    ubm = float(bounds["ubar_minus"](mu, delta))
    upper_fail = float(np.mean(mu > up))
    lower_fail = float(np.mean(mu < lo))
    nest_fail = float(np.mean((up > ubp) | (lo < ubm)))
    return {
        "upper": upper_fail,
        "lower": lower_fail,
        "nesting": nest_fail,
        "upper_sigma": _binom_sigma(delta, n_draws),
        "lower_sigma": _binom_sigma(delta, n_draws),
        "nesting_sigma": _binom_sigma(min(2 * delta, 1.0), n_draws),
        "n_draws": n_draws,
    }
