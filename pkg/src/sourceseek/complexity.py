"""Divergences, complexity terms and predicted round bounds."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .env import EnvironmentMap
from .errors import InvalidArgumentError, NonIdentifiableError


def divergence(mu1: float, mu2: float) -> float:
    """d(mu1, mu2) = (mu2 - mu1)^2 / mu2 for 0 <= mu1 <= mu2."""
    if not mu2 > 0:
        raise InvalidArgumentError("mu2 must be positive")
    if mu1 < 0 or mu1 > mu2:
        raise InvalidArgumentError(f"need 0 <= mu1 <= mu2, got mu1={mu1}, mu2={mu2}")
    return (mu2 - mu1) ** 2 / mu2


def divergence_eps(mu1: float, mu2: float, eps: float) -> float:
    if not eps > 0:
        raise InvalidArgumentError("eps must be positive")
    divergence(mu1, mu2)  # argument checks
    return max(mu2 - mu1, eps) ** 2 / mu2


def kl_poisson(mu1: float, mu2: float) -> float:
    """KL(Poisson(mu1) || Poisson(mu2)); mu1 = 0 gives the limit mu2."""
    if not mu2 > 0:
        raise InvalidArgumentError("mu2 must be positive")
    if mu1 < 0:
        raise InvalidArgumentError("mu1 must be nonnegative")
    if mu1 == 0:
        return float(mu2)
    return mu1 * math.log(mu1 / mu2) + mu2 - mu1


def log_plus(x: float) -> float:
    return max(1.0, math.log(x)) if x > 0 else 1.0


def inversion_T(u: float, delta: float) -> float:
    """T(u, delta) = 1 + log_+(log_+(u) / delta) / u."""
    if not u > 0:
        raise InvalidArgumentError("u must be positive")
    if not 0 < delta <= 1:
        raise InvalidArgumentError("delta must lie in (0, 1]")
    return 1.0 + log_plus(log_plus(u) / delta) / u


def predicted_ratio(mu_bar: float, mu_star: float) -> float:
    """Predicted sample-time ratio adaptive/uniform: 1 - mu_bar / mu_star."""
    if not 0 <= mu_bar < mu_star:
        raise InvalidArgumentError("need 0 <= mu_bar < mu_star")
    return 1.0 - mu_bar / mu_star


def fit_speedup(mu_bar: float, mu_star: float, scale: float = 0.7) -> float:
    """Empirical reference curve for the uniform/adaptive runtime ratio."""
    if not 0 <= mu_bar < mu_star:
        raise InvalidArgumentError("need 0 <= mu_bar < mu_star")
    return scale * mu_star / (mu_star - mu_bar)


def _cell_divergences(env: EnvironmentMap, eps: Optional[float]) -> np.ndarray:
    """Per-cell gap divergence: sources against mu^(k+1), the rest against mu^(k)."""
    mu = env.mu
    top = set(int(i) for i in np.argsort(-mu, kind="stable")[: env.k])
    mk, mk1 = env.mu_k, env.mu_k1
    out = np.empty(mu.size)
    for x, m in enumerate(mu):
        if x in top:
            a, b = mk1, m
        else:
            a, b = m, mk
        if eps is None:
            out[x] = divergence(a, b)
        else:
            out[x] = divergence_eps(min(a, b), b, eps)
    return out


@dataclass
class ComplexityReport:
    c_adapt: float
    c_unif: float
    h_adapt_k: float
    h_unif_k: float
    predicted_ratio: float
    per_cell_i_fin_bound: dict = field(default_factory=dict)
    epsilon: Optional[float] = None
    constant_C: float = 8.0
    lower_bound: Optional[float] = None     # c log(1/delta) C_adapt with c = 1, up to a universal constant

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_cell_i_fin_bound"] = {str(k): v for k, v in self.per_cell_i_fin_bound.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def complexity_terms(env: EnvironmentMap, tau_0: float = 1.0, k: Optional[int] = None,
                     eps: Optional[float] = None, delta_total: float = 0.05, C: float = 8.0) -> ComplexityReport:
    if k is not None and k != env.k:
        env = EnvironmentMap(env.grid, env.mu, k, env.seed)
    if eps is None and not env.identifiable:
        raise NonIdentifiableError("complexity terms need mu^(k) > mu^(k+1)")
    n = env.n_cells
    mu = env.mu
    base = n * tau_0

    # k = 1 terms, measured against the best rate
    xs = env.x_star
    mstar = float(mu[xs])
    inv = []
    for x in range(n):
        if x == xs:
            continue
        d = divergence(mu[x], mstar) if eps is None else divergence_eps(mu[x], mstar, eps)
        inv.append(1.0 / d if d > 0 else math.inf)
    inv = np.array(inv) if inv else np.zeros(0)
    c_adapt = base + float(inv.sum())
    c_unif = base + n * (float(inv.max()) if inv.size else 0.0)

    dk = _cell_divergences(env, eps)
    with np.errstate(divide="ignore"):
        inv_k = 1.0 / dk
    h_adapt = base + float(inv_k.sum())
    if eps is None:
        h_unif = base + n / divergence(env.mu_k1, env.mu_k)
    else:
        h_unif = base + n * float(inv_k.max())

    mu_bar = float(np.max(np.delete(mu, xs))) if n > 1 else 0.0
    ratio = predicted_ratio(mu_bar, mstar) if mu_bar < mstar else 0.0
    bounds = i_fin_bound(env, delta_total, C=C, eps=eps, tau_0=tau_0)
    lb = math.log(1.0 / delta_total) * c_adapt if 0 < delta_total < 1 else None
    return ComplexityReport(c_adapt, c_unif, h_adapt, h_unif, ratio, bounds, eps, C, lb)


def i_fin_bound(env: EnvironmentMap, delta_total: float = 0.05, C: float = 8.0,
                eps: Optional[float] = None, tau_0: float = 1.0) -> dict[int, int]:
    """Largest round index each cell may still be a candidate in, per cell.

    tau_0 2^i_fin <= C (1 + log_+(|S| log_+(1/d) / delta) / d) with the cell's
    gap divergence d (rates in counts per second).
    """
    if not C > 0:
        raise InvalidArgumentError("C must be positive")
    if not 0 < delta_total < 1:
        raise InvalidArgumentError("delta_total must lie in (0, 1)")
    if eps is None and not env.identifiable:
        raise NonIdentifiableError("round bounds need mu^(k) > mu^(k+1)")
    n = env.n_cells
    out = {}
    for x, d in enumerate(_cell_divergences(env, eps)):
        if d <= 0:
            out[x] = math.inf
            continue
        v = C * (1.0 + log_plus(n * log_plus(1.0 / d) / delta_total) / d) / tau_0
        out[x] = max(0, math.ceil(math.log2(v)))
    return out
