"""Shared trial machinery: settings, measurement streams, interval sources, reports.

Every (round, path step) pair draws from its own RNG sub-stream derived from
``(seed, trial, round, step)``.  Two algorithms run on the same seed therefore
see identical counts wherever they dwell at the same pose in the same round,
and a shorter dwell sees a prefix of a longer one's sub-interval counts.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import confidence, estimator
from .env import EnvironmentMap
from .errors import InvalidConfigError
from .planner import DwellSchedule, RasterPath
from .sensing import InverseSquare, Pointwise, SensitivityModel


@dataclass(frozen=True)
class SearchSettings:
    tau_0: float = 1.0
    growth: float = 2.0
    max_rounds: int = 50
    dt: Optional[float] = None               # sub-interval length; defaults to tau_0
    bias_b: float = 1.0
    weighting: str = "inverse_variance"
    alpha: Optional[float] = None            # fixed confidence parameter (Gaussian intervals)
    alpha_mode: str = "quantile"             # or "multiplier"
    intervals: Optional[str] = None          # "poisson" | "gaussian" | "oracle"; default by model
    reuse_mode: Optional[str] = None     # "cumulative" | "fresh" data reuse; default by algorithm
    record_intervals: bool = False
    shared_stop: bool = True                 # AdaSearch also stops on the baselines' global criterion
    max_sim_time: float = 20_000.0

    def __post_init__(self):
        if not self.tau_0 > 0:
            raise InvalidConfigError("tau_0 must be positive")
        if not self.growth > 1:
            raise InvalidConfigError("dwell growth constant must exceed 1")
        if self.max_rounds < 1:
            raise InvalidConfigError("max_rounds must be >= 1")
        if self.weighting not in estimator.WEIGHTINGS:
            raise InvalidConfigError(f"unknown weighting {self.weighting!r}")
        if self.alpha_mode not in ("quantile", "multiplier"):
            raise InvalidConfigError(f"unknown alpha_mode {self.alpha_mode!r}")
        if self.intervals not in (None, "poisson", "gaussian", "oracle"):
            raise InvalidConfigError(f"unknown interval source {self.intervals!r}")
        if self.reuse_mode not in (None, "cumulative", "fresh"):
            raise InvalidConfigError(f"unknown reuse mode {self.reuse_mode!r}")
        if self.dt is not None and not self.dt > 0:
            raise InvalidConfigError("dt must be positive")

    @property
    def step(self) -> float:
        return self.tau_0 if self.dt is None else self.dt

    def to_dict(self) -> dict:
        return asdict(self)


class MeasurementStreams:
    def __init__(self, seed: int, trial: int = 0):
        self.seed = int(seed)
        self.trial = int(trial)

    def generator(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.trial,) + tuple(int(k) for k in key))
        return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# Interval sources


class PoissonCountSource:
    """Pointwise sensing with Poisson bounding-function intervals."""

    def __init__(self, env: EnvironmentMap, streams: MeasurementStreams, delta_total: float,
                 mode: str = "cumulative", alpha: Optional[float] = None):
        self.env = env
        self.streams = streams
        self.delta_total = delta_total
        self.mode = mode
        self.alpha = alpha
        n = env.n_cells
        self.cum_n = np.zeros(n)
        self.cum_t = np.zeros(n)
        self.last_n = np.zeros(n)
        self.last_t = np.zeros(n)

    def fly(self, path: RasterPath, schedule: DwellSchedule, round_i: int) -> None:
        self.last_n[:] = 0
        self.last_t[:] = 0
        mu = self.env.mu
        for j, (cell, d) in enumerate(zip(path.cells, schedule.dwell)):
            lam = mu[cell] * d
            count = self.streams.generator(round_i, j).poisson(lam) if lam > 0 else 0
            self.last_n[cell] += count
            self.last_t[cell] += d
        self.cum_n += self.last_n
        self.cum_t += self.last_t

    def delta(self, round_i: int) -> float:
        if self.alpha is not None:
            return self.alpha
        return confidence.round_delta(self.delta_total, self.env.n_cells, round_i + 1)

    def intervals(self, round_i: int):
        if self.mode == "fresh":
            n, t = self.last_n, self.last_t
        else:
            n, t = self.cum_n, self.cum_t
        t_safe = np.where(t > 0, t, 1.0)
        lcb, ucb = confidence.pointwise_interval(n, t_safe, self.delta(round_i))
        lcb = np.where(t > 0, lcb, 0.0)
        ucb = np.where(t > 0, ucb, np.inf)
        return lcb, ucb

    def estimates(self) -> np.ndarray:
        return np.where(self.cum_t > 0, self.cum_n / np.where(self.cum_t > 0, self.cum_t, 1.0), 0.0)


class GaussianSource:
    """Least-squares estimates with Gaussian intervals (any sensitivity model)."""

    def __init__(self, env: EnvironmentMap, model: SensitivityModel, streams: MeasurementStreams,
                 delta_total: float, settings: SearchSettings, mode: str = "cumulative"):
        self.env = env
        self.model = model
        self.mode = mode
        self.streams = streams
        self.delta_total = delta_total
        self.settings = settings
        self.state = estimator.EstimatorState(env.n_cells, settings.bias_b)
        self._post: Optional[estimator.PosteriorSummary] = None
        self._path_id = None

    def _weights_for(self, path: RasterPath) -> np.ndarray:
        if self._path_id is not id(path):
            self._H = np.array([self.model.weights(self.env.grid, z) for z in path.configs])
            self._rates = self._H @ self.env.mu
            self._path_id = id(path)
        return self._H

    def fly(self, path: RasterPath, schedule: DwellSchedule, round_i: int) -> None:
        H = self._weights_for(path)
        if self.mode == "fresh":
            self.state = estimator.EstimatorState(self.env.n_cells, self.settings.bias_b)
        rows = np.empty_like(H)
        yt = np.empty(len(path))
        n_meas = 0
        for j, d in enumerate(schedule.dwell):
            n_sub = max(1, int(round(d / self.settings.step)))
            sub = d / n_sub
            counts = self.streams.generator(round_i, j).poisson(self._rates[j] * sub, size=n_sub)
            rows[j], yt[j] = estimator.dwell_row(H[j] * sub, counts, self.settings.bias_b, self.settings.weighting)
            n_meas += n_sub
        estimator.update_many(self.state, rows, yt, n_measurements=n_meas)
        self._post = None

    def observe_positions(self, positions: np.ndarray, duration: float, gen: np.random.Generator) -> None:
        """One measurement of length ``duration`` at each position (free-flight sampling)."""
        if isinstance(self.model, Pointwise):
            raise InvalidConfigError("free-flight sampling needs a distance-based sensitivity model")
        H = self.model.weights_at(self.env.grid, positions) * duration
        counts = gen.poisson(H @ self.env.mu).astype(float)
        s = estimator._scale(counts, self.settings.bias_b, self.settings.weighting)
        estimator.update_many(self.state, H / s[:, None], counts / s)
        self._post = None

    def posterior(self) -> estimator.PosteriorSummary:
        if self._post is None:
            self._post = estimator.solve(self.state)
        return self._post

    def z(self, round_i: int) -> float:
        s = self.settings
        if s.alpha is not None:
            return s.alpha if s.alpha_mode == "multiplier" else estimator.alpha_of_delta(s.alpha)
        return estimator.alpha_of_delta(confidence.round_delta(self.delta_total, self.env.n_cells, round_i + 1))

    def intervals(self, round_i: int):
        return estimator.gaussian_intervals(self.posterior(), self.z(round_i))

    def estimates(self) -> np.ndarray:
        if self.state.n_measurements == 0:
            return np.zeros(self.env.n_cells)
        return self.posterior().rates


class OracleSource:
    """Zero-width intervals pinned at the true rates."""

    def __init__(self, env: EnvironmentMap):
        self.env = env

    def fly(self, path, schedule, round_i) -> None:
        pass

    def intervals(self, round_i: int):
        return self.env.mu.copy(), self.env.mu.copy()

    def estimates(self) -> np.ndarray:
        return self.env.mu.copy()


def make_source(kind: Optional[str], env: EnvironmentMap, model: SensitivityModel, streams: MeasurementStreams,
                delta_total: float, settings: SearchSettings, reuse_mode: str):
    if kind is None:
        kind = "poisson" if isinstance(model, Pointwise) else "gaussian"
    if kind == "oracle":
        return OracleSource(env)
    if kind == "poisson":
        if not isinstance(model, Pointwise):
            raise InvalidConfigError("Poisson count intervals require the pointwise sensing model")
        return PoissonCountSource(env, streams, delta_total, reuse_mode, settings.alpha)
    if kind == "gaussian":
        return GaussianSource(env, model, streams, delta_total, settings, reuse_mode)
    raise InvalidConfigError(f"unknown interval source {kind!r}")


def model_from_spec(spec) -> SensitivityModel:
    """Accepts a model instance, ``"pointwise"``, ``"inverse_square"`` or a dict."""
    if isinstance(spec, (Pointwise, InverseSquare)):
        return spec
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "pointwise")
    if kind == "pointwise":
        return Pointwise()
    if kind in ("inverse_square", "physical"):
        return InverseSquare(spec.get("c", 1.0))
    raise InvalidConfigError(f"unknown sensing model {kind!r}")


# ---------------------------------------------------------------------------
# Reports


@dataclass
class RoundRecord:
    round: int
    n_candidates: int
    n_confirmed: int
    tau: float
    round_time: float
    sim_time: float


@dataclass
class IntervalSnapshot:
    """What an elimination step saw and did, for post-hoc invariant checks."""

    round: int
    candidates: tuple[int, ...]
    confirmed: tuple[int, ...]
    lcb: np.ndarray
    ucb: np.ndarray
    next_candidates: tuple[int, ...]
    next_confirmed: tuple[int, ...]


@dataclass
class TrialReport:
    algorithm: str
    returned: tuple[int, ...]
    correct: bool
    eps_correct: bool
    rounds: int
    sim_runtime: float
    sample_time: float
    terminated: bool
    reason: str = ""
    series: list = field(default_factory=list)          # (t, |mu_hat(x*) - mu*|, ||mu_hat - mu||_2)
    round_log: list = field(default_factory=list)
    interval_log: list = field(default_factory=list)
    env_digest: str = ""

    def summary_row(self) -> dict:
        final = self.series[-1] if self.series else (self.sim_runtime, math.nan, math.nan)
        return {
            "algorithm": self.algorithm,
            "returned": " ".join(str(c) for c in self.returned),
            "correct": int(self.correct),
            "eps_correct": int(self.eps_correct),
            "terminated": int(self.terminated),
            "rounds": self.rounds,
            "sim_runtime": self.sim_runtime,
            "sample_time": self.sample_time,
            "source_error": final[1],
            "grid_error": final[2],
            "env_digest": self.env_digest,
        }

    def write_round_log(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["round", "n_candidates", "n_confirmed", "tau", "round_time", "sim_time"])
            for r in self.round_log:
                w.writerow([r.round, r.n_candidates, r.n_confirmed, repr(r.tau), repr(r.round_time), repr(r.sim_time)])


def error_point(env: EnvironmentMap, t: float, est: np.ndarray) -> tuple[float, float, float]:
    xs = env.x_star
    return (float(t), float(abs(est[xs] - env.mu[xs])), float(np.linalg.norm(est - env.mu)))


def judge(env: EnvironmentMap, returned, epsilon: Optional[float]) -> tuple[bool, bool]:
    """(exact correctness, (k, eps)-correctness) of a returned set."""
    returned = frozenset(returned)
    order = np.argsort(-env.mu, kind="stable")
    top = frozenset(int(i) for i in order[: env.k])
    exact = env.identifiable and returned == top
    eps = 0.0 if epsilon is None else epsilon
    approx = bool(returned) and top.issubset(returned) and all(env.mu[x] >= env.mu_k - eps for x in returned)
    return bool(exact), bool(approx)
