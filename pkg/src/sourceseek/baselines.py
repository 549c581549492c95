"""Comparison algorithms: uniform-dwell NaiveSearch and receding-horizon InfoMax."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Protocol

import numpy as np

from . import estimator
from .core import (EliminationState, Exact, IntervalTable, TerminationRule, _eps,
                   check_termination, eliminate)
from .env import EnvironmentMap, GridSpec
from .errors import InvalidArgumentError, InvalidConfigError, NonIdentifiableError
from .planner import RasterPath, raster_path, round_schedule
from .sensing import InverseSquare, Pointwise
from .tracking import (GaussianSource, MeasurementStreams, RoundRecord, SearchSettings, TrialReport, error_point,
                       judge, make_source, model_from_spec)

NAIVE_MODES = ("constant", "doubling")


def run_naivesearch(env: EnvironmentMap, model=None, mode: str = "constant", delta_total: float = 0.05,
                    seed: int = 0, trial: int = 0, rule: TerminationRule = Exact(), conf_source=None,
                    settings: Optional[SearchSettings] = None, planner: Optional[RasterPath] = None) -> TrialReport:
    """Repeated full raster passes with uniform dwell.

    ``mode="constant"`` dwells tau_0 every pass and pools all counts;
    ``mode="doubling"`` doubles the dwell each pass and, unless
    ``settings.reuse_mode`` says otherwise, uses only the current pass's data.  Candidate/confirmed sets are
    tracked with the same elimination rules so the epsilon rule can be applied.
    """
    if mode not in NAIVE_MODES:
        raise InvalidConfigError(f"unknown NaiveSearch mode {mode!r}")
    settings = settings or SearchSettings()
    model = Pointwise() if model is None else model_from_spec(model)
    if isinstance(rule, Exact) and not env.identifiable:
        raise NonIdentifiableError("exact termination needs distinct k-th and (k+1)-th rates")
    path = planner if planner is not None else raster_path(env.grid)
    streams = MeasurementStreams(seed, trial)
    pw_mode = settings.reuse_mode or ("cumulative" if mode == "constant" else "fresh")
    source = make_source(conf_source or settings.intervals, env, model, streams, delta_total, settings, pw_mode)

    cells = sorted(path.cells)
    state = EliminationState.initial(cells, env.k, settings.tau_0, delta_total)
    t = sample_time = 0.0
    series, log = [], []
    result = None
    for i in range(settings.max_rounds):
        tau = settings.tau_0 if mode == "constant" else settings.tau_0 * settings.growth ** i
        sched = round_schedule(path, cells, settings.tau_0, tau, i)
        source.fly(path, sched, i)
        t += sched.total_time
        sample_time += sched.total_time
        table = IntervalTable(*source.intervals(i))
        top, cand = eliminate(state, table)
        log.append(RoundRecord(i, len(state.candidates), len(state.confirmed), tau, sched.total_time, t))
        series.append(error_point(env, t, source.estimates()))
        state = replace(state, round_i=i + 1, candidates=cand, confirmed=top, tau_i=tau)
        result = check_termination(state, table, rule, scope="all", all_cells=cells)
        if result.done:
            break

    terminated = result is not None and result.done
    if terminated:
        returned = result.returned
    else:
        est = source.estimates()
        returned = frozenset(int(x) for x in np.argsort(-est, kind="stable")[: env.k])
    exact, approx = judge(env, returned, _eps(rule))
    return TrialReport(
        algorithm=f"naivesearch-{mode}",
        returned=tuple(sorted(returned)),
        correct=exact and terminated,
        eps_correct=approx and terminated,
        rounds=len(log),
        sim_runtime=t,
        sample_time=sample_time,
        terminated=terminated,
        reason="" if terminated else f"no termination after {settings.max_rounds} passes",
        series=series,
        round_log=log,
        env_digest=env.digest(),
    )


# ---------------------------------------------------------------------------
# InfoMax


@dataclass(frozen=True, eq=False)
class FlightBox:
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def for_grid(cls, grid: GridSpec, max_altitude: Optional[float] = None) -> "FlightBox":
        lo, hi = grid.extent()
        top = max(grid.sensor_altitude, 5.0 * grid.sensor_altitude if max_altitude is None else max_altitude)
        return cls(np.array([lo[0], lo[1], grid.sensor_altitude]), np.array([hi[0], hi[1], top]))

    def contains(self, pts: np.ndarray, tol: float = 1e-9) -> bool:
        pts = np.atleast_2d(pts)
        return bool(np.all(pts >= self.lower - tol) and np.all(pts <= self.upper + tol))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, 3))

    def clip(self, pts: np.ndarray) -> np.ndarray:
        return np.clip(pts, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class BezierTrajectory:
    """Quadratic Bezier curve traversed uniformly in its parameter over ``duration``."""

    control_points: np.ndarray     # (3, 3): start, control, end
    duration: float

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float).reshape(3, 3)
        object.__setattr__(self, "control_points", cp)
        if not self.duration > 0:
            raise InvalidArgumentError("trajectory duration must be positive")

    def at(self, t) -> np.ndarray:
        """Positions at times ``t`` (seconds from the start)."""
        s = np.clip(np.atleast_1d(np.asarray(t, dtype=float)) / self.duration, 0.0, 1.0)[:, None]
        p0, p1, p2 = self.control_points
        return (1 - s) ** 2 * p0 + 2 * (1 - s) * s * p1 + s ** 2 * p2

    def arc_length(self, n: int = 64) -> float:
        pts = self.at(np.linspace(0.0, self.duration, n + 1))
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())

    def inside(self, box: FlightBox) -> bool:
        # a quadratic Bezier lies in the convex hull of its control points
        return box.contains(self.control_points)


def infomax_objective(posterior: estimator.PosteriorSummary, model, grid: GridSpec, traj: BezierTrajectory,
                      n_samples: int = 10, box: Optional[FlightBox] = None) -> float:
    """Sum over N look-ahead samples of the sensitivity-weighted posterior variance."""
    if box is not None and not traj.inside(box):
        raise InvalidArgumentError("trajectory leaves the flight box")
    times = traj.duration * np.arange(1, n_samples + 1) / n_samples
    H = model.weights_at(grid, traj.at(times))
    return float((H @ posterior.sigma_diag).sum())


@dataclass(frozen=True)
class RandomRestarts:
    """Best of ``n`` random feasible curves, then coordinate descent on its free control points."""

    n: int = 64
    local_steps: int = 4
    max_draws: int = 2000

    def __call__(self, score: Callable[[np.ndarray], float], feasible: Callable[[np.ndarray], bool],
                 start: np.ndarray, box: FlightBox, rng: np.random.Generator) -> np.ndarray:
        best, best_s = None, -math.inf
        accepted = draws = 0
        while accepted < self.n and draws < self.max_draws:
            free = box.sample(rng, 2)
            draws += 1
            cp = np.vstack([start, free])
            if not feasible(cp):
                continue
            accepted += 1
            s = score(cp)
            if s > best_s:
                best, best_s = cp, s
        if best is None:
            return np.vstack([start, start, start])
        step = 0.25 * float(np.max(box.upper - box.lower))
        for _ in range(self.local_steps):
            improved = True
            while improved:
                improved = False
                for row in (1, 2):
                    for ax in range(3):
                        for sign in (1.0, -1.0):
                            cand = best.copy()
                            cand[row, ax] += sign * step
                            cand[1:] = box.clip(cand[1:])
                            if not feasible(cand):
                                continue
                            s = score(cand)
                            if s > best_s + 1e-12 * abs(best_s):
                                best, best_s, improved = cand, s, True
            step /= 2.0
        return best


class TrajectoryOptimizer(Protocol):
    def __call__(self, score, feasible, start, box, rng) -> np.ndarray: ...


@dataclass(frozen=True)
class InfoMaxConfig:
    t_plan: float = 30.0
    n_samples: int = 10
    optimizer: TrajectoryOptimizer = field(default_factory=RandomRestarts)
    v_max: Optional[float] = None          # defaults to cell_size / tau_0
    max_altitude: Optional[float] = None
    planning_time: float = 0.0             # seconds charged per planning cycle

    def __post_init__(self):
        if not self.t_plan > 0:
            raise InvalidConfigError("t_plan must be positive")
        if self.n_samples < 2:
            raise InvalidConfigError("n_samples must be >= 2")


def _planning_posterior(source: GaussianSource) -> estimator.PosteriorSummary:
    if source.state.n_measurements == 0:
        n = source.env.n_cells
        return estimator.PosteriorSummary(np.zeros(n), np.ones(n))
    return source.posterior()


def run_infomax(env: EnvironmentMap, model=None, config: Optional[InfoMaxConfig] = None, delta_total: float = 0.05,
                seed: int = 0, trial: int = 0, rule: TerminationRule = Exact(),
                settings: Optional[SearchSettings] = None, record_path: bool = False) -> TrialReport:
    config = config or InfoMaxConfig()
    settings = settings or SearchSettings()
    model = InverseSquare() if model is None else model_from_spec(model)
    if isinstance(model, Pointwise):
        raise InvalidConfigError("InfoMax needs a distance-based sensing model")
    if isinstance(rule, Exact) and not env.identifiable:
        raise NonIdentifiableError("exact termination needs distinct k-th and (k+1)-th rates")
    grid = env.grid
    box = FlightBox.for_grid(grid, config.max_altitude)
    v_max = grid.cell_size / settings.tau_0 if config.v_max is None else config.v_max
    dt = settings.step
    n_meas = max(1, int(round(config.t_plan / dt)))
    meas_times = (np.arange(n_meas) + 0.5) * (config.t_plan / n_meas)
    meas_dur = config.t_plan / n_meas

    streams = MeasurementStreams(seed, trial)
    source = GaussianSource(env, model, streams, delta_total, settings)
    cells = list(range(env.n_cells))
    state = EliminationState.initial(cells, env.k, settings.tau_0, delta_total)
    pos = raster_path(grid).configs[0].position.copy()

    def feasible(cp):
        return box.contains(cp) and BezierTrajectory(cp, config.t_plan).arc_length() <= v_max * config.t_plan + 1e-9

    t = 0.0
    series, log, flight = [], [], []
    result = None
    cycle = 0
    while t < settings.max_sim_time:
        post = _planning_posterior(source)

        def score(cp, post=post):
            return infomax_objective(post, model, grid, BezierTrajectory(cp, config.t_plan), config.n_samples)

        cp = config.optimizer(score, feasible, pos, box, streams.generator(cycle, 2_000_000))
        traj = BezierTrajectory(cp, config.t_plan)
        pts = traj.at(meas_times)
        source.observe_positions(pts, meas_dur, streams.generator(cycle, 1_000_000))
        if record_path:
            flight.extend((cycle, t + tm, *p) for tm, p in zip(meas_times, pts))
        pos = traj.at([config.t_plan])[0]
        t += config.t_plan + config.planning_time
        table = IntervalTable(*source.intervals(cycle))
        top, cand = eliminate(state, table)
        log.append(RoundRecord(cycle, len(state.candidates), len(state.confirmed), meas_dur, config.t_plan, t))
        series.append(error_point(env, t, source.estimates()))
        state = replace(state, round_i=cycle + 1, candidates=cand, confirmed=top)
        result = check_termination(state, table, rule, scope="all", all_cells=cells)
        cycle += 1
        if result.done:
            break

    terminated = result is not None and result.done
    if terminated:
        returned = result.returned
    else:
        est = source.estimates()
        returned = frozenset(int(x) for x in np.argsort(-est, kind="stable")[: env.k])
    exact, approx = judge(env, returned, _eps(rule))
    report = TrialReport(
        algorithm="infomax",
        returned=tuple(sorted(returned)),
        correct=exact and terminated,
        eps_correct=approx and terminated,
        rounds=cycle,
        sim_runtime=t,
        sample_time=t,
        terminated=terminated,
        reason="" if terminated else f"simulated time guard {settings.max_sim_time} s reached",
        series=series,
        round_log=log,
        env_digest=env.digest(),
    )
    report.flight = flight
    return report


def export_flight_csv(flight, out) -> None:
    with open(out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["cycle", "t", "x", "y", "z"])
        for row in flight:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
