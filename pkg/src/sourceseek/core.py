"""Successive-elimination engine: update rules, termination and the AdaSearch loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .env import EnvironmentMap
from .errors import InvalidConfigError, InvalidStateError, NonIdentifiableError
from .planner import RasterPath, raster_path, round_schedule
from .sensing import Pointwise
from .tracking import (IntervalSnapshot, MeasurementStreams, RoundRecord, SearchSettings, TrialReport,
                       error_point, judge, make_source, model_from_spec)


@dataclass(frozen=True)
class EliminationState:
    round_i: int
    candidates: tuple[int, ...]
    confirmed: tuple[int, ...]
    k: int
    tau_i: float = 1.0
    delta_total: float = 0.05

    def __post_init__(self):
        if set(self.candidates) & set(self.confirmed):
            raise InvalidStateError("confirmed and candidate sets overlap")
        if len(self.confirmed) > self.k:
            raise InvalidStateError("more confirmed points than k")

    @classmethod
    def initial(cls, cells: Sequence[int], k: int, tau_0: float = 1.0, delta_total: float = 0.05):
        return cls(0, tuple(int(c) for c in cells), (), k, tau_0, delta_total)


@dataclass(frozen=True)
class Exact:
    pass


@dataclass(frozen=True)
class Approximate:
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidConfigError("epsilon must be positive")


TerminationRule = Union[Exact, Approximate]


class Termination(NamedTuple):
    done: bool
    returned: Optional[frozenset] = None


CONTINUE = Termination(False, None)


class IntervalTable:
    """Per-cell (LCB, UCB) arrays; NaN marks a cell without an interval."""

    def __init__(self, lcb, ucb):
        self.lcb = np.asarray(lcb, dtype=float)
        self.ucb = np.asarray(ucb, dtype=float)
        if self.lcb.shape != self.ucb.shape:
            raise InvalidStateError("LCB and UCB arrays differ in shape")

    @classmethod
    def from_mapping(cls, intervals: dict, n_cells: Optional[int] = None) -> "IntervalTable":
        n = (max(intervals) + 1 if intervals else 0) if n_cells is None else n_cells
        lcb = np.full(n, np.nan)
        ucb = np.full(n, np.nan)
        for cell, (lo, hi) in intervals.items():
            lcb[cell], ucb[cell] = lo, hi
        return cls(lcb, ucb)

    def over(self, cells: Sequence[int]):
        idx = np.asarray(cells, dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= self.lcb.size):
            raise InvalidStateError("missing interval for a tracked cell")
        lo, hi = self.lcb[idx], self.ucb[idx]
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise InvalidStateError("missing interval for a tracked cell")
        return lo, hi


def kth_largest(values: np.ndarray, k: int) -> float:
    """k-th largest entry (1-based).  k = 0 gives +inf, k > len gives -inf."""
    if k <= 0:
        return math.inf
    if k > len(values):
        return -math.inf
    return float(np.partition(values, len(values) - k)[len(values) - k])


def _table(intervals) -> IntervalTable:
    return intervals if isinstance(intervals, IntervalTable) else IntervalTable.from_mapping(intervals)


def top_elim(state: EliminationState, intervals) -> tuple[int, ...]:
    if not state.candidates:
        return state.confirmed
    table = _table(intervals)
    lo, hi = table.over(state.candidates)
    thresh = kth_largest(hi, state.k - len(state.confirmed) + 1)
    added = tuple(x for x, l in zip(state.candidates, lo) if l > thresh)
    return state.confirmed + added


def bot_elim(state: EliminationState, intervals, new_confirmed: Sequence[int]) -> tuple[int, ...]:
    if not state.candidates:
        return ()
    table = _table(intervals)
    lo, hi = table.over(state.candidates)
    thresh = kth_largest(lo, state.k - len(new_confirmed))
    confirmed = set(new_confirmed)
    return tuple(x for x, u in zip(state.candidates, hi) if x not in confirmed and u >= thresh)


def eliminate(state: EliminationState, intervals) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Apply top_elim then bot_elim; returns (new_confirmed, new_candidates)."""
    top = top_elim(state, intervals)
    return top, bot_elim(state, intervals, top)


def check_termination(state: EliminationState, intervals, rule: TerminationRule = Exact(),
                      scope: str = "adasearch", all_cells: Optional[Sequence[int]] = None) -> Termination:
    """Shared stopping logic.

    ``scope="adasearch"`` stops when the candidate set is empty.  ``scope="all"``
    (used by the baselines) stops when the k-th largest LCB over ``all_cells``
    strictly exceeds the (k+1)-th largest UCB.  With an :class:`Approximate`
    rule both scopes also stop once the candidate intervals agree within epsilon.
    """
    if scope == "adasearch":
        if not state.candidates:
            return Termination(True, frozenset(state.confirmed))
    elif scope == "all":
        table = _table(intervals)
        cells = list(range(len(table.lcb))) if all_cells is None else list(all_cells)
        lo, hi = table.over(cells)
        if kth_largest(lo, state.k) > kth_largest(hi, state.k + 1):
            order = np.argsort(-lo, kind="stable")[: state.k]
            return Termination(True, frozenset(cells[i] for i in order))
    else:
        raise InvalidConfigError(f"unknown termination scope {scope!r}")
    if isinstance(rule, Approximate) and state.candidates:
        lo, hi = _table(intervals).over(state.candidates)
        if lo.min() >= hi.max() - rule.epsilon:
            return Termination(True, frozenset(state.candidates) | frozenset(state.confirmed))
    return CONTINUE


# ---------------------------------------------------------------------------
# AdaSearch


def _eps(rule) -> Optional[float]:
    return rule.epsilon if isinstance(rule, Approximate) else None


def _best_guess(state: EliminationState, est: np.ndarray) -> frozenset:
    rest = sorted(state.candidates, key=lambda x: -est[x])
    return frozenset(state.confirmed) | frozenset(rest[: state.k - len(state.confirmed)])


def run_adasearch(env: EnvironmentMap, model=None, planner: Optional[RasterPath] = None, conf_source=None,
                  rule: TerminationRule = Exact(), delta_total: float = 0.05, seed: int = 0, trial: int = 0,
                  settings: Optional[SearchSettings] = None) -> TrialReport:
    """One AdaSearch trial.

    ``conf_source`` is ``None`` (chosen from the model), ``"poisson"``,
    ``"gaussian"`` or ``"oracle"``.
    """
    settings = settings or SearchSettings()
    model = Pointwise() if model is None else model_from_spec(model)
    if isinstance(rule, Exact) and not env.identifiable:
        raise NonIdentifiableError("exact termination needs distinct k-th and (k+1)-th rates")
    path = planner if planner is not None else raster_path(env.grid)
    streams = MeasurementStreams(seed, trial)
    source = make_source(conf_source or settings.intervals, env, model, streams, delta_total, settings,
                         settings.reuse_mode or "cumulative")

    cells = sorted(path.cells)
    state = EliminationState.initial(cells, env.k, settings.tau_0, delta_total)
    t = 0.0
    sample_time = 0.0
    series, log, ilog = [], [], []
    result = None
    for i in range(settings.max_rounds):
        tau_i = settings.tau_0 * settings.growth ** i
        sched = round_schedule(path, state.candidates, settings.tau_0, tau_i, i)
        source.fly(path, sched, i)
        t += sched.total_time
        sample_time += tau_i * len(state.candidates)
        lcb, ucb = source.intervals(i)
        table = IntervalTable(lcb, ucb)
        top, cand = eliminate(state, table)
        if settings.record_intervals:
            ilog.append(IntervalSnapshot(i, state.candidates, state.confirmed, lcb, ucb, cand, top))
        log.append(RoundRecord(i, len(state.candidates), len(state.confirmed), tau_i, sched.total_time, t))
        series.append(error_point(env, t, source.estimates()))
        state = replace(state, round_i=i + 1, candidates=cand, confirmed=top, tau_i=tau_i * settings.growth)
        result = check_termination(state, table, rule)
        if not result.done and settings.shared_stop:
            result = check_termination(state, table, rule, scope="all", all_cells=cells)
        if result.done:
            break

    terminated = result is not None and result.done
    returned = result.returned if terminated else _best_guess(state, source.estimates())
    exact, approx = judge(env, returned, _eps(rule))
    return TrialReport(
        algorithm="adasearch",
        returned=tuple(sorted(returned)),
        correct=exact and terminated,
        eps_correct=approx and terminated,
        rounds=len(log),
        sim_runtime=t,
        sample_time=sample_time,
        terminated=terminated,
        reason="" if terminated else f"no termination after {settings.max_rounds} rounds",
        series=series,
        round_log=log,
        interval_log=ilog,
        env_digest=env.digest(),
    )
