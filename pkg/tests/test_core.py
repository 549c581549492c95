import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sourceseek import oracle
from sourceseek.core import (Approximate, EliminationState, Exact, IntervalTable, bot_elim, check_termination,
                             eliminate, kth_largest, run_adasearch, top_elim)
from sourceseek.env import EnvironmentMap, GridSpec, build_random_env
from sourceseek.errors import InvalidConfigError, InvalidStateError, NonIdentifiableError
from sourceseek.tracking import SearchSettings

A, B, C, D = 0, 1, 2, 3


def _state(cands, k, confirmed=()):
    return EliminationState(0, tuple(cands), tuple(confirmed), k)


def test_kth_largest_conventions():
    v = np.array([3.0, 9.0, 1.0])
    assert kth_largest(v, 0) == math.inf
    assert kth_largest(v, 4) == -math.inf
    assert kth_largest(v, 1) == 9.0 and kth_largest(v, 3) == 1.0


def test_top_elim_example():
    iv = {A: (5, 6), B: (1, 2), C: (0, 3)}
    assert top_elim(_state([A, B, C], 1), iv) == (A,)


def test_top_elim_empty():
    s = EliminationState(3, (), (A,), 1)
    assert top_elim(s, {}) == (A,)


def test_top_elim_k2():
    iv = {A: (5, 10), B: (3.5, 4), C: (0, 3), D: (0, 2)}
    assert set(top_elim(_state([A, B, C, D], 2), iv)) == {A, B}


def test_bot_elim_examples():
    iv = {A: (5, 6), B: (1, 2), C: (0, 3)}
    s = _state([A, B, C], 1)
    assert bot_elim(s, iv, (A,)) == ()
    assert bot_elim(s, iv, ()) == (A,)
    flat = {x: (0, 10) for x in range(4)}
    s = _state(range(4), 2)
    assert eliminate(s, flat) == ((), (0, 1, 2, 3))


def test_missing_interval_is_invalid_state():
    with pytest.raises(InvalidStateError):
        top_elim(_state([A, B], 1), {A: (1, 2)})


def test_state_invariants():
    with pytest.raises(InvalidStateError):
        EliminationState(0, (1, 2), (2,), 1)
    with pytest.raises(InvalidStateError):
        EliminationState(0, (), (1, 2), 1)


def test_termination_examples():
    s = EliminationState(2, (), (A,), 1)
    assert check_termination(s, {}) == (True, frozenset({A}))
    iv = IntervalTable([7, 1, 0], [9, 6.9, 2])
    s = _state([A, B, C], 1)
    assert check_termination(s, iv, scope="all") == (True, frozenset({A}))
    iv = {A: (4, 4.5), B: (3.8, 4.6)}
    s = _state([A, B], 1, ())
    done = check_termination(s, iv, Approximate(1.0))
    assert done.done and done.returned == {A, B}
    assert not check_termination(s, iv, Exact()).done


def test_approximate_needs_positive_eps():
    with pytest.raises(InvalidConfigError):
        Approximate(0.0)


def _random_table(rng):
    n = int(rng.integers(1, 13))
    k = int(rng.integers(1, 5))
    n_top = int(rng.integers(0, k + 1))
    cells = rng.permutation(40)[: n + n_top]
    cand, top = list(cells[:n]), list(cells[n:])
    lo = rng.integers(0, 20, n).astype(float)
    hi = lo + rng.integers(0, 10, n)
    return {int(c): (l, h) for c, l, h in zip(cand, lo, hi)}, k, [int(t) for t in top]


def test_matches_oracle_elimination():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        iv, k, top = _random_table(rng)
        s = EliminationState(0, tuple(iv), tuple(top), k)
        new_top, new_s = eliminate(s, iv)
        o_top, o_s = oracle.naive_elim(iv, k, top)
        assert set(new_top) == o_top and set(new_s) == o_s


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_progress_and_disjointness(seed):
    rng = np.random.default_rng(seed)
    iv, k, top = _random_table(rng)
    s = EliminationState(0, tuple(iv), tuple(top), k)
    new_top, new_s = eliminate(s, iv)
    assert set(new_s) <= set(s.candidates)
    assert set(top) <= set(new_top)
    assert not set(new_top) & set(new_s)
    assert len(new_top) <= k


def test_two_cell_env_finds_source():
    env = EnvironmentMap(GridSpec(1, 2), [0.0, 100.0], 1)
    hits = 0
    for s in range(100):
        r = run_adasearch(env, seed=s, delta_total=0.05)
        hits += r.correct and r.rounds <= 3
    assert hits >= 99


def test_oracle_intervals_one_pass():
    for s in range(5):
        env = build_random_env(s, GridSpec(5, 5), 3, [700, 800, 900], 400)
        r = run_adasearch(env, conf_source="oracle")
        assert r.rounds == 1 and r.correct


def test_runtime_matches_round_log():
    env = build_random_env(4, GridSpec(6, 6), 1, [800], 600)
    st_ = SearchSettings(tau_0=0.01)
    r = run_adasearch(env, seed=4, settings=st_)
    total = sum(rec.tau * rec.n_candidates + 0.01 * (36 - rec.n_candidates) for rec in r.round_log)
    assert r.sim_runtime == pytest.approx(total, rel=1e-12)
    assert [p[0] for p in r.series] == sorted(p[0] for p in r.series)


def test_round_log_csv(tmp_path):
    env = build_random_env(1, GridSpec(3, 3), 1, [800], 400)
    r = run_adasearch(env, seed=1)
    r.write_round_log(tmp_path / "log.csv")
    assert (tmp_path / "log.csv").read_text().splitlines()[0] == "round,n_candidates,n_confirmed,tau,round_time,sim_time"


def test_exact_rule_rejects_ties():
    env = EnvironmentMap(GridSpec(1, 3), [5.0, 5.0, 1.0], 1)
    with pytest.raises(NonIdentifiableError):
        run_adasearch(env)


def test_max_rounds_guard():
    env = EnvironmentMap(GridSpec(1, 2), [100.0, 99.0], 1)
    r = run_adasearch(env, settings=SearchSettings(max_rounds=2))
    assert not r.terminated and r.rounds == 2 and "2 rounds" in r.reason
    assert not r.correct


def test_same_seed_same_trajectory():
    env = build_random_env(9, GridSpec(6, 6), 1, [800], 500)
    a = run_adasearch(env, seed=3, settings=SearchSettings(tau_0=0.01))
    b = run_adasearch(env, seed=3, settings=SearchSettings(tau_0=0.01))
    assert a.series == b.series and a.returned == b.returned
