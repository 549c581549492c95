import numpy as np
import pytest

from sourceseek import confidence, oracle


def test_dense_solve_identity():
    mu, sig = oracle.dense_solve(np.eye(3), [1.0, 2.0, 3.0])
    assert mu == pytest.approx([1, 2, 3]) and sig == pytest.approx([1, 1, 1])


def test_dense_solve_rank_deficient():
    rows = np.array([[1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(np.linalg.LinAlgError):
        oracle.dense_solve(rows, [1.0, 2.0])
    mu, _ = oracle.dense_solve(rows, [1.0, 2.0], ridge=1e-3)
    assert np.all(np.isfinite(mu))


def test_naive_elim_noops():
    assert oracle.naive_elim({}, 2, {5}) == ({5}, set())
    same = {x: (1.0, 4.0) for x in range(5)}
    assert oracle.naive_elim(same, 2, set()) == (set(), set(range(5)))


def test_mc_coverage_small_and_large_delta():
    r = oracle.mc_coverage(50.0, 0.05, 100_000, seed=1)
    assert r["upper"] <= 0.05 + 3 * r["upper_sigma"]
    assert r["lower"] <= 0.05 + 3 * r["lower_sigma"]
    r = oracle.mc_coverage(50.0, 0.5, 100_000, seed=2)
    assert r["upper"] <= 0.5 + 3 * r["upper_sigma"]


def test_mc_coverage_zero_mean():
    r = oracle.mc_coverage(0.0, 0.1, 10_000)
    assert r["lower"] == 0.0


def test_mc_coverage_builtin_matches_production_forms():
    bounds = {"u_plus": confidence.u_plus, "u_minus": confidence.u_minus,
              "ubar_plus": confidence.ubar_plus, "ubar_minus": confidence.ubar_minus}
    a = oracle.mc_coverage(5.0, 0.1, 20_000, seed=3)
    b = oracle.mc_coverage(5.0, 0.1, 20_000, seed=3, bounds=bounds)
    assert a == b


def test_mc_coverage_min_draws():
    with pytest.raises(ValueError):
        oracle.mc_coverage(1.0, 0.1, 100)
