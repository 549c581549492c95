import numpy as np
import pytest

from sourceseek.env import EnvironmentMap, GridSpec
from sourceseek.errors import InvalidArgumentError, SingularGeometryError
from sourceseek.planner import raster_path
from sourceseek.sensing import (InverseSquare, Pointwise, SensingConfig, aggregate_rate, observe, sensitivity,
                                sensitivity_matrix)


def test_pointwise_indicator():
    g = GridSpec(2, 2)
    z = SensingConfig.above(g, 3)
    assert sensitivity(Pointwise(), g, 3, z) == 1.0
    assert sensitivity(Pointwise(), g, 0, z) == 0.0


def test_inverse_square_hand_value():
    g = GridSpec(1, 1, cell_size=2.0, origin=(-1.0, -1.0))   # single center at the origin
    z = SensingConfig([0.0, 0.0, 2.0], 0)
    assert sensitivity(InverseSquare(1.0), g, 0, z) == pytest.approx(0.25)


def test_zero_distance_is_singular():
    g = GridSpec(1, 1, cell_size=2.0, origin=(-1.0, -1.0))
    with pytest.raises(SingularGeometryError):
        sensitivity(InverseSquare(), g, 0, SensingConfig([0.0, 0.0, 0.0], 0))
    with pytest.raises(InvalidArgumentError):
        InverseSquare(0.0)


def test_aggregate_rate_two_emitters():
    # centers at (0.5, 0.5) and (0.5, 1.5); a sensor at (0.5, -0.5) is 1 m and 2 m away
    g = GridSpec(1, 2, cell_size=1.0)
    env = EnvironmentMap(g, [3.0, 5.0], 1)
    z = SensingConfig([0.5, -0.5, 0.0], 0)
    assert aggregate_rate(env, InverseSquare(1.0), z) == pytest.approx(3 / 1 + 5 / 4)


def test_aggregate_rate_pointwise_and_zero_env():
    g = GridSpec(2, 2)
    env = EnvironmentMap(g, [1.0, 2.0, 3.0, 4.0], 1)
    assert aggregate_rate(env, Pointwise(), SensingConfig.above(g, 2)) == 3.0
    zero = EnvironmentMap(g, np.zeros(4), 4)
    assert aggregate_rate(zero, InverseSquare(), SensingConfig.above(g, 0)) == 0.0
    rng = np.random.default_rng(0)
    assert all(observe(rng, zero, InverseSquare(), SensingConfig.above(g, 1), 5.0).count == 0 for _ in range(50))


def test_observe_mean():
    g = GridSpec(1, 1)
    env = EnvironmentMap(g, [50.0], 1)
    rng = np.random.default_rng(5)
    z = SensingConfig.above(g, 0)
    counts = np.array([observe(rng, env, Pointwise(), z, 2.0).count for _ in range(20_000)])
    assert abs(counts.mean() - 100) < 4 * np.sqrt(100 / 20_000)
    with pytest.raises(InvalidArgumentError):
        observe(rng, env, Pointwise(), z, 0.0)


def test_sensitivity_matrix_cases():
    g = GridSpec(2, 2)
    path = raster_path(g)
    configs = [SensingConfig.above(g, c) for c in range(4)]
    rep = sensitivity_matrix(g, configs, Pointwise())
    assert np.array_equal(rep.H, np.eye(4))
    assert rep.rank == 4 and not rep.rank_deficient
    one = sensitivity_matrix(GridSpec(1, 2), [SensingConfig.above(GridSpec(1, 2), 0)], InverseSquare())
    assert one.rank == 1 and one.rank_deficient
    phys = sensitivity_matrix(g, list(path.configs), InverseSquare())
    # [DERIVED] rank by SVD
    sv = np.linalg.svd(phys.H, compute_uv=False)
    assert phys.rank == int(np.sum(sv > sv[0] * 1e-12)) == 4
    assert np.isfinite(phys.condition)


@pytest.mark.parametrize("model", [Pointwise(), InverseSquare()])
def test_raster_coverage_full_rank_16(model):
    g = GridSpec(16, 16)
    rep = sensitivity_matrix(g, list(raster_path(g).configs), model)
    assert np.all(rep.H >= 0)
    assert np.all(rep.H.sum(axis=1) > 0)
    assert rep.rank == 256


def test_sensitivity_csv(tmp_path):
    g = GridSpec(1, 2)
    rep = sensitivity_matrix(g, list(raster_path(g).configs), InverseSquare())
    rep.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "cell,z0,z1" and len(lines) == 3
