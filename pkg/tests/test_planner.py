import numpy as np
import pytest

from sourceseek.env import GridSpec
from sourceseek.errors import InvalidArgumentError
from sourceseek.planner import export_path_csv, raster_path, round_schedule


def test_single_cell_path():
    assert raster_path(GridSpec(1, 1)).cells == (0,)


def test_serpentine_2x2():
    g = GridSpec(2, 2)
    p = raster_path(g)
    assert [g.row_col(c) for c in p.cells] == [(0, 0), (0, 1), (1, 1), (1, 0)]


def test_6x6_adjacency_and_altitude():
    g = GridSpec(6, 6)
    p = raster_path(g)
    assert len(p) == 36 and sorted(p.cells) == list(range(36))
    rc = np.array([g.row_col(c) for c in p.cells])
    assert np.all(np.abs(np.diff(rc, axis=0)).sum(axis=1) == 1)
    assert np.all(p.positions()[:, 2] == g.sensor_altitude)


def test_round_schedule_totals():
    p = raster_path(GridSpec(2, 2))
    s = round_schedule(p, [0, 3], 1.0, 2.0)
    assert s.total_time == 6.0
    assert s.naive_time == 8.0
    assert s.dwell.sum() == pytest.approx(s.total_time)
    assert round_schedule(p, range(4), 1.0, 4.0).total_time == 16.0
    assert round_schedule(p, [], 1.0, 4.0).total_time == 4.0


def test_schedule_dwell_placement():
    p = raster_path(GridSpec(2, 3))
    s = round_schedule(p, [4], 0.5, 8.0)
    for cell, d in zip(p.cells, s.dwell):
        assert d == (8.0 if cell == 4 else 0.5)
    assert s.total_time <= s.naive_time


def test_schedule_errors():
    p = raster_path(GridSpec(2, 2))
    with pytest.raises(InvalidArgumentError):
        round_schedule(p, [0], 2.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        round_schedule(p, [9], 1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        round_schedule(p, [0], 0.0, 1.0)


def test_export_csv(tmp_path):
    p = raster_path(GridSpec(2, 2))
    out = tmp_path / "path.csv"
    export_path_csv(p, out, dwell=np.array([1.0, 2.0, 1.0, 1.0]))
    lines = out.read_text().splitlines()
    assert lines[0] == "step,cell,x,y,z,dwell"
    assert lines[2].split(",")[1] == "1" and lines[2].endswith(",2.0")
