"""Serpentine raster paths and per-round dwell schedules."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Collection, Optional

import numpy as np

from .env import GridSpec
from .errors import InvalidArgumentError
from .sensing import SensingConfig


@dataclass(frozen=True, eq=False)
class RasterPath:
    grid: GridSpec
    cells: tuple[int, ...]
    configs: tuple[SensingConfig, ...]

    def __len__(self) -> int:
        return len(self.cells)

    def positions(self) -> np.ndarray:
        return np.array([z.position for z in self.configs])


@dataclass(frozen=True, eq=False)
class DwellSchedule:
    dwell: np.ndarray          # seconds per path step
    round_i: int
    total_time: float
    naive_time: float          # tau_i * |S|, for comparison


def raster_path(grid: GridSpec) -> RasterPath:
    """Row 0 left to right, row 1 right to left, and so on."""
    cells = []
    for r in range(grid.rows):
        cols = range(grid.cols) if r % 2 == 0 else range(grid.cols - 1, -1, -1)
        cells.extend(grid.index(r, c) for c in cols)
    centers = grid.cell_centers()
    configs = []
    for cell in cells:
        p = centers[cell].copy()
        p[2] = grid.sensor_altitude
        configs.append(SensingConfig(p, cell))
    return RasterPath(grid, tuple(cells), tuple(configs))


def round_schedule(path: RasterPath, candidates: Collection[int], tau_0: float, tau_i: float,
                   round_i: int = 0) -> DwellSchedule:
    if not tau_0 > 0:
        raise InvalidArgumentError("tau_0 must be positive")
    if tau_i < tau_0:
        raise InvalidArgumentError(f"tau_i={tau_i} below tau_0={tau_0}")
    cand = set(int(c) for c in candidates)
    if not cand.issubset(path.cells):
        raise InvalidArgumentError("candidate cells outside the path")
    dwell = np.array([tau_i if c in cand else tau_0 for c in path.cells], dtype=float)
    n = len(path)
    total = tau_i * len(cand) + tau_0 * (n - len(cand))
    return DwellSchedule(dwell, round_i, float(total), float(tau_i * n))


def export_path_csv(path: RasterPath, out, dwell: Optional[np.ndarray] = None) -> None:
    """Write (step, cell, x, y, z, dwell) rows to a file path or an open text stream."""
    if hasattr(out, "write"):
        _write_path(path, out, dwell)
        return
    with open(out, "w", newline="", encoding="utf-8") as f:
        _write_path(path, f, dwell)


def _write_path(path: RasterPath, f, dwell) -> None:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["step", "cell", "x", "y", "z", "dwell"])
    for step, (cell, z) in enumerate(zip(path.cells, path.configs)):
        d = "" if dwell is None else repr(float(dwell[step]))
        x, y, h = (repr(float(v)) for v in z.position)
        w.writerow([step, cell, x, y, h, d])
