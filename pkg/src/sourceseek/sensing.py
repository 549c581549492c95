"""Sensitivity models and measurement generation."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .env import EnvironmentMap, GridSpec, sample_counts
from .errors import InvalidArgumentError, SingularGeometryError


@dataclass(frozen=True, eq=False)
class SensingConfig:
    """A sensor pose: a 3-D position plus the grid cell directly below it."""

    position: np.ndarray
    cell_index: int

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        p.setflags(write=False)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "cell_index", int(self.cell_index))

    @classmethod
    def above(cls, grid: GridSpec, cell: int, altitude: Optional[float] = None) -> "SensingConfig":
        pos = grid.cell_centers()[cell].copy()
        pos[2] = grid.sensor_altitude if altitude is None else altitude
        return cls(pos, cell)


@dataclass(frozen=True)
class Pointwise:
    """Indicator sensitivity: a configuration only sees the cell it sits over."""

    def weights(self, grid: GridSpec, z: SensingConfig) -> np.ndarray:
        w = np.zeros(grid.n_cells)
        w[z.cell_index] = 1.0
        return w


@dataclass(frozen=True)
class InverseSquare:
    """h(x, z) = c / |x - z|^2 with emitters on the ground plane."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidArgumentError("inverse-square constant must be positive")

    def weights_at(self, grid: GridSpec, positions: np.ndarray) -> np.ndarray:
        """Sensitivities for many positions at once, shape (n_positions, n_cells)."""
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        d2 = ((positions[:, None, :] - grid.cell_centers()[None, :, :]) ** 2).sum(axis=-1)
        if np.any(d2 <= 0):
            raise SingularGeometryError("sensor coincides with an emitter")
        return self.c / d2

    def weights(self, grid: GridSpec, z: SensingConfig) -> np.ndarray:
        return self.weights_at(grid, z.position[None, :])[0]


SensitivityModel = Union[Pointwise, InverseSquare]


@dataclass(frozen=True)
class MeasurementRecord:
    config: SensingConfig
    duration: float
    count: int
    round: int = 0
    time_stamp: float = 0.0


def _grid_of(obj) -> GridSpec:
    return obj.grid if isinstance(obj, EnvironmentMap) else obj


def sensitivity(model: SensitivityModel, grid: GridSpec, x: int, z: SensingConfig) -> float:
    if not 0 <= x < grid.n_cells:
        raise InvalidArgumentError(f"cell {x} outside grid")
    if isinstance(model, Pointwise):
        return 1.0 if z.cell_index == x else 0.0
    d2 = float(((grid.cell_centers()[x] - z.position) ** 2).sum())
    if d2 <= 0:
        raise SingularGeometryError(f"sensor sits on emitter {x}")
    return model.c / d2


def aggregate_rate(env: EnvironmentMap, model: SensitivityModel, z: SensingConfig) -> float:
    """Expected counts per second at ``z``: sum over cells of h(x, z) mu(x)."""
    return float(model.weights(env.grid, z) @ env.mu)


def observe(rng: np.random.Generator, env: EnvironmentMap, model: SensitivityModel, z: SensingConfig,
            duration: float, round_i: int = 0, time_stamp: float = 0.0) -> MeasurementRecord:
    if not duration > 0:
        raise InvalidArgumentError("measurement duration must be positive")
    count = sample_counts(rng, aggregate_rate(env, model, z), duration)
    return MeasurementRecord(z, float(duration), count, round_i, float(time_stamp))


@dataclass(frozen=True, eq=False)
class SensitivityReport:
    H: np.ndarray
    rank: int
    condition: float

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.H.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["cell"] + [f"z{j}" for j in range(self.H.shape[1])])
            for i, row in enumerate(self.H):
                w.writerow([i] + [repr(float(v)) for v in row])


def sensitivity_matrix(grid_or_env, configs: Sequence[SensingConfig], model: SensitivityModel) -> SensitivityReport:
    """H[i, j] = h(x_i, z_j), with the rank and condition number of H H^T."""
    if len(configs) == 0:
        raise InvalidArgumentError("need at least one sensing configuration")
    grid = _grid_of(grid_or_env)
    H = np.column_stack([model.weights(grid, z) for z in configs])
    gram = H @ H.T
    rank = int(np.linalg.matrix_rank(H))
    cond = float(np.linalg.cond(gram)) if rank == grid.n_cells else float("inf")
    return SensitivityReport(H, rank, cond)
