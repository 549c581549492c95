"""Ground-truth emitter fields on a planar grid.

Cells are indexed row-major from the grid origin: cell ``r * cols + c`` sits
at row ``r``, column ``c``.  Emitters live on the ground plane (z = 0).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, InvalidConfigError, NonIdentifiableError


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    cell_size: float = 4.0
    origin: tuple[float, float] = (0.0, 0.0)
    sensor_altitude: float = 2.0

    def __post_init__(self):
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise InvalidConfigError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if not self.cell_size > 0:
            raise InvalidConfigError("cell_size must be positive")
        if not self.sensor_altitude > 0:
            raise InvalidConfigError("sensor_altitude must be positive")
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def index(self, row: int, col: int) -> int:
        return row * self.cols + col

    def row_col(self, cell: int) -> tuple[int, int]:
        return divmod(int(cell), self.cols)

    def cell_centers(self) -> np.ndarray:
        """Ground-plane centers, shape (n_cells, 3), z = 0."""
        r, c = np.divmod(np.arange(self.n_cells), self.cols)
        out = np.zeros((self.n_cells, 3))
        out[:, 0] = self.origin[0] + (r + 0.5) * self.cell_size
        out[:, 1] = self.origin[1] + (c + 0.5) * self.cell_size
        return out

    def extent(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) corners of the planar footprint."""
        lo = np.asarray(self.origin, dtype=float)
        hi = lo + np.array([self.rows, self.cols], dtype=float) * self.cell_size
        return lo, hi

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "cell_size": self.cell_size,
            "origin": list(self.origin),
            "sensor_altitude": self.sensor_altitude,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(
            rows=d["rows"],
            cols=d["cols"],
            cell_size=d.get("cell_size", 4.0),
            origin=tuple(d.get("origin", (0.0, 0.0))),
            sensor_altitude=d.get("sensor_altitude", 2.0),
        )


@dataclass(frozen=True, eq=False)
class EnvironmentMap:
    """Emission rates (counts/s) for every cell plus the target count k."""

    grid: GridSpec
    mu: np.ndarray
    k: int
    seed: Optional[int] = None
    identifiable: bool = field(init=False)

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        if mu.size != self.grid.n_cells:
            raise InvalidConfigError(f"mu has {mu.size} entries for a grid of {self.grid.n_cells} cells")
        if not np.all(np.isfinite(mu)) or np.any(mu < 0):
            raise InvalidConfigError("rates must be finite and nonnegative")
        if not 1 <= int(self.k) <= mu.size:
            raise InvalidConfigError(f"k={self.k} outside [1, {mu.size}]")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "identifiable", _is_identifiable(mu, self.k))

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    def sorted_rates(self) -> np.ndarray:
        return np.sort(self.mu)[::-1]

    @property
    def mu_k(self) -> float:
        """Smallest rate inside the top-k set."""
        return float(self.sorted_rates()[self.k - 1])

    @property
    def mu_k1(self) -> float:
        """Largest rate outside the top-k set (0 when k = |S|)."""
        s = self.sorted_rates()
        return float(s[self.k]) if self.k < s.size else 0.0

    @property
    def x_star(self) -> int:
        return int(np.argmax(self.mu))

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "mu": [float(v) for v in self.mu],
            "k": self.k,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentMap":
        return cls(GridSpec.from_dict(d["grid"]), np.asarray(d["mu"], dtype=float), d["k"], d.get("seed"))

    @classmethod
    def from_json(cls, text: str) -> "EnvironmentMap":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _is_identifiable(mu: np.ndarray, k: int) -> bool:
    if k >= mu.size:
        return True
    s = np.sort(mu)[::-1]
    return bool(s[k - 1] > s[k])


def build_random_env(seed: int, grid: GridSpec, k: int, source_rates: Sequence[float],
                     mu_bar: float) -> EnvironmentMap:
    """Place ``k`` sources uniformly at random over a Uniform[0, mu_bar] background."""
    source_rates = [float(r) for r in source_rates]
    n = grid.n_cells
    if k > n:
        raise InvalidConfigError(f"k={k} exceeds the {n} cells of the grid")
    if len(source_rates) != k:
        raise InvalidConfigError(f"need {k} source rates, got {len(source_rates)}")
    if min(source_rates) <= mu_bar and k < n:
        raise NonIdentifiableError(f"source rate {min(source_rates)} does not exceed mu_bar={mu_bar}")
    if mu_bar < 0:
        raise InvalidConfigError("mu_bar must be nonnegative")

    rng = np.random.default_rng(seed)
    cells = rng.permutation(n)[:k]
    mu = rng.uniform(0.0, mu_bar, size=n)
    mu[cells] = source_rates
    return EnvironmentMap(grid, mu, k, seed=int(seed))


def spread_rates(k: int, low: float = 800.0, high: float = 1000.0) -> list[float]:
    """k source rates spanning [low, high] evenly; a single source gets ``low``."""
    if k == 1:
        return [float(low)]
    return [float(v) for v in np.linspace(low, high, k)]


def true_top_k(env: EnvironmentMap) -> frozenset[int]:
    if not env.identifiable:
        raise NonIdentifiableError("tie at the k/(k+1) boundary")
    order = np.argsort(-env.mu, kind="stable")
    return frozenset(int(i) for i in order[: env.k])


def sample_counts(rng: np.random.Generator, rate: float, duration: float) -> int:
    """One Poisson(rate * duration) draw."""
    if rate < 0 or duration < 0:
        raise InvalidArgumentError(f"rate and duration must be nonnegative (got {rate}, {duration})")
    lam = rate * duration
    if lam == 0:
        return 0
    return int(rng.poisson(lam))


def sample_counts_many(rng: np.random.Generator, rates: Iterable[float], duration: float) -> np.ndarray:
    rates = np.asarray(rates, dtype=float)
    if np.any(rates < 0) or duration < 0:
        raise InvalidArgumentError("rates and duration must be nonnegative")
    return rng.poisson(rates * duration).astype(np.int64)
