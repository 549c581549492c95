"""Experiment suites: config expansion, matched-seed trials, aggregation and plot data.

A suite config is a JSON object.  Scalar keys describe one experiment point;
``sweep`` maps any of ``mu_bar``, ``k``, ``mu_star``, ``extent`` or
``cell_size`` to a list of values, and the cartesian product of the sweep
lists defines the experiment points.  Every algorithm at a point sees the same
environment for a given trial index.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import InfoMaxConfig, RandomRestarts, run_infomax, run_naivesearch
from .complexity import complexity_terms, fit_speedup, predicted_ratio
from .core import Approximate, Exact, run_adasearch
from .env import EnvironmentMap, GridSpec, build_random_env, spread_rates
from .errors import InvalidConfigError, SourceSeekError
from .tracking import SearchSettings, model_from_spec

ALGORITHMS = ("adasearch", "naivesearch", "naivesearch-constant", "naivesearch-doubling", "infomax")
SWEEP_KEYS = ("mu_bar", "k", "mu_star", "extent", "cell_size")
_SETTING_KEYS = {f for f in SearchSettings.__dataclass_fields__}


@dataclass(frozen=True)
class TrialConfig:
    point_id: str
    point_index: int
    algorithm: str
    trial: int
    seed: int
    grid: dict
    k: int
    mu_star: float
    mu_bar: float
    source_rates: Optional[tuple] = None
    sensing: str = "pointwise"
    delta_total: float = 0.05
    epsilon: Optional[float] = None
    settings: dict = field(default_factory=dict)
    infomax: dict = field(default_factory=dict)

    def env_seed(self) -> int:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.point_index, self.trial))
        return int(ss.generate_state(1, dtype=np.uint32)[0])

    def build_env(self) -> EnvironmentMap:
        grid = GridSpec.from_dict(self.grid)
        rates = list(self.source_rates) if self.source_rates else (
            [self.mu_star] if self.k == 1 else spread_rates(self.k, self.mu_star, max(self.mu_star, 1000.0)))
        return build_random_env(self.env_seed(), grid, self.k, rates, self.mu_bar)

    def rule(self):
        return Exact() if self.epsilon is None else Approximate(self.epsilon)


def _point_label(point: dict) -> str:
    return ",".join(f"{k}={point[k]}" for k in sorted(point)) or "base"


def expand_config(cfg: dict, seed: Optional[int] = None, trials: Optional[int] = None) -> list[TrialConfig]:
    """Validate a suite config and expand it into per-trial configs."""
    if not isinstance(cfg, dict):
        raise InvalidConfigError("config must be a JSON object")
    unknown = set(cfg) - {"name", "seed", "trials", "grid", "k", "mu_star", "mu_bar", "source_rates", "algorithms",
                          "sensing", "delta_total", "alpha", "epsilon", "sweep", "settings", "infomax",
                          "tau_0", "growth", "max_rounds"}
    if unknown:
        raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    trials = int(cfg.get("trials", 1) if trials is None else trials)
    if trials < 1:
        raise InvalidConfigError("trials must be >= 1")
    algorithms = cfg.get("algorithms", ["adasearch"])
    for a in algorithms:
        if a not in ALGORITHMS:
            raise InvalidConfigError(f"unknown algorithm {a!r}")
    settings = dict(cfg.get("settings", {}))
    for key in ("alpha", "tau_0", "growth", "max_rounds"):
        if key in cfg:
            settings[key] = cfg[key]
    bad = set(settings) - _SETTING_KEYS
    if bad:
        raise InvalidConfigError(f"unknown settings: {sorted(bad)}")
    SearchSettings(**settings)
    sensing = cfg.get("sensing", "pointwise")
    model_from_spec(sensing)
    if "infomax" in algorithms and sensing == "pointwise":
        raise InvalidConfigError("infomax needs the physical sensing model")
    delta = float(cfg.get("delta_total", 0.05))
    if not 0 < delta < 1:
        raise InvalidConfigError("delta_total must lie in (0, 1)")
    eps = cfg.get("epsilon")
    if eps is not None and not eps > 0:
        raise InvalidConfigError("epsilon must be positive")

    sweep = cfg.get("sweep", {})
    bad = set(sweep) - set(SWEEP_KEYS)
    if bad:
        raise InvalidConfigError(f"cannot sweep over {sorted(bad)}")
    keys = sorted(sweep)
    points = [dict(zip(keys, vals)) for vals in itertools.product(*(sweep[k] for k in keys))] if keys else [{}]

    out = []
    for pi, point in enumerate(points):
        grid = dict(cfg.get("grid", {"rows": 16, "cols": 16}))
        if "cell_size" in point:
            grid["cell_size"] = point["cell_size"]
        if "extent" in point:
            grid["cell_size"] = float(point["extent"]) / grid["cols"]
        GridSpec.from_dict(grid)
        k = int(point.get("k", cfg.get("k", 1)))
        mu_star = float(point.get("mu_star", cfg.get("mu_star", 800.0)))
        mu_bar = float(point.get("mu_bar", cfg.get("mu_bar", 400.0)))
        rates = cfg.get("source_rates")
        label = _point_label(point)
        for alg in algorithms:
            for t in range(trials):
                out.append(TrialConfig(label, pi, alg, t, seed, grid, k, mu_star, mu_bar,
                                       tuple(rates) if rates else None, sensing if isinstance(sensing, str) else
                                       json.dumps(sensing), delta, eps, settings, dict(cfg.get("infomax", {}))))
    # fail fast on environments that cannot be built
    for tc in out:
        if tc.algorithm == algorithms[0] and tc.trial == 0:
            tc.build_env()
    return out


def _infomax_config(d: dict) -> InfoMaxConfig:
    d = dict(d)
    opt = d.pop("optimizer", {})
    return InfoMaxConfig(optimizer=RandomRestarts(**opt), **d)


def run_trial(tc: TrialConfig) -> dict:
    """Run one trial; never raises on algorithm failure (recorded as an abort)."""
    env = tc.build_env()
    sensing = json.loads(tc.sensing) if tc.sensing.startswith("{") else tc.sensing
    model = model_from_spec(sensing)
    settings = SearchSettings(**tc.settings)
    seed = tc.env_seed()
    t0 = time.perf_counter()
    try:
        if tc.algorithm == "adasearch":
            rep = run_adasearch(env, model, rule=tc.rule(), delta_total=tc.delta_total, seed=seed, settings=settings)
        elif tc.algorithm.startswith("naivesearch"):
            mode = "doubling" if tc.algorithm.endswith("doubling") else "constant"
            rep = run_naivesearch(env, model, mode, tc.delta_total, seed=seed, rule=tc.rule(), settings=settings)
        else:
            rep = run_infomax(env, model, _infomax_config(tc.infomax), tc.delta_total, seed=seed, rule=tc.rule(),
                              settings=settings)
        row = rep.summary_row()
        series = rep.series
        error = ""
    except SourceSeekError as exc:
        row = {"algorithm": tc.algorithm, "returned": "", "correct": 0, "eps_correct": 0, "terminated": 0,
               "rounds": 0, "sim_runtime": math.nan, "sample_time": math.nan, "source_error": math.nan,
               "grid_error": math.nan, "env_digest": env.digest()}
        series = []
        error = f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - t0
    row["algorithm"] = tc.algorithm
    base = {"point": tc.point_id, "point_index": tc.point_index, "mu_bar": tc.mu_bar, "k": tc.k,
            "cell_size": tc.grid.get("cell_size", 4.0), "trial": tc.trial, "seed": seed}
    try:
        cr = complexity_terms(env, settings.tau_0, delta_total=tc.delta_total)
        base.update(c_adapt=cr.c_adapt, c_unif=cr.c_unif, h_adapt_k=cr.h_adapt_k, h_unif_k=cr.h_unif_k)
    except SourceSeekError:
        base.update(c_adapt=math.nan, c_unif=math.nan, h_adapt_k=math.nan, h_unif_k=math.nan)
    base.update(row)
    base["error"] = error
    return {"row": base, "series": series, "wall": wall, "mu_star": tc.mu_star}


TRIAL_COLUMNS = ["point", "point_index", "mu_bar", "k", "cell_size", "algorithm", "trial", "seed", "returned",
                 "correct", "eps_correct", "terminated", "rounds", "sim_runtime", "sample_time", "source_error",
                 "grid_error", "c_adapt", "c_unif", "h_adapt_k", "h_unif_k", "env_digest", "error"]
AGG_METRICS = ["sim_runtime", "rounds", "sample_time", "source_error", "grid_error"]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, np.floating):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.get(h, "")) for h in header])


def _stats(vals) -> dict:
    a = np.asarray([v for v in vals if not (isinstance(v, float) and math.isnan(v))], dtype=float)
    if a.size == 0:
        return {"mean": math.nan, "std": math.nan, "min": math.nan, "max": math.nan}
    return {"mean": float(a.mean()), "std": float(a.std()), "min": float(a.min()), "max": float(a.max())}


def aggregate(rows: list[dict]) -> list[dict]:
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["point_index"], r["algorithm"]), []).append(r)
    out = []
    for (pi, alg), rs in sorted(groups.items()):
        agg = {"point": rs[0]["point"], "point_index": pi, "mu_bar": rs[0]["mu_bar"], "k": rs[0]["k"],
               "cell_size": rs[0]["cell_size"], "algorithm": alg, "n": len(rs),
               "correct_rate": float(np.mean([r["correct"] for r in rs])),
               "eps_correct_rate": float(np.mean([r["eps_correct"] for r in rs])),
               "aborted": sum(1 for r in rs if not r["terminated"])}
        for m in AGG_METRICS:
            for s, v in _stats([r[m] for r in rs]).items():
                agg[f"{m}_{s}"] = v
        out.append(agg)
    return out


def _check_matched(rows: list[dict]) -> None:
    seen: dict = {}
    for r in rows:
        key = (r["point_index"], r["trial"])
        if seen.setdefault(key, r["env_digest"]) != r["env_digest"]:
            raise SourceSeekError(f"algorithms saw different environments at {key}")


def run_suite(cfg: dict, out_dir, seed: Optional[int] = None, trials: Optional[int] = None,
              parallel: int = 1) -> dict:
    """Run every trial of a suite and write trials.csv, aggregate.csv, series.csv,
    envelopes.csv, ratio.csv and summary.json to ``out_dir``.  Wall-clock timings
    go to timing.json, the only output that varies between reruns."""
    tcs = expand_config(cfg, seed, trials)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if parallel > 1:
        with ProcessPoolExecutor(parallel) as ex:
            results = list(ex.map(run_trial, tcs, chunksize=1))
    else:
        results = [run_trial(tc) for tc in tcs]
    rows = [r["row"] for r in results]
    _check_matched(rows)
    order = sorted(range(len(rows)), key=lambda i: (rows[i]["point_index"], rows[i]["algorithm"], rows[i]["trial"]))
    rows = [rows[i] for i in order]
    results = [results[i] for i in order]
    _write_csv(out / "trials.csv", TRIAL_COLUMNS, rows)
    agg = aggregate(rows)
    agg_cols = list(agg[0].keys())
    _write_csv(out / "aggregate.csv", agg_cols, agg)
    series_rows = [{"point": r["row"]["point"], "algorithm": r["row"]["algorithm"], "trial": r["row"]["trial"],
                    "t": p[0], "source_error": p[1], "grid_error": p[2]} for r in results for p in r["series"]]
    _write_csv(out / "series.csv", ["point", "algorithm", "trial", "t", "source_error", "grid_error"], series_rows)
    mu_star = results[0]["mu_star"]
    plot_data(series_rows, rows, out, mu_star)
    summary = {"config": cfg, "seed": tcs[0].seed, "trials": max(tc.trial for tc in tcs) + 1,
               "n_trials": len(rows), "aborted": sum(1 for r in rows if not r["terminated"]), "aggregate": agg}
    with open(out / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, sort_keys=True, indent=2, default=_json_default)
        f.write("\n")
    timing = {"total_wall_s": time.perf_counter() - t0, "trial_wall_s": [r["wall"] for r in results]}
    with open(out / "timing.json", "w", encoding="utf-8") as f:
        json.dump(timing, f, indent=2)
    return summary


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def envelopes(series_rows: list[dict]) -> list[dict]:
    """Min / mean / max of each error metric over trials on the union of their time stamps."""
    if not series_rows:
        raise SourceSeekError("no time series to summarise")
    groups: dict = {}
    for r in series_rows:
        groups.setdefault((r["point"], r["algorithm"]), {}).setdefault(r["trial"], []).append(r)
    out = []
    for (point, alg), trials in sorted(groups.items()):
        curves = {tr: sorted(pts, key=lambda p: p["t"]) for tr, pts in trials.items()}
        grid = sorted({p["t"] for pts in curves.values() for p in pts})
        for t in grid:
            vals = {"source_error": [], "grid_error": []}
            for pts in curves.values():
                if not pts[0]["t"] <= t <= pts[-1]["t"]:
                    continue
                last = [p for p in pts if p["t"] <= t][-1]
                for m in vals:
                    vals[m].append(last[m])
            row = {"point": point, "algorithm": alg, "t": t, "n_active": len(vals["source_error"])}
            for m, v in vals.items():
                a = np.asarray(v, dtype=float)
                row[f"{m}_min"], row[f"{m}_mean"], row[f"{m}_max"] = float(a.min()), float(a.mean()), float(a.max())
            out.append(row)
    return out


def speedup_table(rows: list[dict], mu_star: float) -> list[dict]:
    """Per point: NaiveSearch / AdaSearch runtime ratio over matched trials, with reference curves."""
    ada = {(r["point_index"], r["trial"]): r for r in rows if r["algorithm"] == "adasearch"}
    out = []
    for naive_alg in ("naivesearch", "naivesearch-constant", "naivesearch-doubling"):
        per_point: dict = {}
        for r in rows:
            if r["algorithm"] != naive_alg or (r["point_index"], r["trial"]) not in ada:
                continue
            a = ada[(r["point_index"], r["trial"])]
            if a["sim_runtime"] > 0 and not math.isnan(r["sim_runtime"]):
                per_point.setdefault(r["point_index"], []).append((r, r["sim_runtime"] / a["sim_runtime"],
                                                                   r["sample_time"] / a["sample_time"]))
        for pi, items in sorted(per_point.items()):
            r0 = items[0][0]
            run = _stats([x[1] for x in items])
            samp = _stats([x[2] for x in items])
            mb = r0["mu_bar"]
            ok = 0 <= mb < mu_star
            out.append({"point": r0["point"], "mu_bar": mb, "baseline": naive_alg, "n": len(items),
                        "runtime_ratio_mean": run["mean"], "runtime_ratio_std": run["std"],
                        "sample_ratio_mean": samp["mean"], "sample_ratio_std": samp["std"],
                        "predicted": fit_speedup(mb, mu_star) if ok else math.nan,
                        "predicted_ratio": predicted_ratio(mb, mu_star) if ok else math.nan})
    return out


def plot_data(series_rows: list[dict], rows: list[dict], out_dir, mu_star: float = 800.0) -> None:
    out = Path(out_dir)
    env_rows = envelopes(series_rows)
    _write_csv(out / "envelopes.csv", list(env_rows[0].keys()), env_rows)
    ratio = speedup_table(rows, mu_star)
    cols = ["point", "mu_bar", "baseline", "n", "runtime_ratio_mean", "runtime_ratio_std", "sample_ratio_mean",
            "sample_ratio_std", "predicted", "predicted_ratio"]
    _write_csv(out / "ratio.csv", cols, ratio)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from exc
