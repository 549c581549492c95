import csv
import json

import pytest

from sourceseek import cli
from sourceseek.errors import SourceSeekError
from sourceseek.harness import envelopes, expand_config, run_suite

BASE = {"seed": 5, "trials": 2, "grid": {"rows": 4, "cols": 4}, "tau_0": 0.01,
        "algorithms": ["adasearch", "naivesearch-doubling"], "sweep": {"mu_bar": [300, 600]}}


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_expand_counts_and_matching():
    tcs = expand_config(BASE)
    assert len(tcs) == 2 * 2 * 2
    envs = {(tc.point_index, tc.trial, tc.algorithm): tc.build_env().digest() for tc in tcs}
    for (pi, t, alg), d in envs.items():
        assert d == envs[(pi, t, "adasearch")]


def test_paper_sweep_shape():
    cfg = dict(BASE, trials=25, algorithms=["adasearch", "naivesearch", "infomax"], sensing="physical",
               grid={"rows": 16, "cols": 16}, sweep={"mu_bar": [300, 400, 500, 600]})
    assert len(expand_config(cfg)) == 300


def test_k_and_extent_sweeps():
    cfg = dict(BASE, sweep={"k": [2, 5, 10]}, grid={"rows": 16, "cols": 16})
    tcs = expand_config(cfg)
    env = [tc for tc in tcs if tc.k == 5][0].build_env()
    assert sorted(env.mu)[-5:] == pytest.approx([800, 850, 900, 950, 1000])
    cfg = dict(BASE, sweep={"extent": [64, 128, 256]}, grid={"rows": 16, "cols": 16})
    sizes = sorted({tc.grid["cell_size"] for tc in expand_config(cfg)})
    assert sizes == [4.0, 8.0, 16.0]


@pytest.mark.parametrize("bad", [
    {"bogus": 1},
    {"algorithms": ["teleport"]},
    {"delta_total": 1.5},
    {"sweep": {"colour": [1]}},
    {"algorithms": ["infomax"], "sensing": "pointwise"},
    {"sweep": {"mu_bar": [900]}},
    {"settings": {"warp": 9}},
])
def test_config_errors(bad):
    # non-identifiable environments raise a sibling ValueError subclass
    with pytest.raises(ValueError):
        expand_config(dict(BASE, **bad))


def test_suite_outputs_and_determinism(tmp_path):
    run_suite(BASE, tmp_path / "a")
    run_suite(BASE, tmp_path / "b")
    for name in ("trials.csv", "aggregate.csv", "series.csv", "envelopes.csv", "ratio.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = _rows(tmp_path / "a" / "trials.csv")
    assert len(rows) == 8
    agg = _rows(tmp_path / "a" / "aggregate.csv")
    assert len(agg) == 4 and {"sim_runtime_mean", "rounds_max", "grid_error_std"} <= set(agg[0])
    ratio = _rows(tmp_path / "a" / "ratio.csv")
    assert float(ratio[0]["predicted"]) == pytest.approx(0.7 * 800 / 500)
    assert float(ratio[0]["predicted_ratio"]) == pytest.approx(1 - 300 / 800)


def test_aborts_are_recorded(tmp_path):
    cfg = dict(BASE, trials=1, algorithms=["adasearch"], max_rounds=1, sweep={"mu_bar": [790]})
    summary = run_suite(cfg, tmp_path)
    assert summary["aborted"] == 1


def test_envelope_single_trial_is_the_line():
    series = [{"point": "p", "algorithm": "a", "trial": 0, "t": t, "source_error": e, "grid_error": 2 * e}
              for t, e in ((1.0, 5.0), (2.0, 3.0))]
    env = envelopes(series)
    assert [r["source_error_min"] for r in env] == [r["source_error_max"] for r in env] == [5.0, 3.0]
    with pytest.raises(SourceSeekError):
        envelopes([])


def test_cli_simulate_theory_path(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(BASE))
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--trials", "1"]) == 0
    assert len(_rows(tmp_path / "o" / "trials.csv")) == 4
    capsys.readouterr()
    assert cli.main(["theory", "--config", str(cfg)]) == 0
    reports = json.loads(capsys.readouterr().out)
    assert len(reports) == 2 and reports[0]["c_adapt"] <= reports[0]["c_unif"]
    assert cli.main(["path", "--grid", "2x3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "step,cell,x,y,z,dwell" and len(out) == 7


def test_cli_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert cli.main(["simulate", "--config", str(cfg)]) != 0
    assert "error" in capsys.readouterr().err
