import json
import math
import sys

import numpy as np
import pytest

from sourcecr.experiment import (
    METRICS,
    ConfigError,
    DatasetPool,
    ExperimentConfig,
    dump_config,
    load_config,
    parse_config_text,
    perturb_reliability,
    run_experiment,
)

SMALL = dict(n_nodes=80, avg_degree=6, n_claims=8, repetitions=2, budget=12, rounds=3)


@pytest.fixture(scope="module")
def pool():
    return DatasetPool()


def test_prior_offset_row_count(pool):
    cfg = ExperimentConfig(sweep="prior-offset", **SMALL)
    res = run_experiment(cfg, pool)
    assert len(res.rows) == 3 * 2 * len(METRICS)
    accuracy_rows = [r for r in res.rows if r[2] == "accuracy_of_credibility"]
    assert len(accuracy_rows) == 6


def test_repetition_averaging(pool):
    cfg = ExperimentConfig(sweep="reliability-offset", grid=(0.0, 0.5), **SMALL)
    res = run_experiment(cfg, pool)
    for v, a, m, mean, sd, n in res.rows:
        xs = [x for x in res.values(v, a, m) if not math.isnan(x)]
        assert n == len(xs)
        if xs:
            assert abs(mean - sum(xs) / len(xs)) <= 1e-12
            if len(xs) > 1:
                assert sd == pytest.approx(np.std(xs, ddof=1), abs=1e-12)


def test_reproducible_with_fresh_pools():
    cfg = ExperimentConfig(sweep="budget", grid=(6, 12), **{**SMALL, "repetitions": 1})
    assert run_experiment(cfg).rows == run_experiment(cfg).rows


def test_iterations_sweep(pool):
    cfg = ExperimentConfig(sweep="iterations", grid=(1, 2, 3), **SMALL)
    res = run_experiment(cfg, pool)
    assert res.config.effective_grid == (1, 2, 3)
    cr = [r for r in res.rows if r[1] == "CR-TRI" and r[2] == "source_detection_rate"]
    assert all(math.isnan(r[3]) and r[5] == 0 for r in cr)


def test_writes_outputs(tmp_path, pool):
    cfg = ExperimentConfig(sweep="budget", grid=(6, 12), out=str(tmp_path), **SMALL)
    run_experiment(cfg, pool)
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "sweep_value,algorithm,metric,mean,std,n"
    assert len(lines) == 1 + 2 * 2 * len(METRICS)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["sweep"] == "budget"


def test_plugin_slot(tmp_path, monkeypatch, pool):
    (tmp_path / "my_baseline.py").write_text(
        "def run(ds, cfg, value, seed):\n    return {'accuracy_of_credibility': 0.25}\n"
    )
    monkeypatch.syspath_prepend(str(tmp_path))
    cfg = ExperimentConfig(
        sweep="prior-offset", grid=(0.5,), algorithms=("TF-TRI",), tf_tri="my_baseline:run", **SMALL
    )
    res = run_experiment(cfg, pool)
    assert res.mean(0.5, "TF-TRI", "accuracy_of_credibility") == 0.25
    sys.modules.pop("my_baseline", None)


def test_perturb_reliability():
    rng = np.random.default_rng(0)
    base = {u: 0.5 for u in range(20_000)}
    noisy = perturb_reliability(base, 0.2, rng)
    gaps = np.array([abs(noisy[u] - 0.5) for u in base])
    assert gaps.mean() == pytest.approx(0.2, abs=0.01)
    assert perturb_reliability(base, 0.0, rng) == base
    assert all(0 <= v <= 1 for v in perturb_reliability({0: 0.95, 1: 0.02}, 0.5, rng).values())


def test_parse_config_text():
    text = """
    # comment line
    sweep = budget
    grid = 12, 24   # trailing comment
    tol-outer = 0.002
    warm_start = no
    prior_offset = none
    """
    vals = parse_config_text(text)
    assert vals == {"sweep": "budget", "grid": (12.0, 24.0), "tol_outer": 0.002, "warm_start": False, "prior_offset": None}


@pytest.mark.parametrize("text,match", [("nokey\n", "key = value"), ("colour = red\n", "unknown key"), ("seed = x\n", "bad value")])
def test_parse_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config_text(text)


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(sweep="budget", grid=(12, 24), algorithms=("SourceCR",), seed=7, tf_tri=None)
    p = tmp_path / "exp.conf"
    p.write_text(dump_config(cfg))
    back = load_config(p)
    assert back.effective_grid == (12, 24)
    assert back.algorithms == ("SourceCR",) and back.seed == 7
    assert load_config(p, seed=9).seed == 9


def test_validate_reports_everything():
    cfg = ExperimentConfig(sweep="budget", grid=(10, 12), algorithms=("X", "MVNA-SI"), repetitions=0)
    with pytest.raises(ConfigError) as exc:
        cfg.validate()
    msg = str(exc.value)
    for part in ("repetitions", "unknown algorithm", "mvna_si", "budget 10"):
        assert part in msg
    with pytest.raises(ConfigError, match="labels_path"):
        ExperimentConfig(opinions_path="x.csv").validate()
    with pytest.raises(ConfigError, match="sweep"):
        ExperimentConfig(sweep="nope").validate()
