import json

import pytest

from sourcecr.cli import main


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--nodes", "120", "--claims", "10", "--seed", "3", "--out", str(d)]) == 0
    return d


def test_simulate_outputs(data):
    for name in ("graph.edges", "opinions.csv", "labels.csv", "sources.csv", "spread.csv", "summary.json"):
        assert (data / name).exists()
    assert json.loads((data / "summary.json").read_text())["claims"] == 10


def test_train(data, tmp_path):
    rc = main(["train", "--opinions", str(data / "opinions.csv"), "--labels", str(data / "labels.csv"),
               "--prior-offset", "0.25", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "credibility.csv").read_text().startswith("claim_id,credibility")
    assert (tmp_path / "trace.csv").exists()


def test_detect_from_train_output(data, tmp_path):
    main(["train", "--opinions", str(data / "opinions.csv"), "--out", str(tmp_path)])
    rc = main(["detect", "--graph", str(data / "graph.edges"), "--opinions", str(data / "opinions.csv"),
               "--spread", str(data / "spread.csv"), "--credibility", str(tmp_path / "credibility.csv"),
               "--reliability", str(tmp_path / "reliability.csv"), "--labels", str(data / "labels.csv"),
               "--budget", "12", "--out", str(tmp_path)])
    assert rc == 0
    assert len((tmp_path / "detected.csv").read_text().splitlines()) == 11
    assert (tmp_path / "transcripts.csv").exists()


def _run(data, out, *extra):
    return main(["run", "--graph", str(data / "graph.edges"), "--opinions", str(data / "opinions.csv"),
                 "--spread", str(data / "spread.csv"), "--labels", str(data / "labels.csv"),
                 "--sources", str(data / "sources.csv"), "--budget", "12", "--seed", "5",
                 "--out", str(out), *extra])


def test_run_is_byte_identical(data, tmp_path):
    assert _run(data, tmp_path / "a") == 0
    assert _run(data, tmp_path / "b") == 0
    for name in ("claims.csv", "reliability.csv", "trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert 0 <= summary["source_detection_rate"] <= 1


def test_run_from_config(data, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(
        f"graph_path = {data / 'graph.edges'}\nopinions_path = {data / 'opinions.csv'}\n"
        f"spread_path = {data / 'spread.csv'}\nbudget = 12\nseed = 5\n"
    )
    assert main(["run", "--config", str(conf), "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "claims.csv").exists()


def test_bounds(capsys):
    assert main(["bounds", "--budget", "30", "--rounds", "3", "--json", "--k-max", "90"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["c2"] == 4.0
    assert main(["bounds", "--budget", "30"]) == 0
    assert "coverage lower" in capsys.readouterr().out


def test_experiment(tmp_path):
    conf = tmp_path / "exp.conf"
    conf.write_text("n_nodes = 60\nn_claims = 5\nbudget = 6\nrounds = 3\n")
    rc = main(["experiment", "--config", str(conf), "--sweep", "budget", "--grid", "6", "12",
               "--repetitions", "1", "--out", str(tmp_path / "o")])
    assert rc == 0
    assert (tmp_path / "o" / "sweep.csv").exists()


def test_bad_input_exit_code(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("sweep = sideways\n")
    assert main(["experiment", "--config", str(conf)]) == 2
    assert main(["bounds", "--budget", "31"]) == 2
