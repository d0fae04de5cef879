import pytest

from sourcecr.graph import generate_random_graph
from sourcecr.io import (
    CSVFormatError,
    load_claim_labels_csv,
    load_mapping_csv,
    load_opinions_csv,
    load_sources_csv,
    load_spread_csv,
    write_claim_labels_csv,
    write_mapping_csv,
    write_opinions_csv,
    write_reliability_csv,
    write_sources_csv,
    write_spread_csv,
)
from sourcecr.spread import SpreadConfig, generate_dataset, labels_of


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_opinions_aliases(tmp_path):
    p = write(tmp_path, "o.csv", "claim_id,user_id,opinion\n1,5,for\n1,6,against\n")
    ops = load_opinions_csv(p)
    assert ops.nnz == 2
    assert ops[(5, 1)] == 1 and ops[(6, 1)] == -1


@pytest.mark.parametrize(
    "body,match",
    [
        ("claim_id,user_id,opinion\n1,5,1\n1,5,-1\n", "duplicate"),
        ("claim_id,user_id,opinion\n1,5,maybe\n", "unknown opinion"),
        ("claim_id,user_id,opinion\nx,5,1\n", "bad claim id"),
        ("claim,user,opinion\n1,5,1\n", "expected header"),
        ("claim_id,user_id,opinion\n1,5\n", "expected 3 fields"),
    ],
)
def test_opinions_errors(tmp_path, body, match):
    with pytest.raises(CSVFormatError, match=match):
        load_opinions_csv(write(tmp_path, "o.csv", body))


def test_labels(tmp_path):
    p = write(tmp_path, "l.csv", "claim_id,label\n1,True\n2,false\n")
    assert load_claim_labels_csv(p) == {1: 1, 2: -1}
    assert load_claim_labels_csv(write(tmp_path, "e.csv", "")) == {}
    with pytest.raises(CSVFormatError):
        load_claim_labels_csv(write(tmp_path, "b.csv", "claim_id,label\n1,yes\n"))


def test_round_trips(tmp_path):
    g = generate_random_graph(50, 4, 1)
    ops, truths, outs = generate_dataset(g, 5, 0.4, SpreadConfig(seed=1))
    write_opinions_csv(ops, tmp_path / "o.csv")
    assert load_opinions_csv(tmp_path / "o.csv", users=g.nodes) == ops
    labels = labels_of(truths)
    write_claim_labels_csv(labels, tmp_path / "l.csv")
    assert load_claim_labels_csv(tmp_path / "l.csv") == labels
    write_sources_csv(truths, tmp_path / "s.csv")
    assert load_sources_csv(tmp_path / "s.csv", labels) == truths
    write_spread_csv(outs, tmp_path / "sp.csv")
    assert load_spread_csv(tmp_path / "sp.csv") == outs
    vals = {3: 0.1, 1: 2 / 3}
    write_mapping_csv(vals, tmp_path / "m.csv", "claim_id", "credibility")
    assert load_mapping_csv(tmp_path / "m.csv", "claim_id", "credibility") == vals


def test_spread_needs_both_sources(tmp_path):
    p = write(tmp_path, "sp.csv", "claim_id,node,opinion,time,parent\n0,1,1,0.0,\n0,2,1,0.5,1\n")
    with pytest.raises(ValueError, match="source"):
        load_spread_csv(p)


def test_reliability_csv(tmp_path):
    write_reliability_csv({1: 0.8}, {1: 0.4}, tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines() == [
        "user_id,reliability,eta_pos,eta_neg",
        "1,0.6000000000000001,0.8,0.4",
    ]
