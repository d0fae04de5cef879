"""CSV readers and writers for opinions, labels and per-entity estimates."""

from __future__ import annotations

import csv
import os
from typing import Iterable, Mapping, Sequence

from .opinions import OpinionMatrix
from .spread import ClaimGroundTruth, NodeState, SpreadOutcome

OPINION_TOKENS = {"1": 1, "+1": 1, "-1": -1, "for": 1, "against": -1}
LABEL_TOKENS = {"true": 1, "false": -1}


class CSVFormatError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


def _rows(path, header: Sequence[str]):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None:
            return
        got = [h.strip().lower() for h in first]
        if got[: len(header)] != list(header):
            raise CSVFormatError(path, 1, f"expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise CSVFormatError(path, reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row[: len(header)]]


def _int(path, lineno, text, what):
    try:
        return int(text)
    except ValueError:
        raise CSVFormatError(path, lineno, f"bad {what} {text!r}") from None


def load_opinions_csv(path, users: Iterable[int] = ()) -> OpinionMatrix:
    """Read ``claim_id,user_id,opinion`` rows; ``for``/``against`` are accepted."""
    entries = {}
    for lineno, (c, u, x) in _rows(path, ("claim_id", "user_id", "opinion")):
        claim = _int(path, lineno, c, "claim id")
        user = _int(path, lineno, u, "user id")
        tok = x.lower()
        if tok not in OPINION_TOKENS:
            raise CSVFormatError(path, lineno, f"unknown opinion {x!r}")
        if (user, claim) in entries:
            raise CSVFormatError(path, lineno, f"duplicate opinion of user {user} on claim {claim}")
        entries[(user, claim)] = OPINION_TOKENS[tok]
    return OpinionMatrix(entries, users=users)


def write_opinions_csv(opinions: OpinionMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim_id", "user_id", "opinion"])
        for u, c, x in opinions.entries():
            w.writerow([c, u, x])


def load_claim_labels_csv(path) -> dict[int, int]:
    labels = {}
    for lineno, (c, lab) in _rows(path, ("claim_id", "label")):
        tok = lab.lower()
        if tok not in LABEL_TOKENS:
            raise CSVFormatError(path, lineno, f"unknown label {lab!r}")
        labels[_int(path, lineno, c, "claim id")] = LABEL_TOKENS[tok]
    return labels


def write_claim_labels_csv(labels: Mapping[int, int], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim_id", "label"])
        for c in sorted(labels):
            w.writerow([c, "true" if labels[c] == 1 else "false"])


def write_sources_csv(truths: Sequence[ClaimGroundTruth], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim_id", "pros_source", "cons_source"])
        for t in sorted(truths, key=lambda t: t.claim_id):
            w.writerow([t.claim_id, t.pros_source, t.cons_source])


def load_sources_csv(path, labels: Mapping[int, int] | None = None) -> list[ClaimGroundTruth]:
    """True sources; claims missing from ``labels`` get ``z = +1`` as a placeholder."""
    out = []
    for lineno, (c, p, n) in _rows(path, ("claim_id", "pros_source", "cons_source")):
        claim = _int(path, lineno, c, "claim id")
        z = 1 if labels is None else labels.get(claim, 1)
        out.append(ClaimGroundTruth(claim, z, _int(path, lineno, p, "node id"), _int(path, lineno, n, "node id")))
    return out


def write_spread_csv(outcomes: Sequence[SpreadOutcome], path) -> None:
    """One row per infected node: who infected it, when, and with which opinion."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["claim_id", "node", "opinion", "time", "parent"])
        for o in outcomes:
            for v in sorted(o.state):
                par = o.infect_parent[v]
                w.writerow([o.claim_id, v, int(o.state[v]), repr(o.infect_time[v]), "" if par is None else par])


def load_spread_csv(path) -> list[SpreadOutcome]:
    per_claim: dict[int, dict] = {}
    for lineno, (c, v, x, t, par) in _rows(path, ("claim_id", "node", "opinion", "time", "parent")):
        claim = _int(path, lineno, c, "claim id")
        node = _int(path, lineno, v, "node id")
        rec = per_claim.setdefault(claim, {"state": {}, "time": {}, "parent": {}, "src": {}})
        side = NodeState(_int(path, lineno, x, "opinion"))
        rec["state"][node] = side
        rec["time"][node] = float(t)
        rec["parent"][node] = None if par == "" else _int(path, lineno, par, "parent id")
        if par == "":
            if side in rec["src"]:
                raise CSVFormatError(path, lineno, f"claim {claim} has two {side.name.lower()} sources")
            rec["src"][side] = node
    out = []
    for claim in sorted(per_claim):
        rec = per_claim[claim]
        if set(rec["src"]) != {NodeState.PROS, NodeState.CONS}:
            raise ValueError(f"{path}: claim {claim} lacks a pros or cons source")
        out.append(
            SpreadOutcome(
                claim,
                rec["src"][NodeState.PROS],
                rec["src"][NodeState.CONS],
                rec["state"],
                rec["time"],
                rec["parent"],
            )
        )
    return out


def write_mapping_csv(values: Mapping[int, float], path, key: str, value: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([key, value])
        for k in sorted(values):
            w.writerow([k, repr(float(values[k]))])


def load_mapping_csv(path, key: str, value: str) -> dict[int, float]:
    out = {}
    for lineno, (k, v) in _rows(path, (key, value)):
        try:
            out[_int(path, lineno, k, key)] = float(v)
        except ValueError:
            raise CSVFormatError(path, lineno, f"bad {value} {v!r}") from None
    return out


def write_reliability_csv(eta_pos: Mapping[int, float], eta_neg: Mapping[int, float], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["user_id", "reliability", "eta_pos", "eta_neg"])
        for u in sorted(eta_pos):
            a, b = float(eta_pos[u]), float(eta_neg[u])
            w.writerow([u, repr((a + b) / 2.0), repr(a), repr(b)])


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)
