"""Evaluation measures: error of reliability, accuracy of credibility and
source detection rate, plus the ground-truth reliability they compare to."""

from __future__ import annotations

import logging
from typing import Mapping, Sequence

import numpy as np

from .opinions import OpinionMatrix
from .querying import DetectionResult
from .spread import ClaimGroundTruth

log = logging.getLogger(__name__)


def ground_truth_reliability(opinions: OpinionMatrix, labels: Mapping[int, int]) -> dict[int, float]:
    """Share of each user's opinions that agree with the claim label.

    Users without opinions are left out.
    """
    hits: dict[int, int] = {}
    total: dict[int, int] = {}
    for u, c, x in opinions.entries():
        if c not in labels:
            raise KeyError(f"claim {c} has no label")
        total[u] = total.get(u, 0) + 1
        hits[u] = hits.get(u, 0) + (x == labels[c])
    return {u: hits[u] / total[u] for u in sorted(total)}


def error_of_reliability(estimated: Mapping[int, float], truth: Mapping[int, float]) -> float:
    shared = estimated.keys() & truth.keys()
    if not shared:
        raise ValueError("no users shared between estimate and truth")
    if len(shared) != len(estimated) or len(shared) != len(truth):
        log.debug(
            "reliability maps differ: %d estimated, %d true, %d shared",
            len(estimated), len(truth), len(shared),
        )
    return float(np.mean([abs(estimated[u] - truth[u]) for u in sorted(shared)]))


def accuracy_of_credibility(verdicts: Mapping[int, int], labels: Mapping[int, int]) -> float:
    shared = verdicts.keys() & labels.keys()
    if not shared:
        raise ValueError("no claims shared between verdicts and labels")
    return sum(verdicts[c] == labels[c] for c in shared) / len(shared)


def source_detection_rate(
    results: Sequence[DetectionResult] | Mapping[int, DetectionResult],
    truths: Sequence[ClaimGroundTruth],
) -> float:
    """Fraction of (claim, side) true sources recovered; undetected sides miss."""
    if not isinstance(results, Mapping):
        results = {r.claim_id: r for r in results}
    truths = [t for t in truths if t.claim_id in results]
    if not truths:
        raise ValueError("no claims shared between detections and ground truth")
    hits = 0
    for t in truths:
        res = results[t.claim_id]
        hits += res.pros_source == t.pros_source
        hits += res.cons_source == t.cons_source
    return hits / (2 * len(truths))
