"""Top-k ranking evaluation: F1@k and NDCG@k with binary relevance.

The metric kernels are deliberately plain Python loops over the (short)
recommendation list, mirroring their definitions term by term; ranking is
vectorized. Relevance is binary (implicit feedback), DCG gain is
``1 / log2(rank + 1)`` with 1-based ranks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cf import user_score_row
from .types import CfModel, InteractionSet

__all__ = [
    "KMetrics",
    "MetricsReport",
    "DEFAULT_KS",
    "top_k_from_scores",
    "rank_top_k",
    "f1_at_k",
    "ndcg_at_k",
    "evaluate",
    "aggregate_runs",
    "format_report_text",
    "report_to_dict",
    "report_from_dict",
    "save_report",
    "load_report",
]

DEFAULT_KS = (2, 5, 10, 15, 20)
SELECTION_K = 10  # run/epoch selection always keys on F1 at this cutoff


@dataclass(frozen=True)
class KMetrics:
    f1: float
    ndcg: float


@dataclass(frozen=True)
class MetricsReport:
    """F1/NDCG per cutoff for one evaluation pass (or an aggregate of passes)."""

    per_k: dict[int, KMetrics]
    num_users_evaluated: int
    run_id: int = 0

    def __post_init__(self):
        for k, m in self.per_k.items():
            if not (0.0 <= m.f1 <= 1.0 and 0.0 <= m.ndcg <= 1.0):
                raise ValueError(f"metric values at k={k} outside [0, 1]")

    def f1_at(self, k: int) -> float:
        return self.per_k[k].f1


def top_k_from_scores(scores, k: int, exclude=()) -> list[int]:
    """Indices of the k highest scores, ties broken by ascending index.

    Excluded indices never appear; if fewer than k candidates remain, all of
    them are returned.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    if exclude:
        excluded = set(int(i) for i in exclude)
        order = [int(i) for i in order if int(i) not in excluded]
    else:
        order = [int(i) for i in order]
    return order[:k]


def rank_top_k(model: CfModel, user: int, k: int, exclude=()) -> list[int]:
    """The user's top-k items by predicted score, excluding the given items."""
    return top_k_from_scores(user_score_row(model, user), k, exclude)


def f1_at_k(recommended, relevant, k: int) -> float:
    """Harmonic mean of precision@k and recall: 0.0 when nothing was hit."""
    if not relevant:
        raise ValueError("relevant set must be nonempty; skip such users upstream")
    if len(recommended) > k:
        raise ValueError(f"recommended list longer than k={k}")
    relevant = set(relevant)
    hits = 0
    for item in recommended:
        if item in relevant:
            hits += 1
    if hits == 0:
        return 0.0
    precision = hits / k
    recall = hits / len(relevant)
    return 2.0 * precision * recall / (precision + recall)


def ndcg_at_k(recommended, relevant, k: int) -> float:
    """Position-discounted hit quality normalized by the ideal ranking."""
    if not relevant:
        raise ValueError("relevant set must be nonempty; skip such users upstream")
    if len(recommended) > k:
        raise ValueError(f"recommended list longer than k={k}")
    relevant = set(relevant)
    dcg = 0.0
    for rank, item in enumerate(recommended, start=1):
        if item in relevant:
            dcg += 1.0 / math.log2(rank + 1)
    ideal = 0.0
    for rank in range(1, min(k, len(relevant)) + 1):
        ideal += 1.0 / math.log2(rank + 1)
    return dcg / ideal


def evaluate(model: CfModel, test: InteractionSet, train: InteractionSet,
             ks=DEFAULT_KS, run_id: int = 0) -> MetricsReport:
    """Mean per-user F1@k and NDCG@k over users holding test positives.

    Train positives are excluded from each user's candidate ranking; users
    without test positives are skipped.
    """
    if (test.num_users, test.num_items) != (train.num_users, train.num_items):
        raise ValueError("test and train must cover the same entity counts")
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks or ks[0] < 1:
        raise ValueError("ks must be a nonempty list of cutoffs >= 1")
    k_max = ks[-1]
    f1_sums = {k: 0.0 for k in ks}
    ndcg_sums = {k: 0.0 for k in ks}
    evaluated = 0
    for user in range(test.num_users):
        relevant = set(test.items_of(user).tolist())
        if not relevant:
            continue
        ranked = rank_top_k(model, user, k_max, exclude=train.items_of(user).tolist())
        for k in ks:
            f1_sums[k] += f1_at_k(ranked[:k], relevant, k)
            ndcg_sums[k] += ndcg_at_k(ranked[:k], relevant, k)
        evaluated += 1
    if evaluated == 0:
        raise ValueError("no user has test positives; nothing to evaluate")
    per_k = {k: KMetrics(f1_sums[k] / evaluated, ndcg_sums[k] / evaluated) for k in ks}
    return MetricsReport(per_k=per_k, num_users_evaluated=evaluated, run_id=run_id)


def aggregate_runs(reports, top_m: int) -> MetricsReport:
    """Element-wise mean of the ``top_m`` reports ranked by F1@10.

    Ties keep the input order (stable), so aggregation is deterministic.
    """
    reports = list(reports)
    if top_m < 1 or len(reports) < top_m:
        raise ValueError(f"need at least top_m={top_m} reports, got {len(reports)}")
    for report in reports:
        if SELECTION_K not in report.per_k:
            raise ValueError(f"reports must include k={SELECTION_K} for run selection")
    ks = set(reports[0].per_k)
    if any(set(r.per_k) != ks for r in reports):
        raise ValueError("all reports must share the same k list")
    chosen = sorted(reports, key=lambda r: -r.per_k[SELECTION_K].f1)[:top_m]
    per_k = {
        k: KMetrics(
            f1=sum(r.per_k[k].f1 for r in chosen) / top_m,
            ndcg=sum(r.per_k[k].ndcg for r in chosen) / top_m,
        )
        for k in sorted(ks)
    }
    users = round(sum(r.num_users_evaluated for r in chosen) / top_m)
    return MetricsReport(per_k=per_k, num_users_evaluated=users, run_id=-1)


def format_report_text(report: MetricsReport) -> str:
    """Flat key-value rendering, one metric per line."""
    lines = [
        f"run_id {report.run_id}",
        f"users_evaluated {report.num_users_evaluated}",
    ]
    for k in sorted(report.per_k):
        lines.append(f"f1@{k} {report.per_k[k].f1:.6f}")
    for k in sorted(report.per_k):
        lines.append(f"ndcg@{k} {report.per_k[k].ndcg:.6f}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "run_id": report.run_id,
        "num_users_evaluated": report.num_users_evaluated,
        "per_k": {
            str(k): {"f1": report.per_k[k].f1, "ndcg": report.per_k[k].ndcg}
            for k in sorted(report.per_k)
        },
    }


def report_from_dict(data: dict) -> MetricsReport:
    per_k = {
        int(k): KMetrics(float(v["f1"]), float(v["ndcg"]))
        for k, v in data["per_k"].items()
    }
    return MetricsReport(
        per_k=per_k,
        num_users_evaluated=int(data["num_users_evaluated"]),
        run_id=int(data["run_id"]),
    )


def save_report(report: MetricsReport, text_path=None, json_path=None):
    if text_path is not None:
        Path(text_path).write_text(format_report_text(report), encoding="utf-8")
    if json_path is not None:
        with Path(json_path).open("w", encoding="utf-8") as fh:
            json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_report(json_path) -> MetricsReport:
    with Path(json_path).open("r", encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))
