"""Metrics, seed aggregation, and the cross-L1 evaluation matrix."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EVAL_SEEDS = tuple(range(1, 135, 7))  # 1, 8, 15, ..., 134


def rmse(pred, gold) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if pred.shape != gold.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gold.shape}")
    if pred.size == 0:
        raise ValueError("cannot compute RMSE of empty vectors")
    return float(np.sqrt(np.mean((pred - gold) ** 2)))


def pearson(a, b) -> float:
    """Pearson's r; NaN when either vector is constant (degenerate case)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("pearson expects two equally sized 1-d vectors")
    if a.size < 2:
        raise ValueError("need at least 2 observations")
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da)) * math.sqrt(float(db @ db))
    if denom == 0.0:
        return float("nan")
    return float(max(-1.0, min(1.0, float(da @ db) / denom)))


def average_ranks(x) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(a, b) -> float:
    """Spearman's rho: Pearson correlation of average ranks."""
    return pearson(average_ranks(a), average_ranks(b))


@dataclass(frozen=True)
class EvalReport:
    l1_train: str
    l1_test: str
    seeds: tuple
    rmse_median: float
    rmse_p5: float
    rmse_p95: float
    pearson_median: float
    n_items: int

    def as_dict(self) -> dict:
        return {
            "l1_train": self.l1_train,
            "l1_test": self.l1_test,
            "seeds": list(self.seeds),
            "rmse_median": self.rmse_median,
            "rmse_p5": self.rmse_p5,
            "rmse_p95": self.rmse_p95,
            "pearson_median": self.pearson_median,
            "n_items": self.n_items,
        }


def aggregate_report(l1_train, l1_test, per_seed, gold) -> EvalReport:
    """Summarize per-seed prediction vectors against one gold vector."""
    seeds = tuple(sorted(per_seed))
    rmses = [rmse(per_seed[s], gold) for s in seeds]
    rs = [pearson(per_seed[s], gold) for s in seeds]
    return EvalReport(
        l1_train=l1_train,
        l1_test=l1_test,
        seeds=seeds,
        rmse_median=float(np.median(rmses)),
        rmse_p5=float(np.percentile(rmses, 5)),
        rmse_p95=float(np.percentile(rmses, 95)),
        pearson_median=float(np.median(rs)),
        n_items=int(np.asarray(gold).size),
    )


def cross_l1_matrix(predictions, gold) -> dict:
    """Full train-L1 x test-L1 grid of reports.

    ``predictions[(l1_train, l1_test)]`` maps seed -> prediction vector
    computed on feature tables built with the *training* L1's vectorizer and
    encoders; ``gold[l1_test]`` is the target vector.
    """
    matrix = {}
    for (l1_train, l1_test), per_seed in predictions.items():
        matrix[(l1_train, l1_test)] = aggregate_report(l1_train, l1_test, per_seed, gold[l1_test])
    return matrix


def write_cross_l1_csv(matrix: dict, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["l1_train", "l1_test", "rmse_median", "rmse_p5", "rmse_p95", "pearson_median", "n_items"]
        )
        for (l1_train, l1_test) in sorted(matrix):
            r = matrix[(l1_train, l1_test)]
            writer.writerow(
                [l1_train, l1_test, repr(r.rmse_median), repr(r.rmse_p5),
                 repr(r.rmse_p95), repr(r.pearson_median), r.n_items]
            )


def write_eval_report_json(reports, path) -> None:
    doc = [r.as_dict() for r in reports]
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
