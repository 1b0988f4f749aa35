"""Confusion-matrix metrics and the smoothed negative-log accuracy score.

The headline score is ``kt_score``: the negative base-10 logarithm of the
Krichevsky-Trofimov estimate of the success probability,

    S = -log10((c + 1/2) / (n + 1))

for ``c`` correct answers out of ``n``. Lower is better; S -> 0 only as a
perfect classifier is evaluated on ever more data, so it separates
"perfect on 40 rows" from "perfect on 1000 rows" where raw accuracy cannot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping


class MetricsError(ValueError):
    """Raised for inconsistent metric inputs (negative counts, n=0, c>n)."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise MetricsError("confusion counts must be nonnegative")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def correct(self) -> int:
        return self.tp + self.tn


@dataclass(frozen=True)
class MetricsReport:
    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    f1: float
    kt: float
    # Degenerate flags mark a 0/0 convention (no positive predictions or no
    # positive truths) so downstream feedback can still show a full report.
    degenerate_precision: bool = False
    degenerate_recall: bool = False

    def as_dict(self) -> dict:
        return {
            "tp": self.counts.tp,
            "fp": self.counts.fp,
            "tn": self.counts.tn,
            "fn": self.counts.fn,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "kt": self.kt,
            "degenerate_precision": self.degenerate_precision,
            "degenerate_recall": self.degenerate_recall,
        }


def report_from_dict(d: Mapping) -> MetricsReport:
    counts = ConfusionCounts(tp=int(d["tp"]), fp=int(d["fp"]), tn=int(d["tn"]), fn=int(d["fn"]))
    return MetricsReport(
        counts=counts,
        accuracy=float(d["accuracy"]),
        precision=float(d["precision"]),
        recall=float(d["recall"]),
        f1=float(d["f1"]),
        kt=float(d["kt"]),
        degenerate_precision=bool(d.get("degenerate_precision", False)),
        degenerate_recall=bool(d.get("degenerate_recall", False)),
    )


def confusion(
    predictions: Mapping[str, str],
    truth: Mapping[str, str],
    positive_label: str,
) -> ConfusionCounts:
    """Count tp/fp/tn/fn over two id->label maps with identical key sets."""
    if set(predictions) != set(truth):
        missing = set(truth) - set(predictions)
        extra = set(predictions) - set(truth)
        raise MetricsError(
            f"prediction/truth key mismatch (missing={sorted(missing)[:5]}, extra={sorted(extra)[:5]})"
        )
    tp = fp = tn = fn = 0
    for key, pred in predictions.items():
        actual = truth[key]
        if pred == positive_label:
            if actual == positive_label:
                tp += 1
            else:
                fp += 1
        else:
            if actual == positive_label:
                fn += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def kt_score(c: int, n: int) -> float:
    """Smoothed negative-log accuracy for c correct out of n evaluated."""
    if n < 1:
        raise MetricsError("kt_score requires n >= 1")
    if not 0 <= c <= n:
        raise MetricsError(f"kt_score requires 0 <= c <= n, got c={c}, n={n}")
    return -math.log10((c + 0.5) / (n + 1))


def kt_to_accuracy(score: float, n: int) -> float:
    """Invert kt_score: recover the accuracy c/n implied by a score on n rows.

    The implied correct count (n+1)*10**(-score) - 1/2 is rounded to the
    nearest integer and clamped to [0, n], so the inversion is exact on
    every value kt_score can produce.
    """
    if n < 1:
        raise MetricsError("kt_to_accuracy requires n >= 1")
    if score < 0:
        raise MetricsError("kt_to_accuracy requires score >= 0")
    c = round((n + 1) * 10.0 ** (-score) - 0.5)
    c = max(0, min(n, c))
    return c / n


def basic_metrics(counts: ConfusionCounts) -> MetricsReport:
    """Accuracy, precision, recall, F1 and the KT score for one confusion matrix.

    Degenerate ratios (0/0) are reported as 0.0 with a flag instead of
    raising, so a per-round report always exists.
    """
    n = counts.n
    if n == 0:
        raise MetricsError("metrics require at least one evaluated row")
    accuracy = counts.correct / n

    degenerate_precision = (counts.tp + counts.fp) == 0
    precision = 0.0 if degenerate_precision else counts.tp / (counts.tp + counts.fp)
    degenerate_recall = (counts.tp + counts.fn) == 0
    recall = 0.0 if degenerate_recall else counts.tp / (counts.tp + counts.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)

    return MetricsReport(
        counts=counts,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        kt=kt_score(counts.correct, n),
        degenerate_precision=degenerate_precision,
        degenerate_recall=degenerate_recall,
    )
