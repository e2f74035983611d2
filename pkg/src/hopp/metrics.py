"""Confusion counts, the five performance measures, and ensemble aggregation.

A measure whose denominator vanishes is reported as ``None`` (undefined), never
silently coerced to zero; `summarize` excludes undefined entries per measure and
reports how many were dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError

MEASURE_NAMES = ("acc", "sens", "spec", "ppv", "mcc")


@dataclass(frozen=True)
class ConfusionCounts:
    """True/false positive/negative tallies (positive = malignant)."""

    p_t: int
    p_f: int
    n_t: int
    n_f: int

    @property
    def total(self) -> int:
        return self.p_t + self.p_f + self.n_t + self.n_f


@dataclass(frozen=True)
class Measures:
    """The five performance measures; ``None`` marks an undefined ratio."""

    acc: float | None
    sens: float | None
    spec: float | None
    ppv: float | None
    mcc: float | None

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in MEASURE_NAMES}


def confusion(predictions, truths, positive_label=1) -> ConfusionCounts:
    """Tally predictions against truths; labels equal to positive_label are positive."""
    if len(predictions) != len(truths):
        raise InvalidInputError(
            f"length mismatch: {len(predictions)} predictions vs {len(truths)} truths"
        )
    p_t = p_f = n_t = n_f = 0
    for pred, truth in zip(predictions, truths):
        if pred == positive_label:
            if truth == positive_label:
                p_t += 1
            else:
                p_f += 1
        else:
            if truth == positive_label:
                n_f += 1
            else:
                n_t += 1
    return ConfusionCounts(p_t, p_f, n_t, n_f)


def _ratio(num, den):
    return num / den if den > 0 else None


def measures(c: ConfusionCounts) -> Measures:
    """Accuracy, sensitivity, specificity, positive predictive value, and MCC."""
    if c.total <= 0:
        raise InvalidInputError("cannot compute measures of an empty confusion table")
    acc = (c.p_t + c.n_t) / c.total
    sens = _ratio(c.p_t, c.p_t + c.n_f)
    spec = _ratio(c.n_t, c.n_t + c.p_f)
    ppv = _ratio(c.p_t, c.p_t + c.p_f)
    mcc_den = (c.p_t + c.p_f) * (c.p_t + c.n_f) * (c.n_t + c.p_f) * (c.n_t + c.n_f)
    if mcc_den > 0:
        mcc = (c.p_t * c.n_t - c.p_f * c.n_f) / math.sqrt(mcc_den)
    else:
        mcc = None
    return Measures(acc, sens, spec, ppv, mcc)


@dataclass(frozen=True)
class MeasureStats:
    mean: float | None
    std: float | None
    n_used: int
    n_excluded: int


@dataclass(frozen=True)
class MetricSummary:
    """Per-measure mean and population standard deviation over an ensemble."""

    acc: MeasureStats
    sens: MeasureStats
    spec: MeasureStats
    ppv: MeasureStats
    mcc: MeasureStats

    def as_dict(self) -> dict:
        return {
            name: {
                "mean": s.mean,
                "std": s.std,
                "n_used": s.n_used,
                "n_excluded": s.n_excluded,
            }
            for name in MEASURE_NAMES
            for s in [getattr(self, name)]
        }


def summarize(samples) -> MetricSummary:
    """Mean and population std per measure, excluding undefined entries."""
    samples = list(samples)
    if not samples:
        raise InvalidInputError("cannot summarize an empty sample set")
    stats = {}
    for name in MEASURE_NAMES:
        values = [getattr(s, name) for s in samples]
        used = [v for v in values if v is not None]
        n_excluded = len(values) - len(used)
        if used:
            mean = sum(used) / len(used)
            var = sum((v - mean) ** 2 for v in used) / len(used)
            stats[name] = MeasureStats(mean, math.sqrt(var), len(used), n_excluded)
        else:
            stats[name] = MeasureStats(None, None, 0, n_excluded)
    return MetricSummary(**stats)
