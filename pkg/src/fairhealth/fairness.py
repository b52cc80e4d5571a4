"""Group and intersectional fairness metrics for binary predictions.

Every metric is model-agnostic: it only sees predicted labels, optional
true labels, and one (or more) sensitive-attribute columns. With more than
two groups, each metric reports the worst pair of groups.

>>> demographic_parity_diff([1, 1, 0, 1, 0, 0], ["F", "F", "F", "M", "M", "M"])
0.3333333333333333
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Sequence

import numpy as np

from .errors import (
    DegenerateGroupError,
    InsufficientGroupsError,
    InvalidInputError,
    MissingTruthsError,
)

__all__ = [
    "LabeledOutcomes",
    "FairnessReport",
    "demographic_parity_diff",
    "equalized_odds_diff",
    "disparate_impact",
    "intersectional_fairness",
    "fairness_summary",
]


def _binary(values, name):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise InvalidInputError(f"{name} must contain only 0/1 labels")
    return arr.astype(np.int64)


@dataclass(frozen=True)
class LabeledOutcomes:
    """Predictions, optional truths and group labels, aligned by position."""

    predictions: np.ndarray
    groups: tuple
    truths: np.ndarray | None = None

    @classmethod
    def build(cls, y_pred, sensitive, y_true=None) -> "LabeledOutcomes":
        preds = _binary(y_pred, "predictions")
        if isinstance(sensitive, np.ndarray):
            sensitive = sensitive.tolist()
        groups = tuple(sensitive)
        if preds.size == 0:
            raise InvalidInputError("empty input")
        if len(groups) != preds.size:
            raise InvalidInputError(
                f"length mismatch: {preds.size} predictions vs {len(groups)} group labels"
            )
        truths = None
        if y_true is not None:
            truths = _binary(y_true, "truths")
            if truths.size != preds.size:
                raise InvalidInputError(
                    f"length mismatch: {preds.size} predictions vs {truths.size} truths"
                )
        return cls(preds, groups, truths)

    def group_indices(self) -> dict:
        """Map each group to the row indices it owns, in first-seen order."""
        index: dict = {}
        for i, g in enumerate(self.groups):
            index.setdefault(g, []).append(i)
        return {g: np.asarray(rows) for g, rows in index.items()}


@dataclass
class FairnessReport:
    dpd: float
    di: float
    per_group_positive_rates: dict
    group_sizes: dict
    eod: float | None = None
    excluded_groups: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "dpd": self.dpd,
            "di": self.di,
            "eod": self.eod,
            "per_group_positive_rates": dict(self.per_group_positive_rates),
            "group_sizes": dict(self.group_sizes),
            "excluded_groups": dict(self.excluded_groups),
        }


def _positive_rates(outcomes: LabeledOutcomes) -> dict:
    rates = {g: float(outcomes.predictions[rows].mean()) for g, rows in outcomes.group_indices().items()}
    if len(rates) < 2:
        raise InsufficientGroupsError(f"need at least two groups, got {len(rates)}")
    return rates


def _worst_gap(rates: dict) -> float:
    return max(abs(a - b) for a, b in combinations(rates.values(), 2))


def _ratio(rates: dict) -> float:
    lo, hi = min(rates.values()), max(rates.values())
    if hi == 0.0:
        # nobody receives a positive prediction: no group is favored
        return 1.0
    return lo / hi


def _error_rates(outcomes: LabeledOutcomes) -> tuple[dict, dict]:
    if outcomes.truths is None:
        raise MissingTruthsError("equalized odds needs ground-truth labels")
    tpr, fpr = {}, {}
    for g, rows in outcomes.group_indices().items():
        y, p = outcomes.truths[rows], outcomes.predictions[rows]
        pos, neg = y == 1, y == 0
        if not pos.any():
            raise DegenerateGroupError(g, "TPR")
        if not neg.any():
            raise DegenerateGroupError(g, "FPR")
        tpr[g] = float(p[pos].mean())
        fpr[g] = float(p[neg].mean())
    if len(tpr) < 2:
        raise InsufficientGroupsError(f"need at least two groups, got {len(tpr)}")
    return tpr, fpr


def demographic_parity_diff(y_pred, sensitive) -> float:
    """Largest gap in positive-prediction rate between any two groups.

    Returns a float in [0, 1]; 0 means every group is predicted positive at
    the same rate.
    """
    return _worst_gap(_positive_rates(LabeledOutcomes.build(y_pred, sensitive)))


def equalized_odds_diff(y_true, y_pred, sensitive) -> float:
    """Worst pairwise group gap in either true-positive or false-positive rate.

    Every group must contain at least one positive and one negative truth,
    otherwise :class:`DegenerateGroupError` names the group and the rate that
    cannot be computed.
    """
    tpr, fpr = _error_rates(LabeledOutcomes.build(y_pred, sensitive, y_true))
    return max(_worst_gap(tpr), _worst_gap(fpr))


def disparate_impact(y_pred, sensitive) -> float:
    """Ratio of the lowest to the highest group positive-prediction rate.

    By convention the ratio is 1.0 when no group has any positive prediction.
    Values below 0.8 are conventionally considered inequitable.
    """
    return _ratio(_positive_rates(LabeledOutcomes.build(y_pred, sensitive)))


def _report(outcomes: LabeledOutcomes, excluded: dict | None = None) -> FairnessReport:
    rates = _positive_rates(outcomes)
    eod = None
    if outcomes.truths is not None:
        tpr, fpr = _error_rates(outcomes)
        eod = max(_worst_gap(tpr), _worst_gap(fpr))
    sizes = {g: int(rows.size) for g, rows in outcomes.group_indices().items()}
    return FairnessReport(
        dpd=_worst_gap(rates),
        di=_ratio(rates),
        per_group_positive_rates=rates,
        group_sizes=sizes,
        eod=eod,
        excluded_groups=excluded or {},
    )


def fairness_summary(y_pred, sensitive, y_true=None) -> FairnessReport:
    """Compute every metric in one call.

    ``eod`` is ``None`` when no truths are given; degenerate groups still
    raise, since that is a property of the data rather than a missing input.
    """
    return _report(LabeledOutcomes.build(y_pred, sensitive, y_true))


def intersectional_fairness(
    y_pred,
    attributes: Sequence[Sequence[Hashable]],
    y_true=None,
    min_group_size: int = 1,
) -> FairnessReport:
    """Fairness metrics over composite groups built from several attributes.

    Each row's group is the tuple of its attribute values (e.g. sex x age
    band). Composite groups smaller than ``min_group_size`` are dropped from
    the computation and listed in ``excluded_groups`` with their sizes. A
    single attribute column is passed through unchanged, so the result equals
    :func:`fairness_summary` on that column.
    """
    if min_group_size < 1:
        raise InvalidInputError("min_group_size must be >= 1")
    columns = [list(col) for col in attributes]
    if not columns:
        raise InvalidInputError("need at least one attribute column")
    preds = _binary(y_pred, "predictions")
    for col in columns:
        if len(col) != preds.size:
            raise InvalidInputError(
                f"length mismatch: {preds.size} predictions vs attribute column of {len(col)}"
            )
    if len(columns) == 1:
        composite = columns[0]
    else:
        composite = list(zip(*columns))

    counts: dict = {}
    for g in composite:
        counts[g] = counts.get(g, 0) + 1
    excluded = {g: n for g, n in counts.items() if n < min_group_size}
    keep = np.array([g not in excluded for g in composite], dtype=bool)
    if keep.sum() == 0 or len(counts) - len(excluded) < 2:
        raise InsufficientGroupsError(
            f"{len(counts) - len(excluded)} composite group(s) remain after "
            f"excluding those smaller than {min_group_size}"
        )
    truths = None if y_true is None else _binary(y_true, "truths")[keep]
    kept_groups = [g for g, k in zip(composite, keep) if k]
    return _report(LabeledOutcomes.build(preds[keep], kept_groups, truths), excluded)
