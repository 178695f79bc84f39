"""Turn an ordered decision-value series into findings.

A chrono-divide is a split of the series into a leading stretch of one sign
and a trailing stretch of the other; the detector maximizes sign agreement
over every split and both orientations. Trend analysis fits a slope and
tests Kendall's tau against the permutation null. Group distances compare
labeled stretches of the corpus in feature space.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import AnalysisError
from .features import FeatureMatrix

POSITIVE_THEN_NEGATIVE = "positive-then-negative"
NEGATIVE_THEN_POSITIVE = "negative-then-positive"


@dataclass(frozen=True)
class DecisionSeries:
    """Decision values S(n) over strictly increasing sample ordinals."""

    ordinals: tuple[int, ...]
    values: tuple[float, ...]
    sample_ids: tuple[str, ...]
    source: str = ""

    def __post_init__(self) -> None:
        if not (len(self.ordinals) == len(self.values) == len(self.sample_ids)):
            raise AnalysisError("series fields have different lengths")
        if any(a >= b for a, b in zip(self.ordinals, self.ordinals[1:])):
            raise AnalysisError("series ordinals must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DivideReport:
    divide_found: bool
    divide_after_ordinal: int | None
    orientation: str
    agreement: float
    outliers: tuple[int, ...]
    theta: float
    min_side: int


@dataclass(frozen=True)
class TrendReport:
    slope: float
    kendall_tau: float
    p_value: float
    permutations: int


@dataclass
class DistanceSummary:
    sample_ids: tuple[str, ...]
    ordinals: tuple[int, ...]
    group_labels: tuple[str, ...]
    matrix: np.ndarray
    pair_stats: dict[tuple[str, str], tuple[float, float, int]]


def detect_divide(
    series: DecisionSeries, theta: float = 0.95, min_side: int = 5
) -> DivideReport:
    """Find the split maximizing sign agreement over both orientations.

    Agreement at split k = (correct signs before k + after k) / n; ties go
    to the smallest k, then to positive-then-negative. A divide is reported
    only when the winning agreement reaches theta and both sides hold at
    least min_side samples. Zero decision values count as positive.
    """
    n = len(series)
    if n < 2 * min_side:
        raise AnalysisError(f"series length {n} < 2 * min_side ({2 * min_side})")
    positive = np.array([v >= 0 for v in series.values])
    pos_prefix = np.concatenate(([0], np.cumsum(positive)))
    total_pos = int(pos_prefix[-1])

    best_correct = -1
    best_k = None
    best_orientation = POSITIVE_THEN_NEGATIVE
    for k in range(1, n):
        pos_before = int(pos_prefix[k])
        pos_after = total_pos - pos_before
        correct_pn = pos_before + (n - k - pos_after)
        correct_np = (k - pos_before) + pos_after
        if correct_pn > best_correct:
            best_correct, best_k, best_orientation = correct_pn, k, POSITIVE_THEN_NEGATIVE
        if correct_np > best_correct:
            best_correct, best_k, best_orientation = correct_np, k, NEGATIVE_THEN_POSITIVE
    agreement = best_correct / n
    found = agreement >= theta and min(best_k, n - best_k) >= min_side

    first_positive = best_orientation == POSITIVE_THEN_NEGATIVE
    outliers = tuple(
        series.ordinals[i]
        for i in range(n)
        if positive[i] != (first_positive if i < best_k else not first_positive)
    )
    return DivideReport(
        divide_found=found,
        divide_after_ordinal=series.ordinals[best_k - 1],
        orientation=best_orientation,
        agreement=agreement,
        outliers=outliers,
        theta=theta,
        min_side=min_side,
    )


def _tau_numerator(values: np.ndarray) -> int:
    diff = np.sign(values[None, :] - values[:, None])
    return int(np.triu(diff, k=1).sum())


def detect_trend(
    series: DecisionSeries, permutations: int = 1000, seed: int = 0
) -> TrendReport:
    """Least-squares slope plus a permutation test on |Kendall tau|.

    When n! does not exceed the requested permutation count the null is
    enumerated exactly (p = share of permutations at least as extreme,
    identity included); otherwise `permutations` shuffles are sampled and
    p = (1 + #extreme) / (permutations + 1).
    """
    n = len(series)
    if n < 3:
        raise AnalysisError("trend analysis needs at least 3 samples")
    values = np.array(series.values, dtype=float)
    idx = np.arange(n, dtype=float)
    slope = float(np.cov(idx, values, bias=True)[0, 1] / idx.var())

    denom = n * (n - 1) / 2
    obs_num = _tau_numerator(values)
    tau = obs_num / denom

    if math.factorial(n) <= permutations:
        total = math.factorial(n)
        extreme = sum(
            1
            for perm in itertools.permutations(values)
            if abs(_tau_numerator(np.array(perm))) >= abs(obs_num)
        )
        p_value = extreme / total
        used = total
    else:
        rng = np.random.default_rng(np.random.SeedSequence([seed & ((1 << 64) - 1)]))
        extreme = 0
        for _ in range(permutations):
            shuffled = rng.permutation(values)
            if abs(_tau_numerator(shuffled)) >= abs(obs_num):
                extreme += 1
        p_value = (1 + extreme) / (permutations + 1)
        used = permutations
    return TrendReport(
        slope=slope, kendall_tau=tau, p_value=p_value, permutations=used
    )


def group_distances(
    matrix: FeatureMatrix, groups: Mapping[int, str]
) -> DistanceSummary:
    """Pairwise Euclidean distances and per-group-pair summaries.

    Rows whose ordinal is missing from `groups` are ignored. Self-pairs are
    excluded from the statistics; standard deviations are population (ddof=0).
    """
    rows = [i for i, o in enumerate(matrix.ordinals) if o in groups]
    labels = [groups[matrix.ordinals[i]] for i in rows]
    mapped = sorted(set(groups.values()))
    if len(mapped) < 2:
        raise AnalysisError("need at least 2 groups")
    present = set(labels)
    for g in mapped:
        if g not in present:
            raise AnalysisError(f"group {g!r} is empty")
    distinct = sorted(present)

    X = matrix.values[rows]
    sq = np.sum(X**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    dist = np.sqrt(np.maximum(d2, 0.0))
    np.fill_diagonal(dist, 0.0)

    label_arr = np.array(labels)
    pair_stats: dict[tuple[str, str], tuple[float, float, int]] = {}
    for gi, gj in itertools.combinations_with_replacement(distinct, 2):
        ri = np.flatnonzero(label_arr == gi)
        rj = np.flatnonzero(label_arr == gj)
        if gi == gj:
            block = dist[np.ix_(ri, rj)]
            vals = block[np.triu_indices(len(ri), k=1)]
        else:
            vals = dist[np.ix_(ri, rj)].ravel()
        if vals.size == 0:
            pair_stats[(gi, gj)] = (0.0, 0.0, 0)
        else:
            pair_stats[(gi, gj)] = (
                float(vals.mean()),
                float(vals.std()),
                int(vals.size),
            )
    return DistanceSummary(
        sample_ids=tuple(matrix.sample_ids[i] for i in rows),
        ordinals=tuple(matrix.ordinals[i] for i in rows),
        group_labels=tuple(labels),
        matrix=dist,
        pair_stats=pair_stats,
    )


def write_series_csv(series: DecisionSeries, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ordinal", "sample_id", "decision_value"])
        for o, sid, v in zip(series.ordinals, series.sample_ids, series.values):
            writer.writerow([o, sid, repr(v)])


def divide_report_dict(report: DivideReport) -> dict:
    return {
        "divide_found": report.divide_found,
        "divide_after_ordinal": report.divide_after_ordinal,
        "orientation": report.orientation,
        "agreement": report.agreement,
        "outliers": list(report.outliers),
        "theta": report.theta,
        "min_side": report.min_side,
    }


def trend_report_dict(report: TrendReport) -> dict:
    return {
        "slope": report.slope,
        "kendall_tau": report.kendall_tau,
        "p_value": report.p_value,
        "permutations": report.permutations,
    }


def write_report_json(payload: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def write_distances_csv(summary: DistanceSummary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_a", "group_b", "mean_distance", "std_distance", "pair_count"])
        for (gi, gj), (mean, std, count) in sorted(summary.pair_stats.items()):
            writer.writerow([gi, gj, repr(mean), repr(std), count])


def write_distance_matrix_csv(summary: DistanceSummary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id"] + list(summary.sample_ids))
        for i, sid in enumerate(summary.sample_ids):
            writer.writerow([sid] + [repr(v) for v in summary.matrix[i].tolist()])
