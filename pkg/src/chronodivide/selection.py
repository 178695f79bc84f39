"""Pseudo-aggregated SVM-RFE: repeated randomized splits, relative-frequency
feature scoring, and cross-validated choice of the final feature count.

Each repeat splits the training rows into modeling and validation parts,
ranks features by SVM-RFE on the modeling part, and keeps the top-d subset
with the lowest validation error (ties to the smallest d). Subsets from M
repeats are folded into one ranking by relative frequency: an appearance
indicator weighted by validation accuracy (fast exponential decay at or
below coin-flip accuracy) and by subset size (linear penalty).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import SelectionError
from .model import IncrementalSvm, LinearModel, TrainConfig, classify, train_linear_svm

_SEED_MASK = (1 << 64) - 1

# role codes keep the per-repeat, per-CV-run, and trend RNG streams disjoint
ROLE_REPEAT = 1
ROLE_CV = 2
ROLE_TREND = 3


def derive_rng(master_seed: int, role: int, index: int) -> np.random.Generator:
    """Deterministic per-task RNG; execution order can never affect streams."""
    seq = np.random.SeedSequence([master_seed & _SEED_MASK, role, index])
    return np.random.default_rng(seq)


def derive_seed(master_seed: int, role: int, index: int) -> int:
    seq = np.random.SeedSequence([master_seed & _SEED_MASK, role, index])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SelectionConfig:
    repeats: int = 100
    modeling_fraction: float = 2.0 / 3.0
    cv_runs: int = 50
    cv_fraction: float = 2.0 / 3.0
    penalty_c: float = 1.0 / 30.0
    master_seed: int = 0
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise SelectionError("repeats must be >= 1")
        if not (0.0 < self.modeling_fraction < 1.0):
            raise SelectionError("modeling_fraction must be in (0, 1)")
        if not (0.0 < self.cv_fraction < 1.0):
            raise SelectionError("cv_fraction must be in (0, 1)")
        if self.cv_runs < 1:
            raise SelectionError("cv_runs must be >= 1")
        if self.penalty_c <= 0:
            raise SelectionError("penalty_c must be positive")


@dataclass(frozen=True)
class RepeatModel:
    """Best subset found by one randomized repeat."""

    repeat_index: int
    feature_subset: tuple[int, ...]
    subset_size: int
    validation_accuracy: float
    seed: int


@dataclass(frozen=True)
class RankedFeatureList:
    """Features ordered by relative frequency (descending, ties by index)."""

    entries: tuple[tuple[int, float], ...]
    repeat_count: int
    penalty_c: float
    appearance_counts: dict[int, int] = field(default_factory=dict, hash=False)

    def feature_order(self) -> list[int]:
        return [f for f, _ in self.entries]


@dataclass(frozen=True)
class CvCurvePoint:
    d: int
    mean_error: float
    std_error: float


@dataclass(frozen=True)
class DStarResult:
    d_star: int
    curve: tuple[CvCurvePoint, ...]


def stratified_split(
    y: np.ndarray, fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Split row indices into (selected, rest), stratified by class.

    Each class contributes floor(fraction * count) rows (at least 1, at most
    count - 1) to the selected part, so both parts hold both classes.
    """
    selected, rest = [], []
    for cls in (1.0, -1.0):
        idx = np.flatnonzero(y == cls)
        if idx.size < 2:
            raise SelectionError(
                f"class {cls:+.0f} has {idx.size} samples; stratified split impossible"
            )
        take = min(max(1, int(fraction * idx.size)), idx.size - 1)
        perm = rng.permutation(idx)
        selected.extend(perm[:take].tolist())
        rest.extend(perm[take:].tolist())
    return np.array(sorted(selected)), np.array(sorted(rest))


def run_repeat(
    X: np.ndarray, y: np.ndarray, cfg: SelectionConfig, j: int
) -> RepeatModel:
    """One randomized modeling/validation repeat.

    The RFE sweep's surviving set at size d is exactly the top-d prefix of
    its ranking, and the solver is deterministic, so the sweep's
    intermediate models double as the top-d candidate models.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = derive_rng(cfg.master_seed, ROLE_REPEAT, j)
    model_rows, val_rows = stratified_split(y, cfg.modeling_fraction, rng)
    X_model, y_model = X[model_rows], y[model_rows]
    X_val, y_val = X[val_rows], y[val_rows]

    n_features = X.shape[1]
    solver = IncrementalSvm(X_model, y_model, cfg.train_config, active=range(n_features))
    best_errors = None
    best_d = None
    best_subset: tuple[int, ...] = ()
    while True:
        solver.solve()
        d = len(solver.active)
        predicted = classify(solver.decision_on(X_val))
        errors = int(np.sum(predicted != y_val))
        if best_errors is None or errors < best_errors or (errors == best_errors and d < best_d):
            best_errors, best_d, best_subset = errors, d, tuple(solver.active)
        if d == 1:
            break
        w = np.abs(solver.weights())
        tied = [solver.active[k] for k in np.flatnonzero(w == w.min())]
        solver.remove_feature(max(tied))

    acc = 1.0 - best_errors / len(y_val)
    return RepeatModel(
        repeat_index=j,
        feature_subset=best_subset,
        subset_size=len(best_subset),
        validation_accuracy=acc,
        seed=derive_seed(cfg.master_seed, ROLE_REPEAT, j),
    )


def run_repeats(
    X: np.ndarray,
    y: np.ndarray,
    cfg: SelectionConfig,
    threads: int = 1,
) -> list[RepeatModel]:
    """All M repeats, j = 1..M; parallel execution cannot change the result."""
    indices = range(1, cfg.repeats + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda j: run_repeat(X, y, cfg, j), indices))
    return [run_repeat(X, y, cfg, j) for j in indices]


def weight_g(accuracy: float) -> float:
    """Accuracy weight: exp((A-1)/(2A-1)) above 0.5, zero at or below it."""
    if not (0.0 <= accuracy <= 1.0):
        raise SelectionError(f"accuracy {accuracy} outside [0, 1]")
    if accuracy <= 0.5:
        return 0.0
    return math.exp((accuracy - 1.0) / (2.0 * accuracy - 1.0))


def weight_h(subset_size: int, penalty_c: float) -> float:
    """Size weight: max(0, 1 - c*n)."""
    if subset_size < 0:
        raise SelectionError("subset size must be >= 0")
    return max(0.0, 1.0 - penalty_c * subset_size)


def aggregate_rf(models: Sequence[RepeatModel], penalty_c: float) -> RankedFeatureList:
    """Relative frequency of each feature over the repeat models.

    rf(x) = (1/M) * sum_j g(A_j) h(n_j) [x in subset_j]. Models are summed
    in repeat order so the result is bit-identical under permutation of the
    input list. Features with rf = 0 are excluded.
    """
    if not models:
        raise SelectionError("aggregate_rf needs at least one model")
    scores: dict[int, float] = {}
    appearances: dict[int, int] = {}
    for m in sorted(models, key=lambda m: m.repeat_index):
        wgt = weight_g(m.validation_accuracy) * weight_h(m.subset_size, penalty_c)
        for f in m.feature_subset:
            appearances[f] = appearances.get(f, 0) + 1
            scores[f] = scores.get(f, 0.0) + wgt
    M = len(models)
    rf_items = [(f, s / M) for f, s in scores.items() if s / M > 0.0]
    entries = tuple(sorted(rf_items, key=lambda kv: (-kv[1], kv[0])))
    return RankedFeatureList(
        entries=entries,
        repeat_count=M,
        penalty_c=penalty_c,
        appearance_counts=appearances,
    )


def select_d_star(
    X: np.ndarray,
    y: np.ndarray,
    ranking: RankedFeatureList,
    cfg: SelectionConfig,
    threads: int = 1,
) -> DStarResult:
    """Cross-validated feature count via the one-standard-error rule.

    The same cv_runs stratified splits are shared across every d (seeded by
    run index only), so the error curves are paired. d* is the smallest d
    whose mean error is within one standard error of the minimum.
    """
    if not ranking.entries:
        raise SelectionError("ranking is empty")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    order = ranking.feature_order()
    n_d = len(order)

    def one_run(run: int) -> np.ndarray:
        rng = derive_rng(cfg.master_seed, ROLE_CV, run)
        train_rows, test_rows = stratified_split(y, cfg.cv_fraction, rng)
        solver = IncrementalSvm(X[train_rows], y[train_rows], cfg.train_config)
        X_test, y_test = X[test_rows], y[test_rows]
        errs = np.empty(n_d)
        for k, f in enumerate(order):
            solver.add_feature(f)
            solver.solve()
            predicted = classify(solver.decision_on(X_test))
            errs[k] = np.sum(predicted != y_test) / len(y_test)
        return errs

    runs = range(1, cfg.cv_runs + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one_run, runs))
    else:
        rows = [one_run(r) for r in runs]
    errors = np.vstack(rows)

    mean_err = errors.mean(axis=0)
    if cfg.cv_runs > 1:
        std_err = errors.std(axis=0, ddof=1) / math.sqrt(cfg.cv_runs)
    else:
        std_err = np.zeros(n_d)
    best = int(np.argmin(mean_err))
    threshold = mean_err[best] + std_err[best]
    d_star = int(np.flatnonzero(mean_err <= threshold)[0]) + 1
    curve = tuple(
        CvCurvePoint(d=k + 1, mean_error=float(mean_err[k]), std_error=float(std_err[k]))
        for k in range(n_d)
    )
    return DStarResult(d_star=d_star, curve=curve)


def train_final(
    X: np.ndarray,
    y: np.ndarray,
    ranking: RankedFeatureList,
    d_star: int,
    cfg: TrainConfig,
) -> LinearModel:
    """Train on all training rows restricted to the top-d* ranked features."""
    order = ranking.feature_order()
    if d_star > len(order) or d_star < 1:
        raise SelectionError(f"d_star={d_star} outside 1..{len(order)}")
    return train_linear_svm(X, y, cfg, feature_indices=order[:d_star])


def write_ranking_csv(
    ranking: RankedFeatureList, feature_names: Sequence[str], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "feature_name", "rf", "appearance_count"])
        for rank, (f, rf) in enumerate(ranking.entries, start=1):
            writer.writerow(
                [rank, feature_names[f], repr(rf), ranking.appearance_counts.get(f, 0)]
            )


def write_cv_curve_csv(curve: Iterable[CvCurvePoint], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "mean_error", "std_error"])
        for point in curve:
            writer.writerow([point.d, repr(point.mean_error), repr(point.std_error)])
