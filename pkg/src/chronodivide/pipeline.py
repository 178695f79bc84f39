"""End-to-end orchestration: config file, staged run, and artifact exports.

Configuration is one TOML file; paths are resolved relative to it. Every
stage failure is wrapped in a PipelineError naming the stage. All outputs
are deterministic for a fixed (config, master_seed); wall-clock timings go
to a separate timing.json so reruns stay byte-identical.
"""

from __future__ import annotations

import json
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib  # noqa: F401 (same module surface)

from . import analysis as ana
from . import features as feat
from . import plots
from . import selection as sel
from .corpus import (
    CLASS_A,
    CLASS_B,
    Document,
    Sample,
    SegmentationPolicy,
    load_corpus,
    segment_samples,
)
from .errors import ChronodivideError, ConfigError, PipelineError
from .model import (
    LinearModel,
    TrainConfig,
    accuracy,
    decision_values,
    read_model_json,
    write_model_json,
)
from .synthetic import SyntheticSpec, make_shifted_distributions

TEST_GROUP = "test"

_CAPTURED_WARNINGS = (
    "ShortSampleWarning",
    "NoSentencesWarning",
    "UnmatchedQuoteWarning",
)


@dataclass
class RunConfig:
    corpus_locator: Path
    lexicon_path: Path | None
    label_a: tuple[int, int]
    label_b: tuple[int, int]
    test_range: tuple[int, int]
    policy: SegmentationPolicy
    k_chars: int
    k_words: int
    selection: sel.SelectionConfig
    theta: float
    min_side: int
    permutations: int
    output_dir: Path
    threads: int = 1
    plots: bool = True

    def __post_init__(self) -> None:
        ranges = [self.label_a, self.label_b, self.test_range]
        for lo, hi in ranges:
            if lo > hi:
                raise ConfigError(f"range ({lo}, {hi}) is inverted")
        for i in range(len(ranges)):
            for j in range(i + 1, len(ranges)):
                if ranges[i][0] <= ranges[j][1] and ranges[j][0] <= ranges[i][1]:
                    raise ConfigError(
                        f"ranges {ranges[i]} and {ranges[j]} overlap"
                    )
        if not (0.0 < self.theta <= 1.0):
            raise ConfigError("theta must be in (0, 1]")
        if self.min_side < 1:
            raise ConfigError("min_side must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def echo(self) -> dict:
        return {
            "corpus_locator": str(self.corpus_locator),
            "lexicon_path": str(self.lexicon_path) if self.lexicon_path else None,
            "label_a": list(self.label_a),
            "label_b": list(self.label_b),
            "test_range": list(self.test_range),
            "segmentation": {
                "min_chars": self.policy.min_chars,
                "balance_mode": self.policy.balance_mode,
                "balance_range": list(self.policy.balance_range)
                if self.policy.balance_range
                else None,
            },
            "k_chars": self.k_chars,
            "k_words": self.k_words,
            "selection": {
                "repeats": self.selection.repeats,
                "modeling_fraction": self.selection.modeling_fraction,
                "cv_runs": self.selection.cv_runs,
                "cv_fraction": self.selection.cv_fraction,
                "penalty_c": self.selection.penalty_c,
                "master_seed": self.selection.master_seed,
            },
            "train": {
                "regularization_c": self.selection.train_config.regularization_c,
                "tolerance": self.selection.train_config.tolerance,
                "max_iterations": self.selection.train_config.max_iterations,
            },
            "analysis": {
                "theta": self.theta,
                "min_side": self.min_side,
                "permutations": self.permutations,
            },
            "output_dir": str(self.output_dir),
            "threads": self.threads,
            "plots": self.plots,
        }


def _pair(raw, name: str) -> tuple[int, int]:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 2):
        raise ConfigError(f"{name} must be a [start, end] pair")
    return int(raw[0]), int(raw[1])


def load_toml(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        return tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None


def load_run_config(
    path: str | Path,
    seed_override: int | None = None,
    threads_override: int | None = None,
) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    raw = load_toml(path)
    base = path.parent

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base / q

    corpus_raw = raw.get("corpus", {})
    if "locator" not in corpus_raw:
        raise ConfigError("[corpus].locator is required")
    corpus_locator = resolve(corpus_raw["locator"])
    if not corpus_locator.exists():
        raise ConfigError(f"corpus locator does not exist: {corpus_locator}")
    lexicon_path = None
    if corpus_raw.get("lexicon"):
        lexicon_path = resolve(corpus_raw["lexicon"])
        if not lexicon_path.exists():
            raise ConfigError(f"lexicon does not exist: {lexicon_path}")

    seg_raw = raw.get("segmentation", {})
    balance_range = seg_raw.get("balance_range")
    policy = SegmentationPolicy(
        min_chars=int(seg_raw.get("min_chars", 1000)),
        balance_mode=seg_raw.get("balance_mode", "none"),
        balance_range=_pair(balance_range, "balance_range") if balance_range else None,
    )

    labels_raw = raw.get("labels", {})
    for key in ("a", "b", "test"):
        if key not in labels_raw:
            raise ConfigError(f"[labels].{key} is required")

    vocab_raw = raw.get("vocabulary", {})
    sel_raw = raw.get("selection", {})
    train_raw = raw.get("train", {})
    ana_raw = raw.get("analysis", {})
    out_raw = raw.get("output", {})

    master_seed = int(raw.get("master_seed", 0))
    if seed_override is not None:
        master_seed = seed_override
    # worker pool defaults to available parallelism; results are identical
    # for any thread count
    threads = int(raw.get("threads", 0)) or os.cpu_count() or 1
    if threads_override is not None:
        threads = threads_override

    train_config = TrainConfig(
        regularization_c=float(train_raw.get("regularization_c", 1.0)),
        tolerance=float(train_raw.get("tolerance", 1e-6)),
        max_iterations=int(train_raw.get("max_iterations", 100_000)),
        seed=master_seed,
    )
    selection_config = sel.SelectionConfig(
        repeats=int(sel_raw.get("repeats", 100)),
        modeling_fraction=float(sel_raw.get("modeling_fraction", 2.0 / 3.0)),
        cv_runs=int(sel_raw.get("cv_runs", 50)),
        cv_fraction=float(sel_raw.get("cv_fraction", 2.0 / 3.0)),
        penalty_c=float(sel_raw.get("penalty_c", 1.0 / 30.0)),
        master_seed=master_seed,
        train_config=train_config,
    )
    return RunConfig(
        corpus_locator=corpus_locator,
        lexicon_path=lexicon_path,
        label_a=_pair(labels_raw["a"], "labels.a"),
        label_b=_pair(labels_raw["b"], "labels.b"),
        test_range=_pair(labels_raw["test"], "labels.test"),
        policy=policy,
        k_chars=int(vocab_raw.get("k_chars", 500)),
        k_words=int(vocab_raw.get("k_words", 300)),
        selection=selection_config,
        theta=float(ana_raw.get("theta", 0.95)),
        min_side=int(ana_raw.get("min_side", 5)),
        permutations=int(ana_raw.get("permutations", 1000)),
        output_dir=resolve(out_raw.get("directory", "out")),
        threads=threads,
        plots=bool(out_raw.get("plots", True)),
    )


def load_synthetic_spec(path: str | Path, seed_override: int | None = None) -> tuple[SyntheticSpec, Path]:
    """Parse the [synthetic] section; returns the spec and its output dir."""
    path = Path(path)
    raw = load_toml(path)
    if "synthetic" not in raw:
        raise ConfigError("[synthetic] section is required")
    s = raw["synthetic"]
    base = path.parent
    out_dir = Path(s.get("directory", "synthetic_corpus"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    alphabet_size = int(s.get("alphabet_size", 200))
    if "dist_a" in s or "dist_b" in s:
        if not ("dist_a" in s and "dist_b" in s):
            raise ConfigError("dist_a and dist_b must be given together")
        dist_a = tuple(float(p) for p in s["dist_a"])
        dist_b = tuple(float(p) for p in s["dist_b"])
    else:
        dist_a, dist_b, _ = make_shifted_distributions(
            alphabet_size,
            int(s.get("n_shifted", 10)),
            float(s.get("shift_factor", 2.0)),
        )
    seed = int(s.get("seed", 0))
    if seed_override is not None:
        seed = seed_override
    chapters_a = int(s.get("chapters_a", 80))
    spec = SyntheticSpec(
        alphabet_size=alphabet_size,
        dist_a=dist_a,
        dist_b=dist_b,
        chars_per_chapter=int(s.get("chars_per_chapter", 3000)),
        chapters_a=chapters_a,
        chapters_b=int(s.get("chapters_b", 40)),
        divide_position=int(s.get("divide_position", chapters_a)),
        seed=seed,
        transition=s.get("transition", "sharp"),
    )
    return spec, out_dir


@dataclass
class RunResult:
    """Everything a run produced, for callers that want objects not files."""

    config: RunConfig
    documents: list[Document]
    samples: list[Sample]
    spec: feat.FeatureSpec
    raw_matrix: feat.FeatureMatrix
    normalized: feat.FeatureMatrix
    repeat_models: list[sel.RepeatModel]
    ranking: sel.RankedFeatureList
    d_star_result: sel.DStarResult
    final_model: LinearModel
    series: ana.DecisionSeries
    divide: ana.DivideReport
    trend: ana.TrendReport
    distances: ana.DistanceSummary
    summary: dict
    warnings: list[str] = field(default_factory=list)


class _StageTimer:
    def __init__(self):
        self.stages: dict[str, float] = {}
        self._name = None
        self._t0 = 0.0

    def start(self, name: str) -> None:
        self._name = name
        self._t0 = time.perf_counter()

    def stop(self) -> None:
        if self._name is not None:
            self.stages[self._name] = time.perf_counter() - self._t0
            self._name = None


def _stage(timer: _StageTimer, name: str):
    class _Ctx:
        def __enter__(self):
            timer.start(name)

        def __exit__(self, exc_type, exc, tb):
            timer.stop()
            if exc is not None and not isinstance(exc, PipelineError):
                if isinstance(exc, ChronodivideError):
                    raise PipelineError(name, str(exc)) from exc
                raise PipelineError(name, f"{type(exc).__name__}: {exc}") from exc
            return False

    return _Ctx()


def _doc_ordinals(documents: Sequence[Document]) -> dict[str, int]:
    return {d.id: d.ordinal for d in documents}


def _rows_in_doc_range(
    matrix: feat.FeatureMatrix,
    samples: Sequence[Sample],
    documents: Sequence[Document],
    doc_range: tuple[int, int],
) -> list[int]:
    ordinals = _doc_ordinals(documents)
    lo, hi = doc_range
    return [
        i
        for i, s in enumerate(samples)
        if lo <= ordinals[s.source_document] <= hi
    ]


def _training_labels(matrix: feat.FeatureMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Rows tagged A/B and their +1/-1 labels, in row order."""
    rows = [i for i, t in enumerate(matrix.class_tags) if t in (CLASS_A, CLASS_B)]
    if not rows:
        raise ConfigError("no rows are tagged A or B")
    y = np.array([1.0 if matrix.class_tags[i] == CLASS_A else -1.0 for i in rows])
    return np.array(rows, dtype=int), y


def _restrict_columns(
    matrix: feat.FeatureMatrix, columns: Sequence[int]
) -> feat.FeatureMatrix:
    return feat.FeatureMatrix(
        values=matrix.values[:, list(columns)],
        feature_names=[matrix.feature_names[f] for f in columns],
        sample_ids=list(matrix.sample_ids),
        ordinals=list(matrix.ordinals),
        class_tags=list(matrix.class_tags),
    )


def _extract_stage(cfg: RunConfig, timer: _StageTimer):
    """Shared front half: load, segment, vocabulary, extract. Returns
    (documents, samples, spec, raw_matrix, warnings)."""
    captured: list[str] = []
    with _stage(timer, "load"):
        documents = load_corpus(cfg.corpus_locator)
    with _stage(timer, "segment"):
        labels = {cfg.label_a: CLASS_A, cfg.label_b: CLASS_B}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            samples = segment_samples(documents, cfg.policy, labels)
        captured.extend(_format_warnings(caught))
    with _stage(timer, "vocabulary"):
        lexicon_path = cfg.lexicon_path or feat.default_lexicon_path()
        lexicon = feat.load_lexicon(lexicon_path)
        spec = feat.build_vocabulary(samples, lexicon, cfg.k_chars, cfg.k_words)
    with _stage(timer, "extract"):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            raw_matrix = feat.build_feature_matrix(samples, spec)
        captured.extend(_format_warnings(caught))
    return documents, samples, spec, raw_matrix, captured


def _format_warnings(caught) -> list[str]:
    kept = []
    for w in caught:
        if type(w.message).__name__ in _CAPTURED_WARNINGS:
            kept.append(str(w.message))
    return kept


def run_pipeline(cfg: RunConfig) -> RunResult:
    """Execute every stage and write all artifacts under cfg.output_dir."""
    timer = _StageTimer()
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)

    documents, samples, spec, raw_matrix, captured = _extract_stage(cfg, timer)

    with _stage(timer, "normalize"):
        train_rows, y_train = _training_labels(raw_matrix)
        normalizer = feat.fit_normalizer(raw_matrix, train_rows)
        normalized = feat.apply_normalizer(raw_matrix, normalizer)
        X_train = normalized.values[train_rows]

    with _stage(timer, "repeats"):
        repeat_models = sel.run_repeats(
            X_train, y_train, cfg.selection, threads=cfg.threads
        )
    with _stage(timer, "aggregate"):
        ranking = sel.aggregate_rf(repeat_models, cfg.selection.penalty_c)
    with _stage(timer, "d_star"):
        d_star_result = sel.select_d_star(
            X_train, y_train, ranking, cfg.selection, threads=cfg.threads
        )
    with _stage(timer, "final_train"):
        final_model = sel.train_final(
            X_train, y_train, ranking, d_star_result.d_star,
            cfg.selection.train_config,
        )
        train_score = accuracy(final_model, X_train, y_train)

    with _stage(timer, "score"):
        test_rows = _rows_in_doc_range(normalized, samples, documents, cfg.test_range)
        if not test_rows:
            raise ConfigError("test range matches no samples")
        values = decision_values(final_model, normalized.values[test_rows])
        series = ana.DecisionSeries(
            ordinals=tuple(normalized.ordinals[i] for i in test_rows),
            values=tuple(float(v) for v in values),
            sample_ids=tuple(normalized.sample_ids[i] for i in test_rows),
            source=f"final-model-d{d_star_result.d_star}",
        )

    with _stage(timer, "analysis"):
        divide = ana.detect_divide(series, theta=cfg.theta, min_side=cfg.min_side)
        trend = ana.detect_trend(
            series,
            permutations=cfg.permutations,
            seed=sel.derive_seed(cfg.selection.master_seed, sel.ROLE_TREND, 0),
        )

    with _stage(timer, "distances"):
        groups: dict[int, str] = {}
        test_row_set = set(test_rows)
        for i, tag in enumerate(normalized.class_tags):
            if tag in (CLASS_A, CLASS_B):
                groups[normalized.ordinals[i]] = tag
            elif i in test_row_set:
                groups[normalized.ordinals[i]] = TEST_GROUP
        final_columns = _restrict_columns(normalized, final_model.active_features)
        distances = ana.group_distances(final_columns, groups)

    with _stage(timer, "export"):
        summary = _write_artifacts(
            cfg, raw_matrix, spec, repeat_models, ranking, d_star_result,
            final_model, train_score, series, divide, trend, distances,
            captured, samples, documents,
        )
    (out / "timing.json").write_text(
        json.dumps(timer.stages, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return RunResult(
        config=cfg,
        documents=documents,
        samples=samples,
        spec=spec,
        raw_matrix=raw_matrix,
        normalized=normalized,
        repeat_models=repeat_models,
        ranking=ranking,
        d_star_result=d_star_result,
        final_model=final_model,
        series=series,
        divide=divide,
        trend=trend,
        distances=distances,
        summary=summary,
        warnings=captured,
    )


def _write_artifacts(
    cfg: RunConfig,
    raw_matrix: feat.FeatureMatrix,
    spec: feat.FeatureSpec,
    repeat_models: Sequence[sel.RepeatModel],
    ranking: sel.RankedFeatureList,
    d_star_result: sel.DStarResult,
    final_model: LinearModel,
    train_score,
    series: ana.DecisionSeries,
    divide: ana.DivideReport,
    trend: ana.TrendReport,
    distances: ana.DistanceSummary,
    captured: list[str],
    samples: Sequence[Sample],
    documents: Sequence[Document],
) -> dict:
    out = cfg.output_dir
    feat.write_feature_csv(raw_matrix, out / "features.csv")
    names = raw_matrix.feature_names
    sel.write_ranking_csv(ranking, names, out / "ranking.csv")
    sel.write_cv_curve_csv(d_star_result.curve, out / "cv_curve.csv")
    write_model_json(final_model, out / "model.json")
    ana.write_series_csv(series, out / "series.csv")
    ana.write_report_json(ana.divide_report_dict(divide), out / "divide.json")
    ana.write_report_json(ana.trend_report_dict(trend), out / "trend.json")
    ana.write_distances_csv(distances, out / "distances.csv")
    ana.write_distance_matrix_csv(distances, out / "distance_matrix.csv")
    if cfg.plots:
        (out / "series.svg").write_text(
            plots.decision_series_svg(series, divide), encoding="utf-8"
        )
        (out / "cv_curve.svg").write_text(
            plots.cv_curve_svg(d_star_result.curve), encoding="utf-8"
        )
        (out / "distances.svg").write_text(
            plots.distance_heatmap_svg(distances), encoding="utf-8"
        )

    accuracies = [m.validation_accuracy for m in repeat_models]
    top = [
        {
            "name": names[f],
            "rf": rf,
            "appearances": ranking.appearance_counts.get(f, 0),
        }
        for f, rf in ranking.entries[:20]
    ]
    summary = {
        "config": cfg.echo(),
        "corpus": {
            "documents": len(documents),
            "samples": len(samples),
            "training_samples": sum(
                1 for t in raw_matrix.class_tags if t in (CLASS_A, CLASS_B)
            ),
            "test_samples": len(series),
            "features": spec.total_dim,
        },
        "d_star": d_star_result.d_star,
        "top_features": top,
        "final_model": {
            "subset_size": final_model.subset_size,
            "training_accuracy": train_score.accuracy,
            "training_errors": train_score.error_fraction_str(),
            "converged": final_model.converged,
        },
        "repeat_accuracy": {
            "mean": float(np.mean(accuracies)),
            "min": float(np.min(accuracies)),
            "max": float(np.max(accuracies)),
        },
        "divide": ana.divide_report_dict(divide),
        "trend": ana.trend_report_dict(trend),
        "warnings": captured,
    }
    (out / "summary.json").write_text(
        json.dumps(summary, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return summary


def run_extract(cfg: RunConfig) -> Path:
    """Corpus to raw feature CSV (the `extract` subcommand)."""
    timer = _StageTimer()
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    _, _, _, raw_matrix, _ = _extract_stage(cfg, timer)
    path = cfg.output_dir / "features.csv"
    feat.write_feature_csv(raw_matrix, path)
    return path


def run_select(cfg: RunConfig, features_path: Path | None = None) -> Path:
    """Feature CSV to ranking, d*, and final model (the `select` subcommand)."""
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    timer = _StageTimer()
    with _stage(timer, "read_features"):
        matrix = feat.read_feature_csv(features_path or out / "features.csv")
    with _stage(timer, "normalize"):
        train_rows, y_train = _training_labels(matrix)
        normalizer = feat.fit_normalizer(matrix, train_rows)
        normalized = feat.apply_normalizer(matrix, normalizer)
        X_train = normalized.values[train_rows]
    with _stage(timer, "repeats"):
        repeat_models = sel.run_repeats(X_train, y_train, cfg.selection, threads=cfg.threads)
    with _stage(timer, "aggregate"):
        ranking = sel.aggregate_rf(repeat_models, cfg.selection.penalty_c)
    with _stage(timer, "d_star"):
        d_star_result = sel.select_d_star(
            X_train, y_train, ranking, cfg.selection, threads=cfg.threads
        )
    with _stage(timer, "final_train"):
        final_model = sel.train_final(
            X_train, y_train, ranking, d_star_result.d_star, cfg.selection.train_config
        )
    sel.write_ranking_csv(ranking, matrix.feature_names, out / "ranking.csv")
    sel.write_cv_curve_csv(d_star_result.curve, out / "cv_curve.csv")
    write_model_json(final_model, out / "model.json")
    feat.write_normalizer_json(normalizer, matrix.feature_names, out / "normalizer.json")
    return out / "model.json"


def run_analyze(cfg: RunConfig, emit: str = "all") -> ana.DivideReport:
    """Corpus plus stored model to series and reports (the `analyze` subcommand).

    emit: "csv" writes series.csv only; "json" adds divide/trend reports;
    "all" additionally writes the SVG plot when cfg.plots is set.
    """
    out = cfg.output_dir
    timer = _StageTimer()
    with _stage(timer, "read_model"):
        final_model = read_model_json(out / "model.json")
        normalizer, names = feat.read_normalizer_json(out / "normalizer.json")
    documents, samples, _, raw_matrix, _ = _extract_stage_with_names(cfg, timer, names)
    with _stage(timer, "score"):
        normalized = feat.apply_normalizer(raw_matrix, normalizer)
        test_rows = _rows_in_doc_range(normalized, samples, documents, cfg.test_range)
        if not test_rows:
            raise PipelineError("score", "test range matches no samples")
        values = decision_values(final_model, normalized.values[test_rows])
        series = ana.DecisionSeries(
            ordinals=tuple(normalized.ordinals[i] for i in test_rows),
            values=tuple(float(v) for v in values),
            sample_ids=tuple(normalized.sample_ids[i] for i in test_rows),
            source=f"final-model-d{final_model.subset_size}",
        )
    with _stage(timer, "analysis"):
        divide = ana.detect_divide(series, theta=cfg.theta, min_side=cfg.min_side)
        trend = ana.detect_trend(
            series,
            permutations=cfg.permutations,
            seed=sel.derive_seed(cfg.selection.master_seed, sel.ROLE_TREND, 0),
        )
    ana.write_series_csv(series, out / "series.csv")
    if emit in ("json", "all"):
        ana.write_report_json(ana.divide_report_dict(divide), out / "divide.json")
        ana.write_report_json(ana.trend_report_dict(trend), out / "trend.json")
    if emit == "all" and cfg.plots:
        (out / "series.svg").write_text(
            plots.decision_series_svg(series, divide), encoding="utf-8"
        )
    return divide


def run_distance(cfg: RunConfig) -> Path:
    """Distances between labeled groups (the `distance` subcommand)."""
    out = cfg.output_dir
    timer = _StageTimer()
    with _stage(timer, "read_model"):
        final_model = read_model_json(out / "model.json")
        normalizer, names = feat.read_normalizer_json(out / "normalizer.json")
    documents, samples, _, raw_matrix, _ = _extract_stage_with_names(cfg, timer, names)
    with _stage(timer, "distances"):
        normalized = feat.apply_normalizer(raw_matrix, normalizer)
        test_rows = set(
            _rows_in_doc_range(normalized, samples, documents, cfg.test_range)
        )
        groups: dict[int, str] = {}
        for i, tag in enumerate(normalized.class_tags):
            if tag in (CLASS_A, CLASS_B):
                groups[normalized.ordinals[i]] = tag
            elif i in test_rows:
                groups[normalized.ordinals[i]] = TEST_GROUP
        restricted = _restrict_columns(normalized, final_model.active_features)
        distances = ana.group_distances(restricted, groups)
    ana.write_distances_csv(distances, out / "distances.csv")
    ana.write_distance_matrix_csv(distances, out / "distance_matrix.csv")
    if cfg.plots:
        (out / "distances.svg").write_text(
            plots.distance_heatmap_svg(distances), encoding="utf-8"
        )
    return out / "distances.csv"


def _extract_stage_with_names(cfg: RunConfig, timer: _StageTimer, names: Sequence[str]):
    """Extraction against a stored feature spec (no vocabulary rebuild)."""
    with _stage(timer, "load"):
        documents = load_corpus(cfg.corpus_locator)
    with _stage(timer, "segment"):
        labels = {cfg.label_a: CLASS_A, cfg.label_b: CLASS_B}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            samples = segment_samples(documents, cfg.policy, labels)
        captured = _format_warnings(caught)
    with _stage(timer, "extract"):
        spec = feat.FeatureSpec.from_feature_names(list(names))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            raw_matrix = feat.build_feature_matrix(samples, spec)
        captured.extend(_format_warnings(caught))
    return documents, samples, spec, raw_matrix, captured
