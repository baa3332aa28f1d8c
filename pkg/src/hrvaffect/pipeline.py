"""Reproducible pipeline stages behind the CLI.

A run is defined by one PipelineConfig; its canonical JSON is hashed and the
hash stamped into every emitted file, so an output directory can never silently
mix artifacts from different configurations.  All stage outputs are pure
functions of (inputs, config, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import explain as explain_mod
from . import ingest, svgplot
from .core import LabelScheme, Modality
from .dsp import DEFAULT_ECG_FILTER, DEFAULT_PPG_FILTER, FilterSpec, WindowSpec, filter_signal, segment_windows
from .hrv import (
    FEATURE_NAMES,
    FeatureVector,
    NoPlausiblePeaksError,
    TooFewBeatsError,
    compute_features,
    detect_beats,
)
from .learn import ExtraTreesParams, evaluate, model_from_dict, model_to_dict
from .serialize import config_hash, fmt9, read_csv, read_json, write_csv, write_json
from .variance import flag_overlapping_pairs, inter_signal_variance, state_feature_stats

FEATURES_CSV = "features.csv"
EXTRACT_STATS_JSON = "extract_stats.json"
VARIANCE_CSV = "variance.csv"
VARIANCE_SUMMARY_CSV = "variance_summary.csv"
STATE_STATS_CSV = "state_stats.csv"
STATE_OVERLAPS_JSON = "state_overlaps.json"
METRICS_JSON = "metrics.json"
ROC_POINTS_CSV = "roc_points.csv"
MODEL_JSON = "model.json"
IMPORTANCE_CSV = "importance.csv"
SHAP_POINTS_CSV = "shap_points.csv"
REPORT_JSON = "report.json"
CONFIG_JSON = "config.json"


class PipelineError(Exception):
    """Base for machine-readable pipeline failures."""

    code = "PipelineError"

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self)}


class MissingInputError(PipelineError):
    code = "MissingInput"

    def __init__(self, name: str, message: str | None = None):
        self.name = name
        super().__init__(message or f"required input {name!r} not found; run the producing stage first")

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self), "input": self.name}


class ConfigInvalidError(PipelineError):
    code = "ConfigInvalid"

    def __init__(self, fieldname: str, message: str):
        self.fieldname = fieldname
        super().__init__(message)

    def payload(self) -> dict:
        return {"error": self.code, "message": str(self), "field": self.fieldname}


class ConfigHashMismatchError(PipelineError):
    code = "ConfigHashMismatch"


@dataclass(frozen=True)
class LearnConfig:
    n_trees: int = 100
    k_features: int | None = None
    min_samples_leaf: int = 2
    knn_k: int = 5
    cv_folds: int = 5
    holdout_fraction: float = 0.2
    families: tuple[str, ...] = ("extra_trees", "knn", "gaussian_nb")
    subject_wise: bool = False


@dataclass(frozen=True)
class ExplainConfig:
    background_size: int = 100
    max_instances: int = 200


@dataclass(frozen=True)
class PipelineConfig:
    out_dir: str = "out"
    manifest_path: str | None = None
    synthetic_spec_path: str | None = None
    window: WindowSpec = field(default_factory=WindowSpec)
    ecg_filter: FilterSpec = DEFAULT_ECG_FILTER
    ppg_filter: FilterSpec = DEFAULT_PPG_FILTER
    learn: LearnConfig = field(default_factory=LearnConfig)
    explain: ExplainConfig = field(default_factory=ExplainConfig)
    seed: int = 0
    box_feature: str = "bpm"


def config_to_dict(config: PipelineConfig) -> dict:
    doc = asdict(config)
    doc["learn"]["families"] = list(config.learn.families)
    return doc


_TOP_KEYS = {
    "out_dir", "manifest_path", "synthetic_spec_path", "window", "ecg_filter",
    "ppg_filter", "learn", "explain", "seed", "box_feature",
}


def _sub_config(cls, doc: dict, fieldname: str):
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ConfigInvalidError(fieldname, f"unknown {fieldname} keys: {sorted(unknown)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalidError(fieldname, f"bad {fieldname} section: {exc}") from exc


def config_from_dict(doc: dict) -> PipelineConfig:
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigInvalidError(sorted(unknown)[0], f"unknown config keys: {sorted(unknown)}")
    out = dict(doc)
    if "window" in out:
        out["window"] = _sub_config(WindowSpec, out["window"], "window")
    if "ecg_filter" in out:
        out["ecg_filter"] = _sub_config(FilterSpec, out["ecg_filter"], "ecg_filter")
    if "ppg_filter" in out:
        out["ppg_filter"] = _sub_config(FilterSpec, out["ppg_filter"], "ppg_filter")
    if "learn" in out:
        learn = dict(out["learn"])
        if "families" in learn:
            learn["families"] = tuple(learn["families"])
        out["learn"] = _sub_config(LearnConfig, learn, "learn")
    if "explain" in out:
        out["explain"] = _sub_config(ExplainConfig, out["explain"], "explain")
    config = _sub_config(PipelineConfig, out, "config")
    validate_config(config)
    return config


def validate_config(config: PipelineConfig) -> PipelineConfig:
    if config.manifest_path is None and config.synthetic_spec_path is None:
        raise ConfigInvalidError(
            "manifest_path", "one of manifest_path or synthetic_spec_path is required"
        )
    if config.manifest_path is not None and config.synthetic_spec_path is not None:
        raise ConfigInvalidError(
            "manifest_path", "manifest_path and synthetic_spec_path are mutually exclusive"
        )
    try:
        config.window.validate()
    except ValueError as exc:
        raise ConfigInvalidError("window", str(exc)) from exc
    if config.box_feature not in FEATURE_NAMES:
        raise ConfigInvalidError("box_feature", f"unknown feature {config.box_feature!r}")
    if config.learn.cv_folds < 2:
        raise ConfigInvalidError("learn", "cv_folds must be >= 2")
    if not 0 < config.learn.holdout_fraction < 1:
        raise ConfigInvalidError("learn", "holdout_fraction must be in (0, 1)")
    for family in config.learn.families:
        if family not in ("extra_trees", "knn", "gaussian_nb"):
            raise ConfigInvalidError("learn", f"unknown family {family!r}")
    if config.explain.background_size < 1 or config.explain.max_instances < 1:
        raise ConfigInvalidError("explain", "explain sizes must be >= 1")
    return config


def run_hash(config: PipelineConfig) -> str:
    """Hash of the analytic configuration; out_dir is a destination, not an
    input, so runs differing only in destination share a hash (and bytes)."""
    doc = config_to_dict(config)
    doc.pop("out_dir")
    return config_hash(doc)


def prepare_out_dir(config: PipelineConfig, force: bool = False) -> tuple[Path, str]:
    """Create the output directory, guarding against config-hash collisions.

    A directory already stamped with a different config hash is refused unless
    force is set; the same hash may be extended/overwritten freely.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = run_hash(config)
    cfg_path = out / CONFIG_JSON
    if cfg_path.exists():
        existing = read_json(cfg_path)
        if existing.get("config_hash") != h and not force:
            raise ConfigHashMismatchError(
                f"{out} holds outputs for config {existing.get('config_hash')}, "
                f"current config is {h}; pass --force to overwrite"
            )
    write_json(cfg_path, {"config": config_to_dict(config)}, h)
    return out, h


# ---------------------------------------------------------------------------
# synth / data loading
# ---------------------------------------------------------------------------

def stage_synth(spec_path: str | Path, out_dir: str | Path) -> Path:
    """Generate a synthetic dataset and write it in the canonical format."""
    spec = ingest.load_synthetic_spec(spec_path)
    subject, truth = ingest.generate_synthetic(spec)
    out = Path(out_dir)
    manifest_path = ingest.write_canonical([subject], "synthetic", out)
    ingest.write_ground_truth(truth, out / "ground_truth.json")
    return manifest_path


def load_subjects(config: PipelineConfig) -> tuple[list[ingest.SubjectData], LabelScheme]:
    if config.manifest_path is not None:
        manifest_path = Path(config.manifest_path)
        if not manifest_path.exists():
            raise MissingInputError(str(manifest_path))
        manifest = ingest.load_manifest(manifest_path)
        return ingest.load_dataset(manifest, manifest_path.parent), manifest.label_scheme
    spec_path = Path(config.synthetic_spec_path)
    if not spec_path.exists():
        raise MissingInputError(str(spec_path))
    spec = ingest.load_synthetic_spec(spec_path)
    subject, _ = ingest.generate_synthetic(spec)
    return [subject], ingest.synthetic_label_scheme(spec)


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureRow:
    window_id: int
    subject_id: str
    modality: str
    label: str
    features: FeatureVector | None  # None when beat detection failed


def extract_features(config: PipelineConfig) -> tuple[list[FeatureRow], dict]:
    """Filter, window and featurize every subject; returns rows plus counters."""
    subjects, scheme = load_subjects(config)
    rows: list[FeatureRow] = []
    stats = {
        "n_subjects": len(subjects),
        "label_scheme": scheme.value,
        "windows_labeled": 0,
        "modalities": {
            m.value: {"rows": 0, "detect_failures": 0, "too_few_beats": 0}
            for m in (Modality.ECG, Modality.PPG)
        },
    }
    for subject in subjects:
        ecg = filter_signal(subject.ecg, config.ecg_filter)
        ppg = filter_signal(subject.ppg, config.ppg_filter)
        pairs = segment_windows(ecg, ppg, subject.annotations, config.window)
        stats["windows_labeled"] += len(pairs)
        for pair in pairs:
            for segment in pair:
                counters = stats["modalities"][segment.modality.value]
                features = None
                try:
                    features = compute_features(detect_beats(segment), segment.sample_rate_hz)
                except NoPlausiblePeaksError:
                    counters["detect_failures"] += 1
                except TooFewBeatsError:
                    counters["too_few_beats"] += 1
                counters["rows"] += 1
                rows.append(
                    FeatureRow(
                        window_id=segment.window_id,
                        subject_id=segment.subject_id,
                        modality=segment.modality.value,
                        label=segment.label,
                        features=features,
                    )
                )
    rows.sort(key=lambda r: (r.subject_id, r.window_id, r.modality))
    return rows, stats


def stage_extract(config: PipelineConfig, force: bool = False) -> Path:
    out, h = prepare_out_dir(config, force)
    rows, stats = extract_features(config)
    csv_rows = []
    for r in rows:
        values = r.features.as_dict() if r.features is not None else {}
        csv_rows.append(
            [str(r.window_id), r.subject_id, r.modality, r.label]
            + [fmt9(values.get(name, math.nan)) for name in FEATURE_NAMES]
        )
    write_csv(
        out / FEATURES_CSV,
        ["window_id", "subject_id", "modality", "label", *FEATURE_NAMES],
        csv_rows,
        h,
    )
    write_json(out / EXTRACT_STATS_JSON, stats, h)
    return out / FEATURES_CSV


def read_feature_rows(out_dir: str | Path) -> list[FeatureRow]:
    path = Path(out_dir) / FEATURES_CSV
    if not path.exists():
        raise MissingInputError(FEATURES_CSV)
    _, raw_rows = read_csv(path)
    rows = []
    for raw in raw_rows:
        values = {name: float(raw[name]) if raw[name] != "" else math.nan for name in FEATURE_NAMES}
        all_missing = all(math.isnan(v) for v in values.values())
        rows.append(
            FeatureRow(
                window_id=int(raw["window_id"]),
                subject_id=raw["subject_id"],
                modality=raw["modality"],
                label=raw["label"],
                features=None if all_missing else FeatureVector(**values),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# variance
# ---------------------------------------------------------------------------

def stage_variance(config: PipelineConfig, force: bool = False) -> dict:
    out, h = prepare_out_dir(config, force)
    rows = read_feature_rows(out)
    by_modality: dict[str, dict] = {"ECG": {}, "PPG": {}}
    for r in rows:
        if r.features is not None:
            by_modality[r.modality][(r.subject_id, r.window_id)] = r.features
    isv = inter_signal_variance(by_modality["ECG"], by_modality["PPG"])

    series_rows = []
    summary_rows = []
    for feature in FEATURE_NAMES:
        series = isv.per_feature[feature]
        for key, diff in zip(series.window_keys, series.abs_diff):
            series_rows.append([str(key[1]), key[0], feature, fmt9(diff)])
        summary_rows.append(
            [
                feature,
                str(len(series.window_keys)),
                fmt9(series.mean),
                fmt9(series.max),
                str(series.missing_count),
                fmt9(series.pooled_mean_abs),
                fmt9(series.normalized_mean),
            ]
        )
    series_rows.sort(key=lambda r: (r[1], int(r[0]), FEATURE_NAMES.index(r[2])))
    write_csv(out / VARIANCE_CSV, ["window_id", "subject_id", "feature", "abs_diff"], series_rows, h)
    write_csv(
        out / VARIANCE_SUMMARY_CSV,
        ["feature", "n_windows", "mean_abs_diff", "max_abs_diff", "missing_count",
         "pooled_mean_abs", "normalized_mean_abs_diff"],
        summary_rows,
        h,
    )

    stats = state_feature_stats(
        [((r.subject_id, r.window_id), r.modality, r.label, r.features)
         for r in rows if r.features is not None]
    )
    stats_rows = [
        [g.feature, g.state, g.modality, str(g.n), fmt9(g.minimum), fmt9(g.q1), fmt9(g.q2),
         fmt9(g.q3), fmt9(g.maximum), fmt9(g.mean), fmt9(g.std), str(g.outlier_count)]
        for g in stats
    ]
    write_csv(
        out / STATE_STATS_CSV,
        ["feature", "state", "modality", "n", "min", "q1", "q2", "q3", "max", "mean",
         "std", "outlier_count"],
        stats_rows,
        h,
    )

    # Charts: the headline absolute-difference series and one state boxplot.
    chart_features = ("bpm", "ibi", "br")
    svgplot.line_chart(
        out / "variance_series.svg",
        [
            (
                feature,
                [float(k[1]) for k in isv.per_feature[feature].window_keys],
                list(isv.per_feature[feature].abs_diff),
            )
            for feature in chart_features
        ],
        "Absolute ECG-PPG feature difference per window",
        "window id",
        "absolute difference",
        h,
    )
    box_feature = config.box_feature
    boxes = [
        (f"{g.state}/{g.modality}", g.minimum, g.q1, g.q2, g.q3, g.maximum, [])
        for g in stats
        if g.feature == box_feature and not g.insufficient
    ]
    if boxes:
        svgplot.box_chart(
            out / f"state_box_{box_feature}.svg",
            boxes,
            f"{box_feature} by state and signal",
            box_feature,
            h,
        )

    overlaps = {
        modality: [
            [a, b, score]
            for a, b, score in flag_overlapping_pairs(stats, box_feature, modality)
        ]
        for modality in ("ECG", "PPG")
    }
    write_json(
        out / STATE_OVERLAPS_JSON,
        {"feature": box_feature, "threshold": 0.5, "flagged_pairs": overlaps},
        h,
    )
    return {
        "mean_normalized_variance": isv.mean_normalized(),
        "overlap_flags": overlaps,
    }


# ---------------------------------------------------------------------------
# train / evaluate
# ---------------------------------------------------------------------------

def _modality_matrix(rows: list[FeatureRow], modality: str):
    """Feature matrix for one modality, dropping rows with any missing value."""
    kept_rows, dropped = [], 0
    for r in rows:
        if r.modality != modality:
            continue
        if r.features is None:
            dropped += 1
            continue
        arr = r.features.as_array()
        if not np.isfinite(arr).all():
            dropped += 1
            continue
        kept_rows.append((r, arr))
    if not kept_rows:
        return np.zeros((0, len(FEATURE_NAMES))), np.array([]), [], np.array([]), dropped
    X = np.stack([arr for _, arr in kept_rows])
    y = np.array([r.label for r, _ in kept_rows])
    ids = [f"{r.subject_id}:{r.window_id}" for r, _ in kept_rows]
    subjects = np.array([r.subject_id for r, _ in kept_rows])
    return X, y, ids, subjects, dropped


def stage_train_eval(config: PipelineConfig, force: bool = False) -> dict:
    out, h = prepare_out_dir(config, force)
    rows = read_feature_rows(out)
    params = ExtraTreesParams(
        n_trees=config.learn.n_trees,
        k_features=config.learn.k_features,
        min_samples_leaf=config.learn.min_samples_leaf,
    )
    metrics: dict = {"seed": config.seed, "modalities": {}}
    models_doc: dict = {"modalities": {}}
    roc_rows = []
    for modality in ("ECG", "PPG"):
        X, y, ids, subjects, dropped = _modality_matrix(rows, modality)
        report, fitted = evaluate(
            X, y, FEATURE_NAMES,
            families=config.learn.families,
            params=params,
            seed=config.seed,
            folds=config.learn.cv_folds,
            holdout_fraction=config.learn.holdout_fraction,
            knn_k=config.learn.knn_k,
            subjects=subjects,
            subject_wise=config.learn.subject_wise,
        )
        metrics["modalities"][modality] = {
            "n_rows": int(X.shape[0]),
            "dropped_rows": dropped,
            "folds": report.folds,
            "families": {
                name: {
                    "fold_accuracies": list(res.fold_accuracies),
                    "mean_cv_accuracy": res.mean_accuracy,
                    "std_cv_accuracy": res.std_accuracy,
                }
                for name, res in report.families.items()
            },
            "selected_family": report.selected_family,
            "holdout_accuracy": report.holdout_accuracy,
            "n_train": report.n_train,
            "n_holdout": report.n_holdout,
            "confusion": {
                "labels": list(report.confusion_labels),
                "matrix": report.confusion_matrix.tolist(),
            },
            "roc_auc": {label: curve.auc for label, curve in sorted(report.roc.items())},
        }
        models_doc["modalities"][modality] = {
            "model": model_to_dict(fitted["extra_trees"]),
            "selected_family": report.selected_family,
            "train_ids": report.train_ids.tolist(),
            "holdout_ids": report.holdout_ids.tolist(),
            "row_ids": ids,
        }
        for label, curve in sorted(report.roc.items()):
            for fpr, tpr in zip(curve.fpr, curve.tpr):
                roc_rows.append([modality, label, fmt9(fpr), fmt9(tpr)])
        svgplot.roc_chart(
            out / f"roc_{modality}.svg",
            [
                (label, list(curve.fpr), list(curve.tpr), curve.auc)
                for label, curve in sorted(report.roc.items())
            ],
            f"One-versus-rest ROC ({modality})",
            h,
        )
    write_json(out / METRICS_JSON, metrics, h)
    write_json(out / MODEL_JSON, models_doc, h)
    write_csv(out / ROC_POINTS_CSV, ["modality", "class", "fpr", "tpr"], roc_rows, h)
    return metrics


# ---------------------------------------------------------------------------
# importance
# ---------------------------------------------------------------------------

def stage_importance(config: PipelineConfig, force: bool = False) -> dict:
    out, h = prepare_out_dir(config, force)
    rows = read_feature_rows(out)
    model_path = out / MODEL_JSON
    if not model_path.exists():
        raise MissingInputError(MODEL_JSON)
    models_doc = read_json(model_path)

    importance_rows = []
    point_rows = []
    summary: dict = {}
    for modality in ("ECG", "PPG"):
        entry = models_doc["modalities"][modality]
        model = model_from_dict(entry["model"])
        X, y, ids, _, _ = _modality_matrix(rows, modality)
        if entry["row_ids"] != ids:
            raise PipelineError(
                f"{FEATURES_CSV} no longer matches {MODEL_JSON} for {modality}; re-run train-eval"
            )
        train_ids = np.array(entry["train_ids"], dtype=np.int64)
        holdout_ids = np.array(entry["holdout_ids"], dtype=np.int64)
        background = explain_mod.sample_background(
            X[train_ids], config.explain.background_size, config.seed
        )
        report = explain_mod.global_importance(
            model,
            X[holdout_ids],
            y[holdout_ids],
            [ids[i] for i in holdout_ids],
            background,
            seed=config.seed,
            max_instances=config.explain.max_instances,
        )
        for scope, means in [("global", report.global_mean_abs)] + sorted(
            report.per_state_mean_abs.items()
        ):
            order = sorted(
                range(len(FEATURE_NAMES)), key=lambda i: (-means[i], i)
            )
            rank_of = {i: pos + 1 for pos, i in enumerate(order)}
            for i, feature in enumerate(FEATURE_NAMES):
                importance_rows.append(
                    [modality, feature, scope, fmt9(means[i]), str(rank_of[i])]
                )
        for instance_id, state, feature, phi, value in report.points:
            point_rows.append([modality, str(instance_id), state, feature, fmt9(phi), fmt9(value)])
        svgplot.bar_chart(
            out / f"importance_{modality}.svg",
            list(report.ranking),
            [report.global_mean_abs[FEATURE_NAMES.index(f)] for f in report.ranking],
            f"Mean |SHAP value| ({modality})",
            "mean |phi|",
            h,
        )
        summary[modality] = {
            "ranking": list(report.ranking),
            "n_explained": report.n_explained,
        }
    write_csv(
        out / IMPORTANCE_CSV,
        ["modality", "feature", "scope", "mean_abs_shap", "rank"],
        importance_rows,
        h,
    )
    write_csv(
        out / SHAP_POINTS_CSV,
        ["modality", "instance_id", "state", "feature", "phi", "feature_value"],
        point_rows,
        h,
    )
    return summary


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def report_schema() -> dict:
    """The shipped JSON schema that every emitted report must satisfy."""
    schema_path = resources.files("hrvaffect").joinpath("schemas/report.schema.json")
    return json.loads(schema_path.read_text(encoding="utf-8"))


def validate_schema(doc, schema, path="$") -> list[str]:
    """Small structural validator for the shipped report schema subset."""
    problems = []
    expected = schema.get("type")
    if expected is not None:
        kinds = expected if isinstance(expected, list) else [expected]
        checks = {
            "object": lambda v: isinstance(v, dict),
            "array": lambda v: isinstance(v, list),
            "string": lambda v: isinstance(v, str),
            "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
            "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
            "boolean": lambda v: isinstance(v, bool),
            "null": lambda v: v is None,
        }
        if not any(checks[kind](doc) for kind in kinds):
            problems.append(f"{path}: expected {expected}, got {type(doc).__name__}")
            return problems
    if isinstance(doc, dict):
        for key in schema.get("required", []):
            if key not in doc:
                problems.append(f"{path}: missing required key {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in doc:
                problems.extend(validate_schema(doc[key], sub, f"{path}.{key}"))
    if isinstance(doc, list) and "items" in schema:
        for i, item in enumerate(doc):
            problems.extend(validate_schema(item, schema["items"], f"{path}[{i}]"))
    return problems


def stage_report(config: PipelineConfig, force: bool = False) -> Path:
    out, h = prepare_out_dir(config, force)
    for name in (EXTRACT_STATS_JSON, VARIANCE_SUMMARY_CSV, METRICS_JSON, IMPORTANCE_CSV):
        if not (out / name).exists():
            raise MissingInputError(name)

    _, summary_rows = read_csv(out / VARIANCE_SUMMARY_CSV)
    per_feature = {
        row["feature"]: {
            "mean_abs_diff": float(row["mean_abs_diff"]) if row["mean_abs_diff"] else None,
            "max_abs_diff": float(row["max_abs_diff"]) if row["max_abs_diff"] else None,
            "missing_count": int(row["missing_count"]),
            "normalized_mean_abs_diff": (
                float(row["normalized_mean_abs_diff"]) if row["normalized_mean_abs_diff"] else None
            ),
        }
        for row in summary_rows
    }
    normalized = [
        v["normalized_mean_abs_diff"] for v in per_feature.values()
        if v["normalized_mean_abs_diff"] is not None
    ]
    _, importance_rows = read_csv(out / IMPORTANCE_CSV)
    rankings: dict[str, list[str]] = {}
    for row in importance_rows:
        if row["scope"] == "global":
            rankings.setdefault(row["modality"], [None] * len(FEATURE_NAMES))
            rankings[row["modality"]][int(row["rank"]) - 1] = row["feature"]

    overlaps = {}
    if (out / STATE_OVERLAPS_JSON).exists():
        overlaps = read_json(out / STATE_OVERLAPS_JSON)
        overlaps.pop("config_hash", None)
    doc = {
        "config": config_to_dict(config),
        "extract": read_json(out / EXTRACT_STATS_JSON),
        "variance": {
            "mean_normalized_variance": (
                float(np.mean(normalized)) if normalized else None
            ),
            "per_feature": per_feature,
            "state_overlaps": overlaps,
        },
        "metrics": read_json(out / METRICS_JSON),
        "importance": {"rankings": rankings},
    }
    doc["extract"].pop("config_hash", None)
    doc["metrics"].pop("config_hash", None)
    write_json(out / REPORT_JSON, doc, h)

    final = read_json(out / REPORT_JSON)
    problems = validate_schema(final, report_schema())
    if problems:
        raise PipelineError(f"report does not match schema: {problems}")
    return out / REPORT_JSON
