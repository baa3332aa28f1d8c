"""Command-line entry points for the full pipeline.

Each subcommand is a thin wrapper over one pipeline stage.  Configuration
comes from an optional JSON file plus flag overrides; failures exit non-zero
with a single machine-readable JSON object on stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import adapters, ingest, pipeline
from .serialize import read_json


def _fail(payload: dict):
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(1)


def _run_stage(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except pipeline.PipelineError as exc:
        _fail(exc.payload())
    except (
        ingest.MissingFileError,
        ingest.ParseError,
        ingest.RateMismatchError,
        ingest.InvalidSpecError,
        adapters.UnrecognizedLayoutError,
    ) as exc:
        _fail({"error": type(exc).__name__.removesuffix("Error"), "message": str(exc)})
    except ValueError as exc:
        _fail({"error": type(exc).__name__.removesuffix("Error"), "message": str(exc)})


@click.group()
def main():
    """HRV feature variance and affective-state classification pipeline."""


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(), help="Synthetic spec JSON.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Dataset directory.")
def synth(spec_path, out_dir):
    """Generate a synthetic dataset in the canonical on-disk format."""
    manifest = _run_stage(pipeline.stage_synth, spec_path, out_dir)
    click.echo(str(manifest))


@main.command("adapt-wesad")
@click.option("--raw", "raw_root", required=True, type=click.Path(), help="Raw export root.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Dataset directory.")
def adapt_wesad(raw_root, out_dir):
    """Adapt a wearable-stress dataset export to the canonical format."""
    manifest = _run_stage(adapters.adapt_wesad, raw_root, out_dir)
    click.echo(str(manifest))


@main.command("adapt-case")
@click.option("--raw", "raw_root", required=True, type=click.Path(), help="Raw export root.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Dataset directory.")
def adapt_case(raw_root, out_dir):
    """Adapt a continuous-annotation dataset export to the canonical format."""
    manifest = _run_stage(adapters.adapt_case, raw_root, out_dir)
    click.echo(str(manifest))


def _config_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(), default=None,
                     help="Pipeline config JSON; flags override its fields."),
        click.option("--manifest", default=None, help="Canonical dataset manifest path."),
        click.option("--synthetic-spec", default=None, help="Synthetic spec JSON path."),
        click.option("--out", "out_dir", default=None, help="Output directory."),
        click.option("--seed", type=int, default=None, help="Master random seed."),
        click.option("--window-len-s", type=float, default=None),
        click.option("--overlap-s", type=float, default=None),
        click.option("--ecg-order", type=int, default=None),
        click.option("--ecg-low-hz", type=float, default=None),
        click.option("--ecg-high-hz", type=float, default=None),
        click.option("--ecg-zero-phase/--ecg-causal", "ecg_zero_phase", default=None),
        click.option("--ppg-order", type=int, default=None),
        click.option("--ppg-low-hz", type=float, default=None),
        click.option("--ppg-high-hz", type=float, default=None),
        click.option("--ppg-zero-phase/--ppg-causal", "ppg_zero_phase", default=None),
        click.option("--n-trees", type=int, default=None),
        click.option("--k-features", type=int, default=None),
        click.option("--min-samples-leaf", type=int, default=None),
        click.option("--knn-k", type=int, default=None),
        click.option("--cv-folds", type=int, default=None),
        click.option("--holdout-fraction", type=float, default=None),
        click.option("--families", default=None,
                     help="Comma-separated model families to compare."),
        click.option("--subject-wise", is_flag=True, default=False,
                     help="Hold out and fold by whole subjects."),
        click.option("--background-size", type=int, default=None),
        click.option("--max-instances", type=int, default=None),
        click.option("--box-feature", default=None),
        click.option("--force", is_flag=True, default=False,
                     help="Allow writing into a directory stamped with a different config."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_config(config_path, **flags) -> pipeline.PipelineConfig:
    doc = {}
    if config_path is not None:
        if not Path(config_path).exists():
            _fail({"error": "MissingInput", "message": f"config file not found: {config_path}",
                   "input": str(config_path)})
        doc = read_json(config_path)
        doc.pop("config_hash", None)
    top = {
        "manifest": "manifest_path",
        "synthetic_spec": "synthetic_spec_path",
        "out_dir": "out_dir",
        "seed": "seed",
        "box_feature": "box_feature",
    }
    for flag, key in top.items():
        if flags.get(flag) is not None:
            doc[key] = flags[flag]
    window = {"window_len_s": "window_len_s", "overlap_s": "overlap_s"}
    for flag, key in window.items():
        if flags.get(flag) is not None:
            doc.setdefault("window", {})[key] = flags[flag]
    for prefix in ("ecg", "ppg"):
        section = f"{prefix}_filter"
        for flag, key in ((f"{prefix}_order", "order"), (f"{prefix}_low_hz", "low_cut_hz"),
                          (f"{prefix}_high_hz", "high_cut_hz"),
                          (f"{prefix}_zero_phase", "zero_phase")):
            if flags.get(flag) is not None:
                doc.setdefault(section, {})[key] = flags[flag]
    learn = ("n_trees", "k_features", "min_samples_leaf", "knn_k", "cv_folds",
             "holdout_fraction")
    for flag in learn:
        if flags.get(flag) is not None:
            doc.setdefault("learn", {})[flag] = flags[flag]
    if flags.get("families") is not None:
        doc.setdefault("learn", {})["families"] = [
            f.strip() for f in flags["families"].split(",") if f.strip()
        ]
    if flags.get("subject_wise"):
        doc.setdefault("learn", {})["subject_wise"] = True
    for flag in ("background_size", "max_instances"):
        if flags.get(flag) is not None:
            doc.setdefault("explain", {})[flag] = flags[flag]
    try:
        return pipeline.config_from_dict(doc)
    except pipeline.PipelineError as exc:
        _fail(exc.payload())


def _stage_command(name: str, stage_fn, help_text: str):
    @main.command(name, help=help_text)
    @_config_options
    def command(config_path, force, **flags):
        config = _build_config(config_path, **flags)
        result = _run_stage(stage_fn, config, force=force)
        if isinstance(result, Path):
            click.echo(str(result))
        else:
            click.echo(json.dumps({"ok": True, "out_dir": config.out_dir}, sort_keys=True))

    return command


_stage_command("extract", pipeline.stage_extract,
               "Filter, window and extract HRV features into features.csv.")
_stage_command("variance", pipeline.stage_variance,
               "Inter-signal and per-state feature variance reports.")
_stage_command("train-eval", pipeline.stage_train_eval,
               "Cross-validate model families, evaluate the holdout, emit ROC curves.")
_stage_command("importance", pipeline.stage_importance,
               "Shapley feature importance for the trained tree ensemble.")
_stage_command("report", pipeline.stage_report,
               "Aggregate all stage outputs into a single run-summary JSON.")


if __name__ == "__main__":
    main()
