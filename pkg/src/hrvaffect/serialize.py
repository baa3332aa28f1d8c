"""Deterministic text serialization shared by all report emitters.

Floats in derived outputs are written with 9 significant digits so repeated
runs produce byte-identical files across platforms; NaN becomes the empty
field in CSV and null in JSON.
"""

from __future__ import annotations

import hashlib
import json
import math
import numbers
from pathlib import Path


def fmt9(value) -> str:
    """9-significant-digit text for a float; empty string for missing."""
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.9g}"


def round9(obj):
    """Recursively round floats to 9 significant digits; NaN/inf become None."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, str):
        return obj
    if isinstance(obj, numbers.Integral):
        return int(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {str(k): round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round9(v) for v in obj]
    # numpy scalars and anything else numeric-like
    try:
        return round9(float(obj))
    except (TypeError, ValueError):
        return str(obj)


def config_hash(config_doc: dict) -> str:
    """Short stable hash of a canonicalized config document."""
    canonical = json.dumps(round9(config_doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def write_csv(path: str | Path, columns: list[str], rows: list[list], cfg_hash: str):
    """CSV with a config-hash comment line; cell values already stringified."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    """Read a CSV written by write_csv, skipping comment lines."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if not line.startswith("#")]
    if not lines:
        return [], []
    columns = lines[0].split(",")
    rows = [dict(zip(columns, line.split(","))) for line in lines[1:] if line]
    return columns, rows


def write_json(path: str | Path, doc: dict, cfg_hash: str | None = None):
    doc = dict(doc)
    if cfg_hash is not None:
        doc["config_hash"] = cfg_hash
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(round9(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
