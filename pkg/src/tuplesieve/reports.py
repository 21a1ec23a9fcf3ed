"""Run manifests and report serialization.

Every JSON report embeds the manifest of the run that produced it:
subcommand, the full parameter set, seed, the table-cache identity and
tool version. Writers are deterministic (sorted keys, fixed float repr),
so reruns with identical manifests and seeds produce byte-identical
files apart from the recorded wall time.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, is_dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    parameters: dict
    seed: int | None
    table_cache: str | None
    version: str
    wall_time_s: float


def make_manifest(subcommand: str, parameters: dict, seed, table_cache, started: float) -> RunManifest:
    return RunManifest(
        subcommand=subcommand,
        parameters={k: _plain(v) for k, v in sorted(parameters.items())},
        seed=seed,
        table_cache=str(table_cache) if table_cache else None,
        version=__version__,
        wall_time_s=round(time.time() - started, 3),
    )


def _plain(obj):
    """Reduce result objects to JSON-serializable structures."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator, "float": float(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, manifest: RunManifest, results) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"manifest": _plain(manifest), "results": _plain(results)}
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def read_manifest(path) -> RunManifest:
    obj = json.loads(Path(path).read_text())["manifest"]
    return RunManifest(**obj)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
    return path


def _csv_cell(v):
    if isinstance(v, Fraction):
        return repr(float(v)) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    return v


# fixed column order shared by the per-cell error reports and scan grids
AP_CSV_HEADER = ("x", "q", "a", "E", "weil_ratio", "linear_ratio")
