"""CSV matrices, CSV tables and JSON envelopes.

Matrix CSVs are row-major and full-square.  The header row is
``config:<hash>`` followed by the column cell indices, and every data row
starts with its row cell index.  Floats are written with 17 significant
digits so a file round-trips bit-exactly and reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

REPORT_SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix_csv(path, matrix: np.ndarray, rows, cols, config_hash: str) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"config:{config_hash}"] + [int(c) for c in cols])
        for r, line in zip(rows, np.asarray(matrix)):
            w.writerow([int(r)] + [_fmt(v) for v in line])
    return path


def read_matrix_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, str]:
    """(matrix, row cell indices, column cell indices, config hash)."""
    with Path(path).open(newline="") as fh:
        lines = list(csv.reader(fh))
    head = lines[0]
    if not head[0].startswith("config:"):
        raise ValueError(f"{path}: header must start with config:<hash>")
    cols = np.array([int(c) for c in head[1:]], dtype=int)
    rows = np.array([int(line[0]) for line in lines[1:]], dtype=int)
    M = np.array([[float(v) for v in line[1:]] for line in lines[1:]])
    return M, rows, cols, head[0].split(":", 1)[1]


def write_table_csv(path, columns: dict, config_hash: str) -> Path:
    """Column-oriented table; the first header cell carries the config hash."""
    path = Path(path)
    names = list(columns)
    length = len(next(iter(columns.values()))) if columns else 0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"config:{config_hash}"] + names)
        for i in range(length):
            row = []
            for name in names:
                v = columns[name][i]
                row.append(_fmt(v) if isinstance(v, (float, np.floating)) else v)
            w.writerow([i] + row)
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def envelope(kind: str, data: dict, config_hash: str, grid_hash: str | None = None, quad: dict | None = None) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": kind,
        "config_hash": config_hash,
        "grid_hash": grid_hash,
        "quadrature": quad,
        "data": _plain(data),
    }


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=True) + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
