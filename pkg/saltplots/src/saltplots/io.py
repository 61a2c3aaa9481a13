"""Readers for the simulator CLI's delimited outputs.

Rendering never recomputes dynamics: everything a panel shows comes from
these files.  Missing columns abort with a named error.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PlotInputError(Exception):
    """Input file missing, empty, or lacking a required column."""


@dataclass(frozen=True)
class SweepData:
    values: np.ndarray
    columns: dict
    word_ids: np.ndarray
    path: str


@dataclass(frozen=True)
class SampleData:
    columns: dict
    modes: np.ndarray
    path: str


def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise PlotInputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise PlotInputError(f"{path}: empty file")
    header, data = rows[0], rows[1:]
    if not data:
        raise PlotInputError(f"{path}: no data rows below the header")
    return header, data


def require_column(columns, name, path):
    if name not in columns:
        raise PlotInputError(
            f"{path}: missing column {name!r}; available: {sorted(columns)}"
        )
    return columns[name]


def load_sweep(path) -> SweepData:
    """Sweep CSV: sweep_value, q_1..q_d, v_1..v_d, word_id."""
    header, data = _read_rows(path)
    for required in ("sweep_value", "word_id"):
        if required not in header:
            raise PlotInputError(f"{path}: missing column {required!r}")
    cols = {name: np.array([float(r[k]) for r in data])
            for k, name in enumerate(header) if name != "word_id"}
    word_ids = np.array([int(r[header.index("word_id")]) for r in data])
    return SweepData(cols["sweep_value"], cols, word_ids, str(path))


def load_samples(path) -> SampleData:
    """Trajectory CSV: t, q_1..q_d, v_1..v_d, mode_bitmask."""
    header, data = _read_rows(path)
    for required in ("t", "mode_bitmask"):
        if required not in header:
            raise PlotInputError(f"{path}: missing column {required!r}")
    cols = {name: np.array([float(r[k]) for r in data])
            for k, name in enumerate(header) if name != "mode_bitmask"}
    modes = np.array([int(r[header.index("mode_bitmask")]) for r in data])
    return SampleData(cols, modes, str(path))


def load_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise PlotInputError(f"input file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise PlotInputError(f"{path}: invalid JSON ({exc})") from exc
