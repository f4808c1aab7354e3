"""Read-only loaders for chtumor run directories.

Nothing in this package recomputes physics or writes into input directories;
it parses the solver's CSV/JSON/raw-float64 formats and renders figures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PlotDataError(RuntimeError):
    """Missing or malformed input; the message names the path (and row)."""


def _require(path: Path) -> Path:
    if not path.exists():
        raise PlotDataError(f"missing input file: {path}")
    return path


def read_csv_columns(path: Path, string_cols: tuple[str, ...] = ()) -> dict[str, np.ndarray]:
    lines = _require(path).read_text().strip().splitlines()
    if not lines:
        raise PlotDataError(f"empty CSV: {path}")
    header = lines[0].split(",")
    cols: dict[str, list] = {name: [] for name in header}
    for idx, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise PlotDataError(f"{path}: row {idx} has {len(parts)} fields, expected {len(header)}")
        for name, value in zip(header, parts):
            if name in string_cols:
                cols[name].append(value)
            else:
                try:
                    cols[name].append(float(value))
                except ValueError:
                    raise PlotDataError(f"{path}: row {idx}: bad number {value!r} in column {name!r}")
    return {
        name: (np.array(vals) if name in string_cols else np.array(vals, dtype=float))
        for name, vals in cols.items()
    }


@dataclass(frozen=True)
class Snapshot:
    field: str
    time: float
    step_index: int
    extents: tuple[float, ...]
    modes: tuple[int, ...]
    values: np.ndarray


@dataclass(frozen=True)
class RunData:
    directory: Path
    diagnostics: dict[str, np.ndarray]
    summary: dict
    snapshots: tuple[Snapshot, ...]


def load_snapshots(run_dir: Path) -> tuple[Snapshot, ...]:
    out = []
    for sidecar in sorted(run_dir.glob("*_[0-9]*.json")):
        meta = json.loads(sidecar.read_text())
        if not isinstance(meta, dict) or "field" not in meta:
            continue
        raw = sidecar.with_suffix(".f64")
        _require(raw)
        modes = tuple(int(n) for n in meta["grid"]["modes"])
        values = np.frombuffer(raw.read_bytes(), dtype="<f8")
        if values.size != int(np.prod(modes)):
            raise PlotDataError(f"{raw}: {values.size} values do not match grid {modes}")
        out.append(Snapshot(
            field=meta["field"],
            time=float(meta["time"]),
            step_index=int(meta.get("step_index", 0)),
            extents=tuple(float(x) for x in meta["grid"]["extents"]),
            modes=modes,
            values=values.reshape(modes),
        ))
    return tuple(sorted(out, key=lambda s: (s.step_index, s.field)))


def load_run(run_dir) -> RunData:
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise PlotDataError(f"run directory not found: {run_dir}")
    diag = read_csv_columns(run_dir / "diagnostics.csv")
    summary = json.loads(_require(run_dir / "run_summary.json").read_text())
    return RunData(run_dir, diag, summary, load_snapshots(run_dir))


def load_convergence(run_dir: Path) -> dict[str, np.ndarray]:
    return read_csv_columns(Path(run_dir) / "convergence.csv", string_cols=("study",))


def load_amplification(run_dir: Path) -> dict[str, np.ndarray]:
    return read_csv_columns(Path(run_dir) / "amplification.csv")
