"""Run artifacts: CSV tables, JSON documents, the run manifest and optional SVG plots.

Every writer is deterministic: floats are printed with 17 significant
digits, JSON keys are sorted and plots carry no timestamps, so two runs
with the same inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os
import platform
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import scipy

from src import __version__
from src.utils.logging_config import logger

FLOAT_FORMAT = ".17g"


def json_safe(value: Any) -> Any:
    """Convert numpy scalars and non-finite floats into JSON-friendly values."""
    if isinstance(value, Mapping):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if math.isfinite(f):
            return f
        if math.isnan(f):
            return "NaN"
        return "Infinity" if f > 0 else "-Infinity"
    return value


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    if value is None:
        return ""
    return str(value)


def _atomic_write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    return path


def write_json(path: str | Path, data: Mapping[str, Any]) -> Path:
    text = json.dumps(json_safe(data), indent=2, sort_keys=True) + "\n"
    return _atomic_write_text(Path(path), text)


def write_csv(
    path: str | Path,
    rows: Sequence[Mapping[str, Any]],
    columns: Sequence[str] | None = None,
    *,
    footer: Iterable[Mapping[str, Any]] = (),
) -> Path:
    """One row per record; columns default to the first record's keys.

    footer rows (e.g. a fitted slope block) follow a blank line and are
    written as key,value pairs.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns or (rows[0].keys() if rows else []))
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
        footer = list(footer)
        if footer:
            writer.writerow([])
            for block in footer:
                for key, value in block.items():
                    writer.writerow([key, _cell(value)])
    os.replace(tmp, path)
    return path


def versions() -> dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "lab": __version__,
    }


def write_manifest(
    out_dir: str | Path,
    scenario: str,
    seed: int,
    parameters: Mapping[str, Any],
    artifacts: Iterable[str | Path],
    *,
    status: str = "ok",
) -> Path:
    """manifest.json with the resolved parameters, seed, versions and artifact list."""
    out_dir = Path(out_dir)
    names = sorted({Path(os.path.relpath(a, out_dir)).as_posix() for a in artifacts})
    manifest = {
        "scenario": scenario,
        "seed": seed,
        "status": status,
        "parameters": dict(parameters),
        "versions": versions(),
        "artifacts": names,
    }
    path = write_json(out_dir / "manifest.json", manifest)
    logger.info("Manifest written: %s (%d artifacts)", path, len(names))
    return path


def write_line_plot(
    path: str | Path,
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    *,
    xlabel: str,
    ylabel: str,
    title: str = "",
    logx: bool = False,
    hline: float | None = None,
) -> Path:
    """Deterministic SVG line plot (Agg backend, fixed hash salt, no date)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "hslab"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        for label, (x, y) in series.items():
            ax.plot(x, y, marker="o", label=label)
        if hline is not None:
            ax.axhline(hline, color="gray", linestyle="--", linewidth=1.0)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path
