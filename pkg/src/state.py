"""Shared LangGraph state definitions.

Every scenario graph runs on one ScenarioState. Report fields are plain
JSON-like values; solver objects (fields, traces, entire solutions) are
kept in memory only and never serialized.
"""

from __future__ import annotations

from typing import Any, TypedDict

JsonDict = dict[str, object]
JsonList = list[JsonDict]


class ScenarioState(TypedDict, total=False):
    """State for a scenario graph.

    Fields are optional at runtime because nodes populate them progressively.
    """

    # Scenario name from the [run] section.
    scenario: str
    # Validated scenario section (a pydantic model from src.models.scenario).
    params: Any
    # Master seed for every random draw in the run.
    seed: int
    # Directory receiving all artifacts.
    out_dir: str
    # Whether SVG plots are rendered.
    plots: bool
    # Resolved parameters recorded in the manifest.
    resolved: JsonDict
    # Oracle constants used by the run (S_N, threshold, ...).
    oracle: JsonDict
    # In-memory solver objects keyed by role ("entire", "trace", ...).
    objects: dict[str, Any]
    # CSV tables keyed by file name.
    tables: dict[str, JsonList]
    # Key/value blocks appended after a table, keyed by file name.
    footers: dict[str, JsonList]
    # JSON documents keyed by file name.
    documents: dict[str, JsonDict]
    # Grid-function snapshots keyed by file name.
    snapshots: dict[str, Any]
    # Plot specifications keyed by file name.
    plot_specs: dict[str, JsonDict]
    # Named pass/fail outcomes of the scenario's checks.
    checks: dict[str, bool]
    # Human-readable descriptions of failed invariants.
    violations: list[str]
    # Paths of every artifact written, relative to out_dir.
    artifacts: list[str]
