"""Base class for scenario graphs to share common behavior."""

from __future__ import annotations

import functools
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Iterable

from langgraph.graph import StateGraph

from src.models.domain import AxisymmetricDomain
from src.models.exponents import CKNParams
from src.models.problem import ProblemSpec
from src.state import ScenarioState
from src.tools.exponent_tools import ckn_to_hardy
from src.tools.solver_tools import SolverOptions
from src.utils.artifacts import write_csv, write_json, write_line_plot, write_manifest
from src.utils.logging_config import logger
from src.utils.snapshot import write_snapshot

NodeFn = Callable[[ScenarioState], ScenarioState]


def _with_state(state: ScenarioState, **updates) -> ScenarioState:
    """Return a new state dict with updates applied."""

    return {**state, **updates}


def _merged(state: ScenarioState, key: str, **entries) -> dict:
    """Copy of the dict-valued state field `key` with entries added."""

    return {**state.get(key, {}), **entries}


def record_checks(state: ScenarioState, outcomes: Iterable[tuple[str, bool, str]]) -> dict:
    """State updates for named (check, ok, message) outcomes; failures append violations."""

    checks = dict(state.get("checks", {}))
    violations = list(state.get("violations", []))
    for name, ok, message in outcomes:
        checks[name] = bool(ok)
        if not ok:
            logger.warning("Check %s failed: %s", name, message)
            violations.append(f"{name}: {message}")
    return {"checks": checks, "violations": violations}


def record_check(state: ScenarioState, name: str, ok: bool, message: str) -> dict:
    return record_checks(state, [(name, ok, message)])


def solver_options(params, **overrides) -> SolverOptions:
    return SolverOptions(**{**params.solver_options(), **overrides})


def hardy_parameters(params) -> tuple[float, float]:
    """(lambda, s1) of a two-pole section, mapping CKN weights when present."""

    if params.ckn_a is None:
        return params.lam, params.s1
    return ckn_to_hardy(CKNParams(a=params.ckn_a, b=params.ckn_b), params.N)


def two_pole_spec(params, domain: AxisymmetricDomain, epsilon: float = 0.0) -> ProblemSpec:
    lam, s1 = hardy_parameters(params)
    return ProblemSpec.two_pole(params.N, s1, params.s2, lam, domain, epsilon)


class BaseGraph(ABC):
    """Abstract base class for all scenario graphs.

    Centralizes logging, the artifact-writing tail shared by every scenario
    and a consistent compile pattern so subclasses focus on node logic.
    """

    name: str = "scenario"

    def __init__(self):
        self.logger = logger

    @abstractmethod
    def build_graph(self) -> StateGraph:
        """Build and return the StateGraph instance."""

    def _log_node_execution(self, node_name: str, state: dict) -> None:
        """Log node execution start with minimal state context."""

        self.logger.debug("Executing node: %s (scenario=%s)", node_name, state.get("scenario", self.name))

    def _log_node_error(self, node_name: str, error: Exception) -> None:
        """Log node execution error; the exception still propagates to the runner."""

        self.logger.error("Node %s failed: %s: %s", node_name, type(error).__name__, str(error))

    def _node(self, node_name: str, fn: NodeFn) -> NodeFn:
        @functools.wraps(fn)
        def run(state: ScenarioState) -> ScenarioState:
            self._log_node_execution(node_name, state)
            try:
                return fn(state)
            except Exception as exc:
                self._log_node_error(node_name, exc)
                raise

        return run

    def add_nodes(self, graph: StateGraph, *nodes: tuple[str, NodeFn]) -> None:
        """Register nodes and chain them in order."""

        for node_name, fn in nodes:
            graph.add_node(node_name, self._node(node_name, fn))
        graph.set_entry_point(nodes[0][0])
        for (first, _), (second, _) in zip(nodes, nodes[1:]):
            graph.add_edge(first, second)

    def add_output_tail(self, graph: StateGraph, after: str) -> None:
        """after -> [render_plots] -> write_artifacts -> finish."""

        graph.add_node("render_plots", self._node("render_plots", self.node_render_plots))
        graph.add_node("write_artifacts", self._node("write_artifacts", self.node_write_artifacts))

        def route_plots(state: ScenarioState) -> str:
            return "render_plots" if state.get("plots") and state.get("plot_specs") else "write_artifacts"

        graph.add_conditional_edges(
            after,
            route_plots,
            {"render_plots": "render_plots", "write_artifacts": "write_artifacts"},
        )
        graph.add_edge("render_plots", "write_artifacts")
        graph.set_finish_point("write_artifacts")

    # ------------------------------------------------------------------
    # Shared nodes
    # ------------------------------------------------------------------
    def node_render_plots(self, state: ScenarioState) -> ScenarioState:
        """Render every plot spec as a deterministic SVG."""

        out_dir = Path(state["out_dir"])
        written = []
        for file_name, spec in sorted(state.get("plot_specs", {}).items()):
            written.append(write_line_plot(out_dir / file_name, **spec))
        return _with_state(state, artifacts=[*state.get("artifacts", []), *map(str, written)])

    def node_write_artifacts(self, state: ScenarioState) -> ScenarioState:
        """Write tables, documents and snapshots, then the manifest."""

        out_dir = Path(state["out_dir"])
        written = list(state.get("artifacts", []))
        footers = state.get("footers", {})
        for file_name, rows in sorted(state.get("tables", {}).items()):
            written.append(str(write_csv(out_dir / file_name, rows, footer=footers.get(file_name, ()))))
        for file_name, document in sorted(state.get("documents", {}).items()):
            written.append(str(write_json(out_dir / file_name, document)))
        for file_name, field in sorted(state.get("snapshots", {}).items()):
            written.append(str(write_snapshot(field, out_dir / file_name)))

        checks = state.get("checks", {})
        violations = state.get("violations", [])
        summary = {"scenario": state.get("scenario", self.name), "checks": checks, "violations": violations}
        written.append(str(write_json(out_dir / "checks.json", summary)))
        write_manifest(
            out_dir,
            state.get("scenario", self.name),
            state.get("seed", 0),
            state.get("resolved", {}),
            written,
            status="ok" if not violations else "violations",
        )
        return _with_state(state, artifacts=sorted(Path(p).relative_to(out_dir).as_posix() for p in written))

    def compile(self):
        """Build and compile the graph for execution."""

        graph = self.build_graph()
        return graph.compile()
