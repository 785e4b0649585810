"""Perturbed-problem graph: bubble threshold sweep, optional solve and bookkeeping."""

from __future__ import annotations

from langgraph.graph import StateGraph

from src.config import config
from src.graphs.base_graph import BaseGraph, _merged, _with_state, record_checks, solver_options
from src.models.domain import AxisymmetricDomain
from src.models.problem import ProblemSpec
from src.state import ScenarioState
from src.tools.functional_tools import concentration_bookkeeping
from src.tools.oracle_tools import sobolev_threshold
from src.tools.solver_tools import continuation, default_grid, initial_guess, minimize
from src.tools.testfn_tools import (
    BubbleSpec,
    bubble_calibration,
    bubble_threshold_check,
    check_perturbed_regime,
    margin_increasing,
)

BELOW_THRESHOLD_COUNT = 2


class PerturbedGraph(BaseGraph):
    """Bubble rays below S_N^{N/2}/N, then the perturbed and vanishing-limit runs."""

    name = "thm51-perturbed"

    def build_graph(self) -> StateGraph:
        graph = StateGraph(ScenarioState)
        self.add_nodes(
            graph,
            ("check_regime", self.node_check_regime),
            ("bubble_sweep", self.node_bubble_sweep),
        )
        graph.add_node("solve_perturbed", self._node("solve_perturbed", self.node_solve_perturbed))
        graph.add_node("vanishing_limit", self._node("vanishing_limit", self.node_vanishing_limit))

        def route_solve(state: ScenarioState) -> str:
            return "solve_perturbed" if state["params"].solve else "write_summary"

        graph.add_conditional_edges(
            "bubble_sweep",
            route_solve,
            {"solve_perturbed": "solve_perturbed", "write_summary": "write_summary"},
        )
        graph.add_edge("solve_perturbed", "vanishing_limit")
        graph.add_node("write_summary", self._node("write_summary", self.node_write_summary))
        graph.add_edge("vanishing_limit", "write_summary")
        self.add_output_tail(graph, after="write_summary")
        return graph

    def node_check_regime(self, state: ScenarioState) -> ScenarioState:
        """N >= 4 and 2*(s) - 1 < p < (N+2)/(N-2); ParameterError otherwise."""

        params = state["params"]
        p = params.exponent()
        check_perturbed_regime(params.N, params.s, p)
        spec = ProblemSpec.perturbed(params.N, params.s, p, AxisymmetricDomain.half_ball_flat(params.N, params.rmax))
        threshold = sobolev_threshold(params.N)
        return _with_state(
            state,
            oracle=_merged(state, "oracle", threshold=threshold),
            objects=_merged(state, "objects", spec=spec, p=p),
        )

    def node_bubble_sweep(self, state: ScenarioState) -> ScenarioState:
        params = state["params"]
        spec = state["objects"]["spec"]
        threshold = state["oracle"]["threshold"]
        mu_list = sorted(params.mu_list)
        bspec = BubbleSpec(center=params.center, mu=mu_list[0], cutoff_radius=params.cutoff_radius)
        records = bubble_threshold_check(bspec, spec, mu_list)
        calibration = bubble_calibration(params.N)

        largest = records[-BELOW_THRESHOLD_COUNT:]
        outcomes = [
            (
                "largest_mu_below_threshold",
                all(r.below_threshold for r in largest),
                f"margins {[r.margin for r in largest]} at mu {[r.mu for r in largest]}",
            ),
            ("margin_increasing", margin_increasing(records), f"margins {[r.margin for r in records]}"),
            (
                "bubble_calibration",
                abs(calibration - threshold) <= config.ORACLE_CONSTANT_RTOL * threshold,
                f"uncut bubble level {calibration:.10g} vs {threshold:.10g}",
            ),
        ]
        plot = {
            "series": {"threshold - sup Phi(t v_mu)": ([r.mu for r in records], [r.margin for r in records])},
            "xlabel": "mu",
            "ylabel": "margin",
            "title": f"N = {params.N}, s = {params.s:g}, p = {state['objects']['p']:.4g}",
            "logx": True,
            "hline": 0.0,
        }
        return _with_state(
            state,
            **record_checks(state, outcomes),
            objects=_merged(state, "objects", records=records, calibration=calibration),
            tables=_merged(state, "tables", **{"bubble.csv": [r.model_dump() for r in records]}),
            plot_specs=_merged(state, "plot_specs", **{"bubble_margin.svg": plot}),
        )

    def node_solve_perturbed(self, state: ScenarioState) -> ScenarioState:
        """Critical-exponent solve of the perturbed problem: 0 < c* < threshold."""

        params = state["params"]
        spec = state["objects"]["spec"]
        threshold = state["oracle"]["threshold"]
        opts = solver_options(params, allow_critical=True)
        field, report = minimize(spec, initial_guess(default_grid(spec, opts)), opts)
        book = concentration_bookkeeping(field, spec)
        outcomes = [
            ("perturbed_converged", report.converged, f"grad_norm {report.grad_norm:.3e}"),
            (
                "perturbed_level_below_threshold",
                0.0 < report.c_level < threshold,
                f"c* = {report.c_level:.10g}, threshold {threshold:.10g}",
            ),
        ]
        return _with_state(
            state,
            **record_checks(state, outcomes),
            objects=_merged(state, "objects", perturbed=report, perturbed_book=book),
            snapshots=_merged(state, "snapshots", **{"perturbed_solution.grid": field}),
        )

    def node_vanishing_limit(self, state: ScenarioState) -> ScenarioState:
        """Without u^p the continuation concentrates; C = A + B must hold along the way."""

        params = state["params"]
        domain = AxisymmetricDomain.half_ball_flat(params.N, params.rmax)
        spec = ProblemSpec.multi_pole(params.N, [(params.s, 0.0)], domain)
        trace = continuation(spec, params.schedule, solver_options(params))
        books = [
            concentration_bookkeeping(field, spec.with_epsilon(step.epsilon))
            for step, field in zip(trace.steps, trace.fields)
        ]
        rows = [{"epsilon": step.epsilon, **book.model_dump()} for step, book in zip(trace.steps, books)]
        worst = max(book.identity_gap for book in books)
        return _with_state(
            state,
            **record_checks(
                state,
                [("bookkeeping_identity", worst <= params.bookkeeping_tol, f"|C - (A + B)| / C up to {worst:.3g}")],
            ),
            objects=_merged(state, "objects", vanishing=trace),
            tables=_merged(
                state,
                "tables",
                **{"bookkeeping.csv": rows, "vanishing_continuation.csv": trace.rows()},
            ),
        )

    def node_write_summary(self, state: ScenarioState) -> ScenarioState:
        params = state["params"]
        objects = state["objects"]
        records = objects["records"]
        document = {
            "N": params.N,
            "s": params.s,
            "p": objects["p"],
            "threshold": state["oracle"]["threshold"],
            "calibration": objects["calibration"],
            "margins": {f"{r.mu:g}": r.margin for r in records},
        }
        if "perturbed" in objects:
            report = objects["perturbed"]
            document["perturbed"] = {
                "level": report.c_level,
                "converged": report.converged,
                "m": report.m,
                "bookkeeping": objects["perturbed_book"].model_dump(),
            }
        if "vanishing" in objects:
            trace = objects["vanishing"]
            document["vanishing"] = {"verdict": trace.verdict, "levels": trace.levels}
        return _with_state(state, documents=_merged(state, "documents", **{"perturbed.json": document}))


def create_perturbed_graph():
    """Build and compile the perturbed-problem graph."""

    return PerturbedGraph().compile()
