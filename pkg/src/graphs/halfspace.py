"""Half-space graph: entire least-energy solution, its constants and stability checks."""

from __future__ import annotations

import numpy as np
from langgraph.graph import StateGraph

from src.graphs.base_graph import (
    BaseGraph,
    _merged,
    _with_state,
    record_check,
    record_checks,
    solver_options,
    two_pole_spec,
)
from src.models.domain import AxisymmetricDomain
from src.state import ScenarioState
from src.tools.halfspace_tools import gradient_norm_bound, least_energy_comparison, rmax_stability, solve_entire

KELVIN_TOL = 0.05


class HalfspaceGraph(BaseGraph):
    """Solve on the truncated half-space, then compare seeds and grow Rmax."""

    name = "thm12-halfspace"

    def build_graph(self) -> StateGraph:
        graph = StateGraph(ScenarioState)
        self.add_nodes(
            graph,
            ("solve_entire", self.node_solve_entire),
            ("compare_starts", self.node_compare_starts),
        )
        graph.add_node("grow_rmax", self._node("grow_rmax", self.node_grow_rmax))

        def route_doubling(state: ScenarioState) -> str:
            return "grow_rmax" if state["params"].rmax_doubling else "summarize"

        graph.add_conditional_edges(
            "compare_starts",
            route_doubling,
            {"grow_rmax": "grow_rmax", "summarize": "summarize"},
        )
        graph.add_node("summarize", self._node("summarize", self.node_summarize))
        graph.add_edge("grow_rmax", "summarize")
        self.add_output_tail(graph, after="summarize")
        return graph

    def node_solve_entire(self, state: ScenarioState) -> ScenarioState:
        params = state["params"]
        spec = two_pole_spec(params, AxisymmetricDomain.truncated_half_space(params.N, params.rmax))
        entire = solve_entire(spec, solver_options(params))
        bound = gradient_norm_bound(entire)
        outcomes = [
            ("c1_positive", entire.c1 > 0.0, f"c1 = {entire.c1:.6g}"),
            ("K1_positive", entire.K1 > 0.0, f"K1 = {entire.K1:.6g}"),
            ("decay_accepted", entire.decay.accepted, f"decay exponent {entire.decay.exponent:.3f}"),
            (
                "kelvin_symmetry",
                entire.kelvin_deviation <= KELVIN_TOL,
                f"Kelvin deviation {entire.kelvin_deviation:.3g} > {KELVIN_TOL:g}",
            ),
            (
                "gradient_norm_bound",
                bool(bound["satisfied"]),
                f"||grad v||^2 = {bound['A']:.6g} below {bound['lower_bound']:.6g}",
            ),
        ]
        r, theta = entire.profile.grid.r, entire.profile.grid.theta
        axis = entire.profile.values[:, 0]
        plot = {
            "series": {"v on the axis": (r.tolist(), axis.tolist())},
            "xlabel": "|y|",
            "ylabel": "v",
            "title": f"entire profile, c1 = {entire.c1:.6g}",
        }
        self.logger.info("Half-space c1=%.10g on %d x %d nodes", entire.c1, len(r), len(theta))
        return _with_state(
            state,
            **record_checks(state, outcomes),
            objects=_merged(state, "objects", entire=entire, bound=bound),
            snapshots=_merged(state, "snapshots", **{"entire_profile.grid": entire.profile}),
            plot_specs=_merged(state, "plot_specs", **{"entire_profile.svg": plot}),
        )

    def node_compare_starts(self, state: ScenarioState) -> ScenarioState:
        """The reported c1 must be the least level over every converged seed."""

        params = state["params"]
        entire = state["objects"]["entire"]
        rows = least_energy_comparison(entire.spec, params.seeds, solver_options(params), grid=entire.profile.grid)
        levels = [row["c1"] for row in rows if row["converged"]]
        slack = 10.0 * params.tol * entire.c1
        least = not levels or entire.c1 <= min(levels) + slack
        return _with_state(
            state,
            **record_check(state, "least_energy", least, f"a seed reached {min(levels, default=np.nan):.10g} < c1"),
            tables=_merged(state, "tables", **{"multistart.csv": rows}),
        )

    def node_grow_rmax(self, state: ScenarioState) -> ScenarioState:
        params = state["params"]
        entire = state["objects"]["entire"]
        stability = rmax_stability(entire.spec, solver_options(params), base=entire)
        return _with_state(
            state,
            **record_check(
                state,
                "rmax_stable",
                bool(stability["stable"]),
                f"|delta c1| = {stability['delta']:.3g} exceeds the tail bound {stability['tail_bound']:.3g}",
            ),
            objects=_merged(state, "objects", stability=stability),
        )

    def node_summarize(self, state: ScenarioState) -> ScenarioState:
        objects = state["objects"]
        entire = objects["entire"]
        document = {
            **entire.summary(),
            "lambda": entire.spec.lam,
            "s1": entire.spec.poles[0].s,
            "s2": entire.spec.poles[1].s,
            "N": entire.spec.N,
            "gradientNormBound": objects["bound"],
        }
        if "stability" in objects:
            document["rmaxStability"] = objects["stability"]
        return _with_state(state, documents=_merged(state, "documents", **{"halfspace.json": document}))


def create_halfspace_graph():
    """Build and compile the half-space graph."""

    return HalfspaceGraph().compile()
