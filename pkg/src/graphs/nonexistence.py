"""Nonexistence graph: blow-up of the continuation on a star-shaped half ball."""

from __future__ import annotations

import numpy as np
from langgraph.graph import StateGraph

from src.graphs.base_graph import BaseGraph, _merged, _with_state, record_checks, solver_options, two_pole_spec
from src.models.domain import AxisymmetricDomain
from src.state import ScenarioState
from src.tools.functional_tools import pohozaev_residual
from src.tools.oracle_tools import sobolev_threshold
from src.tools.solver_tools import blowup_rescale, continuation, rescaled_cauchy

PEAK_TOL = 1e-3
RESCALED_PROFILES = 3


class NonexistenceGraph(BaseGraph):
    """Continuation with lambda <= 0 and s2 = 0, then threshold, Pohozaev and rescaling checks."""

    name = "thm13-nonexistence-probe"

    def build_graph(self) -> StateGraph:
        graph = StateGraph(ScenarioState)
        self.add_nodes(
            graph,
            ("continuation", self.node_continuation),
            ("compare_threshold", self.node_compare_threshold),
            ("pohozaev_collapse", self.node_pohozaev_collapse),
            ("rescale_profiles", self.node_rescale_profiles),
        )
        self.add_output_tail(graph, after="rescale_profiles")
        return graph

    def node_continuation(self, state: ScenarioState) -> ScenarioState:
        params = state["params"]
        spec = two_pole_spec(params, AxisymmetricDomain.half_ball_flat(params.N, params.rmax))
        trace = continuation(spec, params.schedule, solver_options(params))
        return _with_state(
            state,
            **record_checks(state, [("verdict_blowup", trace.verdict == "BlowUp", f"verdict {trace.verdict}")]),
            objects=_merged(state, "objects", spec=spec, trace=trace),
            tables=_merged(state, "tables", **{"continuation.csv": trace.rows()}),
        )

    def node_compare_threshold(self, state: ScenarioState) -> ScenarioState:
        """c*_eps at the smallest eps must approach S_N^{N/2} / N."""

        params = state["params"]
        trace = state["objects"]["trace"]
        threshold = sobolev_threshold(params.N)
        level = trace.levels[-1]
        relative = abs(level - threshold) / threshold
        plot = {
            "series": {"c*_eps": (list(trace.schedule), trace.levels)},
            "xlabel": "eps",
            "ylabel": "level",
            "title": "half-ball continuation (dashed: S_N^(N/2)/N)",
            "logx": True,
            "hline": threshold,
        }
        return _with_state(
            state,
            **record_checks(
                state,
                [
                    (
                        "level_at_threshold",
                        relative <= params.level_tol,
                        f"level {level:.10g} is {relative:.2%} from the threshold {threshold:.10g}",
                    )
                ],
            ),
            oracle=_merged(state, "oracle", threshold=threshold),
            objects=_merged(state, "objects", threshold_gap=relative),
            plot_specs=_merged(state, "plot_specs", **{"energy_vs_eps.svg": plot}),
        )

    def node_pohozaev_collapse(self, state: ScenarioState) -> ScenarioState:
        """With critical exponents the volume part vanishes up to the Nehari residual."""

        params = state["params"]
        objects = state["objects"]
        field = objects["trace"].fields[-1]
        check = pohozaev_residual(field, objects["spec"].with_epsilon(0.0))
        collapsed = abs(check.volume_term) <= params.pohozaev_tol * abs(check.boundary_term)
        return _with_state(
            state,
            **record_checks(
                state,
                [
                    (
                        "pohozaev_boundary_only",
                        collapsed,
                        f"volume term {check.volume_term:.6g} vs boundary term {check.boundary_term:.6g}",
                    )
                ],
            ),
            objects=_merged(state, "objects", pohozaev=check),
        )

    def node_rescale_profiles(self, state: ScenarioState) -> ScenarioState:
        """Blow-up profiles of the last steps: v(0) = 1 and a Cauchy diagnostic."""

        objects = state["objects"]
        spec, trace = objects["spec"], objects["trace"]
        tail = list(zip(trace.steps, trace.fields))[-RESCALED_PROFILES:]
        profiles = [blowup_rescale(field, step.report, spec.with_epsilon(step.epsilon)) for step, field in tail]
        centers = [float(p.values[0, 0]) for p in profiles]
        peaks = [p.sup_norm() for p in profiles]
        ratio = tail[-1][0].ratio
        radius = min(min(p.grid.rmax for p in profiles), 2.0 * max(1.0, ratio if np.isfinite(ratio) else 1.0))
        cauchy = rescaled_cauchy(profiles, radius)

        last = profiles[-1]
        plot = {
            "series": {"rescaled profile on the axis": (last.grid.r.tolist(), last.values[:, 0].tolist())},
            "xlabel": "|y|",
            "ylabel": "v_eps",
            "title": f"eps = {tail[-1][0].epsilon:g}",
        }
        check = objects["pohozaev"]
        document = {
            "verdict": trace.verdict,
            "level": trace.levels[-1],
            "threshold": state["oracle"]["threshold"],
            "thresholdRelativeGap": objects["threshold_gap"],
            "pohozaev": check.model_dump(),
            "rescaledCenters": centers,
            "rescaledPeaks": peaks,
            "cauchyRadius": radius,
            "cauchyGaps": cauchy,
            "concentratesAtOrigin": trace.concentrates_at_origin,
        }
        return _with_state(
            state,
            **record_checks(
                state,
                [
                    (
                        "rescaled_peak_one",
                        all(abs(c - 1.0) <= PEAK_TOL for c in centers),
                        f"v(0) of rescaled profiles {centers}",
                    )
                ],
            ),
            snapshots=_merged(state, "snapshots", **{"rescaled_profile.grid": last}),
            documents=_merged(state, "documents", **{"nonexistence.json": document}),
            plot_specs=_merged(state, "plot_specs", **{"rescaled_profile.svg": plot}),
        )


def create_nonexistence_graph():
    """Build and compile the nonexistence graph."""

    return NonexistenceGraph().compile()
