"""Oracle certification graph: reference constants and fields for each dimension."""

from __future__ import annotations

from langgraph.graph import StateGraph

from src.config import config
from src.graphs.base_graph import BaseGraph, _merged, _with_state, record_checks
from src.state import ScenarioState
from src.tools.oracle_tools import oracle_constants
from src.tools.testfn_tools import bubble_calibration
from src.utils.errors import OracleFailureError


class OracleCertifyGraph(BaseGraph):
    """Recompute S_N, C_N and the bubble threshold and certify the reference fields.

    Any constant that disagrees between its independent routes raises
    OracleFailureError from oracle_constants; certification orders below
    ORACLE_MIN_ORDER are recorded as failed checks.
    """

    name = "oracle-certify"

    def build_graph(self) -> StateGraph:
        graph = StateGraph(ScenarioState)
        self.add_nodes(
            graph,
            ("compute_constants", self.node_compute_constants),
            ("certify_fields", self.node_certify_fields),
            ("calibrate_threshold", self.node_calibrate_threshold),
        )
        self.add_output_tail(graph, after="calibrate_threshold")
        return graph

    def node_compute_constants(self, state: ScenarioState) -> ScenarioState:
        """Cross-checked constants for every requested dimension."""

        params = state["params"]
        constants = {}
        for N in params.dimensions:
            if N < 3:
                raise OracleFailureError(f"oracle constants need N >= 3, got {N}")
            constants[N] = oracle_constants(N, params.s_values)
        return _with_state(state, objects=_merged(state, "objects", constants=constants))

    def node_certify_fields(self, state: ScenarioState) -> ScenarioState:
        """Every certification order must reach the configured minimum."""

        minimum = config.ORACLE_MIN_ORDER
        outcomes = [
            (f"order_N{N}_{field_name}", order >= minimum, f"fitted order {order:.3g} < {minimum:g}")
            for N, constants in state["objects"]["constants"].items()
            for field_name, order in sorted(constants.certification_orders.items())
        ]
        return _with_state(state, **record_checks(state, outcomes))

    def node_calibrate_threshold(self, state: ScenarioState) -> ScenarioState:
        """The uncut bubble's ray maximum must reproduce S_N^{N/2} / N."""

        rows, outcomes = [], []
        oracle = {}
        for N, constants in state["objects"]["constants"].items():
            calibrated = bubble_calibration(N)
            relative = abs(calibrated - constants.threshold) / constants.threshold
            outcomes.append(
                (
                    f"threshold_N{N}",
                    relative <= config.ORACLE_CONSTANT_RTOL,
                    f"bubble ray maximum {calibrated:.10g} vs S_N^(N/2)/N {constants.threshold:.10g}",
                )
            )
            rows.append(
                {
                    "N": N,
                    "S_N": constants.S_N,
                    "S_N_closed_form": constants.S_N_closed_form,
                    "S_N_relative_error": abs(constants.S_N - constants.S_N_closed_form) / constants.S_N_closed_form,
                    "C_N": constants.C_N,
                    "threshold": constants.threshold,
                    "threshold_calibrated": calibrated,
                    "min_order": min(constants.certification_orders.values()),
                }
            )
            oracle[str(N)] = {
                "N": N,
                "S_N": constants.S_N,
                "S_N_closed_form": constants.S_N_closed_form,
                "C_N": constants.C_N,
                "threshold": constants.threshold,
                "thresholdCalibrated": calibrated,
                "hardySobolevNorm": constants.hardy_sobolev_norm,
                "certificationOrders": constants.certification_orders,
            }
        self.logger.info("Oracle certification done for N in %s", sorted(oracle))
        return _with_state(
            state,
            **record_checks(state, outcomes),
            oracle=oracle,
            tables=_merged(state, "tables", **{"oracle.csv": rows}),
            documents=_merged(state, "documents", **{"oracle.json": {"dimensions": oracle}}),
        )


def create_oracle_certify_graph():
    """Build and compile the oracle certification graph."""

    return OracleCertifyGraph().compile()
