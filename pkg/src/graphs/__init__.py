"""Scenario graphs of the lab, keyed by scenario name."""

from __future__ import annotations

from typing import Callable

from src.graphs.curved_existence import create_curved_existence_graph
from src.graphs.halfspace import create_halfspace_graph
from src.graphs.identities import create_identities_graph
from src.graphs.nonexistence import create_nonexistence_graph
from src.graphs.oracle_certify import create_oracle_certify_graph
from src.graphs.perturbed import create_perturbed_graph

SCENARIOS: dict[str, Callable] = {
    "thm11-curved-existence": create_curved_existence_graph,
    "thm12-halfspace": create_halfspace_graph,
    "thm13-nonexistence-probe": create_nonexistence_graph,
    "thm51-perturbed": create_perturbed_graph,
    "oracle-certify": create_oracle_certify_graph,
    "identities-suite": create_identities_graph,
}

__all__ = ["SCENARIOS"]
