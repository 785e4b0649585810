"""
Pytest configuration and shared fixtures for all tests.

This file is automatically loaded by pytest and provides:
  - Test configuration (env vars, log file location)
  - Small grids, problem specs and solver options shared by the unit tests
  - One session-scoped entire solution reused by the half-space and
    test-function tests
"""

import os

import pytest

from src.models.domain import AxisymmetricDomain, BoundaryGraph
from src.models.problem import ProblemSpec
from src.tools.grid_tools import build_grid
from src.tools.solver_tools import SolverOptions


@pytest.fixture(scope="session", autouse=True)
def setup_test_environment(tmp_path_factory):
    """
    Setup test environment variables before running any tests.

    This ensures tests run with predictable configuration and don't
    depend on local .env files or write logs into the working tree.
    """
    log_dir = tmp_path_factory.mktemp("logs")
    test_env = {
        "LOG_FILE_PATH": str(log_dir / "lab.log"),
        "LOG_JSON": "True",
        "DEBUG": "False",
        "OUTPUT_DIR": str(tmp_path_factory.mktemp("runs")),
    }

    for key, value in test_env.items():
        os.environ[key] = value

    # The config singleton is built at import time, before this fixture runs.
    from src.config import config

    config.LOG_FILE_PATH = test_env["LOG_FILE_PATH"]
    config.OUTPUT_DIR = test_env["OUTPUT_DIR"]


@pytest.fixture
def small_opts():
    """Solver options sized for unit tests (coarse grid, loose tolerance)."""
    return SolverOptions(n_r=16, n_theta=8, gamma=1.5, tol=1e-5, max_iter=300)


@pytest.fixture
def half_ball():
    return AxisymmetricDomain.half_ball_flat(3, 1.0)


@pytest.fixture
def half_ball_grid(half_ball):
    return build_grid(half_ball, 16, 8, 1.5)


@pytest.fixture
def curved_graph():
    return BoundaryGraph(alpha=-0.5, cutoff_radius=0.9)


@pytest.fixture
def cap_grid(curved_graph):
    domain = AxisymmetricDomain.curved_cap(3, curved_graph, 0.9)
    return build_grid(domain, 16, 8, 1.5)


@pytest.fixture
def two_pole_half_ball(half_ball):
    """Delta u - u^{p1}/|x|^{1.5} + u^{p2}/|x|^{0.5} = 0 on the flat half ball."""
    return ProblemSpec.two_pole(3, 1.5, 0.5, -1.0, half_ball, epsilon=0.1)


@pytest.fixture(scope="session")
def entire_solution():
    """Half-space solution for N=3, s1=1.5, s2=0.5, lambda=-1 on a coarse grid."""
    from src.tools.halfspace_tools import solve_entire

    domain = AxisymmetricDomain.truncated_half_space(3, 20.0)
    spec = ProblemSpec.two_pole(3, 1.5, 0.5, -1.0, domain)
    opts = SolverOptions(n_r=32, n_theta=12, gamma=2.0, tol=1e-5, max_iter=4000)
    return solve_entire(spec, opts)
