"""
Configuration module for the Hardy-Sobolev lab.

Loads environment variables and provides configuration singletons.
Uses pydantic for validation.
"""

from pydantic_settings import BaseSettings


class Config(BaseSettings):
    """
    Lab configuration loaded from environment variables.

    All values come from .env file or system environment.
    Scenario config files override the numerical defaults per run.
    """

    # ============================================================
    # RUN CONFIGURATION
    # ============================================================
    OUTPUT_DIR: str = "runs"
    """Directory receiving run artifacts when --out is not given."""

    DEFAULT_SEED: int = 0
    """Seed used when neither the config file nor --seed provides one."""

    # ============================================================
    # GRID DEFAULTS
    # ============================================================
    GRID_N_R: int = 48
    """Radial intervals of the meridian grid. Minimum 8."""

    GRID_N_THETA: int = 24
    """Angular intervals between the symmetry axis and the boundary. Minimum 8."""

    GRID_GRADING: float = 2.0
    """Grading exponent clustering radial nodes at the boundary origin. 1 = uniform."""

    # ============================================================
    # SOLVER DEFAULTS
    # ============================================================
    SOLVER_TOL: float = 1e-6
    """Relative Sobolev-gradient norm at which a descent counts as converged."""

    SOLVER_MAX_ITER: int = 5000
    """Iteration cap of a single descent."""

    SOLVER_ARMIJO: float = 1e-4
    """Sufficient-decrease constant of the backtracking line search."""

    SOLVER_MIN_STEP: float = 1e-10
    """Smallest trial step before the line search gives up."""

    BLOWUP_FACTOR: float = 50.0
    """Growth of max u over its value at the largest epsilon that signals blow-up."""

    BLOWUP_STEPS: int = 3
    """Consecutive increasing steps required before a blow-up verdict."""

    COMPACT_TOL: float = 0.05
    """Relative change of the level between the last two steps for a compact verdict."""

    # ============================================================
    # ORACLE CONFIGURATION
    # ============================================================
    ORACLE_MIN_ORDER: float = 1.5
    """Fitted residual convergence order needed to certify an oracle field."""

    ORACLE_CONSTANT_RTOL: float = 5e-3
    """Relative agreement required between independent routes to S_N."""

    # ============================================================
    # LOGGING CONFIGURATION
    # ============================================================
    LOG_FILE_PATH: str = "logs/lab.log"
    """Rotating log file. Records are JSON when LOG_JSON is set."""

    LOG_JSON: bool = True
    """Write JSON records to the log file (console output stays plain text)."""

    DEBUG: bool = False
    """Enable debug logging. Set True for development runs."""

    class Config:
        """Pydantic configuration."""
        env_file = ".env"  # Read from .env file
        case_sensitive = True  # Variable names are case-sensitive
        extra = "ignore"  # Ignore extra env vars not defined above


# ============================================================
# SINGLETON INSTANCE
# ============================================================
# Load config once at startup, reuse throughout the lab
config = Config()


# ============================================================
# VALIDATION AT STARTUP
# ============================================================
def validate_config() -> dict:
    """
    Validate that numerical defaults are usable.

    Called by the CLI before any scenario runs to fail fast.

    Returns:
        dict: Resolved values of the checked fields

    Raises:
        ValueError: If any value is out of range
    """
    errors = []

    if config.GRID_N_R < 8 or config.GRID_N_THETA < 8:
        errors.append("GRID_N_R and GRID_N_THETA must be at least 8")

    if config.GRID_GRADING < 1.0:
        errors.append("GRID_GRADING must be >= 1")

    if config.SOLVER_TOL <= 0:
        errors.append("SOLVER_TOL must be positive")

    if config.SOLVER_MAX_ITER < 1:
        errors.append("SOLVER_MAX_ITER must be at least 1")

    if not 0 < config.SOLVER_ARMIJO < 0.5:
        errors.append("SOLVER_ARMIJO must lie in (0, 0.5)")

    if config.BLOWUP_FACTOR <= 1.0:
        errors.append("BLOWUP_FACTOR must exceed 1")

    if config.BLOWUP_STEPS < 2:
        errors.append("BLOWUP_STEPS must be at least 2")

    if config.ORACLE_MIN_ORDER < 1.0:
        errors.append("ORACLE_MIN_ORDER below 1 would certify non-convergent fields")

    if errors:
        raise ValueError("Configuration errors:\n" + "\n".join([f"  - {e}" for e in errors]))

    return {
        "grid": f"{config.GRID_N_R}x{config.GRID_N_THETA}, grading {config.GRID_GRADING}",
        "solver": f"tol {config.SOLVER_TOL:g}, max_iter {config.SOLVER_MAX_ITER}",
        "blowup": f"factor {config.BLOWUP_FACTOR:g} over {config.BLOWUP_STEPS} steps",
        "oracle": f"order >= {config.ORACLE_MIN_ORDER:g}",
        "output": config.OUTPUT_DIR,
    }


if __name__ == "__main__":
    """Allow testing config by running: python -m src.config"""
    try:
        status = validate_config()
        print("Configuration is valid!")
        print("\nConfiguration Status:")
        for key, value in status.items():
            print(f"  {key}: {value}")
    except ValueError as e:
        print(f"Configuration error:\n{e}")
        exit(1)
