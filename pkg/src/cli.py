"""
Command-line runner for the Hardy-Sobolev lab.

Commands:
  - run <config>        Execute the scenario described by an INI file
  - validate <config>   Dry-run regime classification of the parameters
  - certify-oracles     Oracle certification with default settings

Options --out <dir>, --seed <int> and --plots override the [run] section.

Exit codes: 0 success, 2 invariant violation, 3 parameter error.
"""

from dotenv import load_dotenv
load_dotenv()

import argparse
import configparser
import json
import sys
import time
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from src.config import config, validate_config
from src.graphs import SCENARIOS
from src.graphs.base_graph import hardy_parameters
from src.models.exponents import CKNParams
from src.models.reports import RegimeReport
from src.models.scenario import (
    SECTION_MODELS,
    OracleSection,
    PerturbedSection,
    RunSection,
    ScenarioConfig,
    TwoPoleSection,
)
from src.tools.testfn_tools import check_perturbed_regime
from src.utils.errors import (
    ConfigParseError,
    DiagnosticsError,
    InvariantViolationError,
    OracleFailureError,
    ParameterError,
    RegimeError,
    SweepRangeError,
    TruncationError,
)
from src.utils.logging_config import logger, setup_logging

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_PARAMETER = 3

VIOLATION_ERRORS = (
    InvariantViolationError,
    OracleFailureError,
    RegimeError,
    DiagnosticsError,
    TruncationError,
    SweepRangeError,
)
PARAMETER_ERRORS = (ParameterError, ConfigParseError, ValidationError)


# ============================================================
# CONFIG FILES
# ============================================================
def _section_values(parser: configparser.ConfigParser, name: str) -> dict[str, str]:
    return dict(parser.items(name)) if parser.has_section(name) else {}


def parse_scenario(text: str, *, source: str = "<config>") -> ScenarioConfig:
    """Parse INI text into a validated ScenarioConfig.

    Raises:
        ConfigParseError: malformed INI, unknown sections or keys, or values
            the section models reject.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigParseError(f"{source}: {exc}") from exc

    if parser.defaults():
        raise ConfigParseError(f"{source}: a [DEFAULT] section is not supported")
    if not parser.has_section("run"):
        raise ConfigParseError(f"{source}: missing [run] section")

    try:
        run = RunSection(**_section_values(parser, "run"))
    except ValidationError as exc:
        raise ConfigParseError(f"{source} [run]: {exc}") from exc

    unknown = sorted(set(parser.sections()) - {"run", run.scenario})
    if unknown:
        raise ConfigParseError(f"{source}: unknown sections {unknown} for scenario {run.scenario}")

    try:
        params = SECTION_MODELS[run.scenario](**_section_values(parser, run.scenario))
    except ValidationError as exc:
        raise ConfigParseError(f"{source} [{run.scenario}]: {exc}") from exc
    return ScenarioConfig(run=run, params=params)


def load_scenario(
    path: str | Path,
    *,
    seed: int | None = None,
    out: str | None = None,
    plots: bool = False,
) -> ScenarioConfig:
    """Read a scenario file and apply command-line overrides."""

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    scenario = parse_scenario(text, source=str(path))
    return apply_overrides(scenario, seed=seed, out=out, plots=plots)


def apply_overrides(
    scenario: ScenarioConfig,
    *,
    seed: int | None = None,
    out: str | None = None,
    plots: bool = False,
) -> ScenarioConfig:
    updates: dict[str, object] = {}
    if seed is not None:
        updates["seed"] = seed
    if out is not None:
        updates["out"] = out
    if plots:
        updates["plots"] = True
    if not updates:
        return scenario
    return ScenarioConfig(run=scenario.run.model_copy(update=updates), params=scenario.params)


def numerical_settings() -> dict[str, object]:
    """Process-wide settings that influence numbers in the artifacts."""

    return {
        "SOLVER_ARMIJO": config.SOLVER_ARMIJO,
        "SOLVER_MIN_STEP": config.SOLVER_MIN_STEP,
        "BLOWUP_FACTOR": config.BLOWUP_FACTOR,
        "BLOWUP_STEPS": config.BLOWUP_STEPS,
        "COMPACT_TOL": config.COMPACT_TOL,
        "ORACLE_MIN_ORDER": config.ORACLE_MIN_ORDER,
        "ORACLE_CONSTANT_RTOL": config.ORACLE_CONSTANT_RTOL,
    }


# ============================================================
# VALIDATE
# ============================================================
def _two_pole_regimes(params: TwoPoleSection, report: RegimeReport) -> None:
    try:
        lam, s1 = hardy_parameters(params)
    except (ParameterError, ValidationError) as exc:
        report.violations.append(f"CKN parameters: {exc}")
        return
    if params.ckn_a is not None:
        report.notes.append(f"CKN (a={params.ckn_a:g}, b={params.ckn_b:g}) maps to lambda={lam:.6g}, s1={s1:.6g}")
        q = CKNParams(a=params.ckn_a, b=params.ckn_b).q(params.N)
        report.parameters["ckn_q"] = q
    report.parameters.update(lam=lam, s1=s1, s2=params.s2, N=params.N)

    s2 = params.s2
    if 0.0 < s2 < s1 < 2.0:
        report.regimes += ["thm11-curved-existence", "thm12-halfspace"]
    if 0.0 < s1 <= 2.0 and s2 == 0.0 and lam <= 0.0:
        report.regimes.append("thm13-nonexistence-probe")
    if s2 == 0.0 and lam > 0.0 and s1 < 2.0:
        report.regimes.append("classical-halfspace-least-energy")
        report.notes.append("lambda > 0 with s2 = 0: classical least-energy regime on the half-space")
    if report.scenario in ("thm11-curved-existence", "thm12-halfspace", "thm13-nonexistence-probe"):
        if report.scenario not in report.regimes:
            report.violations.append(f"parameters lie outside the {report.scenario} regime")
    if report.scenario == "thm11-curved-existence" and getattr(params, "alpha", 0.0) >= 0.0:
        report.notes.append("alpha >= 0 gives H(0) >= 0; the curvature gap is not expected to be positive")


def _perturbed_regimes(params: PerturbedSection, report: RegimeReport) -> None:
    p = params.exponent()
    report.parameters.update(N=params.N, s=params.s, p=p)
    try:
        check_perturbed_regime(params.N, params.s, p)
    except ParameterError as exc:
        report.violations.append(str(exc))
        return
    report.regimes.append("thm51-perturbed")


def validate_scenario(scenario: ScenarioConfig) -> RegimeReport:
    """Classify the parameters against every regime precondition; never raises."""

    params = scenario.params
    report = RegimeReport(scenario=scenario.name, parameters={})
    if isinstance(params, TwoPoleSection):
        _two_pole_regimes(params, report)
    elif isinstance(params, PerturbedSection):
        _perturbed_regimes(params, report)
    else:
        report.regimes.append(scenario.name)
        if isinstance(params, OracleSection):
            report.parameters["dimensions"] = list(params.dimensions)
            bad = [N for N in params.dimensions if N < 3]
            if bad:
                report.violations.append(f"dimensions {bad} are below 3")
    return report


# ============================================================
# RUN
# ============================================================
def output_dir(scenario: ScenarioConfig) -> Path:
    return Path(scenario.run.out or Path(config.OUTPUT_DIR) / scenario.name)


def run_scenario(scenario: ScenarioConfig) -> dict:
    """Execute the scenario graph and return its final state."""

    name = scenario.name
    graph = SCENARIOS[name]()
    out_dir = output_dir(scenario)
    out_dir.mkdir(parents=True, exist_ok=True)
    state = {
        "scenario": name,
        "params": scenario.params,
        "seed": scenario.run.seed,
        "out_dir": str(out_dir),
        "plots": scenario.run.plots,
        "resolved": {**scenario.resolved(), "settings": numerical_settings()},
    }

    logger.info("Executing %s (seed=%d, out=%s)", name, scenario.run.seed, out_dir)
    start_time = time.time()
    result = graph.invoke(state)
    execution_time = time.time() - start_time
    logger.info(
        "run summary: scenario=%s checks=%d violations=%d artifacts=%d time=%.2fs",
        name,
        len(result.get("checks", {})),
        len(result.get("violations", [])),
        len(result.get("artifacts", [])),
        execution_time,
    )
    return result


def _execute(scenario: ScenarioConfig) -> int:
    try:
        result = run_scenario(scenario)
    except PARAMETER_ERRORS as exc:
        logger.error("Parameter error in %s: %s", scenario.name, exc)
        return EXIT_PARAMETER
    except VIOLATION_ERRORS as exc:
        logger.error("%s in %s: %s", type(exc).__name__, scenario.name, exc)
        return EXIT_VIOLATION

    violations = result.get("violations", [])
    for violation in violations:
        logger.error("Violation: %s", violation)
    return EXIT_VIOLATION if violations else EXIT_OK


def command_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.config, seed=args.seed, out=args.out, plots=args.plots)
    except PARAMETER_ERRORS as exc:
        logger.error("Invalid scenario file: %s", exc)
        return EXIT_PARAMETER
    return _execute(scenario)


def command_validate(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.config, seed=args.seed, out=args.out, plots=args.plots)
    except PARAMETER_ERRORS as exc:
        logger.error("Invalid scenario file: %s", exc)
        return EXIT_PARAMETER
    report = validate_scenario(scenario)
    print(json.dumps(report.model_dump(), indent=2, sort_keys=True))
    if not report.ok:
        logger.warning("Parameters violate %d regime precondition(s)", len(report.violations))
    return EXIT_OK


def command_certify_oracles(args: argparse.Namespace) -> int:
    run = RunSection(scenario="oracle-certify")
    scenario = apply_overrides(
        ScenarioConfig(run=run, params=OracleSection()),
        seed=args.seed,
        out=args.out,
        plots=args.plots,
    )
    return _execute(scenario)


# ============================================================
# ENTRY POINT
# ============================================================
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides [run] out)")
    common.add_argument("--seed", type=int, help="master seed (overrides [run] seed)")
    common.add_argument("--plots", action="store_true", help="also render SVG plots")

    parser = argparse.ArgumentParser(prog="hslab", description="Hardy-Sobolev numerical lab")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="run a scenario file")
    run.add_argument("config", help="scenario INI file")
    run.set_defaults(handler=command_run)

    validate = commands.add_parser("validate", parents=[common], help="classify a scenario's parameters")
    validate.add_argument("config", help="scenario INI file")
    validate.set_defaults(handler=command_validate)

    certify = commands.add_parser("certify-oracles", parents=[common], help="certify reference constants")
    certify.set_defaults(handler=command_certify_oracles)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(debug=config.DEBUG)
    try:
        status = validate_config()
    except ValueError as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_PARAMETER
    for key, value in status.items():
        logger.debug("  %s: %s", key, value)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
