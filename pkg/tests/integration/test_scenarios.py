"""
Integration tests running whole scenarios through the CLI.

These tests validate that a scenario run:
  1. Exits with the code matching its manifest status
  2. Writes its tables, documents, checks.json and manifest.json
  3. Is reproducible byte for byte under the same seed

The cheap scenarios (oracle-certify, a reduced identities-suite) run in
full; the solving scenarios are covered piecewise by the unit tests.
"""

import json
import logging

import pytest

from src.cli import EXIT_OK, EXIT_VIOLATION, main


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


ORACLE = """
[run]
scenario = oracle-certify
seed = 0

[oracle-certify]
dimensions = 3, 4
s_values = 1.0
"""

IDENTITIES = """
[run]
scenario = identities-suite
seed = 5

[identities-suite]
N = 4
draws = 50
samples = 200
kelvin_fields = 2
gradient_fields = 2
n_r = 16
n_theta = 8
"""


def _run(tmp_path, text, out_name):
    config_path = tmp_path / f"{out_name}.ini"
    config_path.write_text(text, encoding="utf-8")
    out_dir = tmp_path / out_name
    code = main(["run", str(config_path), "--out", str(out_dir)])
    return code, out_dir


def _load(path):
    return json.loads(path.read_text(encoding="utf-8"))


class TestOracleCertify:
    """Test the oracle-certify scenario end to end."""

    def test_run_succeeds(self, tmp_path):
        code, out_dir = _run(tmp_path, ORACLE, "oracle")
        assert code == EXIT_OK

        manifest = _load(out_dir / "manifest.json")
        assert manifest["scenario"] == "oracle-certify"
        assert manifest["status"] == "ok"
        assert manifest["artifacts"] == ["checks.json", "oracle.csv", "oracle.json"]

        checks = _load(out_dir / "checks.json")
        assert checks["violations"] == []
        assert all(checks["checks"].values())

        oracle = _load(out_dir / "oracle.json")["dimensions"]
        assert set(oracle) == {"3", "4"}
        assert oracle["3"]["S_N"] == pytest.approx(oracle["3"]["S_N_closed_form"], rel=5e-3)

    def test_reruns_are_byte_identical(self, tmp_path):
        _, first = _run(tmp_path, ORACLE, "first")
        _, second = _run(tmp_path, ORACLE, "second")
        for name in ("oracle.csv", "oracle.json", "checks.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

        manifests = [_load(d / "manifest.json") for d in (first, second)]
        for manifest in manifests:
            manifest["parameters"]["run"].pop("out")
        assert manifests[0] == manifests[1]


class TestIdentitiesSuite:
    """Test a reduced identities-suite run."""

    def test_run_writes_one_row_per_check(self, tmp_path):
        code, out_dir = _run(tmp_path, IDENTITIES, "identities")
        manifest = _load(out_dir / "manifest.json")
        assert code == (EXIT_OK if manifest["status"] == "ok" else EXIT_VIOLATION)
        assert manifest["parameters"]["identities-suite"]["draws"] == 50

        document = _load(out_dir / "identities.json")
        assert set(document) == {
            "blowup_scale_dual_formula",
            "pohozaev_exponent_algebra",
            "moving_sphere_monotone",
            "moving_sphere_derivative",
            "reflected_weight_inequality",
            "kelvin_involution",
            "gradient_finite_difference",
            "ray_maximum_scan",
            "nehari_level_formula",
        }
        assert document["blowup_scale_dual_formula"]["violations"] == 0
        assert document["pohozaev_exponent_algebra"]["violations"] == 0
        assert document["moving_sphere_monotone"]["violations"] == 0
        assert document["kelvin_involution"]["samples"] == 2

        lines = (out_dir / "identities.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "check,samples,max_error,tolerance,violations"
        assert len(lines) == 10

    def test_missing_config_file(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.ini")]) == 3
