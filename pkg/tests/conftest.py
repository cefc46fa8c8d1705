import json
import os
from pathlib import Path

import pytest

from apglab import cli

REPO_ROOT = Path(__file__).resolve().parent.parent
SUITE_CONFIG = REPO_ROOT / "configs" / "paper_suite.json"


class SuiteResult:
    """Outputs of one full `apg run` over the shipped suite config."""

    def __init__(self, exit_code: int, out_dir: Path):
        self.exit_code = exit_code
        self.out_dir = out_dir

    def csv(self, name: str) -> Path:
        return self.out_dir / f"{name}.csv"

    def report(self, name: str) -> dict:
        with open(self.out_dir / f"{name}.report.json") as fh:
            return json.load(fh)

    def run_names(self):
        with open(SUITE_CONFIG) as fh:
            return [r["name"] for r in json.load(fh)["runs"]]


@pytest.fixture(scope="session")
def suite(tmp_path_factory) -> SuiteResult:
    """Execute the shipped suite once per test session."""
    out = tmp_path_factory.mktemp("suite")
    code = cli.main(["run", str(SUITE_CONFIG), "--out", str(out)])
    return SuiteResult(code, out)


@pytest.fixture()
def mini_config(tmp_path) -> Path:
    """Small, oracle-free config for CLI plumbing tests."""
    cfg = {
        "version": 1,
        "out_dir": str(tmp_path / "runs"),
        "runs": [
            {
                "name": "quad-fista",
                "problem": {"name": "quadratic", "diag": [1.0, 4.0], "b": [1.0, 1.0]},
                "algorithm": "fista",
                "schedule": {"kind": "classical"},
                "max_iters": 300,
            },
            {
                # 2000 iterations, not 300: the summability certificate sums
                # step tails over the last complete decade, and ista steps on
                # this quadratic only settle below noise around n ~ 100.
                "name": "quad-ista",
                "problem": {"name": "quadratic", "diag": [1.0, 4.0], "b": [1.0, 1.0]},
                "algorithm": "ista",
                "max_iters": 2000,
            },
            {
                "name": "quad-mfista",
                "problem": {"name": "quadratic", "diag": [1.0, 4.0], "b": [1.0, 1.0]},
                "algorithm": "mfista",
                "schedule": {"kind": "chambolle_dossal", "rho": 2.0},
                "max_iters": 300,
            },
        ],
    }
    path = tmp_path / "mini.json"
    path.write_text(json.dumps(cfg))
    return path
