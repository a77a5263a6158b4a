"""Cross-package check: the eval harness driving the real runner binary.

The primary suite must not require the runner package, so everything here
skips when it is not installed.
"""

import importlib.util
import shutil
import sys

import pytest

from assistkit.apeval import ExecJob, SubprocessRunner, evaluate, load_toy_suite, oracle_model

RUNNER_CMD = [sys.executable, "-m", "exec_runner"]


def runner_available() -> bool:
    # find_spec keeps the module unimported, so the primary-only
    # acceptance check stays meaningful
    if importlib.util.find_spec("exec_runner") is not None:
        return True
    return shutil.which("exec-runner") is not None


pytestmark = pytest.mark.skipif(not runner_available(), reason="runner package not installed")


def test_subprocess_runner_against_real_binary():
    runner = SubprocessRunner(RUNNER_CMD)
    result = runner(ExecJob("def f():\n    return 1\n", "assert f() == 1\n", "f", timeout_s=10.0))
    assert result.status == "pass"
    failing = runner(ExecJob("def f():\n    return 2\n", "assert f() == 1\n", "f", timeout_s=10.0))
    assert failing.status == "fail"


def test_full_eval_through_real_runner():
    suite = load_toy_suite()
    report = evaluate(suite, oracle_model, SubprocessRunner(RUNNER_CMD), max_workers=4)
    assert report.average_cell() == "100.0 (100.0)"


def test_timeout_propagates_through_real_runner():
    runner = SubprocessRunner(RUNNER_CMD)
    result = runner(ExecJob("while True:\n    pass\n", "", "f", timeout_s=1.5))
    assert result.status == "timeout"
