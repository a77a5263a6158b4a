"""Execution backends for candidate programs.

A runner takes one ExecJob (candidate solution plus test program) and
returns an ExecResult. LocalRunner executes in a fresh interpreter
subprocess and is what the test suite uses; SubprocessRunner drives an
external runner binary over the JSON stdin/stdout protocol, which keeps
the execution sandbox replaceable without touching this package.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass

RUNNER_SCHEMA_VERSION = 1
STDERR_TAIL_CHARS = 2000


@dataclass(frozen=True)
class ExecJob:
    solution_code: str
    test_code: str
    entry_point: str
    timeout_s: float = 10.0
    memory_mb: int = 512

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.memory_mb <= 0:
            raise ValueError("memory_mb must be positive")

    def to_dict(self) -> dict:
        return {
            "schema": RUNNER_SCHEMA_VERSION,
            "solution_code": self.solution_code,
            "test_code": self.test_code,
            "entry_point": self.entry_point,
            "timeout_s": self.timeout_s,
            "memory_mb": self.memory_mb,
        }


@dataclass(frozen=True)
class ExecResult:
    status: str  # pass | fail | timeout | error
    stderr_tail: str = ""
    wall_time_s: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def compose_program(job: ExecJob) -> str:
    return job.solution_code.rstrip("\n") + "\n\n" + job.test_code.rstrip("\n") + "\n"


class LocalRunner:
    """Run the composed program in an isolated interpreter subprocess."""

    def __call__(self, job: ExecJob) -> ExecResult:
        program = compose_program(job)
        started = time.monotonic()
        with tempfile.TemporaryDirectory(prefix="assistkit-exec-") as scratch:
            try:
                proc = subprocess.run(
                    [sys.executable, "-I", "-c", program],
                    cwd=scratch,
                    capture_output=True,
                    text=True,
                    timeout=job.timeout_s,
                )
            except subprocess.TimeoutExpired:
                return ExecResult("timeout", "", time.monotonic() - started)
            except OSError as exc:
                return ExecResult("error", str(exc)[:STDERR_TAIL_CHARS], time.monotonic() - started)
        elapsed = time.monotonic() - started
        status = "pass" if proc.returncode == 0 else "fail"
        return ExecResult(status, (proc.stderr or "")[-STDERR_TAIL_CHARS:], elapsed)


class SubprocessRunner:
    """Drive an external runner process over the JSON wire protocol."""

    def __init__(self, command: list[str]):
        if not command:
            raise ValueError("runner command must be non-empty")
        self.command = list(command)

    def __call__(self, job: ExecJob) -> ExecResult:
        started = time.monotonic()
        try:
            proc = subprocess.run(
                self.command,
                input=json.dumps(job.to_dict()),
                capture_output=True,
                text=True,
                timeout=job.timeout_s * 2 + 30,
            )
        except subprocess.TimeoutExpired:
            return ExecResult("error", "runner process itself timed out", time.monotonic() - started)
        except OSError as exc:
            return ExecResult("error", str(exc)[:STDERR_TAIL_CHARS], time.monotonic() - started)
        if proc.returncode != 0:
            tail = (proc.stderr or "")[-STDERR_TAIL_CHARS:]
            return ExecResult("error", f"runner internal failure: {tail}", time.monotonic() - started)
        try:
            payload = json.loads(proc.stdout)
            status = payload["status"]
            if status not in ("pass", "fail", "timeout", "error"):
                raise ValueError(f"unknown status {status!r}")
            return ExecResult(
                status,
                str(payload.get("stderr_tail", ""))[:STDERR_TAIL_CHARS],
                float(payload.get("wall_time_s", 0.0)),
            )
        except (ValueError, KeyError) as exc:
            return ExecResult("error", f"bad runner reply: {exc}", time.monotonic() - started)
