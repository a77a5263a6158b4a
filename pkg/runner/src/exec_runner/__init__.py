"""Sandboxed one-shot code executor.

Reads one JSON job from stdin, runs the candidate solution together with
its test program in a fresh isolated interpreter subprocess, and writes
one JSON result to stdout. The exit code is 0 unless the runner itself
breaks; everything the candidate does wrong maps to a result status.

Job:    {"schema": 1, "solution_code": str, "test_code": str,
         "entry_point": str, "timeout_s": float, "memory_mb": int}
Result: {"schema": 1, "status": "pass"|"fail"|"timeout"|"error",
         "stderr_tail": str, "wall_time_s": float}

Isolation: each job runs in its own scratch directory (removed afterward)
with CPU, address-space, and wall-clock limits, a fresh session (so the
whole process tree can be killed on timeout), and a best-effort socket
block injected ahead of the candidate code.
"""

from __future__ import annotations

import json
import os
import shutil
import signal
import subprocess
import sys
import tempfile
import time

SCHEMA_VERSION = 1
STDERR_TAIL_CHARS = 2000

_SANDBOX_PRELUDE = """\
import socket as _socket

def _no_network(*args, **kwargs):
    raise OSError("network access is disabled in the runner sandbox")

_socket.socket = _no_network
_socket.create_connection = _no_network
del _socket

"""


class BadJob(ValueError):
    """Input does not describe a runnable job."""


def parse_job(raw: str) -> dict:
    try:
        data = json.loads(raw)
    except ValueError as exc:
        raise BadJob(f"stdin is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise BadJob("job must be a JSON object")
    if data.get("schema") != SCHEMA_VERSION:
        raise BadJob(f"expected schema {SCHEMA_VERSION}, got {data.get('schema')!r}")
    for field in ("solution_code", "test_code", "entry_point"):
        if not isinstance(data.get(field), str):
            raise BadJob(f"missing or non-text field {field!r}")
    timeout_s = float(data.get("timeout_s", 10.0))
    memory_mb = int(data.get("memory_mb", 512))
    if timeout_s <= 0:
        raise BadJob("timeout_s must be > 0")
    if memory_mb <= 0:
        raise BadJob("memory_mb must be positive")
    return {
        "solution_code": data["solution_code"],
        "test_code": data["test_code"],
        "entry_point": data["entry_point"],
        "timeout_s": timeout_s,
        "memory_mb": memory_mb,
    }


def compose_program(solution_code: str, test_code: str) -> str:
    return (
        _SANDBOX_PRELUDE
        + solution_code.rstrip("\n")
        + "\n\n"
        + test_code.rstrip("\n")
        + "\n"
    )


def _limit_resources(memory_mb: int, cpu_seconds: int):
    def apply_limits() -> None:
        import resource

        memory_bytes = memory_mb * 1024 * 1024
        try:
            resource.setrlimit(resource.RLIMIT_AS, (memory_bytes, memory_bytes))
        except (ValueError, OSError):
            pass
        try:
            resource.setrlimit(resource.RLIMIT_CPU, (cpu_seconds, cpu_seconds + 1))
        except (ValueError, OSError):
            pass

    return apply_limits


def run_job(job: dict) -> dict:
    """Execute one job and return the result dict."""
    program = compose_program(job["solution_code"], job["test_code"])
    cpu_seconds = max(1, int(job["timeout_s"]) + 1)
    scratch = tempfile.mkdtemp(prefix="exec-runner-")
    started = time.monotonic()
    status = "error"
    stderr_tail = ""
    proc: subprocess.Popen | None = None
    try:
        proc = subprocess.Popen(
            [sys.executable, "-I", "-c", program],
            cwd=scratch,
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            start_new_session=True,
            preexec_fn=_limit_resources(job["memory_mb"], cpu_seconds),
        )
        try:
            _, stderr = proc.communicate(timeout=job["timeout_s"])
            stderr_tail = (stderr or "")[-STDERR_TAIL_CHARS:]
            status = "pass" if proc.returncode == 0 else "fail"
        except subprocess.TimeoutExpired:
            _kill_tree(proc)
            status = "timeout"
            stderr_tail = ""
    except OSError as exc:
        status = "error"
        stderr_tail = str(exc)[-STDERR_TAIL_CHARS:]
    finally:
        if proc is not None and proc.poll() is None:
            _kill_tree(proc)
        shutil.rmtree(scratch, ignore_errors=True)
    return {
        "schema": SCHEMA_VERSION,
        "status": status,
        "stderr_tail": stderr_tail,
        "wall_time_s": round(time.monotonic() - started, 4),
    }


def _kill_tree(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError, OSError):
        try:
            proc.kill()
        except OSError:
            pass
    try:
        proc.communicate(timeout=5)
    except (subprocess.TimeoutExpired, ValueError, OSError):
        pass


def selftest() -> int:
    """Run the pass/fail/timeout triple against this interpreter."""
    cases = [
        ("pass", "def add(a, b):\n    return a + b\n", "assert add(1, 2) == 3\n", 5.0),
        ("fail", "def add(a, b):\n    return a - b\n", "assert add(1, 2) == 3\n", 5.0),
        ("timeout", "while True:\n    pass\n", "", 1.0),
    ]
    ok = True
    for expected, solution, tests, timeout_s in cases:
        result = run_job(
            {
                "solution_code": solution,
                "test_code": tests,
                "entry_point": "add",
                "timeout_s": timeout_s,
                "memory_mb": 256,
            }
        )
        line = f"selftest {expected}: got {result['status']} in {result['wall_time_s']}s"
        print(line, file=sys.stderr)
        ok = ok and result["status"] == expected
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if argv == ["--selftest"]:
        return selftest()
    if argv:
        print(f"unknown arguments: {argv} (only --selftest is supported)", file=sys.stderr)
        return 2
    try:
        job = parse_job(sys.stdin.read())
    except BadJob as exc:
        # a malformed job is the caller's bug, not an internal failure
        print(
            json.dumps(
                {
                    "schema": SCHEMA_VERSION,
                    "status": "error",
                    "stderr_tail": str(exc)[-STDERR_TAIL_CHARS:],
                    "wall_time_s": 0.0,
                }
            )
        )
        return 0
    try:
        result = run_job(job)
    except Exception as exc:  # INTERNAL: runner bug
        print(f"internal runner failure: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
