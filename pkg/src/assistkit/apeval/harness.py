"""Pass@1 evaluation: one greedy completion per task, executed twice.

Each candidate runs against the task's base tests and, independently,
its extra tests; neither result is inferred from the other. Per-task
failures of any kind (generation, parsing, execution) count as fails and
never abort the run. Report percentages are always recomputed from raw
counts; formatting is presentation only.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from ..edits import EditFormat
from ..llm_client import ChatBackend, ChatRequest
from ..pipeline.samples import SampleType
from .adapters import extract_code, render_prompt, resolve_candidate
from .runners import ExecJob, ExecResult
from .suite import BenchSuite, BenchTask

REPORT_SCHEMA_VERSION = 1

Model = Callable[[BenchTask], str]
Runner = Callable[[ExecJob], ExecResult]


@dataclass(frozen=True)
class TaskOutcome:
    task_id: str
    sample_type: SampleType
    base_passed: bool
    extra_passed: bool
    failure: str | None = None  # generation/parse failure, if any


@dataclass
class EvalReport:
    suite_name: str
    totals: dict[SampleType, int] = field(default_factory=dict)
    base_passes: dict[SampleType, int] = field(default_factory=dict)
    extra_passes: dict[SampleType, int] = field(default_factory=dict)
    failures: list[tuple[str, str]] = field(default_factory=list)  # (task id, reason)

    @staticmethod
    def percent(passes: int, total: int) -> str:
        """One-decimal percentage string, e.g. 28/41 -> '68.3'."""
        if total == 0:
            return "0.0"
        return f"{100.0 * passes / total:.1f}"

    def cell(self, sample_type: SampleType) -> str:
        total = self.totals.get(sample_type, 0)
        return (
            f"{self.percent(self.base_passes.get(sample_type, 0), total)} "
            f"({self.percent(self.extra_passes.get(sample_type, 0), total)})"
        )

    @property
    def total_tasks(self) -> int:
        return sum(self.totals.values())

    def average_cell(self) -> str:
        total = self.total_tasks
        return (
            f"{self.percent(sum(self.base_passes.values()), total)} "
            f"({self.percent(sum(self.extra_passes.values()), total)})"
        )

    def to_json_dict(self) -> dict:
        per_type = {}
        for sample_type in SampleType:
            total = self.totals.get(sample_type, 0)
            per_type[sample_type.value] = {
                "total": total,
                "base_passes": self.base_passes.get(sample_type, 0),
                "extra_passes": self.extra_passes.get(sample_type, 0),
                "base_pct": self.percent(self.base_passes.get(sample_type, 0), total),
                "extra_pct": self.percent(self.extra_passes.get(sample_type, 0), total),
            }
        return {
            "schema": REPORT_SCHEMA_VERSION,
            "suite": self.suite_name,
            "per_type": per_type,
            "average": {
                "total": self.total_tasks,
                "base_passes": sum(self.base_passes.values()),
                "extra_passes": sum(self.extra_passes.values()),
                "base_pct": self.percent(sum(self.base_passes.values()), self.total_tasks),
                "extra_pct": self.percent(sum(self.extra_passes.values()), self.total_tasks),
            },
            "failures": [{"task": t, "reason": r} for t, r in sorted(self.failures)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def render_table(self) -> str:
        header = f"{'type':<8}{'tasks':>6}  {'base (extra)':<16}"
        rows = [header, "-" * len(header)]
        for sample_type in SampleType:
            rows.append(
                f"{sample_type.value:<8}{self.totals.get(sample_type, 0):>6}  {self.cell(sample_type):<16}"
            )
        rows.append(f"{'avg':<8}{self.total_tasks:>6}  {self.average_cell():<16}")
        return "\n".join(rows) + "\n"


def evaluate(
    suite: BenchSuite,
    model: Model,
    runner: Runner,
    fmt: EditFormat = EditFormat.WF,
    adapter: str = "native",
    base_timeout_s: float = 10.0,
    extra_timeout_s: float = 30.0,
    max_workers: int = 4,
) -> EvalReport:
    """Run the whole suite and aggregate Pass@1 per sample type."""

    def run_task(task: BenchTask) -> TaskOutcome:
        try:
            completion = model(task)
            code = extract_code(completion, adapter)
            candidate = resolve_candidate(task, code, fmt)
        except Exception as exc:  # any per-task failure counts as a fail
            return TaskOutcome(task.id, task.sample_type, False, False, f"{type(exc).__name__}: {exc}")
        base = runner(ExecJob(candidate, task.base_tests, task.entry_point, base_timeout_s))
        extra = runner(ExecJob(candidate, task.extra_tests, task.entry_point, extra_timeout_s))
        return TaskOutcome(task.id, task.sample_type, base.passed, extra.passed)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(run_task, suite.tasks))
    else:
        outcomes = [run_task(task) for task in suite.tasks]

    report = EvalReport(suite.name)
    for sample_type in SampleType:
        report.totals[sample_type] = 0
        report.base_passes[sample_type] = 0
        report.extra_passes[sample_type] = 0
    for outcome in outcomes:
        report.totals[outcome.sample_type] += 1
        report.base_passes[outcome.sample_type] += int(outcome.base_passed)
        report.extra_passes[outcome.sample_type] += int(outcome.extra_passed)
        if outcome.failure:
            report.failures.append((outcome.task_id, outcome.failure))
    return report


# ---------------------------------------------------------------------------
# models


class LLMModel:
    """Adapter+backend pair producing one greedy completion per task."""

    def __init__(
        self,
        backend: ChatBackend,
        adapter: str = "native",
        model_id: str = "default",
        fmt: EditFormat = EditFormat.WF,
        max_tokens: int = 2048,
    ):
        self.backend = backend
        self.adapter = adapter
        self.model_id = model_id
        self.fmt = fmt
        self.max_tokens = max_tokens

    def __call__(self, task: BenchTask) -> str:
        payload = render_prompt(task, self.adapter, self.fmt)
        if isinstance(payload, str):
            messages: tuple[tuple[str, str], ...] = (("user", payload),)
        else:
            messages = tuple((m["role"], m["content"]) for m in payload)
        request = ChatRequest(
            model_id=self.model_id,
            messages=messages,
            temperature=0.0,  # greedy decoding
            max_tokens=self.max_tokens,
        )
        return self.backend.complete(request)


def oracle_model(task: BenchTask) -> str:
    """Return the task's known-good solution, framed like a completion."""
    if task.reference_solution is None:
        raise ValueError(f"task {task.id} ships no reference solution")
    body = task.reference_solution
    if not body.endswith("\n"):
        body += "\n"
    return f"<|next_start|>```{task.language}\n{body}```<|next_end|>"


def null_model(task: BenchTask) -> str:
    """Always returns an empty completion."""
    return ""
