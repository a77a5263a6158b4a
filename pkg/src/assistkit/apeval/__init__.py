"""Execution-based benchmark loading, prompting, and Pass@1 reporting."""

from .adapters import (
    ADAPTERS,
    EmptyCandidate,
    extract_code,
    native_conversation,
    render_prompt,
    resolve_candidate,
    task_sections,
)
from .harness import EvalReport, LLMModel, TaskOutcome, evaluate, null_model, oracle_model
from .runners import ExecJob, ExecResult, LocalRunner, SubprocessRunner, compose_program
from .suite import (
    BenchSuite,
    BenchTask,
    CountMismatchWarning,
    SchemaError,
    load_suite,
    load_toy_suite,
    task_from_dict,
    task_to_dict,
)

__all__ = [
    "ADAPTERS",
    "BenchSuite",
    "BenchTask",
    "CountMismatchWarning",
    "EmptyCandidate",
    "EvalReport",
    "ExecJob",
    "ExecResult",
    "LLMModel",
    "LocalRunner",
    "SchemaError",
    "SubprocessRunner",
    "TaskOutcome",
    "compose_program",
    "evaluate",
    "extract_code",
    "load_suite",
    "load_toy_suite",
    "native_conversation",
    "null_model",
    "oracle_model",
    "render_prompt",
    "resolve_candidate",
    "task_from_dict",
    "task_sections",
    "task_to_dict",
]
