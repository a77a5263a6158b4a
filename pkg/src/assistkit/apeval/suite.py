"""Benchmark suite model and manifest loading.

A suite is a JSON manifest of tasks, each typed by which inputs accompany
the current code (the four history/user combinations), plus entry point
and two test programs (base and extra). The canonical suite has 164 tasks,
41 per type; other sizes load with a warning unless suppressed.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..conversation import TargetAnnotation, annotation_from_dict, annotation_to_dict
from ..documents import TextDocument
from ..pipeline.samples import SampleType

SUITE_SCHEMA_VERSION = 1

CANONICAL_TOTAL = 164
CANONICAL_PER_TYPE = 41


class SchemaError(Exception):
    """Manifest violates the suite schema."""


class CountMismatchWarning(UserWarning):
    """Suite does not have the canonical per-type task counts."""


@dataclass(frozen=True)
class BenchTask:
    id: str
    sample_type: SampleType
    history: tuple[TextDocument, ...]
    current: TextDocument
    entry_point: str
    base_tests: str
    extra_tests: str
    annotation: TargetAnnotation | None = None
    user: str | None = None
    language: str = "python"
    reference_solution: str | None = None

    def __post_init__(self) -> None:
        if self.sample_type.has_history != bool(self.history):
            raise SchemaError(
                f"task {self.id}: type {self.sample_type.value} disagrees with history presence"
            )
        if self.sample_type.has_user != (self.user is not None):
            raise SchemaError(
                f"task {self.id}: type {self.sample_type.value} disagrees with user presence"
            )
        if not self.entry_point:
            raise SchemaError(f"task {self.id}: missing entry_point")


@dataclass(frozen=True)
class BenchSuite:
    name: str
    tasks: tuple[BenchTask, ...]

    def counts_by_type(self) -> dict[SampleType, int]:
        counts = {t: 0 for t in SampleType}
        for task in self.tasks:
            counts[task.sample_type] += 1
        return counts

    @property
    def is_canonical(self) -> bool:
        return len(self.tasks) == CANONICAL_TOTAL and all(
            n == CANONICAL_PER_TYPE for n in self.counts_by_type().values()
        )


def task_to_dict(task: BenchTask) -> dict:
    data: dict = {
        "id": task.id,
        "sample_type": task.sample_type.value,
        "history": [doc.content for doc in task.history],
        "current": task.current.content,
        "entry_point": task.entry_point,
        "base_tests": task.base_tests,
        "extra_tests": task.extra_tests,
        "language": task.language,
    }
    if task.annotation is not None:
        data["annotation"] = annotation_to_dict(task.annotation)
    if task.user is not None:
        data["user"] = task.user
    if task.reference_solution is not None:
        data["reference_solution"] = task.reference_solution
    return data


def task_from_dict(data: dict) -> BenchTask:
    try:
        return BenchTask(
            id=data["id"],
            sample_type=SampleType(data["sample_type"]),
            history=tuple(TextDocument.from_text(h) for h in data.get("history", [])),
            current=TextDocument.from_text(data["current"]),
            entry_point=data["entry_point"],
            base_tests=data["base_tests"],
            extra_tests=data["extra_tests"],
            annotation=annotation_from_dict(data.get("annotation")),
            user=data.get("user"),
            language=data.get("language", "python"),
            reference_solution=data.get("reference_solution"),
        )
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"task {data.get('id', '?')}: {exc}") from exc


def load_suite(path: str | Path, warn_noncanonical: bool = True) -> BenchSuite:
    """Load and validate a suite manifest."""
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if manifest.get("schema") != SUITE_SCHEMA_VERSION:
        raise SchemaError(f"{path}: expected schema {SUITE_SCHEMA_VERSION}")
    tasks = tuple(task_from_dict(t) for t in manifest.get("tasks", []))
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        raise SchemaError(f"{path}: duplicate task ids")
    suite = BenchSuite(manifest.get("name", Path(path).stem), tasks)
    if warn_noncanonical and not suite.is_canonical:
        counts = {t.value: n for t, n in suite.counts_by_type().items()}
        warnings.warn(
            f"suite {suite.name!r} has {len(tasks)} tasks {counts}, not the canonical "
            f"{CANONICAL_TOTAL} ({CANONICAL_PER_TYPE} per type)",
            CountMismatchWarning,
            stacklevel=2,
        )
    return suite


def load_toy_suite() -> BenchSuite:
    """The 8-task suite shipped for CI and demos (2 tasks per type)."""
    path = resources.files(__package__) / "data" / "toy_suite.json"
    with resources.as_file(path) as concrete:
        return load_suite(concrete, warn_noncanonical=False)
