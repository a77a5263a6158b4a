"""Prompt rendering per model kind, and completion post-processing.

Three adapters cover the model landscape: ``native`` renders the
conversation template directly (for models trained on it), ``base``
wraps the task in a one-shot plain-text prompt for completion models, and
``instruct`` wraps it in a two-turn chat exchange for instruction models.
"""

from __future__ import annotations

import re

from ..conversation import (
    NEXT_END,
    NEXT_START,
    Conversation,
    Message,
    Role,
    annotate_target,
    generation_prompt,
    render_template,
)
from ..edits import EditFormat, RenderedEdit, apply_edit, parse_edit
from .suite import BenchTask

ADAPTERS = ("native", "base", "instruct")

SYSTEM_PROMPT = "You are a helpful programming assistant."

_FORMAT_HEADER = (
    "Read the following messages during programming and return the modified "
    "code in this format:\n\n"
    f"{NEXT_START}{{modified code}}{NEXT_END}\n\n"
)

_EXAMPLE_SECTIONS = (
    "Programming process 1:\n"
    "```python\na = 1\nb = 2\nc = a + b\n```\n\n"
    "Current code:\n"
    "```python\ni = 1\nb = 2\nc = a + b\n```\n\n"
    "User instruction:\n"
    "Please change variable names."
)

_EXAMPLE_ANSWER = f"{NEXT_START}```python\ni = 1\nj = 2\nk = i + j\n```{NEXT_END}"

MESSAGES_START = "<|messages_start|>"
MESSAGES_END = "<|messages_end|>"

_FENCE_RE = re.compile(r"\A```[^\n]*\n(.*?)\n?```\s*\Z", re.DOTALL)


class EmptyCandidate(Exception):
    """The completion contains no code at all."""


def task_sections(task: BenchTask) -> str:
    """The history/current/user blocks describing one task."""
    parts: list[str] = []
    for idx, snapshot in enumerate(task.history, start=1):
        parts.append(f"Programming process {idx}:\n```{task.language}\n{snapshot.content}```")
    current_text = annotate_target(task.current, task.annotation)
    parts.append(f"Current code:\n```{task.language}\n{current_text}```")
    if task.user is not None:
        parts.append(f"User instruction:\n{task.user}")
    return "\n\n".join(parts)


def native_conversation(task: BenchTask) -> Conversation:
    messages: list[Message] = [Message(Role.SYSTEM, SYSTEM_PROMPT)]
    messages.extend(Message(Role.HISTORY, doc.content) for doc in task.history)
    messages.append(Message(Role.CURRENT, task.current.content, annotation=task.annotation))
    if task.user is not None:
        messages.append(Message(Role.USER, task.user))
    return Conversation(tuple(messages))


def render_prompt(task: BenchTask, adapter: str, fmt: EditFormat = EditFormat.WF):
    """Request payload for the task: text for native/base, messages for instruct."""
    if adapter == "native":
        return render_template(native_conversation(task), fmt) + generation_prompt()
    if adapter == "base":
        return (
            _FORMAT_HEADER
            + MESSAGES_START
            + _EXAMPLE_SECTIONS
            + MESSAGES_END
            + "\n\n"
            + _EXAMPLE_ANSWER
            + "\n\n"
            + _FORMAT_HEADER
            + MESSAGES_START
            + task_sections(task)
            + MESSAGES_END
            + "\n\n"
        )
    if adapter == "instruct":
        return [
            {"role": "user", "content": _FORMAT_HEADER + _EXAMPLE_SECTIONS},
            {"role": "assistant", "content": _EXAMPLE_ANSWER},
            {"role": "user", "content": _FORMAT_HEADER + task_sections(task)},
        ]
    raise ValueError(f"unknown adapter {adapter!r}; expected one of {ADAPTERS}")


def extract_code(output: str, adapter: str = "native") -> str:
    """Candidate program text from a raw completion.

    Prefers the first ``<|next_start|>``/``<|next_end|>`` block, then
    strips a single surrounding markdown fence if present.
    """
    text = output
    start = text.find(NEXT_START)
    if start != -1:
        end = text.find(NEXT_END, start)
        text = text[start + len(NEXT_START) : end] if end != -1 else text[start + len(NEXT_START) :]
    text = text.strip()
    fenced = _FENCE_RE.match(text)
    if fenced is not None:
        text = fenced.group(1)
    if not text.strip():
        raise EmptyCandidate("completion contains no code")
    return text


def resolve_candidate(task: BenchTask, code: str, fmt: EditFormat) -> str:
    """Final program text: WF is the program; other formats are edits to apply."""
    if fmt is EditFormat.WF:
        return code if code.endswith("\n") else code + "\n"
    script = parse_edit(RenderedEdit(fmt, code), task.current)
    return apply_edit(script, task.current).content
