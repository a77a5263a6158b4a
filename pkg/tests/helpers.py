"""Shared generators and independent oracles for the test suite.

The oracles here are deliberately separate from the package code paths
they check: a brute-force minimal-edit-cost via LCS, and a from-scratch
unified-diff applier.
"""

from __future__ import annotations

import random
import re

from assistkit import TextDocument


def make_doc(rng: random.Random, max_lines: int = 200, duplicate_rate: float = 0.05) -> TextDocument:
    """Random code-looking document; mostly unique lines, rare duplicates."""
    n = rng.randint(0, max_lines)
    lines: list[str] = []
    for i in range(n):
        if lines and rng.random() < duplicate_rate:
            lines.append(rng.choice(lines))
        else:
            lines.append(f"v{i} = {rng.randint(0, 9999)}")
    return TextDocument.from_lines(lines)


def perturb(rng: random.Random, doc: TextDocument, max_edits: int = 30) -> TextDocument:
    """New document derived from ``doc`` by random line edits."""
    lines = list(doc.lines)
    for _ in range(rng.randint(1, max_edits)):
        op = rng.choice(("insert", "delete", "replace"))
        if op == "insert" or not lines:
            lines.insert(rng.randint(0, len(lines)), f"w{rng.randint(0, 9999)} = {rng.randint(0, 9999)}")
        elif op == "delete":
            del lines[rng.randrange(len(lines))]
        else:
            lines[rng.randrange(len(lines))] = f"u{rng.randint(0, 9999)} = {rng.randint(0, 9999)}"
    return TextDocument.from_lines(lines)


def make_pair(rng: random.Random, max_lines: int = 200) -> tuple[TextDocument, TextDocument]:
    old = make_doc(rng, max_lines)
    return old, perturb(rng, old)


def lcs_length(a: list[str], b: list[str]) -> int:
    """Classic O(n*m) dynamic program; fine for oracle-sized inputs."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for item in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if item == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[-1]))
        previous = current
    return previous[-1]


def minimal_edit_cost(a: list[str], b: list[str]) -> int:
    """Fewest inserted plus deleted lines turning ``a`` into ``b``."""
    common = lcs_length(a, b)
    return (len(a) - common) + (len(b) - common)


_HEADER_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def reference_apply_unified(old_text: str, payload: str) -> str:
    """Independent unified-diff applier used to cross-check rendered UD.

    Walks hunk headers, checks context and deletion lines against the old
    text, and rebuilds the new text. Raises ValueError on any mismatch.
    """
    old_lines = old_text.split("\n")
    if old_lines and old_lines[-1] == "":
        old_lines.pop()
    out: list[str] = []
    cursor = 0  # next old line index (0-based) not yet copied
    lines = payload.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    i = 0
    while i < len(lines):
        match = _HEADER_RE.match(lines[i])
        if match is None:
            raise ValueError(f"expected hunk header at payload line {i + 1}: {lines[i]!r}")
        old_start = int(match.group(1))
        old_span = int(match.group(2)) if match.group(2) is not None else 1
        start_index = old_start - 1 if old_span > 0 else old_start
        if start_index < cursor:
            raise ValueError("hunks overlap or are out of order")
        out.extend(old_lines[cursor:start_index])
        cursor = start_index
        i += 1
        consumed = 0
        while consumed < old_span or (i < len(lines) and lines[i].startswith("+")):
            if i >= len(lines):
                raise ValueError("hunk body truncated")
            body = lines[i]
            if body.startswith("+"):
                out.append(body[1:])
            elif body.startswith("-") or body.startswith(" ") or body == "":
                expected = body[1:]
                if cursor >= len(old_lines) or old_lines[cursor] != expected:
                    raise ValueError(f"old text mismatch at line {cursor + 1}")
                if not body.startswith("-"):
                    out.append(expected)
                cursor += 1
                consumed += 1
            else:
                raise ValueError(f"bad body line: {body!r}")
            i += 1
    out.extend(old_lines[cursor:])
    return "\n".join(out) + ("\n" if out else "")
