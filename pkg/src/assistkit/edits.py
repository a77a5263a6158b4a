"""Line-based edit scripts and the four serialized edit formats.

The codec computes minimal line diffs between document versions and
serializes them as whole-file (WF), unified-diff (UD), location-and-change
(LC), or search-and-replace (SR) payloads. Every payload parses back to the
exact script it was rendered from; parsing reconstructs the edited document
and recomputes the canonical diff, so round-trips are byte-exact.

Canonical form: hunks are minimal (fewest inserted+deleted lines), sorted,
non-overlapping, separated by at least one kept line, and tie-broken toward
the topmost possible placement.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .documents import TextDocument

UD_CONTEXT_LINES = 3

SR_SEARCH_FENCE = "<<<<<<< SEARCH"
SR_DIVIDER_FENCE = "======="
SR_REPLACE_FENCE = ">>>>>>> REPLACE"

_LC_HEADER_RE = re.compile(r"^(\d+),(\d+) c$")
_UD_HEADER_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


class EditError(Exception):
    """Base class for codec failures."""


class ParseError(EditError):
    """Payload is malformed for its format."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SearchNotFound(EditError):
    """An SR search block matched nowhere in the document."""


class SearchAmbiguous(EditError):
    """An SR search block cannot be resolved to a unique application."""


class ContextMismatch(EditError):
    """A hunk's recorded old lines disagree with the document."""

    def __init__(self, hunk_index: int, message: str):
        super().__init__(f"hunk {hunk_index}: {message}")
        self.hunk_index = hunk_index


class EditFormat(enum.Enum):
    """The four serialized representations of a code change."""

    WF = "wf"
    UD = "ud"
    LC = "lc"
    SR = "sr"


@dataclass(frozen=True)
class ChangeHunk:
    """Replace ``old_len`` lines starting at ``old_start`` with ``new_lines``.

    ``old_start`` is 1-based. ``old_len == 0`` means the new lines are
    inserted before line ``old_start`` (``old_start == line count + 1``
    appends at the end).
    """

    old_start: int
    old_lines: tuple[str, ...]
    new_lines: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.old_start < 1:
            raise ValueError("old_start is 1-based and must be >= 1")
        if not self.old_lines and not self.new_lines:
            raise ValueError("a hunk must change something")

    @property
    def old_len(self) -> int:
        return len(self.old_lines)

    @property
    def old_end(self) -> int:
        """First old line after the hunk's range."""
        return self.old_start + self.old_len


@dataclass(frozen=True)
class EditScript:
    """Ordered, non-overlapping hunks describing one document revision."""

    hunks: tuple[ChangeHunk, ...] = ()

    def __post_init__(self) -> None:
        for prev, cur in zip(self.hunks, self.hunks[1:]):
            if prev.old_end > cur.old_start:
                raise ValueError(
                    f"hunks overlap or are out of order at old line {cur.old_start}"
                )

    @property
    def is_empty(self) -> bool:
        return not self.hunks

    def cost(self) -> int:
        """Total inserted plus deleted lines."""
        return sum(h.old_len + len(h.new_lines) for h in self.hunks)


@dataclass(frozen=True)
class RenderedEdit:
    """One code change serialized in a concrete edit format."""

    format: EditFormat
    payload: str


def _require_normalized(doc: TextDocument, name: str) -> None:
    if not doc.trailing_newline:
        raise ValueError(f"{name} document is not normalized (missing trailing newline)")


# ---------------------------------------------------------------------------
# diff


def _myers_ops(a: list[str], b: list[str]) -> list[tuple[str, int, int]]:
    """Minimal edit trace between line lists.

    Returns ops ``('=', i, j)``, ``('-', i, -1)``, ``('+', -1, j)`` in
    document order. Greedy forward search over diagonals; O((N+M) * D).
    """
    n, m = len(a), len(b)
    if n == 0 and m == 0:
        return []
    v: dict[int, int] = {1: 0}
    trace: list[dict[int, int]] = []
    found = False
    for d in range(n + m + 1):
        trace.append(dict(v))
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v.get(k - 1, 0) < v.get(k + 1, 0)):
                x = v.get(k + 1, 0)
            else:
                x = v.get(k - 1, 0) + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k] = x
            if x >= n and y >= m:
                found = True
                break
        if found:
            break

    ops: list[tuple[str, int, int]] = []
    x, y = n, m
    for d in range(len(trace) - 1, -1, -1):
        vv = trace[d]
        k = x - y
        if k == -d or (k != d and vv.get(k - 1, 0) < vv.get(k + 1, 0)):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = vv.get(prev_k, 0)
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            ops.append(("=", x - 1, y - 1))
            x -= 1
            y -= 1
        if d > 0:
            if x == prev_x:
                ops.append(("+", -1, y - 1))
                y -= 1
            else:
                ops.append(("-", x - 1, -1))
                x -= 1
    ops.reverse()
    return ops


def _ops_to_hunks(a: list[str], b: list[str], ops: list[tuple[str, int, int]]) -> list[ChangeHunk]:
    hunks: list[ChangeHunk] = []
    i = 0
    while i < len(ops):
        if ops[i][0] == "=":
            i += 1
            continue
        dels: list[int] = []
        inss: list[int] = []
        # old-coordinate position of the run: next unconsumed old line
        j = i
        while j < len(ops) and ops[j][0] != "=":
            kind, ai, bi = ops[j]
            if kind == "-":
                dels.append(ai)
            else:
                inss.append(bi)
            j += 1
        if dels:
            start = dels[0] + 1
        else:
            # pure insertion: lands before the next kept old line
            start = (ops[i - 1][1] + 2) if i > 0 else 1
        hunks.append(
            ChangeHunk(
                old_start=start,
                old_lines=tuple(a[k] for k in dels),
                new_lines=tuple(b[k] for k in inss),
            )
        )
        i = j
    return hunks


def _slide_and_merge(a: list[str], hunks: list[ChangeHunk]) -> list[ChangeHunk]:
    """Canonicalize placement: slide pure inserts/deletes to the topmost
    equivalent position, then merge hunks left touching each other."""
    out: list[ChangeHunk] = []
    for hunk in hunks:
        bound = out[-1].old_end if out else 1
        start = hunk.old_start
        old_l = list(hunk.old_lines)
        new_l = list(hunk.new_lines)
        if not old_l:
            while start - 1 >= bound and a[start - 2] == new_l[-1]:
                new_l = [new_l[-1]] + new_l[:-1]
                start -= 1
        elif not new_l:
            width = len(old_l)
            while start - 1 >= bound and a[start - 2] == a[start + width - 2]:
                start -= 1
            old_l = a[start - 1 : start - 1 + width]
        if out and out[-1].old_end == start:
            prev = out.pop()
            out.append(
                ChangeHunk(
                    prev.old_start,
                    prev.old_lines + tuple(old_l),
                    prev.new_lines + tuple(new_l),
                )
            )
        else:
            out.append(ChangeHunk(start, tuple(old_l), tuple(new_l)))
    return out


def diff(old: TextDocument, new: TextDocument) -> EditScript:
    """Minimal canonical line diff turning ``old`` into ``new``."""
    _require_normalized(old, "old")
    _require_normalized(new, "new")
    a, b = old.lines, new.lines
    ops = _myers_ops(a, b)
    hunks = _slide_and_merge(a, _ops_to_hunks(a, b, ops))
    return EditScript(tuple(hunks))


def apply_edit(script: EditScript, old: TextDocument) -> TextDocument:
    """Apply ``script`` to ``old``; every hunk's recorded lines must match."""
    _require_normalized(old, "old")
    lines = old.lines
    for index, hunk in enumerate(script.hunks, start=1):
        if hunk.old_start + hunk.old_len - 1 > len(lines):
            raise ContextMismatch(index, f"old range {hunk.old_start}..{hunk.old_end - 1} is out of bounds")
        if hunk.old_len == 0 and hunk.old_start > len(lines) + 1:
            raise ContextMismatch(index, f"insertion point {hunk.old_start} is out of bounds")
        actual = tuple(lines[hunk.old_start - 1 : hunk.old_start - 1 + hunk.old_len])
        if actual != hunk.old_lines:
            raise ContextMismatch(index, f"document lines at {hunk.old_start} do not match recorded old lines")
    result = list(lines)
    for hunk in reversed(script.hunks):
        result[hunk.old_start - 1 : hunk.old_start - 1 + hunk.old_len] = list(hunk.new_lines)
    return TextDocument.from_lines(result)


# ---------------------------------------------------------------------------
# rendering


def _format_ud_range(start: int, length: int) -> str:
    """Unified-diff range notation: 1-length ranges omit the count, empty
    ranges are anchored to the line before them."""
    if length == 1:
        return str(start)
    if length == 0:
        start -= 1
    return f"{start},{length}"


def _render_wf(script: EditScript, old: TextDocument, new: TextDocument) -> str:
    return new.content


def _render_ud(script: EditScript, old: TextDocument, new: TextDocument) -> str:
    context = UD_CONTEXT_LINES
    a = old.lines
    groups: list[list[ChangeHunk]] = []
    for hunk in script.hunks:
        if groups and hunk.old_start - groups[-1][-1].old_end <= 2 * context:
            groups[-1].append(hunk)
        else:
            groups.append([hunk])

    delta = 0  # new-minus-old line offset before the current group
    chunks: list[str] = []
    for group in groups:
        old_lo = max(1, group[0].old_start - context)
        old_hi = min(len(a), group[-1].old_end - 1 + context)
        old_span = max(0, old_hi - old_lo + 1)
        new_span = old_span + sum(len(h.new_lines) - h.old_len for h in group)
        header = (
            f"@@ -{_format_ud_range(old_lo, old_span)} "
            f"+{_format_ud_range(old_lo + delta, new_span)} @@"
        )
        body: list[str] = [header]
        pos = old_lo
        for hunk in group:
            body.extend(" " + a[k - 1] for k in range(pos, hunk.old_start))
            body.extend("-" + line for line in hunk.old_lines)
            body.extend("+" + line for line in hunk.new_lines)
            pos = hunk.old_end
            delta += len(hunk.new_lines) - hunk.old_len
        body.extend(" " + a[k - 1] for k in range(pos, old_hi + 1))
        chunks.append("\n".join(body) + "\n")
    return "".join(chunks)


def _render_lc(script: EditScript, old: TextDocument, new: TextDocument) -> str:
    entries: list[str] = []
    for hunk in script.hunks:
        if hunk.old_len > 0:
            header = f"{hunk.old_start},{hunk.old_end - 1} c"
        elif hunk.old_start == 1:
            header = "0,0 c"
        else:
            header = f"{hunk.old_start},{hunk.old_start - 1} c"
        lines = [header, *hunk.new_lines]
        entries.append("\n".join(lines) + "\n")
    return "".join(entries)


def _count_block(haystack: list[str], needle: list[str]) -> int:
    if not needle:
        return 1 if not haystack else len(haystack) + 1
    width = len(needle)
    return sum(1 for i in range(len(haystack) - width + 1) if haystack[i : i + width] == needle)


def _sr_anchor(
    a: list[str], hunk: ChangeHunk, up_limit: int, down_limit: int
) -> tuple[list[str], list[str]] | None:
    """Smallest symmetric-context (search, replace) pair unique in ``a``."""
    for radius in range(max(up_limit, down_limit) + 1):
        up = min(radius, up_limit)
        down = min(radius, down_limit)
        pre = a[hunk.old_start - 1 - up : hunk.old_start - 1]
        post = a[hunk.old_end - 1 : hunk.old_end - 1 + down]
        search = pre + list(hunk.old_lines) + post
        if _count_block(a, search) == 1:
            return search, pre + list(hunk.new_lines) + post
    return None


def _merge_hunk_pair(a: list[str], left: ChangeHunk, right: ChangeHunk) -> ChangeHunk:
    """One hunk spanning both, with the unchanged gap carried verbatim."""
    gap = tuple(a[left.old_end - 1 : right.old_start - 1])
    return ChangeHunk(
        left.old_start,
        left.old_lines + gap + right.old_lines,
        left.new_lines + gap + right.new_lines,
    )


def _render_sr(script: EditScript, old: TextDocument, new: TextDocument) -> str:
    a = old.lines
    hunks = list(script.hunks)
    pairs: list[tuple[list[str], list[str]]] = []
    while True:
        # unchanged lines between hunks are split between neighbors (the
        # upper hunk gets the extra line) so search blocks never overlap
        limits: list[tuple[int, int]] = []
        for idx, hunk in enumerate(hunks):
            gap_above = hunk.old_start - (hunks[idx - 1].old_end if idx > 0 else 1)
            gap_below = (
                hunks[idx + 1].old_start if idx + 1 < len(hunks) else len(a) + 1
            ) - hunk.old_end
            up = gap_above if idx == 0 else gap_above // 2
            down = gap_below if idx + 1 == len(hunks) else (gap_below + 1) // 2
            limits.append((up, down))
        pairs = []
        failed_at: int | None = None
        for idx, hunk in enumerate(hunks):
            anchor = _sr_anchor(a, hunk, *limits[idx])
            if anchor is None:
                failed_at = idx
                break
            pairs.append(anchor)
        if failed_at is None:
            break
        if len(hunks) == 1:
            # full-document context exhausted without a unique anchor
            raise SearchAmbiguous(
                f"no unique search block for the change at line {hunks[0].old_start}"
            )
        # grow the anchor by absorbing the nearest neighbor hunk
        idx = failed_at
        if idx == 0:
            neighbor = 0
        elif idx == len(hunks) - 1:
            neighbor = idx - 1
        else:
            gap_up = hunks[idx].old_start - hunks[idx - 1].old_end
            gap_down = hunks[idx + 1].old_start - hunks[idx].old_end
            neighbor = idx - 1 if gap_up <= gap_down else idx
        hunks[neighbor : neighbor + 2] = [
            _merge_hunk_pair(a, hunks[neighbor], hunks[neighbor + 1])
        ]

    blocks: list[str] = []
    for search, replace in pairs:
        lines = [SR_SEARCH_FENCE, *search, SR_DIVIDER_FENCE, *replace, SR_REPLACE_FENCE]
        blocks.append("\n".join(lines) + "\n")
    return "".join(blocks)


def render_edit(
    script: EditScript, old: TextDocument, new: TextDocument, format: EditFormat
) -> RenderedEdit:
    """Serialize ``script`` (which must equal ``diff(old, new)``) as ``format``."""
    _require_normalized(old, "old")
    _require_normalized(new, "new")
    if apply_edit(script, old) != new:
        raise ValueError("script does not turn old into new")
    renderer = {
        EditFormat.WF: _render_wf,
        EditFormat.UD: _render_ud,
        EditFormat.LC: _render_lc,
        EditFormat.SR: _render_sr,
    }[format]
    return RenderedEdit(format, renderer(script, old, new))


# ---------------------------------------------------------------------------
# parsing


def _payload_lines(payload: str) -> list[str]:
    lines = payload.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse_ud_to_doc(payload: str, old: TextDocument) -> TextDocument:
    a = old.lines
    lines = _payload_lines(payload)
    raw_hunks: list[ChangeHunk] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- ") or line.startswith("+++ ") or line in ("---", "+++"):
            i += 1
            continue
        match = _UD_HEADER_RE.match(line)
        if match is None:
            raise ParseError(f"expected hunk header, got {line!r}", line=i + 1)
        old_start = int(match.group(1))
        old_span = int(match.group(2)) if match.group(2) is not None else 1
        if old_span == 0:
            old_start += 1  # empty ranges are anchored one line above
        i += 1
        pos = old_start
        consumed = 0
        dels: list[str] = []
        adds: list[str] = []
        run_start = pos

        def flush() -> None:
            nonlocal dels, adds, run_start
            if dels or adds:
                raw_hunks.append(ChangeHunk(run_start, tuple(dels), tuple(adds)))
            dels, adds = [], []

        while consumed < old_span or (i < len(lines) and lines[i].startswith("+")):
            if i >= len(lines):
                raise ParseError("hunk body ended before declared old range was consumed", line=i)
            body = lines[i]
            if body.startswith(" ") or body == "":
                flush()
                text = body[1:]
                if pos > len(a) or a[pos - 1] != text:
                    raise ParseError(f"context line does not match old document at line {pos}", line=i + 1)
                pos += 1
                consumed += 1
                run_start = pos
            elif body.startswith("-"):
                if adds:
                    flush()
                    run_start = pos
                if not dels:
                    run_start = pos
                text = body[1:]
                if pos > len(a) or a[pos - 1] != text:
                    raise ParseError(f"deleted line does not match old document at line {pos}", line=i + 1)
                dels.append(text)
                pos += 1
                consumed += 1
            elif body.startswith("+"):
                if not dels and not adds:
                    run_start = pos
                adds.append(body[1:])
            elif body.startswith("\\"):
                pass  # "\ No newline at end of file" style markers
            else:
                raise ParseError(f"unexpected hunk body line {body!r}", line=i + 1)
            i += 1
        flush()
    script = EditScript(tuple(raw_hunks))
    return apply_edit(script, old)


def _parse_lc_to_doc(payload: str, old: TextDocument) -> TextDocument:
    if payload.strip() == "":
        return old  # empty script: no changes
    a = old.lines
    lines = _payload_lines(payload)
    # (position, old_len, replacement); position semantics match ChangeHunk
    entries: list[tuple[int, int, list[str]]] = []
    current: tuple[int, int, list[str]] | None = None
    for lineno, line in enumerate(lines, start=1):
        match = _LC_HEADER_RE.match(line)
        if match is not None:
            lo, hi = int(match.group(1)), int(match.group(2))
            if current is not None:
                entries.append(current)
            if lo == 0 and hi == 0:
                current = (1, 0, [])
            elif lo == hi + 1:
                current = (lo, 0, [])
            elif 1 <= lo <= hi:
                current = (lo, hi - lo + 1, [])
            else:
                raise ParseError(f"invalid line range {lo},{hi}", line=lineno)
        elif current is None:
            raise ParseError(f"content before first range header: {line!r}", line=lineno)
        else:
            current[2].append(line)
    if current is not None:
        entries.append(current)
    if not entries:
        raise ParseError("no change entries found")

    entries.sort(key=lambda e: (e[0], e[0] + e[1]))
    hunks: list[ChangeHunk] = []
    for pos, span, replacement in entries:
        if pos + span - 1 > len(a) or (span == 0 and pos > len(a) + 1):
            raise ParseError(f"range {pos}..{pos + span - 1} exceeds document length {len(a)}")
        if not replacement and span == 0:
            raise ParseError(f"entry at line {pos} neither deletes nor inserts")
        hunks.append(ChangeHunk(pos, tuple(a[pos - 1 : pos - 1 + span]), tuple(replacement)))
    try:
        script = EditScript(tuple(hunks))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    return apply_edit(script, old)


def _parse_sr_blocks(payload: str) -> list[tuple[list[str], list[str]]]:
    lines = _payload_lines(payload)
    pairs: list[tuple[list[str], list[str]]] = []
    i = 0
    while i < len(lines):
        if lines[i] == "":
            i += 1
            continue
        if lines[i] != SR_SEARCH_FENCE:
            raise ParseError(f"expected {SR_SEARCH_FENCE!r}, got {lines[i]!r}", line=i + 1)
        i += 1
        search: list[str] = []
        while i < len(lines) and lines[i] != SR_DIVIDER_FENCE:
            search.append(lines[i])
            i += 1
        if i >= len(lines):
            raise ParseError("search block not terminated by divider fence", line=i)
        i += 1
        replace: list[str] = []
        while i < len(lines) and lines[i] != SR_REPLACE_FENCE:
            replace.append(lines[i])
            i += 1
        if i >= len(lines):
            raise ParseError("replace block not terminated by replace fence", line=i)
        i += 1
        pairs.append((search, replace))
    if not pairs:
        raise ParseError("no search/replace blocks found")
    return pairs


def _parse_sr_to_doc(payload: str, old: TextDocument) -> TextDocument:
    if payload.strip() == "":
        return old  # empty script: no changes
    a = old.lines
    pairs = _parse_sr_blocks(payload)
    located: list[tuple[int, int, list[str]]] = []
    for search, replace in pairs:
        if not search:
            if a:
                raise SearchAmbiguous("empty search block on a non-empty document")
            located.append((0, 0, replace))
            continue
        width = len(search)
        positions = [i for i in range(len(a) - width + 1) if a[i : i + width] == search]
        if not positions:
            raise SearchNotFound(f"search block starting {search[0]!r} not found")
        if len(positions) > 1:
            raise SearchAmbiguous(f"search block starting {search[0]!r} matches {len(positions)} times")
        located.append((positions[0], width, replace))

    located.sort(key=lambda item: item[0])
    for (pos, width, _), (next_pos, _, _) in zip(located, located[1:]):
        if pos + width > next_pos:
            raise SearchAmbiguous("search blocks overlap in the old document")
    result = list(a)
    for pos, width, replace in reversed(located):
        result[pos : pos + width] = replace
    return TextDocument.from_lines(result)


def parse_edit(rendered: RenderedEdit, old: TextDocument) -> EditScript:
    """Parse a payload back into the canonical edit script against ``old``."""
    _require_normalized(old, "old")
    if rendered.format is EditFormat.WF:
        new = TextDocument.from_text(rendered.payload)
        if not new.trailing_newline:
            new = TextDocument(new.content + "\n")
    elif rendered.format is EditFormat.UD:
        new = _parse_ud_to_doc(rendered.payload, old)
    elif rendered.format is EditFormat.LC:
        new = _parse_lc_to_doc(rendered.payload, old)
    elif rendered.format is EditFormat.SR:
        new = _parse_sr_to_doc(rendered.payload, old)
    else:  # pragma: no cover - closed enumeration
        raise ValueError(f"unknown format {rendered.format!r}")
    return diff(old, new)


# ---------------------------------------------------------------------------
# line numbering


def number_lines(doc: TextDocument) -> str:
    """Prefix every line with its 1-based number as ``k|line``."""
    lines = doc.lines
    if not lines:
        return ""
    numbered = [f"{k}|{line}" for k, line in enumerate(lines, start=1)]
    return "\n".join(numbered) + ("\n" if doc.trailing_newline else "")


def strip_line_numbers(text: str) -> TextDocument:
    """Inverse of :func:`number_lines`."""
    if text == "":
        return TextDocument("")
    doc = TextDocument.from_text(text)
    stripped = []
    for lineno, line in enumerate(doc.lines, start=1):
        prefix = f"{lineno}|"
        if not line.startswith(prefix):
            raise ParseError(f"missing {prefix!r} prefix", line=lineno)
        stripped.append(line[len(prefix):])
    return TextDocument.from_lines(stripped, doc.trailing_newline)
