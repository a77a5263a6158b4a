"""Turn coding-process records into typed training samples.

For each record: optionally decompose multi-hunk steps into single-hunk
chains, pick the current-code time point (earlier points weighted higher),
pick which optional inputs the sample carries, split the remaining changes
into contiguous segments, let an LLM keep or drop each segment when no
instruction will be present, synthesize the instruction and chat text, and
assemble the conversation plus target assistant message.

All randomness is drawn from RNGs derived from (global seed, record id,
time index), so reruns with a replayed backend are byte-identical.
"""

from __future__ import annotations

import hashlib
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from ..conversation import (
    Conversation,
    Message,
    Role,
    SpecialTokenInBody,
    TargetAnnotation,
)
from ..documents import TextDocument
from ..edits import (
    ChangeHunk,
    EditFormat,
    EditScript,
    RenderedEdit,
    apply_edit,
    diff,
    render_edit,
)
from ..llm_client import ChatBackend, ChatRequest, ClientError
from .prompts_loader import PromptLibrary
from .records import ProcessRecord, RecordSource, extract_code_blocks
from .samples import Provenance, SampleType, TrainingSample

DEFAULT_SYSTEM_PROMPT = "You are a helpful programming assistant."

DECOMPOSE_DEFAULTS = {
    RecordSource.GIT_COMMIT: 0.9,
    RecordSource.AI_PROGRAMMER: 0.5,
    RecordSource.ONLINE_SUBMIT: 0.5,
}

TIMEPOINT_DECAY = 0.9


class NoChanges(Exception):
    """Current code already equals the final snippet."""


class JudgeParseError(Exception):
    """Judge reply does not contain one decision per segment."""


class InstructionParseError(Exception):
    """Reply lacks the marked instruction block."""


class ChatParseError(Exception):
    """Reply lacks the marked chat block."""


@dataclass(frozen=True)
class DiscardInfo:
    record_id: str
    reason: str
    detail: str = ""


class DiscardSample(Exception):
    """Control-flow signal: this record yields no sample; reason recorded."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(reason if not detail else f"{reason}: {detail}")
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True)
class ChangeSegment:
    """A contiguous group of hunks between the current and final code."""

    hunks: tuple[ChangeHunk, ...]
    kept: bool | None = None


@dataclass
class PipelineConfig:
    global_seed: int = 0
    model_id: str = "default"
    edit_format: EditFormat = EditFormat.WF
    with_reasoning: bool = False
    include_system: bool = True
    decompose_probability: float | None = None  # None = per-source default
    timepoint_decay: float = TIMEPOINT_DECAY
    gen_temperature: float = 0.7
    judge_temperature: float = 0.0
    max_tokens: int = 4096
    workers: int = 1
    prompt_dir: str | None = None


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary labels (never Python's hash())."""
    blob = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


# ---------------------------------------------------------------------------
# record-level steps


def decompose(
    record: ProcessRecord,
    probability: float | None = None,
    rng: random.Random | None = None,
) -> ProcessRecord:
    """Expand multi-hunk steps into chains applying one hunk at a time.

    Each adjacent snapshot pair with more than one hunk is expanded with
    the given probability; hunk application order is uniformly random.
    """
    p = DECOMPOSE_DEFAULTS[record.source] if probability is None else probability
    if not 0 <= p <= 1:
        raise ValueError("probability must be in [0, 1]")
    rng = rng or random.Random()
    chain: list[TextDocument] = [record.snapshots[0]]
    for prev, cur in zip(record.snapshots, record.snapshots[1:]):
        script = diff(prev, cur)
        if len(script.hunks) > 1 and rng.random() < p:
            order = list(range(len(script.hunks)))
            rng.shuffle(order)
            for k in range(1, len(order)):
                subset = sorted(order[:k])
                partial = EditScript(tuple(script.hunks[j] for j in subset))
                chain.append(apply_edit(partial, prev))
        chain.append(cur)
    deduped: list[TextDocument] = [chain[0]]
    for snap in chain[1:]:
        if snap != deduped[-1]:
            deduped.append(snap)
    return replace(record, snapshots=tuple(deduped))


def pick_timepoint(
    record: ProcessRecord,
    decay: float = TIMEPOINT_DECAY,
    rng: random.Random | None = None,
) -> int:
    """Sample the 1-based snapshot index to serve as current code.

    The final snapshot is excluded; index i gets weight decay**(i-1), so
    earlier points are preferred.
    """
    rng = rng or random.Random()
    n = len(record.snapshots)
    candidates = range(1, n)
    weights = [decay ** (i - 1) for i in candidates]
    return rng.choices(list(candidates), weights=weights)[0]


def assign_type(rng: random.Random) -> SampleType:
    return rng.choice(list(SampleType))


def segment_changes(current: TextDocument, final: TextDocument) -> list[ChangeSegment]:
    """One segment per change hunk; hunks touching each other merge."""
    if current == final:
        raise NoChanges("current and final snippets are identical")
    script = diff(current, final)
    segments: list[ChangeSegment] = []
    for hunk in script.hunks:
        if segments and segments[-1].hunks[-1].old_end == hunk.old_start:
            segments[-1] = ChangeSegment(segments[-1].hunks + (hunk,))
        else:
            segments.append(ChangeSegment((hunk,)))
    return segments


def merge_kept(current: TextDocument, segments: list[ChangeSegment]) -> TextDocument:
    """Apply exactly the kept segments to the current code."""
    hunks = tuple(h for seg in segments if seg.kept for h in seg.hunks)
    return apply_edit(EditScript(hunks), current)


# ---------------------------------------------------------------------------
# prompt assembly helpers


def _fence(language: str, doc: TextDocument) -> str:
    return f"```{language}\n{doc.content}```"


def _history_section(history: list[TextDocument], language: str) -> str:
    parts = []
    for idx, snapshot in enumerate(history, start=1):
        parts.append(f"Programming process {idx}:\n\n{_fence(language, snapshot)}\n\n")
    return "".join(parts)


def _segment_preview(segment: ChangeSegment) -> str:
    """Human-readable before/after view of one segment for the judge."""
    before = "\n".join(line for hunk in segment.hunks for line in hunk.old_lines)
    after = "\n".join(line for hunk in segment.hunks for line in hunk.new_lines)
    location = segment.hunks[0].old_start
    return (
        f"At line {location}:\n"
        f"```before\n{before}\n```\n"
        f"```after\n{after}\n```"
    )


def _extract_marked_block(text: str, marker: str) -> str:
    """Content after ``marker`` inside the first fenced block carrying it."""
    for block in extract_code_blocks(text):
        if marker in block:
            return block.split(marker, 1)[1].strip()
    if marker in text:  # tolerate replies that dropped the fence
        return text.split(marker, 1)[1].strip()
    raise ValueError(f"marker {marker!r} not found in reply")


# ---------------------------------------------------------------------------
# LLM-dependent steps


def judge_segments(
    history: list[TextDocument],
    current: TextDocument,
    segments: list[ChangeSegment],
    client: ChatBackend,
    prompts: PromptLibrary | None = None,
    cfg: PipelineConfig | None = None,
    language: str = "python",
) -> list[ChangeSegment]:
    """Ask the LLM which change segments match the programmer's intent."""
    prompts = prompts or PromptLibrary()
    cfg = cfg or PipelineConfig()
    changes = "\n\n".join(
        f"**Change {idx}:**\n\n{_segment_preview(seg)}"
        for idx, seg in enumerate(segments, start=1)
    )
    request = ChatRequest(
        model_id=cfg.model_id,
        messages=(
            ("system", prompts.text("judge_system")),
            (
                "user",
                prompts.fill(
                    "judge_user",
                    history_section=_history_section(history, language),
                    language=language,
                    current_code=current.content,
                    changes_section=changes,
                ),
            ),
        ),
        temperature=cfg.judge_temperature,
        max_tokens=cfg.max_tokens,
    )
    decisions: list[str] = []
    for _ in range(2):
        reply = client.complete(request)
        decisions = re.findall(r"\*\*Decision:\*\*\s*`(True|False)`", reply)
        if len(decisions) == len(segments):
            return [replace(seg, kept=(d == "True")) for seg, d in zip(segments, decisions)]
    raise JudgeParseError(f"expected {len(segments)} decisions, got {len(decisions)}")


def gen_instruction(
    history: list[TextDocument],
    current: TextDocument,
    target: TextDocument,
    client: ChatBackend,
    prompts: PromptLibrary | None = None,
    cfg: PipelineConfig | None = None,
    language: str = "python",
    context: str = "",
    retries: int = 1,
) -> str:
    """Reverse-generate the user instruction that asks for the change."""
    prompts = prompts or PromptLibrary()
    cfg = cfg or PipelineConfig()
    context_section = f"Context:\n\n{context}\n" if context else ""
    request = ChatRequest(
        model_id=cfg.model_id,
        messages=(
            ("system", prompts.text("instruction_system")),
            (
                "user",
                prompts.fill(
                    "instruction_user",
                    history_section=_history_section(history, language),
                    context_section=context_section,
                    language=language,
                    current_code=current.content,
                    target_code=target.content,
                ),
            ),
        ),
        temperature=cfg.gen_temperature,
        max_tokens=cfg.max_tokens,
    )
    for _ in range(retries + 1):
        reply = client.complete(request)
        try:
            return _extract_marked_block(reply, "**instruction:**")
        except ValueError:
            continue
    raise InstructionParseError("no **instruction:** block in reply")


def gen_chat(
    history: list[TextDocument],
    current: TextDocument,
    user: str | None,
    target: TextDocument,
    client: ChatBackend,
    prompts: PromptLibrary | None = None,
    cfg: PipelineConfig | None = None,
    language: str = "python",
    retries: int = 1,
) -> str:
    """Generate the chat-style explanation accompanying the code change."""
    prompts = prompts or PromptLibrary()
    cfg = cfg or PipelineConfig()
    user_section = f"User instruction:\n\n{user}\n\n" if user else ""
    request = ChatRequest(
        model_id=cfg.model_id,
        messages=(
            ("system", prompts.text("chat_system")),
            (
                "user",
                prompts.fill(
                    "chat_user",
                    history_section=_history_section(history, language),
                    user_section=user_section,
                    language=language,
                    current_code=current.content,
                    target_code=target.content,
                ),
            ),
        ),
        temperature=cfg.gen_temperature,
        max_tokens=cfg.max_tokens,
    )
    for _ in range(retries + 1):
        reply = client.complete(request)
        try:
            return _extract_marked_block(reply, "**chat:**")
        except ValueError:
            continue
    raise ChatParseError("no **chat:** block in reply")


# ---------------------------------------------------------------------------
# target-area randomization


def _hunk_start_line(doc: TextDocument, hunk: ChangeHunk) -> int:
    return min(hunk.old_start, len(doc.lines) + 1)


def annotate_target_random(
    current: TextDocument,
    kept_segments: list[ChangeSegment],
    rng: random.Random,
) -> TargetAnnotation:
    """Pick none, cursor, or selection uniformly; anchor it on the kept span."""
    kept = [seg for seg in kept_segments if seg.kept]
    if not kept:
        return TargetAnnotation.none()
    kind = rng.choice(["none", "cursor", "selection"])
    if kind == "none":
        return TargetAnnotation.none()
    first_hunk = kept[0].hunks[0]
    start = current.line_offset(_hunk_start_line(current, first_hunk))
    if kind == "cursor":
        return TargetAnnotation.cursor(start)
    last_hunk = kept[-1].hunks[-1]
    if last_hunk.old_len > 0:
        end = current.line_end_offset(last_hunk.old_end - 1)
    else:
        end = current.line_offset(_hunk_start_line(current, last_hunk))
    return TargetAnnotation.selection(start, max(start, end))


# ---------------------------------------------------------------------------
# sample assembly


def assemble_sample(
    record: ProcessRecord,
    time_index: int,
    sample_type: SampleType,
    fmt: EditFormat,
    rng: random.Random,
    client: ChatBackend,
    prompts: PromptLibrary | None = None,
    cfg: PipelineConfig | None = None,
) -> TrainingSample:
    """Build one training sample, or raise DiscardSample with the reason."""
    prompts = prompts or PromptLibrary()
    cfg = cfg or PipelineConfig()
    if not 1 <= time_index < len(record.snapshots):
        raise ValueError("time_index must address a non-final snapshot")
    if sample_type.has_history and time_index == 1:
        # no preceding edits exist at the first time point; relabel to the
        # history-less counterpart instead of emitting an empty history
        sample_type = SampleType.C if sample_type is SampleType.HC else SampleType.CU
    current = record.snapshots[time_index - 1]
    final = record.final
    language = record.language

    try:
        segments = segment_changes(current, final)
    except NoChanges as exc:
        raise DiscardSample("no_changes", str(exc)) from exc

    if sample_type.has_user:
        # The instruction disambiguates intent, so every segment is kept.
        segments = [replace(seg, kept=True) for seg in segments]
    else:
        history_for_judging = list(record.snapshots[: time_index - 1])
        try:
            segments = judge_segments(
                history_for_judging, current, segments, client, prompts, cfg, language
            )
        except JudgeParseError as exc:
            raise DiscardSample("judge_parse_error", str(exc)) from exc
        except ClientError as exc:
            raise DiscardSample("backend_error", str(exc)) from exc
        if not any(seg.kept for seg in segments):
            raise DiscardSample("all_segments_rejected")

    target_doc = merge_kept(current, segments)
    annotation = annotate_target_random(current, segments, rng)

    history = list(record.snapshots[: time_index - 1])
    context = record.metadata.get("commit_message") or record.metadata.get("problem") or ""

    user_text: str | None = None
    if sample_type.has_user:
        try:
            user_text = gen_instruction(
                history, current, target_doc, client, prompts, cfg, language, context
            )
        except (InstructionParseError, ClientError) as exc:
            raise DiscardSample("instruction_parse_error", str(exc)) from exc

    try:
        chat_text = gen_chat(history, current, user_text, target_doc, client, prompts, cfg, language)
    except (ChatParseError, ClientError) as exc:
        raise DiscardSample("chat_parse_error", str(exc)) from exc

    code_change: RenderedEdit | None = None
    if target_doc != current:
        script = diff(current, target_doc)
        code_change = render_edit(script, current, target_doc, fmt)

    try:
        messages: list[Message] = []
        if cfg.include_system:
            messages.append(Message(Role.SYSTEM, DEFAULT_SYSTEM_PROMPT))
        if sample_type.has_history:
            messages.extend(Message(Role.HISTORY, snap.content) for snap in history)
        messages.append(Message(Role.CURRENT, current.content, annotation=annotation))
        if user_text is not None:
            messages.append(Message(Role.USER, user_text))

        target_message = Message(
            Role.ASSISTANT,
            code_change=code_change,
            chat=chat_text,
            chat_first=cfg.with_reasoning,
        )
    except SpecialTokenInBody as exc:
        # source code or generated text collides with a template token
        raise DiscardSample("reserved_token_in_content", str(exc)) from exc
    return TrainingSample(
        conversation=Conversation(tuple(messages)),
        target=target_message,
        sample_type=sample_type,
        format=fmt,
        provenance=Provenance(
            record_id=record.record_id,
            time_index=time_index,
            global_seed=cfg.global_seed,
            sample_seed=derive_seed(cfg.global_seed, record.record_id, time_index),
        ),
    )


# ---------------------------------------------------------------------------
# record driver


@dataclass
class PipelineResult:
    samples: list[TrainingSample] = field(default_factory=list)
    discards: list[DiscardInfo] = field(default_factory=list)

    @property
    def attempted(self) -> int:
        return len(self.samples) + len(self.discards)


def synthesize_record(
    record: ProcessRecord,
    client: ChatBackend,
    cfg: PipelineConfig,
    prompts: PromptLibrary | None = None,
) -> TrainingSample:
    """Run the full per-record pipeline; deterministic given the backend."""
    prompts = prompts or PromptLibrary()
    record_rng = random.Random(derive_seed(cfg.global_seed, record.record_id, "record"))
    expanded = decompose(record, cfg.decompose_probability, record_rng)
    time_index = pick_timepoint(expanded, cfg.timepoint_decay, record_rng)
    sample_rng = random.Random(derive_seed(cfg.global_seed, record.record_id, time_index))
    sample_type = assign_type(sample_rng)
    return assemble_sample(
        expanded, time_index, sample_type, cfg.edit_format, sample_rng, client, prompts, cfg
    )


def run_pipeline(
    records: list[ProcessRecord],
    client: ChatBackend,
    cfg: PipelineConfig,
    prompts: PromptLibrary | None = None,
) -> PipelineResult:
    """Synthesize every record; output order is canonical by provenance."""
    prompts = prompts or PromptLibrary()
    result = PipelineResult()

    def work(record: ProcessRecord) -> TrainingSample | DiscardInfo:
        try:
            return synthesize_record(record, client, cfg, prompts)
        except DiscardSample as exc:
            return DiscardInfo(record.record_id, exc.reason, exc.detail)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(work, records))
    else:
        outcomes = [work(record) for record in records]

    for outcome in outcomes:
        if isinstance(outcome, TrainingSample):
            result.samples.append(outcome)
        else:
            result.discards.append(outcome)
    result.samples.sort(key=lambda s: (s.provenance.record_id, s.provenance.time_index))
    result.discards.sort(key=lambda d: d.record_id)
    return result
