import random
from dataclasses import replace

import pytest

from assistkit import (
    EditFormat,
    RenderedEdit,
    Role,
    ScriptedBackend,
    TextDocument,
    apply_edit,
    diff,
    parse_edit,
)
from assistkit.pipeline import (
    ChangeSegment,
    DiscardSample,
    InstructionParseError,
    JudgeParseError,
    NoChanges,
    PipelineConfig,
    ProcessRecord,
    RecordSource,
    SampleType,
    annotate_target_random,
    assemble_sample,
    assign_type,
    decompose,
    gen_chat,
    gen_instruction,
    judge_segments,
    merge_kept,
    pick_timepoint,
    segment_changes,
)


def record_from(snapshots: list[str], source=RecordSource.GIT_COMMIT, record_id="r1") -> ProcessRecord:
    return ProcessRecord(
        record_id,
        source,
        tuple(TextDocument.from_text(s) for s in snapshots),
    )


class RoutingBackend:
    """Routes requests by prompt shape, with controllable judge decisions."""

    def __init__(self, decisions=None, instruction="rename variables", chat="All set."):
        self.decisions = decisions  # None = all True
        self.instruction = instruction
        self.chat = chat

    def complete(self, req):
        system = req.messages[0][1]
        user = req.messages[-1][1]
        if system.startswith("You are tasked with assisting a programmer"):
            count = user.count("**Change ")
            flags = self.decisions if self.decisions is not None else [True] * count
            parts = [
                f"**Analysis of change {k}:**\n\nok\n\n**Decision:** `{flag}`"
                for k, flag in enumerate(flags, start=1)
            ]
            return "```\n" + "\n\n".join(parts) + "\n```"
        if "**instruction:**" in system:
            return f"```\n**instruction:**\n{self.instruction}\n```"
        if "**chat:**" in system:
            return f"```\n**chat:**\n{self.chat}\n```"
        raise AssertionError(f"unexpected prompt: {system[:40]}")


# ---------------------------------------------------------------------------
# decompose


def test_decompose_single_hunk_pair_unchanged():
    record = record_from(["a\nb\n", "a\nB\n"])
    out = decompose(record, probability=1.0, rng=random.Random(0))
    assert out.snapshots == record.snapshots


def test_decompose_three_hunks_yields_single_hunk_chain():
    old = "a\nb\nc\nd\ne\nf\ng\n"
    new = "A\nb\nc\nD\ne\nf\nG\n"
    record = record_from([old, new])
    assert len(diff(record.snapshots[0], record.snapshots[1]).hunks) == 3
    out = decompose(record, probability=1.0, rng=random.Random(1))
    assert len(out.snapshots) == 4
    for prev, cur in zip(out.snapshots, out.snapshots[1:]):
        assert len(diff(prev, cur).hunks) == 1
    assert out.snapshots[0] == record.snapshots[0]
    assert out.snapshots[-1] == record.snapshots[-1]


def test_decompose_probability_zero_is_identity():
    record = record_from(["a\nb\nc\n", "A\nb\nC\n"])
    out = decompose(record, probability=0.0, rng=random.Random(2))
    assert out.snapshots == record.snapshots


def test_decompose_default_probability_by_source():
    multi = ["a\nb\nc\nd\ne\n", "A\nb\nc\nd\nE\n"]
    hits = {RecordSource.GIT_COMMIT: 0, RecordSource.ONLINE_SUBMIT: 0}
    for source in hits:
        rng = random.Random(42)
        for _ in range(400):
            out = decompose(record_from(multi, source=source), rng=rng)
            hits[source] += len(out.snapshots) > 2
    assert hits[RecordSource.GIT_COMMIT] / 400 == pytest.approx(0.9, abs=0.05)
    assert hits[RecordSource.ONLINE_SUBMIT] / 400 == pytest.approx(0.5, abs=0.07)


# ---------------------------------------------------------------------------
# timepoint and type


def test_pick_timepoint_two_snapshots_always_first():
    record = record_from(["a\n", "b\n"])
    rng = random.Random(0)
    assert all(pick_timepoint(record, rng=rng) == 1 for _ in range(50))


def test_pick_timepoint_weights_match_normalized_decay():
    record = record_from(["a\n", "b\n", "c\n", "d\n"])
    rng = random.Random(123)
    counts = {1: 0, 2: 0, 3: 0}
    draws = 20000
    for _ in range(draws):
        counts[pick_timepoint(record, decay=0.9, rng=rng)] += 1
    # normalize (1, 0.9, 0.81)
    expected = {1: 1 / 2.71, 2: 0.9 / 2.71, 3: 0.81 / 2.71}
    for index, probability in expected.items():
        assert counts[index] / draws == pytest.approx(probability, abs=0.01)


def test_pick_timepoint_decay_one_is_uniform():
    record = record_from(["a\n", "b\n", "c\n", "d\n"])
    rng = random.Random(7)
    counts = {1: 0, 2: 0, 3: 0}
    for _ in range(9000):
        counts[pick_timepoint(record, decay=1.0, rng=rng)] += 1
    for index in counts:
        assert counts[index] / 9000 == pytest.approx(1 / 3, abs=0.02)


def test_assign_type_uniform():
    rng = random.Random(99)
    counts = {t: 0 for t in SampleType}
    for _ in range(10000):
        counts[assign_type(rng)] += 1
    for t in SampleType:
        assert counts[t] / 10000 == pytest.approx(0.25, abs=0.03)


# ---------------------------------------------------------------------------
# segments


def test_segment_single_hunk():
    c = TextDocument.from_text("a\nb\n")
    f = TextDocument.from_text("a\nB\n")
    segments = segment_changes(c, f)
    assert len(segments) == 1
    assert segments[0].hunks == diff(c, f).hunks


def test_segment_separated_hunks_stay_apart():
    lines = [f"l{i}" for i in range(1, 13)]
    c = TextDocument.from_lines(lines)
    changed = list(lines)
    changed[1] = "L2"
    changed[9] = "L10"
    f = TextDocument.from_lines(changed)
    assert len(diff(c, f).hunks) == 2  # oracle: two disjoint hunks
    assert len(segment_changes(c, f)) == 2


def test_segment_no_changes_raises():
    doc = TextDocument.from_text("a\n")
    with pytest.raises(NoChanges):
        segment_changes(doc, doc)


def test_merge_kept_applies_subset():
    c = TextDocument.from_text("a\nb\nc\nd\ne\n")
    f = TextDocument.from_text("A\nb\nc\nd\nE\n")
    segments = segment_changes(c, f)
    assert len(segments) == 2
    flagged = [replace(segments[0], kept=True), replace(segments[1], kept=False)]
    merged = merge_kept(c, flagged)
    assert merged.content == "A\nb\nc\nd\ne\n"


# ---------------------------------------------------------------------------
# judging


def judge_inputs():
    c = TextDocument.from_text("a\nb\nc\nd\ne\n")
    f = TextDocument.from_text("A\nb\nc\nd\nE\n")
    return c, f, segment_changes(c, f)


def test_judge_sets_kept_flags():
    c, f, segments = judge_inputs()
    judged = judge_segments([], c, segments, RoutingBackend(decisions=[True, False]))
    assert [seg.kept for seg in judged] == [True, False]


def test_judge_count_mismatch_raises_after_retry():
    c, f, segments = judge_inputs()
    calls = []

    def reply(req):
        calls.append(1)
        return "**Decision:** `True`"  # one decision for two segments

    with pytest.raises(JudgeParseError):
        judge_segments([], c, segments, ScriptedBackend(reply))
    assert len(calls) == 2


def test_judge_prompt_carries_each_segment():
    c, f, segments = judge_inputs()
    seen = {}

    class Capture:
        def complete(self, req):
            seen["user"] = req.messages[-1][1]
            return "\n\n".join(
                f"**Analysis of change {k}:**\n\nx\n\n**Decision:** `True`"
                for k in range(1, len(segments) + 1)
            )

    judge_segments([], c, segments, Capture())
    assert "**Change 1:**" in seen["user"]
    assert "**Change 2:**" in seen["user"]


# ---------------------------------------------------------------------------
# instruction and chat generation


def test_gen_instruction_extracts_marker():
    c = TextDocument.from_text("a\n")
    t = TextDocument.from_text("b\n")
    text = gen_instruction([], c, t, RoutingBackend(instruction="rename variables"))
    assert text == "rename variables"


def test_gen_instruction_missing_marker_raises():
    c = TextDocument.from_text("a\n")
    t = TextDocument.from_text("b\n")
    with pytest.raises(InstructionParseError):
        gen_instruction([], c, t, ScriptedBackend(lambda r: "no marker here"), retries=0)


def test_gen_instruction_multiline_preserved():
    c = TextDocument.from_text("a\n")
    t = TextDocument.from_text("b\n")
    wanted = "first line\nsecond line"
    text = gen_instruction([], c, t, RoutingBackend(instruction=wanted))
    assert text == wanted


def test_gen_chat_extracts_marker():
    c = TextDocument.from_text("a\n")
    t = TextDocument.from_text("b\n")
    assert gen_chat([], c, None, t, RoutingBackend(chat="I renamed it.")) == "I renamed it."


# ---------------------------------------------------------------------------
# target-area randomization


def test_annotate_random_none_when_nothing_kept():
    c = TextDocument.from_text("a\nb\n")
    assert annotate_target_random(c, [], random.Random(0)).kind == "none"


def test_annotate_random_selection_covers_hunk_span():
    c = TextDocument.from_text("a\nb\nc\nd\n")
    f = TextDocument.from_text("a\nB\nC\nd\n")
    segments = [replace(seg, kept=True) for seg in segment_changes(c, f)]
    rng = random.Random(1)
    seen = False
    for _ in range(60):
        annotation = annotate_target_random(c, segments, rng)
        if annotation.kind == "selection":
            seen = True
            hunk = segments[0].hunks[0]
            # oracle: recompute the old-line span from the diff itself
            start = c.line_offset(hunk.old_start)
            end = c.line_end_offset(hunk.old_end - 1)
            assert (annotation.start, annotation.end) == (start, end)
    assert seen


def test_annotate_random_hits_all_kinds():
    c = TextDocument.from_text("a\nb\n")
    f = TextDocument.from_text("A\nb\n")
    segments = [replace(seg, kept=True) for seg in segment_changes(c, f)]
    rng = random.Random(3)
    kinds = {annotate_target_random(c, segments, rng).kind for _ in range(30)}
    assert kinds == {"none", "cursor", "selection"}


def test_annotate_random_cursor_at_insertion_point():
    c = TextDocument.from_text("a\nb\n")
    f = TextDocument.from_text("a\nb\nc\n")  # append at end
    segments = [replace(seg, kept=True) for seg in segment_changes(c, f)]
    rng = random.Random(0)
    for _ in range(30):
        annotation = annotate_target_random(c, segments, rng)
        if annotation.kind == "cursor":
            assert annotation.offset == len(c.content)
            break
    else:
        pytest.fail("cursor never drawn")


# ---------------------------------------------------------------------------
# assemble_sample


def three_snapshot_record() -> ProcessRecord:
    return record_from(
        [
            "def f():\n    pass\n",
            "def f():\n    x = 1\n    return x\n",
            "def f():\n    x = 1\n    y = 2\n    return x + y\n",
        ]
    )


def test_assemble_type_c_all_kept_target_equals_final():
    record = three_snapshot_record()
    sample = assemble_sample(
        record, 2, SampleType.C, EditFormat.WF, random.Random(0), RoutingBackend()
    )
    current = record.snapshots[1]
    script = parse_edit(sample.target.code_change, current)
    assert apply_edit(script, current) == record.final
    assert sample.target.code_change.payload == record.final.content  # WF is the file
    roles = [m.role for m in sample.conversation.messages]
    assert Role.HISTORY not in roles and Role.USER not in roles


def test_assemble_type_hc_has_history_before_current():
    record = three_snapshot_record()
    sample = assemble_sample(
        record, 2, SampleType.HC, EditFormat.WF, random.Random(0), RoutingBackend()
    )
    roles = [m.role for m in sample.conversation.messages]
    assert roles.count(Role.HISTORY) == 1
    assert sample.conversation.messages[roles.index(Role.HISTORY)].body == record.snapshots[0].content


def test_assemble_type_cu_has_user_no_history():
    record = three_snapshot_record()
    sample = assemble_sample(
        record, 1, SampleType.CU, EditFormat.SR, random.Random(0), RoutingBackend()
    )
    roles = [m.role for m in sample.conversation.messages]
    assert Role.HISTORY not in roles
    assert roles.count(Role.USER) == 1
    assert sample.format is EditFormat.SR


def test_assemble_kept_subset_changes_target():
    c = "a\nb\nc\nd\ne\n"
    f = "A\nb\nc\nd\nE\n"
    record = record_from([c, f])
    sample = assemble_sample(
        record,
        1,
        SampleType.C,
        EditFormat.WF,
        random.Random(0),
        RoutingBackend(decisions=[True, False]),
    )
    current = record.snapshots[0]
    script = parse_edit(sample.target.code_change, current)
    assert apply_edit(script, current).content == "A\nb\nc\nd\ne\n"


def test_assemble_all_rejected_discards_userless_types():
    record = record_from(["a\nb\n", "A\nb\n"])
    with pytest.raises(DiscardSample) as excinfo:
        assemble_sample(
            record, 1, SampleType.C, EditFormat.WF, random.Random(0),
            RoutingBackend(decisions=[False]),
        )
    assert excinfo.value.reason == "all_segments_rejected"


def test_assemble_no_changes_discards():
    record = record_from(["x\n", "y\n", "x\n"])  # oscillates back
    with pytest.raises(DiscardSample) as excinfo:
        assemble_sample(
            record, 1, SampleType.C, EditFormat.WF, random.Random(0), RoutingBackend()
        )
    assert excinfo.value.reason == "no_changes"


def test_assemble_reserved_token_in_source_discards():
    record = record_from(["safe = 1\n", 'safe = "<|im_end|>"\n'])
    with pytest.raises(DiscardSample) as excinfo:
        assemble_sample(
            record, 1, SampleType.C, EditFormat.WF, random.Random(0), RoutingBackend()
        )
    assert excinfo.value.reason == "reserved_token_in_content"


def test_assemble_reasoning_flag_puts_chat_first():
    record = three_snapshot_record()
    cfg = PipelineConfig(with_reasoning=True)
    sample = assemble_sample(
        record, 1, SampleType.C, EditFormat.WF, random.Random(0), RoutingBackend(), cfg=cfg
    )
    assert sample.target.chat_first is True
    plain = assemble_sample(
        record, 1, SampleType.C, EditFormat.WF, random.Random(0), RoutingBackend()
    )
    assert plain.target.chat_first is False
