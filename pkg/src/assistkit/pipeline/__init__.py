"""Training-data synthesis from coding-process records."""

from .records import (
    IdenticalSnapshots,
    ProcessRecord,
    RecordSource,
    UnparseableHistory,
    gen_history_ai,
    ingest_git,
    ingest_submissions,
)
from .samples import (
    Provenance,
    SampleType,
    SchemaVersionError,
    TrainingSample,
    emit_jsonl,
    load_jsonl,
    sample_from_dict,
    sample_to_dict,
)
from .synthesis import (
    ChangeSegment,
    ChatParseError,
    DiscardInfo,
    DiscardSample,
    InstructionParseError,
    JudgeParseError,
    NoChanges,
    PipelineConfig,
    PipelineResult,
    annotate_target_random,
    assemble_sample,
    assign_type,
    decompose,
    derive_seed,
    gen_chat,
    gen_instruction,
    judge_segments,
    merge_kept,
    pick_timepoint,
    run_pipeline,
    segment_changes,
    synthesize_record,
)

__all__ = [
    "ChangeSegment",
    "ChatParseError",
    "DiscardInfo",
    "DiscardSample",
    "IdenticalSnapshots",
    "InstructionParseError",
    "JudgeParseError",
    "NoChanges",
    "PipelineConfig",
    "PipelineResult",
    "ProcessRecord",
    "Provenance",
    "RecordSource",
    "SampleType",
    "SchemaVersionError",
    "TrainingSample",
    "UnparseableHistory",
    "annotate_target_random",
    "assemble_sample",
    "assign_type",
    "decompose",
    "derive_seed",
    "emit_jsonl",
    "gen_chat",
    "gen_history_ai",
    "gen_instruction",
    "ingest_git",
    "ingest_submissions",
    "judge_segments",
    "load_jsonl",
    "merge_kept",
    "pick_timepoint",
    "run_pipeline",
    "sample_from_dict",
    "sample_to_dict",
    "segment_changes",
    "synthesize_record",
]
