"""assistkit: building blocks for programming-assistant stacks.

Edit-representation codecs, conversation templating with special tokens,
training-data synthesis from coding-process records, an execution-based
evaluation harness, and first-fit-decreasing sample packing.
"""

from .conversation import (
    Conversation,
    Message,
    OrderViolation,
    Role,
    SpecialTokenInBody,
    TargetAnnotation,
    UnbalancedTokens,
    annotate_target,
    parse_assistant,
    promote,
    render_template,
    slide_window,
    strip_target_tokens,
    validate_order,
)
from .documents import TextDocument
from .edits import (
    ChangeHunk,
    ContextMismatch,
    EditFormat,
    EditScript,
    ParseError,
    RenderedEdit,
    SearchAmbiguous,
    SearchNotFound,
    apply_edit,
    diff,
    number_lines,
    parse_edit,
    render_edit,
    strip_line_numbers,
)
from .llm_client import (
    BackendConfig,
    Cassette,
    CassetteMiss,
    ChatRequest,
    CompletionTimeout,
    HttpBackend,
    HttpStatusError,
    MalformedResponse,
    RecordBackend,
    ReplayBackend,
    ScriptedBackend,
    complete,
)
from .packing import Bin, OversizeItem, SizedItem, measure, pack_ffd

__version__ = "0.1.0"

__all__ = [
    "BackendConfig",
    "Bin",
    "Cassette",
    "CassetteMiss",
    "ChangeHunk",
    "ChatRequest",
    "CompletionTimeout",
    "ContextMismatch",
    "Conversation",
    "EditFormat",
    "EditScript",
    "HttpBackend",
    "HttpStatusError",
    "MalformedResponse",
    "Message",
    "OrderViolation",
    "OversizeItem",
    "ParseError",
    "RecordBackend",
    "RenderedEdit",
    "ReplayBackend",
    "Role",
    "ScriptedBackend",
    "SearchAmbiguous",
    "SearchNotFound",
    "SizedItem",
    "SpecialTokenInBody",
    "TargetAnnotation",
    "TextDocument",
    "UnbalancedTokens",
    "annotate_target",
    "apply_edit",
    "complete",
    "diff",
    "measure",
    "number_lines",
    "pack_ffd",
    "parse_assistant",
    "parse_edit",
    "promote",
    "render_edit",
    "render_template",
    "slide_window",
    "strip_line_numbers",
    "strip_target_tokens",
    "validate_order",
]
