"""Conversation model and chat-template rendering.

A conversation is an ordered list of messages with roles system, history,
current, user, and assistant; the valid ordering is system? history*
current user? assistant?. Rendering follows a ChatML-style template with
``<|im_start|>``/``<|im_end|>`` delimiters, wraps assistant code changes in
``<|next_start|>``/``<|next_end|>``, and marks cursor or selection targets
in the current code with dedicated tokens. Rendering a message appends
bytes without touching earlier ones, so a rendered conversation is always
a byte prefix of any extension of it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .documents import TextDocument
from .edits import EditFormat, RenderedEdit

IM_START = "<|im_start|>"
IM_END = "<|im_end|>"
NEXT_START = "<|next_start|>"
NEXT_END = "<|next_end|>"
TARGET = "<|target|>"
TARGET_START = "<|target_start|>"
TARGET_END = "<|target_end|>"

RESERVED_TOKENS = (
    IM_START,
    IM_END,
    NEXT_START,
    NEXT_END,
    TARGET,
    TARGET_START,
    TARGET_END,
)


class SpecialTokenInBody(Exception):
    """User-supplied content contains a reserved template token."""

    def __init__(self, token: str):
        super().__init__(f"reserved token {token!r} in message content")
        self.token = token


class UnbalancedTokens(Exception):
    """Assistant output opens or closes a code block without its pair."""


class Role(enum.Enum):
    SYSTEM = "system"
    HISTORY = "history"
    CURRENT = "current"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class TargetAnnotation:
    """Optional cursor/selection marker on the current code.

    Offsets are character indices into the current document's content.
    """

    kind: str = "none"
    offset: int | None = None
    start: int | None = None
    end: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "none":
            if (self.offset, self.start, self.end) != (None, None, None):
                raise ValueError("'none' annotation takes no indices")
        elif self.kind == "cursor":
            if self.offset is None or self.offset < 0:
                raise ValueError("cursor annotation needs offset >= 0")
        elif self.kind == "selection":
            if self.start is None or self.end is None or not 0 <= self.start <= self.end:
                raise ValueError("selection annotation needs 0 <= start <= end")
        else:
            raise ValueError(f"unknown annotation kind {self.kind!r}")

    @classmethod
    def none(cls) -> TargetAnnotation:
        return cls("none")

    @classmethod
    def cursor(cls, offset: int) -> TargetAnnotation:
        return cls("cursor", offset=offset)

    @classmethod
    def selection(cls, start: int, end: int) -> TargetAnnotation:
        return cls("selection", start=start, end=end)


def find_reserved_token(text: str) -> str | None:
    for token in RESERVED_TOKENS:
        if token in text:
            return token
    return None


def _reject_reserved(text: str) -> None:
    token = find_reserved_token(text)
    if token is not None:
        raise SpecialTokenInBody(token)


@dataclass(frozen=True)
class Message:
    """One conversation turn.

    ``annotation`` is only meaningful on current messages. Assistant
    messages carry their content in ``code_change`` and/or ``chat``
    (``body`` stays empty); ``chat_first`` flips the code-chat order for
    reasoning-augmented targets.
    """

    role: Role
    body: str = ""
    annotation: TargetAnnotation | None = None
    code_change: RenderedEdit | None = None
    chat: str | None = None
    chat_first: bool = False

    def __post_init__(self) -> None:
        if self.annotation is not None and self.role is not Role.CURRENT:
            raise ValueError("only current messages take a target annotation")
        if self.role is Role.ASSISTANT:
            if self.body:
                raise ValueError("assistant content lives in code_change/chat, not body")
            if self.code_change is None and self.chat is None:
                raise ValueError("assistant message needs code_change or chat")
        elif self.code_change is not None or self.chat is not None:
            raise ValueError("code_change/chat are assistant-only fields")
        _reject_reserved(self.body)
        if self.chat is not None:
            _reject_reserved(self.chat)
        if self.code_change is not None:
            _reject_reserved(self.code_change.payload)


@dataclass(frozen=True)
class Conversation:
    """Ordered messages plus an archive of turns dropped by promotion."""

    messages: tuple[Message, ...] = ()
    archive: tuple[Message, ...] = ()

    def __add__(self, extra: tuple[Message, ...]) -> Conversation:
        return Conversation(self.messages + tuple(extra), self.archive)


@dataclass(frozen=True)
class OrderViolation:
    """First message breaking the system? history* current user? assistant? pattern."""

    index: int  # 1-based message position
    reason: str


def validate_order(conv: Conversation) -> OrderViolation | None:
    """Return None when the role sequence is valid, else the first offense."""
    roles = [m.role for m in conv.messages]
    pos = 0
    if pos < len(roles) and roles[pos] is Role.SYSTEM:
        pos += 1
    while pos < len(roles) and roles[pos] is Role.HISTORY:
        pos += 1
    if pos >= len(roles) or roles[pos] is not Role.CURRENT:
        if pos < len(roles):
            return OrderViolation(pos + 1, f"expected current, got {roles[pos].value}")
        return OrderViolation(pos + 1, "expected a current message")
    pos += 1
    if pos < len(roles) and roles[pos] is Role.USER:
        pos += 1
    if pos < len(roles) and roles[pos] is Role.ASSISTANT:
        pos += 1
    if pos < len(roles):
        return OrderViolation(pos + 1, f"unexpected {roles[pos].value} message")
    return None


def annotate_target(doc: TextDocument, annotation: TargetAnnotation | None) -> str:
    """Insert target tokens into the document text.

    Stripping the tokens recovers the document byte-exactly.
    """
    text = doc.content
    if annotation is None or annotation.kind == "none":
        return text
    if annotation.kind == "cursor":
        if annotation.offset > len(text):
            raise IndexError(f"cursor offset {annotation.offset} beyond document length {len(text)}")
        return text[: annotation.offset] + TARGET + text[annotation.offset :]
    if annotation.end > len(text):
        raise IndexError(f"selection end {annotation.end} beyond document length {len(text)}")
    return (
        text[: annotation.start]
        + TARGET_START
        + text[annotation.start : annotation.end]
        + TARGET_END
        + text[annotation.end :]
    )


def strip_target_tokens(text: str) -> str:
    for token in (TARGET, TARGET_START, TARGET_END):
        text = text.replace(token, "")
    return text


def render_assistant_body(message: Message) -> str:
    parts: list[str] = []
    if message.code_change is not None:
        parts.append(NEXT_START + message.code_change.payload + NEXT_END)
    if message.chat is not None:
        if message.chat_first:
            parts.insert(0, message.chat)
        else:
            parts.append(message.chat)
    return "\n".join(parts)


def render_message(message: Message, format: EditFormat | None = None) -> str:
    """Render one message as an ``<|im_start|>...<|im_end|>`` block."""
    _reject_reserved(message.body)
    if message.role is Role.ASSISTANT:
        if (
            format is not None
            and message.code_change is not None
            and message.code_change.format is not format
        ):
            raise ValueError(
                f"assistant change is {message.code_change.format.value}, expected {format.value}"
            )
        body = render_assistant_body(message)
    elif message.role is Role.CURRENT:
        body = annotate_target(TextDocument(message.body), message.annotation)
    else:
        body = message.body
    return IM_START + message.role.value + "\n" + body + IM_END + "\n"


def render_template(conv: Conversation, format: EditFormat | None = None) -> str:
    """Render all messages; rendering is append-only per message."""
    return "".join(render_message(m, format) for m in conv.messages)


def generation_prompt() -> str:
    """Prompt suffix that asks the model to produce the assistant turn."""
    return IM_START + Role.ASSISTANT.value + "\n"


def parse_assistant(text: str) -> tuple[str | None, str | None]:
    """Split an assistant completion into (code payload, chat text)."""
    start = text.find(NEXT_START)
    end = text.find(NEXT_END)
    if start == -1 and end == -1:
        chat = text.strip()
        return None, chat if chat else None
    if start == -1 or end == -1:
        raise UnbalancedTokens("code block opened or closed without its pair")
    if end < start:
        raise UnbalancedTokens("code block closed before it was opened")
    code = text[start + len(NEXT_START) : end]
    remainder = text[:start] + text[end + len(NEXT_END) :]
    chat = remainder.strip()
    return code, chat if chat else None


def slide_window(history: list[Message], k: int) -> list[Message]:
    """Keep only the most recent ``k`` history entries."""
    if k < 0:
        raise ValueError("window size must be >= 0")
    return list(history[-k:]) if k else []


def promote(conv: Conversation, new_current: Message) -> Conversation:
    """Advance the session: the old current becomes the newest history entry.

    Prior user/assistant turns leave the request view and are archived;
    history keeps code snippets only.
    """
    if new_current.role is not Role.CURRENT:
        raise ValueError("promoted message must have role current")
    head: list[Message] = []
    dropped: list[Message] = []
    old_current: Message | None = None
    for message in conv.messages:
        if message.role in (Role.SYSTEM, Role.HISTORY):
            head.append(message)
        elif message.role is Role.CURRENT:
            old_current = message
        else:
            dropped.append(message)
    if old_current is None:
        raise ValueError("conversation has no current message to promote")
    head.append(Message(Role.HISTORY, old_current.body))
    head.append(new_current)
    return Conversation(tuple(head), conv.archive + tuple(dropped))


# ---------------------------------------------------------------------------
# JSON wire form (schema documented in docs/wire_formats.md)


def annotation_to_dict(annotation: TargetAnnotation | None) -> dict | None:
    if annotation is None or annotation.kind == "none":
        return None if annotation is None else {"kind": "none"}
    if annotation.kind == "cursor":
        return {"kind": "cursor", "offset": annotation.offset}
    return {"kind": "selection", "start": annotation.start, "end": annotation.end}


def annotation_from_dict(data: dict | None) -> TargetAnnotation | None:
    if data is None:
        return None
    kind = data.get("kind")
    if kind == "none":
        return TargetAnnotation.none()
    if kind == "cursor":
        return TargetAnnotation.cursor(int(data["offset"]))
    if kind == "selection":
        return TargetAnnotation.selection(int(data["start"]), int(data["end"]))
    raise ValueError(f"unknown annotation kind {kind!r}")


def message_to_dict(message: Message) -> dict:
    data: dict = {"role": message.role.value, "body": message.body}
    if message.annotation is not None:
        data["annotation"] = annotation_to_dict(message.annotation)
    if message.code_change is not None:
        data["code_change"] = {
            "format": message.code_change.format.value,
            "payload": message.code_change.payload,
        }
    if message.chat is not None:
        data["chat"] = message.chat
    if message.chat_first:
        data["chat_first"] = True
    return data


def message_from_dict(data: dict) -> Message:
    code_change = None
    if data.get("code_change") is not None:
        code_change = RenderedEdit(
            EditFormat(data["code_change"]["format"]),
            data["code_change"]["payload"],
        )
    return Message(
        role=Role(data["role"]),
        body=data.get("body", ""),
        annotation=annotation_from_dict(data.get("annotation")),
        code_change=code_change,
        chat=data.get("chat"),
        chat_first=bool(data.get("chat_first", False)),
    )


def conversation_to_dict(conv: Conversation) -> dict:
    data: dict = {"messages": [message_to_dict(m) for m in conv.messages]}
    if conv.archive:
        data["archive"] = [message_to_dict(m) for m in conv.archive]
    return data


def conversation_from_dict(data: dict) -> Conversation:
    return Conversation(
        tuple(message_from_dict(m) for m in data.get("messages", [])),
        tuple(message_from_dict(m) for m in data.get("archive", [])),
    )
