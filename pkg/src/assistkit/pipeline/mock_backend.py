"""Offline stand-in for a live LLM endpoint.

Recognizes the pipeline's prompt shapes and answers each with a
well-formed, deterministic reply keyed on the request digest. Used by
tests and by ``synth --backend mock``; responses are stable across runs,
so recorded cassettes replay byte-identically.
"""

from __future__ import annotations

import re

from ..llm_client import ChatRequest
from .records import extract_code_blocks

_CHANGE_HEADER_RE = re.compile(r"\*\*Change (\d+):\*\*")


class MockBackend:
    """Deterministic prompt-shape-aware fake; keep_ratio tunes the judge."""

    def __init__(self, keep_modulus: int = 5):
        # one in keep_modulus judge decisions comes back False
        self.keep_modulus = max(1, keep_modulus)

    def complete(self, req: ChatRequest) -> str:
        system = req.messages[0][1]
        user = req.messages[-1][1]
        digest = req.digest()
        if system.startswith("You are tasked with assisting a programmer"):
            return self._judge_reply(user, digest)
        if "**instruction:**" in system:
            return (
                "```\n**instruction:**\n"
                "Apply the pending edits so the code matches the intended behavior.\n```"
            )
        if "**chat:**" in system:
            return (
                "```\n**chat:**\n"
                "I looked at the recent edits and applied the change that continues them.\n```"
            )
        if "programmer" in system and "code block" in system:
            return self._persona_reply(user)
        return "```\nOK\n```"

    def _judge_reply(self, user: str, digest: str) -> str:
        count = len(_CHANGE_HEADER_RE.findall(user))
        parts = []
        for k in range(1, count + 1):
            window = (2 * k) % (len(digest) - 2)
            keep = int(digest[window : window + 2], 16) % self.keep_modulus != 0
            parts.append(
                f"**Analysis of change {k}:**\n\n"
                "Checked against the visible editing trajectory.\n\n"
                f"**Decision:** `{'True' if keep else 'False'}`"
            )
        return "```\n" + "\n\n".join(parts) + "\n```"

    def _persona_reply(self, user: str) -> str:
        blocks = extract_code_blocks(user)
        seed = blocks[-1] if blocks else "print('hello')\n"
        lines = seed.splitlines()
        if len(lines) >= 2:
            draft = "\n".join(lines[:-1]) + "\n"
        else:
            draft = "# first attempt\n" + seed
        return (
            "Here is how I would write it step by step.\n\n"
            f"```python\n{draft}```\n\nAfter fixing it up:\n\n```python\n{seed}```\n"
        )
