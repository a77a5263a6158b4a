"""Prompt templates for the LLM-dependent pipeline steps.

Templates ship as plain-text package resources and can be overridden file
by file from a user-supplied directory. Dynamic content is substituted via
``$name`` placeholders (literal braces in the texts stay untouched).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from string import Template

PROMPT_NAMES = (
    "persona_novice",
    "persona_ordinary",
    "persona_expert",
    "persona_user",
    "judge_system",
    "judge_user",
    "instruction_system",
    "instruction_user",
    "chat_system",
    "chat_user",
)

PERSONAS = ("novice", "ordinary", "expert")


class PromptLibrary:
    def __init__(self, override_dir: str | Path | None = None):
        self._texts: dict[str, str] = {}
        package_dir = resources.files(__package__) / "prompts"
        for name in PROMPT_NAMES:
            self._texts[name] = (package_dir / f"{name}.txt").read_text(encoding="utf-8")
        if override_dir is not None:
            for name in PROMPT_NAMES:
                candidate = Path(override_dir) / f"{name}.txt"
                if candidate.exists():
                    self._texts[name] = candidate.read_text(encoding="utf-8")

    def text(self, name: str) -> str:
        return self._texts[name]

    def fill(self, name: str, **values: str) -> str:
        return Template(self._texts[name]).substitute(**values)

    def persona_system(self, persona: str) -> str:
        if persona not in PERSONAS:
            raise ValueError(f"unknown persona {persona!r}; expected one of {PERSONAS}")
        return self._texts[f"persona_{persona}"]
