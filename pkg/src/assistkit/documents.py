"""Newline-normalized text documents with a 1-based line view.

Code snippets move through the toolkit as TextDocument values. Ingestion
normalizes all newline conventions to LF; whether the original ended with
a newline is preserved in the content itself, so raw text reconstructs
exactly. The line-based edit machinery requires normalized documents.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TextDocument:
    """Immutable snippet of code or text with LF-only content."""

    content: str = ""

    def __post_init__(self) -> None:
        if "\r" in self.content:
            raise ValueError("TextDocument content must be newline-normalized (no CR)")

    @classmethod
    def from_text(cls, text: str) -> TextDocument:
        """Normalize raw text (CRLF/CR -> LF)."""
        return cls(text.replace("\r\n", "\n").replace("\r", "\n"))

    @classmethod
    def from_lines(cls, lines: list[str], trailing_newline: bool = True) -> TextDocument:
        for line in lines:
            if "\n" in line or "\r" in line:
                raise ValueError("lines must not contain newline characters")
        if not lines:
            return cls("")
        return cls("\n".join(lines) + ("\n" if trailing_newline else ""))

    @property
    def lines(self) -> list[str]:
        """Logical lines, 1-based when addressed by line number.

        A trailing newline terminates the last line; it does not open an
        empty one. ``"a\\n"`` is one line, ``"a\\nb"`` is two.
        """
        if self.content == "":
            return []
        parts = self.content.split("\n")
        if parts[-1] == "":
            parts.pop()
        return parts

    @property
    def trailing_newline(self) -> bool:
        return self.content == "" or self.content.endswith("\n")

    def with_trailing_newline(self) -> TextDocument:
        """The normalized form the edit codec expects."""
        if self.trailing_newline:
            return self
        return TextDocument(self.content + "\n")

    def line(self, number: int) -> str:
        """Return the 1-based line ``number``."""
        lines = self.lines
        if not 1 <= number <= len(lines):
            raise IndexError(f"line {number} out of range 1..{len(lines)}")
        return lines[number - 1]

    def line_offset(self, number: int) -> int:
        """Character offset of the start of 1-based line ``number``.

        ``number == len(lines) + 1`` addresses the end of the document,
        which is where an append lands.
        """
        lines = self.lines
        if not 1 <= number <= len(lines) + 1:
            raise IndexError(f"line {number} out of range 1..{len(lines) + 1}")
        offset = sum(len(line) + 1 for line in lines[: number - 1])
        return min(offset, len(self.content))

    def line_end_offset(self, number: int) -> int:
        """Character offset just past the content of 1-based line ``number``."""
        return self.line_offset(number) + len(self.line(number))

    def __len__(self) -> int:
        return len(self.content)
