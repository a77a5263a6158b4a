"""First-fit-decreasing packing of variable-length samples into batches.

Items carry an abstract length (token count under a pluggable counter);
bins have a fixed capacity (the maximum sequence length per batch). FFD
sorts items by decreasing length and drops each into the first bin with
room, opening a new bin when none fits.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from .conversation import Conversation, render_template

if TYPE_CHECKING:
    from .pipeline.samples import TrainingSample


class OversizeItem(Exception):
    """Items longer than the bin capacity can never be packed."""

    def __init__(self, ids: list[str], capacity: int):
        super().__init__(f"items exceed capacity {capacity}: {', '.join(ids)}")
        self.ids = ids


@dataclass(frozen=True)
class SizedItem:
    id: str
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("length must be >= 0")


@dataclass
class Bin:
    capacity: int
    items: list[SizedItem] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(item.length for item in self.items)

    @property
    def free(self) -> int:
        return self.capacity - self.total

    def add(self, item: SizedItem) -> None:
        if item.length > self.free:
            raise ValueError(f"item {item.id} does not fit ({item.length} > {self.free})")
        self.items.append(item)


def pack_ffd(items: list[SizedItem], capacity: int) -> list[Bin]:
    """Pack items with first-fit decreasing; ties broken by id."""
    if capacity < 1:
        raise ValueError("capacity must be positive")
    oversize = sorted(item.id for item in items if item.length > capacity)
    if oversize:
        raise OversizeItem(oversize, capacity)
    bins: list[Bin] = []
    for item in sorted(items, key=lambda it: (-it.length, it.id)):
        for bin_ in bins:
            if item.length <= bin_.free:
                bin_.add(item)
                break
        else:
            fresh = Bin(capacity)
            fresh.add(item)
            bins.append(fresh)
    return bins


# ---------------------------------------------------------------------------
# length counters

Counter = Callable[[str], int]


def whitespace_counter(text: str) -> int:
    return len(text.split())


def byte_counter(text: str) -> int:
    return len(text.encode("utf-8"))


def char_counter(text: str) -> int:
    return len(text)


def subprocess_counter(command: str) -> Counter:
    """Counter that pipes text to an external tokenizer command.

    The command receives the text on stdin and must print a single integer.
    """
    argv = shlex.split(command)

    def count(text: str) -> int:
        result = subprocess.run(argv, input=text, capture_output=True, text=True, check=True)
        return int(result.stdout.strip())

    return count


NAMED_COUNTERS: dict[str, Counter] = {
    "whitespace": whitespace_counter,
    "bytes": byte_counter,
    "chars": char_counter,
}


def measure(sample: "TrainingSample", counter: Counter) -> SizedItem:
    """Length of the full rendered training sequence (inputs plus target)."""
    conv = Conversation(sample.conversation.messages + (sample.target,))
    return SizedItem(sample.sample_id, counter(render_template(conv)))
