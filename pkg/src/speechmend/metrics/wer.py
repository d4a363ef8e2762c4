"""Word error rate over normalised transcripts.

Normalisation is fixed: lowercase, strip everything but letters, digits and
word-internal apostrophes, collapse whitespace.  WER is the word-level
Levenshtein distance (unit-cost substitution/insertion/deletion) divided by
the reference length.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = ["Transcript", "levenshtein", "wer"]

_WORD_RE = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class Transcript:
    """Ordered, normalised word tokens."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if any(not tok for tok in self.tokens):
            raise ValueError("tokens must be non-empty strings")

    @classmethod
    def from_text(cls, text: str) -> "Transcript":
        words = []
        for raw in _WORD_RE.findall(text.lower()):
            word = raw.strip("'")
            if word:
                words.append(word)
        return cls(tuple(words))

    def __len__(self) -> int:
        return len(self.tokens)


def levenshtein(a: tuple[str, ...] | list[str], b: tuple[str, ...] | list[str]) -> int:
    """Edit distance between token sequences, two-row dynamic programme."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def wer(reference: Transcript, hypothesis: Transcript) -> float:
    """Word error rate; the reference must contain at least one token."""
    if len(reference) == 0:
        raise ValueError("reference transcript is empty")
    return levenshtein(reference.tokens, hypothesis.tokens) / len(reference)
