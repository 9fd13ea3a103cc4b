"""Word-level, synonym-aware answer matching.

Deliberately simple: exact token matching against explicit synonym lists,
with multi-word answers matched as contiguous token runs. Known limitation
(kept on purpose, with a regression test): negations are invisible, so
"this is not an apple" still counts as a correct "apple".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

_EDGE_PUNCT = re.compile(r"^\W+|\W+$", re.UNICODE)


@dataclass(frozen=True)
class MatchResult:
    matched: bool
    matched_label: Optional[str] = None
    token_index: Optional[int] = None


def normalize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation per token."""
    tokens = []
    for raw in text.lower().split():
        token = _EDGE_PUNCT.sub("", raw)
        if token:
            tokens.append(token)
    return tokens


def _find_subsequence(haystack: list[str], needle: list[str]) -> Optional[int]:
    if not needle or len(needle) > len(haystack):
        return None
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i : i + len(needle)] == needle:
            return i
    return None


def match(transcript: str, expected: Iterable[str]) -> MatchResult:
    """Does any accepted answer occur contiguously in the transcript?

    Ties break by earliest position in the transcript, then by answer
    order in `expected` (so callers control precedence of synonyms).
    """
    tokens = normalize(transcript)
    best: Optional[tuple[int, int, str]] = None
    for order, answer in enumerate(expected):
        pos = _find_subsequence(tokens, normalize(answer))
        if pos is not None and (best is None or (pos, order) < (best[0], best[1])):
            best = (pos, order, answer)
    if best is None:
        return MatchResult(matched=False)
    return MatchResult(matched=True, matched_label=best[2], token_index=best[0])
