"""Raw text intake: cleanup, sentence splitting and the initial length filter.

The mining pipeline starts from noisy document text (wiki extracts,
subtitle dumps, plain files).  This module normalizes it into candidate
sentences and applies the cheap structural checks that every sentence
must pass before any tagging happens: token-count bounds, an uppercase
first character, and the absence of mathematical notation.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

from knowref.model import RejectReason, SentenceRecord, StageVerdict

__all__ = [
    "CleanupConfig",
    "FilterConfig",
    "clean_text",
    "split_sentences",
    "tokenize",
    "contains_math",
    "initial_filter",
    "load_abbreviations",
    "INITIAL_STAGE",
]

INITIAL_STAGE = "initial"

_TAG_RE = re.compile(r"<[^<>]*>")
_WIKI_HEADING_RE = re.compile(r"^\s*(=+[^=]+=+|#+\s.*)\s*$")
_LIST_ITEM_RE = re.compile(r"^\s*([-*•·]|\d+[.)])\s+")
_SUBTITLE_DASH_RE = re.compile(r"^\s*-+\s*")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CleanupConfig:
    """Cleanup options; use the named presets unless you know better.

    strip_markup        remove <...> tag spans
    strip_parentheticals remove balanced (...) and [...] groups
    drop_headings       drop heading lines (== x ==, # x)
    drop_list_items     drop bullet / numbered list lines
    strip_dialog_dashes remove leading subtitle dashes per line
    ascii_only          delete non-ASCII characters
    """

    strip_markup: bool = True
    strip_parentheticals: bool = True
    drop_headings: bool = False
    drop_list_items: bool = False
    strip_dialog_dashes: bool = False
    ascii_only: bool = True

    @staticmethod
    def plain() -> "CleanupConfig":
        return CleanupConfig()

    @staticmethod
    def wiki() -> "CleanupConfig":
        return CleanupConfig(drop_headings=True, drop_list_items=True)

    @staticmethod
    def subtitles() -> "CleanupConfig":
        return CleanupConfig(strip_dialog_dashes=True)

    @staticmethod
    def for_style(style: str) -> "CleanupConfig":
        presets = {
            "plain": CleanupConfig.plain,
            "wiki-extract": CleanupConfig.wiki,
            "subtitles": CleanupConfig.subtitles,
        }
        if style not in presets:
            raise ValueError(f"unknown cleanup style {style!r}; expected one of {sorted(presets)}")
        return presets[style]()


@dataclass(frozen=True)
class FilterConfig:
    """Bounds for the initial filter; token counts are inclusive."""

    min_tokens: int = 9
    max_tokens: int = 33


def _strip_bracketed(text: str, open_ch: str, close_ch: str) -> str:
    # Remove balanced groups including nested ones; unbalanced openers are
    # dropped to the end of the string, which matches how truncated markup
    # usually behaves in scraped text.
    out = []
    depth = 0
    for ch in text:
        if ch == open_ch:
            depth += 1
        elif ch == close_ch and depth > 0:
            depth -= 1
        elif depth == 0:
            out.append(ch)
    return "".join(out)


def clean_text(raw: str, config: Optional[CleanupConfig] = None) -> str:
    """Normalize raw document text into plain one-space-separated prose."""
    config = config or CleanupConfig.plain()
    lines = []
    for line in raw.splitlines() or [raw]:
        if config.drop_headings and _WIKI_HEADING_RE.match(line):
            continue
        if config.drop_list_items and _LIST_ITEM_RE.match(line):
            continue
        if config.strip_dialog_dashes:
            line = _SUBTITLE_DASH_RE.sub("", line)
        lines.append(line)
    text = "\n".join(lines)

    if config.strip_markup:
        text = _TAG_RE.sub(" ", text)
    if config.strip_parentheticals:
        text = _strip_bracketed(text, "(", ")")
        text = _strip_bracketed(text, "[", "]")
    if config.ascii_only:
        text = text.encode("ascii", errors="ignore").decode("ascii")
    return _WS_RE.sub(" ", text).strip()


@lru_cache(maxsize=1)
def load_abbreviations() -> frozenset[str]:
    """Bundled abbreviation list (lowercase, trailing period included)."""
    data = resources.files("knowref.data").joinpath("abbreviations.txt").read_text("utf-8")
    entries = set()
    for line in data.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            entries.add(line)
    return frozenset(entries)


_BOUNDARY_RE = re.compile(r"[.!?]+(?=\s+[\"'(]?[A-Z])")
_LAST_WORD_RE = re.compile(r"(\S+)$")


def split_sentences(
    text: str,
    source: str = "",
    abbreviations: Optional[frozenset[str]] = None,
) -> list[SentenceRecord]:
    """Split cleaned text into sentence records.

    A boundary is sentence-final punctuation followed by whitespace and
    an uppercase letter (optionally behind a quote or parenthesis),
    unless the word before the period is a known abbreviation or a
    single-letter initial.
    """
    if abbreviations is None:
        abbreviations = load_abbreviations()

    cuts = []
    for match in _BOUNDARY_RE.finditer(text):
        before = _LAST_WORD_RE.search(text[: match.start()])
        if before is not None and match.group().startswith("."):
            word = before.group(1)
            if (word + ".").lower() in abbreviations:
                continue
            # Single-letter initials: "J. Thompson"
            if len(word) == 1 and word.isupper():
                continue
        cuts.append(match.end())

    sentences = []
    last = 0
    for cut in cuts:
        piece = text[last:cut].strip()
        if piece:
            sentences.append(piece)
        last = cut
    tail = text[last:].strip()
    if tail:
        sentences.append(tail)

    records = []
    for idx, sentence in enumerate(sentences, start=1):
        records.append(SentenceRecord(
            id=f"{source or 'doc'}:{idx:05d}",
            text=sentence,
            source=source or "doc",
            tokens=tokenize(sentence),
        ))
    return records


_PUNCT = set(string.punctuation)


def tokenize(text: str, abbreviations: Optional[frozenset[str]] = None) -> list[str]:
    """Naive tokenization: whitespace split, leading/trailing punctuation
    detached as separate tokens.  Internal punctuation (apostrophes,
    hyphens) stays inside the token, so "Paulo's" is one token, and known
    abbreviations keep their final period so "Mr." survives intact."""
    if abbreviations is None:
        abbreviations = load_abbreviations()
    tokens: list[str] = []
    for raw in text.split():
        head: list[str] = []
        while raw and raw[0] in _PUNCT and len(raw) > 1:
            head.append(raw[0])
            raw = raw[1:]
        tail: list[str] = []
        while raw and raw[-1] in _PUNCT and len(raw) > 1 and raw.lower() not in abbreviations:
            tail.append(raw[-1])
            raw = raw[:-1]
        tokens.extend(head)
        if raw:
            tokens.append(raw)
        tokens.extend(reversed(tail))
    return tokens


_MATH_CHARS = set("=+<>^|\\%")
_OPERATOR_TOKENS = {"/", "*", "-"}
_DIGIT_RE = re.compile(r"\d")


def contains_math(text: str, tokens: Iterable[str]) -> bool:
    """True when the sentence looks like it carries mathematical notation.

    Any of = + < > ^ | \\ % anywhere in the text qualifies, as does a
    bare /, * or - token with digit-bearing tokens on both sides.  Years
    and dates written as single tokens ("1970-1980") survive on purpose.
    """
    if any(ch in _MATH_CHARS for ch in text):
        return True
    toks = list(tokens)
    for i in range(1, len(toks) - 1):
        if toks[i] in _OPERATOR_TOKENS:
            if _DIGIT_RE.search(toks[i - 1]) and _DIGIT_RE.search(toks[i + 1]):
                return True
    return False


def initial_filter(record: SentenceRecord, config: Optional[FilterConfig] = None) -> StageVerdict:
    """Token-count bounds, uppercase-initial and no-math checks.

    The verdict is appended to the record's history and returned.
    """
    config = config or FilterConfig()
    tokens = record.tokens or tokenize(record.text)
    if not record.tokens:
        record.tokens = tokens

    reason = None
    if len(tokens) < config.min_tokens:
        reason = RejectReason.TOO_SHORT
    elif len(tokens) > config.max_tokens:
        reason = RejectReason.TOO_LONG
    elif not (record.text and "A" <= record.text[0] <= "Z"):
        reason = RejectReason.NO_LEADING_UPPERCASE
    elif contains_math(record.text, tokens):
        reason = RejectReason.CONTAINS_MATH

    verdict = StageVerdict(INITIAL_STAGE, reason)
    record.verdicts.append(verdict)
    return verdict
