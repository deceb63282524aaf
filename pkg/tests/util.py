"""Shared builders for tests: assemble valid instances from token parts."""

from __future__ import annotations

from typing import Optional, Sequence

from knowref.model import (
    Label,
    MentionSpan,
    ProblemInstance,
    PronounGender,
    pronoun_gender_of,
)


def span_at(tokens: Sequence[str], start: int, end: int) -> MentionSpan:
    return MentionSpan(start, end, " ".join(tokens[start:end]))


def assemble_instance(
    *,
    prefix: Sequence[str] = (),
    c1: Sequence[str],
    mid: Sequence[str],
    c2: Sequence[str],
    connective: Sequence[str],
    pronoun: str,
    suffix: Sequence[str] = (),
    label: Optional[Label] = None,
    instance_id: str = "t-000001",
    source: str = "test",
    switched: bool = False,
    derived_from: Optional[str] = None,
) -> ProblemInstance:
    """Build a valid instance from sentence parts, computing spans and text."""
    tokens: list[str] = []
    tokens.extend(prefix)
    c1_start = len(tokens)
    tokens.extend(c1)
    c1_end = len(tokens)
    tokens.extend(mid)
    c2_start = len(tokens)
    tokens.extend(c2)
    c2_end = len(tokens)
    conn_start = len(tokens)
    tokens.extend(connective)
    conn_end = len(tokens)
    p_start = len(tokens)
    tokens.append(pronoun)
    p_end = len(tokens)
    tokens.extend(suffix)

    gender = pronoun_gender_of(pronoun)
    if gender is None:
        raise ValueError(f"not a target pronoun: {pronoun}")

    return ProblemInstance(
        id=instance_id,
        text=detokenize(tokens),
        tokens=tuple(tokens),
        c1=span_at(tokens, c1_start, c1_end),
        c2=span_at(tokens, c2_start, c2_end),
        pronoun=span_at(tokens, p_start, p_end),
        connective=span_at(tokens, conn_start, conn_end) if connective else None,
        label=label,
        pronoun_gender=gender,
        source=source,
        switched=switched,
        derived_from=derived_from,
    )


def detokenize(tokens: Sequence[str]) -> str:
    """Join tokens into readable text (no space before trailing punctuation)."""
    out: list[str] = []
    for tok in tokens:
        if out and tok in {",", ".", ";", ":", "!", "?", "'s"}:
            out[-1] += tok
        else:
            out.append(tok)
    return " ".join(out)
