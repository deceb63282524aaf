"""Antecedent switching: swap the two candidate names everywhere.

Given an instance over "Alex tells Paulo, but he does not believe him."
the switched instance reads "Paulo tells Alex, but he does not believe
him.": every occurrence of the first candidate's token sequence is
replaced by the second's and vice versa, including possessive forms
("Paulo's" -> "Alex's").  The swap is simultaneous, so no token is ever
rewritten twice.  Candidate, connective and pronoun spans are
recomputed, the label (when present) flips between First and Second,
and the instance id gains a "-sw" suffix linking it to its origin.

Switching is an involution: switching a switched instance restores the
original exactly, id included.  Candidates whose surfaces textually
overlap (identical, or one a substring of the other) cannot be swapped
unambiguously; :func:`switch_antecedents` raises
:class:`OverlappingOccurrences` for them, and the corpus-level helpers
skip such instances with a warning instead of aborting.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from .labeling import _align_tokens
from .model import (
    InvariantViolation,
    MentionSpan,
    ProblemInstance,
    validate_instance,
)

__all__ = [
    "SWITCH_SUFFIX",
    "OverlappingOccurrences",
    "SwitchedPair",
    "switch_antecedents",
    "augment_corpus",
    "pair_corpus",
]

logger = logging.getLogger(__name__)

SWITCH_SUFFIX = "-sw"

_POSSESSIVE = "'s"


class OverlappingOccurrences(ValueError):
    """Raised when candidate occurrences cannot be swapped unambiguously."""


@dataclass(frozen=True)
class SwitchedPair:
    """An instance together with its antecedent-switched counterpart."""

    original: ProblemInstance
    switched: ProblemInstance

    def __post_init__(self) -> None:
        if not self.switched.switched or self.switched.derived_from != self.original.id:
            raise InvariantViolation(
                f"{self.switched.id}: not derived from {self.original.id}")
        if (self.original.label is None) != (self.switched.label is None):
            raise InvariantViolation(
                f"{self.original.id}: pair mixes labeled and unlabeled instances")
        if self.original.label is not None and self.switched.label is not self.original.label.flipped():
            raise InvariantViolation(
                f"{self.original.id}: switched label must be the flip of the original")


def _possessive(seq: tuple[str, ...]) -> tuple[str, ...]:
    return seq[:-1] + (seq[-1] + _POSSESSIVE,)


@dataclass(frozen=True)
class _Occurrence:
    start: int
    end: int
    replacement: tuple[str, ...]


def _find_occurrences(
    tokens: tuple[str, ...],
    seq1: tuple[str, ...],
    seq2: tuple[str, ...],
) -> list[_Occurrence]:
    """All candidate-sequence occurrences, left to right, with replacements."""
    variants = [
        (seq1, seq2),
        (_possessive(seq1), _possessive(seq2)),
        (seq2, seq1),
        (_possessive(seq2), _possessive(seq1)),
    ]
    occurrences = []
    i = 0
    while i < len(tokens):
        for pattern, replacement in variants:
            if tokens[i:i + len(pattern)] == pattern:
                occurrences.append(_Occurrence(i, i + len(pattern), replacement))
                i += len(pattern)
                break
        else:
            i += 1
    return occurrences


def switch_antecedents(instance: ProblemInstance) -> ProblemInstance:
    """Return the instance with its two candidates swapped everywhere.

    Every occurrence of either candidate's token sequence (and its
    possessive form) is replaced by the other's; spans are recomputed
    and the label, when present, flips.  The result's id is the
    original's with "-sw" appended; switching a "-sw" instance strips
    the suffix again, so the operation is its own inverse.

    Raises OverlappingOccurrences when the candidate surfaces are
    identical, one contains the other, or an occurrence collides with a
    candidate, connective or pronoun span.
    """
    tokens = instance.tokens
    seq1 = tokens[instance.c1.start:instance.c1.end]
    seq2 = tokens[instance.c2.start:instance.c2.end]

    joined1, joined2 = " ".join(seq1).lower(), " ".join(seq2).lower()
    if joined1 in joined2 or joined2 in joined1:
        raise OverlappingOccurrences(
            f"{instance.id}: candidate surfaces {instance.c1.surface!r} and "
            f"{instance.c2.surface!r} overlap textually")

    occurrences = _find_occurrences(tokens, seq1, seq2)

    # The candidates' own spans must survive the scan intact; a miss
    # means some other occurrence straddled them.
    for span, replacement in ((instance.c1, seq2), (instance.c2, seq1)):
        if not any(o.start == span.start and o.end == span.end and o.replacement == replacement
                   for o in occurrences):
            raise OverlappingOccurrences(
                f"{instance.id}: an occurrence straddles candidate {span.surface!r}")

    new_tokens: list[str] = []
    new_starts: dict[int, int] = {}
    offsets = _align_tokens(instance.text, tokens)
    parts: list[str] = []
    prev_token = 0
    prev_char = 0
    for occ in occurrences:
        new_tokens.extend(tokens[prev_token:occ.start])
        new_starts[occ.start] = len(new_tokens)
        new_tokens.extend(occ.replacement)
        prev_token = occ.end
        parts.append(instance.text[prev_char:offsets[occ.start][0]])
        parts.append(" ".join(occ.replacement))
        prev_char = offsets[occ.end - 1][1]
    new_tokens.extend(tokens[prev_token:])
    parts.append(instance.text[prev_char:])

    def shifted(span: MentionSpan) -> MentionSpan:
        for occ in occurrences:
            if occ.start < span.end and span.start < occ.end:
                raise OverlappingOccurrences(
                    f"{instance.id}: an occurrence overlaps the span {span.surface!r}")
        delta = sum(len(o.replacement) - (o.end - o.start)
                    for o in occurrences if o.end <= span.start)
        return MentionSpan(span.start + delta, span.end + delta, span.surface)

    c1_start = new_starts[instance.c1.start]
    c2_start = new_starts[instance.c2.start]
    new_c1 = MentionSpan(c1_start, c1_start + len(seq2), " ".join(seq2))
    new_c2 = MentionSpan(c2_start, c2_start + len(seq1), " ".join(seq1))

    if instance.switched and instance.id.endswith(SWITCH_SUFFIX) \
            and instance.derived_from == instance.id[:-len(SWITCH_SUFFIX)]:
        new_id, derived_from, switched = instance.derived_from, None, False
    else:
        new_id, derived_from, switched = instance.id + SWITCH_SUFFIX, instance.id, True

    result = ProblemInstance(
        id=new_id,
        text="".join(parts),
        tokens=tuple(new_tokens),
        c1=new_c1,
        c2=new_c2,
        pronoun=shifted(instance.pronoun),
        connective=None if instance.connective is None else shifted(instance.connective),
        label=None if instance.label is None else instance.label.flipped(),
        pronoun_gender=instance.pronoun_gender,
        source=instance.source,
        derived_from=derived_from,
        switched=switched,
    )
    validate_instance(result)
    return result


def augment_corpus(
    instances: Iterable[ProblemInstance],
    *,
    on_skip: Optional[Callable[[ProblemInstance, OverlappingOccurrences], None]] = None,
) -> Iterator[ProblemInstance]:
    """Yield each instance followed by its switched counterpart.

    Instances that cannot be switched are still yielded themselves; the
    failure is logged and reported through ``on_skip``, so a corpus of N
    instances augments to 2N minus the number of skips.
    """
    for instance in instances:
        yield instance
        try:
            yield switch_antecedents(instance)
        except OverlappingOccurrences as exc:
            logger.warning("skipping switch of %s: %s", instance.id, exc)
            if on_skip is not None:
                on_skip(instance, exc)


def pair_corpus(
    instances: Iterable[ProblemInstance],
    *,
    on_skip: Optional[Callable[[ProblemInstance, OverlappingOccurrences], None]] = None,
) -> Iterator[SwitchedPair]:
    """Yield (original, switched) pairs, skipping unswitchable instances."""
    for instance in instances:
        try:
            switched = switch_antecedents(instance)
        except OverlappingOccurrences as exc:
            logger.warning("skipping pair for %s: %s", instance.id, exc)
            if on_skip is not None:
                on_skip(instance, exc)
            continue
        yield SwitchedPair(instance, switched)
