"""Data model for ambiguous-pronoun coreference instances.

A problem instance is a single sentence containing two candidate
antecedents followed by a target pronoun that could grammatically refer
to either one.  Instances are persisted as JSON Lines: one UTF-8 JSON
object per line with the fields

    id, text, tokens, c1, c2, pronoun, connective, label,
    pronoun_gender, source, derived_from, switched

where c1/c2/pronoun/connective are token spans ``{start, end, surface}``
(half-open, end exclusive), ``label`` is 1, 2 or null, and
``pronoun_gender`` is "m" or "f".

Every persisted instance satisfies the structural invariants checked by
:func:`validate_instance`: spans lie inside the token list, each span's
surface equals the joined tokens it covers, the first candidate ends at
or before the second begins, both candidates precede the pronoun, and
all spans are pairwise disjoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import IO, Iterable, Iterator, Optional

__all__ = [
    "MASCULINE_PRONOUNS",
    "FEMININE_PRONOUNS",
    "TARGET_PRONOUNS",
    "NON_TARGET_PRONOUNS",
    "ALL_PRONOUNS",
    "Label",
    "PronounGender",
    "Choice",
    "MentionSpan",
    "ProblemInstance",
    "SentenceRecord",
    "StageVerdict",
    "RejectReason",
    "Prediction",
    "ParseError",
    "InvariantViolation",
    "pronoun_gender_of",
    "serialize_instance",
    "parse_instance",
    "read_corpus",
    "write_corpus",
    "validate_instance",
    "validate_corpus",
]

# Target pronouns anchor an instance; an instance's pronoun is always
# drawn from one of these two sets.  Matching is case-insensitive.
MASCULINE_PRONOUNS = frozenset({"he", "him", "his"})
FEMININE_PRONOUNS = frozenset({"she", "her", "hers"})
TARGET_PRONOUNS = MASCULINE_PRONOUNS | FEMININE_PRONOUNS

# Pronouns that never anchor an instance but still disqualify a sentence
# when they appear where no pronoun is allowed (before the connective).
NON_TARGET_PRONOUNS = frozenset({
    "it", "its", "they", "them", "their", "theirs",
    "i", "me", "my", "mine", "we", "us", "our", "ours",
    "you", "your", "yours",
    "himself", "herself", "itself", "themselves",
    "myself", "yourself", "yourselves", "ourselves",
})
ALL_PRONOUNS = TARGET_PRONOUNS | NON_TARGET_PRONOUNS


class Label(IntEnum):
    """Which candidate the pronoun refers to: the first or second mention."""

    FIRST = 1
    SECOND = 2

    def flipped(self) -> "Label":
        return Label.SECOND if self is Label.FIRST else Label.FIRST


class PronounGender(str, Enum):
    MASCULINE = "m"
    FEMININE = "f"


class Choice(str, Enum):
    """A resolver's decision for one instance.

    FIRST/SECOND select a candidate; BOTH and NONE record that the
    resolver's clusters either contained both candidates or neither.
    """

    FIRST = "1"
    SECOND = "2"
    BOTH = "both"
    NONE = "none"


class ParseError(ValueError):
    """Raised for malformed corpus input (bad JSON, missing or ill-typed fields)."""

    def __init__(self, message: str, line: Optional[int] = None, offset: Optional[int] = None):
        where = ""
        if line is not None:
            where += f" at line {line}"
        if offset is not None:
            where += f", byte offset {offset}"
        super().__init__(message + where)
        self.line = line
        self.offset = offset


class InvariantViolation(ValueError):
    """Raised when a structurally well-formed record breaks a model invariant."""


def pronoun_gender_of(surface: str) -> Optional[PronounGender]:
    """Gender set containing ``surface``, or None for non-target pronouns."""
    low = surface.lower()
    if low in MASCULINE_PRONOUNS:
        return PronounGender.MASCULINE
    if low in FEMININE_PRONOUNS:
        return PronounGender.FEMININE
    return None


@dataclass(frozen=True)
class MentionSpan:
    """Half-open token span [start, end) with its surface string."""

    start: int
    end: int
    surface: str

    def overlaps(self, other: "MentionSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def to_json(self) -> dict:
        return {"start": self.start, "end": self.end, "surface": self.surface}

    @staticmethod
    def from_json(obj: object) -> "MentionSpan":
        if not isinstance(obj, dict):
            raise ParseError("span must be an object")
        try:
            start, end, surface = obj["start"], obj["end"], obj["surface"]
        except KeyError as exc:
            raise ParseError(f"span missing field {exc}") from None
        if not isinstance(start, int) or not isinstance(end, int) or isinstance(start, bool) or isinstance(end, bool):
            raise ParseError("span start/end must be integers")
        if not isinstance(surface, str):
            raise ParseError("span surface must be a string")
        return MentionSpan(start, end, surface)


@dataclass(frozen=True)
class ProblemInstance:
    """One ambiguous-pronoun problem: a sentence, two candidates and a pronoun."""

    id: str
    text: str
    tokens: tuple[str, ...]
    c1: MentionSpan
    c2: MentionSpan
    pronoun: MentionSpan
    connective: Optional[MentionSpan]
    label: Optional[Label]
    pronoun_gender: PronounGender
    source: str
    derived_from: Optional[str] = None
    switched: bool = False

    def candidate(self, label: Label) -> MentionSpan:
        return self.c1 if label is Label.FIRST else self.c2

    def with_label(self, label: Optional[Label]) -> "ProblemInstance":
        return replace(self, label=label)


@dataclass(frozen=True)
class Prediction:
    """A resolver output for one instance.

    ``score_first`` is the probability assigned to the first candidate
    when the resolver produces one; rule-like resolvers leave it None.
    """

    instance_id: str
    choice: Choice
    score_first: Optional[float] = None


class RejectReason(str, Enum):
    """Why a pipeline stage discarded a sentence."""

    # initial filtering
    TOO_SHORT = "TooShort"
    TOO_LONG = "TooLong"
    NO_LEADING_UPPERCASE = "NoLeadingUppercase"
    CONTAINS_MATH = "ContainsMath"
    # connective filtering
    NO_CONNECTIVE = "NoConnective"
    MULTIPLE_CONNECTIVE_CLUSTERS = "MultipleConnectiveClusters"
    TOO_FEW_CONTENT_WORDS_BEFORE = "TooFewContentWordsBefore"
    NO_PRONOUN_AFTER = "NoPronounAfter"
    PRONOUN_BEFORE_CONNECTIVE = "PronounBeforeConnective"
    # antecedent filtering
    WRONG_NP_COUNT = "WrongNPCount"
    NP_REOCCURS = "NPReoccurs"
    NOT_PERSON_NP = "NotPersonNP"
    NO_TARGET_PRONOUN = "NoTargetPronoun"


@dataclass(frozen=True)
class StageVerdict:
    """Outcome of one filter stage: accepted, or rejected with a reason."""

    stage: str
    reason: Optional[RejectReason] = None

    @property
    def accepted(self) -> bool:
        return self.reason is None


@dataclass
class SentenceRecord:
    """A candidate sentence moving through the mining pipeline."""

    id: str
    text: str
    source: str
    tokens: list[str] = field(default_factory=list)
    tags: Optional[list[str]] = None
    verdicts: list[StageVerdict] = field(default_factory=list)


# ---------------------------------------------------------------------------
# JSONL serialization

_FIELD_ORDER = (
    "id", "text", "tokens", "c1", "c2", "pronoun", "connective",
    "label", "pronoun_gender", "source", "derived_from", "switched",
)


def serialize_instance(instance: ProblemInstance) -> str:
    """Render one instance as a single JSON line (no trailing newline).

    Key order is fixed so that serialization is byte-reproducible.
    """
    obj = {
        "id": instance.id,
        "text": instance.text,
        "tokens": list(instance.tokens),
        "c1": instance.c1.to_json(),
        "c2": instance.c2.to_json(),
        "pronoun": instance.pronoun.to_json(),
        "connective": instance.connective.to_json() if instance.connective else None,
        "label": int(instance.label) if instance.label is not None else None,
        "pronoun_gender": instance.pronoun_gender.value,
        "source": instance.source,
        "derived_from": instance.derived_from,
        "switched": instance.switched,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def parse_instance(line: str, lineno: Optional[int] = None) -> ProblemInstance:
    """Parse one JSON line into a validated ProblemInstance.

    Raises ParseError (with byte offset) for syntactic problems and
    InvariantViolation for structurally valid records that break model
    invariants.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=lineno, offset=exc.pos) from None
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object", line=lineno)

    missing = [k for k in _FIELD_ORDER if k not in obj]
    if missing:
        raise ParseError(f"record missing fields: {', '.join(missing)}", line=lineno)

    if not isinstance(obj["id"], str) or not obj["id"]:
        raise ParseError("id must be a non-empty string", line=lineno)
    if not isinstance(obj["text"], str):
        raise ParseError("text must be a string", line=lineno)
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise ParseError("tokens must be a list of strings", line=lineno)

    label = obj["label"]
    if label not in (1, 2, None):
        raise ParseError(f"label must be 1, 2 or null, got {label!r}", line=lineno)
    gender = obj["pronoun_gender"]
    if gender not in ("m", "f"):
        raise ParseError(f"pronoun_gender must be 'm' or 'f', got {gender!r}", line=lineno)
    if not isinstance(obj["source"], str):
        raise ParseError("source must be a string", line=lineno)
    derived_from = obj["derived_from"]
    if derived_from is not None and not isinstance(derived_from, str):
        raise ParseError("derived_from must be a string or null", line=lineno)
    if not isinstance(obj["switched"], bool):
        raise ParseError("switched must be a boolean", line=lineno)

    try:
        c1 = MentionSpan.from_json(obj["c1"])
        c2 = MentionSpan.from_json(obj["c2"])
        pronoun = MentionSpan.from_json(obj["pronoun"])
        connective = MentionSpan.from_json(obj["connective"]) if obj["connective"] is not None else None
    except ParseError as exc:
        raise ParseError(str(exc), line=lineno) from None

    instance = ProblemInstance(
        id=obj["id"],
        text=obj["text"],
        tokens=tuple(tokens),
        c1=c1,
        c2=c2,
        pronoun=pronoun,
        connective=connective,
        label=Label(label) if label is not None else None,
        pronoun_gender=PronounGender(gender),
        source=obj["source"],
        derived_from=derived_from,
        switched=obj["switched"],
    )
    validate_instance(instance)
    return instance


def validate_instance(instance: ProblemInstance) -> None:
    """Check model invariants; raise InvariantViolation naming the first breach."""
    n = len(instance.tokens)
    spans = [("c1", instance.c1), ("c2", instance.c2), ("pronoun", instance.pronoun)]
    if instance.connective is not None:
        spans.append(("connective", instance.connective))

    for name, span in spans:
        if not (0 <= span.start < span.end <= n):
            raise InvariantViolation(
                f"{instance.id}: {name} span ({span.start}, {span.end}) outside tokens [0, {n})")
        covered = " ".join(instance.tokens[span.start:span.end])
        if span.surface != covered:
            raise InvariantViolation(
                f"{instance.id}: {name} surface {span.surface!r} != covered tokens {covered!r}")

    if not (instance.c1.end <= instance.c2.start <= instance.pronoun.start):
        raise InvariantViolation(
            f"{instance.id}: candidate/pronoun ordering violated "
            f"(c1 ends {instance.c1.end}, c2 starts {instance.c2.start}, "
            f"pronoun starts {instance.pronoun.start})")

    for i in range(len(spans)):
        for j in range(i + 1, len(spans)):
            if spans[i][1].overlaps(spans[j][1]):
                raise InvariantViolation(
                    f"{instance.id}: spans {spans[i][0]} and {spans[j][0]} overlap")

    expected = pronoun_gender_of(instance.pronoun.surface)
    if expected is None:
        raise InvariantViolation(
            f"{instance.id}: pronoun {instance.pronoun.surface!r} is not a target pronoun")
    if expected is not instance.pronoun_gender:
        raise InvariantViolation(
            f"{instance.id}: pronoun_gender {instance.pronoun_gender.value!r} does not match "
            f"pronoun {instance.pronoun.surface!r}")

    if instance.switched and not instance.derived_from:
        raise InvariantViolation(f"{instance.id}: switched instance lacks derived_from")


def read_corpus(source: str | IO[str]) -> Iterator[ProblemInstance]:
    """Stream instances from a JSONL file path or open text handle."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as handle:
            yield from _read_handle(handle)
    else:
        yield from _read_handle(source)


def _read_handle(handle: IO[str]) -> Iterator[ProblemInstance]:
    for lineno, line in enumerate(handle, start=1):
        line = line.strip()
        if not line:
            continue
        yield parse_instance(line, lineno=lineno)


def write_corpus(target: str | IO[str], instances: Iterable[ProblemInstance]) -> int:
    """Write instances as JSONL; returns the number written."""
    if isinstance(target, str):
        with open(target, "w", encoding="utf-8") as handle:
            return write_corpus(handle, instances)
    count = 0
    for instance in instances:
        target.write(serialize_instance(instance))
        target.write("\n")
        count += 1
    return count


def validate_corpus(source: str | IO[str]) -> int:
    """Validate every record in a corpus file; returns the record count.

    Propagates the first ParseError or InvariantViolation encountered.
    """
    count = 0
    for _ in read_corpus(source):
        count += 1
    return count
