"""Gender-heuristic label generation and giveaway neutralization.

Training labels come from a shallow rule: when the two candidates have
distinct, unambiguous genders, the pronoun resolves to the candidate
whose gender matches it.  The label would then be trivially
recoverable from the names alone, so the mismatching candidate is
renamed to a same-gender-as-pronoun name, making the surface form
gender-uniform while the stored label keeps the answer.

Replacement is deterministic per instance: the RNG is seeded with the
global seed XORed with a stable digest of the instance id, so a
parallel labeling pass produces byte-identical output in any order.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Iterable, Optional

from knowref.model import (
    Label,
    MentionSpan,
    ParseError,
    ProblemInstance,
    PronounGender,
    validate_instance,
)
from knowref.tagging import Chunk, Honorific, honorific_key, load_honorifics

__all__ = [
    "Gender",
    "AbstainReason",
    "LabelDecision",
    "GenderLexicon",
    "NoReplacementAvailable",
    "infer_gender",
    "infer_label",
    "neutralize_gender",
    "label_corpus",
    "mark_provenance",
    "stable_instance_seed",
]


class Gender(str, Enum):
    FEMALE = "Female"
    MALE = "Male"
    AMBIGUOUS = "Ambiguous"
    UNKNOWN = "Unknown"


class AbstainReason(str, Enum):
    SAME_GENDER = "SameGender"
    AMBIGUOUS_GENDER = "AmbiguousGender"
    UNKNOWN_NAME = "UnknownName"


class NoReplacementAvailable(ValueError):
    """The lexicon offers no usable name of the required gender."""


@dataclass(frozen=True)
class LabelDecision:
    label: Optional[Label] = None
    reason: Optional[AbstainReason] = None

    def __post_init__(self):
        if (self.label is None) == (self.reason is None):
            raise ValueError("exactly one of label/reason must be set")

    @property
    def labeled(self) -> bool:
        return self.label is not None


_GENDER_CODES = {"F": Gender.FEMALE, "M": Gender.MALE, "A": Gender.AMBIGUOUS}


class GenderLexicon:
    """First-name -> gender map with optional per-name frequency.

    Lookups are case-folded.  A name listed with both Female and Male
    collapses to Ambiguous; repeated rows of one gender keep the
    highest frequency.
    """

    def __init__(self, entries=None, frequency=None, display=None):
        self._entries: dict = dict(entries or {})
        self._frequency: dict = dict(frequency or {})
        self._display: dict = dict(display or {})

    @classmethod
    def from_rows(cls, rows: Iterable) -> "GenderLexicon":
        lex = cls()
        for name, gender, freq in rows:
            lex._add(name, gender, freq)
        return lex

    def _add(self, name: str, gender: Gender, freq: Optional[int]) -> None:
        key = name.lower()
        previous = self._entries.get(key)
        if previous is not None and previous != gender:
            gender = Gender.AMBIGUOUS
        self._entries[key] = gender
        self._display.setdefault(key, name)
        if freq is not None:
            self._frequency[key] = max(freq, self._frequency.get(key, freq))

    @classmethod
    def load(cls, path: Optional[str] = None) -> "GenderLexicon":
        """Parse a name<TAB>F|M|A[<TAB>frequency] file (bundled by default)."""
        if path is None:
            text = resources.files("knowref.data").joinpath("names.tsv").read_text("utf-8")
        else:
            with open(path, "r", encoding="utf-8") as handle:
                text = handle.read()
        lex = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise ParseError("expected name<TAB>F|M|A[<TAB>frequency]", line=lineno)
            name, code = parts[0], parts[1]
            if code not in _GENDER_CODES:
                raise ParseError(f"unknown gender code {code!r}", line=lineno)
            freq = None
            if len(parts) == 3:
                try:
                    freq = int(parts[2])
                except ValueError:
                    raise ParseError(f"bad frequency {parts[2]!r}", line=lineno)
            lex._add(name, _GENDER_CODES[code], freq)
        return lex

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def gender(self, name: str) -> Gender:
        return self._entries.get(name.lower(), Gender.UNKNOWN)

    def frequency(self, name: str) -> Optional[int]:
        return self._frequency.get(name.lower())

    def display(self, name: str) -> str:
        return self._display.get(name.lower(), name)

    def names_of(self, gender: Gender) -> list:
        """Display forms of every name with exactly this gender, sorted."""
        return sorted(
            self._display[key] for key, g in self._entries.items() if g == gender
        )


@lru_cache(maxsize=1)
def _bundled_lexicon() -> GenderLexicon:
    return GenderLexicon.load()


def _honorific_of(token: str) -> Optional[Honorific]:
    return load_honorifics().get(honorific_key(token))


def _surface_gender(surface: str, lexicon: GenderLexicon) -> Gender:
    """Honorific override first, then the first non-honorific token."""
    tokens = surface.split()
    for token in tokens:
        honorific = _honorific_of(token)
        if honorific is not None and honorific.gender == "F":
            return Gender.FEMALE
        if honorific is not None and honorific.gender == "M":
            return Gender.MALE
    for token in tokens:
        if _honorific_of(token) is not None:
            continue
        return lexicon.gender(token)
    return Gender.UNKNOWN


def infer_gender(chunk: Chunk, lexicon: GenderLexicon) -> Gender:
    return _surface_gender(chunk.span.surface, lexicon)


def infer_label(instance: ProblemInstance, lexicon: GenderLexicon) -> LabelDecision:
    """Gender heuristic: label iff candidate genders are {Female, Male}."""
    g1 = _surface_gender(instance.c1.surface, lexicon)
    g2 = _surface_gender(instance.c2.surface, lexicon)
    if Gender.UNKNOWN in (g1, g2):
        return LabelDecision(reason=AbstainReason.UNKNOWN_NAME)
    if Gender.AMBIGUOUS in (g1, g2):
        return LabelDecision(reason=AbstainReason.AMBIGUOUS_GENDER)
    if g1 == g2:
        return LabelDecision(reason=AbstainReason.SAME_GENDER)
    pronoun_gender = (
        Gender.MALE if instance.pronoun_gender == PronounGender.MASCULINE
        else Gender.FEMALE
    )
    return LabelDecision(label=Label.FIRST if g1 == pronoun_gender else Label.SECOND)


def stable_instance_seed(global_seed: int, instance_id: str) -> int:
    """Process-independent per-instance seed (built-in hash() is salted)."""
    digest = hashlib.sha256(instance_id.encode("utf-8")).hexdigest()
    return global_seed ^ int(digest[:16], 16)


def mark_provenance(source: str, kind: str) -> str:
    """Append '#heuristic' or '#annotated' to a source, replacing any old mark."""
    if kind not in ("heuristic", "annotated"):
        raise ValueError(f"unknown provenance kind {kind!r}")
    return f"{source.split('#', 1)[0]}#{kind}"


def _align_tokens(text: str, tokens) -> list:
    """Character offsets of each token inside text, in order."""
    offsets = []
    pos = 0
    for token in tokens:
        start = text.find(token, pos)
        if start < 0:
            raise ValueError(f"token {token!r} not found in text")
        offsets.append((start, start + len(token)))
        pos = start + len(token)
    return offsets


def _split_honorific(tokens):
    """Leading honorific tokens vs the name tokens that follow."""
    i = 0
    while i < len(tokens) and _honorific_of(tokens[i]) is not None:
        i += 1
    return list(tokens[:i]), list(tokens[i:])


def _replacement_honorifics(honorifics, target: Gender):
    """Swap gendered titles to the target gender's counterpart."""
    target_code = "F" if target == Gender.FEMALE else "M"
    kept = []
    for token in honorifics:
        entry = _honorific_of(token)
        if entry.gender is None or entry.gender == target_code:
            kept.append(token)
        elif entry.counterpart:
            kept.append(entry.counterpart)
        # gendered title without a counterpart is dropped
    return kept


def _pick_replacement(rng, lexicon: GenderLexicon, target: Gender, forbidden: str):
    """A sorted-pool draw of an unambiguous target-gender name.

    Anything sharing text with the other candidate is excluded so the
    two surfaces stay distinct and substring-free for later switching.
    """
    other = forbidden.lower()
    pool = [
        name for name in lexicon.names_of(target)
        if name.lower() not in other and other not in name.lower()
    ]
    if not pool:
        raise NoReplacementAvailable(f"no usable {target.value} name in lexicon")
    return rng.choice(pool)


def _shift(span: MentionSpan, at: int, delta: int) -> MentionSpan:
    if span.start >= at:
        return MentionSpan(span.start + delta, span.end + delta, span.surface)
    return span


def neutralize_gender(
    instance: ProblemInstance, lexicon: GenderLexicon, seed: int = 0
) -> ProblemInstance:
    """Rename the candidate whose gender gives the label away.

    No-op when the instance is already gender-uniform (or when the
    mismatching candidate cannot be identified).  The label, the
    pronoun surface, and every token outside the replaced span are
    preserved.
    """
    if instance.label is None:
        raise ValueError("neutralize_gender requires a labeled instance")

    target = (
        Gender.MALE if instance.pronoun_gender == PronounGender.MASCULINE
        else Gender.FEMALE
    )
    genders = {
        Label.FIRST: _surface_gender(instance.c1.surface, lexicon),
        Label.SECOND: _surface_gender(instance.c2.surface, lexicon),
    }
    mismatching = [lab for lab, g in genders.items() if g != target]
    if len(mismatching) != 1:
        return instance

    victim_label = mismatching[0]
    victim = instance.candidate(victim_label)
    other = instance.candidate(victim_label.flipped())

    rng = random.Random(stable_instance_seed(seed, instance.id))
    old_tokens = victim.surface.split()
    titles, _ = _split_honorific(old_tokens)
    new_name = _pick_replacement(rng, lexicon, target, other.surface)
    new_tokens = _replacement_honorifics(titles, target) + [new_name]
    new_surface = " ".join(new_tokens)

    offsets = _align_tokens(instance.text, instance.tokens)
    char_start = offsets[victim.start][0]
    char_end = offsets[victim.end - 1][1]
    new_text = instance.text[:char_start] + new_surface + instance.text[char_end:]

    tokens = (
        list(instance.tokens[:victim.start])
        + new_tokens
        + list(instance.tokens[victim.end:])
    )
    delta = len(new_tokens) - (victim.end - victim.start)
    replaced = MentionSpan(victim.start, victim.start + len(new_tokens), new_surface)

    def adjust(span: MentionSpan) -> MentionSpan:
        return _shift(span, victim.end, delta)

    result = ProblemInstance(
        id=instance.id,
        text=new_text,
        tokens=tuple(tokens),
        c1=replaced if victim_label == Label.FIRST else instance.c1,
        c2=adjust(instance.c2) if victim_label == Label.FIRST else replaced,
        pronoun=adjust(instance.pronoun),
        connective=adjust(instance.connective) if instance.connective else None,
        label=instance.label,
        pronoun_gender=instance.pronoun_gender,
        source=instance.source,
        derived_from=instance.derived_from,
        switched=instance.switched,
    )
    validate_instance(result)
    return result


def label_corpus(
    instances: Iterable[ProblemInstance],
    lexicon: Optional[GenderLexicon] = None,
    *,
    neutralize: bool = False,
    seed: int = 0,
):
    """Apply the heuristic to a corpus.

    Returns (labeled, abstentions): labeled instances carry the
    '#heuristic' provenance mark and, when requested, neutralized
    surfaces; abstentions is a list of (id, reason) pairs.
    """
    lexicon = lexicon or _bundled_lexicon()
    labeled = []
    abstained = []
    for instance in instances:
        decision = infer_label(instance, lexicon)
        if not decision.labeled:
            abstained.append((instance.id, decision.reason))
            continue
        result = replace(
            instance.with_label(decision.label),
            source=mark_provenance(instance.source, "heuristic"),
        )
        if neutralize:
            result = neutralize_gender(result, lexicon, seed)
        labeled.append(result)
    return labeled, abstained
