"""Connective and antecedent filtering.

A sentence that survived the initial length/shape filter goes through
two more gates:

1. The connective stage looks for exactly one distinct connective
   cluster (a maximal contiguous run of connective and glue tokens,
   e.g. ", but" or ", and though").  Repeats of the *same* cluster are
   tolerated and the first occurrence is used; two clusters with
   different content split the sentence ambiguously and reject it.
   The cluster must be preceded by enough content words and no pronoun
   at all, and followed by at least one target pronoun.

2. The antecedent stage requires exactly two person NPs before the
   connective whose heads never re-occur after it.  What survives is a
   well-formed two-candidate instance with the first following target
   pronoun.

Both stages append a verdict to the sentence record, so a processed
corpus carries its own audit trail.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Callable, Container, Iterable, Iterator, Optional

from knowref.ingest import FilterConfig, initial_filter, tokenize
from knowref.model import (
    ALL_PRONOUNS,
    TARGET_PRONOUNS,
    MentionSpan,
    ProblemInstance,
    RejectReason,
    SentenceRecord,
    StageVerdict,
    pronoun_gender_of,
    validate_instance,
)
from knowref.tagging import Chunk, Tagger, chunk_nps, honorific_key, load_honorifics

__all__ = [
    "CONNECTIVE_STAGE",
    "ANTECEDENT_STAGE",
    "DEFAULT_CONNECTIVES",
    "ConnectiveConfig",
    "ConnectiveMatch",
    "PersonTest",
    "connective_filter",
    "antecedent_filter",
    "person_test",
    "mine_record",
    "mine_corpus",
    "load_stopwords",
    "load_person_nouns",
]

CONNECTIVE_STAGE = "connective"
ANTECEDENT_STAGE = "antecedent"

# Words that open or separate a clause.  "and" on its own is ordinary
# coordination ("Alex and Sam"), so it only counts as part of a cluster
# when it glues onto one of these.
DEFAULT_CONNECTIVES = (
    ",", ";", "or", "since", "but", "because", "although", "though",
    "when", "until", "as",
)
DEFAULT_GLUE = frozenset({"and"})

PersonTest = Callable[[Chunk], bool]


@lru_cache(maxsize=1)
def load_stopwords() -> frozenset:
    data = resources.files("knowref.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in data.splitlines()
        if line.strip() and not line.startswith("#")
    )


@lru_cache(maxsize=1)
def load_person_nouns() -> frozenset:
    data = resources.files("knowref.data").joinpath("person_nouns.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in data.splitlines()
        if line.strip() and not line.startswith("#")
    )


@dataclass(frozen=True)
class ConnectiveConfig:
    connectives: tuple = DEFAULT_CONNECTIVES
    glue_words: frozenset = DEFAULT_GLUE
    min_content_words_before: int = 2
    # None means the bundled function-word list
    stopwords: Optional[frozenset] = None

    def __post_init__(self):
        if not self.connectives:
            raise ValueError("connectives must be non-empty")
        if self.min_content_words_before < 1:
            raise ValueError("min_content_words_before must be >= 1")

    def effective_stopwords(self) -> frozenset:
        return self.stopwords if self.stopwords is not None else load_stopwords()


@dataclass(frozen=True)
class ConnectiveMatch:
    """Accepted connective cluster plus the pronoun that follows it."""

    connective: MentionSpan
    pronoun: MentionSpan


def _span(tokens, start, end) -> MentionSpan:
    return MentionSpan(start=start, end=end, surface=" ".join(tokens[start:end]))


def _clusters(tokens, config: ConnectiveConfig):
    """Maximal runs of connective/glue tokens, skipping pure-glue runs.

    Returns (start, end, content) triples where content is the
    lowercased token tuple used to compare clusters for distinctness.
    """
    triggers = {c.lower() for c in config.connectives}
    glue = {g.lower() for g in config.glue_words}
    members = triggers | glue
    runs = []
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i].lower() in members:
            j = i
            while j < n and tokens[j].lower() in members:
                j += 1
            content = tuple(t.lower() for t in tokens[i:j])
            if any(t in triggers for t in content):
                runs.append((i, j, content))
            i = j
        else:
            i += 1
    return runs


def _is_content_word(token: str, stopwords) -> bool:
    return any(ch.isalpha() for ch in token) and token.lower() not in stopwords


def _first_target_pronoun(tokens, start: int) -> Optional[int]:
    for i in range(start, len(tokens)):
        if tokens[i].lower() in TARGET_PRONOUNS:
            return i
    return None


def connective_filter(
    record: SentenceRecord, config: Optional[ConnectiveConfig] = None
) -> Optional[ConnectiveMatch]:
    """Stage 2 gate.  Returns the match on accept, None on reject.

    Either way a verdict is appended to ``record.verdicts``.
    """
    if not record.tokens:
        raise ValueError(f"{record.id}: tokens not populated")
    config = config or ConnectiveConfig()
    tokens = record.tokens

    def reject(reason: RejectReason) -> None:
        record.verdicts.append(StageVerdict(stage=CONNECTIVE_STAGE, reason=reason))

    clusters = _clusters(tokens, config)
    if not clusters:
        reject(RejectReason.NO_CONNECTIVE)
        return None
    if len({content for _, _, content in clusters}) > 1:
        reject(RejectReason.MULTIPLE_CONNECTIVE_CLUSTERS)
        return None
    start, end, _ = clusters[0]

    stopwords = config.effective_stopwords()
    n_content = sum(1 for t in tokens[:start] if _is_content_word(t, stopwords))
    if n_content < config.min_content_words_before:
        reject(RejectReason.TOO_FEW_CONTENT_WORDS_BEFORE)
        return None

    pronoun_idx = _first_target_pronoun(tokens, end)
    if pronoun_idx is None:
        reject(RejectReason.NO_PRONOUN_AFTER)
        return None

    if any(t.lower() in ALL_PRONOUNS for t in tokens[:start]):
        reject(RejectReason.PRONOUN_BEFORE_CONNECTIVE)
        return None

    record.verdicts.append(StageVerdict(stage=CONNECTIVE_STAGE))
    return ConnectiveMatch(
        connective=_span(tokens, start, end),
        pronoun=_span(tokens, pronoun_idx, pronoun_idx + 1),
    )


def person_test(chunk: Chunk, lexicon: Container, person_nouns) -> bool:
    """True when the chunk plausibly refers to a person.

    ProperNP heads must be known names; an honorific anywhere in the
    chunk also qualifies; CommonNP heads must be in the person-noun
    gazetteer.
    """
    honorifics = load_honorifics()
    if any(honorific_key(tok) in honorifics for tok in chunk.span.surface.split()):
        return True
    if chunk.kind == "ProperNP":
        return chunk.head in lexicon
    return chunk.head.lower() in person_nouns


def antecedent_filter(
    record: SentenceRecord,
    connective: MentionSpan,
    chunks: Iterable[Chunk],
    test: PersonTest,
) -> Optional[ProblemInstance]:
    """Stage 3 gate.  Returns the unlabeled instance on accept."""
    tokens = record.tokens

    def reject(reason: RejectReason) -> None:
        record.verdicts.append(StageVerdict(stage=ANTECEDENT_STAGE, reason=reason))

    before = [c for c in chunks if c.span.end <= connective.start]
    if len(before) != 2:
        reject(RejectReason.WRONG_NP_COUNT)
        return None

    after = {t.lower() for t in tokens[connective.end:]}
    if any(c.head.lower() in after for c in before):
        reject(RejectReason.NP_REOCCURS)
        return None

    if not all(test(c) for c in before):
        reject(RejectReason.NOT_PERSON_NP)
        return None

    pronoun_idx = _first_target_pronoun(tokens, connective.end)
    if pronoun_idx is None:
        reject(RejectReason.NO_TARGET_PRONOUN)
        return None
    pronoun = _span(tokens, pronoun_idx, pronoun_idx + 1)

    instance = ProblemInstance(
        id=record.id,
        text=record.text,
        tokens=tuple(tokens),
        c1=before[0].span,
        c2=before[1].span,
        pronoun=pronoun,
        connective=connective,
        label=None,
        pronoun_gender=pronoun_gender_of(pronoun.surface),
        source=record.source,
    )
    validate_instance(instance)
    record.verdicts.append(StageVerdict(stage=ANTECEDENT_STAGE))
    return instance


def mine_record(
    record: SentenceRecord,
    tagger: Tagger,
    lexicon: Container,
    *,
    connective_config: Optional[ConnectiveConfig] = None,
    filter_config: Optional[FilterConfig] = None,
    person_nouns=None,
) -> Optional[ProblemInstance]:
    """Run all three stages on one sentence record."""
    if not record.tokens:
        record.tokens = tokenize(record.text)
    if not initial_filter(record, filter_config).accepted:
        return None
    match = connective_filter(record, connective_config)
    if match is None:
        return None
    if record.tags is None:
        record.tags = tagger.tag(record.tokens)
    chunks = chunk_nps(record.tokens, record.tags)
    nouns = person_nouns if person_nouns is not None else load_person_nouns()
    return antecedent_filter(
        record,
        match.connective,
        chunks,
        lambda chunk: person_test(chunk, lexicon, nouns),
    )


def mine_corpus(
    records: Iterable[SentenceRecord],
    tagger: Tagger,
    lexicon: Container,
    **kwargs,
) -> Iterator[ProblemInstance]:
    """Yield instances for every record that survives all stages."""
    for record in records:
        instance = mine_record(record, tagger, lexicon, **kwargs)
        if instance is not None:
            yield instance
