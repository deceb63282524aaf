"""Pronoun resolvers: pluggable baselines over the two-candidate task.

A resolver maps a problem instance to a :class:`~knowref.model.Prediction`
choosing the first candidate, the second, both, or none.  The built-ins
cover the behavioral archetypes seen in published coreference systems:
fixed positions (AlwaysFirst/AlwaysSecond), a seeded coin (Random), a
gender-dictionary rule that keys on names rather than positions
(GenderRule), and a substitution scorer that rewrites the pronoun as
each candidate in turn and asks an n-gram language model which sentence
reads better (NGramSubstitution).  Systems that cannot be linked
in-process are evaluated through their prediction files
("id<TAB>choice[<TAB>score]") via :class:`ExternalPredictions`.
"""

from __future__ import annotations

import gzip
import json
import math
import random
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional, Protocol, Sequence

from .labeling import Gender, GenderLexicon, _surface_gender, stable_instance_seed
from .mining import load_stopwords
from .model import Choice, Label, Prediction, ProblemInstance, PronounGender
from .tagging import honorific_key, load_honorifics

__all__ = [
    "BOS",
    "EOS",
    "Resolver",
    "ResolverError",
    "AdapterProtocolError",
    "RandomResolver",
    "AlwaysFirst",
    "AlwaysSecond",
    "GenderRule",
    "NGramModel",
    "NGramSubstitution",
    "ExternalPredictions",
    "train_ngram_model",
    "ngram_score",
    "substitute_candidate",
    "binary_softmax",
    "resolve_corpus",
]

BOS = "<s>"
EOS = "</s>"

_NGRAM_MAGIC = b"KRNGRAM:1\n"


class ResolverError(ValueError):
    """Raised for unusable resolver inputs (bad model files, empty corpora)."""


class AdapterProtocolError(ResolverError):
    """Raised for malformed or missing external predictions."""


class Resolver(Protocol):
    name: str

    def resolve(self, instance: ProblemInstance) -> Prediction: ...


def resolve_corpus(resolver: Resolver, instances: Iterable[ProblemInstance]) -> Iterator[Prediction]:
    """Run one resolver over a corpus, streaming predictions."""
    for instance in instances:
        yield resolver.resolve(instance)


# ---------------------------------------------------------------------------
# Position- and chance-keyed baselines

class AlwaysFirst:
    name = "always-first"

    def resolve(self, instance: ProblemInstance) -> Prediction:
        return Prediction(instance.id, Choice.FIRST)


class AlwaysSecond:
    name = "always-second"

    def resolve(self, instance: ProblemInstance) -> Prediction:
        return Prediction(instance.id, Choice.SECOND)


class RandomResolver:
    """Fair coin, seeded per instance so results survive reordering."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def resolve(self, instance: ProblemInstance) -> Prediction:
        rng = random.Random(stable_instance_seed(self.seed, instance.id))
        choice = Choice.FIRST if rng.random() < 0.5 else Choice.SECOND
        return Prediction(instance.id, choice)


# ---------------------------------------------------------------------------
# Gender-dictionary rule

def _name_token(surface: str) -> Optional[str]:
    """First non-honorific token of a candidate surface."""
    honorifics = load_honorifics()
    for token in surface.split():
        if honorific_key(token) not in honorifics:
            return token
    return None


class GenderRule:
    """Pick the candidate whose dictionary gender matches the pronoun.

    When gender does not decide (same gender, ambiguous or unknown
    names), fall back to the more frequent name; answer None when
    frequencies are missing or tied.  Both criteria key on the name
    itself, so on a switched instance the rule follows the surface to
    its new position.
    """

    name = "gender-rule"

    def __init__(self, lexicon: Optional[GenderLexicon] = None):
        self.lexicon = lexicon if lexicon is not None else GenderLexicon.load()

    def resolve(self, instance: ProblemInstance) -> Prediction:
        wanted = (Gender.MALE if instance.pronoun_gender is PronounGender.MASCULINE
                  else Gender.FEMALE)
        match1 = _surface_gender(instance.c1.surface, self.lexicon) == wanted
        match2 = _surface_gender(instance.c2.surface, self.lexicon) == wanted
        if match1 != match2:
            return Prediction(instance.id, Choice.FIRST if match1 else Choice.SECOND)
        return Prediction(instance.id, self._frequency_fallback(instance))

    def _frequency_fallback(self, instance: ProblemInstance) -> Choice:
        names = [_name_token(instance.c1.surface), _name_token(instance.c2.surface)]
        first, second = (self.lexicon.frequency(n) if n is not None else None for n in names)
        if first is None or second is None or first == second:
            return Choice.NONE
        return Choice.FIRST if first > second else Choice.SECOND


# ---------------------------------------------------------------------------
# N-gram language model and the substitution resolver

@dataclass(frozen=True)
class NGramModel:
    """Add-k smoothed n-gram counts.

    ``counts`` holds every order-n gram of the padded training
    sentences and its order-(n-1) prefix (the empty tuple for n = 1),
    incremented together, so a gram's count never exceeds its prefix's.
    ``vocab_size`` is the number of distinct predicted tokens, which
    includes the end marker for n >= 2.
    """

    order: int
    k: float
    vocab_size: int
    counts: dict[tuple[str, ...], int]

    def save(self, path: str) -> None:
        """Versioned binary: magic header + gzipped JSON."""
        payload = {
            "order": self.order,
            "k": self.k,
            "vocab_size": self.vocab_size,
            "counts": [[list(gram), count] for gram, count in sorted(self.counts.items())],
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        with open(path, "wb") as handle:
            handle.write(_NGRAM_MAGIC)
            # filename and mtime pinned so identical models are
            # byte-identical on disk regardless of where they are written
            with gzip.GzipFile(filename="", fileobj=handle, mode="wb", mtime=0) as gz:
                gz.write(blob)

    @staticmethod
    def load(path: str) -> "NGramModel":
        with open(path, "rb") as handle:
            magic = handle.read(len(_NGRAM_MAGIC))
            if magic != _NGRAM_MAGIC:
                raise ResolverError(f"{path}: not an n-gram model (bad magic {magic!r})")
            with gzip.GzipFile(fileobj=handle, mode="rb") as gz:
                payload = json.loads(gz.read().decode("utf-8"))
        model = NGramModel(
            order=payload["order"],
            k=payload["k"],
            vocab_size=payload["vocab_size"],
            counts={tuple(gram): count for gram, count in payload["counts"]},
        )
        if model.order < 1 or model.k <= 0 or model.vocab_size < 1:
            raise ResolverError(f"{path}: inconsistent model parameters")
        return model


def _grams(tokens: tuple[str, ...], order: int) -> Iterator[tuple[str, ...]]:
    """Order-n windows over a sentence; padded with begin/end markers for n >= 2."""
    if order == 1:
        seq = tokens
        start = 0
    else:
        seq = (BOS,) * (order - 1) + tokens + (EOS,)
        start = order - 1
    for i in range(start, len(seq)):
        yield seq[i - order + 1:i + 1]


def train_ngram_model(
    sentences: Iterable[Sequence[str]],
    *,
    order: int = 3,
    k: float = 0.1,
) -> NGramModel:
    """Count padded n-grams over tokenized sentences."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if k <= 0:
        raise ValueError(f"smoothing k must be positive, got {k}")
    counts: dict[tuple[str, ...], int] = {}
    vocabulary: set[str] = set()
    for sentence in sentences:
        for gram in _grams(tuple(sentence), order):
            counts[gram] = counts.get(gram, 0) + 1
            prefix = gram[:-1]
            counts[prefix] = counts.get(prefix, 0) + 1
            vocabulary.add(gram[-1])
    if not vocabulary:
        raise ResolverError("cannot train an n-gram model on an empty corpus")
    return NGramModel(order=order, k=k, vocab_size=len(vocabulary), counts=counts)


def ngram_score(model: NGramModel, tokens: Sequence[str]) -> float:
    """Add-k log probability of a token sequence; finite for any input."""
    denominator_k = model.k * model.vocab_size
    total = 0.0
    for gram in _grams(tuple(tokens), model.order):
        count = model.counts.get(gram, 0)
        prefix = model.counts.get(gram[:-1], 0)
        total += math.log((count + model.k) / (prefix + denominator_k))
    return total


def binary_softmax(s1: float, s2: float) -> tuple[float, float]:
    """Two-alternative softmax, shifted by the max so large scores cannot overflow."""
    shift = max(s1, s2)
    e1 = math.exp(s1 - shift)
    e2 = math.exp(s2 - shift)
    p1 = e1 / (e1 + e2)
    return p1, 1.0 - p1


def substitute_candidate(instance: ProblemInstance, which: Label) -> list[str]:
    """Tokens of the sentence with the pronoun replaced by a candidate.

    Possessive pronouns (his, hers, and her when it modifies a
    following noun) substitute the possessive form of the candidate:
    "in his prime" -> "in Jarrett's prime".
    """
    candidate = instance.candidate(which)
    replacement = list(instance.tokens[candidate.start:candidate.end])
    if _is_possessive(instance):
        replacement[-1] += "'s"
    return (list(instance.tokens[:instance.pronoun.start])
            + replacement
            + list(instance.tokens[instance.pronoun.end:]))


def _is_possessive(instance: ProblemInstance) -> bool:
    pronoun = instance.pronoun.surface.lower()
    if pronoun in ("his", "hers"):
        return True
    if pronoun != "her":
        return False
    # "her" is possessive only when it modifies a following content word:
    # "her car broke" vs. "Tom likes her".
    if instance.pronoun.end >= len(instance.tokens):
        return False
    following = instance.tokens[instance.pronoun.end]
    return following.isalpha() and following.lower() not in load_stopwords()


class NGramSubstitution:
    """Score both pronoun substitutions with an n-gram model and take the argmax.

    Always commits to a position (ties go to the first candidate), so
    coverage is total by construction.
    """

    name = "ngram"

    def __init__(self, model: NGramModel):
        self.model = model

    def resolve(self, instance: ProblemInstance) -> Prediction:
        s1 = ngram_score(self.model, substitute_candidate(instance, Label.FIRST))
        s2 = ngram_score(self.model, substitute_candidate(instance, Label.SECOND))
        p1, _ = binary_softmax(s1, s2)
        choice = Choice.FIRST if p1 >= 0.5 else Choice.SECOND
        return Prediction(instance.id, choice, score_first=p1)


# ---------------------------------------------------------------------------
# External prediction files

class ExternalPredictions:
    """Predictions produced by an out-of-process system.

    The file holds one "id<TAB>choice[<TAB>score]" line per instance,
    with choice drawn from 1|2|both|none and score, when present, the
    probability assigned to the first candidate.
    """

    name = "external"

    def __init__(self, predictions: dict[str, Prediction]):
        self._by_id = dict(predictions)

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self._by_id

    def __iter__(self) -> Iterator[Prediction]:
        return iter(self._by_id.values())

    @classmethod
    def from_file(cls, path: str) -> "ExternalPredictions":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.parse(handle, origin=path)

    @classmethod
    def parse(cls, lines: Iterable[str] | IO[str], origin: str = "<stream>") -> "ExternalPredictions":
        by_id: dict[str, Prediction] = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise AdapterProtocolError(
                    f"{origin}:{lineno}: expected id<TAB>choice[<TAB>score]")
            instance_id, token = parts[0], parts[1]
            try:
                choice = Choice(token)
            except ValueError:
                raise AdapterProtocolError(
                    f"{origin}:{lineno}: unknown choice {token!r}") from None
            score: Optional[float] = None
            if len(parts) == 3:
                try:
                    score = float(parts[2])
                except ValueError:
                    raise AdapterProtocolError(
                        f"{origin}:{lineno}: bad score {parts[2]!r}") from None
                if not math.isfinite(score):
                    raise AdapterProtocolError(
                        f"{origin}:{lineno}: score must be finite, got {parts[2]!r}")
            if instance_id in by_id:
                raise AdapterProtocolError(
                    f"{origin}:{lineno}: duplicate prediction for {instance_id!r}")
            by_id[instance_id] = Prediction(instance_id, choice, score)
        return cls(by_id)

    def resolve(self, instance: ProblemInstance) -> Prediction:
        try:
            return self._by_id[instance.id]
        except KeyError:
            raise AdapterProtocolError(
                f"no prediction for instance {instance.id!r}") from None
