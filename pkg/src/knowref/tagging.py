"""Part-of-speech tagging and noun-phrase chunking.

Three tagger providers share one interface (a ``.tag(tokens)`` method):

* :class:`LexiconTagger` - closed-class pronoun map, a bundled word
  lexicon and suffix heuristics.  Deterministic, no training, the
  pipeline default.
* :class:`PerceptronTagger` - a trainable averaged perceptron.  Same
  pronoun override applied on top of the learned weights.
* :class:`PretaggedTagger` - adapter over an existing ``word_TAG``
  stream for corpora that were tagged elsewhere.

Chunking recognizes two NP shapes over the tags:

    ProperNP  = (honorific)? NNP+
    CommonNP  = DT? JJ* (NN|NNS)+

scanning left to right for maximal non-overlapping matches.  The head
of a chunk is its last token.
"""

from __future__ import annotations

import gzip
import json
import random
import re
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional, Protocol, Sequence

from knowref.model import MentionSpan

__all__ = [
    "TAGSET",
    "PRONOUN_TAGS",
    "Chunk",
    "TaggingError",
    "LexiconTagger",
    "PerceptronTagger",
    "PretaggedTagger",
    "tag",
    "train_perceptron_tagger",
    "read_tagged_file",
    "parse_pretagged_line",
    "chunk_nps",
    "load_honorifics",
    "honorific_key",
    "Honorific",
]

# Penn-style tagset.  NNP/NN/NNS/DT/JJ/PRP/PRP$ drive the chunker; the
# rest exist so pre-tagged input does not get rejected.
TAGSET = frozenset({
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD",
    "NN", "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR",
    "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP",
    "VBZ", "WDT", "WP", "WP$", "WRB", ".", ",", ":", "``", "''", "-LRB-",
    "-RRB-", "$", "#",
})

# Closed-class pronoun map.  This overrides every tagger: a pronoun in
# this table is never tagged anything but PRP/PRP$.
PRONOUN_TAGS = {
    "he": "PRP", "him": "PRP", "she": "PRP", "her": "PRP", "hers": "PRP",
    "it": "PRP", "they": "PRP", "them": "PRP", "i": "PRP", "me": "PRP",
    "you": "PRP", "we": "PRP", "us": "PRP", "mine": "PRP", "yours": "PRP",
    "ours": "PRP", "theirs": "PRP", "himself": "PRP", "herself": "PRP",
    "itself": "PRP", "themselves": "PRP", "myself": "PRP",
    "yourself": "PRP", "ourselves": "PRP",
    "his": "PRP$", "its": "PRP$", "their": "PRP$", "my": "PRP$",
    "your": "PRP$", "our": "PRP$",
}

_PUNCT_TAGS = {
    ".": ".", "!": ".", "?": ".",
    ",": ",", ";": ":", ":": ":", "-": ":", "--": ":",
    "``": "``", "''": "''", '"': "''", "'": "''",
    "(": "-LRB-", ")": "-RRB-",
}


class TaggingError(ValueError):
    """Raised for malformed pre-tagged input or unusable tag output."""


class Tagger(Protocol):
    def tag(self, tokens: Sequence[str]) -> list[str]: ...


def tag(tokens: Sequence[str], tagger: Tagger) -> list[str]:
    """Tag a token list, enforcing alignment and tagset membership."""
    tags = tagger.tag(tokens)
    if len(tags) != len(tokens):
        raise TaggingError(f"tagger returned {len(tags)} tags for {len(tokens)} tokens")
    bad = [t for t in tags if t not in TAGSET]
    if bad:
        raise TaggingError(f"unknown tags from tagger: {sorted(set(bad))}")
    return tags


# ---------------------------------------------------------------------------
# Lexicon tagger

_DIGIT_RE = re.compile(r"\d")

_SUFFIX_TAGS = (
    ("ly", "RB"),
    ("ing", "VBG"),
    ("ed", "VBD"),
    ("tion", "NN"), ("sion", "NN"), ("ment", "NN"), ("ness", "NN"),
    ("ship", "NN"), ("ity", "NN"),
    ("ous", "JJ"), ("ful", "JJ"), ("less", "JJ"), ("ive", "JJ"),
    ("able", "JJ"), ("ible", "JJ"),
    ("est", "JJS"),
    ("s", "NNS"),
)


def _load_word_lexicon() -> dict[str, str]:
    data = resources.files("knowref.data").joinpath("word_tags.tsv").read_text("utf-8")
    lexicon: dict[str, str] = {}
    for lineno, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            word, pos = line.split("\t")
        except ValueError:
            raise TaggingError(f"word_tags.tsv line {lineno}: expected 'word<TAB>tag'")
        lexicon[word.lower()] = pos
    return lexicon


class LexiconTagger:
    """Deterministic tagger: pronoun map, word lexicon, then suffix rules.

    Mid-sentence capitalized words are proper nouns before anything else;
    sentence-initial words fall back to the lexicon so "The" stays DT.
    """

    def __init__(self, lexicon: Optional[dict[str, str]] = None):
        self.lexicon = lexicon if lexicon is not None else _load_word_lexicon()

    def tag(self, tokens: Sequence[str]) -> list[str]:
        tags = []
        for idx, token in enumerate(tokens):
            tags.append(self._tag_one(token, idx))
        return tags

    def _tag_one(self, token: str, idx: int) -> str:
        low = token.lower()
        if low in PRONOUN_TAGS:
            return PRONOUN_TAGS[low]
        if token in _PUNCT_TAGS:
            return _PUNCT_TAGS[token]
        if _DIGIT_RE.search(token):
            return "CD"
        if token[0].isupper():
            if idx > 0:
                return "NNP"
            # Sentence-initial: trust the lexicon for ordinary words,
            # otherwise assume a name.
            if low in self.lexicon:
                return self.lexicon[low]
            return "NNP"
        if low in self.lexicon:
            return self.lexicon[low]
        for suffix, pos in _SUFFIX_TAGS:
            if low.endswith(suffix) and len(low) > len(suffix) + 1:
                return pos
        return "NN"


# ---------------------------------------------------------------------------
# Averaged perceptron tagger

_MODEL_MAGIC = b"KRTAGGER:1\n"


def _normalize(word: str) -> str:
    if _DIGIT_RE.search(word):
        return "!DIGITS"
    return word.lower()


def _features(i: int, word: str, context: list[str], prev: str, prev2: str) -> list[str]:
    # context is padded with two start and two end markers.
    w = context[i + 2]
    feats = [
        "bias",
        "w=" + w,
        "suf3=" + w[-3:],
        "suf2=" + w[-2:],
        "pre1=" + w[:1],
        "shape=" + ("X" if word[:1].isupper() else "x") + ("0" if i == 0 else "i"),
        "t-1=" + prev,
        "t-2=" + prev2,
        "t-1w=" + prev + "+" + w,
        "w-1=" + context[i + 1],
        "w-2=" + context[i],
        "w+1=" + context[i + 3],
        "w+2=" + context[i + 4],
    ]
    return feats


class PerceptronTagger:
    """Averaged perceptron over local features, pronoun map on top."""

    def __init__(self, weights: dict[str, dict[str, float]], classes: Sequence[str]):
        self.weights = weights
        self.classes = sorted(classes)

    def tag(self, tokens: Sequence[str]) -> list[str]:
        context = ["-S2-", "-S1-"] + [_normalize(t) for t in tokens] + ["-E1-", "-E2-"]
        prev, prev2 = "-S1-", "-S2-"
        tags = []
        for i, token in enumerate(tokens):
            low = token.lower()
            if low in PRONOUN_TAGS:
                chosen = PRONOUN_TAGS[low]
            elif token in _PUNCT_TAGS:
                chosen = _PUNCT_TAGS[token]
            else:
                chosen = self._predict(_features(i, token, context, prev, prev2))
            tags.append(chosen)
            prev2, prev = prev, chosen
        return tags

    def _predict(self, feats: list[str]) -> str:
        scores: dict[str, float] = defaultdict(float)
        for feat in feats:
            row = self.weights.get(feat)
            if row is None:
                continue
            for cls, weight in row.items():
                scores[cls] += weight
        # Ties break alphabetically so prediction is deterministic.
        return max(self.classes, key=lambda c: (scores[c], c))

    def save(self, path: str) -> None:
        """Versioned binary: magic header + gzipped JSON with the tagset."""
        payload = {
            "tagset": sorted(TAGSET),
            "classes": self.classes,
            "weights": self.weights,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        with open(path, "wb") as handle:
            handle.write(_MODEL_MAGIC)
            # filename and mtime pinned so identical models are
            # byte-identical on disk regardless of where they are written
            with gzip.GzipFile(filename="", fileobj=handle, mode="wb", mtime=0) as gz:
                gz.write(blob)

    @staticmethod
    def load(path: str) -> "PerceptronTagger":
        with open(path, "rb") as handle:
            magic = handle.read(len(_MODEL_MAGIC))
            if magic != _MODEL_MAGIC:
                raise TaggingError(f"{path}: not a tagger model (bad magic {magic!r})")
            with gzip.GzipFile(fileobj=handle, mode="rb") as gz:
                payload = json.loads(gz.read().decode("utf-8"))
        unknown = set(payload["classes"]) - set(payload["tagset"])
        if unknown:
            raise TaggingError(f"{path}: classes outside embedded tagset: {sorted(unknown)}")
        return PerceptronTagger(payload["weights"], payload["classes"])


class _TrainingState:
    """Weights plus the accumulators needed for averaging."""

    def __init__(self):
        self.weights: dict[str, dict[str, float]] = defaultdict(dict)
        self._totals: dict[tuple[str, str], float] = defaultdict(float)
        self._stamps: dict[tuple[str, str], int] = defaultdict(int)
        self.updates = 0

    def update(self, truth: str, guess: str, feats: list[str]) -> None:
        self.updates += 1
        if truth == guess:
            return
        for feat in feats:
            self._bump(feat, truth, 1.0)
            self._bump(feat, guess, -1.0)

    def _bump(self, feat: str, cls: str, delta: float) -> None:
        key = (feat, cls)
        current = self.weights[feat].get(cls, 0.0)
        self._totals[key] += (self.updates - self._stamps[key]) * current
        self._stamps[key] = self.updates
        self.weights[feat][cls] = current + delta

    def averaged(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for feat, row in self.weights.items():
            averaged_row = {}
            for cls, weight in row.items():
                key = (feat, cls)
                total = self._totals[key] + (self.updates - self._stamps[key]) * weight
                value = round(total / self.updates, 6) if self.updates else 0.0
                if value:
                    averaged_row[cls] = value
            if averaged_row:
                out[feat] = averaged_row
        return out


def train_perceptron_tagger(
    sentences: Sequence[Sequence[tuple[str, str]]],
    seed: int = 0,
    epochs: int = 5,
) -> PerceptronTagger:
    """Train on (word, tag) sentences.  Same data and seed, same model."""
    for sentence in sentences:
        for _, pos in sentence:
            if pos not in TAGSET:
                raise TaggingError(f"training tag {pos!r} outside tagset")

    classes = sorted({pos for sentence in sentences for _, pos in sentence})
    state = _TrainingState()
    rng = random.Random(seed)
    order = list(range(len(sentences)))

    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            sentence = sentences[idx]
            tokens = [w for w, _ in sentence]
            context = ["-S2-", "-S1-"] + [_normalize(t) for t in tokens] + ["-E1-", "-E2-"]
            prev, prev2 = "-S1-", "-S2-"
            for i, (token, truth) in enumerate(sentence):
                low = token.lower()
                if low in PRONOUN_TAGS or token in _PUNCT_TAGS:
                    guess = PRONOUN_TAGS.get(low) or _PUNCT_TAGS[token]
                    state.updates += 1
                else:
                    feats = _features(i, token, context, prev, prev2)
                    scores: dict[str, float] = defaultdict(float)
                    for feat in feats:
                        row = state.weights.get(feat)
                        if row:
                            for cls, weight in row.items():
                                scores[cls] += weight
                    guess = max(classes, key=lambda c: (scores[c], c))
                    state.update(truth, guess, feats)
                prev2, prev = prev, guess
    return PerceptronTagger(state.averaged(), classes)


# ---------------------------------------------------------------------------
# Pre-tagged adapter

_PRETAG_RE = re.compile(r"^(?P<word>.+)_(?P<tag>[A-Z$.,:'`()-]+)$")


def parse_pretagged_line(line: str) -> list[tuple[str, str]]:
    """Parse one 'word_TAG word_TAG ...' line."""
    pairs = []
    for piece in line.split():
        match = _PRETAG_RE.match(piece)
        if not match:
            raise TaggingError(f"malformed pre-tagged token {piece!r}")
        word, pos = match.group("word"), match.group("tag")
        if pos not in TAGSET:
            raise TaggingError(f"pre-tagged token {piece!r} carries unknown tag {pos!r}")
        pairs.append((word, pos))
    return pairs


def read_tagged_file(path: str) -> list[list[tuple[str, str]]]:
    sentences = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            sentences.append(parse_pretagged_line(line))
    return sentences


class PretaggedTagger:
    """Adapter over externally tagged sentences, keyed by token sequence."""

    def __init__(self, sentences: Iterable[Sequence[tuple[str, str]]]):
        self._by_tokens: dict[tuple[str, ...], list[str]] = {}
        for sentence in sentences:
            tokens = tuple(w for w, _ in sentence)
            self._by_tokens[tokens] = [t for _, t in sentence]

    @staticmethod
    def from_file(path: str) -> "PretaggedTagger":
        return PretaggedTagger(read_tagged_file(path))

    def tag(self, tokens: Sequence[str]) -> list[str]:
        try:
            return list(self._by_tokens[tuple(tokens)])
        except KeyError:
            preview = " ".join(tokens[:8])
            raise TaggingError(f"no pre-tagged entry for sentence starting {preview!r}") from None


# ---------------------------------------------------------------------------
# Honorifics

@dataclass(frozen=True)
class Honorific:
    """A title that can precede a proper name.

    ``gender`` is "F", "M" or None; ``counterpart`` is the opposite-gender
    title used when a name is swapped for one of the other gender.
    """

    surface: str
    gender: Optional[str]
    counterpart: Optional[str]


def honorific_key(token: str) -> str:
    return token.rstrip(".").lower()


def load_honorifics() -> dict[str, Honorific]:
    data = resources.files("knowref.data").joinpath("honorifics.tsv").read_text("utf-8")
    table: dict[str, Honorific] = {}
    for line in data.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        surface, gender, counterpart = line.split("\t")
        table[honorific_key(surface)] = Honorific(
            surface=surface,
            gender=gender if gender in ("F", "M") else None,
            counterpart=counterpart if counterpart != "-" else None,
        )
    return table


# ---------------------------------------------------------------------------
# NP chunking

@dataclass(frozen=True)
class Chunk:
    """A noun-phrase chunk; the head is always the last token."""

    span: MentionSpan
    kind: str  # "ProperNP" | "CommonNP"
    head: str
    head_index: int


_COMMON_HEAD_TAGS = {"NN", "NNS"}


def chunk_nps(
    tokens: Sequence[str],
    tags: Sequence[str],
    honorifics: Optional[dict[str, Honorific]] = None,
) -> list[Chunk]:
    """Maximal non-overlapping NP chunks, left to right.

    ProperNP = (honorific)? NNP+ and CommonNP = DT? JJ* (NN|NNS)+.
    """
    if len(tokens) != len(tags):
        raise TaggingError(f"{len(tokens)} tokens vs {len(tags)} tags")
    if honorifics is None:
        honorifics = load_honorifics()

    chunks: list[Chunk] = []
    n = len(tokens)
    i = 0
    while i < n:
        # Honorific immediately followed by a proper noun opens a ProperNP
        # even when the title itself was not tagged NNP.
        if (
            tokens[i][:1].isupper()
            and honorific_key(tokens[i]) in honorifics
            and i + 1 < n
            and tags[i + 1] in ("NNP", "NNPS")
        ):
            j = i + 1
            while j < n and tags[j] in ("NNP", "NNPS"):
                j += 1
            chunks.append(_chunk(tokens, i, j, "ProperNP"))
            i = j
            continue
        if tags[i] in ("NNP", "NNPS"):
            j = i
            while j < n and tags[j] in ("NNP", "NNPS"):
                j += 1
            chunks.append(_chunk(tokens, i, j, "ProperNP"))
            i = j
            continue
        if tags[i] == "DT" or tags[i] == "JJ" or tags[i] in _COMMON_HEAD_TAGS:
            j = i
            if tags[j] == "DT":
                j += 1
            while j < n and tags[j] == "JJ":
                j += 1
            k = j
            while k < n and tags[k] in _COMMON_HEAD_TAGS:
                k += 1
            if k > j:
                chunks.append(_chunk(tokens, i, k, "CommonNP"))
                i = k
                continue
        i += 1
    return chunks


def _chunk(tokens: Sequence[str], start: int, end: int, kind: str) -> Chunk:
    return Chunk(
        span=MentionSpan(start, end, " ".join(tokens[start:end])),
        kind=kind,
        head=tokens[end - 1],
        head_index=end - 1,
    )
