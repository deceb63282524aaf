"""Metrics: outcome rates, task-specific accuracy, consistency, agreement.

Evaluation classifies each prediction against the stored label as
Correct, Incorrect, Both-antecedents or No-decision; task-specific
accuracy then discards the last two outcomes.  Consistency compares a
resolver's decisions across original/switched instance pairs: a pair is
consistent when the predicted surface name changes between the two,
which for a genuine switched pair is the same thing as the predicted
position staying fixed.  Annotation agreement uses Fleiss' kappa over a
fixed-rater-count matrix with the four-way label alphabet
first/second/neither/unclear.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence, Union

from .model import Choice, Label, Prediction, ProblemInstance, PronounGender
from .switching import SwitchedPair

__all__ = [
    "AnnotationLabel",
    "CATEGORIES",
    "AgreementMatrix",
    "EvalReport",
    "ConsistencyReport",
    "CorpusStats",
    "QCReport",
    "MajorityReport",
    "UnknownInstanceId",
    "MissingPrediction",
    "MisalignedPair",
    "EmptyCorpus",
    "EmptySample",
    "EmptyMatrix",
    "InconsistentRaterCount",
    "task_specific_accuracy",
    "evaluate",
    "consistency",
    "corpus_stats",
    "fleiss_kappa",
    "qc_report",
    "majority_accuracy",
]

logger = logging.getLogger(__name__)


class UnknownInstanceId(ValueError):
    """A prediction or annotation references an id that is not in the corpus."""


class MissingPrediction(ValueError):
    """Raised under strict evaluation when a corpus instance has no prediction."""


class MisalignedPair(ValueError):
    """Raised when two instances do not form an original/switched pair."""


class EmptyCorpus(ValueError):
    """Raised when a metric over a corpus receives no instances."""


class EmptySample(ValueError):
    """Raised when a quality-control report receives no annotations."""


class EmptyMatrix(ValueError):
    """Raised when an agreement metric receives no items."""


class InconsistentRaterCount(ValueError):
    """Raised when agreement matrix rows do not share one rater count."""


class AnnotationLabel(str, Enum):
    """What one annotator said about one instance.

    The values are the wire tokens annotation clients submit: the two
    antecedent answers reuse the "1"/"2" convention of ``Choice``.
    """

    FIRST = "1"
    SECOND = "2"
    NEITHER = "neither"
    UNCLEAR = "unclear"

    @classmethod
    def from_label(cls, label: Label) -> "AnnotationLabel":
        return cls.FIRST if label is Label.FIRST else cls.SECOND

    def to_label(self) -> Optional[Label]:
        if self is AnnotationLabel.FIRST:
            return Label.FIRST
        if self is AnnotationLabel.SECOND:
            return Label.SECOND
        return None


CATEGORIES: tuple[AnnotationLabel, ...] = (
    AnnotationLabel.FIRST,
    AnnotationLabel.SECOND,
    AnnotationLabel.NEITHER,
    AnnotationLabel.UNCLEAR,
)


def _as_annotation(value: Union[AnnotationLabel, Label, str]) -> AnnotationLabel:
    if isinstance(value, AnnotationLabel):
        return value
    if isinstance(value, Label):
        return AnnotationLabel.from_label(value)
    return AnnotationLabel(value)


@dataclass(frozen=True)
class AgreementMatrix:
    """Per-item counts of annotator choices, one column per category."""

    rows: tuple[tuple[int, ...], ...]
    categories: tuple[AnnotationLabel, ...] = CATEGORIES

    def __post_init__(self) -> None:
        width = len(self.categories)
        for row in self.rows:
            if len(row) != width:
                raise ValueError(
                    f"row {row!r} does not match {width} categories")
            if any(cell < 0 for cell in row):
                raise ValueError(f"negative count in row {row!r}")

    @classmethod
    def from_labels(cls, items: Iterable[Sequence[Union[AnnotationLabel, Label, str]]]) -> "AgreementMatrix":
        """Count each item's annotations into the fixed category order."""
        rows = []
        for item in items:
            counts = [0] * len(CATEGORIES)
            for value in item:
                counts[CATEGORIES.index(_as_annotation(value))] += 1
            rows.append(tuple(counts))
        return cls(tuple(rows))

    def __len__(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# Outcome breakdown and task-specific accuracy

def task_specific_accuracy(correct: float, incorrect: float) -> float:
    """correct/(correct+incorrect); raises when there are no decisions."""
    denominator = correct + incorrect
    if denominator == 0:
        raise ValueError("no decisions: task-specific accuracy is undefined")
    return correct / denominator


@dataclass(frozen=True)
class EvalReport:
    """Outcome counts for one resolver over one labeled corpus.

    ``missing`` counts corpus instances that had no prediction; they
    are already included in ``none``.
    """

    n: int
    both: int
    none: int
    incorrect: int
    correct: int
    missing: int = 0

    @property
    def both_rate(self) -> float:
        return self.both / self.n

    @property
    def none_rate(self) -> float:
        return self.none / self.n

    @property
    def incorrect_rate(self) -> float:
        return self.incorrect / self.n

    @property
    def correct_rate(self) -> float:
        return self.correct / self.n

    @property
    def task_specific_accuracy(self) -> Optional[float]:
        if self.correct + self.incorrect == 0:
            return None
        return task_specific_accuracy(self.correct, self.incorrect)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "counts": {
                "both": self.both,
                "none": self.none,
                "incorrect": self.incorrect,
                "correct": self.correct,
            },
            "rates": {
                "both": self.both_rate,
                "none": self.none_rate,
                "incorrect": self.incorrect_rate,
                "correct": self.correct_rate,
            },
            "task_specific_accuracy": self.task_specific_accuracy,
            "missing_predictions": self.missing,
        }


def evaluate(
    corpus: Iterable[ProblemInstance],
    predictions: Iterable[Prediction],
    *,
    strict: bool = False,
) -> EvalReport:
    """Classify predictions against labels and fold into an EvalReport.

    Instances without a prediction score No-decision (logged), unless
    ``strict`` is set, in which case they raise MissingPrediction.
    """
    labels: dict[str, Label] = {}
    for instance in corpus:
        if instance.id in labels:
            raise ValueError(f"duplicate corpus instance {instance.id!r}")
        if instance.label is None:
            raise ValueError(f"instance {instance.id!r} has no label")
        labels[instance.id] = instance.label
    if not labels:
        raise EmptyCorpus("cannot evaluate an empty corpus")

    both = none = incorrect = correct = 0
    seen: set[str] = set()
    for prediction in predictions:
        if prediction.instance_id not in labels:
            raise UnknownInstanceId(
                f"prediction for unknown instance {prediction.instance_id!r}")
        if prediction.instance_id in seen:
            raise ValueError(f"duplicate prediction for {prediction.instance_id!r}")
        seen.add(prediction.instance_id)
        if prediction.choice is Choice.BOTH:
            both += 1
        elif prediction.choice is Choice.NONE:
            none += 1
        elif Label(int(prediction.choice.value)) is labels[prediction.instance_id]:
            correct += 1
        else:
            incorrect += 1

    missing = len(labels) - len(seen)
    if missing:
        absent = sorted(set(labels) - seen)
        if strict:
            raise MissingPrediction(
                f"{missing} instances lack predictions, e.g. {absent[0]!r}")
        logger.warning("%d instances lack predictions (scored as no-decision), e.g. %s",
                       missing, absent[0])
        none += missing

    return EvalReport(n=len(labels), both=both, none=none,
                      incorrect=incorrect, correct=correct, missing=missing)


# ---------------------------------------------------------------------------
# Consistency across switched pairs

@dataclass(frozen=True)
class ConsistencyReport:
    """Decision changes across original/switched pairs.

    ``excluded`` counts pairs where either side was Both, None or
    unpredicted; they do not enter the denominator.
    """

    pairs: int
    counted: int
    consistent: int
    excluded: int

    @property
    def consistency(self) -> Optional[float]:
        if self.counted == 0:
            return None
        return self.consistent / self.counted

    def to_json(self) -> dict:
        return {
            "pairs": self.pairs,
            "counted": self.counted,
            "consistent": self.consistent,
            "excluded": self.excluded,
            "consistency": self.consistency,
        }


PairLike = Union[SwitchedPair, tuple[ProblemInstance, ProblemInstance]]


def consistency(
    pairs: Iterable[PairLike],
    predictions: Union[Mapping[str, Prediction], Iterable[Prediction]],
    *,
    strict: bool = False,
) -> ConsistencyReport:
    """Fraction of decision-pairs whose predicted surface changes.

    Equivalently, the fraction whose predicted position stays fixed;
    both formulations are computed and cross-checked on every pair.
    """
    if not isinstance(predictions, Mapping):
        by_id: dict[str, Prediction] = {}
        for prediction in predictions:
            if prediction.instance_id in by_id:
                raise ValueError(f"duplicate prediction for {prediction.instance_id!r}")
            by_id[prediction.instance_id] = prediction
        predictions = by_id

    total = counted = consistent = excluded = 0
    for pair in pairs:
        original, switched = (pair.original, pair.switched) \
            if isinstance(pair, SwitchedPair) else pair
        if not switched.switched or switched.derived_from != original.id:
            raise MisalignedPair(
                f"{switched.id!r} is not the switched form of {original.id!r}")
        if (switched.c1.surface != original.c2.surface
                or switched.c2.surface != original.c1.surface):
            raise MisalignedPair(
                f"{original.id!r}: candidate surfaces are not exchanged in {switched.id!r}")
        total += 1

        first = predictions.get(original.id)
        second = predictions.get(switched.id)
        if first is None or second is None:
            if strict:
                missing = original.id if first is None else switched.id
                raise MissingPrediction(f"no prediction for {missing!r}")
            logger.warning("pair %s/%s lacks a prediction; excluded",
                           original.id, switched.id)
            excluded += 1
            continue
        decisions = (Choice.FIRST, Choice.SECOND)
        if first.choice not in decisions or second.choice not in decisions:
            excluded += 1
            continue

        counted += 1
        position_same = first.choice is second.choice
        surface_changed = (
            original.candidate(Label(int(first.choice.value))).surface
            != switched.candidate(Label(int(second.choice.value))).surface
        )
        if surface_changed != position_same:
            raise MisalignedPair(
                f"{original.id!r}: surface and position views disagree; "
                "the pair's candidates are not a clean exchange")
        if position_same:
            consistent += 1

    return ConsistencyReport(pairs=total, counted=counted,
                             consistent=consistent, excluded=excluded)


# ---------------------------------------------------------------------------
# Corpus characteristics

@dataclass(frozen=True)
class CorpusStats:
    """Pronoun-gender and label distribution of a labeled corpus."""

    n: int
    masculine: int
    feminine: int
    first: int
    second: int

    @property
    def masculine_rate(self) -> float:
        return self.masculine / self.n

    @property
    def feminine_rate(self) -> float:
        return self.feminine / self.n

    @property
    def first_rate(self) -> float:
        return self.first / self.n

    @property
    def second_rate(self) -> float:
        return self.second / self.n

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "masculine": self.masculine,
            "feminine": self.feminine,
            "first": self.first,
            "second": self.second,
            "masculine_rate": self.masculine_rate,
            "feminine_rate": self.feminine_rate,
            "first_rate": self.first_rate,
            "second_rate": self.second_rate,
        }


def corpus_stats(corpus: Iterable[ProblemInstance]) -> CorpusStats:
    """Count pronoun genders and correct-label positions."""
    n = masculine = first = 0
    for instance in corpus:
        if instance.label is None:
            raise ValueError(f"instance {instance.id!r} has no label")
        n += 1
        masculine += instance.pronoun_gender is PronounGender.MASCULINE
        first += instance.label is Label.FIRST
    if n == 0:
        raise EmptyCorpus("cannot compute statistics of an empty corpus")
    return CorpusStats(n=n, masculine=masculine, feminine=n - masculine,
                       first=first, second=n - first)


# ---------------------------------------------------------------------------
# Annotator agreement

def _checked_rows(matrix: Union[AgreementMatrix, Sequence[Sequence[int]]]) -> tuple[tuple[tuple[int, ...], ...], int]:
    rows = matrix.rows if isinstance(matrix, AgreementMatrix) \
        else tuple(tuple(row) for row in matrix)
    if not rows:
        raise EmptyMatrix("agreement matrix has no items")
    raters = sum(rows[0])
    for row in rows:
        if sum(row) != raters:
            raise InconsistentRaterCount(
                f"row {row!r} sums to {sum(row)}, expected {raters}")
    if raters < 2:
        raise InconsistentRaterCount(f"need at least 2 raters per item, got {raters}")
    return rows, raters


def fleiss_kappa(matrix: Union[AgreementMatrix, Sequence[Sequence[int]]]) -> float:
    """Chance-corrected agreement over a fixed-rater-count matrix."""
    rows, raters = _checked_rows(matrix)
    n = len(rows)
    observed = sum(
        sum(cell * (cell - 1) for cell in row) for row in rows
    ) / (n * raters * (raters - 1))
    width = len(rows[0])
    shares = [sum(row[j] for row in rows) / (n * raters) for j in range(width)]
    expected = sum(share ** 2 for share in shares)
    if 1.0 - expected == 0.0:
        # all mass in one category, which forces perfect agreement
        return 1.0
    return (observed - expected) / (1.0 - expected)


@dataclass(frozen=True)
class MajorityReport:
    """Items whose modal annotation matched gold; ties score as misses."""

    n: int
    correct: int
    ties: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.n

    def to_json(self) -> dict:
        return {"n": self.n, "correct": self.correct, "ties": self.ties,
                "accuracy": self.accuracy}


def majority_accuracy(
    matrix: AgreementMatrix,
    gold: Sequence[Union[AnnotationLabel, Label, str]],
) -> MajorityReport:
    """Fraction of items whose modal annotation equals the gold label."""
    if not matrix.rows:
        raise EmptyMatrix("agreement matrix has no items")
    if len(gold) != len(matrix.rows):
        raise ValueError(
            f"{len(gold)} gold labels for {len(matrix.rows)} matrix rows")
    correct = ties = 0
    for row, answer in zip(matrix.rows, gold):
        top = max(row)
        winners = [j for j, cell in enumerate(row) if cell == top]
        if len(winners) > 1:
            ties += 1
            continue
        if matrix.categories[winners[0]] is _as_annotation(answer):
            correct += 1
    return MajorityReport(n=len(matrix.rows), correct=correct, ties=ties)


# ---------------------------------------------------------------------------
# Heuristic-label quality control

@dataclass(frozen=True)
class QCReport:
    """How annotators judged a sample of heuristically labeled instances."""

    n: int
    correct: int
    incorrect: int
    unresolvable: int

    @property
    def correct_rate(self) -> float:
        return self.correct / self.n

    @property
    def incorrect_rate(self) -> float:
        return self.incorrect / self.n

    @property
    def unresolvable_rate(self) -> float:
        return self.unresolvable / self.n

    def to_json(self) -> dict:
        return {"n": self.n,
                "correct_rate": self.correct_rate,
                "incorrect_rate": self.incorrect_rate,
                "unresolvable_rate": self.unresolvable_rate}


def qc_report(
    heuristic_labels: Mapping[str, Label],
    annotations: Mapping[str, Union[AnnotationLabel, Label, str]],
) -> QCReport:
    """Score annotator verdicts against heuristic labels.

    Neither means the annotator found no valid antecedent
    (unresolvable); any other non-matching verdict, Unclear included,
    counts the heuristic label as incorrect.
    """
    if not annotations:
        raise EmptySample("no annotations to score")
    correct = incorrect = unresolvable = 0
    for instance_id, verdict in annotations.items():
        if instance_id not in heuristic_labels:
            raise UnknownInstanceId(f"annotation for unknown instance {instance_id!r}")
        annotation = _as_annotation(verdict)
        if annotation is AnnotationLabel.NEITHER:
            unresolvable += 1
        elif annotation is AnnotationLabel.from_label(heuristic_labels[instance_id]):
            correct += 1
        else:
            incorrect += 1
    return QCReport(n=len(annotations), correct=correct,
                    incorrect=incorrect, unresolvable=unresolvable)
