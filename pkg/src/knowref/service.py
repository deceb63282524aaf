"""Annotation service: serve candidates, persist labels, aggregate agreement.

Annotators fetch instances one at a time, answer First, Second, Neither
or Unclear, and the service accepts an instance once enough annotators
(5 of 6 by default) agree on a single antecedent.  Labels land in an
append-only JSONL store that is flushed and fsynced before the request
is acknowledged, so an acked label survives a crash; effective state is
a replay of the store with last-write-wins per (candidate, annotator),
which keeps the full audit trail on disk.

The HTTP surface is five JSON endpoints:

    GET  /api/next?annotator=ID   next unlabeled candidate for this annotator
    POST /api/label               {candidate_id, annotator_id, label}
    GET  /api/progress            store-wide counts
    GET  /api/agreement           Fleiss' kappa over fully annotated items
    GET  /api/export              accepted instances + agreement matrix

Served corpora are expected to be neutralized (gender giveaways already
removed), so annotators face the genuinely ambiguous task.
"""

import dataclasses
import json
import logging
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Union

from .evaluation import (
    CATEGORIES,
    AgreementMatrix,
    AnnotationLabel,
    EmptyMatrix,
    fleiss_kappa,
)
from .labeling import mark_provenance
from .model import (
    Label,
    ParseError,
    ProblemInstance,
    read_corpus,
    serialize_instance,
)

__all__ = [
    "UnknownCandidate",
    "UnknownAnnotator",
    "MalformedLabel",
    "AnnotationRecord",
    "AggregationPolicy",
    "AggregationStatus",
    "RejectionReason",
    "Aggregation",
    "AnnotationStore",
    "load_corpus_file",
    "create_app",
]

logger = logging.getLogger(__name__)


class UnknownCandidate(ValueError):
    """The referenced candidate id is not in the served corpus."""


class UnknownAnnotator(ValueError):
    """The annotator id is empty or not on the configured allow-list."""


class MalformedLabel(ValueError):
    """The submitted label is outside 1/2/neither/unclear."""


@dataclass(frozen=True)
class AnnotationRecord:
    """One stored labeling event."""

    candidate_id: str
    annotator_id: str
    label: AnnotationLabel
    timestamp: float

    def to_json(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "annotator_id": self.annotator_id,
            "label": self.label.value,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_json(obj: object, lineno: Optional[int] = None) -> "AnnotationRecord":
        if not isinstance(obj, dict):
            raise ParseError("annotation record must be an object", line=lineno)
        try:
            record = AnnotationRecord(
                candidate_id=obj["candidate_id"],
                annotator_id=obj["annotator_id"],
                label=AnnotationLabel(obj["label"]),
                timestamp=float(obj["timestamp"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"bad annotation record: {exc}", line=lineno) from None
        if not isinstance(record.candidate_id, str) or not isinstance(record.annotator_id, str):
            raise ParseError("candidate_id and annotator_id must be strings", line=lineno)
        return record


@dataclass(frozen=True)
class AggregationPolicy:
    """How many annotators see each item and how many must agree."""

    annotators_per_item: int = 6
    agreement_threshold: int = 5

    def __post_init__(self) -> None:
        if not 1 <= self.agreement_threshold <= self.annotators_per_item:
            raise ValueError(
                f"threshold {self.agreement_threshold} outside "
                f"[1, {self.annotators_per_item}]")


class AggregationStatus(str, Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    PENDING = "pending"


class RejectionReason(str, Enum):
    INSUFFICIENT_AGREEMENT = "InsufficientAgreement"
    NOT_AN_ANTECEDENT = "NotAnAntecedent"


@dataclass(frozen=True)
class Aggregation:
    """Outcome of the agreement rule for one candidate."""

    status: AggregationStatus
    label: Optional[Label] = None
    reason: Optional[RejectionReason] = None


def load_corpus_file(path: str) -> dict[str, ProblemInstance]:
    """Corpus JSONL as an id-keyed map; duplicate ids are an error."""
    corpus: dict[str, ProblemInstance] = {}
    for instance in read_corpus(path):
        if instance.id in corpus:
            raise ValueError(f"{path}: duplicate instance id {instance.id!r}")
        corpus[instance.id] = instance
    return corpus


class AnnotationStore:
    """Corpus plus an append-only label store and its effective state.

    A ``tokens`` allow-list restricts who may annotate; without one any
    non-empty annotator id registers itself on first use.
    """

    def __init__(
        self,
        corpus: Union[Mapping[str, ProblemInstance], Iterable[ProblemInstance]],
        store_path: str,
        tokens: Optional[Iterable[str]] = None,
    ):
        if isinstance(corpus, Mapping):
            self._corpus = dict(corpus)
        else:
            self._corpus = {}
            for instance in corpus:
                if instance.id in self._corpus:
                    raise ValueError(f"duplicate instance id {instance.id!r}")
                self._corpus[instance.id] = instance
        self._tokens = frozenset(tokens) if tokens is not None else None
        self._effective: dict[tuple[str, str], AnnotationRecord] = {}
        self._events = 0
        self._lock = threading.Lock()
        self._path = store_path
        self._replay()
        self._handle = open(store_path, "a", encoding="utf-8")

    # -- persistence -------------------------------------------------

    def _replay(self) -> None:
        if not os.path.exists(self._path):
            return
        with open(self._path, "r", encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        last = len(lines)
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = AnnotationRecord.from_json(json.loads(line), lineno=lineno)
            except (json.JSONDecodeError, ParseError):
                # a torn final line is an unacknowledged write; anything
                # earlier means real corruption
                if lineno == last:
                    logger.warning("%s:%d: ignoring torn trailing record", self._path, lineno)
                    continue
                raise ParseError(f"{self._path}: corrupt annotation record", line=lineno)
            self._apply(record)

    def _apply(self, record: AnnotationRecord) -> None:
        self._effective[(record.candidate_id, record.annotator_id)] = record
        self._events += 1

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "AnnotationStore":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    # -- labeling ----------------------------------------------------

    def check_annotator(self, annotator_id: str) -> None:
        if not annotator_id:
            raise UnknownAnnotator("annotator id must be non-empty")
        if self._tokens is not None and annotator_id not in self._tokens:
            raise UnknownAnnotator(f"annotator {annotator_id!r} is not on the allow-list")

    def submit(
        self,
        candidate_id: str,
        annotator_id: str,
        label: Union[AnnotationLabel, str],
    ) -> AnnotationRecord:
        """Persist one label durably, replacing this annotator's previous one."""
        self.check_annotator(annotator_id)
        if candidate_id not in self._corpus:
            raise UnknownCandidate(f"unknown candidate {candidate_id!r}")
        try:
            label = AnnotationLabel(label)
        except ValueError:
            raise MalformedLabel(f"label must be one of "
                                 f"{[c.value for c in CATEGORIES]}, got {label!r}") from None
        record = AnnotationRecord(candidate_id, annotator_id, label, time.time())
        with self._lock:
            self._handle.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
            self._handle.flush()
            os.fsync(self._handle.fileno())
            self._apply(record)
        return record

    def labels_for(self, candidate_id: str) -> list[AnnotationLabel]:
        """Effective labels for one candidate, ordered by annotator id."""
        if candidate_id not in self._corpus:
            raise UnknownCandidate(f"unknown candidate {candidate_id!r}")
        return [record.label
                for (cid, _), record in sorted(self._effective.items())
                if cid == candidate_id]

    def _label_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(self._corpus, 0)
        for candidate_id, _ in self._effective:
            counts[candidate_id] += 1
        return counts

    def next_candidate(self, annotator_id: str) -> Optional[ProblemInstance]:
        """Least-labeled candidate this annotator has not seen, if any."""
        self.check_annotator(annotator_id)
        counts = self._label_counts()
        pending = [cid for cid in self._corpus
                   if (cid, annotator_id) not in self._effective]
        if not pending:
            return None
        return self._corpus[min(pending, key=lambda cid: (counts[cid], cid))]

    def remaining_for(self, annotator_id: str) -> int:
        """How many candidates this annotator has not labeled yet."""
        self.check_annotator(annotator_id)
        return sum(1 for cid in self._corpus
                   if (cid, annotator_id) not in self._effective)

    # -- aggregation -------------------------------------------------

    def aggregate(self, candidate_id: str, policy: AggregationPolicy) -> Aggregation:
        """Apply the agreement rule to one candidate's effective labels."""
        labels = self.labels_for(candidate_id)
        if len(labels) < policy.annotators_per_item:
            return Aggregation(AggregationStatus.PENDING)
        counts = Counter(labels)
        reaching = [category for category in CATEGORIES
                    if counts[category] >= policy.agreement_threshold]
        if not reaching:
            return Aggregation(AggregationStatus.REJECTED,
                               reason=RejectionReason.INSUFFICIENT_AGREEMENT)
        winner = max(reaching, key=lambda category: counts[category])
        if winner in (AnnotationLabel.NEITHER, AnnotationLabel.UNCLEAR):
            return Aggregation(AggregationStatus.REJECTED,
                               reason=RejectionReason.NOT_AN_ANTECEDENT)
        return Aggregation(AggregationStatus.ACCEPTED, label=winner.to_label())

    def aggregate_all(self, policy: AggregationPolicy) -> dict[str, Aggregation]:
        return {cid: self.aggregate(cid, policy) for cid in sorted(self._corpus)}

    def agreement_matrix(self, policy: AggregationPolicy) -> AgreementMatrix:
        """Counts over candidates with exactly the policy's rater count."""
        rows = []
        for candidate_id in sorted(self._corpus):
            labels = self.labels_for(candidate_id)
            if len(labels) != policy.annotators_per_item:
                continue
            counts = Counter(labels)
            rows.append(tuple(counts[category] for category in CATEGORIES))
        return AgreementMatrix(tuple(rows))

    def agreement(self, policy: AggregationPolicy) -> tuple[Optional[float], int]:
        """Fleiss' kappa over fully annotated items, None before any exist."""
        matrix = self.agreement_matrix(policy)
        try:
            return fleiss_kappa(matrix), len(matrix)
        except EmptyMatrix:
            return None, 0

    def export(self, policy: AggregationPolicy) -> tuple[list[ProblemInstance], AgreementMatrix]:
        """Accepted instances carrying their majority label, plus the matrix."""
        accepted = []
        for candidate_id, outcome in self.aggregate_all(policy).items():
            if outcome.status is not AggregationStatus.ACCEPTED:
                continue
            instance = self._corpus[candidate_id].with_label(outcome.label)
            instance = dataclasses.replace(
                instance, source=mark_provenance(instance.source, "annotated"))
            accepted.append(instance)
        return accepted, self.agreement_matrix(policy)

    def progress(self, policy: AggregationPolicy) -> dict:
        per_annotator: Counter = Counter()
        for _, annotator_id in self._effective:
            per_annotator[annotator_id] += 1
        statuses = Counter(outcome.status for outcome in
                           self.aggregate_all(policy).values())
        return {
            "candidates": len(self._corpus),
            "labels": len(self._effective),
            "events": self._events,
            "per_annotator": dict(sorted(per_annotator.items())),
            "accepted": statuses[AggregationStatus.ACCEPTED],
            "rejected": statuses[AggregationStatus.REJECTED],
            "pending": statuses[AggregationStatus.PENDING],
        }


# ---------------------------------------------------------------------------
# HTTP layer

def _instance_payload(instance: ProblemInstance) -> dict:
    return json.loads(serialize_instance(instance))


def create_app(store: AnnotationStore, policy: Optional[AggregationPolicy] = None):
    """FastAPI app over one store; CORS is open for the annotation UI."""
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware
    from pydantic import BaseModel

    if policy is None:
        policy = AggregationPolicy()

    class LabelSubmission(BaseModel):
        candidate_id: str
        annotator_id: str
        label: str

    app = FastAPI(title="knowref annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/next")
    def next_candidate(annotator: str) -> dict:
        try:
            instance = store.next_candidate(annotator)
            remaining = store.remaining_for(annotator)
        except UnknownAnnotator as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        return {
            "candidate": None if instance is None else _instance_payload(instance),
            "remaining": remaining,
        }

    @app.post("/api/label")
    def submit_label(submission: LabelSubmission) -> dict:
        try:
            record = store.submit(submission.candidate_id,
                                  submission.annotator_id,
                                  submission.label)
        except UnknownAnnotator as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except UnknownCandidate as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except MalformedLabel as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"ok": True, "record": record.to_json()}

    @app.get("/api/progress")
    def progress() -> dict:
        return store.progress(policy)

    @app.get("/api/agreement")
    def agreement() -> dict:
        kappa, items = store.agreement(policy)
        return {"kappa": kappa, "items": items,
                "raters": policy.annotators_per_item}

    @app.get("/api/export")
    def export() -> dict:
        instances, matrix = store.export(policy)
        statuses = Counter(outcome.status for outcome in
                           store.aggregate_all(policy).values())
        return {
            "instances": [_instance_payload(instance) for instance in instances],
            "matrix": {
                "categories": [category.value for category in matrix.categories],
                "rows": [list(row) for row in matrix.rows],
            },
            "counts": {
                "accepted": statuses[AggregationStatus.ACCEPTED],
                "rejected": statuses[AggregationStatus.REJECTED],
                "pending": statuses[AggregationStatus.PENDING],
            },
        }

    return app
