"""Toolkit for mining, labeling and evaluating ambiguous-pronoun coreference corpora."""

from knowref.model import (
    Choice,
    Label,
    MentionSpan,
    Prediction,
    ProblemInstance,
    PronounGender,
    RejectReason,
    SentenceRecord,
    StageVerdict,
    parse_instance,
    read_corpus,
    serialize_instance,
    validate_corpus,
    validate_instance,
    write_corpus,
)

__version__ = "0.1.0"
