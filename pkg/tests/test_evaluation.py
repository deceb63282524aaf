"""Tests for evaluation metrics: outcome rates, consistency, agreement."""

import dataclasses
import random

import pytest

from knowref.evaluation import (
    AgreementMatrix,
    AnnotationLabel,
    CATEGORIES,
    EmptyCorpus,
    EmptyMatrix,
    EmptySample,
    EvalReport,
    InconsistentRaterCount,
    MisalignedPair,
    MissingPrediction,
    UnknownInstanceId,
    consistency,
    corpus_stats,
    evaluate,
    fleiss_kappa,
    majority_accuracy,
    qc_report,
    task_specific_accuracy,
)
from knowref.model import Choice, Label, Prediction
from knowref.resolvers import AlwaysFirst, GenderRule, resolve_corpus
from knowref.labeling import Gender, GenderLexicon
from knowref.switching import augment_corpus, pair_corpus, switch_antecedents

from tests.util import assemble_instance


def labeled_instance(instance_id, label=Label.FIRST, first="Alex", second="Paulo", pronoun="he"):
    return assemble_instance(
        c1=[first], mid=["met"], c2=[second], connective=[",", "but"],
        pronoun=pronoun, suffix=["left", "."],
        label=label, instance_id=instance_id)


def corpus_of(size, label=Label.FIRST):
    return [labeled_instance(f"k-{i:06d}", label=label) for i in range(size)]


def predictions_for(corpus, choice):
    return [Prediction(i.id, choice) for i in corpus]


class TestEvaluate:
    def test_equal_correct_and_incorrect_gives_half(self):
        corpus = corpus_of(20)
        predictions = [Prediction(i.id, Choice.FIRST) for i in corpus[:10]]
        predictions += [Prediction(i.id, Choice.SECOND) for i in corpus[10:]]
        report = evaluate(corpus, predictions)
        assert report.correct == 10 and report.incorrect == 10
        assert report.task_specific_accuracy == 0.5

    def test_printed_rate_arithmetic(self):
        # 52 correct, 28 incorrect, 20 abstentions out of 100 gives the
        # same task-specific accuracy as the published 0.52/0.80 row
        corpus = corpus_of(100)
        predictions = [Prediction(i.id, Choice.FIRST) for i in corpus[:52]]
        predictions += [Prediction(i.id, Choice.SECOND) for i in corpus[52:80]]
        predictions += [Prediction(i.id, Choice.NONE) for i in corpus[80:]]
        report = evaluate(corpus, predictions)
        assert (report.both_rate, report.none_rate) == (0.0, 0.20)
        assert (report.incorrect_rate, report.correct_rate) == (0.28, 0.52)
        assert report.task_specific_accuracy == pytest.approx(0.65)

    def test_rates_close_to_one(self):
        corpus = corpus_of(7)
        predictions = [
            Prediction(corpus[0].id, Choice.FIRST),
            Prediction(corpus[1].id, Choice.SECOND),
            Prediction(corpus[2].id, Choice.BOTH),
            Prediction(corpus[3].id, Choice.NONE),
            Prediction(corpus[4].id, Choice.FIRST),
            Prediction(corpus[5].id, Choice.BOTH),
            Prediction(corpus[6].id, Choice.NONE),
        ]
        report = evaluate(corpus, predictions)
        total = (report.both_rate + report.none_rate
                 + report.incorrect_rate + report.correct_rate)
        assert abs(total - 1.0) < 1e-9
        assert report.n == 7

    def test_all_abstentions_leave_accuracy_undefined(self):
        corpus = corpus_of(5)
        report = evaluate(corpus, predictions_for(corpus, Choice.NONE))
        assert report.task_specific_accuracy is None
        assert report.none_rate == 1.0
        assert report.to_json()["task_specific_accuracy"] is None

    def test_missing_predictions_score_none_and_are_logged(self, caplog):
        corpus = corpus_of(4)
        predictions = predictions_for(corpus[:2], Choice.FIRST)
        with caplog.at_level("WARNING", logger="knowref.evaluation"):
            report = evaluate(corpus, predictions)
        assert report.missing == 2
        assert report.none == 2
        assert "lack predictions" in caplog.text

    def test_strict_mode_raises_on_missing_predictions(self):
        corpus = corpus_of(3)
        with pytest.raises(MissingPrediction):
            evaluate(corpus, predictions_for(corpus[:1], Choice.FIRST), strict=True)

    def test_unknown_prediction_id_is_an_error(self):
        corpus = corpus_of(2)
        with pytest.raises(UnknownInstanceId):
            evaluate(corpus, [Prediction("k-999999", Choice.FIRST)])

    def test_duplicate_predictions_are_an_error(self):
        corpus = corpus_of(2)
        duplicated = [Prediction(corpus[0].id, Choice.FIRST)] * 2
        with pytest.raises(ValueError, match="duplicate"):
            evaluate(corpus, duplicated)

    def test_unlabeled_corpus_is_an_error(self):
        with pytest.raises(ValueError, match="no label"):
            evaluate([labeled_instance("k-000001", label=None)], [])

    def test_empty_corpus_is_an_error(self):
        with pytest.raises(EmptyCorpus):
            evaluate([], [])

    def test_task_specific_accuracy_function(self):
        assert task_specific_accuracy(0.52, 0.28) == pytest.approx(0.65)
        with pytest.raises(ValueError):
            task_specific_accuracy(0.0, 0.0)


def switch_pairs(corpus):
    return list(pair_corpus(corpus))


class TestConsistency:
    def corpus(self):
        return [
            labeled_instance("k-000001", first="Alex", second="Paulo"),
            labeled_instance("k-000002", first="Rose", second="Jane", pronoun="she"),
            labeled_instance("k-000003", first="Tom", second="Henry"),
            labeled_instance("k-000004", first="Wanda", second="Vanessa", pronoun="she"),
        ]

    def predictions(self, pairs, resolver):
        instances = [i for p in pairs for i in (p.original, p.switched)]
        return list(resolve_corpus(resolver, instances))

    def test_position_constant_resolver_is_fully_consistent(self):
        pairs = switch_pairs(self.corpus())
        report = consistency(pairs, self.predictions(pairs, AlwaysFirst()))
        assert report.consistency == 1.0
        assert report.counted == 4
        assert report.excluded == 0

    def test_surface_constant_resolver_is_fully_inconsistent(self):
        lexicon = GenderLexicon.from_rows([
            ("Alex", Gender.MALE, 9500), ("Paulo", Gender.MALE, 1500),
            ("Rose", Gender.FEMALE, 8000), ("Jane", Gender.FEMALE, 8800),
            ("Tom", Gender.MALE, 9100), ("Henry", Gender.MALE, 9000),
            ("Wanda", Gender.FEMALE, 5000), ("Vanessa", Gender.FEMALE, 5200),
        ])
        pairs = switch_pairs(self.corpus())
        report = consistency(pairs, self.predictions(pairs, GenderRule(lexicon)))
        assert report.consistency == 0.0
        assert report.counted == 4

    def test_pairs_with_non_decisions_are_excluded(self):
        pairs = switch_pairs(self.corpus())
        predictions = self.predictions(pairs, AlwaysFirst())
        predictions[1] = dataclasses.replace(predictions[1], choice=Choice.NONE)
        predictions[4] = dataclasses.replace(predictions[4], choice=Choice.BOTH)
        report = consistency(pairs, predictions)
        assert report.pairs == 4
        assert report.counted == 2
        assert report.excluded == 2
        assert report.consistency == 1.0

    def test_missing_predictions_are_excluded_and_logged(self, caplog):
        pairs = switch_pairs(self.corpus())
        predictions = self.predictions(pairs, AlwaysFirst())[:-1]
        with caplog.at_level("WARNING", logger="knowref.evaluation"):
            report = consistency(pairs, predictions)
        assert report.excluded == 1
        assert "excluded" in caplog.text
        with pytest.raises(MissingPrediction):
            consistency(pairs, predictions, strict=True)

    def test_all_pairs_excluded_leaves_consistency_undefined(self):
        pairs = switch_pairs(self.corpus())
        instances = [i for p in pairs for i in (p.original, p.switched)]
        report = consistency(pairs, [Prediction(i.id, Choice.NONE) for i in instances])
        assert report.consistency is None
        assert report.counted == 0

    def test_tuple_pairs_are_accepted(self):
        original = self.corpus()[0]
        switched = switch_antecedents(original)
        predictions = [Prediction(original.id, Choice.FIRST),
                       Prediction(switched.id, Choice.FIRST)]
        report = consistency([(original, switched)], predictions)
        assert report.consistency == 1.0

    def test_misaligned_pairs_are_rejected(self):
        one, two = self.corpus()[:2]
        with pytest.raises(MisalignedPair):
            consistency([(one, two)], [])
        with pytest.raises(MisalignedPair):
            consistency([(one, switch_antecedents(two))], [])

    def test_surface_and_position_views_agree_on_every_pair(self):
        pairs = switch_pairs(self.corpus())
        for resolver in (AlwaysFirst(),):
            predictions = {p.instance_id: p
                           for p in self.predictions(pairs, resolver)}
            for pair in pairs:
                first = predictions[pair.original.id]
                second = predictions[pair.switched.id]
                position_same = first.choice is second.choice
                surface_changed = (
                    pair.original.candidate(Label(int(first.choice.value))).surface
                    != pair.switched.candidate(Label(int(second.choice.value))).surface
                )
                assert position_same == surface_changed


class TestCorpusStats:
    def test_counts_and_rates(self):
        corpus = [
            labeled_instance("k-000001", label=Label.FIRST, pronoun="he"),
            labeled_instance("k-000002", label=Label.FIRST, pronoun="he"),
            labeled_instance("k-000003", label=Label.SECOND, pronoun="he"),
            labeled_instance("k-000004", label=Label.SECOND,
                             first="Rose", second="Jane", pronoun="she"),
            labeled_instance("k-000005", label=Label.SECOND,
                             first="Rose", second="Jane", pronoun="she"),
        ]
        stats = corpus_stats(corpus)
        assert stats.n == 5
        assert (stats.masculine, stats.feminine) == (3, 2)
        assert (stats.first, stats.second) == (2, 3)
        assert stats.masculine_rate + stats.feminine_rate == pytest.approx(1.0)
        assert stats.first_rate + stats.second_rate == pytest.approx(1.0)

    def test_cleanly_augmented_corpus_balances_labels(self):
        corpus = corpus_of(9, label=Label.FIRST)
        stats = corpus_stats(augment_corpus(corpus))
        assert stats.first_rate == 0.5
        assert stats.second_rate == 0.5

    def test_empty_corpus_is_an_error(self):
        with pytest.raises(EmptyCorpus):
            corpus_stats([])

    def test_unlabeled_instance_is_an_error(self):
        with pytest.raises(ValueError, match="no label"):
            corpus_stats([labeled_instance("k-000001", label=None)])


class TestFleissKappa:
    def test_unanimous_agreement_is_one(self):
        matrix = AgreementMatrix.from_labels(
            [["1"] * 6, ["2"] * 6, ["1"] * 6])
        assert fleiss_kappa(matrix) == 1.0

    def test_single_category_mass_is_one(self):
        assert fleiss_kappa([[6, 0, 0, 0], [6, 0, 0, 0]]) == 1.0

    def test_two_rater_complete_disagreement_is_minus_one(self):
        assert fleiss_kappa([[1, 1], [1, 1]]) == -1.0

    def test_uniform_random_labels_score_near_zero(self):
        rng = random.Random(11)
        items = [[rng.choice(CATEGORIES) for _ in range(6)] for _ in range(1000)]
        kappa = fleiss_kappa(AgreementMatrix.from_labels(items))
        assert abs(kappa) < 0.05

    def test_kappa_stays_within_bounds(self):
        rng = random.Random(5)
        for _ in range(50):
            rows = [[rng.randint(0, 3) for _ in range(4)] for _ in range(8)]
            raters = 6
            rows = [self.pad(row, raters) for row in rows]
            assert -1.0 <= fleiss_kappa(rows) <= 1.0

    @staticmethod
    def pad(row, raters):
        row = list(row)
        while sum(row) > raters:
            row[row.index(max(row))] -= 1
        row[0] += raters - sum(row)
        return row

    def test_unequal_rater_counts_are_rejected(self):
        with pytest.raises(InconsistentRaterCount):
            fleiss_kappa([[3, 3, 0, 0], [2, 2, 2, 1]])

    def test_single_rater_is_rejected(self):
        with pytest.raises(InconsistentRaterCount):
            fleiss_kappa([[1, 0], [0, 1]])

    def test_empty_matrix_is_rejected(self):
        with pytest.raises(EmptyMatrix):
            fleiss_kappa([])

    def test_negative_counts_are_rejected(self):
        with pytest.raises(ValueError):
            AgreementMatrix(((2, -1, 0, 5),))


class TestMajorityAccuracy:
    def test_unanimous_correct_annotations(self):
        matrix = AgreementMatrix.from_labels([["1"] * 6, ["2"] * 6])
        report = majority_accuracy(matrix, [Label.FIRST, Label.SECOND])
        assert report.accuracy == 1.0
        assert report.ties == 0

    def test_majority_wins_over_minority(self):
        matrix = AgreementMatrix.from_labels(
            [["1"] * 4 + ["2"] * 2])
        assert majority_accuracy(matrix, [Label.FIRST]).accuracy == 1.0
        assert majority_accuracy(matrix, [Label.SECOND]).accuracy == 0.0

    def test_modal_tie_scores_zero_and_is_reported(self):
        matrix = AgreementMatrix.from_labels(
            [["1"] * 3 + ["2"] * 3, ["1"] * 6])
        report = majority_accuracy(matrix, [Label.FIRST, Label.FIRST])
        assert report.correct == 1
        assert report.ties == 1
        assert report.accuracy == 0.5

    def test_empty_matrix_is_rejected(self):
        with pytest.raises(EmptyMatrix):
            majority_accuracy(AgreementMatrix(()), [])

    def test_gold_length_must_match(self):
        matrix = AgreementMatrix.from_labels([["1"] * 6])
        with pytest.raises(ValueError):
            majority_accuracy(matrix, [Label.FIRST, Label.SECOND])


class TestQCReport:
    def test_full_agreement(self):
        labels = {"k-000001": Label.FIRST, "k-000002": Label.SECOND}
        annotations = {"k-000001": "1", "k-000002": "2"}
        report = qc_report(labels, annotations)
        assert (report.correct_rate, report.incorrect_rate,
                report.unresolvable_rate) == (1.0, 0.0, 0.0)

    def test_published_style_split(self):
        labels = {f"k-{i:06d}": Label.FIRST for i in range(100)}
        annotations = {}
        ids = sorted(labels)
        for instance_id in ids[:86]:
            annotations[instance_id] = AnnotationLabel.FIRST
        for instance_id in ids[86:95]:
            annotations[instance_id] = AnnotationLabel.SECOND
        for instance_id in ids[95:97]:
            annotations[instance_id] = AnnotationLabel.UNCLEAR
        for instance_id in ids[97:]:
            annotations[instance_id] = AnnotationLabel.NEITHER
        report = qc_report(labels, annotations)
        assert (report.correct_rate, report.incorrect_rate,
                report.unresolvable_rate) == (0.86, 0.11, 0.03)

    def test_unclear_counts_as_incorrect(self):
        report = qc_report({"a": Label.FIRST}, {"a": "unclear"})
        assert report.incorrect == 1

    def test_neither_counts_as_unresolvable(self):
        report = qc_report({"a": Label.FIRST}, {"a": "neither"})
        assert report.unresolvable == 1

    def test_empty_sample_is_rejected(self):
        with pytest.raises(EmptySample):
            qc_report({"a": Label.FIRST}, {})

    def test_unknown_instance_is_rejected(self):
        with pytest.raises(UnknownInstanceId):
            qc_report({"a": Label.FIRST}, {"b": "1"})

    def test_malformed_annotation_is_rejected(self):
        with pytest.raises(ValueError):
            qc_report({"a": Label.FIRST}, {"a": "third"})


class TestAnnotationLabel:
    def test_round_trip_with_labels(self):
        assert AnnotationLabel.from_label(Label.FIRST).to_label() is Label.FIRST
        assert AnnotationLabel.from_label(Label.SECOND).to_label() is Label.SECOND

    def test_neither_and_unclear_have_no_label(self):
        assert AnnotationLabel.NEITHER.to_label() is None
        assert AnnotationLabel.UNCLEAR.to_label() is None


class TestEvalReportShape:
    def test_json_shape(self):
        report = EvalReport(n=10, both=1, none=2, incorrect=3, correct=4)
        payload = report.to_json()
        assert payload["counts"] == {"both": 1, "none": 2, "incorrect": 3, "correct": 4}
        assert payload["rates"]["correct"] == 0.4
        assert payload["task_specific_accuracy"] == pytest.approx(4 / 7)
