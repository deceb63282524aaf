"""Tests for antecedent switching and corpus augmentation."""

import logging

import pytest
from hypothesis import given, strategies as st

from knowref.model import (
    InvariantViolation,
    Label,
    MentionSpan,
    ProblemInstance,
    PronounGender,
    validate_instance,
)
from knowref.switching import (
    SWITCH_SUFFIX,
    OverlappingOccurrences,
    SwitchedPair,
    augment_corpus,
    pair_corpus,
    switch_antecedents,
)

from tests.util import assemble_instance, span_at


def simple_instance(**kwargs):
    defaults = dict(
        c1=["Alex"],
        mid=["tells"],
        c2=["Paulo"],
        connective=[",", "but"],
        pronoun="he",
        suffix=["does", "not", "believe", "him", "."],
        label=Label.SECOND,
    )
    defaults.update(kwargs)
    return assemble_instance(**defaults)


class TestSwitchAntecedents:
    def test_swaps_candidate_surfaces_in_text(self):
        original = simple_instance()
        assert original.text == "Alex tells Paulo, but he does not believe him."
        switched = switch_antecedents(original)
        assert switched.text == "Paulo tells Alex, but he does not believe him."

    def test_swaps_tokens_and_recomputes_spans(self):
        switched = switch_antecedents(simple_instance())
        assert switched.tokens == (
            "Paulo", "tells", "Alex", ",", "but", "he",
            "does", "not", "believe", "him", ".",
        )
        assert switched.c1 == MentionSpan(0, 1, "Paulo")
        assert switched.c2 == MentionSpan(2, 3, "Alex")
        assert switched.connective == MentionSpan(3, 5, ", but")
        assert switched.pronoun == MentionSpan(5, 6, "he")

    def test_label_flips(self):
        assert switch_antecedents(simple_instance(label=Label.SECOND)).label is Label.FIRST
        assert switch_antecedents(simple_instance(label=Label.FIRST)).label is Label.SECOND

    def test_unlabeled_stays_unlabeled(self):
        assert switch_antecedents(simple_instance(label=None)).label is None

    def test_provenance_fields(self):
        original = simple_instance(instance_id="k-000042")
        switched = switch_antecedents(original)
        assert switched.id == "k-000042" + SWITCH_SUFFIX
        assert switched.derived_from == "k-000042"
        assert switched.switched is True
        assert switched.source == original.source
        assert switched.pronoun_gender is original.pronoun_gender

    def test_result_is_valid(self):
        validate_instance(switch_antecedents(simple_instance()))

    def test_involution_restores_original_exactly(self):
        original = simple_instance(instance_id="k-000042", label=Label.SECOND)
        assert switch_antecedents(switch_antecedents(original)) == original

    def test_unequal_candidate_lengths_shift_spans(self):
        # "Radu appeared to be killed by Brother Paulo, but he reappears
        # a short while later injured, but alive."  The first candidate
        # grows from one token to two, so everything after it shifts
        # right by one; the second candidate shrinks, shifting the tail
        # back again.
        original = assemble_instance(
            c1=["Radu"],
            mid=["appeared", "to", "be", "killed", "by"],
            c2=["Brother", "Paulo"],
            connective=[",", "but"],
            pronoun="he",
            suffix=["reappears", "a", "short", "while", "later",
                    "injured", ",", "but", "alive", "."],
            label=Label.FIRST,
        )
        switched = switch_antecedents(original)
        assert switched.text == ("Brother Paulo appeared to be killed by Radu, "
                                 "but he reappears a short while later injured, but alive.")
        assert switched.c1 == MentionSpan(0, 2, "Brother Paulo")
        assert switched.c2 == MentionSpan(7, 8, "Radu")
        assert switched.connective == MentionSpan(8, 10, ", but")
        assert switched.pronoun == MentionSpan(10, 11, "he")
        assert switched.label is Label.SECOND
        assert switch_antecedents(switched) == original

    def test_possessive_occurrences_swap(self):
        original = assemble_instance(
            c1=["Alex"],
            mid=["praised"],
            c2=["Paulo"],
            connective=[",", "but"],
            pronoun="he",
            suffix=["kept", "Paulo's", "notes", "."],
            label=Label.FIRST,
        )
        switched = switch_antecedents(original)
        assert switched.text == "Paulo praised Alex, but he kept Alex's notes."
        assert switched.tokens[7] == "Alex's"
        assert switch_antecedents(switched) == original

    def test_repeated_occurrences_swap_everywhere(self):
        original = assemble_instance(
            c1=["Rose"],
            mid=["wrote", "to"],
            c2=["Wanda"],
            connective=["because"],
            pronoun="she",
            suffix=["missed", "Wanda", "and", "Rose", "equally", "."],
            label=Label.FIRST,
        )
        switched = switch_antecedents(original)
        assert switched.text == "Wanda wrote to Rose because she missed Rose and Wanda equally."
        assert switch_antecedents(switched) == original

    def test_single_occurrence_swap_preserves_token_multiset(self):
        original = simple_instance()
        switched = switch_antecedents(original)
        assert sorted(switched.tokens) == sorted(original.tokens)

    def test_connective_free_instance(self):
        original = simple_instance(connective=[], mid=["tells"], suffix=["lies", "."])
        assert original.connective is None
        switched = switch_antecedents(original)
        assert switched.connective is None
        assert switched.text == "Paulo tells Alex he lies."

    def test_identical_surfaces_rejected(self):
        with pytest.raises(OverlappingOccurrences):
            switch_antecedents(simple_instance(c1=["Alex"], c2=["Alex"]))

    def test_substring_surfaces_rejected(self):
        with pytest.raises(OverlappingOccurrences):
            switch_antecedents(simple_instance(c1=["Paulo"], c2=["Brother", "Paulo"]))
        with pytest.raises(OverlappingOccurrences):
            switch_antecedents(simple_instance(c1=["Alexandra"], c2=["Alex"]))

    def test_occurrence_straddling_a_candidate_rejected(self):
        # "Dan Bo" also occurs just before the first candidate "Bo Cole",
        # so the scan consumes Bo before the candidate span is reached.
        instance = assemble_instance(
            prefix=["Dan"],
            c1=["Bo", "Cole"],
            mid=["and"],
            c2=["Dan", "Bo"],
            connective=[",", "but"],
            pronoun="he",
            suffix=["left", "."],
        )
        with pytest.raises(OverlappingOccurrences):
            switch_antecedents(instance)

    def test_occurrence_overlapping_pronoun_rejected(self):
        tokens = ("Bo", "met", "he", "said", ",", "but", "he", "said", "ok", ".")
        instance = ProblemInstance(
            id="t-000009",
            text="Bo met he said, but he said ok.",
            tokens=tokens,
            c1=span_at(tokens, 0, 1),
            c2=span_at(tokens, 2, 4),
            pronoun=span_at(tokens, 6, 7),
            connective=span_at(tokens, 4, 6),
            label=None,
            pronoun_gender=PronounGender.MASCULINE,
            source="test",
        )
        validate_instance(instance)
        with pytest.raises(OverlappingOccurrences):
            switch_antecedents(instance)

    def test_switching_a_switched_instance_strips_the_suffix(self):
        switched = simple_instance(
            instance_id="k-000007-sw", switched=True, derived_from="k-000007")
        back = switch_antecedents(switched)
        assert back.id == "k-000007"
        assert back.switched is False
        assert back.derived_from is None

    def test_suffix_without_switched_flag_is_treated_as_original(self):
        oddly_named = simple_instance(instance_id="k-000007-sw")
        assert switch_antecedents(oddly_named).id == "k-000007-sw-sw"


NAMES = ["Alex", "Paulo", "Radu", "Wanda", "Rose", "Tom", "Henry", "Jane"]
FILLER = ["met", "praised", "thanked", "called", "trusted"]
TAILS = ["left", "stayed", "smiled", "agreed"]


@st.composite
def instances(draw):
    first, second = draw(st.permutations(NAMES).map(lambda names: names[:2]))
    mid = [draw(st.sampled_from(FILLER))]
    echo = draw(st.sampled_from(["none", "first", "second", "possessive"]))
    suffix = [draw(st.sampled_from(TAILS))]
    if echo == "first":
        suffix += ["near", first]
    elif echo == "second":
        suffix += ["near", second]
    elif echo == "possessive":
        suffix += ["in", first + "'s", "car"]
    suffix += ["."]
    return assemble_instance(
        c1=[first],
        mid=mid,
        c2=[second],
        connective=[",", "but"],
        pronoun=draw(st.sampled_from(["he", "she"])),
        suffix=suffix,
        label=draw(st.sampled_from([Label.FIRST, Label.SECOND, None])),
        instance_id=f"t-{draw(st.integers(0, 999999)):06d}",
    )


class TestSwitchingProperties:
    @given(instances())
    def test_involution(self, instance):
        assert switch_antecedents(switch_antecedents(instance)) == instance

    @given(instances())
    def test_label_antisymmetry(self, instance):
        switched = switch_antecedents(instance)
        if instance.label is None:
            assert switched.label is None
        else:
            assert switched.label is instance.label.flipped()

    @given(instances())
    def test_candidate_surfaces_exchange(self, instance):
        switched = switch_antecedents(instance)
        assert switched.c1.surface == instance.c2.surface
        assert switched.c2.surface == instance.c1.surface


class TestSwitchedPair:
    def test_accepts_a_valid_pair(self):
        original = simple_instance()
        pair = SwitchedPair(original, switch_antecedents(original))
        assert pair.switched.derived_from == original.id

    def test_rejects_unrelated_instances(self):
        with pytest.raises(InvariantViolation):
            SwitchedPair(simple_instance(instance_id="a"),
                         switch_antecedents(simple_instance(instance_id="b")))

    def test_rejects_non_flipped_labels(self):
        original = simple_instance(label=Label.FIRST)
        bad = switch_antecedents(original).with_label(Label.FIRST)
        with pytest.raises(InvariantViolation):
            SwitchedPair(original, bad)

    def test_rejects_mixed_labeled_and_unlabeled(self):
        original = simple_instance(label=Label.FIRST)
        with pytest.raises(InvariantViolation):
            SwitchedPair(original, switch_antecedents(original).with_label(None))


class TestAugmentCorpus:
    def make_corpus(self):
        return [
            simple_instance(instance_id="k-000001", label=Label.FIRST),
            simple_instance(instance_id="k-000002", c1=["Rose"], c2=["Jane"],
                            pronoun="she", label=Label.FIRST),
            simple_instance(instance_id="k-000003", c1=["Tom"], c2=["Henry"],
                            label=Label.SECOND),
        ]

    def test_doubles_a_clean_corpus(self):
        out = list(augment_corpus(self.make_corpus()))
        assert len(out) == 6
        assert [i.id for i in out] == [
            "k-000001", "k-000001-sw", "k-000002", "k-000002-sw",
            "k-000003", "k-000003-sw",
        ]

    def test_label_split_is_even_after_clean_augmentation(self):
        out = list(augment_corpus(self.make_corpus()))
        assert sum(1 for i in out if i.label is Label.FIRST) == 3
        assert sum(1 for i in out if i.label is Label.SECOND) == 3

    def test_single_instance_augments_to_opposite_labels(self):
        out = list(augment_corpus([simple_instance(label=Label.FIRST)]))
        assert [i.label for i in out] == [Label.FIRST, Label.SECOND]

    def test_skips_unswitchable_instances_without_aborting(self, caplog):
        corpus = self.make_corpus()
        corpus.insert(1, simple_instance(instance_id="k-000666",
                                         c1=["Alex"], c2=["Alex"]))
        skipped = []
        with caplog.at_level(logging.WARNING, logger="knowref.switching"):
            out = list(augment_corpus(corpus, on_skip=lambda i, e: skipped.append(i.id)))
        assert len(out) == 2 * 4 - 1
        assert skipped == ["k-000666"]
        assert any(i.id == "k-000666" for i in out)
        assert "k-000666" in caplog.text

    def test_originals_are_never_mutated(self):
        corpus = self.make_corpus()
        list(augment_corpus(corpus))
        assert corpus == self.make_corpus()


class TestPairCorpus:
    def test_yields_aligned_pairs(self):
        corpus = [
            simple_instance(instance_id="k-000001", label=Label.FIRST),
            simple_instance(instance_id="k-000002", label=Label.SECOND),
        ]
        pairs = list(pair_corpus(corpus))
        assert [(p.original.id, p.switched.id) for p in pairs] == [
            ("k-000001", "k-000001-sw"), ("k-000002", "k-000002-sw"),
        ]

    def test_skips_unswitchable_instances(self):
        corpus = [
            simple_instance(instance_id="k-000001"),
            simple_instance(instance_id="k-000666", c1=["Alex"], c2=["Alex"]),
            simple_instance(instance_id="k-000003"),
        ]
        skipped = []
        pairs = list(pair_corpus(corpus, on_skip=lambda i, e: skipped.append(i.id)))
        assert [p.original.id for p in pairs] == ["k-000001", "k-000003"]
        assert skipped == ["k-000666"]
