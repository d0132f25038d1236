import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edition_ner.model import Annotation, Corpus, Document, EntityType, Prediction
from edition_ner.scoring import (
    MatchMode,
    Metrics,
    UnknownDocumentError,
    evaluate,
    match_exact,
    match_fuzzy,
    percentage,
    prf,
    render_report,
    report_to_dict,
)

from matching_oracle import oracle_counts

PER, LOC, WORK = EntityType.PER, EntityType.LOC, EntityType.WORK


def gold(doc, start, end, etype):
    return Annotation(doc, "x" * (end - start), start, end, "Q1", etype)


def pred(doc, start, end, etype):
    return Prediction(doc, "x" * (end - start), start, end, etype)


def triple(result, etype):
    c = result.counts[etype]
    return c.tp, c.fp, c.fn


class TestMatchExact:
    def test_identity(self):
        r = match_exact([gold("d", 0, 5, PER)], [pred("d", 0, 5, PER)])
        assert triple(r, PER) == (1, 0, 0)

    def test_boundary_mismatch_not_exact(self):
        r = match_exact([gold("d", 0, 5, PER)], [pred("d", 0, 4, PER)])
        assert triple(r, PER) == (0, 1, 1)

    def test_pooled_three_span_scenario(self):
        golds = [gold("d", 0, 5, PER), gold("d", 10, 15, LOC)]
        preds = [pred("d", 0, 5, PER), pred("d", 10, 14, LOC), pred("d", 20, 25, WORK)]
        r = match_exact(golds, preds)
        pooled = r.pooled()
        assert (pooled.tp, pooled.fp, pooled.fn) == (1, 2, 1)

    def test_class_must_match(self):
        r = match_exact([gold("d", 0, 5, PER)], [pred("d", 0, 5, LOC)])
        assert triple(r, PER) == (0, 0, 1)
        assert triple(r, LOC) == (0, 1, 0)

    def test_duplicate_predictions_match_once(self):
        r = match_exact([gold("d", 0, 5, PER)], [pred("d", 0, 5, PER), pred("d", 0, 5, PER)])
        assert triple(r, PER) == (1, 1, 0)

    def test_overlapping_gold_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            match_exact([gold("d", 0, 5, PER), gold("d", 3, 8, PER)], [])


class TestMatchFuzzy:
    def test_partial_overlap_counts(self):
        r = match_fuzzy([gold("d", 10, 15, LOC)], [pred("d", 10, 14, LOC)])
        assert triple(r, LOC) == (1, 0, 0)

    def test_overlap_with_wrong_class_is_fp_and_fn(self):
        r = match_fuzzy([gold("d", 10, 15, LOC)], [pred("d", 10, 14, PER)])
        assert triple(r, LOC) == (0, 0, 1)
        assert triple(r, PER) == (0, 1, 0)

    def test_pooled_three_span_scenario(self):
        golds = [gold("d", 0, 5, PER), gold("d", 10, 15, LOC)]
        preds = [pred("d", 0, 5, PER), pred("d", 10, 14, LOC), pred("d", 20, 25, WORK)]
        pooled = match_fuzzy(golds, preds).pooled()
        assert (pooled.tp, pooled.fp, pooled.fn) == (2, 1, 0)

    def test_largest_overlap_wins_second_pass(self):
        golds = [gold("d", 0, 10, PER)]
        preds = [pred("d", 0, 3, PER), pred("d", 4, 10, PER)]
        r = match_fuzzy(golds, preds)
        assert triple(r, PER) == (1, 1, 0)
        assert r.pairs == [(golds[0], preds[1])]

    def test_adjacent_span_is_no_overlap(self):
        r = match_fuzzy([gold("d", 0, 5, PER)], [pred("d", 5, 9, PER)])
        assert triple(r, PER) == (0, 1, 1)

    def test_exact_pairs_committed_before_overlaps(self):
        # Greedy-by-overlap alone would hand gold (2,4) to the wide (1,4)
        # prediction (same overlap, smaller start) and strand the exact
        # one; pass 1 must commit the exact pair first so both match.
        golds = [gold("d", 2, 4, PER), gold("d", 0, 2, PER)]
        preds = [pred("d", 2, 4, PER), pred("d", 1, 4, PER)]
        r = match_fuzzy(golds, preds)
        pairs = {(g.start_pos, g.end_pos, p.start_pos, p.end_pos) for g, p in r.pairs}
        assert pairs == {(2, 4, 2, 4), (0, 2, 1, 4)}
        assert triple(r, PER) == (2, 0, 0)


class TestPrf:
    def test_hand_computed(self):
        m = prf(1, 2, 1)
        assert m.precision == Fraction(1, 3)
        assert m.recall == Fraction(1, 2)
        assert m.f1 == Fraction(2, 5)

    def test_zero_over_zero_convention(self):
        assert prf(0, 0, 0) == Metrics(Fraction(0), Fraction(0), Fraction(0))

    def test_perfect(self):
        assert prf(5, 0, 0) == Metrics(Fraction(1), Fraction(1), Fraction(1))

    @pytest.mark.parametrize(
        "value,expected",
        [
            (Fraction(1, 3), "33.33"),
            (Fraction(2, 3), "66.67"),
            (Fraction(1), "100.00"),
            (Fraction(0), "0.00"),
            (Fraction(1, 8), "12.50"),
            (Fraction(267, 800), "33.38"),  # 33.375 rounds half-up
            (Fraction(1, 800), "0.13"),  # 0.125 rounds half-up
        ],
    )
    def test_percentage_half_up(self, value, expected):
        assert str(percentage(value)) == expected


def all_class_corpus():
    """Small corpus with every entity class populated."""
    docs = [Document("d1", "x" * 40), Document("d2", "y" * 40)]
    anns = [
        gold("d1", 0, 5, PER),
        gold("d1", 10, 15, LOC),
        gold("d1", 20, 26, WORK),
        gold("d2", 3, 9, PER),
        gold("d2", 12, 20, WORK),
    ]
    anns = [
        Annotation(a.doc_id, ("x" if a.doc_id == "d1" else "y") * (a.end_pos - a.start_pos),
                   a.start_pos, a.end_pos, "Q1", a.etype)
        for a in anns
    ]
    return Corpus(docs, anns)


class TestEvaluate:
    def test_self_evaluation_is_all_100(self):
        corpus = all_class_corpus()
        preds = [
            Prediction(a.doc_id, a.surface, a.start_pos, a.end_pos, a.etype)
            for a in corpus.annotations
        ]
        for mode in MatchMode:
            report = evaluate(corpus, preds, mode)
            for m in [report.micro, report.macro, *report.per_class.values()]:
                assert m.precision == 1 and m.recall == 1 and m.f1 == 1

    def test_no_predictions(self, p2721_corpus):
        report = evaluate(p2721_corpus, [], MatchMode.EXACT)
        assert report.micro == Metrics(Fraction(0), Fraction(0), Fraction(0))

    def test_worked_scenario_micro_metrics(self):
        doc = Document("d", "x" * 30)
        golds = [gold("d", 0, 5, PER), gold("d", 10, 15, LOC)]
        corpus = Corpus([doc], golds)
        preds = [pred("d", 0, 5, PER), pred("d", 10, 14, LOC), pred("d", 20, 25, WORK)]
        exact = report_to_dict(evaluate(corpus, preds, MatchMode.EXACT))
        assert exact["micro"] == {"precision": 33.33, "recall": 50.0, "f1": 40.0}
        fuzzy = report_to_dict(evaluate(corpus, preds, MatchMode.FUZZY))
        assert fuzzy["micro"] == {"precision": 66.67, "recall": 100.0, "f1": 80.0}

    def test_macro_averages_over_all_three_classes(self):
        doc = Document("d", "x" * 30)
        corpus = Corpus([doc], [gold("d", 0, 5, PER)])
        report = evaluate(corpus, [pred("d", 0, 5, PER)], MatchMode.EXACT)
        # PER is perfect, LOC and WORK are empty (0 by convention)
        assert report.macro.precision == Fraction(1, 3)
        assert report.macro.recall == Fraction(1, 3)
        assert report.macro.f1 == Fraction(1, 3)

    def test_unknown_doc_id_rejected(self, p2721_corpus):
        with pytest.raises(UnknownDocumentError, match="https://nowhere"):
            evaluate(p2721_corpus, [pred("https://nowhere", 0, 1, PER)], MatchMode.EXACT)


class TestRenderReport:
    def test_json_is_stable(self, p2721_corpus):
        preds = [
            Prediction(a.doc_id, a.surface, a.start_pos, a.end_pos, a.etype)
            for a in p2721_corpus.annotations
        ]
        report = evaluate(p2721_corpus, preds, MatchMode.FUZZY)
        rendered = render_report(report, "json")
        assert json.loads(rendered) == report_to_dict(report)
        assert render_report(report, "json") == rendered

    def test_text_table_self_evaluation(self):
        corpus = all_class_corpus()
        preds = [
            Prediction(a.doc_id, a.surface, a.start_pos, a.end_pos, a.etype)
            for a in corpus.annotations
        ]
        table = render_report(evaluate(corpus, preds, MatchMode.EXACT), "text-table")
        assert table.count("100.00") == 15  # 4 columns x 3 rows + micro
        for heading in ("PER", "LOC", "WORK", "Avg.", "Precision", "Recall", "F1", "Micro"):
            assert heading in table

    def test_csv_layout(self, p2721_corpus):
        report = evaluate(p2721_corpus, [], MatchMode.EXACT)
        lines = render_report(report, "csv").splitlines()
        assert lines[0] == "class,precision,recall,f1"
        assert [l.split(",")[0] for l in lines[1:]] == ["PER", "LOC", "WORK", "micro", "macro"]

    def test_unknown_format_rejected(self, p2721_corpus):
        report = evaluate(p2721_corpus, [], MatchMode.EXACT)
        with pytest.raises(ValueError):
            render_report(report, "xml")


# --- randomized properties ---------------------------------------------------


def random_instance(rng, max_spans=10):
    """One document's worth of random gold (disjoint) and predictions."""
    doc = "d"
    length = rng.randrange(10, 60)
    cuts = sorted(rng.sample(range(length + 1), min(2 * rng.randrange(0, max_spans // 2 + 1), length)))
    golds = []
    for lo, hi in zip(cuts[::2], cuts[1::2]):
        if hi > lo:
            golds.append(gold(doc, lo, hi, rng.choice(list(EntityType))))
    preds = []
    for _ in range(rng.randrange(0, max_spans)):
        start = rng.randrange(0, length)
        end = rng.randrange(start + 1, length + 1)
        preds.append(pred(doc, start, end, rng.choice(list(EntityType))))
    return golds, preds


@pytest.mark.parametrize("seed", range(50))
def test_matchers_agree_with_oracle(seed):
    rng = random.Random(seed)
    golds, preds = random_instance(rng)
    for fuzzy, matcher in ((False, match_exact), (True, match_fuzzy)):
        expected, expected_pairs = oracle_counts(golds, preds, fuzzy)
        result = matcher(golds, preds)
        assert {t: triple(result, t) for t in EntityType} == expected
        assert sorted(result.pairs, key=repr) == sorted(expected_pairs, key=repr)


@pytest.mark.parametrize("seed", range(50))
def test_count_conservation_and_monotonicity(seed):
    rng = random.Random(seed + 1000)
    golds, preds = random_instance(rng)
    exact = match_exact(golds, preds)
    fuzzy = match_fuzzy(golds, preds)
    for t in EntityType:
        n_gold = sum(1 for g in golds if g.etype is t)
        n_pred = sum(1 for p in preds if p.etype is t)
        for result in (exact, fuzzy):
            c = result.counts[t]
            assert c.tp + c.fn == n_gold
            assert c.tp + c.fp == n_pred
        assert fuzzy.counts[t].tp >= exact.counts[t].tp
    assert set(exact.pairs) <= set(fuzzy.pairs)


@given(st.randoms(use_true_random=False))
@settings(max_examples=100, deadline=None)
def test_permutation_invariance(rnd):
    golds, preds = random_instance(rnd)
    base_exact = match_exact(golds, preds)
    base_fuzzy = match_fuzzy(golds, preds)
    shuffled_g, shuffled_p = golds[:], preds[:]
    rnd.shuffle(shuffled_g)
    rnd.shuffle(shuffled_p)
    assert match_exact(shuffled_g, shuffled_p).counts == base_exact.counts
    assert match_fuzzy(shuffled_g, shuffled_p).counts == base_fuzzy.counts
