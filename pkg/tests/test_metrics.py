import itertools

import numpy as np
import pytest
from sklearn.metrics import f1_score, precision_score, recall_score

from utils.errors import EmptyReference, LengthMismatch, UnknownLabel
from utils.metrics import (
    ConfusionMatrix,
    EditOps,
    cer,
    classification_report,
    edit_distance,
    report_from_confusion,
    score_transcription,
    wer,
)


def recursive_distance(a, b):
    """Exponential Levenshtein oracle without memoization."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        recursive_distance(a[1:], b[1:]) + (a[0] != b[0]),
        recursive_distance(a[1:], b) + 1,
        recursive_distance(a, b[1:]) + 1,
    )


class TestEditDistance:
    def test_identity(self):
        assert edit_distance(list("abc"), list("abc")) == EditOps(0, 0, 0, 0)

    def test_substitution(self):
        assert edit_distance(list("abc"), list("abd")) == EditOps(1, 1, 0, 0)

    def test_deletions(self):
        assert edit_distance(list("ab"), []) == EditOps(2, 0, 0, 2)

    def test_insertions(self):
        assert edit_distance([], list("ab")) == EditOps(2, 0, 2, 0)

    def test_operations_add_up(self, rng):
        for _ in range(200):
            a = "".join(rng.choice(list("abc"), size=rng.integers(0, 8)))
            b = "".join(rng.choice(list("abc"), size=rng.integers(0, 8)))
            ops = edit_distance(a, b)
            assert ops.distance == ops.substitutions + ops.insertions + ops.deletions
            assert len(b) - len(a) == ops.insertions - ops.deletions

    def test_matches_recursive_oracle(self):
        strings = [""] + ["".join(p) for n in range(1, 4) for p in itertools.product("abc", repeat=n)]
        for a in strings:
            for b in strings:
                assert edit_distance(a, b).distance == recursive_distance(a, b)

    def test_matches_recursive_oracle_long(self, rng):
        for _ in range(150):
            a = "".join(rng.choice(list("abc"), size=rng.integers(0, 7)))
            b = "".join(rng.choice(list("abc"), size=rng.integers(0, 7)))
            assert edit_distance(a, b).distance == recursive_distance(a, b)

    def test_triangle_bound(self, rng):
        for _ in range(200):
            a, b, c = ("".join(rng.choice(list("ab"), size=rng.integers(1, 8))) for _ in range(3))
            assert edit_distance(a, c).distance <= edit_distance(a, b).distance + edit_distance(b, c).distance


class TestErrorRates:
    def test_wer_identity(self):
        assert wer("a b c", "a b c") == 0.0

    def test_wer_can_exceed_one(self):
        assert wer("a", "a b b") == 2.0

    def test_cer(self):
        assert cer("abc", "abd") == pytest.approx(1 / 3)

    def test_cer_counts_spaces(self):
        assert cer("a b", "ab") == pytest.approx(1 / 3)

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            wer("  ", "a")

    def test_merge_is_corpus_level(self):
        merged = score_transcription("a b", "a c").merge(score_transcription("d e f g", "d e f g"))
        assert merged.wer == pytest.approx(1 / 6)
        assert merged.ref_words == 6
        assert merged.to_dict()["word_substitutions"] == 1


class TestClassificationReport:
    def test_identity(self):
        report = classification_report(["A", "B", "B"], ["A", "B", "B"], ["A", "B"])
        assert report.accuracy == 100.0
        assert report.macro_precision == report.macro_recall == report.macro_f1 == 100.0

    def test_hand_computed(self):
        report = classification_report(["A", "A", "B"], ["A", "B", "B"], ["A", "B"])
        assert report.accuracy == pytest.approx(66.6667, abs=1e-3)
        assert report.macro_precision == pytest.approx(75.0)
        assert report.macro_recall == pytest.approx(75.0)
        assert report.macro_f1 == pytest.approx(66.6667, abs=1e-3)

    def test_zero_predictions(self):
        report = classification_report(["A", "B"], ["A", "A"], ["A", "B"])
        scores = report.per_class["B"]
        assert (scores.precision, scores.recall, scores.f1) == (0.0, 0.0, 0.0)

    def test_one_vs_rest_counts(self):
        report = classification_report(["A", "A", "B", "C"], ["A", "B", "B", "A"], ["A", "B", "C"])
        a = report.per_class["A"]
        assert (a.tp, a.fp, a.fn, a.tn) == (1, 1, 1, 1)

    def test_absent_classes_excluded_from_macro(self):
        report = classification_report(["A", "A"], ["A", "A"], ["A", "B", "C"])
        assert report.macro_f1 == 100.0

    def test_agrees_with_sklearn(self, rng):
        labels = ["A", "B", "C", "D"]
        truth = list(rng.choice(labels, size=300))
        pred = list(rng.choice(labels, size=300))
        report = classification_report(truth, pred, labels)
        present = sorted(set(truth))
        kwargs = dict(labels=present, average="macro", zero_division=0)
        assert report.macro_precision == pytest.approx(100 * precision_score(truth, pred, **kwargs))
        assert report.macro_recall == pytest.approx(100 * recall_score(truth, pred, **kwargs))
        assert report.macro_f1 == pytest.approx(100 * f1_score(truth, pred, **kwargs))

    def test_accuracy_is_trace_over_total(self, rng):
        truth = list(rng.choice(["A", "B", "C"], size=50))
        pred = list(rng.choice(["A", "B", "C"], size=50))
        report = classification_report(truth, pred, ["A", "B", "C"])
        assert report.accuracy == pytest.approx(100 * report.confusion.trace / report.confusion.total)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            classification_report(["A"], ["A", "B"], ["A", "B"])

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            classification_report(["A"], ["Z"], ["A", "B"])

    def test_merged_confusion(self):
        labels = ["A", "B"]
        first = ConfusionMatrix.from_predictions(["A", "B"], ["A", "A"], labels)
        second = ConfusionMatrix.from_predictions(["B"], ["B"], labels)
        merged = report_from_confusion(first.merge(second))
        direct = classification_report(["A", "B", "B"], ["A", "A", "B"], labels)
        assert merged.macro_f1 == pytest.approx(direct.macro_f1)
        np.testing.assert_array_equal(merged.confusion.counts, [[1, 0], [1, 1]])

    def test_table_rows(self):
        report = classification_report(["A", "B"], ["A", "B"], ["A", "B"])
        assert list(report.table_rows()) == ["Accuracy", "Precision", "Recall", "F1-score"]
