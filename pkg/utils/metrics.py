"""Transcription (WER, CER) and classification (A, P, R, F1) metrics."""

from dataclasses import dataclass, field
from typing import Dict, Hashable, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix as sk_confusion_matrix

from utils.errors import EmptyReference, LengthMismatch, UnknownLabel
from utils.logger import get_logger

logger = get_logger(__name__)


class EditOps(NamedTuple):
    """Levenshtein distance with its substitution/insertion/deletion split."""

    distance: int
    substitutions: int
    insertions: int
    deletions: int


def edit_distance(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> EditOps:
    """
    Unit-cost Levenshtein distance between two token sequences.

    The alignment is traced back deterministically, preferring a diagonal
    step (match or substitution), then a deletion, then an insertion.

    Args:
        ref: Reference tokens
        hyp: Hypothesis tokens

    Returns:
        EditOps(distance, S, I, D)
    """
    n, m = len(ref), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)

    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            dist[i, j] = min(
                dist[i - 1, j - 1] + cost,
                dist[i - 1, j] + 1,
                dist[i, j - 1] + 1,
            )

    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            if dist[i, j] == dist[i - 1, j - 1] + cost:
                subs += cost
                i, j = i - 1, j - 1
                continue
        if i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            dels += 1
            i -= 1
            continue
        ins += 1
        j -= 1

    return EditOps(int(dist[n, m]), subs, ins, dels)


@dataclass
class TranscriptionScore:
    """
    Word and character error counts, mergeable across utterances.

    WER = (S + I + D) / reference words, CER likewise over characters.
    """

    word_ops: EditOps = EditOps(0, 0, 0, 0)
    char_ops: EditOps = EditOps(0, 0, 0, 0)
    ref_words: int = 0
    ref_chars: int = 0

    @property
    def wer(self) -> float:
        return self.word_ops.distance / self.ref_words if self.ref_words else 0.0

    @property
    def cer(self) -> float:
        return self.char_ops.distance / self.ref_chars if self.ref_chars else 0.0

    def merge(self, other: "TranscriptionScore") -> "TranscriptionScore":
        return TranscriptionScore(
            word_ops=EditOps(*(a + b for a, b in zip(self.word_ops, other.word_ops))),
            char_ops=EditOps(*(a + b for a, b in zip(self.char_ops, other.char_ops))),
            ref_words=self.ref_words + other.ref_words,
            ref_chars=self.ref_chars + other.ref_chars,
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "wer": self.wer,
            "cer": self.cer,
            "word_substitutions": self.word_ops.substitutions,
            "word_insertions": self.word_ops.insertions,
            "word_deletions": self.word_ops.deletions,
            "char_substitutions": self.char_ops.substitutions,
            "char_insertions": self.char_ops.insertions,
            "char_deletions": self.char_ops.deletions,
            "reference_words": self.ref_words,
            "reference_chars": self.ref_chars,
        }


def score_transcription(ref_text: str, hyp_text: str) -> TranscriptionScore:
    """Score one hypothesis against its reference at word and character level."""
    if not ref_text.strip():
        raise EmptyReference("reference transcript is empty")
    ref_words, hyp_words = ref_text.split(), hyp_text.split()
    return TranscriptionScore(
        word_ops=edit_distance(ref_words, hyp_words),
        char_ops=edit_distance(ref_text, hyp_text),
        ref_words=len(ref_words),
        ref_chars=len(ref_text),
    )


def wer(ref_text: str, hyp_text: str) -> float:
    """Word error rate over whitespace tokens; may exceed 1."""
    return score_transcription(ref_text, hyp_text).wer


def cer(ref_text: str, hyp_text: str) -> float:
    """Character error rate; spaces count as characters."""
    return score_transcription(ref_text, hyp_text).cer


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    labels: tuple
    counts: np.ndarray

    @classmethod
    def from_predictions(cls, truth: Sequence, pred: Sequence, labels: Sequence) -> "ConfusionMatrix":
        labels = tuple(labels)
        if len(truth) == 0:
            return cls(labels, np.zeros((len(labels), len(labels)), dtype=np.int64))
        position = {label: index for index, label in enumerate(labels)}
        counts = sk_confusion_matrix(
            [position[label] for label in truth],
            [position[label] for label in pred],
            labels=list(range(len(labels))),
        )
        return cls(labels, counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.labels != other.labels:
            raise ValueError("cannot merge confusion matrices over different label sets")
        return ConfusionMatrix(self.labels, self.counts + other.counts)

    def to_frame(self) -> pd.DataFrame:
        names = [str(getattr(label, "value", label)) for label in self.labels]
        return pd.DataFrame(self.counts, index=pd.Index(names, name="true"),
                            columns=pd.Index(names, name="predicted"))


@dataclass
class ClassScores:
    tp: int
    tn: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    support: int


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator * 100 if denominator else 0.0


@dataclass
class ClassReport:
    """
    Per-class one-vs-rest counts and scores with macro/weighted averages.

    `accuracy` is the overall (micro) accuracy; the one-vs-rest accuracy of
    each class is kept in `per_class[label].accuracy`.
    """

    per_class: Dict[Hashable, ClassScores]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    confusion: ConfusionMatrix = field(repr=False, default=None)

    def table_rows(self, average: str = "macro") -> Dict[str, float]:
        """Headline metrics as percentages, keyed for results tables."""
        return {
            "Accuracy": self.accuracy,
            "Precision": getattr(self, f"{average}_precision"),
            "Recall": getattr(self, f"{average}_recall"),
            "F1-score": getattr(self, f"{average}_f1"),
        }

    def per_class_frame(self) -> pd.DataFrame:
        rows = []
        for label, scores in self.per_class.items():
            rows.append({"label": str(getattr(label, "value", label)), **scores.__dict__})
        return pd.DataFrame(rows).set_index("label")


def classification_report(
    truth: Sequence[Hashable],
    pred: Sequence[Hashable],
    label_set: Sequence[Hashable],
    confusion: Optional[ConfusionMatrix] = None,
) -> ClassReport:
    """
    Compute accuracy, precision, recall and F1.

    Macro scores average over the classes present in `truth`; a zero
    denominator yields 0.

    Args:
        truth: True labels
        pred: Predicted labels
        label_set: Ordered label inventory (confusion matrix order)
        confusion: Pre-merged confusion matrix, used instead of truth/pred counts

    Raises:
        LengthMismatch: truth and pred differ in length
        UnknownLabel: a label is outside label_set
    """
    if len(truth) != len(pred):
        raise LengthMismatch(f"{len(truth)} true labels but {len(pred)} predictions")
    known = set(label_set)
    unknown = [label for label in list(truth) + list(pred) if label not in known]
    if unknown:
        raise UnknownLabel(f"label {unknown[0]!r} is not in the label set")

    if confusion is None:
        confusion = ConfusionMatrix.from_predictions(truth, pred, label_set)
    return report_from_confusion(confusion)


def report_from_confusion(confusion: ConfusionMatrix) -> ClassReport:
    """Derive every score from a (possibly merged) confusion matrix."""
    counts = confusion.counts
    total = confusion.total
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)

    per_class: Dict[Hashable, ClassScores] = {}
    for index, label in enumerate(confusion.labels):
        tp = int(counts[index, index])
        fp = int(col_sums[index]) - tp
        fn = int(row_sums[index]) - tp
        tn = total - tp - fp - fn
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassScores(
            tp=tp, tn=tn, fp=fp, fn=fn,
            precision=precision, recall=recall, f1=f1,
            accuracy=_ratio(tp + tn, total),
            support=int(row_sums[index]),
        )

    present: List[ClassScores] = [s for s in per_class.values() if s.support > 0]
    supports = np.array([s.support for s in present], dtype=float)

    def macro(attr: str) -> float:
        return float(np.mean([getattr(s, attr) for s in present])) if present else 0.0

    def weighted(attr: str) -> float:
        if not present:
            return 0.0
        return float(np.average([getattr(s, attr) for s in present], weights=supports))

    report = ClassReport(
        per_class=per_class,
        accuracy=_ratio(confusion.trace, total),
        macro_precision=macro("precision"),
        macro_recall=macro("recall"),
        macro_f1=macro("f1"),
        weighted_precision=weighted("precision"),
        weighted_recall=weighted("recall"),
        weighted_f1=weighted("f1"),
        confusion=confusion,
    )
    logger.debug(f"Classification report over {total} samples: accuracy={report.accuracy:.2f}")
    return report
