"""Evaluation runs over a manifest: transcription and classification reports."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
from joblib import Parallel, delayed

from config.run_config import RunConfig
from models.lm.ngram import NGramModel
from models.meter.labels import CANONICAL_ORDER
from models.ml.meter_head import LinearHead
from utils.logger import get_logger
from utils.manifest import SPLIT_NOTE, ManifestEntry
from utils.metrics import ClassReport, TranscriptionScore, classification_report, score_transcription
from utils.pipeline import STATUS_UNSCORABLE, PipelineOutput, load_resources, run_pipeline
from utils.synthesis import build_alphabet
from utils.textkit import strip_diacritics, strip_separators

logger = get_logger(__name__)


def _pct(value: float) -> float:
    return round(float(value), 2)


def _ratio(value: float) -> float:
    return round(float(value), 4)


def _score_dict(score: Optional[TranscriptionScore]) -> Optional[Dict[str, Any]]:
    if score is None:
        return None
    return {key: _ratio(value) if isinstance(value, float) else value for key, value in score.to_dict().items()}


@dataclass
class EvaluationReport:
    config: RunConfig
    entries: List[ManifestEntry]
    outputs: List[PipelineOutput]
    transcription: Optional[TranscriptionScore] = None
    undiacritized: Optional[TranscriptionScore] = None
    classification: Optional[ClassReport] = None
    split_note: Optional[str] = None
    truth: Dict[str, Any] = field(default_factory=dict)

    @property
    def unscorable(self) -> int:
        return sum(1 for output in self.outputs if output.status == STATUS_UNSCORABLE)

    def classification_dict(self) -> Optional[Dict[str, Any]]:
        report = self.classification
        if report is None:
            return None
        return {
            "accuracy": _pct(report.accuracy),
            "macro": {k: _pct(v) for k, v in report.table_rows("macro").items() if k != "Accuracy"},
            "weighted": {k: _pct(v) for k, v in report.table_rows("weighted").items() if k != "Accuracy"},
            "per_class": {
                str(label.value): {
                    "precision": _pct(scores.precision),
                    "recall": _pct(scores.recall),
                    "f1": _pct(scores.f1),
                    "support": scores.support,
                }
                for label, scores in report.per_class.items()
            },
            "confusion": {
                "labels": [label.value for label in report.confusion.labels],
                "counts": report.confusion.counts.tolist(),
            },
            "evaluated": report.confusion.total,
            "unscorable": self.unscorable,
        }

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form; identical inputs give identical dictionaries."""
        transcription = _score_dict(self.transcription)
        if transcription is not None and self.undiacritized is not None:
            transcription["undiacritized"] = _score_dict(self.undiacritized)
        return {
            "config": self.config.to_dict(),
            "entries": len(self.outputs),
            "unscorable": self.unscorable,
            "split_note": self.split_note,
            "transcription": transcription,
            "classification": self.classification_dict(),
            "records": [
                {
                    "id": output.id,
                    "decoded": output.decoded,
                    "predicted": output.label.value if output.label else None,
                    "meter": self.truth.get(output.id),
                    "status": output.status,
                    "distance": _ratio(output.distance) if output.distance is not None else None,
                }
                for output in self.outputs
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def evaluate(
    entries: Sequence[ManifestEntry],
    config: RunConfig,
    lm: Optional[NGramModel] = None,
    head: Optional[LinearHead] = None,
    alphabet: Optional[Tuple[str, ...]] = None,
) -> EvaluationReport:
    """
    Run the pipeline on every entry and aggregate the metrics.

    WER/CER cover decoded entries with transcripts (hemistich separators
    removed); classification covers labeled entries that scansion could
    score. Unscorable entries are counted and excluded.

    Args:
        entries: Manifest entries
        config: Run configuration
        lm: Loaded language model (read from config.lm_path when missing)
        head: Loaded head (read from config.head_path when missing)
        alphabet: Alphabet for synthetic emissions (defaults to the transcripts')

    Returns:
        EvaluationReport
    """
    config.validate()
    entries = list(entries)
    if (config.use_lm and lm is None) or (config.classifier == "head" and head is None):
        loaded_lm, loaded_head = load_resources(config)
        lm = lm or loaded_lm
        head = head or loaded_head
    if alphabet is None and config.classifier != "head":
        transcripts = [entry.transcript for entry in entries if entry.transcript and not entry.emission_path]
        alphabet = build_alphabet(transcripts) if transcripts else None

    logger.info(f"Evaluating {len(entries)} entries (decoder={config.decoder}, "
                f"classifier={config.classifier}, use_lm={config.use_lm}, ablation={config.ablation})")
    outputs = Parallel(n_jobs=config.n_jobs)(
        delayed(run_pipeline)(entry, config, lm, head, None, alphabet) for entry in entries
    )
    outputs = sorted(outputs, key=lambda output: output.id)
    by_id = {entry.id: entry for entry in entries}

    transcription = undiacritized = None
    if not config.ablation and config.classifier == "scansion":
        for output in outputs:
            reference = by_id[output.id].transcript
            if reference is None or output.decoded is None:
                continue
            reference, decoded = strip_separators(reference), strip_separators(output.decoded)
            score = score_transcription(reference, decoded)
            transcription = score if transcription is None else transcription.merge(score)
            bare = score_transcription(strip_diacritics(reference), strip_diacritics(decoded))
            undiacritized = bare if undiacritized is None else undiacritized.merge(bare)

    truth, pred = [], []
    for output in outputs:
        meter = by_id[output.id].meter
        if meter is not None and output.label is not None:
            truth.append(meter)
            pred.append(output.label)
    classification = classification_report(truth, pred, CANONICAL_ORDER) if truth else None

    report = EvaluationReport(
        config=config,
        entries=entries,
        outputs=outputs,
        transcription=transcription,
        undiacritized=undiacritized,
        classification=classification,
        split_note=SPLIT_NOTE if any(entry.split for entry in entries) else None,
        truth={entry.id: entry.meter.value for entry in entries if entry.meter},
    )
    if report.unscorable:
        logger.warning(f"{report.unscorable} entries were unscorable and excluded from classification")
    if transcription is not None:
        logger.info(f"WER={transcription.wer:.4f} CER={transcription.cer:.4f}")
    if classification is not None:
        logger.info(f"Accuracy={classification.accuracy:.2f}% macro F1={classification.macro_f1:.2f}%")
    return report


def format_report(report: EvaluationReport) -> str:
    """Human-readable report: percentages with 2 decimals, ratios with 4."""
    parts = [f"Entries: {len(report.outputs)}  Unscorable: {report.unscorable}"]
    if report.split_note:
        parts.append(f"Split: {report.split_note}")
    if report.transcription is not None:
        frame = pd.DataFrame(
            {"WER": [report.transcription.wer * 100, report.undiacritized.wer * 100],
             "CER": [report.transcription.cer * 100, report.undiacritized.cer * 100]},
            index=["transcription (%)", "without diacritics (%)"],
        )
        parts.append(frame.to_string(float_format=lambda v: f"{v:.2f}"))
    if report.classification is not None:
        summary = pd.DataFrame({
            "macro": report.classification.table_rows("macro"),
            "weighted": report.classification.table_rows("weighted"),
        })
        parts.append(summary.to_string(float_format=lambda v: f"{v:.2f}"))
        parts.append(report.classification.per_class_frame()[["precision", "recall", "f1", "support"]]
                     .to_string(float_format=lambda v: f"{v:.2f}"))
        parts.append(report.classification.confusion.to_frame().to_string())
    return "\n\n".join(parts) + "\n"


def write_report(report: EvaluationReport, path: Union[str, Path]) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8", newline="\n")
    logger.info(f"Report written to {path}")


def compare_configurations(
    entries: Sequence[ManifestEntry],
    configs: Dict[str, RunConfig],
    lm: Optional[NGramModel] = None,
    head: Optional[LinearHead] = None,
) -> pd.DataFrame:
    """One row per configuration: WER, CER (%), accuracy and macro P/R/F1 (%)."""
    rows = []
    for name, config in configs.items():
        report = evaluate(entries, config, lm=lm if config.use_lm else None,
                          head=head if config.classifier == "head" else None)
        row: Dict[str, Optional[float]] = {"configuration": name}
        if report.transcription is not None:
            row["WER"] = report.transcription.wer * 100
            row["CER"] = report.transcription.cer * 100
        if report.classification is not None:
            row.update(report.classification.table_rows("macro"))
        row["Unscorable"] = report.unscorable
        rows.append(row)
    columns = ["configuration", "WER", "CER", "Accuracy", "Precision", "Recall", "F1-score", "Unscorable"]
    return pd.DataFrame(rows, columns=columns).set_index("configuration").round(2)


def attribute_errors(system: EvaluationReport, ground_truth: EvaluationReport) -> Dict[str, float]:
    """
    Split the F1 loss between transcription and classification.

    The transcription drop is ground-truth F1 minus system F1; the
    classifier drop is 100 minus ground-truth F1.
    """
    if system.classification is None or ground_truth.classification is None:
        raise ValueError("both reports need a classification section")
    system_f1 = system.classification.macro_f1
    truth_f1 = ground_truth.classification.macro_f1
    return {
        "system_f1": _pct(system_f1),
        "ground_truth_f1": _pct(truth_f1),
        "transcription_drop": _pct(truth_f1 - system_f1),
        "classifier_drop": _pct(100.0 - truth_f1),
    }


def plot_confusion_matrix(report: EvaluationReport, path: Union[str, Path]) -> None:
    """Save a heatmap of the report's confusion matrix."""
    if report.classification is None:
        raise ValueError("report has no classification section")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import seaborn as sns

    frame = report.classification.confusion.to_frame()
    fig, ax = plt.subplots(figsize=(11, 9))
    sns.heatmap(frame, annot=True, fmt="d", cmap="Blues", cbar=False, ax=ax)
    ax.set_xlabel("Predicted meter")
    ax.set_ylabel("True meter")
    ax.set_title(f"Accuracy {report.classification.accuracy:.2f}%")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info(f"Confusion matrix figure written to {path}")
