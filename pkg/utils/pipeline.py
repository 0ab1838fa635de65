"""Per-verse orchestration: transcription-based and end-to-end classification."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.run_config import RunConfig
from models.ctc.decoder import decode
from models.ctc.emission import EmissionMatrix, read_emission
from models.lm.arpa import read_arpa
from models.lm.ngram import NGramModel
from models.meter.labels import CANONICAL_ORDER, MeterLabel
from models.meter.scansion import classify_scansion
from models.ml.meter_head import LinearHead, head_forward, pool_features
from utils.errors import AlphabetMismatch, ConfigError, DataError
from utils.logger import get_logger
from utils.manifest import ManifestEntry, derive_seed
from utils.synthesis import synth_emission
from utils.textkit import Verse, normalize

logger = get_logger(__name__)

STATUS_OK = "ok"
STATUS_UNSCORABLE = "unscorable"


@dataclass
class PipelineOutput:
    """Outcome for one verse; `label` is None when scansion refused the text."""

    id: str
    decoded: Optional[str]
    label: Optional[MeterLabel]
    status: str = STATUS_OK
    distance: Optional[float] = None
    reason: Optional[str] = None


def load_resources(config: RunConfig) -> Tuple[Optional[NGramModel], Optional[LinearHead]]:
    """Read the language model and head files a configuration asks for."""
    lm = read_arpa(config.lm_path) if config.use_lm else None
    head = None
    if config.classifier == "head":
        head = LinearHead(1)
        head.load(config.head_path)
    return lm, head


def entry_emission(
    entry: ManifestEntry,
    config: RunConfig,
    alphabet: Optional[Tuple[str, ...]] = None,
) -> Optional[EmissionMatrix]:
    """The entry's emission file, or a synthetic emission of its transcript."""
    if entry.emission_path:
        return read_emission(entry.emission_path)
    if entry.transcript is None:
        return None
    return synth_emission(
        entry.transcript,
        alphabet=alphabet,
        frames_per_char=config.frames_per_char,
        noise=config.noise,
        blank_prob=config.blank_prob,
        seed=derive_seed(config.seed, "synth", entry.id),
    )


def _scan(entry_id: str, text: str, config: RunConfig) -> PipelineOutput:
    try:
        result = classify_scansion(
            Verse.from_text(text),
            threshold=config.prose_threshold,
            diacritic_threshold=config.diacritic_threshold,
        )
    except DataError as exc:
        logger.warning(f"Unscorable verse {entry_id}: {exc}")
        return PipelineOutput(entry_id, text, None, STATUS_UNSCORABLE, reason=str(exc))
    return PipelineOutput(entry_id, text, result.label, distance=result.distance)


def run_pipeline(
    entry: ManifestEntry,
    config: RunConfig,
    lm: Optional[NGramModel] = None,
    head: Optional[LinearHead] = None,
    emission: Optional[EmissionMatrix] = None,
    alphabet: Optional[Tuple[str, ...]] = None,
) -> PipelineOutput:
    """
    Classify one verse.

    Transcription path: emission -> decode -> normalize -> scansion; in
    ablation mode the ground-truth transcript skips decoding. End-to-end
    path: emission -> pooled features -> head -> argmax.

    Args:
        entry: Manifest entry
        config: Validated run configuration
        lm: Language model for fusion (config.use_lm)
        head: Trained head (config.classifier == "head")
        emission: Emission to use instead of the entry's file or a synthetic one
        alphabet: Alphabet for synthetic emissions (defaults to the head's features)

    Returns:
        PipelineOutput; scansion refusals come back as unscorable
    """
    if config.classifier == "head":
        if head is None:
            raise ConfigError("classifier 'head' needs a loaded head")
        if alphabet is None and head.feature_names:
            alphabet = tuple(head.feature_names)
        if emission is None:
            emission = entry_emission(entry, config, alphabet)
        if emission is None:
            raise DataError(f"entry {entry.id!r} has no emission for the end-to-end head")
        if head.feature_names and list(emission.alphabet) != list(head.feature_names):
            raise AlphabetMismatch(f"emission alphabet of {entry.id!r} differs from the head's")
        probabilities = head_forward(head, pool_features(emission))
        label = CANONICAL_ORDER[int(np.argmax(probabilities))]
        return PipelineOutput(entry.id, None, label, distance=None)

    if config.ablation:
        if entry.transcript is None:
            raise DataError(f"entry {entry.id!r} has no transcript for ablation mode")
        return _scan(entry.id, entry.transcript, config)

    if emission is None:
        emission = entry_emission(entry, config, alphabet)
    if emission is None:
        raise DataError(f"entry {entry.id!r} has neither emission nor transcript")
    decoded = decode(emission, config, lm).text
    try:
        text = normalize(decoded)
    except DataError as exc:
        logger.warning(f"Unscorable decode for {entry.id}: {exc}")
        return PipelineOutput(entry.id, decoded, None, STATUS_UNSCORABLE, reason=str(exc))
    output = _scan(entry.id, text, config)
    output.decoded = decoded
    return output
