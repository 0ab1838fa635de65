"""Rule-based scansion: match a verse's bit patterns against the meter templates."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from models.meter.labels import MeterLabel
from models.meter.templates import MeterTemplate, build_templates, pattern_extract
from utils.logger import get_logger
from utils.textkit import Verse, verse_sounds

logger = get_logger(__name__)

# Costs are combined as edits * EDIT_COST + variant feet, so edits dominate
EDIT_COST = 100
NEAREST = 3


@dataclass(frozen=True)
class TemplateMatch:
    meter: MeterLabel
    distance: float
    edits: int
    variants: int


@dataclass
class ScansionResult:
    label: MeterLabel
    distance: float
    nearest: List[TemplateMatch] = field(default_factory=list)
    patterns: List[str] = field(default_factory=list)

    @property
    def is_prose(self) -> bool:
        return self.label is MeterLabel.PROSE


def template_cost(pattern: str, template: MeterTemplate) -> Tuple[int, int]:
    """
    Minimal (edits, variant feet) aligning `pattern` with one admissible
    concatenation of the template's foot alternatives.

    Edits are minimized first, variant feet second.

    Returns:
        (edits, variants)
    """
    bits = np.frombuffer(pattern.encode("ascii"), dtype=np.uint8)
    n = len(bits)
    positions = np.arange(n + 1) * EDIT_COST
    # row[j]: best cost of the feet so far against pattern[:j]
    row = positions.copy()

    for foot in template.feet:
        best = np.full(n + 1, np.iinfo(np.int64).max // 2, dtype=np.int64)
        for alt in foot.alternatives:
            current = row.copy()
            for symbol in alt.bits.encode("ascii"):
                mismatch = (bits != symbol).astype(np.int64) * EDIT_COST
                step = current + EDIT_COST  # foot symbol deleted
                step[1:] = np.minimum(step[1:], current[:-1] + mismatch)
                # Pattern symbols inserted: step[j] = min_k<=j step[k] + (j - k) * cost
                current = np.minimum.accumulate(step - positions) + positions
            best = np.minimum(best, current + int(alt.variant))
        row = best

    cost = int(row[n])
    return cost // EDIT_COST, cost % EDIT_COST


def rank_templates(patterns: Sequence[str], templates: Optional[List[MeterTemplate]] = None) -> List[TemplateMatch]:
    """Templates sorted by mean normalized distance, variant count, then canonical order."""
    templates = templates or build_templates()
    matches = []
    for template in templates:
        base_length = len(template.base_pattern)
        distances, edits_total, variants_total = [], 0, 0
        for pattern in patterns:
            edits, variants = template_cost(pattern, template)
            distances.append(edits / base_length)
            edits_total += edits
            variants_total += variants
        matches.append(TemplateMatch(template.meter, float(np.mean(distances)), edits_total, variants_total))
    return sorted(matches, key=lambda m: (round(m.distance, 12), m.variants, m.meter.ordinal))


def classify_pattern(patterns: Sequence[str], threshold: Optional[float] = None) -> ScansionResult:
    """
    Classify one verse given the bit pattern of each hemistich.

    Args:
        patterns: One bit string per hemistich
        threshold: Prose threshold on the normalized distance (defaults to settings)

    Returns:
        ScansionResult; Prose when the nearest template is farther than the threshold
    """
    threshold = settings.PROSE_THRESHOLD if threshold is None else threshold
    patterns = list(patterns)
    if not patterns or not any(patterns):
        return ScansionResult(MeterLabel.PROSE, 1.0, [], patterns)

    ranked = rank_templates(patterns)
    best = ranked[0]
    label = best.meter if best.distance <= threshold else MeterLabel.PROSE
    return ScansionResult(label, best.distance, ranked[:NEAREST], patterns)


def classify_scansion(
    verse: Verse,
    threshold: Optional[float] = None,
    diacritic_threshold: Optional[float] = None,
) -> ScansionResult:
    """
    Scan a verse and return its meter.

    Args:
        verse: Normalized verse
        threshold: Prose threshold (defaults to settings.PROSE_THRESHOLD)
        diacritic_threshold: Minimum diacritic coverage (defaults to settings)

    Returns:
        ScansionResult with label, distance, the nearest templates and the patterns

    Raises:
        InsufficientDiacritics: the verse is not diacritized enough to scan
    """
    patterns = [pattern_extract(sounds) for sounds in verse_sounds(verse, diacritic_threshold)]
    result = classify_pattern(patterns, threshold)
    logger.debug(f"Scanned {'|'.join(patterns)} -> {result.label.value} ({result.distance:.3f})")
    return result
