"""Synthetic acoustic emissions and verses.

Emissions stand in for a recited verse passed through an acoustic model.
Noise acts at two levels: each character is replaced, with probability
noise, by another symbol drawn uniformly; each frame then puts 1 - noise on
the emitted symbol and spreads noise over the rest.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.ctc.emission import BLANK, SPACE, EmissionMatrix
from models.meter.labels import METERS, MeterLabel
from models.meter.scansion import classify_scansion
from models.meter.templates import METER_FEET, TAFAIL
from utils.errors import AlphabetMismatch, DataError
from utils.logger import get_logger
from utils.textkit import Verse

logger = get_logger(__name__)

PROBABILITY_FLOOR = 1e-6


def build_alphabet(transcripts: Sequence[str]) -> Tuple[str, ...]:
    """("<blank>", " ", every other character seen, sorted)."""
    chars = set()
    for transcript in transcripts:
        chars.update(transcript)
    chars.discard(SPACE)
    return (BLANK, SPACE) + tuple(sorted(chars))


def _frame(size: int, target: int, noise: float, floor: float) -> np.ndarray:
    row = np.full(size, noise / (size - 1))
    row[target] = 1.0 - noise
    row = np.maximum(row, floor)
    return row / row.sum()


def synth_emission(
    transcript: str,
    alphabet: Optional[Sequence[str]] = None,
    frames_per_char: int = 3,
    noise: float = 0.0,
    blank_prob: float = 0.3,
    seed: int = 0,
    floor: float = PROBABILITY_FLOOR,
) -> EmissionMatrix:
    """
    Emission matrix for a transcript.

    Args:
        transcript: Text to emit
        alphabet: Symbols, blank first (defaults to the transcript's own alphabet)
        frames_per_char: Frames per emitted character
        noise: Character substitution rate and off-target frame mass, in [0, 1)
        blank_prob: Chance of a blank frame between two different characters
        seed: Random seed
        floor: Minimum probability before row renormalization

    Returns:
        Validated EmissionMatrix

    Raises:
        AlphabetMismatch: a transcript character is missing from the alphabet
    """
    if not 0.0 <= noise < 1.0:
        raise ValueError(f"noise must lie in [0, 1), got {noise}")
    if frames_per_char < 1:
        raise ValueError("frames_per_char must be at least 1")
    alphabet = tuple(alphabet) if alphabet is not None else build_alphabet([transcript])
    missing = sorted(set(transcript) - set(alphabet[1:]))
    if missing:
        raise AlphabetMismatch(f"characters {missing} are not in the alphabet")

    size = len(alphabet)
    index = {symbol: i for i, symbol in enumerate(alphabet)}
    rng = np.random.default_rng(seed)

    emitted: List[int] = []
    for char in transcript:
        target = index[char]
        if noise > 0 and size > 2 and rng.random() < noise:
            others = [i for i in range(1, size) if i != target]
            target = others[int(rng.integers(len(others)))]
        emitted.append(target)

    rows: List[np.ndarray] = []
    blank_row = _frame(size, 0, noise, floor)
    for position, target in enumerate(emitted):
        if position > 0:
            # Identical neighbours always need a blank to stay distinct
            if target == emitted[position - 1] or rng.random() < blank_prob:
                rows.append(blank_row)
        rows.extend([_frame(size, target, noise, floor)] * frames_per_char)
    if not rows:
        rows.append(blank_row)

    return EmissionMatrix(alphabet, np.log(np.vstack(rows))).validate()


def _hemistich(meter: MeterLabel, rng: np.random.Generator) -> str:
    names = list(METER_FEET[meter])
    position = int(rng.integers(len(names)))
    variants = TAFAIL[names[position]]
    forms = list(names)
    forms[position] = variants[int(rng.integers(len(variants)))]
    return " ".join(forms)


def synthesize_verses(per_meter: int, seed: int, max_attempts: int = 50) -> List[Tuple[str, MeterLabel]]:
    """
    Diacritized verses built from each meter's feet, one variant foot per hemistich.

    A verse is kept only when scansion of its clean text returns its meter;
    meters are visited in canonical order. A meter that runs out of attempts
    is completed with its base mnemonic verse.

    Args:
        per_meter: Verses per meter
        seed: Random seed
        max_attempts: Draws allowed per requested verse

    Returns:
        (verse text, meter) pairs
    """
    rng = np.random.default_rng(seed)
    verses: List[Tuple[str, MeterLabel]] = []
    for meter in METERS:
        kept = 0
        for _ in range(per_meter * max_attempts):
            if kept == per_meter:
                break
            text = f"{_hemistich(meter, rng)} # {_hemistich(meter, rng)}"
            if classify_scansion(Verse.from_text(text)).label is meter:
                verses.append((text, meter))
                kept += 1
        if kept < per_meter:
            logger.warning(f"Synthesized only {kept}/{per_meter} verses for {meter.value}, topping up with its mnemonic verse")
            mnemonic = " ".join(METER_FEET[meter])
            verses.extend([(f"{mnemonic} # {mnemonic}", meter)] * (per_meter - kept))
    logger.info(f"Synthesized {len(verses)} verses over {len(METERS)} meters")
    return verses


@dataclass
class AmbiguityCase:
    """An emission whose acoustics slightly favour `confusion` over `transcript`."""

    transcript: str
    confusion: str
    emission: EmissionMatrix


# (true sentence, index of the ambiguous character, competing character)
_AMBIGUOUS = [
    ("دخل الولد البيت", 12, "ز"),
    ("كتب الطالب الدرس", 13, "ع"),
    ("قرأ الشيخ الكتاب", 13, "ل"),
    ("فتح الرجل الباب", 12, "ن"),
]

# Sentences that make both competing words known to the model, the true one in context
_CORPUS = [
    "دخل الولد البيت",
    "دخل الرجل البيت",
    "اشترى الرجل الزيت",
    "كتب الطالب الدرس",
    "كتب الولد الدرس",
    "حضر الرجل العرس",
    "قرأ الشيخ الكتاب",
    "قرأ الطالب الكتاب",
    "رأى الولد الكلاب",
    "فتح الرجل الباب",
    "فتح الولد الباب",
    "كسر الذئب الناب",
]


def ambiguity_suite(ambiguous_mass: float = 0.55, floor: float = 1e-4) -> Tuple[List[AmbiguityCase], List[str]]:
    """
    Emissions with an acoustic near-tie on one character, plus an LM corpus.

    Each case emits one frame per character; the ambiguous frame puts
    `ambiguous_mass` on the competing character and the rest on the true one,
    so acoustics alone prefer the wrong in-vocabulary word.

    Returns:
        (cases, corpus sentences)
    """
    texts = [text for text, _, _ in _AMBIGUOUS] + [wrong for _, _, wrong in _AMBIGUOUS]
    alphabet = build_alphabet(texts)
    index = {symbol: i for i, symbol in enumerate(alphabet)}
    size = len(alphabet)

    def frame(probabilities: Dict[int, float]) -> np.ndarray:
        row = np.full(size, floor)
        for symbol, p in probabilities.items():
            row[symbol] = p
        return row / row.sum()

    cases = []
    for text, position, wrong in _AMBIGUOUS:
        if text[position] == wrong or text[position] == SPACE:
            raise DataError(f"bad ambiguity position {position} in {text!r}")
        rows = []
        for i, char in enumerate(text):
            if i > 0 and char == text[i - 1]:
                rows.append(frame({0: 1.0}))
            if i == position:
                rows.append(frame({index[wrong]: ambiguous_mass, index[char]: 1.0 - ambiguous_mass}))
            else:
                rows.append(frame({index[char]: 1.0}))
        emission = EmissionMatrix(alphabet, np.log(np.vstack(rows))).validate()
        confusion = text[:position] + wrong + text[position + 1:]
        cases.append(AmbiguityCase(text, confusion, emission))
    return cases, list(_CORPUS)
