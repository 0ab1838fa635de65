"""Arabic text normalization, tokenization and prosodic ("Arud") writing.

The sound conversion turns diacritized orthography into the sequence of
moving/still units the scansion engine reads. Rules are applied in a fixed
order: shadda expansion, tanween, definite article, long vowels, silent
alef after plural waw, then hemistich-final saturation.
"""

import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from config.settings import settings
from utils.errors import DataError, EmptyText, InsufficientDiacritics, InvalidScript
from utils.logger import get_logger

logger = get_logger(__name__)

# Diacritics (harakat)
FATHATAN = "\u064b"
DAMMATAN = "\u064c"
KASRATAN = "\u064d"
FATHA = "\u064e"
DAMMA = "\u064f"
KASRA = "\u0650"
SHADDA = "\u0651"
SUKUN = "\u0652"
DAGGER_ALEF = "\u0670"
TATWEEL = "\u0640"

MARKS = frozenset("\u064b\u064c\u064d\u064e\u064f\u0650\u0651\u0652\u0653\u0654\u0655\u0670")
_MARK_RUN = re.compile("[\u064b-\u0655\u0670]+")

ALEF = "ا"
ALEF_WASLA = "ٱ"
ALEF_MADDA = "آ"
ALEF_MAQSURA = "ى"
WAW = "و"
YA = "ي"
LAM = "ل"
NOON = "ن"
HAMZA = "ء"

# Letters exempt from carrying a mark
ALEF_FORMS = frozenset([ALEF, ALEF_WASLA, ALEF_MADDA, ALEF_MAQSURA])
SUN_LETTERS = frozenset("تثدذرزسشصضطظلن")
PROCLITICS = frozenset("وفبك")

HEMISTICH_SEPARATORS = ("#", "*")
_SEPARATOR = re.compile(r"\s*[#*]\s*|\s{3,}")


class Vowel(str, Enum):
    """Short vowel carried by a sound unit; NONE marks a still (sakin) unit."""

    FATHA = "fatha"
    DAMMA = "damma"
    KASRA = "kasra"
    NONE = "none"


class Position(str, Enum):
    INTERNAL = "internal"
    HEMISTICH_FINAL = "hemistich_final"


_VOWEL_MARKS = {FATHA: Vowel.FATHA, DAMMA: Vowel.DAMMA, KASRA: Vowel.KASRA}
_TANWEEN_MARKS = {FATHATAN: Vowel.FATHA, DAMMATAN: Vowel.DAMMA, KASRATAN: Vowel.KASRA}
_SATURATION = {Vowel.FATHA: ALEF, Vowel.DAMMA: WAW, Vowel.KASRA: YA}
_LONG_VOWEL_OF = {WAW: Vowel.DAMMA, YA: Vowel.KASRA}


@dataclass(frozen=True)
class SoundUnit:
    """One consonant with its vowel, or a still unit when vowel is NONE."""

    consonant: str
    vowel: Vowel

    @property
    def moving(self) -> bool:
        return self.vowel is not Vowel.NONE

    def __str__(self) -> str:
        return f"{self.consonant}+{self.vowel.value}"


@dataclass(frozen=True)
class Verse:
    """
    A poem verse (Bait) split into one or two hemistichs (Shatr).

    `raw` is the normalized verse with hemistichs joined by " # ".
    """

    raw: str
    hemistichs: Tuple[str, ...]
    diacritic_coverage: float

    @classmethod
    def from_text(cls, text: str) -> "Verse":
        """
        Build a verse from raw text.

        Args:
            text: Verse text, hemistichs separated by "#", "*" or 3+ spaces

        Returns:
            Normalized Verse

        Raises:
            EmptyText: nothing left after normalization
            InvalidScript: non-Arabic letters or digits present
        """
        hemistichs = tuple(normalize(part) for part in split_hemistichs(text))
        hemistichs = tuple(h for h in hemistichs if h)
        if not hemistichs:
            raise EmptyText("verse is empty after normalization")
        joined = " ".join(hemistichs)
        return cls(
            raw=" # ".join(hemistichs),
            hemistichs=hemistichs,
            diacritic_coverage=diacritic_coverage(joined),
        )


def _is_arabic_letter(ch: str) -> bool:
    return "\u0600" <= ch <= "\u06ff" and unicodedata.category(ch).startswith("L")


def _order_marks(match: re.Match) -> str:
    # Shadda first, the rest keep their canonical (NFC) order
    return "".join(sorted(match.group(0), key=lambda mark: 0 if mark == SHADDA else 1))


def normalize(text: str) -> str:
    """
    Normalize Arabic text.

    Removes tatweel, applies canonical composition, orders each run of
    diacritics with shadda first and collapses whitespace. Diacritics are kept.

    Raises:
        InvalidScript: text holds Latin letters, digits, or letters outside
            the Arabic block
    """
    text = text.replace(TATWEEL, "")
    text = unicodedata.normalize("NFC", text)
    for ch in text:
        category = unicodedata.category(ch)
        if category == "Nd":
            raise InvalidScript(f"digit {ch!r} in transcript")
        if category.startswith("L") and not _is_arabic_letter(ch):
            raise InvalidScript(f"non-Arabic letter {ch!r} in transcript")
    text = _MARK_RUN.sub(_order_marks, text)
    return " ".join(text.split())


def split_hemistichs(text: str) -> List[str]:
    """
    Split a verse into hemistichs.

    Accepted separators are "#", "*" and runs of three or more spaces; a
    verse without separator is a single hemistich.
    """
    parts = [part.strip() for part in _SEPARATOR.split(text.strip())]
    parts = [part for part in parts if part]
    if len(parts) > 2:
        raise DataError(f"a verse has at most two hemistichs, found {len(parts)}")
    return parts


def strip_separators(text: str) -> str:
    """Replace hemistich separators by a single space."""
    return " ".join(_SEPARATOR.sub(" ", text).split())


def strip_diacritics(text: str) -> str:
    """Remove every diacritic mark, keeping letters and spacing."""
    return "".join(ch for ch in text if ch not in MARKS)


def tokenize(text: str) -> List[str]:
    """Normalize and split into words, dropping separators and punctuation."""
    words = []
    for raw_word in strip_separators(normalize(text)).split():
        word = "".join(ch for ch in raw_word if _is_arabic_letter(ch) or ch in MARKS)
        if word:
            words.append(word)
    return words


@dataclass
class _Letter:
    char: str
    vowel: Optional[Vowel] = None
    tanween: Optional[Vowel] = None
    shadda: bool = False
    sukun: bool = False

    @property
    def marked(self) -> bool:
        return bool(self.vowel or self.tanween or self.shadda or self.sukun)

    @property
    def spoken_vowel(self) -> Optional[Vowel]:
        return self.vowel or self.tanween


def _parse_word(word: str) -> List[_Letter]:
    letters: List[_Letter] = []
    for ch in word:
        if _is_arabic_letter(ch):
            letters.append(_Letter(ch))
        elif ch in MARKS and letters:
            letter = letters[-1]
            if ch in _VOWEL_MARKS:
                letter.vowel = _VOWEL_MARKS[ch]
            elif ch in _TANWEEN_MARKS:
                letter.tanween = _TANWEEN_MARKS[ch]
            elif ch == SHADDA:
                letter.shadda = True
            elif ch == SUKUN:
                letter.sukun = True
    return letters


def _words(text: str) -> List[List[_Letter]]:
    return [letters for letters in (_parse_word(w) for w in strip_separators(text).split()) if letters]


def diacritic_coverage(text: str) -> float:
    """
    Share of letters that carry a mark among those required to carry one.

    Alef forms are exempt, as are unmarked waw/ya that follow their matching
    short vowel (or an unmarked letter, where they are read as long vowels).
    The unmarked lam of an article before a sun letter is silent and exempt.
    Empty text has coverage 0.
    """
    required = 0
    marked = 0
    for letters in _words(text):
        silent_lam = None
        article = _article_index(letters)
        if article is not None:
            lam = letters[article + 1]
            if not lam.marked and letters[article + 2].char in SUN_LETTERS:
                silent_lam = article + 1
        previous: Optional[_Letter] = None
        for index, letter in enumerate(letters):
            exempt = letter.char in ALEF_FORMS or index == silent_lam
            if letter.char in _LONG_VOWEL_OF and not letter.marked and previous is not None:
                exempt = previous.vowel is _LONG_VOWEL_OF[letter.char] or not previous.marked
            if not exempt:
                required += 1
                marked += letter.marked
            previous = letter
    if required == 0:
        return 0.0
    return marked / required


@dataclass
class _WordSounds:
    units: List[SoundUnit] = field(default_factory=list)
    long_flags: List[bool] = field(default_factory=list)
    dropped_wasl: bool = False

    def add(self, consonant: str, vowel: Vowel, long_vowel: bool = False) -> None:
        self.units.append(SoundUnit(consonant, vowel))
        self.long_flags.append(long_vowel)


def _article_index(letters: List[_Letter]) -> Optional[int]:
    """Index of the alef of a definite article, allowing one proclitic."""
    for start in (0, 1):
        if start == 1 and (letters[0].char not in PROCLITICS or letters[0].vowel is None):
            continue
        if len(letters) >= start + 3 and letters[start].char in (ALEF, ALEF_WASLA) \
                and not letters[start].marked and letters[start + 1].char == LAM:
            return start
    return None


def _attach_alef_tanween(letters: List[_Letter]) -> List[_Letter]:
    # "ـاً": fathatan written on the supporting alef belongs to the consonant before it
    if len(letters) >= 2 and letters[-1].char == ALEF and letters[-1].tanween is Vowel.FATHA:
        carrier = letters[-2]
        carrier.tanween = Vowel.FATHA
        carrier.vowel = None
        letters = letters[:-1] + [_Letter(ALEF)]
    return letters


def _consonant(out: _WordSounds, letter: _Letter) -> None:
    vowel = letter.spoken_vowel
    if letter.shadda:
        out.add(letter.char, Vowel.NONE)
        out.add(letter.char, vowel or Vowel.FATHA)
    elif letter.sukun:
        out.add(letter.char, Vowel.NONE)
    else:
        # Unmarked consonants are read as moving
        out.add(letter.char, vowel or Vowel.FATHA)
    if letter.tanween is not None:
        out.add(NOON, Vowel.NONE)


def _word_sounds(letters: List[_Letter], verse_initial: bool) -> _WordSounds:
    out = _WordSounds()
    letters = _attach_alef_tanween(letters)
    article = _article_index(letters)
    n = len(letters)
    j = 0
    while j < n:
        letter = letters[j]
        previous = letters[j - 1] if j > 0 else None

        if article is not None and j == article:
            if verse_initial and article == 0:
                out.add(ALEF, Vowel.FATHA)
            else:
                out.dropped_wasl = article == 0
            j += 1
            continue

        if article is not None and j == article + 1:
            following = letters[j + 1]
            if following.char in SUN_LETTERS:
                following.shadda = True
            else:
                out.add(LAM, Vowel.NONE)
            j += 1
            continue

        if j == 0 and (letter.char == ALEF_WASLA or (
                letter.char == ALEF and not letter.marked and n > 1 and letters[1].sukun)):
            if verse_initial:
                out.add(ALEF, Vowel.KASRA)
            else:
                out.dropped_wasl = True
            j += 1
            continue

        if letter.char == ALEF_MADDA:
            out.add(HAMZA, Vowel.FATHA)
            out.add(ALEF, Vowel.NONE, long_vowel=True)
        elif letter.char in (ALEF, ALEF_MAQSURA) and not letter.marked:
            silent = j == n - 1 and previous is not None and (
                previous.tanween is Vowel.FATHA
                or (previous.char == WAW and out.units and not out.units[-1].moving)
            )
            if not silent:
                out.add(letter.char, Vowel.NONE, long_vowel=True)
        elif letter.char in _LONG_VOWEL_OF and not letter.marked and previous is not None \
                and not previous.sukun:
            # Long vowel after its matching (or unwritten) vowel, diphthong after fatha
            long_vowel = previous.vowel is _LONG_VOWEL_OF[letter.char] or not previous.marked
            out.add(letter.char, Vowel.NONE, long_vowel=long_vowel)
        else:
            _consonant(out, letter)
        j += 1
    return out


def orthography_to_sound(
    text: str,
    position: Position = Position.INTERNAL,
    verse_initial: bool = False,
    threshold: Optional[float] = None,
) -> List[SoundUnit]:
    """
    Convert diacritized text into prosodic sound units.

    Args:
        text: One hemistich (or any word sequence) of diacritized Arabic
        position: HEMISTICH_FINAL saturates a final short vowel into a long one
        verse_initial: Keep a leading hamzat-wasl (pronounced verse-initially)
        threshold: Minimum diacritic coverage (defaults to settings)

    Returns:
        Sound units in reading order

    Raises:
        InsufficientDiacritics: coverage below threshold
    """
    text = normalize(text)
    threshold = settings.DIACRITIC_THRESHOLD if threshold is None else threshold
    coverage = diacritic_coverage(text)
    if coverage < threshold:
        raise InsufficientDiacritics(coverage, threshold)

    units: List[SoundUnit] = []
    long_flags: List[bool] = []
    for index, letters in enumerate(_words(text)):
        word = _word_sounds(letters, verse_initial=verse_initial and index == 0)
        if word.dropped_wasl and units and word.units and not word.units[0].moving:
            # Two stills meet across the dropped hamzat-wasl
            if long_flags[-1]:
                units.pop()
                long_flags.pop()
            elif not units[-1].moving:
                units[-1] = SoundUnit(units[-1].consonant, Vowel.KASRA)
        units.extend(word.units)
        long_flags.extend(word.long_flags)

    if position is Position.HEMISTICH_FINAL and units and units[-1].moving:
        units.append(SoundUnit(_SATURATION[units[-1].vowel], Vowel.NONE))

    logger.debug(f"Sound conversion: {len(units)} units from {len(text)} characters")
    return units


def verse_sounds(verse: Verse, threshold: Optional[float] = None) -> List[List[SoundUnit]]:
    """Sound units per hemistich; only the first hemistich is verse-initial."""
    return [
        orthography_to_sound(
            hemistich,
            position=Position.HEMISTICH_FINAL,
            verse_initial=index == 0,
            threshold=threshold,
        )
        for index, hemistich in enumerate(verse.hemistichs)
    ]
