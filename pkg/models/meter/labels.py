"""The 17 meter classes in canonical order."""

from enum import Enum
from typing import List

from utils.errors import UnknownLabel


class MeterLabel(str, Enum):
    """Sixteen classical meters plus Prose; declaration order is canonical."""

    TAWEEL = "Taweel"
    MADEED = "Madeed"
    BASEET = "Baseet"
    WAFER = "Wafer"
    KAMEL = "Kamel"
    HAZAJ = "Hazaj"
    RAJAZ = "Rajaz"
    RAMAL = "Ramal"
    SAREE = "Saree"
    MUNSAREH = "Munsareh"
    KHAFEEF = "Khafeef"
    MUDHARE = "Mudhare"
    MUQTADEB = "Muqtadeb"
    MUJTATH = "Mujtath"
    MUTAQAREB = "Mutaqareb"
    MUTADARAK = "Mutadarak"
    PROSE = "Prose"

    @property
    def ordinal(self) -> int:
        """Position in the canonical order (confusion matrix row)."""
        return CANONICAL_ORDER.index(self)

    @classmethod
    def parse(cls, name: str) -> "MeterLabel":
        """Look a label up by name, case-insensitively."""
        for label in cls:
            if label.value.lower() == name.strip().lower():
                return label
        raise UnknownLabel(f"unknown meter {name!r}")


CANONICAL_ORDER: List[MeterLabel] = list(MeterLabel)
METERS: List[MeterLabel] = [label for label in CANONICAL_ORDER if label is not MeterLabel.PROSE]
