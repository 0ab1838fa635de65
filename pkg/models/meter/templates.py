"""Meter templates: feet (tafail), their classical variants and bit patterns.

Every foot is written as diacritized Arabic and turned into its bit pattern
by the same sound conversion used on verses, so templates and verses are
read by one set of rules.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Tuple

import pandas as pd

from models.meter.labels import METERS, MeterLabel
from utils.logger import get_logger
from utils.textkit import SoundUnit, orthography_to_sound

logger = get_logger(__name__)


def pattern_extract(sounds: List[SoundUnit]) -> str:
    """Moving unit -> "1", still unit -> "0", order preserved."""
    return "".join("1" if unit.moving else "0" for unit in sounds)


# Base tafila -> common foot-local variants (zihafat), all written forms
TAFAIL: Dict[str, Tuple[str, ...]] = {
    "فَعُولُنْ": ("فَعُولُ", "فَعُو"),
    "مَفَاعِيلُنْ": ("مَفَاعِلُنْ", "مَفَاعِيلُ"),
    "فَاعِلَاتُنْ": ("فَعِلَاتُنْ", "فَاعِلَاتُ", "فَاعِلُنْ", "فَعِلَاتُ"),
    "فَاعِلُنْ": ("فَعِلُنْ", "فَعْلُنْ"),
    "مُسْتَفْعِلُنْ": ("مُتَفْعِلُنْ", "مُسْتَعِلُنْ", "مُتَعِلُنْ", "مُسْتَفْعِلْ"),
    "مُفَاعَلَتُنْ": ("مُفَاعَلْتُنْ", "فَعُولُنْ"),
    "مُتَفَاعِلُنْ": ("مُتْفَاعِلُنْ", "مُفَاعِلُنْ", "مُتَفَاعِلْ"),
    "مَفْعُولَاتُ": ("مَعُولَاتُ", "مَفْعُلَاتُ", "مَفْعُولَا"),
}

_TAWEEL = ("فَعُولُنْ", "مَفَاعِيلُنْ", "فَعُولُنْ", "مَفَاعِيلُنْ")
_MADEED = ("فَاعِلَاتُنْ", "فَاعِلُنْ", "فَاعِلَاتُنْ")
_BASEET = ("مُسْتَفْعِلُنْ", "فَاعِلُنْ", "مُسْتَفْعِلُنْ", "فَاعِلُنْ")
_WAFER = ("مُفَاعَلَتُنْ", "مُفَاعَلَتُنْ", "فَعُولُنْ")

# Base feet of one hemistich per meter
METER_FEET: Dict[MeterLabel, Tuple[str, ...]] = {
    MeterLabel.TAWEEL: _TAWEEL,
    MeterLabel.MADEED: _MADEED,
    MeterLabel.BASEET: _BASEET,
    MeterLabel.WAFER: _WAFER,
    MeterLabel.KAMEL: ("مُتَفَاعِلُنْ",) * 3,
    MeterLabel.HAZAJ: ("مَفَاعِيلُنْ",) * 2,
    MeterLabel.RAJAZ: ("مُسْتَفْعِلُنْ",) * 3,
    MeterLabel.RAMAL: ("فَاعِلَاتُنْ",) * 3,
    MeterLabel.SAREE: ("مُسْتَفْعِلُنْ", "مُسْتَفْعِلُنْ", "مَفْعُولَاتُ"),
    MeterLabel.MUNSAREH: ("مُسْتَفْعِلُنْ", "مَفْعُولَاتُ", "مُسْتَفْعِلُنْ"),
    MeterLabel.KHAFEEF: ("فَاعِلَاتُنْ", "مُسْتَفْعِلُنْ", "فَاعِلَاتُنْ"),
    MeterLabel.MUDHARE: ("مَفَاعِيلُنْ", "فَاعِلَاتُنْ"),
    MeterLabel.MUQTADEB: ("مَفْعُولَاتُ", "مُسْتَفْعِلُنْ"),
    MeterLabel.MUJTATH: ("مُسْتَفْعِلُنْ", "فَاعِلَاتُنْ"),
    MeterLabel.MUTAQAREB: ("فَعُولُنْ",) * 4,
    MeterLabel.MUTADARAK: ("فَاعِلُنْ",) * 4,
}


@dataclass(frozen=True)
class Alternative:
    """One admissible bit string of a foot; `variant` marks a deformation of the base."""

    form: str
    bits: str
    variant: bool


@dataclass(frozen=True)
class Foot:
    name: str
    alternatives: Tuple[Alternative, ...]

    @property
    def base(self) -> str:
        return self.alternatives[0].bits


@dataclass(frozen=True)
class MeterTemplate:
    meter: MeterLabel
    feet: Tuple[Foot, ...]

    @property
    def base_pattern(self) -> str:
        return "".join(foot.base for foot in self.feet)


@lru_cache(maxsize=None)
def foot_bits(form: str) -> str:
    """Bit pattern of a diacritized tafila read in the middle of a hemistich."""
    return pattern_extract(orthography_to_sound(form, threshold=0.0))


def _foot(name: str, final: bool) -> Foot:
    alternatives = [Alternative(name, foot_bits(name), False)]
    for form in TAFAIL[name]:
        bits = foot_bits(form)
        if all(bits != alt.bits for alt in alternatives):
            alternatives.append(Alternative(form, bits, True))
    if final:
        # A hemistich-final short vowel is saturated into a long one
        for alt in list(alternatives):
            saturated = alt.bits + "0"
            if alt.bits.endswith("1") and all(saturated != other.bits for other in alternatives):
                alternatives.append(Alternative(alt.form, saturated, alt.variant))
    return Foot(name, tuple(alternatives))


@lru_cache(maxsize=1)
def _templates() -> Tuple[MeterTemplate, ...]:
    templates = []
    for meter in METERS:
        names = METER_FEET[meter]
        feet = tuple(_foot(name, final=index == len(names) - 1) for index, name in enumerate(names))
        templates.append(MeterTemplate(meter, feet))
    logger.debug(f"Built {len(templates)} meter templates")
    return tuple(templates)


def build_templates() -> List[MeterTemplate]:
    """The 16 meter templates in canonical order; built once and cached."""
    return list(_templates())


def dump_templates() -> pd.DataFrame:
    """Audit table: one row per (meter, foot, alternative)."""
    rows = []
    for template in build_templates():
        for position, foot in enumerate(template.feet, start=1):
            for alt in foot.alternatives:
                rows.append({
                    "meter": template.meter.value,
                    "foot": position,
                    "tafila": foot.name,
                    "form": alt.form,
                    "bits": alt.bits,
                    "variant": alt.variant,
                })
    return pd.DataFrame(rows)
