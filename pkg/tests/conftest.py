"""Shared fixtures."""

import numpy as np
import pytest

from models.ctc.emission import BLANK, EmissionMatrix
from models.meter.labels import METERS
from models.meter.templates import METER_FEET


def mnemonic_verse(meter) -> str:
    """Both hemistichs written with the meter's base feet."""
    hemistich = " ".join(METER_FEET[meter])
    return f"{hemistich} # {hemistich}"


def random_emission(rng: np.random.Generator, frames: int, size: int) -> EmissionMatrix:
    alphabet = (BLANK,) + tuple("abcdefg"[:size - 1])
    probabilities = rng.dirichlet(np.ones(size), size=frames)
    return EmissionMatrix(alphabet, np.log(probabilities)).validate()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mnemonics():
    return {meter: mnemonic_verse(meter) for meter in METERS}
