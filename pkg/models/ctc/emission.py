"""CTC emission matrices and the CTCE binary file format.

File layout (little-endian): magic "CTCE", uint32 version, uint32 T,
uint32 V, then V alphabet entries (uint16 byte length + UTF-8), entry 0
being "<blank>", then T*V float32 natural-log probabilities, frame-major.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from utils.errors import InvalidEmission
from utils.logger import get_logger

logger = get_logger(__name__)

BLANK = "<blank>"
SPACE = " "
MAGIC = b"CTCE"
VERSION = 1

# Per-frame normalization tolerance for in-memory grids and for files
NORMALIZATION_TOLERANCE = 1e-5
FILE_TOLERANCE = 1e-4


@dataclass(frozen=True)
class EmissionMatrix:
    """T x V grid of natural-log probabilities; alphabet[0] is the blank."""

    alphabet: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def index(self, symbol: str) -> int:
        return self.alphabet.index(symbol)

    def has_symbol(self, symbol: str) -> bool:
        return symbol in self.alphabet

    def probabilities(self) -> np.ndarray:
        return np.exp(self.values)

    def validate(self, tolerance: float = NORMALIZATION_TOLERANCE) -> "EmissionMatrix":
        """
        Check shape, alphabet and per-frame normalization.

        Raises:
            InvalidEmission: any check fails
        """
        if self.values.ndim != 2:
            raise InvalidEmission(f"emission grid must be 2-D, got {self.values.ndim}-D")
        frames, size = self.values.shape
        if frames < 1:
            raise InvalidEmission("emission has no frames")
        if size < 2:
            raise InvalidEmission("alphabet needs the blank and at least one symbol")
        if size != len(self.alphabet):
            raise InvalidEmission(f"{len(self.alphabet)} symbols for a grid of width {size}")
        if self.alphabet[0] != BLANK:
            raise InvalidEmission(f"alphabet entry 0 must be {BLANK!r}, got {self.alphabet[0]!r}")
        if len(set(self.alphabet)) != size:
            raise InvalidEmission("alphabet holds duplicate symbols")
        if np.isnan(self.values).any() or np.isposinf(self.values).any():
            raise InvalidEmission("emission holds NaN or +inf values")
        sums = np.exp(logsumexp(self.values, axis=1))
        worst = int(np.argmax(np.abs(sums - 1.0)))
        if abs(sums[worst] - 1.0) > tolerance:
            raise InvalidEmission(f"frame {worst} sums to {sums[worst]:.6f}, not 1")
        return self

    @classmethod
    def from_probabilities(cls, alphabet: Sequence[str], probabilities: np.ndarray) -> "EmissionMatrix":
        """Build from linear probabilities; zero entries become -inf."""
        with np.errstate(divide="ignore"):
            values = np.log(np.asarray(probabilities, dtype=np.float64))
        return cls(tuple(alphabet), values).validate()


def encode_emission(emission: EmissionMatrix) -> bytes:
    frames, size = emission.values.shape
    parts = [MAGIC, struct.pack("<III", VERSION, frames, size)]
    for symbol in emission.alphabet:
        encoded = symbol.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
    parts.append(emission.values.astype("<f4").tobytes())
    return b"".join(parts)


def decode_emission(data: bytes) -> EmissionMatrix:
    """
    Parse CTCE bytes.

    Raises:
        InvalidEmission: bad magic, unsupported version, truncated data or
            frames not normalized within 1e-4
    """
    if data[:4] != MAGIC:
        raise InvalidEmission(f"bad magic {data[:4]!r}")
    if len(data) < 16:
        raise InvalidEmission("truncated header")
    version, frames, size = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise InvalidEmission(f"unsupported version {version}")

    offset = 16
    alphabet = []
    for _ in range(size):
        if offset + 2 > len(data):
            raise InvalidEmission("truncated alphabet")
        (length,) = struct.unpack_from("<H", data, offset)
        offset += 2
        raw = data[offset:offset + length]
        if len(raw) != length:
            raise InvalidEmission("truncated alphabet entry")
        try:
            alphabet.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise InvalidEmission(f"alphabet entry is not UTF-8: {exc}")
        offset += length

    expected = frames * size * 4
    if len(data) - offset != expected:
        raise InvalidEmission(f"expected {expected} bytes of values, found {len(data) - offset}")
    values = np.frombuffer(data, dtype="<f4", count=frames * size, offset=offset)
    emission = EmissionMatrix(tuple(alphabet), values.reshape(frames, size).astype(np.float64))
    return emission.validate(tolerance=FILE_TOLERANCE)


def write_emission(emission: EmissionMatrix, path: Union[str, Path]) -> None:
    Path(path).write_bytes(encode_emission(emission))
    logger.debug(f"Wrote {emission.frames}x{emission.size} emission to {path}")


def read_emission(path: Union[str, Path]) -> EmissionMatrix:
    return decode_emission(Path(path).read_bytes())
