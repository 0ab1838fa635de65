"""CTC emission matrices and decoders."""

from models.ctc.decoder import (
    DecodeResult,
    beam_decode,
    brute_force_decode,
    decode,
    decode_batch,
    greedy_decode,
)
from models.ctc.emission import (
    BLANK,
    SPACE,
    EmissionMatrix,
    decode_emission,
    encode_emission,
    read_emission,
    write_emission,
)

__all__ = [
    "BLANK",
    "SPACE",
    "DecodeResult",
    "EmissionMatrix",
    "beam_decode",
    "brute_force_decode",
    "decode",
    "decode_batch",
    "decode_emission",
    "encode_emission",
    "greedy_decode",
    "read_emission",
    "write_emission",
]
