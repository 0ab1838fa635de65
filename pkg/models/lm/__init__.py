"""Word n-gram language model (the decoder's language model head)."""

from models.lm.arpa import format_arpa, parse_arpa, read_arpa, write_arpa
from models.lm.ngram import (
    BOS,
    EOS,
    UNK,
    FusionConfig,
    NGramEntry,
    NGramModel,
    perplexity,
    score,
    train,
)

__all__ = [
    "BOS",
    "EOS",
    "UNK",
    "FusionConfig",
    "NGramEntry",
    "NGramModel",
    "format_arpa",
    "parse_arpa",
    "perplexity",
    "read_arpa",
    "score",
    "train",
    "write_arpa",
]
