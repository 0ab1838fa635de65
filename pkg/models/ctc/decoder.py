"""CTC decoding: greedy best path, exhaustive oracle and prefix beam search.

Beam search keeps, per prefix, the log mass of alignments ending in a
blank (pb) and in a non-blank (pnb). With a language model, each completed
word adds alpha * ln P_lm(word | history) + beta; the partial word at the
frontier contributes nothing until a space or the end of the sequence.
"""

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from models.ctc.emission import SPACE, EmissionMatrix
from models.lm.ngram import BOS, FusionConfig, NGramModel
from utils.errors import MissingSpaceSymbol, TooLarge
from utils.logger import get_logger
from utils.textkit import HEMISTICH_SEPARATORS

if TYPE_CHECKING:
    from config.run_config import RunConfig

logger = get_logger(__name__)

NEG_INF = -np.inf
LN_10 = math.log(10.0)

BRUTE_FORCE_MAX_FRAMES = 8
BRUTE_FORCE_MAX_SYMBOLS = 5


@dataclass
class DecodeResult:
    text: str
    log_score: float
    n_best: List[Tuple[str, float]] = field(default_factory=list)


def _ranked(scores: Dict[str, float]) -> List[Tuple[str, float]]:
    # Best score first, ties by decoded string
    return sorted(scores.items(), key=lambda item: (-item[1], item[0]))


def _collapse(path: Sequence[int], alphabet: Sequence[str]) -> str:
    out = []
    previous = None
    for index in path:
        if index != previous and index != 0:
            out.append(alphabet[index])
        previous = index
    return "".join(out)


def greedy_decode(emission: EmissionMatrix) -> DecodeResult:
    """Best path: per-frame argmax, collapse repeats, drop blanks."""
    path = np.argmax(emission.values, axis=1)
    log_score = float(emission.values[np.arange(emission.frames), path].sum())
    return DecodeResult(_collapse(path.tolist(), emission.alphabet), log_score)


def brute_force_decode(emission: EmissionMatrix) -> DecodeResult:
    """
    Enumerate every alignment and return the string of largest total probability.

    Raises:
        TooLarge: more than 8 frames or 5 symbols
    """
    if emission.frames > BRUTE_FORCE_MAX_FRAMES or emission.size > BRUTE_FORCE_MAX_SYMBOLS:
        raise TooLarge(
            f"exhaustive decoding is limited to T <= {BRUTE_FORCE_MAX_FRAMES} and "
            f"V <= {BRUTE_FORCE_MAX_SYMBOLS}, got T={emission.frames}, V={emission.size}"
        )
    frame_index = np.arange(emission.frames)
    totals: Dict[str, float] = {}
    for path in itertools.product(range(emission.size), repeat=emission.frames):
        log_p = float(emission.values[frame_index, list(path)].sum())
        text = _collapse(path, emission.alphabet)
        totals[text] = np.logaddexp(totals.get(text, NEG_INF), log_p)
    ranked = _ranked(totals)
    text, log_score = ranked[0]
    return DecodeResult(text, float(log_score), ranked)


@dataclass(frozen=True)
class _LMState:
    score: float
    history: Tuple[str, ...]
    partial: str


class _Fusion:
    """Word-level LM terms for prefixes; the history restarts at hemistich separators."""

    def __init__(self, lm: NGramModel, fusion: FusionConfig):
        self.lm = lm
        self.fusion = fusion
        self.keep = max(lm.order - 1, 0)

    def word_term(self, state: _LMState) -> Tuple[float, Tuple[str, ...]]:
        word = state.partial
        if not word:
            return 0.0, state.history
        if word in HEMISTICH_SEPARATORS:
            return 0.0, ()
        log10_p = self.lm.score((BOS,) + state.history, word)
        term = self.fusion.alpha * LN_10 * log10_p + self.fusion.beta
        history = (state.history + (word,))[-self.keep:] if self.keep else ()
        return term, history

    def extend(self, state: _LMState, symbol: str) -> _LMState:
        if symbol != SPACE:
            return _LMState(state.score, state.history, state.partial + symbol)
        term, history = self.word_term(state)
        return _LMState(state.score + term, history, "")

    def close(self, state: _LMState) -> float:
        term, _ = self.word_term(state)
        return state.score + term


_EMPTY_STATE = _LMState(0.0, (), "")


def _logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def _frame_symbols(row: np.ndarray, token_prune: Optional[float], prune_margin: Optional[float]) -> List[int]:
    """Symbols expanded in one frame; the frame's best symbol is always kept."""
    if token_prune is None and prune_margin is None:
        return [s for s in range(row.shape[0]) if row[s] != NEG_INF]
    best = int(np.argmax(row))
    cutoff = NEG_INF
    if token_prune is not None:
        cutoff = token_prune
    if prune_margin is not None:
        cutoff = max(cutoff, float(row[best]) - prune_margin)
    keep = np.flatnonzero(row >= cutoff).tolist()
    if best not in keep:
        keep.append(best)
    return keep


def beam_decode(
    emission: EmissionMatrix,
    beam_width: int = 64,
    lm: Optional[NGramModel] = None,
    fusion: Optional[FusionConfig] = None,
    token_prune: Optional[float] = None,
    n_best: int = 1,
    prune_margin: Optional[float] = None,
) -> DecodeResult:
    """
    Prefix beam search with optional word-level shallow fusion.

    Args:
        emission: Validated emission matrix
        beam_width: Prefixes kept after each frame
        lm: Word n-gram model; requires the space symbol in the alphabet
        fusion: LM weight and word bonus (defaults to settings)
        token_prune: Skip symbols whose log probability in a frame is below this
            value (the frame's best symbol is always kept)
        n_best: Number of ranked hypotheses to return
        prune_margin: Skip symbols more than this many nats below the frame's
            best symbol. With token_prune also None the search is exact

    Returns:
        DecodeResult with the best text, its combined score and the n-best list

    Raises:
        MissingSpaceSymbol: lm given but the alphabet has no space
    """
    if beam_width < 1:
        raise ValueError(f"beam_width must be at least 1, got {beam_width}")
    scorer: Optional[_Fusion] = None
    if lm is not None:
        if not emission.has_symbol(SPACE):
            raise MissingSpaceSymbol("word-level fusion needs the space symbol in the alphabet")
        scorer = _Fusion(lm, fusion or FusionConfig.from_settings())

    alphabet = emission.alphabet
    values = emission.values
    # prefix (symbol indices) -> [pb, pnb]
    beams: Dict[Tuple[int, ...], List[float]] = {(): [0.0, NEG_INF]}
    texts: Dict[Tuple[int, ...], str] = {(): ""}
    states: Dict[Tuple[int, ...], _LMState] = {(): _EMPTY_STATE}

    for t in range(emission.frames):
        row = values[t]
        symbols = _frame_symbols(row, token_prune, prune_margin)
        probs = [(s, float(row[s])) for s in symbols]

        candidates: Dict[Tuple[int, ...], List[float]] = {}
        for prefix, (pb, pnb) in beams.items():
            total = _logaddexp(pb, pnb)
            last = prefix[-1] if prefix else None
            for s, p in probs:
                if s == 0:
                    slot = candidates.setdefault(prefix, [NEG_INF, NEG_INF])
                    slot[0] = _logaddexp(slot[0], total + p)
                    continue
                extended = prefix + (s,)
                slot = candidates.setdefault(extended, [NEG_INF, NEG_INF])
                if s == last:
                    # A repeat needs a blank in between to start a new symbol
                    slot[1] = _logaddexp(slot[1], pb + p)
                    same = candidates.setdefault(prefix, [NEG_INF, NEG_INF])
                    same[1] = _logaddexp(same[1], pnb + p)
                else:
                    slot[1] = _logaddexp(slot[1], total + p)
                if extended not in texts:
                    texts[extended] = texts[prefix] + alphabet[s]
                if scorer is not None and extended not in states:
                    states[extended] = scorer.extend(states[prefix], alphabet[s])

        def ranking(item):
            prefix, (pb, pnb) = item
            lm_score = states[prefix].score if scorer is not None else 0.0
            return (-(_logaddexp(pb, pnb) + lm_score), texts[prefix])

        if len(candidates) > beam_width:
            kept = heapq.nsmallest(beam_width, candidates.items(), key=ranking)
        else:
            kept = sorted(candidates.items(), key=ranking)
        beams = dict(kept)
        texts = {prefix: texts[prefix] for prefix in beams}
        if scorer is not None:
            states = {prefix: states[prefix] for prefix in beams}

    finals: Dict[str, float] = {}
    for prefix, (pb, pnb) in beams.items():
        score = _logaddexp(pb, pnb)
        if scorer is not None:
            score += scorer.close(states[prefix])
        text = texts[prefix]
        finals[text] = _logaddexp(finals.get(text, NEG_INF), score)

    ranked = _ranked(finals)
    text, log_score = ranked[0]
    logger.debug(f"Beam decode over {emission.frames} frames: {text!r} ({log_score:.4f})")
    return DecodeResult(text, float(log_score), ranked[:max(n_best, 1)])


def decode(emission: EmissionMatrix, config: "RunConfig", lm: Optional[NGramModel] = None) -> DecodeResult:
    """Decode with the decoder, beam, fusion and pruning chosen in a run configuration."""
    if config.decoder == "greedy":
        return greedy_decode(emission)
    return beam_decode(
        emission,
        beam_width=config.beam_width,
        lm=lm if config.use_lm else None,
        fusion=config.fusion,
        token_prune=config.token_prune,
        n_best=config.n_best,
        prune_margin=config.prune_margin,
    )


def decode_batch(
    emissions: Sequence[EmissionMatrix],
    config: "RunConfig",
    lm: Optional[NGramModel] = None,
    n_jobs: int = 1,
) -> List[DecodeResult]:
    """Decode many emissions, sharing one read-only model; output order follows input."""
    logger.info(f"Decoding {len(emissions)} emissions with {config.decoder} decoder (n_jobs={n_jobs})")
    return Parallel(n_jobs=n_jobs)(delayed(decode)(emission, config, lm) for emission in emissions)
