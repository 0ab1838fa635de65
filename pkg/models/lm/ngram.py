"""Word n-gram language model with interpolated Kneser-Ney smoothing."""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from config.settings import settings
from utils.errors import EmptyCorpus, EmptyText
from utils.logger import get_logger
from utils.textkit import split_hemistichs, tokenize

logger = get_logger(__name__)

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

# log10 probability stored for <s>, which is never predicted
BOS_LOGPROB = -99.0
FALLBACK_DISCOUNT = 0.75

NGram = Tuple[str, ...]


class NGramEntry(NamedTuple):
    logprob: float
    backoff: Optional[float] = None


@dataclass(frozen=True)
class FusionConfig:
    """Shallow-fusion weights: total = ln P_ctc + alpha * ln P_lm + beta * words."""

    alpha: float = 0.5
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")

    @classmethod
    def from_settings(cls) -> "FusionConfig":
        return cls(alpha=settings.LM_ALPHA, beta=settings.LM_BETA)


@dataclass(frozen=True)
class NGramModel:
    """
    Backoff n-gram model in ARPA form.

    `entries` maps token tuples of length 1..order to (log10 probability,
    optional log10 backoff weight). A loaded or trained model is never
    mutated, so one instance can be shared by concurrent decoders.
    """

    order: int
    entries: Dict[NGram, NGramEntry]
    metadata: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be at least 1, got {self.order}")
        vocabulary = frozenset(ngram[0] for ngram in self.entries if len(ngram) == 1)
        object.__setattr__(self, "_vocabulary", vocabulary)

    @property
    def vocabulary(self) -> frozenset:
        """Every unigram token, reserved symbols included."""
        return self._vocabulary

    @property
    def vocabulary_size(self) -> int:
        return len(self._vocabulary)

    def predictable(self) -> List[str]:
        """Tokens the model can predict (vocabulary without <s>), sorted."""
        return sorted(self._vocabulary - {BOS})

    def ngrams(self, length: int) -> List[NGram]:
        return sorted(ngram for ngram in self.entries if len(ngram) == length)

    def counts(self) -> Dict[int, int]:
        counts = Counter(len(ngram) for ngram in self.entries)
        return {k: counts.get(k, 0) for k in range(1, self.order + 1)}

    def contexts(self) -> Iterator[NGram]:
        """Histories the model conditions on: () and stored n-grams shorter than order."""
        yield ()
        for ngram in sorted(self.entries):
            if len(ngram) < self.order and ngram[-1] != EOS:
                yield ngram

    def _map(self, token: str) -> str:
        return token if token in self._vocabulary else UNK

    def score(self, history: Sequence[str], word: str) -> float:
        """
        Log10 probability of `word` after `history` with longest-match backoff.

        Unknown tokens map to <unk>; at most `order` - 1 backoff steps are taken.
        """
        return self.lookup(history, word)[0]

    def lookup(self, history: Sequence[str], word: str) -> Tuple[float, int]:
        """Log10 probability of `word` after `history` and the number of backoff steps taken."""
        word = self._map(word)
        context: NGram = ()
        if self.order > 1:
            context = tuple(self._map(token) for token in history)[-(self.order - 1):]

        total = 0.0
        steps = 0
        while True:
            entry = self.entries.get(context + (word,))
            if entry is not None:
                return total + entry.logprob, steps
            if not context:
                unknown = self.entries.get((UNK,))
                return total + (unknown.logprob if unknown is not None else BOS_LOGPROB), steps
            context_entry = self.entries.get(context)
            if context_entry is not None and context_entry.backoff is not None:
                total += context_entry.backoff
            context = context[1:]
            steps += 1

    def sentence_logprob(self, words: Sequence[str]) -> Tuple[float, int]:
        """Sum of log10 P over the words and </s>, history starting at <s>."""
        history = [BOS]
        total = 0.0
        for word in list(words) + [EOS]:
            total += self.score(history, word)
            history.append(word)
        return total, len(words) + 1

    def __repr__(self) -> str:
        return f"NGramModel(order={self.order}, counts={self.counts()})"


def _sentences(corpus: Iterable[str]) -> List[List[str]]:
    sentences = []
    for verse in corpus:
        for hemistich in split_hemistichs(verse):
            words = tokenize(hemistich)
            if words:
                sentences.append([BOS] + words + [EOS])
    return sentences


def count_ngrams(corpus: Sequence[str], order: int) -> Dict[int, Counter]:
    """Raw n-gram counts per length 1..order, hemistichs padded with <s> and </s>."""
    raw: Dict[int, Counter] = {k: Counter() for k in range(1, order + 1)}
    for sentence in _sentences(corpus):
        for k in range(1, order + 1):
            for i in range(len(sentence) - k + 1):
                raw[k][tuple(sentence[i:i + k])] += 1
    return raw


def _discount(counts: Iterable[int], order: int) -> Tuple[float, Dict[int, int]]:
    count_of_counts = Counter(count for count in counts if count in (1, 2))
    n1, n2 = count_of_counts.get(1, 0), count_of_counts.get(2, 0)
    if n1 and n2:
        discount = n1 / (n1 + 2 * n2)
        if 0 < discount < 1:
            return discount, {1: n1, 2: n2}
    logger.warning(
        f"Degenerate count-of-counts for order {order} (n1={n1}, n2={n2}), "
        f"using discount {FALLBACK_DISCOUNT}"
    )
    return FALLBACK_DISCOUNT, {1: n1, 2: n2}


def train(corpus: Sequence[str], order: Optional[int] = None, min_count: Optional[int] = None) -> NGramModel:
    """
    Train an interpolated Kneser-Ney model; each hemistich is one sentence.

    The highest order uses raw counts, lower orders use continuation counts
    (raw counts for n-grams starting with <s>). <unk> receives the leftover
    unigram mass.

    Args:
        corpus: Verse texts, hemistichs separated by "#", "*" or 3+ spaces
        order: n-gram order (defaults to settings.LM_ORDER)
        min_count: Drop n-grams of order >= 2 seen fewer times (defaults to settings.LM_MIN_COUNT)

    Returns:
        Trained NGramModel

    Raises:
        EmptyCorpus: no words in the corpus
    """
    order = settings.LM_ORDER if order is None else order
    min_count = settings.LM_MIN_COUNT if min_count is None else min_count
    if order < 1:
        raise ValueError(f"order must be at least 1, got {order}")
    if min_count < 1:
        raise ValueError(f"min_count must be at least 1, got {min_count}")

    sentences = _sentences(corpus)
    if not sentences:
        raise EmptyCorpus("corpus holds no words")
    longest = max(len(sentence) - 2 for sentence in sentences)
    if order > longest + 1:
        logger.warning(f"Order {order} exceeds the longest sentence ({longest} words) plus one")

    logger.info(f"Training {order}-gram model on {len(sentences)} sentences")

    raw = count_ngrams(corpus, order)

    # Adjusted counts: continuation counts below the highest order
    adjusted: List[Dict[NGram, int]] = [{} for _ in range(order + 1)]
    adjusted[order] = dict(raw[order])
    for k in range(order - 1, 0, -1):
        continuation = Counter(ngram[1:] for ngram in raw[k + 1])
        adjusted[k] = {
            ngram: raw[k][ngram] if ngram[0] == BOS else continuation[ngram]
            for ngram in raw[k]
        }

    discounts: Dict[int, float] = {}
    count_of_counts: Dict[int, Dict[int, int]] = {}
    for k in range(1, order + 1):
        counts = [c for ngram, c in adjusted[k].items() if not (k == 1 and ngram == (BOS,))]
        discounts[k], count_of_counts[k] = _discount(counts, k)

    # Unigrams
    unigram_counts = {ngram: c for ngram, c in adjusted[1].items() if ngram != (BOS,)}
    vocabulary_size = len(unigram_counts) + 1  # plus <unk>
    total = sum(unigram_counts.values())
    d1 = discounts[1]
    leftover = d1 * len(unigram_counts) / total
    probs: List[Dict[NGram, float]] = [{} for _ in range(order + 1)]
    probs[1] = {
        ngram: max(c - d1, 0.0) / total + leftover / vocabulary_size
        for ngram, c in unigram_counts.items()
    }
    probs[1][(UNK,)] = leftover / vocabulary_size

    # Higher orders, interpolated with the next lower order
    gammas: List[Dict[NGram, float]] = [{} for _ in range(order + 1)]
    history_types: List[Counter] = [Counter() for _ in range(order + 1)]
    for k in range(2, order + 1):
        totals: Counter = Counter()
        types: Counter = Counter()
        for ngram, c in adjusted[k].items():
            totals[ngram[:-1]] += c
            types[ngram[:-1]] += 1
        history_types[k] = types
        dk = discounts[k]
        gammas[k] = {h: dk * types[h] / totals[h] for h in totals}
        probs[k] = {
            ngram: max(c - dk, 0.0) / totals[ngram[:-1]]
            + gammas[k][ngram[:-1]] * probs[k - 1][ngram[1:]]
            for ngram, c in adjusted[k].items()
        }

    pruned = 0
    if min_count > 1:
        for k in range(2, order + 1):
            kept = {ngram: p for ngram, p in probs[k].items() if raw[k][ngram] >= min_count}
            pruned += len(probs[k]) - len(kept)
            probs[k] = kept

    entries: Dict[NGram, NGramEntry] = {(BOS,): NGramEntry(BOS_LOGPROB)}
    for k in range(1, order + 1):
        for ngram, p in probs[k].items():
            entries[ngram] = NGramEntry(math.log10(p))

    # Backoff weights, lowest order first so lower scores are final when used
    for k in range(2, order + 1):
        extensions: Dict[NGram, List[NGram]] = {}
        for ngram in probs[k]:
            extensions.setdefault(ngram[:-1], []).append(ngram)
        partial = NGramModel(order, dict(entries))
        for history, kept in extensions.items():
            if len(kept) == history_types[k][history]:
                weight = gammas[k][history]
            else:
                # Some extensions were pruned: renormalize what is left
                numerator = 1.0 - sum(probs[k][ngram] for ngram in kept)
                denominator = 1.0 - sum(10 ** partial.score(history[1:], ngram[-1]) for ngram in kept)
                weight = max(numerator, 1e-12) / max(denominator, 1e-12)
            entries[history] = NGramEntry(entries[history].logprob, math.log10(weight))

    metadata = {
        "sentences": len(sentences),
        "discounts": discounts,
        "count_of_counts": count_of_counts,
        "vocabulary_size": vocabulary_size,
        "min_count": min_count,
        "pruned": pruned,
    }
    model = NGramModel(order, entries, metadata)
    logger.info(
        f"Trained {model!r}; vocabulary {vocabulary_size}, discounts "
        + ", ".join(f"D{k}={d:.4f}" for k, d in discounts.items())
    )
    if pruned:
        logger.info(f"Pruned {pruned} n-grams below count {min_count}")
    return model


def score(model: NGramModel, history: Sequence[str], word: str) -> float:
    """Log10 P(word | history); see NGramModel.score."""
    return model.score(history, word)


def perplexity(model: NGramModel, text: str) -> float:
    """
    Perplexity 10^(-mean log10 P) over every token plus </s> per hemistich.

    Raises:
        EmptyText: text holds no words
    """
    total = 0.0
    tokens = 0
    for hemistich in split_hemistichs(text):
        words = tokenize(hemistich)
        if not words:
            continue
        logprob, count = model.sentence_logprob(words)
        total += logprob
        tokens += count
    if tokens == 0:
        raise EmptyText("cannot compute perplexity of an empty text")
    return 10 ** (-total / tokens)
