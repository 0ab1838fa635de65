import io
import math

import numpy as np
import pytest

from models.lm.arpa import format_arpa, parse_arpa, read_arpa, write_arpa
from models.lm.ngram import BOS, EOS, UNK, FusionConfig, NGramModel, count_ngrams, perplexity, score, train
from utils.errors import EmptyCorpus, EmptyText, MalformedArpa

A, B, C = "قمر", "ليل", "نجم"

UNIFORM_ARPA = f"""\\data\\
ngram 1=4

\\1-grams:
-0.602060\t{A}
-0.602060\t{B}
-0.602060\t{C}
-0.602060\t</s>

\\end\\
"""


def toy_corpus(n_sentences=1000, seed=5):
    """Hemistichs drawn from a small vocabulary with a sticky bigram structure."""
    words = ["قمر", "ليل", "نجم", "بحر", "ريح", "سحاب", "رمل", "ورد", "طير", "ماء"]
    rng = np.random.default_rng(seed)
    corpus = []
    for _ in range(n_sentences):
        length = int(rng.integers(1, 7))
        current = int(rng.integers(len(words)))
        sentence = []
        for _ in range(length):
            sentence.append(words[current])
            current = (current + int(rng.integers(0, 3))) % len(words)
        corpus.append(" ".join(sentence))
    return corpus


@pytest.fixture(scope="module")
def bigram_model():
    return train([f"{A} {B}", f"{A} {B}"], order=2, min_count=1)


@pytest.fixture(scope="module")
def fourgram_model():
    return train(toy_corpus(), order=4, min_count=1)


class TestTrain:
    def test_hand_computed_kneser_ney(self, bigram_model):
        # D1 = D2 = 0.75 (degenerate count-of-counts); 3 continuation types, |V| = 4 with <unk>
        p_b = (1 - 0.75) / 3 + 0.75 / 4
        gamma_a = 0.75 * 1 / 2
        p_b_given_a = (2 - 0.75) / 2 + gamma_a * p_b
        assert p_b == pytest.approx(0.2708333, abs=1e-7)
        assert p_b_given_a == pytest.approx(0.7265625)
        assert 10 ** score(bigram_model, [A], B) == pytest.approx(p_b_given_a)
        assert 10 ** score(bigram_model, [], B) == pytest.approx(p_b)
        assert 10 ** score(bigram_model, [], UNK) == pytest.approx(0.1875)
        assert bigram_model.entries[(A,)].backoff == pytest.approx(math.log10(gamma_a))

    def test_backoff_to_unigram(self, bigram_model):
        expected = math.log10(0.375) + score(bigram_model, [], A)
        assert score(bigram_model, [A], A) == pytest.approx(expected)

    def test_degenerate_discounts_fall_back(self, bigram_model):
        assert bigram_model.metadata["discounts"] == {1: 0.75, 2: 0.75}

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            train([], order=2)

    def test_corpus_without_words(self):
        with pytest.raises(EmptyCorpus):
            train(["  ", "#"], order=2)

    @pytest.mark.parametrize("index", [0, 7, 31])
    def test_duplicate_sentence_never_lowers_counts(self, index):
        corpus = toy_corpus(60, seed=2)
        before = count_ngrams(corpus, 4)
        after = count_ngrams(corpus + [corpus[index]], 4)
        own = count_ngrams([corpus[index]], 4)
        for k in range(1, 5):
            assert all(after[k][ngram] >= count for ngram, count in before[k].items())
            assert all(after[k][ngram] == before[k][ngram] + count for ngram, count in own[k].items())

    def test_hemistichs_are_sentences(self):
        model = train([f"{A} {B} # {C} {A}"], order=2, min_count=1)
        assert (BOS, C) in model.entries
        assert (B, C) not in model.entries

    def test_min_count_prunes_higher_orders(self):
        model = train([f"{A} {B}", f"{A} {B}", f"{A} {C}"], order=2, min_count=2)
        assert (A, B) in model.entries
        assert (A, C) not in model.entries
        assert (C,) in model.entries
        assert model.metadata["pruned"] > 0

    def test_normalization_after_pruning(self):
        model = train([f"{A} {B}", f"{A} {B}", f"{A} {C}", f"{B} {C}", f"{C} {A} {B}"], order=2, min_count=2)
        for history in ([A], [B], [BOS]):
            total = sum(10 ** model.score(history, w) for w in model.predictable())
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_normalization_over_random_histories(self, fourgram_model):
        rng = np.random.default_rng(0)
        vocabulary = fourgram_model.predictable()
        by_length = {}
        for context in fourgram_model.contexts():
            by_length.setdefault(len(context), []).append(context)
        for length, contexts in by_length.items():
            picks = rng.choice(len(contexts), size=min(50, len(contexts)), replace=False)
            for pick in picks:
                history = list(contexts[pick])
                total = sum(10 ** fourgram_model.score(history, w) for w in vocabulary)
                assert 1 - 1e-6 <= total <= 1 + 1e-6, (length, history, total)


class TestScore:
    def test_unknown_word_maps_to_unk(self, fourgram_model):
        history = [BOS, "قمر"]
        assert fourgram_model.score(history, "غريب") == fourgram_model.score(history, UNK)

    def test_stored_ngram_is_exact(self, fourgram_model):
        ngram = fourgram_model.ngrams(3)[0]
        assert score(fourgram_model, list(ngram[:-1]), ngram[-1]) == fourgram_model.entries[ngram].logprob

    def test_backoff_steps_bounded_by_order(self, fourgram_model):
        rng = np.random.default_rng(3)
        tokens = fourgram_model.predictable() + [BOS, "غريب"]
        deepest = 0
        for _ in range(500):
            history = [tokens[i] for i in rng.integers(len(tokens), size=int(rng.integers(0, 9)))]
            word = tokens[int(rng.integers(len(tokens)))]
            log10_p, steps = fourgram_model.lookup(history, word)
            assert log10_p == fourgram_model.score(history, word)
            assert steps <= fourgram_model.order
            deepest = max(deepest, steps)
        assert fourgram_model.lookup(["غريب"] * 3, "غريب")[1] == fourgram_model.order - 1
        assert deepest <= fourgram_model.order - 1

    def test_uniform_unigrams(self):
        model = parse_arpa(UNIFORM_ARPA)
        for word in (A, B, C):
            assert model.score([], word) == pytest.approx(-math.log10(4), abs=1e-6)


class TestPerplexity:
    def test_uniform_model(self):
        model = parse_arpa(UNIFORM_ARPA)
        assert perplexity(model, f"{A} {B} {C} {A}") == pytest.approx(4.0, rel=1e-5)

    def test_memorized_sentence_beats_shuffle(self):
        sentence = "قمر ليل نجم بحر ريح"
        model = train([sentence], order=3, min_count=1)
        assert perplexity(model, sentence) < perplexity(model, "ريح نجم قمر بحر ليل")

    def test_single_token(self, bigram_model):
        expected = 10 ** (-(score(bigram_model, [BOS], A) + score(bigram_model, [BOS, A], EOS)) / 2)
        assert perplexity(bigram_model, A) == pytest.approx(expected)

    def test_empty_text(self, bigram_model):
        with pytest.raises(EmptyText):
            perplexity(bigram_model, "  ")


class TestArpa:
    def test_round_trip_scores(self, fourgram_model):
        loaded = parse_arpa(format_arpa(fourgram_model))
        assert loaded.order == 4
        for ngram, entry in fourgram_model.entries.items():
            assert f"{loaded.entries[ngram].logprob:.6f}" == f"{entry.logprob:.6f}"

    def test_canonical_fixpoint(self, fourgram_model):
        text = format_arpa(fourgram_model)
        assert format_arpa(parse_arpa(text)) == text

    def test_file_round_trip(self, bigram_model, tmp_path):
        path = tmp_path / "model.arpa"
        write_arpa(bigram_model, path)
        assert format_arpa(read_arpa(path)) == path.read_text(encoding="utf-8")

    def test_stream_io(self, bigram_model):
        sink = io.StringIO()
        write_arpa(bigram_model, sink)
        assert read_arpa(io.StringIO(sink.getvalue())).counts() == bigram_model.counts()

    def test_layout(self, bigram_model):
        lines = format_arpa(bigram_model).splitlines()
        assert lines[:3] == ["\\data\\", "ngram 1=5", "ngram 2=3"]
        assert lines[-1] == "\\end\\"
        assert f"-0.567298\t{B}\t-0.425969" in lines
        assert f"-0.138727\t{A} {B}" in lines

    def test_count_mismatch(self):
        text = (
            "\\data\\\nngram 1=2\nngram 2=5\n\n"
            "\\1-grams:\n-0.3\ta\t-0.1\n-0.3\tb\n\n"
            "\\2-grams:\n-0.1\ta b\n-0.1\tb a\n-0.1\ta a\n-0.1\tb b\n\n"
            "\\end\\\n"
        )
        with pytest.raises(MalformedArpa) as info:
            parse_arpa(text)
        assert info.value.line_number == 15

    def test_non_numeric(self):
        with pytest.raises(MalformedArpa) as info:
            parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\nhigh\ta\n\n\\end\\\n")
        assert info.value.line_number == 5

    def test_missing_section(self):
        with pytest.raises(MalformedArpa):
            parse_arpa("\\data\\\nngram 1=1\nngram 2=1\n\n\\1-grams:\n-0.1\ta\n\n\\end\\\n")

    def test_missing_end(self):
        with pytest.raises(MalformedArpa):
            parse_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-0.1\ta\n")


def test_fusion_config_rejects_negative_alpha():
    with pytest.raises(ValueError):
        FusionConfig(alpha=-1.0)


def test_model_is_shared_read_only(bigram_model):
    with pytest.raises(Exception):
        bigram_model.order = 3
    assert isinstance(bigram_model, NGramModel)
