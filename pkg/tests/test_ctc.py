import numpy as np
import pytest

from models.ctc.decoder import beam_decode, brute_force_decode, decode, decode_batch, greedy_decode
from models.ctc.emission import (
    BLANK,
    SPACE,
    EmissionMatrix,
    decode_emission,
    encode_emission,
    read_emission,
    write_emission,
)
from models.lm.ngram import FusionConfig, train
from config.run_config import RunConfig
from utils.errors import DataError, InvalidEmission, MissingSpaceSymbol, TooLarge
from utils.metrics import wer
from utils.synthesis import ambiguity_suite, synth_emission
from tests.conftest import random_emission


def one_hot(alphabet, path, peak=0.9):
    """Emission whose per-frame argmax follows `path` (symbol indices)."""
    size = len(alphabet)
    rows = np.full((len(path), size), (1 - peak) / (size - 1))
    rows[np.arange(len(path)), path] = peak
    return EmissionMatrix(alphabet, np.log(rows)).validate()


AB = (BLANK, "a", "b")


class TestGreedy:
    def test_collapse(self):
        assert greedy_decode(one_hot(AB, [0, 1, 1, 0, 2])).text == "ab"

    def test_all_blank(self):
        assert greedy_decode(one_hot(AB, [0, 0, 0])).text == ""

    def test_blank_separates_repeats(self):
        assert greedy_decode(one_hot(AB, [1, 0, 1])).text == "aa"

    def test_path_score_below_marginal(self, rng):
        for _ in range(50):
            emission = random_emission(rng, int(rng.integers(1, 6)), 3)
            assert greedy_decode(emission).log_score <= brute_force_decode(emission).log_score + 1e-12


class TestBruteForce:
    def test_single_frame(self):
        emission = EmissionMatrix.from_probabilities((BLANK, "a"), [[0.1, 0.9]])
        assert brute_force_decode(emission).text == "a"

    def test_uniform_two_frames(self):
        emission = EmissionMatrix.from_probabilities((BLANK, "a"), [[0.5, 0.5], [0.5, 0.5]])
        result = brute_force_decode(emission)
        assert result.text == "a"
        assert result.log_score == pytest.approx(np.log(0.75))
        assert dict(result.n_best)[""] == pytest.approx(np.log(0.25))

    def test_hand_enumerated(self):
        # "": 0.6*0.6 = 0.36; "a": 0.4*0.4 + 0.4*0.6 + 0.6*0.4 = 0.64
        emission = EmissionMatrix.from_probabilities((BLANK, "a"), [[0.6, 0.4], [0.6, 0.4]])
        result = brute_force_decode(emission)
        assert result.text == "a"
        assert np.exp(result.log_score) == pytest.approx(0.64)

    def test_tie_breaks_lexicographically(self):
        emission = EmissionMatrix.from_probabilities(AB, [[0.0, 0.5, 0.5]])
        assert brute_force_decode(emission).text == "a"

    def test_guard(self, rng):
        with pytest.raises(TooLarge):
            brute_force_decode(random_emission(rng, 9, 3))
        with pytest.raises(TooLarge):
            brute_force_decode(random_emission(rng, 2, 6))
        with pytest.raises(DataError):
            brute_force_decode(random_emission(rng, 9, 2))


class TestBeam:
    def test_matches_brute_force(self, rng):
        for _ in range(200):
            emission = random_emission(rng, int(rng.integers(1, 7)), int(rng.integers(2, 5)))
            exact = brute_force_decode(emission)
            result = beam_decode(emission, beam_width=10_000, token_prune=None)
            assert result.text == exact.text
            assert result.log_score == pytest.approx(exact.log_score, abs=1e-9)

    def test_score_is_ctc_marginal(self, rng):
        emission = random_emission(rng, 5, 4)
        marginals = dict(brute_force_decode(emission).n_best)
        result = beam_decode(emission, beam_width=4, token_prune=None, n_best=3)
        for text, log_score in result.n_best:
            assert log_score <= marginals[text] + 1e-12

    def test_n_best_non_increasing(self, rng):
        emission = random_emission(rng, 6, 4)
        scores = [s for _, s in beam_decode(emission, beam_width=16, token_prune=None, n_best=10).n_best]
        assert len(scores) == 10
        assert scores == sorted(scores, reverse=True)

    def test_deterministic(self, rng):
        emission = random_emission(rng, 6, 4)
        first = beam_decode(emission, beam_width=3)
        second = beam_decode(emission, beam_width=3)
        assert (first.text, first.log_score, first.n_best) == (second.text, second.log_score, second.n_best)

    def test_pruning_keeps_best_symbol(self):
        emission = one_hot(AB, [1, 0, 2, 2], peak=0.999)
        assert beam_decode(emission, token_prune=-1.0).text == "ab"

    def test_margin_follows_dominant_frames(self):
        emission = synth_emission("قِفَا نَبْكِ مِنْ ذِكْرَى # حَبِيبٍ وَمَنْزِلِ", noise=0.05, seed=2)
        assert beam_decode(emission, prune_margin=4.0).text == greedy_decode(emission).text

    def test_margin_keeps_close_competitors(self):
        emission = EmissionMatrix.from_probabilities(AB, [[0.1, 0.5, 0.4], [0.1, 0.4, 0.5], [0.3, 0.3, 0.4]])
        result = beam_decode(emission, beam_width=100, prune_margin=4.0)
        exact = brute_force_decode(emission)
        assert result.text == exact.text
        assert result.log_score == pytest.approx(exact.log_score, abs=1e-9)

    def test_lm_needs_space(self):
        lm = train(["قمر ليل"], order=2)
        with pytest.raises(MissingSpaceSymbol):
            beam_decode(one_hot(AB, [1, 2]), lm=lm)

    def test_language_model_resolves_ambiguity(self):
        cases, corpus = ambiguity_suite()
        lm = train(corpus, order=4, min_count=1)
        fusion = FusionConfig(alpha=1.0, beta=0.0)
        without, with_lm = [], []
        for case in cases:
            plain = beam_decode(case.emission, beam_width=64, token_prune=None)
            fused = beam_decode(case.emission, beam_width=64, lm=lm, fusion=fusion, token_prune=None)
            assert plain.text == case.confusion
            without.append(wer(case.transcript, plain.text))
            with_lm.append(wer(case.transcript, fused.text))
        assert all(b <= a for a, b in zip(without, with_lm))
        assert np.mean(with_lm) < np.mean(without)

    def test_zero_alpha_lm_matches_acoustics(self):
        cases, corpus = ambiguity_suite()
        lm = train(corpus, order=2, min_count=1)
        case = cases[0]
        fused = beam_decode(case.emission, beam_width=64, lm=lm, fusion=FusionConfig(0.0, 0.0), token_prune=None)
        assert fused.text == case.confusion


class TestDecodeConfig:
    def test_greedy_dispatch(self):
        config = RunConfig(decoder="greedy")
        assert decode(one_hot(AB, [1, 0, 2]), config).text == "ab"

    def test_config_margin_reaches_beam(self):
        emission = EmissionMatrix.from_probabilities(AB, [[0.02, 0.49, 0.49]])
        config = RunConfig(token_prune=None, prune_margin=1.0, n_best=3)
        assert [text for text, _ in decode(emission, config).n_best] == ["a", "b"]
        config = config.replace(prune_margin=None)
        assert [text for text, _ in decode(emission, config).n_best] == ["a", "b", ""]

    def test_batch_preserves_order(self, rng):
        emissions = [one_hot(AB, [1, 0, 2]), one_hot(AB, [2, 0, 1]), one_hot(AB, [0, 0, 0])]
        results = decode_batch(emissions, RunConfig(), n_jobs=1)
        assert [r.text for r in results] == ["ab", "ba", ""]


class TestEmissionFile:
    def test_round_trip(self, rng, tmp_path):
        emission = random_emission(rng, 7, 4)
        path = tmp_path / "x.ctce"
        write_emission(emission, path)
        loaded = read_emission(path)
        assert loaded.alphabet == emission.alphabet
        np.testing.assert_allclose(loaded.values, emission.values, rtol=1e-6, atol=1e-6)

    def test_arabic_alphabet(self):
        alphabet = (BLANK, SPACE, "ب", "ت")
        emission = EmissionMatrix.from_probabilities(alphabet, [[0.25] * 4])
        assert decode_emission(encode_emission(emission)).alphabet == alphabet

    def test_header_layout(self, rng):
        data = encode_emission(random_emission(rng, 2, 3))
        assert data[:4] == b"CTCE"
        assert data[4:8] == (1).to_bytes(4, "little")

    def test_bad_magic(self, rng):
        data = encode_emission(random_emission(rng, 2, 3))
        with pytest.raises(InvalidEmission):
            decode_emission(b"XXXX" + data[4:])

    def test_truncated(self, rng):
        data = encode_emission(random_emission(rng, 2, 3))
        with pytest.raises(InvalidEmission):
            decode_emission(data[:-4])

    def test_unnormalized_frame(self):
        values = np.log(np.array([[0.5, 0.6]]))
        with pytest.raises(InvalidEmission):
            EmissionMatrix((BLANK, "a"), values).validate()

    def test_blank_first(self):
        with pytest.raises(InvalidEmission):
            EmissionMatrix(("a", BLANK), np.log([[0.5, 0.5]])).validate()
