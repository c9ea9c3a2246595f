"""Tests for CTC collapse, greedy decode, prefix beam search, emission I/O."""

import itertools
import math

import numpy as np
import pytest

from jamodiag.decoder import (
    DecodeConfig,
    EmissionMatrix,
    collapse_path,
    greedy_decode,
    prefix_beam_decode,
    read_emissions,
    write_emissions,
)
from jamodiag.errors import EmissionFormatError
from jamodiag.hangul import build_vocabulary
from jamodiag.lm import score_sequence, train_model

VOCAB = build_vocabulary()
BLANK = VOCAB.blank_id
LN10 = math.log(10.0)

G, N, A = 0, 2, 19  # ㄱ, ㄴ, ㅏ


def one_hot_emissions(ids, peak=1.0 - 1e-9):
    arr = np.full((len(ids), 45), math.log((1 - peak) / 44))
    for t, i in enumerate(ids):
        arr[t, i] = math.log(peak)
    return EmissionMatrix(arr)


def sparse_emissions(rng, frames, active):
    """Random rows with all probability mass on the given columns."""
    arr = np.full((frames, 45), -1e9)
    for t in range(frames):
        probs = rng.dirichlet(np.ones(len(active)))
        arr[t, active] = np.log(probs)
    return EmissionMatrix(arr)


def oracle_marginals(arr, active, blank):
    """Brute-force CTC: sum path probabilities per collapsed labeling."""
    frames = arr.shape[0]
    totals: dict[tuple[int, ...], float] = {}
    for path in itertools.product(active, repeat=frames):
        logp = sum(arr[t, tok] for t, tok in enumerate(path))
        label = tuple(
            tok for tok, _ in itertools.groupby(path) if tok != blank
        )
        totals[label] = np.logaddexp(totals.get(label, -np.inf), logp)
    return totals


class TestCollapse:
    def test_blank_separates_repeats(self):
        assert collapse_path([G, BLANK, G, A]) == ("ㄱ", "ㄱ", "ㅏ")

    def test_adjacent_repeats_merge(self):
        assert collapse_path([G, G, A]) == ("ㄱ", "ㅏ")

    def test_all_blank_is_empty(self):
        assert collapse_path([BLANK, BLANK]) == ()
        assert collapse_path([]) == ()

    def test_residual_specials_dropped_after_merging(self):
        space = VOCAB.id("<space>")
        assert collapse_path([space, G]) == ("ㄱ",)
        assert collapse_path([G, space, G]) == ("ㄱ", "ㄱ")
        assert collapse_path([G, space, space, A]) == ("ㄱ", "ㅏ")


class TestGreedy:
    def test_one_hot_path(self):
        hyp = greedy_decode(one_hot_emissions([G, BLANK, A]))
        assert hyp.sequence == ("ㄱ", "ㅏ")
        arr = one_hot_emissions([G, BLANK, A]).log_probs
        assert hyp.am_logp == pytest.approx(
            arr[0, G] + arr[1, BLANK] + arr[2, A], abs=1e-12)
        assert hyp.combined == hyp.am_logp
        assert hyp.lm_logp == 0.0

    def test_uniform_rows_pick_lowest_id(self):
        # Every row ties across all 45 tokens; the tie rule chooses token 0
        # each frame, which collapses to a single ㄱ.
        arr = np.full((4, 45), math.log(1.0 / 45))
        hyp = greedy_decode(EmissionMatrix(arr))
        assert hyp.sequence == ("ㄱ",)

    def test_empty_matrix(self):
        hyp = greedy_decode(EmissionMatrix(np.zeros((0, 45))))
        assert hyp.sequence == ()
        assert hyp.am_logp == 0.0

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(EmissionFormatError, match="45"):
            greedy_decode(EmissionMatrix(np.zeros((3, 44))))


class TestValidation:
    def test_rows_must_normalize(self):
        arr = np.full((2, 45), math.log(1.0 / 45))
        arr[1] += 0.5
        with pytest.raises(EmissionFormatError, match="log-sum-exp"):
            EmissionMatrix(arr).validate()

    def test_non_finite_rejected(self):
        arr = np.full((1, 45), math.log(1.0 / 45))
        arr[0, 3] = np.nan
        with pytest.raises(EmissionFormatError, match="non-finite"):
            EmissionMatrix(arr).validate()

    def test_uniform_row_passes(self):
        EmissionMatrix(np.full((1, 45), math.log(1.0 / 45))).validate()


class TestPrefixBeamExactness:
    def test_toy_matrix_matches_enumeration(self):
        rng = np.random.default_rng(0)
        em = sparse_emissions(rng, 3, [G, N, A, BLANK])
        totals = oracle_marginals(em.log_probs, [G, N, A, BLANK], BLANK)
        best_label, best_logp = min(
            totals.items(), key=lambda kv: (-kv[1], kv[0]))
        config = DecodeConfig(beam_width=512, lm_weight=0.0,
                              length_bonus=0.0, prune_logp=-50.0)
        top = prefix_beam_decode(em, VOCAB, config)[0]
        assert top.sequence == tuple(VOCAB.token(i) for i in best_label)
        assert top.am_logp == pytest.approx(best_logp, abs=1e-9)

    @pytest.mark.parametrize("seed", range(25))
    def test_random_small_matrices_match_enumeration(self, seed):
        rng = np.random.default_rng(1000 + seed)
        frames = int(rng.integers(1, 6))
        jamo = rng.choice(40, size=int(rng.integers(2, 5)), replace=False)
        active = sorted(int(i) for i in jamo) + [BLANK]
        em = sparse_emissions(rng, frames, active)
        totals = oracle_marginals(em.log_probs, active, BLANK)
        assert np.logaddexp.reduce(list(totals.values())) == pytest.approx(0, abs=1e-9)
        best_label, best_logp = min(
            totals.items(), key=lambda kv: (-kv[1], kv[0]))
        config = DecodeConfig(beam_width=2048, lm_weight=0.0,
                              length_bonus=0.0, prune_logp=-50.0)
        top = prefix_beam_decode(em, VOCAB, config)[0]
        assert top.sequence == tuple(VOCAB.token(i) for i in best_label)
        assert top.am_logp == pytest.approx(best_logp, abs=1e-9)


class TestPrefixBeamProperties:
    def test_beam_contains_greedy_labeling(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            arr = np.log(rng.dirichlet(np.full(45, 0.3), size=3))
            em = EmissionMatrix(arr)
            greedy = greedy_decode(em)
            config = DecodeConfig(beam_width=45 * 3, lm_weight=0.0,
                                  length_bonus=0.0, prune_logp=-1e9)
            hyps = prefix_beam_decode(em, VOCAB, config)
            assert greedy.sequence in {h.sequence for h in hyps}
            assert hyps[0].combined >= greedy.am_logp - 1e-12

    def test_best_score_monotone_in_beam_width(self):
        rng = np.random.default_rng(9)
        arr = np.log(rng.dirichlet(np.full(45, 0.5), size=4))
        em = EmissionMatrix(arr)
        best = -np.inf
        for width in (1, 2, 4, 8, 16, 64, 256):
            config = DecodeConfig(beam_width=width, lm_weight=0.0,
                                  length_bonus=0.0, prune_logp=-1e9)
            score = prefix_beam_decode(em, VOCAB, config)[0].combined
            assert score >= best - 1e-12
            best = score

    def test_lm_neutral_when_weight_is_zero(self):
        rng = np.random.default_rng(11)
        arr = np.log(rng.dirichlet(np.full(45, 0.4), size=4))
        em = EmissionMatrix(arr)
        lm = train_model([("ㄱ", "ㅏ"), ("ㄴ", "ㅏ")], 2)
        config = DecodeConfig(beam_width=16, lm_weight=0.0)
        without = prefix_beam_decode(em, VOCAB, config)
        with_lm = prefix_beam_decode(em, VOCAB, config, lm=lm)
        assert without == with_lm

    def test_deterministic_ordering_under_ties(self):
        arr = np.full((2, 45), math.log(1.0 / 45))
        em = EmissionMatrix(arr)
        config = DecodeConfig(beam_width=32, lm_weight=0.0, length_bonus=0.0)
        first = prefix_beam_decode(em, VOCAB, config)
        second = prefix_beam_decode(em, VOCAB, config)
        assert first == second
        for left, right in zip(first, first[1:]):
            assert (-left.combined, left.sequence) <= (-right.combined, right.sequence)

    def test_lm_fusion_can_override_acoustics(self):
        # Acoustics slightly prefer ㄱㅓ; the LM has only ever seen ㄱㅏ.
        arr = np.full((2, 45), -1e9)
        arr[0, G] = math.log(1.0 - 1e-9)
        arr[0, BLANK] = math.log(1e-9)
        eo = VOCAB.id("ㅓ")
        arr[1, A] = math.log(0.45)
        arr[1, eo] = math.log(0.55)
        arr[1, BLANK] = math.log(1e-9)
        em = EmissionMatrix(arr)
        lm = train_model([("ㄱ", "ㅏ"), ("ㄱ", "ㅏ", "ㄱ", "ㅏ")], 2)
        acoustic = prefix_beam_decode(
            em, VOCAB, DecodeConfig(beam_width=8, lm_weight=0.0, length_bonus=0.0))
        fused = prefix_beam_decode(
            em, VOCAB, DecodeConfig(beam_width=8, lm_weight=2.0, length_bonus=0.0),
            lm=lm)
        assert acoustic[0].sequence == ("ㄱ", "ㅓ")
        assert fused[0].sequence == ("ㄱ", "ㅏ")

    def test_lm_logp_matches_sequence_score(self):
        rng = np.random.default_rng(21)
        em = sparse_emissions(rng, 4, [G, N, A, BLANK])
        lm = train_model([("ㄱ", "ㅏ"), ("ㄴ", "ㅏ"), ("ㄱ", "ㅏ", "ㄴ")], 3)
        config = DecodeConfig(beam_width=16, lm_weight=0.7, length_bonus=0.3,
                              prune_logp=-50.0)
        for hyp in prefix_beam_decode(em, VOCAB, config, lm=lm):
            assert hyp.lm_logp == pytest.approx(
                LN10 * score_sequence(lm, hyp.sequence), abs=1e-9)
            assert hyp.combined == pytest.approx(
                hyp.am_logp + 0.7 * hyp.lm_logp + 0.3 * len(hyp.sequence), abs=1e-9)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DecodeConfig(beam_width=0)
        with pytest.raises(ValueError):
            DecodeConfig(lm_weight=-0.1)

    def test_defaults(self):
        config = DecodeConfig()
        assert (config.beam_width, config.lm_weight,
                config.length_bonus, config.prune_logp) == (100, 0.5, 1.5, -10.0)


class TestEmissionIO:
    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        arr = np.log(rng.dirichlet(np.ones(45), size=7)).astype(np.float32)
        path = tmp_path / "em.jem"
        write_emissions(EmissionMatrix(arr.astype(np.float64)), path)
        back = read_emissions(path)
        assert back.frames == 7 and back.vocab_size == 45
        assert np.array_equal(back.log_probs.astype(np.float32), arr)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.jem"
        path.write_bytes(b"NOPE" + b"\x00" * 8)
        with pytest.raises(EmissionFormatError, match="magic"):
            read_emissions(path)

    def test_truncated_payload(self, tmp_path):
        arr = np.full((2, 45), math.log(1.0 / 45))
        path = tmp_path / "em.jem"
        write_emissions(EmissionMatrix(arr), path)
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(EmissionFormatError, match="payload"):
            read_emissions(path)

    def test_short_header(self, tmp_path):
        path = tmp_path / "tiny.jem"
        path.write_bytes(b"JEM1")
        with pytest.raises(EmissionFormatError, match="header"):
            read_emissions(path)

    def test_uniform_row_file_validates(self, tmp_path):
        arr = np.full((1, 45), math.log(1.0 / 45))
        path = tmp_path / "u.jem"
        write_emissions(EmissionMatrix(arr), path)
        read_emissions(path).validate()
