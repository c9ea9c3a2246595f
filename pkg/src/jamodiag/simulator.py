"""Synthetic corpus generation for end-to-end pipeline checks.

Builds rule-corrupted pronunciations of target words (with ground-truth
rule labels) and synthesizes frame-level emission matrices for them with a
deliberately simple noise model: each token emits a few frames whose
log-probabilities fall off with a token distance (optionally biased so
same-place/same-manner consonants are the most confusable), softened by a
confusion temperature.  Temperature 0 produces near-one-hot rows that
greedy decoding inverts exactly.

Randomness comes from numpy's seeded ``default_rng`` (PCG64).  Every
utterance derives its own generator from ``(seed, utterance_index)``, so
corpora are reproducible byte-for-byte and per-utterance generation order
does not matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decoder import EmissionMatrix, write_emissions
from .errors import CompositionError
from .hangul import (
    JamoSeq,
    Vocabulary,
    build_vocabulary,
    compose_jamo,
    decompose_text,
    features_of,
)
from .reports import CorpusManifest, UtteranceRecord, write_manifest
from .rules import ErrorRule, RuleApplication, generate_variants

_FLOOR = 1e-12


@dataclass(frozen=True)
class NoiseConfig:
    """Emission noise model parameters; temperature 0 is deterministic."""

    seed: int = 0
    frames_min: int = 2
    frames_max: int = 4
    blank_insertion_prob: float = 0.3
    confusion_temperature: float = 0.0
    feature_biased: bool = False

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not 1 <= self.frames_min <= self.frames_max:
            raise ValueError("need 1 <= frames_min <= frames_max")
        if not 0.0 <= self.blank_insertion_prob <= 1.0:
            raise ValueError("blank_insertion_prob must be in [0, 1]")
        if self.confusion_temperature < 0.0:
            raise ValueError("confusion_temperature must be >= 0")


@dataclass(frozen=True)
class SyntheticUtterance:
    """A word, the variant actually 'spoken', and the rules that made it."""

    gold_word: str
    spoken: JamoSeq
    applied_rules: tuple[str, ...]
    emission_path: str | None = None


def simulate_mispronunciation(
    word: str,
    rules: list[ErrorRule],
    error_prob: float,
    rng: np.random.Generator,
    variants: dict[JamoSeq, tuple[RuleApplication, ...]] | None = None,
) -> SyntheticUtterance:
    """Pick the gold pronunciation or, with ``error_prob``, a random variant.

    ``variants`` may carry a precomputed ``generate_variants(word, rules, 2)``
    result to avoid recomputing the closure per utterance.
    """
    if not 0.0 <= error_prob <= 1.0:
        raise ValueError("error_prob must be in [0, 1]")
    if variants is None:
        variants = generate_variants(word, rules, 2)
    options = sorted(variants.items())
    if options and error_prob > 0 and rng.random() < error_prob:
        spoken, applications = options[int(rng.integers(len(options)))]
        applied = tuple(app.rule_id for app in applications)
    else:
        spoken = decompose_text(word)
        applied = ()
    return SyntheticUtterance(word, spoken, applied)


def _token_distance(target: str, other: str, vocab: Vocabulary,
                    feature_biased: bool) -> float:
    if other not in vocab.index or vocab.id(other) not in vocab.jamo_ids:
        return 2.0  # specials (blank, space, unk, bos, eos) stay remote
    if target not in vocab.index or vocab.id(target) not in vocab.jamo_ids:
        return 1.0  # blank-separator frames treat all jamo evenly
    if not feature_biased:
        return 1.0
    target_feats = features_of(target)
    other_feats = features_of(other)
    if target_feats.kind != other_feats.kind:
        return 1.5
    if target_feats.kind == "consonant":
        close = (target_feats.place == other_feats.place
                 or target_feats.manner == other_feats.manner)
    else:
        close = target_feats.rounded == other_feats.rounded
    return 0.5 if close else 1.0


def _distance_row(target_id: int, vocab: Vocabulary,
                  feature_biased: bool) -> np.ndarray:
    target = vocab.token(target_id)
    row = np.array([
        0.0 if j == target_id
        else _token_distance(target, tok, vocab, feature_biased)
        for j, tok in enumerate(vocab.tokens)
    ])
    return row


def _emission_row(target_id: int, vocab: Vocabulary, config: NoiseConfig,
                  rng: np.random.Generator,
                  cache: dict[int, np.ndarray]) -> np.ndarray:
    size = len(vocab.tokens)
    if config.confusion_temperature == 0.0:
        row = np.full(size, math.log(_FLOOR))
        row[target_id] = math.log1p(-(size - 1) * _FLOOR)
        return row
    distances = cache.get(target_id)
    if distances is None:
        distances = _distance_row(target_id, vocab, config.feature_biased)
        cache[target_id] = distances
    logits = -distances / config.confusion_temperature + rng.standard_normal(size)
    peak = logits.max()
    return logits - (peak + math.log(np.exp(logits - peak).sum()))


def synthesize_emissions(
    seq: JamoSeq,
    vocab: Vocabulary | None = None,
    config: NoiseConfig | None = None,
    rng: np.random.Generator | None = None,
) -> EmissionMatrix:
    """Frame-level emission matrix for a token sequence.

    Each token emits ``frames_min..frames_max`` frames peaked at its own
    id.  A blank frame always separates identical adjacent tokens (so CTC
    collapse can recover both) and otherwise appears between tokens with
    ``blank_insertion_prob``.
    """
    if not seq:
        raise ValueError("cannot synthesize emissions for an empty sequence")
    vocab = vocab or build_vocabulary()
    config = config or NoiseConfig()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    ids = [vocab.id(tok) for tok in seq]
    cache: dict[int, np.ndarray] = {}
    rows: list[np.ndarray] = []
    for position, token_id in enumerate(ids):
        frames = int(rng.integers(config.frames_min, config.frames_max + 1))
        for _ in range(frames):
            rows.append(_emission_row(token_id, vocab, config, rng, cache))
        if position + 1 < len(ids):
            forced = ids[position + 1] == token_id
            if forced or rng.random() < config.blank_insertion_prob:
                rows.append(
                    _emission_row(vocab.blank_id, vocab, config, rng, cache))
    return EmissionMatrix(np.vstack(rows))


def generate_corpus(
    words: list[str],
    rules: list[ErrorRule],
    n_per_word: int,
    config: NoiseConfig,
    output_dir: str | Path,
    error_prob: float = 0.5,
    vocab: Vocabulary | None = None,
) -> CorpusManifest:
    """Write a seeded synthetic corpus: emission files plus manifest.jsonl.

    The manifest's ``target_text`` is the spoken variant (recomposed into
    syllables when possible, raw jamo otherwise); ``gold_word`` and
    ``rules`` record the intended word and the injected error rules.
    """
    if n_per_word < 1:
        raise ValueError("n_per_word must be positive")
    vocab = vocab or build_vocabulary()
    output_dir = Path(output_dir)
    (output_dir / "emissions").mkdir(parents=True, exist_ok=True)
    variant_cache = {
        word: generate_variants(word, rules, 2) for word in dict.fromkeys(words)
    }
    records: list[UtteranceRecord] = []
    index = 0
    for word in words:
        for _ in range(n_per_word):
            rng = np.random.default_rng(
                np.random.SeedSequence([config.seed, index]))
            utterance = simulate_mispronunciation(
                word, rules, error_prob, rng, variants=variant_cache[word])
            emissions = synthesize_emissions(
                utterance.spoken, vocab, config, rng)
            relative = f"emissions/u{index:05d}.jem"
            write_emissions(emissions, output_dir / relative)
            try:
                target_text = compose_jamo(utterance.spoken)
            except CompositionError:
                target_text = "".join(utterance.spoken)
            records.append(UtteranceRecord(
                id=f"u{index:05d}-{word}",
                target_text=target_text,
                emission_path=relative,
                gold_word=word,
                rules=utterance.applied_rules,
            ))
            index += 1
    write_manifest(records, output_dir / "manifest.jsonl")
    return CorpusManifest(tuple(records), output_dir)
