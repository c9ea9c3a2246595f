"""CTC decoding of emission matrices: greedy best-path and prefix beam search.

Emissions are T x 45 natural-log probability matrices produced by an
external acoustic model (or the bundled simulator).  The pad token is the
CTC blank.  Prefix beam search keeps per-prefix (ending-in-blank,
ending-in-non-blank) probabilities and optionally fuses a backoff n-gram
LM: extending a prefix by token t adds lm_weight * ln(10) * log10 P(t |
prefix) and a length bonus; the eos LM cost is added at finalization.
With lm_weight 0 the LM is never consulted and the search is purely
acoustic.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmissionFormatError
from .hangul import BOS, EOS, JamoSeq, Vocabulary, build_vocabulary
from .lm import NGramModel, conditional_logprob

_MAGIC = b"JEM1"
_LN10 = math.log(10.0)
_NEG_INF = float("-inf")


def _logaddexp(a: float, b: float) -> float:
    if a == _NEG_INF:
        return b
    if b == _NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@dataclass
class EmissionMatrix:
    """T x 45 frame log-probabilities (natural log), rows summing to one."""

    log_probs: np.ndarray

    @property
    def frames(self) -> int:
        return int(self.log_probs.shape[0])

    @property
    def vocab_size(self) -> int:
        return int(self.log_probs.shape[1])

    def validate(self, vocab: Vocabulary | None = None) -> None:
        """Raise EmissionFormatError unless shape, finiteness, and row
        normalization (logsumexp 0 +- 1e-4) all hold."""
        vocab = vocab or build_vocabulary()
        arr = self.log_probs
        if arr.ndim != 2 or arr.shape[1] != len(vocab):
            raise EmissionFormatError(
                f"emissions must be T x {len(vocab)}, got shape {tuple(arr.shape)}"
            )
        if not np.isfinite(arr).all():
            raise EmissionFormatError("emissions contain non-finite values")
        if arr.shape[0]:
            rows = np.logaddexp.reduce(arr.astype(np.float64), axis=1)
            worst = float(np.abs(rows).max())
            if worst > 1e-4:
                raise EmissionFormatError(
                    f"emission rows must log-sum-exp to 0 (worst |error| {worst:.2e})"
                )


def write_emissions(matrix: EmissionMatrix, path: str | Path) -> None:
    """Binary serialization: "JEM1", u32 T, u32 V, T*V float32 LE row-major."""
    arr = np.asarray(matrix.log_probs)
    frames, width = arr.shape
    if frames >= 2**32 or width >= 2**32:
        raise EmissionFormatError("matrix dimensions exceed the u32 header fields")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", _MAGIC, frames, width))
        fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_emissions(path: str | Path) -> EmissionMatrix:
    data = Path(path).read_bytes()
    if len(data) < 12:
        raise EmissionFormatError("emission file shorter than its 12-byte header")
    magic, frames, width = struct.unpack_from("<4sII", data)
    if magic != _MAGIC:
        raise EmissionFormatError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    expected = 12 + frames * width * 4
    if len(data) != expected:
        raise EmissionFormatError(
            f"payload is {len(data) - 12} bytes, expected {frames * width * 4}"
        )
    values = np.frombuffer(data, dtype="<f4", offset=12).reshape(frames, width)
    return EmissionMatrix(values.astype(np.float64))


@dataclass(frozen=True)
class DecodeConfig:
    beam_width: int = 100
    lm_weight: float = 0.5
    length_bonus: float = 1.5
    prune_logp: float = -10.0

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ValueError(f"beam_width must be >= 1, got {self.beam_width}")
        if self.lm_weight < 0:
            raise ValueError(f"lm_weight must be >= 0, got {self.lm_weight}")


@dataclass(frozen=True)
class Hypothesis:
    """A decoded labeling.  am_logp and lm_logp are natural logs; combined
    = am_logp + lm_weight * lm_logp + length_bonus * len(sequence)."""

    sequence: JamoSeq
    am_logp: float
    lm_logp: float
    combined: float


def collapse_path(path: Sequence[int], vocab: Vocabulary | None = None) -> JamoSeq:
    """CTC collapse: merge adjacent repeats, drop blanks, drop specials."""
    vocab = vocab or build_vocabulary()
    blank = vocab.blank_id
    out: list[str] = []
    previous = None
    for token_id in path:
        token = vocab.token(token_id)
        if token_id != previous and token_id != blank and token_id in vocab.jamo_ids:
            out.append(token)
        if token_id != previous:
            previous = token_id
    return tuple(out)


def greedy_decode(emissions: EmissionMatrix, vocab: Vocabulary | None = None) -> Hypothesis:
    """Best path decode: per-frame argmax (lower id wins ties), collapsed."""
    vocab = vocab or build_vocabulary()
    emissions.validate(vocab)
    arr = emissions.log_probs
    ids = np.argmax(arr, axis=1)
    am = float(arr[np.arange(len(ids)), ids].sum()) if len(ids) else 0.0
    return Hypothesis(collapse_path(ids.tolist(), vocab), am, 0.0, am)


def _jamo_length(prefix: tuple[int, ...], jamo_count: int) -> int:
    return sum(1 for i in prefix if i < jamo_count)


def prefix_beam_decode(
    emissions: EmissionMatrix,
    vocab: Vocabulary | None = None,
    config: DecodeConfig | None = None,
    lm: NGramModel | None = None,
) -> list[Hypothesis]:
    """Prefix beam search over collapsed labelings, best-first.

    Maintains log (p_blank, p_nonblank) per prefix of non-blank token ids.
    Frame tokens below prune_logp are not used to extend prefixes (they
    still participate in blank/repeat continuations of existing prefixes).
    Ties in ranking break toward the lexicographically smaller prefix, so
    output order is deterministic.
    """
    vocab = vocab or build_vocabulary()
    config = config or DecodeConfig()
    emissions.validate(vocab)
    if lm is not None and len(lm.vocabulary) != len(vocab):
        raise EmissionFormatError("LM vocabulary does not match the decoder vocabulary")
    use_lm = lm is not None and config.lm_weight > 0
    arr = emissions.log_probs
    blank = vocab.blank_id
    jamo_count = len(vocab.jamo_ids)
    alpha, beta = config.lm_weight, config.length_bonus

    lm_ll: dict[tuple[int, ...], float] = {(): 0.0}

    bos_pad: list[str] = [BOS] * (lm.order - 1) if use_lm else []

    def lm_extend(prefix: tuple[int, ...], token_id: int) -> None:
        new_prefix = prefix + (token_id,)
        if new_prefix not in lm_ll:
            context = bos_pad + [vocab.token(i) for i in prefix]
            lm_ll[new_prefix] = lm_ll[prefix] + _LN10 * conditional_logprob(
                lm, context, vocab.token(token_id)
            )

    beam: dict[tuple[int, ...], list[float]] = {(): [0.0, _NEG_INF]}
    for row in arr:
        frame = row.tolist()
        candidates = [
            i for i, logp in enumerate(frame)
            if i != blank and logp >= config.prune_logp
        ]
        blank_logp = frame[blank]
        grown: dict[tuple[int, ...], list[float]] = {}
        for prefix, (p_blank, p_nonblank) in beam.items():
            total = _logaddexp(p_blank, p_nonblank)
            entry = grown.setdefault(prefix, [_NEG_INF, _NEG_INF])
            entry[0] = _logaddexp(entry[0], total + blank_logp)
            if prefix:
                entry[1] = _logaddexp(entry[1], p_nonblank + frame[prefix[-1]])
            for token_id in candidates:
                # A repeat of the last token only extends the prefix when the
                # previous frame ended in blank; otherwise the repeat merges.
                source = p_blank if prefix and token_id == prefix[-1] else total
                if source == _NEG_INF:
                    continue
                if use_lm:
                    lm_extend(prefix, token_id)
                new_prefix = prefix + (token_id,)
                new_entry = grown.setdefault(new_prefix, [_NEG_INF, _NEG_INF])
                new_entry[1] = _logaddexp(new_entry[1], source + frame[token_id])

        def rank(item: tuple[tuple[int, ...], list[float]]) -> float:
            prefix, (pb, pnb) = item
            score = _logaddexp(pb, pnb) + beta * _jamo_length(prefix, jamo_count)
            if use_lm:
                score += alpha * lm_ll[prefix]
            return score

        ordered = sorted(grown.items(), key=lambda item: (-rank(item), item[0]))
        beam = dict(ordered[: config.beam_width])

    results: list[Hypothesis] = []
    for prefix, (p_blank, p_nonblank) in beam.items():
        am = _logaddexp(p_blank, p_nonblank)
        if use_lm:
            context = bos_pad + [vocab.token(i) for i in prefix]
            lm_total = lm_ll[prefix] + _LN10 * conditional_logprob(lm, context, EOS)
        else:
            lm_total = 0.0
        sequence = tuple(vocab.token(i) for i in prefix if i < jamo_count)
        combined = am + alpha * lm_total + beta * len(sequence)
        results.append(Hypothesis(sequence, am, lm_total, combined))
    results.sort(key=lambda h: (-h.combined, h.sequence))
    return results
