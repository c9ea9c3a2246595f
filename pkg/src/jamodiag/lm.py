"""Backoff n-gram language model over jamo tokens with ARPA I/O.

Training counts every n-gram window over bos-padded sequences; estimation
is interpolated Kneser-Ney with a fixed discount (continuation counts for
lower orders, raw counts for bos-initial n-grams), falling back to
absolute discounting when the top-order counts are all singletons.  The
unigram level interpolates with a uniform floor over the 44 predictable
tokens, so conditionals sum to one exactly and <unk> gets the floor mass.

Probabilities and backoff weights are stored in log10, matching the ARPA
text format; n-grams ending in bos are -99 placeholders that only carry
backoff weights.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

from .errors import ArpaError, VocabularyError
from .hangul import BOS, EOS, JamoSeq, Vocabulary, build_vocabulary

PLACEHOLDER_LOGPROB = -99.0
_PREDICTABLE = 44  # vocabulary minus bos


@dataclass(frozen=True)
class SmoothingConfig:
    """Kneser-Ney discount plus the degenerate-corpus fallback discount."""

    discount: float = 0.75
    fallback_discount: float = 0.5


@dataclass
class CountTable:
    """Raw n-gram window counts, per order 1..order, over padded sequences."""

    order: int
    tables: dict[int, dict[tuple[str, ...], int]] = field(default_factory=dict)


def count_ngrams(corpus: list[JamoSeq], order: int) -> CountTable:
    """Exact n-gram window counts over bos^(order-1) + seq + eos paddings."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if not corpus:
        raise ValueError("corpus is empty")
    vocab = build_vocabulary()
    tables: dict[int, dict[tuple[str, ...], int]] = {
        k: {} for k in range(1, order + 1)
    }
    pad = (BOS,) * (order - 1)
    for seq in corpus:
        for tok in seq:
            if tok not in vocab:
                raise VocabularyError(f"corpus token {tok!r} is outside the vocabulary")
            if tok in (BOS, EOS):
                raise VocabularyError(
                    f"corpus sequences must not contain the boundary marker {tok!r}"
                )
        padded = pad + tuple(seq) + (EOS,)
        for k in range(1, order + 1):
            table = tables[k]
            for i in range(len(padded) - k + 1):
                gram = padded[i:i + k]
                table[gram] = table.get(gram, 0) + 1
    return CountTable(order, tables)


class NGramModel:
    """Immutable backoff model: per-order n-gram -> (log10 prob, log10 bow)."""

    def __init__(
        self,
        order: int,
        entries: dict[int, dict[tuple[str, ...], tuple[float, float | None]]],
        vocabulary: Vocabulary | None = None,
    ):
        self.order = order
        self.entries = entries
        self.vocabulary = vocabulary or build_vocabulary()


def _adjusted_counts(counts: CountTable, use_raw: bool) -> dict[int, dict]:
    """Numerator counts per order: continuation counts for lower orders,
    raw counts at the top order and for bos-initial n-grams (which have no
    left extensions).  Absolute-discounting mode keeps raw counts everywhere.
    """
    n = counts.order
    adjusted: dict[int, dict] = {n: dict(counts.tables[n])}
    for k in range(n - 1, 0, -1):
        continuation: Counter = Counter()
        for gram in counts.tables[k + 1]:
            continuation[gram[1:]] += 1
        adjusted[k] = {
            gram: raw if (use_raw or gram[0] == BOS) else continuation[gram]
            for gram, raw in counts.tables[k].items()
        }
    return adjusted


def estimate_model(counts: CountTable, config: SmoothingConfig | None = None) -> NGramModel:
    """Interpolated Kneser-Ney estimation (see module docstring)."""
    cfg = config or SmoothingConfig()
    n = counts.order
    top = counts.tables.get(n)
    if not top:
        raise ValueError("count table has no top-order entries")
    degenerate = all(c == 1 for c in top.values())
    if degenerate:
        warnings.warn(
            "all top-order n-gram counts are singletons; falling back to "
            f"absolute discounting with discount {cfg.fallback_discount}",
            stacklevel=2,
        )
    discount = cfg.fallback_discount if degenerate else cfg.discount
    adjusted = _adjusted_counts(counts, use_raw=degenerate)
    vocab = build_vocabulary()
    entries: dict[int, dict[tuple[str, ...], list]] = {
        k: {} for k in range(1, n + 1)
    }

    # Unigrams: discount the adjusted counts and mix in the uniform floor.
    unigrams = adjusted[1]
    denom = sum(c for g, c in unigrams.items() if g[0] != BOS)
    seen = sum(1 for g in unigrams if g[0] != BOS)
    gamma1 = discount * seen / denom
    floor = gamma1 / _PREDICTABLE
    for tok in vocab.tokens:
        if tok == BOS:
            entries[1][(tok,)] = [PLACEHOLDER_LOGPROB, None]
        else:
            base = max(unigrams.get((tok,), 0) - discount, 0.0) / denom
            entries[1][(tok,)] = [math.log10(base + floor), None]

    for k in range(2, n + 1):
        level = adjusted[k]
        denoms: Counter = Counter()
        n1plus: Counter = Counter()
        for gram, c in level.items():
            if gram[-1] != BOS:
                denoms[gram[:-1]] += c
                n1plus[gram[:-1]] += 1
        for gram, c in level.items():
            if gram[-1] == BOS:
                entries[k][gram] = [PLACEHOLDER_LOGPROB, None]
                continue
            context = gram[:-1]
            gamma = discount * n1plus[context] / denoms[context]
            lower = 10.0 ** entries[k - 1][gram[1:]][0]
            prob = max(c - discount, 0.0) / denoms[context] + gamma * lower
            entries[k][gram] = [math.log10(prob), None]
        for context in denoms:
            gamma = discount * n1plus[context] / denoms[context]
            entries[k - 1][context][1] = math.log10(gamma)

    frozen = {
        k: {g: (v[0], v[1]) for g, v in table.items()}
        for k, table in entries.items()
    }
    return NGramModel(n, frozen, vocab)


def train_model(
    corpus: list[JamoSeq], order: int = 5, config: SmoothingConfig | None = None
) -> NGramModel:
    """count_ngrams + estimate_model in one step."""
    return estimate_model(count_ngrams(corpus, order), config)


def conditional_logprob(model: NGramModel, context: list[str], token: str) -> float:
    """log10 P(token | context) under the standard backoff recursion."""
    unigram = model.entries[1].get((token,))
    if unigram is None:
        raise VocabularyError(f"token {token!r} not in the model vocabulary")
    ctx = tuple(context)
    if len(ctx) >= model.order:
        ctx = ctx[-(model.order - 1):] if model.order > 1 else ()
    total = 0.0
    while ctx:
        gram = ctx + (token,)
        entry = model.entries.get(len(gram), {}).get(gram)
        if entry is not None:
            return total + entry[0]
        context_entry = model.entries.get(len(ctx), {}).get(ctx)
        if context_entry is not None and context_entry[1] is not None:
            total += context_entry[1]
        ctx = ctx[1:]
    return total + unigram[0]


def score_sequence(model: NGramModel, seq: JamoSeq) -> float:
    """log10 probability of a sequence with bos padding and eos termination."""
    context = (BOS,) * (model.order - 1)
    total = 0.0
    for tok in tuple(seq) + (EOS,):
        total += conditional_logprob(model, context, tok)
        if model.order > 1:
            context = (context + (tok,))[-(model.order - 1):]
    return total


def _format_entry(gram: tuple[str, ...], value: tuple[float, float | None]) -> str:
    logp, bow = value
    name = " ".join(gram)
    if bow is None:
        return f"{logp:.10f}\t{name}"
    return f"{logp:.10f}\t{name}\t{bow:.10f}"


def write_arpa(model: NGramModel) -> str:
    """Serialize to the ARPA text format, n-grams in vocabulary-id order."""
    key = model.vocabulary.id
    lines = ["\\data\\"]
    for k in range(1, model.order + 1):
        lines.append(f"ngram {k}={len(model.entries.get(k, {}))}")
    for k in range(1, model.order + 1):
        lines.append("")
        lines.append(f"\\{k}-grams:")
        table = model.entries.get(k, {})
        for gram in sorted(table, key=lambda g: tuple(key(t) for t in g)):
            lines.append(_format_entry(gram, table[gram]))
    lines.append("")
    lines.append("\\end\\")
    return "\n".join(lines) + "\n"


def parse_arpa(text: str) -> NGramModel:
    """Parse an ARPA file, validating layout, counts, and token names."""
    vocab = build_vocabulary()
    lines = text.splitlines()
    i = 0

    def skip_blanks() -> None:
        nonlocal i
        while i < len(lines) and not lines[i].strip():
            i += 1

    skip_blanks()
    if i >= len(lines) or lines[i].strip() != "\\data\\":
        raise ArpaError("expected \\data\\ header", line=i + 1)
    i += 1
    declared: dict[int, int] = {}
    while i < len(lines) and lines[i].strip():
        part = lines[i].strip()
        if not part.startswith("ngram "):
            raise ArpaError(f"bad count line {part!r}", line=i + 1)
        try:
            order_str, count_str = part.removeprefix("ngram ").split("=")
            declared[int(order_str)] = int(count_str)
        except ValueError:
            raise ArpaError(f"bad count line {part!r}", line=i + 1) from None
        i += 1
    if not declared or sorted(declared) != list(range(1, len(declared) + 1)):
        raise ArpaError("\\data\\ section must declare orders 1..N", line=i)

    order = len(declared)
    entries: dict[int, dict[tuple[str, ...], tuple[float, float | None]]] = {}
    for k in range(1, order + 1):
        skip_blanks()
        header = f"\\{k}-grams:"
        if i >= len(lines) or lines[i].strip() != header:
            found = lines[i].strip() if i < len(lines) else "end of file"
            raise ArpaError(f"expected {header}, found {found!r}", line=i + 1)
        header_line = i + 1
        i += 1
        table: dict[tuple[str, ...], tuple[float, float | None]] = {}
        while i < len(lines) and lines[i].strip() and not lines[i].startswith("\\"):
            fields = lines[i].split("\t")
            if len(fields) not in (2, 3):
                raise ArpaError("entry must have 2 or 3 tab-separated fields", line=i + 1)
            try:
                logp = float(fields[0])
                bow = float(fields[2]) if len(fields) == 3 else None
            except ValueError:
                raise ArpaError("non-numeric probability or backoff", line=i + 1) from None
            if logp > 0 or not math.isfinite(logp):
                raise ArpaError(f"log10 probability {fields[0]} must be <= 0", line=i + 1)
            if bow is not None and not math.isfinite(bow):
                raise ArpaError("backoff weight must be finite", line=i + 1)
            gram = tuple(fields[1].split(" "))
            if len(gram) != k:
                raise ArpaError(f"expected a {k}-gram, got {fields[1]!r}", line=i + 1)
            for tok in gram:
                if tok not in vocab:
                    raise ArpaError(f"unknown token {tok!r}", line=i + 1)
            if gram in table:
                raise ArpaError(f"duplicate {k}-gram {fields[1]!r}", line=i + 1)
            table[gram] = (logp, bow)
            i += 1
        if len(table) != declared[k]:
            raise ArpaError(
                f"\\{k}-grams: section lists {len(table)} entries, "
                f"but \\data\\ declares {declared[k]}",
                line=header_line,
            )
        entries[k] = table
    skip_blanks()
    if i >= len(lines) or lines[i].strip() != "\\end\\":
        raise ArpaError("expected \\end\\", line=i + 1)
    return NGramModel(order, entries, vocab)
