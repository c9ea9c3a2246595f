"""Alignment-based pronunciation scoring.

Aligns reference and hypothesis jamo sequences with uniform-cost
Levenshtein alignment, then aggregates pooled phoneme error rate (PER),
consonant-only PER, micro consonant F1, a 19x19 consonant substitution
confusion matrix, and per-consonant correct/deletion/substitution ratios
(insertions excluded from the per-consonant view).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import MetricError
from .hangul import CONSONANTS, JamoSeq, is_consonant

CORRECT = "correct"
SUBSTITUTION = "substitution"
DELETION = "deletion"
INSERTION = "insertion"


@dataclass(frozen=True)
class AlignmentOp:
    """One aligned position: an operation with its reference/hypothesis tokens."""

    kind: str
    ref_token: str | None = None
    hyp_token: str | None = None

    def __post_init__(self) -> None:
        if self.kind in (CORRECT, SUBSTITUTION):
            if self.ref_token is None or self.hyp_token is None:
                raise ValueError(f"{self.kind} op needs both tokens")
            if self.kind == CORRECT and self.ref_token != self.hyp_token:
                raise ValueError("correct op with unequal tokens")
            if self.kind == SUBSTITUTION and self.ref_token == self.hyp_token:
                raise ValueError("substitution op with equal tokens")
        elif self.kind == DELETION:
            if self.ref_token is None or self.hyp_token is not None:
                raise ValueError("deletion op carries only a reference token")
        elif self.kind == INSERTION:
            if self.hyp_token is None or self.ref_token is not None:
                raise ValueError("insertion op carries only a hypothesis token")
        else:
            raise ValueError(f"unknown op kind {self.kind!r}")


@dataclass(frozen=True)
class Alignment:
    """An ordered edit script between one reference/hypothesis pair."""

    ops: tuple[AlignmentOp, ...]

    def count(self, kind: str) -> int:
        return sum(1 for op in self.ops if op.kind == kind)

    @property
    def correct(self) -> int:
        return self.count(CORRECT)

    @property
    def substitutions(self) -> int:
        return self.count(SUBSTITUTION)

    @property
    def deletions(self) -> int:
        return self.count(DELETION)

    @property
    def insertions(self) -> int:
        return self.count(INSERTION)

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def ref_length(self) -> int:
        return self.correct + self.substitutions + self.deletions

    @property
    def hyp_length(self) -> int:
        return self.correct + self.substitutions + self.insertions


def align(ref: JamoSeq, hyp: JamoSeq) -> Alignment:
    """Uniform-cost Levenshtein alignment of two token sequences.

    The backtrace is deterministic: at equal cost it prefers a correct
    match, then a substitution, then a deletion, then an insertion.
    """
    ref = tuple(ref)
    hyp = tuple(hyp)
    rows = len(ref) + 1
    cols = len(hyp) + 1
    dist = [[0] * cols for _ in range(rows)]
    for i in range(1, rows):
        dist[i][0] = i
    first = dist[0]
    for j in range(1, cols):
        first[j] = j
    for i in range(1, rows):
        prev = dist[i - 1]
        cur = dist[i]
        ref_tok = ref[i - 1]
        for j in range(1, cols):
            diag = prev[j - 1] + (ref_tok != hyp[j - 1])
            up = prev[j] + 1
            left = cur[j - 1] + 1
            cur[j] = diag if diag <= up and diag <= left else (
                up if up <= left else left)

    ops: list[AlignmentOp] = []
    i, j = len(ref), len(hyp)
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0:
            match = ref[i - 1] == hyp[j - 1]
            if match and dist[i - 1][j - 1] == here:
                ops.append(AlignmentOp(CORRECT, ref[i - 1], hyp[j - 1]))
                i -= 1
                j -= 1
                continue
            if not match and dist[i - 1][j - 1] + 1 == here:
                ops.append(AlignmentOp(SUBSTITUTION, ref[i - 1], hyp[j - 1]))
                i -= 1
                j -= 1
                continue
        if i > 0 and dist[i - 1][j] + 1 == here:
            ops.append(AlignmentOp(DELETION, ref[i - 1], None))
            i -= 1
            continue
        ops.append(AlignmentOp(INSERTION, None, hyp[j - 1]))
        j -= 1
    ops.reverse()
    return Alignment(tuple(ops))


def per(alignments: Iterable[Alignment]) -> float:
    """Pooled phoneme error rate: (S + D + I) / total reference length."""
    errors = 0
    ref_total = 0
    for alignment in alignments:
        errors += alignment.distance
        ref_total += alignment.ref_length
    if ref_total == 0:
        raise MetricError("PER is undefined: total reference length is zero")
    return errors / ref_total


def filter_consonants(seq: JamoSeq) -> JamoSeq:
    return tuple(tok for tok in seq if is_consonant(tok))


def consonant_per(pairs: Iterable[tuple[JamoSeq, JamoSeq]]) -> float:
    """Pooled PER over consonant tokens only (filter both sides, then align)."""
    alignments = [
        align(filter_consonants(ref), filter_consonants(hyp))
        for ref, hyp in pairs
    ]
    try:
        return per(alignments)
    except MetricError:
        raise MetricError(
            "consonant PER is undefined: no consonants in any reference"
        ) from None


def consonant_f1(alignments: Iterable[Alignment]) -> float:
    """Micro F1 over consonant tokens in full-sequence alignments.

    True positives are correct consonant matches; a substitution counts
    against the consonant on whichever side has one (hypothesis side as a
    false positive, reference side as a false negative), insertions of
    consonants are false positives, deletions of consonants false negatives.
    """
    tp = fp = fn = 0
    for alignment in alignments:
        for op in alignment.ops:
            if op.kind == CORRECT:
                tp += is_consonant(op.ref_token)
            elif op.kind == SUBSTITUTION:
                fp += is_consonant(op.hyp_token)
                fn += is_consonant(op.ref_token)
            elif op.kind == DELETION:
                fn += is_consonant(op.ref_token)
            else:
                fp += is_consonant(op.hyp_token)
    denom = 2 * tp + fp + fn
    if denom == 0:
        raise MetricError("consonant F1 is undefined: no consonants in corpus")
    return 2 * tp / denom


@dataclass
class ConfusionMatrix:
    """Consonant substitution grid plus per-consonant outcome counts.

    ``substitutions[i][j]`` counts reference consonant ``CONSONANTS[i]``
    realized as consonant ``CONSONANTS[j]``.  ``substituted`` additionally
    counts substitutions whose hypothesis token is a vowel, so the
    per-consonant outcome ratios (correct / deleted / substituted, with
    insertions excluded) partition every reference occurrence.
    """

    consonants: tuple[str, ...] = CONSONANTS
    substitutions: list[list[int]] = field(
        default_factory=lambda: [[0] * len(CONSONANTS) for _ in CONSONANTS])
    correct: list[int] = field(default_factory=lambda: [0] * len(CONSONANTS))
    deleted: list[int] = field(default_factory=lambda: [0] * len(CONSONANTS))
    substituted: list[int] = field(
        default_factory=lambda: [0] * len(CONSONANTS))

    def reference_occurrences(self, index: int) -> int:
        return self.correct[index] + self.deleted[index] + self.substituted[index]

    def substitution_ratios(self) -> list[list[float]]:
        """Rows of the grid normalized by each row's substitution total."""
        out = []
        for row in self.substitutions:
            total = sum(row)
            out.append([cell / total if total else 0.0 for cell in row])
        return out

    def consonant_ratios(self) -> list[tuple[float, float, float]]:
        """Per consonant: (correct, deleted, substituted) / reference count."""
        out = []
        for i in range(len(self.consonants)):
            total = self.reference_occurrences(i)
            if total:
                out.append((self.correct[i] / total, self.deleted[i] / total,
                            self.substituted[i] / total))
            else:
                out.append((0.0, 0.0, 0.0))
        return out


def confusion(alignments: Iterable[Alignment]) -> ConfusionMatrix:
    """Tally consonant outcomes from alignments (insertions excluded)."""
    matrix = ConfusionMatrix()
    index = {tok: i for i, tok in enumerate(matrix.consonants)}
    for alignment in alignments:
        for op in alignment.ops:
            if op.kind == INSERTION:
                continue
            row = index.get(op.ref_token)
            if row is None:
                continue
            if op.kind == CORRECT:
                matrix.correct[row] += 1
            elif op.kind == DELETION:
                matrix.deleted[row] += 1
            else:
                matrix.substituted[row] += 1
                col = index.get(op.hyp_token)
                if col is not None:
                    matrix.substitutions[row][col] += 1
    return matrix


@dataclass
class EvaluationReport:
    """Corpus-level scores with per-utterance alignments retained."""

    per: float
    c_per: float
    consonant_f1: float
    alignments: tuple[Alignment, ...]
    confusion: ConfusionMatrix


def evaluate_pairs(pairs: Sequence[tuple[JamoSeq, JamoSeq]]) -> EvaluationReport:
    """Score reference/hypothesis pairs into a single report."""
    pairs = [(tuple(ref), tuple(hyp)) for ref, hyp in pairs]
    alignments = tuple(align(ref, hyp) for ref, hyp in pairs)
    return EvaluationReport(
        per=per(alignments),
        c_per=consonant_per(pairs),
        consonant_f1=consonant_f1(alignments),
        alignments=alignments,
        confusion=confusion(alignments),
    )
