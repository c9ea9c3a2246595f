"""Corpus manifests, evaluation orchestration, and report emission.

A corpus manifest is UTF-8 line-delimited JSON, one utterance record per
line.  Each record carries an ``id``, a ``target_text`` (the utterance as
pronounced), and exactly one of ``emission_path`` (a JEM1 file, decoded
here) or ``hypothesis_text`` (pre-decoded output from any recognizer,
scored as-is).  ``gold_word`` and ``rules`` are optional provenance labels
written by the corpus simulator.

``run_evaluation`` decodes and scores a manifest; ``emit_report`` writes
``report.json``, ``confusion.csv``, ``consonant_ratios.csv``, and optional
static SVG figures into the output directory.  Identical inputs and
configuration produce byte-identical output trees.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .decoder import DecodeConfig, prefix_beam_decode, read_emissions
from .errors import JamodiagError, ManifestError, PipelineError
from .hangul import JamoSeq, Vocabulary, build_vocabulary, decompose_text
from .lm import NGramModel, parse_arpa
from .metrics import (
    Alignment,
    AlignmentOp,
    ConfusionMatrix,
    EvaluationReport,
    evaluate_pairs,
)

REPORT_FORMATS = ("json", "csv", "svg")

_RECORD_KEYS = {
    "id", "target_text", "emission_path", "hypothesis_text", "gold_word",
    "rules",
}


@dataclass(frozen=True)
class UtteranceRecord:
    """One manifest line; emission paths are relative to the manifest."""

    id: str
    target_text: str
    emission_path: str | None = None
    hypothesis_text: str | None = None
    gold_word: str | None = None
    rules: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if (self.emission_path is None) == (self.hypothesis_text is None):
            raise ManifestError(
                f"record {self.id!r} must have exactly one of emission_path "
                "and hypothesis_text"
            )

    def to_json(self) -> str:
        payload: dict[str, object] = {
            "id": self.id,
            "target_text": self.target_text,
        }
        if self.emission_path is not None:
            payload["emission_path"] = self.emission_path
        if self.hypothesis_text is not None:
            payload["hypothesis_text"] = self.hypothesis_text
        if self.gold_word is not None:
            payload["gold_word"] = self.gold_word
        if self.rules:
            payload["rules"] = list(self.rules)
        return json.dumps(payload, ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class CorpusManifest:
    """Validated utterance records plus the directory they resolve against."""

    records: tuple[UtteranceRecord, ...]
    root: Path

    def emission_file(self, record: UtteranceRecord) -> Path:
        if record.emission_path is None:
            raise ValueError(f"record {record.id!r} has no emission file")
        return self.root / record.emission_path


def load_manifest(path: str | Path) -> CorpusManifest:
    """Parse and validate a line-delimited JSON corpus manifest."""
    path = Path(path)
    root = path.parent
    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {lineno}: invalid JSON: {exc}") from None
            if not isinstance(raw, dict):
                raise ManifestError(f"line {lineno}: record is not an object")
            unknown = set(raw) - _RECORD_KEYS
            if unknown:
                raise ManifestError(
                    f"line {lineno}: unknown fields {sorted(unknown)}")
            if "id" not in raw or "target_text" not in raw:
                raise ManifestError(
                    f"line {lineno}: record needs 'id' and 'target_text'")
            record_id = raw["id"]
            if not isinstance(record_id, str) or not record_id:
                raise ManifestError(f"line {lineno}: id must be a non-empty string")
            if record_id in seen:
                raise ManifestError(f"line {lineno}: duplicate id {record_id!r}")
            seen.add(record_id)
            rules = raw.get("rules", [])
            if not (isinstance(rules, list)
                    and all(isinstance(r, str) for r in rules)):
                raise ManifestError(
                    f"line {lineno}: record {record_id!r} rules must be strings")
            try:
                record = UtteranceRecord(
                    id=record_id,
                    target_text=raw["target_text"],
                    emission_path=raw.get("emission_path"),
                    hypothesis_text=raw.get("hypothesis_text"),
                    gold_word=raw.get("gold_word"),
                    rules=tuple(rules),
                )
            except ManifestError as exc:
                raise ManifestError(f"line {lineno}: {exc}") from None
            for label, text in (("target_text", record.target_text),
                                ("hypothesis_text", record.hypothesis_text)):
                if text is None:
                    continue
                try:
                    decompose_text(text)
                except JamodiagError as exc:
                    raise ManifestError(
                        f"line {lineno}: record {record_id!r} {label}: {exc}"
                    ) from None
            if record.emission_path is not None:
                target = root / record.emission_path
                if not target.is_file():
                    raise ManifestError(
                        f"line {lineno}: record {record_id!r} emission file "
                        f"not found: {target}"
                    )
            records.append(record)
    return CorpusManifest(tuple(records), root)


def write_manifest(records: list[UtteranceRecord], path: str | Path) -> Path:
    """Write records as line-delimited JSON; returns the manifest path."""
    path = Path(path)
    body = "".join(record.to_json() + "\n" for record in records)
    path.write_text(body, encoding="utf-8")
    return path


@dataclass
class RunConfig:
    """Everything an evaluation run needs besides the manifest."""

    output_dir: Path
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    lm_path: Path | None = None
    ruleset_path: Path | None = None
    formats: tuple[str, ...] = ("json", "csv")

    def __post_init__(self) -> None:
        self.output_dir = Path(self.output_dir)
        bad = [f for f in self.formats if f not in REPORT_FORMATS]
        if bad:
            raise ValueError(
                f"unknown report formats {bad}; choose from {REPORT_FORMATS}")


@dataclass(frozen=True)
class UtteranceScore:
    """Scored utterance: decoded (or supplied) hypothesis vs. its target."""

    id: str
    target: JamoSeq
    hypothesis: JamoSeq


@dataclass(frozen=True)
class RunResult:
    """Corpus report plus per-utterance sequences, in manifest order."""

    report: EvaluationReport
    utterances: tuple[UtteranceScore, ...]

    def to_dict(self) -> dict:
        matrix = self.report.confusion
        return {
            "per": self.report.per,
            "c_per": self.report.c_per,
            "consonant_f1": self.report.consonant_f1,
            "utterances": [
                {
                    "id": score.id,
                    "target": " ".join(score.target),
                    "hypothesis": " ".join(score.hypothesis),
                    "ops": [
                        [op.kind, op.ref_token, op.hyp_token]
                        for op in alignment.ops
                    ],
                }
                for score, alignment in zip(
                    self.utterances, self.report.alignments)
            ],
            "confusion": {
                "consonants": list(matrix.consonants),
                "substitutions": [list(row) for row in matrix.substitutions],
                "correct": list(matrix.correct),
                "deleted": list(matrix.deleted),
                "substituted": list(matrix.substituted),
            },
        }


def result_from_dict(payload: dict) -> RunResult:
    """Rebuild a RunResult from the report.json payload."""
    utterances = []
    alignments = []
    for entry in payload["utterances"]:
        target = tuple(entry["target"].split())
        hypothesis = tuple(entry["hypothesis"].split())
        utterances.append(UtteranceScore(entry["id"], target, hypothesis))
        alignments.append(Alignment(tuple(
            AlignmentOp(kind, ref, hyp) for kind, ref, hyp in entry["ops"])))
    grid = payload["confusion"]
    matrix = ConfusionMatrix(
        consonants=tuple(grid["consonants"]),
        substitutions=[list(row) for row in grid["substitutions"]],
        correct=list(grid["correct"]),
        deleted=list(grid["deleted"]),
        substituted=list(grid["substituted"]),
    )
    report = EvaluationReport(
        per=payload["per"],
        c_per=payload["c_per"],
        consonant_f1=payload["consonant_f1"],
        alignments=tuple(alignments),
        confusion=matrix,
    )
    return RunResult(report, tuple(utterances))


def run_evaluation(
    manifest: CorpusManifest,
    config: RunConfig,
    vocab: Vocabulary | None = None,
) -> RunResult:
    """Decode every emission record, score against targets, aggregate.

    Records carrying ``hypothesis_text`` skip decoding and are scored
    as-is.  A failure on any utterance aborts the run, naming the id.
    """
    vocab = vocab or build_vocabulary()
    lm: NGramModel | None = None
    if config.lm_path is not None:
        lm = parse_arpa(Path(config.lm_path).read_text(encoding="utf-8"))
    pairs: list[tuple[JamoSeq, JamoSeq]] = []
    scores: list[UtteranceScore] = []
    for record in manifest.records:
        try:
            target = decompose_text(record.target_text)
            if record.hypothesis_text is not None:
                hypothesis = decompose_text(record.hypothesis_text)
            else:
                emissions = read_emissions(manifest.emission_file(record))
                emissions.validate(vocab)
                hypotheses = prefix_beam_decode(
                    emissions, vocab, config.decode, lm=lm)
                hypothesis = hypotheses[0].sequence
        except JamodiagError as exc:
            raise PipelineError(f"utterance {record.id!r}: {exc}") from exc
        pairs.append((target, hypothesis))
        scores.append(UtteranceScore(record.id, target, hypothesis))
    report = evaluate_pairs(pairs)
    return RunResult(report, tuple(scores))


def _csv_text(rows: list[list[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    return buffer.getvalue()


def confusion_csv(matrix: ConfusionMatrix) -> str:
    """Substitution-count grid; header row/column are the 19 consonants."""
    rows: list[list[object]] = [["", *matrix.consonants]]
    for consonant, row in zip(matrix.consonants, matrix.substitutions):
        rows.append([consonant, *row])
    return _csv_text(rows)


def consonant_ratios_csv(matrix: ConfusionMatrix) -> str:
    """Per-consonant correct/deletion/substitution ratios (insertions excluded)."""
    rows: list[list[object]] = [["consonant", "correct", "deletion", "substitution"]]
    for consonant, (correct, deleted, substituted) in zip(
            matrix.consonants, matrix.consonant_ratios()):
        rows.append([
            consonant,
            f"{correct:.10f}",
            f"{deleted:.10f}",
            f"{substituted:.10f}",
        ])
    return _csv_text(rows)


_BAR_COLORS = {"correct": "#4c9f70", "deletion": "#e0a84c", "substitution": "#c34a4a"}


def consonant_ratios_svg(matrix: ConfusionMatrix) -> str:
    """Static stacked-bar chart of per-consonant outcome ratios."""
    bar_width, gap, height, left, top = 28, 8, 220, 30, 20
    n = len(matrix.consonants)
    width = left + n * (bar_width + gap) + gap
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height + 60}" font-family="sans-serif" font-size="12">',
        '<text x="4" y="14">consonant outcome ratios '
        "(correct / deletion / substitution)</text>",
    ]
    ratios = matrix.consonant_ratios()
    for i, consonant in enumerate(matrix.consonants):
        x = left + i * (bar_width + gap)
        y = top
        for key, value in zip(("correct", "deletion", "substitution"), ratios[i]):
            h = value * height
            if h > 0:
                parts.append(
                    f'<rect x="{x}" y="{y:.2f}" width="{bar_width}" '
                    f'height="{h:.2f}" fill="{_BAR_COLORS[key]}">'
                    f"<title>{consonant} {key}: {value:.4f}</title></rect>"
                )
            y += h
        parts.append(
            f'<text x="{x + bar_width / 2:.2f}" y="{top + height + 18}" '
            f'text-anchor="middle">{consonant}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def confusion_svg(matrix: ConfusionMatrix) -> str:
    """Static heatmap of row-normalized substitution ratios."""
    cell, left, top = 24, 40, 40
    n = len(matrix.consonants)
    size_w, size_h = left + n * cell + 10, top + n * cell + 10
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size_w}" '
        f'height="{size_h}" font-family="sans-serif" font-size="11">',
        '<text x="4" y="14">substitution ratios (reference row, '
        "hypothesis column)</text>",
    ]
    ratios = matrix.substitution_ratios()
    for j, consonant in enumerate(matrix.consonants):
        parts.append(
            f'<text x="{left + j * cell + cell / 2:.2f}" y="{top - 6}" '
            f'text-anchor="middle">{consonant}</text>'
        )
    for i, consonant in enumerate(matrix.consonants):
        y = top + i * cell
        parts.append(
            f'<text x="{left - 8}" y="{y + cell / 2 + 4:.2f}" '
            f'text-anchor="end">{consonant}</text>'
        )
        for j in range(n):
            value = ratios[i][j]
            parts.append(
                f'<rect x="{left + j * cell}" y="{y}" width="{cell}" '
                f'height="{cell}" fill="#b03030" fill-opacity="{value:.4f}" '
                f'stroke="#ddd" stroke-width="0.5">'
                f"<title>{consonant}→{matrix.consonants[j]}: "
                f"{value:.4f}</title></rect>"
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(result: RunResult, config: RunConfig) -> list[Path]:
    """Write the configured report files; returns the paths written."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name: str, text: str) -> None:
        target = out / name
        target.write_text(text, encoding="utf-8")
        written.append(target)

    matrix = result.report.confusion
    if "json" in config.formats:
        emit("report.json", json.dumps(
            result.to_dict(), ensure_ascii=False, sort_keys=True, indent=2
        ) + "\n")
    if "csv" in config.formats:
        emit("confusion.csv", confusion_csv(matrix))
        emit("consonant_ratios.csv", consonant_ratios_csv(matrix))
    if "svg" in config.formats:
        emit("consonant_ratios.svg", consonant_ratios_svg(matrix))
        emit("confusion.svg", confusion_svg(matrix))
    return written
