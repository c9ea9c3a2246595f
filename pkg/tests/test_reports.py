"""Tests for manifest I/O, evaluation orchestration, and report emission."""

import json
import xml.etree.ElementTree as ET

import pytest

from jamodiag.decoder import DecodeConfig
from jamodiag.errors import ManifestError, PipelineError
from jamodiag.hangul import CONSONANTS, decompose_text
from jamodiag.lm import train_model, write_arpa
from jamodiag.metrics import align, per
from jamodiag.reports import (
    CorpusManifest,
    RunConfig,
    UtteranceRecord,
    emit_report,
    load_manifest,
    result_from_dict,
    run_evaluation,
    write_manifest,
)
from jamodiag.rules import default_rules
from jamodiag.simulator import NoiseConfig, generate_corpus


def hypothesis_manifest(tmp_path, pairs):
    records = [
        UtteranceRecord(id=f"u{i}", target_text=ref, hypothesis_text=hyp)
        for i, (ref, hyp) in enumerate(pairs)
    ]
    return load_manifest(write_manifest(records, tmp_path / "m.jsonl"))


class TestUtteranceRecord:
    def test_requires_exactly_one_source(self):
        with pytest.raises(ManifestError):
            UtteranceRecord(id="x", target_text="나무")
        with pytest.raises(ManifestError):
            UtteranceRecord(id="x", target_text="나무",
                            emission_path="a.jem", hypothesis_text="나무")

    def test_json_round_trip_fields(self):
        record = UtteranceRecord(id="x", target_text="호라이",
                                 hypothesis_text="호랑이", gold_word="호랑이",
                                 rules=("del-medial-coda",))
        payload = json.loads(record.to_json())
        assert payload == {
            "id": "x", "target_text": "호라이", "hypothesis_text": "호랑이",
            "gold_word": "호랑이", "rules": ["del-medial-coda"],
        }


class TestLoadManifest:
    def test_round_trip(self, tmp_path):
        records = [
            UtteranceRecord(id="a", target_text="나무", hypothesis_text="나무"),
            UtteranceRecord(id="b", target_text="호라이",
                            hypothesis_text="호랑이", gold_word="호랑이"),
        ]
        manifest = load_manifest(write_manifest(records, tmp_path / "m.jsonl"))
        assert manifest.records == tuple(records)
        assert manifest.root == tmp_path

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "m.jsonl"
        record = UtteranceRecord(id="a", target_text="나무",
                                 hypothesis_text="나무")
        path.write_text("\n" + record.to_json() + "\n\n", encoding="utf-8")
        assert len(load_manifest(path).records) == 1

    def test_duplicate_id_names_the_id(self, tmp_path):
        path = tmp_path / "m.jsonl"
        record = UtteranceRecord(id="dup", target_text="나무",
                                 hypothesis_text="나무")
        path.write_text(record.to_json() + "\n" + record.to_json() + "\n",
                        encoding="utf-8")
        with pytest.raises(ManifestError, match="line 2.*dup"):
            load_manifest(path)

    def test_missing_emission_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        record = UtteranceRecord(id="ghost", target_text="나무",
                                 emission_path="missing.jem")
        path.write_text(record.to_json() + "\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="ghost"):
            load_manifest(path)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"id": "a"\n', encoding="utf-8")
        with pytest.raises(ManifestError, match="line 1"):
            load_manifest(path)

    def test_non_object_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("[1, 2]\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="not an object"):
            load_manifest(path)

    def test_unknown_field(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            '{"id": "a", "target_text": "나무", "hypothesis_text": "나무", '
            '"wav_path": "x.wav"}\n', encoding="utf-8")
        with pytest.raises(ManifestError, match="wav_path"):
            load_manifest(path)

    def test_undecomposable_target_names_record(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            '{"id": "bad", "target_text": "abc", "hypothesis_text": "나무"}\n',
            encoding="utf-8")
        with pytest.raises(ManifestError, match="bad.*target_text"):
            load_manifest(path)

    def test_missing_required_field(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"id": "a"}\n', encoding="utf-8")
        with pytest.raises(ManifestError, match="target_text"):
            load_manifest(path)

    def test_bad_rules_type(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            '{"id": "a", "target_text": "나무", "hypothesis_text": "나무", '
            '"rules": "del"}\n', encoding="utf-8")
        with pytest.raises(ManifestError, match="rules"):
            load_manifest(path)


class TestRunConfig:
    def test_rejects_unknown_format(self, tmp_path):
        with pytest.raises(ValueError, match="svgz"):
            RunConfig(output_dir=tmp_path, formats=("svgz",))

    def test_accepts_all_known_formats(self, tmp_path):
        config = RunConfig(output_dir=tmp_path, formats=("json", "csv", "svg"))
        assert config.formats == ("json", "csv", "svg")


class TestRunEvaluation:
    def test_hypothesis_records_scored_directly(self, tmp_path):
        manifest = hypothesis_manifest(
            tmp_path, [("호랑이", "호라이"), ("나무", "나무")])
        result = run_evaluation(manifest, RunConfig(output_dir=tmp_path / "out"))
        expected = per([
            align(decompose_text("호랑이"), decompose_text("호라이")),
            align(decompose_text("나무"), decompose_text("나무")),
        ])
        assert result.report.per == expected
        assert [u.id for u in result.utterances] == ["u0", "u1"]

    def test_zero_noise_corpus_perfect_scores(self, tmp_path):
        manifest = generate_corpus(
            ["모자", "바퀴", "세마리"], default_rules(), 2,
            NoiseConfig(seed=3), tmp_path / "corpus", error_prob=0.5)
        result = run_evaluation(
            manifest, RunConfig(output_dir=tmp_path / "out"))
        assert result.report.per == 0.0
        assert result.report.c_per == 0.0
        assert result.report.consonant_f1 == 1.0

    def test_mixed_manifest(self, tmp_path):
        corpus = generate_corpus(
            ["그네"], default_rules(), 1, NoiseConfig(seed=1),
            tmp_path / "corpus", error_prob=0.0)
        emission_record = corpus.records[0]
        extra = UtteranceRecord(id="whisper-1", target_text="호라이",
                                hypothesis_text="호라이")
        manifest = CorpusManifest((emission_record, extra), corpus.root)
        result = run_evaluation(manifest, RunConfig(output_dir=tmp_path / "o"))
        assert result.report.per == 0.0
        assert result.utterances[0].hypothesis == decompose_text("그네")
        assert result.utterances[1].hypothesis == decompose_text("호라이")

    def test_deterministic(self, tmp_path):
        manifest = generate_corpus(
            ["양말"], default_rules(), 2,
            NoiseConfig(seed=8, confusion_temperature=0.7, feature_biased=True),
            tmp_path / "corpus", error_prob=0.8)
        config = RunConfig(output_dir=tmp_path / "out")
        assert run_evaluation(manifest, config) == run_evaluation(manifest, config)

    def test_corrupt_emission_aborts_with_id(self, tmp_path):
        corpus = generate_corpus(
            ["못"], default_rules(), 1, NoiseConfig(seed=0),
            tmp_path / "corpus")
        target = corpus.emission_file(corpus.records[0])
        target.write_bytes(target.read_bytes()[:-2])
        with pytest.raises(PipelineError, match=corpus.records[0].id):
            run_evaluation(corpus, RunConfig(output_dir=tmp_path / "o"))

    def test_lm_with_zero_weight_matches_no_lm(self, tmp_path):
        corpus = generate_corpus(
            ["김밥", "라면"], default_rules(), 2,
            NoiseConfig(seed=4, confusion_temperature=0.6, feature_biased=True),
            tmp_path / "corpus", error_prob=0.5)
        with pytest.warns(UserWarning, match="singletons"):
            lm = train_model([decompose_text(w) for w in ("김밥", "라면")], 3)
        lm_path = tmp_path / "model.arpa"
        lm_path.write_text(write_arpa(lm), encoding="utf-8")
        neutral = DecodeConfig(lm_weight=0.0)
        with_lm = run_evaluation(corpus, RunConfig(
            output_dir=tmp_path / "a", decode=neutral, lm_path=lm_path))
        without = run_evaluation(corpus, RunConfig(
            output_dir=tmp_path / "b", decode=neutral))
        assert with_lm == without


class TestEmitReport:
    def make_result(self, tmp_path):
        manifest = hypothesis_manifest(
            tmp_path, [("호랑이", "호라이"), ("단추", "단두"), ("나무", "나무")])
        return run_evaluation(manifest, RunConfig(output_dir=tmp_path / "out"))

    def test_json_round_trip(self, tmp_path):
        result = self.make_result(tmp_path)
        config = RunConfig(output_dir=tmp_path / "out", formats=("json",))
        paths = emit_report(result, config)
        assert [p.name for p in paths] == ["report.json"]
        payload = json.loads(paths[0].read_text(encoding="utf-8"))
        assert result_from_dict(payload) == result

    def test_csv_layout(self, tmp_path):
        result = self.make_result(tmp_path)
        config = RunConfig(output_dir=tmp_path / "out", formats=("csv",))
        paths = {p.name: p for p in emit_report(result, config)}
        grid = paths["confusion.csv"].read_text(encoding="utf-8").splitlines()
        assert grid[0].split(",")[1:] == list(CONSONANTS)
        assert [row.split(",")[0] for row in grid[1:]] == list(CONSONANTS)
        ratios = paths["consonant_ratios.csv"].read_text(
            encoding="utf-8").splitlines()
        assert ratios[0] == "consonant,correct,deletion,substitution"
        assert len(ratios) == 1 + len(CONSONANTS)
        for row in ratios[1:]:
            name, *values = row.split(",")
            total = sum(float(v) for v in values)
            assert total == pytest.approx(1.0, abs=1e-9) or total == 0.0

    def test_perfect_corpus_grid_all_zero(self, tmp_path):
        manifest = hypothesis_manifest(tmp_path, [("나무", "나무")])
        result = run_evaluation(manifest, RunConfig(output_dir=tmp_path / "o"))
        config = RunConfig(output_dir=tmp_path / "out", formats=("csv",))
        grid = emit_report(result, config)[0].read_text(encoding="utf-8")
        cells = [
            cell
            for row in grid.splitlines()[1:]
            for cell in row.split(",")[1:]
        ]
        assert set(cells) == {"0"}

    def test_svg_outputs_are_xml(self, tmp_path):
        result = self.make_result(tmp_path)
        config = RunConfig(output_dir=tmp_path / "out", formats=("svg",))
        paths = emit_report(result, config)
        assert sorted(p.name for p in paths) == [
            "confusion.svg", "consonant_ratios.svg"]
        for path in paths:
            root = ET.fromstring(path.read_text(encoding="utf-8"))
            assert root.tag.endswith("svg")
            text = path.read_text(encoding="utf-8")
            assert all(consonant in text for consonant in CONSONANTS)

    def test_byte_identical_reemission(self, tmp_path):
        result = self.make_result(tmp_path)
        blobs = []
        for name in ("one", "two"):
            config = RunConfig(output_dir=tmp_path / name,
                               formats=("json", "csv", "svg"))
            blobs.append({
                p.name: p.read_bytes() for p in emit_report(result, config)})
        assert blobs[0] == blobs[1]
