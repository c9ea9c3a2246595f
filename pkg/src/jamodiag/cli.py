"""Command-line entry point.

Subcommands cover the whole pipeline: ``decompose`` text into jamo,
``rules apply`` one error rule, ``lexicon build`` the variant dictionary,
``lm train``/``lm score`` the n-gram model, ``decode`` emission files,
``score`` reference/hypothesis pairs, ``simulate`` a synthetic corpus, and
``evaluate`` a corpus manifest end to end.

Exit codes: 0 on success, 1 on a domain error (bad data, undecodable
input, undefined metric), 2 on a usage error.  ``--config FILE`` supplies
default option values as a JSON object; explicit flags win.  ``--seed``
overrides the simulation seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .decoder import (
    DecodeConfig,
    greedy_decode,
    prefix_beam_decode,
    read_emissions,
)
from .errors import JamodiagError
from .hangul import build_vocabulary, compose_jamo, decompose_text
from .lm import SmoothingConfig, parse_arpa, score_sequence, train_model, write_arpa
from .metrics import evaluate_pairs
from .reports import RunConfig, emit_report, load_manifest, run_evaluation
from .rules import (
    ErrorLexicon,
    apply_rule,
    build_error_lexicon,
    default_rules,
    default_words,
    parse_rules,
    parse_word_list,
)
from .simulator import NoiseConfig, generate_corpus

_CONFIG_KEYS = {
    "seed", "alpha", "beta", "beam", "prune", "order", "discount", "depth",
    "n_per_word", "error_prob", "temperature", "frames_min", "frames_max",
    "blank_prob", "feature_biased", "formats",
}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise JamodiagError(f"config file {path}: invalid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise JamodiagError(f"config file {path}: expected a JSON object")
    unknown = set(payload) - _CONFIG_KEYS
    if unknown:
        raise JamodiagError(
            f"config file {path}: unknown keys {sorted(unknown)}; "
            f"known keys are {sorted(_CONFIG_KEYS)}")
    return payload


def _pick(flag_value, config: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_rules(path: str | None):
    return parse_rules(_read(path)) if path else default_rules()


def _load_words(path: str | None) -> list[str]:
    if path is None:
        return default_words()
    words = parse_word_list(_read(path))
    if not words:
        raise JamodiagError(f"word list {path} is empty")
    return words


def _decode_config(args, config: dict) -> DecodeConfig:
    return DecodeConfig(
        beam_width=_pick(args.beam, config, "beam", 100),
        lm_weight=_pick(args.alpha, config, "alpha", 0.5),
        length_bonus=_pick(args.beta, config, "beta", 1.5),
        prune_logp=_pick(args.prune, config, "prune", -10.0),
    )


def _print_scores(report) -> None:
    print(f"per\t{report.per:.10f}")
    print(f"c_per\t{report.c_per:.10f}")
    print(f"consonant_f1\t{report.consonant_f1:.10f}")


def _cmd_decompose(args, config: dict) -> int:
    for text in args.text:
        print(" ".join(decompose_text(text)))
    return 0


def _cmd_rules_apply(args, config: dict) -> int:
    rules = _load_rules(args.rules)
    matches = [rule for rule in rules if rule.id == args.rule]
    if not matches:
        raise JamodiagError(f"no rule with id {args.rule!r}")
    word = decompose_text(args.word)
    for application in apply_rule(matches[0], word):
        try:
            rendering = compose_jamo(application.after)
        except JamodiagError:
            rendering = "".join(application.after)
        print(f"{rendering}\t{' '.join(application.after)}")
    return 0


def _cmd_lexicon_build(args, config: dict) -> int:
    words = _load_words(args.words)
    rules = _load_rules(args.rules)
    depth = _pick(args.depth, config, "depth", 2)
    lexicon = build_error_lexicon(words, rules, depth)
    Path(args.out).write_text(lexicon.to_tsv(), encoding="utf-8")
    total = sum(len(e.variants) for e in lexicon.entries.values())
    print(f"{len(lexicon.entries)} words, {total} variants -> {args.out}")
    return 0


def _cmd_lm_train(args, config: dict) -> int:
    lexicon = ErrorLexicon.from_tsv(_read(args.lexicon))
    order = _pick(args.order, config, "order", 5)
    discount = _pick(args.discount, config, "discount", 0.75)
    model = train_model(
        lexicon.sequences(), order, SmoothingConfig(discount=discount))
    Path(args.out).write_text(write_arpa(model), encoding="utf-8")
    print(f"order-{order} model over {len(lexicon.sequences())} sequences "
          f"-> {args.out}")
    return 0


def _cmd_lm_score(args, config: dict) -> int:
    model = parse_arpa(_read(args.model))
    print(f"{score_sequence(model, decompose_text(args.text)):.10f}")
    return 0


def _cmd_decode(args, config: dict) -> int:
    vocab = build_vocabulary()
    emissions = read_emissions(args.emissions)
    emissions.validate(vocab)
    if args.greedy:
        hypothesis = greedy_decode(emissions, vocab)
    else:
        lm = parse_arpa(_read(args.lm)) if args.lm else None
        hypothesis = prefix_beam_decode(
            emissions, vocab, _decode_config(args, config), lm=lm)[0]
    print(" ".join(hypothesis.sequence))
    return 0


def _cmd_score(args, config: dict) -> int:
    if args.pairs:
        pairs = []
        for lineno, line in enumerate(_read(args.pairs).splitlines(), start=1):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise JamodiagError(
                    f"{args.pairs}: line {lineno}: expected 'ref<TAB>hyp'")
            pairs.append((decompose_text(fields[0]), decompose_text(fields[1])))
        if not pairs:
            raise JamodiagError(f"{args.pairs}: no pairs found")
    else:
        pairs = [(decompose_text(args.ref), decompose_text(args.hyp))]
    _print_scores(evaluate_pairs(pairs))
    return 0


def _cmd_simulate(args, config: dict) -> int:
    words = _load_words(args.words)
    rules = _load_rules(args.rules)
    noise = NoiseConfig(
        seed=_pick(args.seed, config, "seed", 0),
        frames_min=_pick(args.frames_min, config, "frames_min", 2),
        frames_max=_pick(args.frames_max, config, "frames_max", 4),
        blank_insertion_prob=_pick(args.blank_prob, config, "blank_prob", 0.3),
        confusion_temperature=_pick(
            args.temperature, config, "temperature", 0.0),
        feature_biased=bool(_pick(
            args.feature_biased or None, config, "feature_biased", False)),
    )
    generate_corpus(
        words, rules,
        _pick(args.n_per_word, config, "n_per_word", 5),
        noise, args.out,
        error_prob=_pick(args.error_prob, config, "error_prob", 0.5),
    )
    print(str(Path(args.out) / "manifest.jsonl"))
    return 0


def _cmd_evaluate(args, config: dict) -> int:
    manifest = load_manifest(args.manifest)
    formats = _pick(args.formats, config, "formats", "json,csv")
    if isinstance(formats, str):
        formats = tuple(f for f in formats.split(",") if f)
    try:
        run_config = RunConfig(
            output_dir=Path(args.out),
            decode=_decode_config(args, config),
            lm_path=None if (args.no_lm or not args.lm) else Path(args.lm),
            formats=tuple(formats),
        )
    except ValueError as exc:
        raise JamodiagError(str(exc)) from None
    result = run_evaluation(manifest, run_config)
    emit_report(result, run_config)
    _print_scores(result.report)
    return 0


def _add_decode_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=None,
                        help="LM fusion weight (default 0.5)")
    parser.add_argument("--beta", type=float, default=None,
                        help="length bonus per decoded token (default 1.5)")
    parser.add_argument("--beam", type=int, default=None,
                        help="beam width (default 100)")
    parser.add_argument("--prune", type=float, default=None,
                        help="per-frame candidate log-prob floor (default -10)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jamodiag",
        description="Jamo-level pronunciation-error diagnostics pipeline.")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the simulation seed")
    parser.add_argument("--config", default=None,
                        help="JSON file of default option values")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("decompose", help="print jamo for Hangul text")
    sub.add_argument("text", nargs="+")
    sub.set_defaults(handler=_cmd_decompose)

    rules_cmd = commands.add_parser("rules", help="rule operations")
    rules_sub = rules_cmd.add_subparsers(dest="rules_command", required=True)
    sub = rules_sub.add_parser("apply", help="apply one rule to a word")
    sub.add_argument("word")
    sub.add_argument("--rule", required=True, help="rule id to apply")
    sub.add_argument("--rules", default=None, help="rule file (JSON)")
    sub.set_defaults(handler=_cmd_rules_apply)

    lexicon_cmd = commands.add_parser("lexicon", help="lexicon operations")
    lexicon_sub = lexicon_cmd.add_subparsers(dest="lexicon_command",
                                             required=True)
    sub = lexicon_sub.add_parser("build", help="build the error lexicon TSV")
    sub.add_argument("--words", default=None, help="word list file")
    sub.add_argument("--rules", default=None, help="rule file (JSON)")
    sub.add_argument("--depth", type=int, default=None,
                     help="max rules per variant (default 2)")
    sub.add_argument("--out", required=True, help="output TSV path")
    sub.set_defaults(handler=_cmd_lexicon_build)

    lm_cmd = commands.add_parser("lm", help="language-model operations")
    lm_sub = lm_cmd.add_subparsers(dest="lm_command", required=True)
    sub = lm_sub.add_parser("train", help="train an n-gram model to ARPA")
    sub.add_argument("--lexicon", required=True, help="error lexicon TSV")
    sub.add_argument("--order", type=int, default=None,
                     help="n-gram order (default 5)")
    sub.add_argument("--discount", type=float, default=None,
                     help="Kneser-Ney discount (default 0.75)")
    sub.add_argument("--out", required=True, help="output ARPA path")
    sub.set_defaults(handler=_cmd_lm_train)
    sub = lm_sub.add_parser("score", help="log10 probability of text")
    sub.add_argument("text")
    sub.add_argument("--model", required=True, help="ARPA model path")
    sub.set_defaults(handler=_cmd_lm_score)

    sub = commands.add_parser("decode", help="decode one emission file")
    sub.add_argument("--emissions", required=True, help="JEM1 emission file")
    sub.add_argument("--lm", default=None, help="ARPA model for fusion")
    sub.add_argument("--greedy", action="store_true",
                     help="best-path decoding instead of beam search")
    _add_decode_flags(sub)
    sub.set_defaults(handler=_cmd_decode)

    sub = commands.add_parser("score", help="score hypothesis against reference")
    sub.add_argument("--ref", help="reference text")
    sub.add_argument("--hyp", help="hypothesis text")
    sub.add_argument("--pairs", default=None,
                     help="TSV file of ref<TAB>hyp lines")
    sub.set_defaults(handler=_cmd_score)

    sub = commands.add_parser("simulate", help="generate a synthetic corpus")
    sub.add_argument("--words", default=None, help="word list file")
    sub.add_argument("--rules", default=None, help="rule file (JSON)")
    sub.add_argument("--n-per-word", type=int, default=None, dest="n_per_word")
    sub.add_argument("--error-prob", type=float, default=None,
                     dest="error_prob")
    sub.add_argument("--temperature", type=float, default=None,
                     help="confusion temperature (0 = noiseless)")
    sub.add_argument("--frames-min", type=int, default=None, dest="frames_min")
    sub.add_argument("--frames-max", type=int, default=None, dest="frames_max")
    sub.add_argument("--blank-prob", type=float, default=None,
                     dest="blank_prob")
    sub.add_argument("--feature-biased", action="store_true", default=False,
                     dest="feature_biased")
    sub.add_argument("--out", required=True, help="output corpus directory")
    sub.set_defaults(handler=_cmd_simulate)

    sub = commands.add_parser("evaluate", help="decode and score a manifest")
    sub.add_argument("--manifest", required=True)
    lm_group = sub.add_mutually_exclusive_group()
    lm_group.add_argument("--lm", default=None, help="ARPA model for fusion")
    lm_group.add_argument("--no-lm", action="store_true", dest="no_lm",
                          help="decode without a language model")
    sub.add_argument("--formats", default=None,
                     help="comma-separated subset of json,csv,svg")
    sub.add_argument("--out", required=True, help="report output directory")
    _add_decode_flags(sub)
    sub.set_defaults(handler=_cmd_evaluate)

    return parser


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "score" and not args.pairs and not (args.ref and args.hyp):
        parser.error("score needs either --pairs or both --ref and --hyp")
    try:
        config = _load_config(args.config)
        return args.handler(args, config)
    except (JamodiagError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
