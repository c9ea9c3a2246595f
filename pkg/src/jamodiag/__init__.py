"""Jamo-level pronunciation-error diagnostics for Korean single-word speech.

The package covers the non-neural half of a child speech-sound-disorder
assessment pipeline: Hangul decomposition/composition over a 45-token jamo
vocabulary, a rule engine that generates plausible mispronunciation
lexicons, an interpolated Kneser-Ney n-gram model with ARPA I/O, CTC
greedy and prefix-beam decoding (with optional LM shallow fusion) over
externally produced emission matrices, phoneme-error metrics, a synthetic
corpus simulator, and manifest-driven evaluation reports.
"""

from .decoder import (
    DecodeConfig,
    EmissionMatrix,
    Hypothesis,
    collapse_path,
    greedy_decode,
    prefix_beam_decode,
    read_emissions,
    write_emissions,
)
from .errors import (
    ArpaError,
    CompositionError,
    DecompositionError,
    EmissionFormatError,
    JamodiagError,
    ManifestError,
    MetricError,
    PipelineError,
    RuleError,
    VocabularyError,
)
from .hangul import (
    CONSONANTS,
    JAMO,
    VOWELS,
    JamoSeq,
    PhonemeFeatures,
    Vocabulary,
    build_vocabulary,
    compose_jamo,
    decompose_syllable,
    decompose_text,
    features_of,
)
from .lm import (
    CountTable,
    NGramModel,
    SmoothingConfig,
    conditional_logprob,
    count_ngrams,
    estimate_model,
    parse_arpa,
    score_sequence,
    train_model,
    write_arpa,
)
from .metrics import (
    Alignment,
    AlignmentOp,
    ConfusionMatrix,
    EvaluationReport,
    align,
    confusion,
    consonant_f1,
    consonant_per,
    evaluate_pairs,
    per,
)
from .reports import (
    CorpusManifest,
    RunConfig,
    RunResult,
    UtteranceRecord,
    emit_report,
    load_manifest,
    run_evaluation,
    write_manifest,
)
from .rules import (
    ErrorLexicon,
    ErrorRule,
    RuleApplication,
    apply_rule,
    build_error_lexicon,
    default_rules,
    default_words,
    generate_variants,
    parse_rules,
)
from .simulator import (
    NoiseConfig,
    SyntheticUtterance,
    generate_corpus,
    simulate_mispronunciation,
    synthesize_emissions,
)

__version__ = "0.1.0"

__all__ = [
    "ArpaError",
    "Alignment",
    "AlignmentOp",
    "CONSONANTS",
    "CompositionError",
    "ConfusionMatrix",
    "CorpusManifest",
    "CountTable",
    "DecodeConfig",
    "DecompositionError",
    "EmissionFormatError",
    "EmissionMatrix",
    "ErrorLexicon",
    "ErrorRule",
    "EvaluationReport",
    "Hypothesis",
    "JAMO",
    "JamoSeq",
    "JamodiagError",
    "ManifestError",
    "MetricError",
    "NGramModel",
    "NoiseConfig",
    "PhonemeFeatures",
    "PipelineError",
    "RuleApplication",
    "RuleError",
    "RunConfig",
    "RunResult",
    "SmoothingConfig",
    "SyntheticUtterance",
    "UtteranceRecord",
    "VOWELS",
    "Vocabulary",
    "VocabularyError",
    "align",
    "apply_rule",
    "build_error_lexicon",
    "build_vocabulary",
    "collapse_path",
    "compose_jamo",
    "conditional_logprob",
    "confusion",
    "consonant_f1",
    "consonant_per",
    "count_ngrams",
    "decompose_syllable",
    "decompose_text",
    "default_rules",
    "default_words",
    "emit_report",
    "estimate_model",
    "evaluate_pairs",
    "features_of",
    "generate_corpus",
    "generate_variants",
    "greedy_decode",
    "load_manifest",
    "parse_arpa",
    "parse_rules",
    "per",
    "prefix_beam_decode",
    "read_emissions",
    "run_evaluation",
    "score_sequence",
    "simulate_mispronunciation",
    "synthesize_emissions",
    "train_model",
    "write_arpa",
    "write_emissions",
    "write_manifest",
]
