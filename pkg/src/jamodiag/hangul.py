"""Hangul syllable <-> compatibility-jamo codec, vocabulary, and phoneme features.

Jamo tokens are single-character strings from the compatibility-jamo block
(U+3131..U+3163).  A jamo sequence is a tuple of such strings, e.g.
decompose_text("짜움") == ("ㅉ", "ㅏ", "ㅇ", "ㅜ", "ㅁ").
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

from .errors import CompositionError, DecompositionError, VocabularyError

JamoSeq = tuple[str, ...]

SYLLABLE_BASE = 0xAC00
SYLLABLE_LAST = 0xD7A3

CONSONANTS = tuple("ㄱㄲㄴㄷㄸㄹㅁㅂㅃㅅㅆㅇㅈㅉㅊㅋㅌㅍㅎ")
VOWELS = tuple("ㅏㅐㅑㅒㅓㅔㅕㅖㅗㅘㅙㅚㅛㅜㅝㅞㅟㅠㅡㅢㅣ")
JAMO = CONSONANTS + VOWELS

SPACE, UNK, PAD, BOS, EOS = "<space>", "<unk>", "<pad>", "<s>", "</s>"
SPECIALS = (SPACE, UNK, PAD, BOS, EOS)

# Medial (vowel) index order matches VOWELS.  Coda index order is the Unicode
# jongseong order; clusters expand to two consonant tokens.
_CODAS: tuple[JamoSeq, ...] = (
    (),
    ("ㄱ",), ("ㄲ",), ("ㄱ", "ㅅ"), ("ㄴ",), ("ㄴ", "ㅈ"), ("ㄴ", "ㅎ"), ("ㄷ",),
    ("ㄹ",), ("ㄹ", "ㄱ"), ("ㄹ", "ㅁ"), ("ㄹ", "ㅂ"), ("ㄹ", "ㅅ"), ("ㄹ", "ㅌ"),
    ("ㄹ", "ㅍ"), ("ㄹ", "ㅎ"), ("ㅁ",), ("ㅂ",), ("ㅂ", "ㅅ"), ("ㅅ",), ("ㅆ",),
    ("ㅇ",), ("ㅈ",), ("ㅊ",), ("ㅋ",), ("ㅌ",), ("ㅍ",), ("ㅎ",),
)
_CODA_INDEX = {coda: i for i, coda in enumerate(_CODAS) if coda}

# Standalone compatibility-jamo cluster letters (ㄳ, ㄵ, ...) seen in raw text
# pass through decompose_text as their two-consonant expansion.
_CLUSTER_LETTERS = {
    "ㄳ": ("ㄱ", "ㅅ"), "ㄵ": ("ㄴ", "ㅈ"), "ㄶ": ("ㄴ", "ㅎ"), "ㄺ": ("ㄹ", "ㄱ"),
    "ㄻ": ("ㄹ", "ㅁ"), "ㄼ": ("ㄹ", "ㅂ"), "ㄽ": ("ㄹ", "ㅅ"), "ㄾ": ("ㄹ", "ㅌ"),
    "ㄿ": ("ㄹ", "ㅍ"), "ㅀ": ("ㄹ", "ㅎ"), "ㅄ": ("ㅂ", "ㅅ"),
}

_CONSONANT_SET = frozenset(CONSONANTS)
_VOWEL_SET = frozenset(VOWELS)
_JAMO_SET = frozenset(JAMO)


def is_consonant(token: str) -> bool:
    return token in _CONSONANT_SET


def is_vowel(token: str) -> bool:
    return token in _VOWEL_SET


def is_jamo(token: str) -> bool:
    return token in _JAMO_SET


def decompose_syllable(syllable: str) -> JamoSeq:
    """Decompose one precomposed syllable into (onset, vowel[, coda...]).

    Coda clusters emit as two consonant tokens; the null onset is the
    explicit ㅇ token.
    """
    code = ord(syllable)
    if not SYLLABLE_BASE <= code <= SYLLABLE_LAST:
        raise DecompositionError(
            f"U+{code:04X} {syllable!r} is not a precomposed Hangul syllable"
        )
    index = code - SYLLABLE_BASE
    coda = index % 28
    onset, vowel = divmod(index // 28, 21)
    return (CONSONANTS[onset], VOWELS[vowel]) + _CODAS[coda]


def decompose_text(text: str) -> JamoSeq:
    """Decompose a string to jamo, stripping whitespace and punctuation.

    Characters already in the 40-jamo set pass through; standalone cluster
    letters expand.  Anything else raises DecompositionError.
    """
    out: list[str] = []
    for ch in text:
        if SYLLABLE_BASE <= ord(ch) <= SYLLABLE_LAST:
            out.extend(decompose_syllable(ch))
        elif ch in _JAMO_SET:
            out.append(ch)
        elif ch in _CLUSTER_LETTERS:
            out.extend(_CLUSTER_LETTERS[ch])
        elif ch.isspace() or unicodedata.category(ch).startswith("P"):
            continue
        else:
            raise DecompositionError(
                f"cannot decompose U+{ord(ch):04X} {ch!r}: "
                "not a Hangul syllable, jamo, whitespace, or punctuation"
            )
    return tuple(out)


def compose_jamo(seq: JamoSeq) -> str:
    """Recompose jamo into precomposed syllables.

    Greedy left-to-right parse with one-token lookahead: a consonant
    immediately followed by a vowel starts a new syllable; otherwise it is
    a coda of the current one.  Raises CompositionError (with the offending
    offset) for sequences that do not parse.
    """
    out: list[str] = []
    i, n = 0, len(seq)
    while i < n:
        if not is_consonant(seq[i]):
            raise CompositionError(f"expected onset consonant, got {seq[i]!r}", i)
        onset = CONSONANTS.index(seq[i])
        i += 1
        if i >= n or not is_vowel(seq[i]):
            got = repr(seq[i]) if i < n else "end of sequence"
            raise CompositionError(f"expected vowel after onset, got {got}", i)
        vowel = VOWELS.index(seq[i])
        i += 1
        coda: list[str] = []
        while (
            i < n
            and is_consonant(seq[i])
            and not (i + 1 < n and is_vowel(seq[i + 1]))
            and len(coda) < 2
        ):
            coda.append(seq[i])
            i += 1
        if coda and tuple(coda) not in _CODA_INDEX:
            raise CompositionError(f"invalid coda {''.join(coda)!r}", i - len(coda))
        coda_index = _CODA_INDEX[tuple(coda)] if coda else 0
        out.append(chr(SYLLABLE_BASE + (onset * 21 + vowel) * 28 + coda_index))
    return "".join(out)


@dataclass(frozen=True)
class PhonemeFeatures:
    """Articulatory features of one jamo; vowels carry only roundedness."""

    kind: str  # "consonant" | "vowel"
    place: str = "none"  # bilabial | alveolar | alveolo-palatal | velar | glottal
    manner: str = "none"  # plosive | nasal | affricate | fricative | liquid
    phonation: str = "none"  # lax | tense | aspirated
    rounded: bool = False


def _c(place: str, manner: str, phonation: str) -> PhonemeFeatures:
    return PhonemeFeatures("consonant", place, manner, phonation)


# ㅇ is classified as the velar nasal (its coda value); as an onset it is the
# null consonant but still counts as a consonant token for metrics.
_FEATURES: dict[str, PhonemeFeatures] = {
    "ㄱ": _c("velar", "plosive", "lax"),
    "ㄲ": _c("velar", "plosive", "tense"),
    "ㄴ": _c("alveolar", "nasal", "lax"),
    "ㄷ": _c("alveolar", "plosive", "lax"),
    "ㄸ": _c("alveolar", "plosive", "tense"),
    "ㄹ": _c("alveolar", "liquid", "lax"),
    "ㅁ": _c("bilabial", "nasal", "lax"),
    "ㅂ": _c("bilabial", "plosive", "lax"),
    "ㅃ": _c("bilabial", "plosive", "tense"),
    "ㅅ": _c("alveolar", "fricative", "lax"),
    "ㅆ": _c("alveolar", "fricative", "tense"),
    "ㅇ": _c("velar", "nasal", "lax"),
    "ㅈ": _c("alveolo-palatal", "affricate", "lax"),
    "ㅉ": _c("alveolo-palatal", "affricate", "tense"),
    "ㅊ": _c("alveolo-palatal", "affricate", "aspirated"),
    "ㅋ": _c("velar", "plosive", "aspirated"),
    "ㅌ": _c("alveolar", "plosive", "aspirated"),
    "ㅍ": _c("bilabial", "plosive", "aspirated"),
    "ㅎ": _c("glottal", "fricative", "aspirated"),
}
_ROUNDED_VOWELS = frozenset("ㅗㅛㅜㅠㅚㅟㅘㅙㅝㅞ")
for _v in VOWELS:
    _FEATURES[_v] = PhonemeFeatures("vowel", rounded=_v in _ROUNDED_VOWELS)


def features_of(token: str) -> PhonemeFeatures:
    """Feature record for one of the 40 jamo; specials raise."""
    try:
        return _FEATURES[token]
    except KeyError:
        raise VocabularyError(f"no phoneme features for {token!r}") from None


class Vocabulary:
    """The 45-token model output space: 40 jamo plus 5 specials.

    Ordering is fixed: 19 consonants, 21 vowels, then <space>, <unk>,
    <pad>, <s>, </s>.  The pad token doubles as the CTC blank.
    """

    def __init__(self) -> None:
        self.tokens: tuple[str, ...] = JAMO + SPECIALS
        self.index: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != 45:
            raise VocabularyError("vocabulary must contain 45 distinct tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise VocabularyError(f"token {token!r} not in vocabulary") from None

    def token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise VocabularyError(f"token id {token_id} out of range 0..44")
        return self.tokens[token_id]

    @property
    def blank_id(self) -> int:
        return self.index[PAD]

    @property
    def jamo_ids(self) -> range:
        return range(len(JAMO))

    def to_text(self) -> str:
        """Line-oriented serialization: one token per line, line number = id."""
        return "\n".join(self.tokens) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Vocabulary":
        vocab = cls()
        lines = text.splitlines()
        if tuple(lines) != vocab.tokens:
            raise VocabularyError("vocabulary file does not match the fixed ordering")
        return vocab


def build_vocabulary() -> Vocabulary:
    """The deterministic 45-token vocabulary."""
    return Vocabulary()
