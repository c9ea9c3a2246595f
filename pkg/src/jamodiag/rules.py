"""Rewrite-rule engine generating plausible child mispronunciations.

Rules are data (JSON).  Each rule carries a three-level clinical error
category, a match predicate over (token, syllable position, role), and a
rewrite action.  Applying up to two distinct rules per word yields the
variant side of the pronunciation-error lexicon; the gold decomposition
is kept alongside so downstream language models also accept correct
speech.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib.resources import files

from .errors import RuleError
from .hangul import (
    JamoSeq,
    decompose_text,
    features_of,
    is_consonant,
    is_jamo,
    is_vowel,
)

MAIN_CATEGORIES = ("word-error-pattern", "segmental-change", "distortion")

# (main, middle, sub) rows of the clinical error-pattern catalogue.
TAXONOMY: tuple[tuple[str, str, str], ...] = tuple(
    ("word-error-pattern", middle, sub)
    for middle, subs in [
        ("deletion", [
            "syllable-deletion",
            "word-initial-consonant-deletion",
            "word-medial-consonant-deletion",
            "liquid-deletion",
            "word-medial-coda-deletion",
            "word-final-coda-deletion",
        ]),
        ("insertion", ["syllable-insertion", "vowel-insertion", "consonant-insertion"]),
        ("reduplication", ["syllable-reduplication", "vowel-harmony", "consonant-harmony"]),
        ("transposition-and-migration", ["syllable-transposition", "phoneme-transposition"]),
        ("consonant-cluster-simplification", [
            "typical-consonant-cluster-simplification",
            "atypical-consonant-cluster-simplification",
        ]),
    ]
    for sub in subs
) + tuple(
    ("segmental-change", middle, sub)
    for middle, subs in [
        ("place-of-articulation", ["fronting", "bilabial", "alveolo-palatal", "velar", "glottal"]),
        ("manner-of-articulation", [
            "gliding", "denasalisation", "nasal", "plosive", "affricative",
            "fricative", "stopping-of-liquid", "liquid-simplification",
        ]),
        ("phonation-types", ["tense", "lax", "aspiration", "unaspiration"]),
    ]
    for sub in subs
) + tuple(
    ("distortion", "place-of-articulation", sub)
    for sub in ["lip-rounding", "labiodental", "interdental", "tongue-tip", "palatal"]
)
_TAXONOMY_SET = frozenset(TAXONOMY)

ROLES = ("onset", "nucleus", "coda")
POSITIONS = ("word-initial", "word-medial", "word-final")
ACTION_KINDS = ("delete", "substitute", "insert", "reduplicate", "transpose", "simplify_cluster")
_FEATURE_VALUES = {
    "kind": {"consonant", "vowel"},
    "place": {"none", "bilabial", "alveolar", "alveolo-palatal", "velar", "glottal"},
    "manner": {"none", "plosive", "nasal", "affricate", "fricative", "liquid"},
    "phonation": {"none", "lax", "tense", "aspirated"},
    "rounded": {True, False},
}

# Which consonant of a two-consonant coda survives typical simplification;
# the atypical variant keeps the other one.
CLUSTER_SURVIVOR: dict[tuple[str, str], str] = {
    ("ㄱ", "ㅅ"): "ㄱ", ("ㄴ", "ㅈ"): "ㄴ", ("ㄴ", "ㅎ"): "ㄴ", ("ㄹ", "ㄱ"): "ㄱ",
    ("ㄹ", "ㅁ"): "ㅁ", ("ㄹ", "ㅂ"): "ㄹ", ("ㄹ", "ㅅ"): "ㄹ", ("ㄹ", "ㅌ"): "ㄹ",
    ("ㄹ", "ㅍ"): "ㅍ", ("ㄹ", "ㅎ"): "ㄹ", ("ㅂ", "ㅅ"): "ㅂ",
}


@dataclass(frozen=True)
class TokenRole:
    role: str  # onset | nucleus | coda
    syllable: int


def analyze_roles(seq: JamoSeq) -> list[TokenRole]:
    """Assign (role, syllable index) to every token of a jamo sequence.

    A consonant directly followed by a vowel is an onset and starts a new
    syllable; a vowel is the nucleus of the pending onset's syllable or
    starts a bare-nucleus syllable; any other consonant is a coda of the
    current syllable.  Total over arbitrary jamo sequences.
    """
    roles: list[TokenRole] = []
    syllable = -1
    pending_onset = False
    for i, tok in enumerate(seq):
        if is_vowel(tok):
            if pending_onset:
                pending_onset = False
            else:
                syllable += 1
            roles.append(TokenRole("nucleus", syllable))
        elif is_consonant(tok):
            if i + 1 < len(seq) and is_vowel(seq[i + 1]):
                syllable += 1
                pending_onset = True
                roles.append(TokenRole("onset", syllable))
            else:
                syllable = max(syllable, 0)
                roles.append(TokenRole("coda", syllable))
        else:
            raise RuleError(f"cannot assign a role to non-jamo token {tok!r}")
    return roles


def position_labels(token_role: TokenRole, n_syllables: int) -> frozenset[str]:
    """Word-position labels for one token.

    Onsets are word-initial only in syllable 0; codas are word-final only
    in the last syllable; nuclei can carry both labels in a monosyllable.
    """
    syllable, last = token_role.syllable, n_syllables - 1
    if token_role.role == "onset":
        return frozenset({"word-initial" if syllable == 0 else "word-medial"})
    if token_role.role == "coda":
        return frozenset({"word-final" if syllable == last else "word-medial"})
    labels = set()
    if syllable == 0:
        labels.add("word-initial")
    if syllable == last:
        labels.add("word-final")
    if 0 < syllable < last:
        labels.add("word-medial")
    return frozenset(labels)


@dataclass(frozen=True)
class Match:
    """Conjunction of constraints a site must satisfy; empty matches all."""

    literal: tuple[str, ...] | None = None
    features: tuple[tuple[str, object], ...] | None = None
    position: frozenset[str] | None = None
    role: str | None = None

    def covers(self, seq: JamoSeq, i: int, roles: list[TokenRole], n_syllables: int) -> bool:
        if self.role is not None and roles[i].role != self.role:
            return False
        if self.position is not None and not (
            self.position & position_labels(roles[i], n_syllables)
        ):
            return False
        tok = seq[i]
        if self.literal is not None and tok not in self.literal:
            return False
        if self.features is not None:
            feats = features_of(tok)
            if any(getattr(feats, key) != want for key, want in self.features):
                return False
        return True


@dataclass(frozen=True)
class Action:
    kind: str
    tokens: tuple[str, ...] = ()
    direction: str = "after"  # insert only
    span: str = "token"  # delete/insert: token | syllable
    keep: str = "typical"  # simplify_cluster: typical | atypical


@dataclass(frozen=True)
class ErrorRule:
    id: str
    main_category: str
    middle_category: str
    sub_category: str
    match: Match
    action: Action


@dataclass(frozen=True)
class RuleApplication:
    rule_id: str
    site: int
    before: JamoSeq
    after: JamoSeq


def _as_token_tuple(value: object, where: str) -> tuple[str, ...]:
    if isinstance(value, str):
        tokens = tuple(value)
    elif isinstance(value, list) and all(isinstance(t, str) for t in value):
        tokens = tuple(value)
    else:
        raise RuleError(f"{where} must be a string or list of tokens")
    if not tokens:
        raise RuleError(f"{where} must not be empty")
    for tok in tokens:
        if not is_jamo(tok):
            raise RuleError(f"{where} contains {tok!r}, which is not one of the 40 jamo")
    return tokens


def _parse_match(obj: object, where: str) -> Match:
    if not isinstance(obj, dict):
        raise RuleError(f"{where}: match must be an object")
    unknown = set(obj) - {"literal", "features", "position", "role"}
    if unknown:
        raise RuleError(f"{where}: unknown match keys {sorted(unknown)}")
    literal = features = position = role = None
    if "literal" in obj:
        literal = _as_token_tuple(obj["literal"], f"{where}: match.literal")
    if "features" in obj:
        feats = obj["features"]
        if not isinstance(feats, dict):
            raise RuleError(f"{where}: match.features must be an object")
        for key, value in feats.items():
            if key not in _FEATURE_VALUES:
                raise RuleError(f"{where}: unknown feature {key!r}")
            if value not in _FEATURE_VALUES[key]:
                raise RuleError(f"{where}: bad value {value!r} for feature {key!r}")
        features = tuple(sorted(feats.items()))
    if "position" in obj:
        raw = obj["position"]
        names = [raw] if isinstance(raw, str) else raw
        if not isinstance(names, list) or any(p not in POSITIONS for p in names):
            raise RuleError(f"{where}: position must name positions among {POSITIONS}")
        position = frozenset(names)
    if "role" in obj:
        if obj["role"] not in ROLES:
            raise RuleError(f"{where}: role must be one of {ROLES}")
        role = obj["role"]
    return Match(literal, features, position, role)


def _parse_action(obj: object, where: str) -> Action:
    if not isinstance(obj, dict):
        raise RuleError(f"{where}: action must be an object")
    unknown = set(obj) - {"kind", "tokens", "direction", "span", "keep"}
    if unknown:
        raise RuleError(f"{where}: unknown action keys {sorted(unknown)}")
    kind = obj.get("kind")
    if kind not in ACTION_KINDS:
        raise RuleError(f"{where}: action.kind must be one of {ACTION_KINDS}")
    tokens: tuple[str, ...] = ()
    if "tokens" in obj:
        tokens = _as_token_tuple(obj["tokens"], f"{where}: action.tokens")
    if kind in ("substitute", "insert") and not tokens:
        raise RuleError(f"{where}: action kind {kind!r} requires non-empty tokens")
    direction = obj.get("direction", "after")
    if direction not in ("before", "after"):
        raise RuleError(f"{where}: direction must be 'before' or 'after'")
    span = obj.get("span", "syllable" if kind == "reduplicate" else "token")
    if span not in ("token", "syllable"):
        raise RuleError(f"{where}: span must be 'token' or 'syllable'")
    keep = obj.get("keep", "typical")
    if keep not in ("typical", "atypical"):
        raise RuleError(f"{where}: keep must be 'typical' or 'atypical'")
    return Action(kind, tokens, direction, span, keep)


def parse_rules(text: str) -> list[ErrorRule]:
    """Parse a JSON rule file into an ordered list of ErrorRule.

    Rejects malformed JSON (with line number), duplicate ids, category
    triples outside the catalogue, and tokens outside the 40-jamo set.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise RuleError(f"rule file line {err.lineno}: {err.msg}") from None
    if not isinstance(data, list):
        raise RuleError("rule file must be a JSON array of rule objects")
    rules: list[ErrorRule] = []
    seen: set[str] = set()
    for i, obj in enumerate(data):
        where = f"rule #{i}"
        if not isinstance(obj, dict):
            raise RuleError(f"{where} is not an object")
        missing = {"id", "main", "middle", "sub", "match", "action"} - set(obj)
        if missing:
            raise RuleError(f"{where}: missing keys {sorted(missing)}")
        unknown = set(obj) - {"id", "main", "middle", "sub", "match", "action", "note"}
        if unknown:
            raise RuleError(f"{where}: unknown keys {sorted(unknown)}")
        rule_id = obj["id"]
        if not isinstance(rule_id, str) or not rule_id:
            raise RuleError(f"{where}: id must be a non-empty string")
        if rule_id in seen:
            raise RuleError(f"duplicate rule id {rule_id!r}")
        seen.add(rule_id)
        where = f"rule {rule_id!r}"
        triple = (obj["main"], obj["middle"], obj["sub"])
        if triple not in _TAXONOMY_SET:
            raise RuleError(f"{where}: unknown category triple {triple}")
        rules.append(
            ErrorRule(
                id=rule_id,
                main_category=triple[0],
                middle_category=triple[1],
                sub_category=triple[2],
                match=_parse_match(obj["match"], where),
                action=_parse_action(obj["action"], where),
            )
        )
    return rules


def _syllable_span(roles: list[TokenRole], syllable: int) -> tuple[int, int]:
    indices = [j for j, r in enumerate(roles) if r.syllable == syllable]
    return indices[0], indices[-1]


def _rewrites(rule: ErrorRule, seq: JamoSeq, i: int, roles: list[TokenRole]) -> list[JamoSeq]:
    """Candidate rewritten sequences for one matching site, in order."""
    act = rule.action
    if act.kind == "delete":
        if act.span == "syllable":
            start, end = _syllable_span(roles, roles[i].syllable)
            return [seq[:start] + seq[end + 1:]]
        return [seq[:i] + seq[i + 1:]]
    if act.kind == "substitute":
        return [seq[:i] + (tok,) + seq[i + 1:] for tok in act.tokens]
    if act.kind == "insert":
        if act.span == "syllable":
            start, end = _syllable_span(roles, roles[i].syllable)
            at = start if act.direction == "before" else end + 1
        else:
            at = i if act.direction == "before" else i + 1
        return [seq[:at] + act.tokens + seq[at:]]
    if act.kind == "reduplicate":
        start, end = _syllable_span(roles, roles[i].syllable)
        return [seq[:end + 1] + seq[start:end + 1] + seq[end + 1:]]
    if act.kind == "transpose":
        same_kind = is_consonant if is_consonant(seq[i]) else is_vowel
        for j in range(i + 1, len(seq)):
            if same_kind(seq[j]):
                swapped = list(seq)
                swapped[i], swapped[j] = swapped[j], swapped[i]
                return [tuple(swapped)]
        return []
    if act.kind == "simplify_cluster":
        in_cluster = (
            roles[i].role == "coda"
            and i + 1 < len(seq)
            and roles[i + 1].role == "coda"
            and roles[i + 1].syllable == roles[i].syllable
        )
        first_of_pair = not (
            i > 0 and roles[i - 1].role == "coda"
            and roles[i - 1].syllable == roles[i].syllable
        )
        if not (in_cluster and first_of_pair):
            return []
        pair = (seq[i], seq[i + 1])
        typical = CLUSTER_SURVIVOR.get(pair, pair[0])
        survivor = typical if act.keep == "typical" else pair[pair[0] == typical]
        return [seq[:i] + (survivor,) + seq[i + 2:]]
    raise RuleError(f"unknown action kind {act.kind!r}")


def _applications(rule: ErrorRule, seq: JamoSeq, roles: list[TokenRole]) -> list[RuleApplication]:
    n_syllables = roles[-1].syllable + 1 if roles else 0
    out: list[RuleApplication] = []
    for i in range(len(seq)):
        if not rule.match.covers(seq, i, roles, n_syllables):
            continue
        for after in _rewrites(rule, seq, i, roles):
            if after and after != seq:
                out.append(RuleApplication(rule.id, i, seq, after))
    return out


def apply_rule(rule: ErrorRule, word: JamoSeq) -> list[RuleApplication]:
    """All single applications of one rule to a jamo sequence.

    One application per (matching site x substitute choice), enumerated
    left-to-right with substitutes in rule order; identity rewrites and
    rewrites to the empty sequence are dropped.  Non-match yields [].
    """
    seq = tuple(word)
    if not seq:
        raise RuleError("cannot apply a rule to an empty sequence")
    return _applications(rule, seq, analyze_roles(seq))


def generate_variants(
    word: str, rules: list[ErrorRule], max_depth: int
) -> dict[JamoSeq, tuple[RuleApplication, ...]]:
    """Closure of rule applications over a word, up to max_depth deep.

    Each variant's derivation uses distinct rules; the second rule matches
    the intermediate form.  The gold decomposition is excluded; duplicate
    variants keep their first (shortest, then rule-order) derivation.
    """
    if not 1 <= max_depth <= 2:
        raise ValueError(f"max_depth must be 1 or 2, got {max_depth}")
    gold = decompose_text(word)
    if not gold:
        raise RuleError(f"word {word!r} decomposes to an empty sequence")
    results: dict[JamoSeq, tuple[RuleApplication, ...]] = {}
    frontier: dict[JamoSeq, tuple[RuleApplication, ...]] = {gold: ()}
    for _ in range(max_depth):
        grown: dict[JamoSeq, tuple[RuleApplication, ...]] = {}
        for seq, apps in frontier.items():
            used = {app.rule_id for app in apps}
            roles = analyze_roles(seq)
            for rule in rules:
                if rule.id in used:
                    continue
                for app in _applications(rule, seq, roles):
                    if app.after == gold or app.after in results:
                        continue
                    results[app.after] = apps + (app,)
                    grown[app.after] = results[app.after]
        frontier = grown
    return results


@dataclass
class LexiconEntry:
    word: str
    gold: JamoSeq
    variants: dict[JamoSeq, tuple[str, ...]] = field(default_factory=dict)


class ErrorLexicon:
    """Word -> mispronunciation variants, each tagged with its rule ids.

    The gold decomposition is carried per word (rule-id list of length 0);
    every variant differs from gold and names 1 or 2 rules.
    """

    def __init__(self, entries: dict[str, LexiconEntry]):
        for entry in entries.values():
            for variant, rule_ids in entry.variants.items():
                if variant == entry.gold:
                    raise RuleError(f"{entry.word}: variant equals the gold form")
                if not 1 <= len(rule_ids) <= 2:
                    raise RuleError(
                        f"{entry.word}: variant must name 1 or 2 rules, got {len(rule_ids)}"
                    )
        self.entries = dict(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def sequences(self) -> list[JamoSeq]:
        """Gold + variant sequences for every word, deterministically ordered."""
        out: list[JamoSeq] = []
        for word in sorted(self.entries):
            entry = self.entries[word]
            out.append(entry.gold)
            out.extend(sorted(entry.variants))
        return out

    def to_tsv(self) -> str:
        lines = []
        for word in sorted(self.entries):
            entry = self.entries[word]
            lines.append(f"{word}\t{''.join(entry.gold)}\t")
            for variant in sorted(entry.variants):
                lines.append(f"{word}\t{''.join(variant)}\t{','.join(entry.variants[variant])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "ErrorLexicon":
        entries: dict[str, LexiconEntry] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise RuleError(f"lexicon line {lineno}: expected 3 tab-separated fields")
            word, jamo, rule_field = parts
            seq = tuple(jamo)
            for tok in seq:
                if not is_jamo(tok):
                    raise RuleError(f"lexicon line {lineno}: {tok!r} is not one of the 40 jamo")
            entry = entries.setdefault(word, LexiconEntry(word, ()))
            if rule_field == "":
                if entry.gold and entry.gold != seq:
                    raise RuleError(f"lexicon line {lineno}: conflicting gold form for {word!r}")
                entry.gold = seq
            else:
                entry.variants[seq] = tuple(rule_field.split(","))
        for word, entry in entries.items():
            if not entry.gold:
                raise RuleError(f"lexicon is missing the gold row for {word!r}")
        return cls(entries)


def build_error_lexicon(words: list[str], rules: list[ErrorRule], max_depth: int) -> ErrorLexicon:
    """Per-word variant generation over a word list, plus the gold forms."""
    if not words:
        raise ValueError("word list is empty")
    entries: dict[str, LexiconEntry] = {}
    for word in words:
        variants = generate_variants(word, rules, max_depth)
        entries[word] = LexiconEntry(
            word,
            decompose_text(word),
            {v: tuple(app.rule_id for app in apps) for v, apps in variants.items()},
        )
    return ErrorLexicon(entries)


def default_rules_text() -> str:
    return (files("jamodiag") / "data" / "default_rules.json").read_text("utf-8")


def default_rules() -> list[ErrorRule]:
    """The bundled ruleset covering all three main error categories."""
    return parse_rules(default_rules_text())


def parse_word_list(text: str) -> list[str]:
    """One word per line; blank lines and '#' comment lines are skipped."""
    return [w for w in (line.strip() for line in text.splitlines())
            if w and not w.startswith("#")]


def default_words() -> list[str]:
    """The bundled 73-word articulation test list."""
    return parse_word_list(
        (files("jamodiag") / "data" / "words.txt").read_text("utf-8"))
