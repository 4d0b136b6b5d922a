"""Text normalization pipeline.

Eleven ordered steps turn raw post text into a deterministic lowercase
token sequence: username removal, emoji naming, apostrophe normalization,
accent stripping, punctuation stripping, lowercasing, repeat-letter
collapsing, author-prefix stripping, contraction expansion, newline
flattening, and phone-number redaction.

Every step is a pure text -> text function; `clean` runs them in the
configured order and reports a per-step change count. Final tokens contain
only lowercase letters, digits, and the characters - + $ _ '.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .contractions import CONTRACTIONS
from .emojinames import DROPPED_CODEPOINTS, EMOJI_NAMES, UNKNOWN_NAME, in_emoji_block
from .errors import DataError

DEFAULT_FAKE_PHONE = "555-555-0123"
# Anything in XXX-555-0100..XXX-555-0199 is reserved as fictitious.
_FAKE_PHONE_RE = re.compile(r"^\d{3}-555-01\d{2}$")

# '-', '+', '$' carry meaning (phone numbers, money); "'" must survive until
# contraction expansion and '_' glues emoji names together.
DEFAULT_KEPT_PUNCTUATION = frozenset("-+$'_")

DEFAULT_AUTHOR_MARKER = r"^\S+:\s+"

_USERNAME_RE = re.compile(r"(?<!\S)@\S+\s*")

_APOSTROPHE_CHARS = "‘’‛ʼ`´"
_APOSTROPHE_RE = re.compile(
    r"&#x27;|&#X27;|&#39;|&apos;|[" + _APOSTROPHE_CHARS + r"]"
)

_REPEAT_RE = re.compile(r"([^\W\d_])\1{2,}", re.UNICODE)

_WHITESPACE_RUN_RE = re.compile(r"\s+")

# Digit groups joined by short separator runs; a span is a phone number
# when it carries 7..15 digits in total.
_PHONE_SPAN_RE = re.compile(r"[+(]{0,2}\d(?:[\s\-+().]{0,3}\d)*")
_PHONE_MIN_DIGITS = 7
_PHONE_MAX_DIGITS = 15

_QUICK_EMOJI_RE = re.compile(
    "[‍︎️☀-➿⬀-⯿"
    "\U0001f000-\U0001f0ff\U0001f1e6-\U0001f1ff\U0001f300-\U0001f5ff"
    "\U0001f600-\U0001f64f\U0001f680-\U0001f6ff\U0001f900-\U0001f9ff"
    "\U0001fa70-\U0001faff]"
)


# -- individual steps ---------------------------------------------------------


def remove_usernames(text: str) -> str:
    """Delete every whitespace-delimited token that starts with '@'."""
    out = _USERNAME_RE.sub("", text)
    return text if out == text else out.strip()


def name_emojis(text: str, name_map: Optional[Mapping[int, str]] = None) -> str:
    """Replace each emoji codepoint with its space-padded snake_case name."""
    return _name_emojis_counted(text, name_map)[0]


def _name_emojis_counted(
    text: str, name_map: Optional[Mapping[int, str]]
) -> tuple[str, int]:
    if not _QUICK_EMOJI_RE.search(text):
        return text, 0
    table = EMOJI_NAMES if name_map is None else name_map
    parts: list[str] = []
    named = 0
    for ch in text:
        cp = ord(ch)
        if cp in DROPPED_CODEPOINTS:
            continue
        name = table.get(cp)
        if name is None and in_emoji_block(cp):
            name = UNKNOWN_NAME
        if name is not None:
            parts.append(f" {name} ")
            named += 1
        else:
            parts.append(ch)
    return "".join(parts), named


def normalize_apostrophes(text: str) -> str:
    """Collapse typographic and HTML-entity apostrophe forms to ASCII '."""
    return _APOSTROPHE_RE.sub("'", text)


def strip_accents(text: str) -> str:
    """Decompose, then drop combining marks: café -> cafe, niño -> nino."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def strip_punctuation(text: str, kept: frozenset[str] = DEFAULT_KEPT_PUNCTUATION) -> str:
    """Drop everything that is not a letter, digit, whitespace, or kept mark."""
    return "".join(
        ch for ch in text if ch.isalpha() or ch.isdigit() or ch.isspace() or ch in kept
    )


def lowercase(text: str) -> str:
    return text.lower()


def collapse_repeats(text: str) -> str:
    """Any run of 3 or more identical letters becomes exactly two."""
    return _REPEAT_RE.sub(r"\1\1", text)


def strip_author_prefix(text: str, marker: str = DEFAULT_AUTHOR_MARKER) -> str:
    """Remove a leading author-name segment when the marker pattern matches."""
    return re.sub(marker, "", text, count=1)


def expand_contractions(text: str, table: Optional[Mapping[str, str]] = None) -> str:
    """Replace table-listed contractions; the result is re-lowercased."""
    table = CONTRACTIONS if table is None else table
    if not table:
        return text.lower()
    pattern = _contraction_pattern(table if table is not CONTRACTIONS else None)
    out = pattern.sub(lambda m: table[m.group(0).lower()], text)
    return out.lower()


def flatten_newlines(text: str) -> str:
    """One whitespace run -> one space; the unit is a single 'sentence'."""
    return _WHITESPACE_RUN_RE.sub(" ", text).strip()


def redact_phone_numbers(text: str, fake_phone: str = DEFAULT_FAKE_PHONE) -> str:
    """Replace every span carrying 7..15 digits with the fictitious number."""

    def sub(match: re.Match) -> str:
        digits = sum(ch.isdigit() for ch in match.group(0))
        if _PHONE_MIN_DIGITS <= digits <= _PHONE_MAX_DIGITS:
            return fake_phone
        return match.group(0)

    return _PHONE_SPAN_RE.sub(sub, text)


_DEFAULT_CONTRACTION_PATTERN: Optional[re.Pattern] = None


def _contraction_pattern(table: Optional[Mapping[str, str]]) -> re.Pattern:
    global _DEFAULT_CONTRACTION_PATTERN
    if table is None:
        if _DEFAULT_CONTRACTION_PATTERN is None:
            _DEFAULT_CONTRACTION_PATTERN = _compile_contractions(CONTRACTIONS)
        return _DEFAULT_CONTRACTION_PATTERN
    return _compile_contractions(table)


def _compile_contractions(table: Mapping[str, str]) -> re.Pattern:
    # Longest-first so "can't've" wins over "can't".
    alts = sorted((re.escape(k) for k in table), key=len, reverse=True)
    return re.compile(
        r"(?<![\w'])(?:" + "|".join(alts) + r")(?![\w'])", re.IGNORECASE
    )


# -- pipeline ------------------------------------------------------------------

STEP_ORDER: tuple[str, ...] = (
    "remove_usernames",
    "name_emojis",
    "normalize_apostrophes",
    "strip_accents",
    "strip_punctuation",
    "lowercase",
    "collapse_repeats",
    "strip_author_prefix",
    "expand_contractions",
    "flatten_newlines",
    "redact_phone_numbers",
)


@dataclass(frozen=True)
class CleaningConfig:
    steps: tuple[str, ...] = STEP_ORDER
    fake_phone: str = DEFAULT_FAKE_PHONE
    emoji_name_map: Optional[Mapping[int, str]] = None
    contraction_table: Optional[Mapping[str, str]] = None
    kept_punctuation: frozenset[str] = DEFAULT_KEPT_PUNCTUATION
    author_marker: str = DEFAULT_AUTHOR_MARKER

    def __post_init__(self):
        if sorted(self.steps) != sorted(STEP_ORDER):
            raise DataError(
                f"steps must be a permutation of {sorted(STEP_ORDER)}, got {list(self.steps)}"
            )
        if not _FAKE_PHONE_RE.match(self.fake_phone):
            raise DataError(
                f"fake_phone {self.fake_phone!r} is outside the fictitious range XXX-555-01NN"
            )


@dataclass
class CleanedDocument:
    post_id: str
    tokens: list[str]
    stats: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"post_id": self.post_id, "tokens": self.tokens, "stats": self.stats}


def _count_lower(text: str) -> int:
    return sum(1 for ch in text if ch != ch.lower())


def _count_phone_spans(text: str) -> int:
    n = 0
    for m in _PHONE_SPAN_RE.finditer(text):
        digits = sum(ch.isdigit() for ch in m.group(0))
        if _PHONE_MIN_DIGITS <= digits <= _PHONE_MAX_DIGITS:
            n += 1
    return n


def _step_impls(config: CleaningConfig) -> dict[str, Callable[[str], tuple[str, int]]]:
    """Each step returns (new_text, change_count)."""

    def counted_sub(pattern: re.Pattern, repl, text: str) -> tuple[str, int]:
        return pattern.subn(repl, text)

    def usernames(t: str) -> tuple[str, int]:
        out, n = _USERNAME_RE.subn("", t)
        return (t, 0) if n == 0 else (out.strip(), n)

    def emojis(t: str) -> tuple[str, int]:
        return _name_emojis_counted(t, config.emoji_name_map)

    def apostrophes(t: str) -> tuple[str, int]:
        return counted_sub(_APOSTROPHE_RE, "'", t)

    def accents(t: str) -> tuple[str, int]:
        decomposed = unicodedata.normalize("NFKD", t)
        n = sum(1 for ch in decomposed if unicodedata.combining(ch))
        return "".join(ch for ch in decomposed if not unicodedata.combining(ch)), n

    def punctuation(t: str) -> tuple[str, int]:
        out = strip_punctuation(t, config.kept_punctuation | frozenset("'_"))
        return out, len(t) - len(out)

    def lower(t: str) -> tuple[str, int]:
        return t.lower(), _count_lower(t)

    def repeats(t: str) -> tuple[str, int]:
        return counted_sub(_REPEAT_RE, r"\1\1", t)

    def author(t: str) -> tuple[str, int]:
        out = re.sub(config.author_marker, "", t, count=1)
        return out, int(out != t)

    def contractions(t: str) -> tuple[str, int]:
        table = config.contraction_table
        pattern = _contraction_pattern(None if table is None else table)
        lookup = CONTRACTIONS if table is None else table
        out, n = pattern.subn(lambda m: lookup[m.group(0).lower()], t)
        return out.lower(), n

    def newlines(t: str) -> tuple[str, int]:
        n = sum(1 for m in _WHITESPACE_RUN_RE.finditer(t) if m.group(0) != " ")
        return flatten_newlines(t), n

    def phones(t: str) -> tuple[str, int]:
        n = _count_phone_spans(t)
        return redact_phone_numbers(t, config.fake_phone), n

    return {
        "remove_usernames": usernames,
        "name_emojis": emojis,
        "normalize_apostrophes": apostrophes,
        "strip_accents": accents,
        "strip_punctuation": punctuation,
        "lowercase": lower,
        "collapse_repeats": repeats,
        "strip_author_prefix": author,
        "expand_contractions": contractions,
        "flatten_newlines": newlines,
        "redact_phone_numbers": phones,
    }


def clean_text(raw_text: str, config: Optional[CleaningConfig] = None) -> tuple[list[str], dict[str, int]]:
    config = config or CleaningConfig()
    impls = _step_impls(config)
    stats: dict[str, int] = {}
    text = raw_text
    for step in config.steps:
        text, n = impls[step](text)
        stats[step] = n
    tokens = text.split()
    stats["empty_output"] = int(not tokens)
    return tokens, stats


def clean(post, config: Optional[CleaningConfig] = None) -> CleanedDocument:
    tokens, stats = clean_text(post.raw_text, config)
    return CleanedDocument(post_id=post.post_id, tokens=tokens, stats=stats)


# -- flat key=value config text -------------------------------------------------


def parse_config_text(text: str) -> CleaningConfig:
    """Parse `key = value` lines ('#' comments allowed) into a CleaningConfig.

    Known keys: steps (comma-separated), fake_phone, author_marker,
    kept_punctuation (the characters of the value).
    """
    kwargs: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "steps":
            kwargs["steps"] = tuple(s.strip() for s in value.split(",") if s.strip())
        elif key == "fake_phone":
            kwargs["fake_phone"] = value
        elif key == "author_marker":
            kwargs["author_marker"] = value
        elif key == "kept_punctuation":
            kwargs["kept_punctuation"] = frozenset(value)
        else:
            raise DataError(f"config line {lineno}: unknown key {key!r}")
    return CleaningConfig(**kwargs)
