"""Word-level language tagging for Dravidian/English code-mixed text.

Tokens are whitespace-delimited.  Each token gets a script class from its
letters and then a language tag:

* no letters, URLs and @mentions -> ``UNIVERSAL``
* any Tamil/Malayalam/Kannada (or other non-Latin) letter -> ``NATIVE``
* Latin letters found in the English dictionary -> ``ENGLISH``
* other Latin tokens -> ``ROMANIZED_NATIVE``
"""

import enum
import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

__all__ = [
    "ScriptClass",
    "LangTag",
    "TargetLanguage",
    "Token",
    "TaggedSentence",
    "Dictionary",
    "tokenize",
    "classify_script",
    "tag_token",
    "tag_sentence",
]

# Tamil, Kannada, Malayalam
DRAVIDIAN_BLOCKS = ((0x0B80, 0x0BFF), (0x0C80, 0x0CFF), (0x0D00, 0x0D7F))

# Basic Latin, Latin-1 Supplement, Latin Extended-A/B, IPA, Latin Extended Additional
LATIN_BLOCKS = ((0x0041, 0x024F), (0x0250, 0x02AF), (0x1E00, 0x1EFF))

_WS_RUN = re.compile(r"\S+")


class ScriptClass(enum.Enum):
    LATIN = "Latin"
    NATIVE_DRAVIDIAN = "NativeDravidian"
    MIXED = "Mixed"
    OTHER = "Other"


class LangTag(enum.Enum):
    ENGLISH = "English"
    NATIVE = "Native"
    ROMANIZED_NATIVE = "RomanizedNative"
    UNIVERSAL = "Universal"


class TargetLanguage(enum.Enum):
    TAMIL = "ta"
    MALAYALAM = "ml"
    KANNADA = "kn"

    @property
    def display_name(self):
        return self.name.capitalize()

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for lang in cls:
            if key in (lang.value, lang.name.lower()):
                return lang
        raise ValueError(f"unknown language {value!r}; expected ta, ml or kn")


def _in_blocks(cp, blocks):
    for lo, hi in blocks:
        if lo <= cp <= hi:
            return True
    return False


def _is_dravidian(ch):
    return _in_blocks(ord(ch), DRAVIDIAN_BLOCKS)


def _is_letter(ch):
    # Dravidian vowel signs and viramas are combining marks, not letters,
    # but they only ever occur as part of a written word.
    if ch.isalpha():
        return True
    return _is_dravidian(ch) and unicodedata.category(ch).startswith("M")


def _is_latin_letter(ch):
    return ch.isalpha() and _in_blocks(ord(ch), LATIN_BLOCKS)


def _script_of(surface):
    has_latin = has_native = has_other = False
    for ch in surface:
        if not _is_letter(ch):
            continue
        if _is_dravidian(ch):
            has_native = True
        elif _is_latin_letter(ch):
            has_latin = True
        else:
            has_other = True
    if has_native:
        return ScriptClass.MIXED if has_latin else ScriptClass.NATIVE_DRAVIDIAN
    if has_latin and not has_other:
        return ScriptClass.LATIN
    return ScriptClass.OTHER


@dataclass(frozen=True)
class Token:
    surface: str
    script: ScriptClass
    index: int

    @property
    def has_letters(self):
        return any(_is_letter(ch) for ch in self.surface)


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple
    tags: tuple
    target_language: TargetLanguage = TargetLanguage.TAMIL

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags must have equal length")

    def __len__(self):
        return len(self.tokens)

    def pairs(self):
        return list(zip(self.tokens, self.tags))

    @classmethod
    def from_tags(cls, tags, target_language=TargetLanguage.TAMIL):
        """Build a sentence with placeholder tokens, for CMI arithmetic."""
        tags = tuple(tags)
        tokens = tuple(
            Token(surface=f"w{i}", script=ScriptClass.OTHER, index=i)
            for i in range(len(tags))
        )
        return cls(tokens=tokens, tags=tags, target_language=target_language)


class Dictionary:
    """Case-insensitive word set loaded from a word-per-line file."""

    def __init__(self, entries, source_path=""):
        self.entries = frozenset(w.lower() for w in entries)
        self.source_path = str(source_path)

    def __contains__(self, word):
        return word.lower() in self.entries

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"Dictionary({len(self.entries)} words from {self.source_path!r})"

    @classmethod
    def from_lines(cls, lines, source_path=""):
        words = []
        for line in lines:
            word = line.strip()
            if not word or word.startswith("#"):
                continue
            words.append(word)
        return cls(words, source_path)

    @classmethod
    def load(cls, path):
        path = Path(path)
        with path.open(encoding="utf-8-sig") as fh:
            return cls.from_lines(fh, source_path=path)

    @classmethod
    def default(cls):
        ref = resources.files("cmifl") / "data" / "english_words.txt"
        with ref.open(encoding="utf-8") as fh:
            return cls.from_lines(fh, source_path=str(ref))


def tokenize(text):
    """Split ``text`` into maximal non-whitespace runs."""
    return [
        Token(surface=m.group(), script=_script_of(m.group()), index=i)
        for i, m in enumerate(_WS_RUN.finditer(text))
    ]


def classify_script(token):
    surface = token.surface if isinstance(token, Token) else token
    return _script_of(surface)


def _is_edge_char(ch):
    cat = unicodedata.category(ch)
    return cat[0] in "PSZC"


def strip_edges(surface):
    start, end = 0, len(surface)
    while start < end and _is_edge_char(surface[start]):
        start += 1
    while end > start and _is_edge_char(surface[end - 1]):
        end -= 1
    return surface[start:end]


def tag_token(token, dictionary):
    if isinstance(token, str):
        token = Token(token, _script_of(token), 0)
    surface = token.surface
    lowered = surface.lower()
    if lowered.startswith("http") or lowered.startswith("www.") or surface.startswith("@"):
        return LangTag.UNIVERSAL
    if not token.has_letters:
        return LangTag.UNIVERSAL

    body = surface.lstrip("#") if surface.startswith("#") else surface
    script = _script_of(body)
    if script is not ScriptClass.LATIN:
        # non-Latin letters cannot be English; third scripts go with native
        return LangTag.NATIVE
    word = strip_edges(body)
    if word.lower() in dictionary.entries:
        return LangTag.ENGLISH
    return LangTag.ROMANIZED_NATIVE


def tag_sentence(text, dictionary, lang=TargetLanguage.TAMIL):
    lang = TargetLanguage.parse(lang)
    tokens = tokenize(text)
    tags = tuple(tag_token(tok, dictionary) for tok in tokens)
    return TaggedSentence(tokens=tuple(tokens), tags=tags, target_language=lang)
