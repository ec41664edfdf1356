import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmifl.textlang import (
    Dictionary,
    LangTag,
    ScriptClass,
    TargetLanguage,
    Token,
    classify_script,
    tag_sentence,
    tag_token,
    tokenize,
)

E, N, R, U = LangTag.ENGLISH, LangTag.NATIVE, LangTag.ROMANIZED_NATIVE, LangTag.UNIVERSAL


def test_tokenize_empty():
    assert tokenize("") == []
    assert tokenize("   \t\n ") == []


def test_tokenize_romanized_tamil():
    toks = tokenize("mokka trailer thala")
    assert [t.surface for t in toks] == ["mokka", "trailer", "thala"]
    assert all(t.script is ScriptClass.LATIN for t in toks)
    assert [t.index for t in toks] == [0, 1, 2]


def test_tokenize_kannada_script():
    toks = tokenize("ಇಬ್ಬರೂ ಕಳ್ಳರೆ")
    assert len(toks) == 2
    assert all(t.script is ScriptClass.NATIVE_DRAVIDIAN for t in toks)


def test_tokenize_keeps_edge_punctuation():
    assert [t.surface for t in tokenize("edukuringa... pichakara!")] == ["edukuringa...", "pichakara!"]


@pytest.mark.parametrize(
    "surface, expected",
    [
        ("movie", ScriptClass.LATIN),
        ("நான்", ScriptClass.NATIVE_DRAVIDIAN),
        ("സിനിമ", ScriptClass.NATIVE_DRAVIDIAN),
        ("!!!", ScriptClass.OTHER),
        ("123", ScriptClass.OTHER),
        ("padamபடம்", ScriptClass.MIXED),
        ("фильм", ScriptClass.OTHER),
    ],
)
def test_classify_script(surface, expected):
    assert classify_script(Token(surface, ScriptClass.OTHER, 0)) is expected


def test_dictionary_file_format(tmp_path):
    path = tmp_path / "words.txt"
    path.write_text("# comment\nMovie\n\n  song  \n", encoding="utf-8")
    d = Dictionary.load(path)
    assert d.entries == {"movie", "song"}
    assert "MOVIE" in d


def test_shipped_dictionary_lacks_romanized_words(english):
    for word in ("padam", "thala", "mokka", "la", "en", "da", "picha", "edukuringa"):
        assert word not in english.entries


@pytest.mark.parametrize(
    "surface, expected",
    [
        ("movie", E),
        ("Movie!", E),
        ("padam", R),
        ("123", U),
        ("...", U),
        ("😂😂", U),
        ("https://youtu.be/x", U),
        ("@thalapathy", U),
        ("#padam", R),
        ("#movie", E),
        ("படம்", N),
        ("padamபடம்", N),
    ],
)
def test_tag_token(english, surface, expected):
    assert tag_token(tokenize(surface)[0], english) is expected


def test_tag_sentence_empty(english):
    s = tag_sentence("", english, TargetLanguage.TAMIL)
    assert len(s) == 0 and s.tags == ()


def test_tag_sentence_mixed_script():
    d = Dictionary(["movie"])
    s = tag_sentence("நான் movie பார்த்தேன்", d, "ta")
    assert list(s.tags) == [N, E, N]


def test_tag_sentence_table4_input(english):
    s = tag_sentence("Comment la en da picha edukuringa", english, "ta")
    # "comment" is in the shipped list; the rest are romanized Tamil
    assert list(s.tags) == [E, R, R, R, R, R]


text_strategy = st.lists(
    st.sampled_from(list("abc xyz.!1 ") + ["பட", "ம்", "ಕ", "😂", "\t", "@", "#"]),
    max_size=40,
).map("".join)


@given(text_strategy)
def test_tag_count_matches_token_count(text):
    d = Dictionary(["abc"])
    assert len(tag_sentence(text, d).tags) == len(tokenize(text))


@given(text_strategy)
def test_letterless_tokens_are_universal(text):
    d = Dictionary(["abc"])
    s = tag_sentence(text, d)
    for tok, tag in s.pairs():
        if not tok.has_letters:
            assert tag is U


@given(text_strategy)
def test_tagging_deterministic(text):
    d = Dictionary(["abc"])
    assert tag_sentence(text, d) == tag_sentence(text, d)


@given(st.permutations(["abc", "xyz", "படம்", "12", "ಕ!", "abc."]))
def test_reordering_permutes_tags(words):
    d = Dictionary(["abc"])
    base = ["abc", "xyz", "படம்", "12", "ಕ!", "abc."]
    tag_of = dict(zip(base, tag_sentence(" ".join(base), d).tags))
    assert list(tag_sentence(" ".join(words), d).tags) == [tag_of[w] for w in words]
