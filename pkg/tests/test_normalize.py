import string

import pytest
from hypothesis import given, settings, strategies as st

from biokg.normalize import (
    NormalizationError,
    Normalizer,
    load_alias_table,
    normalize_entity,
    strip_plural,
)


@pytest.mark.parametrize(
    "surface, key",
    [
        ("SIAsNN", "siann"),
        ("respiratory illnesses", "respiratory_illness"),
        ("ace2", "ace2"),
        ("Favipiravir", "favipiravir"),
        ("favipiravir", "favipiravir"),
        ("COVID-19", "covid-19"),
        ("ACE-2", "ace-2"),
        ("  acute   respiratory\tdiseases ", "acute_respiratory_disease"),
        ("cytokine storms", "cytokine_storm"),
        ("therapies", "therapy"),
        ("classes", "class"),
        ("gas", "gas"),
    ],
)
def test_examples(surface, key):
    assert normalize_entity(surface) == key


@pytest.mark.parametrize(
    "unit, stripped",
    [("illnesses", "illness"), ("diseases", "disease"), ("studies", "study"),
     ("cells", "cell"), ("illness", "illness"), ("SIAs", "SIA"), ("ILLNESSES", "ILLNESS"),
     ("p53s", "p53s")],
)
def test_strip_plural(unit, stripped):
    assert strip_plural(unit) == stripped


@pytest.mark.parametrize("bad", ["", "   ", "\t\n", "_", " __ "])
def test_empty_rejected(bad):
    with pytest.raises(NormalizationError):
        normalize_entity(bad)


nonblank = st.text(min_size=1, max_size=30).filter(lambda s: s.replace("_", " ").strip())


@settings(max_examples=1000, deadline=None)
@given(nonblank)
def test_idempotent(surface):
    key = normalize_entity(surface)
    assert normalize_entity(key) == key


@settings(max_examples=500, deadline=None)
@given(nonblank)
def test_no_spaces_or_uppercase(surface):
    key = normalize_entity(surface)
    assert not any(ch.isspace() for ch in key)
    assert not any(ch.isupper() for ch in key)


ascii_word = st.text(alphabet=string.ascii_letters + string.digits + "-", min_size=1, max_size=20)


@settings(max_examples=500, deadline=None)
@given(ascii_word)
def test_case_invariance_single_word(word):
    assert normalize_entity(word.upper()) == normalize_entity(word.lower())


def test_alias_table(tmp_path):
    path = tmp_path / "aliases.csv"
    path.write_text("# abbreviations\nACE-2,ACE2\nangiotensin-converting enzyme 2,ace2\n")
    aliases = load_alias_table(path)
    assert aliases == {"ace-2": "ace2", "angiotensin-converting_enzyme_2": "ace2"}
    norm = Normalizer(aliases)
    assert norm("ACE-2") == "ace2"
    assert norm("Angiotensin-converting enzyme 2") == "ace2"
    assert norm("remdesivir") == "remdesivir"


def test_alias_table_bad_row(tmp_path):
    path = tmp_path / "aliases.csv"
    path.write_text("a,b,c\n")
    with pytest.raises(NormalizationError, match="1"):
        load_alias_table(path)


def test_pipeline_skips_blank_surfaces():
    from biokg.corpus import Document
    from biokg.pipeline import document_keys
    from biokg.tagging import TaggedSentence

    sentence = TaggedSentence.from_pairs([("_", "B-MISC"), ("and", "O"), ("Remdesivir", "B-MISC")])
    doc = Document("D", "", "", [], [sentence])
    assert document_keys(doc) == ["remdesivir"]
