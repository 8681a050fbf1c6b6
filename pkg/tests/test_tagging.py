import pytest
from hypothesis import given, settings, strategies as st

from biokg.tagging import (
    EntitySpan,
    Label,
    TaggedSentence,
    TaggedToken,
    TaggingError,
    decode_bio,
    detokenize,
    encode_bio,
    iter_conll,
    merge_wordpieces,
    read_conll,
)


def sent(spec: str) -> TaggedSentence:
    """``"acute/B respiratory/I x/O"`` -> TaggedSentence."""
    pairs = [tok.rsplit("/", 1) for tok in spec.split()]
    return TaggedSentence.from_pairs(pairs)


def surfaces(sentence):
    return [s.surface for s in decode_bio(sentence)]


class TestMergeWordpieces:
    def test_angiotensin(self):
        merged = merge_wordpieces(sent("Ang/B ##iot/I ##ens/I ##in/I"))
        assert merged.texts == ["Angiotensin"]
        assert merged.labels == [Label.B]

    def test_ace2(self):
        assert merge_wordpieces(sent("AC/B ##E/I ##2/I")).texts == ["ACE2"]

    def test_identity_without_pieces(self):
        s = sent("acute/B respiratory/I disease/I ,/O")
        assert merge_wordpieces(s) == s

    def test_special_markers_removed(self):
        merged = merge_wordpieces(sent("[CLS]/O Ang/B ##in/I [SEP]/O"))
        assert merged.texts == ["Angin"]

    def test_dangling_continuation(self):
        with pytest.raises(TaggingError, match="dangling"):
            merge_wordpieces(sent("##iot/I Ang/B"))

    def test_wordpiece_token_line(self, data_dir):
        (s,) = read_conll(data_dir / "wordpiece_ace2.tsv")
        merged = merge_wordpieces(s)
        assert merged.texts[:4] == ["Angiotensin", "-", "converting", "enzyme"]
        assert "ACE2" in merged.texts
        assert "SARS" in merged.texts and "CoV" in merged.texts
        assert [x.surface for x in decode_bio(merged)] == ["Angiotensin", "ACE2"]


class TestDecode:
    def test_pneumonia_sentence_run(self):
        assert surfaces(sent("acute/B respiratory/I disease/I")) == ["acute respiratory disease"]

    def test_covid_hyphen(self):
        assert surfaces(sent("COVID/B -/I 19/I")) == ["COVID-19"]

    def test_coronavirus_disease(self):
        assert surfaces(sent("coronavirus/B disease/I 2019/I")) == ["coronavirus disease 2019"]

    def test_all_outside(self):
        assert decode_bio(sent("a/O b/O c/O")) == []

    def test_lenient_i_starts_span(self):
        spans = decode_bio(sent("x/O acute/I disease/I y/O"), doc_id="d")
        assert [(s.surface, s.token_start, s.token_end, s.doc_id) for s in spans] == [
            ("acute disease", 1, 2, "d")
        ]

    def test_adjacent_b_splits(self):
        assert surfaces(sent("a/B b/B c/I")) == ["a", "b c"]

    def test_suffix_parsed(self):
        assert Label.parse("B-MISC") is Label.B
        assert Label.parse("O-MISC") is Label.O
        with pytest.raises(TaggingError):
            Label.parse("X-MISC")


@pytest.mark.parametrize(
    "tokens, expected",
    [
        (["COVID", "-", "19"], "COVID-19"),
        (["meta", "-", "analysis"], "meta-analysis"),
        (["(", "-", "2"], "( - 2"),
        (["-", "2"], "- 2"),
        (["a", "-"], "a -"),
        (["SARS", "-", "CoV", "-", "2"], "SARS-CoV-2"),
    ],
)
def test_detokenize(tokens, expected):
    assert detokenize(tokens) == expected


class TestEncode:
    def test_single_span(self):
        assert encode_bio([(1, 3)], 5) == [Label.O, Label.B, Label.I, Label.I, Label.O]

    def test_no_spans(self):
        assert encode_bio([], 3) == [Label.O] * 3

    def test_overlap_rejected(self):
        with pytest.raises(TaggingError, match="overlap"):
            encode_bio([(0, 2), (2, 3)], 5)

    def test_out_of_range(self):
        with pytest.raises(TaggingError):
            encode_bio([(3, 5)], 5)


@st.composite
def disjoint_spans(draw):
    n = draw(st.integers(min_value=0, max_value=30))
    cuts = sorted(draw(st.sets(st.integers(0, n), max_size=n + 1)))
    spans = []
    for a, b in zip(cuts, cuts[1:]):
        if draw(st.booleans()):
            spans.append((a, b - 1))
    return n, spans


@settings(max_examples=300, deadline=None)
@given(disjoint_spans())
def test_encode_decode_round_trip(case):
    n, spans = case
    labels = encode_bio(spans, n)
    sentence = TaggedSentence([TaggedToken(f"t{i}", lab) for i, lab in enumerate(labels)])
    decoded = decode_bio(sentence)
    assert [s.bounds for s in decoded] == spans


labels_st = st.sampled_from([Label.B, Label.I, Label.O])


@settings(max_examples=300, deadline=None)
@given(st.lists(labels_st, max_size=40))
def test_decoded_spans_disjoint_ordered(labels):
    sentence = TaggedSentence([TaggedToken(f"w{i}", lab) for i, lab in enumerate(labels)])
    spans = decode_bio(sentence)
    for a, b in zip(spans, spans[1:]):
        assert a.token_end < b.token_start
    for s in spans:
        assert labels[s.token_start] in (Label.B, Label.I)
        assert all(lab is Label.I for lab in labels[s.token_start + 1:s.token_end + 1])


@st.composite
def wordpiece_sentences(draw):
    # continuation pieces carry I or O, as tagger output does
    words = draw(st.lists(st.tuples(labels_st, st.integers(0, 3)), min_size=0, max_size=15))
    tokens = []
    for i, (label, n_pieces) in enumerate(words):
        tokens.append(TaggedToken(f"w{i}", label))
        for j in range(n_pieces):
            tokens.append(TaggedToken(f"##p{j}", draw(st.sampled_from([Label.I, Label.O]))))
    return TaggedSentence(tokens), len(words)


@settings(max_examples=300, deadline=None)
@given(wordpiece_sentences())
def test_merge_preserves_b_count(case):
    sentence, n_words = case
    merged = merge_wordpieces(sentence)
    assert len(merged) == n_words
    assert merged.labels.count(Label.B) == sentence.labels.count(Label.B)
    assert not any(t.text.startswith("##") for t in merged.tokens)


def test_conll_parsing_errors():
    with pytest.raises(TaggingError, match="line 2"):
        list(iter_conll(["a\tO-MISC\n", "b O-MISC\n"]))
    with pytest.raises(TaggingError, match="line 1"):
        list(iter_conll(["a\tQ-MISC\n"]))


def test_conll_sentence_split():
    sents = list(iter_conll(["a\tB-MISC\n", "\n", "\n", "b\tO-MISC\n", "c\tI-MISC\n"]))
    assert [s.texts for s in sents] == [["a"], ["b", "c"]]


def test_span_bounds_validated():
    with pytest.raises(TaggingError):
        EntitySpan("x", 3, 2)
