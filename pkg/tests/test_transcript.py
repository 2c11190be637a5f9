import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE_NAMES, FIXTURES, doc_xml
from transcascade.transcript import (
    Event,
    Sync,
    TagClose,
    TagOpen,
    Text,
    TranscriptParseError,
    UnknownElementWarning,
    Verbatim,
    detokenize,
    parse_transcription,
    segment,
    serialize,
    tokenize,
    validate_conventions,
)

QUESTION_TURN = """<?xml version="1.0" encoding="UTF-8"?>
<Trans><Episode><Section type="report" startTime="10.88" endTime="14.843">
<Turn speaker="spk4" startTime="10.88"
endTime="14.843">
<Sync time="10.88"/>vous vous plaisez à
Orléans?
<Sync time="12.721"/></Turn>
</Section></Episode></Trans>
"""


def test_parse_turn_example():
    doc = parse_transcription(QUESTION_TURN)
    (turn,) = doc.turns
    assert turn.speaker == "spk4"
    assert str(turn.start_time) == "10.88"
    assert str(turn.end_time) == "14.843"
    assert [type(i) for i in turn.items] == [Text, Sync, Text, Sync]
    assert turn.items[2].text == "vous vous plaisez à\nOrléans?\n"
    toks = doc.tokens(0)
    assert [t.surface for t in toks if t.is_text] == ["vous", "vous", "plaisez", "à", "Orléans", "?"]
    assert toks[-2].kind == "question-mark"


def test_malformed_xml_reports_position():
    with pytest.raises(TranscriptParseError) as info:
        parse_transcription("<Trans>\n<Turn></Trans>")
    assert info.value.line == 2
    assert info.value.column is not None


def test_wrong_root():
    with pytest.raises(TranscriptParseError):
        parse_transcription("<Other/>")


def test_unknown_element_kept_verbatim():
    xml = doc_xml('a <Comment desc="x"/> b')
    with pytest.warns(UnknownElementWarning):
        doc = parse_transcription(xml)
    assert any(isinstance(i, Verbatim) and "Comment" in i.xml for i in doc.turns[0].items)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        again = parse_transcription(serialize(doc))
    assert again.turns == doc.turns


def test_inline_markers_and_en_alias():
    doc = parse_transcription(doc_xml('de <EN type="loc.admi">Pithiviers</EN>'))
    items = doc.turns[0].items
    assert TagOpen("NE", "loc.admi", "EN") in items
    assert TagClose("NE", "EN") in items


def test_event_attributes():
    doc = parse_transcription(doc_xml('x <Event desc="pi" type="pronounce" extent="instantaneous"/> y'))
    ev = [i for i in doc.turns[0].items if isinstance(i, Event)][0]
    assert (ev.description, ev.kind, ev.extent) == ("pi", "pronounce", "instantaneous")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
@pytest.mark.parametrize("kind", ["raw", "gold"])
def test_fixture_round_trip(name, kind):
    data = (FIXTURES / kind / f"{name}.trs").read_bytes()
    doc = parse_transcription(data)
    once = serialize(doc)
    again = parse_transcription(once)
    assert again.turns == doc.turns
    assert again.skeleton == doc.skeleton
    assert again.doctype == doc.doctype
    assert serialize(again) == once


def test_no_text_dropped():
    doc = parse_transcription(QUESTION_TURN)
    assert "vous vous plaisez à\nOrléans?" in serialize(doc).decode()


def test_nfc_normalization():
    decomposed = "Orléans"
    doc = parse_transcription(doc_xml(decomposed))
    assert doc.turns[0].text == "Orléans"


@pytest.mark.parametrize(
    "text,surfaces,kinds",
    [
        ("j'aime Orléans?", ["j'", "aime", "Orléans", "?"], ["word", "word", "word", "question-mark"]),
        ("mont- ah!", ["mont-", "ah", "!"], ["truncated-word", "word", "exclamation-mark"]),
        ("aujourd'hui", ["aujourd'hui"], ["word"]),
        ("  ", [], []),
    ],
)
def test_tokenize(text, surfaces, kinds):
    toks = tokenize(text)
    assert [t.surface for t in toks] == surfaces
    assert [t.kind for t in toks] == kinds


@given(st.text(alphabet="ab'? -!\nÉé", max_size=30))
@settings(max_examples=200)
def test_detokenize_inverts_tokenize(text):
    toks = tokenize(text)
    assert detokenize(toks, text) == text
    for t in toks:
        assert text[t.start : t.end] == t.surface
        assert (t.kind == "truncated-word") == (t.surface.endswith("-") and t.surface not in "?!")


def test_segments_split_on_sync():
    xml = doc_xml('un deux <Sync time="1"/> trois <Sync time="2"/>')
    segs = segment(parse_transcription(xml))
    assert [[t.surface for t in s.tokens if t.is_text] for s in segs] == [["un", "deux"], ["trois"]]


def test_segment_without_text_skipped():
    segs = segment(parse_transcription(doc_xml('<Sync time="1"/> a')))
    assert len(segs) == 1


@pytest.mark.parametrize(
    "body,rule",
    [
        ("bonjour, madame", "forbidden-punctuation"),
        ("le chAt", "unexpected-uppercase"),
        ("il est mont--", "malformed-truncation"),
        ("un - deux", "malformed-truncation"),
        ('a <Sync time="99"/> b', "malformed-pause"),
    ],
)
def test_convention_violations(body, rule):
    vs = validate_conventions(parse_transcription(doc_xml(body)))
    assert [v.rule for v in vs] == [rule]


def test_clean_text_passes_conventions():
    assert validate_conventions(parse_transcription(QUESTION_TURN)) == []
    assert validate_conventions(parse_transcription(doc_xml("le SNCF et mont- vous?"))) == []


def test_decreasing_sync():
    xml = doc_xml('a <Sync time="3"/> b <Sync time="2"/> c')
    vs = validate_conventions(parse_transcription(xml))
    assert any("decrease" in v.message for v in vs)


def test_violation_span_points_at_character():
    doc = parse_transcription(doc_xml("a, b"))
    (v,) = validate_conventions(doc)
    assert doc.turns[0].text[v.span[0] : v.span[1]] == ","
