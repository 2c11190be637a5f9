import random

import pytest

from conftest import FIXTURE_NAMES, doc_xml, gold_doc
from gen import random_document
from transcascade.anonymize import (
    PolicyError,
    parse_policy,
    pseudonymize,
    read_sidecar,
    restore,
    sidecar_lines,
)
from transcascade.engine import parse_annotated, run_cascade
from transcascade.transcript import parse_transcription, serialize

ALL = parse_policy(["pers.*", "loc.*", "time.*", "DE:identity.*"])


def round_trip(adoc, policy):
    """Pseudonymize, write both files, read them back and restore."""
    doc, maps = pseudonymize(adoc, policy)
    data = serialize(doc)
    side = sidecar_lines(maps)
    back = restore(parse_transcription(data), read_sidecar(side))
    return data, maps, serialize(back)


def test_same_surface_same_placeholder():
    xml = doc_xml(
        '<NE type="loc.admi">Orléans</NE> et <NE type="loc.admi">Tours</NE>',
        'encore <NE type="loc.admi">Orléans</NE>',
    )
    doc, maps = pseudonymize(parse_annotated(xml), parse_policy(["loc.*"]))
    text = [t.text for t in doc.turns]
    assert "LOCATION-1" in text[0] and "LOCATION-2" in text[0] and "LOCATION-1" in text[1]
    assert {m.surface: m.placeholder for m in maps} == {"Orléans": "LOCATION-1", "Tours": "LOCATION-2"}
    assert len(maps[0].occurrences) == 2
    assert "Orléans" not in serialize(doc).decode()


def test_untargeted_types_kept():
    xml = doc_xml('<NE type="pers.hum">Willy</NE> à <NE type="loc.admi">Tours</NE>')
    doc, _ = pseudonymize(parse_annotated(xml), parse_policy(["pers.*"]))
    assert "Tours" in doc.turns[0].text and "Willy" not in doc.turns[0].text


def test_outermost_target_wins():
    xml = doc_xml('<DE type="identity.origin">native de <NE type="loc.admi">Pithiviers</NE></DE>')
    doc, maps = pseudonymize(parse_annotated(xml), ALL)
    assert [m.placeholder for m in maps] == ["IDENTITY-1"]
    # the inner marker stays, empty, so the sidecar can refill it
    assert b'<NE type="loc.admi" />' in serialize(doc)


def test_policy_parsing():
    p = parse_policy("# comment\nloc.admi\nEN:pers.hum\nDE:identity.origin\n")
    assert p.targets == (("NE", "loc.admi"), ("NE", "pers.hum"), ("DE", "identity.origin"))
    with pytest.raises(PolicyError):
        parse_policy(["loc.nowhere"])
    with pytest.raises(PolicyError):
        parse_policy(["XX:loc"])


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_reversible(name):
    adoc = gold_doc(name)
    data, maps, back = round_trip(adoc, ALL)
    assert back == adoc.serialize()
    for m in maps:
        assert m.placeholder.encode() in data


def test_fuzzed_documents(ne_cascade, de_cascade):
    rng = random.Random(21)
    for _ in range(100):
        adoc = run_cascade(ne_cascade + de_cascade, parse_annotated(random_document(rng)))
        data, maps, back = round_trip(adoc, ALL)
        assert back == adoc.serialize()
        placeholders = [m.placeholder for m in maps]
        assert len(set(placeholders)) == len(placeholders)
        keys = [(m.family, m.type, m.surface) for m in maps]
        assert len(set(keys)) == len(keys)


def test_bad_sidecar():
    with pytest.raises(ValueError, match="line 1"):
        read_sidecar("{not json}\n")
    doc = parse_transcription(doc_xml("x"))
    maps = read_sidecar('{"placeholder": "P-1", "surface": "a", "type": "loc", "occurrences": [[4, 0, 0, 1, "a"]]}\n')
    with pytest.raises(ValueError, match="missing turn"):
        restore(doc, maps)
