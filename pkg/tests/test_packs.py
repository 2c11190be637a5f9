from pathlib import Path

import pytest

from conftest import FIXTURE_NAMES, doc_xml, gold_doc, raw_doc
from transcascade.engine import apply_pass, check_de_structure, check_nesting, parse_annotated, run_cascade
from transcascade.grammar import GrammarError, parse_grammar
from transcascade.packs import PACKS_ENV, PackError, load_cascade, load_de_pack, load_ne_pack, pack_dir
from transcascade.typology import TypologyError, default_registry


def labels(adoc, family=None):
    return sorted(a.label for a in adoc.annotations if family is None or a.family == family)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_ne_pack_on_fixtures(name, ne_cascade):
    out = run_cascade(ne_cascade, raw_doc(name), check=True)
    assert labels(out, "NE") == labels(gold_doc(name), "NE")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_de_pack_on_fixtures(name, ne_cascade, de_cascade):
    out = run_cascade(ne_cascade + de_cascade, raw_doc(name), check=True)
    assert labels(out) == labels(gold_doc(name))
    assert check_de_structure(out) == []


def test_typology_acceptance():
    reg = default_registry()
    assert reg.accepts("NE", "loc.admi")
    assert reg.accepts("NE", "loc")
    assert not reg.accepts("NE", "loc.unknown")
    assert reg.accepts("DE", "identity.origin")
    assert reg.accepts("DE", "pers.speaker")
    with pytest.raises(TypologyError):
        reg.check("DE", "identity.nowhere")
    assert default_registry(["loc.river"]).accepts("NE", "loc.river")


def test_grammar_with_unknown_type_rejected():
    with pytest.raises(GrammarError):
        parse_grammar("r := {NE:loc.unknown <AnyWord> }\n", registry=default_registry())


def test_attribute_may_not_enclose_role():
    de = default_registry().de
    assert de.may_contain("pers.speaker", "DE", "identity.origin")
    assert de.may_contain("identity.origin", "NE", "loc.admi")
    assert not de.may_contain("identity.origin", "DE", "pers.speaker")


def test_musician_names():
    out = run_cascade(load_cascade("ne"), raw_doc("musician"))
    doc = out.document
    names = [
        " ".join(t.surface for t in doc.tokens(a.turn)[a.start : a.end])
        for a in out.annotations
    ]
    assert names == ["Willy DeVille", "Johnny Hallyday"]


def test_de_needs_ne_units(de_cascade):
    # without NE annotations the origin rule has nothing to anchor on
    out = run_cascade(de_cascade, raw_doc("native"))
    assert not any(a.type == "identity.origin" for a in out.annotations)


def test_pack_loaders():
    grammars, lexicons = load_ne_pack()
    assert {Path(g.name).stem for g in grammars} == {"places", "time", "persons"}
    assert lexicons
    grammars, _ = load_de_pack()
    assert [Path(g.name).stem for g in grammars] == ["speaker"]


def test_pack_lookup(tmp_path, monkeypatch):
    with pytest.raises(PackError):
        pack_dir("nope")
    custom = tmp_path / "mine"
    custom.mkdir()
    (custom / "cascade.manifest").write_text("x.lg\n", encoding="utf-8")
    (custom / "x.lg").write_text('x := {NE:loc "ici" }\n', encoding="utf-8")
    monkeypatch.setenv(PACKS_ENV, str(tmp_path))
    cas = load_cascade("mine")
    out = run_cascade(cas, parse_annotated(doc_xml("je suis ici")))
    assert [a.type for a in out.annotations] == ["loc"]
    assert load_cascade(str(custom)).names == ["x"]


def test_nesting_after_every_pass(ne_cascade, de_cascade):
    adoc = raw_doc("native")
    for name, t in (ne_cascade + de_cascade).passes:
        adoc = apply_pass(t, adoc, name)
        assert check_nesting(adoc) == []
