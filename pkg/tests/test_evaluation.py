import random

import pytest

from conftest import FIXTURE_NAMES, doc_xml, gold_doc, raw_doc
from oracles import best_split_subsets, exhaustive_counts
from transcascade.engine import Annotation, parse_annotated, run_cascade
from transcascade.evaluation import (
    LEVELS,
    EvalError,
    LevelCounts,
    max_matching,
    score,
    score_annotations,
    sparsity_warning,
    split_corpus,
)


def ne(typ, start, end, turn=0):
    return Annotation("NE", typ, turn, start, end)


def test_three_of_four():
    gold = [ne("loc", 0, 1), ne("loc", 2, 3), ne("pers.hum", 4, 6), ne("time", 7, 8)]
    system = [ne("loc", 0, 1), ne("loc", 2, 3), ne("pers.hum", 4, 6), ne("org", 9, 10)]
    c = score_annotations(gold, system)["entity-bracket"]
    assert (c.tp, c.fp, c.fn) == (3, 1, 1)
    assert c.precision == c.recall == 0.75


def test_levels_differ():
    gold = [ne("loc.admi", 0, 2)]
    system = [ne("loc", 1, 2)]
    out = score_annotations(gold, system)
    assert out["entity-detection"].tp == 1
    assert out["entity-type"].tp == 0
    assert out["entity-bracket"].tp == 0
    exact = score_annotations(gold, [ne("loc", 0, 2)], bracket_type=False)
    assert exact["entity-bracket"].tp == 1


def test_matching_is_one_to_one():
    gold = [ne("loc", 0, 4)]
    system = [ne("loc", 0, 2), ne("loc", 2, 4)]
    c = score_annotations(gold, system)["entity-detection"]
    assert (c.tp, c.fp, c.fn) == (1, 1, 0)


def test_maximum_not_greedy():
    # greedy in order would pair s0 with g0 and leave g1 unmatched
    ok = lambda s, g: g in s
    assert max_matching([{0, 1}, {0}], [0, 1], ok) == 2


def test_empty_counts_are_perfect():
    c = LevelCounts()
    assert c.precision == c.recall == 1.0


def _random_annotations(rng, n, turns=2, length=12):
    out = []
    for i in range(n):
        s = rng.randrange(length)
        e = rng.randint(s + 1, min(length, s + 4))
        fam = rng.choice(["NE", "NE", "DE"])
        typ = rng.choice(["loc", "loc.admi", "pers.hum"] if fam == "NE" else ["pers.speaker", "identity.origin"])
        out.append(Annotation(fam, typ, rng.randrange(turns), s, e, seq=i))
    return out


def _mutate(rng, gold):
    out = []
    for a in gold:
        r = rng.random()
        if r < 0.15:
            continue
        if r < 0.3:
            out.append(Annotation(a.family, a.type, a.turn, max(0, a.start - 1), a.end, seq=a.seq))
        elif r < 0.45:
            out.append(Annotation(a.family, "loc" if a.type != "loc" else "loc.admi", a.turn, a.start, a.end, seq=a.seq))
        else:
            out.append(a)
    for a in _random_annotations(rng, rng.randint(0, 3)):
        out.append(a)
    return out


def test_mutations_against_oracle():
    rng = random.Random(5)
    for _ in range(300):
        gold = _random_annotations(rng, rng.randint(0, 8))
        system = _mutate(rng, gold)
        bt = rng.random() < 0.5
        got = score_annotations(gold, system, bt)
        for lv in LEVELS:
            assert (got[lv].tp, got[lv].fp, got[lv].fn) == exhaustive_counts(gold, system, lv, bt)


def test_identical_sets_score_perfectly():
    rng = random.Random(6)
    for _ in range(50):
        gold = _random_annotations(rng, rng.randint(0, 8))
        for c in score_annotations(gold, gold).values():
            assert c.fp == c.fn == 0


def test_swapping_gold_and_system_swaps_precision_and_recall():
    rng = random.Random(8)
    for _ in range(100):
        a = _random_annotations(rng, rng.randint(0, 8))
        b = _random_annotations(rng, rng.randint(0, 8))
        ab, ba = score_annotations(a, b), score_annotations(b, a)
        for lv in LEVELS:
            assert ab[lv].precision == ba[lv].recall
            assert ab[lv].tp == ba[lv].tp


def test_adding_a_correct_annotation_never_lowers_recall():
    rng = random.Random(9)
    for _ in range(100):
        gold = _random_annotations(rng, rng.randint(1, 8))
        system = _mutate(rng, gold)
        missing = [g for g in gold if g not in system]
        if not missing:
            continue
        before = score_annotations(gold, system)
        after = score_annotations(gold, system + [missing[0]])
        for lv in LEVELS:
            assert after[lv].recall >= before[lv].recall


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_gold_against_itself(name):
    report = score([gold_doc(name)], [gold_doc(name)])
    assert all(c.precision == c.recall == 1.0 for c in report.levels.values())


def test_score_report(ne_cascade, de_cascade):
    golds = [gold_doc(n) for n in FIXTURE_NAMES]
    systems = [run_cascade(ne_cascade + de_cascade, raw_doc(n)) for n in FIXTURE_NAMES]
    report = score(golds, systems)
    assert report.files == len(FIXTURE_NAMES)
    assert report["entity-bracket"].tp == report.gold_entities
    text = report.to_text()
    assert "Entity brackets" in text and "100.0%" in text
    assert report.to_dict()["levels"]["designating-entity"]["recall"] == 1.0
    warn = sparsity_warning(report)
    assert warn and "Entities" in warn
    assert sparsity_warning(report, threshold=1) is None


def test_score_rejects_different_text():
    a = parse_annotated(doc_xml("un deux"))
    b = parse_annotated(doc_xml("un trois"))
    with pytest.raises(EvalError, match="differ"):
        score([a], [b])
    with pytest.raises(EvalError):
        score([a], [])


# ---------------------------------------------------------------------------
# split


def test_split_two_files():
    assert len(split_corpus([("a", 100), ("b", 90)], 0.5).eval) == 1
    res = split_corpus([("a", 100), ("b", 5)], 0.051)
    assert (len(res.work), len(res.eval)) == (1, 1)
    assert res.eval == ("b",)


def test_split_is_deterministic_and_seeded():
    files = [(f"f{i:02d}", 1000 + 37 * i) for i in range(40)]
    a = split_corpus(files, 0.1, seed=3)
    assert a == split_corpus(list(reversed(files)), 0.1, seed=3)
    assert set(a.work) | set(a.eval) == {n for n, _ in files}
    assert not set(a.work) & set(a.eval)


def test_split_matches_exhaustive_oracle():
    rng = random.Random(12)
    for _ in range(40):
        sizes = [rng.randint(1, 500) for _ in range(rng.randint(2, 12))]
        files = [(f"f{i}", s) for i, s in enumerate(sizes)]
        frac = rng.choice([0.051, 0.1, 0.25, 0.5])
        basis = rng.choice(["work", "total"])
        res = split_corpus(files, frac, seed=rng.randrange(5), basis=basis)
        best, subsets = best_split_subsets(sizes, frac, basis)
        chosen = {int(n[1:]) for n in res.eval}
        assert chosen in subsets, (sizes, frac, basis)


def test_split_fraction_reported():
    res = split_corpus([("a", 1000), ("b", 100)], 0.1)
    assert res.fraction == pytest.approx(0.1)
    assert split_corpus([("a", 1000), ("b", 100)], 0.1, basis="total").basis == "total"


def test_split_from_paths(tmp_path):
    for i, n in enumerate([300, 10, 400]):
        (tmp_path / f"{i}.trs").write_bytes(b"x" * n)
    res = split_corpus(sorted(tmp_path.iterdir()), 0.03)
    assert [p.endswith("1.trs") for p in res.eval] == [True]


@pytest.mark.parametrize(
    "files,kw",
    [
        ([("a", 1)], {}),
        ([("a", 1), ("a", 2)], {}),
        ([("a", 1), ("b", 2)], {"basis": "bytes"}),
    ],
)
def test_split_errors(files, kw):
    with pytest.raises(ValueError):
        split_corpus(files, 0.051, **kw)


@pytest.mark.parametrize("fraction", [0, 1, -0.5])
def test_split_fraction_bounds(fraction):
    with pytest.raises(ValueError):
        split_corpus([("a", 1), ("b", 2)], fraction)


def test_split_zero_sizes():
    res = split_corpus([("a", 0), ("b", 0), ("c", 0)], 0.5)
    assert len(res.eval) == 1 and len(res.work) == 2
