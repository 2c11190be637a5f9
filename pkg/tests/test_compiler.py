import json
import os
import random
import subprocess
import sys

import pytest

from gen import random_grammar, random_lexicon, random_stream
from transcascade import _kernel
from transcascade.compiler import ACCEPT, CompileError, Transducer, compile_grammar
from transcascade.grammar import parse_grammar
from transcascade.lexicon import parse_lexicon
from transcascade.matching import MatchStream, interpret_scan
from transcascade.transcript import tokenize

LEX = parse_lexicon("musicien\tProf\nWilly\tFirst\tcs\nWilly DeVille\tArtist\tcs\n")


def stream(text, spans=(), lexicon=LEX):
    toks = tokenize(text)
    return MatchStream(toks, list(range(len(toks))), lexicon, list(spans), 0, 0, [])


def test_compile_and_scan():
    g = parse_grammar('m := "le" <Prof> {NE:pers.hum <First>? <UPPER> }\n')
    t = compile_grammar(g, LEX)
    (m,) = t.scan(stream("Le musicien Willy DeVille joue"))
    assert (m.start, m.end, m.rule) == (0, 4, 0)
    assert m.emissions == ((("open", "NE", "pers.hum"), 2), (("close", "NE", "pers.hum"), 4))


def test_leftmost_longest_and_rule_ties():
    g = parse_grammar('a := "x" "y"\nb := "x" "y" "z"\nc := "x" "y"\n')
    t = compile_grammar(g)
    assert [(m.start, m.end, m.rule) for m in t.scan(stream("x y z x y"))] == [(0, 3, 1), (3, 5, 0)]


def test_no_overlapping_matches():
    g = parse_grammar('r := "a" "a"\n')
    t = compile_grammar(g)
    assert [(m.start, m.end) for m in t.scan(stream("a a a a a"))] == [(0, 2), (2, 4)]


def test_repeat_bound_enforced():
    g = parse_grammar('r := "a"{1,20}\n')
    with pytest.raises(CompileError, match="limit"):
        compile_grammar(g, max_repeat=8)
    compile_grammar(g, max_repeat=20)


def test_unknown_category_rejected():
    g = parse_grammar("r := <Nope>\n")
    with pytest.raises(CompileError, match="Nope"):
        compile_grammar(g, LEX)


def test_epsilon_free():
    g = parse_grammar('r := ("a" | "b"?) "c"+ {NE:loc <AnyWord> }\n')
    t = compile_grammar(g)
    for arcs in t.arcs:
        for pred, target, guard, acts in arcs:
            assert pred == ACCEPT or 0 <= pred < len(t.predicates)
    assert t.accepting
    assert t.n_transitions > 0


def test_persistence_round_trip():
    rng = random.Random(7)
    for _ in range(20):
        lex = random_lexicon(rng)
        g = random_grammar(rng)
        t = compile_grammar(g, lex, max_repeat=4)
        back = Transducer.from_dict(json.loads(t.dumps()))
        assert back.grammar == t.grammar
        assert back.arcs == t.arcs
        for _ in range(10):
            s = random_stream(rng, lex)
            assert back.scan(s) == t.scan(s)


@pytest.mark.parametrize("backend", _kernel.available())
def test_backends_match_interpreter(backend):
    for seed in range(60):
        rng = random.Random(seed)
        lex = random_lexicon(rng)
        g = random_grammar(rng)
        t = compile_grammar(g, lex, max_repeat=4)
        for _ in range(20):
            s = random_stream(rng, lex)
            assert t.scan(s, backend) == interpret_scan(g, s, 4)


def test_kernel_selection():
    assert _kernel.get("python").BACKEND == "python"
    assert _kernel.default.BACKEND in _kernel.available()
    with pytest.raises(ValueError):
        _kernel.get("fortran")


def test_max_ends_agree_between_backends():
    if "cython" not in _kernel.available():
        pytest.skip("extension not built")
    g = parse_grammar('r := <AnyWord>+ "b"\ns := "a"\n')
    t = compile_grammar(g, max_repeat=4)
    s = stream("a b a a b")
    assert t.scan(s, "python") == t.scan(s, "cython")


def test_pure_python_env_forces_fallback():
    code = "from transcascade import _kernel; print(_kernel.BACKEND)"
    env = dict(os.environ, TRANSCASCADE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
