import pytest

from transcascade.lexicon import Lexicon, LexiconError, load_lexicon, lookup_longest, merge_all, parse_lexicon
from transcascade.transcript import Token, tokenize

LEX = """# cities
Orléans\tCity\tcs
Pithiviers\tCity\tcs
native de\tOriginCue
ça fait longtemps que vous habitez\tArrivalQuestion
ça fait\tArrivalQuestion
"""


def words(text):
    return [t.surface for t in tokenize(text)]


def test_parse_and_lookup():
    lex = parse_lexicon(LEX)
    assert lex.categories == ["ArrivalQuestion", "City", "OriginCue"]
    assert lex.match_lengths("City", words("Orléans hein"), 0) == [1]
    assert lex.match_lengths("OriginCue", words("je suis native de Pithiviers"), 2) == [2]


def test_all_lengths_longest_first():
    lex = parse_lexicon(LEX)
    toks = words("alors ça fait longtemps que vous habitez euh")
    assert lex.match_lengths("ArrivalQuestion", toks, 1) == [6, 2]
    assert lookup_longest(lex, toks, 1, "ArrivalQuestion") == 6
    assert lookup_longest(lex, toks, 0, "ArrivalQuestion") == 0


def test_case_sensitivity():
    lex = parse_lexicon(LEX)
    assert lex.match_lengths("City", ["orléans"], 0) == []
    assert lex.match_lengths("OriginCue", ["NATIVE", "DE"], 0) == [2]


def test_transparent_tokens_inside_entries():
    lex = parse_lexicon(LEX)
    toks = [Token("native", "word", 0, 0, 6), Token("", "event", 0, 0, 0), Token("de", "word", 0, 0, 2)]
    assert lex.match_lengths("OriginCue", toks, 0) == [3]
    assert lex.match_lengths("OriginCue", toks, 1) == []


def test_unknown_category():
    with pytest.raises(LexiconError):
        Lexicon().match_lengths("Nope", ["a"], 0)


@pytest.mark.parametrize(
    "text,line",
    [("a b\n", 1), ("# c\nx\tCat\tzz\n", 2), ("x\tUPPER\n", 1), ("x\t1bad\n", 1)],
)
def test_errors_carry_line(text, line):
    with pytest.raises(LexiconError) as info:
        parse_lexicon(text, "f.lex")
    assert info.value.line == line
    assert "f.lex" in str(info.value)


def test_merge_and_dump_round_trip(tmp_path):
    a = parse_lexicon(LEX)
    b = parse_lexicon("Paris\tCity\tcs\n")
    m = merge_all([a, b])
    assert len(m) == len(a) + 1
    assert parse_lexicon(m.dump()) == m
    p = tmp_path / "x.lex"
    p.write_text(m.dump(), encoding="utf-8")
    assert load_lexicon(p) == m


def test_elided_entry_is_tokenized():
    lex = parse_lexicon("j'aime\tLike\n")
    assert lex.match_lengths("Like", words("j'aime Orléans"), 0) == [2]
