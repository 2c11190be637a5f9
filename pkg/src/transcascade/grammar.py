"""Local-grammar rule language.

A grammar file holds ``option`` lines and rules, one rule per line (a rule
may continue over several lines while brackets are open)::

    # comment
    option scope = segment
    musician := ("le" | "la") <MusicProfession> {NE:pers.hum <Firstname>? <UPPER> }
    arrival [prev_turn=ArrivalQuestion, anchor=turn_start] := {DE:pers.speaker <NE:time.*> }

Pattern syntax:

=====================  ==========================================================
``"word"``             one token, case-insensitive; ``"Word"!`` is case-sensitive
``<Category>``         any entry of a lexicon category (multiword entries allowed)
``<NE:loc.admi>``      an existing annotation as one unit; ``loc.*`` also matches
                       subtypes, ``<DE:*>`` any DE annotation
``<AnyWord>``          any word token
``<UPPER>``            a word with an uppercase initial
``a b``                sequence
``a | b``              alternation, tried left to right
``x?``  ``<X?>``       optional (tried present first)
``x*`` ``x+``          repetition up to the configured bound
``x{m,n}``             bounded repetition, ``x{m}`` and ``x{m,}`` too
``{NE:type ... }``     wrap what the inner pattern matches in an annotation
=====================  ==========================================================

Grammar options: ``scope`` (``segment`` or ``turn``) and ``events``
(``transparent`` or ``opaque``). Rule options: ``prev_turn=<Category>`` (the
preceding turn must contain an entry of the category) and
``anchor=turn_start`` (the match must start at the first token of the turn).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .lexicon import IDENT_RE, RESERVED_NAMES, Lexicon
from .transcript import tokenize
from .typology import Registry, TypologyError, default_registry

__all__ = [
    "GrammarError",
    "GrammarSyntaxError",
    "Literal",
    "Category",
    "TagSpan",
    "AnyWord",
    "Upper",
    "Seq",
    "Alt",
    "Opt",
    "Repeat",
    "Emit",
    "Rule",
    "Grammar",
    "parse_grammar",
    "print_grammar",
    "print_pattern",
    "nullable",
    "GRAMMAR_OPTIONS",
    "RULE_OPTIONS",
]


class GrammarError(ValueError):
    pass


class GrammarSyntaxError(GrammarError):
    def __init__(self, message: str, line: int, column: int, source: str = ""):
        prefix = f"{source}:" if source else ""
        super().__init__(f"{prefix}{line}:{column}: {message}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Pattern tree


@dataclass(frozen=True)
class Literal:
    word: str
    case_sensitive: bool = False


@dataclass(frozen=True)
class Category:
    name: str


@dataclass(frozen=True)
class TagSpan:
    family: str
    pattern: str


@dataclass(frozen=True)
class AnyWord:
    pass


@dataclass(frozen=True)
class Upper:
    pass


@dataclass(frozen=True)
class Seq:
    items: tuple


@dataclass(frozen=True)
class Alt:
    options: tuple


@dataclass(frozen=True)
class Opt:
    child: "Node"


@dataclass(frozen=True)
class Repeat:
    child: "Node"
    min: int
    max: int | None


@dataclass(frozen=True)
class Emit:
    family: str
    type: str
    child: "Node"


Node = Union[Literal, Category, TagSpan, AnyWord, Upper, Seq, Alt, Opt, Repeat, Emit]
PRIMITIVES = (Literal, Category, TagSpan, AnyWord, Upper)


def children(node: Node) -> tuple:
    if isinstance(node, Seq):
        return node.items
    if isinstance(node, Alt):
        return node.options
    if isinstance(node, (Opt, Repeat, Emit)):
        return (node.child,)
    return ()


def walk(node: Node) -> Iterator[Node]:
    yield node
    for c in children(node):
        yield from walk(c)


def nullable(node: Node) -> bool:
    """Whether ``node`` can match the empty token sequence."""
    if isinstance(node, PRIMITIVES):
        return False
    if isinstance(node, Seq):
        return all(nullable(c) for c in node.items)
    if isinstance(node, Alt):
        return any(nullable(c) for c in node.options)
    if isinstance(node, Opt):
        return True
    if isinstance(node, Repeat):
        return node.min == 0 or nullable(node.child)
    if isinstance(node, Emit):
        return nullable(node.child)
    raise TypeError(node)


GRAMMAR_OPTIONS = {"scope": ("segment", "turn"), "events": ("transparent", "opaque")}
RULE_OPTIONS = ("prev_turn", "anchor")


@dataclass(frozen=True)
class Rule:
    name: str
    pattern: Node
    options: tuple[tuple[str, str], ...] = ()

    def option(self, key: str, default: str | None = None) -> str | None:
        return dict(self.options).get(key, default)

    @property
    def uses_tagspan(self) -> bool:
        return any(isinstance(n, TagSpan) for n in walk(self.pattern))


@dataclass(frozen=True)
class Grammar:
    rules: tuple[Rule, ...] = ()
    options: tuple[tuple[str, str], ...] = ()
    name: str = field(default="", compare=False)

    def option(self, key: str) -> str:
        return dict(self.options).get(key, GRAMMAR_OPTIONS[key][0])

    @property
    def categories(self) -> set[str]:
        out = set()
        for r in self.rules:
            out.update(n.name for n in walk(r.pattern) if isinstance(n, Category))
            if r.option("prev_turn"):
                out.add(r.option("prev_turn"))
        return out

    @property
    def tags(self) -> set[tuple[str, str]]:
        return {(n.family, n.type) for r in self.rules for n in walk(r.pattern) if isinstance(n, Emit)}

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<emit>\{\s*(?P<efam>NE|DE|EN):(?P<etype>[A-Za-z0-9_.*]+))
  | (?P<repeat>\{\s*(?P<rmin>\d+)\s*(?P<rcomma>,\s*(?P<rmax>\d*)\s*)?\})
  | (?P<angle><[^<>\s]+>)
  | (?P<assign>:=)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()|?*+}\[\],=!])
    """,
    re.VERBOSE,
)

_OPENERS = {"(": ")", "[": "]"}


@dataclass
class _Tok:
    kind: str
    value: object
    line: int
    col: int


def _lex(text: str, source: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    depth: list[tuple[str, int, int]] = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise GrammarSyntaxError(f"unexpected character {text[pos]!r}", line, col, source)
        kind = m.lastgroup
        if m.group("emit") is not None:
            kind = "emit"
        elif m.group("repeat") is not None:
            kind = "repeat"
        val: object = m.group()
        if kind == "nl":
            if not depth:
                toks.append(_Tok("nl", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind == "string":
            toks.append(_Tok("string", json.loads(m.group()), line, col))
        elif kind == "emit":
            depth.append(("}", line, col))
            fam = "NE" if m.group("efam") == "EN" else m.group("efam")
            toks.append(_Tok("emit", (fam, m.group("etype")), line, col))
        elif kind == "repeat":
            lo = int(m.group("rmin"))
            if m.group("rcomma") is None:
                hi: int | None = lo
            else:
                hi = int(m.group("rmax")) if m.group("rmax") else None
            toks.append(_Tok("repeat", (lo, hi), line, col))
        elif kind == "angle":
            toks.append(_Tok("angle", m.group()[1:-1], line, col))
        elif kind == "punct":
            p = m.group()
            if p in _OPENERS:
                depth.append((_OPENERS[p], line, col))
            elif p in (")", "]", "}"):
                if not depth or depth[-1][0] != p:
                    what = "unbalanced emit close '}'" if p == "}" else f"unbalanced {p!r}"
                    raise GrammarSyntaxError(what, line, col, source)
                depth.pop()
            toks.append(_Tok(p, p, line, col))
        else:
            toks.append(_Tok(kind, val, line, col))
        pos = m.end()
    if depth:
        closer, l, c = depth[-1]
        what = "unbalanced emit: missing '}'" if closer == "}" else f"missing {closer!r}"
        raise GrammarSyntaxError(what, l, c, source)
    toks.append(_Tok("nl", "\n", line, pos - line_start + 1))
    toks.append(_Tok("eof", None, line, pos - line_start + 1))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str, source: str):
        self.toks = _lex(text, source)
        self.i = 0
        self.source = source

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: _Tok | None = None) -> GrammarSyntaxError:
        tok = tok or self.peek()
        return GrammarSyntaxError(msg, tok.line, tok.col, self.source)

    def expect(self, kind: str) -> _Tok:
        t = self.next()
        if t.kind != kind:
            shown = "end of line" if t.kind == "nl" else repr(t.value)
            raise self.error(f"expected {kind!r}, found {shown}", t)
        return t

    def grammar(self) -> tuple[list[tuple[str, str]], list[tuple[Rule, _Tok]]]:
        options: list[tuple[str, str]] = []
        rules: list[tuple[Rule, _Tok]] = []
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind == "nl":
                self.next()
                continue
            if t.kind != "ident":
                raise self.error("expected a rule name or 'option'")
            if t.value == "option" and self.toks[self.i + 1].kind == "ident":
                self.next()
                key = self.expect("ident")
                self.expect("=")
                val = self.expect("ident")
                options.append((str(key.value), str(val.value)))
                self.expect("nl")
                continue
            rules.append((self.rule(), t))
        return options, rules

    def rule(self) -> Rule:
        name = str(self.expect("ident").value)
        opts: list[tuple[str, str]] = []
        if self.peek().kind == "[":
            self.next()
            while True:
                k = self.expect("ident")
                self.expect("=")
                v = self.expect("ident")
                opts.append((str(k.value), str(v.value)))
                if self.peek().kind == ",":
                    self.next()
                    continue
                self.expect("]")
                break
        self.expect("assign")
        pattern = self.alt()
        self.expect("nl")
        return Rule(name, pattern, tuple(opts))

    def alt(self) -> Node:
        options = [self.seq()]
        while self.peek().kind == "|":
            self.next()
            options.append(self.seq())
        return options[0] if len(options) == 1 else Alt(tuple(options))

    def seq(self) -> Node:
        items = []
        while self.peek().kind in ("string", "angle", "(", "emit"):
            items.append(self.postfix())
        if not items:
            raise self.error("empty pattern")
        return items[0] if len(items) == 1 else Seq(tuple(items))

    def postfix(self) -> Node:
        node = self.atom()
        while True:
            k = self.peek().kind
            if k == "?":
                node = Opt(node)
            elif k == "*":
                node = Repeat(node, 0, None)
            elif k == "+":
                node = Repeat(node, 1, None)
            elif k == "repeat":
                lo, hi = self.peek().value
                if hi is not None and hi < lo:
                    raise self.error(f"repeat bounds {{{lo},{hi}}} are reversed")
                if hi == 0:
                    raise self.error("repeat with maximum 0")
                node = Repeat(node, lo, hi)
            else:
                return node
            self.next()

    def atom(self) -> Node:
        t = self.next()
        if t.kind == "string":
            word = str(t.value)
            toks = tokenize(word)
            if len(toks) != 1 or toks[0].surface != word:
                raise self.error(f"literal {word!r} must be exactly one token", t)
            cs = False
            if self.peek().kind == "!":
                self.next()
                cs = True
            return Literal(word, cs)
        if t.kind == "angle":
            return self.angle(str(t.value), t)
        if t.kind == "(":
            node = self.alt()
            self.expect(")")
            return node
        if t.kind == "emit":
            fam, typ = t.value
            if "*" in typ:
                raise self.error(f"emitted type {typ!r} cannot contain a wildcard", t)
            node = self.alt()
            self.expect("}")
            return Emit(fam, typ, node)
        raise self.error(f"unexpected {t.value!r}", t)

    def angle(self, body: str, t: _Tok) -> Node:
        optional = body.endswith("?")
        if optional:
            body = body[:-1]
        fam, colon, typ = body.partition(":")
        if colon:
            if fam not in ("NE", "DE", "EN"):
                raise self.error(f"unknown tag family {fam!r}", t)
            if not re.fullmatch(r"\*|[A-Za-z0-9_]+(\.[A-Za-z0-9_]+)*(\.\*)?", typ):
                raise self.error(f"bad tag pattern {typ!r}", t)
            node: Node = TagSpan("NE" if fam == "EN" else fam, typ)
        elif body == "AnyWord":
            node = AnyWord()
        elif body == "UPPER":
            node = Upper()
        elif IDENT_RE.match(body) and body not in RESERVED_NAMES:
            node = Category(body)
        else:
            raise self.error(f"bad predicate <{body}>", t)
        return Opt(node) if optional else node


def parse_grammar(
    text: str,
    lexicon: Lexicon | None = None,
    registry: Registry | None = None,
    source: str = "",
) -> Grammar:
    """Parse and validate grammar text.

    When ``lexicon`` is given every referenced category must exist in it.
    Emitted tags and tag patterns are checked against ``registry`` (the
    default NE/DE registry when omitted).
    """
    registry = registry or default_registry()
    p = _Parser(text, source)
    options, rules = p.grammar()
    seen_opts = set()
    for k, v in options:
        if k not in GRAMMAR_OPTIONS:
            raise GrammarError(f"{source}: unknown grammar option {k!r}")
        if v not in GRAMMAR_OPTIONS[k]:
            raise GrammarError(f"{source}: option {k} must be one of {GRAMMAR_OPTIONS[k]}")
        if k in seen_opts:
            raise GrammarError(f"{source}: option {k} set twice")
        seen_opts.add(k)
    names = set()
    for rule, tok in rules:
        where = f"{source}:{tok.line}:{tok.col}"
        if rule.name in names:
            raise GrammarError(f"{where}: duplicate rule {rule.name!r}")
        names.add(rule.name)
        _validate_rule(rule, lexicon, registry, where)
    return Grammar(tuple(r for r, _ in rules), tuple(sorted(options)), name=source)


def _validate_rule(rule: Rule, lexicon: Lexicon | None, registry: Registry, where: str) -> None:
    for k, v in rule.options:
        if k not in RULE_OPTIONS:
            raise GrammarError(f"{where}: unknown rule option {k!r}")
        if k == "anchor" and v != "turn_start":
            raise GrammarError(f"{where}: anchor must be turn_start")
        if k == "prev_turn" and lexicon is not None and v not in lexicon:
            raise GrammarError(f"{where}: unknown category {v!r} in prev_turn")
    if nullable(rule.pattern):
        raise GrammarError(f"{where}: rule {rule.name!r} can match the empty sequence")
    for n in walk(rule.pattern):
        if isinstance(n, Emit):
            try:
                registry.check(n.family, n.type)
            except TypologyError as exc:
                raise GrammarError(f"{where}: rule {rule.name!r}: {exc}") from None
        elif isinstance(n, TagSpan):
            if not registry.family(n.family).accepts_pattern(n.pattern):
                raise GrammarError(f"{where}: rule {rule.name!r}: unknown {n.family} type pattern {n.pattern!r}")
        elif isinstance(n, Category) and lexicon is not None and n.name not in lexicon:
            raise GrammarError(f"{where}: rule {rule.name!r}: unknown category {n.name!r}")


# ---------------------------------------------------------------------------
# Printer


def print_pattern(node: Node) -> str:
    if isinstance(node, Literal):
        return json.dumps(node.word, ensure_ascii=False) + ("!" if node.case_sensitive else "")
    if isinstance(node, Category):
        return f"<{node.name}>"
    if isinstance(node, TagSpan):
        return f"<{node.family}:{node.pattern}>"
    if isinstance(node, AnyWord):
        return "<AnyWord>"
    if isinstance(node, Upper):
        return "<UPPER>"
    if isinstance(node, Seq):
        return " ".join(_wrap(c, (Seq, Alt)) for c in node.items)
    if isinstance(node, Alt):
        return " | ".join(_wrap(c, (Alt,)) for c in node.options)
    if isinstance(node, Opt):
        return _wrap(node.child, (Seq, Alt)) + "?"
    if isinstance(node, Repeat):
        inner = _wrap(node.child, (Seq, Alt))
        if node.max is None:
            if node.min == 0:
                return inner + "*"
            if node.min == 1:
                return inner + "+"
            return inner + f"{{{node.min},}}"
        if node.min == node.max:
            return inner + f"{{{node.min}}}"
        return inner + f"{{{node.min},{node.max}}}"
    if isinstance(node, Emit):
        return f"{{{node.family}:{node.type} {print_pattern(node.child)} }}"
    raise TypeError(node)


def _wrap(node: Node, kinds: tuple) -> str:
    s = print_pattern(node)
    return f"({s})" if isinstance(node, kinds) else s


def print_grammar(g: Grammar) -> str:
    lines = [f"option {k} = {v}" for k, v in g.options]
    for r in g.rules:
        opts = f" [{', '.join(f'{k}={v}' for k, v in r.options)}]" if r.options else ""
        lines.append(f"{r.name}{opts} := {print_pattern(r.pattern)}")
    return "".join(line + "\n" for line in lines)
