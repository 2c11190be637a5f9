"""Token streams seen by rules, predicate evaluation, and the reference interpreter.

The interpreter enumerates every way a rule can match by plain backtracking
over the pattern tree. It is deliberately naive: compiled transducers are
checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .grammar import (
    Alt,
    AnyWord,
    Category,
    Emit,
    Grammar,
    Literal,
    Node,
    Opt,
    Repeat,
    Rule,
    Seq,
    TagSpan,
    Upper,
)
from .lexicon import Lexicon
from .transcript import Token
from .typology import type_matches

__all__ = [
    "MatchStream",
    "advances",
    "rule_guard_ok",
    "Emission",
    "Match",
    "spans_from_emissions",
    "interpret_rule",
    "interpret_scan",
    "DEFAULT_MAX_REPEAT",
]

DEFAULT_MAX_REPEAT = 8

# ("open", family, type) | ("close", family, type), each at a unit position.
Emission = tuple


@dataclass
class MatchStream:
    """The units a pass scans over one segment (or turn).

    A unit is either a free token or a whole existing annotation (kind
    ``"annotation"``, empty surface), so earlier tags are opaque to token
    predicates. Transparent tokens are left out. Unit ``i`` covers turn tokens
    ``unit_tok[i]:unit_end[i]``. ``spans`` lists the annotations usable by tag
    predicates as ``(start_unit, end_unit, family, type)``.
    """

    units: list[Token]
    unit_tok: list[int]
    lexicon: Lexicon
    spans: list[tuple[int, int, str, str]] = field(default_factory=list)
    turn: int = 0
    turn_start_unit: int | None = None
    prev_turn: list[Token] | None = None
    unit_end: list[int] | None = None

    def __post_init__(self) -> None:
        if self.unit_end is None:
            self.unit_end = [t + 1 for t in self.unit_tok]
        self.surfaces = [u.surface for u in self.units]
        self.lowered = [s.lower() for s in self.surfaces]
        by_start: dict[int, list[tuple[int, str, str]]] = {}
        for s, e, fam, typ in self.spans:
            by_start.setdefault(s, []).append((e, fam, typ))
        for v in by_start.values():
            v.sort(key=lambda x: -x[0])
        self.spans_at = by_start

    def __len__(self) -> int:
        return len(self.units)


def advances(node: Node, stream: MatchStream, p: int) -> list[int]:
    """How many units primitive ``node`` can consume at ``p``; longest first, no repeats."""
    n = len(stream.units)
    if p >= n:
        return []
    unit = stream.units[p]
    if isinstance(node, Literal):
        if not unit.is_text:
            return []
        if node.case_sensitive:
            return [1] if stream.surfaces[p] == node.word else []
        return [1] if stream.lowered[p] == node.word.lower() else []
    if isinstance(node, AnyWord):
        return [1] if unit.is_word else []
    if isinstance(node, Upper):
        s = stream.surfaces[p]
        return [1] if unit.is_word and s[:1].isupper() else []
    if isinstance(node, Category):
        return stream.lexicon.match_lengths(node.name, stream.surfaces, p)
    if isinstance(node, TagSpan):
        out: list[int] = []
        for e, fam, typ in stream.spans_at.get(p, ()):
            if fam == node.family and type_matches(node.pattern, typ) and (e - p) not in out:
                out.append(e - p)
        return out
    raise TypeError(f"not a primitive: {node!r}")


def rule_guard_ok(rule: Rule, stream: MatchStream, p: int) -> bool:
    anchor = rule.option("anchor")
    if anchor == "turn_start" and p != stream.turn_start_unit:
        return False
    cat = rule.option("prev_turn")
    if cat is not None:
        return prev_turn_has(stream, cat)
    return True


def prev_turn_has(stream: MatchStream, category: str) -> bool:
    cache = stream.__dict__.setdefault("_prev_cache", {})
    if category not in cache:
        words = [t.surface for t in (stream.prev_turn or []) if t.is_text]
        cache[category] = any(
            stream.lexicon.match_lengths(category, words, i) for i in range(len(words))
        )
    return cache[category]


@dataclass(frozen=True)
class Match:
    """One accepted match of a pass: units ``start:end`` by rule ``rule``."""

    start: int
    end: int
    rule: int
    emissions: tuple[tuple[Emission, int], ...]


def spans_from_emissions(emissions: Sequence[tuple[Emission, int]]) -> list[tuple[str, str, int, int]]:
    """Turn balanced open/close emissions into ``(family, type, start, end)`` in open order.

    Empty spans are dropped.
    """
    stack: list[int] = []
    out: list[list] = []
    for action, pos in emissions:
        if action[0] == "open":
            stack.append(len(out))
            out.append([action[1], action[2], pos, None])
        else:
            out[stack.pop()][3] = pos
    if stack:
        raise ValueError("unbalanced emissions")
    return [(f, t, s, e) for f, t, s, e in out if e > s]


# ---------------------------------------------------------------------------
# Reference interpreter


def _enum(node: Node, stream: MatchStream, p: int, max_repeat: int) -> Iterator[tuple[int, tuple]]:
    """All (end, emissions) for ``node`` at ``p``, in backtracking order."""
    if isinstance(node, (Literal, Category, TagSpan, AnyWord, Upper)):
        for k in advances(node, stream, p):
            yield p + k, ()
    elif isinstance(node, Seq):
        yield from _enum_seq(node.items, 0, stream, p, max_repeat)
    elif isinstance(node, Alt):
        for opt in node.options:
            yield from _enum(opt, stream, p, max_repeat)
    elif isinstance(node, Opt):
        yield from _enum(node.child, stream, p, max_repeat)
        yield p, ()
    elif isinstance(node, Repeat):
        hi = max_repeat if node.max is None else node.max
        yield from _enum_repeat(node.child, node.min, hi, 0, stream, p, max_repeat)
    elif isinstance(node, Emit):
        opened = ((("open", node.family, node.type), p),)
        for end, em in _enum(node.child, stream, p, max_repeat):
            yield end, opened + em + ((("close", node.family, node.type), end),)
    else:
        raise TypeError(node)


def _enum_seq(items: tuple, i: int, stream: MatchStream, p: int, max_repeat: int):
    if i == len(items):
        yield p, ()
        return
    for mid, em1 in _enum(items[i], stream, p, max_repeat):
        for end, em2 in _enum_seq(items, i + 1, stream, mid, max_repeat):
            yield end, em1 + em2


def _enum_repeat(child: Node, lo: int, hi: int, count: int, stream: MatchStream, p: int, max_repeat: int):
    if count < hi:
        for mid, em1 in _enum(child, stream, p, max_repeat):
            for end, em2 in _enum_repeat(child, lo, hi, count + 1, stream, mid, max_repeat):
                yield end, em1 + em2
    if count >= lo:
        yield p, ()


def interpret_rule(
    rule: Rule, stream: MatchStream, start: int, max_repeat: int = DEFAULT_MAX_REPEAT
) -> list[tuple[int, tuple]]:
    """Every match of ``rule`` at ``start`` as ``(length, emissions)``, longest first.

    Matches of equal length keep backtracking order, so the first entry of each
    length is the one a pass would use.
    """
    if not rule_guard_ok(rule, stream, start):
        return []
    found = [(end - start, em) for end, em in _enum(rule.pattern, stream, start, max_repeat)]
    found.sort(key=lambda m: -m[0])
    return found


def interpret_scan(grammar: Grammar, stream: MatchStream, max_repeat: int = DEFAULT_MAX_REPEAT) -> list[Match]:
    """Leftmost-longest scan of ``stream`` using the interpreter; ties go to the earlier rule."""
    out: list[Match] = []
    p = 0
    n = len(stream)
    while p < n:
        best: Match | None = None
        for r, rule in enumerate(grammar.rules):
            found = interpret_rule(rule, stream, p, max_repeat)
            if found and found[0][0] > 0 and (best is None or found[0][0] > best.end - p):
                best = Match(p, p + found[0][0], r, found[0][1])
        if best is None:
            p += 1
        else:
            out.append(best)
            p = best.end
    return out
