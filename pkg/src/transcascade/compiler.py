"""Compile grammars to token-predicate transducers and run them over streams.

Compilation is Thompson construction over the pattern tree (bounded
repetition is unrolled, so the graph is acyclic) followed by epsilon removal.
The epsilon-free transducer has, per state, an ordered list of arcs: consuming
arcs labeled by a predicate, and accepting arcs. Both carry the emit actions
collected on the removed epsilon paths. Arc order encodes backtracking
priority, so the first path to a given end is the same one the interpreter
would find first.
"""

from __future__ import annotations

import json
from array import array
from dataclasses import dataclass, field

from . import _kernel
from .grammar import (
    Alt,
    AnyWord,
    Category,
    Emit,
    Grammar,
    GrammarError,
    Literal,
    Node,
    Opt,
    Repeat,
    Rule,
    Seq,
    TagSpan,
    Upper,
    parse_grammar,
    print_grammar,
)
from .lexicon import Lexicon, parse_lexicon
from .matching import DEFAULT_MAX_REPEAT, Match, MatchStream, advances, rule_guard_ok

__all__ = ["CompileError", "Transducer", "compile_grammar", "ACCEPT"]

ACCEPT = -1


class CompileError(GrammarError):
    pass


# ---------------------------------------------------------------------------
# Thompson construction


class _Nfa:
    def __init__(self) -> None:
        # per state: list of ("eps", target, action|None) or ("cons", pred, target)
        self.arcs: list[list[tuple]] = []
        self.preds: list[Node] = []
        self._pred_ids: dict[Node, int] = {}

    def state(self) -> int:
        self.arcs.append([])
        return len(self.arcs) - 1

    def eps(self, a: int, b: int, action: tuple | None = None) -> None:
        self.arcs[a].append(("eps", b, action))

    def cons(self, a: int, node: Node, b: int) -> None:
        k = self._pred_ids.get(node)
        if k is None:
            k = self._pred_ids[node] = len(self.preds)
            self.preds.append(node)
        self.arcs[a].append(("cons", k, b))


def _build(nfa: _Nfa, node: Node, max_repeat: int) -> tuple[int, int]:
    if isinstance(node, (Literal, Category, TagSpan, AnyWord, Upper)):
        s, t = nfa.state(), nfa.state()
        nfa.cons(s, node, t)
        return s, t
    if isinstance(node, Seq):
        s, cur = None, None
        for item in node.items:
            a, b = _build(nfa, item, max_repeat)
            if s is None:
                s = a
            else:
                nfa.eps(cur, a)
            cur = b
        return s, cur
    if isinstance(node, Alt):
        s, t = nfa.state(), nfa.state()
        for opt in node.options:
            a, b = _build(nfa, opt, max_repeat)
            nfa.eps(s, a)
            nfa.eps(b, t)
        return s, t
    if isinstance(node, Opt):
        s, t = nfa.state(), nfa.state()
        a, b = _build(nfa, node.child, max_repeat)
        nfa.eps(s, a)
        nfa.eps(s, t)
        nfa.eps(b, t)
        return s, t
    if isinstance(node, Repeat):
        hi = max_repeat if node.max is None else node.max
        if hi > max_repeat or node.min > max_repeat:
            raise CompileError(f"repetition bound {hi} exceeds the configured limit {max_repeat}")
        s = cur = nfa.state()
        for _ in range(node.min):
            a, b = _build(nfa, node.child, max_repeat)
            nfa.eps(cur, a)
            cur = b
        t = nfa.state()
        for _ in range(hi - node.min):
            a, b = _build(nfa, node.child, max_repeat)
            nfa.eps(cur, a)
            nfa.eps(cur, t)
            cur = b
        nfa.eps(cur, t)
        return s, t
    if isinstance(node, Emit):
        s, t = nfa.state(), nfa.state()
        a, b = _build(nfa, node.child, max_repeat)
        nfa.eps(s, a, ("open", node.family, node.type))
        nfa.eps(b, t, ("close", node.family, node.type))
        return s, t
    raise TypeError(node)


# ---------------------------------------------------------------------------
# Transducer


@dataclass
class Transducer:
    """Epsilon-free token transducer for a whole grammar.

    ``arcs[q]`` lists ``(pred, target, guard, actions)`` in priority order;
    ``pred == ACCEPT`` marks an accepting arc. ``guard`` is a rule index whose
    options must hold at the match start, or -1. State 0 is the start state.
    """

    grammar: Grammar
    predicates: list[Node]
    arcs: list[list[tuple[int, int, int, tuple]]]
    max_repeat: int = DEFAULT_MAX_REPEAT
    lexicon: Lexicon = field(default_factory=Lexicon)
    _flat: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_states(self) -> int:
        return len(self.arcs)

    @property
    def accepting(self) -> list[int]:
        return [q for q, arcs in enumerate(self.arcs) if any(a[0] == ACCEPT for a in arcs)]

    @property
    def n_transitions(self) -> int:
        return sum(1 for arcs in self.arcs for a in arcs if a[0] != ACCEPT)

    def flat(self) -> tuple:
        if self._flat is None:
            ptr = array("i", [0])
            pred, target, guard = array("i"), array("i"), array("i")
            actions: list[tuple] = []
            for arcs in self.arcs:
                for k, t, g, acts in arcs:
                    pred.append(k)
                    target.append(t)
                    guard.append(g)
                    actions.append(acts)
                ptr.append(len(pred))
            self._flat = (ptr, pred, target, guard, actions)
        return self._flat

    # -- running

    def guarded_rules(self) -> list[int]:
        return [i for i, r in enumerate(self.grammar.rules) if r.options]

    def scan(self, stream: MatchStream, backend: str | None = None) -> list[Match]:
        """Leftmost-longest scan of ``stream``; earlier rules win ties."""
        n = len(stream)
        if n == 0 or not self.arcs:
            return []
        ptr, pred, target, guard, actions = self.flat()
        adv_ptr = array("i", [0])
        adv_len = array("i")
        for node in self.predicates:
            for p in range(n + 1):
                adv_len.extend(advances(node, stream, p))
                adv_ptr.append(len(adv_len))
        n_guards = len(self.grammar.rules)
        guard_ok = array("b", bytes(n_guards * (n + 1)))
        for r in self.guarded_rules():
            rule = self.grammar.rules[r]
            for p in range(n):
                guard_ok[r * (n + 1) + p] = rule_guard_ok(rule, stream, p)
        for r in range(n_guards):
            if not self.grammar.rules[r].options:
                for p in range(n + 1):
                    guard_ok[r * (n + 1) + p] = 1
        kernel = _kernel.get(backend)
        raw = kernel.scan(self.n_states, ptr, pred, target, guard, n, adv_ptr, adv_len, guard_ok)
        out = []
        for start, end, path in raw:
            emissions: list = []
            rule = -1
            for arc, pos in path:
                for act in actions[arc]:
                    if act[0] == "rule":
                        rule = act[1]
                    else:
                        emissions.append((act, pos))
            out.append(Match(start, end, rule, tuple(emissions)))
        return out

    # -- persistence

    def to_dict(self) -> dict:
        return {
            "grammar": print_grammar(self.grammar),
            "name": self.grammar.name,
            "max_repeat": self.max_repeat,
            "lexicon": self.lexicon.dump(),
            "n_states": self.n_states,
            "predicates": [_pred_to_json(p) for p in self.predicates],
            "arcs": [[[k, t, g, [list(a) for a in acts]] for k, t, g, acts in arcs] for arcs in self.arcs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Transducer":
        g = parse_grammar(d["grammar"], source=d.get("name", ""))
        g = Grammar(g.rules, g.options, name=d.get("name", ""))
        arcs = [[(k, t, gd, tuple(tuple(a) for a in acts)) for k, t, gd, acts in st] for st in d["arcs"]]
        lex = parse_lexicon(d.get("lexicon", ""))
        return cls(g, [_pred_from_json(p) for p in d["predicates"]], arcs, d["max_repeat"], lex)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


def _pred_to_json(node: Node) -> list:
    if isinstance(node, Literal):
        return ["lit", node.word, node.case_sensitive]
    if isinstance(node, Category):
        return ["cat", node.name]
    if isinstance(node, TagSpan):
        return ["tag", node.family, node.pattern]
    if isinstance(node, AnyWord):
        return ["any"]
    if isinstance(node, Upper):
        return ["upper"]
    raise TypeError(node)


def _pred_from_json(d: list) -> Node:
    kind = d[0]
    if kind == "lit":
        return Literal(d[1], bool(d[2]))
    if kind == "cat":
        return Category(d[1])
    if kind == "tag":
        return TagSpan(d[1], d[2])
    if kind == "any":
        return AnyWord()
    if kind == "upper":
        return Upper()
    raise ValueError(f"bad predicate record {d!r}")


def compile_grammar(
    grammar: Grammar, lexicon: Lexicon | None = None, max_repeat: int = DEFAULT_MAX_REPEAT
) -> Transducer:
    """Compile ``grammar`` to an epsilon-free :class:`Transducer`."""
    if lexicon is not None:
        missing = sorted(c for c in grammar.categories if c not in lexicon)
        if missing:
            raise CompileError(f"{grammar.name}: unknown categories {missing}")
    nfa = _Nfa()
    start = nfa.state()
    final = nfa.state()
    for r, rule in enumerate(grammar.rules):
        a, b = _build(nfa, rule.pattern, max_repeat)
        nfa.arcs[start].append(("eps", a, ("rule", r), r if rule.options else -1))
        nfa.eps(b, final)

    # epsilon removal; keep the first epsilon path reaching each state
    important = [start]
    index = {start: 0}
    out_arcs: list[list[tuple[int, int, int, tuple]]] = []
    i = 0
    while i < len(important):
        q = important[i]
        i += 1
        arcs: list[tuple[int, int, int, tuple]] = []
        visited: set[tuple[int, int]] = set()
        accepted: set[int] = set()

        def dfs(s: int, acts: tuple, guard: int) -> None:
            if (s, guard) in visited:
                return
            visited.add((s, guard))
            if s == final:
                if guard not in accepted:
                    accepted.add(guard)
                    arcs.append((ACCEPT, -1, guard, acts))
                return
            for arc in nfa.arcs[s]:
                if arc[0] == "eps":
                    g = arc[3] if len(arc) > 3 and arc[3] >= 0 else guard
                    dfs(arc[1], acts + ((arc[2],) if arc[2] else ()), g)
                else:
                    _, k, tgt = arc
                    if tgt not in index:
                        index[tgt] = len(important)
                        important.append(tgt)
                    arcs.append((k, index[tgt], guard, acts))

        dfs(q, (), -1)
        out_arcs.append(arcs)
    if lexicon is None:
        lexicon = Lexicon()
        for c in sorted(grammar.categories):
            lexicon.declare(c)
    else:
        lexicon = _restrict(lexicon, grammar.categories)
    return Transducer(grammar, nfa.preds, out_arcs, max_repeat, lexicon)


def _restrict(lexicon: Lexicon, categories: set[str]) -> Lexicon:
    out = Lexicon()
    for c in sorted(categories):
        out.declare(c)
        for e in lexicon.entries(c):
            out.add(c, e.words, e.case_sensitive)
    return out
