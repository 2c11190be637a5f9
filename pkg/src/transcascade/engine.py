"""Annotated documents and the cascade engine.

Annotations are kept standoff, as token spans of one turn. Passes scan each
segment (or turn) left to right, take the leftmost-longest match, add its
emitted annotations and resume after it. Annotations added by a pass are
visible to later passes only, and there as single opaque units.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .compiler import Transducer, compile_grammar
from .grammar import Grammar, GrammarError, parse_grammar
from .lexicon import Lexicon, load_lexicon
from .matching import DEFAULT_MAX_REPEAT, MatchStream, interpret_scan, spans_from_emissions
from .transcript import (
    Document,
    TagClose,
    TagOpen,
    Text,
    Token,
    TranscriptError,
    parse_transcription,
    serialize,
)
from .typology import Registry, default_registry

__all__ = [
    "Annotation",
    "AnnotatedDocument",
    "parse_annotated",
    "PassError",
    "Cascade",
    "apply_pass",
    "run_cascade",
    "check_nesting",
    "check_de_structure",
    "build_streams",
    "load_manifest",
    "to_standoff",
    "read_standoff",
    "nesting_depths",
]


class PassError(RuntimeError):
    pass


@dataclass(frozen=True)
class Annotation:
    """A tag over tokens ``start:end`` of turn ``turn``.

    ``layer`` and ``seq`` order annotations with identical spans: a higher
    layer (a later pass) encloses a lower one, and within a layer the earlier
    opened one encloses the later.
    """

    family: str
    type: str
    turn: int
    start: int
    end: int
    source: str = ""
    rule: str = ""
    layer: int = 0
    seq: int = 0

    @property
    def key(self) -> tuple:
        return (self.turn, self.start, -self.end, -self.layer, self.seq)

    @property
    def span(self) -> tuple[int, int, int]:
        return (self.turn, self.start, self.end)

    @property
    def label(self) -> tuple[str, str, int, int, int]:
        return (self.family, self.type, self.turn, self.start, self.end)

    def contains(self, other: "Annotation") -> bool:
        """Whether ``self`` encloses ``other`` (equal spans use the layer order)."""
        if self.turn != other.turn or self is other:
            return False
        if self.start <= other.start and other.end <= self.end:
            if (self.start, self.end) != (other.start, other.end):
                return True
            return self.key < other.key
        return False

    def crosses(self, other: "Annotation") -> bool:
        if self.turn != other.turn:
            return False
        a, b = (self, other) if self.start <= other.start else (other, self)
        return a.start < b.start < a.end < b.end


@dataclass(frozen=True)
class AnnotatedDocument:
    document: Document
    annotations: tuple[Annotation, ...] = ()
    provenance: tuple[str, ...] = ()

    @classmethod
    def from_document(cls, doc: Document, registry: Registry | None = None) -> "AnnotatedDocument":
        """Lift inline ``NE``/``EN``/``DE`` markers of ``doc`` into standoff annotations.

        With ``registry`` every marker type must be registered.
        """
        turns, anns = [], []
        seq = 0
        for ti, turn in enumerate(doc.turns):
            items: list = []
            markers: list[tuple[object, tuple[int, int]]] = []
            for it in turn.items:
                if isinstance(it, (TagOpen, TagClose)):
                    if items and isinstance(items[-1], Text):
                        pos = (len(items) - 1, len(items[-1].text))
                    else:
                        pos = (len(items), 0)
                    markers.append((it, pos))
                elif isinstance(it, Text) and items and isinstance(items[-1], Text):
                    items[-1] = Text(items[-1].text + it.text)
                else:
                    items.append(it)
            new_turn = turn.replace_items(items)
            turns.append(new_turn)
            if not markers:
                continue
            from .transcript import _turn_tokens

            toks = _turn_tokens(new_turn, ti)
            starts = [(t.item, t.start) if t.is_text else (t.item, 0) for t in toks]
            ends = [(t.item, t.end) if t.is_text else (t.item, float("inf")) for t in toks]
            stack: list[tuple[TagOpen, int]] = []
            for m, pos in markers:
                for t in toks:
                    if t.is_text and t.item == pos[0] and t.start < pos[1] < t.end:
                        raise TranscriptError(
                            f"{doc.source or '<input>'}: turn {ti}: annotation boundary inside token {t.surface!r}"
                        )
                if isinstance(m, TagOpen):
                    if registry is not None and not registry.accepts(m.family, m.type):
                        raise TranscriptError(f"turn {ti}: unknown {m.family} type {m.type!r}")
                    start = next((i for i, k in enumerate(starts) if k >= pos), len(toks))
                    stack.append((m, start))
                else:
                    if not stack or stack[-1][0].family != m.family:
                        raise TranscriptError(f"turn {ti}: unbalanced annotation markers")
                    opened, start = stack.pop()
                    end = sum(1 for k in ends if k <= pos)
                    if end > start:
                        anns.append(Annotation(opened.family, opened.type, ti, start, end, seq=seq))
                    seq += 1
            if stack:
                raise TranscriptError(f"turn {ti}: unclosed annotation marker")
        # seq was assigned at close time; renumber in open order
        anns.sort(key=lambda a: (a.turn, a.start, -a.end, -a.seq))
        anns = [replace(a, seq=i) for i, a in enumerate(anns)]
        return cls(doc.replace_turns(turns), tuple(sorted(anns, key=lambda a: a.key)))

    @property
    def next_layer(self) -> int:
        return max((a.layer for a in self.annotations), default=0) + 1

    def turn_annotations(self, turn: int) -> list[Annotation]:
        return [a for a in self.annotations if a.turn == turn]

    def to_document(self, ne_element: str = "NE") -> Document:
        """The document with annotations written back as inline markers."""
        doc = self.document
        by_turn: dict[int, list[Annotation]] = {}
        for a in self.annotations:
            by_turn.setdefault(a.turn, []).append(a)
        turns = list(doc.turns)
        for ti, anns in by_turn.items():
            anns.sort(key=lambda a: a.key)
            toks = doc.tokens(ti)
            opens: dict[int, list[Annotation]] = {}
            closes: dict[int, list[Annotation]] = {}
            for a in anns:
                opens.setdefault(a.start, []).append(a)
                closes.setdefault(a.end - 1, []).insert(0, a)

            def name(a: Annotation) -> str:
                return ne_element if a.family == "NE" else a.family

            out: list = []
            ti_tokens: dict[int, list[int]] = {}
            for k, t in enumerate(toks):
                ti_tokens.setdefault(t.item, []).append(k)
            for j, it in enumerate(doc.turns[ti].items):
                ks = ti_tokens.get(j, [])
                if isinstance(it, Text):
                    cursor = 0
                    for k in ks:
                        t = toks[k]
                        out.append(Text(it.text[cursor : t.start]))
                        out.extend(TagOpen(a.family, a.type, name(a)) for a in opens.get(k, ()))
                        out.append(Text(t.surface))
                        out.extend(TagClose(a.family, name(a)) for a in closes.get(k, ()))
                        cursor = t.end
                    out.append(Text(it.text[cursor:]))
                else:
                    for k in ks:
                        out.extend(TagOpen(a.family, a.type, name(a)) for a in opens.get(k, ()))
                    out.append(it)
                    for k in ks:
                        out.extend(TagClose(a.family, name(a)) for a in closes.get(k, ()))
            turns[ti] = doc.turns[ti].replace_items(out)
        return doc.replace_turns(turns)

    def serialize(self, ne_element: str = "NE") -> bytes:
        return serialize(self.to_document(ne_element))

    def with_annotations(self, annotations: Iterable[Annotation], provenance: Sequence[str] = ()) -> "AnnotatedDocument":
        return AnnotatedDocument(
            self.document, tuple(sorted(annotations, key=lambda a: a.key)), self.provenance + tuple(provenance)
        )


def parse_annotated(data: bytes | str, source: str = "", registry: Registry | None = None) -> AnnotatedDocument:
    return AnnotatedDocument.from_document(parse_transcription(data, source), registry)


# ---------------------------------------------------------------------------
# Nesting checks


def check_nesting(adoc: AnnotatedDocument) -> list[tuple[Annotation, Annotation]]:
    """Every pair of crossing annotations; empty when the set is well nested."""
    out = []
    by_turn: dict[int, list[Annotation]] = {}
    for a in adoc.annotations:
        by_turn.setdefault(a.turn, []).append(a)
    for anns in by_turn.values():
        anns.sort(key=lambda a: (a.start, -a.end))
        for i, a in enumerate(anns):
            for b in anns[i + 1 :]:
                if b.start >= a.end:
                    break
                if b.end > a.end:
                    out.append((a, b))
    return out


def check_de_structure(adoc: AnnotatedDocument, registry: Registry | None = None) -> list[tuple[Annotation, Annotation]]:
    """Pairs where a DE attribute encloses a DE person role."""
    de = (registry or default_registry()).de
    anns = [a for a in adoc.annotations if a.family == "DE"]
    return [
        (outer, inner)
        for outer in anns
        for inner in anns
        if outer.contains(inner) and not de.may_contain(outer.type, inner.family, inner.type)
    ]


def nesting_depths(annotations: Sequence[Annotation]) -> dict[Annotation, int]:
    """Depth of each annotation (0 for outermost), assuming a well-nested set."""
    depth: dict[Annotation, int] = {}
    stack: list[Annotation] = []
    for a in sorted(annotations, key=lambda a: a.key):
        while stack and not (stack[-1].turn == a.turn and stack[-1].contains(a)):
            stack.pop()
        depth[a] = len(stack)
        stack.append(a)
    return depth


# ---------------------------------------------------------------------------
# Streams and passes


def _outermost(anns: list[Annotation]) -> list[Annotation]:
    out: list[Annotation] = []
    for a in sorted(anns, key=lambda a: a.key):
        if out and out[-1].start <= a.start and a.end <= out[-1].end:
            continue
        out.append(a)
    return out


def build_streams(
    adoc: AnnotatedDocument,
    turn: int,
    scope: str = "segment",
    events: str = "transparent",
    lexicon: Lexicon | None = None,
) -> list[MatchStream]:
    """Match streams for one turn: one per segment, or one for the turn."""
    lexicon = lexicon or Lexicon()
    doc = adoc.document
    toks = doc.tokens(turn)
    anns = adoc.turn_annotations(turn)
    outer = _outermost(anns)
    owner = [None] * len(toks)
    for o in outer:
        for k in range(o.start, o.end):
            owner[k] = o
    prev = doc.tokens(turn - 1) if turn > 0 else []
    first = next((k for k, t in enumerate(toks) if t.is_text or owner[k] is not None), None)

    if scope == "turn":
        ranges = [(0, len(toks))]
    else:
        ranges, s = [], 0
        for k in range(len(toks) + 1):
            if k == len(toks) or (toks[k].kind == "sync" and owner[k] is None):
                ranges.append((s, k))
                s = k + 1

    streams = []
    for a, b in ranges:
        units: list[Token] = []
        unit_tok: list[int] = []
        unit_end: list[int] = []
        k = a
        while k < b:
            o = owner[k]
            if o is not None:
                e = min(o.end, b)
                units.append(Token("", "annotation", turn, 0, 0, toks[k].item))
                unit_tok.append(k)
                unit_end.append(e)
                k = e
                continue
            t = toks[k]
            if t.kind == "sync" or (t.kind == "event" and events == "transparent"):
                k += 1
                continue
            units.append(t)
            unit_tok.append(k)
            unit_end.append(k + 1)
            k += 1
        if not any(u.is_text or u.kind == "annotation" for u in units):
            continue
        spans = []
        for u, start in enumerate(unit_tok):
            o = owner[start]
            if units[u].kind != "annotation" or o is None or o.start < a or o.end > b:
                continue
            for ann in anns:
                if ann.start == o.start and ann.end == o.end:
                    spans.append((u, u + 1, ann.family, ann.type))
        tsu = unit_tok.index(first) if first in unit_tok else None
        streams.append(
            MatchStream(units, unit_tok, lexicon, spans, turn, tsu, prev, unit_end)
        )
    return streams


def apply_pass(
    transducer: Transducer,
    adoc: AnnotatedDocument,
    name: str = "",
    backend: str | None = None,
    speakers: Iterable[str] | None = None,
    interpreter: bool = False,
) -> AnnotatedDocument:
    """Run one transducer over every turn of ``adoc``.

    With ``interpreter=True`` the grammar is run through the backtracking
    interpreter instead of the compiled transducer (slow; for cross-checks).
    """
    g = transducer.grammar
    name = name or g.name
    scope, events = g.option("scope"), g.option("events")
    speakers = set(speakers) if speakers is not None else None
    layer = adoc.next_layer
    new: list[Annotation] = []
    seq = 0
    doc = adoc.document
    for ti, turn in enumerate(doc.turns):
        if speakers is not None and turn.speaker not in speakers:
            continue
        for stream in build_streams(adoc, ti, scope, events, transducer.lexicon):
            if interpreter:
                matches = interpret_scan(g, stream, transducer.max_repeat)
            else:
                matches = transducer.scan(stream, backend)
            for m in matches:
                rule = g.rules[m.rule].name
                for fam, typ, s, e in spans_from_emissions(m.emissions):
                    a = Annotation(
                        fam, typ, ti, stream.unit_tok[s], stream.unit_end[e - 1], name, rule, layer, seq
                    )
                    seq += 1
                    new.append(a)
    for a in new:
        for b in adoc.turn_annotations(a.turn):
            if a.crosses(b):
                raise PassError(f"pass {name!r}, rule {a.rule!r}: {a.type} crosses existing {b.type}")
    return adoc.with_annotations(adoc.annotations + tuple(new), (name,))


# ---------------------------------------------------------------------------
# Cascades


@dataclass(frozen=True)
class Cascade:
    passes: tuple[tuple[str, Transducer], ...]
    ne_element: str = "NE"

    def __post_init__(self) -> None:
        names = [n for n, _ in self.passes]
        if len(names) != len(set(names)):
            raise ValueError(f"pass names must be unique: {names}")

    def __add__(self, other: "Cascade") -> "Cascade":
        return Cascade(self.passes + other.passes, self.ne_element)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.passes]


def run_cascade(
    cascade: Cascade,
    doc: Document | AnnotatedDocument,
    backend: str | None = None,
    speakers: Iterable[str] | None = None,
    check: bool = False,
) -> AnnotatedDocument:
    """Apply every pass in order. With ``check`` the nesting is verified after each pass."""
    adoc = doc if isinstance(doc, AnnotatedDocument) else AnnotatedDocument.from_document(doc)
    for name, t in cascade.passes:
        try:
            adoc = apply_pass(t, adoc, name, backend, speakers)
        except PassError:
            raise
        except (GrammarError, ValueError) as exc:
            raise PassError(f"pass {name!r}: {exc}") from exc
        if check:
            bad = check_nesting(adoc)
            if bad:
                raise PassError(f"pass {name!r} left crossing annotations: {bad[:3]}")
    return adoc


def load_manifest(
    path: str | Path,
    registry: Registry | None = None,
    max_repeat: int = DEFAULT_MAX_REPEAT,
    extra_lexicons: Iterable[Lexicon] = (),
) -> Cascade:
    """Load a cascade manifest: one grammar path per line, with ``key=value`` options.

    Options ``scope`` and ``events`` override the grammar's own; ``name`` sets
    the pass name (default: file stem). All ``*.lex`` files next to the
    manifest are loaded as the pack lexicon.
    """
    path = Path(path)
    registry = registry or default_registry()
    lexicon = Lexicon()
    for lex_path in sorted(path.parent.glob("*.lex")):
        lexicon = lexicon.merge(load_lexicon(lex_path))
    for extra in extra_lexicons:
        lexicon = lexicon.merge(extra)
    passes = []
    for n, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = shlex.split(line)
        gpath = path.parent / parts[0]
        opts = {}
        for p in parts[1:]:
            k, eq, v = p.partition("=")
            if not eq:
                raise GrammarError(f"{path}:{n}: expected key=value, got {p!r}")
            opts[k] = v
        pass_name = opts.pop("name", gpath.stem)
        try:
            text = gpath.read_text(encoding="utf-8")
        except OSError as exc:
            raise GrammarError(f"{path}:{n}: cannot read grammar {gpath}: {exc}") from None
        g = parse_grammar(text, lexicon, registry, source=str(gpath))
        if opts:
            merged = dict(g.options)
            merged.update(opts)
            checked = parse_grammar(
                "".join(f"option {k} = {v}\n" for k, v in sorted(merged.items())), source=f"{path}:{n}"
            )
            g = Grammar(g.rules, checked.options, name=g.name)
        passes.append((pass_name, compile_grammar(g, lexicon, max_repeat)))
    return Cascade(tuple(passes))


# ---------------------------------------------------------------------------
# Standoff records


def to_standoff(adoc: AnnotatedDocument) -> str:
    lines = []
    for a in adoc.annotations:
        rec = {"family": a.family, "type": a.type, "turn": a.turn, "start": a.start, "end": a.end}
        if a.source:
            rec["source"] = a.source
        lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def read_standoff(text: str) -> list[Annotation]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            out.append(
                Annotation(
                    d["family"], d["type"], int(d["turn"]), int(d["start"]), int(d["end"]),
                    d.get("source", ""), seq=n,
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ValueError(f"standoff line {n}: {exc}") from None
    return out
