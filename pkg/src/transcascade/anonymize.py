"""Pseudonymization of annotated spans, with a reversible sidecar mapping.

Sidecar positions are ``(turn, run, start, end)``: ``run`` counts the non-text
items (markers, syncs, events) before the edited text, and ``start``/``end``
are offsets in the text between that item and the next one. These positions
survive serialization, unlike item indexes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .engine import Annotation, AnnotatedDocument
from .transcript import Document, Text
from .typology import Registry, TypologyError, default_registry, type_matches

__all__ = [
    "PolicyError",
    "Policy",
    "parse_policy",
    "Mapping",
    "pseudonymize",
    "restore",
    "sidecar_lines",
    "read_sidecar",
    "LABELS",
]

LABELS = {
    "pers": "PERSON",
    "fonc": "POST",
    "org": "ORGANIZATION",
    "loc": "LOCATION",
    "prod": "PRODUCT",
    "time": "TIME",
    "amount": "AMOUNT",
    "event": "EVENT",
    "identity": "IDENTITY",
    "work": "WORK",
}


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Policy:
    """Target type patterns as ``(family, pattern)`` pairs."""

    targets: tuple[tuple[str, str], ...] = ()

    def targets_annotation(self, a: Annotation) -> bool:
        return any(fam == a.family and type_matches(pat, a.type) for fam, pat in self.targets)


def parse_policy(entries: Iterable[str] | str, registry: Registry | None = None) -> Policy:
    """Build a policy from type strings such as ``loc.admi``, ``NE:pers.*`` or ``DE:identity.origin``.

    A string argument is read as a policy file: one entry per line, ``#`` comments.
    """
    registry = registry or default_registry()
    if isinstance(entries, str):
        entries = [line.split("#", 1)[0] for line in entries.splitlines()]
    targets = []
    for raw in entries:
        entry = raw.strip()
        if not entry:
            continue
        fam, colon, pat = entry.partition(":")
        if not colon:
            fam, pat = "NE", entry
        fam = "NE" if fam == "EN" else fam
        try:
            ok = registry.family(fam).accepts_pattern(pat)
        except TypologyError as exc:
            raise PolicyError(str(exc)) from None
        if not ok:
            raise PolicyError(f"unknown {fam} type {pat!r} in policy")
        targets.append((fam, pat))
    return Policy(tuple(dict.fromkeys(targets)))


@dataclass
class Mapping:
    placeholder: str
    surface: str
    type: str
    family: str
    occurrences: list[list] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "placeholder": self.placeholder,
                "surface": self.surface,
                "type": self.type,
                "family": self.family,
                "occurrences": self.occurrences,
            },
            ensure_ascii=False,
            sort_keys=True,
        )


def _runs(items: Sequence) -> list[tuple[int, int]]:
    """``(run, offset)`` of each item; non-text items open a new run."""
    out = []
    run, off = 0, 0
    for it in items:
        if isinstance(it, Text):
            out.append((run, off))
            off += len(it.text)
        else:
            run += 1
            off = 0
            out.append((run, 0))
    return out


def pseudonymize(
    adoc: AnnotatedDocument, policy: Policy, ne_element: str = "NE"
) -> tuple[Document, list[Mapping]]:
    """Replace targeted spans by placeholders such as ``LOCATION-1``.

    The result keeps every marker. When targeted spans nest, the outermost
    one is replaced. A span broken by non-text items keeps those items; the
    placeholder goes in its first text piece and the other pieces are emptied.
    """
    lowered = adoc.to_document(ne_element)
    targeted = [a for a in adoc.annotations if policy.targets_annotation(a)]
    outer: list[Annotation] = []
    for a in sorted(targeted, key=lambda a: a.key):
        if outer and outer[-1].turn == a.turn and outer[-1].start <= a.start and a.end <= outer[-1].end:
            continue
        outer.append(a)

    mappings: dict[tuple[str, str, str], Mapping] = {}
    counters: dict[str, int] = {}
    turns = list(lowered.turns)
    by_turn: dict[int, list[Annotation]] = {}
    for a in outer:
        by_turn.setdefault(a.turn, []).append(a)

    for ti in sorted(by_turn):
        src_text = [t for t in adoc.document.tokens(ti) if t.is_text]
        src_index = {id(t): i for i, t in enumerate(src_text)}
        low_text = [t for t in lowered.tokens(ti) if t.is_text]
        items = list(turns[ti].items)
        # (item, start, end, replacement, mapping)
        edits: list[tuple[int, int, int, str, Mapping]] = []
        for a in by_turn[ti]:
            toks = [low_text[src_index[id(t)]] for t in adoc.document.tokens(ti)[a.start : a.end] if t.is_text]
            if not toks:
                continue
            surface = " ".join(t.surface for t in toks)
            key = (a.family, a.type, surface)
            m = mappings.get(key)
            if m is None:
                label = LABELS.get(a.type.split(".")[0], a.type.split(".")[0].upper())
                counters[label] = counters.get(label, 0) + 1
                m = mappings[key] = Mapping(f"{label}-{counters[label]}", surface, a.type, a.family)
            pieces: dict[int, list] = {}
            for t in toks:
                p = pieces.setdefault(t.item, [t.start, t.end])
                p[1] = t.end
            for n, (item, (s, e)) in enumerate(sorted(pieces.items())):
                edits.append((item, s, e, m.placeholder if n == 0 else "", m))
        edits.sort(key=lambda x: (x[0], x[1]))
        runs = _runs(items)
        new_items = list(items)
        shift: dict[int, int] = {}  # per run, growth of the text so far
        by_item: dict[int, list] = {}
        for ed in edits:
            by_item.setdefault(ed[0], []).append(ed)
        for item in sorted(by_item):
            text = items[item].text
            run, base = runs[item]
            out, cursor = [], 0
            for _, s, e, rep, m in by_item[item]:
                out.append(text[cursor:s])
                new_start = base + shift.get(run, 0) + sum(len(x) for x in out)
                m.occurrences.append([ti, run, new_start, new_start + len(rep), text[s:e]])
                out.append(rep)
                cursor = e
            out.append(text[cursor:])
            new_text = "".join(out)
            shift[run] = shift.get(run, 0) + len(new_text) - len(text)
            new_items[item] = Text(new_text)
        turns[ti] = turns[ti].replace_items(new_items)
    return lowered.replace_turns(turns), list(mappings.values())


def restore(doc: Document, mappings: Iterable[Mapping]) -> Document:
    """Undo :func:`pseudonymize` using its mappings."""
    occ = sorted(
        (tuple(o) for m in mappings for o in m.occurrences), key=lambda o: (o[0], o[1], o[2]), reverse=True
    )
    by_turn: dict[int, list[tuple]] = {}
    for o in occ:
        by_turn.setdefault(o[0], []).append(o)
    turns = list(doc.turns)
    for ti, edits in by_turn.items():
        if ti >= len(turns):
            raise ValueError(f"sidecar refers to missing turn {ti}")
        items = turns[ti].items
        # one string per run, then put each run back into its slot
        runs: list[str] = [""]
        layout: list = []
        for it in items:
            if isinstance(it, Text):
                runs[-1] += it.text
            else:
                layout.append(("run", len(runs) - 1))
                layout.append(("item", it))
                runs.append("")
        layout.append(("run", len(runs) - 1))
        for _, run, s, e, original in edits:
            if run >= len(runs) or e > len(runs[run]):
                raise ValueError(f"sidecar position {[ti, run, s, e]} is outside the document")
            runs[run] = runs[run][:s] + original + runs[run][e:]
        rebuilt = [Text(runs[v]) if kind == "run" else v for kind, v in layout]
        turns[ti] = turns[ti].replace_items(rebuilt)
    return doc.replace_turns(turns)


def sidecar_lines(mappings: Iterable[Mapping]) -> str:
    return "".join(m.to_json() + "\n" for m in mappings)


def read_sidecar(text: str) -> list[Mapping]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            out.append(
                Mapping(d["placeholder"], d["surface"], d["type"], d.get("family", "NE"), d.get("occurrences", []))
            )
        except (ValueError, KeyError) as exc:
            raise ValueError(f"sidecar line {n}: {exc}") from None
    return out
