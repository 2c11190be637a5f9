"""Named word lists (cities, first names, professions, cue phrases).

Entries are word sequences stored in a per-category word trie, so multiword
entries are found word by word and every matching length at a position can
be listed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .transcript import Token, tokenize

__all__ = ["Lexicon", "LexiconError", "Entry", "load_lexicon", "lookup_longest", "IDENT_RE", "RESERVED_NAMES"]

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
# Built-in predicate names of the grammar language; not usable as categories.
RESERVED_NAMES = frozenset({"AnyWord", "UPPER", "NE", "DE", "EN"})
_FLAGS = frozenset({"cs"})
_END = None


class LexiconError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line
        self.path = path


@dataclass(frozen=True, order=True)
class Entry:
    words: tuple[str, ...]
    case_sensitive: bool = False

    @property
    def text(self) -> str:
        return " ".join(self.words)


def _surface(tok) -> str:
    return tok.surface if isinstance(tok, Token) else tok


def _transparent(tok) -> bool:
    return isinstance(tok, Token) and tok.kind in ("event", "sync", "tag-open", "tag-close")


class Lexicon:
    """Category name -> set of :class:`Entry`, with a trie index per category."""

    def __init__(self) -> None:
        self._entries: dict[str, set[Entry]] = {}
        self._tries: dict[str, tuple[dict, dict]] = {}

    def add(self, category: str, words: Sequence[str], case_sensitive: bool = False) -> None:
        if not IDENT_RE.match(category) or category in RESERVED_NAMES:
            raise LexiconError(f"invalid category name {category!r}")
        words = tuple(words)
        if not words or any(not w for w in words):
            raise LexiconError(f"empty entry in category {category}")
        entry = Entry(words, case_sensitive)
        bucket = self._entries.setdefault(category, set())
        if entry in bucket:
            return
        bucket.add(entry)
        ci, cs = self._tries.setdefault(category, ({}, {}))
        node = cs if case_sensitive else ci
        for w in words:
            node = node.setdefault(w if case_sensitive else w.lower(), {})
        node[_END] = True

    def declare(self, category: str) -> None:
        """Register an empty category."""
        if not IDENT_RE.match(category) or category in RESERVED_NAMES:
            raise LexiconError(f"invalid category name {category!r}")
        self._entries.setdefault(category, set())
        self._tries.setdefault(category, ({}, {}))

    @property
    def categories(self) -> list[str]:
        return sorted(self._entries)

    def __contains__(self, category: str) -> bool:
        return category in self._entries

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Lexicon) and self._entries == other._entries

    def __len__(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def entries(self, category: str) -> set[Entry]:
        self._check(category)
        return set(self._entries[category])

    def size(self, category: str) -> int:
        return len(self.entries(category))

    def _check(self, category: str) -> None:
        if category not in self._entries:
            raise LexiconError(f"unknown category {category!r}")

    def match_lengths(self, category: str, tokens: Sequence, start: int) -> list[int]:
        """Every length (in ``tokens`` positions) of an entry matching at ``start``.

        Longest first. Event/sync tokens inside a multiword entry are skipped
        and counted in the length; an entry never starts or ends on one.
        """
        self._check(category)
        ci, cs = self._tries[category]
        found: set[int] = set()
        for root, fold in ((ci, True), (cs, False)):
            if not root:
                continue
            node = root
            i = start
            while i < len(tokens):
                tok = tokens[i]
                if _transparent(tok):
                    if i == start:
                        break
                    i += 1
                    continue
                w = _surface(tok)
                node = node.get(w.lower() if fold else w)
                if node is None:
                    break
                i += 1
                if _END in node:
                    found.add(i - start)
        return sorted(found, reverse=True)

    def merge(self, other: "Lexicon") -> "Lexicon":
        out = Lexicon()
        for lex in (self, other):
            for cat, entries in lex._entries.items():
                out.declare(cat)
                for e in entries:
                    out.add(cat, e.words, e.case_sensitive)
        return out

    def dump(self) -> str:
        lines = []
        for cat in sorted(self._entries):
            for e in sorted(self._entries[cat]):
                lines.append(f"{e.text}\t{cat}" + ("\tcs" if e.case_sensitive else ""))
        return "".join(line + "\n" for line in lines)


def lookup_longest(lex: Lexicon, tokens: Sequence, start: int, category: str) -> int:
    """Length of the longest ``category`` entry matching ``tokens`` at ``start``; 0 if none."""
    lengths = lex.match_lengths(category, tokens, start)
    return lengths[0] if lengths else 0


def parse_lexicon(text: str, path: str | None = None) -> Lexicon:
    lex = Lexicon()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise LexiconError("expected 'entry<TAB>Category[<TAB>flags]'", n, path)
        surface, category = parts[0].strip(), parts[1].strip()
        flags = {f.strip() for f in parts[2].split(",") if f.strip()} if len(parts) == 3 else set()
        if flags - _FLAGS:
            raise LexiconError(f"unknown flag(s) {sorted(flags - _FLAGS)}", n, path)
        words = [t.surface for t in tokenize(surface)]
        try:
            lex.add(category, words, "cs" in flags)
        except LexiconError as exc:
            raise LexiconError(str(exc), n, path) from None
    return lex


def load_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    return parse_lexicon(path.read_text(encoding="utf-8"), str(path))


def merge_all(lexicons: Iterable[Lexicon]) -> Lexicon:
    out = Lexicon()
    for lex in lexicons:
        out = out.merge(lex)
    return out
