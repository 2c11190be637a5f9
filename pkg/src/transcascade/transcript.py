"""Reading, checking, segmenting and writing Transcriber transcription files.

A parsed :class:`Document` keeps the whole XML tree. Turns are lifted into
:class:`Turn` values made of ordered items (text runs, ``Sync``/``Event``/``Who``
marks, annotation tag markers and verbatim unknown elements); everything
outside the turns is kept as a canonical skeleton so that serialization only
normalizes attribute order, empty-element form and the XML declaration.
"""

from __future__ import annotations

import json
import re
import unicodedata
import warnings
import xml.etree.ElementTree as ET
from copy import deepcopy
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, Union

__all__ = [
    "TranscriptError",
    "TranscriptParseError",
    "SerializationError",
    "UnknownElementWarning",
    "Text",
    "Sync",
    "Event",
    "Who",
    "Verbatim",
    "TagOpen",
    "TagClose",
    "Turn",
    "Document",
    "Token",
    "Segment",
    "ConventionViolation",
    "parse_transcription",
    "serialize",
    "tokenize",
    "detokenize",
    "segment",
    "validate_conventions",
    "violations_to_jsonl",
    "ANNOTATION_ELEMENTS",
]

# Inline annotation element name -> annotation family.
ANNOTATION_ELEMENTS = {"NE": "NE", "EN": "NE", "DE": "DE"}

WORD_KINDS = frozenset({"word", "truncated-word"})
TEXT_KINDS = frozenset({"word", "truncated-word", "question-mark", "exclamation-mark"})

_TURN_PLACEHOLDER = "__turn__"
_DOCTYPE_RE = re.compile(rb"<!DOCTYPE[^>]*>")


class TranscriptError(Exception):
    pass


class TranscriptParseError(TranscriptError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class SerializationError(TranscriptError):
    pass


class UnknownElementWarning(UserWarning):
    pass


def _nfc(s: str | None) -> str:
    return unicodedata.normalize("NFC", s) if s else ""


def _attrs(el: ET.Element) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((k, _nfc(v)) for k, v in el.attrib.items()))


# ---------------------------------------------------------------------------
# Turn items


@dataclass(frozen=True)
class Text:
    text: str


@dataclass(frozen=True)
class Sync:
    time: str

    @property
    def seconds(self) -> Decimal:
        return _seconds(self.time)


@dataclass(frozen=True)
class Event:
    attrs: tuple[tuple[str, str], ...]

    def get(self, key: str, default: str = "") -> str:
        return dict(self.attrs).get(key, default)

    @property
    def description(self) -> str:
        return self.get("desc")

    @property
    def kind(self) -> str:
        return self.get("type")

    @property
    def extent(self) -> str:
        return self.get("extent")


@dataclass(frozen=True)
class Who:
    attrs: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Verbatim:
    """An element outside the supported subset, kept as serialized XML."""

    xml: str


@dataclass(frozen=True)
class TagOpen:
    family: str
    type: str
    element: str = ""

    @property
    def name(self) -> str:
        return self.element or self.family


@dataclass(frozen=True)
class TagClose:
    family: str
    element: str = ""

    @property
    def name(self) -> str:
        return self.element or self.family


TurnItem = Union[Text, Sync, Event, Who, Verbatim, TagOpen, TagClose]


def _seconds(value: str) -> Decimal:
    try:
        return Decimal(value)
    except (InvalidOperation, TypeError):
        raise TranscriptError(f"bad time value {value!r}") from None


@dataclass(frozen=True)
class Turn:
    attrs: tuple[tuple[str, str], ...]
    items: tuple[TurnItem, ...]

    def get(self, key: str, default: str = "") -> str:
        return dict(self.attrs).get(key, default)

    @property
    def speaker(self) -> str:
        return self.get("speaker")

    @property
    def start_time(self) -> Decimal:
        return _seconds(self.get("startTime", "0"))

    @property
    def end_time(self) -> Decimal:
        return _seconds(self.get("endTime", "0"))

    @property
    def text(self) -> str:
        return "".join(it.text for it in self.items if isinstance(it, Text))

    def replace_items(self, items: Iterable[TurnItem]) -> "Turn":
        return Turn(self.attrs, tuple(_merge_text(items)))


def _merge_text(items: Iterable[TurnItem]) -> Iterator[TurnItem]:
    pending: list[str] = []
    for it in items:
        if isinstance(it, Text):
            pending.append(it.text)
            continue
        if pending:
            joined = "".join(pending)
            if joined:
                yield Text(joined)
            pending = []
        yield it
    if pending:
        joined = "".join(pending)
        if joined:
            yield Text(joined)


@dataclass
class Document:
    turns: tuple[Turn, ...]
    metadata: dict[str, str] = field(default_factory=dict)
    speakers: tuple[dict[str, str], ...] = ()
    skeleton: str = "<Trans />"
    doctype: str | None = None
    source: str = ""
    _token_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def tokens(self, turn: int) -> list["Token"]:
        toks = self._token_cache.get(turn)
        if toks is None:
            toks = _turn_tokens(self.turns[turn], turn)
            self._token_cache[turn] = toks
        return toks

    def replace_turns(self, turns: Iterable[Turn]) -> "Document":
        return Document(
            tuple(turns), dict(self.metadata), self.speakers, self.skeleton, self.doctype, self.source
        )


# ---------------------------------------------------------------------------
# Parsing


def parse_transcription(data: bytes | str, source: str = "") -> Document:
    """Parse Transcriber XML into a :class:`Document`.

    Unknown elements inside a turn are kept verbatim and reported with an
    :class:`UnknownElementWarning`. Inline ``NE``/``EN``/``DE`` elements become
    :class:`TagOpen`/:class:`TagClose` markers.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    m = _DOCTYPE_RE.search(data[:4096])
    doctype = m.group(0).decode("ascii", "replace") if m else None
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise TranscriptParseError(f"malformed XML in {source or '<input>'}", line, col) from None
    if root.tag != "Trans":
        raise TranscriptParseError(f"root element is <{root.tag}>, expected <Trans>")

    turns: list[Turn] = []
    speakers: list[dict[str, str]] = []

    def walk(parent: ET.Element) -> None:
        for i, child in enumerate(list(parent)):
            if child.tag == "Turn":
                turns.append(_read_turn(child, source))
                ph = ET.Element("Turn", {_TURN_PLACEHOLDER: str(len(turns) - 1)})
                ph.tail = child.tail
                parent.remove(child)
                parent.insert(i, ph)
            else:
                if child.tag == "Speaker":
                    speakers.append(dict(_attrs(child)))
                walk(child)

    walk(root)
    _normalize_tree(root)
    skeleton = ET.tostring(root, encoding="unicode", short_empty_elements=True)
    return Document(
        turns=tuple(turns),
        metadata=dict(_attrs(root)),
        speakers=tuple(speakers),
        skeleton=skeleton,
        doctype=doctype,
        source=source,
    )


def _normalize_tree(el: ET.Element) -> None:
    el.attrib = dict(sorted((k, _nfc(v)) for k, v in el.attrib.items()))
    if el.text is not None:
        el.text = _nfc(el.text)
    if el.tail is not None:
        el.tail = _nfc(el.tail)
    for child in el:
        _normalize_tree(child)


def _read_turn(el: ET.Element, source: str) -> Turn:
    items: list[TurnItem] = []

    def add_text(s: str | None) -> None:
        if s:
            items.append(Text(_nfc(s)))

    def read_children(node: ET.Element) -> None:
        add_text(node.text)
        for child in node:
            tag = child.tag
            if tag == "Sync":
                items.append(Sync(_nfc(child.get("time", ""))))
            elif tag == "Event":
                items.append(Event(_attrs(child)))
            elif tag == "Who":
                items.append(Who(_attrs(child)))
            elif tag in ANNOTATION_ELEMENTS:
                family = ANNOTATION_ELEMENTS[tag]
                items.append(TagOpen(family, _nfc(child.get("type", "")), tag))
                read_children(child)
                items.append(TagClose(family, tag))
            else:
                warnings.warn(
                    f"{source or '<input>'}: unknown element <{tag}> inside Turn kept verbatim",
                    UnknownElementWarning,
                    stacklevel=4,
                )
                copy = deepcopy(child)
                copy.tail = None
                _normalize_tree(copy)
                items.append(Verbatim(ET.tostring(copy, encoding="unicode", short_empty_elements=True)))
            add_text(child.tail)

    read_children(el)
    return Turn(_attrs(el), tuple(_merge_text(items)))


# ---------------------------------------------------------------------------
# Serialization


def serialize(doc: Document) -> bytes:
    """Canonical XML bytes for ``doc``.

    Attributes are sorted, empty elements self-close and the declaration is
    always UTF-8. Two serializations of equal documents are byte-identical.
    """
    root = ET.fromstring(doc.skeleton)
    _fill_turns(root, doc)
    body = ET.tostring(root, encoding="unicode", short_empty_elements=True)
    head = '<?xml version="1.0" encoding="UTF-8"?>\n'
    if doc.doctype:
        head += doc.doctype + "\n"
    return (head + body + "\n").encode("utf-8")


def _fill_turns(parent: ET.Element, doc: Document) -> None:
    for i, child in enumerate(list(parent)):
        if child.tag == "Turn" and _TURN_PLACEHOLDER in child.attrib:
            idx = int(child.attrib[_TURN_PLACEHOLDER])
            built = _build_turn(doc.turns[idx], idx)
            built.tail = child.tail
            parent.remove(child)
            parent.insert(i, built)
        else:
            _fill_turns(child, doc)


def _append_text(el: ET.Element, s: str) -> None:
    if len(el):
        last = el[-1]
        last.tail = (last.tail or "") + s
    else:
        el.text = (el.text or "") + s


def _build_turn(turn: Turn, index: int) -> ET.Element:
    top = ET.Element("Turn", dict(turn.attrs))
    stack: list[tuple[ET.Element, str]] = [(top, "")]
    for it in turn.items:
        cur = stack[-1][0]
        if isinstance(it, Text):
            _append_text(cur, it.text)
        elif isinstance(it, Sync):
            ET.SubElement(cur, "Sync", {"time": it.time})
        elif isinstance(it, Event):
            ET.SubElement(cur, "Event", dict(it.attrs))
        elif isinstance(it, Who):
            ET.SubElement(cur, "Who", dict(it.attrs))
        elif isinstance(it, Verbatim):
            cur.append(ET.fromstring(it.xml))
        elif isinstance(it, TagOpen):
            stack.append((ET.SubElement(cur, it.name, {"type": it.type}), it.family))
        elif isinstance(it, TagClose):
            if len(stack) == 1 or stack[-1][1] != it.family:
                raise SerializationError(f"turn {index}: unbalanced </{it.name}>")
            stack.pop()
    if len(stack) != 1:
        raise SerializationError(f"turn {index}: annotation crosses the Turn boundary")
    return top


# ---------------------------------------------------------------------------
# Tokens and segments


@dataclass(frozen=True)
class Token:
    """A token of a turn.

    ``start``/``end`` are character offsets inside item ``item`` (for text
    tokens) or ``0``/``0`` for mark tokens. Tokens from :func:`tokenize` on a
    bare string use ``item = -1`` and ``turn = -1``.
    """

    surface: str
    kind: str
    turn: int
    start: int
    end: int
    item: int = -1

    @property
    def is_text(self) -> bool:
        return self.kind in TEXT_KINDS

    @property
    def is_word(self) -> bool:
        return self.kind in WORD_KINDS


_WORD_RE = re.compile(r"[?!]|[^\s?!]+")
_ELISION_RE = re.compile(r"[^'’]*['’]|[^'’]+")
# Words whose apostrophe is not an elision boundary.
ELISION_EXCEPTIONS = frozenset({"aujourd'hui", "aujourd’hui", "presqu'île", "presqu’île", "prud'homme"})


def _kind(surface: str) -> str:
    if surface == "?":
        return "question-mark"
    if surface == "!":
        return "exclamation-mark"
    if surface.endswith("-"):
        return "truncated-word"
    return "word"


def _split_words(text: str) -> Iterator[tuple[int, int]]:
    for m in _WORD_RE.finditer(text):
        s, e = m.span()
        word = m.group()
        if len(word) > 1 and ("'" in word or "’" in word) and word.lower() not in ELISION_EXCEPTIONS:
            for part in _ELISION_RE.finditer(word):
                yield s + part.start(), s + part.end()
        else:
            yield s, e


def tokenize(text: str, turn: int = -1, item: int = -1) -> list[Token]:
    """Split orthographic transcription text into tokens.

    >>> [t.surface for t in tokenize("j'aime Orléans?")]
    ["j'", 'aime', 'Orléans', '?']
    """
    return [Token(text[s:e], _kind(text[s:e]), turn, s, e, item) for s, e in _split_words(text)]


def detokenize(tokens: list[Token], text: str) -> str:
    """Rebuild ``text`` from its tokens and the separators between them."""
    out: list[str] = []
    pos = 0
    for tok in tokens:
        out.append(text[pos : tok.start])
        out.append(tok.surface)
        pos = tok.end
    out.append(text[pos:])
    return "".join(out)


def _turn_tokens(turn: Turn, index: int) -> list[Token]:
    toks: list[Token] = []
    for i, it in enumerate(turn.items):
        if isinstance(it, Text):
            toks.extend(tokenize(it.text, index, i))
        elif isinstance(it, Sync):
            toks.append(Token("", "sync", index, 0, 0, i))
        elif isinstance(it, TagOpen):
            toks.append(Token("", "tag-open", index, 0, 0, i))
        elif isinstance(it, TagClose):
            toks.append(Token("", "tag-close", index, 0, 0, i))
        else:
            toks.append(Token("", "event", index, 0, 0, i))
    return toks


@dataclass(frozen=True)
class Segment:
    """Tokens ``start:end`` of turn ``turn``, a run between two Sync marks."""

    turn: int
    start: int
    end: int
    tokens: tuple[Token, ...]


def segment(doc: Document) -> list[Segment]:
    out: list[Segment] = []
    for t in range(len(doc.turns)):
        toks = doc.tokens(t)
        run_start = 0
        for i in range(len(toks) + 1):
            if i == len(toks) or toks[i].kind == "sync":
                run = toks[run_start:i]
                if any(tok.is_text for tok in run):
                    out.append(Segment(t, run_start, i, tuple(run)))
                run_start = i + 1
    return out


# ---------------------------------------------------------------------------
# Convention checks


@dataclass(frozen=True)
class ConventionViolation:
    rule: str
    turn: int
    span: tuple[int, int]
    message: str

    def to_json(self) -> str:
        return json.dumps(
            {"rule": self.rule, "turn": self.turn, "span": list(self.span), "message": self.message},
            ensure_ascii=False,
        )


CONVENTION_RULES = ("forbidden-punctuation", "unexpected-uppercase", "malformed-pause", "malformed-truncation")
_ALLOWED_PUNCT = frozenset("?!'’-")


def _is_acronym(word: str) -> bool:
    letters = [c for c in word if c.isalpha()]
    return len(letters) >= 2 and all(c.isupper() for c in letters)


def validate_conventions(doc: Document) -> list[ConventionViolation]:
    """Report every breach of the transcription conventions, turn by turn."""
    out: list[ConventionViolation] = []
    for t, turn in enumerate(doc.turns):
        base = 0
        for it in turn.items:
            if isinstance(it, Text):
                out.extend(_check_text(it.text, t, base))
                base += len(it.text)
            elif isinstance(it, Sync):
                out.extend(_check_sync(turn, it, t, base))
        out.extend(_check_sync_order(turn, t))
    return out


def _check_text(text: str, t: int, base: int) -> Iterator[ConventionViolation]:
    for i, ch in enumerate(text):
        if unicodedata.category(ch).startswith("P") and ch not in _ALLOWED_PUNCT:
            yield ConventionViolation(
                "forbidden-punctuation", t, (base + i, base + i + 1), f"punctuation {ch!r} is not allowed"
            )
    for tok in tokenize(text):
        if not tok.is_word:
            continue
        w = tok.surface
        if "-" in w and (w.strip("-") == "" or w.startswith("-") or "--" in w):
            yield ConventionViolation(
                "malformed-truncation", t, (base + tok.start, base + tok.end), f"bad truncation {w!r}"
            )
        if _is_acronym(w):
            continue
        for j, ch in enumerate(w):
            if j > 0 and ch.isupper() and w[j - 1] not in "-'’":
                pos = base + tok.start + j
                yield ConventionViolation(
                    "unexpected-uppercase", t, (pos, pos + 1), f"uppercase inside word {w!r}"
                )


def _check_sync(turn: Turn, sync: Sync, t: int, base: int) -> Iterator[ConventionViolation]:
    try:
        s = sync.seconds
        lo, hi = turn.start_time, turn.end_time
    except TranscriptError as exc:
        yield ConventionViolation("malformed-pause", t, (base, base), str(exc))
        return
    if s < lo or s > hi:
        yield ConventionViolation(
            "malformed-pause", t, (base, base), f"sync {sync.time} outside turn [{lo}, {hi}]"
        )


def _check_sync_order(turn: Turn, t: int) -> Iterator[ConventionViolation]:
    try:
        if turn.start_time > turn.end_time:
            yield ConventionViolation("malformed-pause", t, (0, 0), "turn starts after it ends")
        times = [it.seconds for it in turn.items if isinstance(it, Sync)]
    except TranscriptError:
        return
    for a, b in zip(times, times[1:]):
        if b < a:
            yield ConventionViolation("malformed-pause", t, (0, 0), f"sync times decrease ({a} > {b})")


def violations_to_jsonl(violations: Iterable[ConventionViolation]) -> str:
    return "".join(v.to_json() + "\n" for v in violations)
