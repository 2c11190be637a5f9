"""File-backed metadata catalog: eight CSV tables and their consultation views."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

__all__ = [
    "TABLES",
    "VIEWS",
    "STATUSES",
    "CatalogError",
    "Catalog",
    "Filter",
    "parse_filter",
    "import_catalog",
    "query",
    "format_records",
    "SAMPLE_DIR",
]

# Fixed header of each table file (<table>.csv).
TABLES: dict[str, tuple[str, ...]] = {
    "recordings": ("id", "type", "date", "place", "duration", "acoustics"),
    "speakers": (
        "id", "birth_date", "birth_place", "sex", "profession", "age", "education",
        "end_of_studies_age", "insee", "echelle_am", "family", "politics", "problems",
    ),
    "questionnaires": ("id", "title", "notes"),
    "transcriptions": ("id", "recording_id", "transcribers", "date", "status", "problems", "remarks"),
    "links": ("recording_id", "speaker_id", "questionnaire_id", "notes"),
    "team": ("id", "name", "role"),
    "problems": ("id", "transcription_id", "description"),
    "remarks": ("id", "transcription_id", "description"),
}
STATUSES = ("raw", "reread", "validated")
VIEWS = ("recordings", "transcriptions", "transcriptions-by-status", "speakers")
SAMPLE_DIR = Path(__file__).resolve().parent / "data" / "catalog"

# (table, column) -> referenced table; empty values are allowed
_REFS = {
    ("transcriptions", "recording_id"): "recordings",
    ("links", "recording_id"): "recordings",
    ("links", "speaker_id"): "speakers",
    ("links", "questionnaire_id"): "questionnaires",
    ("problems", "transcription_id"): "transcriptions",
    ("remarks", "transcription_id"): "transcriptions",
}
_REQUIRED_REFS = {("transcriptions", "recording_id"), ("links", "recording_id")}


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Catalog:
    tables: Mapping[str, tuple[dict[str, str], ...]] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> "Catalog":
        return cls({t: () for t in TABLES})

    @classmethod
    def from_rows(cls, tables: Mapping[str, Iterable[Mapping[str, str]]]) -> "Catalog":
        """Build and check a catalog from in-memory rows (missing tables are empty)."""
        unknown = set(tables) - set(TABLES)
        if unknown:
            raise CatalogError(f"unknown tables {sorted(unknown)}")
        data = {}
        for t, cols in TABLES.items():
            rows = []
            for i, r in enumerate(tables.get(t, ()), 1):
                extra = set(r) - set(cols)
                if extra:
                    raise CatalogError(f"{t} row {i}: unknown columns {sorted(extra)}")
                rows.append({c: str(r.get(c, "") or "") for c in cols})
            data[t] = tuple(rows)
        cat = cls(data)
        cat.check()
        return cat

    def rows(self, table: str) -> tuple[dict[str, str], ...]:
        return self.tables.get(table, ())

    def check(self) -> None:
        """Unique ids and resolvable references; raises :class:`CatalogError`."""
        ids: dict[str, set[str]] = {}
        for t, cols in TABLES.items():
            if "id" not in cols:
                continue
            seen: set[str] = set()
            for i, r in enumerate(self.rows(t), 1):
                rid = r["id"]
                if not rid:
                    raise CatalogError(f"{t} row {i}: empty id")
                if rid in seen:
                    raise CatalogError(f"{t} row {i}: duplicate id {rid!r}")
                seen.add(rid)
            ids[t] = seen
        for t in TABLES:
            for i, r in enumerate(self.rows(t), 1):
                if t == "transcriptions" and r["status"] not in STATUSES:
                    raise CatalogError(f"transcriptions row {i}: status {r['status']!r} not in {STATUSES}")
                for (rt, col), target in _REFS.items():
                    if rt != t:
                        continue
                    v = r[col]
                    if not v and (rt, col) not in _REQUIRED_REFS:
                        continue
                    if v not in ids[target]:
                        raise CatalogError(f"{t} row {i}: {col} {v!r} has no match in {target}")

    def view(self, name: str) -> list[dict[str, str]]:
        if name == "recordings":
            spk: dict[str, list[str]] = {}
            for link in self.rows("links"):
                if link["speaker_id"]:
                    spk.setdefault(link["recording_id"], []).append(link["speaker_id"])
            out = [dict(r, speakers=",".join(sorted(set(spk.get(r["id"], []))))) for r in self.rows("recordings")]
            return sorted(out, key=lambda r: r["id"])
        if name == "transcriptions":
            return sorted((dict(r) for r in self.rows("transcriptions")), key=lambda r: r["id"])
        if name == "transcriptions-by-status":
            return sorted(
                (dict(r) for r in self.rows("transcriptions")),
                key=lambda r: (STATUSES.index(r["status"]), r["id"]),
            )
        if name == "speakers":
            rec: dict[str, list[str]] = {}
            for link in self.rows("links"):
                if link["speaker_id"]:
                    rec.setdefault(link["speaker_id"], []).append(link["recording_id"])
            out = [dict(r, recordings=",".join(sorted(set(rec.get(r["id"], []))))) for r in self.rows("speakers")]
            return sorted(out, key=lambda r: r["id"])
        raise CatalogError(f"unknown view {name!r}; expected one of {VIEWS}")


def view_fields(name: str) -> tuple[str, ...]:
    if name == "recordings":
        return TABLES["recordings"] + ("speakers",)
    if name in ("transcriptions", "transcriptions-by-status"):
        return TABLES["transcriptions"]
    if name == "speakers":
        return TABLES["speakers"] + ("recordings",)
    raise CatalogError(f"unknown view {name!r}; expected one of {VIEWS}")


@dataclass(frozen=True)
class Filter:
    """``field=value`` or ``field~value``, both case-insensitive.

    ``=`` matches the whole value or one of its comma-separated parts, so
    ``profession=boucher`` finds ``boucher, gérant boucherie``. ``~`` is a
    substring test.
    """

    field: str
    op: str
    value: str

    def matches(self, record: Mapping[str, str]) -> bool:
        v = record.get(self.field, "").casefold()
        want = self.value.strip().casefold()
        if self.op == "~":
            return want in v
        return v.strip() == want or any(part.strip() == want for part in v.split(","))


def parse_filter(text: str) -> Filter:
    eq, tilde = text.find("="), text.find("~")
    cands = [i for i in (eq, tilde) if i > 0]
    if not cands:
        raise CatalogError(f"bad filter {text!r}; expected field=value or field~value")
    i = min(cands)
    return Filter(text[:i].strip(), text[i], text[i + 1 :])


def query(catalog: Catalog, view: str, filters: Iterable[Filter | str] = ()) -> list[dict[str, str]]:
    """Records of ``view`` passing every filter, ordered by id (status first for the by-status view)."""
    fields = view_fields(view)
    fs = [parse_filter(f) if isinstance(f, str) else f for f in filters]
    for f in fs:
        if f.field not in fields:
            raise CatalogError(f"unknown field {f.field!r} for view {view!r}")
    return [r for r in catalog.view(view) if all(f.matches(r) for f in fs)]


def import_catalog(path: str | Path) -> Catalog:
    """Load ``<table>.csv`` for each of the eight tables from directory ``path``."""
    path = Path(path)
    if not path.is_dir():
        raise CatalogError(f"{path}: not a directory")
    tables = {}
    for t, cols in TABLES.items():
        f = path / f"{t}.csv"
        if not f.is_file():
            raise CatalogError(f"{f}: missing table file")
        with f.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != cols:
                raise CatalogError(f"{f}: header must be {','.join(cols)}")
            tables[t] = list(reader)
    try:
        return Catalog.from_rows(tables)
    except CatalogError as exc:
        raise CatalogError(f"{path}: {exc}") from None


def format_records(records: list[dict[str, str]], fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(records, ensure_ascii=False, indent=2) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    if not records:
        return ""
    cols = list(records[0])
    widths = {c: max(len(c), *(len(r[c]) for r in records)) for c in cols}
    lines = ["  ".join(c.ljust(widths[c]) for c in cols)]
    lines += ["  ".join(r[c].ljust(widths[c]) for c in cols) for r in records]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def write_catalog(catalog: Catalog, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for t, cols in TABLES.items():
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(catalog.rows(t))
        (path / f"{t}.csv").write_text(buf.getvalue(), encoding="utf-8")
