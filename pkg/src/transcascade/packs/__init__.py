"""Shipped grammar packs and pack lookup.

A pack is a directory holding ``*.lg`` grammars, ``*.lex`` lexicons and a
``cascade.manifest``. Directories listed in ``TRANSCASCADE_PACKS`` (path
separator delimited) are searched before the shipped packs.
"""

from __future__ import annotations

import os
from pathlib import Path

from ..engine import Cascade, load_manifest
from ..grammar import Grammar
from ..lexicon import Lexicon, load_lexicon
from ..matching import DEFAULT_MAX_REPEAT
from ..typology import Registry

__all__ = ["PACKS_ENV", "pack_dir", "load_pack", "load_ne_pack", "load_de_pack", "load_cascade"]

PACKS_ENV = "TRANSCASCADE_PACKS"
SHIPPED = Path(__file__).resolve().parent


class PackError(LookupError):
    pass


def search_path() -> list[Path]:
    extra = os.environ.get(PACKS_ENV, "")
    return [Path(p) for p in extra.split(os.pathsep) if p] + [SHIPPED]


def pack_dir(name: str) -> Path:
    """Directory of pack ``name`` (a pack name or a path to a pack directory)."""
    direct = Path(name)
    if (direct / "cascade.manifest").is_file():
        return direct
    for root in search_path():
        cand = root / name
        if (cand / "cascade.manifest").is_file():
            return cand
    raise PackError(f"no pack named {name!r} in {[str(p) for p in search_path()]}")


def load_cascade(name: str, registry: Registry | None = None, max_repeat: int = DEFAULT_MAX_REPEAT) -> Cascade:
    return load_manifest(pack_dir(name) / "cascade.manifest", registry, max_repeat)


def load_pack(name: str, registry: Registry | None = None) -> tuple[list[Grammar], list[Lexicon]]:
    """The grammars (in pass order) and lexicons of a pack."""
    d = pack_dir(name)
    cascade = load_cascade(name, registry)
    lexicons = [load_lexicon(p) for p in sorted(d.glob("*.lex"))]
    return [t.grammar for _, t in cascade.passes], lexicons


def load_ne_pack(registry: Registry | None = None) -> tuple[list[Grammar], list[Lexicon]]:
    return load_pack("ne", registry)


def load_de_pack(registry: Registry | None = None) -> tuple[list[Grammar], list[Lexicon]]:
    return load_pack("de", registry)
