"""Tag typologies for named entities (NE) and designating entities (DE)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

__all__ = [
    "TypologyError",
    "Typology",
    "ne_typology",
    "de_typology",
    "Registry",
    "default_registry",
    "type_matches",
    "NE_FAMILIES",
    "DE_ROLES",
    "DE_ATTRIBUTES",
]

NE_FAMILIES = ("pers", "fonc", "org", "loc", "prod", "time", "amount", "event")
# Subtypes attested in the source material. time.date is the implied parent of time.date.rel.
NE_SUBTYPES = ("pers.hum", "fonc.pol", "loc.fac", "loc.admi", "time.date", "time.date.rel")

DE_ROLES = ("pers.speaker", "pers.spouse", "pers.child", "pers.parent")
DE_ATTRIBUTES = (
    "identity.age",
    "identity.birth",
    "identity.origin",
    "identity.arrival",
    "identity.children",
    "work.occupation",
    "work.field",
    "work.location",
    "work.business",
)


class TypologyError(ValueError):
    pass


def type_matches(pattern: str, type_: str) -> bool:
    """``loc.*`` matches ``loc`` and its descendants, ``*`` anything, else exact."""
    if pattern == "*":
        return True
    if pattern.endswith(".*"):
        stem = pattern[:-2]
        return type_ == stem or type_.startswith(stem + ".")
    return pattern == type_


@dataclass(frozen=True)
class Typology:
    family: str
    types: frozenset[str]

    def __post_init__(self) -> None:
        for t in self.types:
            parent = t.rpartition(".")[0]
            if not t or any(not part for part in t.split(".")):
                raise TypologyError(f"malformed type {t!r}")
            if parent and parent not in self.types:
                raise TypologyError(f"{self.family} type {t!r} has no registered parent {parent!r}")

    def accepts(self, type_: str) -> bool:
        return type_ in self.types

    def check(self, type_: str) -> None:
        if type_ not in self.types:
            raise TypologyError(f"unknown {self.family} type {type_!r}")

    def accepts_pattern(self, pattern: str) -> bool:
        if pattern == "*":
            return True
        return self.accepts(pattern[:-2] if pattern.endswith(".*") else pattern)

    def parent(self, type_: str) -> str | None:
        self.check(type_)
        return type_.rpartition(".")[0] or None

    def children(self, type_: str) -> list[str]:
        return sorted(t for t in self.types if t.rpartition(".")[0] == type_)

    def extended(self, extra: Iterable[str]) -> "Typology":
        """Registry plus ``extra`` types; intermediate parents are added for dotted paths."""
        types = set(self.types)
        for t in extra:
            parts = t.split(".")
            for i in range(1, len(parts) + 1):
                types.add(".".join(parts[:i]))
        return type(self)(self.family, frozenset(types))


def ne_typology(extra: Iterable[str] = ()) -> Typology:
    base = Typology("NE", frozenset(NE_FAMILIES + NE_SUBTYPES))
    extra = tuple(extra)
    return base.extended(extra) if extra else base


class DeTypology(Typology):
    """DE registry with the role/attribute containment rule."""

    def is_role(self, type_: str) -> bool:
        return type_ == "pers" or type_.startswith("pers.")

    def is_attribute(self, type_: str) -> bool:
        return not self.is_role(type_)

    def may_contain(self, outer: str, inner_family: str, inner: str) -> bool:
        """Whether a DE ``outer`` span may enclose a ``inner_family``/``inner`` span."""
        if inner_family != "DE":
            return True
        return not (self.is_attribute(outer) and self.is_role(inner))


def de_typology(extra: Iterable[str] = ()) -> DeTypology:
    base = DeTypology("DE", frozenset(("pers", "identity", "work") + DE_ROLES + DE_ATTRIBUTES))
    extra = tuple(extra)
    return base.extended(extra) if extra else base


@dataclass(frozen=True)
class Registry:
    ne: Typology
    de: DeTypology

    def family(self, name: str) -> Typology:
        if name in ("NE", "EN"):
            return self.ne
        if name == "DE":
            return self.de
        raise TypologyError(f"unknown tag family {name!r}")

    def check(self, family: str, type_: str) -> None:
        self.family(family).check(type_)

    def accepts(self, family: str, type_: str) -> bool:
        try:
            return self.family(family).accepts(type_)
        except TypologyError:
            return False


def default_registry(extra_ne: Iterable[str] = (), extra_de: Iterable[str] = ()) -> Registry:
    return Registry(ne_typology(extra_ne), de_typology(extra_de))
