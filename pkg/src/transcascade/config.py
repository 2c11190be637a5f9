"""``key=value`` configuration files."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .matching import DEFAULT_MAX_REPEAT
from .typology import Registry, default_registry

__all__ = ["ConfigError", "Config", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    extra_ne_types: tuple[str, ...] = ()
    extra_de_types: tuple[str, ...] = ()
    ne_element: str = "NE"
    sparsity_threshold: int = 100
    max_repeat: int = DEFAULT_MAX_REPEAT
    bracket_requires_type: bool = True
    packs: tuple[str, ...] = field(default=())

    def registry(self) -> Registry:
        return default_registry(self.extra_ne_types, self.extra_de_types)


_LISTS = {"extra_ne_types", "extra_de_types", "packs"}
_INTS = {"sparsity_threshold", "max_repeat"}
_BOOLS = {"bracket_requires_type"}


def parse_config(text: str, source: str = "<config>") -> Config:
    known = {f.name for f in fields(Config)}
    values: dict = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq:
            raise ConfigError(f"{source}:{n}: expected key=value")
        if key not in known:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        if key in _LISTS:
            values[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key in _INTS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"{source}:{n}: {key} must be an integer") from None
        elif key in _BOOLS:
            if value.lower() not in ("true", "false", "yes", "no", "1", "0"):
                raise ConfigError(f"{source}:{n}: {key} must be true or false")
            values[key] = value.lower() in ("true", "yes", "1")
        else:
            values[key] = value
    if values.get("ne_element", "NE") not in ("NE", "EN"):
        raise ConfigError(f"{source}: ne_element must be NE or EN")
    return Config(**values)


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    try:
        return parse_config(path.read_text(encoding="utf-8"), str(path))
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
