"""Scoring system annotations against gold, and the work/eval corpus split."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .engine import Annotation, AnnotatedDocument

__all__ = [
    "LEVELS",
    "LEVEL_TITLES",
    "EvalError",
    "LevelCounts",
    "EvalReport",
    "relation",
    "max_matching",
    "score_annotations",
    "score",
    "sparsity_warning",
    "SplitResult",
    "split_corpus",
]

LEVELS = ("entity-detection", "entity-type", "entity-bracket", "designating-entity")
LEVEL_TITLES = {
    "entity-detection": "Entities",
    "entity-type": "Entity types",
    "entity-bracket": "Entity brackets",
    "designating-entity": "Designating entities",
}
LEVEL_FAMILY = {
    "entity-detection": "NE",
    "entity-type": "NE",
    "entity-bracket": "NE",
    "designating-entity": "DE",
}


class EvalError(ValueError):
    pass


def _overlap(a: Annotation, b: Annotation) -> bool:
    return a.turn == b.turn and a.start < b.end and b.start < a.end


def _same_span(a: Annotation, b: Annotation) -> bool:
    return a.turn == b.turn and a.start == b.start and a.end == b.end


def relation(level: str, bracket_type: bool = True) -> Callable[[Annotation, Annotation], bool]:
    """Whether a system annotation may count for a gold one at ``level``."""
    if level == "entity-detection":
        return _overlap
    if level == "entity-type":
        return lambda s, g: _overlap(s, g) and s.type == g.type
    if level == "entity-bracket" and not bracket_type:
        return _same_span
    if level in ("entity-bracket", "designating-entity"):
        return lambda s, g: _same_span(s, g) and s.type == g.type
    raise EvalError(f"unknown level {level!r}")


def max_matching(system: Sequence, gold: Sequence, ok: Callable) -> int:
    """Size of a maximum one-to-one matching between ``system`` and ``gold`` (augmenting paths)."""
    adj = [[j for j, g in enumerate(gold) if ok(s, g)] for s in system]
    owner = [-1] * len(gold)

    def augment(i: int, seen: list[bool]) -> bool:
        for j in adj[i]:
            if not seen[j]:
                seen[j] = True
                if owner[j] < 0 or augment(owner[j], seen):
                    owner[j] = i
                    return True
        return False

    return sum(1 for i in range(len(system)) if adj[i] and augment(i, [False] * len(gold)))


@dataclass
class LevelCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def gold(self) -> int:
        return self.tp + self.fn

    @property
    def system(self) -> int:
        return self.tp + self.fp

    @property
    def precision(self) -> float:
        # an empty comparison counts as perfect
        return self.tp / self.system if self.system else 1.0

    @property
    def recall(self) -> float:
        return self.tp / self.gold if self.gold else 1.0

    def __iadd__(self, other: "LevelCounts") -> "LevelCounts":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self


@dataclass
class EvalReport:
    levels: dict[str, LevelCounts] = field(default_factory=lambda: {lv: LevelCounts() for lv in LEVELS})
    files: int = 0
    bracket_type: bool = True

    def __getitem__(self, level: str) -> LevelCounts:
        return self.levels[level]

    @property
    def gold_entities(self) -> int:
        return self.levels["entity-detection"].gold

    @property
    def gold_designating(self) -> int:
        return self.levels["designating-entity"].gold

    def to_dict(self) -> dict:
        return {
            "files": self.files,
            "gold_entities": self.gold_entities,
            "gold_designating_entities": self.gold_designating,
            "bracket_requires_type": self.bracket_type,
            "levels": {
                lv: {
                    "tp": c.tp, "fp": c.fp, "fn": c.fn,
                    "precision": c.precision, "recall": c.recall,
                }
                for lv, c in self.levels.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        rows = [("", "Precision", "Recall", "TP", "FP", "FN")]
        for lv, c in self.levels.items():
            rows.append(
                (LEVEL_TITLES[lv], f"{100 * c.precision:.1f}%", f"{100 * c.recall:.1f}%", str(c.tp), str(c.fp), str(c.fn))
            )
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = [
            "  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(r, widths)))
            for r in rows
        ]
        lines.append(f"files: {self.files}  gold entities: {self.gold_entities}  gold designating entities: {self.gold_designating}")
        return "\n".join(line.rstrip() for line in lines) + "\n"


def score_annotations(
    gold: Iterable[Annotation], system: Iterable[Annotation], bracket_type: bool = True
) -> dict[str, LevelCounts]:
    """Counts per level for one document's annotation sets."""
    gold, system = list(gold), list(system)
    out = {}
    for lv in LEVELS:
        fam = LEVEL_FAMILY[lv]
        g = [a for a in gold if a.family == fam]
        s = [a for a in system if a.family == fam]
        ok = relation(lv, bracket_type)
        # matches never cross turns, so match turn by turn
        tp = 0
        for turn in {a.turn for a in g} & {a.turn for a in s}:
            tp += max_matching([a for a in s if a.turn == turn], [a for a in g if a.turn == turn], ok)
        out[lv] = LevelCounts(tp, len(s) - tp, len(g) - tp)
    return out


def _text_signature(adoc: AnnotatedDocument) -> list[list[str]]:
    doc = adoc.document
    return [[t.surface for t in doc.tokens(i) if t.is_text] for i in range(len(doc.turns))]


def score(
    gold: Sequence[AnnotatedDocument],
    system: Sequence[AnnotatedDocument],
    bracket_type: bool = True,
) -> EvalReport:
    """Score paired documents. Gold and system must transcribe the same text."""
    if len(gold) != len(system):
        raise EvalError(f"{len(gold)} gold documents but {len(system)} system documents")
    report = EvalReport(files=len(gold), bracket_type=bracket_type)
    for g, s in zip(gold, system):
        if _text_signature(g) != _text_signature(s):
            name = g.document.source or s.document.source or "<document>"
            raise EvalError(f"{name}: gold and system documents differ in their text")
        for lv, c in score_annotations(g.annotations, s.annotations, bracket_type).items():
            report.levels[lv] += c
    return report


def sparsity_warning(report: EvalReport, threshold: int = 100) -> str | None:
    """A warning naming each level whose gold count is under ``threshold``."""
    sparse = [f"{LEVEL_TITLES[lv]} ({c.gold})" for lv, c in report.levels.items() if c.gold < threshold]
    if not sparse:
        return None
    return f"fewer than {threshold} gold annotations at: " + ", ".join(sparse) + "; scores are unreliable"


# ---------------------------------------------------------------------------
# Corpus split


@dataclass(frozen=True)
class SplitResult:
    work: tuple[str, ...]
    eval: tuple[str, ...]
    work_bytes: int
    eval_bytes: int
    basis: str

    @property
    def fraction(self) -> float:
        """Achieved eval size relative to the basis (work set or whole corpus)."""
        denom = self.work_bytes if self.basis == "work" else self.work_bytes + self.eval_bytes
        return self.eval_bytes / denom if denom else 0.0

    def to_dict(self) -> dict:
        return {
            "work": list(self.work),
            "eval": list(self.eval),
            "work_bytes": self.work_bytes,
            "eval_bytes": self.eval_bytes,
            "basis": self.basis,
            "fraction": self.fraction,
        }


_DP_BITS = 1 << 20


def split_corpus(
    files: Sequence[str | Path | tuple[str, int]],
    fraction: float,
    seed: int = 0,
    basis: str = "work",
) -> SplitResult:
    """Pick the eval subset whose byte size is closest to ``fraction``.

    ``files`` are paths or ``(name, size)`` pairs. With ``basis="work"`` the
    fraction is eval bytes over work bytes, with ``"total"`` over all bytes.
    Files are shuffled with ``seed`` first; that order breaks ties. Both
    sides always keep at least one file.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    if basis not in ("work", "total"):
        raise ValueError(f"basis must be 'work' or 'total', got {basis!r}")
    items: list[tuple[str, int]] = []
    for f in files:
        if isinstance(f, tuple):
            items.append((str(f[0]), int(f[1])))
        else:
            items.append((str(f), Path(f).stat().st_size))
    if len(items) < 2:
        raise ValueError("need at least 2 files to split")
    names = [n for n, _ in items]
    if len(set(names)) != len(names):
        raise ValueError("duplicate file names")
    items.sort()
    random.Random(seed).shuffle(items)
    total = sum(s for _, s in items)
    target = total * (fraction / (1 + fraction) if basis == "work" else fraction)

    q = max(1, math.ceil(total / _DP_BITS))
    sizes = [max(1, round(s / q)) if s else 0 for _, s in items]
    qtotal = sum(sizes)
    qtarget = target / q
    # reach[i]: bitset of sums reachable with the first i files
    reach = [1]
    for s in sizes:
        reach.append(reach[-1] | (reach[-1] << s))
    full = reach[-1]

    best = None
    for d in range(qtotal + 1):
        for cand in sorted({math.floor(qtarget) - d, math.ceil(qtarget) + d}, key=lambda c: (abs(c - qtarget), c)):
            if 0 < cand < qtotal and (full >> cand) & 1:
                best = cand
                break
        if best is not None:
            break
    if best is None:
        # degenerate sizes (zero-byte files): the smallest file alone
        chosen = {min(range(len(items)), key=lambda i: (items[i][1], i))}
    else:
        chosen = _reconstruct(reach, sizes, best)
    ev = [items[i] for i in sorted(chosen)]
    wk = [items[i] for i in range(len(items)) if i not in chosen]
    return SplitResult(
        tuple(sorted(n for n, _ in wk)),
        tuple(sorted(n for n, _ in ev)),
        sum(s for _, s in wk),
        sum(s for _, s in ev),
        basis,
    )


def _reconstruct(reach: list[int], sizes: list[int], target: int) -> set[int]:
    """Indices of one subset summing to ``target``; later files are left out when possible."""
    chosen: set[int] = set()
    rem = target
    for i in range(len(sizes) - 1, -1, -1):
        if (reach[i] >> rem) & 1:
            continue
        chosen.add(i)
        rem -= sizes[i]
    return chosen
