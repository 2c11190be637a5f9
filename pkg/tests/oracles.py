"""Brute-force reference implementations used to check the optimized code."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations


def exhaustive_matching(system, gold, ok) -> int:
    """Largest one-to-one pairing, by trying every gold choice for every system item."""
    n = len(gold)

    @lru_cache(maxsize=None)
    def best(i: int, used: int) -> int:
        if i == len(system):
            return 0
        out = best(i + 1, used)
        for j in range(n):
            if not used >> j & 1 and ok(system[i], gold[j]):
                out = max(out, 1 + best(i + 1, used | 1 << j))
        return out

    return best(0, 0)


def exhaustive_counts(gold, system, level, bracket_type=True):
    """(tp, fp, fn) for one level, straight from the level definitions."""

    def ok(s, g):
        if s.turn != g.turn:
            return False
        overlap = s.start < g.end and g.start < s.end
        same = (s.start, s.end) == (g.start, g.end)
        if level == "entity-detection":
            return overlap
        if level == "entity-type":
            return overlap and s.type == g.type
        if level == "entity-bracket" and not bracket_type:
            return same
        return same and s.type == g.type

    fam = "DE" if level == "designating-entity" else "NE"
    g = [a for a in gold if a.family == fam]
    s = [a for a in system if a.family == fam]
    tp = exhaustive_matching(tuple(s), tuple(g), ok)
    return tp, len(s) - tp, len(g) - tp


def best_split_subsets(sizes, fraction, basis="work"):
    """All eval subsets (as index sets) whose size is closest to the target fraction."""
    total = sum(sizes)
    target = total * (fraction / (1 + fraction) if basis == "work" else fraction)
    best, out = None, []
    n = len(sizes)
    for k in range(1, n):
        for combo in combinations(range(n), k):
            d = abs(sum(sizes[i] for i in combo) - target)
            if best is None or d < best - 1e-9:
                best, out = d, [set(combo)]
            elif abs(d - best) <= 1e-9:
                out.append(set(combo))
    return best, out


def linear_scan_query(cat, view, filters):
    """Records of a catalog view by scanning the raw tables and joining links by hand."""
    statuses = ("raw", "reread", "validated")
    table = "transcriptions" if view.startswith("transcriptions") else view
    links = cat.rows("links")
    out = []
    for row in cat.rows(table):
        rec = dict(row)
        if view == "recordings":
            rec["speakers"] = ",".join(sorted({x["speaker_id"] for x in links if x["recording_id"] == row["id"]} - {""}))
        if view == "speakers":
            rec["recordings"] = ",".join(sorted({x["recording_id"] for x in links if x["speaker_id"] == row["id"]}))
        keep = True
        for field, op, value in filters:
            have, want = rec[field].lower(), value.lower()
            if op == "~":
                keep = keep and want in have
            else:
                keep = keep and (have == want or want in [p.strip() for p in have.split(",")])
        if keep:
            out.append(rec)
    if view == "transcriptions-by-status":
        return sorted(out, key=lambda r: (statuses.index(r["status"]), r["id"]))
    return sorted(out, key=lambda r: r["id"])
