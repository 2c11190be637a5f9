"""Pure-Python matching kernel.

Same contract as the compiled ``_ckernel`` module; used when the extension is
not built or when ``TRANSCASCADE_PURE_PYTHON`` is set.

Inputs describe an epsilon-free transducer (``arc_ptr`` indexes the arcs of
each state; ``arc_pred`` is a predicate id or -1 for an accepting arc;
``arc_guard`` a guard id or -1) and one stream of ``n`` units:
``adv_len[adv_ptr[k*(n+1)+p]:adv_ptr[k*(n+1)+p+1]]`` are the lengths predicate
``k`` can consume at ``p`` (longest first) and ``guard_ok[g*(n+1)+p]`` says
whether guard ``g`` holds at ``p``.
"""

BACKEND = "python"


def max_ends(n_states, arc_ptr, arc_pred, arc_target, arc_guard, n, adv_ptr, adv_len, guard_ok):
    """Table ``m[p*n_states+q]``: furthest end reachable from state ``q`` at ``p`` (-1: none)."""
    m = [-1] * ((n + 1) * n_states)
    stride = n + 1
    for p in range(n, -1, -1):
        base = p * n_states
        for q in range(n_states):
            best = -1
            for a in range(arc_ptr[q], arc_ptr[q + 1]):
                g = arc_guard[a]
                if g >= 0 and not guard_ok[g * stride + p]:
                    continue
                k = arc_pred[a]
                if k < 0:
                    if p > best:
                        best = p
                    continue
                t = arc_target[a]
                j = k * stride + p
                for i in range(adv_ptr[j], adv_ptr[j + 1]):
                    e = m[(p + adv_len[i]) * n_states + t]
                    if e > best:
                        best = e
            m[base + q] = best
    return m


def first_path(n_states, arc_ptr, arc_pred, arc_target, arc_guard, n, adv_ptr, adv_len, guard_ok, m, p0, end):
    """Highest-priority arc path from the start state at ``p0`` to ``end``, as ``(arc, pos)`` pairs."""
    stride = n + 1
    path = []
    q, p = 0, p0
    while True:
        moved = False
        for a in range(arc_ptr[q], arc_ptr[q + 1]):
            g = arc_guard[a]
            if g >= 0 and not guard_ok[g * stride + p]:
                continue
            k = arc_pred[a]
            if k < 0:
                if p == end:
                    path.append((a, p))
                    return path
                continue
            t = arc_target[a]
            j = k * stride + p
            for i in range(adv_ptr[j], adv_ptr[j + 1]):
                step = adv_len[i]
                if m[(p + step) * n_states + t] == end:
                    path.append((a, p))
                    q, p = t, p + step
                    moved = True
                    break
            if moved:
                break
        if not moved:
            raise RuntimeError("no path to the computed end; inconsistent tables")


def scan(n_states, arc_ptr, arc_pred, arc_target, arc_guard, n, adv_ptr, adv_len, guard_ok):
    """Leftmost-longest scan: list of ``(start, end, path)`` for the accepted matches."""
    m = max_ends(n_states, arc_ptr, arc_pred, arc_target, arc_guard, n, adv_ptr, adv_len, guard_ok)
    out = []
    p = 0
    while p < n:
        end = m[p * n_states]
        if end > p:
            path = first_path(
                n_states, arc_ptr, arc_pred, arc_target, arc_guard, n, adv_ptr, adv_len, guard_ok, m, p, end
            )
            out.append((p, end, path))
            p = end
        else:
            p += 1
    return out
