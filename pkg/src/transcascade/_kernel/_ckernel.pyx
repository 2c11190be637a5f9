# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled matching kernel; see ``_pykernel`` for the contract."""

from libc.stdlib cimport malloc, free

BACKEND = "cython"


cdef void _max_ends(int n_states, const int[:] arc_ptr, const int[:] arc_pred, const int[:] arc_target,
                    const int[:] arc_guard, int n, const int[:] adv_ptr, const int[:] adv_len,
                    const signed char[:] guard_ok, int* m) nogil:
    cdef int stride = n + 1
    cdef int p, q, a, g, k, t, j, i, e, best, base
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


cdef list _first_path(int n_states, const int[:] arc_ptr, const int[:] arc_pred, const int[:] arc_target,
                      const int[:] arc_guard, int n, const int[:] adv_ptr, const int[:] adv_len,
                      const signed char[:] guard_ok, int* m, int p0, int end):
    cdef int stride = n + 1
    cdef int q = 0, p = p0, a, g, k, t, j, i, step
    cdef bint moved
    cdef list path = []
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
                    q = t
                    p = p + step
                    moved = True
                    break
            if moved:
                break
        if not moved:
            raise RuntimeError("no path to the computed end; inconsistent tables")


def max_ends(int n_states, const int[:] arc_ptr, const int[:] arc_pred, const int[:] arc_target,
             const int[:] arc_guard, int n, const int[:] adv_ptr, const int[:] adv_len,
             const signed char[:] guard_ok):
    cdef int size = (n + 1) * n_states
    cdef int* m = <int*> malloc(size * sizeof(int))
    if m == NULL:
        raise MemoryError()
    try:
        _max_ends(n_states, arc_ptr, arc_pred, arc_target, arc_guard, n, adv_ptr, adv_len, guard_ok, m)
        return [m[i] for i in range(size)]
    finally:
        free(m)


def scan(int n_states, const int[:] arc_ptr, const int[:] arc_pred, const int[:] arc_target,
         const int[:] arc_guard, int n, const int[:] adv_ptr, const int[:] adv_len,
         const signed char[:] guard_ok):
    cdef int size = (n + 1) * n_states
    cdef int* m = <int*> malloc(size * sizeof(int))
    cdef int p = 0, end
    cdef list out = []
    if m == NULL:
        raise MemoryError()
    try:
        with nogil:
            _max_ends(n_states, arc_ptr, arc_pred, arc_target, arc_guard, n, adv_ptr, adv_len, guard_ok, m)
        while p < n:
            end = m[p * n_states]
            if end > p:
                out.append((p, end, _first_path(n_states, arc_ptr, arc_pred, arc_target, arc_guard, n,
                                                adv_ptr, adv_len, guard_ok, m, p, end)))
                p = end
            else:
                p += 1
        return out
    finally:
        free(m)
