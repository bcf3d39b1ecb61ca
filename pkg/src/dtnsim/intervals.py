"""Integer-second interval sets over half-open ranges [start, end).

All observation-time ranges in the simulator are manipulated through
these helpers so partition identities (hit + miss == request) hold
exactly, with no floating point involved.

An interval set is a list of (start, end) tuples, sorted by start,
pairwise disjoint and non-adjacent (canonical form).
"""

from __future__ import annotations

Interval = tuple[int, int]
IntervalSet = list[Interval]


def normalize(pairs) -> IntervalSet:
    """Sort, drop empty intervals, and coalesce overlapping/adjacent ones."""
    items = sorted((int(s), int(e)) for s, e in pairs if e > s)
    out: IntervalSet = []
    for s, e in items:
        if out and s <= out[-1][1]:
            if e > out[-1][1]:
                out[-1] = (out[-1][0], e)
        else:
            out.append((s, e))
    return out


def measure(ivals: IntervalSet) -> int:
    """Total covered length in seconds."""
    return sum(e - s for s, e in ivals)


def intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    """Intersection of two canonical interval sets."""
    out: IntervalSet = []
    i = j = 0
    while i < len(a) and j < len(b):
        s = max(a[i][0], b[j][0])
        e = min(a[i][1], b[j][1])
        if s < e:
            out.append((s, e))
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return out


def subtract(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    """Parts of `a` not covered by `b`."""
    out: IntervalSet = []
    j = 0
    for s, e in a:
        cur = s
        while j < len(b) and b[j][1] <= cur:
            j += 1
        k = j
        while k < len(b) and b[k][0] < e:
            bs, be = b[k]
            if bs > cur:
                out.append((cur, min(bs, e)))
            cur = max(cur, be)
            if cur >= e:
                break
            k += 1
        if cur < e:
            out.append((cur, e))
    return out


def union(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return normalize(list(a) + list(b))


def contains(ivals: IntervalSet, other: IntervalSet) -> bool:
    """True if `other` is fully covered by `ivals`."""
    return not subtract(other, ivals)
