"""Pairwise temporal and spatial measures between atomic motions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIMULTANEOUS = "simultaneous"
SEQUENTIAL = "sequential"

_COMPACT = {
    "equal": SIMULTANEOUS,
    "during": SIMULTANEOUS,
    "overlap": SIMULTANEOUS,
    "after": SEQUENTIAL,
    "before": SEQUENTIAL,
}


@dataclass(frozen=True)
class IntervalRelation:
    category: str
    compact: str
    simultaneous_measure: float
    sequential_measure: float

    @property
    def measure(self) -> float:
        """The measure matching the compact relation type."""
        if self.compact == SIMULTANEOUS:
            return self.simultaneous_measure
        return self.sequential_measure


def _check(iv):
    s, e = iv
    if not s < e:
        raise ValueError(f"invalid interval {iv!r}")
    return s, e


def simultaneous_measure(a, b) -> float:
    (s1, e1), (s2, e2) = a, b
    return float(max(abs(s1 - s2), abs(e1 - e2)))


def sequential_measure(a, b) -> float:
    (s1, e1), (s2, e2) = a, b
    return float(min(abs(e1 - s2), abs(e2 - s1)))


def classify_intervals(a, b) -> IntervalRelation:
    """Allen-style category of interval ``b`` relative to ``a``.

    Configurations outside the five named tests (shared start or end,
    meeting endpoints) fall back to whichever compact measure is smaller.
    """
    s1, e1 = _check(a)
    s2, e2 = _check(b)
    sim = simultaneous_measure(a, b)
    seq = sequential_measure(a, b)

    if s1 == s2 and e1 == e2:
        category = "equal"
    elif (s1 < s2 and e1 > e2) or (s2 < s1 and e2 > e1):
        category = "during"
    elif (s1 < s2 < e1 < e2) or (s2 < s1 < e2 < e1):
        category = "overlap"
    elif s2 > e1:
        category = "after"
    elif s1 > e2:
        category = "before"
    elif sim <= seq:
        # shared start or shared end: one interval contains the other
        category = "during" if (s1 == s2 or e1 == e2) else "overlap"
    else:
        category = "after" if s1 + e1 <= s2 + e2 else "before"
    return IntervalRelation(category, _COMPACT[category], sim, seq)


def neighborhood_measure(a, b) -> float:
    """Temporal closeness used for ICM adjacency: min of the two compact measures."""
    return min(simultaneous_measure(a, b), sequential_measure(a, b))


def spatial_distance(m_i, m_j) -> float:
    # hypot does not underflow for tiny differences
    return math.hypot(*(np.asarray(m_i, dtype=float) - np.asarray(m_j, dtype=float)))


def spatial_orientation(m_i, m_j) -> float:
    """Cosine between the two centroid vectors; 0 when either has zero norm."""
    a = np.asarray(m_i, dtype=float)
    b = np.asarray(m_j, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def neighborhood_matrix(intervals, theta: float) -> np.ndarray:
    """Boolean adjacency: True where the neighborhood measure is within ``theta``.

    The diagonal is False.
    """
    n = len(intervals)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for k in range(i + 1, n):
            adj[i, k] = adj[k, i] = neighborhood_measure(intervals[i], intervals[k]) <= theta
    return adj
