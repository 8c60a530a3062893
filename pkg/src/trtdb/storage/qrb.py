"""Quantum re-ordering buffer: absorbs out-of-order arrivals within a window.

The buffer holds timestamp-row pairs in arrival order. When it reaches q
elements an expiration runs: a stable sort by timestamp, the first
floor(a*q) elements leave for the memtable and the rest start the next
window. The minimum allowed timestamp becomes the largest flushed one;
rows below it are rejected as late. Any input whose rows are displaced
from sorted position by fewer than (1-a)*q places is stored fully sorted
with zero rejections.
"""

import math
from operator import itemgetter

_TS = itemgetter(0)


class QuantumReorderBuffer:
    __slots__ = ("q", "flush_fraction", "t_min_allowed", "elements")

    def __init__(self, q, a):
        self.q = q
        self.flush_fraction = a
        self.t_min_allowed = -math.inf  # no floor until the first expiry
        self.elements = []

    def __len__(self):
        return len(self.elements)

    def is_late(self, ts):
        return ts < self.t_min_allowed

    def append(self, ts, values):
        self.elements.append((ts, values))

    def expire_if_due(self):
        """Run the expiration when the buffer has reached q elements.

        Returns the sorted flushed prefix, or None when no expiry was due.
        Equal timestamps keep arrival order (the sort is stable).
        """
        if len(self.elements) < self.q:
            return None
        self.elements.sort(key=_TS)
        cut = math.floor(self.flush_fraction * self.q)
        flushed = self.elements[:cut]
        self.elements = self.elements[cut:]
        self.t_min_allowed = flushed[-1][0]
        return flushed

    def snapshot_sorted(self):
        """Point-in-time copy for readers, sorted by timestamp (stable)."""
        return sorted(self.elements, key=_TS)

    def drain_sorted(self):
        """Remove and return everything, sorted; used on clean close."""
        rows = sorted(self.elements, key=_TS)
        self.elements = []
        if rows:
            self.t_min_allowed = rows[-1][0]
        return rows
