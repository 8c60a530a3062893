"""Naive uncompressed in-memory store.

The reference the engine is checked against: plain row lists, a stable
sort by timestamp, linear scans. Deliberately shares no code with the
block or codec paths.
"""

import math

from ..errors import EmptyAggregate, SeriesNotFound


class OracleStore:
    def __init__(self):
        self._rows = {}
        self._dirty = {}

    def create_series(self, name):
        self._rows.setdefault(name, [])
        self._dirty[name] = False

    def insert(self, name, ts, values):
        self._rows[name].append((ts, tuple(values)))
        self._dirty[name] = True

    def _sorted_rows(self, name):
        if name not in self._rows:
            raise SeriesNotFound(name)
        if self._dirty[name]:
            self._rows[name].sort(key=lambda r: r[0])
            self._dirty[name] = False
        return self._rows[name]

    def query_range(self, name, start, end):
        return [r for r in self._sorted_rows(name) if start <= r[0] <= end]

    def full_scan(self, name):
        return list(self._sorted_rows(name))

    def aggregate_range(self, name, column_index, fn, start, end):
        rows = self.query_range(name, start, end)
        values = [r[1][column_index] for r in rows]
        present = [v for v in values if not (isinstance(v, float) and math.isnan(v))]
        if fn == "count":
            return len(values)
        if fn == "sum":
            return float(sum(present))
        if fn == "avg":
            if not values:
                raise EmptyAggregate("avg over empty range")
            return float(sum(present)) / len(values)
        if not present:
            raise EmptyAggregate(f"{fn} over empty range")
        return min(present) if fn == "min" else max(present)
