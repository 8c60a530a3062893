"""Result tables: a column header plus ordered rows.

Time-indexed tables carry their tick column first under the reserved name
__time and remember the tick rate; projection drops it.
"""

from dataclasses import dataclass, field
from typing import Optional

from ..errors import QueryError

TIME_COL = "__time"


@dataclass
class ResultTable:
    columns: list
    rows: list
    tps: Optional[int] = None  # ticks per second of the __time column

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise QueryError(
                    f"row arity {len(row)} does not match header {self.columns}")

    @property
    def has_time(self):
        return bool(self.columns) and self.columns[0] == TIME_COL

    @property
    def visible_columns(self):
        return self.columns[1:] if self.has_time else list(self.columns)

    def col_index(self, name):
        try:
            return self.columns.index(name)
        except ValueError:
            raise QueryError(f"no column named {name!r}; have {self.columns}") from None

    def time_of(self, row):
        return row[0] if self.has_time else None
