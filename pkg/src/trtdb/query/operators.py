"""Query operator trees and their bottom-up evaluation.

Leaves are match+scan nodes that materialize one time-indexed table per
binding match (timestamp plus one column per bound variable, model nodes
as constant columns) and merge the matches in time order. Inner operators
are small relational pieces: filter with timestamp pushdown into the
storage index, natural/condition joins, time-ordered union with null
padding, set difference, grouping/aggregation with an index fast path,
sort, project, adjacent-duplicate elimination and limit.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

from ..analytics import sma as sma_series
from ..errors import ContractViolation, EmptyAggregate, QueryError
from .exprs import (
    BinOp,
    NumLit,
    TimeLit,
    Var,
    conjuncts_of,
    evaluate,
    extract_time_window,
    variables_of,
)
from .match import bgp_variables, match
from .model import Literal, ModelMapping
from .table import TIME_COL, ResultTable

_TS_MIN = -(1 << 63)
_TS_MAX = (1 << 63) - 1

AGG_FNS = ("count", "sum", "avg", "min", "max", "sample", "groupconcat")
_STORE_FNS = {"count", "sum", "avg", "min", "max"}

BUCKET_SECONDS = {"hours": 3600, "minutes": 60, "days": 86400}
DURATION_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400, "w": 604800}


# ------------------------------------------------------------------- nodes


@dataclass(frozen=True)
class MatchScan:
    bgp: tuple
    mapping_name: Optional[str] = None


@dataclass(frozen=True)
class Filter:
    child: object
    expr: object


@dataclass(frozen=True)
class Join:
    left: object
    right: object
    condition: object = None  # None means natural join on shared columns
    kind: str = "inner"       # "inner" or "left"


@dataclass(frozen=True)
class SemiJoin:
    left: object
    right: object
    condition: object = None


@dataclass(frozen=True)
class Union:
    children: tuple


@dataclass(frozen=True)
class SetMap:
    child: object
    mapping_name: str


@dataclass(frozen=True)
class Extend:
    child: object
    expr: object
    var: str


@dataclass(frozen=True)
class Minus:
    left: object
    right: object


@dataclass(frozen=True)
class Aggregate:
    child: object
    group_key: object          # None | ("col", var) | ("bucket", seconds, var) | ("sma", tau, var)
    aggs: tuple                # ((fn, column or "*", alias), ...)


@dataclass(frozen=True)
class Sort:
    child: object
    ordinals: tuple            # signed 1-based positions over visible columns


@dataclass(frozen=True)
class Project:
    child: object
    cols: Optional[tuple]      # None selects every visible column
    renames: Optional[tuple] = None


@dataclass(frozen=True)
class Distinct:
    child: object


@dataclass(frozen=True)
class Limit:
    child: object
    offset: int
    fetch: Optional[int]


# --------------------------------------------------------------- factories


def op_scan(bgp, mapping_name=None):
    bgp = tuple(tuple(p) for p in bgp)
    if not bgp:
        raise ContractViolation("basic graph pattern must be non-empty")
    return MatchScan(bgp, mapping_name)


def op_filter(child, expr):
    return Filter(child, expr)


def op_join(left, right, condition=None, kind="inner"):
    if kind not in ("inner", "left"):
        raise ContractViolation(f"unknown join kind {kind!r}")
    return Join(left, right, condition, kind)


def op_semijoin(left, right, condition=None):
    return SemiJoin(left, right, condition)


def op_union(*children):
    if len(children) == 1 and isinstance(children[0], (list, tuple)):
        children = tuple(children[0])
    return Union(tuple(children))


def op_setmap(child, mapping_name):
    return SetMap(child, mapping_name)


def op_extend(child, expr, var):
    return Extend(child, expr, var)


def op_minus(left, right):
    return Minus(left, right)


def op_aggregate(child, group_key, aggs):
    aggs = tuple((fn, col, alias) for fn, col, alias in aggs)
    for fn, _, _ in aggs:
        if fn not in AGG_FNS:
            raise ContractViolation(f"unknown aggregate {fn!r}")
    return Aggregate(child, group_key, aggs)


def op_sort(child, ordinals):
    ordinals = tuple(ordinals)
    for o in ordinals:
        if not isinstance(o, int) or o == 0:
            raise ContractViolation(f"sort ordinal {o!r} must be a non-zero signed integer")
    return Sort(child, ordinals)


def op_project(child, cols=None, renames=None):
    if cols is not None:
        cols = tuple(cols)
        if renames is not None:
            renames = tuple(renames)
            if len(renames) != len(cols):
                raise ContractViolation("renames must match projected columns")
    return Project(child, cols, renames)


def op_distinct(child):
    return Distinct(child)


def op_limit(child, offset=0, fetch=None):
    if offset < 0 or (fetch is not None and fetch < 0):
        raise ContractViolation("limit offset and fetch must be non-negative")
    return Limit(child, offset, fetch)


# --------------------------------------------------------------- execution


def execute(tree, store, mapping, pushdown=True, aggregate_fastpath=True):
    """Evaluate an operator tree bottom-up to a result table.

    `mapping` is one ModelMapping or a dict of named mappings for setMap
    scoping. Disabling `pushdown` or `aggregate_fastpath` never changes
    results, only how much of the store is decoded.
    """
    if isinstance(mapping, ModelMapping):
        mappings = {mapping.name: mapping}
        default = mapping.name
    else:
        mappings = dict(mapping)
        default = "default" if "default" in mappings else (
            next(iter(mappings)) if len(mappings) == 1 else None)
    ex = _Executor(store, mappings, default, pushdown, aggregate_fastpath)
    return ex.run(tree)


def _merge_time_tables(tables, columns, tps):
    """Stable k-way merge of identically-shaped rows by leading time."""

    def key(row):
        t = row[0]
        return (1, 0) if t is None else (0, t)

    rows = list(heapq.merge(*[t for t in tables], key=key))
    return ResultTable(list(columns), rows, tps)


class _Executor:
    def __init__(self, store, mappings, default_name, pushdown, aggregate_fastpath):
        self.store = store
        self.mappings = mappings
        self.scope = [default_name]
        self.pushdown = pushdown
        self.aggregate_fastpath = aggregate_fastpath

    # mapping scope -----------------------------------------------------

    def _mapping(self, name=None):
        name = name or self.scope[-1]
        if name is None or name not in self.mappings:
            raise QueryError(f"no model mapping named {name!r} is loaded")
        return self.mappings[name]

    # dispatch ----------------------------------------------------------

    def run(self, node):
        if isinstance(node, MatchScan):
            return self._scan(node, None)
        if isinstance(node, Filter):
            return self._filter(node)
        if isinstance(node, Join):
            return self._join(node)
        if isinstance(node, SemiJoin):
            return self._semijoin(node)
        if isinstance(node, Union):
            return self._union(node)
        if isinstance(node, SetMap):
            self.scope.append(node.mapping_name)
            try:
                return self.run(node.child)
            finally:
                self.scope.pop()
        if isinstance(node, Extend):
            return self._extend(node)
        if isinstance(node, Minus):
            return self._minus(node)
        if isinstance(node, Aggregate):
            return self._aggregate(node)
        if isinstance(node, Sort):
            return self._sort(node)
        if isinstance(node, Project):
            return self._project(node)
        if isinstance(node, Distinct):
            return self._distinct(node)
        if isinstance(node, Limit):
            t = self.run(node.child)
            end = None if node.fetch is None else node.offset + node.fetch
            return ResultTable(t.columns, t.rows[node.offset:end], t.tps)
        raise QueryError(f"unknown operator node {node!r}")

    # leaves ------------------------------------------------------------

    def _scan(self, node, push_expr):
        mapping = self._mapping(node.mapping_name)
        matches = match(node.bgp, mapping)
        variables = bgp_variables(node.bgp)
        columns = [TIME_COL] + variables
        tables = []
        tps = None
        for bm in matches:
            rows, match_tps = self._materialize(bm, variables, push_expr)
            if match_tps is not None:
                if tps is not None and match_tps != tps:
                    raise QueryError("matched series use different timestamp precisions")
                tps = match_tps
            tables.append(rows)
        return _merge_time_tables(tables, columns, tps)

    def _materialize(self, bm, variables, push_expr):
        """Rows for one binding match: one scan per bound series, a
        timestamp merge-join when a match spans several, constants from
        the model for the rest."""
        by_series = {}
        constants = {}
        for var in variables:
            target = bm[var]
            if target.is_stored:
                by_series.setdefault(target.series, []).append((var, target))
            else:
                term = target.term
                constants[var] = term.value if isinstance(term, Literal) else term
        if not by_series:
            row = tuple([None] + [constants[v] for v in variables])
            return [row], None

        series_tables = []
        tps = None
        for series, group in by_series.items():
            schema = self.store.schema(series)
            stps = schema.precision.ticks_per_second
            if tps is None:
                tps = stps
            elif tps != stps:
                raise QueryError(
                    f"series {series!r} mixes timestamp precision with another series "
                    f"in the same graph pattern")
            lo, hi = _TS_MIN, _TS_MAX
            if self.pushdown and push_expr is not None:
                time_vars = [v for v, t in group if t.is_time]
                if time_vars:
                    wlo, whi = extract_time_window(push_expr, time_vars[0], stps)
                    if wlo is not None:
                        lo = wlo
                    if whi is not None:
                        hi = whi
            if lo > hi:
                series_tables.append((group, []))
                continue
            extractors = []
            for var, target in group:
                if target.is_time:
                    extractors.append(None)
                else:
                    extractors.append(schema.column_index(target.column))
            rows = []
            for r in self.store.query_range(series, lo, hi):
                rows.append((r.ts,) + tuple(
                    r.ts if ix is None else r.values[ix] for ix in extractors))
            series_tables.append((group, rows))

        merged = series_tables[0][1]
        merged_vars = [v for v, _ in series_tables[0][0]]
        for group, rows in series_tables[1:]:
            merged = _ts_equijoin(merged, rows)
            merged_vars += [v for v, _ in group]
        var_pos = {v: i + 1 for i, v in enumerate(merged_vars)}
        out = []
        for row in merged:
            out.append(tuple([row[0]] + [
                row[var_pos[v]] if v in var_pos else constants[v] for v in variables]))
        return out, tps

    # inner operators ----------------------------------------------------

    def _filter(self, node):
        push = node.expr if isinstance(node.child, MatchScan) else None
        table = self._scan(node.child, push) if push is not None else self.run(node.child)
        env_cols = table.columns
        rows = []
        for row in table.rows:
            env = dict(zip(env_cols, row))
            if evaluate(node.expr, env, table.tps) is True:
                rows.append(row)
        return ResultTable(list(table.columns), rows, table.tps)

    def _union(self, node):
        tables = [self.run(c) for c in node.children]
        if not tables:
            return ResultTable([], [])
        has_time = any(t.has_time for t in tables)
        columns = [TIME_COL] if has_time else []
        for t in tables:
            for c in t.visible_columns:
                if c not in columns:
                    columns.append(c)
        tps = None
        for t in tables:
            if t.tps is not None:
                if tps is not None and t.tps != tps:
                    raise QueryError("union over series with different timestamp precisions")
                tps = t.tps
        shaped = []
        for t in tables:
            idx = {c: i for i, c in enumerate(t.columns)}
            out = []
            for row in t.rows:
                shaped_row = []
                for c in columns:
                    if c == TIME_COL:
                        shaped_row.append(t.time_of(row))
                    else:
                        shaped_row.append(row[idx[c]] if c in idx else None)
                out.append(tuple(shaped_row))
            shaped.append(out)
        if has_time:
            return _merge_time_tables(shaped, columns, tps)
        rows = [r for part in shaped for r in part]
        return ResultTable(columns, rows, tps)

    def _join(self, node):
        left = self.run(node.left)
        right = self.run(node.right)
        if node.condition is None:
            return self._natural_join(left, right, node.kind)
        overlap = set(left.visible_columns) & set(right.visible_columns)
        if overlap:
            raise QueryError(
                f"condition join over ambiguous duplicate columns {sorted(overlap)}; "
                f"rename one side first")
        columns = list(left.columns) + right.visible_columns
        rows = []
        right_rows = right.rows
        right_vis = [(right.col_index(c), c) for c in right.visible_columns]
        for lrow in left.rows:
            matched = False
            for rrow in right_rows:
                env = dict(zip(left.columns, lrow))
                env.update({c: rrow[i] for i, c in right_vis})
                if evaluate(node.condition, env, left.tps or right.tps) is True:
                    rows.append(tuple(lrow) + tuple(rrow[i] for i, _ in right_vis))
                    matched = True
            if node.kind == "left" and not matched:
                rows.append(tuple(lrow) + (None,) * len(right_vis))
        return ResultTable(columns, rows, left.tps or right.tps)

    def _natural_join(self, left, right, kind):
        shared = [c for c in left.visible_columns if c in set(right.visible_columns)]
        join_time = left.has_time and right.has_time
        lkey = [left.col_index(c) for c in shared]
        rkey = [right.col_index(c) for c in shared]
        if join_time:
            lkey = [0] + lkey
            rkey = [0] + rkey
        right_only = [c for c in right.visible_columns if c not in set(shared)]
        rout = [right.col_index(c) for c in right_only]
        index = {}
        for rrow in right.rows:
            key = tuple(rrow[i] for i in rkey)
            if any(k is None for k in key):
                continue
            index.setdefault(key, []).append(tuple(rrow[i] for i in rout))
        columns = list(left.columns) + right_only
        rows = []
        for lrow in left.rows:
            key = tuple(lrow[i] for i in lkey)
            partners = index.get(key) if not any(k is None for k in key) else None
            if partners:
                for extra in partners:
                    rows.append(tuple(lrow) + extra)
            elif kind == "left":
                rows.append(tuple(lrow) + (None,) * len(right_only))
        tps = left.tps or right.tps
        return ResultTable(columns, rows, tps)

    def _semijoin(self, node):
        left = self.run(node.left)
        right = self.run(node.right)
        if node.condition is None:
            shared = [c for c in left.visible_columns if c in set(right.visible_columns)]
            if left.has_time and right.has_time:
                lkey = [0] + [left.col_index(c) for c in shared]
                rkey = [0] + [right.col_index(c) for c in shared]
            else:
                lkey = [left.col_index(c) for c in shared]
                rkey = [right.col_index(c) for c in shared]
            keys = {tuple(r[i] for i in rkey) for r in right.rows}
            rows = [r for r in left.rows
                    if not any(r[i] is None for i in lkey)
                    and tuple(r[i] for i in lkey) in keys]
        else:
            overlap = set(left.visible_columns) & set(right.visible_columns)
            if overlap:
                raise QueryError(
                    f"semijoin condition over ambiguous duplicate columns {sorted(overlap)}")
            rows = []
            for lrow in left.rows:
                env = dict(zip(left.columns, lrow))
                for rrow in right.rows:
                    env2 = dict(env)
                    env2.update(zip(right.columns, rrow))
                    if evaluate(node.condition, env2, left.tps or right.tps) is True:
                        rows.append(lrow)
                        break
        return ResultTable(list(left.columns), rows, left.tps)

    def _minus(self, node):
        left = self.run(node.left)
        right = self.run(node.right)
        shared = [c for c in left.visible_columns if c in set(right.visible_columns)]
        if not shared:
            return left
        lkey = [left.col_index(c) for c in shared]
        rkey = [right.col_index(c) for c in shared]
        drop = {tuple(r[i] for i in rkey) for r in right.rows}
        rows = [r for r in left.rows if tuple(r[i] for i in lkey) not in drop]
        return ResultTable(list(left.columns), rows, left.tps)

    def _extend(self, node):
        table = self.run(node.child)
        if node.var in table.columns:
            raise QueryError(f"extend would shadow existing column {node.var}")
        rows = []
        for row in table.rows:
            env = dict(zip(table.columns, row))
            rows.append(tuple(row) + (evaluate(node.expr, env, table.tps),))
        return ResultTable(list(table.columns) + [node.var], rows, table.tps)

    def _sort(self, node):
        table = self.run(node.child)
        vis = table.visible_columns
        offset = 1 if table.has_time else 0
        rows = list(table.rows)
        for o in reversed(node.ordinals):
            pos = abs(o) - 1
            if pos >= len(vis):
                raise QueryError(f"sort ordinal {o} out of range for {len(vis)} columns")
            idx = pos + offset

            def key(row, idx=idx):
                v = row[idx]
                return (v is not None, v if v is not None else 0)

            try:
                rows.sort(key=key, reverse=o < 0)
            except TypeError:
                raise QueryError(f"sort column {vis[pos]!r} mixes incomparable types") from None
        return ResultTable(list(table.columns), rows, table.tps)

    def _project(self, node):
        table = self.run(node.child)
        cols = list(node.cols) if node.cols is not None else table.visible_columns
        idx = []
        for c in cols:
            if c not in table.columns:
                raise QueryError(f"project references unbound variable {c}")
            idx.append(table.col_index(c))
        names = list(node.renames) if node.renames is not None else cols
        rows = [tuple(row[i] for i in idx) for row in table.rows]
        return ResultTable(names, rows, None)

    def _distinct(self, node):
        table = self.run(node.child)
        offset = 1 if table.has_time else 0
        rows = []
        prev = object()
        for row in table.rows:
            vis = row[offset:]
            if vis != prev:
                rows.append(row)
                prev = vis
        return ResultTable(list(table.columns), rows, table.tps)

    # aggregation ---------------------------------------------------------

    def _aggregate(self, node):
        fast = self._try_store_aggregate(node)
        if fast is not None:
            return fast
        table = self.run(node.child)
        if not table.rows:
            cols = self._agg_columns(node, table)
            return ResultTable(cols, [], None)
        key = node.group_key
        if key is None:
            groups = [(None, table.rows)]
        elif key[0] == "col":
            ci = table.col_index(key[1])
            seen = {}
            for row in table.rows:
                seen.setdefault(row[ci], []).append(row)
            groups = list(seen.items())
        elif key[0] == "bucket":
            if table.tps is None:
                raise QueryError("time-bucket grouping over a table with no time scale")
            bucket = key[1] * table.tps
            ci = table.col_index(key[2])
            seen = {}
            for row in table.rows:
                t = row[ci]
                if t is None:
                    continue
                seen.setdefault(t - t % bucket, []).append(row)
            groups = sorted(seen.items())
        elif key[0] == "sma":
            return self._sma_aggregate(node, table)
        else:
            raise QueryError(f"unknown group key {key!r}")

        out_rows = []
        for gval, rows in groups:
            out = [] if key is None else [gval]
            for fn, col, alias in node.aggs:
                out.append(_fold_agg(fn, col, rows, table))
            out_rows.append(tuple(out))
        return ResultTable(self._agg_columns(node, table), out_rows, None)

    def _agg_columns(self, node, table):
        cols = []
        if node.group_key is not None:
            cols.append(node.group_key[1] if node.group_key[0] == "col" else node.group_key[2])
        cols.extend(alias for _, _, alias in node.aggs)
        return cols

    def _sma_aggregate(self, node, table):
        _, tau_spec, tvar = node.group_key
        if len(node.aggs) != 1 or node.aggs[0][0] != "avg":
            raise QueryError("sma grouping requires exactly one AVG aggregate")
        _, col, alias = node.aggs[0]
        if table.tps is None:
            raise QueryError("sma grouping over a table with no time scale")
        tau = _resolve_duration(tau_spec, table.tps)
        ti = table.col_index(tvar)
        vi = table.col_index(col)
        pairs = [(row[ti], row[vi]) for row in table.rows
                 if row[ti] is not None and row[vi] is not None]
        pairs.sort(key=lambda p: p[0])
        if not pairs:
            return ResultTable([tvar, alias], [], None)
        times = tuple(t for t, _ in pairs)
        values = tuple(v for _, v in pairs)
        out = sma_series((times, values, tau))
        return ResultTable([tvar, alias], [(t, v) for t, v in out], None)

    def _try_store_aggregate(self, node):
        """Whole-range aggregates over an unfiltered (or time-only filtered)
        single-series scan are answered from the block index."""
        if not self.aggregate_fastpath or node.group_key is not None:
            return None
        child = node.child
        push = None
        if isinstance(child, Filter) and isinstance(child.child, MatchScan):
            push = child.expr
            scan = child.child
        elif isinstance(child, MatchScan):
            scan = child
        else:
            return None
        if not all(fn in _STORE_FNS and col != "*" for fn, col, _ in node.aggs):
            return None
        mapping = self._mapping(scan.mapping_name)
        matches = match(scan.bgp, mapping)
        if len(matches) != 1:
            return None
        bm = matches[0]
        stored = {v: t for v, t in bm.items() if t.is_stored}
        series = {t.series for t in stored.values()}
        if len(series) != 1:
            return None
        series = series.pop()
        time_vars = [v for v, t in stored.items() if t.is_time]
        lo, hi = _TS_MIN, _TS_MAX
        if push is not None:
            if not time_vars or not _is_pure_time_window(push, time_vars[0]):
                return None
            tps = self.store.schema(series).precision.ticks_per_second
            wlo, whi = extract_time_window(push, time_vars[0], tps)
            lo = wlo if wlo is not None else lo
            hi = whi if whi is not None else hi
        values = []
        for fn, col, alias in node.aggs:
            target = stored.get(col)
            if target is None or target.is_time:
                return None
            try:
                values.append(self.store.aggregate_range(series, target.column, fn, lo, hi))
            except EmptyAggregate:
                values.append(None)
        cols = [alias for _, _, alias in node.aggs]
        return ResultTable(cols, [tuple(values)], None)


def _is_pure_time_window(expr, time_var):
    """True when the expression is a conjunction of <,<=,>,>=,= comparisons
    between the time variable and time or integer literals only."""
    for c in conjuncts_of(expr):
        if not (isinstance(c, BinOp) and c.op in ("<", "<=", ">", ">=", "=")):
            return False
        sides = (c.left, c.right)
        var_sides = [s for s in sides if isinstance(s, Var)]
        lit_sides = [s for s in sides if isinstance(s, (TimeLit, NumLit))]
        if len(var_sides) != 1 or len(lit_sides) != 1:
            return False
        if var_sides[0].name != time_var:
            return False
        if isinstance(lit_sides[0], NumLit) and not isinstance(lit_sides[0].value, int):
            return False
    return True


def _ts_equijoin(left_rows, right_rows):
    """Merge-join two time-sorted row lists on their leading timestamp."""
    out = []
    i = j = 0
    while i < len(left_rows) and j < len(right_rows):
        lt = left_rows[i][0]
        rt = right_rows[j][0]
        if lt < rt:
            i += 1
        elif lt > rt:
            j += 1
        else:
            i2 = i
            while i2 < len(left_rows) and left_rows[i2][0] == lt:
                i2 += 1
            j2 = j
            while j2 < len(right_rows) and right_rows[j2][0] == lt:
                j2 += 1
            for a in range(i, i2):
                for b in range(j, j2):
                    out.append(left_rows[a] + right_rows[b][1:])
            i, j = i2, j2
    return out


def _resolve_duration(spec, tps):
    if isinstance(spec, int):
        ticks = spec
    else:
        value, unit = spec
        if unit not in DURATION_UNITS:
            raise QueryError(f"unknown duration unit {unit!r}")
        ticks = int(value * DURATION_UNITS[unit] * tps)
    if ticks <= 0:
        raise QueryError(f"duration must be positive, got {spec!r}")
    return ticks


def _fold_agg(fn, col, rows, table):
    if fn == "count" and col == "*":
        return len(rows)
    ci = table.col_index(col)
    values = [row[ci] for row in rows if row[ci] is not None]
    if fn == "count":
        return len(values)
    if fn == "sample":
        return values[0] if values else None
    if fn == "groupconcat":
        if any(not isinstance(v, str) for v in values):
            raise QueryError("groupconcat over non-string values; cast first")
        return " ".join(values)
    if not values:
        return None
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise QueryError(f"{fn} over non-numeric value {v!r}")
    if fn == "sum":
        return sum(values)
    if fn == "avg":
        return sum(values) / len(values)
    return min(values) if fn == "min" else max(values)
