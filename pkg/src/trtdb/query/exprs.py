"""Filter and projection expressions: a small typed AST with row evaluation
and conjunctive time-bound extraction for scan pushdown."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone

from ..errors import QueryError


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class NumLit:
    value: object  # int or float


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class TimeLit:
    """An RFC 3339 time literal, converted to ticks lazily once the scan's
    precision is known; finer-than-precision digits truncate with a warning."""

    text: str

    def ticks(self, tps):
        if tps is None:
            raise QueryError(
                f"time literal {self.text!r} compared against a table with no time scale")
        text = self.text.replace("Z", "+00:00").replace("z", "+00:00")
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            raise QueryError(f"invalid RFC 3339 time literal {self.text!r}") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        span = dt - datetime(1970, 1, 1, tzinfo=timezone.utc)
        epoch_s = span.days * 86400 + span.seconds
        micros = span.microseconds
        if micros and (micros * tps) % 1_000_000:
            warnings.warn(
                f"time literal {self.text!r} is finer than the series precision; truncating",
                stacklevel=2)
        return epoch_s * tps + (micros * tps) // 1_000_000


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class NotOp:
    operand: object


@dataclass(frozen=True)
class NegOp:
    operand: object


_CMP = {"<", "<=", ">", ">=", "=", "!="}
_ARITH = {"+", "-", "*", "/"}
_BOOL = {"&&", "||"}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def evaluate(expr, env, tps=None):
    """Evaluate over one row environment; None propagates as 'excluded'.

    Comparisons with nulls yield None, so filters drop those rows;
    arithmetic on non-numbers is a type error.
    """
    if isinstance(expr, Var):
        if expr.name not in env:
            raise QueryError(f"unknown variable {expr.name} in expression")
        return env[expr.name]
    if isinstance(expr, NumLit):
        return expr.value
    if isinstance(expr, StrLit):
        return expr.value
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, TimeLit):
        return expr.ticks(tps)
    if isinstance(expr, NotOp):
        v = evaluate(expr.operand, env, tps)
        if v is None:
            return None
        if not isinstance(v, bool):
            raise QueryError(f"! applied to non-boolean {v!r}")
        return not v
    if isinstance(expr, NegOp):
        v = evaluate(expr.operand, env, tps)
        if v is None:
            return None
        if not _is_number(v):
            raise QueryError(f"unary minus applied to non-number {v!r}")
        return -v
    if isinstance(expr, BinOp):
        op = expr.op
        if op in _BOOL:
            l = evaluate(expr.left, env, tps)
            r = evaluate(expr.right, env, tps)
            for v in (l, r):
                if v is not None and not isinstance(v, bool):
                    raise QueryError(f"{op} applied to non-boolean {v!r}")
            # three-valued logic so null comparisons stay excluded
            if op == "&&":
                if l is False or r is False:
                    return False
                if l is None or r is None:
                    return None
                return True
            if l is True or r is True:
                return True
            if l is None or r is None:
                return None
            return False
        l = evaluate(expr.left, env, tps)
        r = evaluate(expr.right, env, tps)
        if op in _ARITH:
            if l is None or r is None:
                return None
            if not (_is_number(l) and _is_number(r)):
                raise QueryError(f"arithmetic {op} on non-numeric operands {l!r}, {r!r}")
            if op == "+":
                return l + r
            if op == "-":
                return l - r
            if op == "*":
                return l * r
            if r == 0:
                return None  # division by zero excludes the row
            return l / r
        if op in _CMP:
            if l is None or r is None:
                return None
            if _is_number(l) != _is_number(r) or isinstance(l, bool) != isinstance(r, bool) \
                    or isinstance(l, str) != isinstance(r, str):
                # incomparable types: the comparison has no value
                return None if op not in ("=", "!=") else (op == "!=")
            if op == "=":
                return l == r
            if op == "!=":
                return l != r
            if op == "<":
                return l < r
            if op == "<=":
                return l <= r
            if op == ">":
                return l > r
            return l >= r
        raise QueryError(f"unknown operator {op!r}")
    raise QueryError(f"cannot evaluate {expr!r}")


def variables_of(expr):
    out = set()

    def walk(e):
        if isinstance(e, Var):
            out.add(e.name)
        elif isinstance(e, BinOp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, (NotOp, NegOp)):
            walk(e.operand)

    walk(expr)
    return out


def conjuncts_of(expr):
    """Flatten top-level && into a list."""
    if isinstance(expr, BinOp) and expr.op == "&&":
        return conjuncts_of(expr.left) + conjuncts_of(expr.right)
    return [expr]


def extract_time_window(expr, time_var, tps):
    """Inclusive (lo, hi) tick bounds implied by conjunctive comparisons of
    `time_var` against time or numeric literals; None bound when open."""
    lo = None
    hi = None

    def literal_ticks(e):
        if isinstance(e, TimeLit):
            return e.ticks(tps)
        if isinstance(e, NumLit) and isinstance(e.value, int):
            return e.value
        return None

    for c in conjuncts_of(expr):
        if not isinstance(c, BinOp) or c.op not in _CMP:
            continue
        if isinstance(c.left, Var) and c.left.name == time_var:
            bound = literal_ticks(c.right)
            op = c.op
        elif isinstance(c.right, Var) and c.right.name == time_var:
            bound = literal_ticks(c.left)
            op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[c.op]
        else:
            continue
        if bound is None:
            continue
        if op == ">":
            lo = max(lo, bound + 1) if lo is not None else bound + 1
        elif op == ">=":
            lo = max(lo, bound) if lo is not None else bound
        elif op == "<":
            hi = min(hi, bound - 1) if hi is not None else bound - 1
        elif op == "<=":
            hi = min(hi, bound) if hi is not None else bound
        elif op == "=":
            lo = max(lo, bound) if lo is not None else bound
            hi = min(hi, bound) if hi is not None else bound
    return lo, hi
