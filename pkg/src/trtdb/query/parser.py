"""Parser for the supported query subset.

SELECT (with expressions, aliases and AVG/MIN/MAX/COUNT/SUM/SAMPLE/
GROUP_CONCAT aggregates), WHERE with basic graph patterns, FILTER,
OPTIONAL (left outer join), MINUS, UNION, BIND, GRAPH (model scoping),
GROUP BY over a variable, hours()/minutes()/days() time buckets or
sma(?t, tau), ORDER BY over projected variables, DISTINCT/REDUCED and
LIMIT/OFFSET. Anything else (property paths, subqueries, federation,
FORECAST) raises an unsupported-feature error; syntax errors carry a
line and column.
"""

from __future__ import annotations

import re

from ..errors import QuerySyntaxError, UnsupportedFeature
from .exprs import BinOp, BoolLit, NegOp, NotOp, NumLit, StrLit, TimeLit, Var
from .model import Literal
from .operators import (
    BUCKET_SECONDS,
    Aggregate,
    Distinct,
    Extend,
    Filter,
    Join,
    Limit,
    MatchScan,
    Minus,
    Project,
    SetMap,
    Sort,
    Union,
)

_TOKEN_RE = re.compile(
    r"""(?P<WS>\s+)
      | (?P<COMMENT>\#[^\n]*)
      | (?P<VAR>\?[A-Za-z_][A-Za-z0-9_]*)
      | (?P<IRIREF><[^<>\s]*>)
      | (?P<STRING>"(?:[^"\\]|\\.)*")
      | (?P<NUMBER>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
      | (?P<WORD>[A-Za-z_][A-Za-z0-9_:-]*)
      | (?P<OP>&&|\|\||!=|<=|>=|\^\^|[<>=!+\-*/])
      | (?P<PUNCT>[{}().;,^|])
    """,
    re.VERBOSE,
)

_UNSUPPORTED = {
    "SERVICE", "CONSTRUCT", "ASK", "DESCRIBE", "PREFIX", "BASE", "FROM",
    "VALUES", "EXISTS", "HAVING", "NAMED", "INSERT", "DELETE",
}
_AGGREGATES = {
    "AVG": "avg", "MIN": "min", "MAX": "max", "COUNT": "count", "SUM": "sum",
    "SAMPLE": "sample", "GROUP_CONCAT": "groupconcat",
}
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?)?")
_DURATION_RE = re.compile(r"^(\d+(?:\.\d+)?)([smhdw])$")
_PATH_TOKENS = {("OP", "/"), ("OP", "*"), ("OP", "+"), ("PUNCT", "|"), ("PUNCT", "^")}


class _Tok:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}({self.value!r})"


def _tokenize(text):
    tokens = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind in ("WS", "COMMENT"):
            line += value.count("\n")
            if "\n" in value:
                line_start = m.start() + value.rindex("\n") + 1
        else:
            tokens.append(_Tok(kind, value, line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(_Tok("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    # ------------------------------------------------------------- plumbing

    def peek(self, ahead=0):
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise QuerySyntaxError(message, tok.line, tok.col)

    def at_keyword(self, *words):
        tok = self.peek()
        return tok.kind == "WORD" and tok.value.upper() in words

    def accept_keyword(self, *words):
        if self.at_keyword(*words):
            return self.next().value.upper()
        return None

    def expect_keyword(self, word):
        if not self.accept_keyword(word):
            self.error(f"expected {word}")

    def accept_punct(self, value):
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.value == value:
            return self.next()
        return None

    def expect_punct(self, value):
        if not self.accept_punct(value):
            self.error(f"expected {value!r}")

    def accept_op(self, *values):
        tok = self.peek()
        if tok.kind == "OP" and tok.value in values:
            return self.next().value
        return None

    def _check_unsupported(self):
        tok = self.peek()
        if tok.kind == "WORD" and tok.value.upper() in _UNSUPPORTED:
            raise UnsupportedFeature(f"{tok.value.upper()} is not supported")

    # ----------------------------------------------------------- the query

    def parse(self):
        self._check_unsupported()
        self.expect_keyword("SELECT")
        distinct = self.accept_keyword("DISTINCT", "REDUCED") is not None

        star = False
        items = []
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.value == "*":
                self.next()
                star = True
            elif tok.kind == "VAR":
                items.append(("var", self.next().value))
            elif tok.kind == "PUNCT" and tok.value == "(":
                items.append(self._select_expr_item())
            else:
                break
        if not star and not items:
            self.error("SELECT needs at least one variable or expression")

        self._check_unsupported()
        self.expect_keyword("WHERE")
        self.expect_punct("{")
        node = self._group()

        group_key = None
        order = None
        limit_offset = 0
        limit_fetch = None
        while self.peek().kind != "EOF":
            self._check_unsupported()
            if self.accept_keyword("GROUP"):
                self.expect_keyword("BY")
                group_key = self._group_key()
            elif self.accept_keyword("ORDER"):
                self.expect_keyword("BY")
                order = self._order_conditions()
            elif self.accept_keyword("LIMIT"):
                limit_fetch = self._integer()
            elif self.accept_keyword("OFFSET"):
                limit_offset = self._integer()
            else:
                self.error(f"unexpected {self.peek().value!r} after query body")

        return self._assemble(node, star, items, distinct, group_key, order,
                              limit_offset, limit_fetch)

    def _assemble(self, node, star, items, distinct, group_key, order, offset, fetch):
        aggs = [(fn, col, alias) for kind, fn, col, alias in
                (it for it in items if it[0] == "agg")]
        if aggs or group_key is not None:
            node = Aggregate(node, group_key, tuple(aggs))
        for it in items:
            if it[0] == "expr":
                node = Extend(node, it[1], it[2])
        if star:
            cols = None
        else:
            cols = tuple(it[1] if it[0] == "var" else it[3] if it[0] == "agg" else it[2]
                         for it in items)
        node = Project(node, cols)
        if order:
            if cols is None:
                self.error("ORDER BY requires explicitly selected variables")
            ordinals = []
            for var, ascending in order:
                if var not in cols:
                    self.error(f"ORDER BY variable {var} is not selected")
                o = cols.index(var) + 1
                ordinals.append(o if ascending else -o)
            node = Sort(node, tuple(ordinals))
        if distinct:
            node = Distinct(node)
        if fetch is not None or offset:
            node = Limit(node, offset, fetch)
        return node

    def _select_expr_item(self):
        self.expect_punct("(")
        tok = self.peek()
        if tok.kind == "WORD" and tok.value.upper() == "FORECAST":
            raise UnsupportedFeature("FORECAST is not supported")
        if tok.kind == "WORD" and tok.value.upper() in _AGGREGATES:
            fn = _AGGREGATES[self.next().value.upper()]
            self.expect_punct("(")
            if self.accept_op("*"):
                if fn != "count":
                    self.error("only COUNT accepts *")
                col = "*"
            else:
                v = self.peek()
                if v.kind != "VAR":
                    self.error("aggregate argument must be a variable")
                col = self.next().value
            self.expect_punct(")")
            self.expect_keyword("AS")
            alias = self._variable()
            self.expect_punct(")")
            return ("agg", fn, col, alias)
        expr = self._expr()
        self.expect_keyword("AS")
        alias = self._variable()
        self.expect_punct(")")
        return ("expr", expr, alias)

    def _variable(self):
        tok = self.peek()
        if tok.kind != "VAR":
            self.error("expected a ?variable")
        return self.next().value

    def _integer(self):
        tok = self.peek()
        if tok.kind != "NUMBER" or "." in tok.value or "e" in tok.value.lower():
            self.error("expected a non-negative integer")
        return int(self.next().value)

    # ------------------------------------------------------- graph patterns

    def _group(self):
        """Parse the inside of { ... }; consumes the closing brace."""
        triples = []
        elements = []
        filters = []
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.value == "}":
                self.next()
                break
            if tok.kind == "EOF":
                self.error("unterminated group: missing }")
            self._check_unsupported()
            if self.at_keyword("SELECT"):
                raise UnsupportedFeature("subqueries are not supported")
            if self.accept_keyword("FILTER"):
                self.expect_punct("(")
                filters.append(self._expr())
                self.expect_punct(")")
            elif self.accept_keyword("OPTIONAL"):
                self.expect_punct("{")
                elements.append(("optional", self._group()))
            elif self.accept_keyword("MINUS"):
                self.expect_punct("{")
                elements.append(("minus", self._group()))
            elif self.accept_keyword("BIND"):
                self.expect_punct("(")
                expr = self._expr()
                self.expect_keyword("AS")
                var = self._variable()
                self.expect_punct(")")
                elements.append(("bind", expr, var))
            elif self.accept_keyword("GRAPH"):
                iri = self._term(allow_literal=False)
                self.expect_punct("{")
                elements.append(("graph", iri, self._group()))
            elif tok.kind == "PUNCT" and tok.value == "{":
                self.next()
                sub = self._group()
                while self.accept_keyword("UNION"):
                    self.expect_punct("{")
                    sub = Union((sub, self._group()))
                elements.append(("group", sub))
            else:
                self._triples_block(triples)

        node = MatchScan(tuple(triples)) if triples else None
        for element in elements:
            kind = element[0]
            if kind == "optional":
                node = element[1] if node is None else Join(node, element[1], None, "left")
            elif kind == "minus":
                if node is None:
                    self.error("MINUS needs a preceding pattern")
                node = Minus(node, element[1])
            elif kind == "bind":
                if node is None:
                    self.error("BIND needs a preceding pattern")
                node = Extend(node, element[1], element[2])
            elif kind == "graph":
                scoped = SetMap(element[2], element[1])
                node = scoped if node is None else Join(node, scoped, None, "inner")
            else:
                node = element[1] if node is None else Join(node, element[1], None, "inner")
        if node is None:
            self.error("empty graph pattern")
        if filters:
            expr = filters[0]
            for f in filters[1:]:
                expr = BinOp("&&", expr, f)
            node = Filter(node, expr)
        return node

    def _triples_block(self, triples):
        subject = self._term(allow_literal=False)
        while True:
            predicate = self._term(allow_literal=False, predicate=True)
            while True:
                obj = self._term(allow_literal=True)
                triples.append((subject, predicate, obj))
                if not self.accept_punct(","):
                    break
            if self.accept_punct(";"):
                tok = self.peek()
                if tok.kind == "PUNCT" and tok.value in ".};":
                    break
                continue
            break
        self.accept_punct(".")

    def _term(self, allow_literal, predicate=False):
        tok = self.next()
        if tok.kind == "VAR":
            term = tok.value
        elif tok.kind == "WORD":
            term = tok.value
        elif tok.kind == "IRIREF":
            term = tok.value[1:-1]
        elif tok.kind == "NUMBER" and allow_literal:
            term = Literal(tok.value)
        elif tok.kind == "STRING" and allow_literal:
            term = Literal(_unescape(tok.value))
            if self.accept_op("^^"):
                self.next()  # datatype annotation kept lexical in patterns
        else:
            self.error(f"unexpected {tok.value!r} in triple pattern", tok)
        nxt = self.peek()
        if predicate and (nxt.kind, nxt.value) in _PATH_TOKENS:
            raise UnsupportedFeature("property paths are not supported")
        return term

    # ------------------------------------------------------------ modifiers

    def _group_key(self):
        tok = self.peek()
        if tok.kind == "VAR":
            return ("col", self.next().value)
        if tok.kind != "WORD":
            self.error("expected a variable or grouping function after GROUP BY")
        word = self.next().value
        lower = word.lower()
        if word.upper() == "FORECAST" or word.upper().startswith("ARIMA"):
            raise UnsupportedFeature(f"{word.upper()} is not supported")
        if lower in BUCKET_SECONDS:
            self.expect_punct("(")
            var = self._variable()
            self.expect_punct(")")
            return ("bucket", BUCKET_SECONDS[lower], var)
        if lower == "sma":
            self.expect_punct("(")
            var = self._variable()
            self.expect_punct(",")
            tau = self._duration()
            self.expect_punct(")")
            return ("sma", tau, var)
        self.error(f"unknown grouping function {word!r}")

    def _duration(self):
        tok = self.next()
        if tok.kind == "NUMBER":
            if "." in tok.value:
                self.error("tick durations must be integers", tok)
            return int(tok.value)
        if tok.kind == "STRING":
            m = _DURATION_RE.match(_unescape(tok.value))
            if not m:
                self.error(f"bad duration {tok.value}; use e.g. \"90s\", \"1h\", \"1d\"", tok)
            value = float(m.group(1))
            return (int(value) if value.is_integer() else value, m.group(2))
        self.error("expected a duration (ticks or \"1h\")", tok)

    def _order_conditions(self):
        out = []
        while True:
            tok = self.peek()
            if tok.kind == "VAR":
                out.append((self.next().value, True))
            elif self.at_keyword("ASC", "DESC"):
                ascending = self.next().value.upper() == "ASC"
                self.expect_punct("(")
                out.append((self._variable(), ascending))
                self.expect_punct(")")
            else:
                break
        if not out:
            self.error("ORDER BY needs at least one variable")
        return out

    # ----------------------------------------------------------- expressions

    def _expr(self):
        return self._or_expr()

    def _or_expr(self):
        left = self._and_expr()
        while self.accept_op("||"):
            left = BinOp("||", left, self._and_expr())
        return left

    def _and_expr(self):
        left = self._cmp_expr()
        while self.accept_op("&&"):
            left = BinOp("&&", left, self._cmp_expr())
        return left

    def _cmp_expr(self):
        left = self._additive()
        op = self.accept_op("<", "<=", ">", ">=", "=", "!=")
        if op:
            return BinOp(op, left, self._additive())
        return left

    def _additive(self):
        left = self._multiplicative()
        while True:
            op = self.accept_op("+", "-")
            if not op:
                return left
            left = BinOp(op, left, self._multiplicative())

    def _multiplicative(self):
        left = self._unary()
        while True:
            op = self.accept_op("*", "/")
            if not op:
                return left
            left = BinOp(op, left, self._unary())

    def _unary(self):
        if self.accept_op("!"):
            return NotOp(self._unary())
        if self.accept_op("-"):
            return NegOp(self._unary())
        return self._primary()

    def _primary(self):
        tok = self.next()
        if tok.kind == "PUNCT" and tok.value == "(":
            expr = self._expr()
            self.expect_punct(")")
            return expr
        if tok.kind == "VAR":
            return Var(tok.value)
        if tok.kind == "NUMBER":
            text = tok.value
            return NumLit(float(text) if "." in text or "e" in text.lower() else int(text))
        if tok.kind == "STRING":
            text = _unescape(tok.value)
            is_time = bool(_DATE_RE.match(text))
            if self.accept_op("^^"):
                dtype = self.next()
                if "dateTime" in dtype.value or "date" in dtype.value:
                    is_time = True
            return TimeLit(text) if is_time else StrLit(text)
        if tok.kind == "WORD":
            upper = tok.value.upper()
            if upper == "TRUE":
                return BoolLit(True)
            if upper == "FALSE":
                return BoolLit(False)
            if upper == "FORECAST":
                raise UnsupportedFeature("FORECAST is not supported")
            nxt = self.peek()
            if nxt.kind == "PUNCT" and nxt.value == "(":
                raise UnsupportedFeature(f"function {tok.value}() in expressions")
            self.error(f"unexpected {tok.value!r} in expression", tok)
        self.error(f"unexpected {tok.value!r} in expression", tok)


def _unescape(quoted):
    body = quoted[1:-1]
    return body.replace('\\"', '"').replace("\\\\", "\\")


def parse_query(text):
    """Parse query text to an operator tree; see the module docstring for
    the supported subset."""
    parser = _Parser(text)
    tree = parser.parse()
    tok = parser.peek()
    if tok.kind != "EOF":
        parser.error(f"trailing input {tok.value!r}")
    return tree
