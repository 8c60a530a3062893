"""Map-match-operate query layer: graph models bound to stored series,
pattern matching, an operator tree and a query-language front end."""

from .exprs import (
    BinOp,
    BoolLit,
    NegOp,
    NotOp,
    NumLit,
    StrLit,
    TimeLit,
    Var,
    evaluate,
    extract_time_window,
)
from .match import MatchTarget, bgp_variables, is_var, match
from .model import Literal, ModelMapping, Target, load_mappings, map_load
from .operators import (
    Aggregate,
    Distinct,
    Extend,
    Filter,
    Join,
    Limit,
    MatchScan,
    Minus,
    Project,
    SemiJoin,
    SetMap,
    Sort,
    Union,
    execute,
    op_aggregate,
    op_distinct,
    op_extend,
    op_filter,
    op_join,
    op_limit,
    op_minus,
    op_project,
    op_scan,
    op_semijoin,
    op_setmap,
    op_sort,
    op_union,
)
from .parser import parse_query
from .table import TIME_COL, ResultTable

__all__ = [
    "TIME_COL",
    "ResultTable",
    "Literal",
    "ModelMapping",
    "Target",
    "MatchTarget",
    "map_load",
    "load_mappings",
    "match",
    "bgp_variables",
    "is_var",
    "execute",
    "parse_query",
    "evaluate",
    "extract_time_window",
    "Var",
    "NumLit",
    "StrLit",
    "BoolLit",
    "TimeLit",
    "BinOp",
    "NotOp",
    "NegOp",
    "MatchScan",
    "Filter",
    "Join",
    "SemiJoin",
    "Union",
    "SetMap",
    "Extend",
    "Minus",
    "Aggregate",
    "Sort",
    "Project",
    "Distinct",
    "Limit",
    "op_scan",
    "op_filter",
    "op_join",
    "op_semijoin",
    "op_union",
    "op_setmap",
    "op_extend",
    "op_minus",
    "op_aggregate",
    "op_sort",
    "op_project",
    "op_distinct",
    "op_limit",
]
