import pytest

from trtdb.errors import QuerySyntaxError, UnsupportedFeature
from trtdb.query import (
    Aggregate,
    BinOp,
    Distinct,
    Filter,
    Join,
    Limit,
    MatchScan,
    Minus,
    NumLit,
    Project,
    SetMap,
    Sort,
    TimeLit,
    Union,
    Var,
    parse_query,
)
from trtdb.query.model import Literal


def test_simple_select_projects_over_scan():
    tree = parse_query("SELECT ?v WHERE { ?o hasValue ?v }")
    assert tree == Project(MatchScan((("?o", "hasValue", "?v"),)), ("?v",))


def test_semicolon_predicate_lists():
    tree = parse_query("SELECT ?v WHERE { ?s isA windSensor ; has ?o . ?o hasValue ?v }")
    scan = tree.child
    assert scan.bgp == (("?s", "isA", "windSensor"), ("?s", "has", "?o"),
                        ("?o", "hasValue", "?v"))


def test_comma_object_lists():
    tree = parse_query("SELECT ?s WHERE { ?s likes apples , pears }")
    assert tree.child.bgp == (("?s", "likes", "apples"), ("?s", "likes", "pears"))


def test_filter_wraps_group():
    tree = parse_query('SELECT ?v WHERE { ?o hasValue ?v FILTER(?v > 30) }')
    assert tree == Project(
        Filter(MatchScan((("?o", "hasValue", "?v"),)),
               BinOp(">", Var("?v"), NumLit(30))),
        ("?v",))


def test_time_literal_detection():
    tree = parse_query(
        'SELECT ?v WHERE { ?o hasValue ?v . ?o hasTime ?t '
        'FILTER(?t > "2003-04-01T00:00:00" && ?t < "2003-04-02T00:00:00"^^xsd:dateTime) }')
    expr = tree.child.expr
    assert isinstance(expr.left.right, TimeLit)
    assert isinstance(expr.right.right, TimeLit)


def test_union_folds_left():
    tree = parse_query(
        "SELECT ?x WHERE { { ?x p a } UNION { ?x p b } UNION { ?x p c } }")
    u = tree.child
    assert isinstance(u, Union) and isinstance(u.children[0], Union)


def test_optional_becomes_left_join():
    tree = parse_query("SELECT ?a ?b WHERE { ?x p ?a OPTIONAL { ?x q ?b } }")
    j = tree.child
    assert isinstance(j, Join) and j.kind == "left" and j.condition is None


def test_minus_node():
    tree = parse_query("SELECT ?a WHERE { ?x p ?a MINUS { ?x q ?a } }")
    assert isinstance(tree.child, Minus)


def test_bind_becomes_extend():
    tree = parse_query("SELECT ?c WHERE { ?x p ?a BIND(?a * 2 AS ?c) }")
    ext = tree.child
    assert ext.var == "?c"
    assert ext.expr == BinOp("*", Var("?a"), NumLit(2))


def test_graph_becomes_setmap():
    tree = parse_query("SELECT ?a WHERE { GRAPH site2 { ?x p ?a } }")
    assert isinstance(tree.child, SetMap) and tree.child.mapping_name == "site2"


def test_group_by_hours_with_avg():
    tree = parse_query(
        'SELECT (AVG(?wsVal) AS ?val) WHERE {\n'
        '  ?sensor isA windSensor ;\n'
        '     has ?obs.\n'
        '  ?obs hasValue ?wsVal;\n'
        '     hasTime ?time.\n'
        '  FILTER (?time>"2003-04-01T00:00:00" && ?time<"2003-04-01T01:00:00"^^xsd:dateTime)\n'
        '} GROUP BY hours(?time)')
    assert isinstance(tree, Project)
    agg = tree.child
    assert isinstance(agg, Aggregate)
    assert agg.group_key == ("bucket", 3600, "?time")
    assert agg.aggs == (("avg", "?wsVal", "?val"),)
    assert isinstance(agg.child, Filter)
    assert isinstance(agg.child.child, MatchScan)


def test_group_by_sma():
    tree = parse_query(
        'SELECT (AVG(?v) AS ?s) WHERE { ?o hasValue ?v . ?o hasTime ?t } '
        'GROUP BY sma(?t, "1h")')
    assert tree.child.group_key == ("sma", (1, "h"), "?t")
    tree2 = parse_query(
        "SELECT (AVG(?v) AS ?s) WHERE { ?o hasValue ?v } GROUP BY sma(?v, 600)")
    assert tree2.child.group_key == ("sma", 600, "?v")


def test_order_limit_offset_distinct():
    tree = parse_query(
        "SELECT DISTINCT ?a ?b WHERE { ?x p ?a . ?x q ?b } "
        "ORDER BY DESC(?b) ?a LIMIT 5 OFFSET 2")
    assert isinstance(tree, Limit) and (tree.offset, tree.fetch) == (2, 5)
    assert isinstance(tree.child, Distinct)
    srt = tree.child.child
    assert isinstance(srt, Sort) and srt.ordinals == (-2, 1)


def test_count_star():
    tree = parse_query("SELECT (COUNT(*) AS ?n) WHERE { ?o hasValue ?v }")
    assert tree.child.aggs == (("count", "*", "?n"),)


def test_literal_objects():
    tree = parse_query('SELECT ?s WHERE { ?s note "hello world" . ?s level 5 }')
    assert tree.child.bgp == (("?s", "note", Literal("hello world")),
                              ("?s", "level", Literal("5")))


def test_iriref_angle_brackets():
    tree = parse_query("SELECT ?s WHERE { ?s <http://x/p> ?o }")
    assert tree.child.bgp == (("?s", "http://x/p", "?o"),)


class TestErrors:
    def test_syntax_error_has_position(self):
        with pytest.raises(QuerySyntaxError) as exc:
            parse_query("SELECT ?v WHERE { ?o hasValue }")
        assert exc.value.line == 1 and exc.value.column is not None

    def test_unterminated_group(self):
        with pytest.raises(QuerySyntaxError, match="missing"):
            parse_query("SELECT ?v WHERE { ?o hasValue ?v ")

    def test_missing_where(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("SELECT ?v { ?o hasValue ?v }")

    def test_property_paths_unsupported(self):
        with pytest.raises(UnsupportedFeature, match="property paths"):
            parse_query("SELECT ?v WHERE { ?o hasValue/hasUnit ?v }")

    def test_subqueries_unsupported(self):
        with pytest.raises(UnsupportedFeature, match="subqueries"):
            parse_query("SELECT ?v WHERE { SELECT ?v WHERE { ?o p ?v } }")

    def test_service_unsupported(self):
        with pytest.raises(UnsupportedFeature):
            parse_query("SELECT ?v WHERE { SERVICE <http://x> { ?o p ?v } }")

    def test_forecast_unsupported(self):
        with pytest.raises(UnsupportedFeature, match="FORECAST"):
            parse_query("SELECT (FORECAST(?v, 30) AS ?f) WHERE { ?o p ?v }")
        with pytest.raises(UnsupportedFeature):
            parse_query("SELECT (AVG(?v) AS ?a) WHERE { ?o p ?v } "
                        "GROUP BY ARIMA_S(sma(?t, 600), 4)")

    def test_order_by_unselected_variable(self):
        with pytest.raises(QuerySyntaxError):
            parse_query("SELECT ?a WHERE { ?x p ?a . ?x q ?b } ORDER BY ?b")
