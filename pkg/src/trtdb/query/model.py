"""Graph data models and their bindings to stored series.

A model is a finite set of triples held wholly in memory. Leaf nodes may
be bound to a (series, column) pair or to a series' timestamp axis; each
bound node maps to exactly one target.

Mapping file format, line oriented:

    # comment
    subj pred obj               three whitespace-separated terms
    subj pred "a literal"       quoted object becomes a literal
    @bind node series.column    bind a node to a stored column
    @bind node series.@time     bind a node to the timestamp axis
    @model name                 start a new named model (for GRAPH scoping)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import MappingError, SchemaError, SeriesNotFound

_TOKEN = re.compile(r'"([^"]*)"|(\S+)')
TIME_TARGET = "@time"


@dataclass(frozen=True)
class Literal:
    """A quoted literal term; everything else in a model is an IRI string."""

    value: str

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Target:
    """Storage target of a bound node: one column or the time axis."""

    series: str
    column: str = None
    is_time: bool = False


@dataclass
class ModelMapping:
    """A graph model plus the binding relation from its nodes to storage."""

    name: str = "default"
    triples: list = field(default_factory=list)
    bindings: dict = field(default_factory=dict)
    _seen: set = field(default_factory=set, repr=False)

    def add_triple(self, s, p, o):
        t = (s, p, o)
        if t not in self._seen:
            self._seen.add(t)
            self.triples.append(t)

    def bind(self, node, target):
        self.bindings[node] = target

    def terms(self):
        out = []
        seen = set()
        for t in self.triples:
            for term in t:
                if term not in seen:
                    seen.add(term)
                    out.append(term)
        return out

    def validate(self, store=None):
        for node, target in self.bindings.items():
            if node not in set(self.terms()):
                raise MappingError(f"bound node {node!r} does not occur in model {self.name!r}")
            if store is not None:
                try:
                    schema = store.schema(target.series)
                except SeriesNotFound:
                    raise MappingError(
                        f"binding for {node!r} names unknown series {target.series!r}") from None
                if not target.is_time:
                    try:
                        schema.column_index(target.column)
                    except SchemaError:
                        raise MappingError(
                            f"binding for {node!r} names column {target.column!r} "
                            f"which does not exist in series {target.series!r}") from None


def _tokenize(line):
    return [lit if iri is None or iri == "" else iri
            for lit, iri in ((m.group(1), m.group(2)) for m in _TOKEN.finditer(line))]


def load_mappings(text, store=None):
    """Parse a mapping file into named models; errors carry line numbers."""
    models = {}
    current = None

    def model_for(name):
        if name not in models:
            models[name] = ModelMapping(name=name)
        return models[name]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = _TOKEN.findall(line)
        tokens = [lit if word == "" else word for lit, word in parts]
        flags = [word == "" for lit, word in parts]  # True where quoted
        if tokens[0] == "@model":
            if len(tokens) != 2:
                raise MappingError("@model needs exactly one name", lineno)
            current = model_for(tokens[1])
        elif tokens[0] == "@bind":
            if len(tokens) != 3 or flags[1] or flags[2]:
                raise MappingError("@bind needs a node and series.column", lineno)
            node, spec = tokens[1], tokens[2]
            if "." not in spec:
                raise MappingError(f"bind target {spec!r} is not series.column", lineno)
            series, column = spec.split(".", 1)
            if current is None:
                current = model_for("default")
            if column == TIME_TARGET:
                current.bind(node, Target(series=series, is_time=True))
            else:
                current.bind(node, Target(series=series, column=column))
        else:
            if len(tokens) != 3:
                raise MappingError(
                    f"expected 3 terms in triple, got {len(tokens)}", lineno)
            if flags[0] or flags[1]:
                raise MappingError("subject and predicate must be IRIs", lineno)
            if current is None:
                current = model_for("default")
            s, p = tokens[0], tokens[1]
            o = Literal(tokens[2]) if flags[2] else tokens[2]
            current.add_triple(s, p, o)

    if not models:
        models["default"] = ModelMapping(name="default")
    for m in models.values():
        m.validate(store)
    return models


def map_load(text, store=None):
    """Load a single model mapping (the whole file, one model).

    Unresolved series or column names are errors when a store is given.
    """
    models = load_mappings(text, store)
    if len(models) > 1:
        raise MappingError(
            f"file defines {len(models)} models; map_load expects one "
            f"(use load_mappings for @model files)")
    return next(iter(models.values()))
