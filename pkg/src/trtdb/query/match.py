"""Basic graph pattern matching against a model mapping.

Produces every homomorphism from the pattern's triples into the model's
triples (two variables may map to the same node). Variables landing on
bound nodes carry that node's storage target; the rest carry the model
term alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..errors import ContractViolation
from .model import Literal, ModelMapping, Target


def is_var(term):
    return isinstance(term, str) and term.startswith("?")


def bgp_variables(bgp):
    """Variables of a pattern in first-occurrence order."""
    out = []
    seen = set()
    for pattern in bgp:
        for term in pattern:
            if is_var(term) and term not in seen:
                seen.add(term)
                out.append(term)
    return out


@dataclass(frozen=True)
class MatchTarget:
    """What one query variable matched: a model term, plus its storage
    target when the term is a bound node."""

    term: object
    series: Optional[str] = None
    column: Optional[str] = None
    is_time: bool = False

    @property
    def is_stored(self):
        return self.series is not None


def match(bgp, mapping):
    """All homomorphisms of the pattern into the model, as binding matches.

    Each result maps every variable of the pattern to a MatchTarget. No
    match yields an empty list; a pattern with no variables that is
    present in the model yields one empty-variable match.
    """
    bgp = tuple(tuple(p) for p in bgp)
    if not bgp:
        raise ContractViolation("basic graph pattern must be non-empty")
    for p in bgp:
        if len(p) != 3:
            raise ContractViolation(f"triple pattern must have 3 terms, got {p!r}")

    triples = mapping.triples
    solutions = []

    def backtrack(i, env):
        if i == len(bgp):
            solutions.append(dict(env))
            return
        ps, pp, po = bgp[i]
        for ts, tp, to in triples:
            added = []
            ok = True
            for pat, val in ((ps, ts), (pp, tp), (po, to)):
                if is_var(pat):
                    bound = env.get(pat)
                    if bound is None:
                        env[pat] = val
                        added.append(pat)
                    elif bound != val:
                        ok = False
                        break
                elif pat != val:
                    ok = False
                    break
            if ok:
                backtrack(i + 1, env)
            for name in added:
                del env[name]

    backtrack(0, {})

    results = []
    for env in solutions:
        bm = {}
        for var, term in env.items():
            target = mapping.bindings.get(term) if not isinstance(term, Literal) else None
            if target is not None:
                bm[var] = MatchTarget(term=term, series=target.series,
                                      column=target.column, is_time=target.is_time)
            else:
                bm[var] = MatchTarget(term=term)
        results.append(bm)
    return results
