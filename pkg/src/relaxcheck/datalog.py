"""A tiny semi-naive Datalog fixpoint engine over finite tuple sets.

Rules are positive conjunctive queries: a head atom derived from a join of
body atoms.  Atom arguments are either variable names (strings) or constant
values; repeated variables express equality joins.  Everything lives in
plain Python sets, so evaluation is deterministic and dependency-free.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Atom, ...]


def atom(relation: str, *args) -> Atom:
    return Atom(relation, tuple(args))


def rule(head: Atom, *body: Atom) -> Rule:
    return Rule(head, body)


class Database:
    """Mutable store of named relations (sets of tuples)."""

    def __init__(self, relations: dict[str, set[tuple]] | None = None):
        self._rels: dict[str, set[tuple]] = {}
        for name, facts in (relations or {}).items():
            self._rels[name] = set(facts)

    def relation(self, name: str) -> set[tuple]:
        return self._rels.setdefault(name, set())

    def add(self, name: str, fact: tuple) -> bool:
        rel = self.relation(name)
        if fact in rel:
            return False
        rel.add(fact)
        return True


def _match(pattern: tuple, fact: tuple, binding: dict) -> dict | None:
    """Extend binding so pattern equals fact, or return None."""
    if len(pattern) != len(fact):
        return None
    out = binding
    for p, f in zip(pattern, fact):
        if isinstance(p, str):
            bound = out.get(p, _UNBOUND)
            if bound is _UNBOUND:
                if out is binding:
                    out = dict(binding)
                out[p] = f
            elif bound != f:
                return None
        elif p != f:
            return None
    return out


_UNBOUND = object()


def _instantiate(args: tuple, binding: dict) -> tuple:
    return tuple(binding[a] if isinstance(a, str) else a for a in args)


def _join(db: Database, body: tuple[Atom, ...], delta_pos: int,
          delta: dict[str, set[tuple]]) -> list[dict]:
    """All variable bindings satisfying the body, where the atom at
    delta_pos ranges over the delta facts of its relation.

    Each atom is matched through a hash index on its bound argument
    positions (constants plus variables bound by earlier atoms), so joins
    cost roughly output size rather than a full cross product."""
    bindings = [{}]
    for i, a in enumerate(body):
        facts = delta.get(a.relation, set()) if i == delta_pos \
            else db.relation(a.relation)
        # All current bindings share the same bound-variable set: every
        # binding extends the same prefix of atoms.
        bound = bindings[0].keys() if bindings else ()
        key_pos = tuple(j for j, p in enumerate(a.args)
                        if not isinstance(p, str) or p in bound)
        index: dict[tuple, list[tuple]] = {}
        arity = len(a.args)
        for fact in facts:
            if len(fact) != arity:
                continue
            index.setdefault(tuple(fact[j] for j in key_pos), []).append(fact)
        new_bindings = []
        for b in bindings:
            key = tuple(a.args[j] if not isinstance(a.args[j], str)
                        else b[a.args[j]] for j in key_pos)
            for fact in index.get(key, ()):
                nb = _match(a.args, fact, b)
                if nb is not None:
                    new_bindings.append(nb)
        bindings = new_bindings
        if not bindings:
            break
    return bindings


def solve(db: Database, rules: list[Rule]) -> Database:
    """Least fixpoint of the rules over db, computed semi-naively.

    Mutates and returns db.  Only head relations grow; body-only relations
    are read as given.
    """
    # Round zero: naive pass over the full database.
    delta: dict[str, set[tuple]] = {}
    for r in rules:
        for binding in _join(db, r.body, -1, {}):
            fact = _instantiate(r.head.args, binding)
            if db.add(r.head.relation, fact):
                delta.setdefault(r.head.relation, set()).add(fact)

    # Semi-naive rounds: each new derivation must use at least one delta fact.
    while delta:
        new_delta: dict[str, set[tuple]] = {}
        for r in rules:
            for pos, a in enumerate(r.body):
                if a.relation not in delta:
                    continue
                for binding in _join(db, r.body, pos, delta):
                    fact = _instantiate(r.head.args, binding)
                    if db.add(r.head.relation, fact):
                        new_delta.setdefault(r.head.relation, set()).add(fact)
        delta = new_delta
    return db
