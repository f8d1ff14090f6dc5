"""The finite-relation fixpoint engine."""
from __future__ import annotations

from relaxcheck.datalog import Database, atom, rule, solve


def test_transitive_closure():
    db = Database({"Edge": {(1, 2), (2, 3), (3, 4)}})
    rules = [
        rule(atom("Path", "a", "b"), atom("Edge", "a", "b")),
        rule(atom("Path", "a", "c"),
             atom("Path", "a", "b"), atom("Path", "b", "c")),
    ]
    solve(db, rules)
    assert db.relation("Path") == {
        (1, 2), (2, 3), (3, 4), (1, 3), (2, 4), (1, 4)}


def test_constant_arguments_filter():
    # strings are variables; non-strings are constants
    db = Database({"R": {(1, 10), (2, 20), (3, 10)}})
    solve(db, [rule(atom("OnTen", "n"), atom("R", "n", 10))])
    assert db.relation("OnTen") == {(1,), (3,)}


def test_repeated_variable_means_equality():
    db = Database({"R": {(1, 1), (1, 2), (3, 3)}})
    solve(db, [rule(atom("Diag", "a"), atom("R", "a", "a"))])
    assert db.relation("Diag") == {(1,), (3,)}


def test_join_across_relations():
    db = Database({"P": {(1, 2)}, "Q": {(2, 3), (9, 9)}})
    solve(db, [rule(atom("J", "a", "c"),
                    atom("P", "a", "b"), atom("Q", "b", "c"))])
    assert db.relation("J") == {(1, 3)}


def test_empty_body_relation_derives_nothing():
    db = Database({"P": set()})
    solve(db, [rule(atom("H", "a"), atom("P", "a", "b"))])
    assert db.relation("H") == set()


def test_solve_is_idempotent():
    db = Database({"Edge": {(1, 2), (2, 1)}})
    rules = [
        rule(atom("Path", "a", "b"), atom("Edge", "a", "b")),
        rule(atom("Path", "a", "c"),
             atom("Path", "a", "b"), atom("Path", "b", "c")),
    ]
    solve(db, rules)
    first = set(db.relation("Path"))
    solve(db, rules)
    assert db.relation("Path") == first


def test_fact_monotonicity_on_closure():
    rules = [
        rule(atom("Path", "a", "b"), atom("Edge", "a", "b")),
        rule(atom("Path", "a", "c"),
             atom("Path", "a", "b"), atom("Path", "b", "c")),
    ]
    small = Database({"Edge": {(1, 2), (2, 3)}})
    big = Database({"Edge": {(1, 2), (2, 3), (3, 1)}})
    solve(small, rules)
    solve(big, rules)
    assert small.relation("Path") <= big.relation("Path")


def test_cycle_terminates():
    db = Database({"Edge": {(i, (i + 1) % 10) for i in range(10)}})
    rules = [
        rule(atom("Path", "a", "b"), atom("Edge", "a", "b")),
        rule(atom("Path", "a", "c"),
             atom("Path", "a", "b"), atom("Path", "b", "c")),
    ]
    solve(db, rules)
    assert len(db.relation("Path")) == 100  # complete relation on a cycle
