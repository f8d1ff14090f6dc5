"""Static relation extraction: classifiers, dominators, reachability."""
from __future__ import annotations

from relaxcheck.ir import Fence, FlowGraph, Membar, Nop
from relaxcheck.relations import (
    compute_dominates, compute_not_reachable_from, compute_thread_edges,
    extract_all, extract_unary,
)

from conftest import corpus_program


def _graph(n_nodes: int, edges: set[tuple[int, int]]) -> FlowGraph:
    nodes = {i: Nop() for i in range(n_nodes)}
    return FlowGraph("t", nodes, 0, n_nodes - 1, edges)


def brute_force_dominates(graph: FlowGraph) -> set[tuple[int, int]]:
    """(a, b) iff every entry->b path passes through a, via path search:
    b unreachable from entry once a is deleted."""
    out = set()
    for a in graph.nodes:
        reach = {graph.entry} - {a}
        stack = list(reach)
        while stack:
            n = stack.pop()
            for s in graph.successors(n):
                if s != a and s not in reach:
                    reach.add(s)
                    stack.append(s)
        if graph.entry == a:
            reach = set()
        for b in graph.nodes:
            if b != a and b not in reach:
                # unreachable without a; only counts if reachable at all
                out.add((a, b))
    # restrict to entry-reachable targets
    reachable = {graph.entry}
    stack = [graph.entry]
    while stack:
        n = stack.pop()
        for s in graph.successors(n):
            if s not in reachable:
                reachable.add(s)
                stack.append(s)
    return {(a, b) for (a, b) in out
            if a in reachable and b in reachable}


def test_dominates_chain():
    g = _graph(3, {(0, 1), (1, 2)})
    assert compute_dominates(g) == {(0, 1), (0, 2), (1, 2)}


def test_dominates_diamond():
    g = _graph(4, {(0, 1), (0, 2), (1, 3), (2, 3)})
    d = compute_dominates(g)
    assert (0, 3) in d
    assert (1, 3) not in d and (2, 3) not in d


def test_dominates_strict():
    g = _graph(2, {(0, 1)})
    assert all(a != b for a, b in compute_dominates(g))


def test_dominates_with_loop_before_pair():
    # entry -> loop {1 <-> 2} -> 3 -> 4: 3 dominates 4 despite the loop
    g = _graph(5, {(0, 1), (1, 2), (2, 1), (2, 3), (3, 4)})
    assert (3, 4) in compute_dominates(g)


def test_dominates_matches_brute_force_on_small_graphs():
    shapes = [
        _graph(3, {(0, 1), (1, 2)}),
        _graph(4, {(0, 1), (0, 2), (1, 3), (2, 3)}),
        _graph(5, {(0, 1), (1, 2), (2, 1), (2, 3), (3, 4)}),
        _graph(6, {(0, 1), (1, 2), (2, 3), (3, 1), (3, 4), (4, 5)}),
    ]
    for g in shapes:
        assert compute_dominates(g) == brute_force_dominates(g)


def test_not_reachable_from_straight_line():
    g = _graph(2, {(0, 1)})
    nrf = compute_not_reachable_from(g)
    assert (0, 1) in nrf          # 0 not reachable from 1
    assert (1, 0) not in nrf      # 1 is reachable from 0


def test_not_reachable_from_loop():
    g = _graph(4, {(0, 1), (1, 2), (2, 1), (2, 3)})
    nrf = compute_not_reachable_from(g)
    assert (1, 2) not in nrf      # back edge: 1 reachable from 2
    assert (1, 1) not in nrf      # on a cycle: self-reachable
    # reflexive pairs are always excluded (trivial empty path)
    assert (0, 0) not in nrf


def test_thread_edges_from_root():
    prog = corpus_program("fig2_fence.lit")
    creates, joins = compute_thread_edges(prog)
    targets = {b for (_, b) in creates}
    assert {prog.threads["t1"].entry, prog.threads["t2"].entry} <= targets
    exits = {b for (_, b) in joins}
    assert {prog.threads["t1"].exit, prog.threads["t2"].exit} <= exits


def test_fence_populates_all_membar_relations():
    prog = corpus_program("fig2_fence.lit")
    store = extract_unary(prog)
    fences = store.is_fence
    assert len(fences) == 1
    f = next(iter(fences))
    for kind in ("LL", "LS", "SL", "SS"):
        assert f in store.membars[kind]


def test_membar_node_populates_only_declared_kinds():
    prog = corpus_program("sb_membar.lit")
    store = extract_unary(prog)
    declared = {k for k, members in store.membars.items() if members}
    ms = set().union(*(store.membars[k] for k in declared)) \
        if declared else set()
    # every membar node appears exactly in its declared kinds
    for name, g in prog.threads.items():
        for n, instr in g.nodes.items():
            if isinstance(instr, Membar):
                for kind in ("LL", "LS", "SL", "SS"):
                    assert (n in store.membars[kind]) == \
                        (kind in instr.kinds)
            elif not isinstance(instr, Fence):
                assert n not in ms


def test_init_stores_in_is_store():
    prog = corpus_program("fig1_nofence.lit")
    store = extract_all(prog)
    store_nodes = {n for (n, _) in store.is_store}
    assert set(prog.init_stores.values()) <= store_nodes


def test_dominates_and_nrf_same_thread_only():
    prog = corpus_program("fig1_nofence.lit")
    store = extract_all(prog)
    for rel in (store.dominates, store.not_reachable_from):
        for a, b in rel:
            assert store.thread_of[a] == store.thread_of[b]


def test_dump_is_deterministic():
    prog = corpus_program("fig2_fence.lit")
    assert extract_all(prog).dump() == extract_all(prog).dump()
