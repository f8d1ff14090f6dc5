"""Analysis driver: sequential degeneracy, enumeration, fixpoint shape."""
from __future__ import annotations

from relaxcheck.analysis import (
    analyze_all, analyze_thread, bootstrap_fixpoint, enumerate_combinations,
    initial_env, loop_fallback_env,
)
from relaxcheck.domain import AbstractEnv, Interval
from relaxcheck.feasibility import FeasibilityContext, MemoryModel
from relaxcheck.frontend import parse_and_lower
from relaxcheck.ir import Load
from relaxcheck.relations import extract_all

from conftest import MODELS, analyzer_result, corpus_program

SC, TSO = MemoryModel.SC, MemoryModel.TSO


# ---------------------------------------------------------------------------
# Single-thread degeneracy: interference machinery is the identity
# ---------------------------------------------------------------------------

def test_single_thread_equals_sequential_analysis():
    for name in ("seq1.lit", "seq2.lit"):
        prog = corpus_program(name)
        init = initial_env(prog)
        env_map, verdicts, _ = analyze_all(prog, SC)
        for tname, graph in prog.threads.items():
            sequential = analyze_thread(graph, init, {})
            for n in graph.nodes:
                assert env_map[n] == sequential[n], (name, tname, n)
        assert all(v.status == "PROVED" for v in verdicts)


def test_single_thread_same_under_every_model():
    prog = corpus_program("seq1.lit")
    results = [analyze_all(prog, m) for m in MODELS]
    base = results[0]
    for env_map, verdicts, _ in results[1:]:
        assert [(v.node, v.status) for v in verdicts] \
            == [(v.node, v.status) for v in base[1]]
        for n in base[0]:
            assert env_map[n] == base[0][n]


# ---------------------------------------------------------------------------
# Combination enumeration
# ---------------------------------------------------------------------------

def test_enumerate_combinations_counts():
    combos, overflow = enumerate_combinations({1: [10], 2: [20]}, cap=100)
    assert not overflow
    assert len(combos) == 4
    assert {1: None, 2: None} in combos
    assert {1: 10, 2: 20} in combos


def test_enumerate_combinations_no_loads():
    combos, overflow = enumerate_combinations({}, cap=10)
    assert combos == [{}] and not overflow


def test_enumerate_combinations_overflow():
    candidates = {i: [100 + i] for i in range(13)}  # 2^13 > 4096
    combos, overflow = enumerate_combinations(candidates, cap=4096)
    assert overflow and combos == []


def test_overflow_falls_back_to_joined_analysis():
    prog = corpus_program("fig1_nofence.lit")
    env_map, verdicts, stats = analyze_all(prog, TSO, cap=1)
    assert any(t.overflowed for t in stats.per_thread.values())
    # the fallback is a sound over-approximation: verdicts still exist
    assert len(verdicts) == 1
    # and it must not be more precise than full enumeration
    _, full_verdicts, _ = analyzer_result("fig1_nofence.lit", TSO)
    assert [v.status for v in full_verdicts] == ["ALARM"]
    assert [v.status for v in verdicts] == ["ALARM"]


def test_loop_fallback_excludes_refuted_candidate():
    # A loop load can never read a store that is only reachable after the
    # loop's own thread has been joined.
    text = """
    global x = 0, done = 0;

    thread spin {
      local d = done;
      while (d == 0) {
        d = done;
      }
    }

    thread after {
      x = 1;
    }
    """
    prog, _ = parse_and_lower(text)
    relstore = extract_all(prog)
    ctx = FeasibilityContext(prog, SC)
    g = prog.threads["after"]
    s_x = next(n for n in g.nodes
               if type(g.nodes[n]).__name__ == "Store")
    spin = prog.threads["spin"]
    l_done = next(n for n in sorted(spin.nodes)
                  if isinstance(spin.nodes[n], Load))
    # wrong-variable store contributes nothing to a load of done
    env = loop_fallback_env(l_done, spin.nodes[l_done].src, [],
                            {s_x: AbstractEnv()}, ctx)
    assert env.is_bottom


# ---------------------------------------------------------------------------
# Fixpoint shape
# ---------------------------------------------------------------------------

def test_bootstrap_rounds_grow_monotonically():
    for name in ("fig2_fence.lit", "lb.lit", "locked.lit"):
        prog = corpus_program(name)
        relstore = extract_all(prog)
        ctx = FeasibilityContext(prog, TSO, relstore)
        rounds: list[dict] = []
        bootstrap_fixpoint(prog, relstore, ctx, round_maps=rounds)
        for before, after in zip(rounds, rounds[1:]):
            for n in before:
                assert before[n].leq(after[n]), (name, n)


def test_widening_forces_loop_termination():
    prog = corpus_program("loop_local.lit")
    g = prog.threads["t"]
    post = analyze_thread(g, initial_env(prog), {})
    # the loop exit sees the widened counter refined by the exit guard
    exit_env = post[g.exit]
    assert not exit_env.is_bottom
    i_var = next(v for v in exit_env.variables() if v.name == "i")
    assert exit_env.get(i_var).lo == 3


def test_stats_shape():
    _, _, stats = analyzer_result("fig2_fence.lit", TSO)
    assert stats.threads == 3
    assert stats.nodes == 21
    assert stats.outer_rounds >= 2
    assert set(stats.per_thread) == {"t1", "t2", "__root__"}


def test_verdicts_deterministic_across_runs():
    prog = corpus_program("fig7.lit")
    first = analyze_all(prog, TSO)
    second = analyze_all(prog, TSO)
    assert first[1] == second[1]
    for n in first[0]:
        assert first[0][n] == second[0][n]


def test_alarm_witness_names_loads_and_sources():
    _, verdicts, _ = analyzer_result("fig1_nofence.lit", TSO)
    (v,) = verdicts
    assert v.status == "ALARM"
    assert v.witness  # (load node -> store node | None) pairs
    prog = corpus_program("fig1_nofence.lit")
    all_nodes = prog.all_nodes()
    for load, store in v.witness:
        assert isinstance(all_nodes[load][1], Load)
        assert store is None or store in all_nodes
