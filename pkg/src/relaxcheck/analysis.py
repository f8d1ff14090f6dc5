"""Thread-modular analysis driver.

The analysis runs in two phases.  A bootstrap fixpoint first runs every
thread with each load conservatively joining the post-environments of all
remote stores it might read, iterating (with widening) until the published
store environments stabilize; this over-approximates every execution and
seeds the second phase.

The second phase enumerates interference combinations: one simultaneous
choice, for every load in the program, of a remote store to read from (or
no remote interference).  Because a combination fixes a single source per
load, its reads-from facts are consistent by construction, and combinations
refuted by the feasibility engine are pruned.  Each surviving combination
is re-analyzed with combination-conditional environments — every load takes
exactly its chosen store's environment, iterated across threads starting
from the bootstrap result — and assertions are judged on the environments
of the surviving combinations only.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .domain import AbstractEnv, Interval, may_be_false, transfer
from .feasibility import (
    NO_INTERFERENCE, FeasibilityContext, InterferenceCombination,
    MemoryModel, RemoteStore,
)
from .ir import Assert, FlowGraph, Load, Program, Store, VarId
from .relations import RelationStore, extract_all

DEFAULT_CAP = 4096
_WIDEN_ROUND = 3      # widen the bootstrap env map between rounds after this
_MAX_ROUNDS = 64      # safety net; widening makes this unreachable
_SIGMA_ROUNDS = 8     # cap on combination-conditional re-analysis rounds


class AnalysisError(Exception):
    """Internal invariant failure (should never happen on valid input)."""


@dataclass
class ThreadStats:
    combinations_enumerated: int = 0
    combinations_pruned: int = 0
    overflowed: bool = False


@dataclass
class AnalysisStats:
    threads: int = 0
    nodes: int = 0
    outer_rounds: int = 0
    per_thread: dict[str, ThreadStats] = field(default_factory=dict)


@dataclass(frozen=True)
class Verdict:
    node: int
    location: str
    model: MemoryModel
    status: str  # 'PROVED' | 'ALARM'
    # when ALARM: load node -> interfering store node (None = sequential)
    witness: tuple[tuple[int, int | None], ...] = ()


def initial_env(program: Program) -> AbstractEnv:
    return AbstractEnv({v: Interval.const(init)
                        for v, init in program.globals.items()})


def _cycle_nodes(graph: FlowGraph) -> set[int]:
    """Nodes lying on some cycle (self-reachable through >=1 edge)."""
    on_cycle = set()
    for n in graph.nodes:
        stack = list(graph.successors(n))
        seen = set(stack)
        while stack:
            m = stack.pop()
            if m == n:
                on_cycle.add(n)
                break
            for s in graph.successors(m):
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
    return on_cycle


# ---------------------------------------------------------------------------
# Per-thread sequential fixpoint under one interference combination
# ---------------------------------------------------------------------------

def analyze_thread(graph: FlowGraph, init_env: AbstractEnv,
                   choices: dict[int, object],
                   fallback: dict[int, Interval] | None = None,
                   ) -> dict[int, AbstractEnv]:
    """Least fixpoint of the per-node transfer over the graph, where loads
    with a RemoteStore choice take the remote environment's value for the
    loaded variable (replacing the sequential value), loads in `fallback`
    join the given interval into the loaded variable, and all other loads
    read their sequential value.  Widening at cycle nodes after 2 visits."""
    fallback = fallback or {}
    cycles = _cycle_nodes(graph)
    post: dict[int, AbstractEnv] = {n: AbstractEnv.bottom()
                                    for n in graph.nodes}
    visits: dict[int, int] = {n: 0 for n in graph.nodes}
    worklist = [graph.entry]
    in_list = {graph.entry}
    while worklist:
        n = worklist.pop(0)
        in_list.discard(n)
        instr = graph.nodes[n]
        if n == graph.entry:
            inp = init_env
        else:
            inp = AbstractEnv.bottom()
            for p in graph.predecessors(n):
                inp = inp.join(post[p])
        if isinstance(instr, Load) and not inp.is_bottom:
            choice = choices.get(n, NO_INTERFERENCE)
            if isinstance(choice, RemoteStore):
                inp = inp.set(instr.src, choice.env.get(instr.src))
            if n in fallback:
                inp = inp.set(instr.src,
                              inp.get(instr.src).join(fallback[n]))
        out = transfer(instr, inp)
        visits[n] += 1
        new = post[n].join(out)
        if n in cycles and visits[n] > 2:
            new = post[n].widen(new)
        if not (new.leq(post[n]) and post[n].leq(new)):
            post[n] = new
            for s in graph.successors(n):
                if s not in in_list:
                    in_list.add(s)
                    worklist.append(s)
    return post


def analyze_tm(graph: FlowGraph, ic: InterferenceCombination,
               init_env: AbstractEnv) -> dict[int, AbstractEnv]:
    """Sequential fixpoint of one thread under one combination."""
    return analyze_thread(graph, init_env, dict(ic))


# ---------------------------------------------------------------------------
# Interference collection and combination enumeration
# ---------------------------------------------------------------------------

def remote_stores_for(load_node: int, var: VarId, thread: str,
                      relstore: RelationStore,
                      store_envs: dict[int, AbstractEnv]) -> list[int]:
    """Published stores (other threads, same variable) a load might read."""
    return [s for s in sorted(store_envs)
            if relstore.store_var.get(s) == var
            and relstore.thread_of[s] != thread]


def collect_candidates(program: Program, relstore: RelationStore,
                       store_envs: dict[int, AbstractEnv],
                       ) -> dict[int, list[int]]:
    """Per enumerable (non-loop) load across all threads: the candidate
    remote store nodes.  Loads on loop cycles are handled by the joined
    fallback instead of enumeration."""
    out: dict[int, list[int]] = {}
    for name in program.threads:
        graph = program.threads[name]
        cycles = _cycle_nodes(graph)
        for n in sorted(graph.nodes):
            instr = graph.nodes[n]
            if isinstance(instr, Load) and n not in cycles:
                out[n] = remote_stores_for(n, instr.src, graph.thread,
                                           relstore, store_envs)
    return out


def enumerate_combinations(candidates: dict[int, list[int]], cap: int
                           ) -> tuple[list[dict[int, int | None]], bool]:
    """Cartesian product over loads of (no-interference + candidate
    stores); overflow (empty list, True) when the product exceeds cap."""
    loads = sorted(candidates)
    total = 1
    for l in loads:
        total *= len(candidates[l]) + 1
        if total > cap:
            return [], True
    combos = []
    for picks in itertools.product(*([None] + candidates[l]
                                     for l in loads)):
        combos.append(dict(zip(loads, picks)))
    return combos, False


def loop_fallback_env(load_node: int, var: VarId, stores: list[int],
                      store_envs: dict[int, AbstractEnv],
                      ctx: FeasibilityContext) -> Interval:
    """Joined value contribution for a load handled without enumeration:
    every candidate not refuted outright for this load contributes."""
    acc = Interval.bottom()
    for s in stores:
        if ctx.check_facts(frozenset({(load_node, s)})):
            acc = acc.join(store_envs[s].get(var))
    return acc


# ---------------------------------------------------------------------------
# Phase 1: bootstrap fixpoint (joins all interference, no pruning)
# ---------------------------------------------------------------------------

def _store_nodes(program: Program) -> list[int]:
    init_nodes = set(program.init_stores.values())
    out = []
    for g in program.threads.values():
        for n in sorted(g.nodes):
            if isinstance(g.nodes[n], Store) and n not in init_nodes:
                out.append(n)
    return sorted(out)


def _all_load_fallbacks(program: Program, relstore: RelationStore,
                        store_envs: dict[int, AbstractEnv],
                        ctx: FeasibilityContext,
                        loads: str = "all") -> dict[str, dict[int, Interval]]:
    """Per thread, the joined-interference fallback map covering either
    every load ('all', for the bootstrap) or only loop loads ('loops')."""
    out: dict[str, dict[int, Interval]] = {}
    for name in program.threads:
        graph = program.threads[name]
        cycles = _cycle_nodes(graph)
        fb: dict[int, Interval] = {}
        for n in sorted(graph.nodes):
            instr = graph.nodes[n]
            if not isinstance(instr, Load):
                continue
            if loads == "loops" and n not in cycles:
                continue
            cands = remote_stores_for(n, instr.src, graph.thread,
                                      relstore, store_envs)
            fb[n] = loop_fallback_env(n, instr.src, cands, store_envs, ctx)
        out[name] = fb
    return out


def bootstrap_fixpoint(program: Program, relstore: RelationStore,
                       ctx: FeasibilityContext,
                       round_maps: list | None = None,
                       ) -> tuple[dict[int, AbstractEnv],
                                  dict[int, AbstractEnv], int]:
    """Global fixpoint with every load joining all its candidates' values.
    Returns (env map over all nodes, store post-environments, rounds);
    when round_maps is a list, the env map after each round is appended."""
    init = initial_env(program)
    store_nodes = _store_nodes(program)
    store_envs: dict[int, AbstractEnv] = {n: AbstractEnv.bottom()
                                          for n in store_nodes}
    env_map: dict[int, AbstractEnv] = {
        n: AbstractEnv.bottom()
        for g in program.threads.values() for n in g.nodes}

    for round_no in range(1, _MAX_ROUNDS + 1):
        before_envs = dict(store_envs)
        fallbacks = _all_load_fallbacks(program, relstore, store_envs, ctx)
        new_map: dict[int, AbstractEnv] = {}
        for name in program.threads:
            graph = program.threads[name]
            post = analyze_thread(graph, init, {}, fallbacks[name])
            new_map.update(post)
        if round_no >= _WIDEN_ROUND:
            for n in new_map:
                new_map[n] = env_map[n].widen(new_map[n])
        for s in store_nodes:
            store_envs[s] = store_envs[s].join(new_map[s])
            if round_no >= _WIDEN_ROUND:
                store_envs[s] = before_envs[s].widen(store_envs[s])
        stable = (all(store_envs[s] == before_envs[s] for s in store_nodes)
                  and all(new_map[n] == env_map[n] for n in new_map))
        env_map = new_map
        if round_maps is not None:
            round_maps.append(dict(env_map))
        if stable:
            return env_map, store_envs, round_no
    raise AnalysisError("bootstrap fixpoint did not stabilize")


# ---------------------------------------------------------------------------
# Phase 2: combination enumeration with conditional environments
# ---------------------------------------------------------------------------

def _combination_facts(ctx: FeasibilityContext,
                       sigma: dict[int, int | None]
                       ) -> frozenset[tuple[int, int]]:
    ic = {l: (NO_INTERFERENCE if s is None
              else RemoteStore(s, AbstractEnv.bottom()))
          for l, s in sigma.items()}
    return ctx.facts_for(ic)


def _run_combination(program: Program, sigma: dict[int, int | None],
                     store_envs: dict[int, AbstractEnv],
                     loop_fallbacks: dict[str, dict[int, Interval]],
                     init: AbstractEnv) -> dict[int, AbstractEnv]:
    """Re-analyze all threads with each load pinned to its chosen store,
    iterating the cross-thread environment flow from the bootstrap result.
    Every iterate soundly covers the combination's executions; the last one
    (stable or round-capped) is returned."""
    envs = dict(store_envs)
    posts: dict[int, AbstractEnv] = {}
    for _ in range(_SIGMA_ROUNDS):
        posts = {}
        for name in program.threads:
            graph = program.threads[name]
            choices = {l: RemoteStore(s, envs[s])
                       for l, s in sigma.items()
                       if s is not None and l in graph.nodes}
            posts.update(analyze_thread(graph, init, choices,
                                        loop_fallbacks[name]))
        new_envs = {s: posts[s] for s in envs}
        if new_envs == envs:
            break
        envs = new_envs
    return posts


def analyze_all(program: Program, model: MemoryModel,
                cap: int = DEFAULT_CAP
                ) -> tuple[dict[int, AbstractEnv], list[Verdict],
                           AnalysisStats]:
    relstore = extract_all(program)
    ctx = FeasibilityContext(program, model, relstore)
    init = initial_env(program)

    stats = AnalysisStats(
        threads=len(program.threads),
        nodes=sum(len(g.nodes) for g in program.threads.values()))

    boot_map, store_envs, rounds = bootstrap_fixpoint(program, relstore, ctx)
    stats.outer_rounds = rounds

    candidates = collect_candidates(program, relstore, store_envs)
    thread_loads = {name: sorted(n for n in candidates
                                 if n in program.threads[name].nodes)
                    for name in program.threads}
    combos, overflow = enumerate_combinations(candidates, cap)

    if overflow:
        for name in program.threads:
            stats.per_thread[name] = ThreadStats(
                overflowed=bool(thread_loads[name]))
        verdicts = _verdicts(program, model, {
            n: [((), boot_map[n])] for n in boot_map
            if isinstance(_node_instr(program, n), Assert)})
        return boot_map, verdicts, stats

    loop_fallbacks = _all_load_fallbacks(program, relstore, store_envs, ctx,
                                         loads="loops")

    env_map: dict[int, AbstractEnv] = {n: AbstractEnv.bottom()
                                       for n in boot_map}
    assert_runs: dict[int, list] = {}
    seen_proj: dict[str, set] = {name: set() for name in program.threads}
    feasible_proj: dict[str, set] = {name: set() for name in program.threads}
    for sigma in combos:
        for name in program.threads:
            seen_proj[name].add(
                tuple(sigma[l] for l in thread_loads[name]))
        if not ctx.check_facts(_combination_facts(ctx, sigma)):
            continue
        for name in program.threads:
            feasible_proj[name].add(
                tuple(sigma[l] for l in thread_loads[name]))
        posts = _run_combination(program, sigma, store_envs,
                                 loop_fallbacks, init)
        witness = tuple(sorted(sigma.items()))
        for n, env in posts.items():
            env_map[n] = env_map[n].join(env)
            if isinstance(_node_instr(program, n), Assert):
                assert_runs.setdefault(n, []).append((witness, env))

    for name in program.threads:
        stats.per_thread[name] = ThreadStats(
            combinations_enumerated=len(seen_proj[name]),
            combinations_pruned=(len(seen_proj[name])
                                 - len(feasible_proj[name])))

    verdicts = _verdicts(program, model, assert_runs)
    return env_map, verdicts, stats


def _node_instr(program: Program, node: int):
    for g in program.threads.values():
        if node in g.nodes:
            return g.nodes[node]
    return None


def _verdicts(program: Program, model: MemoryModel,
              assert_runs: dict[int, list]) -> list[Verdict]:
    verdicts = []
    for name in program.threads:
        g = program.threads[name]
        for n in sorted(g.nodes):
            instr = g.nodes[n]
            if not isinstance(instr, Assert):
                continue
            status, witness = "PROVED", ()
            for w, env in assert_runs.get(n, []):
                if may_be_false(instr.cond, env):
                    status = "ALARM"
                    witness = tuple(w)
                    break
            verdicts.append(Verdict(n, instr.location, model, status,
                                    witness))
    verdicts.sort(key=lambda v: v.node)
    return verdicts
