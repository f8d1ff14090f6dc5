"""Program representation: per-thread flow graphs of atomic instructions.

A program is a set of flow graphs, one per thread, plus a virtual root
thread that stores the initial value of every global, creates all
top-level threads, and joins them at the end.  Every node carries exactly
one atomic instruction that touches at most one global variable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

ROOT_THREAD = "__root__"
EPILOGUE_THREAD = "__epilogue__"


# ---------------------------------------------------------------------------
# Variables, expressions, conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarId:
    """A variable: global (owner is None) or local to one thread."""
    name: str
    owner: str | None = None

    @property
    def is_global(self) -> bool:
        return self.owner is None

    def __str__(self) -> str:
        if self.owner is None:
            return self.name
        return f"{self.owner}.{self.name}"


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Var:
    var: VarId

    def __str__(self) -> str:
        return str(self.var)


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    left: Expr
    right: Expr

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


Expr = Const | Var | BinOp


@dataclass(frozen=True)
class Cmp:
    op: str  # '==', '!=', '<', '<=', '>', '>='
    left: Expr
    right: Expr

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class And:
    left: Cond
    right: Cond

    def __str__(self) -> str:
        return f"({self.left} && {self.right})"


@dataclass(frozen=True)
class Or:
    left: Cond
    right: Cond

    def __str__(self) -> str:
        return f"({self.left} || {self.right})"


@dataclass(frozen=True)
class Not:
    cond: Cond

    def __str__(self) -> str:
        return f"!({self.cond})"


Cond = Cmp | And | Or | Not


def expr_vars(e: Expr) -> set[VarId]:
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.var}
    return expr_vars(e.left) | expr_vars(e.right)


def cond_vars(c: Cond) -> set[VarId]:
    if isinstance(c, Cmp):
        return expr_vars(c.left) | expr_vars(c.right)
    if isinstance(c, Not):
        return cond_vars(c.cond)
    return cond_vars(c.left) | cond_vars(c.right)


# ---------------------------------------------------------------------------
# Instructions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Load:
    dst: VarId  # local
    src: VarId  # global

    def __str__(self) -> str:
        return f"{self.dst} = load {self.src}"


@dataclass(frozen=True)
class Store:
    dst: VarId  # global
    src: Expr   # pure expression over locals/constants

    def __str__(self) -> str:
        return f"store {self.dst} = {self.src}"


@dataclass(frozen=True)
class LocalAssign:
    dst: VarId
    src: Expr

    def __str__(self) -> str:
        return f"{self.dst} = {self.src}"


@dataclass(frozen=True)
class Fence:
    def __str__(self) -> str:
        return "fence"


MEMBAR_KINDS = ("LL", "LS", "SL", "SS")


@dataclass(frozen=True)
class Membar:
    kinds: frozenset[str]

    def __str__(self) -> str:
        return "membar " + " ".join(f"#{k}" for k in sorted(self.kinds))


@dataclass(frozen=True)
class Assume:
    cond: Cond

    def __str__(self) -> str:
        return f"assume {self.cond}"


@dataclass(frozen=True)
class Assert:
    cond: Cond
    location: str = ""

    def __str__(self) -> str:
        return f"assert {self.cond}"


@dataclass(frozen=True)
class ThreadCreate:
    child: str

    def __str__(self) -> str:
        return f"create {self.child}"


@dataclass(frozen=True)
class ThreadJoin:
    child: str

    def __str__(self) -> str:
        return f"join {self.child}"


@dataclass(frozen=True)
class Nop:
    def __str__(self) -> str:
        return "nop"


Instruction = (
    Load | Store | LocalAssign | Fence | Membar | Assume | Assert
    | ThreadCreate | ThreadJoin | Nop
)


def instr_reads_global(instr: Instruction) -> VarId | None:
    if isinstance(instr, Load):
        return instr.src
    return None


def instr_writes_global(instr: Instruction) -> VarId | None:
    if isinstance(instr, Store):
        return instr.dst
    return None


# ---------------------------------------------------------------------------
# Flow graphs and programs
# ---------------------------------------------------------------------------

@dataclass
class FlowGraph:
    thread: str
    nodes: dict[int, Instruction]
    entry: int
    exit: int
    edges: set[tuple[int, int]]

    def successors(self, n: int) -> list[int]:
        return sorted(b for (a, b) in self.edges if a == n)

    def predecessors(self, n: int) -> list[int]:
        return sorted(a for (a, b) in self.edges if b == n)


@dataclass
class Program:
    globals: dict[VarId, int]
    threads: dict[str, FlowGraph]  # includes the root graph
    root: str = ROOT_THREAD
    # node id of the virtual initializing store for each global
    init_stores: dict[VarId, int] = field(default_factory=dict)

    def graph_of_node(self, n: int) -> FlowGraph:
        for g in self.threads.values():
            if n in g.nodes:
                return g
        raise KeyError(n)

    def all_nodes(self) -> dict[int, tuple[str, Instruction]]:
        out: dict[int, tuple[str, Instruction]] = {}
        for name in sorted(self.threads):
            g = self.threads[name]
            for n, instr in g.nodes.items():
                out[n] = (name, instr)
        return out


def _reachable(graph: FlowGraph, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        for m in graph.successors(n):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def validate(program: Program) -> list[str]:
    """Structural diagnostics; empty list iff the program is well formed."""
    diags: list[str] = []
    seen_nodes: set[int] = set()

    for name in sorted(program.threads):
        g = program.threads[name]
        if g.entry not in g.nodes:
            diags.append(f"{name}: entry node {g.entry} missing")
            continue
        if g.exit not in g.nodes:
            diags.append(f"{name}: exit node {g.exit} missing")
            continue
        for n in g.nodes:
            if n in seen_nodes:
                diags.append(f"{name}: node {n} reused across graphs")
            seen_nodes.add(n)
        for (a, b) in g.edges:
            if a not in g.nodes or b not in g.nodes:
                diags.append(f"{name}: edge ({a},{b}) references unknown node")
        if g.predecessors(g.entry):
            diags.append(f"{name}: entry node {g.entry} has incoming edges")
        if g.successors(g.exit):
            diags.append(f"{name}: exit node {g.exit} has outgoing edges")
        reach = _reachable(g, g.entry)
        for n in sorted(g.nodes):
            if n not in reach:
                diags.append(f"{name}: node {n} unreachable from entry")

        for n in sorted(g.nodes):
            instr = g.nodes[n]
            diags.extend(_check_instr(program, name, n, instr))

    # thread creation structure
    for name in sorted(program.threads):
        g = program.threads[name]
        for n in sorted(g.nodes):
            instr = g.nodes[n]
            if isinstance(instr, (ThreadCreate, ThreadJoin)):
                if instr.child not in program.threads:
                    diags.append(f"{name}: node {n} targets unknown thread "
                                 f"'{instr.child}'")
    if program.root not in program.threads:
        diags.append(f"root graph '{program.root}' missing")
    diags.extend(_check_creation_acyclic(program))
    return diags


def _check_instr(program: Program, thread: str, n: int,
                 instr: Instruction) -> list[str]:
    diags = []

    def check_local(v: VarId, what: str) -> None:
        if v.is_global:
            diags.append(f"{thread}: node {n}: {what} must be local, got "
                         f"global '{v.name}'")
        elif v.owner != thread:
            diags.append(f"{thread}: node {n}: {what} '{v}' belongs to "
                         f"another thread")

    def check_pure(vs: set[VarId], what: str) -> None:
        for v in sorted(vs, key=str):
            if v.is_global:
                diags.append(f"{thread}: node {n}: {what} mentions global "
                             f"'{v.name}'")
            else:
                check_local(v, what)

    if isinstance(instr, Load):
        check_local(instr.dst, "load destination")
        if not instr.src.is_global:
            diags.append(f"{thread}: node {n}: load source '{instr.src}' "
                         f"is not global")
    elif isinstance(instr, Store):
        if not instr.dst.is_global:
            diags.append(f"{thread}: node {n}: store destination "
                         f"'{instr.dst}' is not global")
        check_pure(expr_vars(instr.src), "store expression")
    elif isinstance(instr, LocalAssign):
        check_local(instr.dst, "assignment destination")
        check_pure(expr_vars(instr.src), "assignment expression")
    elif isinstance(instr, Assume):
        check_pure(cond_vars(instr.cond), "assume condition")
    elif isinstance(instr, Assert):
        check_pure(cond_vars(instr.cond), "assert condition")
    elif isinstance(instr, Membar):
        if not instr.kinds or not instr.kinds <= set(MEMBAR_KINDS):
            diags.append(f"{thread}: node {n}: bad membar kinds "
                         f"{sorted(instr.kinds)}")
    return diags


def _check_creation_acyclic(program: Program) -> list[str]:
    creators: dict[str, set[str]] = {t: set() for t in program.threads}
    for name, g in program.threads.items():
        for instr in g.nodes.values():
            if isinstance(instr, ThreadCreate) and instr.child in creators:
                creators[name].add(instr.child)
    seen: set[str] = set()
    stack: set[str] = set()

    def visit(t: str) -> bool:
        if t in stack:
            return False
        if t in seen:
            return True
        seen.add(t)
        stack.add(t)
        ok = all(visit(c) for c in sorted(creators[t]))
        stack.discard(t)
        return ok

    for t in sorted(program.threads):
        if not visit(t):
            return [f"thread creation cycle involving '{t}'"]
    return []


def node_count(program: Program) -> int:
    return sum(len(g.nodes) for g in program.threads.values())
