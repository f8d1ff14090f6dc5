"""Interval abstract domain: values, environments, transfer functions.

Bounds are mathematical integers extended with +/-infinity (represented by
float inf, only ever used as a sentinel).  Environments map variables to
intervals; unmapped variables read as Top.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ir import (
    And, Assert, Assume, BinOp, Cmp, Cond, Const, Expr, Fence, Instruction,
    Load, LocalAssign, Membar, Nop, Not, Or, Store, ThreadCreate, ThreadJoin,
    Var, VarId,
)

NEG_INF = float("-inf")
POS_INF = float("inf")

Bound = int | float

_NEGATE = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_SWAP = {"==": "==", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


def _mul_bound(a: Bound, b: Bound) -> Bound:
    # four-corner helper with 0 * inf = 0
    if a == 0 or b == 0:
        return 0
    return a * b


@dataclass(frozen=True)
class Interval:
    lo: Bound
    hi: Bound
    is_bottom: bool = False

    def __post_init__(self):
        if not self.is_bottom and self.lo > self.hi:
            raise ValueError(f"bad interval [{self.lo}, {self.hi}]")

    @classmethod
    def bottom(cls) -> "Interval":
        return _BOTTOM

    @classmethod
    def top(cls) -> "Interval":
        return _TOP

    @classmethod
    def const(cls, v: int) -> "Interval":
        return cls(v, v)

    def is_top(self) -> bool:
        return not self.is_bottom and self.lo == NEG_INF and self.hi == POS_INF

    def contains(self, v: int) -> bool:
        return not self.is_bottom and self.lo <= v <= self.hi

    def join(self, other: "Interval") -> "Interval":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, other: "Interval") -> "Interval":
        if self.is_bottom or other.is_bottom:
            return _BOTTOM
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return _BOTTOM
        return Interval(lo, hi)

    def leq(self, other: "Interval") -> bool:
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        return self.lo >= other.lo and self.hi <= other.hi

    def widen(self, other: "Interval") -> "Interval":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        lo = self.lo if self.lo <= other.lo else NEG_INF
        hi = self.hi if self.hi >= other.hi else POS_INF
        return Interval(lo, hi)

    def add(self, other: "Interval") -> "Interval":
        if self.is_bottom or other.is_bottom:
            return _BOTTOM
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def sub(self, other: "Interval") -> "Interval":
        if self.is_bottom or other.is_bottom:
            return _BOTTOM
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def mul(self, other: "Interval") -> "Interval":
        if self.is_bottom or other.is_bottom:
            return _BOTTOM
        corners = [_mul_bound(a, b)
                   for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(corners), max(corners))

    def __str__(self) -> str:
        if self.is_bottom:
            return "⊥"
        lo = "-inf" if self.lo == NEG_INF else str(self.lo)
        hi = "+inf" if self.hi == POS_INF else str(self.hi)
        return f"[{lo},{hi}]"


_BOTTOM = Interval(0, 0, is_bottom=True)
_TOP = Interval(NEG_INF, POS_INF)


class AbstractEnv:
    """Map from variables to intervals, with a distinguished bottom."""

    __slots__ = ("_map", "is_bottom")

    def __init__(self, mapping: dict[VarId, Interval] | None = None,
                 is_bottom: bool = False):
        self.is_bottom = is_bottom
        self._map: dict[VarId, Interval] = {} if is_bottom else dict(mapping or {})

    @classmethod
    def bottom(cls) -> "AbstractEnv":
        return cls(is_bottom=True)

    def get(self, var: VarId) -> Interval:
        if self.is_bottom:
            return Interval.bottom()
        return self._map.get(var, Interval.top())

    def set(self, var: VarId, value: Interval) -> "AbstractEnv":
        if self.is_bottom or value.is_bottom:
            return AbstractEnv.bottom()
        m = dict(self._map)
        m[var] = value
        return AbstractEnv(m)

    def variables(self) -> list[VarId]:
        return sorted(self._map, key=str)

    def join(self, other: "AbstractEnv") -> "AbstractEnv":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        m = {}
        for v in set(self._map) | set(other._map):
            m[v] = self.get(v).join(other.get(v))
        return AbstractEnv(m)

    def widen(self, other: "AbstractEnv") -> "AbstractEnv":
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        m = {}
        for v in set(self._map) | set(other._map):
            m[v] = self.get(v).widen(other.get(v))
        return AbstractEnv(m)

    def leq(self, other: "AbstractEnv") -> bool:
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        for v in set(self._map) | set(other._map):
            if not self.get(v).leq(other.get(v)):
                return False
        return True

    def __eq__(self, other) -> bool:
        if not isinstance(other, AbstractEnv):
            return NotImplemented
        return self.leq(other) and other.leq(self)

    def __str__(self) -> str:
        if self.is_bottom:
            return "⊥"
        parts = [f"{v}↦{self._map[v]}" for v in self.variables()
                 if not self._map[v].is_top()]
        return "{" + ", ".join(parts) + "}"


def eval_expr(expr: Expr, env: AbstractEnv) -> Interval:
    if env.is_bottom:
        return Interval.bottom()
    if isinstance(expr, Const):
        return Interval.const(expr.value)
    if isinstance(expr, Var):
        return env.get(expr.var)
    left, right = eval_expr(expr.left, env), eval_expr(expr.right, env)
    if expr.op == "+":
        return left.add(right)
    if expr.op == "-":
        return left.sub(right)
    if expr.op == "*":
        return left.mul(right)
    raise ValueError(f"unknown operator {expr.op!r}")


def _bound_for(op: str, rhs: Interval) -> Interval:
    """Interval of values v for which 'v op rhs' may hold."""
    if rhs.is_bottom:
        return Interval.bottom()
    if op == "==":
        return rhs
    if op == "<":
        return Interval(NEG_INF, rhs.hi - 1)
    if op == "<=":
        return Interval(NEG_INF, rhs.hi)
    if op == ">":
        return Interval(rhs.lo + 1, POS_INF)
    if op == ">=":
        return Interval(rhs.lo, POS_INF)
    raise ValueError(op)


def _refine_cmp(cmp: Cmp, env: AbstractEnv) -> AbstractEnv:
    left_i = eval_expr(cmp.left, env)
    right_i = eval_expr(cmp.right, env)
    if left_i.is_bottom or right_i.is_bottom:
        return AbstractEnv.bottom()

    # definitely-false comparisons produce bottom
    feasible = {
        "==": not left_i.meet(right_i).is_bottom,
        "!=": not (left_i.lo == left_i.hi == right_i.lo == right_i.hi),
        "<": left_i.lo < right_i.hi,
        "<=": left_i.lo <= right_i.hi,
        ">": left_i.hi > right_i.lo,
        ">=": left_i.hi >= right_i.lo,
    }[cmp.op]
    if not feasible:
        return AbstractEnv.bottom()

    out = env
    # one forward pass: tighten bare-variable sides
    if isinstance(cmp.left, Var):
        new = env.get(cmp.left.var).meet(_refine_point(cmp.op, right_i,
                                                       env.get(cmp.left.var)))
        if new.is_bottom:
            return AbstractEnv.bottom()
        out = out.set(cmp.left.var, new)
    if isinstance(cmp.right, Var):
        swapped = _SWAP[cmp.op]
        new = out.get(cmp.right.var).meet(_refine_point(swapped, left_i,
                                                        out.get(cmp.right.var)))
        if new.is_bottom:
            return AbstractEnv.bottom()
        out = out.set(cmp.right.var, new)
    return out


def _refine_point(op: str, rhs: Interval, current: Interval) -> Interval:
    if op == "!=":
        # shrink only when the excluded point sits on a boundary
        if rhs.lo == rhs.hi and not current.is_bottom:
            p = rhs.lo
            if current.lo == current.hi == p:
                return Interval.bottom()
            if current.lo == p:
                return Interval(p + 1, current.hi)
            if current.hi == p:
                return Interval(current.lo, p - 1)
        return current
    return _bound_for(op, rhs)


def negate(cond: Cond) -> Cond:
    if isinstance(cond, Cmp):
        return Cmp(_NEGATE[cond.op], cond.left, cond.right)
    if isinstance(cond, Not):
        return cond.cond
    if isinstance(cond, And):
        return Or(negate(cond.left), negate(cond.right))
    if isinstance(cond, Or):
        return And(negate(cond.left), negate(cond.right))
    raise TypeError(cond)


def refine(cond: Cond, env: AbstractEnv) -> AbstractEnv:
    """Meet the environment with the condition (sound over-approximation)."""
    if env.is_bottom:
        return env
    if isinstance(cond, Cmp):
        return _refine_cmp(cond, env)
    if isinstance(cond, Not):
        return refine(negate(cond.cond), env)
    if isinstance(cond, And):
        return refine(cond.right, refine(cond.left, env))
    if isinstance(cond, Or):
        return refine(cond.left, env).join(refine(cond.right, env))
    raise TypeError(cond)


def may_be_false(cond: Cond, env: AbstractEnv) -> bool:
    """False only if every concrete valuation in env satisfies cond."""
    if env.is_bottom:
        return False
    return not refine(negate(cond), env).is_bottom


def transfer(instr: Instruction, env: AbstractEnv) -> AbstractEnv:
    if env.is_bottom:
        return env
    if isinstance(instr, Load):
        return env.set(instr.dst, env.get(instr.src))
    if isinstance(instr, Store):
        return env.set(instr.dst, eval_expr(instr.src, env))
    if isinstance(instr, LocalAssign):
        return env.set(instr.dst, eval_expr(instr.src, env))
    if isinstance(instr, Assume):
        return refine(instr.cond, env)
    if isinstance(instr, (Fence, Membar, Nop, Assert, ThreadCreate,
                          ThreadJoin)):
        return env
    raise TypeError(instr)
