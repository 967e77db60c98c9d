"""Compiled arithmetic expressions used as general rate laws.

A rate expression is closed over everything except species concentrations,
time, and sample temperature. The evaluator lowers surface syntax into these
nodes at emission time (variables holding species become Conc nodes, plain
numbers become Const). Nodes support numeric evaluation, symbolic
differentiation with respect to a species concentration, and rendering back
to text for the symbolic ODE export.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable


class RateExprError(Exception):
    pass


class Node:
    def eval(self, conc, t, temp):
        raise NotImplementedError

    def diff(self, sid: int) -> "Node":
        raise NotImplementedError

    def show(self, name_of: Callable[[int], str]) -> str:
        raise NotImplementedError

    def species_ids(self) -> set[int]:
        return set()


@dataclass(frozen=True)
class Const(Node):
    value: float

    def eval(self, conc, t, temp):
        return self.value

    def diff(self, sid):
        return Const(0.0)

    def show(self, name_of):
        return _fmt(self.value)


@dataclass(frozen=True)
class Conc(Node):
    sid: int

    def eval(self, conc, t, temp):
        return conc[self.sid]

    def diff(self, sid):
        return Const(1.0 if sid == self.sid else 0.0)

    def show(self, name_of):
        return f"[{name_of(self.sid)}]"

    def species_ids(self):
        return {self.sid}


class Time(Node):
    def eval(self, conc, t, temp):
        return t

    def diff(self, sid):
        return Const(0.0)

    def show(self, name_of):
        return "t"

    def __eq__(self, other):
        return isinstance(other, Time)

    def __hash__(self):
        return hash("t")


class Temp(Node):
    def eval(self, conc, t, temp):
        return temp

    def diff(self, sid):
        return Const(0.0)

    def show(self, name_of):
        return "temp"

    def __eq__(self, other):
        return isinstance(other, Temp)

    def __hash__(self):
        return hash("temp")


@dataclass(frozen=True)
class BinOp(Node):
    op: str  # + - * / ^
    left: Node
    right: Node

    def eval(self, conc, t, temp):
        a = self.left.eval(conc, t, temp)
        b = self.right.eval(conc, t, temp)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        if self.op == "^":
            return a ** b
        raise RateExprError(f"unknown operator {self.op}")

    def diff(self, sid):
        a, b = self.left, self.right
        da, db = a.diff(sid), b.diff(sid)
        if self.op == "+":
            return add(da, db)
        if self.op == "-":
            return sub(da, db)
        if self.op == "*":
            return add(mul(da, b), mul(a, db))
        if self.op == "/":
            return sub(div(da, b), div(mul(a, db), mul(b, b)))
        if self.op == "^":
            if isinstance(b, Const):
                # d(a^c) = c * a^(c-1) * da
                return mul(mul(b, power(a, Const(b.value - 1.0))), da)
            # general a^b = exp(b ln a)
            return mul(power(a, b), add(mul(db, Call("log", (a,))), div(mul(b, da), a)))
        raise RateExprError(f"unknown operator {self.op}")

    def show(self, name_of):
        prec = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}[self.op]
        ls = _paren(self.left, prec, name_of, right=False)
        rs = _paren(self.right, prec, name_of, right=True)
        if self.op == "+" and rs.startswith("-"):
            return f"{ls} - {rs[1:]}"
        return f"{ls} {self.op} {rs}" if self.op in "+-" else f"{ls}{self.op}{rs}"

    def species_ids(self):
        return self.left.species_ids() | self.right.species_ids()


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def eval(self, conc, t, temp):
        return -self.arg.eval(conc, t, temp)

    def diff(self, sid):
        return neg(self.arg.diff(sid))

    def show(self, name_of):
        s = self.arg.show(name_of)
        if isinstance(self.arg, (BinOp, Neg)):
            s = f"({s})"
        return f"-{s}"

    def species_ids(self):
        return self.arg.species_ids()


_FUNCS = {
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "abs": abs,
    "min": min,
    "max": max,
}


@dataclass(frozen=True)
class Call(Node):
    fn: str
    args: tuple

    def eval(self, conc, t, temp):
        vals = [a.eval(conc, t, temp) for a in self.args]
        return _FUNCS[self.fn](*vals)

    def diff(self, sid):
        (a,) = self.args if len(self.args) == 1 else (None,)
        if self.fn == "exp":
            return mul(self, a.diff(sid))
        if self.fn == "log":
            return div(a.diff(sid), a)
        if self.fn == "sqrt":
            return div(a.diff(sid), mul(Const(2.0), self))
        if self.fn == "sin":
            return mul(Call("cos", self.args), a.diff(sid))
        if self.fn == "cos":
            return neg(mul(Call("sin", self.args), a.diff(sid)))
        if self.fn == "tan":
            return div(a.diff(sid), power(Call("cos", self.args), Const(2.0)))
        raise RateExprError(f"function {self.fn} is not differentiable here")

    def show(self, name_of):
        return f"{self.fn}({', '.join(a.show(name_of) for a in self.args)})"

    def species_ids(self):
        out = set()
        for a in self.args:
            out |= a.species_ids()
        return out


@dataclass(frozen=True)
class DatasetLookup(Node):
    """Piecewise-linear interpolation into a captured timecourse column."""

    dataset: object  # evaluator.Dataset
    label: str
    at: Node

    def eval(self, conc, t, temp):
        return self.dataset.interpolate(self.label, self.at.eval(conc, t, temp))

    def diff(self, sid):
        d = self.at.diff(sid)
        if isinstance(d, Const) and d.value == 0.0:
            return Const(0.0)
        raise RateExprError("dataset lookup is not differentiable in species")

    def show(self, name_of):
        return f"dataset[{self.label!r}]({self.at.show(name_of)})"

    def species_ids(self):
        return self.at.species_ids()


# smart constructors dropping zero/one terms, used by diff and symbolic output

def _is_const(n: Node, v: float) -> bool:
    return isinstance(n, Const) and n.value == v


def add(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def sub(a: Node, b: Node) -> Node:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return BinOp("-", a, b)


def mul(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def div(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return Const(0.0)
    if _is_const(b, 1.0):
        return a
    return BinOp("/", a, b)


def neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Node, b: Node) -> Node:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return Const(1.0)
    return BinOp("^", a, b)


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _paren(n: Node, parent_prec: int, name_of, right: bool) -> str:
    prec = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}
    s = n.show(name_of)
    if isinstance(n, BinOp):
        p = prec[n.op]
        if p < parent_prec or (p == parent_prec and right and n.op in ("-", "/", "^")):
            return f"({s})"
    if isinstance(n, Neg) and parent_prec >= 2:
        return f"({s})"
    return s
