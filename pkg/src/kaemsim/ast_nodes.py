"""Typed AST for the chemical-programming language.

Spans are recorded on every node but excluded from structural equality so
that format/reparse round-trip tests compare shape, not positions. Reaction
statements hold unresolved species names; names bind at evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    end_line: int
    end_column: int


def _span_field():
    return field(compare=False, repr=False)


@dataclass
class NodeBase:
    span: Span = _span_field()


# --- expressions -----------------------------------------------------------

@dataclass
class NumberLit(NodeBase):
    value: float


@dataclass
class BoolLit(NodeBase):
    value: bool


@dataclass
class StringLit(NodeBase):
    value: str


@dataclass
class Var(NodeBase):
    name: str


@dataclass
class Unary(NodeBase):
    op: str  # "-" | "not"
    operand: "Expr"


@dataclass
class Binary(NodeBase):
    op: str  # + - * / ^ == != < <= > >= and or
    left: "Expr"
    right: "Expr"


@dataclass
class Call(NodeBase):
    callee: "Expr"
    args: list


Expr = NodeBase


# --- complexes and rates ---------------------------------------------------

@dataclass
class ComplexTerm(NodeBase):
    multiplicity: int
    name: str


@dataclass
class ComplexAst(NodeBase):
    terms: list  # empty list = ∅


@dataclass
class RateClause(NodeBase):
    general: bool  # True: {rate expr} flux; False: mass-action constant(s)
    exprs: list  # one expr, or two for reversible reactions


# --- statements ------------------------------------------------------------

@dataclass
class Program(NodeBase):
    statements: list


@dataclass
class SpeciesDecl(NodeBase):
    name: str
    initial: Optional[Expr]  # `@` clause, concentration


@dataclass
class ReactionStmt(NodeBase):
    reagents: ComplexAst
    reversible: bool
    products: ComplexAst
    rate: RateClause


@dataclass
class FunctionDef(NodeBase):
    name: str
    params: list
    body: list


@dataclass
class Let(NodeBase):
    name: str
    value: Expr


@dataclass
class IfStmt(NodeBase):
    condition: Expr
    then_body: list
    else_body: Optional[list]


@dataclass
class ForStmt(NodeBase):
    var: str
    start: Expr
    stop: Expr
    body: list


@dataclass
class YieldStmt(NodeBase):
    value: Expr


@dataclass
class ReportStmt(NodeBase):
    value: Expr
    label: Optional[str]


@dataclass
class EquilibrateStmt(NodeBase):
    sample: Optional[str]  # None = current sample
    duration: Expr
    temperature: Optional[Expr]
    temp_unit: Optional[str]  # "celsius" | "kelvin"


@dataclass
class VolumeStmt(NodeBase):
    value: Expr
    unit: Optional[str]  # "uL" | "mL", default uL


@dataclass
class TemperatureStmt(NodeBase):
    value: Expr
    unit: Optional[str]  # "celsius" | "kelvin", default celsius


@dataclass
class SampleStmt(NodeBase):
    name: str
    body: list  # VolumeStmt / TemperatureStmt / species / reactions ...


@dataclass
class MixStmt(NodeBase):
    target: str
    sources: list  # two or more expressions


@dataclass
class SplitStmt(NodeBase):
    targets: tuple  # (name, name)
    source: Expr
    proportion: Optional[Expr]  # `by` clause, default 0.5


@dataclass
class DisposeStmt(NodeBase):
    value: Expr


@dataclass
class ExprStmt(NodeBase):
    value: Expr


def walk(node):
    """Yield node and all AST descendants."""
    yield node
    for f in vars(node).values():
        if isinstance(f, NodeBase):
            yield from walk(f)
        elif isinstance(f, (list, tuple)):
            for item in f:
                if isinstance(item, NodeBase):
                    yield from walk(item)
