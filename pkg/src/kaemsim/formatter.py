"""Canonical pretty-printer: format(parse(s)) reparses to an equal AST."""

from __future__ import annotations

from . import ast_nodes as A

_INDENT = "  "

_PREC = {
    "or": 1, "and": 2,
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "^": 8,
}


def format_ast(node) -> str:
    """Render a Program (or single statement) back to canonical source."""
    if isinstance(node, A.Program):
        return "".join(_stmt(s, 0) for s in node.statements)
    return _stmt(node, 0)


def _stmt(s, depth: int) -> str:
    pad = _INDENT * depth
    if isinstance(s, A.SpeciesDecl):
        init = f" @ {_expr(s.initial)}" if s.initial is not None else ""
        return f"{pad}species {s.name}{init}\n"
    if isinstance(s, A.ReactionStmt):
        arrow = "<->" if s.reversible else "->"
        rate = _rate(s.rate)
        return (f"{pad}{_complex(s.reagents)} {arrow} "
                f"{_complex(s.products)} {rate}\n")
    if isinstance(s, A.FunctionDef):
        body = "".join(_stmt(b, depth + 1) for b in s.body)
        return f"{pad}function {s.name}({', '.join(s.params)}) {{\n{body}{pad}}}\n"
    if isinstance(s, A.Let):
        return f"{pad}let {s.name} = {_expr(s.value)}\n"
    if isinstance(s, A.IfStmt):
        out = f"{pad}if {_expr(s.condition)} {{\n"
        out += "".join(_stmt(b, depth + 1) for b in s.then_body)
        out += f"{pad}}}"
        if s.else_body is not None:
            if len(s.else_body) == 1 and isinstance(s.else_body[0], A.IfStmt):
                return out + " else " + _stmt(s.else_body[0], depth).lstrip()
            out += " else {\n"
            out += "".join(_stmt(b, depth + 1) for b in s.else_body)
            out += f"{pad}}}"
        return out + "\n"
    if isinstance(s, A.ForStmt):
        body = "".join(_stmt(b, depth + 1) for b in s.body)
        return (f"{pad}for {s.var} in {_expr(s.start)}..{_expr(s.stop)} "
                f"{{\n{body}{pad}}}\n")
    if isinstance(s, A.YieldStmt):
        return f"{pad}yield {_expr(s.value)}\n"
    if isinstance(s, A.ReportStmt):
        label = f" as {_quote(s.label)}" if s.label is not None else ""
        return f"{pad}report {_expr(s.value)}{label}\n"
    if isinstance(s, A.EquilibrateStmt):
        sample = f" {s.sample}" if s.sample else ""
        temp = ""
        if s.temperature is not None:
            unit = f" {s.temp_unit}" if s.temp_unit else ""
            temp = f" at {_expr(s.temperature)}{unit}"
        return f"{pad}equilibrate{sample} {_expr(s.duration)}{temp}\n"
    if isinstance(s, A.SampleStmt):
        body = "".join(_stmt(b, depth + 1) for b in s.body)
        return f"{pad}sample {s.name} {{\n{body}{pad}}}\n"
    if isinstance(s, A.VolumeStmt):
        unit = f" {s.unit}" if s.unit else ""
        return f"{pad}volume {_expr(s.value)}{unit}\n"
    if isinstance(s, A.TemperatureStmt):
        unit = f" {s.unit}" if s.unit else ""
        return f"{pad}temperature {_expr(s.value)}{unit}\n"
    if isinstance(s, A.MixStmt):
        return f"{pad}mix {s.target} = {', '.join(_expr(x) for x in s.sources)}\n"
    if isinstance(s, A.SplitStmt):
        by = f" by {_expr(s.proportion)}" if s.proportion is not None else ""
        return f"{pad}split {s.targets[0]}, {s.targets[1]} = {_expr(s.source)}{by}\n"
    if isinstance(s, A.DisposeStmt):
        return f"{pad}dispose {_expr(s.value)}\n"
    if isinstance(s, A.ExprStmt):
        return f"{pad}{_expr(s.value)}\n"
    raise TypeError(f"unknown statement {type(s).__name__}")


def _rate(r: A.RateClause) -> str:
    inner = ", ".join(_expr(e) for e in r.exprs)
    if r.general:
        return f"{{rate {inner}}}"
    return f"{{{inner}}}"


def _complex(c: A.ComplexAst) -> str:
    if not c.terms:
        return "nothing"
    parts = []
    for t in c.terms:
        parts.append(t.name if t.multiplicity == 1 else f"{t.multiplicity}*{t.name}")
    return " + ".join(parts)


def _expr(e, parent_prec: int = 0, right: bool = False) -> str:
    if isinstance(e, A.NumberLit):
        return _num(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.StringLit):
        return _quote(e.value)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Unary):
        inner = _expr(e.operand, 7)
        s = f"not {inner}" if e.op == "not" else f"-{inner}"
        return f"({s})" if parent_prec >= 6 else s
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        ls = _expr(e.left, p, right=False)
        rs = _expr(e.right, p + (0 if e.op == "^" else 1), right=True)
        if e.op == "^":
            ls = _expr(e.left, p + 1, right=False)
            rs = _expr(e.right, p, right=True)
        s = f"{ls} {e.op} {rs}" if e.op in ("and", "or") or _PREC[e.op] <= 5 else f"{ls} {e.op} {rs}"
        return f"({s})" if p < parent_prec else s
    if isinstance(e, A.Call):
        callee = _expr(e.callee, 9)
        return f"{callee}({', '.join(_expr(a) for a in e.args)})"
    raise TypeError(f"unknown expression {type(e).__name__}")


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'
