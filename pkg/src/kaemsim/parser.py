"""Recursive-descent parser producing the typed AST.

Reaction statements are recognized by scanning ahead for an arrow token at
nesting depth zero before the end of the statement; everything else
dispatches on the leading keyword. Total on arbitrary input: any failure is
reported as a located ParseError, never an unhandled exception.
"""

from __future__ import annotations

from typing import Optional

from . import ast_nodes as A
from .lexer import LexError, Token, tokenize


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int, expected=()):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)


def parse(source: str) -> A.Program:
    """Parse a whole program from source text."""
    tokens = tokenize(source)
    return Parser(tokens).parse_program()


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # --- token plumbing ---

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def check(self, lexeme: str) -> bool:
        return self.peek().lexeme == lexeme and self.peek().kind != "string"

    def accept(self, lexeme: str) -> Optional[Token]:
        if self.check(lexeme):
            return self.advance()
        return None

    def expect(self, lexeme: str, what: str = "") -> Token:
        if self.check(lexeme):
            return self.advance()
        tok = self.peek()
        found = tok.lexeme if tok.kind != "eof" else "end of input"
        msg = what or f"expected '{lexeme}', found '{found}'"
        raise ParseError(msg, tok.line, tok.column, expected=(lexeme,))

    def expect_ident(self, what: str = "name") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected {what}, found '{tok.lexeme or 'end of input'}'",
                             tok.line, tok.column, expected=("identifier",))
        return self.advance()

    def skip_newlines(self):
        while self.peek().kind == "newline":
            self.advance()

    def end_statement(self):
        tok = self.peek()
        if tok.kind in ("newline",) or tok.lexeme == ";":
            self.advance()
            return
        if tok.kind == "eof" or tok.lexeme == "}":
            return
        raise ParseError(f"expected end of statement, found '{tok.lexeme}'",
                         tok.line, tok.column, expected=(";", "newline"))

    def span_from(self, start: Token) -> A.Span:
        prev = self.tokens[max(0, self.pos - 1)]
        return A.Span(start.line, start.column, prev.line,
                      prev.column + len(prev.lexeme))

    # --- program / statements ---

    def parse_program(self) -> A.Program:
        start = self.peek()
        stmts = self.parse_statements(top_level=True)
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected '{tok.lexeme}'", tok.line, tok.column)
        return A.Program(self.span_from(start), stmts)

    def parse_statements(self, top_level: bool = False) -> list:
        stmts = []
        while True:
            self.skip_newlines()
            while self.accept(";"):
                self.skip_newlines()
            tok = self.peek()
            if tok.kind == "eof" or tok.lexeme == "}":
                return stmts
            stmts.append(self.parse_statement())

    def parse_block(self) -> list:
        self.expect("{")
        stmts = self.parse_statements()
        self.expect("}")
        return stmts

    def parse_statement(self):
        tok = self.peek()
        lex = tok.lexeme
        if tok.kind == "keyword":
            handler = {
                "species": self.parse_species,
                "function": self.parse_function,
                "let": self.parse_let,
                "if": self.parse_if,
                "for": self.parse_for,
                "yield": self.parse_yield,
                "report": self.parse_report,
                "equilibrate": self.parse_equilibrate,
                "sample": self.parse_sample,
                "mix": self.parse_mix,
                "split": self.parse_split,
                "dispose": self.parse_dispose,
            }.get(lex)
            if handler:
                return handler()
            if lex in ("nothing", "∅"):
                return self.parse_reaction()
        if self._arrow_ahead():
            return self.parse_reaction()
        start = self.peek()
        expr = self.parse_expr()
        stmt = A.ExprStmt(self.span_from(start), expr)
        self.end_statement()
        return stmt

    def _arrow_ahead(self) -> bool:
        depth = 0
        i = self.pos
        while i < len(self.tokens):
            t = self.tokens[i]
            if t.kind == "eof" or (t.kind == "newline" and depth == 0):
                return False
            if t.lexeme in "({":
                depth += 1
            elif t.lexeme in ")}":
                if depth == 0:
                    return False
                depth -= 1
            elif t.lexeme == ";" and depth == 0:
                return False
            elif t.kind == "arrow" and depth == 0:
                return True
            i += 1
        return False

    def parse_species(self):
        start = self.expect("species")
        name = self.expect_ident("species name").lexeme
        init = None
        if self.accept("@"):
            init = self.parse_expr()
        node = A.SpeciesDecl(self.span_from(start), name, init)
        self.end_statement()
        return node

    def parse_function(self):
        start = self.expect("function")
        name = self.expect_ident("function name").lexeme
        self.expect("(")
        params = []
        if not self.check(")"):
            params.append(self.expect_ident("parameter").lexeme)
            while self.accept(","):
                params.append(self.expect_ident("parameter").lexeme)
        self.expect(")")
        body = self.parse_block()
        node = A.FunctionDef(self.span_from(start), name, params, body)
        self.end_statement()
        return node

    def parse_let(self):
        start = self.expect("let")
        name = self.expect_ident().lexeme
        self.expect("=")
        value = self.parse_expr()
        node = A.Let(self.span_from(start), name, value)
        self.end_statement()
        return node

    def parse_if(self):
        start = self.expect("if")
        cond = self.parse_expr()
        then_body = self.parse_block()
        else_body = None
        if self.accept("else"):
            if self.check("if"):
                else_body = [self.parse_if()]
                return A.IfStmt(self.span_from(start), cond, then_body, else_body)
            else_body = self.parse_block()
        node = A.IfStmt(self.span_from(start), cond, then_body, else_body)
        self.end_statement()
        return node

    def parse_for(self):
        start = self.expect("for")
        var = self.expect_ident("loop variable").lexeme
        self.expect("in")
        lo = self.parse_expr()
        self.expect("..")
        hi = self.parse_expr()
        body = self.parse_block()
        node = A.ForStmt(self.span_from(start), var, lo, hi, body)
        self.end_statement()
        return node

    def parse_yield(self):
        start = self.expect("yield")
        value = self.parse_expr()
        node = A.YieldStmt(self.span_from(start), value)
        self.end_statement()
        return node

    def parse_report(self):
        start = self.expect("report")
        value = self.parse_expr()
        label = None
        if self.accept("as"):
            tok = self.peek()
            if tok.kind != "string":
                raise ParseError("expected string label after 'as'",
                                 tok.line, tok.column, expected=("string",))
            self.advance()
            label = _string_value(tok)
        node = A.ReportStmt(self.span_from(start), value, label)
        self.end_statement()
        return node

    def parse_equilibrate(self):
        start = self.expect("equilibrate")
        sample = None
        # `equilibrate s 10` names a sample; `equilibrate 10` uses the current one
        if self.peek().kind == "ident" and self._starts_expr(self.peek(1)):
            sample = self.advance().lexeme
        duration = self.parse_expr()
        temp = None
        unit = None
        if self.accept("at"):
            temp = self.parse_expr()
            unit = self._accept_unit(("celsius", "kelvin"))
        node = A.EquilibrateStmt(self.span_from(start), sample, duration, temp, unit)
        self.end_statement()
        return node

    def _starts_expr(self, tok: Token) -> bool:
        return (tok.kind in ("number", "ident", "string")
                or tok.lexeme in ("(", "-", "not", "true", "false"))

    def _accept_unit(self, units) -> Optional[str]:
        tok = self.peek()
        if tok.kind == "ident" and tok.lexeme in units:
            self.advance()
            return tok.lexeme
        return None

    def parse_sample(self):
        start = self.expect("sample")
        name = self.expect_ident("sample name").lexeme
        self.expect("{")
        body = []
        while True:
            self.skip_newlines()
            while self.accept(";"):
                self.skip_newlines()
            if self.check("}") or self.peek().kind == "eof":
                break
            tok = self.peek()
            if tok.kind == "ident" and tok.lexeme == "volume":
                s = self.advance()
                expr = self.parse_expr()
                unit = self._accept_unit(("uL", "mL"))
                body.append(A.VolumeStmt(self.span_from(s), expr, unit))
                self.end_statement()
            elif tok.kind == "ident" and tok.lexeme == "temperature":
                s = self.advance()
                expr = self.parse_expr()
                unit = self._accept_unit(("celsius", "kelvin"))
                body.append(A.TemperatureStmt(self.span_from(s), expr, unit))
                self.end_statement()
            else:
                body.append(self.parse_statement())
        self.expect("}")
        node = A.SampleStmt(self.span_from(start), name, body)
        self.end_statement()
        return node

    def parse_mix(self):
        start = self.expect("mix")
        target = self.expect_ident("result name").lexeme
        self.expect("=")
        sources = [self.parse_expr()]
        while self.accept(","):
            sources.append(self.parse_expr())
        if len(sources) < 2:
            tok = self.peek()
            raise ParseError("mix needs at least two inputs", tok.line, tok.column)
        node = A.MixStmt(self.span_from(start), target, sources)
        self.end_statement()
        return node

    def parse_split(self):
        start = self.expect("split")
        a = self.expect_ident("result name").lexeme
        self.expect(",")
        b = self.expect_ident("result name").lexeme
        self.expect("=")
        source = self.parse_expr()
        proportion = None
        if self.accept("by"):
            proportion = self.parse_expr()
        node = A.SplitStmt(self.span_from(start), (a, b), source, proportion)
        self.end_statement()
        return node

    def parse_dispose(self):
        start = self.expect("dispose")
        value = self.parse_expr()
        node = A.DisposeStmt(self.span_from(start), value)
        self.end_statement()
        return node

    # --- reactions ---

    def parse_reaction(self):
        start = self.peek()
        reagents = self.parse_complex()
        arrow = self.peek()
        if arrow.kind != "arrow":
            raise ParseError(f"expected '->' in reaction, found '{arrow.lexeme}'",
                             arrow.line, arrow.column, expected=("->", "<->"))
        self.advance()
        reversible = arrow.lexeme == "<->"
        products = self.parse_complex()
        rate = self.parse_rate_clause(reversible)
        node = A.ReactionStmt(self.span_from(start), reagents, reversible, products, rate)
        self.end_statement()
        return node

    def parse_complex(self) -> A.ComplexAst:
        start = self.peek()
        if self.accept("nothing") or self.accept("∅"):
            return A.ComplexAst(self.span_from(start), [])
        terms = [self.parse_complex_term()]
        while self.accept("+"):
            terms.append(self.parse_complex_term())
        return A.ComplexAst(self.span_from(start), terms)

    def parse_complex_term(self) -> A.ComplexTerm:
        start = self.peek()
        mult = 1
        if start.kind == "number":
            if "." in start.lexeme or "e" in start.lexeme or "E" in start.lexeme:
                raise ParseError("multiplicity must be an integer",
                                 start.line, start.column)
            mult = int(start.lexeme)
            if mult < 1:
                raise ParseError("multiplicity must be >= 1", start.line, start.column)
            self.advance()
            self.expect("*", "expected '*' after multiplicity")
        name = self.expect_ident("species name").lexeme
        return A.ComplexTerm(self.span_from(start), mult, name)

    def parse_rate_clause(self, reversible: bool) -> A.RateClause:
        start = self.expect("{", "expected '{' rate clause")
        general = bool(self.accept("rate"))
        exprs = [self.parse_expr()]
        if self.accept(","):
            exprs.append(self.parse_expr())
        self.expect("}")
        if reversible and not general and len(exprs) != 2:
            raise ParseError("reversible reaction needs two rate constants {k1, k2}",
                             start.line, start.column)
        if not reversible and len(exprs) != 1:
            raise ParseError("one rate expression expected", start.line, start.column)
        if general and reversible:
            raise ParseError("reversible sugar is limited to mass-action rates",
                             start.line, start.column)
        return A.RateClause(self.span_from(start), general, exprs)

    # --- expressions (precedence climbing) ---

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        start = self.peek()
        left = self.parse_and()
        while self.accept("or"):
            right = self.parse_and()
            left = A.Binary(self.span_from(start), "or", left, right)
        return left

    def parse_and(self):
        start = self.peek()
        left = self.parse_not()
        while self.accept("and"):
            right = self.parse_not()
            left = A.Binary(self.span_from(start), "and", left, right)
        return left

    def parse_not(self):
        start = self.peek()
        if self.accept("not"):
            operand = self.parse_not()
            return A.Unary(self.span_from(start), "not", operand)
        return self.parse_comparison()

    def parse_comparison(self):
        start = self.peek()
        left = self.parse_additive()
        for op in ("==", "!=", "<=", ">=", "<", ">"):
            if self.check(op):
                self.advance()
                right = self.parse_additive()
                return A.Binary(self.span_from(start), op, left, right)
        return left

    def parse_additive(self):
        start = self.peek()
        left = self.parse_multiplicative()
        while True:
            if self.accept("+"):
                right = self.parse_multiplicative()
                left = A.Binary(self.span_from(start), "+", left, right)
            elif self.accept("-"):
                right = self.parse_multiplicative()
                left = A.Binary(self.span_from(start), "-", left, right)
            else:
                return left

    def parse_multiplicative(self):
        start = self.peek()
        left = self.parse_unary()
        while True:
            if self.accept("*"):
                right = self.parse_unary()
                left = A.Binary(self.span_from(start), "*", left, right)
            elif self.accept("/"):
                right = self.parse_unary()
                left = A.Binary(self.span_from(start), "/", left, right)
            else:
                return left

    def parse_unary(self):
        start = self.peek()
        if self.accept("-"):
            operand = self.parse_unary()
            return A.Unary(self.span_from(start), "-", operand)
        return self.parse_power()

    def parse_power(self):
        start = self.peek()
        base = self.parse_postfix()
        if self.accept("^"):
            exponent = self.parse_unary()  # right-associative
            return A.Binary(self.span_from(start), "^", base, exponent)
        return base

    def parse_postfix(self):
        start = self.peek()
        expr = self.parse_primary()
        while self.check("("):
            self.advance()
            args = []
            if not self.check(")"):
                args.append(self.parse_expr())
                while self.accept(","):
                    args.append(self.parse_expr())
            self.expect(")")
            expr = A.Call(self.span_from(start), expr, args)
        return expr

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return A.NumberLit(self.span_from(tok), float(tok.lexeme))
        if tok.kind == "string":
            self.advance()
            return A.StringLit(self.span_from(tok), _string_value(tok))
        if tok.lexeme == "true":
            self.advance()
            return A.BoolLit(self.span_from(tok), True)
        if tok.lexeme == "false":
            self.advance()
            return A.BoolLit(self.span_from(tok), False)
        if tok.kind == "ident":
            self.advance()
            return A.Var(self.span_from(tok), tok.lexeme)
        if tok.lexeme == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        found = tok.lexeme if tok.kind != "eof" else "end of input"
        raise ParseError(f"expected expression, found '{found}'",
                         tok.line, tok.column, expected=("expression",))


def _string_value(tok: Token) -> str:
    # lexeme includes quotes and raw escapes
    body = tok.lexeme[1:-1]
    out = []
    i = 0
    while i < len(body):
        if body[i] == "\\" and i + 1 < len(body):
            out.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(body[i])
            i += 1
    return "".join(out)
