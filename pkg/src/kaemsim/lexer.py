"""Lexer for `.kae` sources.

Tokens record the whitespace and comments preceding them (``trivia``) so the
token stream is lossless: concatenating ``trivia + lexeme`` over all tokens,
including the EOF token, reproduces the source exactly.

Newlines are statement separators. A newline token is merged into the next
token's trivia when a statement obviously continues (after an operator,
comma, arrow, or opening brace, or before ``else`` / ``{``).
"""

from __future__ import annotations

from dataclasses import dataclass, field


class LexError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


KEYWORDS = {
    "species", "function", "if", "else", "let", "yield", "report",
    "equilibrate", "sample", "mix", "split", "dispose", "for", "in",
    "at", "by", "as", "nothing", "rate", "true", "false", "and", "or", "not",
}

_PUNCT2 = ["->", "<->", "==", "!=", "<=", ">=", ".."]
_PUNCT1 = "+-*/^=<>,(){};@"


@dataclass
class Token:
    kind: str  # ident number string keyword arrow operator punctuation newline eof
    lexeme: str
    line: int
    column: int
    trivia: str = field(default="", compare=False)

    def __repr__(self):
        return f"Token({self.kind}, {self.lexeme!r}, {self.line}:{self.column})"


_CONTINUE_AFTER_KINDS = {"arrow", "operator", "newline"}
_CONTINUE_AFTER_LEX = set("+-*/^=<>,({@") | {"==", "!=", "<=", ">=", "..",
                                             "in", "at", "by", "as", "and", "or", "not",
                                             "let", "else"}
_CONTINUE_BEFORE_LEX = {"{", "else"}


def tokenize(source: str) -> list[Token]:
    """Lex a whole source string; raises LexError with position on bad input."""
    raw = _scan(source)
    return _fold_newlines(raw)


def _scan(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)
    trivia_start = 0

    def take_trivia(upto: int) -> str:
        nonlocal trivia_start
        t = source[trivia_start:upto]
        trivia_start = upto
        return t

    while i < n:
        c = source[i]
        if c == "\n":
            tokens.append(Token("newline", "\n", line, col, take_trivia(i)))
            trivia_start = i + 1
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        start = i
        start_col = col
        trivia = take_trivia(i)
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and not (j + 1 < n and source[j + 1] == "."):
                j += 1
                if j >= n or not source[j].isdigit():
                    raise LexError("malformed number", line, start_col + (j - i))
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k >= n or not source[k].isdigit():
                    raise LexError("malformed exponent", line, start_col + (j - i))
                j = k
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] == "." and not (j + 1 < n and source[j + 1] == "."):
                raise LexError("malformed number", line, start_col + (j - i))
            lex = source[i:j]
            tokens.append(Token("number", lex, line, start_col, trivia))
            col += j - i
            i = j
            trivia_start = i
            continue
        if c.isalpha() or c == "_" or c == "∅":
            if c == "∅":
                tokens.append(Token("keyword", "∅", line, start_col, trivia))
                i += 1
                col += 1
                trivia_start = i
                continue
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'·"):
                j += 1
            lex = source[i:j]
            kind = "keyword" if lex in KEYWORDS else "ident"
            tokens.append(Token(kind, lex, line, start_col, trivia))
            col += j - i
            i = j
            trivia_start = i
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    raise LexError("unterminated string", line, start_col)
                if source[j] == "\\" and j + 1 < n:
                    esc = source[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                else:
                    buf.append(source[j])
                    j += 1
            if j >= n:
                raise LexError("unterminated string", line, start_col)
            j += 1
            tokens.append(Token("string", source[i:j], line, start_col, trivia))
            col += j - i
            i = j
            trivia_start = i
            continue
        two = source[i:i + 2]
        three = source[i:i + 3]
        if three == "<->":
            tokens.append(Token("arrow", three, line, start_col, trivia))
            i += 3
            col += 3
            trivia_start = i
            continue
        if two in _PUNCT2:
            kind = "arrow" if two == "->" else "operator"
            tokens.append(Token(kind, two, line, start_col, trivia))
            i += 2
            col += 2
            trivia_start = i
            continue
        if c in _PUNCT1:
            kind = "punctuation" if c in "(){};,@" else "operator"
            tokens.append(Token(kind, c, line, start_col, trivia))
            i += 1
            col += 1
            trivia_start = i
            continue
        raise LexError(f"illegal character {c!r}", line, col)

    tokens.append(Token("eof", "", line, col, take_trivia(n)))
    return tokens


def _fold_newlines(raw: list[Token]) -> list[Token]:
    """Drop newline tokens inside obvious continuations and collapse repeats,
    merging their text into the following token's trivia (lossless)."""
    out: list[Token] = []
    pending = ""
    for tok in raw:
        if tok.kind == "newline":
            prev = out[-1] if out else None
            if prev is None or prev.kind == "newline" or \
               prev.lexeme in _CONTINUE_AFTER_LEX or prev.kind == "arrow":
                pending += tok.trivia + tok.lexeme
                continue
            pending += ""
            tok.trivia = pending + tok.trivia
            pending = ""
            out.append(tok)
            continue
        if out and out[-1].kind == "newline" and tok.lexeme in _CONTINUE_BEFORE_LEX:
            dropped = out.pop()
            tok.trivia = dropped.trivia + dropped.lexeme + pending + tok.trivia
            pending = ""
            out.append(tok)
            continue
        tok.trivia = pending + tok.trivia
        pending = ""
        out.append(tok)
    return out


def reconstruct(tokens: list[Token]) -> str:
    """Inverse of tokenize up to token granularity (losslessness check)."""
    return "".join(t.trivia + t.lexeme for t in tokens)
