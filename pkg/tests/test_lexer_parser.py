from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from kaemsim import ast_nodes as A
from kaemsim.lexer import LexError, reconstruct, tokenize
from kaemsim.parser import ParseError, parse

PROGRAMS = sorted((Path(__file__).parent.parent / "programs").glob("*.kae"))

SNIPPETS = [
    "species A @ 10\nA -> ∅ {0.3}\n",
    "# comment only\n",
    "let x = 1 +\n  2 * 3\n",
    "A + B <-> C {1, 2}",
    "∅ -> X { rate 2 + sin(t) }",
    'report X as "label with spaces"',
    "if a > 1 { yield 1 } else { yield 2 }",
    "for i in 0 .. 10 {\n  species B @ i\n}\n",
    "sample s { volume 2 uL; temperature 20 celsius }\n",
]


@pytest.mark.parametrize("path", PROGRAMS, ids=lambda p: p.name)
def test_lexer_lossless_on_shipped_programs(path):
    src = path.read_text(encoding="utf-8")
    assert reconstruct(tokenize(src)) == src


@pytest.mark.parametrize("src", SNIPPETS)
def test_lexer_lossless_on_snippets(src):
    assert reconstruct(tokenize(src)) == src


def test_bad_number_position():
    with pytest.raises(LexError) as e:
        tokenize("1.2.3\n")
    assert e.value.line == 1
    assert e.value.column == 4  # the second dot
    with pytest.raises(LexError) as e:
        tokenize("let x = 1.2.3\n")
    assert e.value.column == 12


def test_unterminated_string():
    with pytest.raises(LexError):
        tokenize('report X as "oops\n')


def test_parse_error_has_position_and_expectation():
    with pytest.raises(ParseError) as e:
        parse("species\n")
    assert e.value.line == 1
    assert e.value.column > 1


def test_newline_folding_continues_statements():
    ast = parse("let x = 1 +\n  2\n")
    assert isinstance(ast.statements[0], A.Let)
    bin_ = ast.statements[0].value
    assert isinstance(bin_, A.Binary) and bin_.op == "+"


def test_reaction_vs_expression_disambiguation():
    ast = parse("A -> B {1}\n")
    assert isinstance(ast.statements[0], A.ReactionStmt)
    ast = parse("f(1)\n")
    assert isinstance(ast.statements[0], A.ExprStmt)


def test_reversible_needs_two_rates():
    with pytest.raises(ParseError):
        parse("A <-> B {1}\n")
    ast = parse("A <-> B {1, 2}\n")
    assert ast.statements[0].reversible


def test_multiplicity_must_be_positive_integer():
    with pytest.raises(ParseError):
        parse("1.5 * A -> B {1}\n")
    with pytest.raises(ParseError):
        parse("0 * A -> B {1}\n")


def test_power_is_right_associative():
    ast = parse("let x = 2 ^ 3 ^ 2\n")
    e = ast.statements[0].value
    assert e.op == "^" and isinstance(e.right, A.Binary) and e.right.op == "^"


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.sampled_from(
    list("abAB019 \n\t+-*/^(){},.#\"'<->=@;∅·")), max_size=60))
def test_frontend_total_on_junk(src):
    """The frontend either parses or raises its own error types, never
    anything else; when lexing succeeds it is lossless."""
    try:
        toks = tokenize(src)
    except LexError:
        return
    assert reconstruct(toks) == src
    try:
        parse(src)
    except ParseError:
        pass
