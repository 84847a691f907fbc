"""Recursive-descent parser for the formula grammar.

Grammar (tightest binding first):
    atom     := 'true' | 'false' | ident | ident op number | '(' formula ')'
    unary    := '!' unary | 'X' unary | ('F'|'G') interval? unary | atom
    untilexp := unary ('U' interval? untilexp)?
    andexp   := untilexp ('&&' untilexp)*
    orexp    := andexp ('||' andexp)*
    formula  := orexp ('->' formula)?
    interval := '[' nat ',' (nat | 'inf') (')' | ']')

A closed upper bound `[a,b]` desugars to the half-open `[a,b+1)`; a bare
F/G/U means the full window `[0,inf)`.
"""

from __future__ import annotations

import re

from .syntax import (
    FALSE,
    FULL,
    TRUE,
    Always,
    And,
    Cmp,
    Eventually,
    Formula,
    Implies,
    Interval,
    Next,
    Not,
    Or,
    Prop,
    Until,
    atom_kind,
)


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+\.\d+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||->|<=|>=|<|>|!|\(|\)|\[|\]|,|-)
    """,
    re.VERBOSE,
)

_RESERVED = {"X", "F", "G", "U", "true", "false", "inf"}


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value or kind == "eof":
            raise FormulaSyntaxError(f"expected {value!r}", pos)
        return self.advance()

    def fail(self, message: str):
        _, _, pos = self.peek()
        raise FormulaSyntaxError(message, pos)

    def parse(self) -> Formula:
        f = self.formula()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise FormulaSyntaxError(f"unexpected token {val!r}", pos)
        return f

    def formula(self) -> Formula:
        left = self.orexp()
        if self.peek()[1] == "->":
            self.advance()
            return Implies(left, self.formula())
        return left

    def orexp(self) -> Formula:
        f = self.andexp()
        while self.peek()[1] == "||":
            self.advance()
            f = Or(f, self.andexp())
        return f

    def andexp(self) -> Formula:
        f = self.untilexp()
        while self.peek()[1] == "&&":
            self.advance()
            f = And(f, self.untilexp())
        return f

    def untilexp(self) -> Formula:
        left = self.unary()
        if self.peek()[1] == "U":
            self.advance()
            itv = self.interval()
            return Until(itv, left, self.untilexp())
        return left

    def unary(self) -> Formula:
        kind, val, pos = self.peek()
        if val == "!":
            self.advance()
            return Not(self.unary())
        if val == "X":
            self.advance()
            return Next(self.unary())
        if val == "F":
            self.advance()
            return Eventually(self.interval(), self.unary())
        if val == "G":
            self.advance()
            return Always(self.interval(), self.unary())
        return self.atom()

    def interval(self) -> Interval:
        if self.peek()[1] != "[":
            return FULL
        _, _, open_pos = self.advance()
        lo_kind, lo_val, lo_pos = self.advance()
        if lo_val == "inf":
            raise FormulaSyntaxError("infinite lower bound", lo_pos)
        if lo_kind != "num" or "." in lo_val:
            raise FormulaSyntaxError("expected a natural number", lo_pos)
        lo = int(lo_val)
        self.expect(",")
        hi_kind, hi_val, hi_pos = self.advance()
        if hi_val == "inf":
            hi = None
        elif hi_kind == "num" and "." not in hi_val:
            hi = int(hi_val)
        else:
            raise FormulaSyntaxError("expected a natural number or 'inf'", hi_pos)
        close_kind, close_val, close_pos = self.advance()
        if close_val == "]":
            if hi is None:
                raise FormulaSyntaxError("an unbounded interval must be half-open", close_pos)
            hi += 1
        elif close_val != ")":
            raise FormulaSyntaxError("expected ')' or ']'", close_pos)
        if hi is not None and hi <= lo:
            raise FormulaSyntaxError(f"empty interval [{lo},{hi})", open_pos)
        return Interval(lo, hi)

    def atom(self) -> Formula:
        kind, val, pos = self.advance()
        if val == "(":
            f = self.formula()
            self.expect(")")
            return f
        if val == "true":
            return TRUE
        if val == "false":
            return FALSE
        if kind == "ident":
            if val in _RESERVED:
                raise FormulaSyntaxError(f"reserved word {val!r} cannot be an atom", pos)
            op = self.peek()[1]
            if op in ("<", ">", "<=", ">="):
                self.advance()
                return Cmp(val, op, self.number())
            return Prop(val)
        if kind == "eof":
            raise FormulaSyntaxError("unexpected end of input", pos)
        raise FormulaSyntaxError(f"unexpected token {val!r}", pos)

    def number(self) -> float:
        sign = 1.0
        if self.peek()[1] == "-":
            self.advance()
            sign = -1.0
        kind, val, pos = self.advance()
        if kind != "num":
            raise FormulaSyntaxError("expected a number", pos)
        return sign * float(val)


def parse_formula(text: str) -> Formula:
    """Parse concrete syntax into an AST; raises FormulaSyntaxError with position."""
    f = _Parser(text).parse()
    atom_kind(f)  # reject mixed propositional / signal atoms
    return f
