"""Negation normal form, one-step progression, and end-of-trace evaluation.

Progression rewrites an NNF formula against a single trace letter into the
residual obligation on the rest of the trace; folding it over a whole trace
and closing with eval_at_end reproduces the finite-trace semantics exactly.
"""

from __future__ import annotations

from .syntax import (
    FALSE,
    TRUE,
    Always,
    And,
    Cmp,
    Eventually,
    FalseBool,
    Formula,
    Implies,
    Interval,
    Next,
    Not,
    Or,
    Prop,
    Release,
    TrueBool,
    Until,
)

# Weak next (true at the last trace position) has no AST variant of its own;
# on finite traces it is exactly an [1,2)-window universal obligation.
_STEP = Interval(1, 2)


def to_nnf(f: Formula) -> Formula:
    """Push negations to the atoms; expand F/G/-> into U/R duals."""
    match f:
        case TrueBool() | FalseBool() | Prop(_) | Cmp(_, _, _):
            return f
        case Not(a):
            return _nnf_neg(a)
        case And(a, b):
            return And(to_nnf(a), to_nnf(b))
        case Or(a, b):
            return Or(to_nnf(a), to_nnf(b))
        case Implies(a, b):
            return Or(_nnf_neg(a), to_nnf(b))
        case Next(a):
            return Next(to_nnf(a))
        case Until(itv, a, b):
            return Until(itv, to_nnf(a), to_nnf(b))
        case Release(itv, a, b):
            return Release(itv, to_nnf(a), to_nnf(b))
        case Eventually(itv, a):
            return Until(itv, TRUE, to_nnf(a))
        case Always(itv, a):
            return Release(itv, FALSE, to_nnf(a))
    raise TypeError(f"not a formula: {f!r}")


def _nnf_neg(f: Formula) -> Formula:
    match f:
        case TrueBool():
            return FALSE
        case FalseBool():
            return TRUE
        case Prop(_):
            return Not(f)
        case Cmp():
            return f.negated()
        case Not(a):
            return to_nnf(a)
        case And(a, b):
            return Or(_nnf_neg(a), _nnf_neg(b))
        case Or(a, b):
            return And(_nnf_neg(a), _nnf_neg(b))
        case Implies(a, b):
            return And(to_nnf(a), _nnf_neg(b))
        case Next(a):
            # Strong next negates to weak next of the negation.
            return Release(_STEP, FALSE, _nnf_neg(a))
        case Until(itv, a, b):
            return Release(itv, _nnf_neg(a), _nnf_neg(b))
        case Release(itv, a, b):
            return Until(itv, _nnf_neg(a), _nnf_neg(b))
        case Eventually(itv, a):
            return Release(itv, FALSE, _nnf_neg(a))
        case Always(itv, a):
            return Until(itv, TRUE, _nnf_neg(a))
    raise TypeError(f"not a formula: {f!r}")


def s_and(a: Formula, b: Formula) -> Formula:
    """And with constant folding, idempotence, and absorption."""
    if isinstance(a, FalseBool) or isinstance(b, FalseBool):
        return FALSE
    if isinstance(a, TrueBool):
        return b
    if isinstance(b, TrueBool):
        return a
    if a == b:
        return a
    if isinstance(b, Or) and a in (b.left, b.right):
        return a
    if isinstance(a, Or) and b in (a.left, a.right):
        return b
    if isinstance(b, And) and a in (b.left, b.right):
        return b
    if isinstance(a, And) and b in (a.left, a.right):
        return a
    return And(a, b)


def s_or(a: Formula, b: Formula) -> Formula:
    """Or with constant folding, idempotence, and absorption."""
    if isinstance(a, TrueBool) or isinstance(b, TrueBool):
        return TRUE
    if isinstance(a, FalseBool):
        return b
    if isinstance(b, FalseBool):
        return a
    if a == b:
        return a
    if isinstance(b, And) and a in (b.left, b.right):
        return a
    if isinstance(a, And) and b in (a.left, a.right):
        return b
    if isinstance(b, Or) and a in (b.left, b.right):
        return b
    if isinstance(a, Or) and b in (a.left, a.right):
        return a
    return Or(a, b)


def simplify(f: Formula) -> Formula:
    """Bottom-up pass of the fixed rewrite set over an NNF formula."""
    match f:
        case And(a, b):
            return s_and(simplify(a), simplify(b))
        case Or(a, b):
            return s_or(simplify(a), simplify(b))
        case _:
            return f


def _resolve_now(f: Formula, letter) -> Formula:
    """Truth value of an atomic NNF formula on the current letter."""
    match f:
        case Prop(name):
            return TRUE if name in letter else FALSE
        case Not(Prop(name)):
            return FALSE if name in letter else TRUE
        case Cmp():
            return TRUE if f.holds(letter) else FALSE
    raise ValueError(f"progression requires negation normal form, got {f!r}")


def progress(f: Formula, letter) -> Formula:
    """Residual obligation of an NNF formula after consuming one letter."""
    match f:
        case TrueBool() | FalseBool():
            return f
        case Prop(_) | Not(_) | Cmp():
            return _resolve_now(f, letter)
        case Next(a):
            return a
        case And(a, b):
            return s_and(progress(a, letter), progress(b, letter))
        case Or(a, b):
            return s_or(progress(a, letter), progress(b, letter))
        case Until(itv, a, b):
            a_now = progress(a, letter)
            if itv.lo > 0:
                return s_and(a_now, Until(itv.shift_down(), a, b))
            b_now = progress(b, letter)
            if itv.hi == 1:  # window closes after this letter
                return s_and(a_now, b_now)
            return s_and(a_now, s_or(b_now, Until(itv.shift_down(), a, b)))
        case Release(itv, a, b):
            a_now = progress(a, letter)
            if itv.lo > 0:
                return s_or(a_now, Release(itv.shift_down(), a, b))
            b_now = progress(b, letter)
            if itv.hi == 1:
                return s_or(a_now, b_now)
            return s_or(a_now, s_and(b_now, Release(itv.shift_down(), a, b)))
    raise ValueError(f"progression requires negation normal form, got {f!r}")


def eval_at_end(f: Formula) -> bool:
    """Truth of a residual NNF obligation when the trace has ended.

    Pending existential obligations (atoms, Next, Until) fail; universal
    ones (Release) hold vacuously.
    """
    match f:
        case TrueBool() | Release(_, _, _):
            return True
        case FalseBool() | Prop(_) | Not(_) | Cmp() | Next(_) | Until(_, _, _):
            return False
        case And(a, b):
            return eval_at_end(a) and eval_at_end(b)
        case Or(a, b):
            return eval_at_end(a) or eval_at_end(b)
    raise ValueError(f"progression requires negation normal form, got {f!r}")


def progress_word(f: Formula, trace) -> Formula:
    """Fold progress over every letter of a trace, starting from to_nnf(f)."""
    g = to_nnf(f)
    for letter in trace:
        g = progress(g, letter)
    return g
