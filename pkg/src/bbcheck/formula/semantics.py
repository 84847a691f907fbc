"""Finite-trace Boolean semantics and quantitative robustness.

Traces are non-empty sequences of letters; a letter is either a set of
proposition names or a mapping from variable names to reals. Temporal windows
are intersected with the trace, Next is strong (false at the last position),
an Until witness must lie inside the trace, and Until's left operand is
required at every position up to AND INCLUDING the witness position.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence, Set

from .syntax import (
    Always,
    And,
    Cmp,
    Eventually,
    FalseBool,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    Prop,
    Release,
    TrueBool,
    Until,
    atom_kind,
)

NEG_INF = float("-inf")
POS_INF = float("inf")


def letter_kind(letter) -> str:
    if isinstance(letter, (Set, frozenset, set)):
        return "prop"
    if isinstance(letter, Mapping):
        return "signal"
    raise TypeError(f"not a trace letter: {letter!r}")


def check_trace(f: Formula, trace: Sequence, k: int) -> None:
    if len(trace) == 0:
        raise ValueError("empty trace")
    if not 0 <= k < len(trace):
        raise ValueError(f"position {k} out of range for trace of length {len(trace)}")
    fk = atom_kind(f)
    tk = letter_kind(trace[0])
    if fk is not None and fk != tk:
        raise ValueError(f"formula over {fk} atoms evaluated on a {tk} trace")


def _window(itv, k: int, n: int) -> range:
    start = k + itv.lo
    end = n if itv.hi is None else min(k + itv.hi, n)
    return range(start, end)


def evaluate(f: Formula, trace: Sequence, k: int = 0) -> bool:
    """Satisfaction of f on the finite trace at position k."""
    check_trace(f, trace, k)
    return _eval(f, trace, k)


def _eval(f: Formula, trace, k: int) -> bool:
    n = len(trace)
    match f:
        case TrueBool():
            return True
        case FalseBool():
            return False
        case Prop(name):
            return name in trace[k]
        case Cmp():
            return f.holds(trace[k])
        case Not(a):
            return not _eval(a, trace, k)
        case And(a, b):
            return _eval(a, trace, k) and _eval(b, trace, k)
        case Or(a, b):
            return _eval(a, trace, k) or _eval(b, trace, k)
        case Implies(a, b):
            return not _eval(a, trace, k) or _eval(b, trace, k)
        case Next(a):
            return k + 1 < n and _eval(a, trace, k + 1)
        case Until(itv, a, b):
            for l in _window(itv, k, n):
                if _eval(b, trace, l) and all(_eval(a, trace, m) for m in range(k, l + 1)):
                    return True
            return False
        case Release(itv, a, b):
            for l in _window(itv, k, n):
                if not _eval(b, trace, l) and not any(
                    _eval(a, trace, m) for m in range(k, l + 1)
                ):
                    return False
            return True
        case Eventually(itv, a):
            return any(_eval(a, trace, l) for l in _window(itv, k, n))
        case Always(itv, a):
            return all(_eval(a, trace, l) for l in _window(itv, k, n))
    raise TypeError(f"not a formula: {f!r}")


def robustness(f: Formula, trace: Sequence, k: int = 0) -> float:
    """Quantitative satisfaction degree of f on a signal trace at position k.

    Positive implies satisfaction, negative implies violation; the comparison
    atoms score as signed distance to their thresholds.
    """
    check_trace(f, trace, k)
    if atom_kind(f) == "prop":
        raise ValueError("robustness is defined for formulas over comparison atoms only")
    return _rob(f, trace, k)


def _rob(f: Formula, trace, k: int) -> float:
    n = len(trace)
    match f:
        case TrueBool():
            return POS_INF
        case FalseBool():
            return NEG_INF
        case Cmp(var, op, c):
            v = trace[k][var]
            return v - c if op in (">", ">=") else c - v
        case Not(a):
            return -_rob(a, trace, k)
        case And(a, b):
            return min(_rob(a, trace, k), _rob(b, trace, k))
        case Or(a, b):
            return max(_rob(a, trace, k), _rob(b, trace, k))
        case Implies(a, b):
            return max(-_rob(a, trace, k), _rob(b, trace, k))
        case Next(a):
            return _rob(a, trace, k + 1) if k + 1 < n else NEG_INF
        case Until(itv, a, b):
            best = NEG_INF
            prefix = POS_INF
            for m in range(k, _window(itv, k, n).stop):
                prefix = min(prefix, _rob(a, trace, m))
                if m >= k + itv.lo:
                    best = max(best, min(_rob(b, trace, m), prefix))
            return best
        case Release(itv, a, b):
            worst = POS_INF
            prefix = NEG_INF
            for m in range(k, _window(itv, k, n).stop):
                prefix = max(prefix, _rob(a, trace, m))
                if m >= k + itv.lo:
                    worst = min(worst, max(_rob(b, trace, m), prefix))
            return worst
        case Eventually(itv, a):
            vals = [_rob(a, trace, l) for l in _window(itv, k, n)]
            return max(vals, default=NEG_INF)
        case Always(itv, a):
            vals = [_rob(a, trace, l) for l in _window(itv, k, n)]
            return min(vals, default=POS_INF)
    raise TypeError(f"not a formula: {f!r}")
