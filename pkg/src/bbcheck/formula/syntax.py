"""Formula ASTs for safety LTL / discrete-time STL with half-open intervals."""

from __future__ import annotations

from dataclasses import dataclass

CMP_OPS = ("<", ">", "<=", ">=")

# Negating a comparison flips it to the complementary operator, so negation
# normal form never carries a Not over a Cmp node.
NEGATED_CMP = {"<": ">=", ">": "<=", "<=": ">", ">=": "<"}


@dataclass(frozen=True)
class Interval:
    """Half-open interval [lo, hi); hi is None for an unbounded upper end."""

    lo: int
    hi: int | None

    def __post_init__(self):
        if self.lo < 0:
            raise ValueError(f"interval lower bound must be a natural number, got {self.lo}")
        if self.hi is not None and self.hi <= self.lo:
            raise ValueError(f"empty interval [{self.lo},{self.hi})")

    @property
    def unbounded(self) -> bool:
        return self.hi is None

    @property
    def is_full(self) -> bool:
        return self.lo == 0 and self.hi is None

    def contains(self, other: "Interval") -> bool:
        if other.lo < self.lo:
            return False
        if self.hi is None:
            return True
        return other.hi is not None and other.hi <= self.hi

    def strictly_contains(self, other: "Interval") -> bool:
        return self.contains(other) and self != other

    def shift_down(self) -> "Interval":
        """One progression step: decrement both bounds, floored at 0; inf stays inf."""
        lo = max(self.lo - 1, 0)
        hi = self.hi if self.hi is None else self.hi - 1
        return Interval(lo, hi)

    def __str__(self) -> str:
        hi = "inf" if self.hi is None else str(self.hi)
        return f"[{self.lo},{hi})"


FULL = Interval(0, None)


class Formula:
    pass


@dataclass(frozen=True)
class TrueBool(Formula):
    pass


@dataclass(frozen=True)
class FalseBool(Formula):
    pass


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Cmp(Formula):
    var: str
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def holds(self, valuation) -> bool:
        v = valuation[self.var]
        if self.op == "<":
            return v < self.threshold
        if self.op == ">":
            return v > self.threshold
        if self.op == "<=":
            return v <= self.threshold
        return v >= self.threshold

    def negated(self) -> "Cmp":
        return Cmp(self.var, NEGATED_CMP[self.op], self.threshold)


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Until(Formula):
    interval: Interval
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    interval: Interval
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    interval: Interval
    child: Formula


@dataclass(frozen=True)
class Always(Formula):
    interval: Interval
    child: Formula


TRUE = TrueBool()
FALSE = FalseBool()

_BINARY = {Or: "||", And: "&&", Implies: "->"}

# Higher binds tighter: -> < || < && < U/R < unary temporal/negation.
_PRECEDENCE = {
    Implies: 1,
    Or: 2,
    And: 3,
    Until: 4,
    Release: 4,
}
_UNARY_LEVEL = 5
_ATOM_LEVEL = 7


def _level(f: Formula) -> int:
    lvl = _PRECEDENCE.get(type(f))
    if lvl is not None:
        return lvl
    if isinstance(f, (Not, Next, Eventually, Always)):
        return _UNARY_LEVEL
    return _ATOM_LEVEL


def _fmt_threshold(c: float) -> str:
    if isinstance(c, float) and c.is_integer():
        return str(int(c))
    return str(c)


def _itv_suffix(itv: Interval) -> str:
    return "" if itv.is_full else str(itv)


def to_str(f: Formula) -> str:
    """Render a formula in the concrete grammar (minimal parentheses)."""
    match f:
        case TrueBool():
            return "true"
        case FalseBool():
            return "false"
        case Prop(name):
            return name
        case Cmp(var, op, c):
            return f"{var} {op} {_fmt_threshold(c)}"
        case Not(child):
            return "!" + _wrap(child, _UNARY_LEVEL)
        case Next(child):
            return "X " + _wrap(child, _UNARY_LEVEL)
        case Eventually(itv, child):
            return f"F{_itv_suffix(itv)} " + _wrap(child, _UNARY_LEVEL)
        case Always(itv, child):
            return f"G{_itv_suffix(itv)} " + _wrap(child, _UNARY_LEVEL)
        case Until(itv, left, right):
            # Right-associative: parenthesize a left child of equal level.
            return (
                _wrap(left, _PRECEDENCE[Until] + 1)
                + f" U{_itv_suffix(itv)} "
                + _wrap(right, _PRECEDENCE[Until])
            )
        case Release(itv, left, right):
            # No surface syntax; printed for diagnostics only.
            return (
                _wrap(left, _PRECEDENCE[Release] + 1)
                + f" R{_itv_suffix(itv)} "
                + _wrap(right, _PRECEDENCE[Release])
            )
        case Or(left, right) | And(left, right) | Implies(left, right):
            lvl = _PRECEDENCE[type(f)]
            op = _BINARY[type(f)]
            if isinstance(f, Implies):
                return _wrap(left, lvl + 1) + f" {op} " + _wrap(right, lvl)
            return _wrap(left, lvl) + f" {op} " + _wrap(right, lvl + 1)
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula, min_level: int) -> str:
    s = to_str(f)
    return s if _level(f) >= min_level else f"({s})"


def subformulas(f: Formula):
    """Yield f and all its descendants, pre-order."""
    yield f
    match f:
        case Not(c) | Next(c) | Eventually(_, c) | Always(_, c):
            yield from subformulas(c)
        case And(a, b) | Or(a, b) | Implies(a, b) | Until(_, a, b) | Release(_, a, b):
            yield from subformulas(a)
            yield from subformulas(b)


def atom_kind(f: Formula) -> str | None:
    """'prop' / 'signal' / None for the alphabet the formula's atoms live in.

    Raises if Prop and Cmp atoms co-occur (a formula is one or the other).
    """
    kind = None
    for g in subformulas(f):
        if isinstance(g, Prop):
            k = "prop"
        elif isinstance(g, Cmp):
            k = "signal"
        else:
            continue
        if kind is None:
            kind = k
        elif kind != k:
            raise ValueError("formula mixes propositional and signal atoms")
    return kind


def propositions(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Prop))


def comparisons(f: Formula) -> list[Cmp]:
    """Distinct Cmp atoms of f, in first-occurrence order."""
    seen = []
    for g in subformulas(f):
        if isinstance(g, Cmp) and g not in seen:
            seen.append(g)
    return seen


def temporal_endpoints(f: Formula):
    """Yield every finite interval endpoint appearing in f."""
    for g in subformulas(f):
        match g:
            case Until(itv, _, _) | Release(itv, _, _) | Eventually(itv, _) | Always(itv, _):
                yield itv.lo
                if itv.hi is not None:
                    yield itv.hi
            case _:
                pass


def to_core(f: Formula) -> Formula:
    """Expand every derived connective into the core (true, atoms, !, ||, U, X)."""
    match f:
        case TrueBool() | Prop(_):
            return f
        case FalseBool():
            return Not(TRUE)
        case Cmp(var, op, c):
            if op == "<=":
                return Not(Cmp(var, ">", c))
            if op == ">=":
                return Not(Cmp(var, "<", c))
            return f
        case Not(a):
            return Not(to_core(a))
        case Or(a, b):
            return Or(to_core(a), to_core(b))
        case And(a, b):
            return Not(Or(Not(to_core(a)), Not(to_core(b))))
        case Implies(a, b):
            return Or(Not(to_core(a)), to_core(b))
        case Next(a):
            return Next(to_core(a))
        case Until(itv, a, b):
            return Until(itv, to_core(a), to_core(b))
        case Eventually(itv, a):
            return Until(itv, TRUE, to_core(a))
        case Always(itv, a):
            return Not(Until(itv, TRUE, Not(to_core(a))))
        case Release(itv, a, b):
            return Not(Until(itv, Not(to_core(a)), Not(to_core(b))))
    raise TypeError(f"not a formula: {f!r}")


def map_atoms(f: Formula, fn) -> Formula:
    """Rebuild f with every Prop/Cmp atom replaced by fn(atom)."""
    match f:
        case TrueBool() | FalseBool():
            return f
        case Prop(_) | Cmp(_, _, _):
            return fn(f)
        case Not(a):
            return Not(map_atoms(a, fn))
        case Next(a):
            return Next(map_atoms(a, fn))
        case And(a, b):
            return And(map_atoms(a, fn), map_atoms(b, fn))
        case Or(a, b):
            return Or(map_atoms(a, fn), map_atoms(b, fn))
        case Implies(a, b):
            return Implies(map_atoms(a, fn), map_atoms(b, fn))
        case Until(itv, a, b):
            return Until(itv, map_atoms(a, fn), map_atoms(b, fn))
        case Release(itv, a, b):
            return Release(itv, map_atoms(a, fn), map_atoms(b, fn))
        case Eventually(itv, a):
            return Eventually(itv, map_atoms(a, fn))
        case Always(itv, a):
            return Always(itv, map_atoms(a, fn))
    raise TypeError(f"not a formula: {f!r}")
