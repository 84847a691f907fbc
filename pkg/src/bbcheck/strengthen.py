"""Specification strengthening: rewrite rules, candidate generation, selection.

A strengthened formula implies the original, so model checking the learned
machine against it is more likely to yield a counterexample input, and that
input either falsifies the strengthened formula on the system under test
(drop the candidate) or refines the learned machine (progress for free).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .formula import (
    FULL,
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
    atom_kind,
    propositions,
    temporal_endpoints,
)


def _g(f: Formula) -> Formula:
    return Always(FULL, f)


def _f(f: Formula) -> Formula:
    return Eventually(FULL, f)


def _dedup(pairs):
    seen = set()
    out = []
    for item in pairs:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


def _narrowed(itv: Interval) -> list[Interval]:
    """Canonical single-step shrinks of a window (rule 7 forward)."""
    out = []
    if itv.hi is None or itv.lo + 1 < itv.hi:
        out.append(Interval(itv.lo + 1, itv.hi))
    if itv.hi is not None and itv.hi - 1 > itv.lo:
        out.append(Interval(itv.lo, itv.hi - 1))
    return out


def _widened(itv: Interval) -> list[Interval]:
    """Canonical single-step enlargements of a window (rule 7 backward)."""
    out = []
    if itv.lo > 0:
        out.append(Interval(itv.lo - 1, itv.hi))
    if itv.hi is not None:
        out.append(Interval(itv.lo, itv.hi + 1))
    return out


def rule_instances(f: Formula) -> list[tuple[int, Formula]]:
    """All one-step strengthenings of f, tagged with the outermost rule id.

    Structural rules 1-7 fire at the root; congruence rules 8-12 lift child
    rewrites (rule 8 through a child's one-step weakenings, which is why the
    inverse relation is enumerated too). Rule 13 (transitivity) is realized
    by chaining, never emitted. Rule 7's infinitely many instances are
    canonicalized to single-step endpoint moves.
    """
    return _dedup(_strengthen_steps(f))


def weaken_instances(f: Formula) -> list[tuple[int, Formula]]:
    """All one-step inverse rewrites (f is a strengthening of each result)."""
    return _dedup(_weaken_steps(f))


def _strengthen_steps(f: Formula) -> list[tuple[int, Formula]]:
    out: list[tuple[int, Formula]] = []
    match f:
        case TrueBool() | FalseBool() | Prop(_) | Cmp():
            pass
        case Or(a, b):
            out.append((1, And(a, b)))
            out.extend((9, Or(a2, b)) for _, a2 in _strengthen_steps(a))
            out.extend((10, Or(a, b2)) for _, b2 in _strengthen_steps(b))
        case And(a, b):
            out.extend((8, And(a2, b)) for _, a2 in _strengthen_steps(a))
            out.extend((8, And(a, b2)) for _, b2 in _strengthen_steps(b))
        case Implies(a, b):
            out.extend((9, Implies(w, b)) for _, w in _weaken_steps(a))
            out.extend((10, Implies(a, b2)) for _, b2 in _strengthen_steps(b))
        case Not(a):
            out.extend((8, Not(w)) for _, w in _weaken_steps(a))
        case Next(a):
            out.extend((11, Next(a2)) for _, a2 in _strengthen_steps(a))
        case Until(itv, a, b):
            if itv.is_full:
                out.append((6, And(_g(a), _g(_f(b)))))
            out.extend((12, Until(itv, a, b2)) for _, b2 in _strengthen_steps(b))
        case Eventually(itv, a):
            if itv.is_full:
                out.append((2, _g(_f(a))))
                if isinstance(a, Always) and a.interval.is_full:
                    out.append((4, a))
            out.append((5, Always(itv, a)))
            out.extend((7, Eventually(nw, a)) for nw in _narrowed(itv))
            out.extend((12, Eventually(itv, a2)) for _, a2 in _strengthen_steps(a))
        case Always(itv, a):
            if itv.is_full and isinstance(a, Eventually) and a.interval.is_full:
                out.append((3, _f(_g(a.child))))
            out.extend((8, Always(wd, a)) for wd in _widened(itv))
            out.extend((8, Always(itv, a2)) for _, a2 in _strengthen_steps(a))
        case Release(_, _, _):
            pass  # internal NNF form, never strengthened
        case _:
            raise TypeError(f"not a formula: {f!r}")
    return out


def _weaken_steps(f: Formula) -> list[tuple[int, Formula]]:
    out: list[tuple[int, Formula]] = []
    match f:
        case TrueBool() | FalseBool() | Prop(_) | Cmp():
            pass
        case And(a, b):
            out.append((1, Or(a, b)))
            if (
                isinstance(a, Always)
                and a.interval.is_full
                and isinstance(b, Always)
                and b.interval.is_full
                and isinstance(b.child, Eventually)
                and b.child.interval.is_full
            ):
                out.append((6, Until(FULL, a.child, b.child.child)))
            out.extend((8, And(w, b)) for _, w in _weaken_steps(a))
            out.extend((8, And(a, w2)) for _, w2 in _weaken_steps(b))
        case Or(a, b):
            out.extend((9, Or(w, b)) for _, w in _weaken_steps(a))
            out.extend((10, Or(a, w2)) for _, w2 in _weaken_steps(b))
        case Implies(a, b):
            out.extend((9, Implies(a2, b)) for _, a2 in _strengthen_steps(a))
            out.extend((10, Implies(a, w)) for _, w in _weaken_steps(b))
        case Not(a):
            out.extend((8, Not(a2)) for _, a2 in _strengthen_steps(a))
        case Next(a):
            out.extend((11, Next(w)) for _, w in _weaken_steps(a))
        case Until(itv, a, b):
            out.extend((12, Until(itv, a, w)) for _, w in _weaken_steps(b))
        case Eventually(itv, a):
            if itv.is_full and isinstance(a, Always) and a.interval.is_full:
                out.append((3, _g(_f(a.child))))
            out.extend((7, Eventually(wd, a)) for wd in _widened(itv))
            out.extend((12, Eventually(itv, w)) for _, w in _weaken_steps(a))
        case Always(itv, a):
            out.append((5, Eventually(itv, a)))
            if itv.is_full:
                out.append((4, _f(_g(a))))
                if isinstance(a, Eventually) and a.interval.is_full:
                    out.append((2, a))
            out.extend((8, Always(nw, a)) for nw in _narrowed(itv))
            out.extend((8, Always(itv, w)) for _, w in _weaken_steps(a))
        case Release(_, _, _):
            pass
        case _:
            raise TypeError(f"not a formula: {f!r}")
    return out


def gen_no_int(f: Formula) -> list[Formula]:
    """Interval-free strengthening candidates, in FIFO order.

    Disjunction pushes the conjunctive rewrite first, then left rewrites,
    then right rewrites; unbounded Eventually and Until expand to their
    fixed ladders; conjunction and unbounded Always recurse; everything
    else (atoms, Next, interval-bearing operators) yields nothing.
    """
    out: list[Formula] = []
    match f:
        case Or(a, b):
            out.append(And(a, b))
            out.extend(Or(a2, b) for a2 in gen_no_int(a) if a2 != a)
            out.extend(Or(a, b2) for b2 in gen_no_int(b) if b2 != b)
        case Eventually(itv, a) if itv.is_full:
            return [_g(a), _f(_g(a)), _g(_f(a)), f]
        case Until(itv, a, b) if itv.is_full:
            return [And(_g(a), _g(b)), And(_g(a), _f(_g(b))), And(_g(a), _g(_f(b)))]
        case And(a, b):
            out.extend(And(a2, b) for a2 in gen_no_int(a) if a2 != a)
            out.extend(And(a, b2) for b2 in gen_no_int(b) if b2 != b)
        case Always(itv, a) if itv.is_full:
            out.extend(Always(itv, a2) for a2 in gen_no_int(a) if a2 != a)
        case _:
            pass
    return out


def _contains(olo, ohi, ilo, ihi) -> bool:
    """[ilo, ihi) subset of [olo, ohi), None meaning an unbounded end."""
    if ilo < olo:
        return False
    if ohi is None:
        return True
    return ihi is not None and ihi <= ohi


def _strictly_contains(olo, ohi, ilo, ihi) -> bool:
    return _contains(olo, ohi, ilo, ihi) and (olo, ohi) != (ilo, ihi)


def gen_int(f: Formula, n_bound: int) -> list[Formula]:
    """Interval-modifying strengthening candidates under the horizon bound.

    Bounded Always windows widen from [0, inf) toward the original by moving
    the lower bound up to its midpoint (resetting the upper bound to the
    horizon), then the upper bound down to its midpoint. Bounded Eventually
    windows first strengthen the one-step Always at the lower bound, then
    widen the one-step window back toward the original. The candidates run
    from strongest to closest-to-original.
    """
    if n_bound < 1:
        raise ValueError("horizon bound must be >= 1")
    for endpoint in temporal_endpoints(f):
        if endpoint > n_bound:
            raise ValueError(
                f"interval endpoint {endpoint} exceeds the horizon bound {n_bound}"
            )
    return _gen_int(f, n_bound)


def _gen_int(f: Formula, n_bound: int) -> list[Formula]:
    out: list[Formula] = []
    match f:
        case Always(itv, mu) if not itv.is_full:
            i, j = itv.lo, itv.hi
            ip, jp = 0, None
            while _strictly_contains(ip, jp, i, j):
                out.append(Always(Interval(ip, jp), mu))
                if i > ip:
                    ip = (i + ip + 1) // 2
                    jp = n_bound
                else:
                    # j is finite here: an unbounded original would have
                    # left the containment check above false.
                    assert j is not None
                    jp = (j + (n_bound if jp is None else jp)) // 2
        case Eventually(itv, mu) if not itv.is_full:
            i, j = itv.lo, itv.hi
            out.extend(_gen_int(Always(Interval(i, i + 1), mu), n_bound))
            ip, jp = i, i + 1
            while _strictly_contains(i, j, ip, jp):
                out.append(Eventually(Interval(ip, jp), mu))
                if i < ip:  # unreachable as written: ip never moves below i
                    ip = (i + ip) // 2
                else:
                    jp = None if j is None else (j + jp + 1) // 2
        case Always(itv, mu) if itv.is_full:
            out.extend(Always(itv, m2) for m2 in _gen_int(mu, n_bound))
        case Or(a, b):
            out.extend(Or(a2, b) for a2 in _gen_int(a, n_bound))
            out.extend(Or(a, b2) for b2 in _gen_int(b, n_bound))
        case And(a, b):
            out.extend(And(a2, b) for a2 in _gen_int(a, n_bound))
            out.extend(And(a, b2) for b2 in _gen_int(b, n_bound))
        case _:
            pass
    return out


@dataclass
class CandidateSet:
    """Strengthening candidates: a FIFO queue of interval-free rewrites, an
    ordered list of interval rewrites, and the set falsified on the SUT."""

    no_int: list[Formula] = field(default_factory=list)
    interval: list[Formula] = field(default_factory=list)
    removed: set = field(default_factory=set)

    @classmethod
    def generate(cls, f: Formula, n_bound: int) -> "CandidateSet":
        return cls(no_int=gen_no_int(f), interval=gen_int(f, n_bound))

    def remove(self, psi: Formula) -> None:
        self.no_int = [x for x in self.no_int if x != psi]
        self.interval = [x for x in self.interval if x != psi]
        self.removed.add(psi)

    @property
    def live(self) -> int:
        return len(self.no_int) + len(self.interval)


def choose_fml(c: CandidateSet) -> list[Formula]:
    """Candidates to model-check this round (strongest-first selection).

    Scans a copy of the interval-free queue in FIFO order and takes the
    first formula no later queue entry strictly dominates, then every
    interval candidate with no strict dominator among the interval
    candidates.
    """
    chosen: list[Formula] = []
    pending = deque(c.no_int)
    while pending:
        psi = pending.popleft()
        if psi in c.removed:
            continue
        if not any(syntactically_stronger(psi, q) for q in pending):
            chosen.append(psi)
            break
    for psi in c.interval:
        if psi in c.removed or psi in chosen:
            continue
        if not any(syntactically_stronger(psi, q) for q in c.interval if q != psi):
            chosen.append(psi)
    return chosen


def syntactically_stronger(a: Formula, b: Formula) -> bool:
    """Sound, incomplete test that b is STRICTLY stronger than a.

    Recognizes the unbounded-operator ladder (F < GF < FG < G over a common
    body), interval dominance for a same-shape pair (wider Always / narrower
    Eventually is stronger), and their lifting through monotone contexts.
    Never true for a == b; incompleteness only affects which candidate gets
    picked first, never soundness.
    """
    return a != b and _stronger_or_equal(a, b)


_LADDER_EVENTUALLY, _LADDER_GF, _LADDER_FG, _LADDER_ALWAYS = range(4)


def _ladder(f: Formula):
    match f:
        case Eventually(itv, Always(itv2, mu)) if itv.is_full and itv2.is_full:
            return (mu, _LADDER_FG)
        case Always(itv, Eventually(itv2, mu)) if itv.is_full and itv2.is_full:
            return (mu, _LADDER_GF)
        case Eventually(itv, mu) if itv.is_full:
            return (mu, _LADDER_EVENTUALLY)
        case Always(itv, mu) if itv.is_full:
            return (mu, _LADDER_ALWAYS)
    return None


def _stronger_or_equal(a: Formula, b: Formula) -> bool:
    if a == b:
        return True
    if isinstance(b, FalseBool) or isinstance(a, TrueBool):
        return True
    la, lb = _ladder(a), _ladder(b)
    if la is not None and lb is not None and la[0] == lb[0] and lb[1] >= la[1]:
        return True
    match (a, b):
        case (Always(ia, ca), Always(ib, cb)):
            return _contains(ib.lo, ib.hi, ia.lo, ia.hi) and _stronger_or_equal(ca, cb)
        case (Eventually(ia, ca), Eventually(ib, cb)):
            return _contains(ia.lo, ia.hi, ib.lo, ib.hi) and _stronger_or_equal(ca, cb)
        case (Or(x, y), Or(x2, y2)) | (And(x, y), And(x2, y2)):
            return _stronger_or_equal(x, x2) and _stronger_or_equal(y, y2)
        case (Not(x), Not(y)):
            return _stronger_or_equal(y, x)
        case (Next(x), Next(y)):
            return _stronger_or_equal(x, y)
        case (Until(i1, x, y), Until(i2, x2, y2)) if i1 == i2:
            return _stronger_or_equal(x, x2) and _stronger_or_equal(y, y2)
        case (Release(i1, x, y), Release(i2, x2, y2)) if i1 == i2:
            return _stronger_or_equal(x, x2) and _stronger_or_equal(y, y2)
    return False


_ORACLE_TRACE_CAP = 2_500_000


def semantically_stronger_oracle(a: Formula, b: Formula, ap, max_len: int) -> bool:
    """Exhaustively decide whether b implies a on every finite trace.

    Enumerates all (2^|AP|)^n propositional traces for every length
    n <= max_len and every start position, evaluating both formulas with a
    vectorized finite-trace semantics equivalent to `evaluate`.
    """
    ap = tuple(sorted(set(ap)))
    for f in (a, b):
        if atom_kind(f) == "signal":
            raise ValueError("the strengthening oracle works on propositional formulas")
        extra = propositions(f) - set(ap)
        if extra:
            raise ValueError(f"formula uses propositions outside AP: {sorted(extra)}")
    n_letters = 2 ** len(ap)
    if n_letters**max_len > _ORACLE_TRACE_CAP:
        raise ValueError("enumeration cap exceeded; shrink AP or max_len")
    for n in range(1, max_len + 1):
        count = n_letters**n
        idx = np.arange(count, dtype=np.int64)[:, None]
        divisors = n_letters ** np.arange(n - 1, -1, -1, dtype=np.int64)
        letters = (idx // divisors) % n_letters  # (count, n) letter bitmasks
        sat_a = _sat_grid(a, ap, letters)
        sat_b = _sat_grid(b, ap, letters)
        if np.any(sat_b & ~sat_a):
            return False
    return True


def _sat_grid(f: Formula, ap: tuple[str, ...], letters: np.ndarray) -> np.ndarray:
    """sat[t, k] = finite-trace satisfaction of f at position k of trace t."""
    count, n = letters.shape
    match f:
        case TrueBool():
            return np.ones((count, n), dtype=bool)
        case FalseBool():
            return np.zeros((count, n), dtype=bool)
        case Prop(name):
            return (letters & (1 << ap.index(name))) != 0
        case Not(x):
            return ~_sat_grid(x, ap, letters)
        case And(x, y):
            return _sat_grid(x, ap, letters) & _sat_grid(y, ap, letters)
        case Or(x, y):
            return _sat_grid(x, ap, letters) | _sat_grid(y, ap, letters)
        case Implies(x, y):
            return ~_sat_grid(x, ap, letters) | _sat_grid(y, ap, letters)
        case Next(x):
            child = _sat_grid(x, ap, letters)
            out = np.zeros((count, n), dtype=bool)
            out[:, :-1] = child[:, 1:]
            return out
        case Eventually(itv, x):
            child = _sat_grid(x, ap, letters)
            out = np.zeros((count, n), dtype=bool)
            for k in range(n):
                lo, hi = k + itv.lo, n if itv.hi is None else min(k + itv.hi, n)
                if lo < hi:
                    out[:, k] = child[:, lo:hi].any(axis=1)
            return out
        case Always(itv, x):
            child = _sat_grid(x, ap, letters)
            out = np.ones((count, n), dtype=bool)
            for k in range(n):
                lo, hi = k + itv.lo, n if itv.hi is None else min(k + itv.hi, n)
                if lo < hi:
                    out[:, k] = child[:, lo:hi].all(axis=1)
            return out
        case Until(itv, x, y):
            sx = _sat_grid(x, ap, letters)
            sy = _sat_grid(y, ap, letters)
            out = np.zeros((count, n), dtype=bool)
            for k in range(n):
                lo, hi = k + itv.lo, n if itv.hi is None else min(k + itv.hi, n)
                running = np.ones(count, dtype=bool)
                acc = np.zeros(count, dtype=bool)
                for l in range(k, hi):
                    running = running & sx[:, l]
                    if l >= lo:
                        acc |= running & sy[:, l]
                out[:, k] = acc
            return out
        case Release(itv, x, y):
            sx = _sat_grid(x, ap, letters)
            sy = _sat_grid(y, ap, letters)
            out = np.ones((count, n), dtype=bool)
            for k in range(n):
                lo, hi = k + itv.lo, n if itv.hi is None else min(k + itv.hi, n)
                released = np.zeros(count, dtype=bool)
                acc = np.ones(count, dtype=bool)
                for l in range(k, hi):
                    released = released | sx[:, l]
                    if l >= lo:
                        acc &= sy[:, l] | released
                out[:, k] = acc
            return out
    raise TypeError(f"not a formula: {f!r}")
