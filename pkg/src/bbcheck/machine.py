"""Mealy machines: execution, bounded model checking, and the text format."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .formula import (
    Formula,
    atom_kind,
    eval_at_end,
    progress,
    propositions,
    to_nnf,
)

DEFAULT_CAP = 100_000


class MachineFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MealyMachine:
    """Deterministic transducer with a total transition map.

    Outputs are sets of proposition names drawn from `propositions`.
    """

    inputs: tuple[str, ...]
    propositions: frozenset[str]
    locations: tuple[str, ...]
    initial: str
    transitions: dict  # (location, input) -> (location, frozenset[str])

    def __post_init__(self):
        if self.initial not in self.locations:
            raise MachineFormatError(f"initial location {self.initial!r} is not declared")
        for loc in self.locations:
            for a in self.inputs:
                if (loc, a) not in self.transitions:
                    raise MachineFormatError(f"missing transition for ({loc!r}, {a!r})")
        for (loc, a), (dst, out) in self.transitions.items():
            if loc not in self.locations or dst not in self.locations:
                raise MachineFormatError(f"transition ({loc!r},{a!r}) -> {dst!r} leaves the location set")
            if a not in self.inputs:
                raise MachineFormatError(f"transition on undeclared input {a!r}")
            if not out <= self.propositions:
                raise MachineFormatError(f"output {set(out)!r} uses undeclared propositions")

    def step(self, location: str, letter: str):
        if letter not in self.inputs:
            raise ValueError(f"unknown input letter {letter!r}")
        return self.transitions[(location, letter)]


def run(m: MealyMachine, word) -> tuple:
    """Output word produced by folding the transition map from the initial location."""
    loc = m.initial
    outputs = []
    for a in word:
        loc, out = m.step(loc, a)
        outputs.append(out)
    return tuple(outputs)


class VerdictKind(Enum):
    HOLDS = "HOLDS"
    VIOLATED = "VIOLATED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    witness: tuple[str, ...] | None = None
    outputs: tuple | None = None
    reason: str | None = None

    @property
    def violated(self) -> bool:
        return self.kind is VerdictKind.VIOLATED


def model_check(m: MealyMachine, f: Formula, horizon: int, cap: int = DEFAULT_CAP) -> Verdict:
    """Search for an input word of length <= horizon whose output trace violates f.

    Breadth-first search over the product of machine locations and progressed
    residual formulas; a node whose residual evaluates false at end-of-trace
    yields VIOLATED with the shortest such input word (ties broken by the
    declared input-alphabet order). HOLDS means the search closed with no
    violation; INCONCLUSIVE means the product node cap was exceeded.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if atom_kind(f) == "signal":
        raise ValueError("model checking requires a propositional formula")
    if not propositions(f) <= m.propositions:
        missing = propositions(f) - m.propositions
        raise ValueError(f"formula uses propositions the machine does not declare: {sorted(missing)}")

    root = (m.initial, to_nnf(f))
    parents = {root: None}  # node -> (parent node, input letter, output letter)
    queue = deque([(root, 0)])
    while queue:
        (loc, g), depth = queue.popleft()
        if depth >= horizon:
            continue
        for a in m.inputs:
            dst, out = m.transitions[(loc, a)]
            child = (dst, progress(g, out))
            if child in parents:
                continue
            parents[child] = ((loc, g), a, out)
            if not eval_at_end(child[1]):
                word, outs = _reconstruct(parents, child)
                return Verdict(VerdictKind.VIOLATED, witness=word, outputs=outs)
            if len(parents) > cap:
                return Verdict(VerdictKind.INCONCLUSIVE, reason="product node cap exceeded")
            queue.append((child, depth + 1))
    return Verdict(VerdictKind.HOLDS)


def _reconstruct(parents, node):
    word, outs = [], []
    while parents[node] is not None:
        node, a, out = parents[node]
        word.append(a)
        outs.append(out)
    return tuple(reversed(word)), tuple(reversed(outs))


_TRANSITION_RE = re.compile(r"^(\S+)\s*--\s*(\S+?)\s*/\s*\{([^}]*)\}\s*-->\s*(\S+)$")


def load_machine(text: str) -> MealyMachine:
    """Parse the Mealy text format (see save_machine)."""
    inputs: tuple[str, ...] | None = None
    props: frozenset[str] | None = None
    initial: str | None = None
    transitions = {}
    order: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("inputs:"):
            inputs = tuple(line[len("inputs:"):].split())
        elif line.startswith("propositions:"):
            props = frozenset(line[len("propositions:"):].split())
        elif line.startswith("initial:"):
            initial = line[len("initial:"):].strip()
        else:
            mt = _TRANSITION_RE.match(line)
            if mt is None:
                raise MachineFormatError(f"line {lineno}: cannot parse {line!r}")
            src, letter, out, dst = mt.groups()
            key = (src, letter)
            if key in transitions:
                raise MachineFormatError(f"line {lineno}: duplicate transition for {key!r}")
            transitions[key] = (dst, frozenset(out.split()))
            for loc in (src, dst):
                if loc not in order:
                    order.append(loc)
    if inputs is None:
        raise MachineFormatError("missing 'inputs:' header")
    if props is None:
        raise MachineFormatError("missing 'propositions:' header")
    if initial is None:
        raise MachineFormatError("missing 'initial:' header")
    return MealyMachine(
        inputs=inputs,
        propositions=props,
        locations=tuple(order),
        initial=initial,
        transitions=transitions,
    )


def save_machine(m: MealyMachine) -> str:
    lines = [
        "inputs: " + " ".join(m.inputs),
        "propositions: " + " ".join(sorted(m.propositions)),
        "initial: " + m.initial,
    ]
    for loc in m.locations:
        for a in m.inputs:
            dst, out = m.transitions[(loc, a)]
            lines.append(f"{loc} --{a}/{{{' '.join(sorted(out))}}}--> {dst}")
    return "\n".join(lines) + "\n"


def reachable(m: MealyMachine) -> MealyMachine:
    """Restriction of m to locations reachable from the initial one (BFS order)."""
    order = [m.initial]
    seen = {m.initial}
    queue = deque([m.initial])
    while queue:
        loc = queue.popleft()
        for a in m.inputs:
            dst, _ = m.transitions[(loc, a)]
            if dst not in seen:
                seen.add(dst)
                order.append(dst)
                queue.append(dst)
    transitions = {k: v for k, v in m.transitions.items() if k[0] in seen}
    return MealyMachine(m.inputs, m.propositions, tuple(order), m.initial, transitions)


def minimize(m: MealyMachine) -> MealyMachine:
    """Canonical minimal machine equivalent to m (partition refinement)."""
    m = reachable(m)
    # Initial split by output signature, then refine by successor blocks
    # until the block count is stable.
    block = {loc: tuple(m.transitions[(loc, a)][1] for a in m.inputs) for loc in m.locations}
    while True:
        signature = {
            loc: (block[loc], tuple(block[m.transitions[(loc, a)][0]] for a in m.inputs))
            for loc in m.locations
        }
        stable = len(set(signature.values())) == len(set(block.values()))
        block = signature
        if stable:
            break
    # Rebuild the quotient, naming blocks in BFS order from the initial block.
    rep = {}
    for loc in m.locations:
        rep.setdefault(block[loc], loc)
    names = {}
    order = []
    queue = deque([block[m.initial]])
    names[block[m.initial]] = "l0"
    order.append(block[m.initial])
    while queue:
        b = queue.popleft()
        src = rep[b]
        for a in m.inputs:
            dst, _ = m.transitions[(src, a)]
            db = block[dst]
            if db not in names:
                names[db] = f"l{len(names)}"
                order.append(db)
                queue.append(db)
    transitions = {}
    for b in order:
        src = rep[b]
        for a in m.inputs:
            dst, out = m.transitions[(src, a)]
            transitions[(names[b], a)] = (names[block[dst]], out)
    return MealyMachine(
        inputs=m.inputs,
        propositions=m.propositions,
        locations=tuple(names[b] for b in order),
        initial="l0",
        transitions=transitions,
    )


def canonical_table(m: MealyMachine):
    """Transition table with locations renamed in BFS discovery order.

    Two reachable machines are isomorphic iff their canonical tables are equal.
    """
    names = {m.initial: 0}
    order = [m.initial]
    queue = deque([m.initial])
    while queue:
        loc = queue.popleft()
        for a in m.inputs:
            dst, _ = m.transitions[(loc, a)]
            if dst not in names:
                names[dst] = len(names)
                order.append(dst)
                queue.append(dst)
    return tuple(
        tuple((names[m.transitions[(loc, a)][0]], m.transitions[(loc, a)][1]) for a in m.inputs)
        for loc in order
    )


def is_isomorphic(m1: MealyMachine, m2: MealyMachine) -> bool:
    return m1.inputs == m2.inputs and canonical_table(m1) == canonical_table(m2)
