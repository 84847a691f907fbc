"""Equivalence testing between a SUT session and a hypothesis machine.

Three strategies: uniform random words, a robustness-guided genetic search
(fitness is the quantitative satisfaction degree of the SUT's numeric trace,
lower is fitter), and the W-method conformance suite, which is exhaustive up
to a bound on extra SUT states and serves as the perfect oracle in tests.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from itertools import product

from .formula import Formula, robustness
from .machine import MealyMachine, run


@dataclass(frozen=True)
class SearchParams:
    seed: int = 0
    max_words: int = 500
    word_len: tuple[int, int] = (1, 30)
    population: int = 50
    generations: int = 20
    mutation_rate: float = 0.05
    crossover_rate: float = 0.5

    def __post_init__(self):
        lo, hi = self.word_len
        if not 1 <= lo <= hi:
            raise ValueError("word length bounds must satisfy 1 <= min <= max")
        if self.population < 2:
            raise ValueError("population must be >= 2")
        for rate in (self.mutation_rate, self.crossover_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must lie in [0, 1]")


def _random_word(rng: random.Random, alphabet, word_len) -> tuple:
    n = rng.randint(*word_len)
    return tuple(rng.choice(alphabet) for _ in range(n))


def random_eqtest(sut, hyp: MealyMachine, params: SearchParams, rng=None):
    """First sampled word on which the SUT and the hypothesis disagree."""
    rng = rng or random.Random(params.seed)
    for _ in range(params.max_words):
        w = _random_word(rng, hyp.inputs, params.word_len)
        if sut.execute(w) != run(hyp, w):
            return w
    return None


def ga_eqtest(sut, hyp: MealyMachine, f: Formula, params: SearchParams, rng=None):
    """Genetic search for a disagreement, guided by robustness of f.

    The SUT must expose numeric outputs (`raw_execute`). Fitness is the
    robustness of the SUT's numeric trace (lower is fitter); every evaluated
    word is also checked for a post-mapping disagreement with the
    hypothesis. A disagreement whose trace already falsifies f is returned
    immediately; otherwise evolution runs to the generation cap and the
    lowest-robustness disagreement seen is returned (absent if none).
    Tournament selection (size 2), one-point crossover, per-letter uniform
    mutation, elitism of one.
    """
    if not hasattr(sut, "raw_execute"):
        raise ValueError("robustness-guided search needs a SUT with numeric outputs")
    rng = rng or random.Random(params.seed)
    alphabet = hyp.inputs

    scored: dict[tuple, float] = {}
    best_witness = None
    best_rob = None

    def fitness(w: tuple) -> float:
        nonlocal best_witness, best_rob
        if w not in scored:
            scored[w] = robustness(f, sut.raw_execute(w), 0)
        rob = scored[w]
        if sut.execute(w) != run(hyp, w) and (best_rob is None or rob < best_rob):
            best_rob, best_witness = rob, w
        return rob

    population = [_random_word(rng, alphabet, params.word_len) for _ in range(params.population)]
    for generation in range(params.generations + 1):
        evaluated = []
        for w in population:
            evaluated.append((fitness(w), w))
            if best_rob is not None and best_rob < 0:
                return best_witness  # the disagreement already falsifies f
        if generation == params.generations:
            break
        evaluated.sort(key=lambda fw: fw[0])
        elite = evaluated[0][1]

        def tournament():
            a = rng.randrange(len(evaluated))
            b = rng.randrange(len(evaluated))
            return evaluated[min(a, b)][1]

        children = [elite]
        while len(children) < params.population:
            pa, pb = tournament(), tournament()
            if rng.random() < params.crossover_rate and min(len(pa), len(pb)) >= 2:
                cut = rng.randint(1, min(len(pa), len(pb)) - 1)
                child = pa[:cut] + pb[cut:]
            else:
                child = pa
            child = tuple(
                rng.choice(alphabet) if rng.random() < params.mutation_rate else letter
                for letter in child
            )
            children.append(child)
        population = children
    return best_witness


def _distinguishing_suffixes(hyp: MealyMachine) -> list[tuple]:
    """Characterization set: for every pair of states, a separating word."""
    states = list(hyp.locations)
    suffixes: list[tuple] = []

    def outputs_from(state: str, word: tuple) -> tuple:
        loc = state
        outs = []
        for a in word:
            loc, out = hyp.transitions[(loc, a)]
            outs.append(out)
        return tuple(outs)

    for i, p in enumerate(states):
        for q in states[i + 1 :]:
            if any(outputs_from(p, w) != outputs_from(q, w) for w in suffixes):
                continue
            sep = _separating_word(hyp, p, q)
            if sep is not None:
                suffixes.append(sep)
    return suffixes


def _separating_word(hyp: MealyMachine, p: str, q: str):
    """BFS over state pairs for the shortest output-separating word."""
    queue = deque([(p, q, ())])
    seen = {(p, q)}
    while queue:
        sp, sq, word = queue.popleft()
        for a in hyp.inputs:
            dp, op = hyp.transitions[(sp, a)]
            dq, oq = hyp.transitions[(sq, a)]
            if op != oq:
                return word + (a,)
            if (dp, dq) not in seen:
                seen.add((dp, dq))
                queue.append((dp, dq, word + (a,)))
    return None  # equivalent states: hyp was not minimal


def wmethod_suite(hyp: MealyMachine, depth: int) -> list[tuple]:
    """Deterministic W-method test words for SUTs with <= |hyp| + depth states."""
    access: dict[str, tuple] = {hyp.initial: ()}
    queue = deque([hyp.initial])
    while queue:
        loc = queue.popleft()
        for a in hyp.inputs:
            dst, _ = hyp.transitions[(loc, a)]
            if dst not in access:
                access[dst] = access[loc] + (a,)
                queue.append(dst)
    cover = list(access.values()) + [acc + (a,) for acc in access.values() for a in hyp.inputs]
    middles = [m for k in range(depth + 1) for m in product(hyp.inputs, repeat=k)]
    wset = _distinguishing_suffixes(hyp) or [()]
    index = {a: i for i, a in enumerate(hyp.inputs)}
    words = {
        p + m + w
        for p in cover
        for m in middles
        for w in wset
        if p + m + w
    }
    return sorted(words, key=lambda w: (len(w), [index[a] for a in w]))


def wmethod_eqtest(sut, hyp: MealyMachine, depth: int = 2):
    """First suite word on which the SUT and the hypothesis disagree.

    None implies true equivalence whenever the SUT behaves as a Mealy
    machine with at most |hyp| + depth states (hyp minimal).
    """
    for w in wmethod_suite(hyp, depth):
        if sut.execute(w) != run(hyp, w):
            return w
    return None
