"""Active learning of Mealy machines from membership queries.

Classic observation-table learning: prefixes S (prefix-closed, grown by
closedness defects) against suffixes E (initialized to the single letters),
filled by executing s+e on the SUT session and recording the final output
letter. A counterexample is trimmed to its first disagreeing position and
binary-searched for the single suffix that exposes the missed state, so S
holds one access string per state and E grows by one word per refinement.
"""

from __future__ import annotations

from .machine import MealyMachine, run


class MealyLearner:
    def __init__(self, sut, extra_propositions=frozenset(), extra_suffixes=()):
        self.sut = sut
        self.alphabet = tuple(sut.alphabet)
        self.extra_propositions = frozenset(extra_propositions)
        if not self.alphabet:
            raise ValueError("cannot learn over an empty input alphabet")
        self.prefixes: list[tuple] = [()]
        self.suffixes: list[tuple] = [(a,) for a in self.alphabet]
        for e in extra_suffixes:
            e = tuple(e)
            if e and e not in self.suffixes:
                self.suffixes.append(e)
        self.table: dict[tuple[tuple, tuple], object] = {}
        self.query_log: dict[tuple, tuple] = {}  # membership word -> output word
        self.last_hypothesis: MealyMachine | None = None

    # -- table plumbing ----------------------------------------------------

    def _sut_query(self, word: tuple) -> tuple:
        outputs = self.sut.execute(word)
        if word:
            self.query_log[word] = outputs
        return outputs

    def _query(self, s: tuple, e: tuple) -> None:
        if (s, e) not in self.table:
            self.table[(s, e)] = self._sut_query(s + e)[-1]

    def _extended(self):
        seen = set(self.prefixes)
        extended = list(self.prefixes)
        for s in self.prefixes:
            for a in self.alphabet:
                sa = s + (a,)
                if sa not in seen:
                    seen.add(sa)
                    extended.append(sa)
        return extended

    def _fill(self) -> None:
        for s in self._extended():
            for e in self.suffixes:
                self._query(s, e)

    def _row(self, s: tuple) -> tuple:
        return tuple(self.table[(s, e)] for e in self.suffixes)

    def _add_prefix(self, s: tuple) -> None:
        if s not in self.prefixes:
            self.prefixes.append(s)

    def _close_and_make_consistent(self) -> None:
        while True:
            self._fill()
            rows = {s: self._row(s) for s in self._extended()}
            prefix_rows = {rows[s] for s in self.prefixes}
            unclosed = next(
                (
                    s + (a,)
                    for s in self.prefixes
                    for a in self.alphabet
                    if s + (a,) not in self.prefixes and rows[s + (a,)] not in prefix_rows
                ),
                None,
            )
            if unclosed is not None:
                self._add_prefix(unclosed)
                continue
            defect = self._consistency_defect(rows)
            if defect is not None:
                self.suffixes.append(defect)
                continue
            return

    def _consistency_defect(self, rows):
        by_row: dict[tuple, tuple] = {}
        for s in self.prefixes:
            other = by_row.setdefault(rows[s], s)
            if other is s:
                continue
            for a in self.alphabet:
                for i, e in enumerate(self.suffixes):
                    if rows[other + (a,)][i] != rows[s + (a,)][i]:
                        new = (a,) + e
                        if new not in self.suffixes:
                            return new
        return None

    # -- hypotheses --------------------------------------------------------

    def _build(self) -> MealyMachine:
        reps: dict[tuple, tuple] = {}
        for s in self.prefixes:
            reps.setdefault(self._row(s), s)
        names = {row: f"l{i}" for i, row in enumerate(reps)}
        transitions = {}
        outputs = set()
        for row, s in reps.items():
            for a in self.alphabet:
                out = self.table[(s, (a,))]
                outputs.add(out)
                transitions[(names[row], a)] = (names[self._row(s + (a,))], out)
        # Table access strings per state, for counterexample binary search.
        self._access = {names[row]: s for row, s in reps.items()}
        props = frozenset(self.extra_propositions)
        if outputs:
            props |= frozenset().union(*outputs)
        return MealyMachine(
            inputs=self.alphabet,
            propositions=props,
            locations=tuple(names.values()),
            initial=names[self._row(())],
            transitions=transitions,
        )

    def learn_hypothesis(self) -> MealyMachine:
        """Fill the table until closed and consistent, then build the
        canonical hypothesis; it agrees with every membership query issued
        so far (log disagreements are consumed as free counterexamples)."""
        while True:
            self._close_and_make_consistent()
            hyp = self._build()
            conflict = self._log_conflict(hyp)
            if conflict is None:
                self.last_hypothesis = hyp
                return hyp
            self._process_counterexample(hyp, conflict)

    def _log_conflict(self, hyp: MealyMachine):
        """Shortest word in the query log that the hypothesis mispredicts,
        trimmed to the first disagreeing position."""
        best = None
        for word, outputs in self.query_log.items():
            if best is not None and len(best) <= 1:
                break
            predicted = run(hyp, word)
            if predicted == outputs:
                continue
            first = next(
                i for i, (p, o) in enumerate(zip(predicted, outputs)) if p != o
            )
            if best is None or first + 1 < len(best):
                best = word[: first + 1]
        return best

    def _process_counterexample(self, hyp: MealyMachine, word: tuple) -> None:
        """Binary-search the counterexample for the one suffix that separates
        a reached SUT state from the hypothesis state standing in for it,
        then add that suffix to E (it is provably not there yet).

        word is already trimmed: its final output is the disagreement. The
        probe at split point i runs the SUT on the TABLE access string of
        the hypothesis state reached by word[:i], followed by word[i:]; the
        probes at 0 and len(word)-1 are guaranteed to differ because the
        hypothesis is consistent with its own table.
        """
        n = len(word)
        states = [hyp.initial]
        for a in word:
            states.append(hyp.transitions[(states[-1], a)][0])

        def alpha(i: int):
            return self._sut_query(self._access[states[i]] + word[i:])[-1]

        lo, hi = 0, n - 1
        if n > 1 and alpha(lo) != alpha(hi):
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if alpha(mid) == alpha(lo):
                    lo = mid
                else:
                    hi = mid
            suffix = word[hi:]
        else:
            suffix = word[-1:]
        if suffix in self.suffixes:
            raise RuntimeError(
                f"counterexample {word!r} produced no table progress"
            )
        self.suffixes.append(suffix)

    def refine_with_counterexample(self, word) -> None:
        """Feed a word on which the SUT and the last hypothesis disagree."""
        word = tuple(word)
        if not word:
            raise ValueError("a counterexample must be a non-empty word")
        if self.last_hypothesis is None:
            raise ValueError("no hypothesis has been built yet")
        actual = self.sut.execute(word)
        predicted = run(self.last_hypothesis, word)
        if predicted == actual:
            raise ValueError(
                f"word {word!r} does not distinguish the SUT from the hypothesis"
            )
        # Trim to the first disagreeing position; the shorter word witnesses
        # the same defect and keeps the suffix set small.
        first = next(i for i, (p, a) in enumerate(zip(predicted, actual)) if p != a)
        self._process_counterexample(self.last_hypothesis, word[: first + 1])

    @property
    def state_count(self) -> int:
        return len({self._row(s) for s in self.prefixes})
