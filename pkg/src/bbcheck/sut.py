"""System-under-test backends: sessions with caching, input/output mappers.

A session executes whole input words against a reset-able black box and
caches the outputs; the execution counter only advances for words that
actually reach the system, so cache hits are free. Numeric systems are
bridged to the propositional world by an output mapper built from the
comparison atoms of the specification.
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
from dataclasses import dataclass

from .formula import Cmp, Formula, Prop, comparisons, map_atoms
from .machine import MealyMachine


class SutError(RuntimeError):
    pass


class SutProtocolError(SutError):
    pass


class SutSession:
    """Reset/step execution with a prefix-closed query cache.

    The cache is a trie over input letters (determinism makes every prefix's
    output a prefix of the whole output), so a word fully covered by earlier
    executions never reaches the system and is never counted.
    """

    def __init__(self, alphabet):
        self.alphabet = tuple(alphabet)
        self.executions = 0
        self._trie: dict = {}  # letter -> (output letter, subtrie)

    def execute(self, word) -> tuple:
        word = tuple(word)
        for a in word:
            if a not in self.alphabet:
                raise ValueError(f"unknown input letter {a!r}")
        outputs = []
        node = self._trie
        for a in word:
            entry = node.get(a)
            if entry is None:
                break
            outputs.append(entry[0])
            node = entry[1]
        else:
            return tuple(outputs)
        self._reset()
        outputs = [self._step(a) for a in word]
        self.executions += 1
        node = self._trie
        for a, out in zip(word, outputs):
            entry = node.get(a)
            if entry is None:
                entry = (out, {})
                node[a] = entry
            node = entry[1]
        return tuple(outputs)

    @property
    def cache_trie(self) -> dict:
        return self._trie

    def cache_words(self):
        """Yield every cached non-empty (word, outputs) pair."""

        def walk(node, word, outputs):
            for a, (out, child) in node.items():
                w = word + (a,)
                o = outputs + (out,)
                yield w, o
                yield from walk(child, w, o)

        yield from walk(self._trie, (), ())

    def close(self) -> None:
        pass

    def _reset(self) -> None:
        raise NotImplementedError

    def _step(self, letter):
        raise NotImplementedError


class MealySut(SutSession):
    """Ground-truth backend driving a Mealy machine letter by letter."""

    def __init__(self, machine: MealyMachine):
        super().__init__(machine.inputs)
        self.machine = machine
        self._loc = machine.initial

    def _reset(self) -> None:
        self._loc = self.machine.initial

    def _step(self, letter):
        self._loc, out = self.machine.step(self._loc, letter)
        return out


def mealy_sut(m: MealyMachine) -> MealySut:
    return MealySut(m)


@dataclass(frozen=True)
class TransmissionParams:
    """Piecewise-linear surrogate of an automatic transmission.

    One step is one second: velocity integrates throttle acceleration minus
    brake deceleration and a drag loss rounded to keep the state space
    integer (and therefore finite and learnable), mechanical engine speed
    follows velocity through the current gear ratio, and the gear shifts one
    step at fixed mechanical thresholds. Under full throttle the velocity
    rises strictly until the drag fixed point, where the rounded drag loss
    equals the acceleration.

    Sustained throttle builds a small saturating boost state that raises the
    effective acceleration. The boost is not directly observable, so learned
    approximations of the dynamics are imperfect until refined - the regime
    black-box checking targets.
    """

    accel: int = 20
    boost_accel: int = 10
    boost_max: int = 2
    brake_decel: int = 45
    drag: float = 0.1
    idle_rpm: float = 600.0
    rpm_per_speed: tuple[float, ...] = (45.0, 30.0, 20.0, 13.0)
    upshift_rpm: float = 4500.0
    downshift_rpm: float = 1200.0
    throttle_max: float = 100.0
    brake_max: float = 325.0

    def full_throttle_accel(self) -> int:
        return self.accel + self.boost_accel * self.boost_max

    @property
    def top_speed(self) -> int:
        """Smallest velocity fixed under full throttle (iterated dynamics)."""
        v = 0
        while True:
            nxt = max(0, v - round(self.drag * v) + self.full_throttle_accel())
            if nxt == v:
                return v
            v = nxt


TRANSMISSION_ALPHABET = ("t0b0", "t100b0", "t0b325", "t100b325")


class TransmissionSim(SutSession):
    """Deterministic discrete-time surrogate of the automatic transmission.

    Inputs discretize throttle to {0, max} and brake to {0, max}; outputs are
    numeric valuations of velocity `v`, engine speed `omega`, and gear `g`.
    """

    def __init__(self, params: TransmissionParams | None = None):
        super().__init__(TRANSMISSION_ALPHABET)
        self.params = params or TransmissionParams()
        self._v = 0
        self._gear = 1
        self._boost = 0

    def _reset(self) -> None:
        self._v = 0
        self._gear = 1
        self._boost = 0

    def _step(self, letter):
        p = self.params
        throttle = 1 if "t100" in letter else 0
        brake = 1 if "b325" in letter else 0
        if throttle:
            self._boost = min(p.boost_max, self._boost + 1)
        else:
            self._boost = max(0, self._boost - 1)
        accel = p.accel + p.boost_accel * self._boost
        self._v = max(
            0,
            self._v - round(p.drag * self._v) + accel * throttle - p.brake_decel * brake,
        )
        gear = self._gear
        omega = p.idle_rpm + self._v * p.rpm_per_speed[gear - 1]
        # Shift decisions take effect on the next step.
        if omega > p.upshift_rpm and gear < len(p.rpm_per_speed):
            self._gear = gear + 1
        elif omega < p.downshift_rpm and gear > 1:
            self._gear = gear - 1
        return {"v": float(self._v), "omega": omega, "g": float(gear)}


def transmission_sim(params: TransmissionParams | None = None) -> TransmissionSim:
    return TransmissionSim(params)


class ProcessSut(SutSession):
    """Child process speaking the line protocol:

    `RESET` -> `OK`; `STEP <letter>` -> `OUT <p> ...` (proposition set,
    possibly empty) or `VAL <var>=<float> ...`. Anything else is a protocol
    error and aborts the session.
    """

    def __init__(self, command, alphabet, step_timeout: float = 5.0):
        super().__init__(alphabet)
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=False,
            )
        except OSError as e:
            raise SutError(f"cannot start SUT process: {e}") from e
        self._timeout = step_timeout
        self._buffer = b""

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def _send(self, line: str) -> None:
        if self._proc.poll() is not None:
            raise SutProtocolError("SUT process exited")
        try:
            self._proc.stdin.write((line + "\n").encode())
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise SutProtocolError(f"SUT process pipe closed: {e}") from e

    def _recv(self) -> str:
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([fd], [], [], self._timeout)
            if not ready:
                raise SutProtocolError(f"SUT reply timed out after {self._timeout}s")
            chunk = os.read(fd, 4096)
            if not chunk:
                raise SutProtocolError("SUT process closed its output")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.decode(errors="replace").strip()

    def _reset(self) -> None:
        self._send("RESET")
        reply = self._recv()
        if reply != "OK":
            raise SutProtocolError(f"expected OK after RESET, got {reply!r}")

    def _step(self, letter):
        self._send(f"STEP {letter}")
        reply = self._recv()
        if reply == "OUT" or reply.startswith("OUT "):
            return frozenset(reply[4:].split())
        if reply.startswith("VAL "):
            valuation = {}
            for token in reply[4:].split():
                var, _, num = token.partition("=")
                if not var or not num:
                    raise SutProtocolError(f"malformed VAL token {token!r}")
                try:
                    valuation[var] = float(num)
                except ValueError as e:
                    raise SutProtocolError(f"malformed VAL token {token!r}") from e
            return valuation
        raise SutProtocolError(f"malformed SUT reply {reply!r}")


def process_sut(command, alphabet, step_timeout: float = 5.0) -> ProcessSut:
    return ProcessSut(command, alphabet, step_timeout)


def canonical_name(atom: Cmp) -> str:
    c = atom.threshold
    num = str(int(c)) if isinstance(c, float) and c.is_integer() else str(c)
    return f"{atom.var}{atom.op}{num}"


@dataclass(frozen=True)
class OutputMapper:
    """Coarsest partition of the output space compatible with a formula's
    comparisons: a valuation maps to the set of comparisons it satisfies."""

    atoms: tuple[Cmp, ...]

    @property
    def propositions(self) -> frozenset[str]:
        return frozenset(canonical_name(a) for a in self.atoms)

    def map_letter(self, valuation) -> frozenset[str]:
        return frozenset(canonical_name(a) for a in self.atoms if a.holds(valuation))

    def map_trace(self, trace) -> tuple:
        return tuple(self.map_letter(u) for u in trace)

    def variables(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(a.var for a in self.atoms))

    def variable_cells(self, var: str) -> list[frozenset[str]]:
        """Distinct per-variable cells, probed at and between the thresholds."""
        mine = [a for a in self.atoms if a.var == var]
        thresholds = sorted({a.threshold for a in mine})
        probes = [thresholds[0] - 1.0]
        for lo, hi in zip(thresholds, thresholds[1:]):
            probes.extend([lo, (lo + hi) / 2.0])
        probes.extend([thresholds[-1], thresholds[-1] + 1.0])
        cells = []
        for x in probes:
            cell = frozenset(canonical_name(a) for a in mine if a.holds({var: x}))
            if cell not in cells:
                cells.append(cell)
        return cells

    def cell_count(self) -> int:
        count = 1
        for var in self.variables():
            count *= len(self.variable_cells(var))
        return count


def build_output_mapper(f: Formula) -> OutputMapper:
    """Mapper over the comparison atoms of f; per variable, thresholds sorted."""
    atoms = comparisons(f)
    if not atoms:
        raise ValueError("formula has no comparison atoms to build a mapper from")
    ordered: list[Cmp] = []
    for var in dict.fromkeys(a.var for a in atoms):
        ordered.extend(
            sorted((a for a in atoms if a.var == var), key=lambda a: (a.threshold, a.op))
        )
    return OutputMapper(tuple(ordered))


def propositional_formula(f: Formula) -> Formula:
    """Replace every comparison atom by the proposition naming it."""
    return map_atoms(f, lambda a: Prop(canonical_name(a)) if isinstance(a, Cmp) else a)


class MappedSut:
    """Propositional view of a numeric session through an output mapper.

    Shares the inner session's cache and execution counter; `raw_execute`
    exposes the numeric trace for robustness-guided search.
    """

    def __init__(self, inner: SutSession, mapper: OutputMapper):
        self.inner = inner
        self.mapper = mapper
        self.alphabet = inner.alphabet
        self._letter_memo: dict = {}
        self._trie: dict = {}  # mapped mirror of the inner cache trie

    @property
    def executions(self) -> int:
        return self.inner.executions

    def _map_letter(self, valuation) -> frozenset[str]:
        key = tuple(sorted(valuation.items()))
        mapped = self._letter_memo.get(key)
        if mapped is None:
            mapped = self.mapper.map_letter(valuation)
            self._letter_memo[key] = mapped
        return mapped

    def _record(self, word, mapped) -> None:
        node = self._trie
        for a, out in zip(word, mapped):
            entry = node.get(a)
            if entry is None:
                entry = (out, {})
                node[a] = entry
            node = entry[1]

    @property
    def cache_trie(self) -> dict:
        return self._trie

    def cache_words(self):
        for word, outputs in self.inner.cache_words():
            yield word, tuple(self._map_letter(u) for u in outputs)

    def raw_execute(self, word) -> tuple:
        raw = self.inner.execute(tuple(word))
        self._record(tuple(word), [self._map_letter(u) for u in raw])
        return raw

    def execute(self, word) -> tuple:
        word = tuple(word)
        mapped = tuple(self._map_letter(u) for u in self.inner.execute(word))
        self._record(word, mapped)
        return mapped

    def close(self) -> None:
        self.inner.close()
