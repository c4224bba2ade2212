"""Quantum Turing machines: configurations, sparse states and evolution.

A machine is a Turing frame (states, alphabet) plus a transition function
``delta(q, sigma, p, tau, d)``.  States of the machine are finitely supported
superpositions of configurations ``(q, T, xi)`` and are stored sparsely.

Tapes are canonical tuples of ``(cell, symbol)`` pairs sorted by cell with
blank cells omitted, so configurations are hashable and compare by value.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

TOL = 1e-9
PRUNE = 1e-15
DIRECTIONS = (-1, 0, 1)

Tape = tuple  # tuple[tuple[int, str], ...]


class MachineError(ValueError):
    """Raised for malformed frames, transition functions or machine constructions."""


# ---------------------------------------------------------------------------
# frames, tapes, configurations


@dataclass(frozen=True)
class TuringFrame:
    states: tuple
    alphabet: tuple
    blank: str
    initial: str
    final: str

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if len(set(self.states)) != len(self.states):
            raise MachineError("state identifiers must be unique")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise MachineError("alphabet symbols must be unique")
        if len(self.alphabet) < 2:
            raise MachineError("alphabet needs at least two symbols")
        if self.blank not in self.alphabet:
            raise MachineError(f"blank {self.blank!r} is not in the alphabet")
        for name, q in (("initial", self.initial), ("final", self.final)):
            if q not in self.states:
                raise MachineError(f"{name} state {q!r} is not in the state set")
        if self.initial == self.final:
            raise MachineError("initial and final states must differ")

    @property
    def keys(self) -> list[tuple[str, str]]:
        """Source keys (q, sigma) in canonical (state-index, symbol-index) order."""
        return [(q, s) for q in self.states for s in self.alphabet]

    def state_index(self, q) -> int:
        return self.states.index(q)

    def symbol_index(self, s) -> int:
        return self.alphabet.index(s)


def make_tape(cells: Mapping[int, str] | Iterable[tuple[int, str]], blank: str) -> Tape:
    items = cells.items() if isinstance(cells, Mapping) else cells
    return tuple(sorted((int(i), s) for i, s in items if s != blank))


def tape_of(x: Sequence[str], blank: str, start: int = 0) -> Tape:
    """tape[x]: the tape holding ``x`` in cells start..start+|x|-1."""
    return make_tape(((start + i, s) for i, s in enumerate(x)), blank)


def read(tape: Tape, cell: int, blank: str) -> str:
    for i, s in tape:
        if i == cell:
            return s
        if i > cell:
            break
    return blank


def write(tape: Tape, cell: int, symbol: str, blank: str) -> Tape:
    cells = dict(tape)
    if symbol == blank:
        cells.pop(cell, None)
    else:
        cells[cell] = symbol
    return tuple(sorted(cells.items()))


class Configuration(NamedTuple):
    state: str
    tape: Tape
    head: int


def initial_configuration(frame: TuringFrame, x: Sequence[str]) -> Configuration:
    return Configuration(frame.initial, tape_of(x, frame.blank), 0)


def split_input(x: str | Sequence[str], frame: TuringFrame) -> tuple[str, ...]:
    """Turn an input into a symbol tuple.

    Strings are split on whitespace when they contain any, otherwise per
    character.  ``""`` and ``"ε"`` give the empty input.
    """
    if isinstance(x, str):
        if x in ("", "ε", "eps"):
            return ()
        parts = tuple(x.split()) if any(c.isspace() for c in x) else tuple(x)
    else:
        parts = tuple(x)
    for s in parts:
        if s not in frame.alphabet:
            raise MachineError(f"input symbol {s!r} is not in the alphabet")
    return parts


class SparseState:
    """Finitely supported superposition over configurations (hashable keys)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = defaultdict(complex)
        for c, a in items:
            acc[c] += complex(a)
        self._terms = {c: a for c, a in acc.items() if abs(a) >= PRUNE}

    @classmethod
    def basis(cls, config) -> "SparseState":
        return cls({config: 1.0})

    def __getitem__(self, config) -> complex:
        return self._terms.get(config, 0j)

    def __iter__(self) -> Iterator:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def items(self):
        return self._terms.items()

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._terms.values()))

    def inner(self, other: "SparseState") -> complex:
        """<self|other>."""
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        total = sum(self[c].conjugate() * other[c] for c in small)
        return complex(total)

    def distance(self, other: "SparseState") -> float:
        keys = set(self._terms) | set(other._terms)
        return math.sqrt(sum(abs(self[c] - other[c]) ** 2 for c in keys))

    def scaled(self, factor: complex) -> "SparseState":
        return SparseState({c: factor * a for c, a in self._terms.items()})

    def map_keys(self, fn: Callable) -> "SparseState":
        return SparseState((fn(c), a) for c, a in self._terms.items())

    def __add__(self, other: "SparseState") -> "SparseState":
        return SparseState(list(self.items()) + list(other.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{c}: {a:.6g}" for c, a in list(self._terms.items())[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} terms)"
        return f"SparseState({{{body}{more}}})"


# ---------------------------------------------------------------------------
# transition functions


@dataclass(frozen=True)
class TransitionFunction:
    """delta as a map (q, sigma) -> ((p, tau, d, amplitude), ...)."""

    rules: Mapping

    def __post_init__(self):
        clean = {}
        for key, row in self.rules.items():
            seen = set()
            entries = []
            for p, tau, d, amp in row:
                if d not in DIRECTIONS:
                    raise MachineError(f"direction {d!r} not in {{-1, 0, 1}} for source {key}")
                if (p, tau, d) in seen:
                    raise MachineError(f"duplicate target {(p, tau, d)} for source {key}")
                seen.add((p, tau, d))
                amp = complex(amp)
                if abs(amp) >= PRUNE:
                    entries.append((p, tau, int(d), amp))
            if entries:
                clean[tuple(key)] = tuple(entries)
        object.__setattr__(self, "rules", clean)

    @classmethod
    def from_entries(cls, entries: Iterable) -> "TransitionFunction":
        """Build from ``(q, sigma, p, tau, d, amplitude)`` tuples."""
        rows: dict = defaultdict(list)
        for q, s, p, tau, d, amp in entries:
            rows[(q, s)].append((p, tau, d, amp))
        return cls(dict(rows))

    def row(self, q, sigma) -> tuple:
        return self.rules.get((q, sigma), ())

    def amplitude(self, q, sigma, p, tau, d) -> complex:
        for p2, t2, d2, a in self.row(q, sigma):
            if (p2, t2, d2) == (p, tau, d):
                return a
        return 0j

    def entries(self) -> Iterator[tuple]:
        for (q, s), row in self.rules.items():
            for p, tau, d, a in row:
                yield q, s, p, tau, d, a

    def defined_keys(self) -> list:
        return list(self.rules)

    def restricted(self, keys: Iterable) -> "TransitionFunction":
        keys = set(keys)
        return TransitionFunction({k: v for k, v in self.rules.items() if k in keys})

    def directions_into(self) -> dict:
        """Target state -> set of directions it is entered with."""
        out: dict = defaultdict(set)
        for _, _, p, _, d, _ in self.entries():
            out[p].add(d)
        return dict(out)

    def is_unidirectional(self) -> bool:
        return all(len(ds) == 1 for ds in self.directions_into().values())


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    max_violation: float
    witness: tuple | None

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        text = f"condition ({self.name}): {verdict} max_violation={self.max_violation:.3e}"
        if not self.passed:
            text += f" witness={self.witness}"
        return text


@dataclass(frozen=True)
class UnitarityReport:
    a: ConditionResult
    b: ConditionResult
    c: ConditionResult
    d: ConditionResult

    @property
    def conditions(self) -> tuple[ConditionResult, ...]:
        return (self.a, self.b, self.c, self.d)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def lines(self) -> list[str]:
        return [c.line() for c in self.conditions]


def _worst(name: str, values: Mapping, target: Callable, tol: float) -> ConditionResult:
    worst, witness = 0.0, None
    for key, value in values.items():
        v = abs(value - target(key))
        if v > worst:
            worst, witness = v, key
    return ConditionResult(name, worst <= tol, worst, witness)


def unitarity_report(delta: TransitionFunction, frame: TuringFrame, tol: float = TOL) -> UnitarityReport:
    """Evaluate the four algebraic conditions equivalent to unitarity of M_delta."""
    keys = frame.keys
    order = {k: i for i, k in enumerate(keys)}

    norms = {k: sum(abs(a) ** 2 for *_, a in delta.row(*k)) for k in keys}
    cond_a = _worst("a", norms, lambda k: 1.0, tol)

    # (b): <row k'|row k> over (p, tau, d), for k != k'
    by_target: dict = defaultdict(list)
    for q, s, p, tau, d, a in delta.entries():
        by_target[(p, tau, d)].append(((q, s), a))
    overlaps: dict = defaultdict(complex)
    for members in by_target.values():
        for (k1, a1), (k2, a2) in product(members, members):
            if k1 != k2 and order.get(k1, -1) < order.get(k2, -1):
                overlaps[(k1, k2)] += a2.conjugate() * a1
    cond_b = _worst("b", overlaps, lambda k: 0.0, tol)

    # index entries by target state p and direction
    by_state: dict = defaultdict(lambda: defaultdict(list))
    for q, s, p, tau, d, a in delta.entries():
        by_state[p][d].append(((q, s, tau), a))

    # (c): sum_p sum_{d=0,1} delta(q',s',p,t',d-1)^* delta(q,s,p,t,d)
    sums_c: dict = defaultdict(complex)
    for groups in by_state.values():
        for d in (0, 1):
            for (src, a), (src2, a2) in product(groups.get(d, ()), groups.get(d - 1, ())):
                sums_c[(src, src2)] += a2.conjugate() * a
    cond_c = _worst("c", sums_c, lambda k: 0.0, tol)

    # (d): sum_p delta(q',s',p,t',-1)^* delta(q,s,p,t,1)
    sums_d: dict = defaultdict(complex)
    for groups in by_state.values():
        for (src, a), (src2, a2) in product(groups.get(1, ()), groups.get(-1, ())):
            sums_d[(src, src2)] += a2.conjugate() * a
    cond_d = _worst("d", sums_d, lambda k: 0.0, tol)

    return UnitarityReport(cond_a, cond_b, cond_c, cond_d)


# ---------------------------------------------------------------------------
# machines


def track_parts(symbol: str) -> tuple[str, ...]:
    return tuple(symbol.split(","))


@dataclass(frozen=True)
class QTM:
    """A single-tape machine.  ``check=False`` admits prequantum machines."""

    frame: TuringFrame
    delta: TransitionFunction
    tracks: tuple | None = None
    check: bool = field(default=True, compare=False)
    report: UnitarityReport | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for q, s, p, tau, d, a in self.delta.entries():
            if q not in self.frame.states or p not in self.frame.states:
                raise MachineError(f"rule {(q, s, p, tau, d)} uses an unknown state")
            if s not in self.frame.alphabet or tau not in self.frame.alphabet:
                raise MachineError(f"rule {(q, s, p, tau, d)} uses an unknown symbol")
        if self.tracks is not None:
            tracks = tuple(tuple(t) for t in self.tracks)
            object.__setattr__(self, "tracks", tracks)
            if math.prod(len(t) for t in tracks) != len(self.frame.alphabet):
                raise MachineError("alphabet size must equal the product of track sizes")
            expected = {",".join(c) for c in product(*tracks)}
            if expected != set(self.frame.alphabet):
                raise MachineError("alphabet must be the comma-joined product of the tracks")
            if self.frame.blank != ",".join(t[0] for t in tracks):
                raise MachineError("blank must be the tuple of track blanks")
        report = unitarity_report(self.delta, self.frame)
        object.__setattr__(self, "report", report)
        if self.check and not report.passed:
            raise MachineError("transition function is not unitary:\n" + "\n".join(report.lines()))

    @property
    def blank(self) -> str:
        return self.frame.blank

    @property
    def is_unitary(self) -> bool:
        return self.report.passed


def make_qtm(states, alphabet, entries, *, blank=None, initial=None, final=None,
             tracks=None, check=True) -> QTM:
    states = tuple(states)
    alphabet = tuple(alphabet)
    frame = TuringFrame(states, alphabet, blank if blank is not None else alphabet[0],
                        initial if initial is not None else states[0],
                        final if final is not None else states[-1])
    return QTM(frame, TransitionFunction.from_entries(entries), tracks=tracks, check=check)


# ---------------------------------------------------------------------------
# evolution


def evolve_step(machine: QTM, state: SparseState) -> SparseState:
    """Apply the evolution operator M_delta once."""
    blank = machine.blank
    out: dict = defaultdict(complex)
    for (q, tape, xi), amp in state.items():
        sigma = read(tape, xi, blank)
        for p, tau, d, a in machine.delta.row(q, sigma):
            new_tape = tape if tau == sigma else write(tape, xi, tau, blank)
            out[Configuration(p, new_tape, xi + d)] += a * amp
    return SparseState(out)


def evolve(machine: QTM, state: SparseState, steps: int) -> SparseState:
    for _ in range(steps):
        state = evolve_step(machine, state)
    return state


def run_for(machine: QTM, x, t: int) -> SparseState:
    if t < 0:
        raise MachineError("step count must be non-negative")
    start = initial_configuration(machine.frame, split_input(x, machine.frame))
    return evolve(machine, SparseState.basis(start), t)


def window_of(config: Configuration, t: int, blank: str) -> str:
    return " ".join(read(config.tape, i, blank) for i in range(-t, t + 1))


def window_distribution(state: SparseState, t: int, blank: str) -> dict[str, float]:
    dist: dict = defaultdict(float)
    for c, a in state.items():
        dist[window_of(c, t, blank)] += abs(a) ** 2
    return dict(dist)


def measure_window(machine: QTM, x, t: int) -> dict[str, float]:
    """Distribution of the cell window [-t, t] after exactly t steps."""
    return window_distribution(run_for(machine, x, t), t, machine.blank)


def computation_time(machine: QTM, x, bound: int) -> int | None:
    """First t <= bound at which all amplitude sits in final configurations with
    head 0, provided no final-state amplitude appeared earlier; else None."""
    frame = machine.frame
    state = SparseState.basis(initial_configuration(frame, split_input(x, frame)))
    for t in range(bound + 1):
        final_mass = sum(abs(a) ** 2 for c, a in state.items() if c.state == frame.final)
        if final_mass > TOL:
            at_home = sum(abs(a) ** 2 for c, a in state.items()
                          if c.state == frame.final and c.head == 0)
            return t if abs(at_home - 1.0) <= TOL else None
        state = evolve_step(machine, state)
    return None


def track_config(tape: Tape, i: int, tracks: tuple) -> Tape:
    """Projection T^i of a tape onto track i (0-based), blanks dropped."""
    blank_i = tracks[i][0]
    return tuple((c, track_parts(s)[i]) for c, s in tape if track_parts(s)[i] != blank_i)


def tracked_input(x: Sequence[str], tracks: tuple) -> tuple[str, ...]:
    """tape[x] for a track-1 string x with the other tracks blank."""
    rest = [t[0] for t in tracks[1:]]
    return tuple(",".join([s, *rest]) for s in x)


def accept_probs(machine: QTM, x, t: int) -> tuple[float, float]:
    """(p_accept, p_reject): mass with track 1 = tape[x] and track 2 = tape[1] / tape[0]."""
    tracks = machine.tracks
    if tracks is None or len(tracks) < 2:
        raise MachineError("accept_probs needs a machine with at least two tracks")
    if isinstance(x, str):
        x = tuple(x) if not any(c.isspace() for c in x) else tuple(x.split())
    for s in x:
        if s not in tracks[0]:
            raise MachineError(f"input symbol {s!r} is not in the first track alphabet")
    start = Configuration(machine.frame.initial, tape_of(tracked_input(x, tracks), machine.blank), 0)
    state = evolve(machine, SparseState.basis(start), t)
    want1 = tape_of(x, tracks[0][0])
    accept = reject = 0.0
    t_one, t_zero = tape_of("1", tracks[1][0]), tape_of("0", tracks[1][0])
    for c, a in state.items():
        if track_config(c.tape, 0, tracks) != want1:
            continue
        second = track_config(c.tape, 1, tracks)
        if second == t_one:
            accept += abs(a) ** 2
        elif second == t_zero:
            reject += abs(a) ** 2
    return accept, reject


# ---------------------------------------------------------------------------
# completion of partial transition functions


def _row_vector(row, index: Mapping) -> np.ndarray:
    v = np.zeros(len(index), dtype=complex)
    for p, tau, d, a in row:
        v[index[(p, tau)]] = a
    return v


def complete_unidirectional(partial: TransitionFunction, frame: TuringFrame,
                            default_direction: int = 0) -> TransitionFunction:
    """Extend a unidirectional partial delta on S to a unitary unidirectional one.

    For a unidirectional delta the evolution is unitary exactly when the
    |Q||Sigma| x |Q||Sigma| matrix of rows delta(q, sigma, ., ., d(p)) is
    unitary, so the missing rows come from Gram-Schmidt over canonical basis
    vectors (p, tau) in index order.  States never entered get
    ``default_direction``.
    """
    if default_direction not in DIRECTIONS:
        raise MachineError("default direction must be -1, 0 or 1")
    into = partial.directions_into()
    bad = {p: ds for p, ds in into.items() if len(ds) > 1}
    if bad:
        raise MachineError(f"partial function is not unidirectional: {bad}")
    direction = {p: (next(iter(into[p])) if p in into else default_direction) for p in frame.states}
    targets = [(p, tau) for p in frame.states for tau in frame.alphabet]
    index = {k: i for i, k in enumerate(targets)}
    defined = [k for k in frame.keys if partial.row(*k)]

    rows = {k: _row_vector(partial.row(*k), index) for k in defined}
    for k, v in rows.items():
        if abs(np.vdot(v, v).real - 1.0) > TOL:
            raise MachineError(f"condition (a) violated on S at {k}")
    for i, k1 in enumerate(defined):
        for k2 in defined[i + 1:]:
            if abs(np.vdot(rows[k2], rows[k1])) > TOL:
                raise MachineError(f"condition (b) violated on S at {k1}, {k2}")

    basis = [rows[k] for k in defined]
    missing = [k for k in frame.keys if k not in rows]
    candidate = 0
    new_rows = {}
    for k in missing:
        while True:
            if candidate >= len(targets):
                raise MachineError("no completion exists under the fixed direction assignment")
            v = np.zeros(len(targets), dtype=complex)
            v[candidate] = 1.0
            candidate += 1
            for _ in range(2):
                for b in basis:
                    v = v - np.vdot(b, v) * b
            n = np.linalg.norm(v)
            if n > TOL:
                v = v / n
                break
        v[np.abs(v) < PRUNE] = 0
        basis.append(v)
        new_rows[k] = v

    rules = dict(partial.rules)
    for k, v in new_rows.items():
        rules[k] = tuple((targets[j][0], targets[j][1], direction[targets[j][0]], complex(v[j]))
                         for j in np.flatnonzero(v))
    return TransitionFunction(rules)


# ---------------------------------------------------------------------------
# binary-tape simulation


def _bits(index: int, k: int) -> str:
    """k-digit binary over {B, 1}, most significant first (blank = all B)."""
    return "".join("1" if (index >> (k - 1 - j)) & 1 else "B" for j in range(k))


@dataclass(frozen=True)
class BinaryTapeMachine:
    """A binary-alphabet machine simulating ``original`` with slowdown ``factor``."""

    machine: QTM
    original: QTM
    k: int
    codes: dict  # symbol -> k-character string over {B, 1}

    @property
    def factor(self) -> int:
        return 3 * self.k

    def encode_symbols(self, x: Sequence[str]) -> tuple[str, ...]:
        return tuple("".join(self.codes[s] for s in x))

    def encode_configuration(self, c: Configuration) -> Configuration:
        cells = {}
        for i, s in c.tape:
            for j, b in enumerate(self.codes[s]):
                cells[self.k * i + j] = b
        return Configuration(_plain(c.state), make_tape(cells, "B"), self.k * c.head)

    def decode_configuration(self, c: Configuration) -> Configuration | None:
        """Inverse of the encoding on configurations in its image; None otherwise."""
        base = _unplain(c.state)
        if base is None or c.head % self.k:
            return None
        decode = {v: s for s, v in self.codes.items()}
        blocks: dict = defaultdict(lambda: ["B"] * self.k)
        for i, b in c.tape:
            blocks[i // self.k][i % self.k] = b
        cells = {}
        for j, bits in blocks.items():
            s = decode.get("".join(bits))
            if s is None:
                return None
            cells[j] = s
        return Configuration(base, make_tape(cells, self.original.blank), c.head // self.k)

    def decoded_window(self, state: SparseState, t: int) -> dict[str, float]:
        dist: dict = defaultdict(float)
        for c, a in state.items():
            d = self.decode_configuration(c)
            key = "<undecodable>" if d is None else window_of(d, t, self.original.blank)
            dist[key] += abs(a) ** 2
        return dict(dist)


def _plain(q: str) -> str:
    return f"{q}::1"


def _unplain(name: str) -> str | None:
    return name[:-3] if name.endswith("::1") else None


def to_binary_tape(machine: QTM) -> BinaryTapeMachine:
    """Binary-alphabet machine carrying out one step of ``machine`` in 3k steps.

    States: ``q::1`` (idle), ``q:<bits>:1`` (recording read bits),
    ``q:<bits>:2`` (writing back), ``q:#i:3`` (moving).
    """
    if not machine.delta.is_unidirectional():
        raise MachineError("to_binary_tape needs a unidirectional machine")
    frame = machine.frame
    k = max(1, math.ceil(math.log2(len(frame.alphabet))))
    codes = {s: _bits(i, k) for i, s in enumerate(frame.alphabet)}
    into = machine.delta.directions_into()
    dirs = {p: next(iter(into[p])) if p in into else 0 for p in frame.states}
    bin_alpha = ("B", "1")

    states = []
    for q in frame.states:
        states.append(_plain(q))
        for j in range(1, k + 1):
            for bits in product(bin_alpha, repeat=j):
                for phase in (1, 2):
                    states.append(f"{q}:{''.join(bits)}:{phase}")
        for i in range(1, k):
            states.append(f"{q}:#{i}:3")

    def rec(q, bits, phase):
        return _plain(q) if (phase == 1 and not bits) else f"{q}:{bits}:{phase}"

    entries = []
    valid = set(codes.values())
    for p in frame.states:
        # recording: read bit i, erase it, move right
        for i in range(k):
            for bits in product(bin_alpha, repeat=i):
                prefix = "".join(bits)
                if i > 0 and not any(c.startswith(prefix) for c in valid):
                    continue
                for b in bin_alpha:
                    if not any(c.startswith(prefix + b) for c in valid):
                        continue
                    entries.append((rec(p, prefix, 1), b, rec(p, prefix + b, 1), "B", 1, 1.0))
        # transform with the original amplitudes, step back left
        for sigma in frame.alphabet:
            for q, tau, d, a in machine.delta.row(p, sigma):
                for b in bin_alpha:
                    entries.append((rec(p, codes[sigma], 1), b, f"{q}:{codes[tau]}:2", b, -1, a))
    for q in frame.states:
        # writing back tau_i, right to left
        for tau_code in valid:
            for i in range(k - 1, 0, -1):
                entries.append((f"{q}:{tau_code[:i + 1]}:2", "B", f"{q}:{tau_code[:i]}:2",
                                tau_code[i], -1, 1.0))
            after = _plain(q) if k == 1 else f"{q}:#1:3"
            entries.append((f"{q}:{tau_code[0]}:2", "B", after, tau_code[0], dirs[q], 1.0))
        # moving k-1 further cells in direction d
        for i in range(1, k):
            nxt = _plain(q) if i + 1 == k else f"{q}:#{i + 1}:3"
            for b in bin_alpha:
                entries.append((f"{q}:#{i}:3", b, nxt, b, dirs[q], 1.0))

    # the same (target, written, direction) can arise from several write-back chains
    merged: dict = {}
    for q, s, p, tau, d, a in entries:
        key = (q, s, p, tau, d)
        if key in merged and abs(merged[key] - a) > TOL:
            raise MachineError(f"conflicting construction entries at {key}")
        merged[key] = a
    partial = TransitionFunction.from_entries([(*key, a) for key, a in merged.items()])
    bin_frame = TuringFrame(tuple(states), bin_alpha, "B", _plain(frame.initial), _plain(frame.final))
    full = complete_unidirectional(partial, bin_frame)
    return BinaryTapeMachine(QTM(bin_frame, full), machine, k, codes)


# ---------------------------------------------------------------------------
# dovetailing


@dataclass(frozen=True)
class Dovetailed:
    """Composite machine plus the state renamings used to compare it with its parts."""

    machine: QTM
    first: QTM
    second: QTM

    def from_first(self, q: str) -> str:
        return f"2:{self.second.frame.initial}" if q == self.first.frame.final else f"1:{q}"

    def from_second(self, q: str) -> str:
        return f"2:{q}"


def dovetail(m1: QTM, m2: QTM) -> Dovetailed:
    """Run m1, then m2 from where m1 halts.

    m1's final state is identified with m2's initial state; m2's final state
    returns to m1's initial state, keeping the composite in normal form.
    """
    if m1.frame.alphabet != m2.frame.alphabet or m1.blank != m2.blank:
        raise MachineError("dovetailed machines must share the alphabet and blank")
    f1, f2 = m1.frame, m2.frame
    rename1 = {q: f"1:{q}" for q in f1.states}
    rename1[f1.final] = f"2:{f2.initial}"
    rename2 = {q: f"2:{q}" for q in f2.states}
    states = [rename1[q] for q in f1.states if q != f1.final] + [rename2[q] for q in f2.states]

    entries = []
    for q, s, p, tau, d, a in m1.delta.entries():
        if q == f1.final:
            continue
        entries.append((rename1[q], s, rename1[p], tau, d, a))
    for q, s, p, tau, d, a in m2.delta.entries():
        if q == f2.final:
            continue
        entries.append((rename2[q], s, rename2[p], tau, d, a))
    for s in f1.alphabet:
        entries.append((rename2[f2.final], s, rename1[f1.initial], s, 1, 1.0))
    frame = TuringFrame(tuple(states), f1.alphabet, f1.blank, rename1[f1.initial], rename2[f2.final])
    return Dovetailed(QTM(frame, TransitionFunction.from_entries(entries), check=m1.check and m2.check),
                      m1, m2)


# ---------------------------------------------------------------------------
# multi-tape machines


class MultiConfiguration(NamedTuple):
    state: str
    tapes: tuple  # tuple of Tape
    heads: tuple  # tuple of int


@dataclass(frozen=True)
class MultiTapeQTM:
    """k-tape machine; delta maps (q, symbols) -> ((p, written, moves, amplitude), ...)."""

    states: tuple
    alphabets: tuple
    delta: Mapping
    initial: str
    final: str

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabets", tuple(tuple(a) for a in self.alphabets))
        k = len(self.alphabets)
        clean = {}
        for (q, syms), row in self.delta.items():
            syms = tuple(syms)
            if len(syms) != k:
                raise MachineError(f"source {(q, syms)} does not read {k} tapes")
            entries = []
            for p, written, moves, amp in row:
                written, moves = tuple(written), tuple(moves)
                if len(written) != k or len(moves) != k or any(m not in DIRECTIONS for m in moves):
                    raise MachineError(f"malformed rule {(p, written, moves)} for {(q, syms)}")
                if abs(amp) >= PRUNE:
                    entries.append((p, written, moves, complex(amp)))
            clean[(q, syms)] = tuple(entries)
        object.__setattr__(self, "delta", clean)
        if self.initial == self.final:
            raise MachineError("initial and final states must differ")

    @property
    def k(self) -> int:
        return len(self.alphabets)

    @property
    def blanks(self) -> tuple:
        return tuple(a[0] for a in self.alphabets)

    def row_report(self, tol: float = TOL) -> tuple[ConditionResult, ConditionResult]:
        """Row normalization and pairwise row orthogonality over all sources."""
        sources = [(q, syms) for q in self.states for syms in product(*self.alphabets)]
        norms = {s: sum(abs(a) ** 2 for *_, a in self.delta.get(s, ())) for s in sources}
        cond_a = _worst("a", norms, lambda s: 1.0, tol)
        by_target: dict = defaultdict(list)
        for src, row in self.delta.items():
            for p, w, m, a in row:
                by_target[(p, w, m)].append((src, a))
        order = {s: i for i, s in enumerate(sources)}
        overlaps: dict = defaultdict(complex)
        for members in by_target.values():
            for (s1, a1), (s2, a2) in product(members, members):
                if order[s1] < order[s2]:
                    overlaps[(s1, s2)] += a2.conjugate() * a1
        return cond_a, _worst("b", overlaps, lambda s: 0.0, tol)

    def initial_configuration(self, inputs: Sequence[Sequence[str]]) -> MultiConfiguration:
        inputs = list(inputs) + [()] * (self.k - len(inputs))
        tapes = tuple(tape_of(x, b) for x, b in zip(inputs, self.blanks))
        return MultiConfiguration(self.initial, tapes, (0,) * self.k)


def evolve_multitape(machine: MultiTapeQTM, state: SparseState) -> SparseState:
    out: dict = defaultdict(complex)
    blanks = machine.blanks
    for (q, tapes, heads), amp in state.items():
        syms = tuple(read(t, h, b) for t, h, b in zip(tapes, heads, blanks))
        for p, written, moves, a in machine.delta.get((q, syms), ()):
            new_tapes = tuple(write(t, h, w, b) for t, h, w, b in zip(tapes, heads, written, blanks))
            new_heads = tuple(h + m for h, m in zip(heads, moves))
            out[MultiConfiguration(p, new_tapes, new_heads)] += a * amp
    return SparseState(out)
