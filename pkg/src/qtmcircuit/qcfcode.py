"""Circuit codes: PC-, R- and G-flavoured serializations, the QFT family, size tables.

Canonical text (no whitespace anywhere)::

    PC|<width>|(<constants>,<entries>,<outputs>)
    R|<width>|(<constants>,<entries>,<outputs>)
    G|<width>|<table>|(<constants>,<entries>,<outputs>)

* constants: ``((i,S(i)),...)`` for every non-input wire, ascending;
* outputs: ``(j1,...,jm)``;
* PC entries: ``((h,angle),w)`` for R_{h,angle} and ``(4,i,j)`` for M2(N);
* R entries: ``(h,w)`` for R_{h,R} and ``(4,i,j)``;
* G entries: ``(g,w1,...,wk)`` with g a 1-based index into the table.

Table items are ``M2N``, ``R1:<angle>`` (likewise R2, R3), ``G2:<l0>:<lam>:<t>``
for the compiler's flag-swap gate, or ``(arity,((r,c,re,im),...))`` with
exact rational entries.  Angles are ``pi*p/q``, ``R*k`` or ``p/q``.
Parsing is strict: any text that does not re-serialize to itself is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .angles import Angle
from .circuit import CNOT, Circuit, CircuitStep, Gate, IOCircuit, complete_wiring, make_elementary

FLAVORS = ("PC", "R", "G")


class CodecError(ValueError):
    """Malformed, non-canonical or unencodable circuit codes."""


# ---------------------------------------------------------------------------
# nested list tokenizer


def _parse_nested(text: str):
    pos = 0

    def item():
        nonlocal pos
        if pos < len(text) and text[pos] == "(":
            pos += 1
            out = []
            if pos < len(text) and text[pos] == ")":
                pos += 1
                return out
            while True:
                out.append(item())
                if pos >= len(text):
                    raise CodecError("unterminated list")
                if text[pos] == ",":
                    pos += 1
                    continue
                if text[pos] == ")":
                    pos += 1
                    return out
                raise CodecError(f"unexpected {text[pos]!r} at {pos}")
        start = pos
        while pos < len(text) and text[pos] not in "(),":
            pos += 1
        if start == pos:
            raise CodecError(f"empty atom at {pos}")
        return text[start:pos]

    result = item()
    if pos != len(text):
        raise CodecError(f"trailing text at {pos}")
    return result


def _nested_text(obj) -> str:
    if isinstance(obj, list):
        return "(" + ",".join(_nested_text(o) for o in obj) + ")"
    return str(obj)


def _int(atom, what="integer") -> int:
    if not isinstance(atom, str):
        raise CodecError(f"expected {what}, got a list")
    try:
        value = int(atom)
    except ValueError:
        raise CodecError(f"expected {what}, got {atom!r}") from None
    if str(value) != atom:
        raise CodecError(f"non-canonical {what} {atom!r}")
    return value


def _frac(atom) -> Fraction:
    if not isinstance(atom, str) or "/" not in atom:
        raise CodecError(f"expected a rational p/q, got {atom!r}")
    num, den = atom.split("/", 1)
    value = Fraction(_int(num), _int(den))
    if f"{value.numerator}/{value.denominator}" != atom:
        raise CodecError(f"non-canonical rational {atom!r}")
    return value


def _frac_text(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# entries


@dataclass(frozen=True)
class RotationEntry:
    """PC-code R_{index, angle} on ``wire``."""
    index: int
    angle: Angle
    wire: int

    def items(self):
        return [[str(self.index), self.angle.token()], str(self.wire)]


@dataclass(frozen=True)
class CnotEntry:
    i: int
    j: int

    def items(self):
        return ["4", str(self.i), str(self.j)]


@dataclass(frozen=True)
class GrEntry:
    """R-code R_{index, R} on ``wire``."""
    index: int
    wire: int

    def items(self):
        return [str(self.index), str(self.wire)]


@dataclass(frozen=True)
class TableEntry:
    """G-code: table gate ``gate`` (1-based) on ``wires``."""
    gate: int
    wires: tuple

    def items(self):
        return [str(self.gate)] + [str(w) for w in self.wires]


# ---------------------------------------------------------------------------
# gate table items


@dataclass(frozen=True)
class TableGate:
    """``kind`` is 'elementary' (text token), 'flagswap' ((l0, lam, t)) or 'matrix'."""
    kind: str
    token: str = ""
    arity: int = 0
    entries: tuple = ()  # ((r, c, re, im), ...) with Fractions

    def text(self) -> str:
        if self.kind == "matrix":
            nz = [[str(r), str(c), _frac_text(re), _frac_text(im)] for r, c, re, im in self.entries]
            return _nested_text([str(self.arity), nz])
        return self.token

    def gate(self) -> Gate:
        if self.kind == "elementary":
            if self.token == "M2N":
                return CNOT
            tag, ang = self.token.split(":", 1)
            return make_elementary(tag, Angle.parse(ang))
        if self.kind == "flagswap":
            from .compiler import CellLayout, build_G2

            _, l0, lam, t = self.token.split(":")
            return build_G2(CellLayout(int(l0), int(lam), int(t)))
        dim = 1 << self.arity
        rows = [e[0] for e in self.entries]
        cols = [e[1] for e in self.entries]
        vals = [complex(float(e[2]), float(e[3])) for e in self.entries]
        m = sp.csc_matrix((np.asarray(vals, complex), (rows, cols)), shape=(dim, dim))
        label = "custom"
        return Gate(self.arity, sparse=m, label=label, check=self.arity <= 13)

    @classmethod
    def from_gate(cls, gate: Gate) -> "TableGate":
        if gate.label == "M2N":
            return cls("elementary", "M2N")
        if gate.label in ("R1", "R2", "R3") and isinstance(gate.params[0], Angle):
            return cls("elementary", f"{gate.label}:{gate.params[0].token()}")
        if gate.label == "G2" and len(gate.params) == 3:
            l0, lam, t = gate.params
            return cls("flagswap", f"G2:{l0}:{lam}:{t}")
        if gate.arity > 13:
            raise CodecError(f"gate {gate.label} is too wide for a matrix payload")
        coo = sp.coo_matrix(gate.csc())
        order = np.lexsort((coo.col, coo.row))
        entries = tuple((int(coo.row[k]), int(coo.col[k]), Fraction(float(coo.data[k].real)),
                         Fraction(float(coo.data[k].imag))) for k in order if coo.data[k] != 0)
        return cls("matrix", arity=gate.arity, entries=entries)

    @classmethod
    def parse(cls, obj) -> "TableGate":
        if isinstance(obj, list):
            if len(obj) != 2 or not isinstance(obj[1], list):
                raise CodecError("matrix table item must be (arity,(entries))")
            arity = _int(obj[0], "arity")
            if arity < 1:
                raise CodecError("arity must be positive")
            entries = []
            for e in obj[1]:
                if not isinstance(e, list) or len(e) != 4:
                    raise CodecError("matrix entries are (row,col,re,im)")
                r, c = _int(e[0]), _int(e[1])
                if not (0 <= r < 1 << arity and 0 <= c < 1 << arity):
                    raise CodecError("matrix entry out of range")
                entries.append((r, c, _frac(e[2]), _frac(e[3])))
            return cls("matrix", arity=arity, entries=tuple(entries))
        if obj == "M2N":
            return cls("elementary", "M2N")
        parts = obj.split(":")
        if parts[0] in ("R1", "R2", "R3") and len(parts) == 2:
            Angle.parse(parts[1])
            return cls("elementary", obj)
        if parts[0] == "G2" and len(parts) == 4:
            for p in parts[1:]:
                _int(p)
            return cls("flagswap", obj)
        raise CodecError(f"unknown table item {obj!r}")


# ---------------------------------------------------------------------------
# codes


@dataclass(frozen=True)
class CircuitCode:
    flavor: str
    width: int
    constants: tuple  # ((wire, bit), ...)
    entries: tuple
    outputs: tuple
    table: tuple = ()

    def text(self) -> str:
        body = [[[str(w), str(b)] for w, b in self.constants],
                [e.items() for e in self.entries],
                [str(j) for j in self.outputs]]
        head = f"{self.flavor}|{self.width}|"
        if self.flavor == "G":
            head += "(" + ",".join(t.text() for t in self.table) + ")|"
        return head + _nested_text(body)

    def __str__(self) -> str:
        return self.text()

    def __len__(self) -> int:
        return len(self.entries)


def _check_wire(w: int, width: int):
    if w < 1 or w > width:
        raise CodecError(f"wire {w} outside [1, {width}]")


def parse_code(text: str) -> CircuitCode:
    """Strict parser for the canonical text."""
    text = text.strip("\n")
    parts = text.split("|")
    if not parts or parts[0] not in FLAVORS:
        raise CodecError("code must start with PC|, R| or G|")
    flavor = parts[0]
    expected = 4 if flavor == "G" else 3
    if len(parts) != expected:
        raise CodecError(f"{flavor} code needs {expected} '|'-separated fields")
    width = _int(parts[1], "width")
    if width < 1:
        raise CodecError("width must be positive")
    table: tuple = ()
    if flavor == "G":
        tab = _parse_nested(parts[2])
        if not isinstance(tab, list):
            raise CodecError("gate table must be a list")
        table = tuple(TableGate.parse(t) for t in tab)
        if len(set(table)) != len(table):
            raise CodecError("gate table items must be distinct")
    body = _parse_nested(parts[-1])
    if not isinstance(body, list) or len(body) != 3 or not all(isinstance(b, list) for b in body):
        raise CodecError("body must be (constants,entries,outputs)")
    consts = []
    for c in body[0]:
        if not isinstance(c, list) or len(c) != 2:
            raise CodecError("constants are (wire,bit) pairs")
        w, b = _int(c[0]), _int(c[1])
        _check_wire(w, width)
        if b not in (0, 1):
            raise CodecError("constant bits must be 0 or 1")
        consts.append((w, b))
    if [w for w, _ in consts] != sorted({w for w, _ in consts}):
        raise CodecError("constant wires must be strictly ascending")
    outputs = tuple(_int(j) for j in body[2])
    for j in outputs:
        _check_wire(j, width)
    if len(set(outputs)) != len(outputs):
        raise CodecError("output wires repeat")
    entries = tuple(_parse_entry(e, flavor, width, table) for e in body[1])
    code = CircuitCode(flavor, width, tuple(consts), entries, outputs, table)
    if code.text() != text:
        raise CodecError("code is not in canonical form")
    return code


def _parse_entry(e, flavor: str, width: int, table: tuple):
    if not isinstance(e, list) or not e:
        raise CodecError("entries are non-empty lists")
    if flavor in ("PC", "R") and isinstance(e[0], str) and e[0] == "4":
        if len(e) != 3:
            raise CodecError("controlled-not entries are (4,i,j)")
        i, j = _int(e[1]), _int(e[2])
        _check_wire(i, width)
        _check_wire(j, width)
        if i == j:
            raise CodecError("controlled-not wires must differ")
        return CnotEntry(i, j)
    if flavor == "PC":
        if len(e) != 2 or not isinstance(e[0], list) or len(e[0]) != 2:
            raise CodecError("PC rotation entries are ((h,angle),w)")
        h = _int(e[0][0])
        if h not in (1, 2, 3):
            raise CodecError(f"rotation index {h} not in 1..3")
        if not isinstance(e[0][1], str):
            raise CodecError("angle must be a token")
        try:
            angle = Angle.parse(e[0][1])
        except ValueError as exc:
            raise CodecError(str(exc)) from None
        w = _int(e[1])
        _check_wire(w, width)
        return RotationEntry(h, angle, w)
    if flavor == "R":
        if len(e) != 2:
            raise CodecError("R entries are (h,w) or (4,i,j)")
        h, w = _int(e[0]), _int(e[1])
        if h not in (1, 2, 3):
            raise CodecError(f"rotation index {h} not in 1..3")
        _check_wire(w, width)
        return GrEntry(h, w)
    g = _int(e[0])
    if g < 1 or g > len(table):
        raise CodecError(f"table index {g} out of range")
    wires = tuple(_int(w) for w in e[1:])
    for w in wires:
        _check_wire(w, width)
    if len(set(wires)) != len(wires):
        raise CodecError("entry wires repeat")
    need = table[g - 1].arity if table[g - 1].kind == "matrix" else _table_arity(table[g - 1])
    if len(wires) != need:
        raise CodecError(f"table gate {g} needs {need} wires, got {len(wires)}")
    return TableEntry(g, wires)


def _table_arity(item: TableGate) -> int:
    if item.kind == "elementary":
        return 2 if item.token == "M2N" else 1
    _, l0, lam, t = item.token.split(":")
    return int(l0) + (2 * int(t) + 1) * (2 + int(lam))


def encode(io: IOCircuit, flavor: str, table: Sequence[Gate] | None = None) -> CircuitCode:
    """Code of an IOCircuit.  Inputs must be the ascending non-constant wires."""
    if flavor not in FLAVORS:
        raise CodecError(f"unknown flavor {flavor!r}")
    circ = io.circuit
    if list(io.inputs) != sorted(io.inputs):
        raise CodecError("input wires must be listed in ascending order")
    entries = []
    items: list[TableGate] = []
    gates: list[Gate] = list(table or [])
    items = [TableGate.from_gate(g) for g in gates]
    for step in circ.steps:
        g, pins = step.gate, step.pins
        if flavor == "G":
            idx = next((k for k, h in enumerate(gates) if h is g or h.same_as(g)), None)
            if idx is None:
                if table is not None:
                    raise CodecError(f"gate {g.label} is not in the declared table")
                gates.append(g)
                items.append(TableGate.from_gate(g))
                idx = len(gates) - 1
            entries.append(TableEntry(idx + 1, tuple(pins)))
        elif g.label == "M2N":
            entries.append(CnotEntry(*pins))
        elif g.label in ("R1", "R2", "R3"):
            h = int(g.label[1])
            ang = g.params[0]
            if flavor == "R":
                if not (isinstance(ang, Angle) and ang.kind == "R" and ang.q == 1):
                    raise CodecError("R-codes admit only R_{i,R} rotations")
                entries.append(GrEntry(h, pins[0]))
            else:
                if not isinstance(ang, Angle):
                    raise CodecError("PC-code rotation without an exact angle token")
                entries.append(RotationEntry(h, ang, pins[0]))
        else:
            raise CodecError(f"{flavor}-codes cannot hold gate {g.label}")
    return CircuitCode(flavor, circ.width, tuple(sorted(io.constants.items())), tuple(entries),
                       tuple(io.outputs), tuple(items) if flavor == "G" else ())


def decode(code: CircuitCode | str) -> IOCircuit:
    if isinstance(code, str):
        code = parse_code(code)
    n = code.width
    table_gates = [t.gate() for t in code.table]
    r_gates = {h: make_elementary(f"R{h}", Angle.r(1)) for h in (1, 2, 3)}
    steps = []
    for e in code.entries:
        if isinstance(e, CnotEntry):
            steps.append(CircuitStep(CNOT, complete_wiring((e.i, e.j), n)))
        elif isinstance(e, RotationEntry):
            steps.append(CircuitStep(make_elementary(f"R{e.index}", e.angle), complete_wiring((e.wire,), n)))
        elif isinstance(e, GrEntry):
            steps.append(CircuitStep(r_gates[e.index], complete_wiring((e.wire,), n)))
        else:
            steps.append(CircuitStep(table_gates[e.gate - 1], complete_wiring(e.wires, n)))
    consts = dict(code.constants)
    inputs = tuple(w for w in range(1, n + 1) if w not in consts)
    return IOCircuit(Circuit(n, tuple(steps)), inputs, code.outputs, consts)


# ---------------------------------------------------------------------------
# readable circuit listing (used by the CLI codec)


def circuit_text(io: IOCircuit) -> str:
    """Line-oriented listing; canonical so that text -> code -> text is byte-exact."""
    lines = [f"width {io.circuit.width}",
             "inputs" + "".join(f" {w}" for w in io.inputs),
             "constants" + "".join(f" {w}={b}" for w, b in sorted(io.constants.items())),
             "outputs" + "".join(f" {w}" for w in io.outputs)]
    for step in io.circuit.steps:
        g = step.gate
        wires = " ".join(str(w) for w in step.pins)
        if g.label == "M2N":
            lines.append(f"M2N {wires}")
        elif g.label in ("R1", "R2", "R3"):
            ang = g.params[0]
            if not isinstance(ang, Angle):
                raise CodecError("listing needs exact angle tokens")
            lines.append(f"{g.label} {ang.token()} {wires}")
        else:
            lines.append(f"GATE {TableGate.from_gate(g).text()} {wires}")
    return "\n".join(lines) + "\n"


def parse_circuit_text(text: str) -> IOCircuit:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 4:
        raise CodecError("listing needs width, inputs, constants and outputs lines")
    heads = ["width", "inputs", "constants", "outputs"]
    fields = []
    for head, line in zip(heads, lines[:4]):
        parts = line.split(" ")
        if parts[0] != head:
            raise CodecError(f"expected a {head!r} line, got {line!r}")
        fields.append(parts[1:])
    if len(fields[0]) != 1:
        raise CodecError("width line takes one number")
    n = _int(fields[0][0], "width")
    inputs = tuple(_int(w) for w in fields[1])
    consts = {}
    for item in fields[2]:
        w, _, b = item.partition("=")
        consts[_int(w)] = _int(b)
    outputs = tuple(_int(w) for w in fields[3])
    steps = []
    for line in lines[4:]:
        parts = line.split(" ")
        tag = parts[0]
        try:
            if tag == "M2N":
                gate, wires = CNOT, parts[1:]
            elif tag in ("R1", "R2", "R3"):
                gate, wires = make_elementary(tag, Angle.parse(parts[1])), parts[2:]
            elif tag == "GATE":
                gate, wires = TableGate.parse(_parse_nested(parts[1])).gate(), parts[2:]
            else:
                raise CodecError(f"unknown gate line {line!r}")
            steps.append(CircuitStep.on(gate, [_int(w) for w in wires], n))
        except ValueError as exc:
            raise CodecError(f"bad gate line {line!r}: {exc}") from None
    try:
        io = IOCircuit(Circuit(n, tuple(steps)), inputs, outputs, consts)
    except ValueError as exc:
        raise CodecError(str(exc)) from None
    if circuit_text(io) != text:
        raise CodecError("listing is not in canonical form")
    return io


# ---------------------------------------------------------------------------
# QFT family and size accounting


def a_entries(j: int) -> list:
    """c^j(A): R_{3,pi} then R_{1,pi/4} on wire j (a Hadamard)."""
    return [RotationEntry(3, Angle.pi(1), j), RotationEntry(1, Angle.pi(1, 4), j)]


def b_entries(i: int, j: int, k: int) -> list:
    """c^{ij}(B_k): seven entries realizing diag(1, 1, 1, exp(i pi / 2^k)) on (i, j)."""
    small = 2 ** (k + 2)
    return [RotationEntry(3, Angle.pi(1, 2 ** (k + 1)), i),
            RotationEntry(2, Angle.pi(-1, small), j),
            RotationEntry(3, Angle.pi(1, small), j),
            CnotEntry(i, j),
            RotationEntry(2, Angle.pi(1, small), j),
            RotationEntry(3, Angle.pi(-1, small), j),
            CnotEntry(i, j)]


def qft_family(n: int) -> CircuitCode:
    """PC-code of K_n: c^1(A), then for j = 2..n the ladder c^{1j}(B_{j-1}) ... c^{(j-1)j}(B_1), c^j(A)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    entries = a_entries(1)
    for j in range(2, n + 1):
        for i in range(1, j):
            entries += b_entries(i, j, j - i)
        entries += a_entries(j)
    return CircuitCode("PC", n, (), tuple(entries), tuple(range(1, n + 1)))


def qft_size(n: int) -> int:
    return 2 * n + 7 * n * (n - 1) // 2


def bit_reverse_permutation(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    return rev


def dft_matrix(n: int) -> np.ndarray:
    """|a> -> 2^{-n/2} sum_c exp(2 pi i a c / 2^n) |c>."""
    d = 1 << n
    a = np.arange(d)
    return np.exp(2j * np.pi * np.outer(a, a) / d) / np.sqrt(d)


def qft_reference(n: int) -> np.ndarray:
    """The matrix G(K_n) equals: the DFT on the input (wire 1 most significant)
    followed by a reversal of the output wires."""
    p = bit_reverse_permutation(n)
    return dft_matrix(n)[p, :]


@dataclass(frozen=True)
class FamilyGenerator:
    name: str
    generate: Callable[[int], CircuitCode]
    size: Callable[[int], int]


QFT_FAMILY = FamilyGenerator("qft", qft_family, qft_size)
EMPTY_FAMILY = FamilyGenerator("empty", lambda n: CircuitCode("PC", n, (), (), tuple(range(1, n + 1))),
                               lambda n: 0)


def family_size(gen: FamilyGenerator, n_max: int) -> list[tuple[int, int]]:
    if n_max > 12:
        raise ValueError("family_size is limited to n <= 12")
    table = []
    for n in range(1, n_max + 1):
        count = len(gen.generate(n).entries)
        if count > gen.size(n):
            raise AssertionError(f"{gen.name}: {count} entries exceed declared size {gen.size(n)} at n={n}")
        table.append((n, count))
    return table
