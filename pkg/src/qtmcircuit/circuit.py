"""Quantum gates, wirings, circuits and output distributions.

Wires are numbered 1..n and wire 1 is the most significant bit of a basis
index.  A step ``(G, pi)`` attaches pin j of G to wire ``pi[j-1]``; the
circuit applies its steps first to last, so the circuit operator is
``U_m ... U_1``.

Gates come in three storage kinds: dense matrices, scipy sparse matrices,
and reversible Boolean gates given as a vectorized map on local basis
indices.  All kinds can act on dense state vectors and on sparse
(index, amplitude) vectors, which is what lets compiled circuits with more
than twenty wires run when only a few basis states carry amplitude.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .angles import Angle, angle_value
from .distribution import Distribution

TOL = 1e-9
PRUNE = 1e-15
DENSE_WIDTH = 20
MAX_WIDTH = 62


class CircuitError(ValueError):
    """Raised for malformed gates, wirings or circuits."""


class Gate:
    """An n-bit unitary.  Exactly one of ``matrix``, ``sparse`` or ``basis_map`` is given."""

    __slots__ = ("arity", "label", "params", "_matrix", "_sparse", "_map", "_csc")

    def __init__(self, arity: int, *, matrix=None, sparse=None,
                 basis_map: Callable[[np.ndarray], np.ndarray] | None = None,
                 label: str = "custom", params: tuple = (), check: bool = True):
        if sum(x is not None for x in (matrix, sparse, basis_map)) != 1:
            raise CircuitError("give exactly one of matrix, sparse, basis_map")
        if arity < 1:
            raise CircuitError("gate arity must be positive")
        self.arity = int(arity)
        self.label = label
        self.params = tuple(params)
        dim = 1 << self.arity
        self._matrix = self._sparse = self._map = self._csc = None
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=complex)
            if matrix.shape != (dim, dim):
                raise CircuitError(f"matrix shape {matrix.shape} does not match arity {arity}")
            matrix.setflags(write=False)
            self._matrix = matrix
        elif sparse is not None:
            sparse = sp.csc_matrix(sparse, dtype=complex)
            if sparse.shape != (dim, dim):
                raise CircuitError(f"matrix shape {sparse.shape} does not match arity {arity}")
            self._sparse = sparse
        else:
            self._map = basis_map
        if check:
            err = self.unitarity_error()
            if err > TOL:
                raise CircuitError(f"gate {label} is not unitary (error {err:.3e})")

    @property
    def kind(self) -> str:
        if self._matrix is not None:
            return "dense"
        return "sparse" if self._sparse is not None else "map"

    @property
    def dim(self) -> int:
        return 1 << self.arity

    def unitarity_error(self) -> float:
        """max |U^dagger U - I| entry; 0 for verified bijective maps; nan if unchecked."""
        if self._matrix is not None:
            if self.arity > 13:
                return float("nan")
            m = self._matrix
            return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))
        if self._sparse is not None:
            d = (self._sparse.conj().T @ self._sparse - sp.identity(self.dim, format="csc")).tocoo()
            return float(np.max(np.abs(d.data))) if d.nnz else 0.0
        if self.arity > 24:
            return float("nan")
        out = np.asarray(self._map(np.arange(self.dim, dtype=np.int64)))
        ok = out.shape == (self.dim,) and np.array_equal(np.sort(out), np.arange(self.dim))
        return 0.0 if ok else float("inf")

    def map_indices(self, local: np.ndarray) -> np.ndarray:
        if self._map is None:
            raise CircuitError("not a Boolean gate")
        return np.asarray(self._map(np.asarray(local, dtype=np.int64)), dtype=np.int64)

    def csc(self) -> sp.csc_matrix:
        if self._csc is None:
            if self._sparse is not None:
                self._csc = self._sparse
            elif self._matrix is not None:
                self._csc = sp.csc_matrix(self._matrix)
            else:
                cols = np.arange(self.dim, dtype=np.int64)
                self._csc = sp.csc_matrix((np.ones(self.dim, complex), (self.map_indices(cols), cols)),
                                          shape=(self.dim, self.dim))
        return self._csc

    def dense(self) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix
        if self.arity > 14:
            raise CircuitError(f"refusing to densify a {self.arity}-bit gate")
        return self.csc().toarray()

    def __repr__(self) -> str:
        extra = ", ".join(str(p) for p in self.params)
        return f"Gate({self.label}{'(' + extra + ')' if extra else ''}, arity={self.arity})"

    def same_as(self, other: "Gate") -> bool:
        """Structural equality for labelled elementary gates, matrix equality otherwise."""
        if self.label != other.label or self.arity != other.arity:
            return False
        if self.label in ELEMENTARY:
            return self.params == other.params
        if self.arity > 12:
            return self is other
        return bool(np.array_equal(self.dense(), other.dense()))


# ---------------------------------------------------------------------------
# elementary gates

ELEMENTARY = ("R1", "R2", "R3", "M2N", "Bk")


def r1_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def r2_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(1j * theta), 1.0]).astype(complex)


def r3_matrix(theta: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * theta)]).astype(complex)


def _cnot_map(local: np.ndarray) -> np.ndarray:
    # xy -> x (x xor y); pin 1 (the control) is the high bit
    return local ^ (local >> 1)


_ROTATIONS = {"R1": r1_matrix, "R2": r2_matrix, "R3": r3_matrix}


def make_elementary(tag: str, angle: float | Angle | None = None, k: int | None = None) -> Gate:
    """R1/R2/R3 (angle required), M2N (controlled-not, pin 1 controls), Bk (k >= 1)."""
    if tag in _ROTATIONS:
        if angle is None:
            raise CircuitError(f"{tag} needs an angle")
        return Gate(1, matrix=_ROTATIONS[tag](angle_value(angle)), label=tag, params=(angle,), check=False)
    if tag == "M2N":
        return Gate(2, basis_map=_cnot_map, label="M2N", check=False)
    if tag == "Bk":
        if k is None or k < 1:
            raise CircuitError("Bk needs an integer k >= 1")
        return Gate(2, matrix=np.diag([1, 1, 1, np.exp(1j * math.pi / 2 ** k)]), label="Bk",
                    params=(k,), check=False)
    raise CircuitError(f"unknown elementary gate tag {tag!r}")


CNOT = make_elementary("M2N")


# ---------------------------------------------------------------------------
# steps and circuits


def complete_wiring(pins: Sequence[int], width: int) -> tuple[int, ...]:
    """Full permutation of [1, width] starting with ``pins``; unused wires ascending."""
    pins = tuple(int(p) for p in pins)
    if len(set(pins)) != len(pins):
        raise CircuitError(f"wiring {pins} repeats a wire")
    if any(p < 1 or p > width for p in pins):
        raise CircuitError(f"wiring {pins} leaves [1, {width}]")
    used = set(pins)
    return pins + tuple(w for w in range(1, width + 1) if w not in used)


@dataclass(frozen=True)
class CircuitStep:
    gate: Gate
    wiring: tuple

    def __post_init__(self):
        w = tuple(self.wiring)
        object.__setattr__(self, "wiring", w)
        if sorted(w) != list(range(1, len(w) + 1)):
            raise CircuitError(f"wiring {w} is not a permutation of [1, {len(w)}]")
        if self.gate.arity > len(w):
            raise CircuitError("gate arity exceeds circuit width")

    @classmethod
    def on(cls, gate: Gate, wires: Sequence[int], width: int) -> "CircuitStep":
        if len(wires) != gate.arity:
            raise CircuitError(f"{gate.label} needs {gate.arity} wires, got {len(wires)}")
        return cls(gate, complete_wiring(wires, width))

    @property
    def pins(self) -> tuple[int, ...]:
        return self.wiring[: self.gate.arity]


@dataclass(frozen=True)
class Circuit:
    width: int
    steps: tuple = ()

    def __post_init__(self):
        if self.width < 1 or self.width > MAX_WIDTH:
            raise CircuitError(f"width must be in [1, {MAX_WIDTH}]")
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        for s in steps:
            if len(s.wiring) != self.width:
                raise CircuitError("step wiring does not match circuit width")

    def __len__(self) -> int:
        return len(self.steps)

    def then(self, gate: Gate, *wires: int) -> "Circuit":
        return Circuit(self.width, self.steps + (CircuitStep.on(gate, wires, self.width),))

    def gate_counts(self) -> Counter:
        return Counter(s.gate.label for s in self.steps)


def circuit_from(width: int, placements: Iterable[tuple[Gate, Sequence[int]]]) -> Circuit:
    return Circuit(width, tuple(CircuitStep.on(g, w, width) for g, w in placements))


def concat(c1: Circuit, c2: Circuit) -> Circuit:
    """c2 after c1, i.e. the composition c2 o c1."""
    if c1.width != c2.width:
        raise CircuitError("concatenated circuits must have equal width")
    return Circuit(c1.width, c1.steps + c2.steps)


def power(c: Circuit, n: int) -> Circuit:
    if n < 0:
        raise CircuitError("power must be non-negative")
    return Circuit(c.width, c.steps * n)


# ---------------------------------------------------------------------------
# dense application


def apply_step_dense(state: np.ndarray, step: CircuitStep, width: int) -> np.ndarray:
    """Apply one step to a (2^width, ...) array (extra axes are batch axes)."""
    batch = state.shape[1:]
    m = step.gate.arity
    psi = state.reshape((2,) * width + batch)
    axes = [w - 1 for w in step.pins]
    psi = np.moveaxis(psi, axes, range(m))
    shape = psi.shape
    flat = psi.reshape(1 << m, -1)
    gate = step.gate
    if gate.kind == "map":
        out = np.empty_like(flat)
        out[gate.map_indices(np.arange(1 << m))] = flat
    elif gate.kind == "dense":
        out = gate.dense() @ flat
    else:
        out = gate.csc() @ flat
    psi = np.moveaxis(out.reshape(shape), range(m), axes)
    return psi.reshape(state.shape)


def apply_circuit(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    """G(K) applied to a dense state vector (or a batch of column vectors)."""
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != 1 << circuit.width:
        raise CircuitError(f"state has {state.shape[0]} amplitudes, circuit needs {1 << circuit.width}")
    for step in circuit.steps:
        state = apply_step_dense(state, step, circuit.width)
    return state


# ---------------------------------------------------------------------------
# sparse application


@dataclass(frozen=True)
class SparseVector:
    """Basis indices and amplitudes of a sparsely supported vector."""

    idx: np.ndarray
    amp: np.ndarray

    @classmethod
    def basis(cls, index: int) -> "SparseVector":
        return cls(np.array([index], dtype=np.int64), np.array([1.0], dtype=complex))

    @classmethod
    def from_dict(cls, terms: Mapping[int, complex]) -> "SparseVector":
        return cls(np.fromiter(terms.keys(), dtype=np.int64, count=len(terms)),
                   np.fromiter(terms.values(), dtype=complex, count=len(terms)))

    def to_dict(self) -> dict[int, complex]:
        return dict(zip(self.idx.tolist(), self.amp.tolist()))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))


def _local_index(idx: np.ndarray, pins: Sequence[int], width: int) -> np.ndarray:
    m = len(pins)
    local = np.zeros_like(idx)
    for j, w in enumerate(pins):
        local |= ((idx >> (width - w)) & 1) << (m - 1 - j)
    return local


def _scatter(local: np.ndarray, pins: Sequence[int], width: int) -> np.ndarray:
    m = len(pins)
    out = np.zeros_like(local)
    for j, w in enumerate(pins):
        out |= ((local >> (m - 1 - j)) & 1) << (width - w)
    return out


def _pin_mask(pins: Sequence[int], width: int) -> int:
    return sum(1 << (width - w) for w in pins)


def _combine(idx: np.ndarray, amp: np.ndarray) -> SparseVector:
    uniq, inv = np.unique(idx, return_inverse=True)
    acc = np.zeros(len(uniq), dtype=complex)
    np.add.at(acc, inv, amp)
    keep = np.abs(acc) >= PRUNE
    return SparseVector(uniq[keep], acc[keep])


def apply_step_sparse(vec: SparseVector, step: CircuitStep, width: int) -> SparseVector:
    """One step on a sparse vector; bits above ``width`` are carried along untouched."""
    pins = step.pins
    local = _local_index(vec.idx, pins, width)
    rest = vec.idx & ~np.int64(_pin_mask(pins, width))
    gate = step.gate
    if gate.kind == "map":
        return SparseVector(rest | _scatter(gate.map_indices(local), pins, width), vec.amp)
    csc = gate.csc()
    start = csc.indptr[local]
    counts = csc.indptr[local + 1] - start
    rep = np.repeat(np.arange(len(local)), counts)
    offsets = np.arange(len(rep)) - np.repeat(np.cumsum(counts) - counts, counts)
    pos = start[rep] + offsets
    new_idx = rest[rep] | _scatter(csc.indices[pos].astype(np.int64), pins, width)
    return _combine(new_idx, vec.amp[rep] * csc.data[pos])


def apply_circuit_sparse(circuit: Circuit, vec: SparseVector) -> SparseVector:
    for step in circuit.steps:
        vec = apply_step_sparse(vec, step, circuit.width)
    return vec


def sparse_unitary(circuit: Circuit) -> sp.csc_matrix:
    """G(K) as a sparse matrix, tracking all basis columns at once."""
    n = circuit.width
    if 2 * n > MAX_WIDTH:
        raise CircuitError("circuit too wide for the column-tagged sparse product")
    cols = np.arange(1 << n, dtype=np.int64)
    vec = SparseVector((cols << n) | cols, np.ones(1 << n, dtype=complex))
    vec = apply_circuit_sparse(circuit, vec)
    rows = vec.idx & ((1 << n) - 1)
    return sp.csc_matrix((vec.amp, (rows, vec.idx >> n)), shape=(1 << n, 1 << n))


def circuit_unitary(circuit: Circuit) -> Gate:
    """G(K) as a gate of arity ``width`` (dense up to 10 wires, sparse up to 20)."""
    n = circuit.width
    if n > DENSE_WIDTH:
        raise CircuitError(f"width {n} exceeds {DENSE_WIDTH}; use apply_circuit_sparse instead")
    if n <= 10:
        u = apply_circuit(circuit, np.eye(1 << n, dtype=complex))
        return Gate(n, matrix=u, label="circuit", check=n <= 8)
    return Gate(n, sparse=sparse_unitary(circuit), label="circuit", check=False)


def export_dense(gate: Gate) -> str:
    """Rows of ``re im`` pairs for oracle cross-checks."""
    m = gate.dense()
    return "\n".join(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row) for row in m) + "\n"


# ---------------------------------------------------------------------------
# input/output designation


@dataclass(frozen=True)
class IOCircuit:
    """(K, inputs, outputs, constants); constants cover every non-input wire."""

    circuit: Circuit
    inputs: tuple
    outputs: tuple
    constants: Mapping = field(default_factory=dict)

    def __post_init__(self):
        n = self.circuit.width
        inputs, outputs = tuple(self.inputs), tuple(self.outputs)
        constants = dict(sorted((int(w), int(b)) for w, b in dict(self.constants).items()))
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "constants", constants)
        for w in inputs + outputs + tuple(constants):
            if w < 1 or w > n:
                raise CircuitError(f"wire {w} outside [1, {n}]")
        if len(set(inputs)) != len(inputs) or len(set(outputs)) != len(outputs):
            raise CircuitError("input and output wire lists must not repeat")
        if set(constants) != set(range(1, n + 1)) - set(inputs):
            raise CircuitError("constants must cover exactly the non-input wires")
        if any(b not in (0, 1) for b in constants.values()):
            raise CircuitError("constants must be 0 or 1")

    @classmethod
    def make(cls, circuit: Circuit, inputs: Sequence[int], outputs: Sequence[int],
             constants: Mapping[int, int] | None = None) -> "IOCircuit":
        """Missing constants default to 0."""
        consts = {w: 0 for w in range(1, circuit.width + 1) if w not in set(inputs)}
        consts.update(constants or {})
        return cls(circuit, tuple(inputs), tuple(outputs), consts)

    def initial_index(self, x: str) -> int:
        if len(x) != len(self.inputs) or any(c not in "01" for c in x):
            raise CircuitError(f"input {x!r} must be a bit string of length {len(self.inputs)}")
        n = self.circuit.width
        bits = dict(self.constants)
        bits.update({w: int(c) for w, c in zip(self.inputs, x)})
        return sum(b << (n - w) for w, b in bits.items())


def run_io(io: IOCircuit, x: str) -> SparseVector:
    n = io.circuit.width
    start = io.initial_index(x)
    if n <= DENSE_WIDTH:
        psi = np.zeros(1 << n, dtype=complex)
        psi[start] = 1.0
        psi = apply_circuit(io.circuit, psi)
        nz = np.flatnonzero(np.abs(psi) >= PRUNE)
        return SparseVector(nz.astype(np.int64), psi[nz])
    return apply_circuit_sparse(io.circuit, SparseVector.basis(start))


def marginal(vec: SparseVector, wires: Sequence[int], width: int) -> Distribution:
    probs = np.abs(vec.amp) ** 2
    if not wires:
        return Distribution({"": float(probs.sum())})
    local = _local_index(vec.idx, wires, width)
    uniq, inv = np.unique(local, return_inverse=True)
    acc = np.bincount(inv, weights=probs)
    m = len(wires)
    return Distribution({format(int(u), f"0{m}b"): float(p) for u, p in zip(uniq, acc)})


def output_distribution(io: IOCircuit, x: str) -> Distribution:
    """rho^K(y|x) over the output wires, y listed in output-wire order."""
    return marginal(run_io(io, x), io.outputs, io.circuit.width)
