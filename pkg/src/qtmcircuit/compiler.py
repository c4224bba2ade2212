"""Compile a single-tape machine and a step budget t into a circuit over {G1, G2}.

The circuit has ``l0 + (2t+1) l`` wires: ``l0 = ceil(log|Q|)`` processor
wires (cell P) followed by 2t+1 tape cells of ``l = 2 + ceil(log|Sigma|)``
wires each, symbol bits first and then two flag bits.  Flag values
00, 01, 10 mean "idle", "head here" and "head just moved here".

``G1`` acts on P and three neighbouring cells and performs one machine step
around a cell flagged 01; ``G2`` turns every 10 flag into 01.  The compiled
circuit is ``(K2 o K1)^t`` where K1 places 2t-1 copies of G1 on cells
(j-t-1, j-t, j-t+1), j = 1..2t-1, and K2 is one G2 over all cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .circuit import (CNOT, Circuit, CircuitStep, Gate, SparseVector, apply_circuit_sparse,
                      complete_wiring, marginal)
from .decompose import Decomposition, decompose_unitary
from .distribution import Distribution, total_variation
from .machine import QTM, MachineError, measure_window, split_input

TOL = 1e-9
IDLE, HEAD, MOVED = 0b00, 0b01, 0b10


class CompileError(ValueError):
    """Raised when a machine cannot be compiled or the gate constraints are inconsistent."""


def _ceil_log2(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


@dataclass(frozen=True)
class CellLayout:
    l0: int
    lam: int
    t: int

    @classmethod
    def for_machine(cls, machine: QTM, t: int) -> "CellLayout":
        return cls(_ceil_log2(len(machine.frame.states)), _ceil_log2(len(machine.frame.alphabet)), t)

    @property
    def l(self) -> int:
        return 2 + self.lam

    @property
    def cells(self) -> range:
        return range(-self.t, self.t + 1)

    @property
    def width(self) -> int:
        return self.l0 + (2 * self.t + 1) * self.l

    def cell_wires(self, cell: int) -> list[int]:
        base = self.l0 + (cell + self.t) * self.l
        return list(range(base + 1, base + self.l + 1))

    def symbol_wires(self, cell: int) -> list[int]:
        return self.cell_wires(cell)[: self.lam]

    def flag_wires(self, cell: int) -> list[int]:
        return self.cell_wires(cell)[self.lam:]

    @property
    def p_wires(self) -> list[int]:
        return list(range(1, self.l0 + 1))

    def g1_wires(self, centre: int) -> list[int]:
        """Wires of the G1 connected with cells centre-1, centre, centre+1."""
        wires = self.p_wires
        for c in (centre - 1, centre, centre + 1):
            wires += self.cell_wires(c)
        return wires


# ---------------------------------------------------------------------------
# G1


class _G1Index:
    """Basis indexing of the (l0 + 3l)-bit G1 space."""

    def __init__(self, machine: QTM):
        frame = machine.frame
        self.l0 = _ceil_log2(len(frame.states))
        self.lam = _ceil_log2(len(frame.alphabet))
        self.l = 2 + self.lam
        self.arity = self.l0 + 3 * self.l
        self.q = {s: i for i, s in enumerate(frame.states)}
        self.s = {s: i for i, s in enumerate(frame.alphabet)}

    def __call__(self, q, cells) -> int:
        idx = self.q[q]
        for sym, flag in cells:
            idx = (idx << self.l) | (self.s[sym] << 2) | flag
        return idx


def _columns(vectors: list[dict], dim: int) -> sp.csc_matrix:
    rows, cols, vals = [], [], []
    for j, vec in enumerate(vectors):
        for i, a in vec.items():
            rows.append(i)
            cols.append(j)
            vals.append(a)
    return sp.csc_matrix((np.asarray(vals, complex), (rows, cols)), shape=(dim, len(vectors)))


def _add(vec: dict, i: int, a: complex):
    vec[i] = vec.get(i, 0) + a


def g1_subspaces(machine: QTM):
    """(W, V, H-extra, index) as sparse column matrices; H's basis-state part is implicit."""
    ix = _G1Index(machine)
    frame = machine.frame
    dim = 1 << ix.arity
    Q, S = frame.states, frame.alphabet
    w_vecs, v_vecs = [], []
    for p, s1, s, s3 in product(Q, S, S, S):
        w_vecs.append({ix(p, [(s1, IDLE), (s, HEAD), (s3, IDLE)]): 1.0})
        v: dict = {}
        for q, tau, d, a in machine.delta.row(p, s):
            cells = {-1: [(s1, MOVED), (tau, IDLE), (s3, IDLE)],
                     0: [(s1, IDLE), (tau, MOVED), (s3, IDLE)],
                     1: [(s1, IDLE), (tau, IDLE), (s3, MOVED)]}[d]
            _add(v, ix(q, cells), a)
        v_vecs.append(v)
    h_vecs = []
    for p, s, s2, s3 in product(Q, S, S, S):
        u: dict = {}
        for q, tau, d, a in machine.delta.row(p, s):
            if d == 0:
                _add(u, ix(q, [(tau, MOVED), (s2, IDLE), (s3, IDLE)]), a)
            elif d == 1:
                _add(u, ix(q, [(tau, IDLE), (s2, MOVED), (s3, IDLE)]), a)
        if u:
            h_vecs.append(u)
    for p, s, tau, s1, s2, s3 in product(Q, S, S, S, S, S):
        u = {}
        for q, tau2, d, a in machine.delta.row(p, s):
            if d == 1 and tau2 == tau:
                _add(u, ix(q, [(s1, MOVED), (s2, IDLE), (s3, IDLE)]), a)
        if u:
            h_vecs.append(u)
    return _columns(w_vecs, dim), _columns(v_vecs, dim), _columns(h_vecs, dim), ix


def _h_basis_states(ix: _G1Index) -> np.ndarray:
    """Type-(1) spanning vectors of H: middle flag not HEAD, no flag MOVED."""
    dim = 1 << ix.arity
    idx = np.arange(dim, dtype=np.int64)
    f1 = (idx >> (2 * ix.l)) & 3
    f2 = (idx >> ix.l) & 3
    f3 = idx & 3
    ok = (f2 != HEAD) & (f1 != MOVED) & (f2 != MOVED) & (f3 != MOVED)
    return idx[ok]


def _max_abs(m) -> float:
    m = sp.coo_matrix(m)
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0


def build_G1(machine: QTM, completion: str = "swap") -> Gate:
    """The (l0+3l)-bit gate with G1 w = v on W and G1 = 1 on H.

    ``completion="swap"`` also sends v back to w and fixes everything
    orthogonal to W + V; ``"gram_schmidt"`` maps the Gram-Schmidt basis of
    (W+H)^perp onto that of (V+H)^perp in canonical order (dense, arity <= 10).
    """
    if not machine.is_unitary:
        raise CompileError("build_G1 needs a machine passing the unitarity report")
    W, V, Hx, ix = g1_subspaces(machine)
    dim = 1 << ix.arity
    n = W.shape[1]
    if _max_abs(V.conj().T @ V - sp.identity(n)) > TOL:
        raise CompileError("the vectors v are not orthonormal")
    if _max_abs(W.conj().T @ V) > TOL:
        raise CompileError("W and V are not orthogonal")
    hb = _h_basis_states(ix)
    in_h = np.zeros(dim, dtype=bool)
    in_h[hb] = True
    for name, M in (("W", W), ("V", V)):
        if in_h[sp.coo_matrix(M).row].any():
            raise CompileError(f"{name} meets the basis-state part of H")
        if Hx.shape[1] and _max_abs(Hx.conj().T @ M) > TOL:
            raise CompileError(f"H is not orthogonal to {name}")
    if completion == "swap":
        eye = sp.identity(dim, dtype=complex, format="csc")
        g = eye - W @ W.conj().T - V @ V.conj().T + V @ W.conj().T + W @ V.conj().T
        g = sp.csc_matrix(g)
        g.eliminate_zeros()
        return Gate(ix.arity, sparse=g, label="G1")
    if completion == "gram_schmidt":
        if ix.arity > 10:
            raise CompileError("Gram-Schmidt completion is limited to arity 10")
        return Gate(ix.arity, matrix=_gram_schmidt_g1(W, V, Hx, hb, dim), label="G1")
    raise ValueError(f"unknown completion {completion!r}")


def _orthonormal_columns(M: np.ndarray, tol: float = TOL) -> np.ndarray:
    if M.shape[1] == 0:
        return M
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    return u[:, s > tol]


def _complement(B: np.ndarray, dim: int) -> np.ndarray:
    """Gram-Schmidt over canonical basis vectors in index order, against columns of B."""
    basis = [B] if B.size else []
    found = []
    need = dim - B.shape[1]
    for k in range(dim):
        if len(found) == need:
            break
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        for _ in range(2):
            for blk in basis:
                v -= blk @ (blk.conj().T @ v)
            for f in found:
                v -= f * np.vdot(f, v)
        nv = np.linalg.norm(v)
        if nv > TOL:
            found.append(v / nv)
    return np.column_stack(found) if found else np.zeros((dim, 0), complex)


def _gram_schmidt_g1(W, V, Hx, hb, dim) -> np.ndarray:
    Hb = np.zeros((dim, len(hb)), complex)
    Hb[hb, np.arange(len(hb))] = 1.0
    Hx_d = Hx.toarray()
    if Hx_d.shape[1]:
        Hx_d = Hx_d - Hb @ (Hb.conj().T @ Hx_d)
    H = np.column_stack([Hb, _orthonormal_columns(Hx_d)])
    Wd, Vd = W.toarray(), V.toarray()
    c_in = _complement(np.column_stack([Wd, H]), dim)
    c_out = _complement(np.column_stack([Vd, H]), dim)
    if c_in.shape != c_out.shape:
        raise CompileError("complements of W+H and V+H differ in dimension")
    return Vd @ Wd.conj().T + H @ H.conj().T + c_out @ c_in.conj().T


# ---------------------------------------------------------------------------
# G2


def build_G2(layout: CellLayout) -> Gate:
    """Reversible gate exchanging flag values 01 and 10 in every cell."""
    shifts = [layout.width - layout.flag_wires(c)[1] for c in layout.cells]

    def swap_flags(idx: np.ndarray) -> np.ndarray:
        out = idx.copy()
        for s in shifts:
            lo = (idx >> s) & 1
            hi = (idx >> (s + 1)) & 1
            out = out & ~np.int64(3 << s) | (lo << (s + 1)) | (hi << s)
        return out

    return Gate(layout.width, basis_map=swap_flags, label="G2", params=(layout.l0, layout.lam, layout.t),
                check=layout.width <= 16)


# ---------------------------------------------------------------------------
# compilation


@dataclass(frozen=True)
class CompiledCircuit:
    machine: QTM
    layout: CellLayout
    circuit: Circuit
    g1: Gate | None
    g2: Gate | None

    @property
    def size(self) -> int:
        return len(self.circuit)

    def encode_input(self, x) -> int:
        return encode_input(split_input(x, self.machine.frame), self.layout, self.machine)

    def run(self, x) -> SparseVector:
        return apply_circuit_sparse(self.circuit, SparseVector.basis(self.encode_input(x)))

    def window_distribution(self, x) -> Distribution:
        """The decoded distribution of the tape window after running the circuit."""
        return decode_windows(self.run(x), self.layout, self.machine)

    @cached_property
    def g1_decomposition(self) -> Decomposition | None:
        return decompose_unitary(self.g1) if self.g1 is not None else None

    def elaborate(self) -> Circuit:
        """Same circuit over {R1, R2, R3, M2N}: G1 decomposed, G2 as flag-wire swaps."""
        layout = self.layout
        sub = self.g1_decomposition
        steps = []
        for step in self.circuit.steps:
            if step.gate.label == "G1":
                pins = step.pins
                for s in sub.circuit.steps:
                    wires = [pins[w - 1] for w in s.pins]
                    steps.append(CircuitStep(s.gate, complete_wiring(wires, layout.width)))
            else:
                for c in layout.cells:
                    a, b = layout.flag_wires(c)
                    for pair in ((a, b), (b, a), (a, b)):
                        steps.append(CircuitStep(CNOT, complete_wiring(pair, layout.width)))
        return Circuit(layout.width, tuple(steps))


def g2_swap_circuit(layout: CellLayout) -> Circuit:
    """G2 as three controlled-nots per cell (each cell swaps its two flag wires)."""
    placements = []
    for c in layout.cells:
        a, b = layout.flag_wires(c)
        placements += [(a, b), (b, a), (a, b)]
    return Circuit(layout.width, tuple(CircuitStep(CNOT, complete_wiring(p, layout.width))
                                       for p in placements))


def compile_machine(machine: QTM, t: int, completion: str = "swap") -> CompiledCircuit:
    """(K2 o K1)^t for a single-tape machine; 2t^2 gate placements."""
    if not isinstance(machine, QTM):
        raise CompileError("only single-tape machines can be compiled")
    if t < 0:
        raise CompileError("t must be non-negative")
    layout = CellLayout.for_machine(machine, t)
    if t == 0:
        return CompiledCircuit(machine, layout, Circuit(layout.width), None, None)
    g1 = build_G1(machine, completion)
    g2 = build_G2(layout)
    k1 = [CircuitStep(g1, complete_wiring(layout.g1_wires(j - t), layout.width))
          for j in range(1, 2 * t)]
    k2 = [CircuitStep(g2, tuple(range(1, layout.width + 1)))]
    return CompiledCircuit(machine, layout, Circuit(layout.width, tuple(k1 + k2) * t), g1, g2)


compile = compile_machine  # noqa: A001  (public name used by the CLI and docs)


def encode_input(x: Sequence[str], layout: CellLayout, machine: QTM) -> int:
    """Basis index of q0, x in cells 0..t (truncated), head flag on cell 0."""
    frame = machine.frame
    sym = {s: i for i, s in enumerate(frame.alphabet)}
    index = frame.states.index(frame.initial)
    for c in layout.cells:
        s = x[c] if 0 <= c < len(x) else frame.blank
        flag = HEAD if c == 0 else IDLE
        index = (index << layout.l) | (sym[s] << 2) | flag
    return index


def encode_bits(x, layout: CellLayout, machine: QTM) -> str:
    """encode_input as a bit string grouped ``P | cell ... cell``."""
    idx = encode_input(split_input(x, machine.frame), layout, machine)
    bits = format(idx, f"0{layout.width}b")
    cells = [bits[layout.l0 + i * layout.l: layout.l0 + (i + 1) * layout.l] for i in range(2 * layout.t + 1)]
    return bits[: layout.l0] + " | " + " ".join(cells)


def decode_windows(vec: SparseVector, layout: CellLayout, machine: QTM) -> Distribution:
    """d_t: read each cell's symbol bits (unused codes read as blank), ignore P and flags."""
    frame = machine.frame
    names = list(frame.alphabet) + [frame.blank] * ((1 << layout.lam) - len(frame.alphabet))
    wires = [w for c in layout.cells for w in layout.symbol_wires(c)]
    raw = marginal(vec, wires, layout.width)
    out: dict = {}
    for bits, p in raw.items():
        syms = [names[int(bits[i: i + layout.lam], 2)] for i in range(0, len(bits), layout.lam)]
        key = " ".join(syms)
        out[key] = out.get(key, 0.0) + p
    return Distribution(out)


def flag_profile(vec: SparseVector, layout: CellLayout) -> dict[str, float]:
    """Probability mass by flag pattern (one character 0/1/2/3 per cell)."""
    out: dict = {}
    probs = np.abs(vec.amp) ** 2
    for i, p in zip(vec.idx.tolist(), probs):
        key = "".join(str((i >> (layout.width - layout.flag_wires(c)[1])) & 3) for c in layout.cells)
        out[key] = out.get(key, 0.0) + float(p)
    return out


def verify_t_simulation(machine: QTM, t: int, inputs, compiled: CompiledCircuit | None = None) -> float:
    """Max over inputs of TV(window distribution of M after t steps, decoded circuit output)."""
    compiled = compiled or compile_machine(machine, t)
    worst = 0.0
    for x in inputs:
        expected = measure_window(machine, x, t)
        worst = max(worst, total_variation(expected, compiled.window_distribution(x)))
    return worst


__all__ = [
    "CellLayout", "CompiledCircuit", "CompileError", "build_G1", "build_G2", "compile_machine",
    "decode_windows", "encode_bits", "encode_input", "flag_profile", "g1_subspaces",
    "g2_swap_circuit", "verify_t_simulation", "MachineError",
]
