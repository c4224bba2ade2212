"""Decomposition into the rotation + controlled-not gate set, and related numerics.

* ``approx_angle``: least k with k*R within epsilon of a target angle.
* ``one_qubit_factor``: exact factorization of a 2x2 unitary over R1/R2/R3.
* ``decompose_unitary``: n-bit unitary -> circuit over {R1, R2, R3, M2N}.
  Two-level (Givens) elimination on the active subspace, each two-level
  factor turned into a multiply-controlled SU(2) gate after controlled-not
  conjugation, controlled gates expanded with the usual A-X-B-X-C identity
  and dirty-ancilla Toffoli ladders.
* ``gpc_to_gr``: replace every rotation by a power of the matching R-gate.
* ``matrix_code`` and ``acc``: dyadic approximate codes of matrices.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .angles import TWO_PI, Angle, R, angle_value, compute_R, r_multiple  # noqa: F401
from .circuit import (CNOT, Circuit, CircuitError, CircuitStep, Gate, circuit_unitary,
                      complete_wiring, make_elementary, r1_matrix, r2_matrix, r3_matrix)

ANGLE_CAP = 10 ** 9
ACC_BLANK = "B"
MAX_ARITY = 13
# Calibrated constants for the size bounds k <= ANGLE_C / eps^4 and
# #gates <= SIZE_C * n^3 * 4^n (measured worst cases sit well below both).
ANGLE_C = 1.0
SIZE_C = 1.0


class DecompositionError(ValueError):
    """Raised when a requested decomposition or approximation is infeasible."""


# ---------------------------------------------------------------------------
# Acc and angle approximation


def acc(epsilon: float):
    """Least m >= 0 with 2^-m <= epsilon; ``ACC_BLANK`` for epsilon = 0."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if epsilon == 0:
        return ACC_BLANK
    m = max(0, math.ceil(-math.log2(epsilon)))
    while m > 0 and 2.0 ** -(m - 1) <= epsilon:
        m -= 1
    while 2.0 ** -m > epsilon:
        m += 1
    return m


def circular_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class AngleApprox:
    k: int
    residual: float
    epsilon: float
    theta: float


def approx_angle(theta: float, epsilon: float, cap: int = ANGLE_CAP) -> AngleApprox:
    """Least k >= 0 whose k*R lies within ``epsilon`` of theta on the circle.

    theta is reduced mod 2*pi first.  The search scans k in growing blocks.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    theta = float(theta) % TWO_PI
    start, block = 0, 4096
    while start < cap:
        ks = np.arange(start, min(start + block, cap), dtype=np.int64)
        res = circular_distance(r_multiple(ks), theta)
        hits = np.flatnonzero(res <= epsilon)
        if hits.size:
            j = int(hits[0])
            return AngleApprox(int(ks[j]), float(res[j]), float(epsilon), theta)
        start += block
        block = min(block * 4, 1 << 22)
    raise DecompositionError(f"no k below {cap} brings k*R within {epsilon} of {theta}")


def angle_bound(epsilon: float) -> float:
    return ANGLE_C / epsilon ** 4


def size_bound(n: int) -> float:
    return SIZE_C * n ** 3 * 4 ** n


# ---------------------------------------------------------------------------
# one-qubit factorization

_IDENT_TOL = 1e-14


def _wrap(x: float) -> float:
    x = math.remainder(x, TWO_PI)
    return 0.0 if abs(x) < 1e-15 else x


def one_qubit_angles(U: np.ndarray) -> tuple[float, float, float, float]:
    """(theta, a, b, c) with U = diag(e^{ia}, e^{ib}) . R1(theta) . diag(1, e^{ic})."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2) or np.max(np.abs(U.conj().T @ U - np.eye(2))) > 1e-9:
        raise DecompositionError("one_qubit_factor needs a 2x2 unitary")
    cos_t, sin_t = abs(U[0, 0]), abs(U[1, 0])
    theta = math.atan2(sin_t, cos_t)
    if sin_t < 1e-15:
        a, b, c = np.angle(U[0, 0]), np.angle(U[1, 1]), 0.0
        theta = 0.0
    elif cos_t < 1e-15:
        a, b, c = np.angle(-U[0, 1]), np.angle(U[1, 0]), 0.0
    else:
        a, b = np.angle(U[0, 0]), np.angle(U[1, 0])
        c = np.angle(U[1, 1]) - b
    return float(theta), _wrap(float(a)), _wrap(float(b)), _wrap(float(c))


def exact_angle(x: float) -> Angle:
    """Exact token for a float angle, preferring pi*p/2^j when that is exact to 1e-13."""
    for j in range(0, 13):
        q = x / math.pi * (1 << j)
        if abs(q - round(q)) < 1e-11 and abs(math.pi * round(q) / (1 << j) - x) < 1e-13:
            return Angle.pi(int(round(q)), 1 << j)
    return Angle("rational", Fraction(x))


@dataclass(frozen=True)
class OneQubitFactor:
    gates: tuple  # (tag, angle) in application order
    phase: float

    def matrix(self) -> np.ndarray:
        m = np.eye(2, dtype=complex)
        for tag, ang in self.gates:
            m = make_elementary(tag, ang).dense() @ m
        return m


def one_qubit_factor(U: np.ndarray, exact_tokens: bool = False) -> OneQubitFactor:
    """Exact factorization of a 2x2 unitary; the global phase is always 0.

    Application order is R3(c), R1(theta), R2(a), R3(b); zero angles are
    dropped.  Hadamard gives R3(pi) then R1(pi/4).
    """
    theta, a, b, c = one_qubit_angles(U)
    seq = [("R3", c), ("R1", theta), ("R2", a), ("R3", b)]
    gates = tuple((tag, exact_angle(x) if exact_tokens else x) for tag, x in seq if x != 0.0)
    return OneQubitFactor(gates, 0.0)


# ---------------------------------------------------------------------------
# abstract operation lists: ("U", wire, 2x2) and ("CX", control, target)

X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
T_MAT = r3_matrix(math.pi / 4)
TDG_MAT = r3_matrix(-math.pi / 4)


def _u(w, m):
    return [("U", w, np.asarray(m, dtype=complex))]


def _cx(c, t):
    return [("CX", c, t)]


def toffoli_ops(a: int, b: int, t: int) -> list:
    """Exact Toffoli (controls a, b; target t): 6 CNOTs and 9 one-qubit gates."""
    return (_u(t, H_MAT) + _cx(b, t) + _u(t, TDG_MAT) + _cx(a, t) + _u(t, T_MAT) + _cx(b, t)
            + _u(t, TDG_MAT) + _cx(a, t) + _u(b, T_MAT) + _u(t, T_MAT) + _u(t, H_MAT)
            + _cx(a, b) + _u(a, T_MAT) + _u(b, TDG_MAT) + _cx(a, b))


def mcx_ops(controls: list, target: int, dirty: list) -> list:
    """Multiply-controlled NOT using dirty ancillas (restored afterwards)."""
    k = len(controls)
    if k == 0:
        return _u(target, X_MAT)
    if k == 1:
        return _cx(controls[0], target)
    if k == 2:
        return toffoli_ops(controls[0], controls[1], target)
    if len(dirty) >= k - 2:
        c, a = controls, dirty[: k - 2]
        top = toffoli_ops(c[k - 1], a[k - 3], target)
        mids = {i: toffoli_ops(c[i], a[i - 2], a[i - 1]) for i in range(2, k - 1)}
        bottom = toffoli_ops(c[0], c[1], a[0])
        down = [op for i in range(k - 2, 1, -1) for op in mids[i]]
        up = [op for i in range(2, k - 1) for op in mids[i]]
        ladder = down + bottom + up
        return top + ladder + top + ladder
    if dirty:
        a = dirty[0]
        m1 = (k + 1) // 2
        c1, c2 = controls[:m1], controls[m1:]
        first = mcx_ops(c1, a, c2 + [target] + dirty[1:])
        second = mcx_ops(c2 + [a], target, c1 + dirty[1:])
        return first + second + first + second
    raise DecompositionError(f"no spare wire for a {k}-control NOT")


def _zyz(W: np.ndarray) -> tuple[float, float, float]:
    """(alpha, theta, beta) with W = Rz(alpha) Ry(theta) Rz(beta) for W in SU(2)."""
    u, v = W[0, 0], W[1, 0]
    theta = 2 * math.atan2(abs(v), abs(u))
    s = -2 * np.angle(u) if abs(u) > 1e-15 else 0.0
    d = 2 * np.angle(v) if abs(v) > 1e-15 else 0.0
    return (s + d) / 2, theta, (s - d) / 2


def _rz(x):
    return np.diag([np.exp(-0.5j * x), np.exp(0.5j * x)])


def _ry(x):
    c, s = math.cos(x / 2), math.sin(x / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def abc_factors(W: np.ndarray):
    """SU(2) A, B, C with ABC = I and A X B X C = W."""
    alpha, theta, beta = _zyz(W)
    A = _rz(alpha) @ _ry(theta / 2)
    B = _ry(-theta / 2) @ _rz(-(alpha + beta) / 2)
    C = _rz((beta - alpha) / 2)
    return A, B, C


def controlled_su2_ops(W: np.ndarray, control: int, target: int) -> list:
    A, B, C = abc_factors(W)
    return _u(target, C) + _cx(control, target) + _u(target, B) + _cx(control, target) + _u(target, A)


def mc_su2_ops(W: np.ndarray, controls: list, target: int, spare: list) -> list:
    """W (in SU(2)) on ``target`` when every control wire is 1."""
    m = len(controls)
    if m == 0:
        return _u(target, W)
    if m == 1:
        return controlled_su2_ops(W, controls[0], target)
    A, B, C = abc_factors(W)
    cm, rest = controls[-1], controls[:-1]
    flip = mcx_ops(rest, target, [cm] + spare)
    return (controlled_su2_ops(C, cm, target) + flip + controlled_su2_ops(B, cm, target) + flip
            + controlled_su2_ops(A, cm, target))


def mc_phase_ops(chi: float, controls: list, target: int, spare: list) -> list:
    """diag(1, e^{i chi}) on ``target`` when every control is 1."""
    if not controls:
        return _u(target, r3_matrix(chi))
    W = np.diag([np.exp(-0.5j * chi), np.exp(0.5j * chi)])
    return (mc_su2_ops(W, controls, target, spare)
            + mc_phase_ops(chi / 2, controls[:-1], controls[-1], spare + [target]))


def _bit(index: int, wire: int, n: int) -> int:
    return (index >> (n - wire)) & 1


def _value_controlled(ops_fn, pattern: int, controls: list, n: int) -> list:
    flips = [w for w in controls if not _bit(pattern, w, n)]
    pre = [op for w in flips for op in _u(w, X_MAT)]
    return pre + ops_fn() + pre


def two_level_ops(T: np.ndarray, i: int, j: int, n: int) -> list:
    """Ops realizing the two-level unitary acting as T on basis states (i, j)."""
    diff = [w for w in range(1, n + 1) if _bit(i ^ j, w, n)]
    b = diff[0]
    if _bit(i, b, n):
        i, j = j, i
        T = T[::-1, ::-1]
    conj = [op for w in diff[1:] for op in _cx(b, w)]
    controls = [w for w in range(1, n + 1) if w != b]
    det = np.linalg.det(T)
    if abs(det - 1) > 1e-12:
        raise DecompositionError("two-level factors must be special unitary")
    core = _value_controlled(lambda: mc_su2_ops(T, controls, b, []), i, controls, n)
    return conj + core + conj


def index_phase_ops(chi: float, s: int, n: int) -> list:
    """Multiply basis state s by e^{i chi}."""
    target = n
    controls = list(range(1, n))
    flips = [w for w in range(1, n + 1) if not _bit(s, w, n)]
    pre = [op for w in flips for op in _u(w, X_MAT)]
    return pre + mc_phase_ops(chi, controls, target, []) + pre


def peephole(ops: list) -> list:
    """Merge adjacent one-qubit matrices per wire and cancel adjacent equal CNOTs."""
    out: list = []
    stacks: dict = defaultdict(list)

    def drop(idx, wires):
        out[idx] = None
        for w in wires:
            stacks[w].pop()

    for op in ops:
        if op[0] == "U":
            w = op[1]
            if stacks[w] and out[stacks[w][-1]][0] == "U":
                j = stacks[w][-1]
                merged = op[2] @ out[j][2]
                if np.max(np.abs(merged - np.eye(2))) < _IDENT_TOL:
                    drop(j, [w])
                else:
                    out[j] = ("U", w, merged)
                continue
            if np.max(np.abs(op[2] - np.eye(2))) < _IDENT_TOL:
                continue
            out.append(op)
            stacks[w].append(len(out) - 1)
        else:
            _, c, t = op
            if stacks[c] and stacks[t] and stacks[c][-1] == stacks[t][-1] and out[stacks[c][-1]] == op:
                drop(stacks[c][-1], [c, t])
                continue
            out.append(op)
            stacks[c].append(len(out) - 1)
            stacks[t].append(len(out) - 1)
    return [op for op in out if op is not None]


def ops_to_circuit(ops: list, n: int, exact_tokens: bool = False) -> Circuit:
    steps = []
    for op in ops:
        if op[0] == "U":
            for tag, ang in one_qubit_factor(op[2], exact_tokens).gates:
                steps.append(CircuitStep(make_elementary(tag, ang), complete_wiring((op[1],), n)))
        else:
            steps.append(CircuitStep(CNOT, complete_wiring((op[1], op[2]), n)))
    return Circuit(n, tuple(steps))


# ---------------------------------------------------------------------------
# decomposition of n-bit unitaries


@dataclass(frozen=True)
class Decomposition:
    circuit: Circuit
    phase: float
    two_level_count: int
    active_dim: int

    @property
    def size(self) -> int:
        return len(self.circuit)


def _active_set(U) -> np.ndarray:
    """Indices on which U differs from the identity (rows or columns)."""
    d = U.shape[0]
    if sp.issparse(U):
        diff = (sp.csr_matrix(U) - sp.identity(d, format="csr")).tocoo()
        mask = np.abs(diff.data) > 1e-15
        return np.union1d(diff.row[mask], diff.col[mask])
    diff = np.abs(U - np.eye(d)) > 1e-15
    return np.flatnonzero(diff.any(axis=0) | diff.any(axis=1))


def _drop_bit(idx: np.ndarray, shift: int) -> np.ndarray:
    return ((idx >> (shift + 1)) << shift) | (idx & ((1 << shift) - 1))


def strip_idle_wires(U, n: int):
    """(kept wires, reduced matrix) with U = U' (x) I on every dropped wire."""
    coo = sp.coo_matrix(U)
    keep = np.abs(coo.data) > 1e-15
    row, col, val = coo.row[keep].astype(np.int64), coo.col[keep].astype(np.int64), coo.data[keep]
    kept = []
    width = n
    for w in range(1, n + 1):
        shift = width - len(kept) - 1  # bit position of wire w in the reduced index
        br, bc = (row >> shift) & 1, (col >> shift) & 1
        idle = bool(np.all(br == bc))
        if idle:
            lo, hi = br == 0, br == 1
            r0, c0 = _drop_bit(row[lo], shift), _drop_bit(col[lo], shift)
            r1, c1 = _drop_bit(row[hi], shift), _drop_bit(col[hi], shift)
            o0, o1 = np.lexsort((c0, r0)), np.lexsort((c1, r1))
            idle = (lo.sum() == hi.sum() and np.array_equal(r0[o0], r1[o1])
                    and np.array_equal(c0[o0], c1[o1])
                    and np.allclose(val[lo][o0], val[hi][o1], atol=1e-12, rtol=0))
        if idle:
            row, col, val = r0, c0, val[lo]
            width -= 1
        else:
            kept.append(w)
    dim = 1 << len(kept)
    return kept, sp.csc_matrix((val, (row, col)), shape=(dim, dim))


def decompose_unitary(U, exact_tokens: bool = False, exact_phase: bool = False) -> Decomposition:
    """Circuit over {R1, R2, R3, M2N} equal to U (global phase 0).

    ``U`` may be a Gate, a dense array or a scipy sparse matrix.  Only the
    active subspace (where U differs from the identity) is factorized, so
    large but structured gates such as compiler gates stay tractable.
    ``exact_phase`` is accepted for symmetry with phase-quotiented callers;
    the construction here is always exact, so it changes nothing.
    """
    label = None
    if isinstance(U, Gate):
        label = U.label
        U = U.csc() if U.kind != "dense" else U.dense()
    d = U.shape[0]
    n = d.bit_length() - 1
    if U.shape != (d, d) or (1 << n) != d:
        raise DecompositionError("matrix dimension must be a power of two")
    if n >= 2 and label != "M2N":
        kept, reduced = strip_idle_wires(U, n)
        if len(kept) < n:
            if not kept:
                return Decomposition(Circuit(n), 0.0, 0, 0)
            sub = decompose_unitary(reduced if len(kept) > 6 else reduced.toarray(), exact_tokens)
            steps = tuple(CircuitStep(st.gate, complete_wiring([kept[w - 1] for w in st.pins], n))
                          for st in sub.circuit.steps)
            return Decomposition(Circuit(n, steps), sub.phase, sub.two_level_count, sub.active_dim)
    if n > MAX_ARITY:
        raise DecompositionError(f"arity {n} exceeds the supported {MAX_ARITY}")
    dense_small = U.toarray() if sp.issparse(U) and n <= 6 else U
    if n == 2 and (label == "M2N" or (not sp.issparse(dense_small)
                                      and np.allclose(dense_small, CNOT.dense(), atol=1e-15))):
        return Decomposition(Circuit(2, (CircuitStep(CNOT, (1, 2)),)), 0.0, 0, 4)
    if n == 1:
        mat = dense_small.toarray() if sp.issparse(dense_small) else dense_small
        return Decomposition(ops_to_circuit(_u(1, mat), 1, exact_tokens), 0.0, 0, 2)

    active = _active_set(U)
    if sp.issparse(U):
        M = sp.csr_matrix(U)[active][:, active].toarray()
    else:
        M = np.asarray(U, dtype=complex)[np.ix_(active, active)]
    if M.size and np.max(np.abs(M.conj().T @ M - np.eye(len(active)))) > 1e-9:
        raise DecompositionError("input is not unitary")

    factors = []  # (G, a, b) with G applied on the left during elimination
    size = len(active)
    for c in range(size):
        rows = np.flatnonzero(np.abs(M[c + 1:, c]) > 1e-14) + c + 1
        for r in rows:
            a, b = M[c, c], M[r, c]
            nrm = math.hypot(abs(a), abs(b))
            G = np.array([[a.conjugate(), b.conjugate()], [-b, a]]) / nrm
            M[[c, r], :] = G @ M[[c, r], :]
            factors.append((G, c, r))

    phases = np.angle(np.diag(M))
    ops: list = []
    # diagonal part as a chain of SU(2) two-levels plus one single-index phase
    carry = 0.0
    for p in range(size - 1):
        psi = phases[p] + carry
        carry = psi
        if abs(_wrap(psi)) > 1e-15:
            T = np.diag([np.exp(1j * psi), np.exp(-1j * psi)])
            ops += two_level_ops(T, int(active[p]), int(active[p + 1]), n)
    if size:
        chi = _wrap(phases[size - 1] + carry)
        if abs(chi) > 1e-15:
            ops += index_phase_ops(chi, int(active[size - 1]), n)
    for G, c, r in reversed(factors):
        ops += two_level_ops(G.conj().T, int(active[c]), int(active[r]), n)
    ops = peephole(ops)
    return Decomposition(ops_to_circuit(ops, n, exact_tokens), 0.0, len(factors), size)


def reconstruction_error(U, circuit: Circuit, up_to_phase: bool = True, norm: str = "max") -> float:
    """Distance between U and G(circuit) after aligning the global phase.

    ``norm="max"`` is the largest entry of the difference, ``norm="op"`` its
    operator norm.
    """
    from .circuit import sparse_unitary

    if isinstance(U, Gate):
        U = U.csc() if U.kind != "dense" else U.dense()
    if circuit.width <= 10 and not sp.issparse(U):
        V = circuit_unitary(circuit).dense()
        D = np.asarray(U)
    else:
        V = sparse_unitary(circuit)
        D = sp.csc_matrix(U)
    if up_to_phase:
        if sp.issparse(D):
            overlap = (D.conj().multiply(V)).sum()
        else:
            overlap = np.vdot(V, D).conjugate()
        phase = overlap / abs(overlap) if abs(overlap) > 1e-15 else 1.0
        V = V * np.conj(phase) if not sp.issparse(V) else V.multiply(np.conj(phase))
    diff = D - V
    if norm == "op":
        return operator_norm(sp.csc_matrix(diff) if sp.issparse(diff) else diff)
    if sp.issparse(diff):
        diff = sp.coo_matrix(diff)
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
    return float(np.max(np.abs(diff)))


# ---------------------------------------------------------------------------
# G_PC -> G_R rewriting


@dataclass(frozen=True)
class GrRewrite:
    circuit: Circuit
    per_rotation_budget: float
    multiples: tuple  # chosen k per rewritten rotation, in circuit order


def gpc_to_gr(circuit: Circuit, epsilon: float) -> GrRewrite:
    """Replace each R_{i,theta} by R_{i,R}^k with the rotation error at most
    epsilon / (number of rotation steps); controlled-nots pass through.

    ||R_{i,theta} - R_{i,kR}|| = 2 |sin((theta - kR)/2)| <= |theta - kR| (mod 2 pi),
    so the operator-norm errors add up to at most epsilon.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rotations = [s for s in circuit.steps if s.gate.label in ("R1", "R2", "R3")]
    budget = epsilon / len(rotations) if rotations else epsilon
    r_gates = {tag: make_elementary(tag, Angle.r(1)) for tag in ("R1", "R2", "R3")}
    cache: dict = {}
    steps: list = []
    ks = []
    for s in circuit.steps:
        tag = s.gate.label
        if tag in r_gates:
            theta = angle_value(s.gate.params[0]) % TWO_PI
            if theta not in cache:
                cache[theta] = approx_angle(theta, budget).k
            k = cache[theta]
            ks.append(k)
            step = CircuitStep(r_gates[tag], s.wiring)
            steps.extend([step] * k)
        elif tag == "M2N":
            steps.append(s)
        else:
            raise DecompositionError(f"gpc_to_gr cannot rewrite gate {tag}")
    return GrRewrite(Circuit(circuit.width, tuple(steps)), budget, tuple(ks))


def run_length_unitary(circuit: Circuit) -> np.ndarray:
    """Dense G(K), multiplying runs of identical consecutive steps by matrix powers."""
    from .circuit import apply_step_dense

    n = circuit.width
    if n > 10:
        raise CircuitError("run_length_unitary is for widths up to 10")
    out = np.eye(1 << n, dtype=complex)
    steps = circuit.steps
    i = 0
    while i < len(steps):
        j = i
        while j + 1 < len(steps) and steps[j + 1] is steps[i]:
            j += 1
        s = steps[i]
        count = j - i + 1
        if count > 1:
            g = Gate(s.gate.arity, matrix=np.linalg.matrix_power(s.gate.dense(), count), check=False)
            s = CircuitStep(g, s.wiring)
        out = apply_step_dense(out, s, n)
        i = j + 1
    return out


# ---------------------------------------------------------------------------
# operator norm and matrix codes


def operator_norm(A, tol: float = 1e-11, max_iter: int = 2000, seed: int = 0) -> float:
    """Largest singular value (exact SVD for small dense input, power iteration otherwise)."""
    if not sp.issparse(A):
        A = np.asarray(A)
        if A.shape[0] <= 512:
            return float(np.linalg.norm(A, 2)) if A.size else 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    AH = A.conj().T
    for _ in range(max_iter):
        y = AH @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        new = math.sqrt(ny)
        if abs(new - sigma) <= tol * max(1.0, new):
            return new
        sigma = new
    return sigma


@dataclass(frozen=True)
class MatrixCode:
    """Entries (re + i im) / 2^exponent at (rows, cols); everything else 0."""

    dim: int
    exponent: int
    rows: np.ndarray
    cols: np.ndarray
    re: np.ndarray
    im: np.ndarray
    epsilon: float
    bound: float  # Frobenius norm of target - decoded (>= operator-norm error)

    def decoded(self) -> sp.csc_matrix:
        vals = (self.re.astype(float) + 1j * self.im.astype(float)) / 2.0 ** self.exponent
        return sp.csc_matrix((vals, (self.rows, self.cols)), shape=(self.dim, self.dim))

    def entry(self, i: int, j: int) -> tuple[Fraction, Fraction]:
        hit = np.flatnonzero((self.rows == i) & (self.cols == j))
        if not hit.size:
            return Fraction(0), Fraction(0)
        den = 1 << self.exponent
        return Fraction(int(self.re[hit[0]]), den), Fraction(int(self.im[hit[0]]), den)


def matrix_code(U, epsilon: float) -> MatrixCode:
    """Dyadic code of U with denominator 2^(Acc(eps) + ceil(log2 dim) + 2), half-to-even rounding.

    For epsilon = 0 every entry must already be a dyadic rational with
    denominator at most 2^16; otherwise the entries are treated as irrational.
    """
    if isinstance(U, Gate):
        U = U.csc() if U.kind != "dense" else U.dense()
    coo = sp.coo_matrix(U)
    dim = coo.shape[0]
    vals = coo.data.astype(complex)
    if epsilon == 0:
        exponent = 16
        scaled = vals * 2.0 ** exponent
        if np.any(np.abs(scaled - np.round(scaled.real) - 1j * np.round(scaled.imag)) > 0):
            raise DecompositionError("epsilon = 0 needs exactly rational (dyadic) entries")
    else:
        exponent = acc(epsilon) + max(0, math.ceil(math.log2(dim))) + 2
    scale = 2.0 ** exponent
    re = np.rint(vals.real * scale).astype(np.int64)
    im = np.rint(vals.imag * scale).astype(np.int64)
    keep = (re != 0) | (im != 0)
    decoded = (re + 1j * im) / scale
    bound = float(np.linalg.norm(vals - decoded))
    return MatrixCode(dim, exponent, coo.row[keep].astype(np.int64), coo.col[keep].astype(np.int64),
                      re[keep], im[keep], float(epsilon), bound)
