"""End-to-end pipelines: universal simulation with a per-G1 accuracy budget,
the sequential circuit-code interpreter, and recognition reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .angles import Angle, angle_value
from .circuit import (CircuitStep, Gate, IOCircuit, SparseVector, apply_step_sparse,
                      output_distribution, r1_matrix, r2_matrix, r3_matrix)
from .compiler import compile_machine, decode_windows
from .decompose import matrix_code, operator_norm
from .distribution import Distribution, total_variation
from .machine import QTM, MachineError, accept_probs, measure_window
from .qcfcode import CircuitCode, CnotEntry, CodecError, GrEntry, RotationEntry, parse_code


class BudgetInfeasible(RuntimeError):
    """The approximate G1 could not be certified within its budget."""


def per_g1_budget(epsilon: float, t: int) -> float:
    """Operator-norm budget for each of the t(2t-1) G1 placements."""
    return epsilon / (4 * t * (2 * t - 1))


def code_accuracy_log10(epsilon: float, t: int, l0: int, l: int) -> float:
    """log10 of eps / (16 t (2t-1) (10 sqrt(k))^k) with k = 2^(l0 + 3l).

    The number underflows any float for realistic widths, hence the log.
    """
    k = 2.0 ** (l0 + 3 * l)
    return (math.log10(epsilon) - math.log10(16 * t * (2 * t - 1))
            - k * (1 + 0.5 * math.log10(k)))


# ---------------------------------------------------------------------------
# approximate G1


@dataclass(frozen=True)
class ApproxGate:
    gate: Gate
    exponent: int
    certified_error: float


def _active(*mats) -> np.ndarray:
    idx = []
    for m in mats:
        d = sp.coo_matrix(m - sp.identity(m.shape[0], dtype=complex, format="csc"))
        keep = np.abs(d.data) > 0
        idx += [d.row[keep], d.col[keep]]
    return np.unique(np.concatenate(idx)) if idx else np.zeros(0, dtype=np.int64)


def approximate_gate(gate: Gate, budget: float, max_refinements: int = 30) -> ApproxGate:
    """Dyadic code of ``gate`` made unitary by a polar factor on its active block.

    The code precision starts at budget/4 and is refined until the measured
    operator-norm distance is within ``budget``.
    """
    target = gate.csc()
    dim = target.shape[0]
    code_eps = budget / 4
    for _ in range(max_refinements):
        code = matrix_code(target, code_eps)
        approx = code.decoded()
        act = _active(target, approx)
        if act.size == 0:
            return ApproxGate(gate, code.exponent, 0.0)
        block = approx[act][:, act].toarray()
        unitary, _ = scipy.linalg.polar(block)
        err = operator_norm(unitary - target[act][:, act].toarray())
        if err <= budget:
            out = sp.identity(dim, dtype=complex, format="lil")
            out[np.ix_(act, act)] = unitary
            g = Gate(gate.arity, sparse=out.tocsc(), label=gate.label + "~", check=False)
            return ApproxGate(g, code.exponent, err)
        code_eps /= 2
    raise BudgetInfeasible(f"could not bring {gate.label} within {budget:.3e}")


# ---------------------------------------------------------------------------
# universal simulation


@dataclass(frozen=True)
class UniversalRun:
    machine: QTM
    t: int
    epsilon: float
    x: str
    budget: float
    distribution: Distribution
    reference: Distribution
    tv: float
    g1_error: float
    code_exponent: int
    counters: tuple  # (C0, C1 total) at the end of the run
    code_accuracy_log10: float

    @property
    def within(self) -> bool:
        return self.tv <= self.epsilon


def universal_simulate(machine: QTM, t: int, epsilon: float, x) -> UniversalRun:
    """Run (K2 K1)^t with every G1 replaced by a certified approximation.

    The outer loop counts rounds (C0), the inner loop counts G1 placements
    (C1, one per connected cell triple); G2 is applied exactly.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if t < 1:
        raise ValueError("t must be at least 1")
    compiled = compile_machine(machine, t)
    layout = compiled.layout
    budget = per_g1_budget(epsilon, t)
    approx = approximate_gate(compiled.g1, budget)
    n = layout.width
    vec = SparseVector.basis(compiled.encode_input(x))
    g2_step = CircuitStep(compiled.g2, tuple(range(1, n + 1)))
    steps = [CircuitStep(approx.gate, s.wiring) for s in compiled.circuit.steps[: 2 * t - 1]]
    c0 = c1 = 0
    while c0 < t:
        for step in steps:
            vec = apply_step_sparse(vec, step, n)
            c1 += 1
        vec = apply_step_sparse(vec, g2_step, n)
        c0 += 1
    norm2 = float(np.sum(np.abs(vec.amp) ** 2))
    vec = SparseVector(vec.idx, vec.amp / math.sqrt(norm2))
    dist = decode_windows(vec, layout, machine)
    ref = Distribution(measure_window(machine, x, t))
    return UniversalRun(machine, t, epsilon, x if isinstance(x, str) else " ".join(x), budget,
                        dist, ref, total_variation(dist, ref), approx.certified_error,
                        approx.exponent, (c0, c1),
                        code_accuracy_log10(epsilon, t, layout.l0, layout.l))


# ---------------------------------------------------------------------------
# sequential interpreter for circuit codes


_ROTATIONS = {1: r1_matrix, 2: r2_matrix, 3: r3_matrix}


def _rotate(state: dict, m: np.ndarray, cell: int) -> dict:
    out: dict = {}
    for bits, a in state.items():
        b = bits[cell]
        for nb in (0, 1):
            amp = m[nb, b] * a
            if amp != 0:
                key = bits[:cell] + (nb,) + bits[cell + 1:]
                out[key] = out.get(key, 0) + amp
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


def _cnot(state: dict, i: int, j: int) -> dict:
    """Controlled-not entry (4, i, j): i < j maps |x,y> to |x,x+y> on cells (i, j);
    i > j maps |x,y> to |x+y,y> on cells (j, i)."""
    out: dict = {}
    for bits, a in state.items():
        b = list(bits)
        if i < j:
            x, y = b[i], b[j]
            b[j] = (x + y) % 2
        else:
            x, y = b[j], b[i]
            b[j] = (x + y) % 2
        out[tuple(b)] = a
    return out


def execute_code(code: CircuitCode | str, x: str) -> Distribution:
    """Scan the entries of an R-code (PC-codes are accepted too) one at a time,
    acting on a tape of cells 1..width, then read the output cells."""
    if isinstance(code, str):
        code = parse_code(code)
    if code.flavor == "G":
        raise CodecError("execute_code interprets R- and PC-codes only")
    consts = dict(code.constants)
    inputs = [w for w in range(1, code.width + 1) if w not in consts]
    if len(x) != len(inputs) or any(c not in "01" for c in x):
        raise CodecError(f"input must be {len(inputs)} bits")
    cells = [0] * (code.width + 1)  # index 0 unused
    for w, b in consts.items():
        cells[w] = b
    for w, c in zip(inputs, x):
        cells[w] = int(c)
    state = {tuple(cells): 1.0 + 0j}
    r_mats = {h: _ROTATIONS[h](angle_value(Angle.r(1))) for h in (1, 2, 3)}
    for e in code.entries:
        if isinstance(e, GrEntry):
            state = _rotate(state, r_mats[e.index], e.wire)
        elif isinstance(e, RotationEntry):
            state = _rotate(state, _ROTATIONS[e.index](angle_value(e.angle)), e.wire)
        elif isinstance(e, CnotEntry):
            state = _cnot(state, e.i, e.j)
        else:
            raise CodecError(f"unexpected entry {e!r}")
    dist: dict = {}
    for bits, a in state.items():
        key = "".join(str(bits[j]) for j in code.outputs)
        dist[key] = dist.get(key, 0.0) + abs(a) ** 2
    return Distribution(dist)


# ---------------------------------------------------------------------------
# recognition


EXACT_TOL = 1e-9


@dataclass(frozen=True)
class Verdict:
    x: str
    p_accept: float
    p_reject: float
    member: bool


@dataclass(frozen=True)
class RecognitionReport:
    model: str  # "machine" or "circuit"
    eta: float
    rows: tuple = field(default_factory=tuple)

    @staticmethod
    def _correct(v: Verdict) -> float:
        return v.p_accept if v.member else v.p_reject

    @property
    def bounded_error(self) -> bool:
        return all(self._correct(v) >= 0.5 + self.eta - 1e-12 for v in self.rows)

    @property
    def zero_error(self) -> bool:
        """One of the two probabilities vanishes on every input."""
        return all(min(v.p_accept, v.p_reject) <= EXACT_TOL for v in self.rows)

    @property
    def exact(self) -> bool:
        return all(abs(self._correct(v) - 1.0) <= EXACT_TOL for v in self.rows)

    def lines(self) -> list[str]:
        out = [f"{v.x} accept {v.p_accept:.12g} reject {v.p_reject:.12g} member {int(v.member)}"
               for v in self.rows]
        out += [f"bounded-error(eta={self.eta:g}) {'PASS' if self.bounded_error else 'FAIL'}",
                f"zero-error {'PASS' if self.zero_error else 'FAIL'}",
                f"exact {'PASS' if self.exact else 'FAIL'}"]
        return out


def recognition_report(model, inputs: Iterable[str], eta: float, t: int | Callable | None = None,
                       language: Callable[[str], bool] | None = None) -> RecognitionReport:
    """Accept/reject probabilities per input and the three verdicts.

    ``model`` is a tracked QTM (with ``t`` an int or a function of |x|) or a
    2-output IOCircuit (accept = mass on 01, reject = mass on 00).  When no
    ``language`` is given, x counts as a member iff p_accept > p_reject.
    """
    rows = []
    if isinstance(model, QTM):
        kind = "machine"
        if t is None:
            raise MachineError("machines need a computation time t")
    elif isinstance(model, IOCircuit):
        kind = "circuit"
        if len(model.outputs) != 2:
            raise ValueError("circuit recognizers need exactly two output wires")
    else:
        raise TypeError("model must be a QTM or an IOCircuit")
    for x in inputs:
        if kind == "machine":
            steps = t(len(x)) if callable(t) else t
            pa, pr = accept_probs(model, x, steps)
        else:
            d = output_distribution(model, x)
            pa, pr = d["01"], d["00"]
        member = language(x) if language is not None else pa > pr
        rows.append(Verdict(x, float(pa), float(pr), bool(member)))
    return RecognitionReport(kind, float(eta), tuple(rows))


def distribution_tv(d1, d2) -> float:
    return total_variation(d1, d2)


__all__ = [
    "ApproxGate", "BudgetInfeasible", "RecognitionReport", "UniversalRun", "Verdict",
    "approximate_gate", "code_accuracy_log10", "execute_code", "per_g1_budget",
    "recognition_report", "universal_simulate",
]
