"""Gates, wiring, dense/sparse simulation and output distributions."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtmcircuit.angles import Angle
from qtmcircuit.circuit import (
    CNOT, Circuit, CircuitError, CircuitStep, Gate, IOCircuit, SparseVector, apply_circuit,
    apply_circuit_sparse, circuit_unitary, complete_wiring, make_elementary, output_distribution,
    run_io,
)

from oracles import CNOT as CNOT_M, embed, rot


def test_cnot_truth_table():
    io = IOCircuit.make(Circuit(2).then(CNOT, 1, 2), [1, 2], [1, 2])
    assert dict(output_distribution(io, "10")) == {"11": 1.0}
    assert dict(output_distribution(io, "11")) == {"10": 1.0}
    assert dict(output_distribution(io, "01")) == {"01": 1.0}


def test_reversed_cnot():
    io = IOCircuit.make(Circuit(2).then(CNOT, 2, 1), [1, 2], [1, 2])
    assert dict(output_distribution(io, "11")) == {"01": 1.0}


def test_rotation_matrices():
    th = 0.37
    assert np.allclose(make_elementary("R1", th).dense(), [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert np.allclose(make_elementary("R2", th).dense(), np.diag([np.exp(1j * th), 1]))
    assert np.allclose(make_elementary("R3", th).dense(), np.diag([1, np.exp(1j * th)]))


def test_hadamard_from_rotations():
    c = Circuit(1).then(make_elementary("R3", Angle.pi(1)), 1).then(make_elementary("R1", Angle.pi(1, 4)), 1)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert np.allclose(circuit_unitary(c).dense(), h, atol=1e-12)


def test_non_unitary_gate_rejected():
    with pytest.raises(CircuitError):
        Gate(1, matrix=[[1, 1], [0, 1]])


def test_wiring_completion():
    assert complete_wiring((3, 1), 4) == (3, 1, 2, 4)
    with pytest.raises(CircuitError):
        complete_wiring((1, 1), 2)
    with pytest.raises(CircuitError):
        complete_wiring((5,), 4)


def test_io_constants_cover_non_inputs():
    with pytest.raises(CircuitError):
        IOCircuit(Circuit(3), (1,), (1,), {2: 0})
    io = IOCircuit.make(Circuit(3), [2], [1, 2, 3], {3: 1})
    assert io.constants == {1: 0, 3: 1}
    assert dict(output_distribution(io, "1")) == {"011": 1.0}


def test_input_validation():
    io = IOCircuit.make(Circuit(2), [1, 2], [1])
    with pytest.raises(CircuitError):
        run_io(io, "1")
    with pytest.raises(CircuitError):
        run_io(io, "1a")


def _random_circuit(rng, n, depth):
    c = Circuit(n)
    for _ in range(depth):
        if n > 1 and rng.random() < 0.4:
            a, b = rng.choice(np.arange(1, n + 1), 2, replace=False)
            c = c.then(CNOT, int(a), int(b))
        else:
            tag = f"R{rng.integers(1, 4)}"
            c = c.then(make_elementary(tag, float(rng.uniform(0, 2 * np.pi))), int(rng.integers(1, n + 1)))
    return c


def _oracle_unitary(c):
    n = c.width
    out = np.eye(2 ** n, dtype=complex)
    for s in c.steps:
        g = s.gate
        m = CNOT_M if g.label == "M2N" else rot(g.label, float(g.params[0]))
        out = embed(m, s.pins, n) @ out
    return out


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 25), st.integers(0, 2**31 - 1))
def test_unitary_matches_kron_oracle(n, depth, seed):
    c = _random_circuit(np.random.default_rng(seed), n, depth)
    assert np.allclose(circuit_unitary(c).dense(), _oracle_unitary(c), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 30), st.integers(0, 2**31 - 1))
def test_sparse_and_dense_agree(n, depth, seed):
    rng = np.random.default_rng(seed)
    c = _random_circuit(rng, n, depth)
    start = int(rng.integers(2 ** n))
    psi = np.zeros(2 ** n, complex)
    psi[start] = 1
    dense = apply_circuit(c, psi)
    sparse = apply_circuit_sparse(c, SparseVector.basis(start))
    back = np.zeros(2 ** n, complex)
    back[sparse.idx] = sparse.amp
    assert np.allclose(dense, back, atol=1e-12)
    assert np.linalg.norm(dense) == pytest.approx(1.0, abs=1e-9)


def test_step_on_and_pins():
    s = CircuitStep.on(CNOT, [3, 1], 3)
    assert s.pins == (3, 1)
    c = Circuit(3, (s,))
    assert c.gate_counts()["M2N"] == 1
