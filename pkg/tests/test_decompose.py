"""Angle approximation, one-qubit factors, unitary decomposition, G_R rewriting, matrix codes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtmcircuit.angles import R, TWO_PI, Angle, compute_R, r_multiple, r_terms
from qtmcircuit.circuit import CNOT, Circuit, circuit_unitary, make_elementary
from qtmcircuit.decompose import (
    ACC_BLANK, DecompositionError, acc, angle_bound, approx_angle, decompose_unitary,
    gpc_to_gr, matrix_code, mcx_ops, one_qubit_factor, operator_norm, ops_to_circuit,
    reconstruction_error, run_length_unitary, size_bound, strip_idle_wires,
)
from qtmcircuit.qcfcode import decode, qft_family

from oracles import brute_force_k, haar_unitary, mcx_matrix, r_mp

HADAMARD = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


# --- R and angle approximation ------------------------------------------------------

def test_r_series_terms():
    assert r_terms(8) == [1, 2, 3]
    assert float(compute_R(4)) == pytest.approx(TWO_PI * 0.3125)
    assert float(compute_R(8)) == pytest.approx(TWO_PI * (0.3125 + 2 ** -8))


def test_r_matches_high_precision_oracle():
    assert R == pytest.approx(float(r_mp()), abs=1e-15)
    assert compute_R(16) <= compute_R(64) <= compute_R(128)


def test_r_multiples_exact_for_large_k():
    import mpmath
    with mpmath.workdps(80):
        r = r_mp(100)
        for k in (1, 3, 1000, 123456789, 2 ** 40 + 7):
            ref = float((k * r) % (2 * mpmath.pi))
            assert float(r_multiple(k)) == pytest.approx(ref, abs=1e-9)


def test_approx_angle_trivial_cases():
    a = approx_angle(0.0, 0.1)
    assert a.k == 0 and a.residual == 0
    a = approx_angle(R, 1e-9)
    assert a.k == 1 and a.residual <= 1e-12


def test_approx_angle_quarter_turn():
    a = approx_angle(math.pi / 2, 1e-2)
    assert a.residual <= 1e-2
    assert a.k == brute_force_k(math.pi / 2, 1e-2)


@settings(max_examples=10, deadline=None)
@given(st.floats(0, TWO_PI), st.floats(1e-2, 1e-1))
def test_approx_angle_is_minimal(theta, eps):
    a = approx_angle(theta, eps)
    assert a.residual <= eps
    assert a.k == brute_force_k(theta, eps)
    assert a.k <= angle_bound(eps)


def test_approx_angle_rejects_zero_epsilon():
    with pytest.raises(ValueError):
        approx_angle(1.0, 0)


def test_acc():
    assert acc(1) == 0 and acc(0.5) == 1 and acc(0.3) == 2 and acc(0) == ACC_BLANK


# --- one-qubit factors ------------------------------------------------------------------

def test_hadamard_factor():
    f = one_qubit_factor(HADAMARD, exact_tokens=True)
    assert [(t, a.token()) for t, a in f.gates] == [("R3", "pi*1/1"), ("R1", "pi*1/4")]
    assert np.allclose(f.matrix(), HADAMARD)


def test_identity_factor_is_empty():
    f = one_qubit_factor(np.eye(2))
    assert f.gates == () and f.phase == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_u2_factor(seed):
    U = haar_unitary(2, np.random.default_rng(seed))
    assert np.max(np.abs(one_qubit_factor(U).matrix() - U)) <= 1e-8


def test_factor_rejects_non_unitary():
    with pytest.raises(DecompositionError):
        one_qubit_factor(np.array([[1, 1], [0, 1]]))


# --- decomposition ------------------------------------------------------------------------

def test_cnot_is_single_step():
    d = decompose_unitary(CNOT)
    assert len(d.circuit) == 1 and d.circuit.steps[0].gate is CNOT


def test_identity_is_empty():
    assert len(decompose_unitary(np.eye(8)).circuit) == 0


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_controlled_phase(k):
    B = np.diag([1, 1, 1, np.exp(1j * math.pi / 2 ** k)])
    d = decompose_unitary(B)
    assert reconstruction_error(B, d.circuit, norm="op") <= 1e-8


@pytest.mark.parametrize("n", [2, 3])
def test_haar_random(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        U = haar_unitary(2 ** n, rng)
        d = decompose_unitary(U)
        assert reconstruction_error(U, d.circuit, norm="op") <= 1e-8
        assert d.size <= size_bound(n)


@pytest.mark.parametrize("controls,target,n", [([1, 2], 3, 3), ([1, 2, 3], 4, 5), ([2, 4, 5, 1], 3, 6)])
def test_mcx_permutation(controls, target, n):
    dirty = [w for w in range(1, n + 1) if w not in controls and w != target]
    c = ops_to_circuit(mcx_ops(controls, target, dirty), n)
    assert np.allclose(circuit_unitary(c).dense(), mcx_matrix(n, controls, target), atol=1e-10)


def test_strip_idle_wires():
    A = haar_unitary(4, np.random.default_rng(0))
    kept, reduced = strip_idle_wires(np.kron(np.kron(np.eye(2), A), np.eye(2)), 4)
    assert kept == [2, 3]
    assert np.allclose(reduced.toarray(), A)


def test_non_unitary_rejected():
    with pytest.raises(DecompositionError):
        decompose_unitary(np.diag([1, 1, 1, 2]))


# --- G_PC -> G_R ----------------------------------------------------------------------------

def test_gr_empty():
    assert len(gpc_to_gr(Circuit(2), 0.1).circuit) == 0


def test_gr_single_rotation():
    c = Circuit(1).then(make_elementary("R3", Angle.pi(1)), 1)
    rw = gpc_to_gr(c, 1e-2)
    assert all(s.gate.label == "R3" and s.gate.params[0] == Angle.r(1) for s in rw.circuit.steps)
    assert len(rw.circuit) == rw.multiples[0]
    diff = run_length_unitary(rw.circuit) - circuit_unitary(c).dense()
    assert operator_norm(diff) <= 1e-2


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_gr_qft2(eps):
    c = decode(qft_family(2)).circuit
    rw = gpc_to_gr(c, eps)
    assert operator_norm(run_length_unitary(rw.circuit) - circuit_unitary(c).dense()) <= eps


# --- matrix codes ------------------------------------------------------------------------------

def test_matrix_code_identity():
    code = matrix_code(np.eye(4), 0.1)
    assert code.bound == 0
    assert np.allclose(code.decoded().toarray(), np.eye(4))


def test_matrix_code_hadamard():
    code = matrix_code(HADAMARD, 2 ** -10)
    assert operator_norm(code.decoded().toarray() - HADAMARD) <= 2 ** -10
    re, im = code.entry(0, 0)
    assert re.denominator == 2 ** code.exponent or (re * 2 ** code.exponent).denominator == 1


def test_matrix_code_zero_epsilon_needs_dyadic():
    with pytest.raises(DecompositionError):
        matrix_code(HADAMARD, 0)
    assert matrix_code(np.eye(2), 0).bound == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.floats(1e-6, 0.5), st.integers(0, 2**31 - 1))
def test_matrix_code_within_epsilon(n, eps, seed):
    U = haar_unitary(2 ** n, np.random.default_rng(seed))
    code = matrix_code(U, eps)
    assert operator_norm(code.decoded().toarray() - U) <= eps
