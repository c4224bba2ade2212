"""Machine-to-circuit compiler: G1, G2, layout, encoding and exact t-simulation."""

import numpy as np
import pytest

from qtmcircuit.circuit import CircuitStep, SparseVector, apply_step_sparse
from qtmcircuit.compiler import (
    HEAD, IDLE, MOVED, CellLayout, CompileError, build_G1, build_G2, compile_machine,
    encode_bits, flag_profile, verify_t_simulation,
)
from qtmcircuit.compiler import _G1Index
from qtmcircuit.machine import MultiTapeQTM
from qtmcircuit.toys import TOY_MACHINES, m_h, m_stay


def _apply(gate, index):
    col = gate.csc()[:, index]
    return {int(i): complex(v) for i, v in zip(col.indices, col.data)}


def test_g1_moves_head_for_stay():
    m = m_stay()
    g1 = build_G1(m)
    ix = _G1Index(m)
    for s1 in ("B", "1"):
        w = ix("q0", [(s1, IDLE), ("1", HEAD), ("B", IDLE)])
        v = ix("qf", [(s1, IDLE), ("1", MOVED), ("B", IDLE)])
        assert _apply(g1, w) == {v: pytest.approx(1.0)}


def test_g1_fixes_idle_cells():
    m = m_h()
    g1 = build_G1(m)
    ix = _G1Index(m)
    for q in ("q0", "qf"):
        i = ix(q, [("1", IDLE), ("B", IDLE), ("1", IDLE)])
        assert _apply(g1, i) == {i: pytest.approx(1.0)}


@pytest.mark.parametrize("completion", ["swap", "gram_schmidt"])
def test_g1_unitary(completion):
    g1 = build_G1(m_h(), completion)
    assert g1.arity == 10
    assert g1.unitarity_error() <= 1e-9


def test_g2_swaps_flags_and_is_involution():
    lay = CellLayout(1, 1, 1)
    g2 = build_G2(lay)
    moved = int("0" + "000" + "010" + "000", 2)
    head = int("0" + "000" + "001" + "000", 2)
    assert g2.map_indices(np.array([moved]))[0] == head
    assert g2.map_indices(np.array([0]))[0] == 0
    rng = np.random.default_rng(3)
    idx = rng.integers(0, 2 ** lay.width, size=50)
    assert np.array_equal(g2.map_indices(g2.map_indices(idx)), idx)


@pytest.mark.parametrize("t", [1, 2, 3])
def test_step_count(t):
    cc = compile_machine(m_h(), t)
    assert cc.size == 2 * t * t == t * (2 * t - 1) + t
    labels = [s.gate.label for s in cc.circuit.steps]
    assert labels[: 2 * t] == ["G1"] * (2 * t - 1) + ["G2"]


def test_t1_wiring():
    cc = compile_machine(m_stay(), 1)
    first = cc.circuit.steps[0]
    assert first.pins == tuple(cc.layout.g1_wires(0))
    assert cc.layout.width == 1 + 3 * 3


def test_encode_bits():
    m = m_stay()
    assert encode_bits("", CellLayout.for_machine(m, 1), m) == "0 | 000 001 000"
    assert encode_bits("11", CellLayout.for_machine(m, 1), m) == "0 | 000 101 100"
    for t in range(4):
        assert len(CellLayout.for_machine(m, t).cells) == 2 * t + 1


def test_compile_stay_window():
    assert dict(compile_machine(m_stay(), 1).window_distribution("1")) == {"B 1 B": 1.0}


def test_verify_examples():
    assert verify_t_simulation(m_stay(), 1, ["", "1"]) <= 1e-9
    assert verify_t_simulation(m_h(), 2, [""]) <= 1e-9
    assert verify_t_simulation(m_h(), 0, ["1"]) == 0


@pytest.mark.parametrize("name", ["stay", "hadamard", "right3", "walker3", "hwalker3", "dft4"])
def test_verify_toys(name):
    m = TOY_MACHINES[name]()
    sym = m.frame.alphabet[1]
    for t in (1, 2, 3):
        assert verify_t_simulation(m, t, ["", sym, sym + m.frame.alphabet[-1]]) <= 1e-9


def test_transcript_invariant():
    m = m_h()
    t = 2
    cc = compile_machine(m, t)
    n = cc.layout.width
    vec = SparseVector.basis(cc.encode_input("1"))
    for k, step in enumerate(cc.circuit.steps):
        vec = apply_step_sparse(vec, step, n)
        if step.gate.label == "G2":
            prof = flag_profile(vec, cc.layout)
            ok = sum(p for key, p in prof.items() if key.count("1") == 1 and "2" not in key and "3" not in key)
            assert ok == pytest.approx(1.0, abs=1e-9)


def test_rejects_multitape():
    mt = MultiTapeQTM(("q0", "qf"), (("B", "1"),), {}, "q0", "qf")
    with pytest.raises(CompileError):
        compile_machine(mt, 1)


def test_elaborated_g2_matches():
    cc = compile_machine(m_stay(), 1)
    from qtmcircuit.compiler import g2_swap_circuit
    lay = cc.layout
    swap = g2_swap_circuit(lay)
    rng = np.random.default_rng(0)
    for i in rng.integers(0, 2 ** lay.width, size=20):
        vec = SparseVector.basis(int(i))
        for s in swap.steps:
            vec = apply_step_sparse(vec, s, lay.width)
        direct = apply_step_sparse(SparseVector.basis(int(i)),
                                   CircuitStep(cc.g2, tuple(range(1, lay.width + 1))), lay.width)
        assert vec.idx.tolist() == direct.idx.tolist()
