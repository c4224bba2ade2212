"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also repeated in the terminal summary.
"""

import math
import time

import numpy as np

from qtmcircuit.angles import Angle
from qtmcircuit.circuit import CNOT, Circuit, circuit_unitary, make_elementary
from qtmcircuit.compiler import compile_machine, verify_t_simulation
from qtmcircuit.decompose import (
    angle_bound, approx_angle, decompose_unitary, gpc_to_gr, operator_norm, reconstruction_error,
    run_length_unitary, size_bound,
)
from qtmcircuit.machine import (
    Configuration, SparseState, TransitionFunction, TuringFrame, complete_unidirectional,
    computation_time, dovetail, evolve, initial_configuration, measure_window, to_binary_tape,
    unitarity_report,
)
from qtmcircuit.qcfcode import decode, encode, parse_code, qft_family, qft_size
from qtmcircuit.harness import execute_code, universal_simulate
from qtmcircuit.circuit import IOCircuit, output_distribution
from qtmcircuit.toys import TOY_MACHINES, violators

from oracles import brute_force_k, dft, empirical_unitarity, haar_unitary, tv


def _inputs(m):
    a = m.frame.alphabet
    return ["", a[1], a[1] + a[-1]]


# 1 -------------------------------------------------------------------------------------

def test_criterion_01_unitarity_equivalence(verdict):
    start = time.perf_counter()
    machines = [TOY_MACHINES[n]() for n in ("stay", "hadamard", "right3", "left", "walker3")]
    machines += list(violators().values())
    wrong = sum(m.report.passed != empirical_unitarity(m) for m in machines)
    valid = sum(m.report.passed for m in machines)
    elapsed = time.perf_counter() - start
    ok = len(machines) >= 10 and valid == 5 and wrong == 0 and elapsed < 5
    assert verdict(1, ok, f"{len(machines)} machines, {wrong} false verdicts, {elapsed:.2f}s")


# 2 -------------------------------------------------------------------------------------

def test_criterion_02_compiler_exactness(verdict):
    start = time.perf_counter()
    cases, worst = 0, 0.0
    for name in sorted(TOY_MACHINES):
        m = TOY_MACHINES[name]()
        for t in (1, 2, 3):
            for x in _inputs(m):
                worst = max(worst, verify_t_simulation(m, t, [x]))
                cases += 1
    elapsed = time.perf_counter() - start
    ok = cases >= 24 and worst <= 1e-9 and elapsed < 60
    assert verdict(2, ok, f"{cases} cases, max TV {worst:.2e}, {elapsed:.1f}s")


# 3 -------------------------------------------------------------------------------------

def test_criterion_03_size_formula(verdict):
    sizes = {t: compile_machine(TOY_MACHINES["hadamard"](), t).size for t in (1, 2, 3)}
    ok = all(s == 2 * t * t for t, s in sizes.items())
    assert verdict(3, ok, f"step counts {sizes}")


# 4 -------------------------------------------------------------------------------------

def test_criterion_04_binary_tape(verdict):
    worst, factors = 0.0, {}
    for name in ("hadamard", "walker3", "dft4", "shift4"):
        m = TOY_MACHINES[name]()
        b = to_binary_tape(m)
        k = math.ceil(math.log2(len(m.frame.alphabet)))
        factors[len(m.frame.alphabet)] = b.factor
        assert b.factor == 3 * k
        for x in _inputs(m)[:2]:
            state = SparseState.basis(b.encode_configuration(initial_configuration(m.frame, tuple(x))))
            for t in (1, 2, 3):
                state = evolve(b.machine, state, b.factor)
                worst = max(worst, tv(b.decoded_window(state, t), measure_window(m, x, t)))
    ok = worst <= 1e-9 and factors == {2: 3, 4: 6}
    assert verdict(4, ok, f"step ratios {factors}, max TV {worst:.2e}")


# 5 -------------------------------------------------------------------------------------

def _random_partial(rng):
    nq, ns = int(rng.integers(2, 5)), int(rng.integers(2, 4))
    states = tuple(["q0"] + [f"q{i}" for i in range(1, nq - 1)] + ["qf"])
    alphabet = ("B", "1", "2")[:ns]
    frame = TuringFrame(states, alphabet, "B", "q0", "qf")
    direction = {p: int(rng.integers(-1, 2)) for p in states}
    targets = [(p, s) for p in states for s in alphabet]
    keys = [(q, s) for q in states for s in alphabet]
    m = int(rng.integers(1, len(keys) + 1))
    support = rng.choice(len(targets), size=int(rng.integers(m, len(targets) + 1)), replace=False)
    block = haar_unitary(len(support), rng)[:, :m]
    chosen = rng.choice(len(keys), size=m, replace=False)
    entries = []
    for col, ki in enumerate(chosen):
        q, s = keys[ki]
        for row, ti in enumerate(support):
            p, tau = targets[ti]
            entries.append((q, s, p, tau, direction[p], complex(block[row, col])))
    return frame, TransitionFunction.from_entries(entries), [keys[i] for i in chosen]


def test_criterion_05_completion(verdict):
    rng = np.random.default_rng(5)
    passed = agreed = 0
    for _ in range(20):
        frame, partial, defined = _random_partial(rng)
        full = complete_unidirectional(partial, frame)
        passed += unitarity_report(full, frame).passed and full.is_unidirectional()
        agreed += all(full.row(*k) == partial.row(*k) for k in defined)
    ok = passed == agreed == 20
    assert verdict(5, ok, f"20 random partial functions: {passed} unitary, {agreed} agree on S")


# 6 -------------------------------------------------------------------------------------

def _renamed(state, rename):
    return {Configuration(rename(c.state), c.tape, c.head): a for c, a in state.items()}


def _state_gap(d1, d2):
    return max((abs(d1.get(k, 0) - d2.get(k, 0)) for k in set(d1) | set(d2)), default=0.0)


def test_criterion_06_dovetailing(verdict):
    worst, checks = 0.0, 0
    for n1, n2 in (("stay", "walker3"), ("hadamard", "hwalker3"), ("walker3", "hwalker3")):
        m1, m2 = TOY_MACHINES[n1](), TOY_MACHINES[n2]()
        dv = dovetail(m1, m2)
        for x in ("", "1", "11"):
            c0 = SparseState.basis(initial_configuration(m1.frame, tuple(x)))
            d0 = SparseState(_renamed(c0, dv.from_first))
            s = computation_time(m1, x, 20)
            for t in range(0, min(s, 4)):  # first equation, t < s
                gap = _state_gap(dict(evolve(dv.machine, d0, t).items()),
                                 _renamed(evolve(m1, c0, t), dv.from_first))
                worst, checks = max(worst, gap), checks + 1
            halted = evolve(m1, c0, s)
            assert all(c.state == m1.frame.final and c.head == 0 for c in halted)
            restart = SparseState({Configuration(m2.frame.initial, c.tape, 0): a for c, a in halted.items()})
            s2 = min(computation_time(m2, "".join(sym for _, sym in c.tape), 20) for c in halted)
            for t in range(0, min(s2, 3) + 1):  # second equation, up to m2's halting time
                gap = _state_gap(dict(evolve(dv.machine, d0, s + t).items()),
                                 _renamed(evolve(m2, restart, t), dv.from_second))
                worst, checks = max(worst, gap), checks + 1
    ok = worst <= 1e-9
    assert verdict(6, ok, f"3 pairs, {checks} state identities, max gap {worst:.2e}")


# 7 -------------------------------------------------------------------------------------

def test_criterion_07_angle_approximation(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    bad = 0
    ratio = 0.0
    for _ in range(50):
        theta = float(rng.uniform(0, 2 * math.pi))
        eps = float(10 ** rng.uniform(-3, -1))
        a = approx_angle(theta, eps)
        bad += not (a.residual <= eps and a.k == brute_force_k(theta, eps) and a.k <= angle_bound(eps))
        ratio = max(ratio, a.k / angle_bound(eps))
    elapsed = time.perf_counter() - start
    ok = bad == 0 and elapsed < 30
    assert verdict(7, ok, f"50 pairs, {bad} failures, max k/bound {ratio:.2e}, {elapsed:.1f}s")


# 8 -------------------------------------------------------------------------------------

def test_criterion_08_decomposition(verdict):
    gates = {f"{tag}({ang.token()})": make_elementary(tag, ang)
             for tag in ("R1", "R2", "R3") for ang in (Angle.pi(1, 4), Angle.r(1), Angle.pi(-2, 3))}
    gates["M2N"] = CNOT
    for k in (1, 2, 3, 4):
        gates[f"B{k}"] = np.diag([1, 1, 1, np.exp(1j * math.pi / 2 ** k)])
    cc = compile_machine(TOY_MACHINES["hadamard"](), 1)
    gates["G1"], gates["G2"] = cc.g1, cc.g2
    rng = np.random.default_rng(8)
    for i in range(20):
        gates[f"haar{i}"] = haar_unitary(2 ** (1 + i % 3), rng)
    worst, over = 0.0, []
    for name, g in gates.items():
        dec = decompose_unitary(g)
        worst = max(worst, reconstruction_error(g, dec.circuit, norm="op"))
        n = int(math.log2(g.shape[0])) if isinstance(g, np.ndarray) else g.arity
        if dec.size > size_bound(n):
            over.append(name)
    ok = worst <= 1e-8 and not over
    assert verdict(8, ok, f"{len(gates)} gates, max op-norm error {worst:.2e}, over size bound {over}")


# 9 -------------------------------------------------------------------------------------

def test_criterion_09_qft(verdict):
    worst, counts_ok = 0.0, True
    for n in range(1, 6):
        code = qft_family(n)
        U = circuit_unitary(decode(code).circuit).dense()
        rev = [int(format(i, f"0{n}b")[::-1], 2) for i in range(2 ** n)]
        worst = max(worst, operator_norm(U - dft(n)[rev, :]))
        counts_ok &= len(code) == qft_size(n) == 2 * n + 7 * n * (n - 1) // 2
    ok = worst <= 1e-9 and counts_ok
    assert verdict(9, ok, f"n<=5 max op-norm error {worst:.2e} (output bit-reversed), counts match {counts_ok}")


# 10 ------------------------------------------------------------------------------------

def _random_pc_circuit(rng):
    n = int(rng.integers(1, 6))
    c = Circuit(n)
    for _ in range(int(rng.integers(1, 9))):
        if n > 1 and rng.random() < 0.4:
            a, b = rng.choice(np.arange(1, n + 1), 2, replace=False)
            c = c.then(CNOT, int(a), int(b))
        else:
            ang = Angle.pi(int(rng.integers(-15, 16)), int(2 ** rng.integers(0, 5)))
            c = c.then(make_elementary(f"R{rng.integers(1, 4)}", ang), int(rng.integers(1, n + 1)))
    return c


def test_criterion_10_gr_rewriting(verdict):
    rng = np.random.default_rng(10)
    circuits = [decode(qft_family(2)).circuit, decode(qft_family(3)).circuit]
    circuits += [_random_pc_circuit(rng) for _ in range(10)]
    failures, ratio = 0, 0.0
    for eps in (0.1, 0.05):
        for c in circuits:
            rw = gpc_to_gr(c, eps)
            err = operator_norm(run_length_unitary(rw.circuit) - circuit_unitary(c).dense())
            failures += err > eps
            ratio = max(ratio, err / eps)
    ok = failures == 0
    assert verdict(10, ok, f"{2 * len(circuits)} rewrites, {failures} over budget, max error/eps {ratio:.3f}")


# 11 ------------------------------------------------------------------------------------

NOISE_FLOOR = 1e-12  # TV differences below this are floating-point noise


def test_criterion_11_universal(verdict):
    start = time.perf_counter()
    eps_list = (0.2, 0.1, 0.05)
    over = rising = runs = 0
    worst = 0.0
    for name in sorted(TOY_MACHINES):
        m = TOY_MACHINES[name]()
        x = m.frame.alphabet[1]
        for t in (1, 2, 3):
            tvs = [universal_simulate(m, t, e, x).tv for e in eps_list]
            runs += len(tvs)
            over += sum(v > e for v, e in zip(tvs, eps_list))
            rising += sum(b > a + NOISE_FLOOR for a, b in zip(tvs, tvs[1:]))
            worst = max(worst, *tvs)
    elapsed = time.perf_counter() - start
    ok = over == 0 and rising == 0 and elapsed < 300
    assert verdict(11, ok, f"{runs} runs, {over} above eps, {rising} increases, max TV {worst:.2e}, "
                           f"{elapsed:.1f}s")


# 12 ------------------------------------------------------------------------------------

def _random_io(rng):
    n = int(rng.integers(1, 6))
    c = _random_pc_circuit(rng) if rng.random() < 0.5 else Circuit(n)
    n = c.width
    inputs = sorted(rng.choice(np.arange(1, n + 1), int(rng.integers(0, n + 1)), replace=False).tolist())
    consts = {w: int(rng.integers(0, 2)) for w in range(1, n + 1) if w not in inputs}
    outputs = rng.permutation(np.arange(1, n + 1))[: int(rng.integers(1, n + 1))].tolist()
    return IOCircuit(c, tuple(inputs), tuple(outputs), consts)


def _as_r_circuit(io):
    """Same wiring, with every rotation replaced by R_{h,R}."""
    steps = [s if s.gate.label == "M2N" else type(s)(make_elementary(s.gate.label, Angle.r(1)), s.wiring)
             for s in io.circuit.steps]
    return IOCircuit(Circuit(io.circuit.width, tuple(steps)), io.inputs, io.outputs, io.constants)


def test_criterion_12_codec(verdict):
    rng = np.random.default_rng(12)
    mismatched, codes, worst = 0, 0, 0.0
    for i in range(200):
        io = _random_io(rng)
        flavor = ("PC", "R", "G")[i % 3]
        if flavor == "R":
            io = _as_r_circuit(io)
        text = encode(io, flavor).text()
        again = encode(decode(parse_code(text)), flavor).text()
        mismatched += again != text
        codes += 1
        if flavor != "G":
            x = "".join(rng.choice(["0", "1"]) for _ in io.inputs)
            worst = max(worst, tv(execute_code(text, x), output_distribution(decode(text), x)))
    ok = mismatched == 0 and worst <= 1e-12
    assert verdict(12, ok, f"{codes} codes, {mismatched} round-trip mismatches, interpreter max TV {worst:.2e}")
