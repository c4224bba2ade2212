"""Command-line interface.

Exit status: 0 on success, 1 when a check or validation fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .angles import Angle
from .circuit import CircuitError, IOCircuit, make_elementary
from .compiler import CompileError, compile_machine, verify_t_simulation
from .decompose import DecompositionError, approx_angle, decompose_unitary, reconstruction_error
from .distribution import Distribution
from .machine import MachineError, measure_window
from .machinefile import dumps, load
from .qcfcode import (QFT_FAMILY, EMPTY_FAMILY, CodecError, circuit_text, decode, encode,
                      family_size, parse_circuit_text, parse_code, qft_family)
from .toys import TOY_MACHINES

VALIDATION_ERRORS = (MachineError, CodecError, CircuitError, CompileError, DecompositionError,
                     ValueError, OSError)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _print_dist(d) -> None:
    for line in Distribution(d).lines():
        print(line)


def cmd_check(args) -> int:
    m = load(args.machine)
    for line in m.report.lines():
        print(line)
    return 0 if m.report.passed else 1


def cmd_run(args) -> int:
    m = load(args.machine, check=True)
    _print_dist(measure_window(m, args.input, args.steps))
    return 0


def cmd_compile(args) -> int:
    m = load(args.machine, check=True)
    cc = compile_machine(m, args.t)
    if args.code:
        io = IOCircuit.make(cc.circuit, range(1, cc.layout.width + 1), range(1, cc.layout.width + 1))
        print(encode(io, "G").text())
    else:
        lay = cc.layout
        print(f"l0 {lay.l0}\nlambda {lay.lam}\ncell_bits {lay.l}\nwidth {lay.width}\nsteps {cc.size}")
    return 0


def cmd_verify(args) -> int:
    m = load(args.machine, check=True)
    tv = verify_t_simulation(m, args.t, args.input)
    print(f"tv {tv:.3e}")
    return 0 if tv <= args.tol else 1


def cmd_decompose(args) -> int:
    if args.matrix:
        U = np.loadtxt(args.matrix, dtype=float)
        U = U[:, 0::2] + 1j * U[:, 1::2]
    else:
        U = make_elementary(args.gate, Angle.parse(args.angle) if args.angle else None).dense()
    dec = decompose_unitary(U, exact_tokens=args.listing)
    err = reconstruction_error(U, dec.circuit)
    if args.listing:
        n = dec.circuit.width
        sys.stdout.write(circuit_text(IOCircuit.make(dec.circuit, range(1, n + 1), range(1, n + 1))))
    else:
        print(f"arity {dec.circuit.width}\ngates {len(dec.circuit)}\nerror {err:.3e}")
    return 0 if err <= 1e-8 else 1


def cmd_angle(args) -> int:
    a = approx_angle(args.theta, args.eps)
    print(f"k {a.k}\nresidual {a.residual:.6e}")
    return 0


def cmd_codec(args) -> int:
    text = _read(args.file)
    if args.action == "encode":
        print(encode(parse_circuit_text(text), args.flavor).text())
    else:
        sys.stdout.write(circuit_text(decode(parse_code(text.rstrip("\n")))))
    return 0


def cmd_qft(args) -> int:
    print(qft_family(args.n).text())
    return 0


def cmd_execute(args) -> int:
    from .harness import execute_code

    _print_dist(execute_code(_read(args.file).rstrip("\n"), args.input))
    return 0


def cmd_universal(args) -> int:
    from .harness import universal_simulate

    m = load(args.machine, check=True)
    run = universal_simulate(m, args.t, args.eps, args.input)
    _print_dist(run.distribution)
    print(f"# budget {run.budget:.6e} g1_error {run.g1_error:.3e} tv {run.tv:.3e}")
    return 0 if run.within else 1


def cmd_recognize(args) -> int:
    from .harness import recognition_report

    if args.code:
        model = decode(parse_code(_read(args.code).rstrip("\n")))
    else:
        model = load(args.machine, check=True)
    rep = recognition_report(model, args.inputs, args.eta, t=args.t)
    for line in rep.lines():
        print(line)
    return 0


def cmd_family_size(args) -> int:
    gen = {"qft": QFT_FAMILY, "empty": EMPTY_FAMILY}[args.family]
    for n, count in family_size(gen, args.n_max):
        print(f"{n} {count}")
    return 0


def cmd_toy(args) -> int:
    sys.stdout.write(dumps(TOY_MACHINES[args.name]()))
    return 0


def cmd_report(args) -> int:
    from .report import write_report

    for path in write_report(args.out):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qtmcircuit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", help="unitarity report of a machine file")
    s.add_argument("machine")
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("run", help="window distribution after t steps")
    s.add_argument("machine")
    s.add_argument("--input", default="")
    s.add_argument("--steps", type=int, required=True)
    s.set_defaults(fn=cmd_run)

    s = sub.add_parser("compile", help="compile a machine into a {G1, G2} circuit")
    s.add_argument("machine")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--code", action="store_true", help="print the G-code instead of a summary")
    s.set_defaults(fn=cmd_compile)

    s = sub.add_parser("verify", help="t-simulation check of the compiled circuit")
    s.add_argument("machine")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--input", action="append", default=None)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("decompose", help="decompose an elementary gate or a matrix file")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--gate", choices=["R1", "R2", "R3", "M2N"])
    g.add_argument("--matrix", help="rows of 're im' pairs")
    s.add_argument("--angle", help="angle token such as pi*1/4")
    s.add_argument("--listing", action="store_true", help="print the circuit listing")
    s.set_defaults(fn=cmd_decompose)

    s = sub.add_parser("angle", help="least k with k*R within eps of theta")
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.set_defaults(fn=cmd_angle)

    s = sub.add_parser("codec", help="convert between circuit listings and codes")
    codec = s.add_subparsers(dest="action", required=True)
    e = codec.add_parser("encode", help="circuit listing -> canonical code")
    e.add_argument("file", nargs="?", default="-")
    e.add_argument("--flavor", choices=["PC", "R", "G"], default="PC")
    d = codec.add_parser("decode", help="canonical code -> circuit listing")
    d.add_argument("file", nargs="?", default="-")
    s.set_defaults(fn=cmd_codec)

    s = sub.add_parser("qft", help="PC-code of the QFT circuit on n wires")
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(fn=cmd_qft)

    s = sub.add_parser("execute", help="run an R- or PC-code entry by entry")
    s.add_argument("file", nargs="?", default="-")
    s.add_argument("--input", required=True)
    s.set_defaults(fn=cmd_execute)

    s = sub.add_parser("universal", help="simulate with approximated G1 gates")
    s.add_argument("machine")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--input", default="")
    s.set_defaults(fn=cmd_universal)

    s = sub.add_parser("recognize", help="accept/reject probabilities and verdicts")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--machine")
    src.add_argument("--code", help="circuit code file with two outputs")
    s.add_argument("--t", type=int)
    s.add_argument("--eta", type=float, default=0.1)
    s.add_argument("inputs", nargs="+")
    s.set_defaults(fn=cmd_recognize)

    s = sub.add_parser("family-size", help="entry counts of a circuit family")
    s.add_argument("--family", choices=["qft", "empty"], default="qft")
    s.add_argument("--n-max", type=int, default=8)
    s.set_defaults(fn=cmd_family_size)

    s = sub.add_parser("toy", help="print a built-in machine file")
    s.add_argument("name", choices=sorted(TOY_MACHINES))
    s.set_defaults(fn=cmd_toy)

    s = sub.add_parser("report", help="write CSV tables and a PNG figure")
    s.add_argument("--out", default="report")
    s.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and not args.input:
        args.input = [""]
    if args.command == "recognize" and args.machine and args.t is None:
        parser.error("argument --t is required with --machine")
    try:
        return args.fn(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
