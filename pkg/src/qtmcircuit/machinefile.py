"""Text format for single-tape machines.

::

    states q0 q1 qf
    alphabet B 0 1
    blank 0
    initial 0
    final 2
    tracks B 0 1 ; B 0 1        (optional)
    rule q0 B q1 1 R 1/sqrt2 0

``blank``, ``initial`` and ``final`` are indices into the preceding lists.
Directions are L, N, R.  Each amplitude is a pair (re, im) of tokens: a
decimal, a rational ``p/q``, or one of ``1/sqrt2``, ``cos(R)``, ``sin(R)``
with an optional leading minus sign.  Lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .angles import R
from .machine import QTM, MachineError, TransitionFunction, TuringFrame

DIRECTIONS = {"L": -1, "N": 0, "R": 1}
_DIR_NAMES = {v: k for k, v in DIRECTIONS.items()}
SYMBOLIC = {"1/sqrt2": 1 / math.sqrt(2), "cos(R)": math.cos(R), "sin(R)": math.sin(R)}


def parse_amplitude_token(tok: str) -> float:
    sign = 1.0
    body = tok
    if body.startswith("-"):
        sign, body = -1.0, body[1:]
    if body in SYMBOLIC:
        return sign * SYMBOLIC[body]
    if body.startswith(("-", "+")):
        raise MachineError(f"bad amplitude token {tok!r}")
    try:
        if "/" in body:
            return sign * float(Fraction(body))
        return sign * float(body)
    except (ValueError, ZeroDivisionError):
        raise MachineError(f"bad amplitude token {tok!r}") from None


def amplitude_token(x: float) -> str:
    """Shortest token that loads back to exactly ``x``."""
    if x == 0:
        return "0"
    for name, value in SYMBOLIC.items():
        if x == value:
            return name
        if x == -value:
            return "-" + name
    sign = "-" if x < 0 else ""
    ax = abs(x)
    q = Fraction(ax).limit_denominator(1 << 20)
    if float(q) == ax:
        return sign + (str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}")
    return sign + repr(ax)


def _index(words: list, names: tuple, what: str) -> int:
    if len(words) != 1:
        raise MachineError(f"{what} takes a single index")
    try:
        i = int(words[0])
    except ValueError:
        raise MachineError(f"{what} index {words[0]!r} is not an integer") from None
    if not 0 <= i < len(names):
        raise MachineError(f"{what} index {i} out of range")
    return i


def loads(text: str, check: bool = False) -> QTM:
    """Parse a machine file.  The unitarity report is computed and attached;
    with ``check=True`` a non-unitary machine raises MachineError."""
    fields: dict = {}
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *words = line.split()
        if key == "rule":
            if len(words) != 7:
                raise MachineError(f"line {lineno}: rule needs q s p t d re im")
            q, s, p, tau, d, re, im = words
            if d not in DIRECTIONS:
                raise MachineError(f"line {lineno}: direction must be L, N or R")
            amp = complex(parse_amplitude_token(re), parse_amplitude_token(im))
            rules.append((q, s, p, tau, DIRECTIONS[d], amp))
        elif key in ("states", "alphabet", "blank", "initial", "final", "tracks"):
            if key in fields:
                raise MachineError(f"line {lineno}: duplicate {key!r}")
            fields[key] = words
        else:
            raise MachineError(f"line {lineno}: unknown keyword {key!r}")
    for key in ("states", "alphabet", "blank", "initial", "final"):
        if key not in fields:
            raise MachineError(f"missing {key!r} line")
    states, alphabet = tuple(fields["states"]), tuple(fields["alphabet"])
    frame = TuringFrame(states, alphabet, alphabet[_index(fields["blank"], alphabet, "blank")],
                        states[_index(fields["initial"], states, "initial")],
                        states[_index(fields["final"], states, "final")])
    tracks = None
    if "tracks" in fields:
        tracks = tuple(tuple(part.split()) for part in " ".join(fields["tracks"]).split(";"))
    return QTM(frame, TransitionFunction.from_entries(rules), tracks=tracks, check=check)


def dumps(machine: QTM) -> str:
    f = machine.frame
    lines = [f"states {' '.join(f.states)}", f"alphabet {' '.join(f.alphabet)}",
             f"blank {f.alphabet.index(f.blank)}", f"initial {f.states.index(f.initial)}",
             f"final {f.states.index(f.final)}"]
    if machine.tracks is not None:
        lines.append("tracks " + " ; ".join(" ".join(t) for t in machine.tracks))
    for q, s, p, tau, d, a in machine.delta.entries():
        lines.append(f"rule {q} {s} {p} {tau} {_DIR_NAMES[d]} "
                     f"{amplitude_token(a.real)} {amplitude_token(a.imag)}")
    return "\n".join(lines) + "\n"


def load(path, check: bool = False) -> QTM:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), check=check)
