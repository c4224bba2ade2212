"""Small named machines used by the tests, the acceptance suite and the CLI demos."""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from .machine import QTM, make_qtm

S2 = 1 / math.sqrt(2)
BINARY = ("B", "1")


def _normal_form(final, initial, alphabet):
    return [(final, s, initial, s, 1, 1.0) for s in alphabet]


def m_stay() -> QTM:
    """Moves q0 -> qf without touching the tape."""
    entries = [("q0", s, "qf", s, 0, 1.0) for s in BINARY]
    return make_qtm(["q0", "qf"], BINARY, entries + _normal_form("qf", "q0", BINARY))


def m_h() -> QTM:
    """Hadamard on the scanned cell, head stays."""
    entries = [
        ("q0", "B", "qf", "B", 0, S2), ("q0", "B", "qf", "1", 0, S2),
        ("q0", "1", "qf", "B", 0, S2), ("q0", "1", "qf", "1", 0, -S2),
    ]
    return make_qtm(["q0", "qf"], BINARY, entries + _normal_form("qf", "q0", BINARY))


def right_mover3() -> QTM:
    """3-symbol machine cycling B -> a -> b -> B under the head and moving right."""
    alphabet = ("B", "a", "b")
    cycle = dict(zip(alphabet, alphabet[1:] + alphabet[:1]))
    entries = [("q0", s, "qf", cycle[s], 1, 1.0) for s in alphabet]
    return make_qtm(["q0", "qf"], alphabet, entries + _normal_form("qf", "q0", alphabet))


def left_flipper() -> QTM:
    """Binary machine that flips the scanned bit and moves left."""
    flip = {"B": "1", "1": "B"}
    entries = [("q0", s, "qf", flip[s], -1, 1.0) for s in BINARY]
    return make_qtm(["q0", "qf"], BINARY, entries + _normal_form("qf", "q0", BINARY))


def dft4() -> QTM:
    """4-symbol machine applying the 4-point Fourier transform to the scanned symbol."""
    alphabet = ("B", "a", "b", "c")
    f = np.fft.ifft(np.eye(4), norm="ortho")
    entries = [("q0", s, "qf", tau, 0, f[j, i])
               for i, s in enumerate(alphabet) for j, tau in enumerate(alphabet)]
    return make_qtm(["q0", "qf"], alphabet, entries + _normal_form("qf", "q0", alphabet))


def left_shift4() -> QTM:
    """4-symbol machine incrementing the scanned symbol mod 4 and moving left."""
    alphabet = ("B", "a", "b", "c")
    entries = [("q0", s, "qf", alphabet[(i + 1) % 4], -1, 1.0) for i, s in enumerate(alphabet)]
    return make_qtm(["q0", "qf"], alphabet, entries + _normal_form("qf", "q0", alphabet))


def walker3() -> QTM:
    """Stationary machine with computation time 3: right, pause, back left."""
    entries = []
    for s in BINARY:
        entries += [("q0", s, "a", s, 1, 1.0), ("a", s, "b", s, 0, 1.0), ("b", s, "qf", s, -1, 1.0)]
    return make_qtm(["q0", "a", "b", "qf"], BINARY, entries + _normal_form("qf", "q0", BINARY))


def hadamard_walker3() -> QTM:
    """Like walker3, but applies a Hadamard to cell 0 on the way out."""
    entries = [
        ("q0", "B", "a", "B", 1, S2), ("q0", "B", "a", "1", 1, S2),
        ("q0", "1", "a", "B", 1, S2), ("q0", "1", "a", "1", 1, -S2),
    ]
    for s in BINARY:
        entries += [("a", s, "b", s, 0, 1.0), ("b", s, "qf", s, -1, 1.0)]
    return make_qtm(["q0", "a", "b", "qf"], BINARY, entries + _normal_form("qf", "q0", BINARY))


TOY_MACHINES = {
    "stay": m_stay,
    "hadamard": m_h,
    "right3": right_mover3,
    "left": left_flipper,
    "dft4": dft4,
    "shift4": left_shift4,
    "walker3": walker3,
    "hwalker3": hadamard_walker3,
}


# ---------------------------------------------------------------------------
# prequantum machines violating exactly the named condition


def violators() -> dict[str, QTM]:
    out = {}
    scaled = [("q0", s, "qf", s, 0, 0.8) for s in BINARY] + _normal_form("qf", "q0", BINARY)
    out["a"] = make_qtm(["q0", "qf"], BINARY, scaled, check=False)
    missing = [("q0", "B", "qf", "B", 0, 1.0)] + _normal_form("qf", "q0", BINARY)
    out["a-missing-row"] = make_qtm(["q0", "qf"], BINARY, missing, check=False)
    same_row = [("q0", "B", "qf", "B", 1, 1.0), ("q0", "1", "qf", "B", 1, 1.0)]
    out["b"] = make_qtm(["q0", "qf"], BINARY, same_row + _normal_form("qf", "q0", BINARY), check=False)
    shifted = [("q0", "B", "qf", "B", 0, 1.0), ("q0", "1", "qf", "B", -1, 1.0)]
    out["c"] = make_qtm(["q0", "qf"], BINARY, shifted + _normal_form("qf", "q0", BINARY), check=False)
    opposite = [("q0", "B", "qf", "B", 1, 1.0), ("q0", "1", "qf", "B", -1, 1.0)]
    out["d"] = make_qtm(["q0", "qf"], BINARY, opposite + _normal_form("qf", "q0", BINARY), check=False)
    return out


# ---------------------------------------------------------------------------
# two-track acceptors over track alphabets {B, 0, 1}

TRACK = ("B", "0", "1")
TRACKS = (TRACK, TRACK)


def _tracked(rule_on_second):
    """Machine acting on track 2 of cell 0 with per-symbol rows ``rule_on_second``."""
    alphabet = tuple(",".join(c) for c in product(TRACK, TRACK))
    entries = []
    for a in TRACK:
        for b, row in rule_on_second.items():
            for b2, amp in row:
                entries.append(("q0", f"{a},{b}", "qf", f"{a},{b2}", 0, amp))
    entries += _normal_form("qf", "q0", alphabet)
    return make_qtm(["q0", "qf"], alphabet, entries, tracks=TRACKS)


def writer_acceptor() -> QTM:
    """Writes 1 on track 2 deterministically (swap B <-> 1)."""
    return _tracked({"B": [("1", 1.0)], "1": [("B", 1.0)], "0": [("0", 1.0)]})


def split_b1_acceptor() -> QTM:
    """Hadamard on track 2 between B and 1."""
    return _tracked({"B": [("B", S2), ("1", S2)], "1": [("B", S2), ("1", -S2)], "0": [("0", 1.0)]})


def split_01_acceptor() -> QTM:
    """Sends a blank track-2 cell to (0 + 1)/sqrt2."""
    return _tracked({"B": [("0", S2), ("1", S2)], "0": [("0", S2), ("1", -S2)], "1": [("B", 1.0)]})
