"""Exact angle tokens and the constant R = 2*pi * sum_{i>=1} 2^(-2^i).

Angles that appear in circuit codes must round-trip exactly, so they are
kept symbolic: ``pi*p/q``, ``R*k`` or a plain rational ``p/q`` (radians).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

TWO_PI = 2 * math.pi


def r_terms(precision_bits: int) -> list[int]:
    """Indices i of the series terms kept at the given precision.

    Term i is 2*pi*2^(-2^i); the sum stops before the first term smaller
    than 2^(-precision_bits).
    """
    if precision_bits < 1:
        raise ValueError("precision_bits must be at least 1")
    kept = []
    i = 1
    while True:
        # 2*pi*2^(-2^i) >= 2^(-p)  <=>  2^i - log2(2*pi) <= p
        if 2 ** i - math.log2(TWO_PI) > precision_bits:
            return kept
        kept.append(i)
        i += 1


def compute_R(precision_bits: int = 64) -> mpmath.mpf:
    """Partial sum of R with truncation error below 2^(-precision_bits+1)."""
    with mpmath.workprec(precision_bits + 64):
        s = mpmath.fsum(mpmath.mpf(2) ** (-(2 ** i)) for i in r_terms(precision_bits))
        return +(2 * mpmath.pi * s)


R = float(compute_R(128))


def r_multiple_fraction(k) -> np.ndarray:
    """Fractional part of k*R/(2*pi) for integer k (array-friendly).

    The binary expansion of R/(2*pi) has ones only at positions 2^i, so each
    term (k mod 2^m)/2^m is computed exactly and only the final sum rounds.
    """
    k = np.asarray(k, dtype=np.int64)
    if np.any(k < 0):
        raise ValueError("multiples of R must be non-negative")
    total = np.zeros(k.shape, dtype=float)
    for m in (2, 4, 8, 16, 32):
        total += (k & ((1 << m) - 1)).astype(float) / float(1 << m)
    for m in (64, 128):
        total += k.astype(float) / 2.0 ** m
    return total % 1.0


def r_multiple(k) -> np.ndarray:
    """k*R reduced into [0, 2*pi)."""
    return TWO_PI * r_multiple_fraction(k)


_PATTERNS = {
    "pi": re.compile(r"pi\*(-?\d+)/(\d+)"),
    "R": re.compile(r"R\*(\d+)"),
    "rational": re.compile(r"(-?\d+)/(\d+)"),
}


@dataclass(frozen=True)
class Angle:
    """Exact angle: ``kind`` is 'pi' (value pi*q), 'R' (value q*R) or 'rational' (value q)."""

    kind: str
    q: Fraction

    def __post_init__(self):
        if self.kind not in _PATTERNS:
            raise ValueError(f"unknown angle kind {self.kind!r}")
        object.__setattr__(self, "q", Fraction(self.q))
        if self.kind == "R" and (self.q.denominator != 1 or self.q < 0):
            raise ValueError("R angles need a non-negative integer multiple")

    @classmethod
    def pi(cls, num: int, den: int = 1) -> "Angle":
        return cls("pi", Fraction(num, den))

    @classmethod
    def r(cls, k: int) -> "Angle":
        return cls("R", Fraction(k))

    @property
    def value(self) -> float:
        if self.kind == "pi":
            return math.pi * float(self.q)
        if self.kind == "R":
            return float(r_multiple(int(self.q)))
        return float(self.q)

    def __float__(self) -> float:
        return self.value

    def token(self) -> str:
        if self.kind == "pi":
            return f"pi*{self.q.numerator}/{self.q.denominator}"
        if self.kind == "R":
            return f"R*{self.q.numerator}"
        return f"{self.q.numerator}/{self.q.denominator}"

    def __str__(self) -> str:
        return self.token()

    @classmethod
    def parse(cls, text: str) -> "Angle":
        """Parse a canonical token; non-canonical spellings are rejected."""
        for kind, pat in _PATTERNS.items():
            m = pat.fullmatch(text)
            if m:
                if kind == "R":
                    angle = cls(kind, Fraction(int(m.group(1))))
                else:
                    den = int(m.group(2))
                    if den == 0:
                        raise ValueError(f"zero denominator in angle {text!r}")
                    angle = cls(kind, Fraction(int(m.group(1)), den))
                if angle.token() != text:
                    raise ValueError(f"angle {text!r} is not in canonical form ({angle.token()!r})")
                return angle
        raise ValueError(f"malformed angle token {text!r}")


def angle_value(angle) -> float:
    return angle.value if isinstance(angle, Angle) else float(angle)
