"""Finite probability distributions over outcome strings and total variation."""

from __future__ import annotations

from typing import Iterator, Mapping

TOL = 1e-9


class Distribution(Mapping):
    """Immutable map outcome -> probability (sums to 1 within tolerance)."""

    __slots__ = ("_p",)

    def __init__(self, probs: Mapping | None = None, *, check: bool = True):
        probs = dict(probs or {})
        for k, v in probs.items():
            if v < -TOL:
                raise ValueError(f"negative probability {v} for outcome {k!r}")
        self._p = {k: max(float(v), 0.0) for k, v in probs.items() if v > 0}
        if check and abs(sum(self._p.values()) - 1.0) > TOL:
            raise ValueError(f"probabilities sum to {sum(self._p.values())}, not 1")

    def __getitem__(self, key) -> float:
        return self._p.get(key, 0.0)

    def __iter__(self) -> Iterator:
        return iter(self._p)

    def __len__(self) -> int:
        return len(self._p)

    def __contains__(self, key) -> bool:
        return key in self._p

    def __repr__(self) -> str:
        return f"Distribution({dict(sorted(self._p.items()))})"

    def total(self) -> float:
        return sum(self._p.values())

    def lines(self) -> list[str]:
        """``outcome probability`` lines, sorted by outcome, 12 significant digits."""
        return [f"{k} {v:.12g}" for k, v in sorted(self._p.items())]


def total_variation(d1: Mapping, d2: Mapping) -> float:
    """Sum over the union of supports of |d1 - d2| (range [0, 2])."""
    keys = set(d1) | set(d2)
    return float(sum(abs(d1.get(k, 0.0) - d2.get(k, 0.0)) for k in keys))
