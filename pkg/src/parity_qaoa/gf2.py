"""Bit-packed linear algebra over GF(2).

Vectors are plain Python ints (bit q is coordinate q); matrices are sequences
of such ints. Pivot choice is deterministic: the lowest set bit wins.
"""

from __future__ import annotations

from typing import Iterable


def mask(bits: Iterable[int]) -> int:
    """Pack an iterable of coordinate indices into a bit mask."""
    m = 0
    for b in bits:
        m |= 1 << b
    return m


def bits_of(vec: int) -> list[int]:
    """Unpack a bit mask into a sorted list of coordinate indices."""
    out = []
    while vec:
        low = vec & -vec
        out.append(low.bit_length() - 1)
        vec ^= low
    return out


def odd_overlap(a: int, b: int) -> bool:
    """True when the two masks share an odd number of set bits."""
    return bool((a & b).bit_count() & 1)


def lowest_bit(x: int) -> int:
    return (x & -x).bit_length() - 1


class Eliminator:
    """Incremental row store in echelon form, keyed by pivot column."""

    def __init__(self) -> None:
        self._rows: dict[int, int] = {}

    def reduce(self, vec: int) -> int:
        """Residual of ``vec`` after elimination by the stored rows."""
        while vec:
            row = self._rows.get(lowest_bit(vec))
            if row is None:
                return vec
            vec ^= row
        return 0

    def add(self, vec: int) -> bool:
        """Insert ``vec``; returns True when it extended the span."""
        res = self.reduce(vec)
        if res == 0:
            return False
        self._rows[lowest_bit(res)] = res
        return True

    def contains(self, vec: int) -> bool:
        return self.reduce(vec) == 0

    @property
    def rank(self) -> int:
        return len(self._rows)


def rank(rows: Iterable[int]) -> int:
    elim = Eliminator()
    for r in rows:
        elim.add(r)
    return elim.rank


def in_span(rows: Iterable[int], vec: int) -> bool:
    elim = Eliminator()
    for r in rows:
        elim.add(r)
    return elim.contains(vec)


def _rref(rows: Iterable[int]) -> dict[int, int]:
    """Fully reduced echelon rows, keyed by pivot column."""
    elim: dict[int, int] = {}
    for r in rows:
        v = r
        while v:
            p = lowest_bit(v)
            if p in elim:
                v ^= elim[p]
            else:
                for q, w in elim.items():
                    if (w >> p) & 1:
                        elim[q] = w ^ v
                elim[p] = v
                break
    return elim


def kernel_basis(rows: Iterable[int], n_cols: int) -> list[int]:
    """Basis of {x : every row has even overlap with x}, one vector per free column."""
    elim = _rref(rows)
    basis = []
    for f in range(n_cols):
        if f in elim:
            continue
        x = 1 << f
        for p, w in elim.items():
            if (w >> f) & 1:
                x |= 1 << p
        basis.append(x)
    return basis


def solve(rows: list[int], target: int) -> int | None:
    """Coefficient mask c (bit i set means rows[i] is used) with XOR equal to
    ``target``, or None when target is outside the span."""
    elim: dict[int, tuple[int, int]] = {}
    for i, r in enumerate(rows):
        v, c = r, 1 << i
        while v:
            p = lowest_bit(v)
            if p in elim:
                w, cw = elim[p]
                v ^= w
                c ^= cw
            else:
                elim[p] = (v, c)
                break
    v, c = target, 0
    while v:
        p = lowest_bit(v)
        if p not in elim:
            return None
        w, cw = elim[p]
        v ^= w
        c ^= cw
    return c
