"""GF(2) linear algebra on Python-int bitsets.

A row vector is an int whose bit j is the entry in column j.  Elimination
always pivots on the highest set bit, which makes every result
deterministic for a fixed input order.
"""
from __future__ import annotations

from dataclasses import dataclass, field


def popcount(v: int) -> int:
    return v.bit_count()


def bits(v: int) -> list[int]:
    """Indices of set bits, ascending."""
    out = []
    while v:
        low = v & -v
        out.append(low.bit_length() - 1)
        v ^= low
    return out


def mask_of(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


@dataclass
class Echelon:
    """Incremental row-echelon basis that remembers how rows were built.

    Every stored row carries a `tag` mask recording which input rows were
    XOR-ed together to produce it, so a reduction also returns the input
    combination that was used.
    """

    rows: dict[int, tuple[int, int]] = field(default_factory=dict)  # pivot -> (vec, tag)
    relations: list[int] = field(default_factory=list)

    def reduce(self, vec: int) -> tuple[int, int]:
        """Return (residual, tag); residual is 0 iff vec lies in the span."""
        tag = 0
        res = 0
        while vec:
            p = vec.bit_length() - 1
            hit = self.rows.get(p)
            if hit is None:
                res |= 1 << p
                vec ^= 1 << p
            else:
                vec ^= hit[0]
                tag ^= hit[1]
        return res, tag

    def add(self, vec: int, tag: int) -> bool:
        """Insert a row; returns False (and records a relation) if dependent."""
        while vec:
            p = vec.bit_length() - 1
            hit = self.rows.get(p)
            if hit is None:
                self.rows[p] = (vec, tag)
                return True
            vec ^= hit[0]
            tag ^= hit[1]
        self.relations.append(tag)
        return False

    def contains(self, vec: int) -> bool:
        return self.reduce(vec)[0] == 0

    @property
    def rank(self) -> int:
        return len(self.rows)


def echelon(rows) -> Echelon:
    ech = Echelon()
    for i, r in enumerate(rows):
        ech.add(r, 1 << i)
    return ech


def rank(rows) -> int:
    return echelon(rows).rank


def solve(rows, target: int) -> int | None:
    """Return a mask a with XOR_{i in a} rows[i] == target, or None."""
    res, tag = echelon(rows).reduce(target)
    return tag if res == 0 else None


def span_contains(rows, vecs) -> bool:
    ech = echelon(rows)
    return all(ech.contains(v) for v in vecs)


def kernel(rows, n_rows: int | None = None) -> list[int]:
    """Basis of {a : XOR_{i in a} rows[i] = 0} as masks over row indices."""
    return echelon(rows).relations


def transpose(rows, n_cols: int) -> list[int]:
    out = [0] * n_cols
    for i, r in enumerate(rows):
        for j in bits(r):
            out[j] |= 1 << i
    return out


def row_basis(rows) -> list[int]:
    """Reduced list of independent rows spanning the same space."""
    return [v for v, _ in echelon(rows).rows.values()]
