import numpy as np
from hypothesis import given, strategies as st

from stabkam import gf2

rows_st = st.lists(st.integers(0, 2 ** 8 - 1), min_size=1, max_size=8)


def _np_rank(rows, n=8):
    a = np.array([[(r >> j) & 1 for j in range(n)] for r in rows], dtype=np.uint8)
    r = 0
    for c in range(n):
        piv = [i for i in range(r, len(a)) if a[i, c]]
        if not piv:
            continue
        a[[r, piv[0]]] = a[[piv[0], r]]
        for i in range(len(a)):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
    return r


@given(rows_st)
def test_rank_matches_dense(rows):
    assert gf2.rank(rows) == _np_rank(rows)


@given(rows_st)
def test_kernel_annihilates(rows):
    for k in gf2.kernel(rows):
        acc = 0
        for i in gf2.bits(k):
            acc ^= rows[i]
        assert acc == 0
    assert len(gf2.kernel(rows)) == len(rows) - gf2.rank(rows)


@given(rows_st, st.integers(0, 2 ** 8 - 1))
def test_solve(rows, target):
    sol = gf2.solve(rows, target)
    if sol is None:
        assert not gf2.span_contains(rows, [target])
    else:
        acc = 0
        for i in gf2.bits(sol):
            acc ^= rows[i]
        assert acc == target


def test_bits_mask():
    assert gf2.bits(0b1011) == [0, 1, 3]
    assert gf2.mask_of([0, 1, 3]) == 0b1011
    assert gf2.popcount(0b1011) == 3


@given(rows_st)
def test_transpose_involution(rows):
    assert gf2.transpose(gf2.transpose(rows, 8), len(rows)) == list(rows)
