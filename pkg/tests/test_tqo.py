import itertools

import pytest

from stabkam import gf2
from stabkam.codes import ClassicalParityCheck, from_parity_check, make_repetition, make_toric, repetition_matrix
from stabkam.experiments import toric_annulus
from stabkam.graphs import build_graphs
from stabkam.pauli import group_membership, PauliString
from stabkam.tqo import check_tqo2, local_group, soundness_gamma


def _span_contains(code, basis_masks, mask):
    vecs = [code.check_product(m) for m in basis_masks]
    e = gf2.echelon([v.x | (v.z << code.n_qubits) for v in vecs])
    p = code.check_product(mask)
    return e.contains(p.x | (p.z << code.n_qubits))


def test_single_plaquette():
    code = make_toric(3, 3)
    a = 10
    res = local_group(code, 1 << a)
    assert res.r_min == 0 and res.witness is None
    assert all(_span_contains(code, [1 << a], g) for g in res.generators)


def test_annulus_witness():
    code = make_toric(4, 4)
    ring, centre = toric_annulus(code)
    res = local_group(code, ring)
    assert res.strictly_larger and res.r_min == 1
    # the witness is not generated by the ring itself
    assert not _span_contains(code, [1 << a for a in gf2.bits(ring)], res.witness)
    # and the enclosed plaquette lies in G(S)
    p = code.checks[centre]
    assert code.support_of_checks(ring) & p.support == p.support


def test_ising_interval_local():
    code = make_repetition(10, True)
    res = local_group(code, 0b1110)
    assert res.r_min == 0


def test_local_contains_generated():
    code = make_toric(3, 3)
    for S in (0b1, 0b11, 1 << 9 | 1 << 10, 0b111000000111):
        res = local_group(code, S)
        for a in gf2.bits(S):
            assert _span_contains(code, res.generators, 1 << a)


def test_tqo2_ising():
    res = check_tqo2(make_repetition(8, True), 5)
    assert res.ell == 0 and not res.violations and res.d_tilde == 5


def test_tqo2_toric_finite():
    res = check_tqo2(make_toric(3, 3), 4)
    assert res.complete and not res.violations
    assert res.ell < float("inf")


def _adversarial():
    # qubits 0,1,2 plus a detour a1..a5; the detour telescopes to Z0 Z2
    path = [0, 3, 4, 5, 6, 7, 2]
    rows = [0b111] + [(1 << a) | (1 << b) for a, b in zip(path, path[1:])]
    return from_parity_check(ClassicalParityCheck(8, tuple(rows)), name="detour")


def test_tqo2_adversarial_violation():
    code = _adversarial()
    res = check_tqo2(code, 2)
    assert res.violations
    S, r = res.violations[0]
    assert S == 1 and r == 3
    assert res.d_tilde == 1


def test_ball_monotone():
    code = make_toric(3, 3)
    g = build_graphs(code)
    S = 0b11
    prev = 0
    for r in range(4):
        ball = g.check_ball(S, r)
        assert ball & prev == prev
        prev = ball


def test_tqo1_below_distance():
    code = make_toric(2, 2)
    n = code.n_qubits
    # every Pauli on one qubit commuting with all checks lies in the group (d = 2)
    for q in range(n):
        for x, z in ((1, 0), (0, 1), (1, 1)):
            p = PauliString(n, x << q, z << q)
            if not code.syndrome(p.x, p.z):
                assert group_membership(p, code) is not None


def test_gamma_identity():
    h = ClassicalParityCheck(3, (1, 2, 4))
    assert soundness_gamma(h, 3).value == 1


def test_gamma_repetition():
    h = repetition_matrix(5)
    g = soundness_gamma(h, 3)
    best = min(_xor_rows(h, rows).bit_count() / len(rows)
               for k in range(1, 4) for rows in itertools.combinations(range(h.m), k))
    assert g.value == pytest.approx(best)


def _xor_rows(h, rows):
    v = 0
    for i in rows:
        v ^= h.rows[i]
    return v


def test_gamma_zero_row():
    h = ClassicalParityCheck(3, (0b011, 0, 0b110))
    g = soundness_gamma(h, 2)
    assert g.value == 0 and g.witness == 0b10
