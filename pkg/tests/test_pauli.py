import numpy as np
import pytest
from hypothesis import given, strategies as st

from stabkam.codes import make_repetition, make_toric
from stabkam.pauli import (PauliOperator, PauliString, codespace_projector, commutes, group_membership,
                           kron_matrix, pauli_matrix, pauli_multiply, realize, realize_and_norm,
                           sandwich_expand, projector_product, CapExceeded)


def paulis(n):
    return st.builds(lambda x, z, p: PauliString(n, x, z, p),
                     st.integers(0, 2 ** n - 1), st.integers(0, 2 ** n - 1), st.integers(0, 3))


def test_xz_convention():
    x = PauliString.from_label("X")
    z = PauliString.from_label("Z")
    p = pauli_multiply(x, z)
    assert p.label() == "Y" and p.coefficient == -1j


def test_involution():
    x = PauliString.from_label("X")
    p = x * x
    assert p.label() == "I" and p.coefficient == 1


def test_two_qubit_product_matches_kron():
    a = PauliString.from_label("XZ")
    b = PauliString.from_label("ZZ")
    assert np.allclose(kron_matrix(a) @ kron_matrix(b), kron_matrix(a * b))


@given(paulis(3), paulis(3))
def test_product_is_matrix_product(a, b):
    assert np.allclose(pauli_matrix(a) @ pauli_matrix(b), pauli_matrix(pauli_multiply(a, b)), atol=1e-14)
    assert np.allclose(pauli_matrix(a), kron_matrix(a))


@given(paulis(3), paulis(3), paulis(3))
def test_associative(a, b, c):
    l, r = (a * b) * c, a * (b * c)
    assert (l.x, l.z, l.phase) == (r.x, r.z, r.phase)


@given(paulis(3), paulis(3))
def test_commutes_iff_matrix_commutator_zero(a, b):
    ma, mb = pauli_matrix(a), pauli_matrix(b)
    assert commutes(a, b) == bool(np.abs(ma @ mb - mb @ ma).max() < 1e-12)


def test_length_mismatch():
    with pytest.raises(ValueError):
        pauli_multiply(PauliString.from_label("X"), PauliString.from_label("XX"))


def test_toric_star_plaquette_commute():
    code = make_toric(2, 2)
    for a in code.checks:
        for b in code.checks:
            assert commutes(a, b)


def test_membership():
    code = make_repetition(3, periodic=False)
    z13 = PauliString.from_label("ZIZ")
    m = group_membership(z13, code)
    assert m is not None and m.exponents == 0b11 and m.sign == 1
    assert group_membership(PauliString.from_label("ZII"), code) is None


def test_membership_toric_loop_absent():
    code = make_toric(2, 2)
    # horizontal edges (0,0),(0,1): a non-contractible Z loop along row 0
    loop = PauliString(8, 0, 0b11)
    assert not code.syndrome(loop.x, loop.z)
    assert group_membership(loop, code) is None


def test_sandwich_ising_x():
    code = make_repetition(4, periodic=True)
    core = PauliOperator(4, {(0b10, 0): 1.0})
    from stabkam.words import Word
    w = Word(plus=0b11)
    y = sandwich_expand(core, w, code)
    m = realize(y, 4, dense=True)
    again = sandwich_expand(y, w, code, check_support=False)
    assert np.allclose(realize(again, 4, dense=True), m)
    # E E X G G: maps both-unbroken states into both-broken states
    assert np.linalg.norm(m, 2) == pytest.approx(1.0)


def test_sandwich_support_violation():
    code = make_repetition(4, periodic=True)
    from stabkam.words import Word
    with pytest.raises(ValueError):
        sandwich_expand(PauliOperator(4, {(0b1000, 0): 1.0}), Word(plus=0b1), code)


def test_codespace_rank():
    for code in (make_repetition(6, True), make_toric(2, 2), make_repetition(5, False)):
        p = codespace_projector(code)
        assert round(float(np.trace(p).real)) == 2 ** code.k_logical
        prod = realize(projector_product(code, {a: 1 for a in range(code.n_checks)}), code.n_qubits, dense=True)
        assert np.allclose(prod, p)


def test_realize_and_norm():
    _, nrm = realize_and_norm(PauliOperator.identity(3), 3)
    assert nrm == pytest.approx(1.0)
    _, nrm = realize_and_norm(PauliOperator(1, {(1, 0): 0.3, (0, 1): 0.4}), 1)
    assert nrm == pytest.approx(0.5, rel=1e-9)
    code = make_repetition(3, False)
    e = PauliOperator(3, {(0, 0): 0.5, (0, 0b11): -0.5})
    assert realize_and_norm(e, 3)[1] == pytest.approx(1.0)


def test_caps():
    with pytest.raises(CapExceeded):
        realize(PauliOperator.identity(30), 30, dense=False)


def test_pruning():
    op = PauliOperator(1, {(0, 0): 1.0, (1, 0): 1e-16})
    assert len(op) == 1
