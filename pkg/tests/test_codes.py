import numpy as np
import pytest

from stabkam import gf2
from stabkam.codes import (ClassicalParityCheck, classical_symmetry_group, code_from_spec, load_alist, load_code,
                           make_hypergraph_product, make_random_classical_ldpc, make_repetition, make_toric,
                           repetition_matrix, save_alist, save_code)
from stabkam.graphs import code_distance, symmetric_distance, symmetric_distance_search
from stabkam.pauli import commutes, realize
from stabkam.spectral import exact_spectrum


def test_repetition_open():
    code = make_repetition(3, periodic=False)
    assert [c.label() for c in code.checks] == ["ZZI", "IZZ"]
    assert code.k_logical == 1


def test_repetition_periodic():
    code = make_repetition(4, periodic=True)
    assert code.n_checks == 4 and code.rank == 3 and code.k_logical == 1


def test_repetition_rejects_tiny():
    with pytest.raises(ValueError):
        make_repetition(1)


def test_toric_2x2():
    code = make_toric(2, 2)
    assert (code.n_qubits, code.n_checks, code.rank, code.k_logical) == (8, 8, 6, 2)
    ev = exact_spectrum(code.h0(), 8).eigenvalues
    assert int(np.sum(np.abs(ev) < 1e-9)) == 4


@pytest.mark.parametrize("L", [2, 3])
def test_toric_distance(L):
    assert code_distance(make_toric(L, L), "quantum", cap=4).value == L


def test_toric_rejects_small():
    with pytest.raises(ValueError):
        make_toric(1, 3)


def test_hgp_rep3():
    r = repetition_matrix(3)
    code = make_hypergraph_product(r, r)
    assert code.n_qubits == 3 * 3 + 2 * 2
    for a in code.checks:
        for b in code.checks:
            assert commutes(a, b)
    assert code.k_logical == 1


def test_hgp_random_k_formula():
    a = make_random_classical_ldpc(8, 6, 3, seed=7)
    b = make_random_classical_ldpc(8, 6, 3, seed=8)
    code = make_hypergraph_product(a, b)
    # K = k_a k_b + k_a^T k_b^T
    ka, kb = a.n - a.rank, b.n - b.rank
    kat, kbt = a.m - a.rank, b.m - b.rank
    assert code.k_logical == ka * kb + kat * kbt


def test_hgp_empty():
    with pytest.raises(ValueError):
        make_hypergraph_product(ClassicalParityCheck(2, (0,)), repetition_matrix(3))


def test_random_ldpc_deterministic_and_weights():
    a = make_random_classical_ldpc(8, 4, 3, seed=7)
    b = make_random_classical_ldpc(8, 4, 3, seed=7)
    assert a.rows == b.rows
    assert a.col_weights == [3] * 8
    with pytest.raises(ValueError):
        make_random_classical_ldpc(7, 4, 3, seed=0)


def test_symmetry_group():
    g = classical_symmetry_group(make_repetition(4, True)).generators
    assert [p.label() for p in g] == ["XXXX"]
    g = classical_symmetry_group(make_repetition(3, False)).generators
    assert [p.label() for p in g] == ["XXX"]
    h = make_random_classical_ldpc(10, 5, 2, seed=3)
    from stabkam.codes import from_parity_check
    code = from_parity_check(h)
    gens = classical_symmetry_group(code).generators
    assert len(gens) == code.k_logical
    for p in gens:
        assert all(commutes(p, c) for c in code.checks)


@pytest.mark.parametrize("spec", ["ising:5", "toric:2x2", "hgp-rep:2"])
def test_k_matches_degeneracy(spec):
    code = code_from_spec(spec)
    ev = exact_spectrum(code.h0(), code.n_qubits, vectors=False).eigenvalues
    assert int(np.sum(np.abs(ev) < 1e-9)) == 2 ** code.k_logical


def test_symmetric_distance_two_ways():
    for code in (make_repetition(8, True), make_repetition(5, False)):
        a = symmetric_distance(code)
        b = symmetric_distance_search(code)
        assert a.value == b.value == code.n_qubits


def test_code_roundtrip(tmp_path):
    for code in (make_toric(2, 3), make_repetition(5, True)):
        p = tmp_path / "c.txt"
        save_code(code, p)
        back = load_code(p)
        assert back.kind == code.kind
        assert [(c.x, c.z, c.phase) for c in back.checks] == [(c.x, c.z, c.phase) for c in code.checks]


def test_alist_roundtrip(tmp_path):
    h = make_random_classical_ldpc(8, 4, 3, seed=1)
    p = tmp_path / "h.alist"
    save_alist(h, p)
    assert load_alist(p).rows == h.rows
