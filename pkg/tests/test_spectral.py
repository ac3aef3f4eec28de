import math

import numpy as np
import pytest

from stabkam.codes import make_repetition, make_toric
from stabkam.experiments import dressing_unitary, hamiltonian_matrix, ising_flow, splitting_scaling
from stabkam.graphs import build_graphs
from stabkam.kam import FlowConfig, direct_rotation, exp_i
from stabkam.pauli import PauliOperator, diagonal_projector, realize
from stabkam.spectral import (band_report, davis_kahan_bound, embed_operator, exact_spectrum,
                              excitation_energy, excitation_locality, feshbach_splitting, form_bound_check,
                              ground_sector_indices, ising_pt_splitting, order_parameter_check,
                              projector_distance, quasi_locality_profile, reduced_operator,
                              spectral_projector, subspace_distance)


def test_open_chain_spectrum():
    ev = exact_spectrum(make_repetition(4, False).h0(), 4).eigenvalues
    vals, counts = np.unique(np.round(ev, 10), return_counts=True)
    assert list(vals) == [0, 1, 2, 3] and list(counts) == [2, 6, 6, 2]


def test_identity_spectrum():
    ev = exact_spectrum(PauliOperator(3, {(0, 0): 1.0}), 3).eigenvalues
    assert np.allclose(ev, 1)


def test_toric_degeneracy():
    ev = exact_spectrum(make_toric(2, 2).h0(), 8).eigenvalues
    assert np.sum(np.abs(ev) < 1e-10) == 4


def test_sparse_matches_dense():
    code = make_repetition(8, True)
    m = hamiltonian_matrix(code, PauliOperator(8, {(1 << q, 0): 0.1 for q in range(8)}), dense=False)
    full = exact_spectrum(m.toarray(), vectors=False).eigenvalues
    part = exact_spectrum(m, 8, k=5)
    assert np.allclose(part.eigenvalues, full[:5], atol=1e-10)
    assert part.residual < 1e-8


def test_band_report_unperturbed():
    ev = exact_spectrum(make_repetition(6, True).h0(), 6, vectors=False).eigenvalues
    rep = band_report(ev, 1, eps0=0.01)
    assert rep.b == pytest.approx(0) and rep.delta == pytest.approx(0, abs=1e-12)
    assert rep.gap == pytest.approx(2)
    assert not rep.violations
    assert sorted(set(rep.bands)) == [0, 2, 4, 6]


@pytest.mark.parametrize("n", [4, 6, 8])
def test_feshbach_vs_ed(n):
    h = 0.1
    code = make_repetition(n, True)
    m = realize(code.h0() + PauliOperator(n, {(1 << q, 0): -h for q in range(n)}), n, dense=False).real.tocsr()
    ev = np.linalg.eigvalsh(m.toarray())
    delta = feshbach_splitting(m, ground_sector_indices(code))
    assert delta == pytest.approx(ev[1] - ev[0], rel=1e-5)


def test_feshbach_vs_perturbation_theory():
    code = make_repetition(10, True)
    h = 0.02
    m = realize(code.h0() + PauliOperator(10, {(1 << q, 0): -h for q in range(10)}), 10, dense=False).real.tocsr()
    assert feshbach_splitting(m, ground_sector_indices(code)) == pytest.approx(ising_pt_splitting(10, h), rel=0.02)


def test_splitting_slope_matches_coupling():
    # H0 has bond energy 1/2 per broken bond: the asymptotic slope is log(2h)
    res = splitting_scaling(range(4, 13, 2), 0.02, ed_cap=8)
    assert res.slope == pytest.approx(math.log(2 * 0.02), rel=0.05)
    assert min(res.gaps) > 0.5


def test_form_bound_examples():
    h0 = np.diag([0.0, 1.0, 2.0, 1.0])
    assert form_bound_check(h0, h0).c == pytest.approx(0)
    fb = form_bound_check(1.3 * h0, h0)
    assert fb.c == pytest.approx(0.3) and fb.kernel_leak == 0
    leak = h0.copy()
    leak[0, 0] = 0.1
    assert form_bound_check(leak, h0).kernel_leak == pytest.approx(0.1)


def test_reduce_embed_roundtrip():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4))
    full = embed_operator(a, [1, 3], [0, 1, 2, 3])
    assert np.allclose(reduced_operator(full, 4, [1, 3]), a)
    # a Pauli on qubit 2 averages to zero on the other qubits
    z2 = realize(PauliOperator(4, {(0, 1 << 2): 1.0}), 4, dense=True).real
    assert np.allclose(reduced_operator(z2, 4, [0, 1]), 0)


def test_locality_identity():
    g = build_graphs(make_repetition(6, True))
    prof = quasi_locality_profile(np.eye(64), PauliOperator(6, {(0, 1 << 3): 1.0}), g)
    assert max(prof.norms) < 1e-14 and prof.background < 1e-14


def test_locality_light_cone():
    # a unitary acting on qubits {3, 4} spreads Z_3 only to radius 1
    code = make_repetition(8, True)
    g = build_graphs(code)
    gen = realize(PauliOperator(8, {(1 << 3, 1 << 4): 0.4}), 8, dense=True)
    u = exp_i(gen)
    prof = quasi_locality_profile(u, PauliOperator(8, {(0, 1 << 3): 1.0}), g, reconstruct=True)
    assert prof.norms[0] > 0.1 and prof.norms[1] > 0.1
    assert max(prof.norms[2:]) < 1e-12
    assert prof.reconstruction_error < 1e-10


def test_locality_reconstruction_random_unitary():
    code = make_repetition(6, True)
    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64)))
    prof = quasi_locality_profile(q, PauliOperator(6, {(0, 1): 1.0}), build_graphs(code), reconstruct=True)
    assert prof.reconstruction_error < 1e-10


def test_projector_distances():
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
    v1 = q[:, :2]
    th = 0.1
    v2 = v1.copy()
    v2[:, 0] = math.cos(th) * q[:, 0] + math.sin(th) * q[:, 5]
    d = projector_distance(spectral_projector(v1), spectral_projector(v2))
    assert d == pytest.approx(math.sin(th))
    assert subspace_distance(v1, v2) == pytest.approx(d)
    assert davis_kahan_bound(0.1, 1.0) == pytest.approx(0.1 / 0.9)
    assert davis_kahan_bound(2.0, 1.0) == math.inf


def test_order_parameter_unperturbed():
    code = make_repetition(6, True)
    p0 = diagonal_projector(code, {a: 1 for a in range(code.n_checks)})
    rep = order_parameter_check(code, np.eye(64), p0, list(range(6)))
    assert max(rep.smeared_full) < 1e-14 and max(rep.smeared_flow) < 1e-14
    assert all(v == pytest.approx(1) for v in rep.unsmeared)
    assert rep.tail_angle == 0


@pytest.fixture(scope="module")
def ring8_flow():
    return ising_flow(8, 0.02, FlowConfig(mu0=3.0, mode="classical-symmetric", matrix_checks=False))


def test_excitation_locality_ising(ring8_flow):
    run = ring8_flow
    u = dressing_unitary(run)
    psi = np.zeros(256)
    psi[0] = 1.0
    # flipping qubits 0..3 creates two domain walls
    flip = PauliOperator(8, {(0b1111, 0): 1.0})
    rows = excitation_locality(run.code, u, flip, psi, build_graphs(run.code))
    by_r = {}
    for r in rows:
        by_r[r.distance] = max(by_r.get(r.distance, 0.0), abs(r.value))
    assert by_r[0] == pytest.approx(2.0, abs=0.05)
    far = [by_r[r] for r in sorted(by_r) if r >= 1]
    assert all(a >= b for a, b in zip(far, far[1:]))
    assert far[-1] < 1e-3


def test_excitation_energy_band(ring8_flow):
    run = ring8_flow
    u = dressing_unitary(run)
    hm = hamiltonian_matrix(run.code, run.perturbation)
    psi = np.zeros(256)
    psi[0] = 1.0
    e = excitation_energy(hm, u, PauliOperator(8, {(0b1111, 0): 1.0}), psi, run.result.b)
    assert e == pytest.approx(2.0, abs=0.05)


def test_toric_anyon_pair_energy():
    code = make_toric(2, 2)
    hm = hamiltonian_matrix(code, PauliOperator(8, {(1 << q, 0): 0.01 for q in range(8)}))
    spec = exact_spectrum(hm)
    psi = spec.eigenvectors[:, 0]
    b = float(spec.eigenvalues[:4].mean())
    # a single Z on an edge flips two plaquettes or two vertices
    e = excitation_energy(hm, np.eye(256), PauliOperator(8, {(0, 1): 1.0}), psi, b)
    rep = band_report(spec.eigenvalues, 2)
    assert abs(e - 2) < 0.1
    assert 2 in rep.bands


def test_direct_rotation_on_ed(ring8_flow):
    run = ring8_flow
    u = dressing_unitary(run)
    hm = hamiltonian_matrix(run.code, run.perturbation)
    spec = exact_spectrum(hm)
    p_ed = spectral_projector(spec.eigenvectors[:, :2])
    p0 = diagonal_projector(run.code, {a: 1 for a in range(run.code.n_checks)})
    p1 = u @ p0 @ u.conj().T
    w, ang = direct_rotation(p1, p_ed)
    assert projector_distance(w @ p1 @ w.conj().T, p_ed) < 1e-12
    assert ang < 1e-3
