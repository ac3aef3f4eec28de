import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stabkam.codes import classical_symmetry_group, make_repetition
from stabkam.experiments import contraction_table, ising_flow
from stabkam.kam import (FlowConfig, build_generator, build_unitary, direct_rotation, exp_i, flow_rhs,
                         generator_residual, ghost_coefficient, ghost_table, ising_field_for_eps, kam_step,
                         make_state, mu_schedule, operator_tail, perturbation_field, prop71_tail,
                         resolve_in_group, split_collection, symmetry_violation, initial_collection)
from stabkam.pauli import PauliOperator
from stabkam.words import OperatorCollection, Word, WordContext, collection_matrix


@pytest.fixture(scope="module")
def ring6():
    ctx = WordContext(make_repetition(6, periodic=True))
    z0, _ = initial_collection(ctx, perturbation_field(6, 0.01))
    return ctx, z0


def test_split_partition(ring6):
    ctx, z0 = ring6
    sp = split_collection(z0, 3)
    parts = [sp.d_part, sp.v_plus, sp.v_minus, sp.m_part, sp.overflow]
    assert sum(len(p) for p in parts) == len(z0)
    assert all(w.kind() == "V+" for w in sp.v_plus.entries)
    assert all(w.kind() == "V-" for w in sp.v_minus.entries)
    assert np.abs(collection_matrix(sp.tracked() + sp.overflow) - collection_matrix(z0)).max() < 1e-14


def test_split_cutoff(ring6):
    _, z0 = ring6
    sp = split_collection(z0, 2)
    assert len(sp.overflow) == len(z0)


@pytest.mark.parametrize("variant", ["explicit", "resummed"])
def test_generator_residual(ring6, variant):
    _, z0 = ring6
    sp = split_collection(z0, 3)
    gen = build_generator(sp, variant=variant, k_max=6)
    chk = generator_residual(sp, gen.a)
    assert chk.residual_plus <= 1e-8 * chk.v_norm
    assert chk.residual_minus <= 1e-8 * chk.v_norm
    assert chk.block_rel_diff <= 1e-6


def test_generator_trivial_without_dm(ring6):
    # with D = M = 0 the zeroth order already solves the equations
    ctx, z0 = ring6
    sp = split_collection(z0, 3)
    sp.d_part = OperatorCollection(ctx)
    sp.m_part = OperatorCollection(ctx)
    gen = build_generator(sp, k_max=0)
    chk = generator_residual(sp, gen.a)
    assert chk.residual_plus < 1e-14 * chk.v_norm


def test_empty_generator(ring6):
    ctx, _ = ring6
    sp = split_collection(OperatorCollection(ctx), 3)
    gen = build_generator(sp)
    assert len(gen.a) == 0 and gen.converged


def test_resolve_in_group():
    code = make_repetition(4, periodic=True)
    eta, tag = resolve_in_group(code, 0, 0b0011)
    assert eta == 1 and tag.bit_count() == 1
    assert resolve_in_group(code, 0, 0b0001) is None
    assert resolve_in_group(code, 0, 0) == (1, 0)


def test_ghost_q():
    # M_T = c Z0 Z1 on ghost word (g on check 0); it equals c C_0
    ctx = WordContext(make_repetition(4, periodic=True))
    c0 = ctx.code.checks[0]
    ghost = Word(g=1)
    m = OperatorCollection(ctx, {ghost: {(c0.x, c0.z): 0.5}})
    tab = ghost_table(m)
    assert tab.expectation[ghost] == pytest.approx(0.5)
    # a target flipping check 0: [C_0, X_{S'}] P = -2 X_{S'} P
    assert ghost_coefficient(tab, ghost, Word(plus=0b1, g=0b10)) == pytest.approx(-0.5)
    # target touching check 0 only as g: the ghost sits on the non-flipped part
    assert ghost_coefficient(tab, ghost, Word(plus=0b100)) == 0


def test_kam_step_fixed_point(ring6):
    ctx, _ = ring6
    d = OperatorCollection(ctx, {Word(g=0b1): {(0, 0b11): 0.01}})
    s0 = make_state(d, 0, 3.0, 3)
    out = kam_step(s0, 2.5, 3, FlowConfig(mu0=3.0), stop_level=1e-12)
    assert len(out.a) == 0
    assert out.state.eps == 0
    assert np.abs(collection_matrix(out.state.z) - collection_matrix(d)).max() < 1e-15


def test_zero_perturbation_converges_immediately():
    run = ising_flow(6, 0.0, FlowConfig(mu0=3.0, mode="classical-symmetric"))
    assert run.result.n_star == 0 and run.result.status == "converged"


def test_small_flow_bounds():
    run = ising_flow(6, 0.01, FlowConfig(mu0=3.0, mode="classical-symmetric"))
    r = run.result
    assert r.status == "converged"
    for s in r.states:
        assert s.exact_error <= s.error_bound + 1e-14
        assert s.kp_residual < 1e-10 or s.n == 0
        assert s.symmetry_violation == 0
    for row in contraction_table(run):
        assert row.ok_rhs and row.ok_eta


def test_eps_for_field():
    h = ising_field_for_eps(2.0, 0.01)
    ctx = WordContext(make_repetition(8, periodic=True))
    z0, _ = initial_collection(ctx, perturbation_field(8, h))
    assert z0.word_norm(2.0) == pytest.approx(0.01)


def test_mu_schedule():
    mus = mu_schedule(5.0, 1.0, 200)
    assert mus[0] == 5.0
    assert all(a > b for a, b in zip(mus, mus[1:]))
    # the steps sum to (mu0 - mu_*)/2 in the limit
    assert mus[-1] == pytest.approx(3.0, abs=0.01)


@given(st.floats(1e-6, 1e-2), st.floats(0, 0.2), st.floats(0.05, 2))
def test_flow_rhs_monotone(eps, eta, dmu):
    a = flow_rhs(eps, eta, dmu, 3.0)
    b = flow_rhs(2 * eps, eta, dmu, 3.0)
    assert a <= b


def test_rhs_infinite_when_eta_large():
    assert flow_rhs(1e-3, 1 / math.e, 1.0, 3.0) == math.inf


def test_tails():
    assert operator_tail(0.0, 1.0, 4) == 0
    assert operator_tail(0.1, 1.0, 2) == pytest.approx(sum(0.2 ** k / math.factorial(k) for k in range(3, 40)))
    assert prop71_tail(10.0, 1.0, 1.0, 4) == math.inf
    assert prop71_tail(0.01, 1.0, 1.0, 4) < prop71_tail(0.01, 1.0, 1.0, 2)


def test_build_unitary_identity():
    assert np.array_equal(build_unitary([], 3), np.eye(8))


def test_build_unitary_involution():
    # A = theta * X0 with A^2 = theta^2: exp(iA) = cos + i sin X
    ctx = WordContext(make_repetition(3, periodic=True))
    th = 0.3
    op = PauliOperator(3, {(1, 0): th})
    from stabkam.words import decompose_operator
    a, _ = decompose_operator(op, ctx)
    u = build_unitary([a])
    x = collection_matrix(a) / th
    assert np.abs(u - (math.cos(th) * np.eye(8) + 1j * math.sin(th) * x)).max() < 1e-12


def test_exp_i_real_branch():
    rng = np.random.default_rng(0)
    b = rng.normal(size=(6, 6))
    am = 1j * (b - b.T)
    u = exp_i(am)
    assert not np.iscomplexobj(u)
    vals, vecs = np.linalg.eigh(am)
    ref = (vecs * np.exp(1j * vals)) @ vecs.conj().T
    assert np.abs(u - ref).max() < 1e-12


def test_direct_rotation():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    p1 = q[:, :2] @ q[:, :2].T
    small = exp_i(0.05 * (lambda m: m + m.T)(rng.normal(size=(6, 6))))
    p2 = small @ p1 @ small.conj().T
    w, ang = direct_rotation(p1, p2)
    assert np.abs(w @ p1 @ w.conj().T - p2).max() < 1e-12
    assert np.abs(w @ w.conj().T - np.eye(6)).max() < 1e-12
    assert 0 < ang < 0.2


def test_symmetry_violation():
    code = make_repetition(4, periodic=True)
    ctx = WordContext(code)
    gens = classical_symmetry_group(code).generators
    even = OperatorCollection(ctx, {Word(plus=0b11): {(0b10, 0): 1.0}})
    odd = OperatorCollection(ctx, {Word(g=0b1): {(0, 0b1): 0.5}})
    assert symmetry_violation(even, gens) == 0
    assert symmetry_violation(odd, gens) > 0


def test_m_expectation_matches_trace():
    run = ising_flow(6, 0.05, FlowConfig(mu0=3.0, mode="classical-symmetric"))
    code = run.code
    from stabkam.kam import m_expectation
    from stabkam.pauli import diagonal_projector
    p = diagonal_projector(code, {a: 1 for a in range(code.n_checks)})
    checked = 0
    for s in run.result.states:
        m = s.split.m_part
        if not len(m):
            continue
        mm = collection_matrix(m)
        ref = np.trace(p @ mm @ p) / np.trace(p)
        assert m_expectation(m) == pytest.approx(ref, abs=1e-14)
        checked += 1
    assert checked


def test_m_expectation_toric_phases():
    # products of overlapping X and Z checks carry nontrivial phases
    from stabkam.codes import make_toric
    from stabkam.kam import m_expectation
    from stabkam.pauli import pauli_multiply
    from stabkam.words import decompose_operator
    code = make_toric(3, 3)
    ctx = WordContext(code)
    a = next(c for c in code.checks if c.x)
    b = next(c for c in code.checks if c.z and not c.x and (c.z & a.x))
    prod = pauli_multiply(a, b)
    assert prod.phase % 4 == 2  # X X . Z Z = -Y Y
    op = PauliOperator(18, {(prod.x, prod.z): 0.7 * 1j ** prod.phase, (a.x, a.z): 0.2})
    coll, _ = decompose_operator(op, ctx)
    m_part = OperatorCollection(ctx, {w: c for w, c in coll.entries.items() if w.is_ghost})
    # on the codespace every check is +1, so <M> is the sum of the coefficients
    assert m_expectation(m_part) == pytest.approx(0.9, abs=1e-14)
