"""End-to-end experiment pipelines used by the CLI, scripts and acceptance tests."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .codes import make_repetition, make_toric, toric_plaquette
from .graphs import build_graphs
from .kam import (FlowConfig, FlowResult, build_unitary, direct_rotation, initial_collection,
                  perturbation_field, run_flow, symmetry_violation)
from .pauli import PauliOperator, StabilizerCode, diagonal_projector, realize
from .spectral import (band_report, davis_kahan_bound, exact_spectrum, fit_log_slope, form_bound_check,
                       ising_splitting_sweep, order_parameter_check, projector_distance,
                       quasi_locality_profile, spectral_projector)
from .tqo import local_group
from .words import OperatorCollection, WordContext, collection_matrix


@dataclass
class FlowRun:
    code: StabilizerCode
    ctx: WordContext
    perturbation: PauliOperator
    result: FlowResult
    seconds: float


def flow_on(code: StabilizerCode, perturbation: PauliOperator, config: FlowConfig,
            quiet: bool = True) -> FlowRun:
    ctx = WordContext(code)
    t = time.perf_counter()
    z0, scalar = initial_collection(ctx, perturbation)
    with warnings.catch_warnings():
        if quiet:
            warnings.simplefilter("ignore")
        res = run_flow(z0, config, scalar)
    return FlowRun(code, ctx, perturbation, res, time.perf_counter() - t)


def ising_flow(n: int, h: float, config: FlowConfig) -> FlowRun:
    return flow_on(make_repetition(n, periodic=True), perturbation_field(n, h), config)


def hamiltonian_matrix(code: StabilizerCode, perturbation: PauliOperator, dense: bool = True):
    return realize(code.h0() + perturbation, code.n_qubits, dense=dense)


# ---------------------------------------------------------------------------
# flow contraction


@dataclass
class ContractionRow:
    eps0: float
    n: int
    mu: float
    eps: float
    eta: float
    rhs: float | None
    ok_rhs: bool
    ok_eta: bool


def contraction_table(run: FlowRun) -> list[ContractionRow]:
    r = run.result
    rows = []
    for s in r.states:
        ok_rhs = s.rhs_eps is None or s.eps <= s.rhs_eps
        rows.append(ContractionRow(r.eps0, s.n, s.mu, s.eps, s.eta, s.rhs_eps, ok_rhs, s.eta <= 2 * r.eps0))
    return rows


# ---------------------------------------------------------------------------
# splitting scaling and toric band


@dataclass
class ScalingResult:
    h: float
    ns: list[int]
    deltas: list[float]
    gaps: list[float]
    slope: float
    intercept: float
    rows: list = field(default_factory=list)

    @property
    def slope_rel_error(self) -> float:
        return abs(self.slope - math.log(self.h)) / abs(math.log(self.h))


def splitting_scaling(ns, h: float, ed_cap: int = 10) -> ScalingResult:
    rows = ising_splitting_sweep(list(ns), h, ed_cap=ed_cap)
    deltas = [r.delta for r in rows]
    slope, icpt = fit_log_slope([r.n for r in rows], deltas)
    return ScalingResult(h, [r.n for r in rows], deltas, [r.gap for r in rows], slope, icpt, rows)


def generic_field(n: int, h: float, seed: int) -> PauliOperator:
    """sum_q (a_q X_q + b_q Y_q + c_q Z_q) with coefficients uniform in [-h, h]."""
    rng = np.random.default_rng(seed)
    terms = {}
    for q in range(n):
        a, b, c = rng.uniform(-h, h, size=3)
        terms[(1 << q, 0)] = a
        terms[(1 << q, 1 << q)] = b
        terms[(0, 1 << q)] = c
    return PauliOperator(n, terms)


def toric_band(lx: int, ly: int, h: float, seed: int = 0):
    code = make_toric(lx, ly)
    m = hamiltonian_matrix(code, generic_field(code.n_qubits, h, seed))
    spec = exact_spectrum(m, vectors=False)
    return band_report(spec.eigenvalues, code.k_logical)


# ---------------------------------------------------------------------------
# annulus witness


def toric_annulus(code: StabilizerCode, i0: int = 1, j0: int = 1) -> tuple[int, int]:
    """Ring of 8 plaquettes around plaquette (i0, j0), and that plaquette's index."""
    ring = 0
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                ring |= 1 << toric_plaquette(code, i0 + di, j0 + dj)
    return ring, toric_plaquette(code, i0, j0)


# ---------------------------------------------------------------------------
# post-flow checks


@dataclass
class FormBoundResult:
    eps0: float
    c: float
    ratio: float
    kernel_leak: float
    status: str


def form_bound_experiment(n: int, eps0: float, mu0: float = 5.0, config: FlowConfig | None = None) -> FormBoundResult:
    from .kam import ising_field_for_eps
    h = ising_field_for_eps(mu0, eps0)
    cfg = config or FlowConfig(mu0=mu0, mode="classical-symmetric", matrix_checks=False)
    run = ising_flow(n, h, cfg)
    st = run.result.final
    h0 = collection_matrix(OperatorCollection.h0(run.ctx))
    k = h0 + collection_matrix(st.split.d_part + st.split.m_part) - st.m_expect * np.eye(h0.shape[0])
    fb = form_bound_check(k, h0)
    return FormBoundResult(run.result.eps0, fb.c, fb.c / run.result.eps0, fb.kernel_leak, run.result.status)


@dataclass
class LocalityResult:
    norms: list[float]
    ratios: list[float]
    decay_ok: bool
    projector_distance: float
    background_bound: float
    tail_angle: float
    gap: float
    run: FlowRun | None = None


def dressing_unitary(run: FlowRun) -> np.ndarray:
    u = build_unitary(run.result.u_factors, run.code.n_qubits)
    if np.abs(u.imag).max() < 1e-13:
        u = np.ascontiguousarray(u.real)
    return u


def locality_experiment(n: int, h: float, mu0: float, r_from: int = 2, noise_floor: float = 1e-12,
                        config: FlowConfig | None = None) -> LocalityResult:
    """Profile of U^dagger Z_center U and the distance between U P U^dagger and the ED projector."""
    cfg = config or FlowConfig(mu0=mu0, mode="classical-symmetric", matrix_checks=False)
    run = ising_flow(n, h, cfg)
    code = run.code
    u = dressing_unitary(run)
    prof = quasi_locality_profile(u, PauliOperator(n, {(0, 1 << (n // 2)): 1.0}), build_graphs(code),
                                  noise_floor=noise_floor)
    ratios = prof.ratios()
    ok = all(r >= math.e for i, r in enumerate(ratios)
             if i >= r_from and prof.norms[i] > noise_floor)
    hm = hamiltonian_matrix(code, run.perturbation, dense=False).real.tocsr()
    g = 1 << code.k_logical
    spec = exact_spectrum(hm, n, k=g + 4)
    p_ed = spectral_projector(spec.eigenvectors[:, :g])
    p0 = diagonal_projector(code, {a: 1 for a in range(code.n_checks)})
    p1 = u @ p0 @ u.T.conj()
    dist = projector_distance(p1, p_ed)
    del p0
    gap = float(spec.eigenvalues[g] - spec.eigenvalues[g - 1])
    bound = davis_kahan_bound(residual_norm(run), gap)
    angle = math.asin(min(dist, 1.0))
    return LocalityResult(prof.norms, ratios, ok, dist, bound, angle, gap, run)


def residual_norm(run: FlowRun) -> float:
    """Operator-norm bound on what the dressed frame leaves off the block-diagonal K."""
    st = run.result.final
    v_op = st.split.v.total_norm()
    return st.error_bound + v_op


@dataclass
class SymmetricResult:
    max_violation: float
    smeared_error: float
    smeared_flow_error: float
    unsmeared_min: float
    tail_angle: float
    status: str


def symmetric_mode_experiment(n: int, h: float, mu0: float) -> SymmetricResult:
    cfg = FlowConfig(mu0=mu0, mode="classical-symmetric", matrix_checks=False)
    run = ising_flow(n, h, cfg)
    code = run.code
    from .codes import classical_symmetry_group
    gens = classical_symmetry_group(code).generators
    viol = 0.0
    for s in run.result.states:
        viol = max(viol, symmetry_violation(s.z, gens))
    for a in run.result.u_factors:
        viol = max(viol, symmetry_violation(a, gens))
    u = dressing_unitary(run)
    hm = hamiltonian_matrix(code, run.perturbation, dense=False).real.tocsr()
    spec = exact_spectrum(hm, n, k=2 + 4)
    p_ed = spectral_projector(spec.eigenvectors[:, :2])
    rep = order_parameter_check(code, u, p_ed, list(range(n)), ground_index=0)
    return SymmetricResult(viol, rep.max_smeared_error, max(rep.smeared_flow), min(abs(v) for v in rep.unsmeared),
                           rep.tail_angle, run.result.status)


# ---------------------------------------------------------------------------
# random operators for property checks


def random_local_operator(code: StabilizerCode, rng: np.random.Generator, n_terms: int = 3,
                          hermitian: bool = False) -> PauliOperator:
    """Sum of random Paulis, each on at most two neighbouring qubits."""
    g = build_graphs(code)
    n = code.n_qubits
    terms: dict = {}
    for _ in range(n_terms):
        q = int(rng.integers(n))
        nbrs = gf2.bits(g.qubit_adj[q]) or [q]
        q2 = int(rng.choice(nbrs))
        x = z = 0
        for qq in {q, q2}:
            letter = int(rng.integers(1, 4))
            x |= (letter & 1) << qq
            z |= ((letter >> 1) & 1) << qq
        c = rng.normal() if hermitian else complex(rng.normal(), rng.normal())
        terms[(x, z)] = terms.get((x, z), 0) + c
    if rng.random() < 0.3:
        terms[(0, 0)] = rng.normal()
    return PauliOperator(n, terms)
