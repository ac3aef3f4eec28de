"""KAM flow: splitting, generator of rotations, BCH step, running couplings.

Conventions.  One step rotates H -> exp(-i ad_A) H, so the first-order term
i[H0 + D + M, A] must cancel V on the words it reaches.  Undoing the rotations
gives P_tilde = U P U^dagger with U = exp(iA^0) exp(iA^1) ... (see
`build_unitary`).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.linalg import expm

from . import gf2
from .graphs import ball_and_kappa, code_distance, d_star as compute_d_star
from .pauli import PauliOperator, StabilizerCode, _PHASES
from .tqo import check_tqo2
from .words import (OperatorCollection, Word, WordContext, collection_commutator,
                    collection_matrix, collection_product_terms, decompose_operator)

log = logging.getLogger(__name__)


class TqoViolation(RuntimeError):
    """A ghost core is not in the stabilizer group (TQO-I fails at this size)."""


# ---------------------------------------------------------------------------
# splitting


@dataclass
class SplitCollections:
    d_part: OperatorCollection
    v_plus: OperatorCollection
    v_minus: OperatorCollection
    m_part: OperatorCollection
    overflow: OperatorCollection  # words with |S| >= d_*

    @property
    def v(self) -> OperatorCollection:
        return self.v_plus + self.v_minus

    def tracked(self) -> OperatorCollection:
        return self.d_part + self.v_plus + self.v_minus + self.m_part

    def overflow_pauli(self) -> PauliOperator:
        return self.overflow.to_pauli()

    def overflow_norm_bound(self) -> float:
        return self.overflow.total_norm()


_KIND_SLOT = {"D": "d_part", "V+": "v_plus", "V-": "v_minus", "M": "m_part"}


def split_collection(z: OperatorCollection, d_star: int) -> SplitCollections:
    ctx = z.ctx
    parts = {k: OperatorCollection(ctx) for k in ("d_part", "v_plus", "v_minus", "m_part", "overflow")}
    for w, core in z.entries.items():
        slot = "overflow" if w.size >= d_star else _KIND_SLOT[w.kind()]
        parts[slot].entries[w] = core
        if w in z._norms:
            parts[slot]._norms[w] = z._norms[w]
    return SplitCollections(**parts)


# ---------------------------------------------------------------------------
# ghosts


@dataclass
class GhostTable:
    """Per ghost word T: the group resolution (eta * c_p, exponent mask) of its core."""

    terms: dict[Word, list[tuple[complex, int]]]
    expectation: dict[Word, complex]
    by_check: dict[int, list[Word]]

    @property
    def total_expectation(self) -> complex:
        return complex(sum(self.expectation.values()))


def resolve_in_group(code: StabilizerCode, x: int, z: int) -> tuple[int, int] | None:
    """(eta, exponent mask) with P(x, z) = eta * prod_{a in mask} C_a, or None if outside."""
    res, tag = code.echelon.reduce(x | (z << code.n_qubits))
    if res:
        return None
    k = 0
    px = pz = 0
    from .pauli import product_phase
    for a in gf2.bits(tag):
        c = code.checks[a]
        k += product_phase(px, pz, c.x, c.z) + c.phase
        px ^= c.x
        pz ^= c.z
    k %= 4
    if k & 1:
        raise ValueError("product of Hermitian checks has imaginary phase")
    return (1 if k == 0 else -1), tag


def ghost_table(m: OperatorCollection) -> GhostTable:
    code = m.ctx.code
    terms: dict[Word, list] = {}
    expect: dict[Word, complex] = {}
    idx: dict[int, list[Word]] = {}
    for w, core in m.entries.items():
        if not w.is_ghost:
            raise ValueError(f"{w} is not a ghost word")
        rows = []
        for (x, z), c in core.items():
            r = resolve_in_group(code, x, z)
            if r is None:
                raise TqoViolation(f"ghost core term on word {w} is a logical operator")
            eta, tag = r
            rows.append((eta * c, tag))
        terms[w] = rows
        expect[w] = sum(v for v, _ in rows)
        for a in gf2.bits(w.S):
            idx.setdefault(a, []).append(w)
    return GhostTable(terms, expect, idx)


def ghost_coefficient(table: GhostTable, ghost: Word, target: Word) -> complex:
    """q with [M_T, X_{S'}] P = q X_{S'} P, for a target word with only + and g."""
    if target.minus | target.e:
        raise ValueError("target word must contain only + and g")
    if ghost.S & target.plus:
        return -table.expectation[ghost]
    sp = target.plus
    return complex(sum(v * (-2.0 if (tag & sp).bit_count() & 1 else 0.0) for v, tag in table.terms[ghost]))


def ghost_delta(table: GhostTable, target: Word) -> complex:
    """Delta(S') = sum over ghosts T meeting S' of q(S', T) / |S'_+|."""
    seen = set()
    acc = 0j
    for a in gf2.bits(target.S):
        for t in table.by_check.get(a, ()):
            if t not in seen:
                seen.add(t)
                acc += ghost_coefficient(table, t, target)
    return acc / target.plus.bit_count()


def m_expectation(m: OperatorCollection) -> complex:
    """<M> = Tr(P M P) / Tr P, via group membership of the ghost cores."""
    return ghost_table(m).total_expectation if len(m) else 0j


# ---------------------------------------------------------------------------
# generator


@dataclass
class GeneratorResult:
    a: OperatorCollection
    orders: list[float]  # total norm of each order of the series
    variant: str
    converged: bool


def _prune(c: OperatorCollection, cut: float) -> OperatorCollection:
    return c.cleaned(1e-15, absolute=cut)


def build_generator(split: SplitCollections, variant: str = "explicit", k_max: int = 4,
                    series_tol: float = 0.0, prune_abs: float = 0.0,
                    ghosts: GhostTable | None = None) -> GeneratorResult:
    """A = A+ + A- solving the block equations for the current D, M, V.

    explicit: Neumann series for the collection equation
        n_S A_S = i V_S - ([D + M, A])_S  on every V-type word, n_S = |S+| - |S-|.
    resummed: the admissible-sequence series with ghost resummation,
        A_0 = i V+ / (|S'+|(1 + Delta)),  A_k = -(D A_{k-1})|_{V+} / (|S'+|(1 + Delta)),
        and A- = (A+)^dagger.
    """
    ctx = split.v_plus.ctx
    v = split.v
    if not len(v):
        return GeneratorResult(OperatorCollection(ctx), [], variant, True)
    orders: list[float] = []
    converged = series_tol <= 0
    if variant == "explicit":
        dm = split.d_part + split.m_part
        cur = OperatorCollection(ctx)
        for w, core in v.entries.items():
            n_s = w.charge
            cur.entries[w] = {k: 1j * c / n_s for k, c in core.items()}
        total = cur.copy()
        orders.append(cur.total_norm())
        for _ in range(k_max):
            if not len(dm) or not len(cur):
                converged = True
                break
            com = collection_commutator(dm, cur)
            nxt = OperatorCollection(ctx)
            for w, core in com.entries.items():
                if w.kind() in ("V+", "V-"):
                    n_s = w.charge
                    nxt.entries[w] = {k: -c / n_s for k, c in core.items()}
            cur = _prune(nxt, prune_abs)
            orders.append(cur.total_norm())
            total = total + cur
            if series_tol > 0 and orders[-1] <= series_tol * orders[0]:
                converged = True
                break
        return GeneratorResult(total.cleaned(1e-15), orders, variant, converged)
    if variant != "resummed":
        raise ValueError(f"unknown generator variant {variant!r}")
    ghosts = ghosts if ghosts is not None else ghost_table(split.m_part)
    denom_cache: dict[Word, complex] = {}

    def denom(w: Word) -> complex:
        d = denom_cache.get(w)
        if d is None:
            d = w.plus.bit_count() * (1 + ghost_delta(ghosts, w))
            denom_cache[w] = d
        return d

    cur = OperatorCollection(ctx)
    for w, core in split.v_plus.entries.items():
        dn = denom(w)
        cur.entries[w] = {k: 1j * c / dn for k, c in core.items()}
    total = cur.copy()
    orders.append(cur.total_norm())
    d = split.d_part
    for _ in range(k_max):
        if not len(d) or not len(cur):
            converged = True
            break
        prod = OperatorCollection(ctx)
        collection_product_terms(d, cur, prod)
        nxt = OperatorCollection(ctx)
        for w, core in prod.entries.items():
            if w.kind() == "V+":
                dn = denom(w)
                nxt.entries[w] = {k: -c / dn for k, c in core.items()}
        cur = _prune(nxt, prune_abs)
        orders.append(cur.total_norm())
        total = total + cur
        if series_tol > 0 and orders[-1] <= series_tol * orders[0]:
            converged = True
            break
    a_plus = total.cleaned(1e-15)
    return GeneratorResult(a_plus + a_plus.dagger(), orders, variant, converged)


def ground_basis(ctx: WordContext) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (P, Pbar) of the codespace and its complement."""
    code = ctx.code
    h0 = collection_matrix(OperatorCollection.h0(ctx))
    if code.is_diagonal:
        d = np.real(np.diag(h0))
        eye = np.eye(len(d))
        return eye[:, d < 0.5], eye[:, d >= 0.5]
    vals, vecs = np.linalg.eigh(h0)
    return vecs[:, vals < 0.5], vecs[:, vals >= 0.5]


@dataclass
class GeneratorCheck:
    residual_plus: float  # ||Pbar (i[K0, A] + V) P||
    residual_minus: float  # ||P (i[K0, A] + V) Pbar||
    v_norm: float
    block_rel_diff: float  # series A vs block solve, Pbar-P block, relative
    block_norm: float


def generator_residual(split: SplitCollections, a: OperatorCollection) -> GeneratorCheck:
    """Dense-matrix residual of the block equations and comparison with a Sylvester solve."""
    from scipy.linalg import solve_sylvester
    ctx = a.ctx
    k0 = collection_matrix(OperatorCollection.h0(ctx) + split.d_part + split.m_part)
    vm = collection_matrix(split.v)
    am = collection_matrix(a)
    bp, bq = ground_basis(ctx)
    r = 1j * (k0 @ am - am @ k0) + vm
    res_p = np.linalg.norm(bq.conj().T @ r @ bp, 2)
    res_m = np.linalg.norm(bp.conj().T @ r @ bq, 2)
    kqq = bq.conj().T @ k0 @ bq
    kpp = bp.conj().T @ k0 @ bp
    vqp = bq.conj().T @ vm @ bp
    # i (Kqq X - X Kpp) = -Vqp
    x = solve_sylvester(kqq, -kpp, 1j * vqp)
    aqp = bq.conj().T @ am @ bp
    bn = np.linalg.norm(x, 2)
    diff = np.linalg.norm(aqp - x, 2) / bn if bn > 0 else float(np.linalg.norm(aqp, 2))
    return GeneratorCheck(float(res_p), float(res_m), float(np.linalg.norm(vm, 2)), float(diff), float(bn))


# ---------------------------------------------------------------------------
# configuration, state, flow bounds


@dataclass
class FlowConfig:
    mu0: float = 5.0
    d_star: int | None = None  # override; None = from code metrics
    k_max: int = 6  # BCH truncation order
    k_series: int = 4  # generator series order
    series_tol: float = 0.0
    variant: str = "explicit"
    mode: str = "quantum"  # or "classical-symmetric"
    max_scales: int = 8
    prune_rel: float = 1e-6
    stop_const: float = 1.0  # C' in the stopping rule
    eps_floor: float = 0.0
    tol_residual: float = 1e-8
    tol_bch: float = 1e-6
    mu_star: float | None = None
    tqo_cap: int | None = None  # None: ceil(d / w_c) + 1, at most 7
    distance_cap: int = 8
    matrix_checks: bool = True
    matrix_cap: int = 12

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class CodeConstants:
    n_checks: int
    w_q: int
    w_c: int
    kappa: float
    ell: float
    d: int
    d_tilde: int
    d_star: int
    d_star_raw: float
    mu_star: float
    distance_exact: bool

    def as_dict(self) -> dict:
        return asdict(self)


def code_constants(ctx: WordContext, config: FlowConfig) -> CodeConstants:
    code, graphs = ctx.code, ctx.graphs
    prof = ball_and_kappa(graphs)
    mode = "symmetric" if config.mode == "classical-symmetric" else "quantum"
    dist = code_distance(code, mode, cap=config.distance_cap)
    cap = config.tqo_cap or min(math.ceil(dist.value / graphs.w_c) + 1, 7)
    tq = check_tqo2(code, cap, graphs)
    ds = compute_d_star(code, graphs, tq.d_tilde, mode, distance=dist)
    d_used = config.d_star if config.d_star is not None else ds.value
    if config.d_star is not None and config.d_star > ds.value:
        warnings.warn(f"d_* overridden upward ({ds.value} -> {config.d_star}); "
                      "theorem constants no longer apply", stacklevel=2)
    n = code.n_qubits
    c = d_used / math.log(n) if n > 1 else float("inf")
    mu_star = config.mu_star if config.mu_star is not None else max(
        prof.kappa * tq.ell + math.log(4) * (graphs.w_c + 1), 1.0 / c)
    return CodeConstants(code.n_checks, graphs.w_q, graphs.w_c, prof.kappa, tq.ell, int(dist.value),
                         tq.d_tilde, int(d_used), float(ds.raw), mu_star, bool(dist.exact))


def mu_schedule(mu0: float, mu_star: float, n_steps: int) -> list[float]:
    """mu_n - mu_{n+1} = (3/pi^2)(mu0 - mu_*)/(n+1)^2."""
    out = [mu0]
    for n in range(n_steps):
        out.append(out[-1] - 3.0 / math.pi ** 2 * (mu0 - mu_star) / (n + 1) ** 2)
    return out


def flow_rhs(eps: float, eta: float, dmu: float, mu0: float) -> float:
    """Closed form of the displayed bound on eps_{n+1}.

    With u = 4 e eps / ((1 - e eta) dmu):
        sum_{k>=1} (k+1) u^k = 1/(1-u)^2 - 1,  sum_{k>=2} (k+1) u^k = 1/(1-u)^2 - 1 - 2u,
    each divided by dmu.
    """
    if e_eta_bad(eta) or dmu <= 0:
        return math.inf
    u = 4 * math.e * eps / ((1 - math.e * eta) * dmu)
    if u >= 1:
        return math.inf
    s1 = 1 / (1 - u) ** 2 - 1
    s2 = s1 - 2 * u
    return (s1 * eps + s2 * (math.exp(mu0) + eta)) / dmu


def eta_rhs(eps: float, eta: float, dmu: float, mu0: float) -> float:
    if e_eta_bad(eta) or dmu <= 0:
        return math.inf
    u = 4 * math.e * eps / ((1 - math.e * eta) * dmu)
    if u >= 1:
        return math.inf
    return eta + eps + (1 / (1 - u) ** 2 - 1) * (math.exp(mu0) + eta + eps) / dmu


def e_eta_bad(eta: float) -> bool:
    return math.e * eta >= 1


def prop71_tail(a_norm: float, h_norm: float, dmu: float, k_max: int) -> float:
    """sum_{k > k_max} (1/k!) (k+1)! (2e)^k a^k h / dmu^{k+1}."""
    r = 2 * math.e * a_norm / dmu
    if r >= 1:
        return math.inf
    # sum_{k>K} (k+1) r^k = r^{K+1} ((K+2) - (K+1) r) / (1-r)^2
    K = k_max
    return h_norm / dmu * r ** (K + 1) * ((K + 2) - (K + 1) * r) / (1 - r) ** 2


def operator_tail(a_op: float, h_op: float, k_max: int) -> float:
    """sum_{k > k_max} (2||A||)^k ||H|| / k!, a plain operator-norm remainder."""
    x = 2 * a_op
    term = h_op
    tot = 0.0
    for k in range(1, k_max + 60):
        term *= x / k
        if k > k_max:
            tot += term
            if term < 1e-30 * max(tot, 1e-300):
                break
    return tot


@dataclass
class FlowState:
    n: int
    mu: float
    split: SplitCollections
    eps: float
    eta: float
    m_expect: complex
    error_bound: float
    scalar: complex = 0j
    # per-step diagnostics, filled by kam_step
    rhs_eps: float | None = None
    rhs_eta: float | None = None
    a_norm: float | None = None
    a_bound: float | None = None
    bch_tail: float | None = None
    prop71_tail: float | None = None
    overflow: float = 0.0
    pruned: float = 0.0
    v_origin_residual: float | None = None
    generator_orders: list = field(default_factory=list)
    exact_error: float | None = None
    kp_residual: float | None = None
    symmetry_violation: float | None = None

    @property
    def z(self) -> OperatorCollection:
        return self.split.tracked()

    def row(self) -> dict:
        return {"n": self.n, "mu": self.mu, "eps": self.eps, "eta": self.eta,
                "m_expect": float(np.real(self.m_expect)), "error_bound": self.error_bound,
                "rhs_eps": self.rhs_eps, "rhs_eta": self.rhs_eta, "a_norm": self.a_norm,
                "a_bound": self.a_bound, "bch_tail": self.bch_tail, "prop71_tail": self.prop71_tail,
                "overflow": self.overflow, "pruned": self.pruned, "v_origin_residual": self.v_origin_residual,
                "exact_error": self.exact_error, "kp_residual": self.kp_residual,
                "symmetry_violation": self.symmetry_violation,
                "n_words": {"D": len(self.split.d_part), "V": len(self.split.v_plus) + len(self.split.v_minus),
                            "M": len(self.split.m_part)}}


def make_state(z: OperatorCollection, n: int, mu: float, d_star: int, error_bound: float = 0.0,
               scalar: complex = 0j) -> FlowState:
    sp = split_collection(z, d_star)
    eps = sp.v.word_norm(mu)
    eta = sp.d_part.word_norm(mu) + sp.m_part.word_norm(mu)
    return FlowState(n, mu, sp, eps, eta, m_expectation(sp.m_part), error_bound, scalar)


# ---------------------------------------------------------------------------
# symmetry


def symmetry_violation(coll: OperatorCollection, generators) -> float:
    """Largest |coefficient| of a core Pauli that anticommutes with a symmetry generator."""
    worst = 0.0
    for _, core in coll.entries.items():
        for (x, z), c in core.items():
            for g in generators:
                if ((x & g.z).bit_count() + (z & g.x).bit_count()) & 1:
                    worst = max(worst, abs(c))
    return worst


# ---------------------------------------------------------------------------
# one step


@dataclass
class StepOutput:
    state: FlowState
    a: OperatorCollection


def kam_step(state: FlowState, mu_next: float, d_star: int, config: FlowConfig, stop_level: float,
             symmetry=None) -> StepOutput:
    ctx = state.split.v_plus.ctx
    sp = state.split
    v_tot = sp.v.total_norm()
    prune_abs = 1e-15 * max(v_tot, 1e-300)
    gen = build_generator(sp, config.variant, config.k_series, config.series_tol, prune_abs)
    a = gen.a
    # drop negligible generator words: cheaper commutators, exactness of the rotation is unaffected
    a_cut = config.prune_rel * stop_level * 1e-3
    a = OperatorCollection(ctx, {w: c for w, c in a.entries.items()
                                 if a.norm_of(w) * math.exp(state.mu * w.size) >= a_cut or w.size < d_star})
    z = sp.tracked()
    overflow: list = []
    # T1 = i ad_H0(A) - i [A, Z]
    t1 = a.ad_h0().scale(1j)
    big = t1.filter(lambda w: w.size >= d_star)
    ovf = big.total_norm()
    t1 = t1.filter(lambda w: w.size < d_star)
    t1 = t1 + collection_commutator(a, z, size_limit=d_star, overflow=overflow).scale(-1j)
    ovf += sum(v for _, v in overflow)
    # first-order check: V-words of V + (-i)[A, H0 + D + M] should vanish
    first = sp.v + a.ad_h0().scale(1j).filter(lambda w: w.size < d_star) \
        + collection_commutator(a, sp.d_part + sp.m_part, size_limit=d_star).scale(-1j)
    v_origin = first.filter(lambda w: w.kind() in ("V+", "V-")).word_norm(state.mu)
    z_new = z + t1
    t = t1
    for k in range(2, config.k_max + 1):
        overflow = []
        t = collection_commutator(a, t, size_limit=d_star, overflow=overflow).scale(-1j / k)
        ovf += sum(v for _, v in overflow) / k
        if not len(t):
            break
        z_new = z_new + t
    a_op = a.total_norm()
    h_op = ctx.code.n_checks + z.total_norm()
    tail_op = operator_tail(a_op, h_op, config.k_max)
    a_mu = a.word_norm(state.mu)
    h_mu = math.exp(config.mu0) + state.eps + state.eta
    dmu = state.mu - mu_next
    tail71 = prop71_tail(a_mu, h_mu, dmu, config.k_max) * ctx.code.n_checks
    tail = min(tail_op, tail71)
    if tail > config.tol_bch:
        log.warning("BCH tail estimate %.3e exceeds tolerance %.1e", tail, config.tol_bch)
    # prune words far below the stopping level, charge their operator-norm mass to the error
    cut = config.prune_rel * stop_level
    kept = OperatorCollection(ctx)
    pruned = 0.0
    for w, core in z_new.cleaned(1e-15).entries.items():
        nv = z_new.norm_of(w)
        if nv * math.exp(mu_next * w.size) < cut:
            pruned += nv
        else:
            kept.entries[w] = core
            kept._norms[w] = nv
    nxt = make_state(kept, state.n + 1, mu_next, d_star,
                     state.error_bound + ovf + tail + pruned, state.scalar)
    nxt.rhs_eps = flow_rhs(state.eps, state.eta, dmu, config.mu0)
    nxt.rhs_eta = eta_rhs(state.eps, state.eta, dmu, config.mu0)
    nxt.a_norm = a_mu
    nxt.a_bound = 2 * state.eps / (1 - math.e * state.eta) if not e_eta_bad(state.eta) else math.inf
    nxt.bch_tail = tail
    nxt.prop71_tail = tail71
    nxt.overflow = ovf
    nxt.pruned = pruned
    nxt.v_origin_residual = v_origin
    nxt.generator_orders = gen.orders
    if symmetry is not None:
        nxt.symmetry_violation = max(symmetry_violation(nxt.z, symmetry), symmetry_violation(a, symmetry))
    return StepOutput(nxt, a)


# ---------------------------------------------------------------------------
# full flow


@dataclass
class FlowResult:
    states: list[FlowState]
    u_factors: list[OperatorCollection]
    n_star: int | None
    status: str  # converged | max_scales | diverged
    constants: CodeConstants
    config: FlowConfig
    mu_floor_used: bool
    stop_level: float
    mu_inf: float
    eps0: float

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    @property
    def b(self) -> float:
        """Energy shift <M^(n_*)> plus the identity part of the perturbation."""
        st = self.final
        return float(np.real(st.m_expect + st.scalar))

    def error_theorem_bound(self, C: float = 1.0) -> float:
        return C * self.constants.n_checks * self.eps0 * math.exp(-self.mu_inf * self.constants.d_star)

    def table(self) -> list[dict]:
        return [s.row() for s in self.states]

    def report(self) -> dict:
        return {"status": self.status, "n_star": self.n_star, "eps0": self.eps0, "b": self.b,
                "stop_level": self.stop_level, "mu_inf": self.mu_inf, "mu_floor_used": self.mu_floor_used,
                "constants": self.constants.as_dict(), "config": self.config.as_dict(),
                "error_bound": self.final.error_bound,
                "theorem_error_bound_C1": self.error_theorem_bound(),
                "scales": self.table()}


def initial_collection(ctx: WordContext, perturbation: PauliOperator) -> tuple[OperatorCollection, complex]:
    return decompose_operator(perturbation, ctx)


def run_flow(z0: OperatorCollection, config: FlowConfig, scalar: complex = 0j,
             constants: CodeConstants | None = None, symmetry=None,
             keep_matrices: bool | None = None) -> FlowResult:
    ctx = z0.ctx
    const = constants or code_constants(ctx, config)
    d_star = const.d_star
    mu0 = config.mu0
    mu_star = const.mu_star
    floor_used = False
    if mu0 <= mu_star:
        warnings.warn(f"mu0={mu0} <= mu_*={mu_star:.3f}; bounds are not certified, "
                      f"schedule uses mu0/2 as floor", stacklevel=2)
        mu_star = mu0 / 2
        floor_used = True
    mus = mu_schedule(mu0, mu_star, config.max_scales + 1)
    mu_inf = mu_star + (mu0 - mu_star) / 2
    if symmetry is None and config.mode == "classical-symmetric":
        from .codes import classical_symmetry_group
        symmetry = classical_symmetry_group(ctx.code).generators
    state = make_state(z0, 0, mu0, d_star, 0.0, scalar)
    # words at or beyond the cutoff in the input go to the error from the start
    state.error_bound = state.split.overflow_norm_bound()
    eps0 = z0.word_norm(mu0)
    stop = max(config.stop_const * eps0 * math.exp(-mu_inf * d_star), config.eps_floor)
    if symmetry is not None:
        state.symmetry_violation = symmetry_violation(z0, symmetry)
    states = [state]
    factors: list[OperatorCollection] = []
    dense = keep_matrices if keep_matrices is not None else (config.matrix_checks and ctx.n <= config.matrix_cap)
    mats = _MatrixTracker(ctx, z0, scalar) if dense else None
    if mats:
        mats.check(state)
    if state.eps <= stop:
        return FlowResult(states, factors, 0, "converged", const, config, floor_used, stop, mu_inf, eps0)
    rises = 0
    status = "max_scales"
    n_star = None
    for n in range(config.max_scales):
        out = kam_step(state, mus[n + 1], d_star, config, stop, symmetry)
        factors.append(out.a)
        nxt = out.state
        if mats:
            mats.rotate(out.a)
            mats.check(nxt)
        states.append(nxt)
        log.info("scale %d: mu=%.4f eps=%.3e eta=%.3e", nxt.n, nxt.mu, nxt.eps, nxt.eta)
        rises = rises + 1 if nxt.eps > state.eps else 0
        state = nxt
        if state.eps <= stop:
            status, n_star = "converged", state.n
            break
        if rises >= 3:
            status = "diverged"
            break
    return FlowResult(states, factors, n_star, status, const, config, floor_used, stop, mu_inf, eps0)


class _MatrixTracker:
    """Dense bookkeeping of W = exp(-iA^n)...exp(-iA^0) for exact error checks."""

    def __init__(self, ctx: WordContext, z0: OperatorCollection, scalar: complex):
        self.ctx = ctx
        self.h0 = collection_matrix(OperatorCollection.h0(ctx))
        self.h = self.h0 + collection_matrix(z0) + scalar * np.eye(self.h0.shape[0])
        self.hrot = self.h.copy()
        bp, _ = ground_basis(ctx)
        self.p = bp @ bp.conj().T

    def rotate(self, a: OperatorCollection) -> None:
        w = exp_i(collection_matrix(a), -1.0)
        self.hrot = w @ self.hrot @ w.conj().T

    def check(self, state: FlowState) -> None:
        zm = collection_matrix(state.z)
        diff = self.hrot - self.h0 - zm - state.scalar * np.eye(self.h0.shape[0])
        state.exact_error = float(np.linalg.norm(diff, 2))
        km = self.h0 + collection_matrix(state.split.d_part + state.split.m_part) \
            - state.m_expect * np.eye(self.h0.shape[0])
        state.kp_residual = float(max(np.abs(km @ self.p).max(), np.abs(self.p @ km).max()))


# ---------------------------------------------------------------------------
# dressing unitary


def exp_i(am: np.ndarray, s: float = 1.0) -> np.ndarray:
    """exp(i s A) for Hermitian A.

    A purely imaginary A (real Hamiltonians) gives a real orthogonal matrix,
    computed with a real expm; otherwise through the eigendecomposition.
    """
    scale = np.abs(am).max(initial=0.0)
    if not np.iscomplexobj(am) and scale > 0:
        am = am.astype(complex)
    if np.abs(am.real).max(initial=0.0) <= 1e-15 * scale:
        b = am.imag
        return expm(-s * (b - b.T) / 2)
    vals, vecs = np.linalg.eigh((am + am.conj().T) / 2)
    return (vecs * np.exp(1j * s * vals)) @ vecs.conj().T


def build_unitary(u_factors: list[OperatorCollection], n_qubits: int | None = None) -> np.ndarray:
    """U = exp(iA^0) exp(iA^1) ... so that P_tilde = U P U^dagger."""
    if not u_factors:
        if n_qubits is None:
            raise ValueError("need n_qubits when there are no factors")
        return np.eye(1 << n_qubits)
    return unitary_from_matrices([collection_matrix(a) for a in u_factors])


def unitary_from_matrices(mats: list[np.ndarray]) -> np.ndarray:
    u = None
    for am in mats:
        f = exp_i(am)
        u = f if u is None else u @ f
    return u


def direct_rotation(p1: np.ndarray, p2: np.ndarray) -> tuple[np.ndarray, float]:
    """Unitary W with W p1 W^dagger = p2 (Kato's direct rotation) and ||log W||.

    Requires ||p1 - p2|| < 1.
    """
    d = p2 - p1
    nd = np.linalg.norm(d, 2)
    if nd >= 1:
        raise ValueError("projectors too far apart for a direct rotation")
    eye = np.eye(p1.shape[0])
    m = p2 @ p1 + (eye - p2) @ (eye - p1)
    vals, vecs = np.linalg.eigh(eye - d @ d)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    w = inv_sqrt @ m
    # the generator angle equals arcsin of the largest principal-angle sine
    return w, float(math.asin(min(nd, 1.0)))


def perturbation_field(n: int, h: float, letter: str = "X", qubits=None) -> PauliOperator:
    bit = {"X": (1, 0), "Z": (0, 1), "Y": (1, 1)}[letter]
    terms = {}
    for q in (range(n) if qubits is None else qubits):
        terms[(bit[0] << q, bit[1] << q)] = h
    return PauliOperator(n, terms)


def ising_field_for_eps(mu0: float, eps0: float) -> float:
    """h with ||h sum X||_{mu0} = eps0 on a ring: every check meets 8 words of size 2."""
    return eps0 / (4 * 2 * math.exp(2 * mu0))
