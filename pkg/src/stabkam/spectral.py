"""Exact-diagonalization oracle and spectral checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import gf2
from .pauli import (DENSE_CAP, SPARSE_CAP, CapExceeded, PauliOperator, PauliString, StabilizerCode,
                    diagonal_projector, realize)

DENSE_ED_CAP = 11  # full eigh above this is too slow for the desk budget


# ---------------------------------------------------------------------------
# spectra


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    residual: float  # max ||H v - lambda v|| / ||H||
    complete: bool


def exact_spectrum(h, n_qubits: int | None = None, k: int | None = None, dense: bool | None = None,
                   vectors: bool = True, tol: float = 0.0) -> Spectrum:
    """Eigenvalues (and vectors) of a Hermitian PauliOperator or matrix, sorted ascending.

    Dense eigh for small systems, otherwise Lanczos (eigsh) for the lowest k.
    """
    if isinstance(h, PauliOperator):
        if not h.is_hermitian():
            raise ValueError("Hamiltonian is not Hermitian")
        n = h.n if n_qubits is None else n_qubits
        if n > SPARSE_CAP:
            raise CapExceeded(f"{n} qubits exceeds sparse cap {SPARSE_CAP}")
        if dense is None:
            dense = n <= DENSE_ED_CAP and k is None
        m = realize(h, n, dense=dense)
    else:
        m = h
        dense = not sp.issparse(m) if dense is None else dense
        if dense and sp.issparse(m):
            m = m.toarray()
    if sp.issparse(m) is False and not dense:
        m = sp.csr_matrix(m)
    dim = m.shape[0]
    if dense or k is None or k >= dim - 1:
        mm = m.toarray() if sp.issparse(m) else np.asarray(m)
        if np.abs(mm - mm.conj().T).max() > 1e-10 * max(1.0, np.abs(mm).max()):
            raise ValueError("matrix is not Hermitian")
        if np.isrealobj(mm) or np.abs(mm.imag).max() == 0:
            mm = mm.real
        if vectors:
            vals, vecs = np.linalg.eigh(mm)
        else:
            vals, vecs = np.linalg.eigvalsh(mm), None
        if k is not None:
            vals = vals[:k]
            vecs = None if vecs is None else vecs[:, :k]
        res = _residual(mm, vals, vecs)
        return Spectrum(vals, vecs, res, k is None)
    mm = m
    if abs(mm - mm.getH()).max() > 1e-10:
        raise ValueError("matrix is not Hermitian")
    if abs(mm.imag).max() == 0:
        mm = mm.real.tocsr()
    rng = np.random.default_rng(0)
    v0 = rng.normal(size=dim)
    vals, vecs = spla.eigsh(mm, k=k, which="SA", v0=v0, tol=tol, maxiter=20 * dim)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    res = _residual(mm, vals, vecs)
    return Spectrum(vals, vecs if vectors else None, res, False)


def _residual(m, vals, vecs) -> float:
    if vecs is None:
        return float("nan")
    hv = m @ vecs
    scale = max(float(np.abs(vals).max()), 1e-300)
    return float(np.linalg.norm(hv - vecs * vals, axis=0).max() / scale)


# ---------------------------------------------------------------------------
# bands and splitting


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    n_ground: int
    b: float
    delta: float  # max - min over the lowest 2^K
    gap: float  # E_{2^K} - E_{2^K - 1}
    bands: list[int]  # assigned k per eigenvalue
    c_prime: float | None  # smallest C' making every eigenvalue fit its interval
    violations: list[int] = field(default_factory=list)

    def table(self) -> list[dict]:
        return [{"index": i, "energy": float(e), "shifted": float(e - self.b), "band": k}
                for i, (e, k) in enumerate(zip(self.eigenvalues, self.bands))]


def band_report(eigenvalues, k_logical: int, eps0: float | None = None, c_prime: float | None = None,
                b: float | None = None) -> SpectrumReport:
    """Band assignment around integers after the shift b (default: mean of the lowest 2^K)."""
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    g = 1 << k_logical
    low = ev[:g]
    b = float(low.mean()) if b is None else b
    delta = float(low.max() - low.min())
    gap = float(ev[g] - ev[g - 1]) if len(ev) > g else float("nan")
    shifted = ev - b
    bands = [int(round(x)) for x in shifted]
    bands[:g] = [0] * g
    need = 0.0
    for x, k in zip(shifted, bands):
        if k > 0 and eps0:
            need = max(need, (abs(x - k) - delta) / (k * eps0))
    cp = need if c_prime is None else c_prime
    viol = []
    for i, (x, k) in enumerate(zip(shifted, bands)):
        width = (k * cp * (eps0 or 0.0)) + delta
        if abs(x - k) > width + 1e-12:
            viol.append(i)
    return SpectrumReport(ev, g, b, delta, gap, bands, cp if eps0 else None, viol)


def ground_sector_indices(code: StabilizerCode) -> np.ndarray:
    """Computational-basis states in the codespace (diagonal codes only)."""
    if not code.is_diagonal:
        raise ValueError("ground-sector indices need a diagonal code")
    return np.flatnonzero(diagonal_projector(code, {a: 1 for a in range(code.n_checks)}, dense=False).diagonal())


def feshbach_levels(h, p_idx: np.ndarray, levels: int | None = None, iters: int = 50,
                    tol: float = 1e-15) -> tuple[np.ndarray, tuple]:
    """Self-consistent eigenvalues of the effective Hamiltonian on span(p_idx).

    H_eff(E) = H_PP + H_PQ (E - H_QQ)^{-1} H_QP; level j iterates
    E <- lambda_j(H_eff(E)).  Returns (levels, (H_eff, R H_QP) at the lowest level).
    The tiny splitting is read from the effective matrix, where it is an
    off-diagonal element rather than a difference of two large energies.
    The resolvent is applied by conjugate gradients: H_QQ - E is positive
    definite while E sits below the excited sector.
    """
    m = sp.csr_matrix(h)
    dim = m.shape[0]
    q_idx = np.setdiff1d(np.arange(dim), p_idx)
    hpp = m[p_idx][:, p_idx].toarray()
    hpq = m[p_idx][:, q_idx]
    hqp = m[q_idx][:, p_idx].toarray()
    hqq = m[q_idx][:, q_idx].tocsr()
    warm = [None] * hqp.shape[1]

    def heff(e):
        op = hqq - e * sp.identity(len(q_idx), format="csr")
        cols = []
        for j in range(hqp.shape[1]):
            rhs = hqp[:, j]
            if not np.any(rhs):
                cols.append(np.zeros_like(rhs))
                continue
            x, info = spla.cg(op, rhs, x0=warm[j], rtol=1e-15, atol=1e-300, maxiter=10 * len(q_idx))
            if info > 0:
                x = spla.spsolve(op.tocsc(), rhs)
            warm[j] = x
            cols.append(x)
        x = np.column_stack(cols)
        out = hpp - hpq @ x
        return (out + out.conj().T) / 2, x

    g = len(p_idx) if levels is None else levels
    found = np.zeros(g)
    eff0 = (None, None)
    base = np.linalg.eigvalsh(hpp)
    for j in range(g):
        e = float(base[j])
        for _ in range(iters):
            new = float(np.linalg.eigvalsh(heff(e)[0])[j])
            done = abs(new - e) <= tol * max(1.0, abs(e))
            e = new
            if done:
                break
        found[j] = e
        if j == 0:
            eff0 = heff(e)
    return found, eff0


def feshbach_splitting(h, p_idx: np.ndarray) -> float:
    """Ground-sector spread E_top - E_0 from H_eff at the self-consistent ground energy.

    The spread s of H_eff(E_0) is corrected to first order for the energy
    dependence of H_eff: delta = s / (1 + |R H_QP v|^2), v the top eigenvector.
    """
    _, (eff, x) = feshbach_levels(h, p_idx, levels=1)
    # remove the common shift first so the spread is not lost to rounding
    eff = eff - np.mean(np.diag(eff).real) * np.eye(len(eff))
    ev, vec = np.linalg.eigh(eff)
    w = float(np.linalg.norm(x @ vec[:, -1]) ** 2)
    return float(ev.max() - ev.min()) / (1 + w)


def ising_pt_splitting(n: int, h: float) -> float:
    """Leading-order splitting of the ring h sum X: 2 |<up| X (G0 X)^{n-1} |down>| h^n.

    G0 = -Q / H0 at E = 0.  All terms share one sign, so no cancellation occurs.
    """
    dim = 1 << n
    b = np.arange(dim)
    # H0 = number of broken bonds on the ring
    rot = ((b >> 1) | ((b & 1) << (n - 1)))
    broken = np.bitwise_count(b ^ rot).astype(float)
    g0 = np.where(broken > 0, -1.0 / np.where(broken > 0, broken, 1), 0.0)
    v = np.zeros(dim)
    v[dim - 1] = 1.0
    for step in range(n):
        w = np.zeros(dim)
        for q in range(n):
            w += v[b ^ (1 << q)]
        v = w if step == n - 1 else g0 * w
    return float(2 * abs(v[0]) * h ** n)


@dataclass
class SplittingRow:
    n: int
    h: float
    delta: float
    delta_ed: float | None
    delta_pt: float
    gap: float
    method: str


def ising_splitting_sweep(ns, h: float, ed_cap: int = 8) -> list[SplittingRow]:
    """Ground splitting and gap for rings H = sum (1 - Z Z)/2 - h sum X."""
    from .codes import make_repetition
    rows = []
    for n in ns:
        code = make_repetition(n, periodic=True)
        ham = code.h0() + PauliOperator(n, {(1 << q, 0): -h for q in range(n)})
        m = realize(ham, n, dense=False).real.tocsr()
        p_idx = ground_sector_indices(code)
        delta = feshbach_splitting(m, p_idx)
        spec = exact_spectrum(m, n, k=min(4, (1 << n) - 2), dense=n <= 6)
        gap = float(spec.eigenvalues[2] - spec.eigenvalues[1])
        d_ed = None
        if n <= ed_cap:
            ev = np.linalg.eigvalsh(m.toarray())
            d_ed = float(ev[1] - ev[0])
        rows.append(SplittingRow(n, h, delta, d_ed, ising_pt_splitting(n, h), gap, "feshbach"))
    return rows


def fit_log_slope(ns, values) -> tuple[float, float]:
    """Least-squares slope and intercept of log(values) against ns."""
    x = np.asarray(ns, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    slope, icpt = np.polyfit(x, y, 1)
    return float(slope), float(icpt)


# ---------------------------------------------------------------------------
# relative form bound


@dataclass
class FormBound:
    c: float
    lower: float  # most negative eigenvalue of the pencil
    upper: float
    kernel_leak: float  # ||(K - H0) P||


def form_bound_check(k_op, h0, p_proj=None, tol: float = 0.5) -> FormBound:
    """Smallest C with -C H0 <= K - H0 <= C H0 on range(H0).

    Computed as the extreme eigenvalues of H0^{-1/2} (K - H0) H0^{-1/2}
    restricted to range(H0); K - H0 must vanish on ker(H0).
    """
    k = np.asarray(k_op.toarray() if sp.issparse(k_op) else k_op)
    h = np.asarray(h0.toarray() if sp.issparse(h0) else h0)
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    rng_ = vals > tol
    b = vecs[:, rng_]
    d = 1 / np.sqrt(vals[rng_])
    diff = k - h
    pencil = (b.conj().T @ diff @ b) * d[:, None] * d[None, :]
    pv = np.linalg.eigvalsh((pencil + pencil.conj().T) / 2)
    ker = vecs[:, ~rng_]
    leak = float(np.linalg.norm(diff @ ker, 2)) if ker.size else 0.0
    return FormBound(float(max(abs(pv.min()), abs(pv.max()))), float(pv.min()), float(pv.max()), leak)


# ---------------------------------------------------------------------------
# locality of conjugated operators


def _axes_letters(n: int) -> tuple[str, str]:
    import string
    letters = string.ascii_letters
    if 2 * n > len(letters):
        raise CapExceeded("too many qubits for einsum partial trace")
    return letters[:n], letters[n:2 * n]


def reduced_operator(t: np.ndarray, n: int, keep: list[int]) -> np.ndarray:
    """Tr_out(T) / 2^{|out|} as a matrix on the kept qubits (ascending, little-endian)."""
    keep = sorted(keep)
    out = [q for q in range(n) if q not in keep]
    rows, cols = _axes_letters(n)
    # axis i of the reshaped array is qubit n-1-i
    r = [rows[n - 1 - i] for i in range(n)]
    c = [cols[n - 1 - i] for i in range(n)]
    for q in out:
        c[n - 1 - q] = r[n - 1 - q]
    kept_desc = sorted(keep, reverse=True)
    spec = "".join(r) + "".join(c) + "->" + "".join(rows[q] for q in kept_desc) + "".join(cols[q] for q in kept_desc)
    red = np.einsum(spec, t.reshape([2] * (2 * n)))
    dk = 1 << len(keep)
    return red.reshape(dk, dk) / (1 << len(out))


def embed_operator(m: np.ndarray, qubits: list[int], target: list[int]) -> np.ndarray:
    """m on `qubits` tensored with the identity on target \\ qubits, as a matrix on `target`."""
    qubits, target = sorted(qubits), sorted(target)
    extra = [q for q in target if q not in qubits]
    full = np.kron(np.eye(1 << len(extra)), m)
    # current order (descending axes): extra desc, qubits desc
    cur = sorted(extra, reverse=True) + sorted(qubits, reverse=True)
    want = sorted(target, reverse=True)
    k = len(target)
    perm = [cur.index(q) for q in want]
    t = full.reshape([2] * (2 * k)).transpose(perm + [k + p for p in perm])
    return t.reshape(1 << k, 1 << k)


@dataclass
class LocalityProfile:
    radii: list[int]
    norms: list[float]  # ||O_r||, r = 0 is E_0(T) - O
    background: float
    decay_rate: float | None
    reconstruction_error: float | None
    ball_sizes: list[int]

    def ratios(self) -> list[float]:
        return [self.norms[i] / self.norms[i + 1] if self.norms[i + 1] > 0 else math.inf
                for i in range(len(self.norms) - 1)]


def _op_norm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    herm = np.abs(m - m.conj().T).max() <= 1e-12 * max(1.0, np.abs(m).max())
    if herm:
        ev = np.linalg.eigvalsh((m + m.conj().T) / 2)
        return float(np.abs(ev).max())
    return float(np.linalg.norm(m, 2))


def quasi_locality_profile(u: np.ndarray, o_local: PauliOperator, graphs, center: int | None = None,
                           r_max: int | None = None, reconstruct: bool = False,
                           noise_floor: float = 1e-12) -> LocalityProfile:
    """||O_r|| for U^dagger O U = O + sum_r O_r + O_bg on balls around supp(O).

    O_r = E_r - E_{r-1} with E_r the conditional expectation onto the ball of
    radius r (partial trace over the complement times the normalized identity);
    O_0 = E_0 - O.
    """
    n = graphs.n_qubits
    y = o_local.support if center is None else (1 << center)
    om = realize(o_local, n, dense=True)
    t = u.conj().T @ om @ u
    if np.abs(t.imag).max() < 1e-13 and np.isrealobj(u) is False:
        t = t.real
    elif np.isrealobj(t) is False and np.abs(t.imag).max() == 0:
        t = t.real
    layers = graphs.qubit_layers(y)
    balls = []
    acc = 0
    for lay in layers:
        acc |= lay
        balls.append(gf2.bits(acc))
    if r_max is not None:
        balls = balls[:r_max + 1]
    norms = []
    prev_red, prev_q = None, None
    o_red = None
    rec = np.zeros_like(t) if reconstruct else None
    for r, ball in enumerate(balls):
        red = reduced_operator(t, n, ball)
        if r == 0:
            o_red = reduced_operator(om.real if np.isrealobj(t) else om, n, ball)
            diff = red - o_red
        else:
            diff = red - embed_operator(prev_red, prev_q, ball)
        norms.append(_op_norm(diff))
        if reconstruct:
            rec += embed_operator(diff, ball, list(range(n)))
        prev_red, prev_q = red, ball
    full_last = embed_operator(prev_red, prev_q, list(range(n)))
    bg = _op_norm(t - full_last) if len(prev_q) < n else 0.0
    rec_err = None
    if reconstruct:
        rec += embed_operator(o_red, balls[0], list(range(n)))
        rec += t - full_last
        rec_err = float(np.abs(rec - t).max())
    # decay rate from consecutive ratios above the noise floor, r >= 1
    pts = [(r, v) for r, v in enumerate(norms) if r >= 1 and v > noise_floor]
    rate = None
    if len(pts) >= 2:
        rs, vs = zip(*pts)
        rate = -float(np.polyfit(rs, np.log(vs), 1)[0])
    return LocalityProfile(list(range(len(balls))), norms, bg, rate, rec_err, [len(b) for b in balls])


# ---------------------------------------------------------------------------
# projectors


def spectral_projector(vecs: np.ndarray) -> np.ndarray:
    return vecs @ vecs.conj().T


def projector_distance(p1: np.ndarray, p2: np.ndarray) -> float:
    return float(np.linalg.norm(p1 - p2, 2))


def subspace_distance(v1: np.ndarray, v2: np.ndarray) -> float:
    """||P1 - P2|| for orthonormal bases of equal dimension, via principal angles."""
    s = np.linalg.svd(v1.conj().T @ v2, compute_uv=False)
    s = np.clip(s, 0.0, 1.0)
    return float(np.sqrt(max(0.0, 1 - s.min() ** 2)))


def davis_kahan_bound(perturbation_norm: float, gap: float) -> float:
    """sin(theta) bound ||W|| / (gap - ||W||) for an isolated eigenspace."""
    if gap <= perturbation_norm:
        return math.inf
    return perturbation_norm / (gap - perturbation_norm)


# ---------------------------------------------------------------------------
# physical checks


@dataclass
class OrderParameterReport:
    sites: list[int]
    smeared_full: list[float]  # |<psi~|U~ Z U~^dag|psi~> - <psi|Z|psi>| with the tail rotation
    smeared_flow: list[float]  # same with the flow unitary only and psi~ = P~ U psi
    unsmeared: list[float]  # <psi~|Z_x|psi~>
    tail_angle: float  # ||A_inf|| proxy: arcsin ||U P U^dag - P~||

    @property
    def max_smeared_error(self) -> float:
        return max(self.smeared_full, default=0.0)


def order_parameter_check(code: StabilizerCode, u: np.ndarray, p_tilde: np.ndarray, sites: list[int],
                          ground_index: int = 0) -> OrderParameterReport:
    from .kam import direct_rotation
    if code.kind != "classical-Z":
        raise ValueError("order parameters need a classical code")
    n = code.n_qubits
    dim = 1 << n
    psi = np.zeros(dim)
    psi[ground_index] = 1.0
    # codespace projector of H0 (diagonal)
    p0 = diagonal_projector(code, {a: 1 for a in range(code.n_checks)})
    if abs(p0[ground_index, ground_index] - 1) > 0:
        raise ValueError("reference state is not in the codespace")
    p1 = u @ p0 @ u.conj().T
    w, angle = direct_rotation(p1, p_tilde)
    uf = w @ u
    psi_t = uf @ psi
    flow_state = p_tilde @ (u @ psi)
    flow_state /= np.linalg.norm(flow_state)
    b = np.arange(dim)
    full_err, flow_err, bare = [], [], []
    for x in sites:
        zd = (1 - 2 * ((b >> x) & 1)).astype(float)
        ref = float(zd[ground_index])
        zs = uf @ (zd[:, None] * uf.conj().T)
        full_err.append(abs(float(np.real(psi_t.conj() @ zs @ psi_t)) - ref))
        zf = u @ (zd[:, None] * u.conj().T)
        flow_err.append(abs(float(np.real(flow_state.conj() @ zf @ flow_state)) - ref))
        bare.append(float(np.real(psi_t.conj() @ (zd * psi_t))))
    return OrderParameterReport(list(sites), full_err, flow_err, bare, angle)


@dataclass
class ExcitationRow:
    distance: int
    probe: int  # check index
    value: float  # h(R)


def excitation_locality(code: StabilizerCode, u: np.ndarray, flip: PauliOperator, psi: np.ndarray,
                        graphs) -> list[ExcitationRow]:
    """h(R) = <psi~|D~ C_b D~|psi~> - <psi~|C_b|psi~> for every check b, grouped by distance.

    psi~ = U psi and D~ = U D U^dagger, so h(R) = <psi|D T D|psi> - <psi|T|psi>
    with T = U^dagger C_b U.  Distance is measured on the check graph from the
    checks that D flips.
    """
    n = code.n_qubits
    dm = realize(flip, n, dense=True)
    flipped = code.syndrome(*next(iter(flip.terms)))
    dist = graphs.check_dist
    rows = []
    dpsi = dm @ psi
    for bidx, c in enumerate(code.checks):
        cm = realize(PauliOperator(n, {(c.x, c.z): c.coefficient}), n, dense=True)
        t = u.conj().T @ cm @ u
        val = float(np.real(dpsi.conj() @ t @ dpsi - psi.conj() @ t @ psi))
        r = min(int(dist[a, bidx]) for a in gf2.bits(flipped)) if flipped else 0
        rows.append(ExcitationRow(r, bidx, val))
    return rows


def excitation_energy(h: np.ndarray, u: np.ndarray, flip: PauliOperator, psi: np.ndarray, b: float) -> float:
    n = flip.n
    dm = realize(flip, n, dense=True)
    st = u @ (dm @ psi)
    st /= np.linalg.norm(st)
    return float(np.real(st.conj() @ h @ st)) - b
