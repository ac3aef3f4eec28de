"""Interaction graphs, ball growth, code distances, d_* and connected covers."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import gf2
from .pauli import StabilizerCode, symplectic


def _bfs(adj: list[int], src_mask: int) -> list[int]:
    """Layers of a BFS from a set of sources; layer r is a bit mask."""
    seen = src_mask
    layers = [src_mask]
    frontier = src_mask
    while frontier:
        nxt = 0
        for v in gf2.bits(frontier):
            nxt |= adj[v]
        nxt &= ~seen
        if not nxt:
            break
        seen |= nxt
        layers.append(nxt)
        frontier = nxt
    return layers


@dataclass
class InteractionGraphs:
    code: StabilizerCode
    qubit_adj: list[int]
    check_adj: list[int]
    w_q: int
    w_c: int
    idle_qubits: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_adj)

    @property
    def n_checks(self) -> int:
        return len(self.check_adj)

    @cached_property
    def qubit_dist(self) -> np.ndarray:
        return _all_pairs(self.qubit_adj)

    @cached_property
    def check_dist(self) -> np.ndarray:
        return _all_pairs(self.check_adj)

    def check_ball(self, check_mask: int, r: int) -> int:
        """Checks within check-graph distance r of the set."""
        out = 0
        for layer in _bfs(self.check_adj, check_mask)[: r + 1]:
            out |= layer
        return out

    def qubit_ball(self, qubit_mask: int, r: int) -> int:
        out = 0
        for layer in _bfs(self.qubit_adj, qubit_mask)[: r + 1]:
            out |= layer
        return out

    def qubit_layers(self, qubit_mask: int) -> list[int]:
        return _bfs(self.qubit_adj, qubit_mask)

    def is_connected_checks(self, mask: int) -> bool:
        if not mask:
            return True
        start = mask & -mask
        seen = start
        frontier = start
        while frontier:
            nxt = 0
            for v in gf2.bits(frontier):
                nxt |= self.check_adj[v]
            nxt &= mask & ~seen
            seen |= nxt
            frontier = nxt
        return seen == mask

    def is_connected_qubits(self, mask: int) -> bool:
        if not mask:
            return True
        start = mask & -mask
        seen = frontier = start
        while frontier:
            nxt = 0
            for v in gf2.bits(frontier):
                nxt |= self.qubit_adj[v]
            nxt &= mask & ~seen
            seen |= nxt
            frontier = nxt
        return seen == mask


def _all_pairs(adj: list[int]) -> np.ndarray:
    n = len(adj)
    d = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        for r, layer in enumerate(_bfs(adj, 1 << s)):
            d[s, gf2.bits(layer)] = r
    return d


def build_graphs(code: StabilizerCode) -> InteractionGraphs:
    if code.n_checks == 0:
        raise ValueError("code has no checks")
    n = code.n_qubits
    qadj = [0] * n
    for s in code.check_supports:
        for q in gf2.bits(s):
            qadj[q] |= s
    for q in range(n):
        qadj[q] &= ~(1 << q)
    cadj = [0] * code.n_checks
    for a in range(code.n_checks):
        cadj[a] = code.checks_touching(code.check_supports[a]) & ~(1 << a)
    w_c = max(s.bit_count() for s in code.check_supports)
    w_q = max(m.bit_count() for m in code.qubit_checks)
    idle = gf2.mask_of(q for q in range(n) if code.qubit_checks[q] == 0)
    if idle:
        warnings.warn(f"idle qubits (in no check): {gf2.bits(idle)}")
    return InteractionGraphs(code, qadj, cadj, w_q, w_c, idle)


@dataclass
class GrowthProfile:
    qubit_ball_max: list[int]  # index r -> max_x |B_r(x)|
    check_ball_max: list[int]
    kappa_qubit: float
    kappa_check: float
    ldpc_bound: float

    @property
    def kappa(self) -> float:
        return max(self.kappa_qubit, self.kappa_check)

    def table(self) -> list[dict]:
        rows = []
        for r in range(max(len(self.qubit_ball_max), len(self.check_ball_max))):
            rows.append({"r": r,
                         "qubit_ball": self.qubit_ball_max[min(r, len(self.qubit_ball_max) - 1)],
                         "check_ball": self.check_ball_max[min(r, len(self.check_ball_max) - 1)]})
        return rows


def _growth(adj: list[int], r_max: int) -> tuple[list[int], float]:
    sizes = [1] * (r_max + 1)
    kappa = 0.0
    for s in range(len(adj)):
        acc = 0
        layers = _bfs(adj, 1 << s)
        for r in range(r_max + 1):
            if r < len(layers):
                acc += layers[r].bit_count()
            sizes[r] = max(sizes[r], acc)
            if r >= 1:
                kappa = max(kappa, math.log(acc) / r)
    return sizes, kappa


def ball_and_kappa(graphs: InteractionGraphs, r_max: int = 6) -> GrowthProfile:
    """kappa = max over centres and 1 <= r <= r_max of log|B_r| / r."""
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    qs, kq = _growth(graphs.qubit_adj, r_max)
    cs, kc = _growth(graphs.check_adj, r_max)
    return GrowthProfile(qs, cs, kq, kc, math.log(graphs.w_c * graphs.w_q + 1))


# ---------------------------------------------------------------------------
# distances


@dataclass(frozen=True)
class Distance:
    value: int
    exact: bool
    witness: tuple | None = None  # (x, z) of a minimal logical

    def __int__(self) -> int:
        return self.value

    def __str__(self) -> str:
        return str(self.value) if self.exact else f">{self.value}"


def _is_logical(code: StabilizerCode, x: int, z: int) -> bool:
    if code.syndrome(x, z):
        return False
    res, _ = code.echelon.reduce(x | (z << code.n_qubits))
    return res != 0


def quantum_distance(code: StabilizerCode, cap: int = 8, letters: str = "XYZ") -> Distance:
    """Smallest-weight Pauli commuting with every check and outside the group.

    Exhaustive over supports of increasing size; each support tries all
    3^w letter assignments.  Syndromes are XOR-ed from per-(qubit, letter)
    tables, so each candidate costs O(w).
    """
    n = code.n_qubits
    chk = list(zip((c.x for c in code.checks), (c.z for c in code.checks)))
    table = {}
    for q in range(n):
        b = 1 << q
        for L in letters:
            x = b if L in "XY" else 0
            z = b if L in "ZY" else 0
            syn = 0
            for a, (cx, cz) in enumerate(chk):
                if symplectic(x, z, cx, cz):
                    syn |= 1 << a
            table[q, L] = (x, z, syn)
    for w in range(1, min(cap, n) + 1):
        for sup in itertools.combinations(range(n), w):
            for lets in itertools.product(letters, repeat=w):
                x = z = syn = 0
                for q, L in zip(sup, lets):
                    tx, tz, ts = table[q, L]
                    x |= tx
                    z |= tz
                    syn ^= ts
                if syn == 0 and code.echelon.reduce(x | (z << n))[0]:
                    return Distance(w, True, (x, z))
    return Distance(min(cap, n), False, None)


def css_distance(code: StabilizerCode, cap: int = 8) -> Distance:
    """min over X-only and Z-only logicals (valid for CSS codes)."""
    dx = quantum_distance(code, cap, letters="X")
    dz = quantum_distance(code, cap, letters="Z")
    best = min((d for d in (dx, dz) if d.exact), key=lambda d: d.value, default=None)
    return best if best is not None else Distance(cap, False)


def symmetric_distance(code: StabilizerCode, max_k: int = 20) -> Distance:
    """Minimum weight over ker(H) \\ {0} by enumerating the kernel."""
    from .codes import classical_symmetry_group
    gens = [g.x for g in classical_symmetry_group(code).generators]
    if len(gens) > max_k:
        return symmetric_distance_search(code)
    best, wit = None, None
    for k in range(1, 1 << len(gens)):
        v = 0
        for i in gf2.bits(k):
            v ^= gens[i]
        if best is None or v.bit_count() < best:
            best, wit = v.bit_count(), v
    if best is None:
        return Distance(0, False)
    return Distance(best, True, (wit, 0))


def symmetric_distance_search(code: StabilizerCode, cap: int | None = None) -> Distance:
    """Same quantity by increasing-weight search over X strings."""
    n = code.n_qubits
    cap = n if cap is None else cap
    zs = [c.z for c in code.checks]
    for w in range(1, cap + 1):
        for sup in itertools.combinations(range(n), w):
            x = gf2.mask_of(sup)
            if all((x & z).bit_count() % 2 == 0 for z in zs):
                return Distance(w, True, (x, 0))
    return Distance(cap, False)


def code_distance(code: StabilizerCode, mode: str = "quantum", cap: int = 8) -> Distance:
    if mode == "quantum":
        return quantum_distance(code, cap)
    if mode == "symmetric":
        if code.kind != "classical-Z":
            raise ValueError("symmetric distance needs a classical code")
        return symmetric_distance(code)
    raise ValueError(f"unknown mode {mode}")


@dataclass(frozen=True)
class DStar:
    value: int
    lower_bound: bool
    d: int
    d_tilde: int
    w_c: int
    raw: float


def d_star(code: StabilizerCode, graphs: InteractionGraphs, d_tilde: int | None,
           mode: str = "quantum", distance: Distance | None = None) -> DStar:
    """floor(min(d / w_c, d_tilde)), at least 1."""
    if distance is None:
        distance = code_distance(code, "symmetric" if mode.startswith("classical") or mode == "symmetric" else "quantum")
    if d_tilde is None:
        raise ValueError("d_star needs a TQO-II certification range")
    raw = min(distance.value / graphs.w_c, d_tilde)
    return DStar(max(1, math.floor(raw)), not distance.exact, distance.value, d_tilde, graphs.w_c, raw)


# ---------------------------------------------------------------------------
# minimal connected supersets


def minimal_connected_superset(graphs: InteractionGraphs, qubits: int, exact_cap: int = 4) -> tuple[int, bool]:
    """A smallest connected qubit set containing `qubits`.

    Exact Dreyfus-Wagner search when at most `exact_cap` terminals, else
    the shortest-path heuristic (a 2-approximation).  Returns (mask, exact).
    """
    key = (qubits, exact_cap)
    cache = graphs._cache.setdefault("steiner", {})
    if key in cache:
        return cache[key]
    terms = gf2.bits(qubits)
    if len(terms) <= 1 or graphs.is_connected_qubits(qubits):
        out = (qubits, True)
    elif len(terms) <= exact_cap:
        out = (_dreyfus_wagner(graphs, terms), True)
    else:
        out = (_shortest_path_heuristic(graphs, terms), False)
    cache[key] = out
    return out


def _path(graphs: InteractionGraphs, a: int, b: int) -> int:
    """Deterministic shortest path a -> b (lowest-index predecessor)."""
    d = graphs.qubit_dist
    mask = 1 << b
    cur = b
    while cur != a:
        for u in gf2.bits(graphs.qubit_adj[cur]):
            if d[a, u] == d[a, cur] - 1:
                cur = u
                break
        mask |= 1 << cur
    return mask


def _dreyfus_wagner(graphs: InteractionGraphs, terms: list[int]) -> int:
    d = graphs.qubit_dist
    if (d[terms[0], terms] < 0).any():
        raise ValueError("terminals lie in different components")
    k = len(terms)
    n = graphs.n_qubits
    INF = 1 << 30
    full = (1 << k) - 1
    cost = {}
    choice = {}
    for i, t in enumerate(terms):
        cost[1 << i] = d[t].copy()
    for size in range(2, k + 1):
        for sub in range(1, full + 1):
            if sub.bit_count() != size:
                continue
            # merge at u: best split of sub at node u
            merge = np.full(n, INF, dtype=np.int64)
            split_at = np.zeros(n, dtype=np.int64)
            low = sub & -sub
            s = (sub - 1) & sub
            while s:
                if s & low:  # each unordered split once
                    val = cost[s] + cost[sub ^ s]
                    better = val < merge
                    merge = np.where(better, val, merge)
                    split_at = np.where(better, s, split_at)
                s = (s - 1) & sub
            # then connect v to the best merge point u
            tot = merge[None, :] + d
            best_u = np.argmin(tot, axis=1)
            cost[sub] = tot[np.arange(n), best_u]
            choice[sub] = (best_u, split_at)

    def build(sub: int, v: int) -> int:
        if sub.bit_count() == 1:
            return _path(graphs, terms[gf2.bits(sub)[0]], v)
        best_u, split_at = choice[sub]
        u = int(best_u[v])
        s = int(split_at[u])
        return _path(graphs, u, v) | build(s, u) | build(sub ^ s, u)

    return build(full, terms[0])


def _shortest_path_heuristic(graphs: InteractionGraphs, terms: list[int]) -> int:
    d = graphs.qubit_dist
    tree = 1 << terms[0]
    left = set(terms[1:])
    while left:
        best = None
        tb = gf2.bits(tree)
        for t in sorted(left):
            for u in tb:
                if best is None or d[u, t] < best[0]:
                    best = (d[u, t], u, t)
        _, u, t = best
        tree |= _path(graphs, u, t)
        left.discard(t)
        left -= set(q for q in left if (tree >> q) & 1)
    return tree
