"""TQO-I / TQO-II certification by enumeration, and local-testability soundness."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import gf2
from .codes import ClassicalParityCheck
from .graphs import InteractionGraphs, build_graphs
from .pauli import StabilizerCode


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class LocalGroupResult:
    region: int  # check mask S
    generators: list[int]  # exponent masks spanning G(S)
    generators_s: list[int]  # exponent masks of the checks in S
    r_min: int
    witness: int | None = None  # exponent mask of an element of G(S) outside G_S

    @property
    def strictly_larger(self) -> bool:
        return self.witness is not None


def _element(code: StabilizerCode, mask: int) -> int:
    v = 0
    for a in gf2.bits(mask):
        v ^= code.vectors[a]
    return v


def local_group(code: StabilizerCode, S: int, graphs: InteractionGraphs | None = None,
                r_max: int | None = None) -> LocalGroupResult:
    """Group elements supported inside supp(S), and the smallest enclosing ball."""
    graphs = graphs or build_graphs(code)
    n = code.n_qubits
    inside = code.support_of_checks(S)
    out_q = ((1 << n) - 1) & ~inside
    out_sym = out_q | (out_q << n)
    # kernel of a -> (prod C_a) restricted to outside coordinates
    restricted = [v & out_sym for v in code.vectors]
    ech = gf2.Echelon()
    for a, r in enumerate(restricted):
        ech.add(r, 1 << a)
    gens = []
    basis = gf2.Echelon()
    for rel in ech.relations:
        v = _element(code, rel)
        if v and basis.add(v, rel):
            gens.append(rel)
    span_s = gf2.echelon([code.vectors[a] for a in gf2.bits(S)])
    witness = None
    for g in gens:
        if not span_s.contains(_element(code, g)):
            witness = g
            break
    if witness is None:
        return LocalGroupResult(S, gens, gf2.bits(S), 0, None)
    r_max = code.n_checks if r_max is None else r_max
    vecs = [_element(code, g) for g in gens]
    for r in range(1, r_max + 1):
        ball = graphs.check_ball(S, r)
        span = gf2.echelon([code.vectors[a] for a in gf2.bits(ball)])
        if all(span.contains(v) for v in vecs):
            return LocalGroupResult(S, gens, gf2.bits(S), r, witness)
    raise BudgetExceeded("no enclosing ball found within r_max")


def connected_sets(adj: list[int], max_size: int, count_cap: int = 10**6):
    """Each connected vertex set of size <= max_size exactly once (ESU order)."""
    n = len(adj)
    count = 0

    def extend(sub: int, nbr: int, ext: int, v: int):
        nonlocal count
        count += 1
        if count > count_cap:
            raise BudgetExceeded(f"more than {count_cap} connected sets")
        yield sub
        if sub.bit_count() == max_size:
            return
        while ext:
            w = ext & -ext
            ext ^= w
            wi = w.bit_length() - 1
            excl = adj[wi] & ~(sub | nbr)
            excl &= ~((1 << (v + 1)) - 1)
            yield from extend(sub | w, nbr | adj[wi], ext | excl, v)

    for v in range(n):
        higher = adj[v] & ~((1 << (v + 1)) - 1)
        yield from extend(1 << v, adj[v] | (1 << v), higher, v)


@dataclass
class Tqo2Result:
    size_cap: int
    ell: float
    d_tilde: int
    violations: list[tuple[int, int]]  # (S mask, r(S))
    profile: dict[int, int]  # |S| -> max r(S)
    n_sets: int
    complete: bool = True
    witnesses: list[tuple[int, int]] = field(default_factory=list)  # (S, element mask) with r(S) > 0

    def as_dict(self) -> dict:
        return {"cap": self.size_cap, "ell": self.ell, "d_tilde": self.d_tilde,
                "n_sets": self.n_sets, "complete": self.complete,
                "profile": {str(k): v for k, v in sorted(self.profile.items())},
                "violations": [{"S": gf2.bits(s), "r": r} for s, r in self.violations],
                "witnesses": [{"S": gf2.bits(s), "element": gf2.bits(e)} for s, e in self.witnesses[:20]]}


def check_tqo2(code: StabilizerCode, size_cap: int, graphs: InteractionGraphs | None = None,
               ell_max: float = 1.0, count_cap: int = 10**6) -> Tqo2Result:
    """Certify G(S) ⊆ G_{B_{ell |S|}(S)} for connected S with |S| < size_cap.

    A violation is a set whose smallest radius exceeds ell_max * |S|.  The
    certified d_tilde is size_cap when there are none, otherwise the size of
    the smallest violating set.
    """
    graphs = graphs or build_graphs(code)
    ell = 0.0
    viol: list[tuple[int, int]] = []
    wits: list[tuple[int, int]] = []
    profile: dict[int, int] = {}
    n_sets = 0
    complete = True
    try:
        for S in connected_sets(graphs.check_adj, size_cap - 1, count_cap):
            n_sets += 1
            res = local_group(code, S, graphs)
            k = S.bit_count()
            profile[k] = max(profile.get(k, 0), res.r_min)
            ell = max(ell, res.r_min / k)
            if res.witness is not None:
                wits.append((S, res.witness))
            if res.r_min > ell_max * k:
                viol.append((S, res.r_min))
    except BudgetExceeded:
        complete = False
    d_tilde = min((s.bit_count() for s, _ in viol), default=size_cap)
    return Tqo2Result(size_cap, ell, d_tilde, viol, profile, n_sets, complete, wits)


@dataclass
class Gamma:
    value: float
    witness: int  # mask over rows of H
    weight_cap: int
    cap_limited: bool


def soundness_gamma(h: ClassicalParityCheck, weight_cap: int, budget: int = 5 * 10**6) -> Gamma:
    """min over 0 < |x| <= cap of |H^T x| / |x|, x a set of rows."""
    best, wit = None, 0
    count = 0
    for w in range(1, min(weight_cap, h.m) + 1):
        for rows in itertools.combinations(range(h.m), w):
            count += 1
            if count > budget:
                raise BudgetExceeded("soundness enumeration budget exhausted")
            v = 0
            for i in rows:
                v ^= h.rows[i]
            ratio = v.bit_count() / w
            if best is None or ratio < best:
                best, wit = ratio, gf2.mask_of(rows)
    return Gamma(best if best is not None else 0.0, wit, weight_cap, weight_cap < h.m)


def below_distance_logicals(code: StabilizerCode, max_weight: int) -> list[tuple[int, int]]:
    """Paulis of weight <= max_weight that commute with every check but lie outside the group."""
    from .graphs import quantum_distance
    d = quantum_distance(code, cap=max_weight)
    return [d.witness] if d.exact else []
