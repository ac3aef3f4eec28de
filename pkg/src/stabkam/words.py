"""Words, class operators and operator collections.

A class operator in 𝒳_S is stored as core · R_S, where R_S is the product
of the right projectors of the word (G for + and g, E for - and e) and the
core is a Pauli sum whose terms anticommute exactly with the checks in
S_+ ∪ S_-.  Cores are kept in a canonical form: every Pauli is reduced
modulo the span of the checks in S, with the sign C_a R_S = ±R_S absorbed
into the coefficient.  Different residual strings give orthogonal operators,
so this form is unique and two cores can be added termwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import gf2
from .graphs import InteractionGraphs, build_graphs, minimal_connected_superset
from .pauli import (PauliOperator, StabilizerCode, _PHASES, _parity, multiply_terms, product_phase,
                    realize)

PLUS, MINUS, EXC, GND = "+", "-", "e", "g"


@dataclass(frozen=True, order=True)
class Word:
    plus: int = 0
    minus: int = 0
    e: int = 0
    g: int = 0

    def __post_init__(self):
        p, m, e, g = self.plus, self.minus, self.e, self.g
        if (p & m) | (p & e) | (p & g) | (m & e) | (m & g) | (e & g):
            raise ValueError("word components overlap")

    @property
    def S(self) -> int:
        return self.plus | self.minus | self.e | self.g

    @property
    def size(self) -> int:
        return self.S.bit_count()

    @property
    def right_minus(self) -> int:
        """Checks whose right projector is E."""
        return self.minus | self.e

    @property
    def left_minus(self) -> int:
        return self.plus | self.e

    @property
    def is_ghost(self) -> bool:
        return not (self.plus | self.minus | self.e) and bool(self.g)

    @property
    def charge(self) -> int:
        """|S_+| - |S_-|, the eigenvalue of ad_{H0} on the class."""
        return self.plus.bit_count() - self.minus.bit_count()

    def kind(self) -> str:
        """One of 'V+', 'V-', 'M', 'D', or '' for the empty word."""
        if not self.S:
            return ""
        if not (self.e | self.minus) and self.plus:
            return "V+"
        if not (self.e | self.plus) and self.minus:
            return "V-"
        if not (self.e | self.plus | self.minus):
            return "M"
        return "D"

    def dagger(self) -> "Word":
        return Word(self.minus, self.plus, self.e, self.g)

    def types(self) -> dict[int, str]:
        out = {}
        for t, m in ((PLUS, self.plus), (MINUS, self.minus), (EXC, self.e), (GND, self.g)):
            for a in gf2.bits(m):
                out[a] = t
        return out

    @classmethod
    def from_types(cls, types: dict[int, str]) -> "Word":
        acc = {PLUS: 0, MINUS: 0, EXC: 0, GND: 0}
        for a, t in types.items():
            acc[t] |= 1 << a
        return cls(acc[PLUS], acc[MINUS], acc[EXC], acc[GND])

    def as_lists(self) -> list[list[int]]:
        return [gf2.bits(self.plus), gf2.bits(self.minus), gf2.bits(self.e), gf2.bits(self.g)]

    def __mul__(self, other: "Word") -> "Word | None":
        return word_multiply(self, other)

    def __repr__(self) -> str:
        t = self.types()
        return "W(" + " ".join(f"{a}{t[a]}" for a in sorted(t)) + ")"


def word_multiply(sp: Word, s: Word) -> Word | None:
    """S'S by the per-check table; None when any check hits a zero entry.

    Rows are the type in S', columns the type in S:
        g·g=g  g·-=-  e·e=e  e·+=+  +·g=+  +·-=e  -·e=-  -·+=g,
    all other overlaps vanish.
    """
    p1, m1, e1, g1 = sp.plus, sp.minus, sp.e, sp.g
    p2, m2, e2, g2 = s.plus, s.minus, s.e, s.g
    if (g1 & (e2 | p2)) | (e1 & (g2 | m2)) | (p1 & (e2 | p2)) | (m1 & (g2 | m2)):
        return None
    U1, U2 = p1 | m1 | e1 | g1, p2 | m2 | e2 | g2
    o1, o2 = ~U2, ~U1
    return Word(
        (p1 & o1) | (p2 & o2) | (e1 & p2) | (p1 & g2),
        (m1 & o1) | (m2 & o2) | (g1 & m2) | (m1 & e2),
        (e1 & o1) | (e2 & o2) | (e1 & e2) | (p1 & m2),
        (g1 & o1) | (g2 & o2) | (g1 & g2) | (m1 & p2),
    )


# ---------------------------------------------------------------------------
# per-code context: canonical reduction, zero tests, local norms


class WordContext:
    """Caches tied to one code: echelon forms per check set, check products."""

    def __init__(self, code: StabilizerCode, graphs: InteractionGraphs | None = None):
        self.code = code
        self.graphs = graphs or build_graphs(code)
        self.n = code.n_qubits
        self._ech: dict[int, gf2.Echelon] = {}
        self._prod: dict[int, tuple[int, int, int]] = {}
        self._zero: dict[Word, bool] = {}
        self._diag = [c.x == 0 for c in code.checks]
        self._nmask = (1 << self.n) - 1

    def echelon(self, U: int) -> gf2.Echelon:
        e = self._ech.get(U)
        if e is None:
            e = gf2.Echelon()
            for a in gf2.bits(U):
                e.add(self.code.vectors[a], 1 << a)
            self._ech[U] = e
        return e

    def product(self, tag: int) -> tuple[int, int, int]:
        """(x, z, k) with prod_{a in tag} C_a = i^k P(x, z)."""
        r = self._prod.get(tag)
        if r is None:
            x = z = k = 0
            for a in gf2.bits(tag):
                c = self.code.checks[a]
                k += product_phase(x, z, c.x, c.z) + c.phase
                x ^= c.x
                z ^= c.z
            r = (x, z, k % 4)
            self._prod[tag] = r
        return r

    def is_zero_word(self, w: Word) -> bool:
        """True when R_S vanishes because of a check redundancy inside S."""
        z = self._zero.get(w)
        if z is None:
            ech = self.echelon(w.S)
            z = False
            rm = w.right_minus
            for rel in ech.relations:
                _, _, k = self.product(rel)
                sigma = -1 if (rel & rm).bit_count() & 1 else 1
                if _PHASES[k] != sigma:
                    z = True
                    break
            self._zero[w] = z
        return z

    def reduce(self, w: Word, terms: dict) -> dict:
        """Canonical core of `terms` · R_w."""
        ech = self.echelon(w.S)
        if not ech.rows:
            return {k: c for k, c in terms.items() if c != 0}
        n, nm = self.n, self._nmask
        rm = w.right_minus
        out: dict = {}
        for (x, z), c in terms.items():
            if c == 0:
                continue
            v = x | (z << n)
            res, tag = ech.reduce(v)
            if tag:
                rx, rz = res & nm, res >> n
                qx, qz, k = self.product(tag)
                e = product_phase(rx, rz, qx, qz)
                sigma = -1 if (tag & rm).bit_count() & 1 else 1
                # P(p) R = P(p̂) Q R / (i^k i^e) = sigma * i^{-(k+e)} P(p̂) R
                c = c * sigma * _PHASES[(-(k + e)) % 4]
                key = (rx, rz)
            else:
                key = (x, z)
            out[key] = out.get(key, 0) + c
        return out

    def right_signs(self, w: Word) -> dict[int, int]:
        return {a: (-1 if (w.right_minus >> a) & 1 else 1) for a in gf2.bits(w.S)}

    def left_signs(self, w: Word) -> dict[int, int]:
        return {a: (-1 if (w.left_minus >> a) & 1 else 1) for a in gf2.bits(w.S)}

    # -- local realization ---------------------------------------------------

    def local_matrix(self, w: Word, core: dict) -> np.ndarray:
        """core · R_w on the qubits it touches, restricted to the nonzero block."""
        qmask = self.code.support_of_checks(w.S)
        for x, z in core:
            qmask |= x | z
        qs = gf2.bits(qmask)
        q = len(qs)
        pos = {b: i for i, b in enumerate(qs)}

        def compress(v: int) -> int:
            out = 0
            for b in gf2.bits(v):
                out |= 1 << pos[b]
            return out

        sub_core = PauliOperator(q, {(compress(x), compress(z)): c for (x, z), c in core.items()}, prune=False)
        checks = gf2.bits(w.S)
        if all(self._diag[a] for a in checks):
            b = np.arange(1 << q, dtype=np.int64)
            keep_r = np.ones(1 << q, dtype=bool)
            keep_l = np.ones(1 << q, dtype=bool)
            for a in checks:
                c = self.code.checks[a]
                ev = (1 - 2 * _parity(b & compress(c.z)).astype(np.int64)) * int(c.coefficient.real)
                keep_r &= ev == (-1 if (w.right_minus >> a) & 1 else 1)
                keep_l &= ev == (-1 if (w.left_minus >> a) & 1 else 1)
            m = realize(sub_core, q, dense=True)
            return m[np.ix_(keep_l, keep_r)]
        from .pauli import PauliString, projector_product
        sub_checks = tuple(PauliString(q, compress(self.code.checks[a].x), compress(self.code.checks[a].z),
                                       self.code.checks[a].phase) for a in checks)
        sub = StabilizerCode.__new__(StabilizerCode)
        object.__setattr__(sub, "n_qubits", q)
        object.__setattr__(sub, "checks", sub_checks)
        signs = {i: (-1 if (w.right_minus >> a) & 1 else 1) for i, a in enumerate(checks)}
        r = realize(projector_product(sub, signs), q, dense=True)
        return realize(sub_core, q, dense=True) @ r

    def class_norm(self, w: Word, core: dict) -> float:
        if not core:
            return 0.0
        if len(core) == 1:
            return float(abs(next(iter(core.values()))))
        m = self.local_matrix(w, core)
        if m.size == 0:
            return 0.0
        return float(np.linalg.norm(m, 2))

    def word_pauli(self, w: Word, core: dict) -> PauliOperator:
        """core · R_w expanded into Pauli strings."""
        from .pauli import projector_product
        r = projector_product(self.code, self.right_signs(w))
        return PauliOperator(self.n, multiply_terms(core, r.terms))


# ---------------------------------------------------------------------------
# collections


class OperatorCollection:
    """Map Word -> canonical core (dict (x, z) -> coefficient)."""

    def __init__(self, ctx: WordContext, entries: dict[Word, dict] | None = None):
        self.ctx = ctx
        self.entries: dict[Word, dict] = {}
        self._norms: dict[Word, float] = {}
        if entries:
            for w, core in entries.items():
                if core:
                    self.entries[w] = core

    # -- construction -----------------------------------------------------------

    @classmethod
    def h0(cls, ctx: WordContext) -> "OperatorCollection":
        return cls(ctx, {Word(e=1 << a): {(0, 0): 1.0 + 0j} for a in range(ctx.code.n_checks)})

    def add_term(self, w: Word, core: dict, reduced: bool = True) -> None:
        if not reduced:
            core = self.ctx.reduce(w, core)
        tgt = self.entries.get(w)
        if tgt is None:
            self.entries[w] = dict(core)
        else:
            for k, c in core.items():
                tgt[k] = tgt.get(k, 0) + c
        self._norms.pop(w, None)

    def copy(self) -> "OperatorCollection":
        out = OperatorCollection(self.ctx)
        out.entries = {w: dict(c) for w, c in self.entries.items()}
        out._norms = dict(self._norms)
        return out

    def cleaned(self, tol: float = 1e-14, absolute: float = 0.0) -> "OperatorCollection":
        """Drop near-zero coefficients (relative to each core's largest) and empty words."""
        out = OperatorCollection(self.ctx)
        for w, core in self.entries.items():
            if not core:
                continue
            top = max(abs(c) for c in core.values())
            cut = max(tol * top, absolute)
            kept = {k: c for k, c in core.items() if abs(c) > cut}
            if kept:
                out.entries[w] = kept
                if len(kept) == len(core) and w in self._norms:
                    out._norms[w] = self._norms[w]
        return out

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.items())

    def words(self) -> list[Word]:
        return sorted(self.entries)

    def scale(self, s: complex) -> "OperatorCollection":
        out = OperatorCollection(self.ctx, {w: {k: s * c for k, c in core.items()} for w, core in self.entries.items()})
        out._norms = {w: abs(s) * v for w, v in self._norms.items()}
        return out

    def __add__(self, other: "OperatorCollection") -> "OperatorCollection":
        out = self.copy()
        for w, core in other.entries.items():
            out.add_term(w, core)
        return out.cleaned(0.0)

    def __sub__(self, other: "OperatorCollection") -> "OperatorCollection":
        return self + other.scale(-1)

    def filter(self, pred: Callable[[Word], bool]) -> "OperatorCollection":
        out = OperatorCollection(self.ctx, {w: c for w, c in self.entries.items() if pred(w)})
        out._norms = {w: v for w, v in self._norms.items() if w in out.entries}
        return out

    def dagger(self) -> "OperatorCollection":
        out = OperatorCollection(self.ctx)
        for w, core in self.entries.items():
            out.entries[w.dagger()] = {k: np.conj(c) for k, c in core.items()}
        return out

    def ad_h0(self) -> "OperatorCollection":
        """[H0, O] computed wordwise: multiplication by |S_+| - |S_-|."""
        out = OperatorCollection(self.ctx)
        for w, core in self.entries.items():
            q = w.charge
            if q:
                out.entries[w] = {k: q * c for k, c in core.items()}
        return out

    # -- norms --------------------------------------------------------------

    def norm_of(self, w: Word) -> float:
        v = self._norms.get(w)
        if v is None:
            v = self.ctx.class_norm(w, self.entries[w])
            self._norms[w] = v
        return v

    def word_norm(self, mu: float) -> float:
        """sup_a sum_{S ∋ a} ||O_S|| e^{mu |S|}."""
        per = np.zeros(self.ctx.code.n_checks)
        for w in self.entries:
            val = self.norm_of(w) * math.exp(mu * w.size)
            per[gf2.bits(w.S)] += val
        return float(per.max()) if len(per) else 0.0

    def total_norm(self) -> float:
        """sum_S ||O_S||, an upper bound on the operator norm."""
        return float(sum(self.norm_of(w) for w in self.entries))

    # -- realization --------------------------------------------------------------

    def to_pauli(self) -> PauliOperator:
        acc: dict = {}
        for w, core in self.entries.items():
            for k, c in self.ctx.word_pauli(w, core).terms.items():
                acc[k] = acc.get(k, 0) + c
        return PauliOperator(self.ctx.n, acc)

    def to_matrix(self, dense: bool = True):
        return collection_matrix(self, dense=dense)

    # -- serialization --------------------------------------------------------------

    def serialize(self) -> list:
        out = []
        for w in self.words():
            core = self.entries[w]
            out.append([w.as_lists(), [[x, z, float(np.real(c)), float(np.imag(c))]
                                       for (x, z), c in sorted(core.items())]])
        return out

    @classmethod
    def deserialize(cls, ctx: WordContext, data: list) -> "OperatorCollection":
        out = cls(ctx)
        for lists, terms in data:
            w = Word(*(gf2.mask_of(l) for l in lists))
            out.entries[w] = {(x, z): complex(re, im) for x, z, re, im in terms}
        return out


def collection_matrix(coll: OperatorCollection, dense: bool = True, n: int | None = None):
    """Full matrix of sum_S O_S."""
    ctx = coll.ctx
    code = ctx.code
    n = ctx.n if n is None else n
    if not code.is_diagonal:
        return realize(coll.to_pauli(), n, dense=dense)
    import scipy.sparse as sp
    dim = 1 << n
    b = np.arange(dim, dtype=np.int64)
    evs = []
    for c in code.checks:
        evs.append((1 - 2 * _parity(b & c.z).astype(np.int64)) * int(c.coefficient.real))
    by_x: dict[int, np.ndarray] = {}
    for w, core in coll.entries.items():
        keep = np.ones(dim, dtype=bool)
        for a in gf2.bits(w.S):
            keep &= evs[a] == (-1 if (w.right_minus >> a) & 1 else 1)
        for (x, z), c in core.items():
            val = c * _PHASES[(x & z).bit_count() % 4]
            col = np.where(keep, val, 0)
            if z:
                col = col * (1 - 2 * _parity(b & z).astype(np.int64))
            if x in by_x:
                by_x[x] += col
            else:
                by_x[x] = col.astype(complex)
    if dense:
        m = np.zeros((dim, dim), dtype=complex)
        for x, v in by_x.items():
            m[b ^ x, b] += v
        return m
    if not by_x:
        return sp.csr_matrix((dim, dim), dtype=complex)
    rows = np.concatenate([b ^ x for x in by_x])
    cols = np.tile(b, len(by_x))
    return sp.csr_matrix((np.concatenate(list(by_x.values())), (rows, cols)), shape=(dim, dim))


def word_matrix(ctx: WordContext, w: Word, core: dict, dense: bool = True):
    tmp = OperatorCollection(ctx, {w: core})
    return collection_matrix(tmp, dense=dense)


# ---------------------------------------------------------------------------
# products and commutators


def _by_check(coll: OperatorCollection) -> dict[int, list[Word]]:
    idx: dict[int, list[Word]] = {}
    for w in coll.entries:
        for a in gf2.bits(w.S):
            idx.setdefault(a, []).append(w)
    return idx


def _word_arrays(coll: OperatorCollection):
    words = list(coll.entries)
    arr = np.array([(w.plus, w.minus, w.e, w.g) for w in words], dtype=np.uint64).reshape(-1, 4)
    norms = np.array([coll.norm_of(w) for w in words])
    return words, arr, norms


def collection_product_terms(a: OperatorCollection, b: OperatorCollection, out: OperatorCollection,
                             sign: complex = 1.0, overlap_only: bool = True,
                             size_limit: int | None = None, overflow: list | None = None) -> None:
    """Accumulate sign * A_{S1} B_{S2} into out[S1 S2] for overlapping pairs.

    Products landing on words of size >= size_limit are not stored; their
    norm bound ||A_{S1}|| ||B_{S2}|| is appended to `overflow` instead.  The
    pair screen (overlap, table zeros, size) is vectorized when the check
    masks fit in 64 bits; oversized products that vanish only through a check
    redundancy are still charged there, which keeps the bound valid.
    """
    if not a.entries or not b.entries:
        return
    if out.ctx.code.n_checks > 63:
        _product_terms_loop(a, b, out, sign, overlap_only, size_limit, overflow)
        return
    ctx = out.ctx
    words2, arr, norms2 = _word_arrays(b)
    p2, m2, e2, g2 = arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]
    s2 = p2 | m2 | e2 | g2
    bad_p, bad_m = e2 | p2, g2 | m2  # partners that kill a +/g (resp. -/e) row entry
    zero = np.uint64(0)
    total_over = 0.0
    for w1, c1 in a.entries.items():
        u1 = np.uint64(w1.S)
        ok = (s2 & u1) != zero if overlap_only else np.ones(len(words2), dtype=bool)
        ok &= ((np.uint64(w1.g | w1.plus) & bad_p) | (np.uint64(w1.e | w1.minus) & bad_m)) == zero
        if not ok.any():
            continue
        if size_limit is not None:
            size = np.bitwise_count(s2 | u1)
            big = ok & (size >= size_limit)
            if big.any():
                total_over += a.norm_of(w1) * float(norms2[big].sum())
            ok &= ~big
        for j in np.flatnonzero(ok):
            w2 = words2[j]
            w = word_multiply(w1, w2)
            if w is None or ctx.is_zero_word(w):
                continue
            prod = multiply_terms(c1, b.entries[w2])
            if sign != 1:
                prod = {k: sign * v for k, v in prod.items()}
            out.add_term(w, ctx.reduce(w, prod))
    if overflow is not None and total_over:
        overflow.append((None, total_over))


def _product_terms_loop(a, b, out, sign, overlap_only, size_limit, overflow) -> None:
    ctx = out.ctx
    idx = _by_check(b)
    order = {w: i for i, w in enumerate(b.entries)}
    for w1, c1 in a.entries.items():
        if overlap_only:
            partners = set()
            for ch in gf2.bits(w1.S):
                partners.update(idx.get(ch, ()))
        else:
            partners = set(b.entries)
        for w2 in sorted(partners, key=order.__getitem__):
            w = word_multiply(w1, w2)
            if w is None or ctx.is_zero_word(w):
                continue
            if size_limit is not None and w.size >= size_limit:
                if overflow is not None:
                    overflow.append((w, a.norm_of(w1) * b.norm_of(w2)))
                continue
            prod = multiply_terms(c1, b.entries[w2])
            if sign != 1:
                prod = {k: sign * v for k, v in prod.items()}
            out.add_term(w, ctx.reduce(w, prod))


def collection_commutator(a: OperatorCollection, b: OperatorCollection, size_limit: int | None = None,
                          overflow: list | None = None) -> OperatorCollection:
    """([A, B])_S = sum_{S = S1 S2, S1 ∩ S2 ≠ ∅} (A_{S1} B_{S2} - B_{S1} A_{S2})."""
    out = OperatorCollection(a.ctx)
    collection_product_terms(a, b, out, 1.0, size_limit=size_limit, overflow=overflow)
    collection_product_terms(b, a, out, -1.0, size_limit=size_limit, overflow=overflow)
    return out.cleaned(1e-15)


# ---------------------------------------------------------------------------
# decomposition and norms


def connected_cover(ctx: WordContext, support: int, exact_cap: int = 4) -> tuple[int, bool]:
    return minimal_connected_superset(ctx.graphs, support, exact_cap)


def decompose_operator(op: PauliOperator, ctx: WordContext, exact_cap: int = 4) -> tuple[OperatorCollection, complex]:
    """Split op into class operators on S = ext(p) for every Pauli p.

    Returns (collection, identity coefficient).
    """
    code = ctx.code
    coll = OperatorCollection(ctx)
    scalar = 0j
    for (x, z), c in op.terms.items():
        if not (x | z):
            scalar += c
            continue
        cover, _ = connected_cover(ctx, x | z, exact_cap)
        S = code.checks_touching(cover)
        anti = code.syndrome(x, z)
        comm = S & ~anti
        anti_bits, comm_bits = gf2.bits(anti), gf2.bits(comm)
        for i in range(1 << len(anti_bits)):
            plus = gf2.mask_of(anti_bits[j] for j in range(len(anti_bits)) if (i >> j) & 1)
            for k in range(1 << len(comm_bits)):
                e = gf2.mask_of(comm_bits[j] for j in range(len(comm_bits)) if (k >> j) & 1)
                w = Word(plus, anti ^ plus, e, comm ^ e)
                if ctx.is_zero_word(w):
                    continue
                coll.add_term(w, ctx.reduce(w, {(x, z): c}))
    return coll.cleaned(0.0), scalar


def pauli_norm(op: PauliOperator, mu: float, graphs: InteractionGraphs, exact_cap: int = 4) -> float:
    """sup_x sum_{p ∋ x} |c_p| e^{mu |M(p)|}."""
    per = np.zeros(graphs.n_qubits)
    for (x, z), c in op.terms.items():
        sup = x | z
        if not sup:
            continue
        cover, _ = minimal_connected_superset(graphs, sup, exact_cap)
        per[gf2.bits(sup)] += abs(c) * math.exp(mu * cover.bit_count())
    return float(per.max()) if len(per) else 0.0


def prop31_rate(mu: float, w_q: int, w_c: int, kappa: float) -> float:
    return w_q * mu + w_q * math.log(2) + kappa + math.log(2 * w_c)


def prop32_rate(mu: float, w_q: int, w_c: int) -> float:
    return w_c * mu + math.log(4 * w_q)


def connected_words(coll: OperatorCollection) -> bool:
    return all(coll.ctx.graphs.is_connected_checks(w.S) for w in coll.entries)


def random_word_operator(ctx: WordContext, rng: np.random.Generator, max_terms: int = 3,
                         near: int | None = None, match: Word | None = None) -> tuple[Word, dict] | None:
    """A random nonzero class operator: random Pauli on a small region, random compatible word.

    `near` is a qubit mask the Pauli's region is centred in.  With `match`
    given, checks shared with that word take the one type that survives the
    product match * result (so the pair is nonzero by the table).
    """
    code = ctx.code
    n = ctx.n
    centres = gf2.bits(near) if near else list(range(n))
    q0 = int(rng.choice(centres))
    region = ctx.graphs.qubit_ball(1 << q0, 1)
    qs = gf2.bits(region)
    k = int(rng.integers(1, min(3, len(qs)) + 1))
    chosen = rng.choice(qs, size=k, replace=False)
    x = z = 0
    for q in chosen:
        L = int(rng.integers(1, 4))
        if L & 1:
            x |= 1 << int(q)
        if L & 2:
            z |= 1 << int(q)
    S = code.checks_touching(x | z)
    anti = code.syndrome(x, z)
    left = match.types() if match is not None else {}
    types = {}
    for a in gf2.bits(S):
        flip = (anti >> a) & 1
        if a in left:
            # g/+ on the left need G on the right, e/- need E
            needs_g = left[a] in (GND, PLUS)
            types[a] = (MINUS if needs_g else PLUS) if flip else (GND if needs_g else EXC)
        elif flip:
            types[a] = PLUS if rng.random() < 0.5 else MINUS
        else:
            types[a] = EXC if rng.random() < 0.5 else GND
    w = Word.from_types(types)
    if ctx.is_zero_word(w):
        return None
    core = {(x, z): complex(rng.normal(), rng.normal())}
    # extra terms: multiply by random checks outside the reduction, keeps the pattern
    for _ in range(int(rng.integers(0, max_terms))):
        g_bits = gf2.bits(S)
        extra = code.check_product(gf2.mask_of(rng.choice(g_bits, size=int(rng.integers(1, len(g_bits) + 1)), replace=False)))
        e = product_phase(x, z, extra.x, extra.z)
        key = (x ^ extra.x, z ^ extra.z)
        core[key] = core.get(key, 0) + complex(rng.normal(), rng.normal()) * _PHASES[(e + extra.phase) % 4]
    return w, ctx.reduce(w, core)


def random_word_pair(ctx: WordContext, rng: np.random.Generator, p_match: float = 0.6):
    """Two overlapping class operators; with probability p_match the product is table-allowed."""
    for _ in range(100):
        a = random_word_operator(ctx, rng)
        if a is None:
            continue
        near = ctx.code.support_of_checks(a[0].S)
        b = random_word_operator(ctx, rng, near=near, match=a[0] if rng.random() < p_match else None)
        if b is not None and a[0].S & b[0].S:
            return a, b
    raise RuntimeError("could not draw an overlapping pair")
