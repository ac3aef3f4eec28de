"""Binary-symplectic Pauli algebra, stabilizer codes and matrix realization.

Conventions
-----------
A Pauli is stored as bit masks (x, z) over qubits; qubit q is bit q.  The
canonical Hermitian string is P(x, z) = i^{|x&z|} X^x Z^z, so P(1, 1) = Y.
A `PauliString` carries an extra phase i^k.  With this choice X·Z = -iY.

Matrices act on the computational basis with qubit q equal to bit q of the
basis index (little endian), i.e. P = P_{n-1} ⊗ ... ⊗ P_0 under np.kron.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import gf2

DENSE_CAP = 14
SPARSE_CAP = 22
PRUNE_TOL = 1e-14

_PHASES = (1, 1j, -1, -1j)


class CapExceeded(RuntimeError):
    """Raised when a request would exceed the configured size caps."""


def product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent e with P(x1,z1) P(x2,z2) = i^e P(x1^x2, z1^z2)."""
    x, z = x1 ^ x2, z1 ^ z2
    e = (x1 & z1).bit_count() + (x2 & z2).bit_count() + 2 * (z1 & x2).bit_count() - (x & z).bit_count()
    return e % 4


def symplectic(x1: int, z1: int, x2: int, z2: int) -> int:
    return ((x1 & z2).bit_count() + (z1 & x2).bit_count()) & 1


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int
    z: int
    phase: int = 0  # power of i

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        """Label is read with qubit 0 first, e.g. 'XZI' -> X on qubit 0."""
        x = z = 0
        for q, ch in enumerate(label.upper()):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(len(label), x, z, phase % 4)

    @classmethod
    def single(cls, n: int, q: int, letter: str) -> "PauliString":
        lab = ["I"] * n
        lab[q] = letter
        return cls.from_label("".join(lab))

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return self.support.bit_count()

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    def label(self) -> str:
        out = []
        for q in range(self.n):
            b = ((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)
            out.append("IXZY"[b])
        return "".join(out)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_multiply(self, other)

    def __repr__(self) -> str:
        return ("", "i", "-", "-i")[self.phase] + self.label()


def _check_len(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")


def pauli_multiply(a: PauliString, b: PauliString) -> PauliString:
    _check_len(a, b)
    e = product_phase(a.x, a.z, b.x, b.z)
    return PauliString(a.n, a.x ^ b.x, a.z ^ b.z, (a.phase + b.phase + e) % 4)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_len(a, b)
    return symplectic(a.x, a.z, b.x, b.z) == 0


class PauliOperator:
    """Finite linear combination of canonical Pauli strings.

    `terms` maps (x, z) to the complex coefficient of P(x, z).  Treated as
    immutable once built; arithmetic returns new objects.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: dict | None = None, prune: bool = True):
        self.n = n
        t = dict(terms) if terms else {}
        self.terms = _pruned(t) if prune else t

    @classmethod
    def from_strings(cls, items, n: int | None = None) -> "PauliOperator":
        """Build from (PauliString, coefficient) pairs."""
        acc: dict = {}
        for p, c in items:
            n = p.n if n is None else n
            key = (p.x, p.z)
            acc[key] = acc.get(key, 0) + c * p.coefficient
        return cls(n or 0, acc)

    @classmethod
    def identity(cls, n: int, c: complex = 1.0) -> "PauliOperator":
        return cls(n, {(0, 0): complex(c)})

    def copy(self) -> "PauliOperator":
        return PauliOperator(self.n, self.terms, prune=False)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    def __add__(self, other: "PauliOperator") -> "PauliOperator":
        acc = dict(self.terms)
        for k, c in other.terms.items():
            acc[k] = acc.get(k, 0) + c
        return PauliOperator(self.n, acc)

    def __sub__(self, other: "PauliOperator") -> "PauliOperator":
        return self + other.scale(-1)

    def scale(self, s: complex) -> "PauliOperator":
        return PauliOperator(self.n, {k: s * c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, PauliOperator):
            return PauliOperator(self.n, multiply_terms(self.terms, other.terms))
        return self.scale(other)

    __rmul__ = scale

    def dagger(self) -> "PauliOperator":
        return PauliOperator(self.n, {k: np.conj(c) for k, c in self.terms.items()}, prune=False)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol * max(1.0, abs(c)) for c in self.terms.values())

    def commutator(self, other: "PauliOperator") -> "PauliOperator":
        return self * other - other * self

    def coefficient(self, x: int, z: int) -> complex:
        return self.terms.get((x, z), 0j)

    @property
    def support(self) -> int:
        s = 0
        for x, z in self.terms:
            s |= x | z
        return s

    def l1(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def to_matrix(self, dense: bool | None = None):
        return realize(self, self.n, dense=dense)

    def __repr__(self) -> str:
        items = sorted(self.terms.items())[:6]
        body = " + ".join(f"({c:.3g}){PauliString(self.n, x, z).label()}" for (x, z), c in items)
        more = "" if len(self.terms) <= 6 else f" + ... ({len(self.terms)} terms)"
        return f"PauliOperator[{self.n}]({body}{more})"


def _pruned(terms: dict, tol: float = PRUNE_TOL) -> dict:
    """Drop coefficients below tol relative to the largest one."""
    if not terms:
        return terms
    top = max(abs(c) for c in terms.values())
    if top == 0:
        return {}
    cut = tol * top
    return {k: complex(c) for k, c in terms.items() if abs(c) > cut}


def multiply_terms(a: dict, b: dict) -> dict:
    acc: dict = {}
    for (x1, z1), c1 in a.items():
        for (x2, z2), c2 in b.items():
            e = product_phase(x1, z1, x2, z2)
            key = (x1 ^ x2, z1 ^ z2)
            acc[key] = acc.get(key, 0) + c1 * c2 * _PHASES[e]
    return acc


# ---------------------------------------------------------------------------
# stabilizer codes


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    n_qubits: int
    checks: tuple[PauliString, ...]
    kind: str = "quantum-general"  # quantum-CSS | quantum-general | classical-Z
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for c in self.checks:
            if c.n != self.n_qubits:
                raise ValueError("check length does not match n_qubits")
            if c.phase % 2:
                raise ValueError("checks must be Hermitian (phase ±1)")
        for i, a in enumerate(self.checks):
            for b in self.checks[i + 1:]:
                if not commutes(a, b):
                    raise ValueError(f"checks do not commute: {a} {b}")

    @property
    def n_checks(self) -> int:
        return len(self.checks)

    @cached_property
    def vectors(self) -> tuple[int, ...]:
        """Symplectic vectors x | z << n, one per check."""
        n = self.n_qubits
        return tuple(c.x | (c.z << n) for c in self.checks)

    @cached_property
    def echelon(self) -> gf2.Echelon:
        return gf2.echelon(self.vectors)

    @cached_property
    def rank(self) -> int:
        return self.echelon.rank

    @property
    def k_logical(self) -> int:
        return self.n_qubits - self.rank

    @cached_property
    def check_supports(self) -> tuple[int, ...]:
        return tuple(c.support for c in self.checks)

    @cached_property
    def qubit_checks(self) -> tuple[int, ...]:
        """For each qubit, the mask of checks touching it."""
        out = [0] * self.n_qubits
        for a, s in enumerate(self.check_supports):
            for q in gf2.bits(s):
                out[q] |= 1 << a
        return tuple(out)

    def checks_touching(self, qubit_mask: int) -> int:
        m = 0
        for q in gf2.bits(qubit_mask):
            m |= self.qubit_checks[q]
        return m

    def support_of_checks(self, check_mask: int) -> int:
        s = 0
        for a in gf2.bits(check_mask):
            s |= self.check_supports[a]
        return s

    def syndrome(self, x: int, z: int) -> int:
        """Mask of checks anticommuting with P(x, z)."""
        m = 0
        for a, c in enumerate(self.checks):
            if symplectic(x, z, c.x, c.z):
                m |= 1 << a
        return m

    def check_product(self, mask: int) -> PauliString:
        p = PauliString(self.n_qubits, 0, 0, 0)
        for a in gf2.bits(mask):
            p = pauli_multiply(p, self.checks[a])
        return p

    @cached_property
    def is_diagonal(self) -> bool:
        return all(c.x == 0 for c in self.checks)

    def h0(self) -> PauliOperator:
        """H0 = sum_a (1 - C_a)/2."""
        acc: dict = {(0, 0): 0.5 * self.n_checks}
        for c in self.checks:
            key = (c.x, c.z)
            acc[key] = acc.get(key, 0) - 0.5 * c.coefficient
        return PauliOperator(self.n_qubits, acc)

    def __repr__(self) -> str:
        return f"StabilizerCode({self.name or self.kind}, n={self.n_qubits}, checks={self.n_checks})"


@dataclass(frozen=True)
class Membership:
    exponents: int  # mask over checks
    sign: complex  # p = sign * prod_{a in exponents} C_a


def group_membership(p: PauliString, code: StabilizerCode) -> Membership | None:
    """Exponent vector a with p = sign * prod C_a, or None if p is not in ±G."""
    if code.syndrome(p.x, p.z):
        return None
    res, tag = code.echelon.reduce(p.x | (p.z << code.n_qubits))
    if res:
        return None
    prod = code.check_product(tag)
    sign = p.coefficient / prod.coefficient
    return Membership(tag, sign)


def projector_product(code: StabilizerCode, signs: dict[int, int]) -> PauliOperator:
    """prod_a (1 + s_a C_a)/2 expanded into Pauli terms; s_a = +1 gives G, -1 gives E."""
    terms = {(0, 0): 1.0 + 0j}
    for a, s in sorted(signs.items()):
        c = code.checks[a]
        half = {(0, 0): 0.5, (c.x, c.z): 0.5 * s * c.coefficient}
        terms = multiply_terms(terms, half)
    return PauliOperator(code.n_qubits, terms)


def check_support_of(code: StabilizerCode, op: PauliOperator) -> int:
    return code.checks_touching(op.support)


def sandwich_expand(core: PauliOperator, word, code: StabilizerCode, check_support: bool = True) -> PauliOperator:
    """left(S) · core · right(S) in Pauli form.

    `word` needs integer masks `plus`, `minus`, `e`, `g` over check indices.
    """
    S = word.plus | word.minus | word.e | word.g
    if check_support and check_support_of(code, core) & ~S:
        raise ValueError("core has check support outside the word")
    left = {}
    right = {}
    for a in gf2.bits(S):
        bit = 1 << a
        left[a] = -1 if bit & (word.plus | word.e) else 1
        right[a] = -1 if bit & (word.minus | word.e) else 1
    return projector_product(code, left) * core * projector_product(code, right)


# ---------------------------------------------------------------------------
# matrices


def _parity(v: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(v) & 1).astype(np.int8)


def realize(op: PauliOperator, n: int | None = None, dense: bool | None = None,
            dense_cap: int = DENSE_CAP, sparse_cap: int = SPARSE_CAP):
    """Matrix of a PauliOperator.  Dense ndarray or CSR sparse matrix."""
    n = op.n if n is None else n
    if dense is None:
        dense = n <= 10
    if (dense and n > dense_cap) or n > sparse_cap:
        raise CapExceeded(f"{n} qubits exceeds {'dense' if dense else 'sparse'} cap")
    dim = 1 << n
    b = np.arange(dim, dtype=np.int64)
    by_x: dict[int, np.ndarray] = {}
    for (x, z), c in op.terms.items():
        val = c * _PHASES[(x & z).bit_count() % 4]
        col = val * (1 - 2 * _parity(b & z)) if z else np.full(dim, val, dtype=complex)
        if x in by_x:
            by_x[x] = by_x[x] + col
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
    vals = np.concatenate(list(by_x.values()))
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def operator_norm(m) -> float:
    """Largest singular value of a dense or sparse matrix."""
    if sp.issparse(m):
        if m.shape[0] <= 4096:
            return operator_norm(m.toarray())
        from scipy.sparse.linalg import svds
        return float(svds(m, k=1, return_singular_vectors=False, tol=1e-12)[0])
    if m.size == 0:
        return 0.0
    herm = np.allclose(m, m.conj().T, atol=1e-14, rtol=0)
    if herm:
        return float(np.max(np.abs(np.linalg.eigvalsh(m))))
    return float(np.linalg.norm(m, 2))


def realize_and_norm(op: PauliOperator, n_qubits: int | None = None, dense: bool | None = None):
    m = realize(op, n_qubits, dense=dense)
    return m, operator_norm(m)


def pauli_matrix(p: PauliString) -> np.ndarray:
    return p.coefficient * realize(PauliOperator(p.n, {(p.x, p.z): 1.0}), p.n, dense=True)


def kron_matrix(p: PauliString) -> np.ndarray:
    """Independent Kronecker-product realization, used as a test oracle."""
    mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
            "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
    out = np.array([[1.0 + 0j]])
    for ch in reversed(p.label()):
        out = np.kron(out, mats[ch])
    return p.coefficient * out


def codespace_projector(code: StabilizerCode, dense: bool = True):
    signs = {a: 1 for a in range(code.n_checks)}
    if code.is_diagonal:
        return diagonal_projector(code, signs, dense=dense)
    return realize(projector_product(code, signs), code.n_qubits, dense=dense)


def diagonal_projector(code: StabilizerCode, signs: dict[int, int], dense: bool = True):
    """prod (1 + s_a C_a)/2 for Z-type checks, built straight from syndromes."""
    n = code.n_qubits
    b = np.arange(1 << n, dtype=np.int64)
    keep = np.ones(1 << n, dtype=bool)
    for a, s in signs.items():
        c = code.checks[a]
        if c.x:
            raise ValueError("check is not diagonal")
        ev = (1 - 2 * _parity(b & c.z)) * int(c.coefficient.real)
        keep &= ev == s
    d = keep.astype(float)
    return np.diag(d) if dense else sp.diags(d, format="csr")
