"""Code constructions, classical symmetry groups and code files."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gf2
from .pauli import PauliString, StabilizerCode


@dataclass(frozen=True)
class ClassicalParityCheck:
    """m x n parity-check matrix; rows are bit masks over the n bits."""

    n: int
    rows: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.rows)

    @classmethod
    def from_array(cls, a) -> "ClassicalParityCheck":
        a = np.asarray(a, dtype=np.uint8) % 2
        return cls(a.shape[1], tuple(gf2.mask_of(np.flatnonzero(r)) for r in a))

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            out[i, gf2.bits(r)] = 1
        return out

    @property
    def columns(self) -> list[int]:
        return gf2.transpose(self.rows, self.n)

    @property
    def row_weights(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    @property
    def col_weights(self) -> list[int]:
        return [c.bit_count() for c in self.columns]

    def transpose(self) -> "ClassicalParityCheck":
        return ClassicalParityCheck(self.m, tuple(self.columns))

    @property
    def rank(self) -> int:
        return gf2.rank(self.rows)


@dataclass(frozen=True)
class SymmetryGroup:
    generators: tuple[PauliString, ...]


def repetition_matrix(n: int, periodic: bool = False) -> ClassicalParityCheck:
    if n < 2:
        raise ValueError("repetition code needs n >= 2")
    rows = [(1 << i) | (1 << (i + 1)) for i in range(n - 1)]
    if periodic and n > 2:
        rows.append(1 | (1 << (n - 1)))
    return ClassicalParityCheck(n, tuple(rows))


def from_parity_check(h: ClassicalParityCheck, name: str = "") -> StabilizerCode:
    """Classical code as Z-type checks, one per row."""
    checks = tuple(PauliString(h.n, 0, r) for r in h.rows)
    return StabilizerCode(h.n, checks, kind="classical-Z", name=name or "classical")


def make_repetition(n: int, periodic: bool = False) -> StabilizerCode:
    """Ising chain: checks Z_x Z_{x+1}."""
    code = from_parity_check(repetition_matrix(n, periodic), name=f"ising{'-ring' if periodic else '-open'}:{n}")
    code.meta["periodic"] = periodic
    return code


def make_toric(lx: int, ly: int) -> StabilizerCode:
    """Toric code on an lx x ly torus; stars first, then plaquettes.

    Horizontal edge (i, j)-(i, j+1) is qubit i*ly + j, vertical edge
    (i, j)-(i+1, j) is qubit lx*ly + i*ly + j.
    """
    if lx < 2 or ly < 2:
        raise ValueError("toric code needs lx, ly >= 2")
    n = 2 * lx * ly

    def h(i, j):
        return (i % lx) * ly + (j % ly)

    def v(i, j):
        return lx * ly + (i % lx) * ly + (j % ly)

    stars, plaqs = [], []
    for i in range(lx):
        for j in range(ly):
            stars.append(gf2.mask_of({h(i, j), h(i, j - 1), v(i, j), v(i - 1, j)}))
    for i in range(lx):
        for j in range(ly):
            plaqs.append(gf2.mask_of({h(i, j), h(i + 1, j), v(i, j), v(i, j + 1)}))
    checks = tuple(PauliString(n, s, 0) for s in stars) + tuple(PauliString(n, 0, p) for p in plaqs)
    code = StabilizerCode(n, checks, kind="quantum-CSS", name=f"toric:{lx}x{ly}")
    code.meta.update(lx=lx, ly=ly, n_stars=lx * ly)
    return code


def toric_plaquette(code: StabilizerCode, i: int, j: int) -> int:
    """Check index of the plaquette with lower-left corner (i, j)."""
    lx, ly = code.meta["lx"], code.meta["ly"]
    return lx * ly + (i % lx) * ly + (j % ly)


def make_css(hx: ClassicalParityCheck, hz: ClassicalParityCheck, name: str = "css") -> StabilizerCode:
    if hx.n != hz.n:
        raise ValueError("hx and hz act on different qubit counts")
    n = hx.n
    checks = tuple(PauliString(n, r, 0) for r in hx.rows if r) + tuple(PauliString(n, 0, r) for r in hz.rows if r)
    return StabilizerCode(n, checks, kind="quantum-CSS", name=name)


def make_hypergraph_product(a: ClassicalParityCheck, b: ClassicalParityCheck) -> StabilizerCode:
    """HX = [A ⊗ I | I ⊗ B^T],  HZ = [I ⊗ B | A^T ⊗ I]."""
    A, B = a.to_array(), b.to_array()
    if A.size == 0 or B.size == 0 or not A.any() or not B.any():
        raise ValueError("hypergraph product needs nonzero matrices")
    ma, na = A.shape
    mb, nb = B.shape
    hx = np.hstack([np.kron(A, np.eye(nb, dtype=np.uint8)), np.kron(np.eye(ma, dtype=np.uint8), B.T)]) % 2
    hz = np.hstack([np.kron(np.eye(na, dtype=np.uint8), B), np.kron(A.T, np.eye(mb, dtype=np.uint8))]) % 2
    code = make_css(ClassicalParityCheck.from_array(hx), ClassicalParityCheck.from_array(hz),
                    name=f"hgp:{ma}x{na}|{mb}x{nb}")
    return code


def make_random_classical_ldpc(n: int, m: int, w: int, seed: int, max_tries: int = 10_000) -> ClassicalParityCheck:
    """Configuration model with column weight w and row weight w*n/m.

    Stubs are paired by a numpy PCG64 permutation seeded with `seed`;
    pairings with a repeated (row, column) edge are rejected and redrawn.
    """
    if w * n % m:
        raise ValueError("w*n must be divisible by m")
    r = w * n // m
    if w > m or r > n:
        raise ValueError("infeasible degree sequence")
    rng = np.random.default_rng(seed)
    col_stubs = np.repeat(np.arange(n), w)
    row_stubs = np.repeat(np.arange(m), r)
    for _ in range(max_tries):
        perm = rng.permutation(len(col_stubs))
        pairs = set(zip(row_stubs.tolist(), col_stubs[perm].tolist()))
        if len(pairs) == len(col_stubs):
            rows = [0] * m
            for i, j in pairs:
                rows[i] |= 1 << j
            return ClassicalParityCheck(n, tuple(rows))
    raise ValueError("could not realize degree sequence without double edges")


def parity_check_of(code: StabilizerCode) -> ClassicalParityCheck:
    if code.kind != "classical-Z":
        raise ValueError("code is not classical")
    return ClassicalParityCheck(code.n_qubits, tuple(c.z for c in code.checks))


def classical_symmetry_group(code: StabilizerCode) -> SymmetryGroup:
    """X-type generators spanning ker(H)."""
    h = parity_check_of(code)
    ker = gf2.kernel(h.columns)
    return SymmetryGroup(tuple(PauliString(code.n_qubits, x, 0) for x in ker))


# ---------------------------------------------------------------------------
# files


def _bitstr(v: int, n: int) -> str:
    return "".join("1" if (v >> q) & 1 else "0" for q in range(n))


def _parse_bits(s: str) -> int:
    return sum(1 << q for q, ch in enumerate(s) if ch == "1")


def save_code(code: StabilizerCode, path) -> None:
    lines = [f"stabilizer-code kind={code.kind} n={code.n_qubits} checks={code.n_checks} name={code.name or '-'}"]
    for c in code.checks:
        sign = "-" if c.phase == 2 else "+"
        lines.append(f"{sign}{_bitstr(c.x, code.n_qubits)} {_bitstr(c.z, code.n_qubits)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_code(path) -> StabilizerCode:
    text = Path(path).read_text()
    first = text.split(None, 1)[0] if text.strip() else ""
    if first != "stabilizer-code":
        h = parse_alist(text)
        return from_parity_check(h, name=Path(path).stem)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    n, m = int(head["n"]), int(head["checks"])
    checks = []
    for ln in lines[1:1 + m]:
        xs, zs = ln.split()
        phase = 2 if xs[0] == "-" else 0
        checks.append(PauliString(n, _parse_bits(xs[1:]), _parse_bits(zs), phase))
    name = head.get("name", "")
    return StabilizerCode(n, tuple(checks), kind=head["kind"], name="" if name == "-" else name)


def format_alist(h: ClassicalParityCheck) -> str:
    cols = h.columns
    cw, rw = [c.bit_count() for c in cols], h.row_weights
    out = [f"{h.n} {h.m}", f"{max(cw, default=0)} {max(rw, default=0)}",
           " ".join(map(str, cw)), " ".join(map(str, rw))]
    out += [" ".join(str(i + 1) for i in gf2.bits(c)) for c in cols]
    out += [" ".join(str(j + 1) for j in gf2.bits(r)) for r in h.rows]
    return "\n".join(out) + "\n"


def parse_alist(text: str) -> ClassicalParityCheck:
    lines = text.splitlines()
    n, m = map(int, lines[0].split())
    row_lines = lines[4 + n: 4 + n + m]
    rows = []
    for ln in row_lines:
        rows.append(gf2.mask_of(int(t) - 1 for t in ln.split() if int(t) > 0))
    return ClassicalParityCheck(n, tuple(rows))


def save_alist(h: ClassicalParityCheck, path) -> None:
    Path(path).write_text(format_alist(h))


def load_alist(path) -> ClassicalParityCheck:
    return parse_alist(Path(path).read_text())


def code_from_spec(spec: str) -> StabilizerCode:
    """Parse 'ising:10', 'ising-open:6', 'toric:2x2', 'rep:5', 'hgp-rep:3', 'file:PATH'."""
    kind, _, arg = spec.partition(":")
    if kind in ("ising", "ising-ring"):
        return make_repetition(int(arg), periodic=True)
    if kind in ("ising-open", "rep"):
        return make_repetition(int(arg), periodic=False)
    if kind == "toric":
        lx, _, ly = arg.partition("x")
        return make_toric(int(lx), int(ly or lx))
    if kind == "hgp-rep":
        r = repetition_matrix(int(arg))
        return make_hypergraph_product(r, r)
    if kind == "file":
        return load_code(arg)
    raise ValueError(f"unknown code spec {spec!r}")
