"""Fast invariant suite behind `stabkam selftest`."""
from __future__ import annotations

import math
import traceback

import numpy as np


def _pauli_algebra():
    from .pauli import PauliString, pauli_multiply, pauli_matrix, commutes
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = 3
        a = PauliString(n, int(rng.integers(8)), int(rng.integers(8)), int(rng.integers(4)))
        b = PauliString(n, int(rng.integers(8)), int(rng.integers(8)), int(rng.integers(4)))
        assert np.allclose(pauli_matrix(a) @ pauli_matrix(b), pauli_matrix(pauli_multiply(a, b)))
        c = pauli_matrix(a) @ pauli_matrix(b) - pauli_matrix(b) @ pauli_matrix(a)
        assert commutes(a, b) == (np.abs(c).max() < 1e-12)


def _codes():
    from .codes import make_repetition, make_toric
    from .pauli import codespace_projector
    for code in (make_repetition(5, True), make_toric(2, 2)):
        p = codespace_projector(code)
        assert round(float(np.trace(p).real)) == 1 << code.k_logical


def _decomposition():
    from .codes import make_toric
    from .words import WordContext, decompose_operator, collection_matrix
    from .pauli import PauliOperator, realize
    code = make_toric(2, 2)
    ctx = WordContext(code)
    op = PauliOperator(8, {(0b11, 0): 0.3, (0, 0b100): -0.2, (0b1000, 0b1000): 0.1})
    coll, sc = decompose_operator(op, ctx)
    m = collection_matrix(coll) + sc * np.eye(256)
    assert np.abs(m - realize(op, 8, dense=True)).max() < 1e-12


def _h0_norm():
    from .codes import make_repetition
    from .words import WordContext, OperatorCollection
    ctx = WordContext(make_repetition(6, True))
    assert abs(OperatorCollection.h0(ctx).word_norm(1.0) - math.e) < 1e-12


def _generator():
    from .codes import make_repetition
    from .kam import build_generator, generator_residual, initial_collection, perturbation_field, split_collection
    from .words import WordContext
    code = make_repetition(6, True)
    ctx = WordContext(code)
    z0, _ = initial_collection(ctx, perturbation_field(6, 0.01))
    sp = split_collection(z0, 3)
    gen = build_generator(sp, k_max=6)
    chk = generator_residual(sp, gen.a)
    assert chk.residual_plus <= 1e-8 * chk.v_norm, chk


def _spectrum():
    from .codes import make_repetition
    from .spectral import exact_spectrum
    code = make_repetition(4, False)
    ev = exact_spectrum(code.h0(), 4).eigenvalues
    vals, counts = np.unique(np.round(ev, 10), return_counts=True)
    assert list(vals) == [0, 1, 2, 3] and list(counts) == [2, 6, 6, 2]


CHECKS = [("pauli algebra", _pauli_algebra), ("code projectors", _codes),
          ("decomposition", _decomposition), ("H0 word norm", _h0_norm),
          ("generator residual", _generator), ("H0 spectrum", _spectrum)]


def run_selftest(verbose: bool = True) -> list[str]:
    failures = []
    for name, fn in CHECKS:
        try:
            fn()
            ok = True
        except Exception:  # noqa: BLE001 - report every failure
            ok = False
            failures.append(name)
            if verbose:
                traceback.print_exc()
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return failures
