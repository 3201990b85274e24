import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rebased(X, S):
    """The module ``X`` in the coordinates ``x = S x'``."""
    from localadj.module import HilbertModule

    Si = np.linalg.inv(S)
    R = np.einsum("ij,ajk,kl->ail", Si, X.action, S)
    G = np.einsum("ki,lj,kla->ija", np.conj(S), S, X.inner)
    return HilbertModule(X.algebra, R, G, tol=X.tol)


def random_module(rng, A, copies=2):
    """``A^copies`` in random non-orthonormal coordinates."""
    from localadj.module import algebra_module, direct_sum

    X = direct_sum(*[algebra_module(A)] * copies)
    S = np.eye(X.dim) + 0.3 * random_complex(rng, X.dim, X.dim)
    return rebased(X, S)


def column_module(n):
    """``C^n`` as a right ``M_n``-module of row vectors, ``<x, y> = x^H y``."""
    from localadj.algebra import MultiMatrixAlgebra
    from localadj.module import HilbertModule

    A = MultiMatrixAlgebra([n])
    R = np.zeros((A.dim, n, n), dtype=complex)
    G = np.zeros((n, n, A.dim), dtype=complex)
    for a, (_, p, q) in enumerate(A.units):
        R[a, q, p] = 1.0  # e_p . e_pq = e_q
    for i in range(n):
        for j in range(n):
            G[i, j, A.index(0, i, j)] = 1.0
    return HilbertModule(A, R, G)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
