import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from localadj.algebra import MultiMatrixAlgebra
from localadj.errors import InvalidLevel, ModuleInvalid, NotLinear
from localadj.module import (HilbertModule, ModuleMap, adjoint_of, adjoint_residual, algebra_module,
                             amplified_module, bar, cb_norm_module_map, compacts_basis, conj_os_norm,
                             hilbert_space, identity_map, map_norm, module_maps_basis, module_norm,
                             os_norm, random_module_map, rank_one, span_residual)
from localadj.linalg import amplified_norm, operator_norm

from conftest import column_module, random_complex, random_module

ALGEBRAS = [[1], [2], [1, 1], [2, 1]]


def test_validation_rejects_bad_inner():
    A = MultiMatrixAlgebra([1])
    with pytest.raises(ModuleInvalid):
        HilbertModule(A, np.eye(2)[None], -np.eye(2)[:, :, None])
    with pytest.raises(ModuleInvalid):
        HilbertModule(A, np.eye(2)[None], np.diag([1.0, 0.0])[:, :, None])


@pytest.mark.parametrize("blocks", ALGEBRAS)
def test_random_modules_validate(blocks, rng):
    X = random_module(rng, MultiMatrixAlgebra(blocks))
    assert max(X.validation_residuals().values()) < 1e-9


def test_module_norm_examples():
    A = MultiMatrixAlgebra([2])
    X = algebra_module(A)
    assert module_norm(X, np.zeros(4)) == 0.0
    assert module_norm(X, A.unit_coords) == pytest.approx(1.0)
    assert module_norm(hilbert_space(2), np.array([3.0, 4.0])) == pytest.approx(5.0)


def test_cauchy_schwarz(rng):
    X = random_module(rng, MultiMatrixAlgebra([2, 1]))
    for _ in range(200):
        x, y = random_complex(rng, X.dim), random_complex(rng, X.dim)
        lhs = X.algebra.norm(X.ip(x, y))
        assert lhs <= module_norm(X, x) * module_norm(X, y) * (1 + 1e-10)


def test_localization_isometry(rng):
    X = random_module(rng, MultiMatrixAlgebra([2, 1]))
    loc = X.localization
    for _ in range(1000):
        x = random_complex(rng, X.dim)
        assert operator_norm(loc.vector_map(x)) == pytest.approx(module_norm(X, x), rel=1e-10)


def test_bar_is_involution(rng):
    x = random_complex(rng, 5)
    np.testing.assert_array_equal(bar(bar(x)), x)
    np.testing.assert_allclose(bar(2j * x), -2j * bar(x))


# -- maps ---------------------------------------------------------------------------

def test_adjoint_identity(rng):
    X = random_module(rng, MultiMatrixAlgebra([2]))
    np.testing.assert_allclose(adjoint_of(identity_map(X)).matrix, np.eye(X.dim), atol=1e-10)


def test_adjoint_of_rank_one(rng):
    A = MultiMatrixAlgebra([2, 1])
    X, Y = random_module(rng, A), random_module(rng, A, copies=1)
    x, y = random_complex(rng, X.dim), random_complex(rng, Y.dim)
    T = rank_one(Y, y, X, x)
    np.testing.assert_allclose(adjoint_of(T).matrix, rank_one(X, x, Y, y).matrix, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(ALGEBRAS), st.integers(0, 2 ** 31))
def test_adjoint_fuzz(blocks, seed):
    rng = np.random.default_rng(seed)
    A = MultiMatrixAlgebra(blocks)
    X, Y = random_module(rng, A), random_module(rng, A, copies=1)
    T = random_module_map(X, Y, rng)
    assert adjoint_residual(T, adjoint_of(T)) <= 1e-10 * max(1.0, np.abs(T.matrix).max()) * 10


def test_adjoint_rejects_non_linear(rng):
    X = algebra_module(MultiMatrixAlgebra([2]))
    with pytest.raises(NotLinear):
        adjoint_of(ModuleMap(X, X, random_complex(rng, 4, 4)))


def test_rank_one_on_algebra_is_left_multiplication(rng):
    A = MultiMatrixAlgebra([2, 1])
    X = algebra_module(A)
    a, b = A.random_element(rng).coords, A.random_element(rng).coords
    T = rank_one(X, b, X, a)
    L = np.tensordot(A.mul(b, A.star(a)), A.left_mult, axes=([0], [0]))
    np.testing.assert_allclose(T.matrix, L, atol=1e-12)
    assert not np.any(rank_one(X, b, X, np.zeros(A.dim)).matrix)


def test_rank_one_balancing(rng):
    A = MultiMatrixAlgebra([2, 1])
    X, Y = random_module(rng, A), random_module(rng, A, copies=1)
    worst = 0.0
    for _ in range(50):
        y, x, a = random_complex(rng, Y.dim), random_complex(rng, X.dim), A.random_element(rng).coords
        lhs = rank_one(Y, Y.act(y, a), X, x).matrix
        rhs = rank_one(Y, y, X, X.act(x, A.star(a))).matrix
        worst = max(worst, np.abs(lhs - rhs).max() / max(np.abs(lhs).max(), 1))
    assert worst <= 1e-12


def test_compacts_span_scalars():
    X = algebra_module(MultiMatrixAlgebra([1]))
    B = compacts_basis(X, X)
    assert np.linalg.matrix_rank(np.stack([b.matrix.reshape(-1) for b in B])) == 1


@pytest.mark.parametrize("blocks", ALGEBRAS + [[2, 2], [3]])
def test_compacts_on_algebra_have_dim_of_algebra(blocks):
    A = MultiMatrixAlgebra(blocks)
    X = algebra_module(A)
    B = compacts_basis(X, X)
    assert np.linalg.matrix_rank(np.stack([b.matrix.reshape(-1) for b in B]), tol=1e-9) == A.dim
    assert module_maps_basis(X, X).shape[0] == A.dim


def test_every_module_map_is_compact(rng):
    A = MultiMatrixAlgebra([2, 1])
    X, Y = random_module(rng, A), random_module(rng, A, copies=1)
    basis = compacts_basis(X, Y)
    for _ in range(100):
        assert span_residual(random_module_map(X, Y, rng), basis) <= 1e-10


# -- amplification and operator structures -----------------------------------------------

def test_amplified_module_level_one(rng):
    X = random_module(rng, MultiMatrixAlgebra([1, 1]))
    assert amplified_module(X, 1) is X
    with pytest.raises(InvalidLevel):
        amplified_module(X, 0)


def test_amplified_module_validates_and_diagonal_norm(rng):
    A = MultiMatrixAlgebra([2])
    X = random_module(rng, A, copies=1)
    X2 = amplified_module(X, 2)
    assert max(X2.validation_residuals().values()) < 1e-9
    x = random_complex(rng, X.dim)
    S = np.zeros((2, 2, X.dim), dtype=complex)
    S[0, 0] = x
    assert module_norm(X2, S.reshape(-1)) == pytest.approx(module_norm(X, x), rel=1e-10)
    assert os_norm(X, S) == pytest.approx(module_norm(X, x), rel=1e-10)


def test_os_norm_on_algebra_is_c_star_norm(rng):
    A = MultiMatrixAlgebra([2, 1])
    X = algebra_module(A)
    from localadj.module import amplified_algebra, amplified_coords

    for n in (1, 2, 3):
        S = np.array([[A.random_element(rng).coords for _ in range(n)] for _ in range(n)])
        An = amplified_algebra(A, n)
        assert os_norm(X, S) == pytest.approx(An.norm(amplified_coords(A, n, S)), rel=1e-10)


def test_conj_os_norm_level_one(rng):
    X = random_module(rng, MultiMatrixAlgebra([2]))
    x = random_complex(rng, X.dim)
    assert conj_os_norm(X, np.conj(x)[None, None]) == pytest.approx(module_norm(X, x), rel=1e-12)


def test_conj_os_norm_is_transpose(rng):
    X = random_module(rng, MultiMatrixAlgebra([1, 2]))
    for n in range(1, 5):
        S = random_complex(rng, n, n, X.dim)
        assert conj_os_norm(X, S) == pytest.approx(os_norm(X, np.conj(S).transpose(1, 0, 2)), rel=1e-12)


def test_zero_matrix_norms():
    X = hilbert_space(3)
    assert os_norm(X, np.zeros((2, 2, 3))) == 0.0
    assert conj_os_norm(X, np.zeros((2, 2, 3))) == 0.0


@pytest.mark.parametrize("d", range(1, 9))
def test_row_column_ratio(d):
    # e_1, ..., e_d laid out in one row of M_d(H): Hilbert norm 1, conjugate norm sqrt(d)
    X = hilbert_space(d)
    S = np.zeros((d, d, d), dtype=complex)
    for j in range(d):
        S[0, j, j] = 1.0
    T = np.conj(S).transpose(1, 0, 2)  # the same vectors as a column of conjugates
    assert os_norm(X, S) == pytest.approx(1.0, abs=1e-12)
    assert conj_os_norm(X, np.conj(S)) == pytest.approx(np.sqrt(d), abs=1e-12)
    assert os_norm(X, np.conj(T)) == pytest.approx(np.sqrt(d), abs=1e-12)


def test_cb_norm_examples(rng):
    A = MultiMatrixAlgebra([2, 1])
    X = random_module(rng, A)
    assert cb_norm_module_map(identity_map(X)) == pytest.approx(1.0, rel=1e-10)
    T = random_module_map(X, X, rng)
    assert cb_norm_module_map(3j * T) == pytest.approx(3 * cb_norm_module_map(T), rel=1e-10)
    with pytest.raises(NotLinear):
        cb_norm_module_map(ModuleMap(X, X, random_complex(rng, X.dim, X.dim)))


def test_cb_norm_of_rank_one_against_search(rng):
    A = MultiMatrixAlgebra([2])
    X = algebra_module(A)
    a, b = A.random_element(rng).coords, A.random_element(rng).coords
    T = rank_one(X, b, X, a)
    cb = cb_norm_module_map(T)
    assert cb == pytest.approx(map_norm(T), rel=1e-10)
    assert cb <= module_norm(X, a) * module_norm(X, b) * (1 + 1e-10)
    # T is left multiplication by b a*, a map on M_2 viewed as 2 x 2 matrices
    for level in (1, 2, 3):
        search = amplified_norm(T.matrix, level, (2, 2), (2, 2), samples=60, rng=level)
        assert search == pytest.approx(cb, abs=1e-8)


def test_column_module_is_full(rng):
    X = column_module(3)
    assert max(X.validation_residuals().values()) < 1e-12
    assert len(compacts_basis(X, X)) == 9
