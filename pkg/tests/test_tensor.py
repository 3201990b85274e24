import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from localadj import forge
from localadj.algebra import MultiMatrixAlgebra
from localadj.errors import AlgebraMismatch, ModuleInvalid
from localadj.module import (ModuleMap, adjoint_of, algebra_module, hilbert_space, identity_map,
                             module_norm, random_module_map)
from localadj.tensor import (Correspondence, balance_residual, compact_picture, compose_correspondences,
                             dual_correspondence, haagerup_norm_via_compacts, haagerup_norm_via_tensor,
                             hilbert_correspondence, identity_correspondence, internal_tensor,
                             representation, tensor_map, tensor_maps)

from conftest import random_complex, random_module


def _gram_match(M, T, F):
    """``<M u, M v>_F`` against ``<u, v>`` in ``T`` for the quotient basis."""
    lhs = np.einsum("ki,lj,kla->ija", np.conj(M), M, F.inner, optimize=True)
    return float(np.abs(lhs - T.module.inner).max())


def test_correspondence_validation():
    A = MultiMatrixAlgebra([1, 1])
    X = hilbert_space(2)
    bad = np.zeros((2, 2, 2))
    bad[0] = np.diag([1.0, 0.0])  # the unit acts as a proper projection
    with pytest.raises(ModuleInvalid):
        Correspondence(A, X, bad)
    assert max(representation(MultiMatrixAlgebra([2, 1])).validation_residuals().values()) < 1e-14


@pytest.mark.parametrize("make", [lambda: forge.forge_morita(2, 3)[0], lambda: representation(MultiMatrixAlgebra([2, 1])),
                                  lambda: forge.cover_correspondence(forge.uniform_cover(3))])
def test_algebra_tensor_f_is_f(make):
    F = make()
    A = F.source
    T = internal_tensor(algebra_module(A), F)
    assert T.dim == F.dim
    # a (x) f -> a . f
    M = np.stack([F.left[a][:, k] for a in range(A.dim) for k in range(F.dim)], axis=1) @ T.Q
    assert _gram_match(M, T, F.module) <= 1e-10
    assert np.linalg.matrix_rank(M) == F.dim


@pytest.mark.parametrize("make", [lambda: forge.forge_morita(2, 3)[0], lambda: representation(MultiMatrixAlgebra([2, 1]))])
def test_f_tensor_b_is_f(make):
    F = make()
    B = F.target
    T = internal_tensor(F.module, identity_correspondence(B))
    M = np.stack([F.module.action[b][:, k] for k in range(F.dim) for b in range(B.dim)], axis=1) @ T.Q
    assert _gram_match(M, T, F.module) <= 1e-10
    assert T.dim == F.dim


def test_hilbert_space_dimensions():
    T = internal_tensor(hilbert_space(3), hilbert_correspondence(4))
    assert T.dim == 12
    G = compose_correspondences(hilbert_correspondence(2), hilbert_correspondence(5))
    assert G.dim == 10


def test_algebra_mismatch():
    with pytest.raises(AlgebraMismatch):
        internal_tensor(hilbert_space(2), identity_correspondence(MultiMatrixAlgebra([2])))
    with pytest.raises(AlgebraMismatch):
        compose_correspondences(hilbert_correspondence(2), identity_correspondence(MultiMatrixAlgebra([2])))


def test_quotient_is_balanced_and_definite(rng):
    A = MultiMatrixAlgebra([2, 1])
    X = random_module(rng, A)
    F = representation(A)
    T = internal_tensor(X, F)
    assert balance_residual(T) <= 1e-12 * 10
    w = np.linalg.eigvalsh(T.semi_inner @ F.target.trace_weights)
    assert w.min() >= -1e-10
    assert np.linalg.eigvalsh(T.module.gram).min() > 1e-8
    assert max(T.module.validation_residuals().values()) < 1e-9


def test_tensor_map_identity(rng):
    A = MultiMatrixAlgebra([2])
    X = random_module(rng, A)
    F = forge.forge_morita(2, 2)[0]
    np.testing.assert_allclose(tensor_map(identity_map(X), F).matrix, np.eye(internal_tensor(X, F).dim), atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_tensor_map_functorial_and_adjoint(seed):
    rng = np.random.default_rng(seed)
    A = MultiMatrixAlgebra([2, 1])
    X, Y, Z = random_module(rng, A, 1), random_module(rng, A), random_module(rng, A, 1)
    F = representation(A)
    tX, tY, tZ = internal_tensor(X, F), internal_tensor(Y, F), internal_tensor(Z, F)
    T, S = random_module_map(X, Y, rng), random_module_map(Y, Z, rng)
    lhs = tensor_map(S @ T, F, tX, tZ).matrix
    rhs = tensor_map(S, F, tY, tZ).matrix @ tensor_map(T, F, tX, tY).matrix
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1, np.abs(lhs).max())
    TF = tensor_map(T, F, tX, tY)
    lhs = adjoint_of(TF).matrix
    rhs = tensor_map(adjoint_of(T), F, tY, tX).matrix
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1, np.abs(lhs).max())


def test_compose_with_identity():
    F = forge.forge_morita(2, 3)[0]
    G = compose_correspondences(F, identity_correspondence(F.target))
    assert G.dim == F.dim
    T = internal_tensor(F, identity_correspondence(F.target))
    M = np.stack([F.module.action[b][:, k] for k in range(F.dim) for b in range(F.target.dim)], axis=1) @ T.Q
    assert _gram_match(M, T, F.module) <= 1e-10
    # left actions are intertwined
    for a in range(F.source.dim):
        assert np.abs(M @ G.left[a] - F.left[a] @ M).max() <= 1e-10


def test_associativity_up_to_unitary():
    F = forge.forge_morita(1, 2)[0]
    G = forge.forge_morita(2, 2)[0]
    H = representation(MultiMatrixAlgebra([2]))
    FG = internal_tensor(F, G)
    GH = internal_tensor(G, H)
    left = internal_tensor(FG.correspondence(), H)
    right = internal_tensor(F, GH.correspondence())
    # ((f g) h) -> f (g h) on algebraic coordinates
    U = right.Q.conj().T @ np.kron(np.eye(F.dim), GH.Q.conj().T) @ np.kron(FG.Q, np.eye(H.dim)) @ left.Q
    lhs = np.einsum("ki,lj,kla->ija", np.conj(U), U, right.module.inner)
    assert np.abs(lhs - left.module.inner).max() <= 1e-10
    assert U.shape[0] == U.shape[1] == left.dim


def test_haagerup_single_tensor_over_scalars(rng):
    X = hilbert_space(3)
    y, x = random_complex(rng, 3), random_complex(rng, 3)
    n = haagerup_norm_via_compacts(X, X, [y], [x])
    assert n == pytest.approx(np.linalg.norm(y) * np.linalg.norm(x), rel=1e-12)
    assert haagerup_norm_via_compacts(X, X, [], []) == 0.0


def test_haagerup_single_tensor_over_algebra(rng):
    A = MultiMatrixAlgebra([2, 1])
    X = algebra_module(A)
    y, x = A.random_element(rng).coords, A.random_element(rng).coords
    n = haagerup_norm_via_compacts(X, X, [y], [x])
    assert n == pytest.approx(A.norm(A.mul(y, A.star(x))), rel=1e-10)
    assert n <= module_norm(X, y) * module_norm(X, x) * (1 + 1e-12)


def test_haagerup_two_paths_agree(rng):
    worst = 0.0
    for t in range(100):
        A = MultiMatrixAlgebra([[1], [2], [1, 1], [2, 1]][t % 4])
        X = random_module(rng, A, copies=1 + t % 2)
        Y = random_module(rng, A, copies=1)
        k = 1 + t % 3
        ys = [random_complex(rng, Y.dim) for _ in range(k)]
        xs = [random_complex(rng, X.dim) for _ in range(k)]
        a = haagerup_norm_via_compacts(Y, X, ys, xs)
        b = haagerup_norm_via_tensor(Y, X, ys, xs)
        worst = max(worst, abs(a - b) / max(a, 1))
    assert worst <= 1e-8


def test_dual_correspondence_validates(rng):
    X = random_module(rng, MultiMatrixAlgebra([2, 1]))
    D = dual_correspondence(X)
    assert max(D.validation_residuals().values()) < 1e-8
    assert D.target == compact_picture(X).algebra


def test_compact_picture_round_trip(rng):
    X = random_module(rng, MultiMatrixAlgebra([2, 1]))
    P = compact_picture(X)
    # K(A^2) = M_2(A) = M_4 + M_2
    assert sorted(P.algebra.block_sizes) == [2, 4]
    T = random_module_map(X, X, rng).matrix
    np.testing.assert_allclose(P.to_operator(P.coords_of(T)), T, atol=1e-9)
    a, b = P.algebra.random_element(rng).coords, P.algebra.random_element(rng).coords
    np.testing.assert_allclose(P.to_operator(P.algebra.mul(a, b)), P.to_operator(a) @ P.to_operator(b), atol=1e-9)


def test_tensor_maps_on_pairs(rng):
    A = MultiMatrixAlgebra([1])
    X = hilbert_space(2)
    F = hilbert_correspondence(3)
    T = internal_tensor(X, F)
    K = random_complex(rng, 2, 2)
    S = random_complex(rng, 3, 3)
    np.testing.assert_allclose(tensor_maps(K, S, T, T), T.Q.conj().T @ np.kron(K, S) @ T.Q)
    assert isinstance(tensor_map(ModuleMap(X, X, K), F), ModuleMap)
    assert A.dim == 1
