import numpy as np
import pytest

from localadj import forge
from localadj.adjunction import canonical_comparison, morita_residual, numerical_indices, phi_cb_bounds
from localadj.algebra import MultiMatrixAlgebra
from localadj.errors import InfiniteIndex, InvalidAction, NoLocalAdjoint
from localadj.expectation import (ProjectiveTwistedAction, block_expectation, expectation_to_candidate,
                                  fk_index, group_average, identity_expectation, induced_expectation,
                                  w_uniqueness_check)
from localadj.module import algebra_module, hilbert_space
from localadj.tensor import compact_picture


@pytest.fixture(scope="module")
def fold():
    return forge.forge_distinct_adjoints()


def level_norm(C, X):
    """Norm of an element of ``M_n(C)`` given as an ``n x n x dim C`` array."""
    n = X.shape[0]
    best = 0.0
    for k, s in enumerate(C.block_sizes):
        M = np.zeros((n * s, n * s), dtype=np.complex128)
        for i in range(n):
            for j in range(n):
                M[i * s:(i + 1) * s, j * s:(j + 1) * s] = C.blocks_of(X[i, j])[k]
        best = max(best, np.linalg.norm(M, 2))
    return best


def test_identity_expectation():
    for sizes in ([1], [2], [1, 2]):
        C = MultiMatrixAlgebra(sizes)
        fk = fk_index(identity_expectation(C))
        assert fk.kappa == pytest.approx(1.0, abs=1e-10)
        assert fk.lam_lower == pytest.approx(1.0, abs=1e-9) and fk.lam_upper == pytest.approx(1.0, abs=1e-10)


def test_fold_indices(fold):
    a, b = fk_index(fold.phi), fk_index(fold.psi)
    assert a.lam_exact and a.lam == pytest.approx(2.0, abs=1e-12) and a.kappa == pytest.approx(2.0, abs=1e-10)
    assert b.lam_exact and b.lam == pytest.approx(3.0, abs=1e-12) and b.kappa == pytest.approx(3.0, abs=1e-10)


@pytest.mark.parametrize("n", [2, 3])
def test_trace_expectation_gap(n):
    # T -> tr(T)/n on M_n: positivity needs lambda = n, complete positivity kappa = n^2
    K = MultiMatrixAlgebra([n])
    phi = block_expectation(K, [[0]], [1])
    fk = fk_index(phi, rng=0)
    assert fk.kappa == pytest.approx(n * n, abs=1e-9)
    assert fk.lam_lower == pytest.approx(n, abs=1e-6)
    assert not fk.lam_exact and fk.gap


def test_non_faithful_expectation():
    K = MultiMatrixAlgebra([1, 1])
    phi = block_expectation(K, [[0, 1]], [1], mus={0: 1.0, 1: 0.0})
    with pytest.raises(InfiniteIndex):
        fk_index(phi)
    F = algebra_module(K)
    P = compact_picture(F)
    phi = block_expectation(P.algebra, [[0, 1]], [1], mus={0: 1.0, 1: 0.0}, picture=P)
    with pytest.raises(NoLocalAdjoint):
        expectation_to_candidate(phi, F)


def test_rejects_non_expectations():
    K = MultiMatrixAlgebra([1, 1])
    phi = block_expectation(K, [[0, 1]], [1])
    with pytest.raises(ValueError):
        type(phi)(K, phi.sub, phi.embed, 2 * phi.map)


def test_identity_gives_morita_candidate():
    F = algebra_module(MultiMatrixAlgebra([2]))
    P = compact_picture(F)
    cand = expectation_to_candidate(identity_expectation(P.algebra), F)
    assert morita_residual(cand) <= 1e-10
    assert numerical_indices(cand) == pytest.approx((1.0, 1.0), abs=1e-9)


def test_cover_candidate_and_weighted_companion(fold):
    _, cand = forge.forge_cover(forge.uniform_cover(2))
    assert numerical_indices(cand)[0] == pytest.approx(2.0, abs=1e-12)
    F = fold.cand_phi.F.module
    cand_psi = expectation_to_candidate(fold.psi, F)
    np.testing.assert_allclose(cand_psi.pairing, fold.cand_psi.pairing, atol=1e-12)
    assert canonical_comparison(fold.cand_phi, fold.cand_psi).polar_gap >= 0.05


def test_induced_expectation_round_trip(fold):
    # the normalized expectation of a candidate from an expectation is the original one
    for phi in (fold.phi, fold.psi):
        cand = expectation_to_candidate(phi, fold.F.module)
        np.testing.assert_allclose(induced_expectation(cand, phi.picture), phi.map, atol=1e-12)


def test_trivial_group_average_is_identity():
    F = algebra_module(MultiMatrixAlgebra([1, 2]))
    act = ProjectiveTwistedAction(F, [[0]], [np.eye(F.dim)])
    avg = group_average(act)
    np.testing.assert_allclose(avg.expectation.map, np.eye(avg.picture.algebra.dim), atol=1e-12)


def test_swap_average_is_symmetrization():
    gi = forge.forge_z2_on_plane()
    phi = gi.average.expectation
    K = phi.ambient
    T = np.array([[1.0, 2.0], [3.0, 5.0]])
    S = np.array([[0, 1], [1, 0]])
    c = gi.average.picture.coords_of(T)
    got = gi.average.picture.to_operator(phi.map @ c)
    np.testing.assert_allclose(got, 0.5 * (T + S @ T @ S), atol=1e-12)
    assert fk_index(phi).kappa == pytest.approx(2.0, abs=1e-9)
    assert K.dim == 4 and phi.sub.dim == 2


def test_group_average_kappa_bounded():
    for gi in forge.group_instances():
        fk = fk_index(gi.average.expectation, rng=0)
        assert fk.kappa <= gi.action.order + 1e-9
        assert 1 - 1e-9 <= fk.lam_lower <= fk.lam_upper <= fk.kappa + 1e-12


def test_group_average_properties():
    for gi in forge.group_instances():
        avg = gi.average
        M = avg.expectation.map
        assert np.abs(M @ M - M).max() <= 1e-10
        for Mg in avg.conjugations:
            assert np.abs(Mg @ M - M).max() <= 1e-10
        assert avg.rank == avg.expectation.sub.dim
        assert avg.character_count == pytest.approx(avg.rank, abs=1e-9)


def test_invalid_action():
    F = hilbert_space(2)
    U = np.array([np.eye(2), [[0, 1], [1, 0]]], dtype=np.complex128)
    with pytest.raises(InvalidAction):
        ProjectiveTwistedAction(F, [[0, 1], [1, 0]], 2 * U)
    with pytest.raises(InvalidAction):
        ProjectiveTwistedAction(F, [[0, 1], [1, 1]], U)


def test_twisted_instance_is_projective():
    gi = forge.forge_s3_twisted_cover()
    assert gi.action.twisted()
    assert max(gi.action.residuals().values()) <= 1e-10


def test_w_uniqueness():
    for gi in forge.group_instances():
        ok, res = w_uniqueness_check(gi.action, gi.cand, gi.average)
        assert ok and res <= 1e-10
    gi = forge.forge_swap_cover()
    for w in ((2 / 3, 1 / 3), (0.51, 0.49)):
        c = forge.FiniteCover(2, 1, [0, 0], list(w))
        cand = type(gi.cand)(gi.cand.F, forge.cover_pairing(c))
        ok, res = w_uniqueness_check(gi.action, cand, gi.average)
        assert not ok and res == pytest.approx(w[0] - 0.5, abs=1e-12)


def test_expectations_are_complete_contractions():
    rng = np.random.default_rng(0)
    exps = [forge.forge_distinct_adjoints().psi, block_expectation(MultiMatrixAlgebra([2]), [[0]], [1])]
    exps += [gi.average.expectation for gi in forge.group_instances()[:3]]
    for phi in exps:
        C = phi.ambient
        for n in range(1, 5):
            for _ in range(5):
                X = rng.standard_normal((n, n, C.dim)) + 1j * rng.standard_normal((n, n, C.dim))
                Y = np.einsum("ab,ijb->ija", phi.map, X)
                assert level_norm(C, Y) <= level_norm(C, X) * (1 + 1e-12)


def test_group_candidates_cb_bounds():
    for gi in forge.group_instances():
        cb = phi_cb_bounds(gi.cand)
        assert cb.cb_phi == pytest.approx(1.0, abs=1e-8)
        assert cb.cb_phi_inv <= np.sqrt(gi.action.order) + 1e-8
