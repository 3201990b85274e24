"""Deterministic generators for the example families."""
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .adjunction import InnerProductCandidate, os_comparison
from .algebra import MultiMatrixAlgebra
from .errors import InvalidWeights
from .expectation import (ConditionalExpectation, ProjectiveTwistedAction, block_expectation,
                          expectation_to_candidate, group_average)
from .module import HilbertModule, algebra_module, module_maps_basis
from .tensor import Correspondence, compact_picture, hilbert_correspondence


# -- covers ---------------------------------------------------------------------

@dataclass
class FiniteCover:
    """Surjection ``pi: {0..total-1} -> {0..base-1}`` with fibrewise weights."""

    total: int
    base: int
    map: list
    weights: list

    def __post_init__(self):
        if len(self.map) != self.total or len(self.weights) != self.total:
            raise InvalidWeights("map and weights must list one entry per point of the total space")
        if sorted(set(self.map)) != list(range(self.base)):
            raise InvalidWeights("cover map is not a surjection onto the base")
        for y in range(self.base):
            fib = [self.weights[x] for x in range(self.total) if self.map[x] == y]
            if any(not (0 < w <= 1) for w in fib):
                raise InvalidWeights(f"weights over base point {y} must lie in (0, 1]")
            if abs(sum(fib) - 1) > 1e-12:
                raise InvalidWeights(f"weights over base point {y} sum to {sum(fib)!r}, not 1")

    def fiber(self, y):
        return [x for x in range(self.total) if self.map[x] == y]


def uniform_cover(k, base=1):
    """``k`` sheets over each of ``base`` points with weights ``1/k``."""
    total = k * base
    return FiniteCover(total, base, [x // k for x in range(total)], [1.0 / k] * total)


def cover_correspondence(cover):
    """``F = C(X)`` as a correspondence ``C(Y) -> C(X)`` by pullback."""
    B = MultiMatrixAlgebra([1] * cover.total)
    A = MultiMatrixAlgebra([1] * cover.base)
    L = np.zeros((cover.base, cover.total, cover.total), dtype=np.complex128)
    for x, y in enumerate(cover.map):
        L[y, x, x] = 1.0
    return Correspondence(A, algebra_module(B), L)


def cover_pairing(cover):
    H = np.zeros((cover.total, cover.total, cover.base), dtype=np.complex128)
    for x, y in enumerate(cover.map):
        H[x, x, y] = cover.weights[x]
    return H


def _point_blocks(P, d):
    """``K``-block index holding the projection onto ``e_x``, for commutative pictures."""
    out = {}
    for k in range(P.algebra.nblocks):
        op = P.operators[P.algebra.index(k, 0, 0)]
        out[int(np.argmax(np.abs(np.diagonal(op))))] = k
    return [out[x] for x in range(d)]


def cover_expectation(cover):
    """The weighted fibre average on ``K_B(F) = C(X)``, onto the pullback of ``C(Y)``."""
    F = cover_correspondence(cover)
    P = compact_picture(F.module)
    blk = _point_blocks(P, cover.total)
    groups = [[blk[x] for x in cover.fiber(y)] for y in range(cover.base)]
    mus = {blk[x]: cover.weights[x] for x in range(cover.total)}
    return block_expectation(P.algebra, groups, [1] * cover.base, mus=mus, picture=P), F


def forge_cover(cover):
    """Correspondence and weighted candidate; the candidate is built from the
    fibre-average expectation and checked against the weight formula."""
    phi, F = cover_expectation(cover)
    cand = expectation_to_candidate(phi, F.module)
    H = cover_pairing(cover)
    if np.abs(cand.pairing - H).max() > 1e-12:
        raise AssertionError("expectation candidate disagrees with the weight formula")
    return cand.F, cand


# -- Morita -----------------------------------------------------------------------

def forge_morita(n, m):
    """``F = M_{n x m}`` from ``M_n`` to ``M_m`` with ``<x, y> = x* y`` and ``<x*, y*> = x y*``."""
    A, B = MultiMatrixAlgebra([n]), MultiMatrixAlgebra([m])
    d = n * m
    basis = [np.eye(d)[i].reshape(n, m) for i in range(d)]

    def unit(k, p, q):
        u = np.zeros((k, k))
        u[p, q] = 1
        return u

    R = np.zeros((B.dim, d, d), dtype=np.complex128)
    L = np.zeros((A.dim, d, d), dtype=np.complex128)
    G = np.zeros((d, d, B.dim), dtype=np.complex128)
    H = np.zeros((d, d, A.dim), dtype=np.complex128)
    for a, (_, p, q) in enumerate(B.units):
        for j in range(d):
            R[a, :, j] = (basis[j] @ unit(m, p, q)).reshape(-1)
    for a, (_, p, q) in enumerate(A.units):
        for j in range(d):
            L[a, :, j] = (unit(n, p, q) @ basis[j]).reshape(-1)
    for i in range(d):
        for j in range(d):
            G[i, j] = (basis[i].T @ basis[j]).reshape(-1)
            H[i, j] = (basis[i] @ basis[j].T).reshape(-1)
    F = Correspondence(A, HilbertModule(B, R, G), L)
    return F, InnerProductCandidate(F, H)


# -- the two-point fold ----------------------------------------------------------------

@dataclass
class DistinctAdjoints:
    F: Correspondence
    cand_phi: InnerProductCandidate
    cand_psi: InnerProductCandidate
    phi: ConditionalExpectation
    psi: ConditionalExpectation


def forge_distinct_adjoints():
    """``C + C`` folded onto ``C`` with weights ``(1/2, 1/2)`` and ``(2/3, 1/3)``."""
    c1 = FiniteCover(2, 1, [0, 0], [0.5, 0.5])
    c2 = FiniteCover(2, 1, [0, 0], [2 / 3, 1 / 3])
    phi, F = cover_expectation(c1)
    psi, _ = cover_expectation(c2)
    cand_phi = expectation_to_candidate(phi, F.module)
    cand_psi = InnerProductCandidate(cand_phi.F, cover_pairing(c2))
    return DistinctAdjoints(cand_phi.F, cand_phi, cand_psi, phi, psi)


# -- direct sums ------------------------------------------------------------------

@dataclass
class SumFamily:
    F: Correspondence
    cand: InnerProductCandidate
    index_map: list
    max_preimage: int
    ratios: list
    slope: float
    monotone: bool
    diagnostics: dict = field(default_factory=dict)


def sum_correspondence(m):
    """``F = C^1 + C^2 + ... + C^m`` over ``A = B = C^m``, summand ``i`` living over point ``i``."""
    A = B = MultiMatrixAlgebra([1] * m)
    d = m * (m + 1) // 2
    R = np.zeros((m, d, d), dtype=np.complex128)
    G = np.zeros((d, d, m), dtype=np.complex128)
    o = 0
    for i in range(m):
        for s in range(i + 1):
            R[i, o + s, o + s] = 1.0
            G[o + s, o + s, i] = 1.0
        o += i + 1
    F = Correspondence(A, HilbertModule(B, R, G), R.copy())
    return F, InnerProductCandidate(F, G.copy())


def forge_sum_family(m, kind="row-column blowup"):
    """Per-summand ratios of the conjugate and Hilbert-module operator structures
    on ``C^i`` at level ``i``, with the log-log slope over ``i = 1..m``."""
    if kind != "row-column blowup":
        raise ValueError(f"unknown family {kind!r}")
    if m < 1:
        raise ValueError("truncation length must be at least 1")
    ratios = []
    for i in range(1, m + 1):
        Fi = hilbert_correspondence(i)
        ci = InnerProductCandidate(Fi, np.eye(i)[:, :, None])
        up, _ = os_comparison(ci, levels=i, samples=0)
        ratios.append(up[-1])
    if m >= 2:
        slope = float(np.polyfit(np.log(np.arange(1, m + 1)), np.log(ratios), 1)[0])
    else:
        slope = float("nan")
    F, cand = sum_correspondence(m)
    mono = all(b >= a - 1e-12 for a, b in zip(ratios, ratios[1:]))
    return SumFamily(F, cand, list(range(m)), 1, ratios, slope, mono,
                     {"sup_ratio": max(ratios), "expected": [float(np.sqrt(i)) for i in range(1, m + 1)]})


# -- ideals ---------------------------------------------------------------------------

def forge_ideal_pair(blocks, ideal_subset):
    """``F = I`` for the ideal ``I`` of ``A = M_{n_1} + ...`` spanned by ``ideal_subset``,
    as a correspondence ``A -> I`` with ``<x*, y*> = x y*``."""
    A = MultiMatrixAlgebra(blocks)
    sub = sorted(set(int(k) for k in ideal_subset))
    if not sub:
        raise ValueError("ideal subset must be nonempty")
    B = MultiMatrixAlgebra([A.block_sizes[k] for k in sub])
    Bm = algebra_module(B)
    # coordinates of B inside A
    emb = np.zeros((A.dim, B.dim))
    for g, k in enumerate(sub):
        n = A.block_sizes[k]
        for p in range(n):
            for q in range(n):
                emb[A.index(k, p, q), B.index(g, p, q)] = 1.0
    L = np.array([np.tensordot(emb.T @ e, B.left_mult, axes=([0], [0])) for e in np.eye(A.dim)])
    F = Correspondence(A, Bm, L.astype(np.complex128))
    d = B.dim
    H = np.zeros((d, d, A.dim), dtype=np.complex128)
    eye = np.eye(d)
    for i in range(d):
        for j in range(d):
            H[i, j] = emb @ B.mul(eye[i], B.star(eye[j]))
    return F, InnerProductCandidate(F, H)


def forge_partial_action():
    """``C + C`` acting on ``C`` through its first summand."""
    return forge_ideal_pair([1, 1], [0])


# -- groups ----------------------------------------------------------------------------

def cyclic_table(n):
    return np.add.outer(np.arange(n), np.arange(n)) % n


def symmetric_group(k=3):
    """Elements of ``S_k`` as permutation tuples (identity first) and the multiplication table."""
    elems = list(permutations(range(k)))
    pos = {p: i for i, p in enumerate(elems)}
    table = np.array([[pos[tuple(a[b[x]] for x in range(k))] for b in elems] for a in elems])
    return elems, table


@dataclass
class GroupInstance:
    name: str
    action: ProjectiveTwistedAction
    average: object
    F: Correspondence
    cand: InnerProductCandidate


def _group_instance(name, action, seed=0):
    avg = group_average(action, seed=seed)
    cand = expectation_to_candidate(avg.expectation, action.module)
    return GroupInstance(name, action, avg, cand.F, cand)


def regular_action(table, phases=None):
    """``W`` permuting the points of ``W`` by left translation on ``F = B = C(W)``.

    ``phases[g]`` (unit scalars per point) twist the carriers by ``U_g . v_g``;
    the resulting multiplier is ``u(g, h) = v_gh* g(v_h) v_g``.
    """
    n = table.shape[0]
    B = MultiMatrixAlgebra([1] * n)
    F = algebra_module(B)
    U = np.zeros((n, n, n), dtype=np.complex128)
    base = np.zeros((n, n, n), dtype=np.complex128)
    for g in range(n):
        for x in range(n):
            U[g, table[g, x], x] = 1.0
            base[g, table[g, x], x] = 1.0
    twist = None
    if phases is not None:
        v = np.asarray(phases, dtype=np.complex128)
        U = np.array([F.right(v[g]) @ U[g] for g in range(n)])
        twist = np.zeros((n, n, n), dtype=np.complex128)
        for g in range(n):
            for h in range(n):
                twist[g, h] = np.conj(v[table[g, h]]) * (base[g] @ v[h]) * v[g]
    return ProjectiveTwistedAction(F, table, U, base, twist)


def forge_swap_cover():
    return _group_instance("Z2-swap-cover", regular_action(cyclic_table(2)))


def forge_cyclic_cover(n=3):
    return _group_instance(f"Z{n}-regular-cover", regular_action(cyclic_table(n)))


def forge_s3_twisted_cover(seed=7):
    """``S_3`` on ``C(S_3)`` with carriers twisted by fixed unit phases."""
    _, table = symmetric_group(3)
    rng = np.random.default_rng(seed)
    phases = np.exp(2j * np.pi * rng.random((6, 6)))
    phases[0] = 1.0
    return _group_instance("S3-twisted-regular-cover", regular_action(table, phases))


def forge_s3_irrep():
    """``S_3`` on ``C(3 points, C^2)`` through the permutation of points and the 2-dimensional irrep."""
    elems, table = symmetric_group(3)
    B = MultiMatrixAlgebra([1, 1, 1])
    d = 6
    R = np.zeros((3, d, d), dtype=np.complex128)
    G = np.zeros((d, d, 3), dtype=np.complex128)
    for x in range(3):
        for s in range(2):
            R[x, 2 * x + s, 2 * x + s] = 1.0
            G[2 * x + s, 2 * x + s, x] = 1.0
    F = HilbertModule(B, R, G)
    # orthonormal basis of the sum-zero plane
    V = np.array([[1, -1, 0], [1, 1, -2]], dtype=float).T
    V /= np.linalg.norm(V, axis=0)
    U, base = [], []
    for p in elems:
        Pm = np.zeros((3, 3))
        for x in range(3):
            Pm[p[x], x] = 1.0
        rho = V.T @ Pm @ V
        u = np.zeros((d, d), dtype=np.complex128)
        for x in range(3):
            u[2 * p[x]:2 * p[x] + 2, 2 * x:2 * x + 2] = rho
        U.append(u)
        base.append(Pm.astype(np.complex128))
    return _group_instance("S3-irrep-bundle", ProjectiveTwistedAction(F, table, np.array(U), np.array(base)))


def forge_z2_on_plane():
    """``Z/2`` swapping the two coordinates of ``C^2`` over ``C``."""
    from .module import hilbert_space

    F = hilbert_space(2)
    U = np.array([np.eye(2), [[0, 1], [1, 0]]], dtype=np.complex128)
    return _group_instance("Z2-swap-plane", ProjectiveTwistedAction(F, cyclic_table(2), U))


def group_instances():
    return [forge_swap_cover(), forge_cyclic_cover(3), forge_s3_twisted_cover(), forge_s3_irrep(),
            forge_z2_on_plane()]


# -- random instances -----------------------------------------------------------------

_RANDOM_ALGEBRAS = [[1], [2], [1, 1], [1, 2], [1, 1, 1], [2, 1], [3]]


def _random_density(m, rng):
    x = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    w = x @ x.conj().T + 0.2 * np.eye(m)
    return w / np.trace(w).real


def random_candidate(rng, max_dim=8):
    """A random expectation-derived candidate, twisted by a positive bimodule automorphism of ``F*``."""
    from .module import direct_sum

    while True:
        B = MultiMatrixAlgebra(_RANDOM_ALGEBRAS[int(rng.integers(len(_RANDOM_ALGEBRAS)))])
        X = algebra_module(B)
        F = direct_sum(X, X) if (2 * B.dim <= max_dim and rng.random() < 0.4) else X
        if F.dim <= max_dim:
            break
    P = compact_picture(F, seed=int(rng.integers(1 << 30)))
    K = P.algebra
    by_size = {}
    for k, n in enumerate(K.block_sizes):
        by_size.setdefault(n, []).append(k)
    groups, sizes, omegas, mus = [], [], {}, {}
    for n, members in sorted(by_size.items()):
        members = list(members)
        rng.shuffle(members)
        while members:
            take = int(rng.integers(1, len(members) + 1))
            grp, members = sorted(members[:take]), members[take:]
            divs = [p for p in range(1, n + 1) if n % p == 0]
            p = divs[int(rng.integers(len(divs)))]
            w = rng.random(len(grp)) + 0.2
            w /= w.sum()
            for k, wk in zip(grp, w):
                omegas[k] = _random_density(n // p, rng)
                mus[k] = float(wk)
            groups.append(grp)
            sizes.append(p)
    phi = block_expectation(K, groups, sizes, omegas, mus, picture=P)
    cand = expectation_to_candidate(phi, F)
    return twist_candidate(cand, rng)


def twist_candidate(cand, rng, strength=0.5):
    """``<x*, y*>' = <z x*, z y*>`` for a random positive invertible bimodule map ``z`` of ``F*``."""
    E = cand.E
    Em = E.module
    basis = module_maps_basis(Em, Em)
    # keep those that also commute with the left B-action
    keep = []
    for b in basis:
        if max(np.abs(E.left[c] @ b - b @ E.left[c]).max() for c in range(E.source.dim)) < 1e-9:
            keep.append(b)
    if not keep:
        return cand
    keep = np.array(keep)
    c = rng.standard_normal(len(keep)) + 1j * rng.standard_normal(len(keep))
    r = np.tensordot(c, keep, axes=([0], [0]))
    g, gi = Em.gram_sqrt, Em.gram_inv_sqrt
    rs = g @ r @ gi
    hs = rs.conj().T @ rs
    hs = hs / max(np.abs(hs).max(), 1e-300) * strength + np.eye(Em.dim)
    z = gi @ hs @ g
    H = np.einsum("ki,lj,kla->ija", np.conj(z), z, cand.pairing, optimize=True)
    return InnerProductCandidate(cand.F, H)
