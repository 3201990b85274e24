"""Finite-dimensional C*-algebras as direct sums of full matrix blocks.

Elements are stored through coordinates in the matrix-unit basis: the units
``e^{(k)}_{pq}`` are ordered block by block, row-major inside each block.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import AlgebraMismatch, InvalidMatrix
from .linalg import DEFAULT_TOL, eigh, is_psd, operator_norm


class MultiMatrixAlgebra:
    """``M_{n_1} + ... + M_{n_k}``; commutative algebras use block sizes ``(1, ..., 1)``."""

    def __init__(self, block_sizes):
        sizes = tuple(int(n) for n in block_sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise ValueError(f"block sizes must be a nonempty list of positive counts, got {block_sizes!r}")
        self.block_sizes = sizes

    def __eq__(self, other):
        return isinstance(other, MultiMatrixAlgebra) and self.block_sizes == other.block_sizes

    def __hash__(self):
        return hash(self.block_sizes)

    def __repr__(self):
        return f"MultiMatrixAlgebra({list(self.block_sizes)})"

    @property
    def nblocks(self):
        return len(self.block_sizes)

    @cached_property
    def dim(self):
        return sum(n * n for n in self.block_sizes)

    @cached_property
    def rep_dim(self):
        return sum(self.block_sizes)

    @cached_property
    def offsets(self):
        """Coordinate offset of each block."""
        return np.cumsum([0] + [n * n for n in self.block_sizes])

    @cached_property
    def rep_offsets(self):
        return np.cumsum([0] + list(self.block_sizes))

    def index(self, k, p, q):
        return int(self.offsets[k]) + p * self.block_sizes[k] + q

    @cached_property
    def units(self):
        """List of ``(k, p, q)`` for each coordinate."""
        return [(k, p, q) for k, n in enumerate(self.block_sizes) for p in range(n) for q in range(n)]

    @cached_property
    def basis_rep(self):
        """Array ``(dim, N, N)`` with the faithful representation of each unit."""
        P = np.zeros((self.dim, self.rep_dim, self.rep_dim))
        for a, (k, p, q) in enumerate(self.units):
            o = self.rep_offsets[k]
            P[a, o + p, o + q] = 1.0
        P.setflags(write=False)
        return P

    @cached_property
    def unit_coords(self):
        c = np.zeros(self.dim, dtype=np.complex128)
        for k, n in enumerate(self.block_sizes):
            for p in range(n):
                c[self.index(k, p, p)] = 1.0
        c.setflags(write=False)
        return c

    @cached_property
    def star_perm(self):
        """Permutation sending the coordinate of ``e_pq`` to that of ``e_qp``."""
        return np.array([self.index(k, q, p) for (k, p, q) in self.units])

    @cached_property
    def trace_weights(self):
        """``tau(e_a)`` for the faithful trace ``tau = Tr o rep``."""
        w = np.zeros(self.dim)
        for a, (k, p, q) in enumerate(self.units):
            if p == q:
                w[a] = 1.0
        return w

    def rep(self, c):
        """Faithful block-diagonal representation of coordinates ``c`` (last axis)."""
        c = np.asarray(c)
        N = self.rep_dim
        out = np.zeros(c.shape[:-1] + (N, N), dtype=np.complex128)
        for k, n in enumerate(self.block_sizes):
            o, r = self.offsets[k], self.rep_offsets[k]
            out[..., r:r + n, r:r + n] = c[..., o:o + n * n].reshape(c.shape[:-1] + (n, n))
        return out

    def from_rep(self, m):
        """Coordinates of the block-diagonal part of an ``N x N`` matrix (leading axes allowed)."""
        m = np.asarray(m)
        parts = []
        for k, n in enumerate(self.block_sizes):
            r = self.rep_offsets[k]
            parts.append(m[..., r:r + n, r:r + n].reshape(m.shape[:-2] + (n * n,)))
        return np.concatenate(parts, axis=-1).astype(np.complex128)

    def blocks_of(self, c):
        c = np.asarray(c, dtype=np.complex128)
        return [c[self.offsets[k]:self.offsets[k + 1]].reshape(n, n) for k, n in enumerate(self.block_sizes)]

    def from_blocks(self, blocks):
        if len(blocks) != self.nblocks:
            raise AlgebraMismatch(f"expected {self.nblocks} blocks, got {len(blocks)}")
        parts = []
        for b, n in zip(blocks, self.block_sizes):
            b = np.asarray(b, dtype=np.complex128)
            if b.shape != (n, n):
                raise AlgebraMismatch(f"block of shape {b.shape} does not match size {n}")
            parts.append(b.reshape(-1))
        return np.concatenate(parts)

    def mul(self, a, b):
        return np.concatenate([(x @ y).reshape(-1) for x, y in zip(self.blocks_of(a), self.blocks_of(b))])

    def star(self, a):
        return np.conj(np.asarray(a, dtype=np.complex128)[..., self.star_perm])

    def norm(self, a):
        return max(operator_norm(x) for x in self.blocks_of(a))

    def tau(self, a):
        return np.asarray(a)[..., :] @ self.trace_weights

    @cached_property
    def left_mult(self):
        """``left_mult[a]`` is the matrix of ``c -> e_a c`` on coordinates."""
        return self._mult_tables()[0]

    @cached_property
    def right_mult(self):
        """``right_mult[a]`` is the matrix of ``c -> c e_a`` on coordinates."""
        return self._mult_tables()[1]

    def _mult_tables(self):
        d = self.dim
        L = np.zeros((d, d, d))
        R = np.zeros((d, d, d))
        for a, (k, p, q) in enumerate(self.units):
            n = self.block_sizes[k]
            for s in range(n):
                # e_pq e_qs = e_ps ; e_sp e_pq = e_sq
                L[a, self.index(k, p, s), self.index(k, q, s)] = 1.0
                R[a, self.index(k, s, q), self.index(k, s, p)] = 1.0
        L.setflags(write=False)
        R.setflags(write=False)
        return L, R

    def block_projection(self, subset):
        c = np.zeros(self.dim, dtype=np.complex128)
        for k in subset:
            for p in range(self.block_sizes[k]):
                c[self.index(k, p, p)] = 1.0
        return c

    def block_mask(self, subset):
        m = np.zeros(self.dim, dtype=bool)
        for k in subset:
            m[self.offsets[k]:self.offsets[k + 1]] = True
        return m

    def element(self, blocks):
        return AlgebraElement(self, self.from_blocks(blocks))

    def random_element(self, rng):
        return AlgebraElement(self, rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim))

    def unit(self):
        return AlgebraElement(self, np.array(self.unit_coords))


SCALARS = MultiMatrixAlgebra([1])


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    parent: MultiMatrixAlgebra
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.complex128)
        if c.shape != (self.parent.dim,):
            raise AlgebraMismatch(f"coordinate vector of shape {c.shape} for {self.parent!r}")
        if not np.all(np.isfinite(c)):
            raise InvalidMatrix("element has non-finite entries")
        object.__setattr__(self, "coords", c)

    @property
    def blocks(self):
        return self.parent.blocks_of(self.coords)

    def _check(self, other):
        if self.parent != other.parent:
            raise AlgebraMismatch(f"{self.parent!r} vs {other.parent!r}")

    def __matmul__(self, other):
        return alg_mul(self, other)

    def __add__(self, other):
        self._check(other)
        return AlgebraElement(self.parent, self.coords + other.coords)

    def __sub__(self, other):
        self._check(other)
        return AlgebraElement(self.parent, self.coords - other.coords)

    def __mul__(self, scalar):
        return AlgebraElement(self.parent, self.coords * scalar)

    __rmul__ = __mul__

    def star(self):
        return alg_star(self)

    def norm(self):
        return alg_norm(self)


def alg_mul(a, b):
    a._check(b)
    return AlgebraElement(a.parent, a.parent.mul(a.coords, b.coords))


def alg_star(a):
    return AlgebraElement(a.parent, a.parent.star(a.coords))


def alg_norm(a):
    return a.parent.norm(a.coords)


def is_positive(a, tol=DEFAULT_TOL):
    """True iff every block of a Hermitian element is PSD."""
    if isinstance(a, AlgebraElement):
        blocks = a.blocks
    else:
        blocks = a
    return all(is_psd(b, tol) for b in blocks)


def faithful_rep(A):
    """The block-diagonal embedding as a function of an element or coordinate vector."""

    def rep(a):
        c = a.coords if isinstance(a, AlgebraElement) else a
        return A.rep(c)

    return rep


def simple_blocks(A):
    return A.nblocks == 1


@dataclass(frozen=True)
class CentralIdeal:
    parent: MultiMatrixAlgebra
    block_subset: tuple

    def __post_init__(self):
        s = tuple(sorted(set(int(k) for k in self.block_subset)))
        if any(k < 0 or k >= self.parent.nblocks for k in s):
            raise ValueError(f"block subset {s} out of range for {self.parent!r}")
        object.__setattr__(self, "block_subset", s)

    def complement(self):
        return CentralIdeal(self.parent, tuple(k for k in range(self.parent.nblocks) if k not in self.block_subset))

    def projection(self):
        return self.parent.block_projection(self.block_subset)

    @property
    def dim(self):
        return sum(self.parent.block_sizes[k] ** 2 for k in self.block_subset)


def decomposition_residual(ideal):
    """Residual of ``p + q = 1``, ``pq = 0`` and ``pAp + qAq = A`` for an ideal and its complement."""
    A = ideal.parent
    p = ideal.projection()
    q = ideal.complement().projection()
    r1 = np.abs(p + q - A.unit_coords).max()
    r2 = np.abs(A.mul(p, q)).max()
    # p a p + q a q reproduces a on a basis (off-block corners vanish for central p)
    eye = np.eye(A.dim)
    pa = np.array([A.mul(A.mul(p, e), p) + A.mul(A.mul(q, e), q) for e in eye])
    r3 = np.abs(pa - eye).max()
    return float(max(r1, r2, r3))


def is_completely_positive(matrix, dom, cod, tol=DEFAULT_TOL):
    """Choi test for a linear map ``dom -> cod`` given on coordinates.

    Returns ``(flag, min_eig)`` where ``min_eig`` is the smallest eigenvalue over
    all block-pair Choi matrices, relative to the largest.
    """
    matrix = np.asarray(matrix)
    worst, scale = np.inf, 0.0
    for k, n in enumerate(dom.block_sizes):
        for l, m in enumerate(cod.block_sizes):
            J = choi_block(matrix, dom, cod, k, l)
            w, _ = eigh(J)
            worst = min(worst, w[0])
            scale = max(scale, abs(w[-1]), abs(w[0]))
    rel = worst / scale if scale > 0 else 0.0
    return bool(rel >= -tol.eps_psd * max(dom.rep_dim * cod.rep_dim, 1)), float(rel)


def choi_block(matrix, dom, cod, k, l):
    """``sum_pq E_pq (x) Phi_lk(E_pq)`` for block ``k`` of the domain and block ``l`` of the codomain."""
    n, m = dom.block_sizes[k], cod.block_sizes[l]
    J = np.zeros((n * m, n * m), dtype=np.complex128)
    ol = cod.offsets[l]
    for p in range(n):
        for q in range(n):
            img = matrix[ol:ol + m * m, dom.index(k, p, q)].reshape(m, m)
            J[p * m:(p + 1) * m, q * m:(q + 1) * m] = img
    return J


# ---------------------------------------------------------------------------
# Structure of *-subalgebras of M_D


class StarSubalgebra:
    """A unital *-subalgebra of ``M_D`` together with an explicit isomorphism
    onto a :class:`MultiMatrixAlgebra`.

    ``units[a]`` is the ``D x D`` image of the abstract matrix unit with
    coordinate ``a``.
    """

    def __init__(self, algebra, units):
        self.algebra = algebra
        self.units = np.asarray(units, dtype=np.complex128)
        D = self.units.shape[-1]
        self.D = D
        flat = self.units.reshape(algebra.dim, D * D)
        # coordinates by Hilbert-Schmidt pairing; units are orthogonal with norm^2 = multiplicity
        self._dual = flat.conj() / np.einsum("ij,ij->i", flat.conj(), flat).real[:, None]

    def embed(self, c):
        return np.tensordot(np.asarray(c), self.units, axes=([-1], [0]))

    def coords_of(self, m):
        m = np.asarray(m, dtype=np.complex128)
        return m.reshape(m.shape[:-2] + (self.D * self.D,)) @ self._dual.T

    def membership_residual(self, m):
        m = np.asarray(m, dtype=np.complex128)
        return float(np.abs(self.embed(self.coords_of(m)) - m).max()) if m.size else 0.0


def span_basis(mats, rel=1e-10):
    """Orthonormal (Hilbert-Schmidt) basis of the span of a list of square matrices."""
    mats = np.asarray(mats, dtype=np.complex128)
    if mats.shape[0] == 0:
        return mats
    D = mats.shape[-1]
    flat = mats.reshape(mats.shape[0], D * D)
    _, s, vh = np.linalg.svd(flat, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, D, D), dtype=np.complex128)
    r = int(np.sum(s > rel * s[0] * max(flat.shape)))
    return vh[:r].reshape(r, D, D)


def _null_space(m, rel=1e-9, scale=None):
    u, s, vh = np.linalg.svd(m)
    if s.size == 0:
        return np.eye(m.shape[1], dtype=np.complex128)
    ref = s[0] if scale is None else scale
    cut = rel * max(ref, 1e-300) * max(m.shape)
    r = int(np.sum(s > cut))
    return vh[r:].conj().T


def _cluster(w, scale, rel=1e-6):
    groups, cur = [], [0]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > rel * scale:
            groups.append(cur)
            cur = [i]
        else:
            cur.append(i)
    groups.append(cur)
    return groups


def wedderburn(mats, seed=0):
    """Decompose the *-algebra spanned by ``mats`` (closed under products and
    adjoints, containing the identity) into full matrix blocks.

    Returns a :class:`StarSubalgebra`.  Blocks are ordered by size, then by
    the position of their support, so the result does not depend on the
    random elements used to split the center.
    """
    rng = np.random.default_rng(seed)
    basis = span_basis(mats)
    m, D = basis.shape[0], basis.shape[-1]
    if m == 0:
        raise InvalidMatrix("empty algebra")
    flat = basis.reshape(m, D * D)
    eye = np.eye(D).reshape(-1)
    if np.abs(flat.T @ (flat.conj() @ eye) - eye).max() > 1e-8:
        raise InvalidMatrix("subalgebra does not contain the identity")
    # center: sum c_i b_i commuting with every b_j
    comm = np.concatenate([
        np.stack([(basis[i] @ basis[j] - basis[j] @ basis[i]).reshape(-1) for i in range(m)], axis=1)
        for j in range(m)
    ], axis=0)
    # the basis is orthonormal, so commutators are measured against 1
    zc = _null_space(comm, scale=1.0)
    center = np.tensordot(zc.T, basis, axes=([1], [0]))
    coef = rng.standard_normal(center.shape[0]) + 1j * rng.standard_normal(center.shape[0])
    h = np.tensordot(coef, center, axes=([0], [0]))
    h = h + h.conj().T
    w, v = eigh(h)
    scale = max(abs(w[0]), abs(w[-1]), 1e-300)
    blocks = []
    for g in _cluster(w, scale):
        p = v[:, g] @ v[:, g].conj().T
        corner = span_basis(np.array([b @ p for b in basis]))
        n = int(round(np.sqrt(corner.shape[0])))
        if n * n != corner.shape[0]:
            raise InvalidMatrix("span is not a *-algebra (corner dimension is not a square)")
        a = np.tensordot(rng.standard_normal(corner.shape[0]), corner, axes=([0], [0]))
        a = p @ (a + a.conj().T) @ p
        # restrict to range(p)
        vp = v[:, g]
        wa, va = eigh(vp.conj().T @ a @ vp)
        sub = _cluster(wa, max(abs(wa[0]), abs(wa[-1]), 1e-300))
        if len(sub) != n:
            raise InvalidMatrix("could not split a simple summand into minimal projections")
        projs = [vp @ va[:, s] @ va[:, s].conj().T @ vp.conj().T for s in sub]
        x = np.tensordot(rng.standard_normal(corner.shape[0]) + 1j * rng.standard_normal(corner.shape[0]),
                         corner, axes=([0], [0]))
        E = np.zeros((n, n, D, D), dtype=np.complex128)
        E[0, 0] = projs[0]
        for k in range(1, n):
            y = projs[0] @ x @ projs[k]
            E[0, k] = y / operator_norm(y)
            E[k, 0] = E[0, k].conj().T
        for j in range(1, n):
            for k in range(1, n):
                E[j, k] = E[j, 0] @ E[0, k]
        support = int(np.argmax(np.abs(np.diagonal(p)) > 0.5 * np.abs(np.diagonal(p)).max()))
        blocks.append((n, support, E))
    blocks.sort(key=lambda t: (t[0], t[1]))
    alg = MultiMatrixAlgebra([b[0] for b in blocks])
    units = np.concatenate([b[2].reshape(b[0] * b[0], D, D) for b in blocks], axis=0)
    return StarSubalgebra(alg, units)


def generated_algebra(mats, max_rounds=20):
    """Span of all products of ``mats``, their adjoints and the identity."""
    mats = np.asarray(mats, dtype=np.complex128)
    D = mats.shape[-1]
    gens = list(mats) + [m.conj().T for m in mats] + [np.eye(D)]
    basis = span_basis(np.array(gens))
    for _ in range(max_rounds):
        prods = [a @ b for a in basis for b in basis]
        new = span_basis(np.concatenate([basis, np.array(prods)], axis=0))
        if new.shape[0] == basis.shape[0]:
            return new
        basis = new
    return basis
