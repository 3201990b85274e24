"""Finite-dimensional right Hilbert modules, module maps and operator-space norms.

A module over ``A`` with basis ``e_1..e_d`` is stored as

* ``action[a]``: the ``d x d`` matrix with ``coords(x . e_a) = action[a] @ coords(x)``;
* ``inner[i, j]``: the coordinates of ``<e_i, e_j>`` in ``A``.

Inner products are antilinear in the first variable:
``<x, y> = sum_ij conj(x_i) y_j inner[i, j]``.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import SCALARS, MultiMatrixAlgebra
from .errors import AlgebraMismatch, InvalidLevel, ModuleInvalid, NotAdjointable, NotLinear
from .linalg import DEFAULT_TOL, eigh, operator_norm, positive_range, psd_inv_sqrt, psd_sqrt


def _scale(x):
    return max(float(np.abs(x).max()), 1.0) if np.size(x) else 1.0


class HilbertModule:
    def __init__(self, algebra, action, inner, tol=DEFAULT_TOL, validate=True):
        self.algebra = algebra
        self.action = np.asarray(action, dtype=np.complex128)
        self.inner = np.asarray(inner, dtype=np.complex128)
        self.tol = tol
        d = self.inner.shape[0] if self.inner.ndim == 3 else 0
        if self.action.shape != (algebra.dim, d, d) or self.inner.shape != (d, d, algebra.dim):
            raise ModuleInvalid(
                f"tensor shapes {self.action.shape} / {self.inner.shape} do not fit dim {d} over {algebra!r}")
        if validate:
            self.validate(tol)

    @property
    def dim(self):
        return self.inner.shape[0]

    def __repr__(self):
        return f"HilbertModule(dim={self.dim}, algebra={self.algebra!r})"

    # -- structure -------------------------------------------------------
    def right(self, a):
        """Matrix of ``x -> x . a``."""
        return np.tensordot(np.asarray(a), self.action, axes=([0], [0]))

    def act(self, x, a):
        return self.right(a) @ x

    def ip(self, x, y):
        return np.einsum("i,j,ija->a", np.conj(x), y, self.inner)

    def norm(self, x):
        return module_norm(self, x)

    @cached_property
    def gram(self):
        """Scalar Gram matrix ``tau(<e_i, e_j>)``; positive definite on a valid module."""
        return self.inner @ self.algebra.trace_weights

    @cached_property
    def gram_sqrt(self):
        return psd_sqrt(self.gram)

    @cached_property
    def gram_inv_sqrt(self):
        return psd_inv_sqrt(self.gram)

    @cached_property
    def gram_inv(self):
        return self.gram_inv_sqrt @ self.gram_inv_sqrt

    def validation_residuals(self):
        A, d = self.algebra, self.dim
        R, G = self.action, self.inner
        res = {}
        if d == 0:
            return {"unit": 0.0, "associativity": 0.0, "linearity": 0.0, "hermitian": 0.0}
        res["unit"] = float(np.abs(self.right(A.unit_coords) - np.eye(d)).max())
        # R(e_a e_b) = R(e_b) R(e_a)
        prod = np.einsum("abc,bij->acij", A.left_mult, R)  # R(e_a e_c)
        rhs = np.einsum("cij,ajk->acik", R, R)
        res["associativity"] = float(np.abs(prod - rhs).max())
        # <e_i, e_j . e_a> = <e_i, e_j> e_a
        lhs = np.einsum("ikb,akj->ijab", G, R)
        rhs = np.einsum("ijc,abc->ijab", G, A.right_mult)
        res["linearity"] = float(np.abs(lhs - rhs).max())
        res["hermitian"] = float(np.abs(G.transpose(1, 0, 2) - A.star(G)).max())
        return res

    def validate(self, tol=DEFAULT_TOL):
        res = self.validation_residuals()
        scale = max(_scale(self.action), _scale(self.inner))
        for name, r in res.items():
            if r > tol.eq_slack(scale) * 100:
                raise ModuleInvalid(f"module {name} axiom fails (residual {r:.3e})")
        if self.dim == 0:
            return res
        loc = localization_gram(self)
        w = eigh(loc)[0]
        top = max(abs(w[0]), abs(w[-1]))
        if w[0] < -tol.eps_psd * loc.shape[0] * top:
            raise ModuleInvalid(f"inner product is not positive (min eigenvalue {w[0]:.3e})")
        g = eigh(self.gram)[0]
        if g[0] <= tol.eps_psd * self.dim * max(g[-1], 1e-300):
            raise ModuleInvalid("inner product is degenerate: <x,x> = 0 for some nonzero x")
        return res

    @cached_property
    def localization(self):
        return Localization(self)


def localization_gram(X):
    """Gram matrix of the Hilbert space ``X (x)_A C^N`` on the basis ``e_i (x) e_p``."""
    N = X.algebra.rep_dim
    reps = X.algebra.rep(X.inner)  # (d, d, N, N)
    return reps.transpose(0, 2, 1, 3).reshape(X.dim * N, X.dim * N)


class Localization:
    """The Hilbert space ``X (x)_A C^N`` with null vectors removed.

    ``L`` maps algebraic coordinates to an orthonormal frame of the quotient,
    ``L_pinv`` is its right inverse on that frame.
    """

    def __init__(self, X, rel=None):
        rel = X.tol.eps_psd if rel is None else rel
        gam = localization_gram(X)
        Q, w = positive_range(gam, rel)
        self.N = X.algebra.rep_dim
        self.L = (Q * np.sqrt(w)).conj().T
        self.L_pinv = Q / np.sqrt(w)

    def vector_map(self, x):
        """Matrix of ``xi -> x (x) xi`` from ``C^N`` into the localized space."""
        return self.L @ np.kron(np.asarray(x).reshape(-1, 1), np.eye(self.N))

    def operator(self, matrix, source):
        """Localized matrix ``(T (x) 1)`` of a module map ``source -> self``."""
        return self.L @ np.kron(matrix, np.eye(self.N)) @ source.localization.L_pinv


# -- elementary modules ------------------------------------------------------

def algebra_module(A):
    """``A`` as a right Hilbert module over itself, ``<a, b> = a* b``."""
    d = A.dim
    R = np.transpose(A.right_mult, (0, 1, 2)).astype(np.complex128)
    G = np.zeros((d, d, d), dtype=np.complex128)
    eye = np.eye(d)
    for i in range(d):
        si = A.star(eye[i])
        for j in range(d):
            G[i, j] = A.mul(si, eye[j])
    return HilbertModule(A, R, G)


def hilbert_space(d, gram=None):
    """``C^d`` as a Hilbert module over the scalars."""
    g = np.eye(d) if gram is None else np.asarray(gram, dtype=np.complex128)
    return HilbertModule(SCALARS, np.eye(d, dtype=np.complex128)[None], g[:, :, None])


def direct_sum(*modules):
    A = modules[0].algebra
    if any(m.algebra != A for m in modules):
        raise AlgebraMismatch("direct sum of modules over different algebras")
    d = sum(m.dim for m in modules)
    R = np.zeros((A.dim, d, d), dtype=np.complex128)
    G = np.zeros((d, d, A.dim), dtype=np.complex128)
    o = 0
    for m in modules:
        R[:, o:o + m.dim, o:o + m.dim] = m.action
        G[o:o + m.dim, o:o + m.dim] = m.inner
        o += m.dim
    return HilbertModule(A, R, G, tol=modules[0].tol)


# -- maps ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModuleMap:
    source: HilbertModule
    target: HilbertModule
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if self.source.algebra != self.target.algebra:
            raise AlgebraMismatch("module map between modules over different algebras")
        if m.shape != (self.target.dim, self.source.dim):
            raise ValueError(f"matrix shape {m.shape} != {(self.target.dim, self.source.dim)}")
        object.__setattr__(self, "matrix", m)

    def __call__(self, x):
        return self.matrix @ x

    def __matmul__(self, other):
        return ModuleMap(other.source, self.target, self.matrix @ other.matrix)

    def __add__(self, other):
        return ModuleMap(self.source, self.target, self.matrix + other.matrix)

    def __mul__(self, c):
        return ModuleMap(self.source, self.target, self.matrix * c)

    __rmul__ = __mul__

    def linearity_residual(self):
        return linearity_residual(self.matrix, self.source, self.target)

    def adjoint(self):
        return adjoint_of(self)

    def norm(self):
        return map_norm(self)


def linearity_residual(matrix, X, Y):
    if X.dim == 0 or Y.dim == 0:
        return 0.0
    lhs = np.einsum("ij,ajk->aik", matrix, X.action)
    rhs = np.einsum("aij,jk->aik", Y.action, matrix)
    return float(np.abs(lhs - rhs).max())


def identity_map(X):
    return ModuleMap(X, X, np.eye(X.dim))


def adjoint_residual(T, Ts):
    """``max |<T e_i, f_j> - <e_i, T* f_j>|`` over basis pairs."""
    X, Y = T.source, T.target
    if X.dim == 0 or Y.dim == 0:
        return 0.0
    lhs = np.einsum("ai,bj,abk->ijk", np.conj(T.matrix), np.eye(Y.dim), Y.inner, optimize=True)
    rhs = np.einsum("ai,bj,abk->ijk", np.eye(X.dim), Ts.matrix, X.inner, optimize=True)
    return float(np.abs(lhs - rhs).max())


def adjoint_of(T, tol=DEFAULT_TOL):
    """The module adjoint, ``g_X^{-1} T^H g_Y`` in terms of the scalar Gram matrices."""
    X, Y = T.source, T.target
    if T.linearity_residual() > tol.eq_slack(_scale(T.matrix)) * 1e3:
        raise NotLinear("map is not module-linear")
    if X.dim == 0 or Y.dim == 0:
        return ModuleMap(Y, X, np.zeros((X.dim, Y.dim)))
    Ts = ModuleMap(Y, X, X.gram_inv @ T.matrix.conj().T @ Y.gram)
    r = adjoint_residual(T, Ts)
    if r > 1e-8 * max(_scale(T.matrix), 1.0) * max(_scale(X.inner), _scale(Y.inner)):
        raise NotAdjointable(f"adjoint equation fails (residual {r:.3e})")
    return Ts


def similarity(T):
    """``g_Y^{1/2} T g_X^{-1/2}``: the map in orthonormal coordinates for the scalar Gram."""
    return T.target.gram_sqrt @ T.matrix @ T.source.gram_inv_sqrt


def map_norm(T):
    """Operator norm of an adjointable map."""
    if T.source.dim == 0 or T.target.dim == 0:
        return 0.0
    return operator_norm(similarity(T))


def cb_norm_module_map(T, tol=DEFAULT_TOL):
    """Norm of a module map computed on the localized Hilbert spaces."""
    if T.linearity_residual() > tol.eq_slack(_scale(T.matrix)) * 1e3:
        raise NotLinear("map is not module-linear")
    if T.source.dim == 0 or T.target.dim == 0:
        return 0.0
    return operator_norm(T.target.localization.operator(T.matrix, T.source))


def module_norm(X, x):
    x = np.asarray(x, dtype=np.complex128)
    if X.dim == 0 or not np.any(x):
        return 0.0
    return float(np.sqrt(X.algebra.norm(X.ip(x, x))))


def rank_one(Y, y, X, x):
    """``z -> y <x, z>`` as a :class:`ModuleMap` ``X -> Y``."""
    if X.algebra != Y.algebra:
        raise AlgebraMismatch("rank-one operator between modules over different algebras")
    row = np.einsum("i,ija->aj", np.conj(x), X.inner)  # <x, e_j> coordinates
    col = np.einsum("aij,j->ai", Y.action, y)  # y . e_a
    return ModuleMap(X, Y, np.einsum("ai,aj->ij", col, row))


def rank_one_tensor(Y, X):
    """``theta[m, i]`` is the matrix of ``rank_one(e_m, e_i)``; shape ``(dY, dX, dY, dX)``."""
    col = Y.action  # (a, p, m): coordinate p of e_m . e_a
    return np.einsum("apm,ija->mipj", col, X.inner)


def compacts_basis(X, Y):
    th = rank_one_tensor(Y, X)
    return [ModuleMap(X, Y, th[m, i]) for m in range(Y.dim) for i in range(X.dim)]


def module_maps_basis(X, Y):
    """Basis of all module maps ``X -> Y`` (null space of the commutation constraint)."""
    dX, dY = X.dim, Y.dim
    if dX == 0 or dY == 0:
        return np.zeros((0, dY, dX), dtype=np.complex128)
    I_X, I_Y = np.eye(dX), np.eye(dY)
    rows = [np.kron(I_Y, X.action[a].T) - np.kron(Y.action[a], I_X) for a in range(X.algebra.dim)]
    M = np.concatenate(rows, axis=0)
    # only the row space is needed; skip the left factor when M is tall
    _, s, vh = np.linalg.svd(M, full_matrices=M.shape[0] < M.shape[1])
    # the constraint may vanish identically, so anchor the cutoff to the actions
    ref = max(s[0] if s.size else 0.0, np.abs(X.action).max(), np.abs(Y.action).max(), 1e-300)
    r = int(np.sum(s > 1e-9 * ref * max(M.shape))) if s.size else 0
    return vh[r:].conj().reshape(-1, dY, dX)


def random_module_map(X, Y, rng):
    basis = module_maps_basis(X, Y)
    c = rng.standard_normal(basis.shape[0]) + 1j * rng.standard_normal(basis.shape[0])
    return ModuleMap(X, Y, np.tensordot(c, basis, axes=([0], [0])))


def span_residual(T, basis):
    """Least-squares distance from ``T`` to the span of the given maps."""
    B = np.stack([b.matrix.reshape(-1) for b in basis], axis=1)
    t = T.matrix.reshape(-1)
    c, *_ = np.linalg.lstsq(B, t, rcond=None)
    return float(np.abs(B @ c - t).max())


def random_element(X, rng):
    return rng.standard_normal(X.dim) + 1j * rng.standard_normal(X.dim)


# -- conjugates and amplification -----------------------------------------------------

def conjugate_module(algebra, right_on_conj, pairing, tol=DEFAULT_TOL, validate=True):
    """Hilbert module on a conjugate space.

    ``right_on_conj[a]`` acts on conjugated coordinates and ``pairing[i, j]`` is
    ``<e_i*, e_j*>``.
    """
    return HilbertModule(algebra, right_on_conj, pairing, tol=tol, validate=validate)


def bar(x):
    """Coordinates of ``x*`` in the conjugate space (an involution)."""
    return np.conj(x)


def amplified_algebra(A, n):
    return MultiMatrixAlgebra([n * k for k in A.block_sizes])


def amplified_coords(A, n, entries):
    """``M_n(A)`` coordinates of the matrix ``[a_ij]`` given as an ``(n, n, dim A)`` array."""
    An = amplified_algebra(A, n)
    out = np.zeros(An.dim, dtype=np.complex128)
    for a, (k, p, q) in enumerate(A.units):
        nk = A.block_sizes[k]
        for i in range(n):
            for j in range(n):
                out[An.index(k, i * nk + p, j * nk + q)] += entries[i, j, a]
    return out


def amplified_module(X, n):
    """``M_n(X)`` as a Hilbert module over ``M_n(A)``; coordinates ``(i, j, t)`` flattened."""
    if n < 1:
        raise InvalidLevel(f"level must be >= 1, got {n}")
    if n == 1:
        return X
    A, d = X.algebra, X.dim
    An = amplified_algebra(A, n)
    D = n * n * d
    R = np.zeros((An.dim, D, D), dtype=np.complex128)
    idx = lambda i, j, t: (i * n + j) * d + t
    for a, (k, p, q) in enumerate(A.units):
        nk = A.block_sizes[k]
        for i in range(n):
            for j in range(n):
                # S . (E_ij (x) e_a): column j receives column i acted on by e_a
                u = An.index(k, i * nk + p, j * nk + q)
                for l in range(n):
                    for t in range(d):
                        R[u, idx(l, j, 0):idx(l, j, 0) + d, idx(l, i, t)] += X.action[a, :, t]
    G = np.zeros((D, D, An.dim), dtype=np.complex128)
    for r in range(n):
        for c in range(n):
            for c2 in range(n):
                ent = np.zeros((n, n, A.dim), dtype=np.complex128)
                for t in range(d):
                    for s in range(d):
                        ent[:] = 0
                        ent[c, c2] = X.inner[t, s]
                        G[idx(r, c, t), idx(r, c2, s)] = amplified_coords(A, n, ent)
    return HilbertModule(An, R, G, tol=X.tol)


def amplified_gram(X, S):
    """Block matrix ``[rep(sum_k <S_ki, S_kj>)]_{ij}`` for an ``(n, n, d)`` array ``S``."""
    S = np.asarray(S, dtype=np.complex128)
    n = S.shape[0]
    ips = np.einsum("kit,kjs,tsa->ija", np.conj(S), S, X.inner, optimize=True)
    reps = X.algebra.rep(ips)  # (n, n, N, N)
    N = X.algebra.rep_dim
    return reps.transpose(0, 2, 1, 3).reshape(n * N, n * N)


def os_norm(X, S):
    """Norm of an ``n x n`` matrix of module elements in ``M_n(X)``."""
    S = np.asarray(S)
    if S.ndim != 3 or S.shape[0] != S.shape[1] or S.shape[2] != X.dim:
        raise ValueError(f"expected an (n, n, {X.dim}) array, got shape {S.shape}")
    if X.dim == 0 or not np.any(S):
        return 0.0
    w = eigh(amplified_gram(X, S))[0]
    return float(np.sqrt(max(w[-1], 0.0)))


def conj_os_norm(X, S):
    """Norm in ``M_n(X*)`` of a matrix of conjugate elements (conjugated coordinates)."""
    S = np.asarray(S)
    if S.ndim != 3 or S.shape[0] != S.shape[1] or S.shape[2] != X.dim:
        raise ValueError(f"expected an (n, n, {X.dim}) array, got shape {S.shape}")
    return os_norm(X, np.conj(S).transpose(1, 0, 2))
