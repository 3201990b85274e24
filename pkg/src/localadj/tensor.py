"""Correspondences, internal tensor products and the compact-operator picture."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import SCALARS, wedderburn
from .errors import AlgebraMismatch, ModuleInvalid
from .linalg import DEFAULT_TOL, positive_range
from .module import (HilbertModule, ModuleMap, _scale, algebra_module, hilbert_space,
                     linearity_residual, map_norm, module_maps_basis, rank_one_tensor)


class Correspondence:
    """A Hilbert ``B``-module with a left action of ``A``.

    ``left[a]`` is the matrix of ``f -> e_a . f``.
    """

    def __init__(self, source, module, left, tol=DEFAULT_TOL, validate=True):
        self.source = source
        self.module = module
        self.left = np.asarray(left, dtype=np.complex128)
        self.tol = tol
        if self.left.shape != (source.dim, module.dim, module.dim):
            raise ModuleInvalid(f"left action of shape {self.left.shape} does not fit")
        if validate:
            self.validate(tol)

    @property
    def target(self):
        return self.module.algebra

    @property
    def dim(self):
        return self.module.dim

    def __repr__(self):
        return f"Correspondence({self.source!r} -> {self.target!r}, dim={self.dim})"

    def act(self, a):
        """Matrix of ``f -> a . f``."""
        return np.tensordot(np.asarray(a), self.left, axes=([0], [0]))

    def validation_residuals(self):
        A, F = self.source, self.module
        L = self.left
        d = F.dim
        if d == 0:
            return {"homomorphism": 0.0, "unit": 0.0, "adjoint": 0.0, "commute": 0.0}
        res = {}
        # L(e_a e_b) = sum_c (e_a e_b)_c L[c] ; left_mult[a][:, b] holds e_a e_b
        prod = np.einsum("acb,cij->abij", A.left_mult, L)
        res["homomorphism"] = float(np.abs(prod - np.einsum("aij,bjk->abik", L, L)).max())
        res["unit"] = float(np.abs(self.act(A.unit_coords) - np.eye(d)).max())
        # <a f_i, f_j> = <f_i, a* f_j>
        lhs = np.einsum("aki,kjc->aijc", np.conj(L), F.inner)
        Ls = np.array([self.act(A.star(e)) for e in np.eye(A.dim)])
        rhs = np.einsum("akj,ikc->aijc", Ls, F.inner)
        res["adjoint"] = float(np.abs(lhs - rhs).max())
        res["commute"] = max(linearity_residual(L[a], F, F) for a in range(A.dim))
        return res

    def validate(self, tol=DEFAULT_TOL):
        res = self.validation_residuals()
        scale = max(_scale(self.left), _scale(self.module.inner))
        for name, r in res.items():
            if r > tol.eq_slack(scale) * 100:
                raise ModuleInvalid(f"correspondence {name} condition fails (residual {r:.3e})")
        return res


def identity_correspondence(A):
    """``A`` as a correspondence from itself to itself."""
    X = algebra_module(A)
    return Correspondence(A, X, np.array(A.left_mult, dtype=np.complex128))


def hilbert_correspondence(d):
    """``C^d`` as a correspondence from the scalars to the scalars."""
    return Correspondence(SCALARS, hilbert_space(d), np.eye(d)[None])


def representation(A, tol=DEFAULT_TOL):
    """The faithful representation on ``C^N`` as a correspondence ``A -> C``."""
    return Correspondence(A, hilbert_space(A.rep_dim), A.basis_rep.astype(np.complex128), tol=tol)


@dataclass(eq=False)
class TensorProduct:
    """``X (x)_A F``: the quotient module plus ``Q`` (orthonormal basis of the
    non-null part of the algebraic tensor, ordered by descending eigenvalue).

    The factor map from algebraic coordinates is ``Q^H``.
    """

    X: HilbertModule
    F: Correspondence
    module: HilbertModule
    Q: np.ndarray
    semi_inner: np.ndarray
    left: np.ndarray = None
    left_source: object = None

    @property
    def dim(self):
        return self.module.dim

    def factor(self, v):
        return self.Q.conj().T @ v

    def elementary(self, x, f):
        return self.factor(np.kron(x, f))

    @cached_property
    def null_projector(self):
        return np.eye(self.Q.shape[0]) - self.Q @ self.Q.conj().T

    def correspondence(self):
        if self.left is None:
            raise ModuleInvalid("the left factor carries no left action")
        return Correspondence(self.left_source, self.module, self.left, tol=self.module.tol, validate=False)


def algebraic_inner(X, F):
    """B-valued semi-inner product on the algebraic tensor product, shape ``(D, D, dim B)``."""
    # <x_i (x) f_k, x_j (x) f_l> = <f_k, <x_i, x_j> . f_l>
    Ff = F.module
    G = np.einsum("ija,aml,kmb->ikjlb", X.inner, F.left, Ff.inner, optimize=True)
    D = X.dim * Ff.dim
    return G.reshape(D, D, Ff.algebra.dim)


def internal_tensor(X, F, tol=None, left=None):
    """Internal tensor product of a Hilbert ``A``-module with a correspondence ``A -> B``.

    ``X`` may also be a :class:`Correspondence` from some ``C`` to ``A``; its left
    action is then inherited.
    """
    left_src = None
    if isinstance(X, Correspondence):
        left, left_src, X = X.left, X.source, X.module
    if X.algebra != F.source:
        raise AlgebraMismatch(f"cannot tensor a module over {X.algebra!r} with a correspondence from {F.source!r}")
    tol = tol or X.tol
    B = F.target
    G = algebraic_inner(X, F)
    D = G.shape[0]
    if D == 0:
        Q = np.zeros((0, 0), dtype=np.complex128)
    else:
        Q, _ = positive_range(G @ B.trace_weights, tol.eps_psd)
    Gq = np.einsum("ak,bl,abc->klc", np.conj(Q), Q, G, optimize=True)
    Ra = np.einsum("ij,bkl->bikjl", np.eye(X.dim), F.module.action).reshape(B.dim, D, D)
    Rq = np.einsum("ak,bac,cl->bkl", np.conj(Q), Ra, Q, optimize=True)
    mod = HilbertModule(B, Rq, Gq, tol=tol, validate=False)
    Lq = None
    if left is not None:
        La = np.einsum("cij,kl->cikjl", left, np.eye(F.dim)).reshape(left.shape[0], D, D)
        Lq = np.einsum("ak,cab,bl->ckl", np.conj(Q), La, Q, optimize=True)
    return TensorProduct(X, F, mod, Q, G, Lq, left_src)


def balance_residual(T):
    """``max || [(x . a) (x) f] - [x (x) (a . f)] ||`` over basis elements."""
    X, F = T.X, T.F
    if T.dim == 0:
        return 0.0
    r = 0.0
    for a in range(X.algebra.dim):
        diff = np.kron(X.action[a], np.eye(F.dim)) - np.kron(np.eye(X.dim), F.left[a])
        r = max(r, float(np.abs(T.Q.conj().T @ diff).max()))
    return r


def tensor_maps(T, S, src, tgt):
    """``T (x) S`` from ``src = X (x) F`` to ``tgt = Y (x) F'`` on quotient coordinates."""
    return tgt.Q.conj().T @ np.kron(T, S) @ src.Q


def tensor_map(T, F, src=None, tgt=None):
    """``T (x) id_F`` as a :class:`ModuleMap`; quotients are built unless supplied."""
    src = src or internal_tensor(T.source, F)
    tgt = tgt or internal_tensor(T.target, F)
    return ModuleMap(src.module, tgt.module, tensor_maps(T.matrix, np.eye(F.dim), src, tgt))


def compose_correspondences(F, G):
    """``F (x)_B G`` as a correspondence ``A -> C``."""
    if F.target != G.source:
        raise AlgebraMismatch(f"middle algebras differ: {F.target!r} vs {G.source!r}")
    return internal_tensor(F, G).correspondence()


# -- compact operators -----------------------------------------------------------

class CompactPicture:
    """``K_A(X) = B_A(X)`` realized as a multi-matrix algebra.

    ``sub`` lives in the similarity frame ``g^{1/2} T g^{-1/2}``, where the
    module adjoint becomes the conjugate transpose.
    """

    def __init__(self, X, seed=0):
        self.X = X
        basis = module_maps_basis(X, X)
        g, gi = X.gram_sqrt, X.gram_inv_sqrt
        mats = np.array([g @ b @ gi for b in basis])
        mats = np.concatenate([mats, np.conj(mats).transpose(0, 2, 1)], axis=0)
        self.sub = wedderburn(mats, seed=seed)
        self.algebra = self.sub.algebra

    def to_operator(self, c):
        X = self.X
        return X.gram_inv_sqrt @ self.sub.embed(c) @ X.gram_sqrt

    def coords_of(self, T):
        X = self.X
        return self.sub.coords_of(X.gram_sqrt @ T @ X.gram_inv_sqrt)

    @cached_property
    def operators(self):
        """``(dim K, d, d)`` operators of the matrix units."""
        return np.array([self.to_operator(e) for e in np.eye(self.algebra.dim)])


def compact_picture(X, seed=0):
    return CompactPicture(X, seed)


def dual_correspondence(X, picture=None, tol=DEFAULT_TOL):
    """``X*`` as a correspondence from ``A`` to ``K_A(X)`` with
    ``<x1*, x2*> = theta_{x1, x2}``; coordinates of ``x*`` are ``conj(x)``.
    """
    P = picture or compact_picture(X)
    A, K = X.algebra, P.algebra
    d = X.dim
    th = rank_one_tensor(X, X)  # theta[m, i] = rank_one(e_m, e_i)
    G = np.zeros((d, d, K.dim), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            G[i, j] = P.coords_of(th[i, j])
    # x* . T = (T^# x)*
    ops = P.operators
    R = np.array([np.conj(X.gram_inv @ op.conj().T @ X.gram) for op in ops])
    mod = HilbertModule(K, R, G, tol=tol)
    # a . x* = (x a*)*
    L = np.array([np.conj(X.right(A.star(e))) for e in np.eye(A.dim)])
    return Correspondence(A, mod, L, tol=tol)


def haagerup_norm_via_compacts(Y, X, ys, xs):
    """Norm of ``sum_i y_i (x) x_i*`` as the operator norm of ``sum_i theta_{y_i, x_i}``."""
    if X.algebra != Y.algebra:
        raise AlgebraMismatch("Y and X must be modules over the same algebra")
    if len(ys) == 0 or X.dim == 0 or Y.dim == 0:
        return 0.0
    th = rank_one_tensor(Y, X)
    M = sum(np.einsum("m,i,mipj->pj", y, np.conj(x), th, optimize=True) for y, x in zip(ys, xs))
    return map_norm(ModuleMap(X, Y, M))


def haagerup_norm_via_tensor(Y, X, ys, xs, dual=None):
    """Same norm computed as a module norm in ``Y (x)_A X*`` over ``K_A(X)``."""
    if len(ys) == 0:
        return 0.0
    dual = dual or dual_correspondence(X)
    T = internal_tensor(Y, dual)
    v = sum(np.kron(y, np.conj(x)) for y, x in zip(ys, xs))
    return T.module.norm(T.factor(v))
