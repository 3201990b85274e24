"""Conditional expectations, Frank-Kirchberg index and group averaging."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .adjunction import InnerProductCandidate, compact_coefficients, delta_of_one
from .algebra import MultiMatrixAlgebra, choi_block, is_completely_positive, span_basis, wedderburn
from .errors import InfiniteIndex, InvalidAction, NoLocalAdjoint
from .linalg import DEFAULT_TOL, eigh
from .module import _scale, rank_one_tensor
from .tensor import Correspondence, compact_picture


class ConditionalExpectation:
    """``phi: C -> C`` with range ``j(A)`` for a unital embedding ``j: A -> C``.

    ``embed`` is the ``dim C x dim A`` coordinate matrix of ``j`` and ``map`` the
    ``dim C x dim C`` matrix of ``phi``.  ``picture`` optionally records that
    ``C`` is ``K_B(F)`` for a module ``F``.
    """

    def __init__(self, ambient, sub, embed, map, picture=None, tol=DEFAULT_TOL, validate=True):
        self.ambient = ambient
        self.sub = sub
        self.embed = np.asarray(embed, dtype=np.complex128)
        self.map = np.asarray(map, dtype=np.complex128)
        self.picture = picture
        self.tol = tol
        if self.embed.shape != (ambient.dim, sub.dim) or self.map.shape != (ambient.dim, ambient.dim):
            raise ValueError("embedding or map has the wrong shape")
        if validate:
            self.validate()

    def __call__(self, c):
        return self.map @ c

    def restrict(self, c):
        """``j^{-1}(phi(c))``."""
        return np.linalg.lstsq(self.embed, self.map @ c, rcond=None)[0]

    def residuals(self):
        C, A, j, P = self.ambient, self.sub, self.embed, self.map
        eyeA, eyeC = np.eye(A.dim), np.eye(C.dim)
        res = {}
        res["unital"] = float(np.abs(j @ A.unit_coords - C.unit_coords).max())
        res["multiplicative"] = max(
            float(np.abs(C.mul(j[:, a], j[:, b]) - j @ A.mul(eyeA[a], eyeA[b])).max())
            for a in range(A.dim) for b in range(A.dim))
        res["star"] = float(np.abs(C.star(j.T).T - j @ np.array([A.star(e) for e in eyeA]).T).max())
        res["idempotent"] = float(np.abs(P @ P - P).max())
        res["onto"] = float(np.abs(P @ j - j).max())
        pinv = np.linalg.pinv(j)
        res["range"] = float(np.abs(j @ (pinv @ P) - P).max())
        worst = 0.0
        for a in range(A.dim):
            ja = j[:, a]
            for c in range(C.dim):
                lhs = P @ C.mul(ja, eyeC[c])
                rhs = C.mul(ja, P[:, c])
                worst = max(worst, float(np.abs(lhs - rhs).max()))
                lhs = P @ C.mul(eyeC[c], ja)
                rhs = C.mul(P[:, c], ja)
                worst = max(worst, float(np.abs(lhs - rhs).max()))
        res["bimodule"] = worst
        return res

    def validate(self):
        res = self.residuals()
        for name, r in res.items():
            if r > 1e-8 * max(_scale(self.map), 1.0):
                raise ValueError(f"not a conditional expectation: {name} residual {r:.3e}")
        # positive idempotent bimodule maps onto subalgebras are completely positive,
        # so the Choi test doubles as the positivity check
        ok, worst = is_completely_positive(self.map, self.ambient, self.ambient, self.tol)
        if not ok:
            raise ValueError(f"not a conditional expectation: not positive (Choi eigenvalue {worst:.3e})")
        return res


def identity_expectation(C):
    eye = np.eye(C.dim)
    return ConditionalExpectation(C, C, eye, eye)


@dataclass
class FKIndex:
    lam_lower: float
    lam_upper: float
    kappa: float
    lam_exact: bool

    @property
    def lam(self):
        return self.lam_upper if self.lam_exact else None

    @property
    def gap(self):
        """True when the search bound for lambda lies strictly below kappa, so
        lambda may be smaller than kappa."""
        return self.lam_lower < self.kappa * (1 - 1e-9)


def _density(phi):
    """Density of ``tau o phi`` block by block."""
    C = phi.ambient
    w = C.trace_weights @ phi.map
    return C.blocks_of(w.conj())


def _lambda_search(phi, samples=400, rng=None):
    """``sup_xi xi* phi(xi xi*)^+ xi`` over unit vectors in each block (lower bound for lambda)."""
    rng = np.random.default_rng(rng)
    C = phi.ambient
    best = 0.0

    def value(k, xi):
        n = C.block_sizes[k]
        xi = xi / np.linalg.norm(xi)
        P = np.zeros(C.dim, dtype=np.complex128)
        o = C.offsets[k]
        P[o:o + n * n] = np.outer(xi, xi.conj()).reshape(-1)
        img = C.blocks_of(phi.map @ P)[k]
        img = 0.5 * (img + img.conj().T)
        w, v = eigh(img)
        keep = w > 1e-12 * max(w[-1], 1e-300)
        coef = v[:, keep].conj().T @ xi
        outside = np.linalg.norm(xi - v[:, keep] @ coef)
        if outside > 1e-9:
            return np.inf
        return float(np.sum(np.abs(coef) ** 2 / w[keep]))

    for k, n in enumerate(C.block_sizes):
        draws = [np.eye(n)[i] + 0j for i in range(n)]
        draws += [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(samples)]
        vals = [(value(k, x), x) for x in draws]
        vals.sort(key=lambda t: -t[0])
        best = max(best, vals[0][0])
        for v0, x in vals[:3]:
            if not np.isfinite(v0) or n == 1:
                continue

            def obj(p, k=k, n=n):
                return -value(k, p[:n] + 1j * p[n:])

            out = minimize(obj, np.concatenate([x.real, x.imag]), method="L-BFGS-B", options={"maxiter": 100})
            best = max(best, -float(out.fun))
    return best


def fk_index(phi, rng=None, samples=400):
    """Frank-Kirchberg constants of a conditional expectation.

    ``kappa`` is the least constant with ``kappa phi - id`` completely positive:
    block by block ``kappa = max_k w* J_k^+ w`` for the Choi matrices ``J_k`` of
    ``phi`` and ``w = vec(1)``.  ``lambda`` is exact on commutative ambient
    algebras and otherwise bracketed by a search and ``kappa``.
    """
    C = phi.ambient
    dens = _density(phi)
    for D in dens:
        w = eigh(0.5 * (D + D.conj().T))[0]
        if w[0] <= 1e-12 * max(w[-1], 1e-300):
            raise InfiniteIndex("expectation is not faithful")
    kappa = 0.0
    for k, n in enumerate(C.block_sizes):
        J = choi_block(phi.map, C, C, k, k)
        J = 0.5 * (J + J.conj().T)
        om = np.eye(n).reshape(-1)
        w, v = eigh(J)
        keep = w > 1e-12 * max(w[-1], 1e-300) * n
        coef = v[:, keep].conj().T @ om
        if np.linalg.norm(om - v[:, keep] @ coef) > 1e-8 * np.sqrt(n):
            raise InfiniteIndex("identity is not dominated by any multiple of the expectation")
        kappa = max(kappa, float(np.sum(np.abs(coef) ** 2 / w[keep])))
    if all(n == 1 for n in C.block_sizes):
        lam = max(1.0 / phi.map[i, i].real for i in range(C.dim))
        return FKIndex(lam, lam, kappa, True)
    lo = _lambda_search(phi, samples=samples, rng=rng)
    return FKIndex(min(lo, kappa), kappa, kappa, abs(lo - kappa) <= 1e-9 * kappa)


# -- expectations and candidates ---------------------------------------------------

def expectation_to_candidate(phi, F_module, tol=None):
    """Candidate ``<f1*, f2*> = j^{-1}(phi(theta_{f1, f2}))`` on ``F`` viewed as a
    correspondence from the range algebra of ``phi`` (acting through ``K_B(F)``)."""
    P = phi.picture
    if P is None or P.X is not F_module:
        P = compact_picture(F_module)
        if P.algebra != phi.ambient:
            raise ValueError("expectation is not defined on the compact operators of this module")
    try:
        fk_index(phi)
    except InfiniteIndex as exc:
        raise NoLocalAdjoint(str(exc)) from exc
    A = phi.sub
    L = np.array([P.to_operator(phi.embed[:, a]) for a in range(A.dim)])
    F = Correspondence(A, F_module, L, tol=tol or F_module.tol)
    d = F_module.dim
    th = rank_one_tensor(F_module, F_module)
    jp = np.linalg.pinv(phi.embed)
    H = np.zeros((d, d, A.dim), dtype=np.complex128)
    for i in range(d):
        for k in range(d):
            H[i, k] = jp @ (phi.map @ P.coords_of(th[i, k]))
    return InnerProductCandidate(F, H, tol=tol)


def induced_expectation(cand, picture=None):
    """``delta(1)^{-1} delta`` as a map on the coordinates of ``K_B(F)``, composed
    with the left action ``A -> K_B(F)``."""
    P = picture or compact_picture(cand.F.module)
    A, F = cand.A, cand.F
    d1 = delta_of_one(cand)
    blocks = A.blocks_of(d1)
    inv = A.from_blocks([np.linalg.pinv(b) for b in blocks])
    j = np.array([P.coords_of(F.act(e)) for e in np.eye(A.dim)]).T
    cols = []
    for op in P.operators:
        c = compact_coefficients(F.module, op)
        val = np.einsum("ij,ija->a", c, cand.pairing)
        cols.append(j @ A.mul(inv, val))
    return np.array(cols).T


def block_expectation(K, groups, sizes, omegas=None, mus=None, picture=None):
    """Expectation of ``K = M_{n_1} + ...`` onto a diagonally embedded subalgebra.

    ``groups[g]`` lists blocks of ``K`` of a common size ``sizes[g] * m_g``; the
    block ``g`` of the subalgebra is ``M_{sizes[g]}`` embedded as ``x (x) 1_{m_g}``
    in each of them.  ``omegas[k]`` is a density on ``C^{m_g}`` for block ``k``,
    ``mus[k]`` the weight of block ``k`` inside its group.
    """
    A = MultiMatrixAlgebra(sizes)
    j = np.zeros((K.dim, A.dim), dtype=np.complex128)
    Pm = np.zeros((K.dim, K.dim), dtype=np.complex128)
    omegas = omegas or {}
    mus = mus or {}
    for g, members in enumerate(groups):
        p = sizes[g]
        for k in members:
            m = K.block_sizes[k] // p
            if m * p != K.block_sizes[k]:
                raise ValueError(f"block {k} of size {K.block_sizes[k]} does not contain M_{p} with multiplicity")
            for a in range(p):
                for b in range(p):
                    for s in range(m):
                        j[K.index(k, a * m + s, b * m + s), A.index(g, a, b)] = 1.0
        for k in members:
            m = K.block_sizes[k] // p
            om = np.asarray(omegas.get(k, np.eye(m) / m), dtype=np.complex128)
            mu = mus.get(k, 1.0 / len(members))
            # phi(T) = j( sum_k mu_k (id (x) omega_k)(T_k) )
            for a in range(p):
                for b in range(p):
                    for s in range(m):
                        for t in range(m):
                            col = K.index(k, a * m + s, b * m + t)
                            Pm[:, col] += mu * om[t, s] * j[:, A.index(g, a, b)]
    return ConditionalExpectation(K, A, j, Pm, picture=picture)


# -- group actions --------------------------------------------------------------

class ProjectiveTwistedAction:
    """A finite group acting on a Hilbert ``B``-module by twisted automorphisms.

    ``table[g, h]`` is the index of ``gh`` (index 0 is the identity);
    ``carriers[g]`` the matrix of ``U_g``; ``base[g]`` the coordinate matrix of
    the automorphism of ``B``; ``twist[g, h]`` the coordinates of ``u(g, h)``
    with ``U_g U_h = U_{gh} . u(g, h)``.
    """

    def __init__(self, module, table, carriers, base=None, twist=None, tol=DEFAULT_TOL, validate=True):
        self.module = module
        self.table = np.asarray(table, dtype=int)
        self.carriers = np.asarray(carriers, dtype=np.complex128)
        B = module.algebra
        n = self.table.shape[0]
        self.base = (np.asarray(base, dtype=np.complex128) if base is not None
                     else np.repeat(np.eye(B.dim)[None], n, axis=0).astype(np.complex128))
        if twist is None:
            twist = np.broadcast_to(B.unit_coords, (n, n, B.dim))
        self.twist = np.asarray(twist, dtype=np.complex128)
        self.tol = tol
        if validate:
            self.validate()

    @property
    def order(self):
        return self.table.shape[0]

    def residuals(self):
        F, B = self.module, self.module.algebra
        T, U, al, u = self.table, self.carriers, self.base, self.twist
        n = self.order
        res = {}
        e = np.arange(n)
        res["group"] = float(max(np.abs(T[0] - e).max(), np.abs(T[:, 0] - e).max(),
                                 max(abs(T[T[a, b], c] - T[a, T[b, c]]) for a in range(n)
                                     for b in range(n) for c in range(n))))
        eyeB = np.eye(B.dim)
        auto = 0.0
        for g in range(n):
            for a in range(B.dim):
                for b in range(B.dim):
                    auto = max(auto, float(np.abs(al[g] @ B.mul(eyeB[a], eyeB[b])
                                                  - B.mul(al[g][:, a], al[g][:, b])).max()))
                auto = max(auto, float(np.abs(al[g] @ B.star(eyeB[a]) - B.star(al[g][:, a])).max()))
        res["automorphism"] = auto
        # (i) U_g(f b) = U_g(f) g(b)
        r1 = 0.0
        for g in range(n):
            for b in range(B.dim):
                r1 = max(r1, float(np.abs(U[g] @ F.action[b] - F.right(al[g][:, b]) @ U[g]).max()))
        res["covariance"] = r1
        # (ii) <U f1, U f2> = g(<f1, f2>)
        r2 = 0.0
        for g in range(n):
            lhs = np.einsum("ki,lj,klc->ijc", np.conj(U[g]), U[g], F.inner, optimize=True)
            rhs = np.einsum("cb,ijb->ijc", al[g], F.inner)
            r2 = max(r2, float(np.abs(lhs - rhs).max()))
        res["isometry"] = r2
        # (iii) U_g U_h = U_gh . u(g, h), u unitary
        r3 = 0.0
        for g in range(n):
            for h in range(n):
                r3 = max(r3, float(np.abs(U[g] @ U[h] - F.right(u[g, h]) @ U[T[g, h]]).max()))
                r3 = max(r3, float(np.abs(B.mul(B.star(u[g, h]), u[g, h]) - B.unit_coords).max()))
        res["twist"] = r3
        return res

    def validate(self):
        res = self.residuals()
        scale = max(_scale(self.carriers), 1.0)
        for name, r in res.items():
            if r > 1e-10 * scale * 10:
                raise InvalidAction(f"action condition {name} fails (residual {r:.3e})")
        return res

    def twisted(self):
        """True when some ``u(g, h)`` differs from the unit."""
        return bool(np.abs(self.twist - self.module.algebra.unit_coords).max() > 1e-12)


@dataclass
class GroupAverage:
    expectation: ConditionalExpectation
    picture: object
    conjugations: np.ndarray
    rank: int
    character_count: float


def group_average(action, seed=0):
    """``phi(T) = (1/|W|) sum_w U_w T U_w^{-1}`` on ``K_B(F)`` and its fixed-point algebra."""
    F = action.module
    P = compact_picture(F, seed=seed)
    K = P.algebra
    n = action.order
    ops = P.operators
    Ms = []
    for g in range(n):
        U = action.carriers[g]
        Ui = np.linalg.inv(U)
        Ms.append(np.array([P.coords_of(U @ op @ Ui) for op in ops]).T)
    Ms = np.array(Ms)
    phi = Ms.mean(axis=0)
    # fixed-point algebra, in the similarity frame of F
    rng_basis = span_basis(np.array([P.sub.embed(phi[:, a]) for a in range(K.dim)]))
    S = wedderburn(rng_basis, seed=seed)
    j = np.array([P.sub.coords_of(u) for u in S.units]).T
    E = ConditionalExpectation(K, S.algebra, j, phi, picture=P)
    rank = int(np.linalg.matrix_rank(phi, tol=1e-9))
    count = float(np.mean([np.trace(M).real for M in Ms]))
    return GroupAverage(E, P, Ms, rank, count)


def w_uniqueness_check(action, cand, average=None, tol=1e-10):
    """True iff the normalized expectation induced by ``cand`` equals the group average.

    Returns ``(flag, residual)``.
    """
    avg = average or group_average(action)
    if cand.F.module is not action.module and cand.F.module.dim != action.module.dim:
        raise ValueError("candidate and action live on different modules")
    psi = induced_expectation(cand, avg.picture)
    phi = avg.expectation.map
    res = float(np.abs(psi - phi).max())
    return res <= tol * max(_scale(phi), 1.0) * 10, res
