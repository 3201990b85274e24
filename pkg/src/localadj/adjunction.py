"""Local adjunction data for a correspondence and a candidate inner product on its conjugate."""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .algebra import CentralIdeal, decomposition_residual, is_completely_positive
from .errors import CandidateInvalid, DegenerateRepresentation, ModuleInvalid, SingularPhi
from .linalg import eigh, operator_norm, psd_inv_sqrt
from .module import (HilbertModule, ModuleMap, _scale, adjoint_of, adjoint_residual, algebra_module,
                     conj_os_norm, direct_sum, linearity_residual, map_norm, module_maps_basis, os_norm,
                     rank_one_tensor)
from .tensor import (Correspondence, compact_picture, internal_tensor, representation,
                     tensor_maps)


class InnerProductCandidate:
    """``pairing[i, j] = <e_i*, e_j*>`` in ``A`` for a correspondence ``F: A -> B``.

    The conjugate ``E = F*`` uses conjugated coordinates; it is a Hilbert
    ``A``-module with ``x* . a = (a* x)*`` and carries ``b . x* = (x b*)*``.
    """

    def __init__(self, F, pairing, tol=None, validate=True):
        self.F = F
        self.tol = tol or F.tol
        A, B = F.source, F.target
        self.pairing = np.asarray(pairing, dtype=np.complex128)
        d = F.dim
        if self.pairing.shape != (d, d, A.dim):
            raise CandidateInvalid(f"pairing of shape {self.pairing.shape}, expected {(d, d, A.dim)}")
        R = np.array([np.conj(F.act(A.star(e))) for e in np.eye(A.dim)]).reshape(A.dim, d, d)
        L = np.array([np.conj(F.module.right(B.star(e))) for e in np.eye(B.dim)]).reshape(B.dim, d, d)
        try:
            mod = HilbertModule(A, R, self.pairing, tol=self.tol, validate=validate)
            self.E = Correspondence(B, mod, L, tol=self.tol, validate=validate)
        except ModuleInvalid as exc:
            raise CandidateInvalid(f"candidate does not make F* a correspondence: {exc}") from exc

    @property
    def A(self):
        return self.F.source

    @property
    def B(self):
        return self.F.target

    @property
    def dim(self):
        return self.F.dim

    def swapped(self):
        """The transposed datum: ``E`` as a correspondence ``B -> A`` with pairing ``<e_i, e_j>``."""
        return InnerProductCandidate(self.E, self.F.module.inner, tol=self.tol)


# -- epsilon and delta -----------------------------------------------------------

@dataclass(eq=False)
class BimoduleMap:
    tensor: object
    target: HilbertModule
    matrix: np.ndarray
    residuals: dict

    def as_module_map(self):
        return ModuleMap(self.tensor.module, self.target, self.matrix)


def _bimodule_map(T, alg_matrix, C, left_alg):
    """Restrict an algebraic-tensor map into ``C`` to the quotient and record residuals."""
    target = algebra_module(C)
    M = alg_matrix @ T.Q
    res = {
        "well_defined": float(np.abs(alg_matrix @ T.null_projector).max()) if alg_matrix.size else 0.0,
        "right_linear": linearity_residual(M, T.module, target),
    }
    if T.left is not None and T.dim:
        res["left_linear"] = float(max(np.abs(C.left_mult[c] @ M - M @ T.left[c]).max()
                                       for c in range(left_alg.dim)))
    else:
        res["left_linear"] = 0.0
    return BimoduleMap(T, target, M, res)


def epsilon_map(cand):
    """``E (x)_A F -> B``, ``e_i* (x) e_j -> <e_i, e_j>``."""
    T = internal_tensor(cand.E, cand.F)
    d = cand.dim
    alg = cand.F.module.inner.reshape(d * d, cand.B.dim).T
    return _bimodule_map(T, alg, cand.B, cand.B)


def delta_map(cand):
    """``F (x)_B E -> A``, ``e_i (x) e_j* -> <e_i*, e_j*>``."""
    T = internal_tensor(cand.F, cand.E)
    d = cand.dim
    alg = cand.pairing.reshape(d * d, cand.A.dim).T
    return _bimodule_map(T, alg, cand.A, cand.A)


def identity_coefficients(X):
    """Hermitian ``c`` with ``sum_ij c_ij theta_{e_i, e_j} = 1`` on ``X``."""
    d = X.dim
    if d == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    th = rank_one_tensor(X, X).reshape(d * d, d * d).T
    c, *_ = np.linalg.lstsq(th, np.eye(d).reshape(-1), rcond=None)
    c = c.reshape(d, d)
    return 0.5 * (c + c.conj().T)


def compact_coefficients(X, op):
    """Minimum-norm ``c`` with ``sum_ij c_ij theta_{e_i, e_j} = op``."""
    d = X.dim
    th = rank_one_tensor(X, X).reshape(d * d, d * d).T
    c, *_ = np.linalg.lstsq(th, np.asarray(op).reshape(-1), rcond=None)
    return c.reshape(d, d)


def epsilon_of_one(cand):
    """``epsilon`` applied to the identity of ``K_A(F*)``, as coordinates in ``B``."""
    c = identity_coefficients(cand.E.module)
    return np.einsum("ij,ijb->b", c, cand.F.module.inner)


def delta_of_one(cand):
    """``delta`` applied to the identity of ``K_B(F)``, as coordinates in ``A``."""
    c = identity_coefficients(cand.F.module)
    return np.einsum("ij,ija->a", c, cand.pairing)


def numerical_indices(cand):
    """``(l, r) = (||epsilon(1)||, ||delta(1)||)``."""
    if cand.dim == 0:
        return 0.0, 0.0
    return cand.B.norm(epsilon_of_one(cand)), cand.A.norm(delta_of_one(cand))


# -- randomized family search --------------------------------------------------------

def parseval_frame(X):
    """Columns ``w_k`` with ``sum_k theta_{w_k, w_k} = 1``: ``w_k = S^{-1/2} e_k``."""
    d = X.dim
    th = rank_one_tensor(X, X)
    S = sum(th[k, k] for k in range(d))
    g, gi = X.gram_sqrt, X.gram_inv_sqrt
    Ssim = g @ S @ gi
    Ssim = 0.5 * (Ssim + Ssim.conj().T)
    return gi @ psd_inv_sqrt(Ssim) @ g


def _ratio_factory(cand, side):
    F, E = cand.F.module, cand.E.module
    if side == "l":
        num_mod, den_mod = F, E  # f in F, f* in E
    else:
        num_mod, den_mod = E, F  # f in F: <f*, f*> in A, theta_{f, f} on F
    d = den_mod.dim
    # K = sum_f theta_{f, f} is linear in the outer-product matrix sum_f f f^H
    th = rank_one_tensor(den_mod, den_mod).reshape(d * d, d * d)
    g, gi = den_mod.gram_sqrt, den_mod.gram_inv_sqrt
    C = num_mod.algebra
    inner = num_mod.inner.reshape(d * d, -1)
    conj_num = side != "l"
    conj_den = side == "l"

    def ratio(fam):
        fam = np.atleast_2d(fam)
        fn = np.conj(fam) if conj_num else fam
        fd = np.conj(fam) if conj_den else fam
        num = (fn.conj().T @ fn).reshape(-1) @ inner
        K = ((fd.T @ fd.conj()).reshape(-1) @ th).reshape(d, d)
        den = operator_norm(g @ K @ gi)
        return C.norm(num) / den if den > 1e-300 else 0.0

    def top(blocks):
        best = (-np.inf, 0, None)
        for k, b in enumerate(blocks):
            w, v = eigh(0.5 * (b + b.conj().T))
            if w[-1] > best[0]:
                best = (w[-1], k, v[:, -1])
        return best

    def value_and_grad(fam):
        """Ratio and its gradient in (re, im) of ``fam``, through top eigenvectors."""
        fn = np.conj(fam) if conj_num else fam
        fd = np.conj(fam) if conj_den else fam
        num = (fn.conj().T @ fn).reshape(-1) @ inner
        N, k, u = top(C.blocks_of(num))
        c = np.zeros(C.dim, dtype=np.complex128)
        n = C.block_sizes[k]
        c[C.offsets[k]:C.offsets[k] + n * n] = np.outer(np.conj(u), u).reshape(-1)
        Gn = (inner @ c).reshape(d, d)
        A1, A2 = fn @ Gn.T, np.conj(fn) @ Gn
        gx_n, gy_n = np.real(A1 + A2), np.imag(A1 - A2)
        if conj_num:
            gy_n = -gy_n
        K = ((fd.T @ fd.conj()).reshape(-1) @ th).reshape(d, d)
        D, _, v = top([g @ K @ gi])
        if D <= 1e-300:
            return 0.0, np.zeros(fam.shape), np.zeros(fam.shape)
        Wd = np.outer(g.T @ np.conj(v), gi @ v)
        Gd = (th @ Wd.reshape(-1)).reshape(d, d)
        B1, B2 = fd @ Gd, np.conj(fd) @ Gd.T
        gx_d, gy_d = np.real(B1 + B2), np.imag(B1 - B2)
        if conj_den:
            gy_d = -gy_d
        R = N / D
        return R, (gx_n - R * gx_d) / D, (gy_n - R * gy_d) / D

    ratio.value_and_grad = value_and_grad
    return ratio


def index_search(cand, side, samples=5000, family_max=4, rng=None, refine=5, frames=True):
    """Lower bound for the numerical index ``l`` (side "l") or ``r`` (side "r")
    by sampling families of at most ``family_max`` vectors of ``F``, then
    refining the best draws with L-BFGS.

    With ``frames`` the canonical Parseval frame of the relevant conjugate
    module is tried as an extra family.
    """
    rng = np.random.default_rng(rng)
    d = cand.dim
    if d == 0:
        return 0.0
    ratio = _ratio_factory(cand, side)
    draws = []
    for _ in range(samples):
        k = int(rng.integers(1, family_max + 1))
        fam = rng.standard_normal((k, d)) + 1j * rng.standard_normal((k, d))
        draws.append((ratio(fam), fam))
    draws.sort(key=lambda t: -t[0])
    best = draws[0][0]
    for val, fam in draws[:refine]:
        shape = fam.shape

        def obj(v, shape=shape):
            f = v[:v.size // 2].reshape(shape) + 1j * v[v.size // 2:].reshape(shape)
            val, gx, gy = ratio.value_and_grad(f)
            return -val, -np.concatenate([gx.ravel(), gy.ravel()])

        x0 = np.concatenate([fam.real.ravel(), fam.imag.ravel()])
        out = minimize(obj, x0, jac=True, method="L-BFGS-B", options={"maxiter": 200})
        best = max(best, -float(out.fun))
    if frames:
        mod = cand.E.module if side == "l" else cand.F.module
        W = parseval_frame(mod)
        fam = (np.conj(W) if side == "l" else W).T
        best = max(best, ratio(fam))
    return float(best)


# -- unit, counit, ideals ----------------------------------------------------------

def _compact_identification(T, left_mod):
    """Matrix sending quotient coordinates of ``X (x) X*`` to vectorized operators on ``X``,
    ``e_i (x) e_j* -> theta_{e_i, e_j}``."""
    th = rank_one_tensor(left_mod, left_mod)  # (d, d, d, d)
    d = left_mod.dim
    J = th.reshape(d * d, d * d).T  # column (i, j) -> vec theta_ij
    return J @ T.Q


@dataclass
class UnitCounit:
    eta: np.ndarray
    counit_adjoint: np.ndarray
    unit_residual: float
    counit_residual: float
    eta_adjoint_residual: float
    counit_adjoint_residual: float
    delta_eta_residual: float
    delta_one: np.ndarray

    @property
    def unit_exists(self):
        return True

    @property
    def counit_exists(self):
        return True


def unit_counit(cand, eps=None, dlt=None):
    """``eta = delta^#`` and ``epsilon^#``, compared against the left actions.

    ``unit_residual`` measures ``eta(a) = a . 1`` under ``F (x)_B F* = K_B(F)``;
    ``counit_residual`` the same for ``epsilon^#`` and the left action of ``B`` on ``F*``.
    ``delta_eta_residual`` measures ``delta(eta(a)) = a delta(1)``.
    """
    eps = eps or epsilon_map(cand)
    dlt = dlt or delta_map(cand)
    A, B = cand.A, cand.B
    F, E = cand.F, cand.E
    dmap = dlt.as_module_map()
    emap = eps.as_module_map()
    eta = adjoint_of(dmap, cand.tol)
    eps_s = adjoint_of(emap, cand.tol)
    J = _compact_identification(dlt.tensor, F.module)
    Jc = _compact_identification(eps.tensor, E.module)
    ures = max((float(np.abs(J @ eta.matrix[:, a] - F.left[a].reshape(-1)).max()) for a in range(A.dim)),
               default=0.0)
    cres = max((float(np.abs(Jc @ eps_s.matrix[:, b] - E.left[b].reshape(-1)).max()) for b in range(B.dim)),
               default=0.0)
    d1 = delta_of_one(cand)
    de = dmap.matrix @ eta.matrix  # a -> delta(eta(a))
    target = np.array([A.mul(e, d1) for e in np.eye(A.dim)]).T
    return UnitCounit(eta.matrix, eps_s.matrix, ures, cres, adjoint_residual(dmap, eta),
                      adjoint_residual(emap, eps_s), float(np.abs(de - target).max()), d1)


@dataclass
class IdealDecomposition:
    ideal_A: CentralIdeal
    complement_A: CentralIdeal
    ideal_B: CentralIdeal
    complement_B: CentralIdeal
    residual_A: float
    residual_B: float
    complementary: bool


def ideal_decomposition(cand, rel=1e-10):
    """Blocks of ``A`` reached by ``<F*, F*>`` and blocks acting as zero on ``F``; likewise for ``B``."""
    A, B, F = cand.A, cand.B, cand.F
    H, G = cand.pairing, F.module.inner

    def support(alg, tens):
        sc = _scale(tens)
        return tuple(k for k in range(alg.nblocks)
                     if np.abs(tens[..., alg.offsets[k]:alg.offsets[k + 1]]).max(initial=0.0) > rel * sc)

    def kernel(alg, op):
        sc = max(_scale(op(alg.unit_coords)), 1.0)
        return tuple(k for k in range(alg.nblocks)
                     if np.abs(op(alg.block_projection([k]))).max(initial=0.0) <= rel * sc)

    sA, kA = support(A, H), kernel(A, F.act)
    sB, kB = support(B, G), kernel(B, F.module.right)
    iA, iB = CentralIdeal(A, sA), CentralIdeal(B, sB)
    comp = (set(sA) | set(kA) == set(range(A.nblocks)) and not set(sA) & set(kA)
            and set(sB) | set(kB) == set(range(B.nblocks)) and not set(sB) & set(kB))
    return IdealDecomposition(iA, CentralIdeal(A, kA), iB, CentralIdeal(B, kB),
                              decomposition_residual(iA), decomposition_residual(iB), comp)


# -- Phi ----------------------------------------------------------------------------

class PhiMap:
    """``K_B(X (x) F, Y) -> K_A(X, Y (x) F*)``, ``theta_{y, x (x) f} -> theta_{y (x) f*, x}``."""

    def __init__(self, cand, X, Y, tol=None):
        self.cand, self.X, self.Y = cand, X, Y
        tol = tol or cand.tol
        self.XF = internal_tensor(X, cand.F, tol)
        self.YE = internal_tensor(Y, cand.E, tol)
        dX, dY, d = X.dim, Y.dim, cand.dim
        XFm, YEm = self.XF.module, self.YE.module
        th_s = rank_one_tensor(Y, XFm)  # (dY, dXF, dY, dXF)
        th_t = rank_one_tensor(YEm, X)  # (dYE, dX, dYE, dX)
        Qs = self.XF.Q.reshape(dX, d, -1)  # conj(Q)^H e = Q row; theta antilinear in second slot
        Qt = np.conj(self.YE.Q).reshape(dY, d, -1)
        S = np.einsum("ikq,mqab->mikab", Qs, th_s)
        T = np.einsum("mkq,qiab->mikab", Qt, th_t)
        P = dY * dX * d
        self.src_shape = (dY, XFm.dim)
        self.tgt_shape = (YEm.dim, dX)
        M = S.reshape(P, -1).T
        N = T.reshape(P, -1).T
        self.M, self.N = M, N
        if P == 0 or M.size == 0 or N.size == 0:
            self.matrix = np.zeros((N.shape[0], M.shape[0]), dtype=np.complex128)
            self.inverse = np.zeros((M.shape[0], N.shape[0]), dtype=np.complex128)
            self.well_defined_residual = 0.0
            self.rank_source = self.rank_target = 0
            self.inverse_residual = 0.0
            return
        u, s, vh = np.linalg.svd(M)
        rM = int(np.sum(s > 1e-10 * s[0] * max(M.shape))) if s.size and s[0] > 0 else 0
        ut, st, vth = np.linalg.svd(N)
        rN = int(np.sum(st > 1e-10 * st[0] * max(N.shape))) if st.size and st[0] > 0 else 0
        null_M = vh[rM:].conj().T
        self.well_defined_residual = float(np.abs(N @ null_M).max()) if null_M.size else 0.0
        null_N = vth[rN:].conj().T
        self.inverse_well_defined_residual = float(np.abs(M @ null_N).max()) if null_N.size else 0.0
        self.rank_source, self.rank_target = rM, rN
        self.matrix = N @ np.linalg.pinv(M, rcond=1e-12)
        self.inverse = M @ np.linalg.pinv(N, rcond=1e-12)
        # Phi^{-1} Phi = id on the span of the generators (which is all module maps)
        self.inverse_residual = float(max(np.abs(self.inverse @ self.matrix @ M - M).max(),
                                          np.abs(self.matrix @ self.inverse @ N - N).max()))
        self.dim_source = module_maps_basis(XFm, Y).shape[0]
        self.dim_target = module_maps_basis(X, YEm).shape[0]

    @property
    def invertible(self):
        return self.rank_source == self.rank_target == getattr(self, "dim_source", 0) == getattr(self, "dim_target", 0)

    def __call__(self, S):
        S = S.matrix if isinstance(S, ModuleMap) else S
        return ModuleMap(self.X, self.YE.module, (self.matrix @ S.reshape(-1)).reshape(self.tgt_shape))

    def inv(self, T):
        T = T.matrix if isinstance(T, ModuleMap) else T
        return ModuleMap(self.XF.module, self.Y, (self.inverse @ T.reshape(-1)).reshape(self.src_shape))


def phi_map(cand, X=None, Y=None):
    """``Phi_{X,Y}``; defaults to ``X = A``, ``Y = B``. Raises ``SingularPhi`` if not invertible."""
    X = X or algebra_module(cand.A)
    Y = Y or algebra_module(cand.B)
    P = PhiMap(cand, X, Y)
    if cand.dim and not P.invertible:
        raise SingularPhi(f"Phi has ranks {P.rank_source}/{P.rank_target} on spaces of dimension "
                          f"{P.dim_source}/{P.dim_target}")
    return P


def _random_map(X, Y, rng, basis=None):
    basis = module_maps_basis(X, Y) if basis is None else basis
    c = rng.standard_normal(basis.shape[0]) + 1j * rng.standard_normal(basis.shape[0])
    return np.tensordot(c, basis, axes=([0], [0]))


def naturality_residuals(cand, X, Y, X2, Y2, trials=100, rng=None):
    """Max residuals of ``Phi(S (K (x) 1)) = Phi(S) K`` and ``Phi(L S) = (L (x) 1) Phi(S)``."""
    rng = np.random.default_rng(rng)
    P = phi_map(cand, X, Y)
    P_x = phi_map(cand, X2, Y)
    P_y = phi_map(cand, X, Y2)
    bS = module_maps_basis(P.XF.module, Y)
    bK = module_maps_basis(X2, X)
    bL = module_maps_basis(Y, Y2)
    r1 = r2 = 0.0
    for _ in range(trials):
        S = _random_map(P.XF.module, Y, rng, bS)
        K = _random_map(X2, X, rng, bK)
        L = _random_map(Y, Y2, rng, bL)
        KF = tensor_maps(K, np.eye(cand.dim), P_x.XF, P.XF)
        LE = tensor_maps(L, np.eye(cand.dim), P.YE, P_y.YE)
        lhs = P_x(S @ KF).matrix
        rhs = P(S).matrix @ K
        scale = max(_scale(lhs), 1.0)
        r1 = max(r1, float(np.abs(lhs - rhs).max()) / scale)
        lhs = P_y(L @ S).matrix
        rhs = LE @ P(S).matrix
        scale = max(_scale(lhs), 1.0)
        r2 = max(r2, float(np.abs(lhs - rhs).max()) / scale)
    return r1, r2


def amplified_operator_norm(blocks, src, tgt):
    """Norm of an ``n x n`` matrix of module maps ``src -> tgt`` in ``M_n(K(src, tgt))``."""
    blocks = np.asarray(blocks)
    n = blocks.shape[0]
    if src.dim == 0 or tgt.dim == 0:
        return 0.0
    sim = np.einsum("pq,ijqr,rs->ipjs", tgt.gram_sqrt, blocks, src.gram_inv_sqrt, optimize=True)
    return operator_norm(sim.reshape(n * tgt.dim, n * src.dim))


def amplified_isometry_residual(P, levels=4, trials=20, rng=None):
    """Max relative change of amplified norms under ``Phi`` at levels ``1..levels``."""
    rng = np.random.default_rng(rng)
    src, tgt = P.XF.module, P.Y
    worst = 0.0
    basis = module_maps_basis(src, tgt)
    for n in range(1, levels + 1):
        for _ in range(trials):
            c = rng.standard_normal((n, n, basis.shape[0])) + 1j * rng.standard_normal((n, n, basis.shape[0]))
            S = np.einsum("ijk,kab->ijab", c, basis)
            T = np.array([[P(S[i, j]).matrix for j in range(n)] for i in range(n)])
            a = amplified_operator_norm(S, src, tgt)
            b = amplified_operator_norm(T, P.X, P.YE.module)
            worst = max(worst, abs(a - b) / max(a, 1e-300))
    return worst


# -- cb bounds -------------------------------------------------------------------

def _map_coords_on_compacts(X, values):
    """Matrix of a map ``K(X) -> C`` given by ``theta_{e_i, e_j} -> values[i, j]``,
    in the matrix-unit coordinates of ``K(X)``."""
    P = compact_picture(X)
    cols = [np.einsum("ij,ija->a", compact_coefficients(X, op), values) for op in P.operators]
    return P.algebra, np.array(cols).T


def complete_positivity(cand):
    """Choi tests for ``epsilon: K_A(F*) -> B`` and ``delta: K_B(F) -> A``."""
    if cand.dim == 0:
        return (True, 0.0), (True, 0.0)
    K, eps = _map_coords_on_compacts(cand.E.module, cand.F.module.inner)
    K2, dlt = _map_coords_on_compacts(cand.F.module, cand.pairing)
    return is_completely_positive(eps, K, cand.B, cand.tol), is_completely_positive(dlt, K2, cand.A, cand.tol)


def os_comparison(cand, levels=4, samples=50, rng=None):
    """Largest ratios ``conj/E`` and ``E/conj`` of the two operator-space norms on ``F*``
    found at each level ``1..levels``.

    Rows of a Parseval frame of ``F*`` and columns of conjugates of a Parseval
    frame of ``F`` are tried; the running maximum is reported per level.
    """
    rng = np.random.default_rng(rng)
    F, E = cand.F.module, cand.E.module
    d = cand.dim
    up, down = [], []
    if d == 0:
        return [0.0] * levels, [0.0] * levels
    U = parseval_frame(E)  # columns u_k in E coordinates
    W = np.conj(parseval_frame(F))  # columns w_k* in E coordinates
    best_up = best_down = 0.0
    for n in range(1, levels + 1):
        seeds = []
        k = min(n, d)
        row = np.zeros((n, n, d), dtype=np.complex128)
        row[0, :k] = U[:, :k].T
        col = np.zeros((n, n, d), dtype=np.complex128)
        col[:k, 0] = W[:, :k].T
        seeds += [row, col, row.transpose(1, 0, 2), col.transpose(1, 0, 2)]
        seeds += [rng.standard_normal((n, n, d)) + 1j * rng.standard_normal((n, n, d)) for _ in range(samples)]
        for S in seeds:
            a, b = conj_os_norm(F, S), os_norm(E, S)
            if a > 0 and b > 0:
                best_up = max(best_up, a / b)
                best_down = max(best_down, b / a)
        up.append(best_up)
        down.append(best_down)
    return up, down


def phi_cb_search(P, levels=4, samples=30, rng=None):
    """Running-maximum lower bounds for ``||Phi||`` and ``||Phi^{-1}||`` on ``M_n`` for ``n = 1..levels``.

    Columns built from a Parseval frame of ``F`` and rows built from one of ``F*``
    are included, and the best matrix of each level is carried to the next.
    """
    rng = np.random.default_rng(rng)
    cand = P.cand
    src, tgt = P.XF.module, P.YE.module
    Y, X = P.Y, P.X
    fwd, bwd = [], []
    if cand.dim == 0:
        return [0.0] * levels, [0.0] * levels
    bs = module_maps_basis(src, Y)
    bt = module_maps_basis(X, tgt)
    one_a, one_b = cand.A.unit_coords, cand.B.unit_coords
    # generators theta_{1, 1 (x) w_k} and theta_{1 (x) u_k, 1} when X = A and Y = B
    gens_s, gens_t = [], []
    if X.algebra == cand.A and X.dim == cand.A.dim and Y.dim == cand.B.dim:
        Wf = parseval_frame(cand.F.module)
        Ue = parseval_frame(cand.E.module)
        ths = rank_one_tensor(Y, src)
        tht = rank_one_tensor(tgt, X)
        for k in range(cand.dim):
            v = P.XF.factor(np.kron(one_a, Wf[:, k]))
            gens_s.append(np.einsum("m,q,mqab->ab", one_b, np.conj(v), ths, optimize=True))
            w = P.YE.factor(np.kron(one_b, Ue[:, k]))
            gens_t.append(np.einsum("q,i,qiab->ab", w, np.conj(one_a), tht, optimize=True))

    def fnorm(S):
        T = np.einsum("pq,ijq->ijp", P.matrix, S.reshape(S.shape[0], S.shape[1], -1)).reshape(
            S.shape[:2] + P.tgt_shape)
        a = amplified_operator_norm(S, src, Y)
        return amplified_operator_norm(T, X, tgt) / a if a > 1e-300 else 0.0

    def bnorm(T):
        S = np.einsum("pq,ijq->ijp", P.inverse, T.reshape(T.shape[0], T.shape[1], -1)).reshape(
            T.shape[:2] + P.src_shape)
        a = amplified_operator_norm(T, X, tgt)
        return amplified_operator_norm(S, src, Y) / a if a > 1e-300 else 0.0

    best_f = best_b = 0.0
    carry_f = carry_b = None
    for n in range(1, levels + 1):
        cands_f, cands_b = [], []
        k = min(n, len(gens_s))
        for layout in ("col", "row"):
            if k:
                S = np.zeros((n, n) + P.src_shape, dtype=np.complex128)
                T = np.zeros((n, n) + P.tgt_shape, dtype=np.complex128)
                for i in range(k):
                    if layout == "col":
                        S[i, 0], T[i, 0] = gens_s[i], gens_t[i]
                    else:
                        S[0, i], T[0, i] = gens_s[i], gens_t[i]
                cands_f.append(S)
                cands_b.append(T)
        for carry, out in ((carry_f, cands_f), (carry_b, cands_b)):
            if carry is not None:
                Z = np.zeros((n, n) + carry.shape[2:], dtype=np.complex128)
                m = carry.shape[0]
                Z[:m, :m] = carry
                out.append(Z)
        for _ in range(samples):
            c = rng.standard_normal((n, n, bs.shape[0])) + 1j * rng.standard_normal((n, n, bs.shape[0]))
            cands_f.append(np.einsum("ijk,kab->ijab", c, bs))
            c = rng.standard_normal((n, n, bt.shape[0])) + 1j * rng.standard_normal((n, n, bt.shape[0]))
            cands_b.append(np.einsum("ijk,kab->ijab", c, bt))
        for S in cands_f:
            v = fnorm(S)
            if v > best_f:
                best_f, carry_f = v, S
        for T in cands_b:
            v = bnorm(T)
            if v > best_b:
                best_b, carry_b = v, T
        fwd.append(best_f)
        bwd.append(best_b)
    return fwd, bwd


@dataclass
class CbBounds:
    cb_phi: float
    cb_phi_inv: float
    exact: bool
    search_phi: list
    search_phi_inv: list
    monotone: bool
    within_closed_form: bool
    cp_epsilon: tuple
    cp_delta: tuple


def phi_cb_bounds(cand, levels=4, samples=30, rng=None, P=None, indices=None):
    """``(||Phi_{A,B}||_cb, ||Phi_{A,B}^{-1}||_cb)``.

    When ``epsilon`` and ``delta`` pass the Choi test the values ``sqrt(r)``
    and ``sqrt(l)`` are exact; the amplified search provides certified lower
    bounds either way, and is reported as the value otherwise.
    """
    P = P or phi_map(cand)
    l, r = indices or numerical_indices(cand)
    fwd, bwd = phi_cb_search(P, levels, samples, rng)
    cp_e, cp_d = complete_positivity(cand)
    exact = cp_e[0] and cp_d[0]
    cf, cb = np.sqrt(r), np.sqrt(l)
    mono = all(b >= a for a, b in zip(fwd, fwd[1:])) and all(b >= a for a, b in zip(bwd, bwd[1:]))
    within = bool((not exact) or (max(fwd, default=0) <= cf * (1 + 1e-8) + 1e-12
                                  and max(bwd, default=0) <= cb * (1 + 1e-8) + 1e-12))
    if exact:
        return CbBounds(float(cf), float(cb), True, fwd, bwd, mono, within, cp_e, cp_d)
    return CbBounds(float(fwd[-1]), float(bwd[-1]), False, fwd, bwd, mono, within, cp_e, cp_d)


# -- comparison of two candidates -------------------------------------------------

@dataclass
class Comparison:
    matrix: np.ndarray
    bimodule_residual: float
    adjoint_residual: float
    norm: float
    inverse_norm: float
    isometry_defect: float
    polar_gap: float
    polar_unitary_residual: float
    polar_bimodule_residual: float
    modulus: np.ndarray


def canonical_comparison(cand_E, cand_G):
    """The canonical isomorphism ``E -> G`` between the conjugates of one ``F``.

    In conjugated coordinates it is the identity. The report gives its norm and
    the norm of its inverse, ``isometry_defect = max |<x,y>_G - <x,y>_E|`` on the
    basis, and ``polar_gap = || |T| - 1 ||`` where ``T = U|T|`` is the polar
    decomposition with ``U`` a unitary bimodule map.
    """
    if cand_E.F is not cand_G.F:
        if cand_E.F.dim != cand_G.F.dim or cand_E.A != cand_G.A:
            raise CandidateInvalid("candidates live on different correspondences")
    E, G = cand_E.E, cand_G.E
    d = cand_E.dim
    T = ModuleMap(E.module, G.module, np.eye(d))
    bres = max([linearity_residual(np.eye(d), E.module, G.module)]
               + [float(np.abs(G.left[b] - E.left[b]).max()) for b in range(E.source.dim)])
    Ts = adjoint_of(T, cand_E.tol)
    ares = adjoint_residual(T, Ts)
    gG = G.module.gram
    giE = E.module.gram_inv_sqrt
    mod_sim = giE @ gG @ giE
    w, v = eigh(0.5 * (mod_sim + mod_sim.conj().T))
    abs_sim = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    modulus = giE @ abs_sim @ E.module.gram_sqrt  # |T| on E coordinates
    gap = operator_norm(abs_sim - np.eye(d)) if d else 0.0
    Umat = np.linalg.inv(modulus) if d else modulus  # U = T |T|^{-1} with T = 1
    ip_U = np.einsum("ai,bj,abk->ijk", np.conj(Umat), Umat, G.module.inner, optimize=True)
    ures = float(np.abs(ip_U - E.module.inner).max()) if d else 0.0
    pbres = max([linearity_residual(Umat, E.module, G.module)]
                + [float(np.abs(G.left[b] @ Umat - Umat @ E.left[b]).max()) for b in range(E.source.dim)])
    defect = float(np.abs(G.module.inner - E.module.inner).max()) if d else 0.0
    return Comparison(np.eye(d), bres, ares, map_norm(T), map_norm(ModuleMap(G.module, E.module, np.eye(d))),
                      defect, float(gap), ures, pbres, modulus)


# -- ternary structure --------------------------------------------------------------

def morita_residual(cand):
    """``max || <e_i*, e_j*> . e_k - e_i . <e_j, e_k> ||``."""
    F = cand.F
    d = cand.dim
    if d == 0:
        return 0.0
    lhs = np.einsum("ija,apk->ijkp", cand.pairing, F.left)
    rhs = np.einsum("jkb,bpi->ijkp", F.module.inner, F.module.action)
    return float(np.abs(lhs - rhs).max())


@dataclass
class TernaryReport:
    holds: bool
    ternary_residual: float
    morita_residual: float
    agree: bool


def ternary_check(cand, X=None, Y=None, trials=20, rng=None, tol=1e-8):
    """Residual of ``Phi(R S^# T) = Phi(R) Phi(S)^# Phi(T)`` over random triples,
    alongside the Morita residual."""
    if cand.dim == 0:
        return TernaryReport(True, 0.0, 0.0, True)
    rng = np.random.default_rng(rng)
    P = phi_map(cand, X, Y)
    src, Y = P.XF.module, P.Y
    worst = 0.0
    for _ in range(trials):
        R, S, T = (ModuleMap(src, Y, _random_map(src, Y, rng)) for _ in range(3))
        lhs = P(R @ adjoint_of(S) @ T).matrix
        pr, ps, pt = P(R), P(S), P(T)
        rhs = (pr @ adjoint_of(ps) @ pt).matrix
        worst = max(worst, float(np.abs(lhs - rhs).max()) / max(_scale(lhs), 1.0))
    mres = morita_residual(cand) / max(_scale(cand.pairing), 1.0)
    t_ok, m_ok = worst <= tol, mres <= tol
    return TernaryReport(t_ok and m_ok, worst, mres, t_ok == m_ok)


# -- triangle identities on representations ------------------------------------------------

def _check_rep(rep, alg):
    if rep.source != alg:
        raise DegenerateRepresentation(f"representation of {rep.source!r}, expected {alg!r}")
    if rep.dim == 0 or np.abs(rep.act(alg.unit_coords) - np.eye(rep.dim)).max() > 1e-10:
        raise DegenerateRepresentation("representation is degenerate (unit does not act as identity)")


def _unit_matrix(cand, inner_T, outer_T, dz):
    """``z -> sum_ij c_ij [e_i (x) [e_j* (x) z]]`` from a space of dimension ``dz``."""
    c = identity_coefficients(cand.F.module)
    d = cand.dim
    M = np.zeros((outer_T.dim, dz), dtype=np.complex128)
    eye = np.eye(d)
    for i in range(d):
        for j in range(d):
            if c[i, j] == 0:
                continue
            inner = inner_T.Q.conj().T @ np.kron(eye[:, [j]], np.eye(dz))  # [e_j* (x) z]
            M += c[i, j] * (outer_T.Q.conj().T @ np.kron(eye[:, [i]], inner))
    return M


def _counit_matrix(cand, outer_T, mid_T, act):
    """``[e_i* (x) [e_j (x) z]] -> <e_i, e_j> . z`` on ``E (x) (F (x) Z)``."""
    d = cand.dim
    G = cand.F.module.inner
    Z_dim = act(cand.B.unit_coords).shape[0]
    cols = np.zeros((Z_dim, d, d, Z_dim), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            cols[:, i, j, :] = act(G[i, j])
    e3 = cols.reshape(Z_dim, d * d * Z_dim)
    return e3 @ np.kron(np.eye(d), mid_T.Q) @ outer_T.Q


def verify_triangle_identities(cand, rep_B=None, rep_A=None):
    """Norms of ``F(eps_Y) o eta_{F(Y)} - 1`` on ``F (x)_B Y`` and
    ``eps_{E(X)} o E(eta_X) - 1`` on ``F* (x)_A X``.

    ``rep_B``/``rep_A`` are correspondences to the scalars (Hilbert-space
    representations); the faithful representations are used by default.
    """
    A, B, F, E = cand.A, cand.B, cand.F, cand.E
    rep_B = rep_B or representation(B)
    rep_A = rep_A or representation(A)
    _check_rep(rep_B, B)
    _check_rep(rep_A, A)
    if cand.dim == 0:
        return 0.0, 0.0
    tol = cand.tol
    # first: F (x) Y -> F (x) E (x) F (x) Y -> F (x) Y
    Z1 = internal_tensor(F, rep_B, tol)
    W = internal_tensor(E, Z1.correspondence(), tol)
    V = internal_tensor(F, W.correspondence(), tol)
    eta = _unit_matrix(cand, W, V, Z1.dim)
    epsW = _counit_matrix(cand, W, Z1, rep_B.act)
    Feps = Z1.Q.conj().T @ np.kron(np.eye(cand.dim), epsW) @ V.Q
    D1 = Feps @ eta - np.eye(Z1.dim)
    r1 = map_norm(ModuleMap(Z1.module, Z1.module, D1)) if Z1.dim else 0.0
    # second: E (x) X -> E (x) F (x) E (x) X -> E (x) X
    U1 = internal_tensor(E, rep_A, tol)
    U1c = U1.correspondence()
    U2 = internal_tensor(F, U1c, tol)
    U3 = internal_tensor(E, U2.correspondence(), tol)
    etaX = _unit_matrix(cand, U1, U2, rep_A.dim)
    Eeta = U3.Q.conj().T @ np.kron(np.eye(cand.dim), etaX) @ U1.Q
    epsU = _counit_matrix(cand, U3, U2, U1c.act)
    D2 = epsU @ Eeta - np.eye(U1.dim)
    r2 = map_norm(ModuleMap(U1.module, U1.module, D2)) if U1.dim else 0.0
    return float(r1), float(r2)


# -- certificate -----------------------------------------------------------------------

def instance_hash(*arrays):
    import hashlib

    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=np.complex128))
        h.update(repr(a.shape).encode())
        h.update(a.astype("<c16").tobytes())
    return h.hexdigest()


@dataclass
class AdjunctionCertificate:
    l: float
    r: float
    l_search: float
    r_search: float
    oracle_consistent: bool
    cb_phi: float
    cb_phi_inv: float
    cb_exact: bool
    cb_search_phi: list
    cb_search_phi_inv: list
    cb_monotone: bool
    os_ratio: tuple
    unit_exists: bool
    unit_residual: float
    counit_exists: bool
    counit_residual: float
    delta_eta_residual: float
    normalized: bool
    ideal_A: tuple
    complement_A: tuple
    ideal_B: tuple
    complement_B: tuple
    decomposition_residual: float
    is_full_adjunction: bool
    triangle_residuals: tuple
    phi_inverse_residual: float
    phi_well_defined_residual: float
    naturality_residuals: tuple
    epsilon_residual: float
    delta_residual: float
    cp_epsilon: bool
    cp_delta: bool
    simple_A: bool
    is_local_adjoint: bool
    notes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            out[k] = _plain(v)
        return out


def _plain(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def certify(cand, levels=4, seed=0, samples=5000, naturality_trials=20, rep_A=None, rep_B=None,
            threshold=1e-10):
    """Run the full pipeline and return an :class:`AdjunctionCertificate`.

    Deterministic given the candidate and ``seed``.
    """
    rng = np.random.default_rng(seed)
    A, B = cand.A, cand.B
    l, r = numerical_indices(cand)
    eps, dlt = epsilon_map(cand), delta_map(cand)
    uc = unit_counit(cand, eps, dlt)
    dec = ideal_decomposition(cand)
    P = phi_map(cand)
    s1, s2, s3, s4 = (int(x) for x in rng.integers(0, 2 ** 31, size=4))
    l_s = index_search(cand, "l", samples=samples, rng=s1)
    r_s = index_search(cand, "r", samples=samples, rng=s2)
    oracle_ok = l_s <= l * (1 + 1e-6) + 1e-12 and r_s <= r * (1 + 1e-6) + 1e-12
    cb = phi_cb_bounds(cand, levels=levels, rng=s3, P=P, indices=(l, r))
    up, down = os_comparison(cand, levels=levels, rng=s4)
    X, Y = algebra_module(A), algebra_module(B)
    nat = naturality_residuals(cand, X, Y, direct_sum(X, X), direct_sum(Y, Y),
                               trials=naturality_trials, rng=int(rng.integers(0, 2 ** 31)))
    tri = verify_triangle_identities(cand, rep_B, rep_A)
    scale = max(1.0, l, r)
    d1 = uc.delta_one
    normalized = bool(np.abs(A.mul(d1, d1) - d1).max() <= 1e-9 * scale)
    eps_res = max(eps.residuals.values()) if eps.residuals else 0.0
    dlt_res = max(dlt.residuals.values()) if dlt.residuals else 0.0
    unit_ok = uc.unit_residual <= threshold * scale * 10
    counit_ok = uc.counit_residual <= threshold * scale * 10
    local = (P.invertible and P.inverse_residual <= 1e-8 and P.well_defined_residual <= 1e-8 * scale
             and max(tri) <= threshold * scale and max(nat) <= 1e-8 and oracle_ok and dec.complementary)
    notes = ["finite dimension: the unit of each algebra replaces an approximate unit"]
    if not cb.exact:
        notes.append("cb values are lower bounds from amplified search")
    if not normalized:
        notes.append("delta(1) is not a projection: delta(eta(a)) = a . delta(1) instead of a")
    prov = {
        "seed": int(seed),
        "levels": int(levels),
        "samples": int(samples),
        "eps_psd": cand.tol.eps_psd,
        "eps_eq": cand.tol.eps_eq,
        "instance_hash": instance_hash(cand.F.module.action, cand.F.module.inner, cand.F.left, cand.pairing),
    }
    return AdjunctionCertificate(
        l=l, r=r, l_search=l_s, r_search=r_s, oracle_consistent=bool(oracle_ok),
        cb_phi=cb.cb_phi, cb_phi_inv=cb.cb_phi_inv, cb_exact=cb.exact,
        cb_search_phi=cb.search_phi, cb_search_phi_inv=cb.search_phi_inv, cb_monotone=cb.monotone,
        os_ratio=(max(up, default=0.0), max(down, default=0.0)),
        unit_exists=bool(unit_ok), unit_residual=uc.unit_residual,
        counit_exists=bool(counit_ok), counit_residual=uc.counit_residual,
        delta_eta_residual=uc.delta_eta_residual, normalized=normalized,
        ideal_A=dec.ideal_A.block_subset, complement_A=dec.complement_A.block_subset,
        ideal_B=dec.ideal_B.block_subset, complement_B=dec.complement_B.block_subset,
        decomposition_residual=max(dec.residual_A, dec.residual_B),
        is_full_adjunction=bool(unit_ok and counit_ok),
        triangle_residuals=tri, phi_inverse_residual=P.inverse_residual,
        phi_well_defined_residual=P.well_defined_residual, naturality_residuals=nat,
        epsilon_residual=eps_res, delta_residual=dlt_res,
        cp_epsilon=bool(cb.cp_epsilon[0]), cp_delta=bool(cb.cp_delta[0]),
        simple_A=A.nblocks == 1, is_local_adjoint=bool(local), notes=notes, provenance=prov)
