"""Dense complex-matrix kernels: norms, positivity, spectra, amplification.

The Hermitian eigensolver comes from the compiled ``_eigh_core`` extension
when it is built, and from the numpy implementation in ``_eigh_py`` otherwise.
Set ``LOCALADJ_PURE=1`` before import to force the fallback.
"""
import os
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from ..errors import InvalidLevel, InvalidMatrix, NotHermitian, NumericalFailure
from . import _eigh_py

BACKEND = "python"
_eigh_impl = _eigh_py.eigh
if os.environ.get("LOCALADJ_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _eigh_core

        _eigh_impl = _eigh_core.eigh
        BACKEND = "cython"
    except ImportError:
        pass


@dataclass(frozen=True)
class Tolerance:
    """Relative slacks.

    A matrix ``m`` is PSD when its smallest eigenvalue is at least
    ``-eps_psd * dim * ||m||``; two quantities are equal when they differ by at
    most ``eps_eq * scale``.
    """

    eps_psd: float = 1e-9
    eps_eq: float = 1e-10

    def __post_init__(self):
        for name in ("eps_psd", "eps_eq"):
            v = getattr(self, name)
            if not (np.isfinite(v) and 0 < v <= 1e-4):
                raise ValueError(f"{name} must lie in (0, 1e-4], got {v!r}")

    def psd_slack(self, m):
        m = np.asarray(m)
        return self.eps_psd * max(m.shape[0], 1) * operator_norm(m)

    def eq_slack(self, scale):
        return self.eps_eq * scale


DEFAULT_TOL = Tolerance()


def as_matrix(m, square=False):
    """Validate and convert to a finite complex128 2-d array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise InvalidMatrix(f"expected a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix("matrix has non-finite entries")
    if square and a.shape[0] != a.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
    return a


def eigh(m):
    """Ascending eigenvalues and unitary eigenvectors of a Hermitian matrix.

    Only the lower triangle is read after symmetrization.
    """
    a = as_matrix(m, square=True)
    a = 0.5 * (a + a.conj().T)
    try:
        return _eigh_impl(a)
    except RuntimeError as exc:
        if isinstance(exc, NumericalFailure):
            raise
        raise NumericalFailure(str(exc)) from exc


def hermitian_residual(m):
    a = np.asarray(m)
    return float(np.abs(a - a.conj().T).max()) if a.size else 0.0


def check_hermitian(m, tol=DEFAULT_TOL):
    a = as_matrix(m, square=True)
    if a.size == 0:
        return a
    scale = float(np.abs(a).max())
    res = hermitian_residual(a)
    if res > tol.eq_slack(scale):
        raise NotHermitian(f"matrix is not Hermitian (residual {res:.3e})")
    return a


def operator_norm(m):
    """Largest singular value, as ``sqrt(lambda_max(m* m))``."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    small = a.conj().T @ a if a.shape[1] <= a.shape[0] else a @ a.conj().T
    w, _ = eigh(small)
    return float(np.sqrt(max(w[-1], 0.0)))


def hermitian_spectrum(m, tol=DEFAULT_TOL):
    """Ascending eigenvalues of a Hermitian matrix."""
    a = check_hermitian(m, tol)
    w, _ = eigh(a)
    return w


def is_psd(m, tol=DEFAULT_TOL):
    a = check_hermitian(m, tol)
    if a.size == 0:
        return True
    w, _ = eigh(a)
    return bool(w[0] >= -tol.eps_psd * a.shape[0] * max(abs(w[0]), abs(w[-1])))


def psd_sqrt(m):
    """Square root of a PSD matrix (negative eigenvalues clipped)."""
    w, v = eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def psd_inv_sqrt(m, cutoff=0.0):
    """Inverse square root of a positive definite matrix.

    Eigenvalues at or below ``cutoff`` raise ``InvalidMatrix``.
    """
    w, v = eigh(m)
    if w.size and w[0] <= cutoff:
        raise InvalidMatrix("matrix is not positive definite")
    return (v / np.sqrt(w)) @ v.conj().T


def positive_range(m, rel=1e-10):
    """Orthonormal basis of the eigenvectors with eigenvalue above ``rel * lambda_max``.

    Columns are in descending eigenvalue order, each phase fixed so its
    largest-modulus entry is real and positive.
    """
    a = as_matrix(m, square=True)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128), np.zeros(0)
    w, v = eigh(a)
    top = max(w[-1], 0.0)
    keep = w > rel * max(top, 1e-300) * max(n, 1)
    if top == 0.0:
        keep[:] = False
    w, v = w[keep][::-1], v[:, keep][:, ::-1]
    return fix_phases(v), w


def fix_phases(v):
    """Rotate each column so its first largest-modulus entry is real positive."""
    v = np.array(v, dtype=np.complex128, copy=True)
    for k in range(v.shape[1]):
        col = v[:, k]
        mags = np.abs(col)
        i = int(np.argmax(mags > mags.max() * (1 - 1e-8)))
        if mags[i] > 0:
            v[:, k] = col * (abs(col[i]) / col[i])
    return v


def amplify(t, level):
    """Matrix of ``id_{M_n} (x) T`` on vectorized n-by-n matrices of T-inputs.

    The block ``(i, j)`` of the input is stored at position ``i * n + j``.
    """
    if level < 1:
        raise InvalidLevel(f"level must be >= 1, got {level}")
    a = as_matrix(t)
    return np.kron(np.eye(level * level), a)


def amplified_norm(t, level, in_shape, out_shape, in_norm=None, out_norm=None,
                   samples=200, rng=None, seeds=(), polish=6):
    """Lower bound for ``||M_n(T)||`` by sampling, refined around the best draws.

    ``t`` acts on vectorized ``in_shape`` matrices (row-major) and returns
    vectorized ``out_shape`` matrices; the norm at level n uses the operator
    norm of the n-by-n block matrix unless ``in_norm`` / ``out_norm`` are given
    (each maps an (n, n, *shape) array to a float).  ``seeds`` are extra
    (n, n, *in_shape) inputs tried first; the best ``polish`` random draws
    are refined with L-BFGS.
    """
    if level < 1:
        raise InvalidLevel(f"level must be >= 1, got {level}")
    rng = np.random.default_rng(rng)
    t = as_matrix(t)
    n = level
    pin, qin = in_shape
    pout, qout = out_shape
    default_in = in_norm is None
    if in_norm is None:
        in_norm = lambda x: operator_norm(_block(x))
    if out_norm is None:
        out_norm = lambda y: operator_norm(_block(y))

    def apply(x):
        flat = x.reshape(n * n, pin * qin)
        return (flat @ t.T).reshape(n, n, pout, qout)

    def ratio(x):
        d = in_norm(x)
        return out_norm(apply(x)) / d if d > 0 else 0.0

    best, best_x = 0.0, None
    scored = []
    cands = list(seeds)
    for i in range(n):
        for j in range(n):
            for p in range(pin):
                for q in range(qin):
                    x = np.zeros((n, n, pin, qin), dtype=np.complex128)
                    x[i, j, p, q] = 1.0
                    cands.append(x)
    for _ in range(samples):
        cands.append(rng.standard_normal((n, n, pin, qin)) + 1j * rng.standard_normal((n, n, pin, qin)))
    for x in cands:
        x = np.asarray(x, dtype=np.complex128)
        r = ratio(x)
        scored.append((r, x))
        if r > best:
            best, best_x = r, x
    # quasi-Newton polish from the strongest random draws
    shape = (n, n, pin, qin)
    randoms = sorted(scored[len(scored) - samples:], key=lambda t: -t[0])[:polish] if samples else []
    for _, x in randoms:
        def obj(v):
            z = v[:v.size // 2].reshape(shape) + 1j * v[v.size // 2:].reshape(shape)
            return -ratio(z)

        out = minimize(obj, np.concatenate([x.real.ravel(), x.imag.ravel()]), method="L-BFGS-B",
                       options={"maxiter": 300})
        if -out.fun > best:
            best = float(-out.fun)
            best_x = out.x[:out.x.size // 2].reshape(shape) + 1j * out.x[out.x.size // 2:].reshape(shape)
    if default_in and pin == qin:
        # the ball of M_n(M_p) is the convex hull of unitaries, so a convex
        # objective peaks on one; parametrize U0 exp(iH) to avoid the kink of ||x||
        N = n * pin
        starts = [_unitary_part(_block(x)) for _, x in randoms]
        starts += [np.linalg.qr(rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)))[0]
                   for _ in range(polish)]
        for U0 in starts:
            def uobj(h, U0=U0):
                H = h[:N * N].reshape(N, N) + 1j * h[N * N:].reshape(N, N)
                U = U0 @ expm(0.5j * (H + H.conj().T))
                return -out_norm(apply(_unblock(U, n, pin)))

            out = minimize(uobj, np.zeros(2 * N * N), method="L-BFGS-B", options={"maxiter": 300})
            if -out.fun > best:
                best = float(-out.fun)
    if best_x is not None:
        step = 0.3
        for _ in range(4 * samples):
            x = best_x + step * (rng.standard_normal(best_x.shape) + 1j * rng.standard_normal(best_x.shape))
            r = ratio(x)
            if r > best:
                best, best_x = r, x
            else:
                step *= 0.995
    return best


def _block(x):
    n, m, p, q = x.shape
    return x.transpose(0, 2, 1, 3).reshape(n * p, m * q)


def _unblock(m, n, p):
    return m.reshape(n, p, n, p).transpose(0, 2, 1, 3)


def _unitary_part(m):
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def transpose_map(d):
    """Matrix of the transpose on vectorized d-by-d matrices."""
    t = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            t[j * d + i, i * d + j] = 1.0
    return t


__all__ = [
    "BACKEND", "Tolerance", "DEFAULT_TOL", "as_matrix", "eigh", "operator_norm",
    "hermitian_spectrum", "is_psd", "psd_sqrt", "psd_inv_sqrt", "positive_range",
    "fix_phases", "amplify", "amplified_norm", "transpose_map", "check_hermitian",
]
