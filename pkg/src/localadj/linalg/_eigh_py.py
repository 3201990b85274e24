"""Pure-Python Hermitian eigensolver (Householder tridiagonalization + implicit QL).

Same algorithm as the compiled ``_eigh_core`` extension; used when the
extension is unavailable or ``LOCALADJ_PURE=1`` is set.
"""
import math

import numpy as np

from ..errors import NumericalFailure

_EPS = 2.0 ** -52


def tridiagonalize(m):
    """Return ``(diag, sub, V)`` with ``V* m V`` real symmetric tridiagonal.

    ``sub[i]`` holds entry ``(i, i-1)``; ``sub[0]`` is zero.  ``V`` is unitary.
    """
    a = np.array(m, dtype=np.complex128, copy=True)
    n = a.shape[0]
    q = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = a[k + 1:, k]
        xnorm = math.sqrt(float(np.vdot(x, x).real))
        if xnorm == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if abs(x0) > 0 else 1.0
        v = x.copy()
        v[0] += phase * xnorm
        v /= math.sqrt(float(np.vdot(v, v).real))
        sub = a[k + 1:, :]
        sub -= 2.0 * np.outer(v, v.conj() @ sub)
        blk = a[:, k + 1:]
        blk -= 2.0 * np.outer(blk @ v, v.conj())
        qb = q[:, k + 1:]
        qb -= 2.0 * np.outer(qb @ v, v.conj())
    diag = a.diagonal().real.copy()
    sub = np.zeros(n)
    phase = 1.0 + 0.0j
    phases = np.ones(n, dtype=np.complex128)
    for k in range(n - 1):
        e = a[k + 1, k]
        r = abs(e)
        sub[k + 1] = r
        if r > 0:
            phase = phase * (e / r)
        phases[k + 1] = phase
    return diag, sub, q * phases[np.newaxis, :]


def tql2(d, e, v, max_sweeps=30):
    """Implicit QL on the tridiagonal (d, e); rotates the columns of ``v`` in place."""
    n = d.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    if n:
        e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n:
            if abs(e[m]) <= _EPS * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_sweeps * max(n, 1):
                    raise NumericalFailure("implicit QL did not converge")
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2:n] -= h
                f += h
                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    col = v[:, i + 1].copy()
                    v[:, i + 1] = s * v[:, i] + c * col
                    v[:, i] = c * v[:, i] - s * col
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= _EPS * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0


def eigh(m):
    """Eigen-decomposition of a Hermitian matrix: ascending values, unitary vectors."""
    m = np.asarray(m, dtype=np.complex128)
    n = m.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    d, e, v = tridiagonalize(m)
    v = np.ascontiguousarray(v)
    tql2(d, e, v)
    order = np.argsort(d, kind="stable")
    return d[order], v[:, order]
