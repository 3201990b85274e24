# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Hermitian eigensolver: Householder tridiagonalization + implicit QL."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, fabs

cnp.import_array()

cdef double _EPS = 2.220446049250313e-16


class NumericalFailureCore(RuntimeError):
    pass


cdef void _tridiag(double complex[:, ::1] a, double complex[:, ::1] q,
                   double complex[::1] v, double complex[::1] w,
                   double[::1] d, double[::1] e) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double xnorm, vnorm, ax0, r
    cdef double complex phase, s, x0, acc
    for k in range(n - 2):
        xnorm = 0.0
        for i in range(k + 1, n):
            xnorm += a[i, k].real * a[i, k].real + a[i, k].imag * a[i, k].imag
        xnorm = sqrt(xnorm)
        if xnorm == 0.0:
            continue
        x0 = a[k + 1, k]
        ax0 = sqrt(x0.real * x0.real + x0.imag * x0.imag)
        if ax0 > 0:
            phase = x0 / ax0
        else:
            phase = 1.0
        vnorm = 0.0
        for i in range(k + 1, n):
            v[i] = a[i, k]
        v[k + 1] = v[k + 1] + phase * xnorm
        for i in range(k + 1, n):
            vnorm += v[i].real * v[i].real + v[i].imag * v[i].imag
        vnorm = sqrt(vnorm)
        for i in range(k + 1, n):
            v[i] = v[i] / vnorm
        # left: rows k+1.. of a
        for j in range(n):
            acc = 0.0
            for i in range(k + 1, n):
                acc = acc + v[i].conjugate() * a[i, j]
            for i in range(k + 1, n):
                a[i, j] = a[i, j] - 2.0 * v[i] * acc
        # right: columns k+1.. of a and q
        for i in range(n):
            acc = 0.0
            for j in range(k + 1, n):
                acc = acc + a[i, j] * v[j]
            for j in range(k + 1, n):
                a[i, j] = a[i, j] - 2.0 * acc * v[j].conjugate()
            acc = 0.0
            for j in range(k + 1, n):
                acc = acc + q[i, j] * v[j]
            for j in range(k + 1, n):
                q[i, j] = q[i, j] - 2.0 * acc * v[j].conjugate()
    phase = 1.0
    for i in range(n):
        d[i] = a[i, i].real
    e[0] = 0.0
    w[0] = 1.0
    for k in range(n - 1):
        s = a[k + 1, k]
        r = sqrt(s.real * s.real + s.imag * s.imag)
        e[k + 1] = r
        if r > 0:
            phase = phase * (s / r)
        w[k + 1] = phase
    for i in range(n):
        for j in range(n):
            q[i, j] = q[i, j] * w[j]


cdef int _tql2(double[::1] d, double[::1] e, double complex[:, ::1] v,
               int max_sweeps) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i, k, l, m
    cdef int it
    cdef double f = 0.0, tst1 = 0.0, g, p, r, dl1, h, c, c2, c3, el1, s, s2
    cdef double complex col
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    for l in range(n):
        tst1 = max(tst1, fabs(d[l]) + fabs(e[l]))
        m = l
        while m < n:
            if fabs(e[m]) <= _EPS * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_sweeps * n:
                    return -1
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = 1.0
                c2 = 1.0
                c3 = 1.0
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                i = m - 1
                while i >= l:
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        col = v[k, i + 1]
                        v[k, i + 1] = s * v[k, i] + c * col
                        v[k, i] = c * v[k, i] - s * col
                    i -= 1
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if fabs(e[l]) <= _EPS * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return 0


def eigh(m, int max_sweeps=30):
    """Eigen-decomposition of a Hermitian matrix: ascending values, unitary vectors."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a = np.array(m, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    q_arr = np.eye(n, dtype=np.complex128)
    d_arr = np.zeros(n)
    e_arr = np.zeros(n)
    v_arr = np.zeros(n, dtype=np.complex128)
    w_arr = np.zeros(n, dtype=np.complex128)
    cdef double complex[:, ::1] av = a
    cdef double complex[:, ::1] qv = q_arr
    cdef double[::1] dv = d_arr
    cdef double[::1] ev = e_arr
    cdef double complex[::1] vv = v_arr
    cdef double complex[::1] wv = w_arr
    cdef int status
    with nogil:
        _tridiag(av, qv, vv, wv, dv, ev)
        status = _tql2(dv, ev, qv, max_sweeps)
    if status != 0:
        raise NumericalFailureCore("implicit QL did not converge")
    order = np.argsort(d_arr, kind="stable")
    return d_arr[order], q_arr[:, order]
