# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled MM and power-iteration kernels.

Mirrors ``_kernels_py`` exactly; see that module for the contracts.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, cos, sin

cnp.import_array()

cdef double _GOLDEN = 2.399963229728653


cdef inline double _abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef void _matvec(const double complex[:, ::1] Z, const double complex[::1] x,
                  double complex[::1] out) nogil:
    cdef Py_ssize_t n = Z.shape[0], i, j
    cdef double sr, si, zr, zi, xr, xi
    # explicit real arithmetic; Cython's complex product is not inlined well
    for i in range(n):
        sr = 0.0
        si = 0.0
        for j in range(n):
            zr = Z[i, j].real
            zi = Z[i, j].imag
            xr = x[j].real
            xi = x[j].imag
            sr += zr * xr - zi * xi
            si += zr * xi + zi * xr
        out[i].real = sr
        out[i].imag = si


cdef double _quad(const double complex[:, ::1] Z, const double complex[::1] q,
                  const double complex[::1] th, double complex[::1] work) nogil:
    cdef Py_ssize_t n = Z.shape[0], i
    cdef double acc = 0.0
    _matvec(Z, th, work)
    for i in range(n):
        # Re(conj(th) * (Z th)) - 2 Re(conj(th) * q)
        acc += (th[i].real * work[i].real + th[i].imag * work[i].imag)
        acc -= 2.0 * (th[i].real * q[i].real + th[i].imag * q[i].imag)
    return acc


def quad_value(Z, q, theta):
    cdef double complex[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.complex128)
    cdef double complex[::1] qv = np.ascontiguousarray(q, dtype=np.complex128)
    cdef double complex[::1] tv = np.ascontiguousarray(theta, dtype=np.complex128)
    cdef double complex[::1] work = np.empty(Zv.shape[0], dtype=np.complex128)
    return _quad(Zv, qv, tv, work)


def power_iteration(Z, int max_iter=500, double tol=1e-10):
    cdef double complex[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.complex128)
    cdef Py_ssize_t n = Zv.shape[0], i
    if n == 0:
        return 0.0, 0, True
    cdef double complex[::1] v = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] w = np.empty(n, dtype=np.complex128)
    cdef double inv = 1.0 / sqrt(<double>n)
    for i in range(n):
        v[i] = (cos(_GOLDEN * i) + 1j * sin(_GOLDEN * i)) * inv
    cdef double rq = 0.0, rq_old = 0.0, nrm
    cdef int it
    cdef bint have_old = False
    with nogil:
        for it in range(1, max_iter + 1):
            _matvec(Zv, v, w)
            rq = 0.0
            nrm = 0.0
            for i in range(n):
                rq += v[i].real * w[i].real + v[i].imag * w[i].imag
                nrm += _abs2(w[i])
            nrm = sqrt(nrm)
            if nrm == 0.0:
                with gil:
                    return 0.0, it, True
            inv = 1.0 / nrm
            for i in range(n):
                v[i].real = w[i].real * inv
                v[i].imag = w[i].imag * inv
            if have_old and fabs(rq - rq_old) <= tol * fabs(rq):
                with gil:
                    return rq, it, True
            rq_old = rq
            have_old = True
    return rq, max_iter, False


def mm_solve(Z, q, theta0, double zeta, int max_iter, double tol):
    cdef double complex[:, ::1] Zv = np.ascontiguousarray(Z, dtype=np.complex128)
    cdef double complex[::1] qv = np.ascontiguousarray(q, dtype=np.complex128)
    theta_arr = np.array(theta0, dtype=np.complex128, copy=True, order="C")
    cand_arr = theta_arr.copy()
    cdef double complex[::1] th = theta_arr
    cdef double complex[::1] cand = cand_arr
    cdef Py_ssize_t n = Zv.shape[0], i
    cdef double complex[::1] a = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] work = np.empty(n, dtype=np.complex128)
    trace = np.empty(max_iter + 1, dtype=np.float64)
    cdef double[::1] tr = trace
    cdef double g = _quad(Zv, qv, th, a), g_new, mag
    cdef int steps = 0, it
    cdef bint done
    tr[0] = g
    with nogil:
        # invariant: a holds Z @ th at the top of each iteration
        for it in range(max_iter):
            for i in range(n):
                a[i] = a[i] - zeta * th[i] - qv[i]
                mag = sqrt(_abs2(a[i]))
                if mag > 0.0:
                    cand[i] = -a[i] / mag
                else:
                    cand[i] = th[i]
            g_new = _quad(Zv, qv, cand, work)
            if g_new > g:
                break
            for i in range(n):
                th[i] = cand[i]
                a[i] = work[i]
            steps += 1
            tr[steps] = g_new
            done = fabs(g_new - g) <= tol * (1.0 + fabs(g))
            g = g_new
            if done:
                break
    return theta_arr, trace[:steps + 1].copy(), steps
