# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for reslab.  See ``_kernels_py.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, floor, fabs, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


cdef inline double _wrap1(double v) nogil:
    cdef double y = v - floor(v)
    if y >= 1.0:
        y = 0.0
    return y


cdef inline void _step(const double[:, ::1] A, const double[:, ::1] kv,
                       const double[:, ::1] amp, const double[:, ::1] phase,
                       double eps, double x, double y,
                       double* ox, double* oy, double* j) nogil:
    """Lifted image of (x, y) and, if ``j`` is not NULL, the Jacobian (row-major 4 doubles)."""
    cdef Py_ssize_t t, m = kv.shape[0]
    cdef double nx = A[0, 0] * x + A[0, 1] * y
    cdef double ny = A[1, 0] * x + A[1, 1] * y
    cdef double arg, c0, c1
    if j != NULL:
        j[0] = A[0, 0]
        j[1] = A[0, 1]
        j[2] = A[1, 0]
        j[3] = A[1, 1]
    if eps != 0.0:
        for t in range(m):
            arg = TWO_PI * (kv[t, 0] * x + kv[t, 1] * y)
            nx += eps * amp[t, 0] * sin(arg + phase[t, 0])
            ny += eps * amp[t, 1] * sin(arg + phase[t, 1])
            if j != NULL:
                c0 = TWO_PI * eps * amp[t, 0] * cos(arg + phase[t, 0])
                c1 = TWO_PI * eps * amp[t, 1] * cos(arg + phase[t, 1])
                j[0] += c0 * kv[t, 0]
                j[1] += c0 * kv[t, 1]
                j[2] += c1 * kv[t, 0]
                j[3] += c1 * kv[t, 1]
    ox[0] = nx
    oy[0] = ny


def map_and_jacobian(A, kv, amp, phase, double eps, pts):
    cdef double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] kv_ = np.ascontiguousarray(kv, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] amp_ = np.ascontiguousarray(amp, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] ph_ = np.ascontiguousarray(phase, dtype=np.float64).reshape(-1, 2)
    arr = np.ascontiguousarray(pts, dtype=np.float64)
    shape = arr.shape
    cdef double[:, ::1] p = arr.reshape(-1, 2)
    cdef Py_ssize_t s, S = p.shape[0]
    out_arr = np.empty((S, 2))
    jac_arr = np.empty((S, 4))
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] jac = jac_arr
    with nogil:
        for s in range(S):
            _step(A_, kv_, amp_, ph_, eps, p[s, 0], p[s, 1], &out[s, 0], &out[s, 1], &jac[s, 0])
    return out_arr.reshape(shape), jac_arr.reshape(shape[:-1] + (2, 2))


def iterate_with_jacobian(A, kv, amp, phase, double eps, pts, int n):
    cdef double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] kv_ = np.ascontiguousarray(kv, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] amp_ = np.ascontiguousarray(amp, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] ph_ = np.ascontiguousarray(phase, dtype=np.float64).reshape(-1, 2)
    arr = np.ascontiguousarray(pts, dtype=np.float64)
    shape = arr.shape
    cdef double[:, ::1] p = arr.reshape(-1, 2)
    cdef Py_ssize_t s, S = p.shape[0]
    cdef int i
    out_arr = np.empty((S, 2))
    jac_arr = np.empty((S, 4))
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] jac = jac_arr
    cdef double x, y, nx, ny, a, b, c, d
    cdef double j[4]
    with nogil:
        for s in range(S):
            x = p[s, 0]
            y = p[s, 1]
            a = 1.0; b = 0.0; c = 0.0; d = 1.0
            for i in range(n):
                _step(A_, kv_, amp_, ph_, eps, x, y, &nx, &ny, j)
                # jac <- D_{T^i x} T . jac
                a, b, c, d = (j[0] * a + j[1] * c, j[0] * b + j[1] * d,
                              j[2] * a + j[3] * c, j[2] * b + j[3] * d)
                x = _wrap1(nx)
                y = _wrap1(ny)
            out[s, 0] = x
            out[s, 1] = y
            jac[s, 0] = a
            jac[s, 1] = b
            jac[s, 2] = c
            jac[s, 3] = d
    return out_arr.reshape(shape), jac_arr.reshape(shape[:-1] + (2, 2))


def orbit(A, kv, amp, phase, double eps, double x0, double y0, Py_ssize_t nsteps):
    cdef double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] kv_ = np.ascontiguousarray(kv, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] amp_ = np.ascontiguousarray(amp, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] ph_ = np.ascontiguousarray(phase, dtype=np.float64).reshape(-1, 2)
    out_arr = np.empty((nsteps + 1, 2))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i
    cdef double x = x0, y = y0, nx, ny
    out[0, 0] = x
    out[0, 1] = y
    with nogil:
        for i in range(1, nsteps + 1):
            _step(A_, kv_, amp_, ph_, eps, x, y, &nx, &ny, NULL)
            x = _wrap1(nx)
            y = _wrap1(ny)
            out[i, 0] = x
            out[i, 1] = y
    return out_arr


def inverse_orbit(A, kv, amp, phase, double eps, double x0, double y0, Py_ssize_t nsteps,
                  double tol=1e-14, int maxiter=50):
    cdef double[:, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] kv_ = np.ascontiguousarray(kv, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] amp_ = np.ascontiguousarray(amp, dtype=np.float64).reshape(-1, 2)
    cdef double[:, ::1] ph_ = np.ascontiguousarray(phase, dtype=np.float64).reshape(-1, 2)
    out_arr = np.empty((nsteps + 1, 2))
    cdef double[:, ::1] out = out_arr
    cdef double det = A_[0, 0] * A_[1, 1] - A_[0, 1] * A_[1, 0]
    cdef double i00 = A_[1, 1] / det, i01 = -A_[0, 1] / det
    cdef double i10 = -A_[1, 0] / det, i11 = A_[0, 0] / det
    cdef Py_ssize_t i
    cdef int it
    cdef double cx = x0, cy = y0, gx, gy, nx, ny, rx, ry, dj, sx, sy
    cdef double j[4]
    out[0, 0] = cx
    out[0, 1] = cy
    with nogil:
        for i in range(1, nsteps + 1):
            gx = i00 * cx + i01 * cy
            gy = i10 * cx + i11 * cy
            for it in range(maxiter):
                _step(A_, kv_, amp_, ph_, eps, gx, gy, &nx, &ny, j)
                rx = nx - cx
                ry = ny - cy
                rx = rx - floor(rx + 0.5)
                ry = ry - floor(ry + 0.5)
                dj = j[0] * j[3] - j[1] * j[2]
                sx = (j[3] * rx - j[1] * ry) / dj
                sy = (-j[2] * rx + j[0] * ry) / dj
                gx = gx - sx
                gy = gy - sy
                if fabs(sx) + fabs(sy) < tol:
                    break
            cx = _wrap1(gx)
            cy = _wrap1(gy)
            out[i, 0] = cx
            out[i, 1] = cy
    return out_arr
