"""Pure-Python/numpy versions of the hot loops in ``_kernels.pyx``.

Signatures and semantics match the compiled module exactly; ``reslab.kernels``
chooses between the two at import time.  Map parameters are passed unpacked:
``A`` (2, 2) float, ``kv`` (m, 2) float wavevectors, ``amp`` and ``phase``
(m, 2) float, ``eps`` float.  The map is ``T(x) = A x + eps * g(x)`` with
``g_i(x) = sum_t amp[t, i] * sin(2 pi kv[t] . x + phase[t, i])``.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def _wrap(x):
    y = x - np.floor(x)
    y[y >= 1.0] = 0.0
    return y


def map_and_jacobian(A, kv, amp, phase, eps, pts):
    """Lifted image ``A x + eps g(x)`` (not reduced mod 1) and ``D_x T`` for a batch of points."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    out = pts @ A.T
    jac = np.empty(pts.shape[:-1] + (2, 2))
    jac[...] = A
    if eps != 0.0 and len(kv):
        arg = TWO_PI * (pts @ kv.T)  # (..., m)
        for i in range(2):
            th = arg + phase[:, i]
            out[..., i] += eps * (np.sin(th) @ amp[:, i])
            dc = np.cos(th) * (TWO_PI * eps * amp[:, i])
            jac[..., i, 0] += dc @ kv[:, 0]
            jac[..., i, 1] += dc @ kv[:, 1]
    return out, jac


def iterate_with_jacobian(A, kv, amp, phase, eps, pts, n):
    """``T^n`` (reduced mod 1) and ``D T^n`` for a batch; the product is taken in orbit order."""
    q = np.array(pts, dtype=np.float64, copy=True)
    jac = np.empty(q.shape[:-1] + (2, 2))
    jac[...] = np.eye(2)
    for _ in range(n):
        img, d = map_and_jacobian(A, kv, amp, phase, eps, q)
        jac = d @ jac
        q = _wrap(img)
    return q, jac


def orbit(A, kv, amp, phase, eps, x0, y0, nsteps):
    """Forward orbit of length ``nsteps + 1`` starting at ``(x0, y0)``; every point in [0, 1)^2."""
    out = np.empty((nsteps + 1, 2))
    a00, a01, a10, a11 = float(A[0, 0]), float(A[0, 1]), float(A[1, 0]), float(A[1, 1])
    terms = [
        (TWO_PI * kv[t, 0], TWO_PI * kv[t, 1], eps * amp[t, 0], eps * amp[t, 1], phase[t, 0], phase[t, 1])
        for t in range(len(kv))
    ]
    if eps == 0.0:
        terms = []
    floor = math.floor
    sin = math.sin
    x, y = float(x0), float(y0)
    out[0] = x, y
    for i in range(1, nsteps + 1):
        nx = a00 * x + a01 * y
        ny = a10 * x + a11 * y
        for w0, w1, e0, e1, p0, p1 in terms:
            arg = w0 * x + w1 * y
            nx += e0 * sin(arg + p0)
            ny += e1 * sin(arg + p1)
        x = nx - floor(nx)
        y = ny - floor(ny)
        if x >= 1.0:
            x = 0.0
        if y >= 1.0:
            y = 0.0
        out[i, 0] = x
        out[i, 1] = y
    return out


def inverse_orbit(A, kv, amp, phase, eps, x0, y0, nsteps, tol=1e-14, maxiter=50):
    """Backward orbit: point ``i`` is ``T^{-i}(x0, y0)``, each preimage found by Newton on the lift."""
    Ainv = np.linalg.inv(A)
    out = np.empty((nsteps + 1, 2))
    cur = np.array([x0, y0], dtype=np.float64)
    out[0] = cur
    for i in range(1, nsteps + 1):
        guess = Ainv @ cur
        for _ in range(maxiter):
            img, jac = map_and_jacobian(A, kv, amp, phase, eps, guess)
            r = img - cur
            r -= np.round(r)
            step = np.linalg.solve(jac, r)
            guess = guess - step
            if abs(step[0]) + abs(step[1]) < tol:
                break
        cur = _wrap(guess.reshape(1, 2))[0]
        out[i] = cur
    return out
