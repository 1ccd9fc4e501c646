"""Compiled inner loops for the Monte Carlo integrators.

Each kernel advances one trajectory over a block of pre-drawn standard
normals, carrying its state in the arrays it is given.  The return value is
-1 on success or the block-local step index at which the state left the
divergence box.
"""

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def linear_block(x, A, B, z, dt, heun, T, acc, accumulate, rec, rec_stride, step0, limit):
    n = x.shape[0]
    m = B.shape[1]
    k = T.shape[0]
    sqdt = np.sqrt(dt)
    kick = np.empty(n)
    f = np.empty(n)
    xb = np.empty(n)
    y = np.empty(k)
    for t in range(z.shape[0]):
        for i in range(n):
            s = 0.0
            for j in range(m):
                s += B[i, j] * z[t, j]
            kick[i] = s * sqdt
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += A[i, j] * x[j]
            f[i] = s
        if heun:
            for i in range(n):
                xb[i] = x[i] + f[i] * dt + kick[i]
            for i in range(n):
                s = 0.0
                for j in range(n):
                    s += A[i, j] * xb[j]
                x[i] = x[i] + 0.5 * (f[i] + s) * dt + kick[i]
        else:
            for i in range(n):
                x[i] = x[i] + f[i] * dt + kick[i]
        for i in range(n):
            if not abs(x[i]) <= limit:
                return t
        if accumulate:
            for a in range(k):
                s = 0.0
                for j in range(n):
                    s += T[a, j] * x[j]
                y[a] = s
            for a in range(k):
                for b in range(k):
                    acc[a, b] += y[a] * y[b]
        if rec_stride > 0:
            step = step0 + t + 1
            if step % rec_stride == 0:
                r = step // rec_stride
                if r < rec.shape[0]:
                    for i in range(n):
                        rec[r, i] = x[i]
    return -1


@njit(nogil=True, cache=True)
def delayed_block(x, buf_x, buf_w, cursor, z, dt, heun, gain, a, cp, c, acc, accumulate,
                  rec, rec_stride, step0, limit):
    """Conditioned (X, P) driven by the record delayed by len(buf_x) steps.

    Returns (status, cursor).
    """
    K = buf_x.shape[0]
    sqdt = np.sqrt(dt)
    for t in range(z.shape[0]):
        dw = z[t] * sqdt
        xd0 = buf_x[cursor]
        wd0 = buf_w[cursor]
        if K == 1:
            xd1 = x[0]
        else:
            xd1 = buf_x[(cursor + 1) % K]
        buf_x[cursor] = x[0]
        buf_w[cursor] = dw
        cursor = (cursor + 1) % K

        kx = a * dw
        kp = cp * dw + gain * c * wd0
        fx = x[1]
        fp = -x[0] + gain * xd0
        if heun:
            xb0 = x[0] + fx * dt + kx
            xb1 = x[1] + fp * dt + kp
            gx = xb1
            gp = -xb0 + gain * xd1
            x[0] = x[0] + 0.5 * (fx + gx) * dt + kx
            x[1] = x[1] + 0.5 * (fp + gp) * dt + kp
        else:
            x[0] = x[0] + fx * dt + kx
            x[1] = x[1] + fp * dt + kp
        if not (abs(x[0]) <= limit and abs(x[1]) <= limit):
            return t, cursor
        if accumulate:
            acc[0, 0] += x[0] * x[0]
            acc[0, 1] += x[0] * x[1]
            acc[1, 0] += x[1] * x[0]
            acc[1, 1] += x[1] * x[1]
        if rec_stride > 0:
            step = step0 + t + 1
            if step % rec_stride == 0:
                r = step // rec_stride
                if r < rec.shape[0]:
                    rec[r, 0] = x[0]
                    rec[r, 1] = x[1]
    return -1, cursor
