# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernel (Dormand-Prince 5(4) with constraint projection).

Mirrors ``_stepper_py`` exactly: same tableau, same controller, same
projection; see that module for the equations.  The stepping loop runs
without the GIL so a thread pool over independent trajectories gets real
parallelism.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow, fmin, fmax

cnp.import_array()

BACKEND = "compiled"

# -- tableau (identical expressions to tableau.py) --------------------------

cdef double[6] C_ = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0]
cdef double[6][5] A_ = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40, 9.0 / 40, 0.0, 0.0, 0.0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0.0, 0.0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0.0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656],
]
cdef double[6] B_ = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                     -2187.0 / 6784, 11.0 / 84]
cdef double[7] E_ = [-71.0 / 57600, 0.0, 71.0 / 16695, -71.0 / 1920,
                     17253.0 / 339200, -22.0 / 525, 1.0 / 40]

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0

cdef int STATUS_OK = 0
cdef int STATUS_BARRIER = 1
cdef int STATUS_UNDERFLOW = 2
cdef int STATUS_MAXSTEPS = 3


cdef inline void rhs(double[::1] ainv, double* y, double jsq, double* out,
                     int n) noexcept nogil:
    cdef int i
    cdef double den = 0.0, num = 0.0, s = 0.0, mu, ax
    for i in range(n):
        ax = ainv[i] * y[i]
        den += ax * ax
        num += ainv[i] * y[n + i] * y[n + i]
    if jsq > 0.0:
        s = -jsq * ainv[0] / (y[0] * y[0])
    mu = (s - num) / den
    for i in range(n):
        out[i] = y[n + i]
        out[n + i] = mu * ainv[i] * y[i]
    if jsq > 0.0:
        out[n] += jsq / (y[0] * y[0] * y[0])


cdef inline void project(double[::1] ainv, double* y, double jsq,
                         double energy0, int n) noexcept nogil:
    cdef int i
    cdef double q = 0.0, nn = 0.0, dot = 0.0, sp = 0.0, pot = 0.0, tgt, r
    for i in range(n):
        q += ainv[i] * y[i] * y[i]
    r = 1.0 / sqrt(q)
    for i in range(n):
        y[i] *= r
    for i in range(n):
        nn += ainv[i] * y[i] * ainv[i] * y[i]
        dot += ainv[i] * y[i] * y[n + i]
    # v -= n_hat <n_hat, v>  ==  v -= (A^{-1}x) <A^{-1}x, v> / |A^{-1}x|^2
    for i in range(n):
        y[n + i] -= ainv[i] * y[i] * dot / nn
    if jsq > 0.0:
        pot = 0.5 * jsq / (y[0] * y[0])
    tgt = 2.0 * (energy0 - pot)
    for i in range(n):
        sp += y[n + i] * y[n + i]
    sp = sqrt(sp)
    if tgt > 0.0 and sp > 0.0:
        r = sqrt(tgt) / sp
        for i in range(n):
            y[n + i] *= r


def integrate_raw(object ainv_in, object y0_in, double t_max, double rtol,
                  double atol, double max_step, int proj_every, double jsq,
                  double barrier_min, long max_steps):
    """See ``_stepper_py.integrate_raw``; identical contract."""
    cdef cnp.ndarray[double, ndim=1] ainv_arr = np.ascontiguousarray(ainv_in, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] y_arr = np.array(y0_in, dtype=np.float64)
    cdef double[::1] ainv = ainv_arr
    cdef int n = ainv.shape[0]
    cdef int dim = 2 * n
    if y_arr.shape[0] != dim:
        raise ValueError("state length must be 2*n")

    cdef double energy0 = 0.0
    cdef int i, j, st
    for i in range(n):
        energy0 += 0.5 * y_arr[n + i] * y_arr[n + i]
    if jsq > 0.0:
        energy0 += 0.5 * jsq / (y_arr[0] * y_arr[0])

    cdef long cap = 512
    cdef cnp.ndarray ts = np.empty(cap + 1)
    cdef cnp.ndarray ys = np.empty((cap + 1, dim))
    cdef cnp.ndarray ks = np.empty((cap, 7, dim))
    cdef cnp.ndarray hs = np.empty(cap)
    cdef double[::1] ts_v = ts
    cdef double[:, ::1] ys_v = ys
    cdef double[:, :, ::1] ks_v = ks
    cdef double[::1] hs_v = hs

    cdef cnp.ndarray work = np.empty((11, dim))
    cdef double[:, ::1] w = work
    # rows 0..6: k stages; 7: y; 8: ytmp; 9: y1; 10: f-scratch
    cdef double* y = &w[7, 0]
    cdef double* ytmp = &w[8, 0]
    cdef double* y1 = &w[9, 0]
    cdef double* fs = &w[10, 0]
    for i in range(dim):
        y[i] = y_arr[i]

    # -- initial step size (same formula as the python backend) --
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0, h0, h1, h, sc
    rhs(ainv, y, jsq, &w[0, 0], n)
    for i in range(dim):
        sc = atol + rtol * fabs(y[i])
        d0 += (y[i] / sc) * (y[i] / sc)
        d1 += (w[0, i] / sc) * (w[0, i] / sc)
    d0 = sqrt(d0 / dim)
    d1 = sqrt(d1 / dim)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    for i in range(dim):
        ytmp[i] = y[i] + h0 * w[0, i]
    rhs(ainv, ytmp, jsq, fs, n)
    for i in range(dim):
        sc = atol + rtol * fabs(y[i])
        d2 += ((fs[i] - w[0, i]) / sc) * ((fs[i] - w[0, i]) / sc)
    d2 = sqrt(d2 / dim) / h0
    if fmax(d1, d2) <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / fmax(d1, d2), 0.2)
    h = fmin(fmin(100 * h0, h1), fmin(max_step, t_max))

    ts_v[0] = 0.0
    for i in range(dim):
        ys_v[0, i] = y[i]

    cdef double t = 0.0, hstep, err, acc, ev, factor
    cdef long m = 0, total = 0
    cdef int status = STATUS_OK
    cdef bint grow, done

    while True:
        done = True
        with nogil:
            while t < t_max:
                if total >= max_steps:
                    status = STATUS_MAXSTEPS
                    break
                total += 1
                hstep = fmin(h, t_max - t)
                rhs(ainv, y, jsq, &w[0, 0], n)
                for st in range(1, 6):
                    for i in range(dim):
                        acc = y[i]
                        for j in range(st):
                            if A_[st][j] != 0.0:
                                acc += hstep * A_[st][j] * w[j, i]
                        ytmp[i] = acc
                    rhs(ainv, ytmp, jsq, &w[st, 0], n)
                for i in range(dim):
                    acc = 0.0
                    for j in range(6):
                        if B_[j] != 0.0:
                            acc += B_[j] * w[j, i]
                    y1[i] = y[i] + hstep * acc
                rhs(ainv, y1, jsq, &w[6, 0], n)
                err = 0.0
                for i in range(dim):
                    ev = 0.0
                    for j in range(7):
                        if E_[j] != 0.0:
                            ev += E_[j] * w[j, i]
                    ev *= hstep
                    sc = atol + rtol * fmax(fabs(y[i]), fabs(y1[i]))
                    err += (ev / sc) * (ev / sc)
                err = sqrt(err / dim)

                if err <= 1.0:
                    if m == cap:
                        done = False  # need reallocation under the GIL
                        break
                    t += hstep
                    for i in range(dim):
                        y[i] = y1[i]
                    m += 1
                    if proj_every > 0 and m % proj_every == 0:
                        project(ainv, y, jsq, energy0, n)
                    ts_v[m] = t
                    for i in range(dim):
                        ys_v[m, i] = y[i]
                        for j in range(7):
                            ks_v[m - 1, j, i] = w[j, i]
                    hs_v[m - 1] = hstep
                    if jsq > 0.0 and fabs(y[0]) < barrier_min:
                        status = STATUS_BARRIER
                        break
                    if err == 0.0:
                        factor = MAX_FACTOR
                    else:
                        factor = fmin(MAX_FACTOR,
                                      fmax(MIN_FACTOR, SAFETY * pow(err, -0.2)))
                    h = fmin(hstep * factor, max_step)
                else:
                    h = hstep * fmax(MIN_FACTOR, SAFETY * pow(err, -0.2))
                if h < 1e-14 * fmax(1.0, fabs(t)):
                    status = STATUS_UNDERFLOW
                    break
        if done:
            break
        # grow storage and resume
        cap *= 2
        ts2 = np.empty(cap + 1); ts2[:m + 1] = ts[:m + 1]; ts = ts2
        ys2 = np.empty((cap + 1, dim)); ys2[:m + 1] = ys[:m + 1]; ys = ys2
        ks2 = np.empty((cap, 7, dim)); ks2[:m] = ks[:m]; ks = ks2
        hs2 = np.empty(cap); hs2[:m] = hs[:m]; hs = hs2
        ts_v = ts; ys_v = ys; ks_v = ks; hs_v = hs

    return (status, np.asarray(ts)[:m + 1].copy(), np.asarray(ys)[:m + 1].copy(),
            np.asarray(ks)[:m].copy(), np.asarray(hs)[:m].copy())
