"""Pure-numpy reference implementation of the stepping kernel.

Semantics are identical to the compiled extension ``_stepper``; the
compiled module is preferred at import time and this one is the fallback
(select it explicitly with ELLIPSAX_FORCE_PY=1).  The right-hand side is

    x'  = v
    v'  = mu * A^{-1} x + (j^2 / x_1^3) e_1,
    mu  = (<A^{-1}x, grad V> - <A^{-1}v, v>) / |A^{-1}x|^2,
    V   = j^2 / (2 x_1^2),

which for j = 0 reduces to the geodesic equation v' = -nu A^{-1} x with
nu = <A^{-1}v, v>/|A^{-1}x|^2.  Every ``proj_every`` accepted steps the
state is re-projected: x radially onto the ellipsoid, v onto the tangent
space, |v| onto the initial energy shell (for j = 0 this is exactly the
unit-speed renormalization).
"""

import numpy as np

from . import tableau as tb

BACKEND = "python"


def _rhs(ainv, y, jsq, out):
    n = ainv.size
    x = y[:n]
    v = y[n:]
    ax = ainv * x
    den = float(ax @ ax)
    num = float((ainv * v) @ v)
    if jsq > 0.0:
        s = -jsq * ainv[0] / (x[0] * x[0])
    else:
        s = 0.0
    mu = (s - num) / den
    out[:n] = v
    out[n:] = mu * ax
    if jsq > 0.0:
        out[n] += jsq / (x[0] ** 3)
    return out


def _project(ainv, y, jsq, energy0):
    n = ainv.size
    x = y[:n]
    v = y[n:]
    q = float((ainv * x) @ x)
    x *= 1.0 / np.sqrt(q)
    nr = ainv * x
    nr = nr / np.linalg.norm(nr)
    v -= nr * float(nr @ v)
    pot = 0.5 * jsq / (x[0] * x[0]) if jsq > 0.0 else 0.0
    tgt = 2.0 * (energy0 - pot)
    sp = float(np.linalg.norm(v))
    if tgt > 0.0 and sp > 0.0:
        v *= np.sqrt(tgt) / sp


def _initial_step(ainv, y0, f0, t_max, rtol, atol, max_step, jsq):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = _rhs(ainv, y1, jsq, np.empty_like(y0))
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step, t_max)


def integrate_raw(ainv, y0, t_max, rtol, atol, max_step, proj_every, jsq,
                  barrier_min, max_steps):
    """Adaptive Dormand-Prince 5(4) run from t=0 to t_max.

    Returns (status, ts, ys, ks, hs) where ts has m+1 node times, ys the
    (possibly projected) node states, ks the 7 stage derivatives and hs
    the step size of each accepted step (dense-output ingredients).
    """
    ainv = np.ascontiguousarray(ainv, dtype=float)
    y = np.array(y0, dtype=float)
    dim = y.size
    n = ainv.size
    energy0 = 0.5 * float(y[n:] @ y[n:])
    if jsq > 0.0:
        energy0 += 0.5 * jsq / (y[0] * y[0])

    cap = 512
    ts = np.empty(cap + 1)
    ys = np.empty((cap + 1, dim))
    ks = np.empty((cap, 7, dim))
    hs = np.empty(cap)
    ts[0] = 0.0
    ys[0] = y

    k = np.empty((7, dim))
    ytmp = np.empty(dim)
    f0 = _rhs(ainv, y, jsq, np.empty(dim))
    h = _initial_step(ainv, y, f0, t_max, rtol, atol, max_step, jsq)

    t = 0.0
    m = 0
    status = tb.STATUS_OK
    total = 0
    A, B, C, E = tb.A, tb.B, tb.C, tb.E
    while t < t_max:
        if total >= max_steps:
            status = tb.STATUS_MAXSTEPS
            break
        total += 1
        hstep = min(h, t_max - t)
        _rhs(ainv, y, jsq, k[0])
        for i in range(1, 6):
            ytmp[:] = y
            for j in range(i):
                aij = A[i, j]
                if aij != 0.0:
                    ytmp += (hstep * aij) * k[j]
            _rhs(ainv, ytmp, jsq, k[i])
        y1 = y + hstep * (B @ k[:6])
        _rhs(ainv, y1, jsq, k[6])
        err_vec = hstep * (E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y1))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0:
            # accept
            if m == cap:
                new_cap = cap * 2
                ts2 = np.empty(new_cap + 1); ts2[:cap + 1] = ts; ts = ts2
                ys2 = np.empty((new_cap + 1, dim)); ys2[:cap + 1] = ys; ys = ys2
                ks2 = np.empty((new_cap, 7, dim)); ks2[:cap] = ks; ks = ks2
                hs2 = np.empty(new_cap); hs2[:cap] = hs; hs = hs2
                cap = new_cap
            t += hstep
            y = y1
            m += 1
            if proj_every > 0 and m % proj_every == 0:
                _project(ainv, y, jsq, energy0)
            ts[m] = t
            ys[m] = y
            ks[m - 1] = k
            hs[m - 1] = hstep
            if jsq > 0.0 and abs(y[0]) < barrier_min:
                status = tb.STATUS_BARRIER
                break
            if err == 0.0:
                factor = tb.MAX_FACTOR
            else:
                factor = min(tb.MAX_FACTOR,
                             max(tb.MIN_FACTOR, tb.SAFETY * err ** tb.ERROR_EXPONENT))
            h = min(hstep * factor, max_step)
        else:
            h = hstep * max(tb.MIN_FACTOR, tb.SAFETY * err ** tb.ERROR_EXPONENT)
        if h < 1e-14 * max(1.0, abs(t)):
            status = tb.STATUS_UNDERFLOW
            break

    return status, ts[:m + 1].copy(), ys[:m + 1].copy(), ks[:m].copy(), hs[:m].copy()
