"""numba kernels; same contracts as ``_numpy``.

The nonlinearity is passed as an integer preset code plus one parameter,
since arbitrary Python callables cannot run in nopython mode.
"""

import math

import numba
import numpy as np

from ._tableau import (
    A21, A31, A32, A41, A42, A43, A51, A52, A53, A54,
    A61, A62, A63, A64, A65, A71, A73, A74, A75, A76,
    E1, E3, E4, E5, E6, E7,
    SAFE, FAC_MIN, FAC_MAX, BETA, EXPO1,
    STATUS_OK, STATUS_STALLED, STATUS_MAX_STEPS, STATUS_NONFINITE, TINY,
)

_opts = dict(nopython=True, nogil=True, cache=True, fastmath=False)

M_LINEAR = 0
M_KIRCHHOFF = 1
M_DEGENERATE = 2
M_HOELDER_DEGENERATE = 3


@numba.jit(**_opts)
def m_eval(code, param, sigma):
    if code == M_LINEAR:
        return 1.0
    if code == M_KIRCHHOFF:
        return 1.0 + sigma
    if code == M_DEGENERATE:
        return sigma
    if code == M_HOELDER_DEGENERATE:
        return sigma ** param if sigma > 0.0 else 0.0
    return math.nan


@numba.jit(**_opts)
def _rhs(code, param, lam2, y, out):
    k = lam2.shape[0]
    sigma = 0.0
    for i in range(k):
        sigma += lam2[i] * y[i] * y[i]
    c = m_eval(code, param, sigma)
    for i in range(k):
        out[i] = y[k + i]
        out[k + i] = -c * lam2[i] * y[i]


@numba.jit(**_opts)
def _stage(y, h, out, k1, a1, k2, a2, k3, a3, k4, a4, k5, a5):
    for i in range(y.shape[0]):
        out[i] = y[i] + h * (a1 * k1[i] + a2 * k2[i] + a3 * k3[i] + a4 * k4[i] + a5 * k5[i])


@numba.jit(**_opts)
def _step_into(code, param, lam2, y, h, k1, k2, k3, k4, k5, k6, k7, tmp, y_new, err):
    # k1 must already hold f(y)
    _stage(y, h, tmp, k1, A21, k1, 0.0, k1, 0.0, k1, 0.0, k1, 0.0)
    _rhs(code, param, lam2, tmp, k2)
    _stage(y, h, tmp, k1, A31, k2, A32, k1, 0.0, k1, 0.0, k1, 0.0)
    _rhs(code, param, lam2, tmp, k3)
    _stage(y, h, tmp, k1, A41, k2, A42, k3, A43, k1, 0.0, k1, 0.0)
    _rhs(code, param, lam2, tmp, k4)
    _stage(y, h, tmp, k1, A51, k2, A52, k3, A53, k4, A54, k1, 0.0)
    _rhs(code, param, lam2, tmp, k5)
    _stage(y, h, tmp, k1, A61, k2, A62, k3, A63, k4, A64, k5, A65)
    _rhs(code, param, lam2, tmp, k6)
    _stage(y, h, y_new, k1, A71, k3, A73, k4, A74, k5, A75, k6, A76)
    _rhs(code, param, lam2, y_new, k7)
    for i in range(y.shape[0]):
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                      + E6 * k6[i] + E7 * k7[i])


@numba.jit(**_opts)
def dopri_step(code, param, lam2, y, h):
    n = y.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    y_new = np.empty(n)
    err = np.empty(n)
    _rhs(code, param, lam2, y, k1)
    _step_into(code, param, lam2, y, h, k1, k2, k3, k4, k5, k6, k7, tmp, y_new, err)
    return y_new, err, k7


@numba.jit(**_opts)
def _error_norm(err, y, y_new, rtol, atol):
    acc = 0.0
    n = y.shape[0]
    for i in range(n):
        sc = atol[i] + rtol * max(abs(y[i]), abs(y_new[i]))
        r = err[i] / sc
        acc += r * r
    return math.sqrt(acc / n)


@numba.jit(**_opts)
def _initial_step(code, param, lam2, y0, f0, rtol, atol, hmax):
    n = y0.shape[0]
    dnf = 0.0
    dny = 0.0
    for i in range(n):
        sk = atol[i] + rtol * abs(y0[i])
        dnf += (f0[i] / sk) ** 2
        dny += (y0[i] / sk) ** 2
    dnf /= n
    dny /= n
    if dnf <= 1e-10 or dny <= 1e-10:
        h = 1e-6
    else:
        h = 0.01 * math.sqrt(dny / dnf)
    h = min(h, hmax)
    y1 = np.empty(n)
    for i in range(n):
        y1[i] = y0[i] + h * f0[i]
    f1 = np.empty(n)
    _rhs(code, param, lam2, y1, f1)
    der2 = 0.0
    for i in range(n):
        sk = atol[i] + rtol * abs(y0[i])
        der2 += ((f1[i] - f0[i]) / sk) ** 2
    der2 = math.sqrt(der2 / n) / h
    der12 = max(der2, math.sqrt(dnf))
    if der12 <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / der12) ** 0.2
    return min(100.0 * h, h1, hmax)


@numba.jit(**_opts)
def dopri_integrate(code, param, lam2, y0, t_end, rtol, atol, max_steps):
    n = y0.shape[0]
    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    y = y0.copy()
    ts[0] = 0.0
    ys[0, :] = y
    count = 1
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    tmp = np.empty(n)
    y_new = np.empty(n)
    err_vec = np.empty(n)
    _rhs(code, param, lam2, y, k1)
    for i in range(n):
        if not math.isfinite(k1[i]):
            return ts[:count].copy(), ys[:count].copy(), 1, STATUS_NONFINITE
    h = _initial_step(code, param, lam2, y, k1, rtol, atol, t_end)
    nfev = 2
    facold = 1e-4
    n_steps = 0
    t = 0.0
    status = STATUS_OK
    while t < t_end:
        if n_steps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < 10.0 * TINY * max(abs(t), 1.0):
            status = STATUS_STALLED
            break
        last = t + h >= t_end
        if last:
            h = t_end - t
        _step_into(code, param, lam2, y, h, k1, k2, k3, k4, k5, k6, k7, tmp, y_new, err_vec)
        nfev += 6
        n_steps += 1
        err = _error_norm(err_vec, y, y_new, rtol, atol)
        if not math.isfinite(err):
            h *= FAC_MIN
            continue
        fac11 = err ** EXPO1
        if err <= 1.0:
            fac = fac11 / facold ** BETA
            fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFE))
            facold = max(err, 1e-4)
            t = t_end if last else t + h
            for i in range(n):
                y[i] = y_new[i]
                k1[i] = k7[i]
            if count == cap:
                cap *= 2
                ts_big = np.empty(cap)
                ys_big = np.empty((cap, n))
                ts_big[:count] = ts[:count]
                ys_big[:count, :] = ys[:count, :]
                ts = ts_big
                ys = ys_big
            ts[count] = t
            ys[count, :] = y
            count += 1
            h = h / fac
        else:
            h = h / min(1.0 / FAC_MIN, fac11 / SAFE)
    return ts[:count].copy(), ys[:count].copy(), nfev, status


@numba.jit(**_opts)
def mollify_batch(samples, step, ts, eps, nodes, kweights):
    n = samples.shape[0]
    a = step * (n - 1)
    out = np.empty(ts.shape[0])
    for i in range(ts.shape[0]):
        acc = 0.0
        for j in range(nodes.shape[0]):
            x = ts[i] + eps * nodes[j]
            if x <= 0.0:
                fx = samples[0]
            elif x >= a:
                fx = samples[n - 1]
            else:
                q = x / step
                idx = int(q)
                if idx >= n - 1:
                    idx = n - 2
                frac = q - idx
                fx = samples[idx] + frac * (samples[idx + 1] - samples[idx])
            acc += kweights[j] * fx
        out[i] = acc
    return out


@numba.jit(**_opts)
def logsumexp(x):
    if x.shape[0] == 0:
        return -math.inf
    mx = -math.inf
    for v in x:
        if v > mx:
            mx = v
    if not math.isfinite(mx):
        return mx
    acc = 0.0
    for v in x:
        acc += math.exp(v - mx)
    return mx + math.log(acc)


@numba.jit(**_opts)
def suffix_logsumexp(x):
    n = x.shape[0]
    out = np.empty(n + 1)
    out[n] = -math.inf
    for i in range(n - 1, -1, -1):
        a = x[i]
        b = out[i + 1]
        if a == -math.inf:
            out[i] = b
        elif b == -math.inf:
            out[i] = a
        else:
            mx = max(a, b)
            out[i] = mx + math.log(math.exp(a - mx) + math.exp(b - mx))
    return out
