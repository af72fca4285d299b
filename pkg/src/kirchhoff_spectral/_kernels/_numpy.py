"""Pure-numpy kernels.

Reference backend: every routine here has a numba twin in ``_jit`` with the
same signature. The integrator takes an arbitrary vectorised callable ``m``,
so it also serves nonlinearities that have no compiled preset.
"""

import math

import numpy as np

from ._tableau import (
    A21, A31, A32, A41, A42, A43, A51, A52, A53, A54,
    A61, A62, A63, A64, A65, A71, A73, A74, A75, A76,
    E1, E3, E4, E5, E6, E7,
    SAFE, FAC_MIN, FAC_MAX, BETA, EXPO1,
    STATUS_OK, STATUS_STALLED, STATUS_MAX_STEPS, STATUS_NONFINITE, TINY,
)


def galerkin_rhs(m, lam2, y):
    k = lam2.shape[0]
    u = y[:k]
    sigma = float(np.dot(lam2, u * u))
    c = float(m(sigma))
    out = np.empty_like(y)
    out[:k] = y[k:]
    out[k:] = -c * lam2 * u
    return out


def _error_norm(err, y, y_new, rtol, atol):
    sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return math.sqrt(float(np.mean((err / sc) ** 2)))


def _initial_step(m, lam2, y0, f0, rtol, atol, hmax):
    sk = atol + rtol * np.abs(y0)
    dnf = float(np.mean((f0 / sk) ** 2))
    dny = float(np.mean((y0 / sk) ** 2))
    if dnf <= 1e-10 or dny <= 1e-10:
        h = 1e-6
    else:
        h = 0.01 * math.sqrt(dny / dnf)
    h = min(h, hmax)
    f1 = galerkin_rhs(m, lam2, y0 + h * f0)
    der2 = math.sqrt(float(np.mean(((f1 - f0) / sk) ** 2))) / h
    der12 = max(der2, math.sqrt(dnf))
    if der12 <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / der12) ** 0.2
    return min(100.0 * h, h1, hmax)


def dopri_step(m, lam2, y, h):
    """One Dormand-Prince step; returns (5th order state, error vector, last stage)."""
    k1 = galerkin_rhs(m, lam2, y)
    k2 = galerkin_rhs(m, lam2, y + h * A21 * k1)
    k3 = galerkin_rhs(m, lam2, y + h * (A31 * k1 + A32 * k2))
    k4 = galerkin_rhs(m, lam2, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
    k5 = galerkin_rhs(m, lam2, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
    k6 = galerkin_rhs(
        m, lam2, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)
    )
    y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
    k7 = galerkin_rhs(m, lam2, y_new)
    err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
    return y_new, err, k7


def dopri_integrate(m, lam2, y0, t_end, rtol, atol, max_steps):
    """Adaptive DOPRI5 with PI step control.

    Returns ``(ts, ys, nfev, status)``; ``ys`` holds one row per accepted step,
    the initial state included.
    """
    lam2 = np.asarray(lam2, dtype=np.float64)
    y = np.array(y0, dtype=np.float64)
    ts = [0.0]
    ys = [y.copy()]
    t = 0.0
    f0 = galerkin_rhs(m, lam2, y)
    if not np.all(np.isfinite(f0)):
        return np.array(ts), np.array(ys), 1, STATUS_NONFINITE
    h = _initial_step(m, lam2, y, f0, rtol, atol, t_end)
    nfev = 2
    facold = 1e-4
    n_steps = 0
    while t < t_end:
        if n_steps >= max_steps:
            return np.array(ts), np.array(ys), nfev, STATUS_MAX_STEPS
        if h < 10.0 * TINY * max(abs(t), 1.0):
            return np.array(ts), np.array(ys), nfev, STATUS_STALLED
        last = t + h >= t_end
        if last:
            h = t_end - t
        y_new, err_vec, _ = dopri_step(m, lam2, y, h)
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
            y = y_new
            ts.append(t)
            ys.append(y.copy())
            h = h / fac
        else:
            h = h / min(1.0 / FAC_MIN, fac11 / SAFE)
    return np.array(ts), np.array(ys), nfev, STATUS_OK


def mollify_batch(samples, step, ts, eps, nodes, kweights):
    """Σ_j kweights[j] * f(ts + eps * nodes[j]) with f the clamped linear interpolant."""
    grid = step * np.arange(samples.shape[0])
    x = np.asarray(ts, dtype=np.float64)[:, None] + eps * nodes[None, :]
    return np.interp(x, grid, samples) @ kweights


def logsumexp(x):
    if x.size == 0:
        return -math.inf
    mx = float(np.max(x))
    if not math.isfinite(mx):
        return mx
    return mx + math.log(float(np.sum(np.exp(x - mx))))


def suffix_logsumexp(x):
    """out[i] = log Σ_{j>=i} exp(x[j]); out[len(x)] = -inf."""
    out = np.full(x.shape[0] + 1, -np.inf)
    if x.size:
        out[:-1] = np.logaddexp.accumulate(x[::-1])[::-1]
    return out
