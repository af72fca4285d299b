"""Galerkin system of the abstract Kirchhoff equation.

On the truncated eigenbasis the equation becomes the coupled system

    u_k' = v_k,    v_k' = -m(σ) λ_k² u_k,    σ = Σ_j λ_j² u_j²,

integrated with an adaptive Dormand-Prince 5(4) pair. The Hamiltonian
``|v|² + M(σ)`` is monitored, not enforced.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import _kernels
from ._kernels import STATUS_OK, STATUS_STALLED, STATUS_MAX_STEPS, STATUS_NONFINITE
from .errors import NumericError, PreconditionError
from .modulus import ContinuityModulus, SampledFunction
from .spectrum import Spectrum, StatePair, coupling, sobolev_norm_sq

__all__ = [
    "Nonlinearity",
    "Trajectory",
    "rhs",
    "hamiltonian",
    "integrate",
    "c_trace",
    "first_crossing",
]

_MIN_TOL = 100.0 * float(np.finfo(np.float64).eps)

_STATUS_TEXT = {
    STATUS_OK: "ok",
    STATUS_STALLED: "stalled",
    STATUS_MAX_STEPS: "max-steps",
    STATUS_NONFINITE: "non-finite",
}


# ---------------------------------------------------------------------------
# nonlinearities


def _adaptive_simpson(f, a, b, tol, depth=48):
    fa, fb, fc = f(a), f(b), f(0.5 * (a + b))
    whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb)
    return _simpson_rec(f, a, b, fa, fb, fc, whole, tol, depth)


def _simpson_rec(f, a, b, fa, fb, fc, whole, tol, depth):
    c = 0.5 * (a + b)
    d, e = 0.5 * (a + c), 0.5 * (c + b)
    fd, fe = f(d), f(e)
    left = (c - a) / 6.0 * (fa + 4.0 * fd + fc)
    right = (b - c) / 6.0 * (fc + 4.0 * fe + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return (_simpson_rec(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
            + _simpson_rec(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1))


class _Antiderivative:
    """``M(σ) = ∫_0^σ m`` by adaptive Simpson with cached integrals over ``[0, j*knot]``."""

    def __init__(self, m: Callable, tol: float = 1e-11, knot: float = 1.0):
        self._m = lambda s: float(m(s))
        self.tol = tol
        self.knot = knot
        self._prefix = {}

    def _prefix_to(self, j: int, tol: float) -> float:
        cache = self._prefix.setdefault(tol, [0.0])
        while len(cache) <= j:
            i = len(cache) - 1
            cache.append(cache[-1] + _adaptive_simpson(
                self._m, i * self.knot, (i + 1) * self.knot, tol))
        return cache[j]

    def scalar(self, sigma: float, tol: float | None = None) -> float:
        tol = self.tol if tol is None else tol
        if sigma < 0:
            raise ValueError("M is defined on [0, inf)")
        j = int(sigma // self.knot)
        base = j * self.knot
        rest = _adaptive_simpson(self._m, base, sigma, tol) if sigma > base else 0.0
        return self._prefix_to(j, tol) + rest

    def __call__(self, sigma, tol: float | None = None):
        if np.ndim(sigma) == 0:
            return self.scalar(float(sigma), tol)
        return np.array([self.scalar(float(s), tol) for s in np.ravel(sigma)]).reshape(np.shape(sigma))


@dataclass(frozen=True)
class Nonlinearity:
    """The coefficient ``m`` with its floor ``ν``, antiderivative ``M`` and ω-continuity data.

    ``code``/``param`` identify a compiled preset for the numba integrator;
    custom nonlinearities leave ``code=None`` and integrate on the numpy path.
    """

    name: str
    m: Callable = field(repr=False, compare=False)
    nu: float
    M: Callable = field(repr=False, compare=False)
    L: float | None = None
    omega: ContinuityModulus | None = None
    code: int | None = None
    param: float = 0.0

    @property
    def strict(self) -> bool:
        return self.nu > 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "param": self.param,
            "nu": self.nu,
            "L": self.L,
            "omega": None if self.omega is None else self.omega.to_dict(),
        }

    @classmethod
    def linear(cls) -> "Nonlinearity":
        return cls("linear", lambda s: np.ones_like(np.asarray(s, dtype=np.float64)), 1.0,
                   lambda s, tol=None: np.asarray(s, dtype=np.float64) * 1.0,
                   0.0, ContinuityModulus.lipschitz(), 0)

    @classmethod
    def kirchhoff(cls) -> "Nonlinearity":
        return cls("kirchhoff", lambda s: 1.0 + np.asarray(s, dtype=np.float64), 1.0,
                   lambda s, tol=None: np.asarray(s, dtype=np.float64) * (1.0 + 0.5 * np.asarray(s, dtype=np.float64)),
                   1.0, ContinuityModulus.lipschitz(), 1)

    @classmethod
    def degenerate(cls) -> "Nonlinearity":
        return cls("degenerate", lambda s: np.asarray(s, dtype=np.float64) * 1.0, 0.0,
                   lambda s, tol=None: 0.5 * np.asarray(s, dtype=np.float64) ** 2,
                   1.0, ContinuityModulus.lipschitz(), 2)

    @classmethod
    def hoelder_degenerate(cls, a: float) -> "Nonlinearity":
        """``m(σ) = σ^a``, ``0 < a < 1``: ``|x^a - y^a| <= |x - y|^a``."""
        a = float(a)
        if not 0.0 < a < 1.0:
            raise ValueError("exponent must lie in (0, 1)")
        return cls("hoelder-degenerate", lambda s: np.power(np.asarray(s, dtype=np.float64), a), 0.0,
                   lambda s, tol=None: np.power(np.asarray(s, dtype=np.float64), a + 1.0) / (a + 1.0),
                   1.0, ContinuityModulus.hoelder(a), 3, a)

    @classmethod
    def custom(cls, m: Callable, nu: float = 0.0, L: float | None = None,
               omega: ContinuityModulus | None = None, M: Callable | None = None,
               name: str = "custom", quad_tol: float = 1e-11) -> "Nonlinearity":
        if nu < 0:
            raise ValueError("nu must be nonnegative")
        if M is None:
            M = _Antiderivative(m, tol=quad_tol)
        return cls(name, m, float(nu), M, L, omega, None, 0.0)

    @classmethod
    def preset(cls, name: str, param: float | None = None) -> "Nonlinearity":
        if name == "linear":
            return cls.linear()
        if name == "kirchhoff":
            return cls.kirchhoff()
        if name == "degenerate":
            return cls.degenerate()
        if name == "hoelder-degenerate":
            if param is None:
                raise ValueError("hoelder-degenerate needs an exponent")
            return cls.hoelder_degenerate(param)
        raise ValueError(f"unknown nonlinearity preset {name!r}")

    def antiderivative(self, sigma, tol: float | None = None):
        try:
            return self.M(sigma, tol=tol)
        except TypeError:
            return self.M(sigma)

    def check(self, grid, fd_step: float = 1e-5, rtol: float = 1e-6) -> dict:
        """Sampled checks of ``m >= ν``, ``M(0) = 0`` and ``M' = m`` (central differences)."""
        g = np.asarray(grid, dtype=np.float64)
        mv = np.asarray(self.m(g), dtype=np.float64)
        gi = g[g > fd_step]
        fd = (np.asarray(self.antiderivative(gi + fd_step)) - np.asarray(self.antiderivative(gi - fd_step))) / (2 * fd_step)
        mi = np.asarray(self.m(gi), dtype=np.float64)
        fd_err = float(np.max(np.abs(fd - mi) / np.maximum(1.0, np.abs(mi)))) if gi.size else 0.0
        M0 = float(self.antiderivative(0.0))
        return {
            "floor_ok": bool(np.all(mv >= self.nu)),
            "M0_ok": M0 == 0.0,
            "fd_max_rel_err": fd_err,
            "pass": bool(np.all(mv >= self.nu) and M0 == 0.0 and fd_err <= rtol),
        }


# ---------------------------------------------------------------------------
# pointwise operations


def rhs(spec: Spectrum, nonlinearity: Nonlinearity, u, v):
    """Return ``(du, dv)`` with ``du = v`` and ``dv_k = -m(|A^{1/2}u|²) λ_k² u_k``."""
    u = spec.check(u)
    v = spec.check(v)
    c = float(nonlinearity.m(sobolev_norm_sq(spec, u, 0.5)))
    if not math.isfinite(c):
        raise NumericError("m evaluated to a non-finite value")
    return v.copy(), -c * spec.lam2 * u


def hamiltonian(spec: Spectrum, nonlinearity: Nonlinearity, u, v, tol: float | None = None) -> float:
    """``|v|² + M(|A^{1/2}u|²)``."""
    v = spec.check(v)
    return float(np.dot(v, v)) + float(nonlinearity.antiderivative(sobolev_norm_sq(spec, u, 0.5), tol))


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Accepted-step snapshots ``(t, u, u')`` of one integration."""

    spectrum: Spectrum
    nonlinearity: Nonlinearity
    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    tol: float
    T: float
    status: str = "ok"
    nfev: int = 0
    backend: str = "numpy"
    event_level: float | None = None

    def __len__(self):
        return int(self.t.size)

    @property
    def completed(self) -> bool:
        return self.status == "ok"

    @property
    def stalled_at(self) -> float | None:
        return None if self.completed else float(self.t[-1])

    @cached_property
    def norm_a12(self) -> np.ndarray:
        """``|A^{1/2}u(t)|²`` per snapshot."""
        return (self.u * self.u) @ self.spectrum.lam2

    @cached_property
    def c(self) -> np.ndarray:
        return np.asarray(self.nonlinearity.m(self.norm_a12), dtype=np.float64) * np.ones_like(self.t)

    @cached_property
    def coupling(self) -> np.ndarray:
        return (self.u * self.v) @ self.spectrum.lam2

    @cached_property
    def coupling_rate(self) -> np.ndarray:
        """``d/dt Σ λ_k² u_k v_k = Σ λ_k² v_k² - c Σ λ_k⁴ u_k²``."""
        lam2 = self.spectrum.lam2
        return (self.v * self.v) @ lam2 - self.c * ((self.u * self.u) @ (lam2 * lam2))

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        M = np.asarray(self.nonlinearity.antiderivative(self.norm_a12, self.tol / 10.0), dtype=np.float64)
        return np.sum(self.v * self.v, axis=1) + M

    @cached_property
    def event(self) -> float | None:
        if self.event_level is None:
            return None
        return first_crossing(self, self.event_level)

    def energy_drift(self) -> float:
        """``max_t |H(t) - H(0)| / max(H(0), tiny)``."""
        H = self.hamiltonian
        return float(np.max(np.abs(H - H[0])) / max(H[0], np.finfo(float).tiny))

    def state(self, i: int) -> np.ndarray:
        return np.concatenate([self.u[i], self.v[i]])

    def step_from(self, i: int, h: float) -> np.ndarray:
        """State at ``t[i] + h`` by one Dormand-Prince step from snapshot ``i``."""
        if h == 0:
            return self.state(i)
        return _kernels.dopri_step(self.nonlinearity, self.spectrum.lam2, self.state(i), h,
                                   backend=self.backend)

    def drift_stats(self) -> dict:
        H = self.hamiltonian
        return {
            "H0": float(H[0]),
            "max_rel_drift": self.energy_drift(),
            "final_rel_drift": float(abs(H[-1] - H[0]) / max(H[0], np.finfo(float).tiny)),
            "snapshots": len(self),
            "nfev": self.nfev,
            "status": self.status,
            "t_end": float(self.t[-1]),
        }

    def to_csv(self, path, modes: bool = False) -> None:
        header = ["t", "H", "normA12", "c", "coupling"]
        K = self.spectrum.K
        if modes:
            header += [f"u{k}" for k in range(1, K + 1)] + [f"v{k}" for k in range(1, K + 1)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(header)
            cols = [self.t, self.hamiltonian, self.norm_a12, self.c, self.coupling]
            for i in range(len(self)):
                row = [repr(float(col[i])) for col in cols]
                if modes:
                    row += [repr(float(x)) for x in self.u[i]] + [repr(float(x)) for x in self.v[i]]
                w.writerow(row)


def mode_scales(spec: Spectrum, pair: StatePair, floor: float = 1e-300) -> np.ndarray:
    """Amplitude scale of each ``u_k`` and ``v_k``, ``[a, λ a]`` with ``a = sqrt(u0² + (u1/λ)²)``."""
    lam = spec.lambdas
    pos = lam > 0
    safe = np.where(pos, lam, 1.0)
    amp = np.where(pos, np.hypot(pair.u0, pair.u1 / safe), np.abs(pair.u0) + np.abs(pair.u1))
    return np.maximum(np.concatenate([amp, np.where(pos, lam * amp, amp)]), floor)


def integrate(spec: Spectrum, nonlinearity: Nonlinearity, pair: StatePair, T: float,
              tol: float = 1e-9, event_level: float | None = None,
              max_steps: int = 10_000_000, backend=None,
              error_scale: str = "mode") -> Trajectory:
    """Integrate on ``[0, T]`` with per-step error control at ``tol``.

    ``rtol = tol`` always. With ``error_scale="absolute"`` also ``atol = tol``;
    with the default ``"mode"`` the absolute tolerance of each mode is
    ``tol`` times that mode's initial amplitude, so a coefficient of size
    ``1e-200`` is still resolved to relative accuracy ``tol``. Each mode
    obeys a linear equation given ``c(t)``, so the choice only affects step
    sizes, and modes that start at zero stay exactly zero.

    A stall (step-size underflow, non-finite state, or step budget exhausted)
    does not raise: the returned trajectory carries the partial history and
    a non-``"ok"`` status. With ``event_level`` set, :attr:`Trajectory.event`
    is the first time ``|coupling|`` reaches that level.
    """
    if not T > 0:
        raise PreconditionError("T must be positive")
    if not tol >= _MIN_TOL:
        raise PreconditionError(f"tol must be at least {_MIN_TOL:.3g} (100 unit roundoffs)")
    if pair.spectrum != spec:
        raise PreconditionError("pair is not defined on this spectrum")
    backend = _kernels.resolve_backend(backend)
    if nonlinearity.code is None:
        backend = "numpy"
    y0 = np.concatenate([pair.u0, pair.u1])
    if error_scale == "mode":
        # floored so that the error scale never underflows to zero
        atol = np.maximum(tol * mode_scales(spec, pair), np.finfo(np.float64).tiny)
    elif error_scale == "absolute":
        atol = tol
    else:
        raise ValueError("error_scale must be 'mode' or 'absolute'")
    ts, ys, nfev, status = _kernels.dopri_integrate(
        nonlinearity, spec.lam2, y0, T, tol, atol, max_steps, backend=backend)
    K = spec.K
    u = np.ascontiguousarray(ys[:, :K])
    v = np.ascontiguousarray(ys[:, K:])
    u.setflags(write=False)
    v.setflags(write=False)
    ts.setflags(write=False)
    return Trajectory(spec, nonlinearity, ts, u, v, float(tol), float(T),
                      _STATUS_TEXT[int(status)], int(nfev), backend, event_level)


def c_trace(traj: Trajectory, t_max: float | None = None, step: float | None = None) -> SampledFunction:
    """``c(t) = m(|A^{1/2}u(t)|²)`` resampled uniformly on ``[0, t_max]``."""
    t, c = traj.t, traj.c
    if t_max is not None and t_max < t[-1]:
        keep = t < t_max
        t = np.append(t[keep], t_max)
        c = np.append(c[keep], np.interp(t_max, traj.t, traj.c))
    if t.size < 2:
        raise ValueError("trajectory is too short to sample c(t)")
    return SampledFunction.resample(t, c, step=step)


def max_on(traj: Trajectory, values: np.ndarray, t_hi: float) -> float:
    """Max of a per-snapshot monitor over ``[0, t_hi]`` (linear between snapshots)."""
    keep = traj.t <= t_hi
    vals = values[keep]
    end = np.interp(t_hi, traj.t, values)
    return float(max(np.max(vals), end))


# ---------------------------------------------------------------------------
# level crossings of |coupling|


def _bisect(fun, lo, hi, t_scale, rel=1e-12):
    """Root of ``fun`` on ``[lo, hi]`` given ``fun(lo) < 0 <= fun(hi)``."""
    width = rel * max(t_scale, 1.0)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if fun(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def first_crossing(traj: Trajectory, level: float, touch_atol: float | None = None) -> float | None:
    """First ``t`` with ``|coupling(t)| >= level``, or ``None`` if it never happens.

    Transversal crossings are refined by bisection on in-step Dormand-Prince
    states to ~1e-12 relative time. A local maximum of ``|coupling|`` whose
    height is within ``touch_atol`` of ``level`` counts as a crossing at the
    maximiser: near such tangencies the crossing time is ill-conditioned
    (``O(sqrt(error))``) while the maximiser is not. ``touch_atol`` defaults
    to ``100 * tol * max(1, level)``.
    """
    if touch_atol is None:
        touch_atol = 100.0 * traj.tol * max(1.0, level)
    lam2 = traj.spectrum.lam2
    a = np.abs(traj.coupling)
    sgn = np.where(traj.coupling >= 0, 1.0, -1.0)
    da = sgn * traj.coupling_rate
    t = traj.t
    if a[0] >= level:
        return 0.0

    def state_at(i, tau):
        y = traj.step_from(i, tau)
        K = lam2.size
        return y[:K], y[K:]

    def abs_coupling(i, tau):
        u, v = state_at(i, tau)
        return abs(float(np.dot(lam2, u * v)))

    def abs_rate(i, tau):
        u, v = state_at(i, tau)
        cp = float(np.dot(lam2, u * v))
        c = float(traj.nonlinearity.m(float(np.dot(lam2, u * u))))
        rate = float(np.dot(lam2, v * v)) - c * float(np.dot(lam2 * lam2, u * u))
        return (1.0 if cp >= 0 else -1.0) * rate

    for i in range(len(t) - 1):
        h = t[i + 1] - t[i]
        if da[i] > 0 > da[i + 1]:
            bound = max(a[i], a[i + 1]) + h * da[i]
            if bound >= level - touch_atol:
                tau = _bisect(lambda s: -abs_rate(i, s), 0.0, h, t[i + 1])
                peak = abs_coupling(i, tau)
                if abs(peak - level) <= touch_atol:
                    return float(t[i] + tau)
                if peak > level:
                    tau_c = _bisect(lambda s: abs_coupling(i, s) - level, 0.0, tau, t[i + 1])
                    return float(t[i] + tau_c)
        if a[i + 1] >= level:
            tau_c = _bisect(lambda s: abs_coupling(i, s) - level, 0.0, h, t[i + 1])
            return float(t[i] + tau_c)
    return None
