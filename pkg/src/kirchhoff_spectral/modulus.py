"""Continuity moduli with their elementary inequalities; mollification.

A continuity modulus is an increasing, subadditive ``ω`` with ``ω(0) = 0``.
The axioms cannot be proved numerically, so every check here is a grid
check that *reports* violations instead of raising.

Mollification convolves a sampled function, extended by constants outside
``[0, a]``, with a smooth bump supported in ``[-1, 1]``; integrals over the
kernel variable use a fixed Gauss-Legendre rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import _kernels
from .errors import NumericError

__all__ = [
    "ContinuityModulus",
    "SampledFunction",
    "MollifierKernel",
    "AxiomReport",
    "InequalityReport",
    "check_modulus_axioms",
    "check_omega_inequalities",
    "mollify",
    "mollify_derivative",
    "estimate_gamma0",
    "mollifier_report",
    "empirical_modulus_constant",
]


# ---------------------------------------------------------------------------
# moduli


def _number(text: str) -> float:
    """Parse ``"0.5"``, ``"2/3"`` or ``"1e-3"``."""
    return float(Fraction(text.strip()))


@dataclass(frozen=True)
class ContinuityModulus:
    """Named, vectorised ``ω``. Use the preset constructors or :meth:`parse`."""

    name: str
    params: tuple
    func: Callable = field(repr=False, compare=False)

    def __call__(self, x):
        return self.func(x)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(repr(p) for p in self.params)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": list(self.params)}

    @classmethod
    def lipschitz(cls) -> "ContinuityModulus":
        return cls("lipschitz", (), lambda x: np.asarray(x, dtype=np.float64) * 1.0)

    @classmethod
    def hoelder(cls, a: float) -> "ContinuityModulus":
        a = float(a)
        if not 0.0 < a < 1.0:
            raise ValueError("Hölder exponent must lie in (0, 1)")
        return cls("hoelder", (a,), lambda x: np.power(np.asarray(x, dtype=np.float64), a))

    @classmethod
    def log_lipschitz(cls) -> "ContinuityModulus":
        def f(x):
            x = np.asarray(x, dtype=np.float64)
            with np.errstate(divide="ignore", invalid="ignore"):
                inner = x * (1.0 - np.log(np.where(x > 0, x, 1.0)))
            return np.where(x >= 1.0, x, np.where(x > 0, inner, 0.0))

        return cls("log-lipschitz", (), f)

    @classmethod
    def custom(cls, func: Callable, name: str = "custom") -> "ContinuityModulus":
        return cls(name, (), lambda x: np.asarray(func(np.asarray(x, dtype=np.float64)), dtype=np.float64))

    @classmethod
    def parse(cls, text: str) -> "ContinuityModulus":
        """``"lipschitz"``, ``"hoelder:0.5"``, ``"log-lipschitz"``."""
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        if name == "lipschitz" and not arg:
            return cls.lipschitz()
        if name in ("hoelder", "holder", "hölder") and arg:
            return cls.hoelder(_number(arg))
        if name == "log-lipschitz" and not arg:
            return cls.log_lipschitz()
        raise ValueError(f"unknown continuity modulus {text!r}")

    @classmethod
    def presets(cls) -> list:
        return [cls.lipschitz(), cls.hoelder(0.3), cls.hoelder(0.5), cls.log_lipschitz()]


def _viol(lhs, rhs, rtol):
    return lhs > rhs + rtol * np.maximum(np.abs(rhs), np.abs(lhs))


@dataclass
class AxiomReport:
    modulus: str
    zero_ok: bool
    omega_zero: float
    monotone_violations: list
    subadditive_violations: list
    n_pairs: int

    @property
    def passed(self) -> bool:
        return self.zero_ok and not self.monotone_violations and not self.subadditive_violations

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "pass": self.passed,
            "omega_zero": self.omega_zero,
            "zero_ok": self.zero_ok,
            "monotone_violations": self.monotone_violations,
            "subadditive_violations": self.subadditive_violations,
            "pairs_checked": self.n_pairs,
        }


def check_modulus_axioms(omega: ContinuityModulus, grid, rtol: float = 1e-12,
                         max_listed: int = 20) -> AxiomReport:
    """Grid check of ``ω(0) = 0``, monotonicity and ``ω(a+b) <= ω(a) + ω(b)``.

    Every unordered pair ``(a, b)`` of grid points, ``a == b`` included, is
    tested for subadditivity. Violations are listed (up to ``max_listed``).
    """
    x = np.sort(np.asarray(grid, dtype=np.float64).ravel())
    if x.size == 0 or np.any(x < 0):
        raise ValueError("grid must be nonempty and nonnegative")
    w0 = float(omega(0.0))
    wx = np.asarray(omega(x), dtype=np.float64)

    mono = []
    bad = np.nonzero(_viol(wx[:-1], wx[1:], rtol))[0]
    for i in bad[:max_listed]:
        mono.append({"x": float(x[i]), "y": float(x[i + 1]),
                     "omega_x": float(wx[i]), "omega_y": float(wx[i + 1])})

    i, j = np.triu_indices(x.size)
    lhs = np.asarray(omega(x[i] + x[j]), dtype=np.float64)
    rhs = wx[i] + wx[j]
    bad = np.nonzero(_viol(lhs, rhs, rtol))[0]
    sub = [{"a": float(x[i[b]]), "b": float(x[j[b]]),
            "omega_sum": float(lhs[b]), "sum_omega": float(rhs[b])}
           for b in bad[:max_listed]]
    return AxiomReport(omega.label, w0 == 0.0, w0, mono, sub, int(i.size))


@dataclass
class InequalityReport:
    modulus: str
    scaling_violations: int
    lower_bound_violations: int
    reciprocal_violations: int
    worst: dict

    @property
    def passed(self) -> bool:
        return not (self.scaling_violations or self.lower_bound_violations
                    or self.reciprocal_violations)

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "pass": self.passed,
            "scaling_violations": self.scaling_violations,
            "lower_bound_violations": self.lower_bound_violations,
            "reciprocal_violations": self.reciprocal_violations,
            "worst_ratio": self.worst,
        }


def default_grid(n: int = 200) -> np.ndarray:
    return np.logspace(-6, 3, n)


def check_omega_inequalities(omega: ContinuityModulus, lambda_grid=None, x_grid=None,
                             rtol: float = 1e-12) -> InequalityReport:
    """Pointwise grid check of the three consequences of the modulus axioms.

    * ``ω(λx) <= (1+λ) ω(x)`` for every ``λ`` in ``lambda_grid``, ``x`` in ``x_grid``
    * ``ω(x) >= ω(1) x / (x+1)``
    * ``1 + 1/ω(x) <= (1 + 1/ω(1)) (1 + 1/x)`` for ``x > 0``

    ``worst_ratio`` holds, per inequality, the largest lhs/rhs ratio seen
    (``<= 1`` means the inequality holds).
    """
    lam = default_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=np.float64)
    x = default_grid() if x_grid is None else np.asarray(x_grid, dtype=np.float64)
    lam = np.concatenate([[0.0], lam.ravel()])
    w1 = float(omega(1.0))
    wx = np.asarray(omega(x), dtype=np.float64)

    L, X = np.meshgrid(lam, x, indexing="ij")
    lhs1 = np.asarray(omega(L * X), dtype=np.float64)
    rhs1 = (1.0 + L) * np.asarray(omega(X), dtype=np.float64)
    v1 = int(np.count_nonzero(_viol(lhs1, rhs1, rtol)))

    lhs2 = w1 * x / (x + 1.0)
    v2 = int(np.count_nonzero(_viol(lhs2, wx, rtol)))

    xp = x[x > 0]
    wxp = np.asarray(omega(xp), dtype=np.float64)
    with np.errstate(divide="ignore"):
        lhs3 = 1.0 + 1.0 / wxp
    rhs3 = (1.0 + 1.0 / w1) * (1.0 + 1.0 / xp)
    v3 = int(np.count_nonzero(_viol(lhs3, rhs3, rtol)))

    def worst(lhs, rhs):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
        return float(np.max(r)) if r.size else 0.0

    report = {
        "omega_scaling": worst(lhs1, rhs1),
        "omega_lower": worst(lhs2, wx),
        "omega_reciprocal": worst(lhs3, rhs3),
    }
    return InequalityReport(omega.label, v1, v2, v3, report)


# ---------------------------------------------------------------------------
# sampled functions and the mollifier


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples of a continuous ``f`` on the uniform grid ``x_i = i*step`` of ``[0, a]``.

    Between samples ``f`` is linear; outside ``[0, a]`` it is extended by
    ``f(0)`` on the left and ``f(a)`` on the right.
    """

    samples: np.ndarray
    step: float

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.float64)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("a sampled function needs at least two samples")
        if not self.step > 0:
            raise ValueError("sample step must be positive")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "step", float(self.step))

    @property
    def a(self) -> float:
        return self.step * (self.samples.size - 1)

    @property
    def grid(self) -> np.ndarray:
        return self.step * np.arange(self.samples.size)

    def __call__(self, x):
        return np.interp(x, self.grid, self.samples)

    @classmethod
    def from_callable(cls, f: Callable, a: float, n: int) -> "SampledFunction":
        grid = np.linspace(0.0, a, n)
        return cls(np.asarray(f(grid), dtype=np.float64), a / (n - 1))

    @classmethod
    def resample(cls, t, values, step: float | None = None, max_points: int = 200_001) -> "SampledFunction":
        """Linear resampling of nonuniform ``(t, values)`` (``t[0] == 0``) onto a uniform grid.

        The default step is the smallest spacing of ``t``, capped so that the
        grid has at most ``max_points`` samples.
        """
        t = np.asarray(t, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if t.size < 2:
            raise ValueError("need at least two points to resample")
        a = float(t[-1] - t[0])
        if step is None:
            step = float(np.min(np.diff(t)))
        n = int(math.ceil(a / step)) + 1
        n = max(2, min(n, max_points))
        grid = np.linspace(0.0, a, n)
        return cls(np.interp(grid + t[0], t, values), a / (n - 1))

    def max_abs_on(self, lo: float, hi: float) -> float:
        """``max |f(x)|`` over ``[lo, hi]`` (exact for the piecewise-linear interpolant)."""
        g = self.grid
        inside = self.samples[(g >= lo) & (g <= hi)]
        ends = np.abs(self([lo, hi]))
        return float(max(np.max(np.abs(inside)) if inside.size else 0.0, np.max(ends)))


def _bump_log(s):
    return -1.0 / (1.0 - s * s)


def _bump_dlog(s):
    return -2.0 * s / (1.0 - s * s) ** 2


_KERNEL_SHAPES = {
    # name: (log ρ up to normalisation, derivative of log ρ)
    "bump": (_bump_log, _bump_dlog),
    "peaked": (lambda s: _bump_log(s) - 8.0 * s * s, lambda s: _bump_dlog(s) - 16.0 * s),
}


@dataclass(frozen=True, eq=False)
class MollifierKernel:
    """Smooth ``ρ >= 0`` on ``(-1, 1)`` with unit integral, plus its quadrature rule.

    ``kweights[j] = w_j ρ(s_j)`` and ``dweights[j] = w_j ρ'(s_j)``, so that
    ``∫ g ρ ≈ Σ kweights[j] g(s_j)``. The normalisation constant is fixed
    with the same rule, which makes the discrete kernel an exact average:
    bounds on ``f`` carry over to ``f_ε`` up to rounding.
    """

    name: str
    order: int
    nodes: np.ndarray
    kweights: np.ndarray
    dweights: np.ndarray
    norm: float

    @classmethod
    def make(cls, name: str = "bump", order: int = 128) -> "MollifierKernel":
        if name not in _KERNEL_SHAPES:
            raise ValueError(f"unknown kernel {name!r}; choose from {sorted(_KERNEL_SHAPES)}")
        if order < 2:
            raise ValueError("quadrature order must be at least 2")
        s, w = np.polynomial.legendre.leggauss(order)
        log_rho, dlog = _KERNEL_SHAPES[name]
        raw = np.exp(log_rho(s))
        norm = float(np.sum(w * raw))
        rho = raw / norm
        return cls(name, order, s, w * rho, w * rho * dlog(s), norm)

    def rho(self, s):
        """Normalised kernel value; zero outside ``(-1, 1)``."""
        s = np.asarray(s, dtype=np.float64)
        log_rho = _KERNEL_SHAPES[self.name][0]
        inside = np.abs(s) < 1.0
        safe = np.where(inside, s, 0.0)
        return np.where(inside, np.exp(log_rho(safe)) / self.norm, 0.0)

    def drho(self, s):
        s = np.asarray(s, dtype=np.float64)
        dlog = _KERNEL_SHAPES[self.name][1]
        inside = np.abs(s) < 1.0
        safe = np.where(inside, s, 0.0)
        return np.where(inside, self.rho(safe) * dlog(safe), 0.0)

    def _half_rule(self, n: int = 256):
        # composite rule on [-1,0] and [0,1]: |s| and |ρ'| have a kink at 0
        x, w = np.polynomial.legendre.leggauss(n)
        s = np.concatenate([(x - 1.0) / 2.0, (x + 1.0) / 2.0])
        return s, np.concatenate([w, w]) / 2.0

    def integral(self, n: int = 256) -> float:
        """Independent high-order quadrature of ``ρ`` over ``[-1, 1]``."""
        s, w = self._half_rule(n)
        return float(np.sum(w * self.rho(s)))

    @property
    def int_abs_drho(self) -> float:
        s, w = self._half_rule()
        return float(np.sum(w * np.abs(self.drho(s))))

    @property
    def sup_rho(self) -> float:
        return float(np.max(self.rho(np.linspace(-1.0, 1.0, 20001))))


def _check_finite(f: SampledFunction):
    if not np.all(np.isfinite(f.samples)):
        raise NumericError("sampled function contains non-finite values")


def mollify(f: SampledFunction, kernel: MollifierKernel, eps: float, t, backend=None):
    """``f_ε(t) = ∫ f(t + εs) ρ(s) ds`` for scalar or array ``t``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    _check_finite(f)
    out = _kernels.mollify_batch(f.samples, f.step, t, eps, kernel.nodes, kernel.kweights,
                                 backend=backend)
    return float(out[0]) if np.ndim(t) == 0 else out


def mollify_derivative(f: SampledFunction, kernel: MollifierKernel, eps: float, t, backend=None):
    """``f_ε'(t) = -(1/ε) ∫ f(t + εs) ρ'(s) ds``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    _check_finite(f)
    out = -_kernels.mollify_batch(f.samples, f.step, t, eps, kernel.nodes, kernel.dweights,
                                  backend=backend) / eps
    return float(out[0]) if np.ndim(t) == 0 else out


def estimate_gamma0(kernel: MollifierKernel) -> float:
    """Constant valid in both mollifier error bounds for every continuity modulus.

    From ``ω(ε|s|) <= (1+|s|) ω(ε)``:
    ``|f_ε - f| <= H ω(ε) ∫(1+|s|)ρ`` and ``|f_ε'| <= H ω(ε)/ε ∫(1+|s|)|ρ'|``.
    Returns ``max(1 + ∫ρ(1+|s|), ∫|ρ'|(1+|s|))``.
    """
    s, w = kernel._half_rule()
    weight = 1.0 + np.abs(s)
    first = 1.0 + float(np.sum(w * kernel.rho(s) * weight))
    second = float(np.sum(w * np.abs(kernel.drho(s)) * weight))
    return max(first, second)


def empirical_modulus_constant(f: SampledFunction, omega: ContinuityModulus) -> float:
    """``max |f_i - f_j| / ω(|x_i - x_j|)`` over all sample pairs."""
    g = f.grid
    i, j = np.triu_indices(g.size, k=1)
    num = np.abs(f.samples[i] - f.samples[j])
    den = np.asarray(omega(np.abs(g[i] - g[j])), dtype=np.float64)
    return float(np.max(num / den)) if num.size else 0.0


def mollifier_report(f: SampledFunction, kernel: MollifierKernel, omega: ContinuityModulus,
                     H: float, eps_values, gamma0: float | None = None,
                     n_eval: int = 4001, backend=None) -> list:
    """Sweep ``ε`` and compare ``sup|f_ε - f|`` and ``sup|f_ε'|`` with their bounds.

    Suprema are taken over ``n_eval`` uniform points of ``[-ε, a+ε]`` merged
    with the sample grid; outside that window ``f_ε = f`` is constant.
    """
    g0 = estimate_gamma0(kernel) if gamma0 is None else gamma0
    rows = []
    for eps in eps_values:
        eps = float(eps)
        t = np.union1d(np.linspace(-eps, f.a + eps, n_eval), f.grid)
        fe = mollify(f, kernel, eps, t, backend=backend)
        dfe = mollify_derivative(f, kernel, eps, t, backend=backend)
        sup_err = float(np.max(np.abs(fe - f(t))))
        sup_deriv = float(np.max(np.abs(dfe)))
        w = float(omega(eps))
        bound = g0 * H * w
        deriv_bound = g0 * H * w / eps
        rows.append({
            "eps": eps,
            "sup_err": sup_err,
            "sup_deriv": sup_deriv,
            "bound": bound,
            "deriv_bound": deriv_bound,
            "pass": bool(sup_err <= bound and sup_deriv <= deriv_bound),
        })
    return rows
