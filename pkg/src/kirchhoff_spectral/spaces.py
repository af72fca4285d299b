"""Gevrey-type weighted norms, spectral-gap membership and Λ estimates.

Exponential weights ``exp(r φ(λ_k))`` overflow doubles long before the
sums of interest stop being meaningful, so all weighted sums are formed in
the log domain and returned as :class:`LogValue`.

All results are relative to the truncated spectrum; a membership report
marks every ``n`` whose tail range ``λ > ρ_n`` contains no eigenvalue as
vacuous instead of claiming anything about the untruncated operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .modulus import ContinuityModulus, _number
from .spectrum import Spectrum

__all__ = [
    "WeightFunction",
    "LogValue",
    "GapSequence",
    "MembershipRow",
    "gevrey_norm_sq",
    "gevrey_norm_sq_naive",
    "weighted_tail",
    "gm_membership",
    "lambda_for_strict",
    "lambda_for_weak",
    "default_sigma_grid",
]

_LN10 = math.log(10.0)
_LOG_MAX = math.log(np.finfo(np.float64).max)


@dataclass(frozen=True)
class WeightFunction:
    """Named, vectorised ``φ: [0, ∞) -> (0, ∞)``."""

    name: str
    params: tuple
    func: Callable = field(repr=False, compare=False)

    def __call__(self, sigma):
        return self.func(sigma)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return self.name + ":" + ",".join(repr(p) for p in self.params)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": list(self.params)}

    def check_positive(self, grid) -> bool:
        vals = np.asarray(self(np.asarray(grid, dtype=np.float64)), dtype=np.float64)
        return bool(np.all(np.isfinite(vals)) and np.all(vals > 0))

    def scaled(self, c: float) -> "WeightFunction":
        c = float(c)
        base = self.func
        return WeightFunction(f"{self.name}*{c!r}", self.params, lambda s: c * base(s))

    @classmethod
    def affine(cls) -> "WeightFunction":
        return cls("affine", (), lambda s: 1.0 + np.asarray(s, dtype=np.float64))

    @classmethod
    def identity(cls) -> "WeightFunction":
        """``φ(σ) = σ``; positive on ``σ > 0`` only."""
        return cls("identity", (), lambda s: np.asarray(s, dtype=np.float64) * 1.0)

    @classmethod
    def gevrey(cls, s: float) -> "WeightFunction":
        s = float(s)
        if s <= 0:
            raise ValueError("Gevrey index must be positive")
        return cls("gevrey", (s,), lambda x: np.power(1.0 + np.asarray(x, dtype=np.float64), 1.0 / s))

    @classmethod
    def power(cls, p: float) -> "WeightFunction":
        p = float(p)
        return cls("power", (p,), lambda x: np.power(1.0 + np.asarray(x, dtype=np.float64), p))

    @classmethod
    def log(cls) -> "WeightFunction":
        return cls("log", (), lambda x: 1.0 + np.log1p(np.asarray(x, dtype=np.float64)))

    @classmethod
    def parse(cls, text: str) -> "WeightFunction":
        """``"affine"``, ``"identity"``, ``"gevrey:2"``, ``"power:0.667"``, ``"log"``."""
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        if name == "affine" and not arg:
            return cls.affine()
        if name == "identity" and not arg:
            return cls.identity()
        if name == "log" and not arg:
            return cls.log()
        if name == "gevrey" and arg:
            return cls.gevrey(_number(arg))
        if name == "power" and arg:
            return cls.power(_number(arg))
        raise ValueError(f"unknown weight function {text!r}")


@dataclass(frozen=True)
class LogValue:
    """A nonnegative real stored as its natural logarithm.

    ``mantissa * 10**exponent`` is the decimal form; :attr:`value` is the
    plain float, ``inf`` when it exceeds double range.
    """

    log: float

    @property
    def is_zero(self) -> bool:
        return self.log == -math.inf

    @property
    def infinite(self) -> bool:
        """True when the value is not representable even in log form."""
        return self.log == math.inf or math.isnan(self.log)

    @property
    def exponent(self) -> int:
        if self.is_zero or self.infinite:
            return 0
        return int(math.floor(self.log / _LN10))

    @property
    def mantissa(self) -> float:
        if self.is_zero:
            return 0.0
        if self.infinite:
            return math.inf
        m = 10.0 ** (self.log / _LN10 - self.exponent)
        return m

    @property
    def value(self) -> float:
        if self.is_zero:
            return 0.0
        if self.log > _LOG_MAX:
            return math.inf
        return math.exp(self.log)

    def at_most(self, other: float) -> bool:
        """``value <= other`` decided in the log domain."""
        if other <= 0:
            return self.is_zero and other == 0
        return self.log <= math.log(other)

    def to_dict(self) -> dict:
        return {
            "log": None if self.is_zero or self.infinite else self.log,
            "mantissa": self.mantissa if not self.infinite else None,
            "exponent": self.exponent,
            "zero": self.is_zero,
            "infinite": self.infinite,
        }


def _log_terms(spec: Spectrum, u, phi: WeightFunction, r: float, alpha: float) -> np.ndarray:
    """``log(λ_k^{4α} u_k² exp(r φ(λ_k)))`` with ``-inf`` for vanishing terms."""
    lam = spec.lambdas
    u = spec.check(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        if alpha == 0:
            logpow = np.zeros_like(lam)
        else:
            logpow = np.where(lam > 0, 4.0 * alpha * np.log(np.where(lam > 0, lam, 1.0)), -np.inf)
        logu = np.where(u != 0, 2.0 * np.log(np.abs(np.where(u != 0, u, 1.0))), -np.inf)
        phiv = np.asarray(phi(lam), dtype=np.float64)
        weight = r * phiv
    out = logpow + logu + np.where(np.isfinite(logu + logpow), weight, 0.0)
    return out


def gevrey_norm_sq(spec: Spectrum, u, phi: WeightFunction, r: float, alpha: float,
                   backend=None) -> LogValue:
    """``Σ_k λ_k^{4α} u_k² exp(r φ(λ_k))`` accumulated by log-sum-exp."""
    if not r > 0:
        raise ValueError("r must be positive")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return LogValue(_kernels.logsumexp(_log_terms(spec, u, phi, r, alpha), backend=backend))


def gevrey_norm_sq_naive(spec: Spectrum, u, phi: WeightFunction, r: float, alpha: float) -> float:
    """Direct double-precision sum; overflows to ``inf`` for large weights."""
    u = spec.check(u)
    with np.errstate(over="ignore"):
        return float(np.sum(spec.power(4.0 * alpha) * u * u * np.exp(r * np.asarray(phi(spec.lambdas)))))


def weighted_tail(spec: Spectrum, u, phi: WeightFunction, cutoff: float, r: float,
                  alpha: float, inclusive: bool = False, backend=None) -> LogValue:
    """Log of ``Σ_{λ_k > cutoff} λ_k^{4α} u_k² exp(r φ(λ_k))`` (``>=`` if ``inclusive``)."""
    terms = _log_terms(spec, u, phi, r, alpha)
    mask = spec.lambdas >= cutoff if inclusive else spec.lambdas > cutoff
    return LogValue(_kernels.logsumexp(terms[mask], backend=backend))


@dataclass(frozen=True, eq=False)
class GapSequence:
    """Finite prefix of an increasing positive sequence ``ρ_n -> ∞``.

    ``extendable`` records that the last stored term lies past the top of
    the data's support: it can be followed by ``ρ + step`` indefinitely and
    every added term sees an empty tail.
    """

    rhos: np.ndarray
    extendable: bool = False
    step: float = 1.0

    def __post_init__(self):
        r = np.array(self.rhos, dtype=np.float64)
        if r.ndim != 1 or r.size < 1:
            raise ValueError("a gap sequence needs at least one term")
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise ValueError("gap sequence terms must be positive and finite")
        if np.any(np.diff(r) <= 0):
            raise ValueError("gap sequence must be strictly increasing")
        r.setflags(write=False)
        object.__setattr__(self, "rhos", r)

    def __len__(self):
        return int(self.rhos.size)

    def __getitem__(self, n):
        return float(self.rhos[n])

    def min_gap(self) -> float:
        return float(np.min(np.diff(self.rhos))) if self.rhos.size > 1 else math.inf

    def extended_to(self, target: float, max_terms: int = 10_000_000) -> "GapSequence":
        """Append ``ρ_last + step`` terms until the last term reaches ``target``."""
        last = float(self.rhos[-1])
        if last >= target:
            return self
        if not self.extendable:
            raise ValueError("sequence is not marked extendable")
        extra = int(math.ceil((target - last) / self.step))
        if extra > max_terms:
            raise ValueError(f"extension to {target:g} needs {extra} terms (cap {max_terms})")
        tail = last + self.step * np.arange(1, extra + 1)
        return GapSequence(np.concatenate([self.rhos, tail]), True, self.step)

    def to_dict(self) -> dict:
        return {"rhos": self.rhos.tolist(), "extendable": self.extendable, "step": self.step}

    @classmethod
    def from_dict(cls, doc: dict) -> "GapSequence":
        return cls(doc["rhos"], bool(doc.get("extendable", False)), float(doc.get("step", 1.0)))


@dataclass(frozen=True)
class MembershipRow:
    n: int
    rho: float
    log_tail: float
    passed: bool
    vacuous: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rho": self.rho,
            "log_tail": None if self.log_tail == -math.inf else self.log_tail,
            "pass": self.passed,
            "vacuous": self.vacuous,
        }


def gm_membership(spec: Spectrum, u, phi: WeightFunction, rho: GapSequence, alpha: float,
                  beta: float, backend=None) -> list:
    """Check ``Σ_{λ_k > ρ_n} λ_k^{4α} u_k² exp(ρ_n^β φ(λ_k)) <= ρ_n`` for each stored n."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    rows = []
    lam = spec.lambdas
    for n, rn in enumerate(rho.rhos):
        rn = float(rn)
        tail = weighted_tail(spec, u, phi, rn, rn ** beta, alpha, backend=backend)
        vacuous = not bool(np.any(lam > rn))
        rows.append(MembershipRow(n, rn, tail.log, tail.at_most(rn), vacuous))
    return rows


def default_sigma_grid(n: int = 1000) -> np.ndarray:
    return np.logspace(-6, 6, n)


def _grid_max(ratio) -> float:
    ratio = np.asarray(ratio, dtype=np.float64)
    if ratio.size == 0:
        raise ValueError("sigma grid is empty")
    if not np.all(np.isfinite(ratio)):
        return math.inf
    return float(np.max(ratio))


def lambda_for_strict(omega: ContinuityModulus, phi: WeightFunction, sigma_grid=None) -> float:
    """Smallest grid-certified Λ with ``σ ω(1/σ) <= Λ φ(σ)``; ``inf`` if the ratio diverges."""
    s = default_sigma_grid() if sigma_grid is None else np.asarray(sigma_grid, dtype=np.float64)
    if np.any(s <= 0):
        raise ValueError("sigma grid must be positive")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = s * np.asarray(omega(1.0 / s)) / np.asarray(phi(s))
    return _grid_max(ratio)


def lambda_for_weak(omega: ContinuityModulus, phi: WeightFunction, sigma_grid=None) -> float:
    """Smallest grid-certified Λ with ``σ <= Λ φ(σ / sqrt(ω(1/σ)))``; ``inf`` if it diverges."""
    s = default_sigma_grid() if sigma_grid is None else np.asarray(sigma_grid, dtype=np.float64)
    if np.any(s <= 0):
        raise ValueError("sigma grid must be positive")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        arg = s / np.sqrt(np.asarray(omega(1.0 / s)))
        ratio = s / np.asarray(phi(arg))
    return _grid_max(ratio)
