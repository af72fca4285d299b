"""Diagonalised operator ``A`` and its Fourier coefficient vectors.

``A e_k = λ_k² e_k``; the :class:`Spectrum` stores the roots ``λ_k``.
Coefficient vectors are plain float arrays of length ``K``; every operation
checks the length against the spectrum. Powers use the convention
``0**0 == 1`` so that kernel modes (``λ_k = 0``) behave under ``α = 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Finite, strictly increasing list of eigenvalue roots ``λ_k >= 0``."""

    lambdas: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        lam = _frozen(self.lambdas)
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("spectrum needs at least one eigenvalue root")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("eigenvalue roots must be finite and nonnegative")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("eigenvalue roots must be strictly increasing")
        object.__setattr__(self, "lambdas", lam)

    @property
    def K(self) -> int:
        return int(self.lambdas.size)

    @property
    def lam2(self) -> np.ndarray:
        return self.lambdas * self.lambdas

    @property
    def lambda_max(self) -> float:
        return float(self.lambdas[-1])

    def __len__(self):
        return self.K

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return np.array_equal(self.lambdas, other.lambdas)

    def __hash__(self):
        return hash(self.lambdas.tobytes())

    def check(self, u) -> np.ndarray:
        """Return ``u`` as a float vector, raising if its length is wrong."""
        arr = np.asarray(u, dtype=np.float64)
        if arr.shape != (self.K,):
            raise DimensionError(
                f"coefficient vector has shape {arr.shape}, spectrum has K={self.K}"
            )
        return arr

    def power(self, exponent: float) -> np.ndarray:
        """``λ_k ** exponent`` with ``0**0 = 1``."""
        return np.power(self.lambdas, float(exponent))

    # presets

    @classmethod
    def interval_laplacian(cls, K: int) -> "Spectrum":
        """``-Δ`` on ``(0, π)`` with Dirichlet conditions: ``λ_k = k``."""
        if K < 1:
            raise ValueError("K must be positive")
        return cls(np.arange(1, K + 1, dtype=np.float64), name="interval-laplacian")

    @classmethod
    def geometric(cls, K: int, q: float = 2.0) -> "Spectrum":
        """``λ_k = q**k`` for ``k = 1..K``."""
        if K < 1 or q <= 1:
            raise ValueError("geometric spectrum needs K >= 1 and q > 1")
        return cls(float(q) ** np.arange(1, K + 1, dtype=np.float64), name="geometric")

    @classmethod
    def custom(cls, lambdas) -> "Spectrum":
        return cls(lambdas, name="custom")


def apply_power(spec: Spectrum, u, alpha: float) -> np.ndarray:
    """Coefficients of ``A^α u``, i.e. ``λ_k^{2α} u_k``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return spec.power(2.0 * alpha) * spec.check(u)


def sobolev_norm_sq(spec: Spectrum, u, alpha: float) -> float:
    """``|A^α u|² = Σ λ_k^{4α} u_k²``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    u = spec.check(u)
    return float(np.dot(spec.power(4.0 * alpha), u * u))


def coupling(spec: Spectrum, u, v) -> float:
    """``<A^{3/4}u, A^{1/4}v> = Σ λ_k² u_k v_k``.

    Along a solution, ``d/dt |A^{1/2}u(t)|² = 2 coupling(u(t), u'(t))``.
    """
    return float(np.dot(spec.lam2, spec.check(u) * spec.check(v)))


@dataclass(frozen=True, eq=False)
class StatePair:
    """Initial data ``(u0, u1)`` expressed on one spectrum."""

    spectrum: Spectrum
    u0: np.ndarray
    u1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u0", _frozen(self.spectrum.check(self.u0)))
        object.__setattr__(self, "u1", _frozen(self.spectrum.check(self.u1)))

    @classmethod
    def zeros(cls, spectrum: Spectrum) -> "StatePair":
        return cls(spectrum, np.zeros(spectrum.K), np.zeros(spectrum.K))

    def __add__(self, other: "StatePair") -> "StatePair":
        if other.spectrum != self.spectrum:
            raise DimensionError("state pairs live on different spectra")
        return StatePair(self.spectrum, self.u0 + other.u0, self.u1 + other.u1)

    def to_dict(self) -> dict:
        return {
            "lambdas": self.spectrum.lambdas.tolist(),
            "u0": self.u0.tolist(),
            "u1": self.u1.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StatePair":
        missing = {"lambdas", "u0", "u1"} - set(doc)
        if missing:
            raise ValueError(f"state document lacks keys {sorted(missing)}")
        return cls(Spectrum.custom(doc["lambdas"]), doc["u0"], doc["u1"])

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "StatePair":
        return cls.from_dict(json.loads(Path(path).read_text()))
