"""Splitting arbitrary data into two spectral-gap pairs.

A sequence ``ρ_0 < ρ_1 < ...`` is grown so that the data's weighted tail
beyond ``ρ_{n+1}``, measured with weight ``exp(ρ_n^β φ)``, is at most
``ρ_n``. Eigenvalues are then dealt into the bands ``[ρ_b, ρ_{b+1})``:
odd bands form one pair, even bands the other. Each pair vanishes on every
other band, which turns the construction inequality at ``n`` into a
membership inequality for the subsequence of even (resp. odd) terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .spaces import (
    GapSequence,
    MembershipRow,
    WeightFunction,
    _log_terms,
    gm_membership,
    weighted_tail,
)
from .spectrum import Spectrum, StatePair

__all__ = [
    "GapConstructionError",
    "Decomposition",
    "build_rho_sequence",
    "band_index",
    "split",
    "decompose",
]

ALPHA_U0 = 0.75
ALPHA_U1 = 0.25


class GapConstructionError(RuntimeError):
    """No admissible next term was found within the search cap."""


def _next_rho(spec: Spectrum, pair: StatePair, phi: WeightFunction, beta: float,
              rho_n: float, grid_step: float, j_cap: int, backend=None) -> float:
    r = rho_n ** beta
    s0 = _kernels.suffix_logsumexp(_log_terms(spec, pair.u0, phi, r, ALPHA_U0), backend=backend)
    s1 = _kernels.suffix_logsumexp(_log_terms(spec, pair.u1, phi, r, ALPHA_U1), backend=backend)
    bound = math.log(rho_n)
    # suffix sums only shrink with the index, so admissible cut indices form a final segment
    ok = (s0 <= bound) & (s1 <= bound)
    first_ok = int(np.argmax(ok))
    lam = spec.lambdas
    base = rho_n + 1.0
    j = 0
    if first_ok > 0 and base <= lam[first_ok - 1]:
        # every candidate must exceed the last eigenvalue that has to stay out of the tail
        j = int(math.floor((lam[first_ok - 1] - base) / grid_step)) + 1
        while base + j * grid_step <= lam[first_ok - 1]:
            j += 1
    if j > j_cap:
        raise GapConstructionError(
            f"no admissible rho_{{n+1}} within cap: rho_n={rho_n:g}, needed j={j} > {j_cap}"
        )
    return base + j * grid_step


def build_rho_sequence(spec: Spectrum, pair: StatePair, phi: WeightFunction, beta: float,
                       n_max: int | None = None, rho_seed: float = 1.0,
                       grid_step: float = 1.0, j_cap: int = 10**7,
                       backend=None) -> GapSequence:
    """Grow ``ρ_0 = rho_seed, ρ_1, ...``.

    ``ρ_{n+1}`` is the smallest ``ρ_n + 1 + j*grid_step`` such that

        Σ_{λ_k >= ρ_{n+1}} u0_k² λ_k³ exp(ρ_n^β φ(λ_k)) <= ρ_n
        Σ_{λ_k >= ρ_{n+1}} u1_k² λ_k  exp(ρ_n^β φ(λ_k)) <= ρ_n

    With ``n_max=None`` the sequence stops once its last two terms exceed
    the top of the data's support, so both interleaved subsequences have
    left it; every later term ``ρ + 1`` would see empty tails, which is what
    the ``extendable`` flag records.
    """
    if pair.spectrum != spec:
        raise ValueError("pair is not defined on this spectrum")
    if not rho_seed > 0:
        raise ValueError("rho_seed must be positive")
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    rhos = [float(rho_seed)]
    top = support_top(spec, pair)
    while True:
        if n_max is not None and len(rhos) >= n_max:
            break
        if n_max is None and len(rhos) >= 2 and rhos[-2] > top:
            break
        rhos.append(_next_rho(spec, pair, phi, beta, rhos[-1], grid_step, j_cap, backend))
    return GapSequence(np.array(rhos), extendable=rhos[-1] > top, step=1.0)


def support_top(spec: Spectrum, pair: StatePair) -> float:
    """Largest ``λ_k`` carrying a nonzero coefficient; ``-inf`` for zero data."""
    nz = np.nonzero((pair.u0 != 0) | (pair.u1 != 0))[0]
    return float(spec.lambdas[nz[-1]]) if nz.size else -math.inf


def band_index(spec: Spectrum, rho: GapSequence) -> np.ndarray:
    """Band ``b`` with ``ρ_b <= λ_k < ρ_{b+1}``; ``-1`` below ``ρ_0``.

    Eigenvalues at or above the last stored term join the last band.
    """
    return np.searchsorted(rho.rhos, spec.lambdas, side="right") - 1


def split(spec: Spectrum, pair: StatePair, rho: GapSequence, parity: str = "odd"):
    """Partition the Fourier indices of ``pair`` by band parity.

    Returns ``(ubar, uhat)``. With ``parity="odd"`` ``ubar`` keeps the odd
    bands ``[ρ_{2n+1}, ρ_{2n+2})`` and ``uhat`` keeps the even bands plus
    every mode below ``ρ_0``; ``parity="even"`` swaps the roles. Each index
    lands in exactly one half, so ``ubar + uhat`` reproduces ``pair``
    bit for bit.

    The band formulas are read with the band index ``n`` independent of the
    Fourier index ``k``.
    """
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    b = band_index(spec, rho)
    odd = (b >= 0) & (b % 2 == 1)
    bar_mask = odd if parity == "odd" else ~odd
    ubar = StatePair(spec, np.where(bar_mask, pair.u0, 0.0), np.where(bar_mask, pair.u1, 0.0))
    uhat = StatePair(spec, np.where(bar_mask, 0.0, pair.u0), np.where(bar_mask, 0.0, pair.u1))
    return ubar, uhat


def _rows_pass(rows) -> bool:
    return all(r.passed for r in rows if not r.vacuous)


@dataclass(frozen=True, eq=False)
class Decomposition:
    spectrum: Spectrum
    pair: StatePair
    phi: WeightFunction
    beta: float
    parity: str
    rho: GapSequence
    ubar: StatePair
    uhat: StatePair
    rho_bar: GapSequence
    rho_hat: GapSequence
    membership: dict
    construction: list

    @property
    def exact(self) -> bool:
        s = self.ubar + self.uhat
        return bool(np.array_equal(s.u0, self.pair.u0) and np.array_equal(s.u1, self.pair.u1))

    @property
    def certified(self) -> bool:
        rows_ok = all(_rows_pass(rows) for half in self.membership.values() for rows in half.values())
        return rows_ok and all(c["pass"] for c in self.construction) and self.exact

    def to_certificate(self) -> dict:
        def rows(rs):
            return [r.to_dict() for r in rs]

        return {
            "kind": "gap-decomposition",
            "beta": self.beta,
            "phi": self.phi.to_dict(),
            "parity": self.parity,
            "data": self.pair.to_dict(),
            "rho": self.rho.to_dict(),
            "rho_bar": self.rho_bar.to_dict(),
            "rho_hat": self.rho_hat.to_dict(),
            "ubar": self.ubar.to_dict(),
            "uhat": self.uhat.to_dict(),
            "membership": {
                half: {part: rows(rs) for part, rs in parts.items()}
                for half, parts in self.membership.items()
            },
            "construction": self.construction,
            "exact": self.exact,
            "pass": self.certified,
            "truncation": f"K={self.spectrum.K}; checks relative to the truncated spectrum",
        }


def _subsequence(rho: GapSequence, start: int, top: float) -> GapSequence:
    terms = rho.rhos[start::2]
    return GapSequence(terms, bool(terms[-1] > top), 2.0 * rho.step)


def _construction_checks(spec, pair, phi, beta, rho, backend=None) -> list:
    out = []
    for n in range(len(rho) - 1):
        rn, rn1 = rho[n], rho[n + 1]
        r = rn ** beta
        t0 = weighted_tail(spec, pair.u0, phi, rn1, r, ALPHA_U0, inclusive=True, backend=backend)
        t1 = weighted_tail(spec, pair.u1, phi, rn1, r, ALPHA_U1, inclusive=True, backend=backend)
        out.append({
            "n": n,
            "rho_n": rn,
            "rho_next": rn1,
            "log_tail_u0": None if t0.is_zero else t0.log,
            "log_tail_u1": None if t1.is_zero else t1.log,
            "gap_ok": rn1 >= rn + 1.0,
            "pass": bool(t0.at_most(rn) and t1.at_most(rn) and rn1 >= rn + 1.0),
        })
    return out


def decompose(spec: Spectrum, pair: StatePair, phi: WeightFunction, beta: float,
              rho_seed: float = 1.0, grid_step: float = 1.0, n_max: int | None = None,
              parity: str = "odd", backend=None) -> Decomposition:
    """Build ``ρ``, split the data, and certify both halves.

    The odd-band half is certified with ``ρ_{2n}``, the even-band half with
    ``ρ_{2n+1}``, each at ``α = 3/4`` for ``u0`` and ``α = 1/4`` for ``u1``.
    """
    rho = build_rho_sequence(spec, pair, phi, beta, n_max=n_max, rho_seed=rho_seed,
                             grid_step=grid_step, backend=backend)
    ubar, uhat = split(spec, pair, rho, parity=parity)
    if len(rho) < 2:
        raise ValueError("decomposition needs at least two sequence terms (n_max >= 2)")
    top = support_top(spec, pair)
    evens = _subsequence(rho, 0, top)
    odds = _subsequence(rho, 1, top)
    rho_bar, rho_hat = (evens, odds) if parity == "odd" else (odds, evens)

    def member(half: StatePair, seq: GapSequence) -> dict:
        return {
            "u0": gm_membership(spec, half.u0, phi, seq, ALPHA_U0, beta, backend=backend),
            "u1": gm_membership(spec, half.u1, phi, seq, ALPHA_U1, beta, backend=backend),
        }

    membership = {"ubar": member(ubar, rho_bar), "uhat": member(uhat, rho_hat)}
    construction = _construction_checks(spec, pair, phi, beta, rho, backend=backend)
    return Decomposition(spec, pair, phi, float(beta), parity, rho, ubar, uhat,
                         rho_bar, rho_hat, membership, construction)


def membership_rows_from_dict(rows) -> list:
    return [MembershipRow(r["n"], r["rho"], -math.inf if r["log_tail"] is None else r["log_tail"],
                          r["pass"], r["vacuous"]) for r in rows]
