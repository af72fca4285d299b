"""Numerical replay of the a-priori estimate behind global existence.

For gap data the coupling ``|<A^{3/4}u, A^{1/4}u'>|`` can never reach the
level ``H1 ρ_n`` (strict case) or ``H2 ρ_n^{5/2}`` (weak case) before ``T``.
The replay first evaluates the explicit constants and picks the smallest
admissible ``n``. It then scans a simulated trajectory for the threshold
time ``S`` and checks the per-mode energy inequalities up to ``min(S, T)``.

The argument needs the mode checks only for ``λ_k > ρ_n``. With long
horizons ``ρ_n`` exceeds every eigenvalue of a moderate truncation, so
those checks are vacuous; the reports say so (``required_modes``) and
also run the checks on every other positive mode as diagnostics.

Constants inherit the mollifier constant ``γ0``; by default it is the
quadrature-certified value of :func:`~kirchhoff_spectral.modulus.estimate_gamma0`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .dynamics import (
    Nonlinearity,
    Trajectory,
    c_trace,
    first_crossing,
    hamiltonian,
    integrate,
    max_on,
    mode_scales,
)
from .errors import NotApplicableError, NumericError, PreconditionError, SequenceExhaustedError
from .modulus import ContinuityModulus, MollifierKernel, SampledFunction, estimate_gamma0, mollify, mollify_derivative
from .spaces import (
    GapSequence,
    WeightFunction,
    gm_membership,
    lambda_for_strict,
    lambda_for_weak,
    weighted_tail,
)
from .spectrum import Spectrum, StatePair, coupling, sobolev_norm_sq

__all__ = [
    "StrictConstants",
    "WeakConstants",
    "StrictConstraint",
    "WeakConstraint",
    "MollifiedCoefficient",
    "constants_strict",
    "constants_weak",
    "pick_n",
    "threshold_scan",
    "h_inverse",
    "mode_energy_check_strict",
    "mode_energy_check_weak",
    "tail_budget_check",
    "certify_strict",
    "certify_weak",
    "summary_text",
]


def _finite_or_str(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _clean(obj):
    """Make a report JSON-safe: non-finite floats become strings, numpy scalars plain."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float):
        return _finite_or_str(obj)
    return obj


# ---------------------------------------------------------------------------
# constants


@dataclass(frozen=True)
class StrictConstants:
    nu: float
    mu: float
    gamma0: float
    L: float
    Lambda: float
    H0: float
    coupling0: float
    gamma1: float
    H1: float
    gamma2: float
    T: float | None = None
    chosen_n: int | None = None
    rho_n: float | None = None

    @property
    def level(self) -> float:
        if self.rho_n is None:
            raise PreconditionError("no n chosen yet")
        return self.H1 * self.rho_n

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class WeakConstants:
    gamma0: float
    L: float
    Lambda: float
    H0: float
    coupling0: float
    u0_norm: float
    max_c_half: float
    omega_term: float
    gamma3: float
    gamma4: float
    gamma5: float
    H2: float
    gamma6: float
    T: float
    chosen_n: int | None = None
    rho_n: float | None = None

    @property
    def level(self) -> float:
        if self.rho_n is None:
            raise PreconditionError("no n chosen yet")
        return self.H2 * self.rho_n ** 2.5

    def to_dict(self) -> dict:
        return asdict(self)


def _require_modulus(nonlinearity: Nonlinearity):
    if nonlinearity.L is None or nonlinearity.omega is None:
        raise PreconditionError(f"nonlinearity {nonlinearity.name!r} carries no (L, ω) continuity data")
    return float(nonlinearity.L), nonlinearity.omega


def constants_strict(spec: Spectrum, pair: StatePair, nonlinearity: Nonlinearity, Lambda: float,
                     gamma0: float, T: float | None = None, grid_points: int = 4001) -> StrictConstants:
    """ν, μ, γ1, H1, γ2 of the strictly hyperbolic estimate.

    ``μ`` maximises ``m`` over ``grid_points`` uniform points of ``[0, H(0)/ν]``.
    """
    nu = float(nonlinearity.nu)
    if not nu > 0:
        raise PreconditionError("strict constants need ν > 0; use the weak path for degenerate m")
    L, _ = _require_modulus(nonlinearity)
    H0 = hamiltonian(spec, nonlinearity, pair.u0, pair.u1)
    grid = np.linspace(0.0, H0 / nu, grid_points)
    mu = float(np.max(np.asarray(nonlinearity.m(grid), dtype=np.float64) * np.ones_like(grid)))
    mu = max(mu, nu)
    g1 = max(1.0, mu) * max(1.0, 1.0 / nu)
    c0 = coupling(spec, pair.u0, pair.u1)
    H1 = max(abs(c0) + 1.0, (1.0 + 1.0 / nu) * H0 + 2.0 * g1 + 1.0)
    g2 = gamma0 * L * Lambda * (2.0 * H1 + 1.0) * (1.0 / nu + 1.0 / math.sqrt(nu))
    return StrictConstants(nu, mu, float(gamma0), L, float(Lambda), H0, c0, g1, H1, g2,
                           None if T is None else float(T))


def h_inverse(omega: ContinuityModulus, y: float, rtol: float = 1e-12, max_doublings: int = 2000) -> float:
    """Solve ``σ sqrt(ω(σ)) = y`` by bisection on an auto-expanded bracket."""
    if not y > 0:
        raise ValueError("h_inverse needs y > 0")

    def h(s):
        w = float(omega(s))
        if not (w > 0 and math.isfinite(w)):
            raise NumericError(f"ω({s:g}) = {w!r} is not strictly positive on the bracket")
        return s * math.sqrt(w)

    lo = hi = 1.0
    n = 0
    while h(hi) < y:
        hi *= 2.0
        n += 1
        if n > max_doublings:
            raise NumericError(f"no upper bracket for h(σ) = {y:g} below σ = {hi:g}")
    lo = hi
    n = 0
    while h(lo) > y:
        lo *= 0.5
        n += 1
        if n > max_doublings or lo == 0.0:
            raise NumericError(f"no lower bracket for h(σ) = {y:g}")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def constants_weak(spec: Spectrum, pair: StatePair, nonlinearity: Nonlinearity, Lambda: float,
                   gamma0: float, traj_half: Trajectory, T: float | None = None) -> WeakConstants:
    """γ3..γ6 and H2 of the weakly hyperbolic estimate.

    ``traj_half`` must cover ``[0, T/2]``; ``T`` defaults to the trajectory's horizon.
    The ω-term is ``ω(h^{-1}(1))``: ω is increasing, so the max over
    ``{σ : h(σ) <= 1}`` sits at the boundary.
    """
    L, omega = _require_modulus(nonlinearity)
    T = float(traj_half.T if T is None else T)
    if traj_half.t[-1] < 0.5 * T * (1.0 - 1e-12):
        raise PreconditionError("trajectory does not cover [0, T/2]")
    H0 = hamiltonian(spec, nonlinearity, pair.u0, pair.u1)
    c0 = coupling(spec, pair.u0, pair.u1)
    u0n = math.sqrt(float(np.dot(pair.u0, pair.u0)))
    g3 = 1.0 + 1.0 / float(omega(1.0))
    max_c = max_on(traj_half, traj_half.c, 0.5 * T)
    w_term = float(omega(h_inverse(omega, 1.0)))
    g4 = max_c + w_term
    g5 = g3 * (1.0 + g4) * (Lambda + 1.0)
    H2 = max(abs(c0) + 1.0, (u0n + 1.0) * math.sqrt(H0) + g5 + 1.0)
    g6 = 1.0 + gamma0 * L * (2.0 * H2 + 1.0)
    return WeakConstants(float(gamma0), L, float(Lambda), H0, c0, u0n, max_c, w_term,
                         g3, g4, g5, H2, g6, T)


# ---------------------------------------------------------------------------
# choice of n


@dataclass(frozen=True)
class StrictConstraint:
    gamma2: float
    T: float

    def lower_bounds(self) -> dict:
        return {"rho >= 1": 1.0, "rho >= gamma2*T": self.gamma2 * self.T}


@dataclass(frozen=True)
class WeakConstraint:
    gamma6: float
    Lambda: float
    T: float
    omega: ContinuityModulus
    H0: float

    def lower_bounds(self) -> dict:
        w = float(self.omega(0.5 * self.T))
        return {
            "rho >= 1": 1.0,
            "sqrt(rho) >= T*sqrt(H0)": self.T ** 2 * self.H0,
            "sqrt(rho) >= 4*gamma6*Lambda*T": (4.0 * self.gamma6 * self.Lambda * self.T) ** 2,
            "rho >= 2/(T*sqrt(omega(T/2)))": 2.0 / (self.T * math.sqrt(w)) if w > 0 else math.inf,
        }


def pick_n(rho: GapSequence, constraint, extend: bool = False):
    """Smallest stored ``n`` with ``ρ_n`` meeting every lower bound of ``constraint``.

    Returns ``(n, ρ_n, sequence)``; the sequence differs from ``rho`` only
    when ``extend=True`` allowed appending terms to an extendable prefix.
    Raises :class:`SequenceExhaustedError` naming the binding constraint.
    """
    bounds = constraint.lower_bounds()
    binding = max(bounds, key=bounds.get)
    need = bounds[binding]
    if not math.isfinite(need):
        raise SequenceExhaustedError(f"constraint {binding} cannot be met", binding, need)
    idx = np.nonzero(rho.rhos >= need)[0]
    if idx.size == 0:
        if extend and rho.extendable:
            rho = rho.extended_to(need)
            idx = np.nonzero(rho.rhos >= need)[0]
        else:
            raise SequenceExhaustedError(
                f"extend sequence: {binding} needs rho >= {need:g}, stored prefix ends at {rho[-1]:g}",
                binding, need)
    n = int(idx[0])
    return n, rho[n], rho


def threshold_scan(traj: Trajectory, level: float, touch_atol: float | None = None):
    """First time ``|coupling|`` reaches ``level``, or ``None`` ("never") on the whole run."""
    return first_crossing(traj, level, touch_atol)


# ---------------------------------------------------------------------------
# mollified coefficient and per-mode energies


@dataclass(frozen=True, eq=False)
class MollifiedCoefficient:
    """``c_ε = shift(ε) + ∫ c(t + εs) ρ(s) ds`` for the sampled coefficient ``c``.

    ``c`` is extended by constants outside its sample window. ``shift`` is
    ``None`` (strict case) or the modulus ω (weak case).
    """

    c: SampledFunction
    kernel: MollifierKernel
    shift: ContinuityModulus | None = None
    backend: str | None = None

    def value(self, eps: float, t):
        out = mollify(self.c, self.kernel, eps, t, backend=self.backend)
        return out + float(self.shift(eps)) if self.shift is not None else out

    def derivative(self, eps: float, t):
        return mollify_derivative(self.c, self.kernel, eps, t, backend=self.backend)


def _window(traj: Trajectory, S: float | None):
    end = traj.t[-1] if S is None else S
    keep = traj.t <= end
    return keep


def _mode_series(traj: Trajectory, k: int, keep, scale: float):
    lam = float(traj.spectrum.lambdas[k])
    u = traj.u[keep, k] / scale
    v = traj.v[keep, k] / scale
    return lam, u, v


def _energy_checks(traj, k, ce, dce, c, eps, rate, keep, scale, tol, c_env):
    """Shared part of the E' checks: exact identity and central differences."""
    lam, u, v = _mode_series(traj, k, keep, scale)
    t = traj.t[keep]
    lam2 = lam * lam
    E = v * v + lam2 * ce * u * u
    Emax = float(np.max(E)) if E.size else 0.0
    dE_id = dce * lam2 * u * u + 2.0 * lam2 * (ce - c) * u * v
    slack_id = 10.0 * tol * Emax
    ok_id = bool(np.all(dE_id <= rate * E + slack_id))
    if t.size >= 3:
        dE_fd = np.gradient(E, t)
        h = np.zeros_like(t)
        dt = np.diff(t)
        h[:-1] = dt
        h[1:] = np.maximum(h[1:], dt)
        freq = 2.0 * lam * math.sqrt(max(c_env, 0.0))
        slack_fd = 10.0 * (tol + h * h * freq ** 3) * Emax
        ok_fd = bool(np.all(dE_fd <= rate * E + slack_fd))
        fd_excess = float(np.max(dE_fd - rate * E - slack_fd))
    else:
        ok_fd, fd_excess = True, -math.inf
    return E, ok_id, ok_fd, fd_excess, float(np.max(dE_id - rate * E - slack_id)) if E.size else -math.inf


def _log_ratio(x, x0):
    """``log(x / x0)`` elementwise with ``0/0 -> -inf`` handled as "both zero"."""
    with np.errstate(divide="ignore"):
        return np.log(x) - math.log(x0) if x0 > 0 else np.where(x > 0, math.inf, -math.inf)


def mode_energy_check_strict(traj: Trajectory, k: int, constants: StrictConstants,
                             c_eps: MollifiedCoefficient, phi: WeightFunction,
                             S: float | None = None, diagnostic: bool = False) -> dict:
    """Checks (a), (b), (c) for mode ``k`` (0-based) with ``ε_k = 1/λ_k``.

    (a) ``λ_k ω(1/λ_k) <= Λ φ(λ_k)``; (b) ``E' <= γ2 ρ_n φ(λ_k) E + slack``,
    both through the exact identity for ``E'`` and by central differences;
    (c) ``E(t) <= E(0) exp(ρ_n² φ(λ_k))`` compared in logs. Also asserts
    ``ν <= c_ε <= μ`` on the window ``[0, S]``. ``diagnostic=True`` runs the
    checks for a mode with ``0 < λ_k <= ρ_n``, where the argument does not
    need them but they still hold.
    """
    if constants.rho_n is None:
        raise PreconditionError("constants carry no chosen n")
    spec = traj.spectrum
    lam = float(spec.lambdas[k])
    rho_n = constants.rho_n
    if not lam > 0 or (lam <= rho_n and not diagnostic):
        raise NotApplicableError(f"mode {k + 1} has λ = {lam:g} <= ρ_n = {rho_n:g}")
    omega = c_eps.shift if c_eps.shift is not None else traj.nonlinearity.omega
    omega = traj.nonlinearity.omega if omega is None else omega
    eps = 1.0 / lam
    phik = float(phi(lam))
    a_lhs = lam * float(omega(eps))
    a_ok = a_lhs <= constants.Lambda * phik * (1.0 + 1e-12)

    keep = _window(traj, S)
    t = traj.t[keep]
    ce = c_eps.value(eps, t)
    dce = c_eps.derivative(eps, t)
    c = traj.c[keep]
    band_tol = 1e-12 * max(1.0, constants.mu)
    band_ok = bool(np.all(ce >= constants.nu - band_tol) and np.all(ce <= constants.mu + band_tol))

    scale = float(mode_scales(spec, _pair_at(traj, 0))[spec.K + k])
    rate = constants.gamma2 * rho_n * phik
    E, ok_id, ok_fd, fd_excess, id_excess = _energy_checks(
        traj, k, ce, dce, c, eps, rate, keep, scale, traj.tol, constants.mu)
    bound = rho_n ** 2 * phik
    lr = _log_ratio(E, float(E[0]))
    c_slack = math.log1p(10.0 * traj.tol)
    c_ok = bool(np.all(lr <= bound + c_slack)) if E[0] > 0 else bool(np.all(E == 0))
    return {
        "k": k + 1,
        "lambda": lam,
        "eps_k": eps,
        "required": lam > rho_n,
        "a": {"lhs": a_lhs, "rhs": constants.Lambda * phik, "pass": bool(a_ok)},
        "b": {"rate": rate, "identity_pass": ok_id, "fd_pass": ok_fd,
              "identity_max_excess": id_excess, "fd_max_excess": fd_excess,
              "pass": ok_id and ok_fd},
        "c": {"log_bound": bound, "max_log_growth": float(np.max(lr)) if E[0] > 0 else None,
              "pass": c_ok},
        "c_eps_band_pass": band_ok,
        "pass": bool(a_ok and ok_id and ok_fd and c_ok and band_ok),
    }


def mode_energy_check_weak(traj: Trajectory, k: int, constants: WeakConstants,
                           c_eps: MollifiedCoefficient, phi: WeightFunction,
                           S: float | None = None, diagnostic: bool = False) -> dict:
    """Weak-case checks for mode ``k`` with ``ε_k = h^{-1}(1/λ_k)``.

    (a) ``λ_k sqrt(ω(ε_k)) = 1/ε_k <= Λ φ(λ_k)``; (b)
    ``E' <= 2 γ6 ρ_n^{5/2} Λ φ(λ_k) E + slack``; (c) the unweighted bound
    ``|u_k'|² + λ_k²|u_k|² <= γ5 (|u1k|² + λ_k²|u0k|²) exp(ρ_n³ φ(λ_k))``.
    Also reports the intermediate integrated bound with ``exp(ρ_n³ φ/2)``,
    ``c_ε(0) <= γ4`` and asserts ``c_ε >= ω(ε_k)`` pointwise.
    """
    if constants.rho_n is None:
        raise PreconditionError("constants carry no chosen n")
    if c_eps.shift is None:
        raise PreconditionError("weak checks need the ω-shifted mollified coefficient")
    spec = traj.spectrum
    lam = float(spec.lambdas[k])
    rho_n = constants.rho_n
    if not lam > 0 or (lam <= rho_n and not diagnostic):
        raise NotApplicableError(f"mode {k + 1} has λ = {lam:g} <= ρ_n = {rho_n:g}")
    omega = c_eps.shift
    eps = h_inverse(omega, 1.0 / lam)
    w = float(omega(eps))
    phik = float(phi(lam))
    chain_lhs = lam * math.sqrt(w)
    a_ok = (abs(chain_lhs - 1.0 / eps) <= 1e-9 * (1.0 / eps)
            and 1.0 / eps <= constants.Lambda * phik * (1.0 + 1e-12))

    keep = _window(traj, S)
    t = traj.t[keep]
    ce = c_eps.value(eps, t)
    dce = c_eps.derivative(eps, t)
    c = traj.c[keep]
    floor_ok = bool(np.all(ce >= w * (1.0 - 1e-12)))
    ce0_ok = bool(ce[0] <= constants.gamma4 * (1.0 + 1e-12))

    scale = float(mode_scales(spec, _pair_at(traj, 0))[spec.K + k])
    rate = 2.0 * constants.gamma6 * rho_n ** 2.5 * constants.Lambda * phik
    E, ok_id, ok_fd, fd_excess, id_excess = _energy_checks(
        traj, k, ce, dce, c, eps, rate, keep, scale, traj.tol, float(np.max(ce)))
    slack = math.log1p(10.0 * traj.tol)
    lr = _log_ratio(E, float(E[0]))
    half_bound = 0.5 * rho_n ** 3 * phik
    int_ok = bool(np.all(lr <= half_bound + slack)) if E[0] > 0 else bool(np.all(E == 0))

    _, u, v = _mode_series(traj, k, keep, scale)
    e = v * v + lam * lam * u * u
    e0 = float(e[0])
    log_rhs = math.log(constants.gamma5) + rho_n ** 3 * phik
    lr_e = _log_ratio(e, e0)
    c_ok = bool(np.all(lr_e <= log_rhs + slack)) if e0 > 0 else bool(np.all(e == 0))
    return {
        "k": k + 1,
        "lambda": lam,
        "eps_k": eps,
        "required": lam > rho_n,
        "a": {"lambda_sqrt_omega": chain_lhs, "inv_eps": 1.0 / eps,
              "rhs": constants.Lambda * phik, "pass": bool(a_ok)},
        "b": {"rate": rate, "identity_pass": ok_id, "fd_pass": ok_fd,
              "identity_max_excess": id_excess, "fd_max_excess": fd_excess,
              "pass": ok_id and ok_fd},
        "integrated": {"log_bound": half_bound, "pass": int_ok},
        "c": {"log_bound": log_rhs, "max_log_growth": float(np.max(lr_e)) if e0 > 0 else None,
              "pass": c_ok},
        "c_eps_floor_pass": floor_ok,
        "c_eps0_le_gamma4": ce0_ok,
        "pass": bool(a_ok and ok_id and ok_fd and int_ok and c_ok and floor_ok
                     and (ce0_ok or not lam > rho_n)),
    }


def _pair_at(traj: Trajectory, i: int) -> StatePair:
    return StatePair(traj.spectrum, traj.u[i], traj.v[i])


# ---------------------------------------------------------------------------
# tail budget


def tail_budget_check(traj: Trajectory, rho_n: float, gamma: float, level: float,
                      phi: WeightFunction, beta: float, case: str = "strict",
                      nu: float | None = None, S: float | None = None, backend=None) -> dict:
    """High/low-mode budgets of the contradiction argument and the final margin.

    High modes: ``Σ_{λ>ρ_n} λ(|u_k'|² + λ²|u_k|²) <= 2γρ_n`` at every snapshot,
    with the data assumption ``Σ_{λ>ρ_n} λ(u1k² + λ²u0k²) exp(ρ_n^β φ) <= 2ρ_n``
    recomputed from the initial state. Low modes: in the strict case
    ``Σ_{λ<=ρ_n} λ(...) <= ρ_n(H(0) + H(0)/ν)``; in the weak case
    ``|u(t)| <= |u0| + T sqrt(H(0))`` and
    ``|Σ_{λ<=ρ_n} λ² u_k u_k'| <= ρ_n^{5/2}(|u0| + 1) sqrt(H(0))``.
    The margin is ``level - max|coupling|``.
    """
    if case not in ("strict", "weak"):
        raise ValueError("case must be 'strict' or 'weak'")
    spec = traj.spectrum
    lam = spec.lambdas
    keep = _window(traj, S)
    u, v, t = traj.u[keep], traj.v[keep], traj.t[keep]
    hi = lam > rho_n
    w = lam * (v * v + lam * lam * u * u)
    high = w[:, hi].sum(axis=1)
    low = w[:, ~hi].sum(axis=1)
    H0 = float(traj.hamiltonian[0])
    u0, u1 = traj.u[0], traj.v[0]
    r = rho_n ** beta
    t0 = weighted_tail(spec, u0, phi, rho_n, r, 0.75, backend=backend)
    t1 = weighted_tail(spec, u1, phi, rho_n, r, 0.25, backend=backend)
    data_log = float(np.logaddexp(t0.log, t1.log))
    data_ok = data_log <= math.log(2.0 * rho_n) + 1e-12
    high_ok = bool(np.all(high <= 2.0 * gamma * rho_n))
    viol = []
    if not high_ok:
        i = int(np.argmax(high - 2.0 * gamma * rho_n))
        viol.append({"check": "high", "t": float(t[i])})
    out = {
        "case": case,
        "rho_n": rho_n,
        "gamma": gamma,
        "data_tail_log": data_log,
        "data_tail_pass": bool(data_ok),
        "high_max": float(np.max(high)),
        "high_bound": 2.0 * gamma * rho_n,
        "high_pass": high_ok,
    }
    if case == "strict":
        if not nu or nu <= 0:
            raise PreconditionError("strict tail budget needs ν > 0")
        low_bound = rho_n * (H0 + H0 / nu)
        low_ok = bool(np.all(low <= low_bound * (1.0 + 10.0 * traj.tol) + 10.0 * traj.tol))
        out.update({"low_max": float(np.max(low)), "low_bound": low_bound, "low_pass": low_ok})
    else:
        T = traj.T
        u0n = math.sqrt(float(np.dot(u0, u0)))
        un = np.sqrt(np.sum(u * u, axis=1))
        unorm_bound = u0n + T * math.sqrt(H0)
        low_c = np.abs((u[:, ~hi] * v[:, ~hi]) @ (lam[~hi] ** 2))
        lc_bound = rho_n ** 2.5 * (u0n + 1.0) * math.sqrt(H0)
        slack = 10.0 * traj.tol * max(1.0, unorm_bound)
        low_ok = bool(np.all(un <= unorm_bound + slack)
                      and np.all(low_c <= lc_bound * (1.0 + 10.0 * traj.tol) + 10.0 * traj.tol))
        out.update({"u_norm_max": float(np.max(un)), "u_norm_bound": unorm_bound,
                    "low_coupling_max": float(np.max(low_c)), "low_coupling_bound": lc_bound,
                    "low_pass": low_ok})
    if not out["low_pass"]:
        viol.append({"check": "low"})
    cmax = float(np.max(np.abs(traj.coupling[keep])))
    out.update({
        "level": level,
        "max_abs_coupling": cmax,
        "margin": level - cmax,
        "relative_margin": (level - cmax) / level if level > 0 else None,
        "violations": viol,
        "pass": bool(high_ok and out["low_pass"] and data_ok and level - cmax > 0),
    })
    return out


# ---------------------------------------------------------------------------
# pipelines


def _threads() -> int:
    cap = os.environ.get("KIRCHHOFF_SPECTRAL_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n


def _run_modes(fn, modes, threads=None):
    threads = _threads() if threads is None else threads
    if threads <= 1 or len(modes) <= 1:
        return [fn(k) for k in modes]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, modes))


def _membership_summary(spec, pair, phi, rho: GapSequence, beta, n, backend=None):
    """Membership rows on the stored prefix plus the chosen index."""
    out = {}
    for part, u, alpha in (("u0", pair.u0, 0.75), ("u1", pair.u1, 0.25)):
        rows = gm_membership(spec, u, phi, rho, alpha, beta, backend=backend)
        out[part] = [r.to_dict() for r in rows]
    ok = all(r["pass"] for rows in out.values() for r in rows if not r["vacuous"])
    return out, ok


def _common_report(kind, spec, pair, nonlinearity, phi, beta, T, tol, gamma0, Lambda, traj, S, kernel):
    return {
        "kind": kind,
        "config": {
            "lambdas": spec.lambdas.tolist(),
            "nonlinearity": nonlinearity.to_dict(),
            "phi": phi.to_dict(),
            "beta": beta,
            "T": T,
            "tol": tol,
            "kernel": kernel.name,
        },
        "data": pair.to_dict(),
        "gamma0": gamma0,
        "gamma0_source": "certified quadrature estimate of the mollifier constant",
        "Lambda": Lambda,
        "S": "never" if S is None else S,
        "trajectory": traj.drift_stats(),
    }


def certify_strict(spec: Spectrum, pair: StatePair, nonlinearity: Nonlinearity, phi: WeightFunction,
                   rho: GapSequence, T: float, tol: float = 1e-9, beta: float = 2.0,
                   kernel: MollifierKernel | None = None, Lambda: float | None = None,
                   gamma0: float | None = None, diagnostics: bool = True,
                   threads: int | None = None, backend=None, traj: Trajectory | None = None) -> dict:
    """Full strict-case replay for one gap pair with its sequence ``rho``.

    Mode checks are required for ``λ_k > ρ_n``; with ``diagnostics`` every
    other positive mode is checked too and counts toward ``pass``.
    """
    kernel = MollifierKernel.make() if kernel is None else kernel
    L, omega = _require_modulus(nonlinearity)
    Lambda = lambda_for_strict(omega, phi) if Lambda is None else float(Lambda)
    if not math.isfinite(Lambda):
        raise PreconditionError("the strict Λ-condition fails for this (ω, φ)")
    gamma0 = estimate_gamma0(kernel) if gamma0 is None else float(gamma0)
    const = constants_strict(spec, pair, nonlinearity, Lambda, gamma0, T)
    n, rho_n, rho_ext = pick_n(rho, StrictConstraint(const.gamma2, T), extend=True)
    const = replace(const, chosen_n=n, rho_n=rho_n)
    if traj is None:
        traj = integrate(spec, nonlinearity, pair, T, tol, backend=backend)
    S = threshold_scan(traj, const.level)
    S_eff = traj.t[-1] if S is None else S
    c_eps = MollifiedCoefficient(c_trace(traj, t_max=S_eff), kernel, None, backend)
    modes = [k for k in range(spec.K) if spec.lambdas[k] > 0 and (diagnostics or spec.lambdas[k] > rho_n)]
    rows = _run_modes(lambda k: mode_energy_check_strict(
        traj, k, const, c_eps, phi, S=S_eff, diagnostic=True), modes, threads)
    tail = tail_budget_check(traj, rho_n, const.gamma1, const.level, phi, beta, "strict",
                             nu=const.nu, S=S_eff, backend=backend)
    membership, mem_ok = _membership_summary(spec, pair, phi, rho, beta, n, backend)
    drift_ok = traj.energy_drift() <= 100.0 * tol
    rep = _common_report("certify-strict", spec, pair, nonlinearity, phi, beta, T, tol,
                         gamma0, Lambda, traj, S, kernel)
    rep.update({
        "constants": const.to_dict(),
        "chosen_n": n,
        "rho_n": rho_n,
        "rho_extended": len(rho_ext) > len(rho),
        "level": const.level,
        "required_modes": int(sum(r["required"] for r in rows)),
        "modes": rows,
        "tail": tail,
        "membership": membership,
        "checks": {
            "trajectory_complete": traj.completed,
            "energy_drift": drift_ok,
            "threshold_never": S is None,
            "membership": mem_ok,
            "modes": all(r["pass"] for r in rows),
            "tail": tail["pass"],
        },
    })
    rep["pass"] = all(rep["checks"].values())
    return _clean(rep)


def certify_weak(spec: Spectrum, pair: StatePair, nonlinearity: Nonlinearity, phi: WeightFunction,
                 rho: GapSequence, T: float, tol: float = 1e-9, beta: float = 3.0,
                 kernel: MollifierKernel | None = None, Lambda: float | None = None,
                 gamma0: float | None = None, diagnostics: bool = True,
                 threads: int | None = None, backend=None, traj: Trajectory | None = None) -> dict:
    """Full weak-case replay for one gap pair with its sequence ``rho``."""
    kernel = MollifierKernel.make() if kernel is None else kernel
    L, omega = _require_modulus(nonlinearity)
    Lambda = lambda_for_weak(omega, phi) if Lambda is None else float(Lambda)
    if not math.isfinite(Lambda):
        raise PreconditionError("the weak Λ-condition fails for this (ω, φ)")
    gamma0 = estimate_gamma0(kernel) if gamma0 is None else float(gamma0)
    if traj is None:
        traj = integrate(spec, nonlinearity, pair, T, tol, backend=backend)
    const = constants_weak(spec, pair, nonlinearity, Lambda, gamma0, traj, T)
    n, rho_n, rho_ext = pick_n(rho, WeakConstraint(const.gamma6, Lambda, T, omega, const.H0), extend=True)
    const = replace(const, chosen_n=n, rho_n=rho_n)
    S = threshold_scan(traj, const.level)
    S_eff = traj.t[-1] if S is None else S
    c_eps = MollifiedCoefficient(c_trace(traj, t_max=S_eff), kernel, omega, backend)
    modes = [k for k in range(spec.K) if spec.lambdas[k] > 0 and (diagnostics or spec.lambdas[k] > rho_n)]
    rows = _run_modes(lambda k: mode_energy_check_weak(
        traj, k, const, c_eps, phi, S=S_eff, diagnostic=True), modes, threads)
    tail = tail_budget_check(traj, rho_n, const.gamma5, const.level, phi, beta, "weak",
                             S=S_eff, backend=backend)
    membership, mem_ok = _membership_summary(spec, pair, phi, rho, beta, n, backend)
    drift_ok = traj.energy_drift() <= 100.0 * tol
    rep = _common_report("certify-weak", spec, pair, nonlinearity, phi, beta, T, tol,
                         gamma0, Lambda, traj, S, kernel)
    rep.update({
        "constants": const.to_dict(),
        "chosen_n": n,
        "rho_n": rho_n,
        "rho_extended": len(rho_ext) > len(rho),
        "level": const.level,
        "required_modes": int(sum(r["required"] for r in rows)),
        "modes": rows,
        "tail": tail,
        "membership": membership,
        "checks": {
            "trajectory_complete": traj.completed,
            "energy_drift": drift_ok,
            "threshold_never": S is None,
            "membership": mem_ok,
            "modes": all(r["pass"] for r in rows),
            "tail": tail["pass"],
        },
    })
    rep["pass"] = all(rep["checks"].values())
    return _clean(rep)


def summary_text(report: dict) -> str:
    """Short human-readable digest of a certification report."""
    c = report["constants"]
    lines = [
        f"{report['kind']}: {'PASS' if report['pass'] else 'FAIL'}",
        f"  gamma0={report['gamma0']:.6g}  Lambda={report['Lambda']:.6g}",
        f"  chosen n={report['chosen_n']}  rho_n={report['rho_n']:.6g}  level={report['level']:.6g}",
        f"  S={report['S']}  max|coupling|={report['tail']['max_abs_coupling']:.6g}"
        f"  margin={report['tail']['margin']:.6g}",
        f"  modes checked={len(report['modes'])} (required {report['required_modes']}),"
        f" failed={sum(not r['pass'] for r in report['modes'])}",
    ]
    if "gamma2" in c:
        lines.insert(2, f"  nu={c['nu']:.6g} mu={c['mu']:.6g} gamma1={c['gamma1']:.6g}"
                        f" H1={c['H1']:.6g} gamma2={c['gamma2']:.6g}")
    else:
        lines.insert(2, f"  gamma3={c['gamma3']:.6g} gamma4={c['gamma4']:.6g} gamma5={c['gamma5']:.6g}"
                        f" H2={c['H2']:.6g} gamma6={c['gamma6']:.6g}")
    for name, ok in report["checks"].items():
        lines.append(f"  [{'ok' if ok else 'FAIL'}] {name}")
    return "\n".join(lines)
