"""Continuity moduli with their inequalities; the mollifier."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from kirchhoff_spectral import (
    ContinuityModulus,
    MollifierKernel,
    NumericError,
    SampledFunction,
    check_modulus_axioms,
    check_omega_inequalities,
    estimate_gamma0,
    mollifier_report,
    mollify,
    mollify_derivative,
)

GOLDEN = json.loads((Path(__file__).parent / "golden" / "mollifier_gamma0.json").read_text())


def test_lipschitz_axioms_small_grid():
    assert check_modulus_axioms(ContinuityModulus.lipschitz(), [0, 1, 2]).passed


def test_square_fails_subadditivity():
    rep = check_modulus_axioms(ContinuityModulus.custom(lambda x: np.asarray(x) ** 2, "square"), [1, 1])
    assert not rep.passed
    v = rep.subadditive_violations[0]
    assert (v["a"], v["b"], v["omega_sum"], v["sum_omega"]) == (1.0, 1.0, 4.0, 2.0)


def test_sqrt_passes_dense_grid():
    assert check_modulus_axioms(ContinuityModulus.hoelder(0.5), np.linspace(0, 50, 400)).passed


def test_nonzero_at_origin_fails():
    rep = check_modulus_axioms(ContinuityModulus.custom(lambda x: 1 + np.asarray(x), "shifted"), [0, 1])
    assert not rep.zero_ok and not rep.passed


def test_decreasing_fails_monotonicity():
    rep = check_modulus_axioms(ContinuityModulus.custom(lambda x: np.sin(np.asarray(x)), "sin"),
                               np.linspace(0, 6, 50))
    assert rep.monotone_violations


@pytest.mark.parametrize("omega", ContinuityModulus.presets(), ids=lambda o: o.label)
def test_presets_pass_both_suites(omega):
    assert check_modulus_axioms(omega, np.logspace(-6, 3, 120)).passed
    assert check_omega_inequalities(omega).passed


def test_inequalities_hoelder_03_log_grid():
    rep = check_omega_inequalities(ContinuityModulus.hoelder(0.3), np.logspace(-6, 3, 150),
                                   np.logspace(-6, 3, 150))
    assert rep.passed
    assert max(rep.worst.values()) <= 1.0 + 1e-12


def test_inequalities_detect_superlinear_growth():
    rep = check_omega_inequalities(ContinuityModulus.custom(lambda x: np.asarray(x) ** 2, "square"))
    assert not rep.passed and rep.scaling_violations > 0


@pytest.mark.parametrize("text,label", [("lipschitz", "lipschitz"), ("hoelder:0.5", "hoelder:0.5"),
                                        ("hoelder:1/3", None), ("log-lipschitz", "log-lipschitz")])
def test_parse(text, label):
    omega = ContinuityModulus.parse(text)
    if label:
        assert omega.label == label
    assert omega(0.0) == 0.0


@pytest.mark.parametrize("text", ["hoelder:0", "hoelder:1.5", "quadratic", "hoelder:x"])
def test_parse_rejects(text):
    with pytest.raises((ValueError, ZeroDivisionError)):
        ContinuityModulus.parse(text)


# mollifier ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["bump", "peaked"])
def test_kernel_invariants(name):
    k = MollifierKernel.make(name)
    assert k.integral() == pytest.approx(1.0, abs=1e-10)
    assert float(np.sum(k.kweights)) == pytest.approx(1.0, abs=1e-14)
    assert k.rho(1.0) == 0.0 and k.rho(-1.0) == 0.0
    # ∫ s ρ'(s) ds = -1 by parts
    assert float(np.sum(k.dweights * k.nodes)) == pytest.approx(-1.0, abs=1e-10)


def test_default_order_resolves_derivative_identity():
    k = MollifierKernel.make()
    assert k.order == 128
    assert abs(float(np.sum(k.dweights * k.nodes)) + 1.0) < 1e-13


@pytest.mark.parametrize("name", ["bump", "peaked"])
def test_gamma0_golden(name):
    k = MollifierKernel.make(name)
    g = GOLDEN[name]
    assert k.norm == pytest.approx(g["norm"], rel=1e-10)
    assert estimate_gamma0(k) == pytest.approx(g["gamma0"], rel=1e-9)
    assert estimate_gamma0(k) > 1.0


def test_mollify_constant():
    f = SampledFunction(np.full(11, 3.25), 0.1)
    k = MollifierKernel.make()
    t = np.linspace(-1, 2, 31)
    for eps in (1e-3, 0.1, 1.0):
        np.testing.assert_allclose(mollify(f, k, eps, t), 3.25, rtol=1e-14)
        np.testing.assert_allclose(mollify_derivative(f, k, eps, t), 0.0, atol=1e-12)


def test_mollify_identity_interior():
    f = SampledFunction.from_callable(lambda x: x, 10.0, 1001)
    k = MollifierKernel.make()
    assert mollify(f, k, 0.1, 5.0) == pytest.approx(5.0, abs=1e-12)
    assert mollify_derivative(f, k, 0.1, 5.0) == pytest.approx(1.0, abs=1e-12)


def test_mollify_preserves_bounds(rng):
    f = SampledFunction(rng.uniform(0, 1, 200), 0.05)
    k = MollifierKernel.make()
    t = np.linspace(-1, 11, 2000)
    for eps in (0.01, 0.3, 2.0):
        fe = mollify(f, k, eps, t)
        assert fe.min() >= f.samples.min() - 1e-14
        assert fe.max() <= f.samples.max() + 1e-14
    # |f_ε(0)| <= max{|f(x)| : 0 <= x <= ε}
    eps = 0.2
    assert abs(mollify(f, k, eps, 0.0)) <= f.max_abs_on(0.0, eps) + 1e-14


def test_mollify_rejects_nonfinite():
    f = SampledFunction(np.array([0.0, np.nan, 1.0]), 1.0)
    with pytest.raises(NumericError):
        mollify(f, MollifierKernel.make(), 0.1, 0.5)


@pytest.mark.parametrize("omega,H,gen", [
    (ContinuityModulus.lipschitz(), 2.0, lambda x: 2.0 * np.abs(np.sin(x))),
    (ContinuityModulus.hoelder(0.5), 1.0, lambda x: np.sqrt(np.abs(x - 3.0))),
])
def test_mollifier_error_bounds(omega, H, gen):
    f = SampledFunction.from_callable(gen, 6.0, 6001)
    rows = mollifier_report(f, MollifierKernel.make(), omega, H, [1e-3, 1e-2, 0.1, 1.0])
    assert all(r["pass"] for r in rows), rows


def test_sampled_function_extension():
    f = SampledFunction(np.array([1.0, 2.0, 4.0]), 0.5)
    assert f.a == 1.0
    np.testing.assert_array_equal(f([-3.0, 0.25, 0.75, 9.0]), [1.0, 1.5, 3.0, 4.0])
    with pytest.raises(ValueError):
        SampledFunction(np.array([1.0]), 0.5)


def test_log_lipschitz_values():
    w = ContinuityModulus.log_lipschitz()
    assert w(0.0) == 0.0
    assert w(0.1) == pytest.approx(0.1 * (1 + math.log(10)), rel=1e-12)
    assert w(2.0) == 2.0
