"""The numba and numpy kernel backends agree; the env flag selects the default."""

import os
import subprocess
import sys

import numpy as np
import pytest

from kirchhoff_spectral import MollifierKernel, Nonlinearity, SampledFunction, Spectrum, StatePair, integrate
from kirchhoff_spectral import _kernels

jit_only = pytest.mark.skipif(not _kernels.JIT_ENABLED, reason="numba backend disabled")


@jit_only
@pytest.mark.parametrize("nl", [Nonlinearity.linear(), Nonlinearity.kirchhoff(), Nonlinearity.degenerate(),
                                Nonlinearity.hoelder_degenerate(0.5)], ids=lambda n: n.name)
def test_integrators_agree(nl):
    s = Spectrum.interval_laplacian(12)
    a = np.exp(-s.lambdas)
    pair = StatePair(s, a, 0.5 * a)
    j = integrate(s, nl, pair, 2.0, backend="jit")
    n = integrate(s, nl, pair, 2.0, backend="numpy")
    assert j.backend == "jit" and n.backend == "numpy"
    # same tableau and controller; compiled reductions round differently,
    # so step times agree to rounding drift rather than bit for bit
    assert len(j) == len(n)
    np.testing.assert_allclose(j.t, n.t, rtol=0, atol=1e-9 * 2.0)
    np.testing.assert_allclose(j.u[-1], n.u[-1], rtol=1e-8, atol=1e-14)


@jit_only
def test_single_step_agrees():
    nl = Nonlinearity.kirchhoff()
    lam2 = Spectrum.interval_laplacian(5).lam2
    y = np.linspace(-1, 1, 10)
    a = _kernels.dopri_step(nl, lam2, y, 0.01, backend="jit")
    b = _kernels.dopri_step(nl, lam2, y, 0.01, backend="numpy")
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-15)


@jit_only
def test_mollify_agrees(rng):
    f = SampledFunction(rng.random(501), 0.01)
    k = MollifierKernel.make()
    t = np.linspace(-0.5, 5.5, 777)
    for w in (k.kweights, k.dweights):
        a = _kernels.mollify_batch(f.samples, f.step, t, 0.03, k.nodes, w, backend="jit")
        b = _kernels.mollify_batch(f.samples, f.step, t, 0.03, k.nodes, w, backend="numpy")
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@jit_only
def test_logsumexp_agrees(rng):
    x = rng.normal(size=1000) * 300
    x[::7] = -np.inf
    assert _kernels.logsumexp(x, backend="jit") == pytest.approx(_kernels.logsumexp(x, backend="numpy"), rel=1e-14)
    np.testing.assert_allclose(_kernels.suffix_logsumexp(x, backend="jit"),
                               _kernels.suffix_logsumexp(x, backend="numpy"), rtol=1e-13)


def test_logsumexp_edge_cases():
    for b in ("numpy",) + (("jit",) if _kernels.JIT_ENABLED else ()):
        assert _kernels.logsumexp(np.array([]), backend=b) == -np.inf
        assert _kernels.logsumexp(np.array([-np.inf, -np.inf]), backend=b) == -np.inf
        assert _kernels.logsumexp(np.array([1e4, 1e4]), backend=b) == pytest.approx(1e4 + np.log(2))
        s = _kernels.suffix_logsumexp(np.array([0.0, -np.inf, 0.0]), backend=b)
        # one entry per cut index, the last being the empty suffix
        np.testing.assert_allclose(s, [np.log(2), 0.0, 0.0, -np.inf])


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.resolve_backend("cuda")


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("off", "numpy")])
def test_env_flag_selects_numpy(flag, expected):
    env = dict(os.environ, KIRCHHOFF_SPECTRAL_JIT=flag)
    code = ("from kirchhoff_spectral import _kernels, integrate, Spectrum, StatePair, Nonlinearity;"
            "s = Spectrum.custom([2.0]);"
            "t = integrate(s, Nonlinearity.linear(), StatePair(s, [1.0], [0.0]), 3.141592653589793);"
            "print(_kernels.DEFAULT_BACKEND, t.backend, round(float(t.u[-1, 0]), 8))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == [expected, expected, "1.0"]
