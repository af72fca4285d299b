"""Recursive ρ-sequence and the certified band split."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kirchhoff_spectral import Spectrum, StatePair, WeightFunction, build_rho_sequence, decompose, split
from kirchhoff_spectral.gap import GapConstructionError, band_index, support_top
from kirchhoff_spectral.spaces import GapSequence, gm_membership

ident = WeightFunction.identity()


def test_support_below_seed_gives_unit_steps():
    s = Spectrum.interval_laplacian(6)
    pair = StatePair(s, [1, 0.5, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0])
    rho = build_rho_sequence(s, pair, ident, 2.0, n_max=5, rho_seed=3.0)
    np.testing.assert_array_equal(rho.rhos, [3, 4, 5, 6, 7])


def test_single_tiny_mode_admits_next_integer():
    # tail = 1e-60 · 10³ · e^{10} ≈ 2.2e-53 <= ρ_0 = 1
    s = Spectrum.custom([10.0])
    pair = StatePair(s, [1e-30], [0.0])
    rho = build_rho_sequence(s, pair, ident, 2.0, n_max=2)
    assert rho.rhos.tolist() == [1.0, 2.0]


def test_single_mode_forces_jump_past_it():
    s = Spectrum.custom([10.0])
    pair = StatePair(s, [1.0], [0.0])
    rho = build_rho_sequence(s, pair, ident, 2.0, n_max=2)
    assert 10.0 < rho[1] <= 11.0


def test_default_stop_rule():
    s = Spectrum.interval_laplacian(64)
    pair = StatePair(s, np.exp(-s.lambdas ** 1.5), np.exp(-s.lambdas ** 1.5))
    rho = build_rho_sequence(s, pair, ident, 2.0)
    top = support_top(s, pair)
    assert rho[-2] > top and rho[-1] > top and rho.extendable
    assert len(rho) == 2 or rho[-3] <= top


def test_stop_rule_follows_data_support():
    # modes past the last nonzero coefficient do not lengthen the sequence
    s = Spectrum.interval_laplacian(200)
    u = np.where(s.lambdas <= 5, 1.0, 0.0)
    rho = build_rho_sequence(s, StatePair(s, u, u), ident, 2.0)
    assert rho[-2] > 5 and len(rho) < 10


def test_search_cap():
    s = Spectrum.custom([1e6])
    with pytest.raises(GapConstructionError):
        build_rho_sequence(s, StatePair(s, [1.0], [1.0]), ident, 2.0, n_max=2, j_cap=10)


@pytest.mark.parametrize("kw", [{"rho_seed": 0.0}, {"grid_step": -1.0}, {"beta": -1.0}])
def test_argument_checks(kw):
    s = Spectrum.interval_laplacian(3)
    args = {"beta": 2.0, **kw}
    beta = args.pop("beta")
    with pytest.raises(ValueError):
        build_rho_sequence(s, StatePair.zeros(s), ident, beta, n_max=3, **args)


def test_band_index():
    s = Spectrum.custom([0.5, 1.0, 2.5, 3.0, 9.0])
    b = band_index(s, GapSequence([1.0, 3.0, 4.0]))
    assert b.tolist() == [-1, 0, 0, 1, 2]


def test_split_zero_pair():
    s = Spectrum.interval_laplacian(5)
    ubar, uhat = split(s, StatePair.zeros(s), GapSequence([1.0, 2.0, 3.0]))
    for h in (ubar, uhat):
        assert not h.u0.any() and not h.u1.any()


def test_split_parities_and_exactness():
    s = Spectrum.interval_laplacian(8)
    rng = np.random.default_rng(1)
    pair = StatePair(s, rng.normal(size=8), rng.normal(size=8))
    rho = GapSequence([1.5, 3.5, 6.5])
    ubar, uhat = split(s, pair, rho, "odd")
    # bands: [1.5,3.5) -> 0 (even), [3.5,6.5) -> 1 (odd), >= 6.5 -> 2, below -> -1
    assert np.nonzero(ubar.u0)[0].tolist() == [3, 4, 5]
    assert np.nonzero(uhat.u0)[0].tolist() == [0, 1, 2, 6, 7]
    ebar, ehat = split(s, pair, rho, "even")
    np.testing.assert_array_equal(ebar.u0, uhat.u0)
    np.testing.assert_array_equal(ehat.u0, ubar.u0)
    total = ubar + uhat
    np.testing.assert_array_equal(total.u0, pair.u0)
    np.testing.assert_array_equal(total.u1, pair.u1)
    with pytest.raises(ValueError):
        split(s, pair, rho, "both")


def test_decompose_supported_below_seed():
    s = Spectrum.interval_laplacian(4)
    pair = StatePair(s, [1, 1, 0, 0], [0.5, 0, 0, 0])
    d = decompose(s, pair, ident, 2.0, rho_seed=2.5)
    np.testing.assert_array_equal(d.uhat.u0, pair.u0)
    np.testing.assert_array_equal(d.uhat.u1, pair.u1)
    assert not d.ubar.u0.any() and not d.ubar.u1.any()
    assert d.certified and d.exact


def test_decompose_exp_power_identity_weight():
    s = Spectrum.interval_laplacian(64)
    a = np.exp(-s.lambdas ** 1.5)
    pair = StatePair(s, a, a)
    d = decompose(s, pair, ident, 2.0)
    assert d.certified and d.exact
    rows = [r for half in d.membership.values() for rs in half.values() for r in rs]
    assert all(r.passed for r in rows if not r.vacuous)
    assert any(not r.vacuous for r in rows)
    # independent recomputation of one membership family
    again = gm_membership(s, d.ubar.u0, ident, d.rho_bar, 0.75, 2.0)
    assert [r.passed for r in again] == [r.passed for r in d.membership["ubar"]["u0"]]
    cert = d.to_certificate()
    assert cert["pass"] and cert["rho"]["rhos"] == d.rho.rhos.tolist()


def test_decompose_needs_two_terms():
    s = Spectrum.interval_laplacian(3)
    with pytest.raises(ValueError):
        decompose(s, StatePair.zeros(s), ident, 2.0, n_max=1)


@given(st.integers(2, 30), st.floats(0.3, 3.0), st.floats(1.0, 3.0), st.sampled_from(["odd", "even"]))
def test_decomposition_properties(K, p, beta, parity):
    s = Spectrum.interval_laplacian(K)
    a = np.exp(-s.lambdas ** p)
    pair = StatePair(s, a, 0.5 * a)
    d = decompose(s, pair, WeightFunction.affine(), beta, parity=parity)
    assert d.exact
    assert d.rho.min_gap() >= 1.0
    assert all(c["pass"] for c in d.construction)
    assert d.rho_bar.min_gap() >= 2.0 - 1e-12 or len(d.rho_bar) == 1
    assert d.certified


def test_growth_is_monotone_in_data_size():
    # larger data can only push the next term further out
    s = Spectrum.interval_laplacian(40)
    base = np.exp(-s.lambdas)
    small = build_rho_sequence(s, StatePair(s, base, base), ident, 2.0, n_max=4)
    big = build_rho_sequence(s, StatePair(s, 10 * base, 10 * base), ident, 2.0, n_max=4)
    assert big[1] >= small[1]
    assert math.isfinite(big[-1])
