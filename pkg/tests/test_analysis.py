"""Norms, weights, derivative decompositions, and the boundedness scanner."""

import math

import numpy as np
import pytest

from flagmult.analysis import (
    ExponentTuple,
    LeibnizSpec,
    Weight,
    ap_constant,
    bound_scan,
    endpoint_probe,
    fractional_derivative,
    fs_maximal_check,
    leibniz_decompose,
    lp_norm,
    make_family,
    mixed_norm,
    strong_maximal,
    weighted_norm,
)
from flagmult.analysis import TestFamilySpec as FamilySpec
from flagmult.errors import HolderError, InvalidExponent, InvalidInput
from flagmult.grid import GridSpec, SampledFunction, from_modes
from flagmult.symbols import make_generators

GEN = make_generators()
GRID = GridSpec(64, 64)


def _random_function(grid, rng, kmax=8):
    modes = {}
    for _ in range(24):
        k1 = int(rng.integers(-kmax, kmax + 1))
        k2 = int(rng.integers(-kmax, kmax + 1))
        c = complex(rng.standard_normal(), rng.standard_normal())
        modes[(k1, k2)] = modes.get((k1, k2), 0.0) + c
    return from_modes(grid, [(k1, k2, c) for (k1, k2), c in modes.items()])


# -- exponents and weights ---------------------------------------------------

def test_exponent_tuple_validation():
    ex = ExponentTuple(4.0, 4.0, 4.0, 4.0 / 3.0)
    assert not ex.quasi
    assert ExponentTuple(2.0, 4.0, 4.0, 1.0).quasi is False
    assert ExponentTuple(2.0, 3.0, 3.0, 6.0 / 7.0).quasi
    with pytest.raises(HolderError):
        ExponentTuple(4.0, 4.0, 4.0, 2.0)
    with pytest.raises(InvalidExponent):
        ExponentTuple(1.0, 4.0, 4.0, 4.0 / 3.0)
    with pytest.raises(InvalidExponent):
        ExponentTuple(4.0, 4.0, 4.0, 4.0 / 3.0, q2=6.0)
    # a valid mixed pair
    ExponentTuple(4.0, 6.0, 3.0, 4.0 / 3.0, q2=6.0, q3=3.0)
    with pytest.raises(HolderError):
        ExponentTuple(4.0, 6.0, 3.0, 4.0 / 3.0, q2=2.0, q3=3.0)


def test_weight_validation():
    ones = SampledFunction(GRID, np.ones(GRID.shape, dtype=complex))
    Weight(ones)
    with pytest.raises(InvalidInput):
        Weight(SampledFunction(GRID, np.zeros(GRID.shape, dtype=complex)))
    with pytest.raises(InvalidInput):
        Weight(SampledFunction(GRID, 1j * np.ones(GRID.shape)))


# -- norms ---------------------------------------------------------------

def test_lp_norm_constant_and_sup():
    c = SampledFunction(GRID, np.full(GRID.shape, 3.0, dtype=complex))
    for p in (1.0, 2.0, 4.0, 2.0 / 3.0):
        assert lp_norm(c, p) == pytest.approx(3.0)
    assert lp_norm(c, math.inf) == pytest.approx(3.0)
    with pytest.raises(InvalidExponent):
        lp_norm(c, 0.0)


def test_mixed_norm_reduces_to_lp():
    rng = np.random.default_rng(0)
    f = _random_function(GRID, rng)
    assert mixed_norm(f, 3.0, 3.0) == pytest.approx(lp_norm(f, 3.0))


def test_weighted_norm_unit_weight():
    rng = np.random.default_rng(1)
    f = _random_function(GRID, rng)
    w = Weight(SampledFunction(GRID, np.ones(GRID.shape, dtype=complex)))
    assert weighted_norm(f, 4.0, w) == pytest.approx(lp_norm(f, 4.0))


# -- maximal functions and weights ----------------------------------------

def _brute_ap_axis(vals, p):
    """Direct loop over aligned dyadic intervals on axis 1."""
    u = vals.mean(axis=1)
    sigma = (vals ** (1.0 / (1.0 - p))).mean(axis=1)
    n = len(u)
    best = 0.0
    b = 1
    while b <= n:
        for start in range(0, n, b):
            a1 = u[start:start + b].mean()
            a2 = sigma[start:start + b].mean()
            best = max(best, a1 * a2 ** (p - 1.0))
        b *= 2
    return best


def test_ap_constant_matches_brute():
    grid = GridSpec(16, 16)
    rng = np.random.default_rng(2)
    vals = np.exp(rng.standard_normal(grid.shape))
    w = Weight(SampledFunction(grid, vals.astype(complex)))
    for p in (1.5, 2.0, 3.0):
        assert ap_constant(w, p) == pytest.approx(_brute_ap_axis(vals, p),
                                                  abs=1e-12)
    ones = Weight(SampledFunction(grid, np.ones(grid.shape, dtype=complex)))
    assert ap_constant(ones, 2.0) == pytest.approx(1.0)
    assert ap_constant(ones, 2.0, mode="rect") == pytest.approx(1.0)
    with pytest.raises(InvalidExponent):
        ap_constant(w, 1.0)


def test_strong_maximal_dominates():
    rng = np.random.default_rng(3)
    f = _random_function(GRID, rng)
    M = strong_maximal(f)
    assert np.all(M.values.real >= np.abs(f.values) - 1e-12)
    c = SampledFunction(GRID, np.full(GRID.shape, 2.0, dtype=complex))
    assert np.max(np.abs(strong_maximal(c).values - 2.0)) < 1e-12


def test_fs_maximal_check_ratio_at_least_one():
    rng = np.random.default_rng(4)
    fs = [_random_function(GRID, rng) for _ in range(3)]
    w = Weight(SampledFunction(GRID, np.ones(GRID.shape, dtype=complex)))
    rep = fs_maximal_check(fs, 2.0, 2.0, w)
    assert rep["ratio"] >= 1.0 - 1e-12
    assert rep["count"] == 3


# -- fractional derivatives ------------------------------------------------

def test_fractional_derivative_identities():
    rng = np.random.default_rng(5)
    f = _random_function(GRID, rng)
    ident = fractional_derivative(f, 0.0, 0.0)
    assert np.max(np.abs(ident.values - f.values)) < 1e-12
    mode = from_modes(GRID, [(3, -2, 1.0)])
    d = fractional_derivative(mode, 1.0, 2.0)
    expect = (2 * math.pi * 3) * (2 * math.pi * 2) ** 2
    assert np.max(np.abs(d.values)) == pytest.approx(expect)
    with pytest.raises(InvalidExponent):
        fractional_derivative(f, -0.5, 0.0)


# -- Leibniz decomposition -------------------------------------------------

def test_leibniz_zero_orders_reconstruct_product():
    rng = np.random.default_rng(6)
    f = _random_function(GRID, rng)
    g = _random_function(GRID, rng)
    h = _random_function(GRID, rng)
    spec = LeibnizSpec(0.0, 0.0, 0.0, 0.0, gen=GEN)
    res = leibniz_decompose(spec, f, g, h)
    prod = f.values * g.values * h.values
    denom = np.max(np.abs(prod))
    assert np.max(np.abs(res.reconstruction.values - prod)) / denom <= 1e-10
    assert res.residual <= 1e-10


def test_leibniz_first_orders():
    rng = np.random.default_rng(7)
    f = _random_function(GRID, rng)
    g = _random_function(GRID, rng)
    h = _random_function(GRID, rng)
    spec = LeibnizSpec(1.0, 1.0, 1.0, 1.0, gen=GEN)
    res = leibniz_decompose(spec, f, g, h)
    assert res.residual <= 1e-8
    assert len(res.norm_products) == 16
    assert all(v >= 0 for v in res.norm_products.values())
    assert spec.r_min == pytest.approx(0.5)
    with pytest.raises(InvalidExponent):
        LeibnizSpec(-1.0, 0.0, 0.0, 0.0)


# -- families, scanner, endpoint probe --------------------------------------

def test_family_validation_and_shape():
    with pytest.raises(InvalidInput):
        FamilySpec("fractal")
    with pytest.raises(InvalidInput):
        FamilySpec("dilated", members=0)
    # top octave must stay below the grid band edge for the annulus to be
    # fully representable, hence the larger grid here
    fam = make_family(FamilySpec("dilated", members=3, octave_lo=2),
                      GridSpec(128, 128), GEN)
    assert len(fam) == 3
    labels = [m[0] for m in fam]
    assert labels == ["dilated_o2", "dilated_o3", "dilated_o4"]
    # dilation members preserve every Lp norm exactly
    for p in (2.0, 4.0):
        norms = [lp_norm(m[1], p) for m in fam]
        assert max(norms) / min(norms) <= 1.0 + 1e-10


def test_family_seed_reproducible():
    spec = FamilySpec("modulated", members=2, seed=7, octave_lo=2)
    a = make_family(spec, GRID, GEN)
    b = make_family(spec, GRID, GEN)
    for (la, fa, ga, ha), (lb, fb, gb, hb) in zip(a, b):
        assert la == lb
        assert np.array_equal(fa.values, fb.values)
        assert np.array_equal(ga.values, gb.values)


def test_bound_scan_pointwise_product_is_flat():
    def op(f, g, h):
        return SampledFunction(f.grid, f.values * g.values * h.values)

    ex = ExponentTuple(4.0, 4.0, 4.0, 4.0 / 3.0)
    rep = bound_scan(op, ex, FamilySpec("dilated", members=3, octave_lo=2),
                     GRID, GEN)
    assert rep.mode == "plain"
    assert len(rep.ratios) == 3
    assert rep.flatness <= 2.0
    with pytest.raises(InvalidExponent):
        bound_scan(op, ex, FamilySpec("dilated", members=2, octave_lo=2),
                   GRID, GEN, mixed=True)


def test_endpoint_probe_growth():
    rep = endpoint_probe([64, 128, 256], GEN)
    assert rep.strictly_increasing
    assert rep.control_flatness <= 2.0
