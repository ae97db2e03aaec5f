"""Dyadic projection algebra: multipliers, square/sup functions, tail identity."""

import numpy as np
import pytest

from flagmult.errors import InvalidInput, ScaleError
from flagmult.grid import GridSpec, dft, from_modes
from flagmult.lp import (
    GAP_DESK,
    LPOperatorSpec,
    apply_lp,
    band,
    lp_multiplier,
    square_function,
    sum_delta_multiplier,
    sup_function,
    tail_identity_check,
)
from flagmult.symbols import make_generators

GEN = make_generators()
GRID = GridSpec(64, 64)


def _band_limited(grid, rng, count=24):
    jmin, jmax = band(grid, 1)
    hi = 2 ** jmax
    modes = []
    for _ in range(count):
        k1 = int(rng.integers(-hi, hi + 1))
        k2 = int(rng.integers(-hi, hi + 1))
        c = complex(rng.standard_normal(), rng.standard_normal())
        modes.append((k1, k2, c))
    return from_modes(grid, modes)


def test_band_values():
    assert band(GRID, 1) == (-3, 4)  # 2^4 = 64/4
    g2 = GridSpec(256, 64, 2.0, 1.0)
    assert band(g2, 1) == (-2, 5)


def test_spec_validation():
    with pytest.raises(InvalidInput):
        LPOperatorSpec("Bogus", 0, 1)
    with pytest.raises(InvalidInput):
        LPOperatorSpec("Delta", 0, 3)
    with pytest.raises(ScaleError):
        LPOperatorSpec("Delta", 12, 1).validate(GRID)


def test_delta_picks_one_octave():
    f = from_modes(GRID, [(4, 0, 1.0), (16, 0, 1.0), (0, 5, 1.0)])
    out = apply_lp(f, LPOperatorSpec("Delta", 2, 1), GEN)
    s = dft(out)
    assert s.at(4, 0) == pytest.approx(1.0)  # |4|/2^2 = 1 on the psi plateau
    assert abs(s.at(16, 0)) < 1e-14
    assert abs(s.at(0, 5)) < 1e-14  # axis 1 only; mode has k1 = 0


def test_s_is_lowpass():
    f = from_modes(GRID, [(1, 0, 1.0), (9, 0, 1.0)])
    out = apply_lp(f, LPOperatorSpec("S", 3, 1), GEN)
    s = dft(out)
    assert s.at(1, 0) == pytest.approx(1.0)
    assert abs(s.at(9, 0)) < 1e-14


def test_nyquist_always_zeroed():
    for kind, scale in (("Delta", 4), ("S", 4), ("DeltaTilde", 1),
                        ("DeltaPrime", 1)):
        vals = lp_multiplier(LPOperatorSpec(kind, scale, 1), GRID, GEN)
        assert vals[GRID.N1 // 2] == 0.0


def test_sum_delta_is_identity_inside_band():
    vals = sum_delta_multiplier(GRID, 1, GEN)
    u = GRID.phys_freqs(1)
    jmin, jmax = band(GRID, 1)
    inside = (np.abs(u) >= 2.0 ** jmin) & (np.abs(u) <= 2.0 ** jmax)
    assert np.max(np.abs(vals[inside] - 1.0)) <= 1e-12


def test_square_function_single_mode():
    # one mode on the psi plateau contributes to exactly one scale
    f = from_modes(GRID, [(4, 4, 2.0)])
    sq = square_function(f, {1, 2}, GEN)
    assert np.max(np.abs(sq.values - 2.0)) < 1e-12
    sq1 = square_function(f, {1}, GEN)
    assert np.max(np.abs(sq1.values - 2.0)) < 1e-12
    with pytest.raises(InvalidInput):
        square_function(f, {3}, GEN)


def test_sup_function_nonnegative_and_bounded():
    rng = np.random.default_rng(3)
    modes = [(int(rng.integers(-2, 3)), int(rng.integers(-2, 3)),
              complex(rng.standard_normal(), rng.standard_normal()))
             for _ in range(8)]
    f = from_modes(GRID, modes)
    sup = sup_function(f, ("S", "S"), GEN)
    assert np.all(sup.values.real >= 0)
    # the top-scale S plateau covers every mode, so S_top S_top f = f and
    # the sup dominates |f| pointwise
    assert np.all(sup.values.real >= np.abs(f.values) - 1e-12)
    with pytest.raises(InvalidInput):
        sup_function(f, ("S", "Tilde"), GEN)


def test_tail_identity_exact_on_band_limited():
    rng = np.random.default_rng(0)
    for _ in range(5):
        f = _band_limited(GRID, rng)
        res = tail_identity_check(f, 0, 0, GEN, gap=GAP_DESK)
        assert res <= 1e-10


def test_tail_identity_scale_errors():
    f = from_modes(GRID, [(1, 1, 1.0)])
    with pytest.raises(ScaleError):
        tail_identity_check(f, 4, 0, GEN)  # k1 + gap beyond band top
    with pytest.raises(ScaleError):
        tail_identity_check(f, -9, 0, GEN)
