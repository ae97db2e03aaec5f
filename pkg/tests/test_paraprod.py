"""Dyadic intervals, adapted bumps, and the discrete model operators."""

import numpy as np
import pytest

from flagmult.analysis import ExponentTuple, lp_norm
from flagmult.errors import FamilyError, InvalidInput, ScaleError
from flagmult.grid import GridSpec, SampledFunction, dft, from_modes
from flagmult.paraprod import (
    BumpFamily,
    DyadicInterval,
    approximate_cutoff,
    localized_estimate_check,
    model_T1,
    model_T1_k0,
    rectangle_cutoff,
)
from flagmult.symbols import make_generators

GEN = make_generators()
GRID = GridSpec(64, 64)


def _families():
    lac = BumpFamily(GEN, "lacunary")
    non = BumpFamily(GEN, "nonlacunary")
    return {"I1": lac, "I2": non, "I3": lac,
            "J1": lac, "J2": lac, "J3": non}


def _dense_input(rng, kmax=10):
    k = np.arange(-kmax, kmax + 1)
    modes = [(int(k1), int(k2),
              complex(rng.standard_normal(), rng.standard_normal()))
             for k1 in k for k2 in k]
    return from_modes(GRID, modes)


def test_interval_validation():
    with pytest.raises(InvalidInput):
        DyadicInterval(-1, 0)
    with pytest.raises(InvalidInput):
        DyadicInterval(2, -1)
    iv = DyadicInterval(2, 3)
    assert iv.length == pytest.approx(0.25)


def test_bump_normalized_and_one_sided():
    fam = BumpFamily(GEN, "lacunary")
    for scale in (0, 1, 3):
        vals = fam.realize(DyadicInterval(scale, 0), GRID, 1)
        nrm = np.sqrt(np.sum(np.abs(vals) ** 2) / GRID.N1)
        assert nrm == pytest.approx(1.0)
        spec = np.fft.fft(vals)
        k = np.fft.fftfreq(GRID.N1, d=1.0 / GRID.N1)
        active = np.abs(spec) > 1e-10 * np.max(np.abs(spec))
        assert not np.any(active & (np.abs(k) < 2.0 ** scale / 5.0))


def test_bump_scale_out_of_band():
    fam = BumpFamily(GEN, "lacunary")
    with pytest.raises(ScaleError):
        fam.realize(DyadicInterval(6, 0), GRID, 1)
    with pytest.raises(FamilyError):
        BumpFamily(GEN, "wavelet")


def test_cutoff_decay():
    cut = approximate_cutoff(DyadicInterval(2, 0), GRID, axis=1)
    prof = cut.values[:, 0].real
    assert prof[0] == pytest.approx(1.0)  # inside the interval
    assert prof[GRID.N1 // 2] < 1e-20  # far away, rapid decay
    rect = rectangle_cutoff(DyadicInterval(1, 0), DyadicInterval(1, 1), GRID)
    assert rect.values[0, GRID.N2 // 2].real == pytest.approx(1.0)


def test_family_slot_validation():
    fams = _families()
    f = from_modes(GRID, [(1, 1, 1.0)])
    bad = dict(fams)
    bad["I2"] = BumpFamily(GEN, "lacunary")
    with pytest.raises(FamilyError):
        model_T1(f, f, f, bad, range(0, 2))
    incomplete = {k: v for k, v in fams.items() if k != "J3"}
    with pytest.raises(FamilyError):
        model_T1(f, f, f, incomplete, range(0, 2))


def test_model_t1_nonzero_and_linear():
    rng = np.random.default_rng(0)
    f = _dense_input(rng)
    g = _dense_input(rng)
    h = _dense_input(rng)
    fams = _families()
    out = model_T1(f, g, h, fams, range(0, 3))
    assert float(np.max(np.abs(out.values))) > 1e-8
    # linear in f
    out2 = model_T1(SampledFunction(GRID, 2.0 * f.values), g, h,
                    fams, range(0, 3))
    assert np.max(np.abs(out2.values - 2.0 * out.values)) <= \
        1e-10 * np.max(np.abs(out.values))


def test_model_t1_k0_reduces_to_diagonal_band():
    rng = np.random.default_rng(1)
    f = _dense_input(rng)
    g = _dense_input(rng)
    h = _dense_input(rng)
    fams = _families()
    report = {}
    out = model_T1_k0(f, g, h, fams, range(0, 3), k0=0, slack=0,
                      report=report)
    assert report["terms"] > 0
    assert float(np.max(np.abs(out.values))) > 1e-8
    with pytest.raises(InvalidInput):
        model_T1_k0(f, g, h, fams, range(0, 3), k0=-1)


def test_localized_estimate_check():
    rng = np.random.default_rng(2)
    f = _dense_input(rng)
    g = _dense_input(rng)
    h = _dense_input(rng)
    fams = _families()
    out = model_T1(f, g, h, fams, range(0, 3))
    ex = ExponentTuple(4.0, 4.0, 4.0, 4.0 / 3.0)
    ratio = localized_estimate_check(out, (0, 0), f, g, h, ex, 2)
    assert np.isfinite(ratio) and ratio > 0
    # localization can only shrink the input norms, so the localized ratio
    # dominates the global one
    global_ratio = lp_norm(out, ex.r) / (
        lp_norm(f, ex.p1) * lp_norm(g, ex.p2) * lp_norm(h, ex.p3))
    assert ratio >= global_ratio - 1e-12
    with pytest.raises(InvalidInput):
        localized_estimate_check(out, (0, 0), f, g, h, ex, 3)
