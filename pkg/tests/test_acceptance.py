"""Acceptance battery: eleven named criteria, one pass/fail line each.

Each test prints ``[PASS]/[FAIL] criterion N`` with the measured value so the
battery doubles as a human-readable report under ``pytest -s``.
"""

import math
import time

import numpy as np
import pytest

from flagmult import analysis
from flagmult.analysis import (
    ExponentTuple,
    LeibnizSpec,
    Weight,
    ap_constant,
    bound_scan,
    endpoint_probe,
    fs_maximal_check,
    leibniz_decompose,
    lp_norm,
    make_family,
    weighted_norm,
)
from flagmult.analysis import TestFamilySpec as FamilySpec
from flagmult.cli import _default_flag, main as cli_main
from flagmult.grid import GridSpec, SampledFunction, dft, from_modes
from flagmult.lp import band, square_function, tail_identity_check
from flagmult.multiop import (
    OperatorPlan,
    apply_flag,
    apply_pdo,
    apply_trilinear_brute,
    modes_from_spectrum,
    pdo_direct_probe,
)
from flagmult.symbols import (
    FlagSymbol,
    PDOSymbolPair,
    build_symbol,
    cone_split,
    fourier_tensorize,
    make_generators,
    taylor_split,
)

GEN = make_generators()


def _report(num, name, value, bound, passed, extra=""):
    tag = "PASS" if passed else "FAIL"
    line = f"[{tag}] criterion {num} ({name}): {value:.3e} vs {bound:.1e}"
    if extra:
        line += f" | {extra}"
    print(line)
    return passed


def _band_input(grid, rng, count, lo, hi):
    acc = {}
    for _ in range(count):
        key = []
        for _axis in range(2):
            m = int(rng.integers(lo, hi + 1))
            if rng.integers(0, 2) and m:
                m = -m
            key.append(m)
        c = complex(rng.standard_normal(), rng.standard_normal())
        acc[tuple(key)] = acc.get(tuple(key), 0.0) + c
    return from_modes(grid, [(k1, k2, c) for (k1, k2), c in acc.items()])


def _modes(x):
    s = dft(x)
    return modes_from_spectrum(s, tol=1e-12 * np.max(np.abs(s.coeffs)))


def _rel(a, b):
    denom = float(np.max(np.abs(b))) or 1.0
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) / denom


# ---------------------------------------------------------------------------

def test_criterion_01_generator_identities():
    t0 = time.monotonic()
    u = 2.0 ** np.linspace(-20, 20, 4001)
    u = np.concatenate([u, -u])
    total = np.zeros_like(u)
    for l in range(-24, 25):
        total += GEN.psi_hat_scaled(u, l)
    part_res = float(np.max(np.abs(total - 1.0)))

    uu = np.linspace(-(2.0 ** -3), 2.0 ** -3, 2001)
    phi_res = float(np.max(np.abs(GEN.phi_hat(uu) - 1.0)))

    m1 = build_symbol("m1", "smooth_ratio", {"arity": 3, "parameters": 2}, GEN)
    parts = cone_split(m1, GEN)
    rng = np.random.default_rng(0)
    args = [rng.standard_normal(10000) * 10 for _ in range(6)]
    ref = m1(*args)
    cone_res = float(np.max(np.abs(sum(p(*args) for p in parts.values()) - ref)))

    elapsed = time.monotonic() - t0
    worst = max(part_res, phi_res)
    ok = part_res <= 1e-12 and phi_res <= 1e-12 and cone_res <= 1e-14 \
        and elapsed < 5.0
    assert _report(1, "generator identities", max(worst, cone_res), 1e-12, ok,
                   f"cone={cone_res:.1e} t={elapsed:.2f}s")


def test_criterion_02_lp_tail_identity():
    t0 = time.monotonic()
    grid = GridSpec(256, 256)
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20):
        f = _band_input(grid, rng, 24, 0, 60)
        worst = max(worst, tail_identity_check(f, 0, 0, GEN))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-10 and elapsed < 10.0
    assert _report(2, "LP tail identity", worst, 1e-10, ok,
                   f"t={elapsed:.2f}s")


def _diag_flag(grid):
    jmin, jmax = band(grid, 1)
    jr = [jmin, jmax]
    size = jmax - jmin + 1
    eye = [[1.0 if a == b else 0.0 for b in range(size)] for a in range(size)]
    m1 = build_symbol("m1", "flag_m1_dyadic",
                      {"j1range": jr, "j2range": jr, "coeffs": eye,
                       "inset": 0}, GEN)
    m2 = build_symbol("m2", "flag_m2_dyadic",
                      {"k1range": jr, "k2range": jr, "coeffs": eye}, GEN)
    return FlagSymbol(m1, m2)


def test_criterion_03_oracle_equivalence():
    t0 = time.monotonic()
    grid = GridSpec(64, 64)
    flag = _diag_flag(grid)
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        f = _band_input(grid, rng, 8, 4, 8)
        g = _band_input(grid, rng, 8, 1, 2)
        h = _band_input(grid, rng, 6, 0, 1)
        ref = apply_trilinear_brute(flag, _modes(f), _modes(g), _modes(h),
                                    grid)
        sep = apply_flag(flag, f, g, h, OperatorPlan(kind="Separable"), GEN)
        low = apply_flag(flag, f, g, h, OperatorPlan(kind="LowRankDyadic"),
                         GEN)
        worst = max(worst, _rel(sep.values, ref.values),
                    _rel(low.values, ref.values))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-10 and elapsed < 10.0
    assert _report(3, "oracle equivalence", worst, 1e-10, ok,
                   f"10 cases, t={elapsed:.2f}s")


def test_criterion_04_tensor_factorization():
    t0 = time.monotonic()
    grid = GridSpec(128, 128)
    # fully separable flag: rank-one m1 and m2 split per axis
    m1 = build_symbol("m1", "rank_one",
                      {"windows": ["psi", "psi", "one", "one", "one", "one"],
                       "scales": [3, 2, 0, 0, 0, 0], "arity": 3}, GEN)
    m2 = build_symbol("m2", "rank_one",
                      {"windows": ["phi", "phi", "psi", "psi"],
                       "scales": [3, 3, 1, 1], "arity": 2}, GEN)
    flag = FlagSymbol(m1, m2)

    rng = np.random.default_rng(4)

    def axis_modes(ks):
        return [(k, complex(rng.standard_normal(), rng.standard_normal()))
                for k in ks]

    # modes chosen inside the window supports (and off their boundaries)
    f1, f2 = axis_modes([6, 8, -10, 12]), axis_modes([3, 4, -5])
    g1, g2 = axis_modes([0, 1, -1]), axis_modes([0, -1])
    h1, h2 = axis_modes([2, -2, 3]), axis_modes([2, -3])

    def tensor_fn(a_modes, b_modes):
        return from_modes(grid, [(ka, kb, ca * cb) for ka, ca in a_modes
                                 for kb, cb in b_modes])

    F, G, H = tensor_fn(f1, f2), tensor_fn(g1, g2), tensor_fn(h1, h2)
    out = apply_flag(flag, F, G, H, OperatorPlan(kind="Separable"), GEN)

    # 1-D factor operators by direct mode summation
    def axis_op(fm, gm, hm, wf, wg, wh, N):
        x = np.arange(N) / N
        acc = np.zeros(N, dtype=complex)
        for ka, ca in fm:
            for kb, cb in gm:
                for kc, cc in hm:
                    coeff = wf(ka) * wg(kb) * wh(kc) * ca * cb * cc
                    acc += coeff * np.exp(2j * np.pi * (ka + kb + kc) * x)
        return acc

    t1 = axis_op(f1, g1, h1,
                 lambda u: GEN.psi_hat_scaled(float(u), 3),
                 lambda u: GEN.phi_hat_scaled(float(u), 3),
                 lambda u: GEN.psi_hat_scaled(float(u), 1), grid.N1)
    t2 = axis_op(f2, g2, h2,
                 lambda u: GEN.psi_hat_scaled(float(u), 2),
                 lambda u: GEN.phi_hat_scaled(float(u), 3),
                 lambda u: GEN.psi_hat_scaled(float(u), 1), grid.N2)
    expect = np.outer(t1, t2)
    assert float(np.max(np.abs(expect))) > 1e-8
    res = _rel(out.values, expect)
    elapsed = time.monotonic() - t0
    ok = res <= 1e-10 and elapsed < 10.0
    assert _report(4, "tensor factorization", res, 1e-10, ok,
                   f"t={elapsed:.2f}s")


def test_criterion_05_taylor_and_tensorize():
    m1 = build_symbol("m1", "smooth_ratio", {"arity": 3, "parameters": 2}, GEN)
    split = taylor_split(m1, 3, 64, gen=GEN)
    rng = np.random.default_rng(5)
    n = 60
    u1 = np.abs(rng.standard_normal(n)) * 8 + 4
    u2 = np.abs(rng.standard_normal(n)) * 8 + 4
    small = [u * rng.uniform(-0.05, 0.05, n) for u in (u1, u2, u1, u2)]
    total = sum(s(u1, u2, *small) for s in split.values())
    ref = m1(u1, u2, *small)
    taylor_res = float(np.max(np.abs(total - ref)))

    m2 = build_symbol("m2", "smooth_ratio", {"arity": 2, "parameters": 2}, GEN)
    monotone = True
    worst_seq = None
    for scales in [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)]:
        exp = fourier_tensorize(m2, scales, 16, GEN)
        errs = [exp.truncation_error(M) for M in (2, 4, 8, 16)]
        if not all(b < a for a, b in zip(errs, errs[1:])):
            monotone = False
            worst_seq = (scales, errs)
    ok = taylor_res <= 1e-6 and monotone
    assert _report(5, "taylor split + tensorize decay", taylor_res, 1e-6, ok,
                   "decay monotone on 5 annuli" if monotone
                   else f"non-monotone at {worst_seq}")


def test_criterion_06_leibniz_reconstruction():
    grid = GridSpec(256, 256)
    rng = np.random.default_rng(6)
    f = _band_input(grid, rng, 20, 0, 30)
    g = _band_input(grid, rng, 20, 0, 30)
    h = _band_input(grid, rng, 20, 0, 30)

    res1 = leibniz_decompose(LeibnizSpec(1.0, 1.0, 1.0, 1.0, gen=GEN),
                             f, g, h).residual

    res0 = leibniz_decompose(LeibnizSpec(0.0, 0.0, 0.0, 0.0, gen=GEN),
                             f, g, h)
    prod = f.values * g.values * h.values
    zero_res = _rel(res0.reconstruction.values, prod)

    ok = res1 <= 1e-8 and zero_res <= 1e-10
    assert _report(6, "Leibniz reconstruction", res1, 1e-8, ok,
                   f"zero-order={zero_res:.1e}")


def test_criterion_07_pdo_consistency():
    grid = GridSpec(64, 64)
    a0 = build_symbol("a0", "smooth_ratio", {"arity": 3, "parameters": 2}, GEN)
    a1 = build_symbol("a1", "constant", {"arity": 3, "value": 0.5}, GEN)
    b0 = build_symbol("b0", "constant", {"arity": 2}, GEN)
    b1 = build_symbol("b1", "smooth_ratio", {"arity": 2, "parameters": 2}, GEN)
    pair = PDOSymbolPair({(0, 0): a0, (1, 0): a1},
                         {(0, 0): b0, (0, 1): b1})
    rng = np.random.default_rng(7)
    f = _band_input(grid, rng, 6, 1, 6)
    g = _band_input(grid, rng, 6, 1, 4)
    h = _band_input(grid, rng, 4, 1, 4)
    out = apply_pdo(pair, f, g, h, Lmax=1, window_count=1, gen=GEN)
    ref, (i1, i2) = pdo_direct_probe(pair, f, g, h, probe=16)
    res = _rel(out.values[np.ix_(i1, i2)], ref)
    ok = res <= 1e-6
    assert _report(7, "PDO quadrature match", res, 1e-6, ok, "16x16 probe")


def test_criterion_08_boundedness_scan():
    grid = GridSpec(256, 256)
    flag = _default_flag(grid, GEN)
    plan = OperatorPlan(kind="Separable")

    def op(f, g, h):
        return apply_flag(flag, f, g, h, plan, GEN)

    family = FamilySpec("dilated", members=5, seed=0, octave_lo=2)
    plain = bound_scan(op, ExponentTuple(4.0, 4.0, 4.0, 4.0 / 3.0),
                       family, grid, GEN)
    mixed = bound_scan(op, ExponentTuple(4.0, 6.0, 3.0, 4.0 / 3.0,
                                         q2=6.0, q3=3.0),
                       family, grid, GEN, mixed=True)

    one3 = build_symbol("one3", "constant", {"arity": 3}, GEN)
    one2 = build_symbol("one2", "constant", {"arity": 2}, GEN)
    holder_flag = FlagSymbol(one3, one2)

    def op_holder(f, g, h):
        return apply_flag(holder_flag, f, g, h, plan, GEN)

    holder = bound_scan(op_holder, ExponentTuple(4.0, 4.0, 4.0, 4.0 / 3.0),
                        family, grid, GEN)
    worst_flat = max(plain.flatness, mixed.flatness)
    ok = worst_flat <= 2.0 and holder.max_ratio <= 1.0 + 1e-10
    assert _report(8, "boundedness scan flatness", worst_flat, 2.0, ok,
                   f"plain={plain.flatness:.3f} mixed={mixed.flatness:.3f} "
                   f"holder_max={holder.max_ratio:.12f}")


def test_criterion_09_false_endpoint_growth():
    rep = endpoint_probe([64, 128, 256, 512], GEN)
    ok = rep.strictly_increasing and rep.control_flatness <= 2.0
    assert _report(9, "false-endpoint growth", rep.ratios[-1] / rep.ratios[0],
                   1.0, ok,
                   f"ratios={['%.3f' % r for r in rep.ratios]} "
                   f"control_flat={rep.control_flatness:.3f}")


def _brute_ap(vals, p, mode, axis=1):
    n1, n2 = vals.shape
    sigma = vals ** (1.0 / (1.0 - p))
    best = 0.0
    if mode == "axis":
        u = vals.mean(axis=1 if axis == 1 else 0)
        us = sigma.mean(axis=1 if axis == 1 else 0)
        b = 1
        while b <= len(u):
            for s in range(0, len(u), b):
                best = max(best, u[s:s + b].mean()
                           * us[s:s + b].mean() ** (p - 1.0))
            b *= 2
        return best
    b1 = 1
    while b1 <= n1:
        b2 = 1
        while b2 <= n2:
            for s1 in range(0, n1, b1):
                for s2 in range(0, n2, b2):
                    blk = vals[s1:s1 + b1, s2:s2 + b2]
                    sblk = sigma[s1:s1 + b1, s2:s2 + b2]
                    best = max(best, blk.mean() * sblk.mean() ** (p - 1.0))
            b2 *= 2
        b1 *= 2
    return best


def test_criterion_10_weighted_machinery():
    # (a) Ap characteristic vs exhaustive brute force on 16-point grids
    grid16 = GridSpec(16, 16)
    rng = np.random.default_rng(10)
    vals = np.exp(rng.standard_normal(grid16.shape))
    w16 = Weight(SampledFunction(grid16, vals.astype(complex)))
    ap_err = 0.0
    for p in (1.5, 2.0, 3.0):
        ap_err = max(ap_err, abs(ap_constant(w16, p)
                                 - _brute_ap(vals, p, "axis")))
        ap_err = max(ap_err, abs(ap_constant(w16, p, mode="rect")
                                 - _brute_ap(vals, p, "rect")))

    # (b) Fefferman-Stein ratio stability over 4 octaves, w = 1
    grid = GridSpec(128, 128)
    ones = Weight(SampledFunction(grid, np.ones(grid.shape, dtype=complex)))
    fam = make_family(FamilySpec("dilated", members=4, seed=1, octave_lo=2),
                      grid, GEN)
    fs_ratios = [fs_maximal_check([f, g, h], 2.0, 2.0, ones)["ratio"]
                 for _, f, g, h in fam]
    fs_spread = max(fs_ratios) / min(fs_ratios)

    # (c) square-function equivalence constants across the dilation family,
    # for w = 1 and a certified A2 power weight
    x1 = np.arange(grid.N1) * grid.L1 / grid.N1
    d = np.minimum(np.abs(x1 - 0.5), 1.0 - np.abs(x1 - 0.5))
    wvals = np.clip(d, 1.0 / 128.0, None) ** 0.5
    w2 = Weight(SampledFunction(
        grid, np.broadcast_to(wvals[:, None], grid.shape).astype(complex)))
    a2_const = ap_constant(w2, 2.0, mode="rect")
    spreads = []
    for w in (ones, w2):
        consts = []
        for _, f, _g, _h in fam:
            sq = square_function(f, {1, 2}, GEN)
            consts.append(weighted_norm(sq, 2.0, w)
                          / weighted_norm(f, 2.0, w))
        spreads.append(max(consts) / min(consts))
    c5_spread = max(spreads)

    ok = (ap_err <= 1e-12 and fs_spread <= 1.2 and c5_spread <= 2.0
          and a2_const < 10.0)
    assert _report(10, "weighted machinery", ap_err, 1e-12, ok,
                   f"fs_spread={fs_spread:.3f} c5_spread={c5_spread:.3f} "
                   f"A2={a2_const:.3f}")


def test_criterion_11_determinism(tmp_path):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    rc1 = cli_main(["--grid", "64", "--seed", "5", "--out-dir", str(out1),
                    "verify"])
    rc2 = cli_main(["--grid", "64", "--seed", "5", "--out-dir", str(out2),
                    "verify"])
    same = (out1 / "verify.json").read_bytes() == \
        (out2 / "verify.json").read_bytes()
    ok = rc1 == 0 and rc2 == 0 and same
    assert _report(11, "determinism", float(same), 1.0, ok,
                   "byte-identical verify.json")
