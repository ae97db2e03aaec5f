"""Norms, weights, maximal functions, derivative calculus, and scan harnesses.

The Leibniz harness decomposes D^alpha(f * D^beta(g h)) into frequency-region
terms built from the generator windows.  Per axis the product g h is split by
the exact three-pattern dyadic partition (high-low, low-high, comparable)
plus a zero-frequency term, and f is split low/mid/high relative to each
scale; all splits are partitions of unity, so the term sum reconstructs the
left-hand side to machine precision on band-limited inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInput,
    HolderError,
    InvalidExponent,
    InvalidInput,
    ScaleError,
)
from .grid import GridSpec, SampledFunction, dft, from_modes, idft
from .lp import DEFAULT_OCTAVES, GAP_DESK, band
from .symbols import GeneratorSet, make_generators

__all__ = [
    "ExponentTuple",
    "Weight",
    "LeibnizSpec",
    "LeibnizResult",
    "lp_norm",
    "mixed_norm",
    "weighted_norm",
    "weighted_mixed_norm",
    "ap_constant",
    "strong_maximal",
    "fs_maximal_check",
    "fractional_derivative",
    "leibniz_decompose",
    "TestFamilySpec",
    "ScanReport",
    "make_family",
    "bound_scan",
    "GrowthReport",
    "endpoint_probe",
]


# ---------------------------------------------------------------------------
# Exponents and weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentTuple:
    """Hoelder-consistent exponents 1/r = 1/p1 + 1/p2 + 1/p3.

    Optional q2, q3 describe the mixed-norm variant, which must satisfy
    1/p1 + 1/q2 + 1/q3 = 1/r as well.
    """

    p1: float
    p2: float
    p3: float
    r: float
    q2: float = None
    q3: float = None

    def __post_init__(self):
        for p in (self.p1, self.p2, self.p3):
            if not (1.0 < p < math.inf):
                raise InvalidExponent(f"input exponent {p} outside (1, inf)")
        if not (0.0 < self.r < math.inf):
            raise InvalidExponent(f"target exponent {self.r} outside (0, inf)")
        lhs = 1.0 / self.p1 + 1.0 / self.p2 + 1.0 / self.p3
        if abs(lhs - 1.0 / self.r) > 1e-12:
            raise HolderError(
                f"1/r = {1.0/self.r} but sum of 1/p_i = {lhs}")
        if (self.q2 is None) != (self.q3 is None):
            raise InvalidExponent("mixed exponents q2, q3 come as a pair")
        if self.q2 is not None:
            for q in (self.q2, self.q3):
                if not (1.0 < q < math.inf):
                    raise InvalidExponent(f"mixed exponent {q} outside (1, inf)")
            mixed = 1.0 / self.p1 + 1.0 / self.q2 + 1.0 / self.q3
            if abs(mixed - 1.0 / self.r) > 1e-12:
                raise HolderError(
                    f"mixed sum 1/p1 + 1/q2 + 1/q3 = {mixed} != 1/r")

    @property
    def quasi(self) -> bool:
        return self.r < 1.0


@dataclass(frozen=True)
class Weight:
    """Strictly positive sampled weight; ``tensor`` flags w = w1 (x) w2."""

    w: SampledFunction
    tensor: bool = False

    def __post_init__(self):
        vals = self.w.values
        if np.any(np.abs(vals.imag) > 0):
            raise InvalidInput("weights must be real")
        if not np.all(vals.real > 0):
            raise InvalidInput("weights must be strictly positive")

    @property
    def values(self):
        return self.w.values.real


@dataclass(frozen=True)
class LeibnizSpec:
    """Derivative orders and the scale-separation gap of the decomposition.

    The admissible-range marker r > max 1/(1+order) is recorded (r_min) but
    not enforced: the harness is informative outside it too.
    """

    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    gap: int = GAP_DESK
    gen: GeneratorSet = None

    def __post_init__(self):
        for o in (self.alpha1, self.alpha2, self.beta1, self.beta2):
            if o < 0:
                raise InvalidExponent("derivative orders must be nonnegative")
        if self.gap < 1:
            raise InvalidInput("gap must be >= 1")

    @property
    def r_min(self) -> float:
        return max(1.0 / (1.0 + o) for o in
                   (self.alpha1, self.alpha2, self.beta1, self.beta2))


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def lp_norm(f: SampledFunction, p: float) -> float:
    """(sum |f|^p cell)^{1/p}; p = inf gives the max; 0 < p < 1 is the
    quasi-norm, computed by the same formula."""
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if p <= 0:
        raise InvalidExponent(f"norm exponent must be positive, got {p}")
    a = np.abs(f.values)
    return float(np.sum(a ** p) * f.grid.cell_area) ** (1.0 / p)


def mixed_norm(f: SampledFunction, p_outer: float, q_inner: float) -> float:
    """Inner q-norm along x2 per x1-fiber, then the outer p-norm."""
    g = f.grid
    a = np.abs(f.values)
    d2 = g.L2 / g.N2
    d1 = g.L1 / g.N1
    if q_inner == math.inf:
        inner = np.max(a, axis=1)
    elif q_inner <= 0:
        raise InvalidExponent("inner exponent must be positive")
    else:
        inner = (np.sum(a ** q_inner, axis=1) * d2) ** (1.0 / q_inner)
    if p_outer == math.inf:
        return float(np.max(inner))
    if p_outer <= 0:
        raise InvalidExponent("outer exponent must be positive")
    return float(np.sum(inner ** p_outer) * d1) ** (1.0 / p_outer)


def weighted_norm(f: SampledFunction, p: float, w: Weight) -> float:
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if p <= 0:
        raise InvalidExponent("norm exponent must be positive")
    a = np.abs(f.values)
    return float(np.sum(a ** p * w.values) * f.grid.cell_area) ** (1.0 / p)


def weighted_mixed_norm(f: SampledFunction, p: float, w1: Weight,
                        q: float, w2: Weight) -> float:
    """Weighted iterated norm; w1 is read along its x1-profile (weights are
    expected constant along the axis they do not weight)."""
    if p <= 0 or q <= 0:
        raise InvalidExponent("exponents must be positive")
    g = f.grid
    a = np.abs(f.values)
    d2 = g.L2 / g.N2
    d1 = g.L1 / g.N1
    inner = (np.sum(a ** q * w2.values, axis=1) * d2) ** (1.0 / q)
    prof1 = w1.values[:, 0]
    return float(np.sum(inner ** p * prof1) * d1) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Weights and maximal functions
# ---------------------------------------------------------------------------

def _dyadic_lengths(n):
    out = []
    b = 1
    while b <= n:
        out.append(b)
        b *= 2
    return out


def _interval_averages(arr, length):
    """Averages of a 1-D array over aligned blocks of the given length."""
    return arr.reshape(-1, length).mean(axis=1)


def ap_constant(w: Weight, p: float, mode: str = "axis", axis: int = 1) -> float:
    """Muckenhoupt characteristic over aligned dyadic intervals/rectangles.

    axis mode: sup over dyadic intervals I on the chosen axis of the product
    avg_{I x T}(w) * avg_{I x T}(w^{1/(1-p)})^{p-1} (the other axis is
    averaged out).  rect mode: sup over aligned dyadic rectangles.
    """
    if not (1.0 < p < math.inf):
        raise InvalidExponent(f"Ap exponent must be in (1, inf), got {p}")
    vals = w.values
    sigma = vals ** (1.0 / (1.0 - p))
    best = 0.0
    if mode == "axis":
        if axis == 1:
            u = vals.mean(axis=1)
            us = sigma.mean(axis=1)
        elif axis == 2:
            u = vals.mean(axis=0)
            us = sigma.mean(axis=0)
        else:
            raise InvalidInput("axis must be 1 or 2")
        for b in _dyadic_lengths(len(u)):
            a1 = _interval_averages(u, b)
            a2 = _interval_averages(us, b)
            best = max(best, float(np.max(a1 * a2 ** (p - 1.0))))
        return best
    if mode != "rect":
        raise InvalidInput("mode must be 'axis' or 'rect'")
    n1, n2 = vals.shape
    for b1 in _dyadic_lengths(n1):
        for b2 in _dyadic_lengths(n2):
            a1 = vals.reshape(n1 // b1, b1, n2 // b2, b2).mean(axis=(1, 3))
            a2 = sigma.reshape(n1 // b1, b1, n2 // b2, b2).mean(axis=(1, 3))
            best = max(best, float(np.max(a1 * a2 ** (p - 1.0))))
    return best


def strong_maximal(f: SampledFunction) -> SampledFunction:
    """Sup of |f|-averages over aligned dyadic rectangles containing x."""
    a = np.abs(f.values)
    n1, n2 = a.shape
    out = np.zeros_like(a)
    for b1 in _dyadic_lengths(n1):
        for b2 in _dyadic_lengths(n2):
            means = a.reshape(n1 // b1, b1, n2 // b2, b2).mean(axis=(1, 3))
            expanded = np.repeat(np.repeat(means, b1, axis=0), b2, axis=1)
            np.maximum(out, expanded, out=out)
    return SampledFunction(f.grid, out.astype(complex))


def fs_maximal_check(fs, p: float, q: float, w: Weight) -> dict:
    """Vector-valued maximal ratio: weighted p-norm of the l^q aggregate of
    the maximal functions over the aggregate of the inputs."""
    if not fs:
        raise InvalidInput("need at least one function")
    grid = fs[0].grid
    num = np.zeros(grid.shape)
    den = np.zeros(grid.shape)
    for f in fs:
        num += np.abs(strong_maximal(f).values) ** q
        den += np.abs(f.values) ** q
    numf = SampledFunction(grid, (num ** (1.0 / q)).astype(complex))
    denf = SampledFunction(grid, (den ** (1.0 / q)).astype(complex))
    dnorm = weighted_norm(denf, p, w)
    if dnorm == 0:
        raise DegenerateInput("zero input aggregate")
    nnorm = weighted_norm(numf, p, w)
    return {"ratio": nnorm / dnorm, "numerator": nnorm, "denominator": dnorm,
            "count": len(fs), "p": p, "q": q}


# ---------------------------------------------------------------------------
# Fractional derivatives
# ---------------------------------------------------------------------------

def _frac_multiplier(grid: GridSpec, a1: float, a2: float) -> np.ndarray:
    def axis_vals(axis, a):
        u = np.abs(grid.phys_freqs(axis))
        if a == 0:
            return np.ones_like(u)
        return (2.0 * np.pi * u) ** a
    return axis_vals(1, a1)[:, None] * axis_vals(2, a2)[None, :]


def fractional_derivative(f: SampledFunction, a1: float, a2: float) -> SampledFunction:
    """Spectral multiplier (2 pi |k1/L1|)^{a1} (2 pi |k2/L2|)^{a2}, with the
    0^0 = 1 convention so order 0 is the identity."""
    if a1 < 0 or a2 < 0:
        raise InvalidExponent("fractional orders must be nonnegative")
    s = dft(f)
    mult = _frac_multiplier(f.grid, a1, a2)
    return idft(type(s)(f.grid, s.coeffs * mult))


# ---------------------------------------------------------------------------
# Leibniz decomposition
# ---------------------------------------------------------------------------

_PATTERNS = ("pf", "fp", "pp")
_RELS = ("low", "mid", "high")


def _pattern_windows(gen, pat, l, u):
    """(g-window, h-window) values at scale l on the frequency axis u."""
    if pat == "pf":
        return gen.psi_hat_scaled(u, l), gen.phi_hat_scaled(u, l)
    if pat == "fp":
        return gen.phi_hat_scaled(u, l), gen.psi_hat_scaled(u, l)
    if pat == "pp":
        return gen.psi_hat_scaled(u, l), gen.psi_wide_hat(u * 2.0 ** (-l))
    raise InvalidInput(f"unknown pattern {pat!r}")


def _rel_window(gen, rel, l, gap, u):
    if rel == "low":
        return gen.phi_hat_scaled(u, l - gap)
    if rel == "high":
        return 1.0 - gen.phi_hat_scaled(u, l + gap)
    return gen.phi_hat_scaled(u, l + gap) - gen.phi_hat_scaled(u, l - gap)


@dataclass
class LeibnizResult:
    terms: dict
    reconstruction: SampledFunction
    lhs: SampledFunction
    residual: float
    norm_products: dict
    spec: LeibnizSpec


def leibniz_decompose(spec: LeibnizSpec, f, g, h,
                      octaves: int = DEFAULT_OCTAVES,
                      exponents: ExponentTuple = None) -> LeibnizResult:
    """Frequency-region decomposition of D^alpha(f * D^beta(g h)).

    Per axis, g h is split by the exact partition
    1 = sum_l [psi_l phi_l + phi_l psi_l + psi_l psi_wide_l] over the band
    scales, plus the zero-frequency ("dc") region; f is split low/mid/high
    around each scale.  The terms sum to the left-hand side exactly by
    linearity.  Also returns the 16 labeled derivative-placement norm
    products (per axis: derivatives to g, to h, or all orders onto one of
    them with f underived).
    """
    gen = spec.gen or make_generators()
    grid = f.grid
    if g.grid != grid or h.grid != grid:
        raise InvalidInput("inputs must share one grid")
    jmin1, jmax1 = band(grid, 1, octaves)
    jmin2, jmax2 = band(grid, 2, octaves)
    if jmin1 > jmax1 or jmin2 > jmax2:
        raise ScaleError("empty scale band")

    N1, N2 = grid.shape
    scaleN = (N1 * N2) / (grid.L1 * grid.L2)
    F = dft(f).coeffs
    G = dft(g).coeffs
    H = dft(h).coeffs
    u1 = grid.phys_freqs(1)
    u2 = grid.phys_freqs(2)
    mb = _frac_multiplier(grid, spec.beta1, spec.beta2)
    ma = _frac_multiplier(grid, spec.alpha1, spec.alpha2)

    def ifield(coeffs):
        return np.fft.ifft2(coeffs) * scaleN

    # per-axis (pattern, scale) enumerations, dc included as (dc, None)
    def axis_regions(jmin, jmax):
        out = [(pat, l) for pat in _PATTERNS for l in range(jmin, jmax + 1)]
        out.append(("dc", None))
        return out

    regs1 = axis_regions(jmin1, jmax1)
    regs2 = axis_regions(jmin2, jmax2)

    def pattern_vecs(pat, l, u):
        if pat == "dc":
            v = (u == 0).astype(float)
            return v, v
        return _pattern_windows(gen, pat, l, u)

    def rels_for(pat):
        return ("all",) if pat == "dc" else _RELS

    def rel_vec(rel, l, u):
        if rel == "all":
            return np.ones_like(u)
        return _rel_window(gen, rel, l, spec.gap, u)

    fcache = {}

    def fpiece(rel1, l1, rel2, l2):
        key = (rel1, l1, rel2, l2)
        if key not in fcache:
            v1 = rel_vec(rel1, l1, u1)
            v2 = rel_vec(rel2, l2, u2)
            fcache[key] = ifield(F * v1[:, None] * v2[None, :])
        return fcache[key]

    acc = {}
    for pat1, l1 in regs1:
        wg1, wh1 = pattern_vecs(pat1, l1, u1)
        for pat2, l2 in regs2:
            wg2, wh2 = pattern_vecs(pat2, l2, u2)
            gp = ifield(G * wg1[:, None] * wg2[None, :])
            hp = ifield(H * wh1[:, None] * wh2[None, :])
            dbeta = np.fft.ifft2(np.fft.fft2(gp * hp) * mb)
            for rel1 in rels_for(pat1):
                for rel2 in rels_for(pat2):
                    key = (f"{pat1}.{rel1}", f"{pat2}.{rel2}")
                    piece = fpiece(rel1, l1, rel2, l2) * dbeta
                    if key in acc:
                        acc[key] += piece
                    else:
                        acc[key] = piece

    terms = {}
    recon = np.zeros(grid.shape, dtype=complex)
    for key, vals in sorted(acc.items()):
        out = np.fft.ifft2(np.fft.fft2(vals) * ma)
        terms["|".join(key)] = SampledFunction(grid, out)
        recon += out

    gh = g.values * h.values
    dbeta_gh = np.fft.ifft2(np.fft.fft2(gh) * mb)
    lhs_vals = np.fft.ifft2(np.fft.fft2(f.values * dbeta_gh) * ma)
    lhs = SampledFunction(grid, lhs_vals)
    denom = float(np.sqrt(np.sum(np.abs(lhs_vals) ** 2)))
    diff = float(np.sqrt(np.sum(np.abs(recon - lhs_vals) ** 2)))
    residual = diff / denom if denom > 0 else diff

    exponents = exponents or ExponentTuple(4.0, 4.0, 4.0, 4.0 / 3.0)
    choices = {
        "fg": lambda al, be: ((al, 0.0), (be, 0.0), (0.0, 0.0)),
        "fh": lambda al, be: ((al, 0.0), (0.0, 0.0), (be, 0.0)),
        "g": lambda al, be: ((0.0, 0.0), (al + be, 0.0), (0.0, 0.0)),
        "h": lambda al, be: ((0.0, 0.0), (0.0, 0.0), (al + be, 0.0)),
    }
    norm_products = {}
    for c1, fn1 in choices.items():
        of1, og1, oh1 = fn1(spec.alpha1, spec.beta1)
        for c2, fn2 in choices.items():
            of2, og2, oh2 = fn2(spec.alpha2, spec.beta2)
            df = fractional_derivative(f, of1[0], of2[0])
            dg = fractional_derivative(g, og1[0], og2[0])
            dh = fractional_derivative(h, oh1[0], oh2[0])
            prod = (lp_norm(df, exponents.p1) * lp_norm(dg, exponents.p2)
                    * lp_norm(dh, exponents.p3))
            norm_products[f"{c1}|{c2}"] = prod

    return LeibnizResult(terms=terms, reconstruction=SampledFunction(grid, recon),
                         lhs=lhs, residual=residual,
                         norm_products=norm_products, spec=spec)


# ---------------------------------------------------------------------------
# Test families and the bound scanner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFamilySpec:
    """Seeded, reproducible input family for the boundedness scanner."""

    name: str
    members: int = 5
    seed: int = 0
    octave_lo: int = 1

    def __post_init__(self):
        if self.name not in ("dilated", "modulated", "tensor", "random_trig"):
            raise InvalidInput(f"unknown family {self.name!r}")
        if self.members < 1:
            raise InvalidInput("family needs at least one member")


def _spectrum_function(grid, coeffs):
    from .grid import Spectrum
    return idft(Spectrum(grid, coeffs.astype(complex)))


def make_family(spec: TestFamilySpec, grid: GridSpec, gen: GeneratorSet):
    """List of (label, f, g, h) input triples for the scanner.

    The dilated / modulated / tensor families are frequency-separated: the
    first slot is annular at the member octave, the second two octaves down,
    and the third low-pass five octaves down.  Members are then (up to grid
    sampling) exact dyadic dilates of each other, so a dyadically covariant
    operator produces near-constant norm ratios across the family.
    """
    rng = np.random.default_rng(spec.seed)
    k1, k2 = grid.freq_grids()
    u1 = k1 / grid.L1
    u2 = k2 / grid.L2
    nyq_ok = (k1 != -grid.N1 // 2) & (k2 != -grid.N2 // 2)
    members = []
    stride = 1  # dilation = spectral octave shift: member m lives on 2^m Z^2

    def realize(prof, x0):
        keep = (k1 % stride == 0) & (k2 % stride == 0)
        phase = np.exp(-2j * np.pi * (u1 * x0[0] + u2 * x0[1]))
        return _spectrum_function(grid, prof * phase * nyq_ok * keep)

    def annulus(octave):
        return gen.psi_hat(u1 / 2.0 ** octave) * gen.psi_hat(u2 / 2.0 ** octave)

    def lowpass(octave):
        return gen.phi_hat(u1 / 2.0 ** octave) * gen.phi_hat(u2 / 2.0 ** octave)

    def shift():
        return rng.uniform(0, 1, 2) * (grid.L1, grid.L2)

    jmax = int(math.floor(math.log2(min(grid.N1, grid.N2) / 4.0)))
    for idx in range(spec.members):
        octave = spec.octave_lo + idx
        stride = 2 ** idx
        if octave > jmax:
            raise ScaleError(f"family octave {octave} exceeds the grid band")
        if spec.name in ("dilated", "modulated", "tensor"):
            if spec.name == "tensor":
                # rank-one with distinct per-axis profile shapes (the second
                # factor is a one-sided bump, so members are not real-valued)
                f = realize(gen.psi_hat(u1 / 2.0 ** octave)
                            * gen.bump_hat(u2 / 2.0 ** octave, 1.0, 2.0), shift())
                g = realize(gen.bump_hat(u1 / 2.0 ** (octave - 2), 1.0, 2.0)
                            * gen.psi_hat(u2 / 2.0 ** (octave - 2)), shift())
                h = realize(lowpass(octave - 5), shift())
            else:
                f = realize(annulus(octave), shift())
                g = realize(annulus(octave - 2), shift())
                h = realize(lowpass(octave - 5), shift())
            if spec.name == "modulated":
                # gentle modulation within the member's own frequency block
                x1, x2 = grid.sample_points()
                m = max(1, 2 ** max(octave - 4, 0))
                m1 = int(rng.integers(-m, m + 1))
                m2 = int(rng.integers(-m, m + 1))
                mod = np.exp(2j * np.pi * (m1 * x1 / grid.L1 + m2 * x2 / grid.L2))
                f = SampledFunction(grid, f.values * mod)
            members.append((f"{spec.name}_o{octave}", f, g, h))
        else:  # random_trig
            trip = []
            kmax = min(8, grid.N1 // 4, grid.N2 // 4)
            for _ in range(3):
                modes = []
                for q1 in range(-kmax, kmax + 1):
                    for q2 in range(-kmax, kmax + 1):
                        c = rng.standard_normal() + 1j * rng.standard_normal()
                        modes.append((q1, q2, c))
                trip.append(from_modes(grid, modes))
            members.append((f"random_trig_{idx}",) + tuple(trip))
    return members


@dataclass
class ScanReport:
    family: str
    mode: str
    quasi: bool
    ratios: list
    records: list
    max_ratio: float
    min_ratio: float
    flatness: float


def bound_scan(operator, exponents: ExponentTuple, family: TestFamilySpec,
               grid: GridSpec, gen: GeneratorSet = None,
               weight: Weight = None, mixed: bool = False) -> ScanReport:
    """Empirical operator-norm probe over a seeded input family.

    ``operator`` is any callable (f, g, h) -> SampledFunction.  For each
    member the ratio target-norm(T) / product of input norms is recorded;
    the flatness statistic is max/min over the family.
    """
    gen = gen or make_generators()
    if mixed and exponents.q2 is None:
        raise InvalidExponent("mixed scan needs q2, q3 in the exponent tuple")
    members = make_family(family, grid, gen)
    ratios = []
    records = []
    for label, f, g, h in members:
        out = operator(f, g, h)
        if weight is not None:
            nf = weighted_norm(f, exponents.p1, weight)
            ng = weighted_norm(g, exponents.p2, weight)
            nh = weighted_norm(h, exponents.p3, weight)
            nt = weighted_norm(out, exponents.r, weight)
        elif mixed:
            nf = lp_norm(f, exponents.p1)
            ng = mixed_norm(g, exponents.p2, exponents.q2)
            nh = mixed_norm(h, exponents.p3, exponents.q3)
            nt = lp_norm(out, exponents.r)
        else:
            nf = lp_norm(f, exponents.p1)
            ng = lp_norm(g, exponents.p2)
            nh = lp_norm(h, exponents.p3)
            nt = lp_norm(out, exponents.r)
        den = nf * ng * nh
        if den == 0:
            raise DegenerateInput(f"zero input norm in member {label}")
        ratio = nt / den
        ratios.append(ratio)
        records.append({"member": label, "ratio": ratio, "output_norm": nt,
                        "input_norms": [nf, ng, nh]})
    mode = "weighted" if weight is not None else ("mixed" if mixed else "plain")
    mx, mn = max(ratios), min(ratios)
    pos = [r for r in ratios if r > 0]
    flat = mx / min(pos) if pos else math.inf
    return ScanReport(family=family.name, mode=mode, quasi=exponents.quasi,
                      ratios=ratios, records=records, max_ratio=mx,
                      min_ratio=mn, flatness=flat)


# ---------------------------------------------------------------------------
# False-endpoint probe
# ---------------------------------------------------------------------------

@dataclass
class GrowthReport:
    resolutions: list
    ratios: list
    strictly_increasing: bool
    control_ratios: list
    control_flatness: float


def _square_wave(grid: GridSpec, kmax: int) -> SampledFunction:
    """Band-limited square-wave profile in x1 (odd harmonics, 1/k decay)."""
    modes = []
    for k in range(1, kmax + 1, 2):
        modes.append((k, 0, 1.0 / (1j * math.pi * k)))
        modes.append((-k, 0, -1.0 / (1j * math.pi * k)))
    return from_modes(grid, modes)


def endpoint_probe(resolutions, gen: GeneratorSet = None,
                   control_exponents: ExponentTuple = None) -> GrowthReport:
    """Sup-norm growth of the conjugate-function probe across resolutions.

    The operator has first factor identically 1 and second factor sign(eta1)
    (a frequency half-space cut); applied to (1, square wave, 1) its output
    is the conjugate partial sum, whose sup norm grows like log N while all
    inputs stay uniformly bounded.  The control run measures the same
    operator in Hoelder-consistent norms, where the ratio stays flat.
    """
    gen = gen or make_generators()
    control_exponents = control_exponents or ExponentTuple(4.0, 4.0, 4.0, 4.0 / 3.0)
    ratios = []
    control = []
    for N in resolutions:
        grid = GridSpec(N, N)
        kmax = N // 8 - 1
        f = from_modes(grid, [(0, 0, 1.0)])
        h = from_modes(grid, [(0, 0, 1.0)])
        g = _square_wave(grid, kmax)
        sgn = np.sign(grid.phys_freqs(1))
        Tg = idft(type(dft(g))(grid, dft(g).coeffs * sgn[:, None]))
        out = SampledFunction(grid, f.values * Tg.values * h.values)
        num = lp_norm(out, math.inf)
        den = (lp_norm(f, math.inf) * lp_norm(g, math.inf)
               * lp_norm(h, math.inf))
        ratios.append(num / den)
        cnum = lp_norm(out, control_exponents.r)
        cden = (lp_norm(f, control_exponents.p1)
                * lp_norm(g, control_exponents.p2)
                * lp_norm(h, control_exponents.p3))
        control.append(cnum / cden)
    inc = all(b > a for a, b in zip(ratios, ratios[1:]))
    cpos = [c for c in control if c > 0]
    cflat = (max(control) / min(cpos)) if cpos else math.inf
    return GrowthReport(resolutions=list(resolutions), ratios=ratios,
                        strictly_increasing=inc, control_ratios=control,
                        control_flatness=cflat)
