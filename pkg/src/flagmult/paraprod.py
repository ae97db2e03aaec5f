"""Dyadic intervals, adapted bump families, and discrete model operators.

Bumps are realized spectrally from the generator profiles so that their
Fourier supports are exactly compact on the grid: the lacunary profile is a
one-sided smooth bump supported in physical frequency [1.2, 2.4] * 2^i (so
the spectrum stays a factor 5 away from 0), the non-lacunary profile is the
low-pass generator window.  All inner products against the translates of a
bump at one scale are computed with a single spectral correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInput,
    FamilyError,
    InvalidInput,
    ScaleError,
)
from .grid import GridSpec, SampledFunction
from .symbols import GeneratorSet

__all__ = [
    "DyadicInterval",
    "BumpFamily",
    "CutoffProfile",
    "approximate_cutoff",
    "rectangle_cutoff",
    "model_T1",
    "model_T1_k0",
    "localized_estimate_check",
]


@dataclass(frozen=True)
class DyadicInterval:
    """[n 2^{-i}, (n+1) 2^{-i}) on a torus coordinate; lengths at most 1."""

    scale: int
    position: int

    def __post_init__(self):
        if self.scale < 0:
            raise InvalidInput("dyadic interval scale must be >= 0 (length <= 1)")
        if self.position < 0:
            raise InvalidInput("dyadic interval position must be >= 0")

    @property
    def length(self) -> float:
        return 2.0 ** (-self.scale)

    @property
    def left(self) -> float:
        return self.position * self.length

    @property
    def center(self) -> float:
        return (self.position + 0.5) * self.length

    def validate_on(self, L: float):
        count = 2 ** self.scale * L
        if not (self.position < count):
            raise InvalidInput(
                f"position {self.position} outside torus of period {L} "
                f"at scale {self.scale}")


def _axis_params(grid: GridSpec, axis: int):
    if axis == 1:
        return grid.N1, grid.L1
    if axis == 2:
        return grid.N2, grid.L2
    raise InvalidInput("axis must be 1 or 2")


class BumpFamily:
    """L2-normalized translates/dilates of one spectral profile.

    kind = "lacunary": spectrum of the scale-i bump lies in physical
    frequency [1.2 * 2^i, 2.4 * 2^i] (one-sided, so 0 is not in 5 omega_I);
    kind = "nonlacunary": symmetric low-pass spectrum of width ~ 2^i.
    """

    def __init__(self, gen: GeneratorSet, kind: str):
        if kind not in ("lacunary", "nonlacunary"):
            raise FamilyError(f"unknown bump family kind {kind!r}")
        self.gen = gen
        self.kind = kind

    def profile(self, u):
        if self.kind == "lacunary":
            # wide enough that every dyadic scale captures a grid frequency
            return self.gen.bump_hat(np.asarray(u, dtype=float), 1.2, 2.4)
        return self.gen.phi_hat(u)

    def realize(self, interval: DyadicInterval, grid: GridSpec, axis: int):
        """1-D sample array of the bump adapted to the interval on one axis."""
        N, L = _axis_params(grid, axis)
        interval.validate_on(L)
        i = interval.scale
        if 2.0 * 2.0 ** i > N / (2.0 * L):
            raise ScaleError(f"bump scale {i} exceeds the axis Nyquist band")
        k = np.fft.fftfreq(N, d=1.0 / N).astype(int)
        u = k / L
        c = self.profile(u / 2.0 ** i).astype(complex)
        c = c * np.exp(-2j * np.pi * u * interval.center)
        c[N // 2] = 0.0
        vals = np.fft.ifft(c) * N
        nrm = math.sqrt(float(np.sum(np.abs(vals) ** 2)) * L / N)
        if nrm == 0:
            raise ScaleError(f"bump profile vanishes on the grid at scale {i}")
        vals = vals / nrm
        if self.kind == "lacunary":
            spec = np.fft.fft(vals)
            active = np.abs(spec) > 1e-12 * np.max(np.abs(spec))
            if np.any(active & (np.abs(u) < 2.0 ** i / 5.0)):
                raise FamilyError(
                    "lacunary bump spectrum reaches the excluded origin zone")
        return vals


@dataclass(frozen=True)
class CutoffProfile:
    """chi_I(x) = (1 + dist(x, I)/|I|)^{-exponent}, torus distance."""

    interval: DyadicInterval
    exponent: float = 100.0

    def sample_axis(self, grid: GridSpec, axis: int) -> np.ndarray:
        N, L = _axis_params(grid, axis)
        self.interval.validate_on(L)
        x = np.arange(N) * L / N
        a = self.interval.left
        b = a + self.interval.length
        # torus distance to [a, b)
        d = np.zeros(N)
        for wrap in (-L, 0.0, L):
            xx = x + wrap
            dw = np.where(xx < a, a - xx, np.where(xx > b, xx - b, 0.0))
            d = dw if wrap == -L else np.minimum(d, dw)
        return (1.0 + d / self.interval.length) ** (-self.exponent)


def approximate_cutoff(interval: DyadicInterval, grid: GridSpec,
                       axis: int = 1) -> SampledFunction:
    """chi_I sampled on the grid, constant along the other axis."""
    prof = CutoffProfile(interval).sample_axis(grid, axis)
    if axis == 1:
        vals = np.broadcast_to(prof[:, None], grid.shape)
    else:
        vals = np.broadcast_to(prof[None, :], grid.shape)
    return SampledFunction(grid, vals.astype(complex))


def rectangle_cutoff(i1: DyadicInterval, i2: DyadicInterval,
                     grid: GridSpec) -> SampledFunction:
    """chi_{I x J} = chi_I(x1) chi_J(x2)."""
    p1 = CutoffProfile(i1).sample_axis(grid, 1)
    p2 = CutoffProfile(i2).sample_axis(grid, 2)
    return SampledFunction(grid, (p1[:, None] * p2[None, :]).astype(complex))


# ---------------------------------------------------------------------------
# Model operators
# ---------------------------------------------------------------------------

_SLOTS = ("I1", "I2", "I3", "J1", "J2", "J3")


def _validate_families(families):
    missing = [s for s in _SLOTS if s not in families]
    if missing:
        raise FamilyError(f"missing bump family slots: {missing}")
    if families["I2"].kind != "nonlacunary":
        raise FamilyError("slot I2 must be non-lacunary")
    for s in ("I1", "I3"):
        if families[s].kind != "lacunary":
            raise FamilyError(f"slot {s} must be lacunary")
    lac = sum(1 for s in ("J1", "J2", "J3") if families[s].kind == "lacunary")
    if lac < 2:
        raise FamilyError("at least two of the three J-slot families must be lacunary")


def _lattice(grid: GridSpec, scale: int, axis: int):
    """Number of interval positions and the grid stride between them."""
    N, L = _axis_params(grid, axis)
    count = 2 ** scale * L
    if abs(count - round(count)) > 1e-9:
        raise ScaleError(f"scale {scale} does not tile the period {L}")
    count = int(round(count))
    if N % count:
        raise ScaleError(f"{count} intervals do not align with {N} samples")
    return count, N // count


def _base_bump2(families, slot, i1, i2, grid):
    b1 = families[slot].realize(DyadicInterval(i1, 0), grid, 1)
    b2 = families[slot].realize(DyadicInterval(i2, 0), grid, 2)
    return b1[:, None] * b2[None, :]


def _correlate(values, base, grid, stride1, stride2):
    """<values, base translated to every lattice cell> via one correlation."""
    C = np.fft.ifft2(np.fft.fft2(values) * np.conj(np.fft.fft2(base)))
    C = C * grid.cell_area
    return C[::stride1, ::stride2]


def _synthesize(coeffs, base, grid, stride1, stride2):
    """sum over lattice cells of coeffs[n,m] * base shifted to cell (n,m)."""
    E = np.zeros(grid.shape, dtype=complex)
    E[::stride1, ::stride2] = coeffs
    return np.fft.ifft2(np.fft.fft2(E) * np.fft.fft2(base))


def _model_core(f, g, h, families, scale_range, allowed_fn, report=None):
    _validate_families(families)
    grid = f.grid
    if g.grid != grid or h.grid != grid:
        raise InvalidInput("inputs must share one grid")
    scales = sorted(set(int(s) for s in scale_range))
    out = np.zeros(grid.shape, dtype=complex)
    if not scales:
        return SampledFunction(grid, out)

    lat = {(s, axis): _lattice(grid, s, axis) for s in scales for axis in (1, 2)}

    # inner sums B_{j1,j2}(g, h), one synthesized field per scale pair
    bpieces = {}
    for j1 in scales:
        c1, s1 = lat[(j1, 1)]
        for j2 in scales:
            c2, s2 = lat[(j2, 2)]
            bg = _base_bump2(families, "J1", j1, j2, grid)
            bh = _base_bump2(families, "J2", j1, j2, grid)
            bs = _base_bump2(families, "J3", j1, j2, grid)
            ag = _correlate(g.values, bg, grid, s1, s2)
            ah = _correlate(h.values, bh, grid, s1, s2)
            coeff = 2.0 ** ((j1 + j2) / 2.0) * ag * ah
            bpieces[(j1, j2)] = _synthesize(coeff, bs, grid, s1, s2)

    nterms = 0
    for i1 in scales:
        c1, s1 = lat[(i1, 1)]
        al1 = [j for j in scales if allowed_fn(i1, j)]
        for i2 in scales:
            c2, s2 = lat[(i2, 2)]
            al2 = [j for j in scales if allowed_fn(i2, j)]
            if not al1 or not al2:
                continue
            bsum = np.zeros(grid.shape, dtype=complex)
            for j1 in al1:
                for j2 in al2:
                    bsum += bpieces[(j1, j2)]
            bf = _base_bump2(families, "I1", i1, i2, grid)
            bb = _base_bump2(families, "I2", i1, i2, grid)
            bo = _base_bump2(families, "I3", i1, i2, grid)
            af = _correlate(f.values, bf, grid, s1, s2)
            ab = _correlate(bsum, bb, grid, s1, s2)
            coeff = 2.0 ** ((i1 + i2) / 2.0) * af * ab
            out += _synthesize(coeff, bo, grid, s1, s2)
            nterms += len(al1) * len(al2)
    if report is not None:
        report["outer_scale_pairs"] = len(scales) ** 2
        report["terms"] = nterms
    return SampledFunction(grid, out)


def model_T1(f, g, h, families, scale_range, report=None) -> SampledFunction:
    """Bi-parameter discrete model paraproduct.

    Outer sum over interval pairs (I, I') with coefficients
    |I|^{-1/2} |I'|^{-1/2} <f, phi1> <B(g,h), phi2> phi3, where the inner
    sum B runs over (J, J') subject to |omega_{J3}| <= |omega_{I2}|
    (dyadic scale of J at most that of I, per axis).
    """
    return _model_core(f, g, h, families, scale_range,
                       lambda i, j: j <= i, report=report)


def model_T1_k0(f, g, h, families, scale_range, k0: int, slack: int = 1,
                report=None) -> SampledFunction:
    """Scale-coupled variant: 2^{k0} |omega_{J3}| ~ |omega_{I2}| per axis,
    realized as |(i - k0) - j| <= slack on dyadic scales."""
    if k0 < 0:
        raise InvalidInput("k0 must be >= 0")
    return _model_core(f, g, h, families, scale_range,
                       lambda i, j: abs((i - k0) - j) <= slack, report=report)


def localized_estimate_check(op_output: SampledFunction, window_pair,
                             f, g, h, exponents, window_count: int) -> float:
    """||T^{n,m}||_r over the product of cutoff-localized input norms.

    window_pair = (n, m) indexes the rectangle R_{nm} of the window_count x
    window_count partition of the torus; inputs are weighted by the rapidly
    decaying rectangle cutoff before taking their norms.
    """
    from .analysis import lp_norm

    grid = op_output.grid
    n, m = window_pair
    s = int(round(math.log2(window_count)))
    if 2 ** s != window_count:
        raise InvalidInput("window_count must be a power of two")
    cut = rectangle_cutoff(DyadicInterval(s, n), DyadicInterval(s, m), grid)
    num = lp_norm(op_output, exponents.r)
    den = 1.0
    for fn, p in ((f, exponents.p1), (g, exponents.p2), (h, exponents.p3)):
        d = lp_norm(fn * cut, p)
        if d == 0:
            raise DegenerateInput("zero localized input norm")
        den *= d
    return num / den
