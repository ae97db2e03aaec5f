"""Periodic sampling grid, spectra, and the discrete Fourier transform contract.

Everything in the package lives on the 2-torus ``[0, L1) x [0, L2)`` sampled on
an ``N1 x N2`` lattice with power-of-two sample counts.  The forward transform
uses the convention

    fhat(k) = (L1*L2 / (N1*N2)) * sum_x f(x) * exp(-2*pi*i*k.x/L)

so that discrete coefficients approximate continuum Fourier integrals as the
resolution grows at fixed period.  Integer frequencies on axis ``i`` live in
``[-N_i/2, N_i/2)``; the physical frequency is ``k / L_i``.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput

__all__ = [
    "GridSpec",
    "SampledFunction",
    "Spectrum",
    "ModeList",
    "dft",
    "idft",
    "from_modes",
    "save_container",
    "load_function",
    "load_spectrum",
    "to_csv",
]

_MAGIC = b"FLAG"
_CONTAINER_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on the torus [0,L1) x [0,L2)."""

    N1: int
    N2: int
    L1: float = 1.0
    L2: float = 1.0

    def __post_init__(self):
        for n in (self.N1, self.N2):
            if not (_is_pow2(n) and n >= 8):
                raise InvalidInput(f"sample counts must be powers of two >= 8, got {n}")
        if not (self.L1 > 0 and self.L2 > 0):
            raise InvalidInput("period lengths must be positive")

    @property
    def shape(self):
        return (self.N1, self.N2)

    @property
    def cell_area(self) -> float:
        return (self.L1 * self.L2) / (self.N1 * self.N2)

    def freqs(self, axis: int) -> np.ndarray:
        """Integer frequencies in FFT layout on the given axis (1 or 2)."""
        n = self.N1 if axis == 1 else self.N2
        return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)

    def phys_freqs(self, axis: int) -> np.ndarray:
        """Physical frequencies k/L in FFT layout on the given axis."""
        L = self.L1 if axis == 1 else self.L2
        return self.freqs(axis) / L

    def freq_grids(self):
        """Pair of broadcastable 2-D integer frequency arrays (k1, k2)."""
        return np.meshgrid(self.freqs(1), self.freqs(2), indexing="ij")

    def phys_freq_grids(self):
        return np.meshgrid(self.phys_freqs(1), self.phys_freqs(2), indexing="ij")

    def sample_points(self):
        """Pair of broadcastable 2-D sample coordinate arrays (x1, x2)."""
        x1 = np.arange(self.N1) * (self.L1 / self.N1)
        x2 = np.arange(self.N2) * (self.L2 / self.N2)
        return np.meshgrid(x1, x2, indexing="ij")

    def in_band(self, k1: int, k2: int) -> bool:
        return (-self.N1 // 2 <= k1 < self.N1 // 2) and (
            -self.N2 // 2 <= k2 < self.N2 // 2
        )


def _check_values(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.complex128)
    if values.shape != grid.shape:
        raise InvalidInput(f"value array shape {values.shape} != grid {grid.shape}")
    if not np.all(np.isfinite(values.real)) or not np.all(np.isfinite(values.imag)):
        raise InvalidInput("non-finite values")
    return values


@dataclass(frozen=True)
class SampledFunction:
    """Complex-valued function sampled at (n1*L1/N1, n2*L2/N2)."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))
        self.values.setflags(write=False)

    def __add__(self, other):
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, SampledFunction):
            return SampledFunction(self.grid, self.values * other.values)
        return SampledFunction(self.grid, self.values * other)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Spectrum:
    """DFT coefficients in FFT layout (index = integer frequency mod N)."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _check_values(self.grid, self.coeffs))
        self.coeffs.setflags(write=False)

    def at(self, k1: int, k2: int) -> complex:
        """Coefficient at integer frequency (k1, k2)."""
        if not self.grid.in_band(k1, k2):
            raise InvalidInput(f"frequency ({k1},{k2}) out of band")
        return complex(self.coeffs[k1 % self.grid.N1, k2 % self.grid.N2])


# A ModeList is a plain list of (k1, k2, coeff) triples; kept as an alias so
# signatures read like the public interface.
ModeList = list


def dft(f: SampledFunction) -> Spectrum:
    """Forward transform fhat(k) = (L1 L2/(N1 N2)) sum f(x) e^{-2 pi i k.x/L}."""
    g = f.grid
    scale = (g.L1 * g.L2) / (g.N1 * g.N2)
    return Spectrum(g, np.fft.fft2(f.values) * scale)


def idft(s: Spectrum) -> SampledFunction:
    """Exact inverse of :func:`dft`."""
    g = s.grid
    scale = (g.N1 * g.N2) / (g.L1 * g.L2)
    return SampledFunction(g, np.fft.ifft2(s.coeffs) * scale)


def from_modes(grid: GridSpec, modes: ModeList) -> SampledFunction:
    """Trigonometric polynomial whose spectrum equals exactly the given modes."""
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    seen = set()
    for k1, k2, c in modes:
        k1, k2 = int(k1), int(k2)
        if (k1, k2) in seen:
            raise InvalidInput(f"duplicate mode ({k1},{k2})")
        if not grid.in_band(k1, k2):
            raise InvalidInput(f"mode ({k1},{k2}) out of band")
        seen.add((k1, k2))
        coeffs[k1 % grid.N1, k2 % grid.N2] = c
    return idft(Spectrum(grid, coeffs))


# ---------------------------------------------------------------------------
# Serialization: flat binary container and CSV tables.
# ---------------------------------------------------------------------------

def save_container(path, obj) -> None:
    """Write a SampledFunction or Spectrum to the binary container.

    Header: magic "FLAG", version u32, N1 u32, N2 u32, L1 f64, L2 f64, all
    little-endian; payload: interleaved re/im float64, row-major.
    """
    data = obj.values if isinstance(obj, SampledFunction) else obj.coeffs
    g = obj.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _CONTAINER_VERSION, g.N1, g.N2, g.L1, g.L2))
        inter = np.empty((g.N1, g.N2, 2), dtype="<f8")
        inter[..., 0] = data.real
        inter[..., 1] = data.imag
        fh.write(inter.tobytes())


def _load_payload(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise InvalidInput("truncated container header")
        magic, version, n1, n2, l1, l2 = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise InvalidInput("bad container magic")
        if version != _CONTAINER_VERSION:
            raise InvalidInput(f"unsupported container version {version}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != 2 * n1 * n2:
        raise InvalidInput("container payload size mismatch")
    inter = raw.reshape(n1, n2, 2)
    return GridSpec(n1, n2, l1, l2), inter[..., 0] + 1j * inter[..., 1]


def load_function(path) -> SampledFunction:
    grid, data = _load_payload(path)
    return SampledFunction(grid, data)


def load_spectrum(path) -> Spectrum:
    grid, data = _load_payload(path)
    return Spectrum(grid, data)


def to_csv(path, obj) -> None:
    """Dump a function (columns x1,x2,re,im) or spectrum (k1,k2,re,im)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        g = obj.grid
        if isinstance(obj, SampledFunction):
            writer.writerow(["x1", "x2", "re", "im"])
            x1, x2 = g.sample_points()
            for i in range(g.N1):
                for j in range(g.N2):
                    v = obj.values[i, j]
                    writer.writerow([repr(x1[i, j]), repr(x2[i, j]), repr(v.real), repr(v.imag)])
        else:
            writer.writerow(["k1", "k2", "re", "im"])
            k1s, k2s = g.freqs(1), g.freqs(2)
            order1 = np.argsort(k1s)
            order2 = np.argsort(k2s)
            for i in order1:
                for j in order2:
                    v = obj.coeffs[i, j]
                    writer.writerow([int(k1s[i]), int(k2s[j]), repr(v.real), repr(v.imag)])
