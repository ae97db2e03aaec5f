"""Bi-parameter dyadic multiplier toolkit on the discrete 2-torus."""

from .errors import FlagmultError
from .grid import GridSpec, SampledFunction, Spectrum, dft, from_modes, idft
from .symbols import GeneratorSet, FlagSymbol, SymbolND, build_symbol, make_generators

__version__ = "0.1.0"

__all__ = [
    "FlagmultError",
    "GridSpec",
    "SampledFunction",
    "Spectrum",
    "dft",
    "idft",
    "from_modes",
    "GeneratorSet",
    "FlagSymbol",
    "SymbolND",
    "build_symbol",
    "make_generators",
    "__version__",
]
