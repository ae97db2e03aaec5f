"""Frequency symbols: generator family, registry, validators, decompositions.

The generator family is built from a single C-infinity smooth step ``s`` with
``s(t)=0`` for ``t<=0`` and ``s(t)=1`` for ``t>=1`` (the classical
``exp(-1/t)`` partition construction; note ``E(t)E(1-t) = exp(-p/(t(1-t)))``
is a power of the standard mollifier ``exp(-1/(1-tau^2))`` in ``tau = 2t-1``).
On the logarithmic frequency scale ``t = log2|u|`` this yields an *exactly*
telescoping dyadic partition of unity:

    psi_hat(u) = s(t+1) - s(t)          supp in {1/2 <= |u| <= 2}
    phi_hat(u) = 1 - s(t+3)             = 1 on {|u| <= 1/8}, supp {|u| <= 1/4}

All other cutoffs (wide annulus window, beta-power variants, cone cutoffs,
flag window chi) derive from the same step.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product as _iproduct

import numpy as np
import scipy.fft

from .configtext import format_value, parse_value
from .errors import (
    ConstructionFailure,
    DecompositionError,
    InvalidInput,
    NumericalWarning,
    SymbolError,
)

__all__ = [
    "GeneratorSet",
    "make_generators",
    "SymbolND",
    "DyadicSumSymbol",
    "FlagSymbol",
    "PDOSymbolPair",
    "build_symbol",
    "ValidationReport",
    "check_mm_hormander",
    "cone_split",
    "taylor_split",
    "SeparableExpansion",
    "fourier_tensorize",
    "localized_sobolev_norm",
    "symbol_to_config",
    "symbols_from_config",
]

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Generator family
# ---------------------------------------------------------------------------

def _smooth_step(t, sharpness=1.0):
    """C-infinity step: 0 for t<=0, 1 for t>=1, strictly increasing between."""
    t = np.asarray(t, dtype=float)
    lo = t <= 0.0
    hi = t >= 1.0
    mid = ~(lo | hi)
    out = np.where(hi, 1.0, 0.0)
    if np.any(mid):
        tm = np.clip(t, 1e-300, 1.0)  # placeholder values outside mid are unused
        tm = np.where(mid, t, 0.5)
        a = np.exp(-sharpness / tm)
        b = np.exp(-sharpness / (1.0 - tm))
        out = np.where(mid, a / (a + b), out)
    return out


def _log2_abs(u):
    u = np.asarray(u, dtype=float)
    au = np.abs(u)
    with np.errstate(divide="ignore"):
        return np.where(au > 0, np.log2(np.where(au > 0, au, 1.0)), -np.inf)


@dataclass(frozen=True)
class GeneratorSet:
    """The cutoff family psi, phi, widened psi, beta-power variants, cones.

    ``epsilon`` is the cone aperture; ``sharpness`` steers the transition
    width of the underlying smooth step.
    """

    epsilon: float = 0.125
    sharpness: float = 1.0
    partition_residual: float = field(default=0.0, compare=False)

    # -- 1-D dyadic windows -------------------------------------------------
    def step(self, t):
        return _smooth_step(t, self.sharpness)

    def psi_hat(self, u):
        t = _log2_abs(u)
        val = self.step(t + 1.0) - self.step(t)
        return np.where(np.isfinite(t), val, 0.0)

    def psi_hat_scaled(self, u, j):
        return self.psi_hat(np.asarray(u, dtype=float) * 2.0 ** (-j))

    def phi_hat(self, u):
        t = _log2_abs(u)
        return np.where(np.isfinite(t), 1.0 - self.step(t + 3.0), 1.0)

    def phi_hat_scaled(self, u, k):
        return self.phi_hat(np.asarray(u, dtype=float) * 2.0 ** (-k))

    def psi_wide_hat(self, u):
        """Widened annulus window sum_{k=-2..2} psi_hat(2^-k u).

        Supported in {2^-3 <= |u| <= 2^3} and equal to 1 on
        {2^-2 <= |u| <= 2^2}; this is the companion window paired with
        psi_hat in the annulus tensorization.
        """
        t = _log2_abs(u)
        val = self.step(t + 3.0) - self.step(t - 2.0)
        return np.where(np.isfinite(t), val, 0.0)

    def psi_prime_hat(self, u, beta, j=0):
        """psi_hat(u/2^j) * |u/2^j|^beta (the 2^{-j beta}-normalized power)."""
        x = np.asarray(u, dtype=float) * 2.0 ** (-j)
        w = self.psi_hat(x)
        ax = np.where(np.abs(x) > 0, np.abs(x), 1.0)
        return w * ax ** beta

    def psi_dprime_hat(self, u, beta, j=0):
        """psi_hat(u/2^j) * (2^j/|u|)^beta; smooth since supp psi avoids 0."""
        x = np.asarray(u, dtype=float) * 2.0 ** (-j)
        w = self.psi_hat(x)
        ax = np.where(np.abs(x) > 0, np.abs(x), 1.0)
        return w * ax ** (-beta)

    def bump_hat(self, u, lo, hi):
        """Smooth bump supported exactly in [lo, hi] (one-sided in u)."""
        u = np.asarray(u, dtype=float)
        w = 0.25 * (hi - lo)
        return self.step((u - lo) / w) * self.step((hi - u) / w)

    # -- cone cutoffs on R^3 -------------------------------------------------
    def cone0(self, u, v, w):
        """Degree-0 homogeneous cutoff supported in {|v|+|w| <= eps|u|}."""
        u = np.asarray(u, dtype=float)
        num = np.abs(np.asarray(v, dtype=float)) + np.abs(np.asarray(w, dtype=float))
        au = np.abs(u)
        half = self.epsilon / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(au > 0, num / np.where(au > 0, au, 1.0), np.inf)
        out = 1.0 - self.step((r - half) / half)
        origin = (au == 0) & (num == 0)
        return np.where(origin, 0.0, out)

    def cone1(self, u, v, w):
        """Complement cutoff: cone0 + cone1 = 1 away from the origin."""
        u = np.asarray(u, dtype=float)
        num = np.abs(np.asarray(v, dtype=float)) + np.abs(np.asarray(w, dtype=float))
        origin = (np.abs(u) == 0) & (num == 0)
        return np.where(origin, 0.0, 1.0 - self.cone0(u, v, w))

    def chi(self, u, v, w, inset=10):
        """Flag window sum_j psi_hat(u/2^j) phi_hat(v/2^{j-inset}) phi_hat(w/..)."""
        u = np.asarray(u, dtype=float)
        t = _log2_abs(u)
        finite = np.isfinite(t)
        if not np.any(finite):
            return np.zeros(np.broadcast(u, v, w).shape)
        jlo = int(math.floor(np.min(t[finite]))) - 2
        jhi = int(math.ceil(np.max(t[finite]))) + 2
        out = np.zeros(np.broadcast(np.asarray(u), np.asarray(v), np.asarray(w)).shape)
        for j in range(jlo, jhi + 1):
            out = out + (
                self.psi_hat_scaled(u, j)
                * self.phi_hat_scaled(v, j - inset)
                * self.phi_hat_scaled(w, j - inset)
            )
        return out


def make_generators(epsilon: float = 0.125, profile_sharpness: float = 1.0) -> GeneratorSet:
    """Construct the generator family and certify its partition of unity."""
    if not (0.0 < epsilon <= 0.25):
        raise InvalidInput("cone aperture must satisfy 0 < epsilon <= 1/4")
    if profile_sharpness <= 0:
        raise InvalidInput("profile sharpness must be positive")
    gen = GeneratorSet(epsilon=epsilon, sharpness=profile_sharpness)
    residual = partition_residual(gen)
    if residual > 1e-10:
        raise ConstructionFailure(
            f"dyadic partition residual {residual:.3e} exceeds 1e-10"
        )
    object.__setattr__(gen, "partition_residual", residual)
    return gen


def partition_residual(gen: GeneratorSet, n_sample: int = 4001) -> float:
    """max_u |sum_j psi_hat(u/2^j) - 1| over u in [2^-20, 2^20] (log-spaced)."""
    u = 2.0 ** np.linspace(-20.0, 20.0, n_sample)
    t = np.log2(u)
    base = np.floor(t).astype(int)
    total = np.zeros_like(u)
    for off in range(-3, 4):
        total += gen.psi_hat(u * 2.0 ** (-(base + off)))
    return float(np.max(np.abs(total - 1.0)))


# ---------------------------------------------------------------------------
# Symbols
# ---------------------------------------------------------------------------

class SymbolND:
    """Evaluable frequency symbol from a closed builder registry.

    Arguments are passed variable-major: an arity-3 bi-parameter symbol is
    evaluated as ``m(xi1, xi2, eta1, eta2, zeta1, zeta2)``; arity 2 drops the
    ``xi`` pair; one-parameter symbols take one argument per variable.
    ``param_support`` records which parameter group the symbol actually
    depends on ("1", "2", or "both") — the separable evaluation path keys
    off it.
    """

    def __init__(self, name, builder, arity, parameters, params, fn,
                 param_support="both", bound=None):
        self.name = name
        self.builder = builder
        self.arity = int(arity)
        self.parameters = int(parameters)
        self.params = dict(params)
        self.fn = fn
        self.param_support = param_support
        self.bound = bound
        if self.arity not in (2, 3) or self.parameters not in (1, 2):
            raise SymbolError(f"unsupported arity/parameters ({arity},{parameters})")

    @property
    def nargs(self):
        return self.arity * self.parameters

    def __call__(self, *args):
        if len(args) != self.nargs:
            raise SymbolError(
                f"symbol {self.name!r} expects {self.nargs} arguments, got {len(args)}"
            )
        try:
            out = self.fn(*[np.asarray(a, dtype=float) for a in args])
        except (FlagmultEvaluationGuard, FloatingPointError) as exc:  # pragma: no cover
            raise SymbolError(f"evaluation of {self.name!r} failed: {exc}") from exc
        return out

    def arg_parameter(self, index):
        """Parameter group (1 or 2) owning argument ``index``."""
        if self.parameters == 1:
            return 1
        return 1 + (index % 2)


class FlagmultEvaluationGuard(Exception):
    """Internal marker for evaluator failures (kept narrow on purpose)."""


class DyadicSumSymbol(SymbolND):
    """A symbol given structurally as sum_t coeff_t * prod_i w_{t,i}(arg_i).

    ``terms`` is a list of ``(coeff, factors)`` with one 1-D callable per
    argument.  The structure is what the low-rank evaluation path consumes;
    pointwise evaluation simply sums the products.
    """

    def __init__(self, name, builder, arity, parameters, params, terms,
                 param_support="both", bound=None):
        self.terms = list(terms)

        def fn(*args):
            out = None
            for coeff, factors in self.terms:
                piece = np.asarray(factors[0](args[0]), dtype=complex) * coeff
                for fct, arg in zip(factors[1:], args[1:]):
                    piece = piece * fct(arg)
                out = piece if out is None else out + piece
            if out is None:
                out = np.zeros(np.broadcast(*args).shape, dtype=complex)
            return out

        super().__init__(name, builder, arity, parameters, params, fn,
                         param_support=param_support, bound=bound)


@dataclass(frozen=True)
class FlagSymbol:
    """Flag multiplier m1(xi,eta,zeta) * m2(eta,zeta)."""

    m1: SymbolND
    m2: SymbolND

    def __post_init__(self):
        if self.m1.arity != 3 or self.m1.parameters != 2:
            raise SymbolError("m1 must be arity 3, bi-parameter")
        if self.m2.arity != 2 or self.m2.parameters != 2:
            raise SymbolError("m2 must be arity 2, bi-parameter")

    def __call__(self, xi1, xi2, eta1, eta2, zeta1, zeta2):
        return self.m1(xi1, xi2, eta1, eta2, zeta1, zeta2) * self.m2(
            eta1, eta2, zeta1, zeta2
        )


class PDOSymbolPair:
    """x-dependent symbol pair (a, b) with finite x-Fourier structure.

    ``a_modes`` maps x-modes ``(s1, s2)`` to arity-3 bi-parameter symbols and
    ``b_modes`` maps x-modes to arity-2 bi-parameter symbols, so that

        a(x, Xi) = sum_s a_modes[s](Xi) * exp(2 pi i s.x/L),

    which keeps the x-dependence L-periodic by construction.  ``order``
    records the declared smoothness order (0 for BS^0-type symbols).
    """

    def __init__(self, a_modes, b_modes, order=0):
        self.a_modes = dict(a_modes)
        self.b_modes = dict(b_modes)
        self.order = order
        for s, m in self.a_modes.items():
            if m.arity != 3 or m.parameters != 2:
                raise SymbolError(f"a-mode {s} must be arity 3, bi-parameter")
        for s, m in self.b_modes.items():
            if m.arity != 2 or m.parameters != 2:
                raise SymbolError(f"b-mode {s} must be arity 2, bi-parameter")

    def a_eval(self, x1, x2, L1, L2, xi1, xi2, eta1, eta2, zeta1, zeta2):
        out = 0.0 + 0.0j
        for (s1, s2), m in self.a_modes.items():
            phase = np.exp(2j * np.pi * (s1 * np.asarray(x1) / L1 + s2 * np.asarray(x2) / L2))
            out = out + phase * m(xi1, xi2, eta1, eta2, zeta1, zeta2)
        return out

    def b_eval(self, x1, x2, L1, L2, eta1, eta2, zeta1, zeta2):
        out = 0.0 + 0.0j
        for (s1, s2), m in self.b_modes.items():
            phase = np.exp(2j * np.pi * (s1 * np.asarray(x1) / L1 + s2 * np.asarray(x2) / L2))
            out = out + phase * m(eta1, eta2, zeta1, zeta2)
        return out


# ---------------------------------------------------------------------------
# Builder registry
# ---------------------------------------------------------------------------

def _group_args(args, parameters):
    """Split variable-major args into per-parameter tuples."""
    if parameters == 1:
        return (args,)
    return (args[0::2], args[1::2])


def _build_constant(params, gen):
    value = params.get("value", 1.0)
    arity = params.get("arity", 3)
    parameters = params.get("parameters", 2)

    def fn(*args):
        return np.full(np.broadcast(*args).shape, value, dtype=complex)

    return dict(arity=arity, parameters=parameters, fn=fn,
                param_support="both", bound=abs(value))


def _homog_factor(group, weights):
    """(sum w_i u_i^2) / (sum u_i^2), degree-0 homogeneous, 0 at the origin."""
    den = sum(np.asarray(u, dtype=float) ** 2 for u in group)
    num = sum(w * np.asarray(u, dtype=float) ** 2 for w, u in zip(weights, group))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return out


def _build_homog_ratio(params, gen):
    arity = params.get("arity", 3)
    parameters = params.get("parameters", 2)
    weights = params.get("weights", [1.0] + [0.5] * (arity - 1))
    if len(weights) != arity:
        raise SymbolError("homog_ratio needs one weight per frequency argument")
    which = params.get("parameter", 0)  # 0 = act on all parameter groups

    def fn(*args):
        groups = _group_args(args, parameters)
        out = 1.0
        for i, grp in enumerate(groups, start=1):
            if which in (0, i):
                out = out * _homog_factor(grp, weights)
        return out

    support = "both" if (which == 0 and parameters == 2) else str(max(which, 1))
    if parameters == 1:
        support = "1"
    return dict(arity=arity, parameters=parameters, fn=fn,
                param_support=support, bound=float(max(np.abs(weights))))


def _build_smooth_ratio(params, gen):
    """Everywhere-smooth bounded ratio (1 + sum w u^2)/(1 + sum u^2) per group."""
    arity = params.get("arity", 2)
    parameters = params.get("parameters", 2)
    weights = params.get("weights", [1.0] + [0.5] * (arity - 1))
    if len(weights) != arity:
        raise SymbolError("smooth_ratio needs one weight per frequency argument")
    which = params.get("parameter", 0)

    def fn(*args):
        groups = _group_args(args, parameters)
        out = 1.0
        for i, grp in enumerate(groups, start=1):
            if which in (0, i):
                den = 1.0 + sum(np.asarray(u, dtype=float) ** 2 for u in grp)
                num = 1.0 + sum(w * np.asarray(u, dtype=float) ** 2
                                for w, u in zip(weights, grp))
                out = out * (num / den)
        return out

    support = "both" if (which == 0 and parameters == 2) else str(max(which, 1))
    if parameters == 1:
        support = "1"
    return dict(arity=arity, parameters=parameters, fn=fn,
                param_support=support, bound=float(max(1.0, max(np.abs(weights)))))


def _build_abs_power(params, gen):
    exponents = params["exponents"]
    arity = params.get("arity", len(exponents))
    parameters = params.get("parameters", 1)

    def fn(*args):
        out = 1.0
        for e, u in zip(exponents, args):
            if e != 0:
                out = out * np.abs(np.asarray(u, dtype=float)) ** e
        return out * np.ones(np.broadcast(*args).shape)

    return dict(arity=arity, parameters=parameters, fn=fn, param_support="both",
                bound=None)


def _build_sign_axis(params, gen):
    arity = params.get("arity", 2)
    parameters = params.get("parameters", 2)
    index = params.get("index", 0)

    def fn(*args):
        return np.sign(np.asarray(args[index], dtype=float)) + 0.0j

    support = "1" if (parameters == 2 and index % 2 == 0) else (
        "2" if parameters == 2 else "1")
    return dict(arity=arity, parameters=parameters, fn=fn,
                param_support=support, bound=1.0)


def _build_cone_cutoff(params, gen):
    index = params.get("index", 0)
    parameters = params.get("parameters", 1)
    cone = gen.cone0 if index == 0 else gen.cone1

    def fn(*args):
        groups = _group_args(args, parameters)
        out = 1.0
        for grp in groups:
            out = out * cone(*grp)
        return out

    return dict(arity=3, parameters=parameters, fn=fn, param_support="both", bound=1.0)


def _window_factory(gen, kind, scale=0, beta=1.0):
    """1-D window callable by name; used by the dyadic structural builders."""
    if kind == "psi":
        return lambda u, j=scale: gen.psi_hat_scaled(u, j)
    if kind == "phi":
        return lambda u, k=scale: gen.phi_hat_scaled(u, k)
    if kind == "psi_wide":
        return lambda u, j=scale: gen.psi_wide_hat(np.asarray(u, dtype=float) * 2.0 ** (-j))
    if kind == "psi_prime":
        return lambda u, j=scale: gen.psi_prime_hat(u, beta, j)
    if kind == "psi_dprime":
        return lambda u, j=scale: gen.psi_dprime_hat(u, beta, j)
    if kind == "one":
        return lambda u: np.ones(np.shape(u) or (1,)) if np.ndim(u) else 1.0
    if kind == "sign":
        return lambda u: np.sign(np.asarray(u, dtype=float))
    raise SymbolError(f"unknown window kind {kind!r}")


def _one_window(u):
    return np.ones_like(np.asarray(u, dtype=float))


def _build_dyadic_chain(params, gen):
    """sum_j prod_i window_i(u_i / 2^j): single shared dyadic scale.

    ``windows`` is one window name per argument; ``jmin``/``jmax`` bound the
    scale sum.  One-parameter generator-product symbols (e.g. the paraproduct
    chain psi(xi) phi(eta) phi(zeta)) are instances.
    """
    windows = params["windows"]
    arity = params.get("arity", len(windows))
    parameters = params.get("parameters", 1)
    jmin = params.get("jmin", -20)
    jmax = params.get("jmax", 20)
    terms = []
    for j in range(jmin, jmax + 1):
        factors = tuple(
            _window_factory(gen, w, scale=j) if w != "one" else _one_window
            for w in windows
        )
        terms.append((1.0, factors))
    return dict(arity=arity, parameters=parameters, terms=terms,
                param_support="both", bound=None)


def _build_flag_m1_dyadic(params, gen):
    """m1 = sum_{j1,j2} a_{j1,j2} psi_{j1}(xi1) psi_{j2}(xi2)
    phi_{j1-g}(eta1) phi_{j2-g}(eta2) phi_{j1-g}(zeta1) phi_{j2-g}(zeta2)."""
    j1range = params["j1range"]
    j2range = params["j2range"]
    inset = params.get("inset", 3)
    coeff = params.get("coeffs")  # optional nested list over (j1, j2)
    terms = []
    for i1, j1 in enumerate(range(j1range[0], j1range[1] + 1)):
        for i2, j2 in enumerate(range(j2range[0], j2range[1] + 1)):
            a = 1.0 if coeff is None else coeff[i1][i2]
            if a == 0:
                continue
            factors = (
                _window_factory(gen, "psi", j1),
                _window_factory(gen, "psi", j2),
                _window_factory(gen, "phi", j1 - inset),
                _window_factory(gen, "phi", j2 - inset),
                _window_factory(gen, "phi", j1 - inset),
                _window_factory(gen, "phi", j2 - inset),
            )
            terms.append((complex(a), factors))
    return dict(arity=3, parameters=2, terms=terms, param_support="both", bound=1.0)


def _build_flag_m2_dyadic(params, gen):
    """m2 = sum_{k1,k2} b_{k1,k2} psi_{k1}(eta1) psi_{k2}(eta2)
    phi_{k1}(zeta1) phi_{k2}(zeta2) (per-parameter paraproduct windows)."""
    k1range = params["k1range"]
    k2range = params["k2range"]
    coeff = params.get("coeffs")
    zeta_kind = params.get("zeta_window", "phi")
    terms = []
    for i1, k1 in enumerate(range(k1range[0], k1range[1] + 1)):
        for i2, k2 in enumerate(range(k2range[0], k2range[1] + 1)):
            b = 1.0 if coeff is None else coeff[i1][i2]
            if b == 0:
                continue
            factors = (
                _window_factory(gen, "psi", k1),
                _window_factory(gen, "psi", k2),
                _window_factory(gen, zeta_kind, k1),
                _window_factory(gen, zeta_kind, k2),
            )
            terms.append((complex(b), factors))
    return dict(arity=2, parameters=2, terms=terms, param_support="both", bound=None)


def _build_rank_one(params, gen):
    """Product of named 1-D windows, one per argument (rank-one symbol)."""
    windows = params["windows"]
    scales = params.get("scales", [0] * len(windows))
    arity = params.get("arity", len(windows))
    parameters = params.get("parameters", 2 if len(windows) in (4, 6) else 1)
    factors = tuple(
        _window_factory(gen, w, scale=s) if w != "one" else _one_window
        for w, s in zip(windows, scales)
    )
    return dict(arity=arity, parameters=parameters, terms=[(1.0, factors)],
                param_support="both", bound=None)


def _build_table(params, gen):
    """Nearest-sample lookup on per-argument 1-D grids (user tables)."""
    axes = [np.asarray(a, dtype=float) for a in params["axes"]]
    values = np.asarray(params["values"], dtype=float)
    arity = params.get("arity", len(axes))
    parameters = params.get("parameters", 1)
    if values.shape != tuple(len(a) for a in axes):
        raise SymbolError("table values shape does not match axes")

    def fn(*args):
        idx = []
        for a, axis in zip(args, axes):
            pos = np.searchsorted(axis, np.asarray(a, dtype=float))
            pos = np.clip(pos, 0, len(axis) - 1)
            below = np.clip(pos - 1, 0, len(axis) - 1)
            use_below = np.abs(axis[below] - a) <= np.abs(axis[pos] - a)
            idx.append(np.where(use_below, below, pos))
        idx = np.broadcast_arrays(*idx)
        return values[tuple(idx)]

    return dict(arity=arity, parameters=parameters, fn=fn, param_support="both",
                bound=float(np.max(np.abs(values))))


_REGISTRY = {
    "constant": _build_constant,
    "homog_ratio": _build_homog_ratio,
    "smooth_ratio": _build_smooth_ratio,
    "abs_power": _build_abs_power,
    "sign_axis": _build_sign_axis,
    "cone_cutoff": _build_cone_cutoff,
    "dyadic_chain": _build_dyadic_chain,
    "flag_m1_dyadic": _build_flag_m1_dyadic,
    "flag_m2_dyadic": _build_flag_m2_dyadic,
    "rank_one": _build_rank_one,
    "table": _build_table,
}

_STRUCTURAL = {"dyadic_chain", "flag_m1_dyadic", "flag_m2_dyadic", "rank_one"}


def build_symbol(name, builder, params=None, gen=None) -> SymbolND:
    """Instantiate a named builder from the closed registry."""
    if builder not in _REGISTRY:
        raise SymbolError(f"unknown symbol builder {builder!r}")
    params = dict(params or {})
    if gen is None:
        gen = make_generators()
    spec = _REGISTRY[builder](params, gen)
    if builder in _STRUCTURAL:
        return DyadicSumSymbol(name, builder, spec["arity"], spec["parameters"],
                               params, spec["terms"],
                               param_support=spec["param_support"],
                               bound=spec["bound"])
    return SymbolND(name, builder, spec["arity"], spec["parameters"], params,
                    spec["fn"], param_support=spec["param_support"],
                    bound=spec["bound"])


def symbol_to_config(sym: SymbolND) -> str:
    body = {"builder": sym.builder, "params": sym.params}
    return f"symbol.{sym.name} = {format_value(body)}"


def symbols_from_config(entries, gen=None):
    """Build all ``symbol.<name>`` entries of a parsed config dict."""
    out = {}
    for key, value in entries.items():
        if not key.startswith("symbol."):
            continue
        name = key[len("symbol."):]
        if not isinstance(value, dict) or "builder" not in value:
            raise SymbolError(f"symbol block {key!r} needs a builder field")
        out[name] = build_symbol(name, value["builder"], value.get("params"), gen=gen)
    return out


def parse_symbol_block(text, gen=None):
    """Parse a single ``symbol.<name> = {...}`` line into a SymbolND."""
    key, _, rhs = text.partition("=")
    key = key.strip()
    if not key.startswith("symbol."):
        raise SymbolError("expected a 'symbol.<name> = {...}' block")
    value = parse_value(rhs.strip())
    return build_symbol(key[len("symbol."):], value["builder"], value.get("params"),
                        gen=gen)


# ---------------------------------------------------------------------------
# Finite differences (shared by the validator and the Taylor split)
# ---------------------------------------------------------------------------

def _central_diff(fn, args, orders, steps):
    """Mixed central difference of fn at args; orders/steps are per-argument.

    Uses the k-point binomial stencil on (half-)integer offsets per
    differentiated variable, second-order accurate in each step.
    """
    active = [i for i, d in enumerate(orders) if d > 0]
    if not active:
        return fn(*args)
    stencils = []
    for i in active:
        d = orders[i]
        offsets = [d / 2.0 - t for t in range(d + 1)]
        coeffs = [(-1.0) ** t * math.comb(d, t) for t in range(d + 1)]
        stencils.append((i, offsets, coeffs))
    total = None
    for combo in _iproduct(*[range(len(st[1])) for st in stencils]):
        shifted = list(args)
        c = 1.0
        for (i, offsets, coeffs), t in zip(stencils, combo):
            shifted[i] = args[i] + offsets[t] * steps[i]
            c *= coeffs[t]
        val = c * fn(*shifted)
        total = val if total is None else total + val
    denom = 1.0
    for i in active:
        denom = denom * steps[i] ** orders[i]
    return total / denom


def _fd_delta(total_order):
    """Relative step balancing truncation vs roundoff for the given order."""
    return max(2.0 ** -20, _EPS ** (1.0 / (total_order + 2)))


# ---------------------------------------------------------------------------
# Mikhlin-Hoermander validator
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    passed: bool
    tol: float
    max_order: int
    constants: dict
    sample_size: int

    def worst(self):
        return max(self.constants.values()) if self.constants else float("nan")


def _multi_indices(nvars, max_order):
    def rec(prefix, remaining, slots):
        if slots == 0:
            yield tuple(prefix)
            return
        for d in range(remaining + 1):
            yield from rec(prefix + [d], remaining - d, slots - 1)
    for total in range(max_order + 1):
        for idx in rec([], total, nvars):
            if sum(idx) == total:
                yield idx


def check_mm_hormander(m: SymbolND, max_order: int, tol: float,
                       n_sample: int = 60, seed: int = 7) -> ValidationReport:
    """Empirical Marcinkiewicz-Mikhlin-Hoermander constants by differencing.

    For each multi-index alpha with |alpha| <= max_order the report records

        sup_sample |d^alpha m| * prod_i (|xi_i|+|eta_i|+|zeta_i|)^{|alpha_i|}

    with the product running over parameter groups.  Finite differences use
    frequency-relative steps; the step shrinks with the differentiation
    order to keep the stencil meaningful (see module notes).
    """
    if max_order > 4:
        raise InvalidInput("max_order > 4: finite-difference stencils unreliable")
    rng = np.random.default_rng(seed)
    nv = m.nargs
    mags = 2.0 ** rng.uniform(-10, 10, size=(n_sample, nv))
    signs = rng.choice([-1.0, 1.0], size=(n_sample, nv))
    pts = [mags[:, i] * signs[:, i] for i in range(nv)]
    # parameter-group weights
    if m.parameters == 2:
        groups = [[i for i in range(nv) if i % 2 == 0], [i for i in range(nv) if i % 2 == 1]]
    else:
        groups = [list(range(nv))]
    weights = [sum(np.abs(pts[i]) for i in grp) for grp in groups]

    constants = {}
    for alpha in _multi_indices(nv, max_order):
        total = sum(alpha)
        delta = _fd_delta(total)
        steps = [delta * np.abs(pts[i]) for i in range(nv)]
        try:
            deriv = _central_diff(m, pts, alpha, steps)
        except SymbolError:
            raise
        except Exception as exc:
            raise SymbolError(f"derivative sampling failed at alpha={alpha}: {exc}")
        weight = np.ones(n_sample)
        for gi, grp in enumerate(groups):
            ga = sum(alpha[i] for i in grp)
            if ga:
                weight = weight * weights[gi] ** ga
        vals = np.abs(np.asarray(deriv)) * weight
        constants[alpha] = float(np.max(vals))
    passed = all(np.isfinite(v) and v <= tol for v in constants.values())
    return ValidationReport(passed=passed, tol=tol, max_order=max_order,
                            constants=constants, sample_size=n_sample)


# ---------------------------------------------------------------------------
# Cone split
# ---------------------------------------------------------------------------

def cone_split(m1: SymbolND, gen: GeneratorSet):
    """Split m1 into the four cone-localized products m_{i,i'}.

    m_{i,i'} = m1 * cone_i(xi1,eta1,zeta1) * cone_{i'}(xi2,eta2,zeta2); the
    four pieces sum back to m1 pointwise away from the parameter origins.
    """
    if m1.arity != 3 or m1.parameters != 2:
        raise SymbolError("cone_split expects an arity-3 bi-parameter symbol")
    cones = (gen.cone0, gen.cone1)
    out = {}
    for i in (0, 1):
        for ip in (0, 1):
            def fn(xi1, xi2, eta1, eta2, zeta1, zeta2, _i=i, _ip=ip):
                return (
                    m1(xi1, xi2, eta1, eta2, zeta1, zeta2)
                    * cones[_i](xi1, eta1, zeta1)
                    * cones[_ip](xi2, eta2, zeta2)
                )
            out[f"m{i}{ip}"] = SymbolND(
                f"{m1.name}_cone{i}{ip}", "cone_piece", 3, 2,
                {"of": m1.name, "i": i, "ip": ip}, fn,
                param_support=m1.param_support, bound=m1.bound,
            )
    return out


# ---------------------------------------------------------------------------
# Taylor split
# ---------------------------------------------------------------------------

def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _eta_zeta_partial(m1, xi1, xi2, eta1, eta2, zeta1, zeta2, orders):
    """Mixed partial of m1 in (eta1, eta2, zeta1, zeta2) with frequency-
    relative steps keyed to the parameter scales |xi_i|."""
    b1, b2, g1, g2 = orders
    total = b1 + b2 + g1 + g2
    delta = _fd_delta(total)
    s1 = delta * np.maximum(np.abs(xi1), 1e-8)
    s2 = delta * np.maximum(np.abs(xi2), 1e-8)
    args = [xi1, xi2, eta1, eta2, zeta1, zeta2]
    steps = [0.0, 0.0, s1, s2, s1, s2]
    return _central_diff(m1, args, (0, 0, b1, b2, g1, g2), steps)


def taylor_split(m1: SymbolND, N: int, quad_nodes: int, sample_tol=None,
                 gen: GeneratorSet = None, rng=None):
    """Iterated two-parameter Taylor split of m1 around (eta, zeta) = 0.

    Returns the four symbols named m11 (double Taylor polynomial with
    coefficients d^{beta,gamma} m1(xi, 0, 0) / beta! gamma!), m12 / m21 (one
    Gauss-Legendre-discretized remainder integral), and m22 (double
    remainder); the pieces sum to m1 up to finite-difference/quadrature
    error.  ``sample_tol``, if given, triggers a reconstruction spot-check
    on cone-localized samples and raises DecompositionError on failure.
    """
    if m1.arity != 3 or m1.parameters != 2:
        raise SymbolError("taylor_split expects an arity-3 bi-parameter symbol")
    if not (1 <= N <= 6):
        raise InvalidInput("Taylor order N must be in 1..6")
    nodes, wts = _gauss01(quad_nodes)

    poly_idx = [(b, g) for b in range(N) for g in range(N) if b + g < N]
    rem_idx = [(b, g) for b in range(N + 1) for g in range(N + 1) if b + g == N]

    def mono(eta, zeta, b, g):
        out = 1.0
        if b:
            out = out * np.asarray(eta, dtype=float) ** b
        if g:
            out = out * np.asarray(zeta, dtype=float) ** g
        return out

    def m11_fn(xi1, xi2, eta1, eta2, zeta1, zeta2):
        z = np.zeros(np.broadcast(xi1, xi2, eta1, eta2, zeta1, zeta2).shape)
        out = 0.0
        for b1, g1 in poly_idx:
            for b2, g2 in poly_idx:
                d = _eta_zeta_partial(m1, xi1, xi2, z, z, z, z, (b1, b2, g1, g2))
                coef = 1.0 / (
                    math.factorial(b1) * math.factorial(b2)
                    * math.factorial(g1) * math.factorial(g2)
                )
                out = out + coef * d * mono(eta1, zeta1, b1, g1) * mono(eta2, zeta2, b2, g2)
        return out

    def _one_remainder(xi1, xi2, eta1, eta2, zeta1, zeta2, remainder_param):
        """Taylor polynomial in one parameter, integral remainder in the other."""
        shape = np.broadcast(xi1, xi2, eta1, eta2, zeta1, zeta2).shape
        z = np.zeros(shape)
        t = nodes.reshape((-1,) + (1,) * len(shape))
        out = 0.0
        for bp, gp in poly_idx:           # polynomial indices (order < N)
            for br, gr in rem_idx:        # remainder indices (order = N)
                if remainder_param == 2:
                    orders = (bp, br, gp, gr)
                    e1p, z1p = z, z
                    e2p, z2p = t * eta2, t * zeta2
                    mono_val = (mono(eta1, zeta1, bp, gp)
                                * mono(eta2, zeta2, br, gr))
                else:
                    orders = (br, bp, gr, gp)
                    e1p, z1p = t * eta1, t * zeta1
                    e2p, z2p = z, z
                    mono_val = (mono(eta1, zeta1, br, gr)
                                * mono(eta2, zeta2, bp, gp))
                d = _eta_zeta_partial(
                    m1,
                    np.broadcast_to(xi1, shape), np.broadcast_to(xi2, shape),
                    e1p if remainder_param == 1 else np.broadcast_to(z, shape),
                    e2p if remainder_param == 2 else np.broadcast_to(z, shape),
                    z1p if remainder_param == 1 else np.broadcast_to(z, shape),
                    z2p if remainder_param == 2 else np.broadcast_to(z, shape),
                    orders,
                )
                integ = np.tensordot(wts * (1.0 - nodes) ** (N - 1), d, axes=(0, 0))
                coef = (N / (math.factorial(br) * math.factorial(gr))
                        / (math.factorial(bp) * math.factorial(gp)))
                out = out + coef * mono_val * integ
        return out

    def m12_fn(xi1, xi2, eta1, eta2, zeta1, zeta2):
        return _one_remainder(xi1, xi2, eta1, eta2, zeta1, zeta2, remainder_param=2)

    def m21_fn(xi1, xi2, eta1, eta2, zeta1, zeta2):
        return _one_remainder(xi1, xi2, eta1, eta2, zeta1, zeta2, remainder_param=1)

    def m22_fn(xi1, xi2, eta1, eta2, zeta1, zeta2):
        shape = np.broadcast(xi1, xi2, eta1, eta2, zeta1, zeta2).shape
        s = nodes.reshape((-1, 1) + (1,) * len(shape))
        t = nodes.reshape((1, -1) + (1,) * len(shape))
        out = 0.0
        wmat = np.outer(wts * (1.0 - nodes) ** (N - 1), wts * (1.0 - nodes) ** (N - 1))
        for b1, g1 in rem_idx:
            for b2, g2 in rem_idx:
                d = _eta_zeta_partial(
                    m1,
                    np.broadcast_to(xi1, shape), np.broadcast_to(xi2, shape),
                    s * eta1, t * eta2, s * zeta1, t * zeta2,
                    (b1, b2, g1, g2),
                )
                integ = np.tensordot(wmat, d, axes=([0, 1], [0, 1]))
                coef = (N / (math.factorial(b1) * math.factorial(g1))) * (
                    N / (math.factorial(b2) * math.factorial(g2)))
                out = out + coef * integ * mono(eta1, zeta1, b1, g1) * mono(
                    eta2, zeta2, b2, g2)
        return out

    parts = {}
    for key, fn in (("m11", m11_fn), ("m12", m12_fn), ("m21", m21_fn), ("m22", m22_fn)):
        parts[key] = SymbolND(f"{m1.name}_taylor_{key}", "taylor_piece", 3, 2,
                              {"of": m1.name, "N": N, "quad_nodes": quad_nodes},
                              fn, param_support=m1.param_support)

    if sample_tol is not None:
        rng = rng or np.random.default_rng(11)
        eps = (gen.epsilon if gen is not None else 0.125)
        npts = 40
        xi1 = 2.0 ** rng.uniform(-2, 2, npts) * rng.choice([-1, 1], npts)
        xi2 = 2.0 ** rng.uniform(-2, 2, npts) * rng.choice([-1, 1], npts)
        eta1 = xi1 * rng.uniform(-eps / 4, eps / 4, npts)
        zeta1 = xi1 * rng.uniform(-eps / 4, eps / 4, npts)
        eta2 = xi2 * rng.uniform(-eps / 4, eps / 4, npts)
        zeta2 = xi2 * rng.uniform(-eps / 4, eps / 4, npts)
        target = m1(xi1, xi2, eta1, eta2, zeta1, zeta2)
        recon = sum(parts[k](xi1, xi2, eta1, eta2, zeta1, zeta2)
                    for k in ("m11", "m12", "m21", "m22"))
        scale = max(float(np.max(np.abs(target))), 1e-300)
        residual = float(np.max(np.abs(recon - target))) / scale
        if residual > sample_tol:
            raise DecompositionError(
                f"Taylor reconstruction residual {residual:.3e} > {sample_tol:.3e}",
                residual=residual,
            )
    return parts


# ---------------------------------------------------------------------------
# Fourier tensorization on a dyadic annulus
# ---------------------------------------------------------------------------

_PATTERN_WINDOWS = {
    # (window on eta, window on zeta) per parameter, by pattern name
    "pp": ("psi", "psi_wide"),
    "pf": ("psi", "phi"),
    "fp": ("phi", "psi"),
}


class SeparableExpansion:
    """Rank-structured Fourier expansion of m2 on a dyadic annulus.

    The symbol rescaled to the annulus at scales (k1, k2) is expanded in a
    4-D Fourier series over the periodic box of side ``period``; each kept
    mode, multiplied by the annulus windows, is a rank-one (separable)
    factor in (eta1, zeta1) x (eta2, zeta2).  The reported truncation error
    is the Parseval-exact relative l2 tail of the coefficient array under
    the per-parameter l1 truncation |n_eta|+|n_zeta| <= M, which is
    non-increasing in M by construction.
    """

    def __init__(self, gen, scales, pattern, period, coeffs, M):
        self.gen = gen
        self.scales = tuple(scales)
        self.pattern = tuple(pattern)
        self.period = float(period)
        self.coeffs = coeffs  # 4-D complex, FFT layout, axes (eta1,eta2,zeta1,zeta2)
        self.M = int(M)
        n = coeffs.shape[0]
        f = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        self._freq = f
        g1 = np.abs(f)[:, None, None, None] + np.abs(f)[None, None, :, None]
        g2 = np.abs(f)[None, :, None, None] + np.abs(f)[None, None, None, :]
        self._group1 = g1
        self._group2 = g2

    # -- windows -------------------------------------------------------------
    def _window(self, which, u, scale):
        kind = _PATTERN_WINDOWS[self.pattern[0 if scale == self.scales[0] else 1]][which]
        return _window_factory(self.gen, kind, scale)(u)

    def window_values(self, eta1, eta2, zeta1, zeta2):
        k1, k2 = self.scales
        w_eta1 = _window_factory(self.gen, _PATTERN_WINDOWS[self.pattern[0]][0], k1)(eta1)
        w_eta2 = _window_factory(self.gen, _PATTERN_WINDOWS[self.pattern[1]][0], k2)(eta2)
        w_zeta1 = _window_factory(self.gen, _PATTERN_WINDOWS[self.pattern[0]][1], k1)(zeta1)
        w_zeta2 = _window_factory(self.gen, _PATTERN_WINDOWS[self.pattern[1]][1], k2)(zeta2)
        return w_eta1 * w_eta2 * w_zeta1 * w_zeta2

    # -- reporting -----------------------------------------------------------
    def truncation_error(self, M=None) -> float:
        M = self.M if M is None else M
        keep = (self._group1 <= M) & (self._group2 <= M)
        power = np.abs(self.coeffs) ** 2
        total = float(np.sum(power))
        if total == 0:
            return 0.0
        return float(np.sqrt(np.sum(power[~keep]) / total))

    def decay_report(self):
        """Constant C with |c_n| <= C (1+g1)^-4 (1+g2)^-4, plus a fitted
        decay exponent from log-log regression over the nonzero modes."""
        mask = np.abs(self.coeffs) > 1e-15
        absc = np.abs(self.coeffs[mask])
        g = (1.0 + self._group1) * (1.0 + self._group2)
        gm = g[mask]
        c4 = float(np.max(absc * gm ** 4)) if absc.size else 0.0
        nz = gm > 1
        if np.count_nonzero(nz) >= 2:
            slope, _ = np.polyfit(np.log(gm[nz]), np.log(absc[nz]), 1)
            fitted = float(-slope)
        else:
            fitted = float("inf")
        return {"C4": c4, "fitted_exponent": fitted,
                "nonzero_modes": int(np.count_nonzero(mask))}

    def mode_count(self, coeff_tol=0.0, M=None) -> int:
        M = self.M if M is None else M
        keep = (self._group1 <= M) & (self._group2 <= M)
        return int(np.count_nonzero(keep & (np.abs(self.coeffs) > coeff_tol)))

    # -- evaluation ----------------------------------------------------------
    def reconstruct(self, eta1, eta2, zeta1, zeta2, M=None, windowed=True):
        """Evaluate the truncated expansion at physical frequencies."""
        k1, k2 = self.scales
        u = [np.asarray(eta1, dtype=float) * 2.0 ** (-k1),
             np.asarray(eta2, dtype=float) * 2.0 ** (-k2),
             np.asarray(zeta1, dtype=float) * 2.0 ** (-k1),
             np.asarray(zeta2, dtype=float) * 2.0 ** (-k2)]
        M = self.M if M is None else M
        keep = (self._group1 <= M) & (self._group2 <= M) & (np.abs(self.coeffs) > 0)
        idx = np.argwhere(keep)
        out = 0.0 + 0.0j
        for i1, i2, i3, i4 in idx:
            c = self.coeffs[i1, i2, i3, i4]
            phase = np.exp(
                2j * np.pi / self.period
                * (self._freq[i1] * u[0] + self._freq[i2] * u[1]
                   + self._freq[i3] * u[2] + self._freq[i4] * u[3])
            )
            out = out + c * phase
        if windowed:
            out = out * self.window_values(eta1, eta2, zeta1, zeta2)
        return out

    def terms(self, M=None, coeff_tol=1e-13):
        """Yield (coeff, (f_eta1, f_eta2, f_zeta1, f_zeta2)) rank-one factors.

        Each factor maps physical frequency to window * Fourier phase; the
        sum of the terms equals the windowed reconstruction.
        """
        M = self.M if M is None else M
        keep = (self._group1 <= M) & (self._group2 <= M) & (
            np.abs(self.coeffs) > coeff_tol)
        k1, k2 = self.scales
        kinds = (
            (_PATTERN_WINDOWS[self.pattern[0]][0], k1),
            (_PATTERN_WINDOWS[self.pattern[1]][0], k2),
            (_PATTERN_WINDOWS[self.pattern[0]][1], k1),
            (_PATTERN_WINDOWS[self.pattern[1]][1], k2),
        )
        for i1, i2, i3, i4 in np.argwhere(keep):
            c = complex(self.coeffs[i1, i2, i3, i4])
            ns = (self._freq[i1], self._freq[i2], self._freq[i3], self._freq[i4])

            def make(nmode, kind, scale):
                win = _window_factory(self.gen, kind, scale)
                rate = 2j * np.pi * nmode / (self.period * 2.0 ** scale)

                def factor(u, _win=win, _rate=rate):
                    u = np.asarray(u, dtype=float)
                    return _win(u) * np.exp(_rate * u)
                return factor

            factors = tuple(make(n, kind, scale)
                            for n, (kind, scale) in zip(ns, kinds))
            yield c, factors


def fourier_tensorize(m2: SymbolND, scales, M: int, gen: GeneratorSet,
                      pattern=("pp", "pp"), nodes: int = 32) -> SeparableExpansion:
    """Expand m2 times the annulus window at (k1, k2) into separable terms.

    The symbol is sampled on the rescaled periodic box [-P/2, P/2)^4
    (P = 16 covers every window support) and expanded by a 4-D FFT; a
    constant symbol therefore keeps the single n = 0 coefficient exactly.
    """
    if m2.arity != 2 or m2.parameters != 2:
        raise SymbolError("fourier_tensorize expects an arity-2 bi-parameter symbol")
    k1, k2 = scales
    period = 16.0
    n = int(nodes)
    u = -period / 2.0 + period * np.arange(n) / n
    U = [u.reshape([-1 if i == ax else 1 for i in range(4)]) for ax in range(4)]
    vals = m2(2.0 ** k1 * U[0], 2.0 ** k2 * U[1], 2.0 ** k1 * U[2], 2.0 ** k2 * U[3])
    vals = np.broadcast_to(np.asarray(vals, dtype=complex), (n, n, n, n))
    coeffs = scipy.fft.fftn(vals) / n ** 4
    # grid starts at -P/2: shift phases so coefficients match e^{2 pi i n u/P}
    f = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    sign = (-1.0) ** np.abs(f)
    coeffs = coeffs * sign[:, None, None, None] * sign[None, :, None, None]
    coeffs = coeffs * sign[None, None, :, None] * sign[None, None, None, :]
    coeffs[np.abs(coeffs) < 5e-16 * max(1.0, float(np.max(np.abs(coeffs))))] = 0.0
    return SeparableExpansion(gen, (k1, k2), pattern, period, coeffs, M)


# ---------------------------------------------------------------------------
# Localized Sobolev norm
# ---------------------------------------------------------------------------

def localized_sobolev_norm(m: SymbolND, j: int, k: int, s1: float, s2: float,
                           gen: GeneratorSet, nodes: int = 16,
                           check_convergence: bool = False) -> float:
    """H^{s1,s2} norm of the rescaled, annulus-windowed symbol m_{j,k}.

    m_{j,k}(Xi) = m(2^j xi1, 2^k xi2, 2^j eta1, ...) w(xi1,eta1,zeta1)
    w(xi2,eta2,zeta2) with w a radial annulus cutoff; the norm is evaluated
    spectrally on a 6-D tensor grid over [-B, B]^6 with the separable
    weight (1+|Xi_1|^2)^{s1} (1+|Xi_2|^2)^{s2} on the transform side.
    """
    if s1 < 0 or s2 < 0:
        raise InvalidInput("Sobolev orders must be nonnegative")
    if m.arity != 3 or m.parameters != 2:
        raise SymbolError("localized_sobolev_norm expects arity-3 bi-parameter m")

    def compute(npts):
        B = 2.5
        u = -B + 2.0 * B * np.arange(npts) / npts
        axes = [u.reshape([-1 if i == ax else 1 for i in range(6)]) for ax in range(6)]
        # axis order (xi1, xi2, eta1, eta2, zeta1, zeta2); group 1 = axes 0,2,4
        w1 = gen.psi_hat(np.sqrt(axes[0] ** 2 + axes[2] ** 2 + axes[4] ** 2))
        w2 = gen.psi_hat(np.sqrt(axes[1] ** 2 + axes[3] ** 2 + axes[5] ** 2))
        vals = m(2.0 ** j * axes[0], 2.0 ** k * axes[1],
                 2.0 ** j * axes[2], 2.0 ** k * axes[3],
                 2.0 ** j * axes[4], 2.0 ** k * axes[5])
        vals = np.asarray(vals, dtype=complex) * w1 * w2
        vals = np.ascontiguousarray(np.broadcast_to(vals, (npts,) * 6))
        if not vals.flags.writeable:  # broadcast view; fftn needs a buffer it owns
            vals = vals.copy()
        F = scipy.fft.fftn(vals, overwrite_x=True)
        dV = (2.0 * B / npts) ** 6
        dQ = (1.0 / (2.0 * B)) ** 6
        q = np.fft.fftfreq(npts, d=2.0 * B / npts)
        q2 = q ** 2
        w1s = (1.0 + q2[:, None, None] + q2[None, :, None] + q2[None, None, :]) ** s1
        w2s = (1.0 + q2[:, None, None] + q2[None, :, None] + q2[None, None, :]) ** s2
        P = np.abs(F) ** 2
        acc = np.einsum("abcdef,ace,bdf->", P, w1s, w2s)
        return float(np.sqrt(acc * dV ** 2 * dQ))

    value = compute(nodes)
    if check_convergence:
        coarse = compute(max(4, nodes // 2))
        if value != 0 and abs(value - coarse) / abs(value) > 0.10:
            warnings.warn(
                f"localized Sobolev norm unconverged: {coarse:.6e} -> {value:.6e}",
                NumericalWarning,
            )
    return value
