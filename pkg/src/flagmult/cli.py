"""Command-line driver: identity verification, bound scans, probes, reports.

Output files are byte-deterministic for a fixed seed and configuration:
JSON is written with sorted keys and %.17g floats, and wall-clock timings
appear only in the text summary, never in the files.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .configtext import parse_config_text
from .errors import ConfigError, FlagmultError
from .grid import GridSpec, SampledFunction, dft, from_modes
from .lp import DEFAULT_OCTAVES, GAP_DESK, band, tail_identity_check
from .multiop import OperatorPlan, apply_flag, apply_trilinear_brute, modes_from_spectrum
from .symbols import FlagSymbol, build_symbol, make_generators, symbols_from_config

__all__ = ["main", "ExperimentConfig", "SuiteResult", "json_dumps"]


# ---------------------------------------------------------------------------
# Deterministic JSON
# ---------------------------------------------------------------------------

def _json_scalar(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v) or math.isinf(v):
            return f'"{v}"'
        return "%.17g" % v
    if isinstance(x, str):
        out = x.replace("\\", "\\\\").replace('"', '\\"')
        out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
        return f'"{out}"'
    raise ConfigError(f"non-serializable value of type {type(x).__name__}")


def json_dumps(obj, indent=0) -> str:
    """Deterministic JSON: sorted keys, fixed float format, newline-terminated."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = []
        for k in sorted(obj):
            parts.append(f'{inner}{_json_scalar(str(k))}: {json_dumps(obj[k], indent + 1)}')
        return "{\n" + ",\n".join(parts) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{json_dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(parts) + f"\n{pad}]"
    return _json_scalar(obj)


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(json_dumps(obj) + "\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["%.17g" % v if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "grid.n1": 64, "grid.n2": 64, "grid.l1": 1.0, "grid.l2": 1.0,
    "generators.epsilon": 0.125, "generators.sharpness": 1.0,
    "plan.kind": "Separable", "plan.octaves": DEFAULT_OCTAVES,
    "plan.gap": GAP_DESK, "plan.m": 8, "plan.tolerance": 1e-6,
    "exponents.p1": 4.0, "exponents.p2": 4.0, "exponents.p3": 4.0,
    "exponents.r": 4.0 / 3.0,
    "family.name": "dilated", "family.members": 2, "family.seed": 0,
    "family.octave_lo": 2,
    "leibniz.alpha1": 1.0, "leibniz.alpha2": 1.0,
    "leibniz.beta1": 1.0, "leibniz.beta2": 1.0, "leibniz.gap": GAP_DESK,
    "seed": 0,
}


@dataclass
class ExperimentConfig:
    """Flat dotted-key configuration with typed accessors."""

    entries: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path=None, overrides=None):
        entries = dict(_DEFAULTS)
        if path is not None:
            with open(path) as fh:
                entries.update(parse_config_text(fh.read()))
        entries.update(overrides or {})
        return cls(entries)

    def get(self, key, default=None):
        return self.entries.get(key, default)

    def grid(self) -> GridSpec:
        return GridSpec(int(self.entries["grid.n1"]), int(self.entries["grid.n2"]),
                        float(self.entries["grid.l1"]), float(self.entries["grid.l2"]))

    def generators(self):
        return make_generators(float(self.entries["generators.epsilon"]),
                               float(self.entries["generators.sharpness"]))

    def plan(self) -> OperatorPlan:
        return OperatorPlan(kind=str(self.entries["plan.kind"]),
                            octaves=int(self.entries["plan.octaves"]),
                            gap=int(self.entries["plan.gap"]),
                            M=int(self.entries["plan.m"]),
                            tolerance=float(self.entries["plan.tolerance"]))

    def exponents(self) -> analysis.ExponentTuple:
        return analysis.ExponentTuple(
            float(self.entries["exponents.p1"]),
            float(self.entries["exponents.p2"]),
            float(self.entries["exponents.p3"]),
            float(self.entries["exponents.r"]),
            self.entries.get("exponents.q2"),
            self.entries.get("exponents.q3"))

    def family(self) -> analysis.TestFamilySpec:
        return analysis.TestFamilySpec(
            name=str(self.entries["family.name"]),
            members=int(self.entries["family.members"]),
            seed=int(self.entries["family.seed"]),
            octave_lo=int(self.entries["family.octave_lo"]))

    def leibniz_spec(self, gen) -> analysis.LeibnizSpec:
        return analysis.LeibnizSpec(
            float(self.entries["leibniz.alpha1"]),
            float(self.entries["leibniz.alpha2"]),
            float(self.entries["leibniz.beta1"]),
            float(self.entries["leibniz.beta2"]),
            gap=int(self.entries["leibniz.gap"]), gen=gen)

    def symbols(self, gen):
        blocks = {k: v for k, v in self.entries.items() if k.startswith("symbol.")}
        return symbols_from_config(blocks, gen=gen)


def _default_flag(grid, gen) -> FlagSymbol:
    """Dyadic flag symbol spanning the interior of the grid band."""
    jmin, jmax = band(grid, 1, DEFAULT_OCTAVES)
    lo, hi = jmin - 4, jmax + 1
    n = hi - lo + 1
    eye = [[1.0 if a == b else 0.0 for b in range(n)] for a in range(n)]
    m1 = build_symbol("m1", "flag_m1_dyadic",
                      {"j1range": [lo, hi], "j2range": [lo, hi], "inset": 0,
                       "coeffs": eye}, gen)
    m2 = build_symbol("m2", "flag_m2_dyadic",
                      {"k1range": [lo, hi], "k2range": [lo, hi],
                       "coeffs": eye}, gen)
    return FlagSymbol(m1, m2)


def _config_flag(cfg: ExperimentConfig, grid, gen) -> FlagSymbol:
    syms = cfg.symbols(gen)
    if "m1" in syms and "m2" in syms:
        return FlagSymbol(syms["m1"], syms["m2"])
    return _default_flag(grid, gen)


# ---------------------------------------------------------------------------
# Result container
# ---------------------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    checks: list  # of dicts {name, value, tolerance, passed}

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def payload(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": self.checks}

    def print_lines(self, out=sys.stdout):
        for c in self.checks:
            mark = "PASS" if c["passed"] else "FAIL"
            print(f"[{mark}] {c['name']}: value={c['value']:.3e} "
                  f"tol={c['tolerance']:.3e}", file=out)


def _check(name, value, tolerance):
    return {"name": name, "value": float(value), "tolerance": float(tolerance),
            "passed": bool(value <= tolerance)}


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------

def _random_band_function(grid, rng, count=24, pad=2, octaves=DEFAULT_OCTAVES,
                          lo=None, hi=None):
    """Random trigonometric polynomial supported in the band interior.

    ``lo``/``hi`` override the per-axis frequency-magnitude range (zero is
    always admitted alongside the range)."""
    jmin, jmax = band(grid, 1, octaves)
    if lo is None:
        lo = max(1.0, 2.0 ** (jmin + pad))
    if hi is None:
        hi = 2.0 ** (jmax - pad)
    modes = {}
    while len(modes) < count:
        k1 = int(rng.integers(-int(hi), int(hi) + 1))
        k2 = int(rng.integers(-int(hi), int(hi) + 1))
        mag1, mag2 = abs(k1) / grid.L1, abs(k2) / grid.L2
        ok1 = mag1 == 0 or lo <= mag1 <= hi
        ok2 = mag2 == 0 or lo <= mag2 <= hi
        if ok1 and ok2 and (k1, k2) not in modes:
            modes[(k1, k2)] = complex(rng.standard_normal(), rng.standard_normal())
    return from_modes(grid, [(k1, k2, c) for (k1, k2), c in sorted(modes.items())])


def _rel_l2(a: SampledFunction, b: SampledFunction) -> float:
    num = float(np.sqrt(np.sum(np.abs(a.values - b.values) ** 2)))
    den = float(np.sqrt(np.sum(np.abs(b.values) ** 2)))
    return num / den if den > 0 else num


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_checks(cfg, scale, seed):
    gen = cfg.generators()
    grid = cfg.grid()
    rng = np.random.default_rng(seed)
    checks = []

    def chk_partition():
        return _check("window_partition_residual", gen.partition_residual,
                      1e-12 * scale)

    def chk_cone():
        u = np.exp(rng.uniform(-8, 8, 400) * np.log(2.0)) * rng.choice([-1, 1], 400)
        v = rng.standard_normal(400) * np.abs(u)
        w = rng.standard_normal(400) * np.abs(u)
        res = np.max(np.abs(gen.cone0(u, v, w) + gen.cone1(u, v, w) - 1.0))
        return _check("cone_partition_residual", res, 1e-14 * scale)

    def chk_telescoping():
        u = np.exp(rng.uniform(-6, 6, 300) * np.log(2.0))
        K = 8
        tot = np.zeros_like(u)
        for l in range(-30, K + 1):
            tot += gen.psi_hat_scaled(u, l)
        res = np.max(np.abs(tot - gen.phi_hat_scaled(u, K + 3)))
        return _check("telescoping_residual", res, 1e-12 * scale)

    def chk_lp_tail():
        f = _random_band_function(grid, np.random.default_rng(seed + 1))
        jmin, jmax = band(grid, 1, DEFAULT_OCTAVES)
        worst = 0.0
        for k in (jmin, jmin + 1):
            worst = max(worst, tail_identity_check(f, k, k, gen))
        return _check("lp_tail_identity", worst, 1e-10 * scale)

    def chk_oracle():
        g64 = GridSpec(min(grid.N1, 64), min(grid.N2, 64), grid.L1, grid.L2)
        flag = _default_flag(g64, gen)
        rng2 = np.random.default_rng(seed + 2)
        f = _random_band_function(g64, rng2, count=8, lo=4, hi=8)
        gg = _random_band_function(g64, rng2, count=8, lo=1, hi=2)
        h = _random_band_function(g64, rng2, count=6, lo=0, hi=1)
        fast = apply_flag(flag, f, gg, h, OperatorPlan(kind="Separable"), gen)

        def modes(x):
            s = dft(x)
            return modes_from_spectrum(s, tol=1e-12 * np.max(np.abs(s.coeffs)))

        ref = apply_trilinear_brute(flag, modes(f), modes(gg), modes(h), g64)
        rnorm = float(np.max(np.abs(ref.values))) or 1.0
        res = float(np.max(np.abs(fast.values - ref.values))) / rnorm
        return _check("oracle_agreement", res, 1e-10 * scale)

    def chk_frac():
        f = _random_band_function(grid, np.random.default_rng(seed + 3))
        ident = analysis.fractional_derivative(f, 0.0, 0.0)
        r1 = float(np.max(np.abs(ident.values - f.values)))
        two = analysis.fractional_derivative(
            analysis.fractional_derivative(f, 0.5, 0.25), 0.5, 0.25)
        one = analysis.fractional_derivative(f, 1.0, 0.5)
        denom = float(np.max(np.abs(one.values))) or 1.0
        r2 = float(np.max(np.abs(two.values - one.values))) / denom
        return _check("fractional_derivative_identity", max(r1, r2), 1e-12 * scale)

    def chk_holder():
        rng3 = np.random.default_rng(seed + 4)
        worst = 0.0
        ex = cfg.exponents()
        for _ in range(5):
            f = _random_band_function(grid, rng3, count=12)
            gg = _random_band_function(grid, rng3, count=12)
            h = _random_band_function(grid, rng3, count=12)
            prod = SampledFunction(grid, f.values * gg.values * h.values)
            num = analysis.lp_norm(prod, ex.r)
            den = (analysis.lp_norm(f, ex.p1) * analysis.lp_norm(gg, ex.p2)
                   * analysis.lp_norm(h, ex.p3))
            worst = max(worst, num / den)
        return _check("holder_product_ratio", worst, 1.0 + 1e-10 * scale)

    jobs = [chk_partition, chk_cone, chk_telescoping, chk_lp_tail,
            chk_oracle, chk_frac, chk_holder]
    workers = max(1, int(os.environ.get("FLAGMULT_THREADS", "1")))
    if workers == 1:
        for job in jobs:
            checks.append(job())
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            checks.extend(pool.map(lambda j: j(), jobs))
    return checks


def _cmd_verify(args, cfg):
    t0 = time.monotonic()
    checks = _verify_checks(cfg, args.tolerance_scale, int(cfg.get("seed", 0)))
    result = SuiteResult("verify", checks)
    result.print_lines()
    elapsed = time.monotonic() - t0
    print(f"verify: {'PASS' if result.passed else 'FAIL'} "
          f"({len(checks)} checks, {elapsed:.2f}s)")
    if args.out_dir:
        payload = result.payload()
        payload["grid"] = [cfg.grid().N1, cfg.grid().N2]
        _write_json(os.path.join(args.out_dir, "verify.json"), payload)
        _write_csv(os.path.join(args.out_dir, "verify.csv"),
                   ["check", "value", "tolerance", "passed"],
                   [(c["name"], c["value"], c["tolerance"], int(c["passed"]))
                    for c in checks])
    return 0 if result.passed else 1


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def _cmd_scan(args, cfg):
    t0 = time.monotonic()
    gen = cfg.generators()
    grid = cfg.grid()
    plan = cfg.plan()
    flag = _config_flag(cfg, grid, gen)
    exponents = cfg.exponents()
    family = cfg.family()

    def operator(f, g, h):
        return apply_flag(flag, f, g, h, plan, gen)

    report = analysis.bound_scan(operator, exponents, family, grid, gen,
                                 mixed=exponents.q2 is not None)
    for rec in report.records:
        print(f"{rec['member']}: ratio={rec['ratio']:.6e}")
    print(f"scan[{report.family}/{report.mode}]: flatness={report.flatness:.4f} "
          f"max={report.max_ratio:.6e} ({time.monotonic() - t0:.2f}s)")
    if args.out_dir:
        payload = {
            "family": report.family, "mode": report.mode, "quasi": report.quasi,
            "max_ratio": report.max_ratio, "min_ratio": report.min_ratio,
            "flatness": report.flatness, "records": report.records,
            "exponents": [exponents.p1, exponents.p2, exponents.p3, exponents.r],
        }
        _write_json(os.path.join(args.out_dir, "scan.json"), payload)
        _write_csv(os.path.join(args.out_dir, "scan.csv"),
                   ["member", "ratio", "output_norm"],
                   [(r["member"], r["ratio"], r["output_norm"])
                    for r in report.records])
    return 0


# ---------------------------------------------------------------------------
# endpoint-probe
# ---------------------------------------------------------------------------

def _cmd_endpoint(args, cfg):
    t0 = time.monotonic()
    gen = cfg.generators()
    resolutions = [int(s) for s in args.resolutions.split(",")]
    report = analysis.endpoint_probe(resolutions, gen)
    for N, r, c in zip(report.resolutions, report.ratios, report.control_ratios):
        print(f"N={N}: sup-ratio={r:.6e} control-ratio={c:.6e}")
    verdict = "GROWING" if report.strictly_increasing else "NOT GROWING"
    print(f"endpoint-probe: {verdict}, control flatness "
          f"{report.control_flatness:.4f} ({time.monotonic() - t0:.2f}s)")
    if args.out_dir:
        payload = {
            "resolutions": report.resolutions, "ratios": report.ratios,
            "strictly_increasing": report.strictly_increasing,
            "control_ratios": report.control_ratios,
            "control_flatness": report.control_flatness,
        }
        _write_json(os.path.join(args.out_dir, "endpoint.json"), payload)
    return 0 if report.strictly_increasing else 1


# ---------------------------------------------------------------------------
# leibniz
# ---------------------------------------------------------------------------

def _cmd_leibniz(args, cfg):
    t0 = time.monotonic()
    gen = cfg.generators()
    grid = cfg.grid()
    spec = cfg.leibniz_spec(gen)
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    f = _random_band_function(grid, rng, count=16, pad=2)
    g = _random_band_function(grid, rng, count=16, pad=2)
    h = _random_band_function(grid, rng, count=16, pad=2)
    result = analysis.leibniz_decompose(spec, f, g, h,
                                        exponents=cfg.exponents())
    tol = 1e-8 * args.tolerance_scale
    passed = result.residual <= tol
    term_norms = {label: analysis.lp_norm(t, 2.0)
                  for label, t in result.terms.items()}
    top = sorted(term_norms.items(), key=lambda kv: -kv[1])[:5]
    for label, n in top:
        print(f"term {label}: l2={n:.6e}")
    print(f"leibniz: residual={result.residual:.3e} tol={tol:.1e} "
          f"{'PASS' if passed else 'FAIL'} ({time.monotonic() - t0:.2f}s)")
    if args.out_dir:
        payload = {
            "alpha": [spec.alpha1, spec.alpha2],
            "beta": [spec.beta1, spec.beta2],
            "residual": result.residual, "passed": passed,
            "r_min": spec.r_min,
            "term_norms": term_norms,
            "norm_products": result.norm_products,
        }
        _write_json(os.path.join(args.out_dir, "leibniz.json"), payload)
        _write_csv(os.path.join(args.out_dir, "leibniz.csv"),
                   ["term", "l2_norm"], sorted(term_norms.items()))
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _cmd_report(args, cfg):
    import json as _json
    rows = []
    out_dir = args.out_dir or "."
    for name in sorted(os.listdir(out_dir)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(out_dir, name)) as fh:
            data = _json.load(fh)
        if "checks" in data:
            for c in data["checks"]:
                rows.append((name, c["name"], c["value"], int(c["passed"])))
        elif "records" in data:
            rows.append((name, "flatness", data.get("flatness", ""), ""))
        elif "residual" in data:
            rows.append((name, "residual", data["residual"],
                         int(data.get("passed", False))))
        elif "ratios" in data:
            rows.append((name, "growth",
                         data["ratios"][-1] if data["ratios"] else "",
                         int(data.get("strictly_increasing", False))))
    if not rows:
        print(f"report: no result files in {out_dir}")
        return 1
    for row in rows:
        print("  ".join(str(x) for x in row))
    _write_csv(os.path.join(out_dir, "summary.csv"),
               ["file", "metric", "value", "passed"], rows)
    print(f"report: {len(rows)} rows -> summary.csv")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser():
    p = argparse.ArgumentParser(prog="flagmult",
                                description=__doc__.splitlines()[0])
    p.add_argument("--config", help="path to a dotted key=value config file")
    p.add_argument("--grid", type=int, help="override square grid size")
    p.add_argument("--seed", type=int, help="override the base RNG seed")
    p.add_argument("--out-dir", help="directory for JSON/CSV artifacts")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every check tolerance by this factor")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", help="run the identity/oracle check battery")
    sub.add_parser("scan", help="bound scan over a seeded input family")
    ep = sub.add_parser("endpoint-probe", help="sup-norm growth probe")
    ep.add_argument("--resolutions", default="64,128,256",
                    help="comma-separated grid sizes")
    sub.add_parser("leibniz", help="derivative decomposition check")
    sub.add_parser("report", help="aggregate JSON artifacts into a summary")
    return p


_COMMANDS = {
    "verify": _cmd_verify,
    "scan": _cmd_scan,
    "endpoint-probe": _cmd_endpoint,
    "leibniz": _cmd_leibniz,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {}
    if args.grid is not None:
        overrides["grid.n1"] = args.grid
        overrides["grid.n2"] = args.grid
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        cfg = ExperimentConfig.load(args.config, overrides)
        if args.out_dir:
            os.makedirs(args.out_dir, exist_ok=True)
        return _COMMANDS[args.command](args, cfg)
    except FlagmultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
