"""Command-line front end: exponent atlas output, verification suites and scans.

Exit codes: 0 success, 1 a suite or strict verdict failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import report
from .exponents import (CURVE_HEADER, INF, REGION_HEADER, emit_boundary_curve, emit_region_data,
                        necessary_alpha, p_thresholds)

SUITES = ("calibration", "partition", "kernels", "square-function", "cauchy-schwarz", "reconstruct")
PRESETS = ("thm-main", "cor-sharp-d2", "l2-l1-bound", "counterexample")


class UsageError(Exception):
    pass


def parse_number(text: str) -> float:
    """Accepts 0.25, 1/4 and inf."""
    t = str(text).strip().lower()
    if t in ("inf", "infinity"):
        return INF
    try:
        return float(Fraction(t))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse number {text!r}") from exc


def parse_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [parse_number(x) if isinstance(x, str) else float(x) for x in text]
    return [parse_number(x) for x in str(text).split(",") if x.strip()]


@dataclass
class RunConfig:
    subcommand: str
    target: str = ""
    d: int = 2
    nu: Optional[float] = None
    step: float = 1 / 32
    deltas: list = field(default_factory=list)
    exponents: list = field(default_factory=list)
    alpha: float = 0.2
    seed: int = 0
    budget: int = 48
    restarts: int = 32
    samples: int = 1_000_000
    epsilon: float = 1.0
    output: str = "out"
    strict: bool = False

    def to_dict(self) -> dict:
        # the output location and exit policy do not change any computed value
        d = asdict(self)
        d.pop("output")
        d.pop("strict")
        return d


PRESET_DEFAULTS = {
    "thm-main": dict(d=2, deltas=[1 / 8, 1 / 16, 1 / 32, 1 / 64],
                     exponents=[[2, 2, 1], [4, 4, 2], [INF, INF, INF], [2, INF, 2]]),
    "cor-sharp-d2": dict(d=2, deltas=[1 / 8, 1 / 16, 1 / 32, 1 / 64], exponents=[[4, 4, 2]]),
    "l2-l1-bound": dict(d=2, deltas=[1 / 8, 1 / 16, 1 / 32, 1 / 64], exponents=[[2, 2, 1]]),
    "counterexample": dict(d=2, alpha=0.2, exponents=[[INF, INF, INF], [2, 2, 1]]),
}


# exponents ---------------------------------------------------------------

def cmd_exponents(cfg: RunConfig) -> int:
    if cfg.d < 2:
        raise UsageError("the exponent atlas needs d >= 2")
    nu = cfg.nu
    if nu is None:
        nu = 1 / p_thresholds(cfg.d)[1]
    if not 0 < nu < 0.5:
        raise UsageError(f"nu must lie in (0, 1/2), got {nu}")
    cfg = replace(cfg, nu=nu)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    prov = report.provenance(cfg.to_dict())
    rows = emit_region_data(cfg.d, nu, cfg.step)
    curve = emit_boundary_curve(cfg.d, nu, cfg.step)
    report.write_csv(out / "regions.csv", rows, REGION_HEADER, prov)
    report.write_csv(out / "boundary_curve.csv", curve, CURVE_HEADER, prov)
    xs = [r["inv_p"] for r in curve]
    nec = [necessary_alpha(1 / u if u else INF, 1 / u if u else INF, cfg.d) for u in xs]
    report.atlas_svg(out / "exponents.svg", rows, cfg.step, xs,
                     [("this threshold", [r["alpha_thm"] for r in curve], "-"),
                      ("earlier threshold", [r["alpha_prior"] for r in curve], "--"),
                      ("necessary", nec, ":")],
                     f"d = {cfg.d}, nu = {nu:.4g}  [config {prov['config_hash']}]")
    print(f"wrote {out}/regions.csv, boundary_curve.csv, exponents.svg")
    return 0


# verify ------------------------------------------------------------------

def _check(name, measured, threshold, ok, **extra):
    return {"name": name, "measured": measured, "threshold": threshold, "pass": bool(ok), **extra}


def suite_calibration(cfg):
    from .bumps import calibration_error
    t = np.geomspace(2.0 ** -18, 1.0, 20001)
    return [_check(f"dyadic calibration alpha={a}", calibration_error(a, t), 1e-10,
                   calibration_error(a, t) <= 1e-10) for a in (0.25, 1.0, 2.5)]


def suite_partition(cfg):
    from .bumps import partition_phi, psi_zero
    phi = partition_phi()
    t = np.linspace(-3, 3, 100_000)
    total = sum(phi(t + k) for k in range(-5, 6))
    err = float(np.abs(total - 1).max())
    tail = float(max(np.abs(psi_zero(a)(np.linspace(0.75 + 1e-9, 1, 10_000))).max() for a in (0.25, 1.0, 2.5)))
    return [_check("partition of unity", err, 1e-12, err <= 1e-12),
            _check("remainder piece vanishes on (3/4, 1]", tail, 1e-12, tail <= 1e-12)]


def kernel_constants(d: int, deltas, anisotropic: bool = False) -> list[float]:
    from .bumps import standard_bump
    from .linear import ShellSpec, angular_shell_kernel, kernel_grid, shell_kernel
    prof = standard_bump(sharpness=4.0)
    out = []
    for delta in deltas:
        grid = kernel_grid(d, delta)
        spec = ShellSpec(1.0, delta, prof)
        if anisotropic:
            _, env = angular_shell_kernel(grid, spec, 0.0, math.sqrt(delta))
        else:
            _, env = shell_kernel(grid, spec)
        out.append(env.constant)
    return out


def suite_kernels(cfg):
    deltas = cfg.deltas or [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    checks = []
    for label, d, aniso in (("isotropic d=1", 1, False), ("isotropic d=2", 2, False),
                            ("anisotropic d=2", 2, True)):
        c = kernel_constants(d, deltas, aniso)
        spread = max(c) / min(c)
        checks.append(_check(f"{label} constant spread", spread, 2.0, spread <= 2.0, constants=c))
    return checks


def suite_square_function(cfg):
    from .bumps import standard_bump
    from .grid import TorusGrid, random_bandlimited
    from .linear import square_function_pointwise
    grid = TorusGrid(2, 64.0, 256)
    worst, ok = 0.0, True
    for s in range(cfg.seed, cfg.seed + 3):
        rep = square_function_pointwise(random_bandlimited(grid, 1.5, s), 1 / 16, standard_bump())
        worst = max(worst, rep.max_ratio)
        ok &= rep.holds
    return [_check("discrete square function below continuous bound", worst, 1.0, ok)]


def suite_cauchy_schwarz(cfg):
    from .bilinear import cauchy_schwarz_factors
    from .bumps import partition_phi, standard_bump
    from .grid import TorusGrid, random_bandlimited
    grid = TorusGrid(2, 64.0, 256)
    worst = -math.inf
    for s in range(cfg.seed, cfg.seed + 3):
        f, g = random_bandlimited(grid, 1.2, 2 * s), random_bandlimited(grid, 1.2, 2 * s + 1)
        for phi in (partition_phi(), standard_bump()):
            for varrho in (0.75, 1.0, 1.5):
                B, sf, sg = cauchy_schwarz_factors(f, g, 1 / 16, varrho, phi, phi)
                scale = max(float((sf * sg).max()), 1e-300)
                worst = max(worst, float((np.abs(B.values) - sf * sg).max()) / scale)
    return [_check("pointwise Cauchy-Schwarz excess (relative)", worst, 1e-12, worst <= 1e-12)]


def suite_reconstruct(cfg):
    from .bilinear import bilinear_exact, bilinear_shell_product, shell_sum_symbol, taylor_reconstruct
    from .bumps import dyadic_psi, partition_phi, standard_bump
    from .grid import TorusGrid, random_bandlimited
    delta = cfg.deltas[0] if cfg.deltas else 1 / 64
    eps = cfg.epsilon
    psi, phi = dyadic_psi(1.0), partition_phi()
    e1 = taylor_reconstruct(delta, eps, 1, psi, phi).sup_error
    e8 = taylor_reconstruct(delta, eps, 8, psi, phi)
    grid = TorusGrid(1, 16.0, 1024)
    f, g = random_bandlimited(grid, 1.45, cfg.seed), random_bandlimited(grid, 1.45, cfg.seed + 1)
    bump = standard_bump()
    S = bilinear_shell_product(f, g, 1 / 16, 1.0, bump, bump).values
    E = bilinear_exact(f, g, shell_sum_symbol(1 / 16, 1.0, bump, bump)).values
    agree = float(np.abs(S - E).max() / np.abs(E).max())
    return [_check(f"error ratio N=1 / N=8 at delta={delta}, eps={eps}", e1 / max(e8.sup_error, 1e-300),
                   10.0, e1 >= 10 * e8.sup_error, sup_errors=[e1, e8.sup_error]),
            _check("window partition on the piece's support", e8.partition_error, 1e-10,
                   e8.partition_error <= 1e-10),
            _check("separable vs exact path (relative)", agree, 1e-9, agree <= 1e-9)]


SUITE_FUNCS = {"calibration": suite_calibration, "partition": suite_partition,
               "kernels": suite_kernels, "square-function": suite_square_function,
               "cauchy-schwarz": suite_cauchy_schwarz, "reconstruct": suite_reconstruct}


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.target not in SUITE_FUNCS:
        raise UsageError(f"unknown suite {cfg.target!r}; choose from {', '.join(SUITES)}")
    checks = SUITE_FUNCS[cfg.target](cfg)
    passed = all(c["pass"] for c in checks)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    prov = report.provenance(cfg.to_dict())
    path = report.write_json(out / f"verify_{cfg.target}.json",
                             {"suite": cfg.target, "pass": passed, "checks": checks}, prov)
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}: {c['measured']:.4g} (threshold {c['threshold']:g})")
    print(f"wrote {path}")
    return 0 if passed else 1


# scan --------------------------------------------------------------------

def _scan_norms(cfg, kind, verdict):
    from .experiments import delta_scaling_scan, theory_kappa
    res = delta_scaling_scan(kind, cfg.d, [tuple(t) for t in cfg.exponents], cfg.deltas,
                             cfg.budget, cfg.seed, restarts=cfg.restarts)
    out = Path(cfg.output)
    prov = report.provenance(cfg.to_dict())
    report.write_csv(out / f"scan_{cfg.target}.csv", res.rows(),
                     ["delta", "p", "q", "r", "norm_estimate", "family", "seed"], prov)
    fits, all_ok, all_reliable = [], True, True
    for (p, q, r), fit in zip(res.triples, res.fits):
        bound = theory_kappa(p, q, cfg.d)
        ok = verdict(p, q, r, fit, bound)
        all_ok &= ok
        all_reliable &= fit.reliable
        fits.append({"p": p, "q": q, "r": r, "slope": fit.slope, "residual": fit.max_residual,
                     "kappa_emp": fit.kappa, "theory_bound": bound, "reliable": fit.reliable,
                     "verdict": "pass" if ok else "fail", "label": "empirical lower envelope"})
        tag = "-".join(report.fmt(x) for x in (p, q, r))
        report.loglog_svg(out / f"scan_{cfg.target}_{tag}.svg", res.deltas,
                          [e[res.triples.index((p, q, r))].value for e in res.estimates],
                          fit.slope, fit.intercept, "delta", "norm estimate",
                          f"{kind}, (p,q,r)=({tag})  [{prov['config_hash']}]")
    report.write_json(out / f"scan_{cfg.target}.json", {"operator": kind, "fits": fits}, prov)
    for f in fits:
        print(f"{f['verdict'].upper()}  (p,q,r)=({report.fmt(f['p'])},{report.fmt(f['q'])},"
              f"{report.fmt(f['r'])}) slope {f['slope']:.3f} theory kappa <= {f['theory_bound']:.3f}")
    return all_ok, all_reliable


def _scan_counterexample(cfg):
    from .counterexample import CounterexampleConfig, necessary_exponent_fit, pairing_scan
    cc = CounterexampleConfig(d=cfg.d, alpha=cfg.alpha)
    results, fit = pairing_scan(cc, samples=cfg.samples, seed=cfg.seed)
    out = Path(cfg.output)
    prov = report.provenance(cfg.to_dict())
    report.write_csv(out / "scan_counterexample.csv",
                     [{"R": r.R, "abs_pairing": abs(r.value), "stderr": r.stderr} for r in results],
                     ["R", "abs_pairing", "stderr"], prov)
    expected = (cc.d - 1) / 2 - cc.alpha
    ok = abs(fit.slope - expected) <= 0.15
    reliable = all(r.reliable for r in results)
    implied = []
    for p, q, _ in cfg.exponents:
        nf = necessary_exponent_fit(cc, p, q, scan=(results, fit))
        implied.append({"p": p, "q": q, "implied_alpha": nf.implied_alpha,
                        "implied_alpha_swapped": nf.implied_alpha_swapped,
                        "necessary_alpha": nf.predicted})
    report.write_json(out / "scan_counterexample.json",
                      {"slope": fit.slope, "residual": fit.max_residual, "theory_slope": expected,
                       "verdict": "pass" if ok else "fail", "reliable": reliable,
                       "implied_thresholds": implied}, prov)
    report.loglog_svg(out / "scan_counterexample.svg", [r.R for r in results],
                      [abs(r.value) for r in results], fit.slope, fit.intercept, "R", "|pairing|",
                      f"d={cc.d}, alpha={cc.alpha}  [{prov['config_hash']}]")
    print(f"{'PASS' if ok else 'FAIL'}  pairing slope {fit.slope:.3f} vs {expected:.3f}")
    return ok, reliable


def cmd_scan(cfg: RunConfig) -> int:
    if cfg.target not in PRESETS:
        raise UsageError(f"unknown preset {cfg.target!r}; choose from {', '.join(PRESETS)}")
    if cfg.target != "counterexample":
        if not cfg.deltas:
            raise UsageError("the delta list is empty")
        if len(cfg.deltas) < 4:
            raise UsageError("a scan needs at least four delta values")
    Path(cfg.output).mkdir(parents=True, exist_ok=True)
    if cfg.target == "counterexample":
        ok, reliable = _scan_counterexample(cfg)
    elif cfg.target == "l2-l1-bound":
        ok, reliable = _scan_norms(cfg, "btilde_delta", lambda p, q, r, fit, b: fit.slope >= -0.15)
    elif cfg.target == "cor-sharp-d2":
        ok, reliable = _scan_norms(cfg, "shell_product", lambda p, q, r, fit, b: fit.slope >= -0.15)
    else:
        ok, reliable = _scan_norms(cfg, "shell_product", lambda p, q, r, fit, b: fit.kappa <= b + 0.2)
    if not reliable:
        print("warning: at least one estimate is unreliable", file=sys.stderr)
    if cfg.strict:
        return 0 if ok and reliable else 1
    return 0


# argument handling -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bochner-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
        p.add_argument("--out", dest="output", help="output directory (default: out)")
        p.add_argument("--d", type=int)
        p.add_argument("--seed", type=int)

    p = sub.add_parser("exponents", help="region map and diagonal threshold curves")
    common(p)
    p.add_argument("--nu", help="region parameter; default 1/p_s(d)")
    p.add_argument("--step", help="lattice step in 1/p, dividing 1/2")

    p = sub.add_parser("verify", help="run an identity or inequality suite")
    common(p)
    p.add_argument("suite", help=", ".join(SUITES))
    p.add_argument("--deltas", help="comma-separated delta list")
    p.add_argument("--epsilon", help="Taylor resolution exponent (reconstruct suite)")

    p = sub.add_parser("scan", help="delta-scaling fits and the counterexample slope")
    common(p)
    p.add_argument("preset", help=", ".join(PRESETS))
    p.add_argument("--deltas", help="comma-separated delta list, e.g. 1/8,1/16,1/32,1/64")
    p.add_argument("--exponents", help="semicolon-separated p,q,r triples")
    p.add_argument("--alpha", help="smoothness order (counterexample)")
    p.add_argument("--budget", type=int, help="operator evaluations for the random witness family")
    p.add_argument("--restarts", type=int)
    p.add_argument("--samples", type=int, help="Monte Carlo samples per radius")
    p.add_argument("--strict", action="store_true", help="exit 1 on failed or unreliable verdicts")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    target = getattr(ns, "suite", None) or getattr(ns, "preset", None) or ""
    base = {"subcommand": ns.subcommand, "target": target}
    if ns.subcommand == "scan" and target in PRESET_DEFAULTS:
        base.update(PRESET_DEFAULTS[target])
    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        unknown = set(loaded) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        base.update(loaded)
    for key in ("output", "d", "seed", "budget", "restarts", "samples"):
        v = getattr(ns, key, None)
        if v is not None:
            base[key] = v
    for key in ("nu", "step", "alpha", "epsilon"):
        v = getattr(ns, key, None)
        if v is not None:
            base[key] = parse_number(v)
    if getattr(ns, "deltas", None) is not None:
        base["deltas"] = parse_list(ns.deltas)
    if getattr(ns, "exponents", None) is not None:
        base["exponents"] = [parse_list(t) for t in ns.exponents.split(";") if t.strip()]
        if any(len(t) != 3 for t in base["exponents"]):
            raise UsageError("exponent triples need three entries p,q,r")
    base["deltas"] = parse_list(base.get("deltas", []))
    base["exponents"] = [parse_list(t) for t in base.get("exponents", [])]
    if base.get("nu") is not None:
        base["nu"] = parse_number(base["nu"]) if isinstance(base["nu"], str) else float(base["nu"])
    base["strict"] = bool(getattr(ns, "strict", False))
    return RunConfig(**base)


COMMANDS = {"exponents": cmd_exponents, "verify": cmd_verify, "scan": cmd_scan}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
