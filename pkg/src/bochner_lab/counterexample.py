"""Stationary-phase counterexample: the kernel of the bilinear Bochner-Riesz
multiplier paired against a modulated indicator pair living in a narrow cone."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exponents import necessary_alpha
from .special import kernel_closed_form

RELIABILITY = 0.05


@dataclass(frozen=True)
class CounterexampleConfig:
    """A_R = annulus (eps0/10) R^(1/2) <= |y| < (eps0/5) R^(1/2) in R^d and
    B_R = {(eps0/10) R <= |z| <= (eps0/5) R, |z'| <= (eps0/10) |z_d|}."""

    d: int = 2
    alpha: float = 0.2
    eps0: float = 0.25
    R_list: tuple = tuple(2.0 ** k for k in range(10, 17))

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError("d must be 1, 2 or 3")
        if not 0 < self.eps0 <= 1:
            raise ValueError("eps0 must lie in (0, 1]")
        if len(self.R_list) < 2:
            raise ValueError("need at least two radii")

    @property
    def R_min(self) -> float:
        return 64.0 / self.eps0 ** 2

    def check(self, R: float) -> None:
        if R < self.R_min:
            raise ValueError(f"R = {R} is below 64/eps0^2 = {self.R_min}")

    def radii(self, R: float) -> tuple:
        e = self.eps0
        return (e / 10 * math.sqrt(R), e / 5 * math.sqrt(R)), (e / 10 * R, e / 5 * R)

    def sphere_measure(self) -> float:
        d = self.d
        return 2 * math.pi ** (d / 2) / math.gamma(d / 2)

    def cap_measure(self) -> float:
        """Measure of {theta in S^(d-1): |theta'| <= (eps0/10)|theta_d|}, both cones."""
        d = self.d
        if d == 1:
            return 2.0
        th0 = math.atan(self.eps0 / 10)
        if d == 2:
            return 4 * th0
        # d = 3: two caps of half-angle th0
        return 2 * 2 * math.pi * (1 - math.cos(th0))

    def measures(self, R: float) -> tuple:
        """(|A_R|, |B_R|)."""
        (a1, a2), (b1, b2) = self.radii(R)
        d = self.d
        return (self.sphere_measure() * (a2 ** d - a1 ** d) / d,
                self.cap_measure() * (b2 ** d - b1 ** d) / d)


@dataclass
class PairingResult:
    R: float
    value: complex
    stderr: float
    method: str
    samples: int

    @property
    def reliable(self) -> bool:
        return self.stderr <= RELIABILITY * abs(self.value)


def _integrand(cfg: CounterexampleConfig, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    w = np.sqrt(r * r + s * s)
    return (kernel_closed_form(w, cfg.alpha, cfg.d) * np.exp(-2j * math.pi * s)
            * r ** (cfg.d - 1) * s ** (cfg.d - 1))


def _pairing_quadrature(cfg, R, panels_per_unit=2, order=16):
    (a1, a2), (b1, b2) = cfg.radii(R)
    xs, ws = np.polynomial.legendre.leggauss(order)

    def nodes(lo, hi, panels):
        edges = np.linspace(lo, hi, panels + 1)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
        return (mid[:, None] + half[:, None] * xs).ravel(), (half[:, None] * ws).ravel()

    def run(scale):
        rn, rw = nodes(a1, a2, max(2, int(math.ceil(scale * (a2 - a1)))))
        sn, sw = nodes(b1, b2, max(4, int(math.ceil(scale * panels_per_unit * (b2 - b1)))))
        total = 0j
        step = max(1, 2_000_000 // rn.size)
        for i in range(0, sn.size, step):
            vals = _integrand(cfg, rn[:, None], sn[None, i:i + step])
            total += np.einsum("i,ij,j->", rw, vals, sw[i:i + step])
        return total * cfg.sphere_measure() * cfg.cap_measure()

    fine, coarse = run(2.0), run(1.0)
    return fine, abs(fine - coarse), 0


def _pairing_montecarlo(cfg, R, samples, seed):
    """Stratified in |z| (unit-length strata, one oscillation each) and in |y|."""
    (a1, a2), (b1, b2) = cfg.radii(R)
    strata = max(1, int(math.ceil(b2 - b1)))
    per = max(2, int(math.ceil(samples / strata)))
    edges = np.linspace(b1, b2, strata + 1)
    width = edges[1] - edges[0]
    rng = np.random.default_rng([seed, int(R)])
    means = np.empty(strata, dtype=complex)
    vars_ = np.empty(strata)
    for j in range(0, strata, 256):
        block = min(256, strata - j)
        u = rng.random((block, per))
        # per-stratum sample in |y|: stratified within the stratum as well
        v = (np.arange(per)[None, :] + rng.random((block, per))) / per
        rng.permuted(v, axis=1, out=v)
        s = edges[j:j + block, None] + width * u
        r = a1 + (a2 - a1) * v
        vals = _integrand(cfg, r, s)
        means[j:j + block] = vals.mean(axis=1)
        vars_[j:j + block] = (np.abs(vals - vals.mean(axis=1, keepdims=True)) ** 2).sum(axis=1) / (per - 1)
    vol = (a2 - a1) * width
    value = vol * means.sum() * cfg.sphere_measure() * cfg.cap_measure()
    stderr = vol * math.sqrt(vars_.sum() / per) * cfg.sphere_measure() * cfg.cap_measure()
    return value, stderr, per * strata


def counterexample_pairing(config: CounterexampleConfig, R: float, method: str = "montecarlo",
                           samples: int = 1_000_000, seed: int = 0) -> PairingResult:
    """Integral of K^alpha(|(y, z)|) e^(-2 pi i |z|) over A_R x B_R.

    The integrand depends on (|y|, |z|) only, so both sets reduce to radial
    variables with exact angular measures.  ``method`` is "montecarlo"
    (stratified; stderr is the sampling standard error) or "quadrature"
    (composite Gauss-Legendre; stderr is the change under panel halving).
    """
    config.check(R)
    if method == "montecarlo":
        if samples < 1_000_000:
            raise ValueError("Monte Carlo runs need at least 1e6 samples")
        v, e, n = _pairing_montecarlo(config, R, samples, seed)
    elif method == "quadrature":
        v, e, n = _pairing_quadrature(config, R)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PairingResult(R, complex(v), float(e), method, n)


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    max_residual: float
    points: list = field(default_factory=list)


def loglog_fit(xs, ys) -> SlopeFit:
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (slope * lx + icpt)
    return SlopeFit(float(slope), float(icpt), float(np.abs(res).max()),
                    [(float(a), float(b)) for a, b in zip(lx, ly)])


@dataclass
class NecessaryFit:
    d: int
    alpha: float
    p: float
    q: float
    pairing_slope: float
    holder_exponent: float
    holder_exponent_swapped: float
    implied_alpha: float
    implied_alpha_swapped: float
    predicted: float
    reliable: bool
    residual: float

    @property
    def implied(self) -> float:
        return max(self.implied_alpha, self.implied_alpha_swapped)


def pairing_scan(config: CounterexampleConfig, method: str = "montecarlo", samples: int = 1_000_000,
                 seed: int = 0) -> tuple[list[PairingResult], SlopeFit]:
    results = [counterexample_pairing(config, R, method, samples, seed) for R in config.R_list]
    fit = loglog_fit([r.R for r in results], [abs(r.value) for r in results])
    return results, fit


def necessary_exponent_fit(config: CounterexampleConfig, p: float, q: float,
                           scan: Optional[tuple] = None, **kwargs) -> NecessaryFit:
    """Threshold implied by pairing growth against the Hoelder size of f and g.

    With f = 1_{A_R} and g the modulated 1_{B_R}, boundedness forces
    slope <= d/(2p) + d/q.  Since the slope moves one-for-one with -alpha,
    the implied threshold is alpha + slope - d/(2p) - d/q.  The swapped
    placement gives the mirror constraint with p and q exchanged.
    """
    results, fit = scan if scan is not None else pairing_scan(config, **kwargs)
    d = config.d
    h = d / (2 * p) + d / q
    hs = d / p + d / (2 * q)
    return NecessaryFit(d, config.alpha, p, q, fit.slope, h, hs,
                        config.alpha + fit.slope - h, config.alpha + fit.slope - hs,
                        necessary_alpha(p, q, d), all(r.reliable for r in results), fit.max_residual)


def holder_exponents(config: CounterexampleConfig, p: float, q: float) -> float:
    """Fitted log-log slope of |A_R|^(1/p) |B_R|^(1/q) over the R list."""
    vals = []
    for R in config.R_list:
        a, b = config.measures(R)
        vals.append(a ** (1 / p) * b ** (1 / q))
    return loglog_fit(config.R_list, vals).slope
