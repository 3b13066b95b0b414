"""Linear multipliers: Bochner-Riesz means, shell operators, projections,
kernels with decay envelopes, and the square functions built from shells."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from typing import Optional

import numpy as np

from .bumps import SmoothBump, derivative_bump, partition_phi
from .grid import SPECTRAL, Field, FrequencySymbol, TorusGrid, apply_symbol

# rho >= REGIME_C * delta selects the far-from-origin kernel envelope
REGIME_C = 8.0
WRAP_TOL = 1e-6


class WraparoundError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ShellSpec:
    rho: float
    delta: float
    profile: SmoothBump

    def __post_init__(self):
        if not 0 <= self.rho <= 2:
            raise ValueError(f"shell centre {self.rho} outside [0, 2]")
        if not 0 < self.delta <= 0.125:
            raise ValueError(f"shell width {self.delta} outside (0, 1/8]")


def profile_on(values_sq: np.ndarray, rho: float, delta: float, profile: SmoothBump) -> np.ndarray:
    """profile((s - rho)/delta), evaluated only inside the profile's support."""
    lo, hi = profile.support
    t = (values_sq - rho) / delta
    mask = (t > lo) & (t < hi)
    out = np.zeros(values_sq.shape)
    if mask.any():
        out[mask] = profile(t[mask])
    return out


def shell_symbol(rho: float, delta: float, profile: SmoothBump) -> FrequencySymbol:
    return FrequencySymbol(lambda g: profile_on(g.xi_sq, rho, delta, profile),
                           name=f"shell(rho={rho}, delta={delta})")


def bochner_riesz_symbol(alpha: float, t: float = 1.0) -> FrequencySymbol:
    if alpha < 0 or t <= 0:
        raise ValueError("need alpha >= 0 and t > 0")

    def ev(g: TorusGrid):
        base = 1.0 - g.xi_sq / (t * t)
        pos = base > 0
        return np.where(pos, np.abs(base) ** alpha, 0.0)

    return FrequencySymbol(ev, name=f"bochner_riesz(alpha={alpha}, t={t})")


def bochner_riesz(f: Field, alpha: float, t: float = 1.0) -> Field:
    return apply_symbol(f, bochner_riesz_symbol(alpha, t))


def shell_op(f: Field, spec: ShellSpec, spectral_out: bool = False) -> Field:
    return apply_symbol(f, shell_symbol(spec.rho, spec.delta, spec.profile), spectral_out)


def projection_mask(grid: TorusGrid, rho: float, delta: float) -> np.ndarray:
    """Membership |xi|^2 in [rho - delta, rho + delta).

    For rho on the lattice delta*Z the test is done on k = floor(|xi|^2/delta),
    which makes consecutive shells overlap on exactly the points they share.
    """
    j = rho / delta
    if abs(j - round(j)) < 1e-9:
        k = np.floor(grid.xi_sq / delta)
        j = round(j)
        return (k == j - 1) | (k == j)
    s = grid.xi_sq
    return (s >= rho - delta) & (s < rho + delta)


def shell_projection(f: Field, rho: float, delta: float, spectral_out: bool = False) -> Field:
    return apply_symbol(f, projection_mask(f.grid, rho, delta).astype(float), spectral_out)


@dataclass
class KernelEnvelope:
    formula: str
    d: int
    rho: float
    delta: float
    N: int
    constant: float
    max_ratio_location: tuple
    l: Optional[float] = None
    omega: Optional[float] = None
    warnings: list = dc_field(default_factory=list)

    def to_json(self) -> str:
        rec = asdict(self)
        rec["envelope"] = rec.pop("formula")
        return json.dumps(rec, indent=2)


def _check_wraparound(K: np.ndarray, grid: TorusGrid) -> float:
    mag = K.real ** 2 + K.imag ** 2
    band = np.zeros(grid.shape, dtype=bool)
    half = grid.L / 2 - 2 * grid.dx
    for xi in grid.x:
        band = band | (np.abs(xi) >= half)
    frac = float(mag[band].sum() / mag.sum()) if mag.sum() > 0 else 0.0
    if frac > WRAP_TOL:
        raise WraparoundError(
            f"kernel energy near the torus boundary is {frac:.2e} of the total; enlarge L")
    return frac


def _fit(K: np.ndarray, env: np.ndarray, grid: TorusGrid):
    far = grid.x_norm >= 4 * grid.dx
    ratio = np.where(far, np.abs(K) / env, 0.0)
    i = np.unravel_index(int(np.argmax(ratio)), grid.shape)
    loc = tuple(float(np.broadcast_to(xi, grid.shape)[i]) for xi in grid.x)
    return float(ratio[i]), loc


def isotropic_envelope(grid: TorusGrid, rho: float, delta: float, N: int) -> tuple:
    r = grid.x_norm
    if rho >= REGIME_C * delta:
        env = rho ** ((grid.d - 2) / 2) * delta * (1 + rho ** -0.5 * delta * r) ** (-N)
        return env, "isotropic-far"
    return delta ** (grid.d / 2) * (1 + delta ** 0.5 * r) ** (-N), "isotropic-near"


def kernel_grid(d: int, delta: float, rho: float = 1.0, periods: Optional[float] = None) -> TorusGrid:
    """Smallest power-of-two grid with L = periods/delta whose band covers the shell.

    Defaults to 32 periods; L may be shrunk (never
    below 8/delta) to keep N within 4096 per axis at d = 2.
    """
    if periods is None:
        periods = 32.0
    band = math.sqrt(rho + delta) * 1.05
    L = periods / delta
    N = 2 ** math.ceil(math.log2(2 * L * band))
    cap = 4096 if d == 2 else 2 ** 20
    if N > cap:
        N = cap
        L = max(N / (2 * band), 8 / delta)
    return TorusGrid(d, L, N)


def shell_kernel(grid: TorusGrid, spec: ShellSpec, N: Optional[int] = None):
    """Kernel of the shell multiplier and its measured decay constant."""
    if grid.L < 8 / spec.delta:
        raise ValueError("kernel grids need L >= 8/delta")
    N = grid.d + 2 if N is None else N
    sym = Field(grid, profile_on(grid.xi_sq, spec.rho, spec.delta, spec.profile).astype(complex),
                SPECTRAL)
    K = sym.spatial()
    _check_wraparound(K.values, grid)
    env, tag = isotropic_envelope(grid, spec.rho, spec.delta, N)
    const, loc = _fit(K.values, env, grid)
    return K, KernelEnvelope(tag, grid.d, spec.rho, spec.delta, N, const, loc)


def angular_cutoff(grid: TorusGrid, omega: float, l: float, phi: Optional[SmoothBump] = None):
    """chi(xi) = phi(wrapped angle difference / l), homogeneous of degree 0.

    ``omega`` is the direction angle.  With phi the integer partition and
    l = 2 pi / M, the M rotated cutoffs sum to one away from the origin.
    """
    if grid.d != 2:
        raise ValueError("angular cutoffs need d = 2")
    phi = phi or partition_phi()
    k1, k2 = grid.xi
    theta = np.arctan2(np.broadcast_to(k2, grid.shape), np.broadcast_to(k1, grid.shape))
    period = 2 * np.pi / l
    t = theta / l - omega / l
    t = np.mod(t + period / 2, period) - period / 2
    lo, hi = phi.support
    out = np.zeros(grid.shape)
    mask = (t > lo) & (t < hi)
    out[mask] = phi(t[mask])
    return out


def anisotropic_envelope(grid: TorusGrid, rho: float, delta: float, omega: float, N: int):
    e = (math.cos(omega), math.sin(omega))
    x1, x2 = grid.x
    par = np.abs(x1 * e[0] + x2 * e[1])
    perp = np.abs(-x1 * e[1] + x2 * e[0])
    return rho ** -0.5 * delta ** 1.5 * (1 + delta ** 0.5 * perp + delta * rho ** -0.5 * par) ** (-N)


def angular_shell_kernel(grid: TorusGrid, spec: ShellSpec, omega: float, l: float,
                         N: Optional[int] = None):
    """Kernel of phi((|xi|^2 - rho)/delta) chi_l^omega(xi) and its anisotropic fit."""
    if grid.d != 2:
        raise ValueError("angular kernels need d = 2")
    if grid.L < 8 / spec.delta:
        raise ValueError("kernel grids need L >= 8/delta")
    N = grid.d + 2 if N is None else N
    warnings = []
    natural = (spec.delta / spec.rho) ** 0.5
    if not natural / 4 <= l <= 4 * natural:
        warnings.append(f"l={l:.4g} outside factor 4 of (delta/rho)^(1/2)={natural:.4g}")
    sym = profile_on(grid.xi_sq, spec.rho, spec.delta, spec.profile) * angular_cutoff(grid, omega, l)
    K = Field(grid, sym.astype(complex), SPECTRAL).spatial()
    _check_wraparound(K.values, grid)
    env = anisotropic_envelope(grid, spec.rho, spec.delta, omega, N)
    const, loc = _fit(K.values, env, grid)
    return K, KernelEnvelope("anisotropic", 2, spec.rho, spec.delta, N, const, loc, l, omega,
                             warnings)


def decay_length(K: Field, direction: float) -> float:
    """RMS width of |K|^2 along the line through 0 in the given direction (axis-aligned only)."""
    g = K.grid
    vals = np.abs(K.values)
    if g.d == 1:
        prof = vals
    elif abs(math.cos(direction)) > 0.5:
        prof = vals[:, 0]
    else:
        prof = vals[0, :]
    x = g.index_axis * g.dx
    w = prof ** 2
    return float(np.sqrt(np.sum(x * x * w) / np.sum(w)))


def kernel_slice_rows(K: Field, env: KernelEnvelope) -> list[dict]:
    """Rows (x, |K|, C*envelope) along the first axis, x >= 0."""
    g = K.grid
    if env.formula == "anisotropic":
        e = anisotropic_envelope(g, env.rho, env.delta, env.omega or 0.0, env.N)
    else:
        e, _ = isotropic_envelope(g, env.rho, env.delta, env.N)
    line = (slice(None),) + (0,) * (g.d - 1)
    x = g.index_axis * g.dx
    keep = x >= 0
    mags = np.abs(K.values[line])[keep]
    envs = env.constant * e[line][keep]
    return [{"x": float(a), "abs_K": float(b), "envelope": float(c)}
            for a, b, c in zip(x[keep], mags, envs)]


def _shell_centres(delta: float, lo: float, hi: float) -> list[float]:
    j0, j1 = math.ceil(lo / delta - 1e-9), math.floor(hi / delta + 1e-9)
    return [j * delta for j in range(j0, j1 + 1)]


def square_discrete(f: Field, delta: float, profile: SmoothBump, range_=(0.5, 1.0)) -> Field:
    """(sum over rho in delta*Z within range_ of |S_rho f|^2)^(1/2)."""
    spec = f.spectral()
    acc = np.zeros(f.grid.shape)
    for rho in _shell_centres(delta, *range_):
        m = profile_on(f.grid.xi_sq, rho, delta, profile)
        if not m.any():
            continue
        s = Field(f.grid, spec.values * m, SPECTRAL).spatial().values
        acc += s.real ** 2 + s.imag ** 2
    return Field(f.grid, np.sqrt(acc).astype(complex))


def _midpoint_square(spec: Field, delta: float, profile: SmoothBump, a: float, b: float,
                     nodes: int) -> np.ndarray:
    h = (b - a) / nodes
    acc = np.zeros(spec.grid.shape)
    for i in range(nodes):
        t = a + (i + 0.5) * h
        m = profile_on(spec.grid.xi_sq, t, delta, profile)
        if not m.any():
            continue
        s = Field(spec.grid, spec.values * m, SPECTRAL).spatial().values
        acc += s.real ** 2 + s.imag ** 2
    return acc * h


def square_continuous(f: Field, delta: float, profile: SmoothBump, t_interval=(0.5, 2.0),
                      nodes: Optional[int] = None, return_resolution: bool = False):
    """(integral over t of |phi((|D|^2 - t)/delta) f|^2)^(1/2) by the midpoint rule.

    With ``return_resolution`` the relative change under node doubling is
    returned alongside the field.
    """
    a, b = t_interval
    floor = math.ceil(8 / delta)
    nodes = floor if nodes is None else int(nodes)
    if nodes < floor:
        raise ValueError(f"nodes={nodes} below the resolution floor 8/delta={floor}")
    spec = f.spectral()
    sq = _midpoint_square(spec, delta, profile, a, b, nodes)
    out = Field(f.grid, np.sqrt(sq).astype(complex))
    if not return_resolution:
        return out
    fine = _midpoint_square(spec, delta, profile, a, b, 2 * nodes)
    scale = max(float(fine.max()), 1e-300)
    return out, float(np.max(np.abs(fine - sq)) / scale)


def stein_square(f: Field, alpha: float, t_interval=(0.5, 2.0), nodes: int = 256) -> Field:
    """(integral of |d/dt R_t^alpha f|^2 t dt)^(1/2) with the exact t-derivative symbol."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1: the t-derivative symbol "
                         "2 alpha |xi|^2 t^-3 (1 - |xi|^2/t^2)^(alpha-1) is unbounded otherwise")
    a, b = t_interval
    if not 0 < a < b:
        raise ValueError("t_interval must be a finite subinterval of (0, inf)")
    spec = f.spectral()
    s = f.grid.xi_sq
    h = (b - a) / nodes
    acc = np.zeros(f.grid.shape)
    for i in range(nodes):
        t = a + (i + 0.5) * h
        base = 1 - s / (t * t)
        m = np.where(base > 0, 2 * alpha * s / t ** 3 * np.abs(base) ** (alpha - 1), 0.0)
        if not m.any():
            continue
        v = Field(f.grid, spec.values * m, SPECTRAL).spatial().values
        acc += (v.real ** 2 + v.imag ** 2) * t
    return Field(f.grid, np.sqrt(acc * h).astype(complex))


@dataclass
class PointwiseReport:
    max_violation: float
    max_ratio: float
    slack: float
    scale: float
    nodes: int

    @property
    def holds(self) -> bool:
        return self.max_violation <= self.slack


def square_function_pointwise(f: Field, delta: float, profile: SmoothBump,
                              nodes: Optional[int] = None) -> PointwiseReport:
    """Compare D f with delta^(-1/2) (S^phi f + S^phi' f) at every grid point.

    D sums over rho in delta*Z within [1/2, 1]; both continuous square
    functions integrate over [1/2, 2].
    """
    floor = math.ceil(32 / delta)
    nodes = math.ceil(48 / delta) if nodes is None else int(nodes)
    if nodes < floor:
        raise ValueError(f"nodes={nodes} below 32/delta={floor}")
    lhs = square_discrete(f, delta, profile).values.real
    dphi = derivative_bump(profile)
    s0 = square_continuous(f, delta, profile, (0.5, 2.0), nodes).values.real
    s1 = square_continuous(f, delta, dphi, (0.5, 2.0), nodes).values.real
    rhs = delta ** -0.5 * (s0 + s1)
    scale = float(max(rhs.max(), lhs.max()))
    slack = 1e-6 * scale
    viol = float((lhs - rhs).max()) if lhs.size else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, 0.0)
    return PointwiseReport(max(viol, 0.0), float(ratio.max()), slack, scale, nodes)
