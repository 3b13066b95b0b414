"""Bilinear multipliers: exact pair summation, dyadic pieces, shell products,
and the Taylor-moment reconstruction of a dyadic piece from shell windows."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .bumps import SmoothBump, affine, moment_bump
from .grid import SPECTRAL, Field, TorusGrid
from .linear import profile_on

PAIR_BUDGET = 2 ** 34
_CHUNK = 1 << 22


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class BilinearSymbol:
    """m(xi, eta) on the product lattice.

    ``tag`` is "radial-sum" (a function of w = |xi|^2 + |eta|^2, given by
    ``radial`` and vanishing outside ``w_support``), "separable-sum" or
    "general".  ``evaluator(xi, eta)`` takes tuples of coordinate arrays.
    """

    evaluator: Callable
    tag: str = "general"
    radial: Optional[Callable[[np.ndarray], np.ndarray]] = None
    w_support: Optional[tuple] = None
    name: str = ""


def radial_sum_symbol(profile: Callable[[np.ndarray], np.ndarray], w_support: tuple,
                      name: str = "") -> BilinearSymbol:
    def ev(xi, eta):
        return profile(sum(x * x for x in xi) + sum(y * y for y in eta))

    return BilinearSymbol(ev, "radial-sum", profile, w_support, name)


def unit_symbol() -> BilinearSymbol:
    return BilinearSymbol(lambda xi, eta: np.ones(np.broadcast_shapes(xi[0].shape, eta[0].shape)),
                          "separable-sum", name="one")


def bochner_riesz_bilinear_symbol(alpha: float) -> BilinearSymbol:
    def prof(w):
        base = 1.0 - w
        return np.where(base > 0, np.abs(base) ** alpha, 0.0)

    return radial_sum_symbol(prof, (0.0, 1.0), f"bochner_riesz(alpha={alpha})")


def btilde_symbol(delta: float, psi: SmoothBump) -> BilinearSymbol:
    def prof(w):
        t = (1.0 - w) / delta
        out = np.zeros(np.shape(w))
        mask = (t > psi.support[0]) & (t < psi.support[1])
        out[mask] = psi(t[mask])
        return out

    return radial_sum_symbol(prof, (1 - psi.support[1] * delta, 1 - psi.support[0] * delta),
                             f"btilde(delta={delta})")


def btilde_zero_symbol(psi0: SmoothBump) -> BilinearSymbol:
    def prof(w):
        out = np.zeros(np.shape(w))
        mask = (w >= 0) & (w < psi0.support[1])
        out[mask] = psi0(w[mask])
        return out

    return radial_sum_symbol(prof, (0.0, psi0.support[1]), "btilde_zero")


def shell_sum_symbol(delta: float, varrho: float, phi1: SmoothBump, phi2: SmoothBump) -> BilinearSymbol:
    """sum over rho in delta*Z within [0, 1] of phi1((|xi|^2 - rho)/delta) phi2((|eta|^2 - (varrho - rho))/delta)."""
    rhos = shell_centres(delta)

    def ev(xi, eta):
        s = sum(x * x for x in xi)
        u = sum(y * y for y in eta)
        s, u = np.broadcast_arrays(s, u)
        out = np.zeros(s.shape)
        for rho in rhos:
            a = profile_on(s, rho, delta, phi1)
            if a.any():
                out += a * profile_on(u, varrho - rho, delta, phi2)
        return out

    return BilinearSymbol(ev, "separable-sum", name=f"shell_sum(delta={delta}, varrho={varrho})")


def shell_centres(delta: float, lo: float = 0.0, hi: float = 1.0) -> list[float]:
    j0, j1 = math.ceil(lo / delta - 1e-9), math.floor(hi / delta + 1e-9)
    return [j * delta for j in range(j0, j1 + 1)]


def _support(spec: Field):
    flat = spec.values.ravel()
    idx = np.flatnonzero(flat)
    return idx, flat[idx]


def _positions(grid: TorusGrid, flat_idx: np.ndarray) -> tuple:
    return np.unravel_index(flat_idx, grid.shape)


def bilinear_exact(f: Field, g: Field, symbol: BilinearSymbol, budget: int = PAIR_BUDGET) -> Field:
    """sum over xi + eta = zeta of m(xi, eta) f^(xi) g^(eta) / L^d, then one inverse transform.

    Only frequencies where f^ and g^ are nonzero enter.  Radial-sum symbols are
    tabulated on the exact integer values of L^2 (|xi|^2 + |eta|^2) and only
    pairs inside the symbol's support window are visited.
    """
    grid = f.grid
    if g.grid != grid:
        raise ValueError("f and g live on different grids")
    F, G = f.spectral(), g.spectral()
    fi, fv = _support(F)
    gi, gv = _support(G)
    pairs = fi.size * gi.size
    if pairs > budget:
        raise BudgetExceeded(f"{pairs} frequency pairs exceed the budget {budget}; "
                             "use bilinear_shell_product for this configuration")
    out = np.zeros(grid.N ** grid.d, dtype=complex)
    if pairs:
        if symbol.tag == "radial-sum" and symbol.radial is not None:
            _accumulate_radial(grid, fi, fv, gi, gv, symbol, out)
        else:
            _accumulate_general(grid, fi, fv, gi, gv, symbol, out)
    out *= grid.dxi ** grid.d
    return Field(grid, out.reshape(grid.shape), SPECTRAL).spatial()


def _sum_index(grid: TorusGrid, pf: tuple, pg: tuple) -> np.ndarray:
    idx = np.zeros(np.broadcast_shapes(pf[0].shape, pg[0].shape), dtype=np.int64)
    for a, b in zip(pf, pg):
        idx = idx * grid.N + (a + b) % grid.N
    return idx


def _bincount(out: np.ndarray, idx: np.ndarray, w: np.ndarray) -> None:
    n = out.size
    out += np.bincount(idx, weights=w.real, minlength=n)
    out += 1j * np.bincount(idx, weights=w.imag, minlength=n)


def _accumulate_general(grid, fi, fv, gi, gv, symbol, out):
    pf, pg = _positions(grid, fi), _positions(grid, gi)
    kax = grid.index_axis
    xf = tuple(kax[p] * grid.dxi for p in pf)
    xg = tuple(kax[p] * grid.dxi for p in pg)
    step = max(1, _CHUNK // max(gi.size, 1))
    for s in range(0, fi.size, step):
        sl = slice(s, s + step)
        m = symbol.evaluator(tuple(x[sl, None] for x in xf), tuple(y[None, :] for y in xg))
        w = m * fv[sl, None] * gv[None, :]
        idx = _sum_index(grid, tuple(p[sl, None] for p in pf), tuple(p[None, :] for p in pg))
        _bincount(out, idx.ravel(), w.ravel())


def _accumulate_radial(grid, fi, fv, gi, gv, symbol, out):
    L2 = grid.L ** 2
    nf = grid.index_sq.ravel()[fi]
    ng = grid.index_sq.ravel()[gi]
    lo_w, hi_w = symbol.w_support
    lo_n, hi_n = math.floor(lo_w * L2) - 1, math.ceil(hi_w * L2) + 1
    top = int(nf.max() + ng.max())
    lo_n, hi_n = max(lo_n, 0), min(hi_n, top)
    if hi_n < lo_n:
        return
    table = np.asarray(symbol.radial(np.arange(lo_n, hi_n + 1) / L2), dtype=complex)
    order = np.argsort(ng, kind="stable")
    ng_s, gi_s, gv_s = ng[order], gi[order], gv[order]
    pg = _positions(grid, gi_s)
    forder = np.argsort(nf, kind="stable")
    nf, fi, fv = nf[forder], fi[forder], fv[forder]
    pf = _positions(grid, fi)
    start = 0
    while start < fi.size:
        # grow a block of f points whose combined eta window stays modest
        stop = start + 1
        a = np.searchsorted(ng_s, lo_n - nf[start], "left")
        while stop < fi.size:
            b = np.searchsorted(ng_s, hi_n - nf[start], "right")
            a2 = np.searchsorted(ng_s, lo_n - nf[stop], "left")
            if (stop - start + 1) * (b - a2 + 1) > _CHUNK:
                break
            a = a2
            stop += 1
        b = np.searchsorted(ng_s, hi_n - nf[start], "right")
        if b > a:
            sl = slice(start, stop)
            gsl = slice(a, b)
            n = nf[sl, None] + ng_s[None, gsl]
            ok = (n >= lo_n) & (n <= hi_n)
            m = np.where(ok, table[np.clip(n - lo_n, 0, hi_n - lo_n)], 0.0)
            w = m * fv[sl, None] * gv_s[None, gsl]
            idx = _sum_index(grid, tuple(p[sl, None] for p in pf), tuple(p[None, gsl] for p in pg))
            _bincount(out, idx[ok], w[ok])
        start = stop


def btilde_delta(f: Field, g: Field, delta: float, psi: SmoothBump, budget: int = PAIR_BUDGET) -> Field:
    return bilinear_exact(f, g, btilde_symbol(delta, psi), budget)


def btilde_zero(f: Field, g: Field, psi0: SmoothBump, budget: int = PAIR_BUDGET) -> Field:
    return bilinear_exact(f, g, btilde_zero_symbol(psi0), budget)


def bochner_riesz_bilinear(f: Field, g: Field, alpha: float, budget: int = PAIR_BUDGET) -> Field:
    return bilinear_exact(f, g, bochner_riesz_bilinear_symbol(alpha), budget)


class _SparseSpectrum:
    """Nonzero spectral samples of a field with their |xi|^2, for cheap shell filters."""

    def __init__(self, f: Field):
        self.grid = f.grid
        spec = f.spectral()
        self.idx, self.vals = _support(spec)
        self.sq = f.grid.xi_sq.ravel()[self.idx]

    def shell(self, rho: float, delta: float, profile: SmoothBump) -> Optional[np.ndarray]:
        lo, hi = profile.support
        t = (self.sq - rho) / delta
        mask = (t > lo) & (t < hi)
        if not mask.any():
            return None
        m = profile(t[mask])
        if not np.any(m):
            return None
        out = np.zeros(self.grid.N ** self.grid.d, dtype=complex)
        out[self.idx[mask]] = self.vals[mask] * m
        return Field(self.grid, out.reshape(self.grid.shape), SPECTRAL).spatial().values


def _shell_pairs(f: Field, g: Field, delta: float, varrho: float, phi1: SmoothBump,
                 phi2: SmoothBump, rho_step: Optional[float] = None):
    if g.grid != f.grid:
        raise ValueError("f and g live on different grids")
    step = delta if rho_step is None else rho_step
    F = _SparseSpectrum(f)
    G = F if g is f else _SparseSpectrum(g)
    # with g = f and equal profiles each shell is needed twice; keep one copy
    shared = G is F and phi1 is phi2
    cache: dict = {}

    def shell(S, c, prof):
        if not shared:
            return S.shell(c, delta, prof)
        key = round(c / delta, 6)
        if key not in cache:
            cache[key] = S.shell(c, delta, prof)
        return cache[key]

    for rho in shell_centres(step):
        a = shell(F, rho, phi1)
        if a is None:
            continue
        b = shell(G, varrho - rho, phi2)
        if b is None:
            continue
        yield rho, a, b


def bilinear_shell_product(f: Field, g: Field, delta: float, varrho: float, phi1: SmoothBump,
                           phi2: SmoothBump) -> Field:
    """sum over rho in delta*Z within [0, 1] of S_rho^phi1 f * S_(varrho - rho)^phi2 g."""
    if not 0.5 <= varrho <= 2:
        raise ValueError("varrho must lie in [1/2, 2]")
    if not 0 < delta <= 0.125:
        raise ValueError("delta must lie in (0, 1/8]")
    acc = np.zeros(f.grid.shape, dtype=complex)
    for _, a, b in _shell_pairs(f, g, delta, varrho, phi1, phi2):
        acc += a * b
    return Field(f.grid, acc)


def cauchy_schwarz_factors(f: Field, g: Field, delta: float, varrho: float, phi1: SmoothBump,
                           phi2: SmoothBump):
    """(B, (sum |S_rho f|^2)^(1/2), (sum |S_(varrho-rho) g|^2)^(1/2)) over the same rho set."""
    acc = np.zeros(f.grid.shape, dtype=complex)
    sf = np.zeros(f.grid.shape)
    sg = np.zeros(f.grid.shape)
    F, G = _SparseSpectrum(f), _SparseSpectrum(g)
    for rho in shell_centres(delta):
        a = F.shell(rho, delta, phi1)
        b = G.shell(varrho - rho, delta, phi2)
        if a is not None:
            sf += a.real ** 2 + a.imag ** 2
        if b is not None:
            sg += b.real ** 2 + b.imag ** 2
        if a is not None and b is not None:
            acc += a * b
    return Field(f.grid, acc), np.sqrt(sf), np.sqrt(sg)


@dataclass
class ReconstructionReport:
    delta: float
    epsilon: float
    delta_tilde: float
    N: int
    varrho: list
    coefficients: list
    sup_error: float
    remainder_rms: float
    partition_error: float
    active_points: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _window_terms(s, u, delta, epsilon, varrho_lo, varrho_hi, phi):
    """Yield (a, b, weight, varrho) for every active (rho, varrho) window at each (s, u)."""
    dt = delta ** (1 + epsilon)
    lo, hi = phi.support
    kr = np.floor(s / dt)
    for dr in range(int(math.floor(lo)), int(math.ceil(hi)) + 1):
        rho = (kr + dr) * dt
        a = (rho - s) / dt
        pa = phi(a)
        kv = np.floor((rho + u) / dt)
        for dv in range(int(math.floor(lo)) - 1, int(math.ceil(hi)) + 2):
            vr = (kv + dv) * dt
            b = (vr - rho - u) / dt
            pb = phi(b)
            ok = (rho >= 0) & (rho <= 1) & (vr >= varrho_lo) & (vr <= varrho_hi) & (pa * pb > 0)
            if ok.any():
                yield ok, a, b, pa * pb, vr


def taylor_reconstruct(delta: float, epsilon: float, N: int, psi: SmoothBump, phi: SmoothBump,
                       samples: int = 1201, grid: Optional[TorusGrid] = None) -> ReconstructionReport:
    """Symbol-level check of the Taylor-moment expansion of a dyadic piece.

    With dt = delta^(1+eps), a = (rho - s)/dt and b = (varrho - rho - u)/dt,
    psi((1 - s - u)/delta) is compared with

        sum over windows of phi(a) phi(b) sum_{beta+gamma<=N}
            psi^(beta+gamma)((1 - varrho)/delta) delta^(eps(beta+gamma)) a^beta b^gamma / (beta! gamma!)

    which is the moment expansion with C_{beta,gamma} (2 pi i)^-(beta+gamma) folded
    together.  (s, u) run over the squared radii of ``grid`` (below 1) or,
    by default, a uniform sampling of [0, 1]^2.
    """
    if not 0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if N > psi.n_max:
        raise ValueError(f"derivative order {N} exceeds the bump's n_max={psi.n_max}")
    dt = delta ** (1 + epsilon)
    vlo, vhi = 1 - 4 * delta, 1 + 2 * delta
    if grid is None:
        axis = np.linspace(0.0, 1.0, samples)
    else:
        axis = np.unique(grid.xi_sq.ravel())
        axis = axis[axis <= 1.0]
    S, U = np.meshgrid(axis, axis, indexing="ij")
    S, U = S.ravel(), U.ravel()
    near = (S + U >= vlo - 2 * dt) & (S + U <= vhi + 2 * dt)
    S, U = S[near], U[near]
    exact = psi((1.0 - S - U) / delta)
    approx = np.zeros_like(S)
    weight = np.zeros_like(S)
    scale = delta ** epsilon
    for ok, a, b, w, vr in _window_terms(S, U, delta, epsilon, vlo, vhi, phi):
        c = (1.0 - vr[ok]) / delta
        D = psi.derivatives(c, N)
        x = scale * (a[ok] + b[ok])
        taylor = np.zeros(c.shape)
        for m in range(N + 1):
            taylor += D[m] * x ** m / math.factorial(m)
        approx[ok] += w[ok] * taylor
        weight[ok] += w[ok]
    active = weight > 0
    err = np.abs(exact - approx)[active]
    on_psi = exact != 0
    part = float(np.max(np.abs(weight[on_psi] - 1.0))) if on_psi.any() else 0.0
    j0, j1 = math.ceil(vlo / dt - 1e-9), math.floor(vhi / dt + 1e-9)
    varrho = [j * dt for j in range(j0, j1 + 1)]
    D = psi.derivatives(np.array([(1 - v) / delta for v in varrho]), N)
    coeffs = [[[float(D[b + g_, i] / (math.factorial(b) * math.factorial(g_))) if b + g_ <= N else 0.0
                for g_ in range(N + 1)] for b in range(N + 1)] for i in range(len(varrho))]
    return ReconstructionReport(delta, epsilon, dt, N, varrho, coeffs,
                                float(err.max()) if err.size else 0.0,
                                float(np.sqrt(np.mean(err ** 2))) if err.size else 0.0,
                                part, int(active.sum()))


def taylor_expansion_operator(f: Field, g: Field, delta: float, epsilon: float, N: int,
                              psi: SmoothBump, phi: SmoothBump) -> Field:
    """Operator form of the expansion: moment-weighted shell products at resolution dt.

    The window variable a = (rho - |xi|^2)/dt is the reflection of the shell
    variable, so the moment profiles enter as t -> (-t)^beta phi(-t).
    """
    dt = delta ** (1 + epsilon)
    vlo, vhi = 1 - 4 * delta, 1 + 2 * delta
    j0, j1 = math.ceil(vlo / dt - 1e-9), math.floor(vhi / dt + 1e-9)
    profiles = [affine(moment_bump(phi, k), -1.0) for k in range(N + 1)]
    F, G = _SparseSpectrum(f), _SparseSpectrum(g)
    acc = np.zeros(f.grid.shape, dtype=complex)
    rhos = shell_centres(dt)
    f_shells = {}
    for i, rho in enumerate(rhos):
        vals = [F.shell(rho, dt, p) for p in profiles]
        if any(v is not None for v in vals):
            f_shells[i] = vals
    for j in range(j0, j1 + 1):
        vr = j * dt
        D = psi.derivatives(np.array([(1 - vr) / delta]), N)[:, 0]
        for i, fa in f_shells.items():
            gb = [G.shell(vr - rhos[i], dt, p) for p in profiles]
            for beta in range(N + 1):
                if fa[beta] is None:
                    continue
                for gamma in range(N + 1 - beta):
                    if gb[gamma] is None:
                        continue
                    c = D[beta + gamma] * delta ** (epsilon * (beta + gamma)) / (
                        math.factorial(beta) * math.factorial(gamma))
                    acc += c * fa[beta] * gb[gamma]
    return Field(f.grid, acc)


@dataclass
class KernelDecayReport:
    delta: float
    tau: float
    constant: float
    decay_length_y: float
    decay_length_z: float
    location: tuple


@dataclass(frozen=True, eq=False)
class SeparableSymbol:
    """sum_i a_i(xi) b_i(eta) with each factor an array-valued function of the grid."""

    factors: list = dc_field(default_factory=list)


def tensor_bump_symbol(delta: float, tau: float, rho: float, sigma: float, phi: SmoothBump,
                       dilation: float = 1.0) -> SeparableSymbol:
    """a(xi) b(eta) with a = e^{2 pi i tau A} phi(A), A = (rho - |xi/lam|^2)/delta, b likewise.

    Each factor has k-th derivatives of size (1 + |tau|)^k delta^-k.
    """

    def factor(centre):
        def ev(grid: TorusGrid):
            A = (centre - grid.xi_sq / dilation ** 2) / delta
            return profile_on(-A, 0.0, 1.0, phi) * np.exp(2j * np.pi * tau * A)
        return ev

    return SeparableSymbol([(factor(rho), factor(sigma))])


def separable_kernel_check(m_sample: SeparableSymbol, delta: float, tau: float,
                           grid: TorusGrid) -> KernelDecayReport:
    """Kernel K(y, z) = sum_i a_i^vee(y) b_i^vee(z) fitted against
    (1 + delta|y|)^(-d-1/2) (1 + delta|z|)^(-d-1/2)."""
    from .linear import _check_wraparound

    d = grid.d
    ay, bz = [], []
    for a, b in m_sample.factors:
        A = Field(grid, np.asarray(a(grid), dtype=complex), SPECTRAL).spatial().values
        B = Field(grid, np.asarray(b(grid), dtype=complex), SPECTRAL).spatial().values
        _check_wraparound(A, grid)
        _check_wraparound(B, grid)
        ay.append(A.ravel())
        bz.append(B.ravel())
    r = grid.x_norm.ravel()
    env = (1 + delta * r) ** (-d - 0.5)
    if len(ay) == 1:
        ra, rb = np.abs(ay[0]) / env, np.abs(bz[0]) / env
        i, j = int(np.argmax(ra)), int(np.argmax(rb))
        const = float(ra[i] * rb[j])
        ky, kz = np.abs(ay[0]), np.abs(bz[0])
    else:
        K = sum(np.outer(a, b) for a, b in zip(ay, bz))
        ratio = np.abs(K) / np.outer(env, env)
        i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        const = float(ratio[i, j])
        ky, kz = np.abs(K).max(axis=1), np.abs(K).max(axis=0)
    w_y, w_z = ky ** 2, kz ** 2
    len_y = float(np.sqrt(np.sum(r * r * w_y) / np.sum(w_y)))
    len_z = float(np.sqrt(np.sum(r * r * w_z) / np.sum(w_z)))
    return KernelDecayReport(delta, tau, const, len_y, len_z, (float(r[i]), float(r[j])))
