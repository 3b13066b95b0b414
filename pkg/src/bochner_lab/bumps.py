"""Smooth bumps, dyadic pieces and Taylor remainders with exact derivatives.

Every bump is built from the smooth step

    H(x) = f(x) / (f(x) + f(1 - x)),    f(x) = exp(-1/x) for x > 0, else 0,

which is 0 for x <= 0, 1 for x >= 1 and C^infinity in between.  Values and
derivatives are produced together through truncated Taylor jets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .jets import Jet

N_MAX = 16
# exp(-1/x) is below the smallest subnormal once 1/x exceeds ~745.
_UNDERFLOW_X = 1.0 / 700.0


def _guarded(x: Jet, ok: np.ndarray) -> Jet:
    """Replace jets where ``ok`` is False by the constant jet 1."""
    unit = np.zeros_like(x.c)
    unit[0] = 1.0
    return Jet(np.where(ok, x.c, unit))


def _exp_neg_inv(x: Jet) -> Jet:
    """Jet of exp(-1/x), identically zero where x underflows or is <= 0."""
    ok = x.c[0] > _UNDERFLOW_X
    out = (-_guarded(x, ok).reciprocal()).exp()
    out.c *= ok
    return out


def step_jet(x: Jet) -> Jet:
    fx = _exp_neg_inv(x)
    fy = _exp_neg_inv(1.0 - x)
    out = fx / (fx + fy)
    # exact constants off the transition, so differences of steps vanish exactly
    out.c[:, ...] *= x.c[0] < 1.0
    out.c[0] = np.where(x.c[0] >= 1.0, 1.0, out.c[0])
    return out


def _positive_power(x: Jet, alpha: float) -> Jet:
    """x**alpha where x > 0; zero jet elsewhere."""
    ok = x.c[0] > 0
    out = _guarded(x, ok).power(alpha)
    out.c *= ok
    return out


@dataclass(frozen=True, eq=False)
class SmoothBump:
    """A real C^infinity function of one variable with exact derivatives.

    ``support`` is the closed interval outside of which the function is
    locally constant (zero for genuine bumps).
    """

    kind: str
    params: dict
    support: tuple
    builder: Callable[[Jet], Jet] = field(repr=False)
    n_max: int = N_MAX
    scale: float = 1.0

    def jet(self, t, order: int) -> Jet:
        if order > self.n_max:
            raise ValueError(f"derivative order {order} exceeds n_max={self.n_max}")
        return self.compose(Jet.variable(t, order))

    def compose(self, inner: Jet) -> Jet:
        """Jet of bump(inner) for an arbitrary inner jet."""
        out = self.builder(inner)
        if self.scale != 1.0:
            out = out * self.scale
        return out

    def __call__(self, t) -> np.ndarray:
        return self.jet(t, 0).c[0]

    def derivative(self, t, k: int) -> np.ndarray:
        return self.jet(t, k).derivative(k)

    def derivatives(self, t, order: int) -> np.ndarray:
        """Array of shape ``(order + 1, *t.shape)`` holding f, f', ..."""
        c = self.jet(t, order).c
        fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
        return c * fact.reshape((-1,) + (1,) * (c.ndim - 1))

    def scaled(self, factor: float) -> "SmoothBump":
        return SmoothBump(self.kind, self.params, self.support, self.builder,
                          self.n_max, self.scale * factor)

    def to_record(self) -> dict:
        return {"kind": self.kind, "parameters": dict(self.params, scale=self.scale)}


def from_record(record: dict) -> SmoothBump:
    params = dict(record["parameters"])
    scale = params.pop("scale", 1.0)
    kind = record["kind"]
    if "base" in params:
        params["base"] = from_record(params["base"])
    bump = _FACTORIES[kind](**params)
    return bump.scaled(scale) if scale != 1.0 else bump


def smooth_step() -> SmoothBump:
    return SmoothBump("smooth_step", {}, (0.0, 1.0), step_jet)


def standard_bump(a: float = -1.0, b: float = 1.0, sharpness: float = 1.0) -> SmoothBump:
    """exp(k (1 - 1/(1 - s^2))) on (a, b), s the affine map of (a, b) onto (-1, 1).

    k = ``sharpness``; larger k trades a narrower profile for a faster
    decaying Fourier tail.
    """
    if not b > a:
        raise ValueError("standard_bump requires a < b")
    if sharpness <= 0:
        raise ValueError("sharpness must be positive")
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    k = float(sharpness)

    def build(t: Jet) -> Jet:
        s = (t - mid) * (1.0 / half)
        z = (1.0 - s * s) * (1.0 / k)
        return _exp_neg_inv(z) * math.exp(k)

    return SmoothBump("standard", {"a": a, "b": b, "sharpness": sharpness}, (a, b), build)


def partition_phi() -> SmoothBump:
    """Even bump on (-5/8, 5/8) whose integer translates sum to one.

    phi(t) = Theta(2t + 1) - Theta(2t - 1) with Theta(s) = H(2s + 1/2).
    """

    def build(t: Jet) -> Jet:
        return step_jet(t * 4.0 + 2.5) - step_jet(t * 4.0 - 1.5)

    return SmoothBump("partition", {}, (-0.625, 0.625), build)


def dyadic_psi(alpha: float) -> SmoothBump:
    """psi(s) = s^alpha * eta(s), eta(s) = Theta~(s) - Theta~(2s), support (1/2, 2).

    Theta~(s) = 1 - H(s - 1) is 1 below 1 and 0 above 2, so the dyadic
    dilates of eta telescope to 1.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def build(s: Jet) -> Jet:
        eta = step_jet(s * 2.0 - 1.0) - step_jet(s - 1.0)
        return _positive_power(s, alpha) * eta

    return SmoothBump("dyadic_psi", {"alpha": alpha}, (0.5, 2.0), build)


def psi_zero(alpha: float) -> SmoothBump:
    """Low-frequency remainder (1 - t)^alpha * (1 - Theta~(2(1 - t))) for t >= 0.

    Supported in [0, 1/2]; taken as zero for t < 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def build(t: Jet) -> Jet:
        one_minus = 1.0 - t
        # same argument form as Theta~(2x) in dyadic_psi, so the sums telescope exactly
        out = _positive_power(one_minus, alpha) * step_jet(one_minus * 2.0 - 1.0)
        out.c *= t.c[0] >= 0
        return out

    return SmoothBump("psi_zero", {"alpha": alpha}, (0.0, 0.5), build)


def moment_bump(base: SmoothBump, beta: int) -> SmoothBump:
    """t^beta * base(t)."""
    if beta < 0 or int(beta) != beta:
        raise ValueError("beta must be a nonnegative integer")
    beta = int(beta)

    def build(t: Jet) -> Jet:
        return (t ** beta) * _compose(base, t)

    return SmoothBump("moment", {"base": base.to_record(), "beta": beta}, base.support, build,
                      base.n_max)


def affine(base: SmoothBump, factor: float, shift: float = 0.0) -> SmoothBump:
    """t -> base(factor * t + shift); factor = -1 gives the reflection."""
    if factor == 0:
        raise ValueError("factor must be nonzero")

    def build(t: Jet) -> Jet:
        return _compose(base, t * factor + shift)

    ends = sorted(((base.support[0] - shift) / factor, (base.support[1] - shift) / factor))
    return SmoothBump("affine", {"base": base.to_record(), "factor": factor, "shift": shift},
                      tuple(ends), build, base.n_max)


def _compose(base: SmoothBump, inner: Jet) -> Jet:
    return base.compose(inner)


_FACTORIES = {
    "smooth_step": smooth_step,
    "standard": standard_bump,
    "partition": partition_phi,
    "dyadic_psi": dyadic_psi,
    "psi_zero": psi_zero,
    "moment": moment_bump,
    "affine": affine,
}


def derivative_sups(bump: SmoothBump, order: int, samples: int = 4096) -> np.ndarray:
    """sup |bump^{(k)}| for k = 0..order on the support.

    Dense sampling locates each maximum; a Newton step on the next
    derivative then polishes it when that derivative is available.
    """
    a, b = bump.support
    t = np.linspace(a, b, samples)
    top = min(order + 2, bump.n_max)
    table = bump.derivatives(t, top)
    sups = np.empty(order + 1)
    for k in range(order + 1):
        vals = np.abs(table[k])
        i = int(np.argmax(vals))
        best = vals[i]
        if k + 2 <= top and best > 0:
            t0 = t[i]
            for _ in range(3):
                d = bump.derivatives(np.array([t0]), k + 2)[:, 0]
                if d[k + 2] == 0:
                    break
                t1 = t0 - d[k + 1] / d[k + 2]
                if not (a <= t1 <= b) or abs(t1 - t0) > (b - a) / samples:
                    break
                t0 = t1
            best = max(best, abs(bump.derivative(np.array([t0]), k)[0]))
        sups[k] = best
    return sups


def cn_normalize(bump: SmoothBump, N: int):
    """Rescale so that max_{k<=N} sup|bump^{(k)}| <= 1.

    Returns ``(normalized_bump, sups)`` where ``sups`` are the sup norms of
    the original bump.
    """
    if N > bump.n_max:
        raise ValueError(f"N={N} exceeds n_max={bump.n_max}")
    sups = derivative_sups(bump, N)
    peak = float(np.max(sups))
    if peak == 0:
        raise ValueError("degenerate bump: all derivatives vanish")
    return bump.scaled(min(1.0, 1.0 / peak)), sups


class TaylorRemainder:
    """E_N(t) = e^t - sum_{n<=N} t^n/n! for complex t, with all derivatives.

    E_N^{(k)} = E_{N-k} (and e^t once k > N).  The tail series is used for
    |t| <= 2 to avoid cancellation.
    """

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.N = N

    def to_record(self) -> dict:
        return {"kind": "taylor_remainder", "parameters": {"N": self.N}}

    def derivative(self, t, k: int) -> np.ndarray:
        t = np.asarray(t, dtype=complex)
        m = self.N - k
        if m < 0:
            return np.exp(t)
        small = np.abs(t) <= 2.0
        out = np.empty_like(t)
        ts = t[small]
        term = np.ones_like(ts)
        for n in range(1, m + 2):
            term = term * ts / n
        acc = term.copy()
        n = m + 1
        while True:
            n += 1
            term = term * ts / n
            acc += term
            if n > m + 60 or not np.any(np.abs(term) > 1e-18 * np.maximum(np.abs(acc), 1e-300)):
                break
        out[small] = acc
        tb = t[~small]
        poly = np.zeros_like(tb)
        term = np.ones_like(tb)
        for n in range(m + 1):
            if n:
                term = term * tb / n
            poly += term
        out[~small] = np.exp(tb) - poly
        return out

    def __call__(self, t) -> np.ndarray:
        return self.derivative(t, 0)

    def measured_constants(self, T: float, radial: int = 200, angular: int = 64) -> np.ndarray:
        """C_k = sup_{0<|t|<=T} |E^{(k)}(t)| / |t|^{N-k}, k = 0..N.

        The sup runs over a polar grid of the complex disk, which contains the
        imaginary segment used in the bilinear reconstruction.
        """
        r = np.linspace(T / radial, T, radial)
        th = np.linspace(0, 2 * np.pi, angular, endpoint=False)
        t = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
        t = np.concatenate([t, 1j * np.linspace(-T, T, 2 * radial + 1)])
        t = t[t != 0]
        out = np.empty(self.N + 1)
        for k in range(self.N + 1):
            out[k] = np.max(np.abs(self.derivative(t, k)) / np.abs(t) ** (self.N - k))
        return out


def taylor_remainder(N: int) -> TaylorRemainder:
    return TaylorRemainder(N)


def calibration_error(alpha: float, t: np.ndarray, k_min: int = -24, k_max: int = 1) -> float:
    """max |sum_{delta=2^k} delta^alpha psi(t/delta) - t^alpha| over the samples."""
    psi = dyadic_psi(alpha)
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for k in range(k_min, k_max + 1):
        delta = 2.0 ** k
        total += delta ** alpha * psi(t / delta)
    return float(np.max(np.abs(total - t ** alpha)))


def _taylor_compose(coeffs: np.ndarray, inner: Jet) -> Jet:
    """sum_j coeffs[j] * (inner - inner_0)^j as a jet (coeffs[j] = f^{(j)}(x0)/j!)."""
    dx = Jet(inner.c.copy())
    dx.c[0] = 0.0
    out = Jet.constant(0.0, inner.order, inner.c.shape[1:])
    power = Jet.constant(1.0, inner.order, inner.c.shape[1:])
    for j in range(inner.order + 1):
        out = out + power * coeffs[j]
        power = power * dx
    return out


def derivative_bump(base: SmoothBump, k: int = 1) -> SmoothBump:
    """The k-th derivative of ``base`` as a bump in its own right."""
    if k < 1:
        raise ValueError("k must be >= 1")

    def build(t: Jet) -> Jet:
        order = t.order
        c = base.jet(t.c[0], order + k).c
        # Taylor coefficients of f^{(k)} at x0: f^{(j+k)}(x0) / j!
        coeffs = np.stack([c[j + k] * math.factorial(j + k) / math.factorial(j)
                           for j in range(order + 1)])
        return _taylor_compose(coeffs, t)

    return SmoothBump("derivative", {"base": base.to_record(), "k": k}, base.support, build,
                      base.n_max - k)


_FACTORIES["derivative"] = derivative_bump
