"""Bessel functions of the first kind and the closed-form bilinear kernel."""

from __future__ import annotations

import math
from decimal import Decimal, localcontext

import numpy as np

_SERIES_FLOAT_MAX = 16.0
_HANKEL_MIN_TERMS = 6


def _series_float(nu: float, x: np.ndarray) -> np.ndarray:
    # J_nu(x) = (x/2)^nu / Gamma(nu+1) * sum_k (-x^2/4)^k / (k! (nu+1)_k)
    z = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 200):
        term = term * z / (k * (nu + k))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    pref = np.exp(nu * np.log(np.where(x > 0, x / 2.0, 1.0)) - math.lgamma(nu + 1.0))
    out = pref * total
    if nu > 0:
        out = np.where(x > 0, out, 0.0)
    return out


def _series_decimal(nu: float, x: float) -> float:
    """Same series summed in extended precision; the cancellation grows like e^x."""
    with localcontext() as ctx:
        ctx.prec = 40 + int(x * 0.45)
        X, NU = Decimal(x), Decimal(nu)
        z = -(X * X) / 4
        term = Decimal(1)
        total = Decimal(1)
        k = 0
        tiny = Decimal(10) ** (-30)
        while True:
            k += 1
            term = term * z / (k * (NU + k))
            total += term
            if abs(term) < tiny * abs(total) and k > x:
                break
    pref = math.exp(nu * math.log(x / 2.0) - math.lgamma(nu + 1.0))
    return pref * float(total)


def _hankel(nu: float, x: np.ndarray) -> np.ndarray:
    mu = 4.0 * nu * nu
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    a = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    live = np.ones(x.shape, dtype=bool)
    for k in range(1, 120):
        a = a * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        mag = np.abs(a)
        # asymptotic series: stop once terms stop shrinking (after the minimum count)
        if k > _HANKEL_MIN_TERMS:
            live &= (mag < prev) & (mag > 1e-17)
        if not live.any():
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            P = P + np.where(live, sign * a, 0.0)
        else:
            Q = Q + np.where(live, sign * a, 0.0)
        prev = mag
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi))


def bessel_j(nu: float, x):
    """J_nu(x) for nu >= 0 and x >= 0, scalar or array.

    Power series up to x = max(16, 2 nu), the Hankel expansion beyond.  The
    absolute error stays near 1e-10 for nu up to about 12.
    """
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("x must be nonnegative")
    flat = arr.ravel()
    out = np.empty_like(flat)
    cut = max(_SERIES_FLOAT_MAX, 2.0 * nu)
    small = flat <= _SERIES_FLOAT_MAX
    mid = (flat > _SERIES_FLOAT_MAX) & (flat <= cut)
    big = flat > cut
    if small.any():
        out[small] = _series_float(nu, flat[small])
    for i in np.flatnonzero(mid):
        out[i] = _series_decimal(nu, float(flat[i]))
    if big.any():
        out[big] = _hankel(nu, flat[big])
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def kernel_closed_form(w_norm, alpha: float, d: int):
    """Kernel of (1 - |zeta|^2)^alpha_+ on R^{2d} at radius |w|.

    Gamma(alpha+1) pi^-alpha |w|^-(d+alpha) J_{d+alpha}(2 pi |w|), with the
    limit Gamma(alpha+1) pi^d / Gamma(d+alpha+1) at the origin.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    r = np.asarray(w_norm, dtype=float)
    nu = d + alpha
    c = math.gamma(alpha + 1.0) * math.pi ** (-alpha)
    at_zero = math.gamma(alpha + 1.0) * math.pi ** d / math.gamma(d + alpha + 1.0)
    safe = np.where(r > 0, r, 1.0)
    val = c * safe ** (-nu) * bessel_j(nu, 2.0 * math.pi * safe)
    out = np.where(r > 0, val, at_zero)
    return float(out) if out.ndim == 0 else out


def kernel_slice_oracle(radius: float, alpha: float) -> float:
    """Independent value of the d = 1 kernel (a function on R^2) at radius r.

    Integrating (1 - xi1^2 - xi2^2)^alpha_+ over xi2 leaves
    B(1/2, alpha+1) (1 - xi1^2)^(alpha+1/2)_+, whose one-dimensional cosine
    transform at r is the kernel on the axis.  Evaluated by oscillatory
    adaptive quadrature.
    """
    from scipy import integrate, special

    beta = special.beta(0.5, alpha + 1.0)
    val, _ = integrate.quad(lambda t: (1.0 - t * t) ** (alpha + 0.5), 0.0, 1.0,
                            weight="cos", wvar=2.0 * math.pi * radius, limit=400)
    return 2.0 * beta * val
