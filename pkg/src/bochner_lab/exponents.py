"""Exponent atlas: smoothness thresholds for the bilinear Bochner-Riesz problem.

Exponents are given as reciprocals u = 1/p, v = 1/q in [0, 1]; ``math.inf``
stands for p = infinity and ``1 / math.inf == 0`` does the rest.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

INF = math.inf


class Region(enum.Enum):
    DELTA1 = "D1"
    DELTA2 = "D2"
    DELTA3 = "D3"


@dataclass(frozen=True)
class ExponentResult:
    region: Region
    alpha: float
    beta_u: float
    beta_v: float


@dataclass(frozen=True)
class ThresholdRecord:
    name: str
    value: float
    applies: bool


def _check_dim(d: int) -> None:
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")


def beta_star(u: float, d: int) -> float:
    """(d - 1)/2 - u d."""
    _check_dim(d)
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    return (d - 1) / 2 - u * d


def p_thresholds(d: int) -> tuple[float, float]:
    """(p_0(d), p_s(d)) with p_s = min(p_0, 2(d+2)/d); p_0(2) is infinite."""
    _check_dim(d)
    if d < 2:
        raise ValueError("p thresholds are defined for d >= 2")
    denom = 4 * d - 6 - d % 3
    p0 = INF if denom == 0 else 2 + 12 / denom
    return p0, min(p0, 2 * (d + 2) / d)


def _check_square(u: float, v: float, nu: float) -> None:
    if not 0 < nu < 0.5:
        raise ValueError(f"nu must lie in (0, 1/2), got {nu}")
    for w in (u, v):
        if not 0.0 <= w <= 0.5:
            raise ValueError(f"reciprocal exponent {w} outside [0, 1/2]")


def classify_region(u: float, v: float, nu: float) -> Region:
    """Delta1 if both u, v <= nu, Delta2 if both >= nu, else Delta3; (nu, nu) is Delta1."""
    _check_square(u, v, nu)
    if u <= nu and v <= nu:
        return Region.DELTA1
    if u >= nu and v >= nu:
        return Region.DELTA2
    return Region.DELTA3


def alpha_nu(u: float, v: float, nu: float, d: int) -> ExponentResult:
    """Piecewise threshold over the square [0, 1/2]^2; the point (nu, nu) counts as Delta1."""
    _check_dim(d)
    if d < 2:
        raise ValueError("alpha_nu requires d >= 2")
    region = classify_region(u, v, nu)
    bn = beta_star(nu, d)
    if region is Region.DELTA1:
        a = (d - 1) - d * (u + v)
    elif region is Region.DELTA2:
        a = (2 - 2 * (u + v)) / (1 - 2 * nu) * bn
    else:
        a = max(beta_star(u, d), beta_star(v, d)) + bn * min((1 - 2 * u) / (1 - 2 * nu),
                                                              (1 - 2 * v) / (1 - 2 * nu))
    return ExponentResult(region, float(a), beta_star(u, d), beta_star(v, d))


def gamma_subcritical(p: float, q: float, r: float, d: int) -> float:
    """Sufficient smoothness for L^p x L^q -> L^r with 2 <= p, q <= infinity."""
    _check_dim(d)
    if d < 2:
        raise ValueError("requires d >= 2")
    if p < 2 or q < 2:
        raise ValueError("requires p, q >= 2")
    u, v, w = 1 / p, 1 / q, 1 / r
    if r < (d + 1) / (d - 1) or u + v < w - 1e-15:
        raise ValueError("outside theorem range")
    r1 = 2 * (d + 1) / (d - 1)
    inv_r2 = (d - 2) / (2 * d)
    base = beta_star(u, d) + beta_star(v, d)
    if w <= 1 / r1 + inv_r2:
        return base
    if w <= 2 / r1:
        return base - (d * d - d - 1) / (2 * (d + 1)) + d * w / 2
    raise ValueError("outside theorem range")


def necessary_alpha(p: float, q: float, d: int) -> float:
    """max((d-1)/2 - d/p - d/(2q), (d-1)/2 - d/q - d/(2p), 0)."""
    _check_dim(d)
    u, v = 1 / p, 1 / q
    h = (d - 1) / 2
    return max(h - d * u - d * v / 2, h - d * v - d * u / 2, 0.0)


def known_necessary_bgsy(p: float, q: float, r: float, d: int) -> list[ThresholdRecord]:
    """Two earlier necessary thresholds.

    (i)  d(1/r - 1) - 1/2, for every admissible triple.
    (ii) d|1/p - 1/2| - 1/2, for L^p x L^inf -> L^p (or the mirror), and for
         L^p x L^p' -> L^1.
    """
    _check_dim(d)
    u, v, w = 1 / p, 1 / q, 1 / r
    rec = [ThresholdRecord("i", d * (w - 1) - 0.5, True)]
    if v == 0 and math.isclose(u, w):
        rec.append(ThresholdRecord("ii", d * abs(u - 0.5) - 0.5, True))
    elif u == 0 and math.isclose(v, w):
        rec.append(ThresholdRecord("ii", d * abs(v - 0.5) - 0.5, True))
    elif math.isclose(u + v, 1.0) and math.isclose(w, 1.0):
        rec.append(ThresholdRecord("ii", d * abs(u - 0.5) - 0.5, True))
    else:
        rec.append(ThresholdRecord("ii", d * abs(u - 0.5) - 0.5, False))
    return rec


def alpha_prior_diagonal(u: float, d: int) -> float:
    """Earlier sufficient threshold on the diagonal L^p x L^p -> L^{p/2}, u = 1/p.

    Uses (d-1)(1 - 1/r) for 1 <= r <= 2 and (d-1)/2 + d(1/2 - 1/r) for r >= 2,
    taking the smaller value where both apply; u = 0 is the p -> infinity limit.
    """
    w = 2 * u
    options = []
    if 0.5 <= w <= 1.0:
        options.append((d - 1) * (1 - w))
    if w <= 0.5:
        options.append((d - 1) / 2 + d * (0.5 - w))
    return min(options)


def _lattice(step: float) -> list[float]:
    n = 0.5 / step
    if step <= 0 or abs(n - round(n)) > 1e-9:
        raise ValueError("step must divide 1/2")
    n = int(round(n))
    return [i * 0.5 / n for i in range(n + 1)]


def emit_region_data(d: int, nu: float, step: float) -> list[dict]:
    """Rows {u, v, region, alpha} on the lattice step*Z^2 within [0, 1/2]^2."""
    rows = []
    for u in _lattice(step):
        for v in _lattice(step):
            res = alpha_nu(u, v, nu, d)
            rows.append({"u": u, "v": v, "region": res.region.value, "alpha": res.alpha})
    return rows


def emit_boundary_curve(d: int, nu: float, step: float) -> list[dict]:
    """Diagonal comparison rows {inv_p, alpha_thm, alpha_prior}."""
    return [{"inv_p": u, "alpha_thm": alpha_nu(u, u, nu, d).alpha,
             "alpha_prior": alpha_prior_diagonal(u, d)} for u in _lattice(step)]


def _fmt(x) -> str:
    return f"{x:.12g}" if isinstance(x, float) else str(x)


def rows_to_csv(rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


REGION_HEADER = ["u", "v", "region", "alpha"]
CURVE_HEADER = ["inv_p", "alpha_thm", "alpha_prior"]
