"""Periodic grids, calibrated Fourier transforms, L^p norms and multipliers.

Conventions: f^(xi) = integral of exp(-2 pi i x.xi) f(x) dx.  The forward
transform multiplies the DFT by the cell volume (L/N)^d and the inverse
divides by L^d, so spectral samples approximate the continuum transform.
Arrays are kept in FFT ordering throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import fft as sfft

SPATIAL = "spatial"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class TorusGrid:
    d: int
    L: float
    N: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("grids support d = 1 or 2")
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dxi(self) -> float:
        return 1.0 / self.L

    @property
    def nyquist(self) -> float:
        return self.N / (2 * self.L)

    @property
    def cell(self) -> float:
        return self.dx ** self.d

    @cached_property
    def index_axis(self) -> np.ndarray:
        """Signed integer frequency (or position) index in FFT ordering."""
        return np.fft.fftfreq(self.N, 1.0 / self.N).astype(np.int64)

    def _open(self, axis: np.ndarray) -> tuple:
        if self.d == 1:
            return (axis,)
        return (axis[:, None], axis[None, :])

    @cached_property
    def x(self) -> tuple:
        return self._open(self.index_axis * self.dx)

    @cached_property
    def xi(self) -> tuple:
        return self._open(self.index_axis * self.dxi)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        """|xi|^2 on the full lattice."""
        return self.index_sq * (self.dxi ** 2)

    @cached_property
    def index_sq(self) -> np.ndarray:
        """Integer |k|^2 with xi = k / L; exact, used for table lookups."""
        k = self._open(self.index_axis)
        out = np.zeros(self.shape, dtype=np.int64)
        for ki in k:
            out = out + ki * ki
        return out

    @cached_property
    def x_norm(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for xi in self.x:
            r2 = r2 + xi * xi
        return np.sqrt(r2)

    def to_dict(self) -> dict:
        return {"d": self.d, "L": self.L, "N": self.N}


@dataclass(frozen=True, eq=False)
class Field:
    grid: TorusGrid
    values: np.ndarray
    tag: str = SPATIAL
    seed: Optional[int] = None

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"samples of shape {self.values.shape} do not match grid {self.grid.shape}")
        if self.tag not in (SPATIAL, SPECTRAL):
            raise ValueError(f"unknown representation tag {self.tag!r}")
        self.values.flags.writeable = False

    def spatial(self) -> "Field":
        return self if self.tag == SPATIAL else transform_inverse(self)

    def spectral(self) -> "Field":
        return self if self.tag == SPECTRAL else transform_forward(self)

    def replace(self, values: np.ndarray, tag: Optional[str] = None) -> "Field":
        return Field(self.grid, values, tag or self.tag, self.seed)


def transform_forward(f: Field) -> Field:
    if f.tag != SPATIAL:
        raise ValueError("forward transform expects a spatial field")
    vals = sfft.fftn(f.values, workers=1) * f.grid.cell
    return Field(f.grid, vals, SPECTRAL, f.seed)


def transform_inverse(f: Field) -> Field:
    if f.tag != SPECTRAL:
        raise ValueError("inverse transform expects a spectral field")
    g = f.grid
    vals = sfft.ifftn(f.values, workers=1) * (g.N ** g.d / g.L ** g.d)
    return Field(g, vals, SPATIAL, f.seed)


def lp_norm(f: Field, p: float) -> float:
    """Riemann-sum L^p (quasi-)norm of the spatial samples; p may be < 1 or inf."""
    if not p > 0:
        raise ValueError("p must be positive")
    a = np.abs(f.spatial().values)
    if np.isinf(p):
        return float(a.max())
    if p == 2:
        return float(np.sqrt(f.grid.cell * np.vdot(a, a).real))
    return float((f.grid.cell * np.sum(a ** p)) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class FrequencySymbol:
    """Scalar multiplier; ``evaluator(grid)`` returns values on the frequency lattice."""

    evaluator: Callable[[TorusGrid], np.ndarray]
    name: str = ""
    support: Optional[Callable[[TorusGrid], np.ndarray]] = dc_field(default=None, repr=False)

    def on(self, grid: TorusGrid) -> np.ndarray:
        return np.broadcast_to(self.evaluator(grid), grid.shape)


def radial_symbol(profile: Callable[[np.ndarray], np.ndarray], name: str = "") -> FrequencySymbol:
    """Symbol depending on |xi|^2 only."""
    return FrequencySymbol(lambda g: profile(g.xi_sq), name)


def apply_symbol(f: Field, symbol, spectral_out: bool = False) -> Field:
    """Multiply the spectrum by ``symbol`` (a FrequencySymbol or an array)."""
    spec = f.spectral()
    m = symbol.on(f.grid) if isinstance(symbol, FrequencySymbol) else symbol
    out = Field(f.grid, spec.values * m, SPECTRAL, f.seed)
    return out if spectral_out else out.spatial()


def random_bandlimited(grid: TorusGrid, radius: float, seed: int, inner: float = -1.0) -> Field:
    """I.i.d. standard complex Gaussian spectrum on inner < |xi| <= radius.

    The default inner bound keeps the zero frequency, so radius 0 gives a
    constant field.
    """
    if radius > grid.nyquist:
        raise ValueError("radius exceeds the Nyquist band")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) / np.sqrt(2)
    r = np.sqrt(grid.xi_sq)
    mask = (r <= radius) & (r > inner)
    return Field(grid, np.where(mask, z, 0.0), SPECTRAL, seed)


def write_field(path, f: Field) -> tuple:
    """Flat little-endian complex64 samples plus a JSON sidecar; returns both paths."""
    path = Path(path)
    try:
        path.write_bytes(np.ascontiguousarray(f.values, dtype="<c8").tobytes())
        side = path.with_suffix(path.suffix + ".json")
        side.write_text(json.dumps({**f.grid.to_dict(), "tag": f.tag, "seed": f.seed}, indent=2))
    except OSError as exc:
        raise OSError(f"cannot write field snapshot {path}: {exc}") from exc
    return path, side


def read_field(path) -> Field:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = TorusGrid(meta["d"], meta["L"], meta["N"])
    vals = np.frombuffer(path.read_bytes(), dtype="<c8").astype(complex).reshape(grid.shape)
    return Field(grid, vals, meta["tag"], meta["seed"])
