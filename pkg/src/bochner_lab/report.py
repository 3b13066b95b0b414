"""Output helpers: CSV and JSON with provenance, config hashing, and small SVG plots."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance(config: dict) -> dict:
    import numpy
    import scipy

    return {"config_hash": config_hash(config), "bochner_lab": __version__,
            "numpy": numpy.__version__, "scipy": scipy.__version__}


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, (float, np.floating)):
        return "inf" if math.isinf(x) else f"{float(x):.12g}"
    return str(x)


def write_csv(path, rows: Sequence[dict], header: Sequence[str], prov: dict) -> Path:
    """Comma-separated, UTF-8, one comment line with the provenance, then the header row."""
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={v}" for k, v in prov.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row[h]) for h in header])
    path = Path(path)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def write_json(path, payload: dict, prov: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable({"provenance": prov, **payload}), indent=2, sort_keys=True)
                    + "\n", encoding="utf-8")
    return path


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed element ids and no timestamp, so identical data gives identical files
    matplotlib.rcParams["svg.hashsalt"] = "bochner_lab"
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    return plt, fig, ax


def _save(plt, fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


_REGION_COLORS = {"D1": "#9ecae1", "D2": "#fdae6b", "D3": "#a1d99b"}


def _region_panel(ax, rows: Sequence[dict], step: float) -> None:
    from matplotlib.colors import ListedColormap
    from matplotlib.patches import Patch

    us = sorted({r["u"] for r in rows})
    vs = sorted({r["v"] for r in rows})
    index = {"D1": 0, "D2": 1, "D3": 2}
    reg = np.zeros((len(vs), len(us)))
    alpha = np.zeros_like(reg)
    for r in rows:
        i, j = vs.index(r["v"]), us.index(r["u"])
        reg[i, j] = index[r["region"]]
        alpha[i, j] = r["alpha"]
    cmap = ListedColormap([_REGION_COLORS[k] for k in ("D1", "D2", "D3")])
    h = step / 2
    ax.imshow(reg, origin="lower", extent=(us[0] - h, us[-1] + h, vs[0] - h, vs[-1] + h),
              cmap=cmap, vmin=-0.5, vmax=2.5, interpolation="nearest")
    cs = ax.contour(us, vs, alpha, levels=8, colors="k", linewidths=0.7)
    ax.clabel(cs, fontsize=7, fmt="%.2f")
    ax.legend(handles=[Patch(color=_REGION_COLORS[k], label=k) for k in ("D1", "D2", "D3")],
              loc="upper right", fontsize=8)
    ax.set_xlabel("1/p")
    ax.set_ylabel("1/q")
    ax.set_title("regions and threshold contours", fontsize=10)


def atlas_svg(path, rows: Sequence[dict], step: float, xs, series: Iterable[tuple],
              title: str) -> Path:
    """Region map beside the diagonal threshold curves; ``series`` holds (label, ys, style)."""
    plt, fig, _ = _figure()
    plt.close(fig)
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4.4))
    _region_panel(left, rows, step)
    for label, ys, style in series:
        right.plot(xs, ys, style, label=label)
    right.set_xlabel("1/p on the diagonal p = q, r = p/2")
    right.set_ylabel("alpha")
    right.set_title("diagonal thresholds", fontsize=10)
    right.legend(fontsize=8)
    right.grid(alpha=0.3)
    fig.suptitle(title, fontsize=11)
    return _save(plt, fig, path)


def curves_svg(path, xs, series: Iterable[tuple], xlabel: str, ylabel: str, title: str) -> Path:
    """``series`` holds (label, ys, style) tuples."""
    plt, fig, ax = _figure()
    for label, ys, style in series:
        ax.plot(xs, ys, style, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(plt, fig, path)


def loglog_svg(path, xs, ys, slope: float, intercept: float, xlabel: str, ylabel: str,
               title: str) -> Path:
    """Scatter on log-log axes with the fitted line log y = slope log x + intercept."""
    plt, fig, ax = _figure()
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    good = ys > 0
    ax.loglog(xs[good], ys[good], "o", color="#08519c", label="estimate")
    if math.isfinite(slope) and good.any():
        xx = np.geomspace(xs[good].min(), xs[good].max(), 50)
        ax.loglog(xx, np.exp(intercept) * xx ** slope, "--", color="#e6550d",
                  label=f"fit, slope {slope:.3f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    return _save(plt, fig, path)
