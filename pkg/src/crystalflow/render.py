"""Deterministic SVG snapshots of polyrectangle and convex-front trajectories."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .forcing import ForcingField  # noqa: E402

_RC = {"svg.hashsalt": "crystalflow", "svg.fonttype": "none", "path.simplify": False}


def _outline(item) -> np.ndarray:
    if hasattr(item, "outline"):
        return np.asarray(item.outline)
    return np.asarray(item.vertices)


def _pick(frames: Sequence, t: float):
    ts = np.array([f.t for f in frames])
    return frames[int(np.argmin(np.abs(ts - t)))]


def _shade(ax, F: ForcingField, xlim) -> None:
    """Grey bands over the beta phase."""
    eps = F.epsilon
    k0, k1 = int(np.floor(xlim[0] / eps)) - 1, int(np.ceil(xlim[1] / eps)) + 1
    for k in range(k0, k1):
        ax.axvspan((k + 0.25) * eps, (k + 0.75) * eps, color="0.92", lw=0, zorder=0)


def render_svg(frames: Sequence, times: Iterable[float], prefix: str | Path,
               F: ForcingField | None = None, reference: Sequence | None = None) -> list[Path]:
    """Write one SVG per requested time (nearest stored frame).  Frames are
    trajectory samples or convex fronts; `reference` frames are overlaid
    dashed.  Output bytes depend only on the inputs."""
    times = list(times)
    if not times or not frames:
        return []
    allpts = np.vstack([_outline(f) for f in frames])
    lo, hi = allpts.min(0), allpts.max(0)
    pad = 0.05 * max(hi - lo) + 1e-9
    xlim, ylim = (lo[0] - pad, hi[0] + pad), (lo[1] - pad, hi[1] + pad)
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    out = []
    with plt.rc_context(_RC):
        for k, t in enumerate(times):
            fr = _pick(frames, t)
            fig, ax = plt.subplots(figsize=(5, 5))
            if F is not None:
                _shade(ax, F, xlim)
            v = _outline(fr)
            ax.fill(v[:, 0], v[:, 1], facecolor="#9ecae1", edgecolor="#08519c", lw=1.2, zorder=2)
            if reference:
                r = _outline(_pick(reference, t))
                rc = np.vstack([r, r[:1]])
                ax.plot(rc[:, 0], rc[:, 1], "--", color="#cb181d", lw=1.0, zorder=3)
            ax.set_xlim(*xlim)
            ax.set_ylim(*ylim)
            ax.set_aspect("equal")
            ax.set_title(f"t = {fr.t:.4f}")
            path = prefix.with_name(f"{prefix.name}_{k:04d}.svg")
            fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
            plt.close(fig)
            out.append(path)
    return out
