"""Deterministic phase-portrait rendering.

Streamlines are integrated from a fixed seed grid, singular points are
marked by kind, and surgery zero sets are overlaid at their declared depth.
SVG output is byte-stable for a given config and seed: the figure is built
from deterministic data, the SVG hash salt is pinned to the seed, and the
date metadata is stripped.
"""
from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon

from .atlas import AtlasKind, SurfacePoint
from .errors import IoError
from .fields import FieldSpec
from .integrate import IntegratorSettings, integrate
from .surgery import CantorStrip, FakeSaddle, SingularizeSection


def _domain(spec: FieldSpec):
    kind = spec.atlas.kind
    if kind in (AtlasKind.TORUS, AtlasKind.MAPPING_TORUS):
        return (0.0, 1.0, 0.0, 1.0)
    if kind is AtlasKind.CLOSED_ANNULUS:
        return (0.0, spec.atlas.circumference, *spec.atlas.y_range)
    return (-1.6, 1.6, -1.6, 1.6)


def _streamline_segments(spec: FieldSpec, seed: int, n_seeds: int, t_span: float):
    u0, u1, v0, v1 = _domain(spec)
    iset = IntegratorSettings(tol=1e-7, detect_closed=False, max_displacement=0.03)
    segments = []
    uu = np.linspace(u0, u1, n_seeds, endpoint=False) + (u1 - u0) / (2 * n_seeds)
    vv = np.linspace(v0, v1, n_seeds, endpoint=False) + (v1 - v0) / (2 * n_seeds)
    for su in uu:
        for sv in vv:
            p = SurfacePoint(0, float(su), float(sv))
            if spec.speed(p) < 1e-10:
                continue
            for direction in ("forward", "backward"):
                try:
                    tr = integrate(spec, p, t_budget=t_span, direction=direction,
                                   settings=iset)
                except Exception:
                    continue
                pts = np.stack([tr.us, tr.vs], axis=1)
                charts = tr.charts
                # split at wraps / chart switches
                jump = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1])) > 0.2
                jump |= np.diff(charts) != 0
                breaks = np.flatnonzero(jump) + 1
                for seg in np.split(np.arange(len(pts)), breaks):
                    if len(seg) >= 2 and np.all(charts[seg] == 0):
                        segments.append(pts[seg])
    return segments


def render_phase_portrait(spec: FieldSpec, seed: int = 0, n_seeds: int = 8,
                          t_span: float = 3.0):
    """Build the figure: streamlines from a fixed seed grid, singular points
    marked by kind, surgery zero sets overlaid. Chart 0 only."""
    u0, u1, v0, v1 = _domain(spec)
    fig, ax = plt.subplots(figsize=(6.0, 6.0 * (v1 - v0) / (u1 - u0)))
    for seg in _streamline_segments(spec, seed, n_seeds, t_span):
        ax.plot(seg[:, 0], seg[:, 1], color="#4878a8", lw=0.7, zorder=1)

    for s in spec.surgeries:
        if isinstance(s, FakeSaddle) and s.point.chart == 0:
            ax.plot([s.point.u], [s.point.v], marker="x", ms=9, color="#b03030",
                    mew=2, zorder=3)
        elif isinstance(s, CantorStrip) and s.placement.chart == 0:
            iv = s._strip.approx.intervals()
            for li, hi_ in iv:
                for lj, hj in iv:
                    corners_t = [(li, li + lj), (hi_, hi_ + lj),
                                 (hi_, hi_ + hj), (li, li + hj)]
                    xy = [s.placement.from_template(np.array([x]), np.array([t]))
                          for x, t in corners_t]
                    poly = [(float(a[0]), float(b[0])) for a, b in xy]
                    ax.add_patch(Polygon(poly, closed=True, facecolor="#202020",
                                         edgecolor="none", zorder=2))
        elif isinstance(s, SingularizeSection):
            for lo, hi_ in s.arcs:
                ax.plot([0.0, 0.0], [lo, min(hi_, 1.0)], color="#202020", lw=3,
                        solid_capstyle="butt", zorder=2)

    for st in spec.base_sing:
        for p in st.representatives():
            if p.chart != 0:
                continue
            hinted = getattr(st, "kind_hint", "")
            marker = {"center": "o", "saddle": "x", "extremum": "o"}.get(hinted, "^")
            ax.plot([p.u], [p.v], marker=marker, ms=8, mew=2,
                    color="#207020" if marker == "o" else "#b03030", zorder=3,
                    mfc="none" if marker == "o" else None)

    ax.set_xlim(u0, u1)
    ax.set_ylim(v0, v1)
    ax.set_xlabel("u (chart 0)")
    ax.set_ylabel("v (chart 0)")
    ax.set_title(spec.name)
    ax.set_aspect("equal")
    fig.tight_layout()
    return fig


def save_svg(fig, path, seed: int = 0) -> None:
    """Write a byte-stable SVG: fixed hash salt, no date metadata."""
    with plt.rc_context({"svg.hashsalt": f"flowlab-{seed}"}):
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            raise IoError(f"cannot write {path}: {e}") from e
        finally:
            plt.close(fig)
