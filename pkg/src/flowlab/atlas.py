"""Chart atlases for the compact surfaces the flow catalog lives on.

Each atlas presents a surface as a small set of planar charts plus exact
transition rules, so that integration and set estimation can work in flat
coordinates throughout:

* ``Torus`` -- unit square with opposite edges identified (one chart).
* ``Sphere`` -- two stereographic charts (from the north and south poles),
  overlapping on the annulus 0.5 < r < 2.0.
* ``ClosedAnnulus`` -- flat cylinder of a given circumference and height
  interval; the two boundary circles are genuine boundary.
* ``MappingTorus`` -- [0,1] x S^1 with (1, x) ~ (0, g(x)) for a stored
  circle homeomorphism g (suspension of g).

Atlases are immutable after construction and safe to share between
concurrent integration runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import OutOfAtlas


class AtlasKind(Enum):
    TORUS = "torus"
    SPHERE = "sphere"
    CLOSED_ANNULUS = "closed_annulus"
    MAPPING_TORUS = "mapping_torus"


@dataclass(frozen=True)
class SurfacePoint:
    """A surface point expressed in one chart: (chart id, u, v)."""

    chart: int
    u: float
    v: float

    def coords(self) -> tuple[float, float]:
        return (self.u, self.v)


def _check_finite(p: SurfacePoint) -> None:
    if not (math.isfinite(p.u) and math.isfinite(p.v)):
        raise OutOfAtlas(f"non-finite coordinates {p}")


class SurfaceAtlas:
    """Base interface: normalization, transitions, and a distance function.

    ``normalize`` returns the canonical representative of a point (preferred
    chart, coordinates inside the fundamental domain) and is idempotent.
    ``distance`` is symmetric, vanishes exactly on equal normalized points,
    and for the flat quotients equals the quotient metric.
    """

    kind: AtlasKind
    n_charts: int

    def normalize(self, p: SurfacePoint) -> SurfacePoint:
        raise NotImplementedError

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        raise NotImplementedError

    def chart_domain(self, chart: int) -> tuple[float, float, float, float]:
        """Rectangle (u_min, u_max, v_min, v_max) of valid chart coordinates."""
        raise NotImplementedError

    def valid_in_chart(self, p: SurfacePoint) -> bool:
        u0, u1, v0, v1 = self.chart_domain(p.chart)
        return u0 <= p.u <= u1 and v0 <= p.v <= v1

    def to_chart(self, p: SurfacePoint, chart: int) -> SurfacePoint:
        """Re-express ``p`` in the requested chart (error if not covered)."""
        raise NotImplementedError

    def switch_chart_if_needed(self, p: SurfacePoint) -> SurfacePoint:
        """Hysteresis rule used by the integrator: keep the current chart
        while it stays comfortable, otherwise hand over."""
        return self.normalize(p)

    # displacement between nearby points, in the chart of ``ref``
    def local_delta(self, ref: SurfacePoint, p: SurfacePoint) -> tuple[float, float]:
        q = self.to_chart(p, ref.chart)
        return (q.u - ref.u, q.v - ref.v)


class TorusAtlas(SurfaceAtlas):
    """Flat unit torus: a single chart [0,1) x [0,1) with wrap."""

    kind = AtlasKind.TORUS
    n_charts = 1

    def normalize(self, p: SurfacePoint) -> SurfacePoint:
        _check_finite(p)
        if p.chart != 0:
            raise OutOfAtlas(f"torus has a single chart, got chart {p.chart}")
        return SurfacePoint(0, p.u % 1.0, p.v % 1.0)

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        p = self.normalize(p)
        q = self.normalize(q)
        du = abs(p.u - q.u)
        dv = abs(p.v - q.v)
        du = min(du, 1.0 - du)
        dv = min(dv, 1.0 - dv)
        return math.hypot(du, dv)

    def chart_domain(self, chart: int) -> tuple[float, float, float, float]:
        return (-1.0, 2.0, -1.0, 2.0)

    def to_chart(self, p: SurfacePoint, chart: int) -> SurfacePoint:
        n = self.normalize(p)
        return n

    def local_delta(self, ref: SurfacePoint, p: SurfacePoint) -> tuple[float, float]:
        du = (p.u - ref.u + 0.5) % 1.0 - 0.5
        dv = (p.v - ref.v + 0.5) % 1.0 - 0.5
        return (du, dv)


class SphereAtlas(SurfaceAtlas):
    """Round unit sphere with two stereographic charts.

    Chart 0 projects from the north pole (covers everything but the north
    pole; the origin is the south pole), chart 1 from the south pole. The
    transition on the overlap is the inversion (u, v) -> (u, v) / r**2.
    Working radius is r <= 2; the integrator hands over at r > switch_radius
    so chart coordinates never degenerate.
    """

    kind = AtlasKind.SPHERE
    n_charts = 2

    max_radius = 2.0
    switch_radius = 1.5

    def embed(self, p: SurfacePoint) -> np.ndarray:
        """Ambient R^3 coordinates of a chart point (unit sphere)."""
        u, v = p.u, p.v
        r2 = u * u + v * v
        s = 1.0 / (1.0 + r2)
        x = 2.0 * u * s
        y = 2.0 * v * s
        z = (r2 - 1.0) * s
        if p.chart == 0:
            return np.array([x, y, z])
        if p.chart == 1:
            return np.array([x, y, -z])
        raise OutOfAtlas(f"sphere has charts 0 and 1, got {p.chart}")

    def project(self, xyz, chart: int) -> SurfacePoint:
        x, y, z = float(xyz[0]), float(xyz[1]), float(xyz[2])
        if chart == 0:
            denom = 1.0 - z
        elif chart == 1:
            denom = 1.0 + z
        else:
            raise OutOfAtlas(f"sphere has charts 0 and 1, got {chart}")
        if denom <= 1e-15:
            raise OutOfAtlas("point is at the chart's projection pole")
        return SurfacePoint(chart, x / denom, y / denom)

    def normalize(self, p: SurfacePoint) -> SurfacePoint:
        _check_finite(p)
        if p.chart not in (0, 1):
            raise OutOfAtlas(f"sphere has charts 0 and 1, got {p.chart}")
        r2 = p.u * p.u + p.v * p.v
        if r2 <= 1.0:
            return p
        # the other chart sees this point at radius 1/r < 1
        other = 1 - p.chart
        return SurfacePoint(other, p.u / r2, p.v / r2)

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        # great-circle distance through the half chord: stable down to
        # machine precision for nearby points, exact at antipodes
        a = self.embed(p)
        b = self.embed(q)
        chord = 0.5 * math.sqrt(float(np.sum((a - b) ** 2)))
        return 2.0 * math.asin(min(chord, 1.0))

    def chart_domain(self, chart: int) -> tuple[float, float, float, float]:
        m = self.max_radius
        return (-m, m, -m, m)

    def valid_in_chart(self, p: SurfacePoint) -> bool:
        return p.u * p.u + p.v * p.v <= self.max_radius**2

    def to_chart(self, p: SurfacePoint, chart: int) -> SurfacePoint:
        if p.chart == chart:
            return p
        r2 = p.u * p.u + p.v * p.v
        if r2 < 1e-30:
            raise OutOfAtlas("chart origin is not covered by the other chart")
        return SurfacePoint(chart, p.u / r2, p.v / r2)

    def transition_jacobian(self, p: SurfacePoint) -> np.ndarray:
        """Jacobian of the inversion taking p's chart to the other chart."""
        u, v = p.u, p.v
        r2 = u * u + v * v
        r4 = r2 * r2
        return np.array([[(v * v - u * u) / r4, -2.0 * u * v / r4],
                         [-2.0 * u * v / r4, (u * u - v * v) / r4]])

    def switch_chart_if_needed(self, p: SurfacePoint) -> SurfacePoint:
        r2 = p.u * p.u + p.v * p.v
        if r2 > self.switch_radius**2:
            return self.to_chart(p, 1 - p.chart)
        return p


class ClosedAnnulusAtlas(SurfaceAtlas):
    """Flat cylinder R/(L Z) x [y0, y1]; y0 and y1 are boundary circles."""

    kind = AtlasKind.CLOSED_ANNULUS
    n_charts = 1

    def __init__(self, circumference: float = 1.0, y_range: tuple[float, float] = (0.0, 1.0)):
        self.circumference = float(circumference)
        self.y_range = (float(y_range[0]), float(y_range[1]))
        self.boundary_descriptor = [("circle", self.y_range[0]), ("circle", self.y_range[1])]

    def normalize(self, p: SurfacePoint) -> SurfacePoint:
        _check_finite(p)
        if p.chart != 0:
            raise OutOfAtlas(f"annulus has a single chart, got chart {p.chart}")
        y0, y1 = self.y_range
        v = p.v
        tol = 1e-12
        if v < y0 - tol or v > y1 + tol:
            raise OutOfAtlas(f"height {v} outside [{y0}, {y1}]")
        v = min(max(v, y0), y1)
        return SurfacePoint(0, p.u % self.circumference, v)

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        p = self.normalize(p)
        q = self.normalize(q)
        du = abs(p.u - q.u)
        du = min(du, self.circumference - du)
        return math.hypot(du, p.v - q.v)

    def chart_domain(self, chart: int) -> tuple[float, float, float, float]:
        return (-self.circumference, 2 * self.circumference, self.y_range[0], self.y_range[1])

    def to_chart(self, p: SurfacePoint, chart: int) -> SurfacePoint:
        return self.normalize(p)

    def local_delta(self, ref: SurfacePoint, p: SurfacePoint) -> tuple[float, float]:
        L = self.circumference
        du = (p.u - ref.u + L / 2) % L - L / 2
        return (du, p.v - ref.v)


class MappingTorusAtlas(SurfaceAtlas):
    """Suspension space [0,1] x S^1 with (1, x) ~ (0, g(x)).

    ``g`` and its inverse are stored as callables; for the piecewise-affine
    circle maps used by the catalog both directions are exact. The first
    coordinate is the suspension direction, the second the fiber circle.
    """

    kind = AtlasKind.MAPPING_TORUS
    n_charts = 1

    def __init__(self, circle_map: Callable[[float], float],
                 circle_map_inverse: Callable[[float], float]):
        self.g = circle_map
        self.g_inv = circle_map_inverse

    def normalize(self, p: SurfacePoint) -> SurfacePoint:
        _check_finite(p)
        if p.chart != 0:
            raise OutOfAtlas(f"mapping torus has a single chart, got chart {p.chart}")
        u, v = p.u, p.v
        guard = 0
        while u >= 1.0:
            u -= 1.0
            v = self.g(v % 1.0)
            guard += 1
            if guard > 64:
                raise OutOfAtlas("suspension coordinate too far from the fundamental domain")
        while u < 0.0:
            u += 1.0
            v = self.g_inv(v % 1.0)
            guard += 1
            if guard > 64:
                raise OutOfAtlas("suspension coordinate too far from the fundamental domain")
        return SurfacePoint(0, u, v % 1.0)

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        # shortest straight path among representatives of q wrapped across
        # the gluing at most twice; exact for locally small distances
        p = self.normalize(p)
        q = self.normalize(q)
        best = math.inf
        vq = q.v
        for k in range(-2, 3):
            if k == 0:
                v = vq
            elif k > 0:
                v = vq
                for _ in range(k):
                    v = self.g_inv(v)
            else:
                v = vq
                for _ in range(-k):
                    v = self.g(v)
            dv = abs(v - p.v)
            dv = min(dv, 1.0 - dv)
            du = (q.u + k) - p.u
            best = min(best, math.hypot(du, dv))
        return best

    def chart_domain(self, chart: int) -> tuple[float, float, float, float]:
        return (-1.0, 2.0, -1.0, 2.0)

    def to_chart(self, p: SurfacePoint, chart: int) -> SurfacePoint:
        return self.normalize(p)

    def local_delta(self, ref: SurfacePoint, p: SurfacePoint) -> tuple[float, float]:
        candidates = []
        for k in (-1, 0, 1):
            if k == 0:
                v = p.v
            elif k > 0:
                v = self.g_inv(p.v % 1.0)
            else:
                v = self.g(p.v % 1.0)
            du = (p.u + k) - ref.u
            dv = (v - ref.v + 0.5) % 1.0 - 0.5
            candidates.append((math.hypot(du, dv), du, dv))
        _, du, dv = min(candidates)
        return (du, dv)


def make_torus() -> TorusAtlas:
    return TorusAtlas()


def make_sphere() -> SphereAtlas:
    return SphereAtlas()


def make_annulus(circumference: float = 3.0, y_range: tuple[float, float] = (-1.0, 2.0)) -> ClosedAnnulusAtlas:
    return ClosedAnnulusAtlas(circumference, y_range)
