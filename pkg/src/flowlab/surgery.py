"""Vector-field surgeries: multiplication by nonnegative scalar fields with
prescribed zero sets.

Every surgery is a factor p -> sigma(dist(p, Z) / width) clipped to [0, 1],
where Z is the prescribed zero set and sigma(t) = min(1, t) is a linear
ramp. The factor is exactly 0 on Z, exactly 1 outside the support box
(anything at distance >= width), and globally Lipschitz with constant
1/width -- which is what the adaptive integrator needs, and which makes the
slow-down near Z exponential rather than super-exponential, so the
convergence thresholds (speed < 1e-9 within 1e-6 of Z) are reached inside
ordinary time budgets.

Surgery kinds:

* ``FakeSaddle`` -- zero set is one point on a regular orbit; the orbit
  splits into the point and its two half-orbits.
* ``CantorStrip`` -- zero set is the depth-k strip set (Cantor x Cantor
  pushed along slope-1 lines), placed into a chart by an affine or polar
  map; adds totally disconnected singular points that block a flow box.
* ``SingularizeSection`` -- zero set is {u = 0} x K on a mapping torus,
  where K is the finite-depth stand-in for the circle map's minimal set.
* ``GenericBump`` -- caller-supplied distance function (an empty zero set
  gives the identity factor).
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .atlas import MappingTorusAtlas, SurfaceAtlas, SurfacePoint
from .cantor import StripSet
from .circlemap import CircleMap
from .errors import InvalidParameter, OverlapError, WrongBase
from .fields import FieldSpec, SingStructure, SuspensionField

DEFAULT_WIDTH = 0.05


class SurgerySpec:
    """Interface: a scalar factor with a declared zero set."""

    width: float

    def zero_distance_many(self, atlas: SurfaceAtlas, chart, U, V) -> np.ndarray:
        raise NotImplementedError

    def factor_many(self, atlas: SurfaceAtlas, chart, U, V) -> np.ndarray:
        d = self.zero_distance_many(atlas, chart, U, V)
        return np.minimum(d / self.width, 1.0)

    def zero_distance_scalar(self, atlas: SurfaceAtlas, chart: int, u: float, v: float) -> float:
        return float(self.zero_distance_many(atlas, chart, np.array([u]), np.array([v]))[0])

    def factor_scalar(self, atlas: SurfaceAtlas, chart: int, u: float, v: float) -> float:
        d = self.zero_distance_scalar(atlas, chart, u, v)
        return d / self.width if d < self.width else 1.0

    def zero_samples(self) -> list[SurfacePoint]:
        """Representative points on the zero set, used for disjointness checks."""
        return []

    def zero_structure(self, atlas: SurfaceAtlas) -> SingStructure:
        return _SurgerySing(self, atlas)

    def support_box(self) -> tuple[int, float, float, float, float]:
        """(chart, u_min, u_max, v_min, v_max) outside which the factor is 1."""
        raise NotImplementedError


@dataclass(frozen=True)
class _SurgerySing(SingStructure):
    surgery: SurgerySpec
    atlas: SurfaceAtlas

    def distance_many(self, atlas, chart, U, V):
        return self.surgery.zero_distance_many(atlas, chart, U, V)

    def representatives(self):
        return self.surgery.zero_samples()


@dataclass(frozen=True)
class FakeSaddle(SurgerySpec):
    """Insert one singular point on a regular orbit (a 0-saddle: the split
    orbit contributes its two separatrices)."""

    point: SurfacePoint
    width: float = DEFAULT_WIDTH

    def zero_distance_many(self, atlas, chart, U, V):
        U = np.atleast_1d(np.asarray(U, dtype=float))
        V = np.atleast_1d(np.asarray(V, dtype=float))
        out = np.empty(U.shape)
        for i in range(U.size):
            out.flat[i] = atlas.distance(SurfacePoint(chart, U.flat[i], V.flat[i]), self.point)
        return out

    def zero_distance_scalar(self, atlas, chart, u, v):
        kind = atlas.kind.value
        if kind == "torus":
            du = abs(u - self.point.u) % 1.0
            dv = abs(v - self.point.v) % 1.0
            return math.hypot(min(du, 1.0 - du), min(dv, 1.0 - dv))
        if kind == "closed_annulus":
            L = atlas.circumference
            du = abs(u - self.point.u) % L
            return math.hypot(min(du, L - du), v - self.point.v)
        if kind == "mapping_torus":
            # same-chart local distance; the seam representative with the
            # fiber map applied is checked as well
            dv = abs(v - self.point.v) % 1.0
            d = math.hypot(u - self.point.u, min(dv, 1.0 - dv))
            if d >= self.width and min(u, 1.0 - u) + abs(self.point.u) < self.width:
                return atlas.distance(SurfacePoint(chart, u, v), self.point)
            return d
        return atlas.distance(SurfacePoint(chart, u, v), self.point)

    def zero_samples(self):
        return [self.point]

    def support_box(self):
        w = self.width
        return (self.point.chart, self.point.u - w, self.point.u + w,
                self.point.v - w, self.point.v + w)


@dataclass(frozen=True)
class AffinePlacement:
    """Template coords (x, t) -> chart coords origin + scale * R_k (x, t),
    with R_k a rotation by k quarter turns."""

    chart: int = 0
    origin: tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0
    quarter_turns: int = 0

    def to_template(self, U, V):
        du = (np.asarray(U, dtype=float) - self.origin[0]) / self.scale
        dv = (np.asarray(V, dtype=float) - self.origin[1]) / self.scale
        k = self.quarter_turns % 4
        if k == 0:
            return du, dv
        if k == 1:
            return dv, -du
        if k == 2:
            return -du, -dv
        return -dv, du

    def from_template(self, x, t):
        k = self.quarter_turns % 4
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        if k == 0:
            du, dv = x, t
        elif k == 1:
            du, dv = -t, x
        elif k == 2:
            du, dv = -x, -t
        else:
            du, dv = t, -x
        return self.origin[0] + self.scale * du, self.origin[1] + self.scale * dv

    def metric_scale(self, x, t):
        return self.scale


@dataclass(frozen=True)
class PolarPlacement:
    """Template coords bent around a chart origin: the template's height
    coordinate t parametrizes radius, the along-strip coordinate x
    parametrizes angle. Circles of constant radius play the role the
    horizontal lines play for the flat template, so a rotational flow is
    blocked exactly like a translation flow is by the flat strip."""

    chart: int = 0
    theta0: float = 0.0
    theta_scale: float = 0.5
    r0: float = 0.8
    r_scale: float = 0.25

    def to_template(self, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        r = np.hypot(U, V)
        th = np.arctan2(V, U)
        dth = (th - self.theta0 + math.pi) % (2 * math.pi) - math.pi
        return dth / self.theta_scale, (r - self.r0) / self.r_scale

    def from_template(self, x, t):
        th = self.theta0 + self.theta_scale * np.asarray(x, dtype=float)
        r = self.r0 + self.r_scale * np.asarray(t, dtype=float)
        return r * np.cos(th), r * np.sin(th)

    def metric_scale(self, x, t):
        # conservative local scale; template distances are multiplied by it
        r = self.r0 + self.r_scale * np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return np.minimum(self.r_scale, self.theta_scale * r)


@dataclass(frozen=True)
class CantorStrip(SurgerySpec):
    """Zero set = depth-k strip set placed inside one chart."""

    depth: int = 6
    placement: AffinePlacement | PolarPlacement = field(default_factory=AffinePlacement)
    width: float = DEFAULT_WIDTH
    _strip: StripSet = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_strip", StripSet(self.depth))

    @staticmethod
    def _wrap_period(atlas) -> float | None:
        kind = atlas.kind.value
        if kind == "torus":
            return 1.0
        if kind == "closed_annulus":
            return atlas.circumference
        return None

    def zero_distance_many(self, atlas, chart, U, V):
        U = np.atleast_1d(np.asarray(U, dtype=float))
        V = np.atleast_1d(np.asarray(V, dtype=float))
        out = np.full(U.shape, np.inf)
        if chart != self.placement.chart:
            return out
        period = self._wrap_period(atlas)
        shifts = (0.0,) if period is None else (0.0, -period, period)
        for s in shifts:
            out = np.minimum(out, self._distance_unwrapped(U + s, V))
        return out

    def _distance_unwrapped(self, U, V):
        out = np.full(U.shape, np.inf)
        x, t = self.placement.to_template(U, V)
        scale = self.placement.metric_scale(x, t)
        # cheap bound first: template bounding box [0, 1/2] x [0, 1]
        bx = np.maximum(np.maximum(-x, x - 0.5), 0.0)
        bt = np.maximum(np.maximum(-t, t - 1.0), 0.0)
        rough = np.hypot(bx, bt) * scale
        near = rough < self.width
        if np.any(near):
            sc = scale[near] if isinstance(scale, np.ndarray) else scale
            cut = float(np.max(self.width / sc)) if isinstance(sc, np.ndarray) else self.width / sc
            d = self._strip.distance_batch(x[near], t[near], cutoff=cut)
            out[near] = d * sc
        out[~near] = np.maximum(rough[~near], self.width)
        return out

    def zero_distance_scalar(self, atlas, chart, u, v):
        if chart != self.placement.chart:
            return math.inf
        period = self._wrap_period(atlas)
        shifts = (0.0,) if period is None else (0.0, -period, period)
        best = math.inf
        for s in shifts:
            best = min(best, self._distance_unwrapped_scalar(u + s, v))
            if best == 0.0:
                break
        return best

    def _distance_unwrapped_scalar(self, u, v):
        x, t = self.placement.to_template(np.array([u]), np.array([v]))
        x0, t0 = float(x[0]), float(t[0])
        sc = self.placement.metric_scale(x0, t0)
        sc = float(sc) if np.isscalar(sc) or isinstance(sc, float) else float(np.asarray(sc))
        bx = max(-x0, x0 - 0.5, 0.0)
        bt = max(-t0, t0 - 1.0, 0.0)
        rough = math.hypot(bx, bt) * sc
        if rough >= self.width:
            return rough
        return self._strip.distance_scalar_pruned(x0, t0, self.width / sc) * sc

    def zero_samples(self):
        iv = self._strip.approx.intervals()
        pts = []
        for xa in (iv[0, 0], iv[-1, 1], iv[len(iv) // 2, 0]):
            for ya in (iv[0, 0], iv[-1, 1]):
                u, v = self.placement.from_template(np.array([xa]), np.array([xa + ya]))
                pts.append(SurfacePoint(self.placement.chart, float(u[0]), float(v[0])))
        return pts

    def support_box(self):
        xs, ts = np.meshgrid(np.array([0.0, 0.5]), np.array([0.0, 1.0]))
        U, V = self.placement.from_template(xs.ravel(), ts.ravel())
        w = self.width
        return (self.placement.chart, float(U.min()) - w, float(U.max()) + w,
                float(V.min()) - w, float(V.max()) + w)

    def contains(self, atlas, p: SurfacePoint) -> bool:
        x, t = self.placement.to_template(np.array([p.u]), np.array([p.v]))
        return bool(self._strip.contains_many(x, t)[0])


@dataclass(frozen=True)
class SingularizeSection(SurgerySpec):
    """Zero set {u = 0} x K on a mapping torus, K the closed complement of
    the circle map's inserted intervals. Distances are seam-aware: a point
    just below the gluing is close to the section at the glued fiber
    coordinate.

    The default width is tighter than for the other surgeries: the flow
    crosses this zero set's neighborhood once per lap, and the per-crossing
    slow-down must stay small against lap time for long runs to fit the
    time budget.
    """

    arcs: np.ndarray            # (n, 2) closed arcs of K, sorted, within [0, 1]
    circle_map: CircleMap
    width: float = 0.004
    _lo: tuple = field(init=False, repr=False, compare=False)
    _hi: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_lo", tuple(float(x) for x in self.arcs[:, 0]))
        object.__setattr__(self, "_hi", tuple(float(x) for x in self.arcs[:, 1]))

    def _arc_distance(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float) % 1.0
        lo = self.arcs[:, 0]
        hi = self.arcs[:, 1]
        i = np.searchsorted(lo, v)
        d = np.full(v.shape, np.inf)
        left = i > 0
        d[left] = np.maximum(v[left] - hi[i[left] - 1], 0.0)
        right = i < len(lo)
        d[right] = np.minimum(d[right], np.maximum(lo[i[right]] - v[right], 0.0))
        # wrap-around candidates
        d = np.minimum(d, np.abs(v - (lo[0] + 1.0)))
        d = np.minimum(d, np.abs((hi[-1] - 1.0) - v))
        return d

    def zero_distance_many(self, atlas, chart, U, V):
        U = np.atleast_1d(np.asarray(U, dtype=float))
        V = np.atleast_1d(np.asarray(V, dtype=float))
        du0 = np.abs(U)
        d = np.hypot(du0, self._arc_distance(V))
        near_seam = (1.0 - U) < self.width
        if np.any(near_seam):
            g = self.circle_map
            gv = np.array([g(float(x)) for x in V[near_seam]])
            seam = np.hypot(1.0 - U[near_seam], self._arc_distance(gv))
            d[near_seam] = np.minimum(d[near_seam], seam)
        return d

    def _arc_distance_scalar(self, v: float) -> float:
        v = v % 1.0
        lo = self._lo
        hi = self._hi
        i = bisect.bisect_right(lo, v)
        d = math.inf
        if i > 0:
            d = max(v - hi[i - 1], 0.0)
        if i < len(lo):
            d = min(d, max(lo[i] - v, 0.0))
        d = min(d, abs(v - (lo[0] + 1.0)), abs((hi[-1] - 1.0) - v))
        return d

    def zero_distance_scalar(self, atlas, chart, u, v):
        if self.width <= u <= 1.0 - self.width:
            return u if u <= 0.5 else 1.0 - u    # already >= width: factor is 1
        d = math.hypot(abs(u), self._arc_distance_scalar(v))
        if (1.0 - u) < self.width:
            gv = self.circle_map(v % 1.0)
            d = min(d, math.hypot(1.0 - u, self._arc_distance_scalar(gv)))
        return d

    def factor_scalar(self, atlas, chart, u, v):
        if self.width <= u <= 1.0 - self.width:
            return 1.0
        d = self.zero_distance_scalar(atlas, chart, u, v)
        return d / self.width if d < self.width else 1.0

    def zero_samples(self):
        return [SurfacePoint(0, 0.0, float(self.arcs[i, 0]))
                for i in range(0, len(self.arcs), max(1, len(self.arcs) // 8))]

    def support_box(self):
        return (0, -self.width, self.width, 0.0, 1.0)


@dataclass(frozen=True)
class GenericBump(SurgerySpec):
    """Caller-supplied zero-set distance; ``distance=None`` is the identity
    bump (empty zero set, factor identically 1)."""

    distance: Callable[[int, np.ndarray, np.ndarray], np.ndarray] | None = None
    width: float = DEFAULT_WIDTH
    samples: tuple = ()
    box: tuple = (0, 0.0, 0.0, 0.0, 0.0)

    def zero_distance_many(self, atlas, chart, U, V):
        U = np.atleast_1d(np.asarray(U, dtype=float))
        if self.distance is None:
            return np.full(U.shape, np.inf)
        V = np.atleast_1d(np.asarray(V, dtype=float))
        return np.asarray(self.distance(chart, U, V), dtype=float)

    def zero_samples(self):
        return list(self.samples)

    def support_box(self):
        return self.box


def bump_factor(spec: SurgerySpec, atlas: SurfaceAtlas, p: SurfacePoint) -> float:
    """Scalar factor of one surgery at one point."""
    f = spec.factor_many(atlas, p.chart, np.array([p.u]), np.array([p.v]))
    return float(f[0])


def apply_surgery(base: FieldSpec, s: SurgerySpec, min_separation: float = 1e-9) -> FieldSpec:
    """Append a surgery to the stack; zero sets of stacked surgeries must be
    pairwise disjoint (checked on representative samples both ways)."""
    for other in base.surgeries:
        for p in s.zero_samples():
            d = other.zero_distance_many(base.atlas, p.chart, np.array([p.u]), np.array([p.v]))
            if float(d[0]) < min_separation:
                raise OverlapError("surgery zero sets intersect near "
                                   f"({p.u:.6f}, {p.v:.6f})")
        for p in other.zero_samples():
            d = s.zero_distance_many(base.atlas, p.chart, np.array([p.u]), np.array([p.v]))
            if float(d[0]) < min_separation:
                raise OverlapError("surgery zero sets intersect near "
                                   f"({p.u:.6f}, {p.v:.6f})")
    return base.with_surgery(s)


def singularize_section(spec: FieldSpec, depth: int | None = None,
                        width: float = 0.004) -> FieldSpec:
    """Replace the circle map's minimal-set stand-in on the fiber section by
    singular points. Only meaningful on a Denjoy-style suspension."""
    if not isinstance(spec.base, SuspensionField) or not isinstance(spec.atlas, MappingTorusAtlas):
        raise WrongBase("singularize_section needs a circle-map suspension base")
    cmap = spec.params.get("circle_map")
    if cmap is None or cmap.is_rigid:
        raise WrongBase("the suspension's circle map has no wandering intervals")
    map_depth = int(spec.params.get("depth", 0))
    if depth is not None and depth != map_depth:
        raise InvalidParameter(
            f"section approximation depth {depth} differs from the map's truncation depth {map_depth}")
    arcs = cmap.complement_arcs()
    s = SingularizeSection(arcs=arcs, circle_map=cmap, width=width)
    out = apply_surgery(spec, s)
    return out
