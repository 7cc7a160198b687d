"""Vector fields on the chart atlases, and the FieldSpec that stacks
surgeries on top of a base field.

A base field only needs ``eval_many(chart, U, V) -> (DU, DV)`` with numpy
arrays in chart coordinates. FieldSpec multiplies the base by the scalar
factors of every attached surgery, tracks the declared singular structures
(base zeros plus surgery zero sets), and owns the default diagnostics
section and an optional first integral used by the Hamiltonian analysis.

All fields are immutable; evaluation is pure and reentrant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .atlas import AtlasKind, MappingTorusAtlas, SphereAtlas, SurfaceAtlas, SurfacePoint
from .errors import InconsistentHamiltonian

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# declared singular structures (for distance queries and classification)

class SingStructure:
    """Something the field designer declares to be part of Sing."""

    def distance_many(self, atlas: SurfaceAtlas, chart, U, V) -> np.ndarray:
        raise NotImplementedError

    def representatives(self) -> list[SurfacePoint]:
        return []


@dataclass(frozen=True)
class PointSing(SingStructure):
    point: SurfacePoint
    kind_hint: str = ""

    def distance_many(self, atlas, chart, U, V):
        U = np.atleast_1d(np.asarray(U, dtype=float))
        V = np.atleast_1d(np.asarray(V, dtype=float))
        kind = atlas.kind
        if kind is AtlasKind.TORUS or kind is AtlasKind.MAPPING_TORUS:
            du = np.abs(U - self.point.u) % 1.0
            dv = np.abs(V - self.point.v) % 1.0
            return np.hypot(np.minimum(du, 1.0 - du), np.minimum(dv, 1.0 - dv))
        if kind is AtlasKind.CLOSED_ANNULUS:
            L = atlas.circumference
            du = np.abs(U - self.point.u) % L
            return np.hypot(np.minimum(du, L - du), V - self.point.v)
        if kind is AtlasKind.SPHERE:
            r2 = U * U + V * V
            s = 1.0 / (1.0 + r2)
            z = (r2 - 1.0) * s
            if chart == 1:
                z = -z
            xyz = np.stack([2.0 * U * s, 2.0 * V * s, z], axis=-1)
            q = atlas.embed(self.point)
            chord = 0.5 * np.sqrt(np.sum((xyz - q) ** 2, axis=-1))
            return 2.0 * np.arcsin(np.minimum(chord, 1.0))
        out = np.empty(U.shape)
        for i in range(U.size):
            out.flat[i] = atlas.distance(SurfacePoint(chart, U.flat[i], V.flat[i]), self.point)
        return out

    def representatives(self):
        return [self.point]


@dataclass(frozen=True)
class CircleSing(SingStructure):
    """A full circle of singular points at a constant v-coordinate."""

    v_value: float
    period: float = 1.0

    def distance_many(self, atlas, chart, U, V):
        V = np.atleast_1d(np.asarray(V, dtype=float))
        d = np.abs((V - self.v_value) % self.period)
        return np.minimum(d, self.period - d)

    def representatives(self):
        return [SurfacePoint(0, 0.25, self.v_value)]


# ---------------------------------------------------------------------------
# base fields

class BaseField:
    name = "base"

    def eval_many(self, chart: int, U: np.ndarray, V: np.ndarray):
        raise NotImplementedError

    def eval_scalar(self, chart: int, u: float, v: float) -> tuple[float, float]:
        du, dv = self.eval_many(chart, np.array([u]), np.array([v]))
        return float(du[0]), float(dv[0])


@dataclass(frozen=True)
class LinearTorusField(BaseField):
    """Constant field (1, slope) on the flat torus."""

    slope: float
    name: str = "linear_torus"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        return np.ones_like(U), np.full_like(U, self.slope)

    def eval_scalar(self, chart, u, v):
        return 1.0, self.slope


@dataclass(frozen=True)
class SuspensionField(BaseField):
    """Unit-speed flow in the suspension direction of a mapping torus."""

    name: str = "suspension"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        return np.ones_like(U), np.zeros_like(U)

    def eval_scalar(self, chart, u, v):
        return 1.0, 0.0


@dataclass(frozen=True)
class TorusHamiltonianSinSin(BaseField):
    """Rotated gradient of h(u, v) = sin(2 pi u) sin(2 pi v).

    Four centers at the quarter-lattice points, four saddles at the
    half-lattice points, saddle separatrices along the grid lines u, v in
    {0, 1/2}.
    """

    name: str = "hamiltonian_torus_sinsin"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        du = TWO_PI * np.sin(TWO_PI * U) * np.cos(TWO_PI * V)
        dv = -TWO_PI * np.cos(TWO_PI * U) * np.sin(TWO_PI * V)
        return du, dv

    def eval_scalar(self, chart, u, v):
        return (TWO_PI * math.sin(TWO_PI * u) * math.cos(TWO_PI * v),
                -TWO_PI * math.cos(TWO_PI * u) * math.sin(TWO_PI * v))


@dataclass(frozen=True)
class TorusGradientSinSin(BaseField):
    """Ascending gradient of h(u, v) = sin(2 pi u) sin(2 pi v)."""

    name: str = "gradient_torus_sinsin"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        du = TWO_PI * np.cos(TWO_PI * U) * np.sin(TWO_PI * V)
        dv = TWO_PI * np.sin(TWO_PI * U) * np.cos(TWO_PI * V)
        return du, dv

    def eval_scalar(self, chart, u, v):
        return (TWO_PI * math.cos(TWO_PI * u) * math.sin(TWO_PI * v),
                TWO_PI * math.sin(TWO_PI * u) * math.cos(TWO_PI * v))


@dataclass(frozen=True)
class SphereRotationField(BaseField):
    """Latitude rotation on the round sphere: the rotated gradient of the
    height function. Chart components are (-v, u) in both stereographic
    charts (the inversion transition maps one to the other exactly)."""

    name: str = "hamiltonian_sphere_height"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        return -V.copy(), U.copy()

    def eval_scalar(self, chart, u, v):
        return -v, u


@dataclass(frozen=True)
class SphereGradientField(BaseField):
    """Ascending gradient of the height function on the round sphere:
    radial expansion (u, v) in chart 0 (origin = south pole), radial
    contraction in chart 1 (origin = north pole)."""

    name: str = "gradient_sphere_height"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        if chart == 0:
            return U.copy(), V.copy()
        return -U, -V

    def eval_scalar(self, chart, u, v):
        return (u, v) if chart == 0 else (-u, -v)


@dataclass(frozen=True)
class SingleLimitCycleTorusField(BaseField):
    """(1, sin^2(pi v)) on the torus: the circle v = 0 is the unique
    periodic orbit; every other orbit limits onto it in both time
    directions."""

    name: str = "single_limit_cycle_torus"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        s = np.sin(np.pi * (V % 1.0))
        return np.ones_like(U), s * s

    def eval_scalar(self, chart, u, v):
        s = math.sin(math.pi * (v % 1.0))
        return 1.0, s * s


@dataclass(frozen=True)
class ReebCircleTorusField(BaseField):
    """Modified Reeb band glued into a torus: (sin(pi v), eps sin^2(pi v)).

    The circle v = 0 is exactly the zero set; every nonsingular orbit
    drifts across the band while winding, so both limit sets fill the
    singular circle.
    """

    drift: float = 0.2
    name: str = "reeb_circle_torus"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        s = np.sin(np.pi * (V % 1.0))
        return s, self.drift * s * s

    def eval_scalar(self, chart, u, v):
        s = math.sin(math.pi * (v % 1.0))
        return s, self.drift * s * s


@dataclass(frozen=True)
class MorseSmaleSphereField(BaseField):
    """Source at the chart-0 origin, attracting limit cycle on the unit
    circle, degenerate repelling point at the opposite pole.

    Chart 0 carries r' = r(1 - r^2), theta' = 1 damped by 1/(1 + r^2)^2 so
    the field extends continuously across the far pole; chart 1 components
    are the exact pushforward under the inversion transition.
    """

    name: str = "morse_smale_sphere"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        r2 = U * U + V * V
        if chart == 0:
            g = 1.0 / (1.0 + r2) ** 2
            du = g * (U * (1.0 - r2) - V)
            dv = g * (V * (1.0 - r2) + U)
            return du, dv
        denom = (1.0 + r2) ** 2
        du = (r2 * (1.0 - r2) * U - r2 * r2 * V) / denom
        dv = (r2 * (1.0 - r2) * V + r2 * r2 * U) / denom
        return du, dv

    def eval_scalar(self, chart, u, v):
        r2 = u * u + v * v
        if chart == 0:
            g = 1.0 / (1.0 + r2) ** 2
            return g * (u * (1.0 - r2) - v), g * (v * (1.0 - r2) + u)
        denom = (1.0 + r2) ** 2
        return ((r2 * (1.0 - r2) * u - r2 * r2 * v) / denom,
                (r2 * (1.0 - r2) * v + r2 * r2 * u) / denom)


@dataclass(frozen=True)
class ZeroField(BaseField):
    name: str = "zero"

    def eval_many(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        return np.zeros_like(U), np.zeros_like(U)

    def eval_scalar(self, chart, u, v):
        return 0.0, 0.0


@dataclass(frozen=True)
class ReversedField(BaseField):
    inner: BaseField

    @property
    def name(self):
        return f"reversed_{self.inner.name}"

    def eval_many(self, chart, U, V):
        du, dv = self.inner.eval_many(chart, U, V)
        return -du, -dv

    def eval_scalar(self, chart, u, v):
        du, dv = self.inner.eval_scalar(chart, u, v)
        return -du, -dv


@dataclass(frozen=True)
class ScaledField(BaseField):
    """Base field times a positive bounded scalar; used by the
    reparametrization-robustness checks."""

    inner: BaseField
    factor: Callable[[int, np.ndarray, np.ndarray], np.ndarray]

    @property
    def name(self):
        return f"scaled_{self.inner.name}"

    def eval_many(self, chart, U, V):
        du, dv = self.inner.eval_many(chart, U, V)
        f = self.factor(chart, np.asarray(U, dtype=float), np.asarray(V, dtype=float))
        return du * f, dv * f

    def eval_scalar(self, chart, u, v):
        du, dv = self.inner.eval_scalar(chart, u, v)
        f = float(self.factor(chart, np.array([u]), np.array([v]))[0])
        return du * f, dv * f


# ---------------------------------------------------------------------------
# sections

@dataclass(frozen=True)
class Section:
    """A transverse circle or arc at constant u or v in one chart.

    ``axis`` names the frozen coordinate; the coordinate along the section
    is the other one. ``wrap`` marks full circles on wrapped coordinates.
    """

    chart: int
    axis: str          # "u" or "v": the coordinate held at ``value``
    value: float
    lo: float = 0.0
    hi: float = 1.0
    wrap: bool = True
    period: float = 1.0
    label: str = ""

    def along_coordinate(self, u: float, v: float) -> float:
        return v if self.axis == "u" else u


# ---------------------------------------------------------------------------
# FieldSpec

@dataclass(frozen=True)
class FieldSpec:
    """A catalog flow plus an ordered stack of surgeries, evaluable as a
    vector field at any surface point."""

    atlas: SurfaceAtlas
    base: BaseField
    surgeries: tuple = ()
    name: str = ""
    params: dict = field(default_factory=dict)
    finite_sing: bool = True
    base_sing: tuple = ()
    hamiltonian: Callable[[int, np.ndarray, np.ndarray], np.ndarray] | None = None
    section: Section | None = None

    def wrapped_coords(self, chart, U, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        kind = self.atlas.kind
        if kind in (AtlasKind.TORUS, AtlasKind.MAPPING_TORUS):
            return U % 1.0 if kind is AtlasKind.TORUS else U, V % 1.0
        if kind is AtlasKind.CLOSED_ANNULUS:
            return U % self.atlas.circumference, V
        return U, V

    def eval_many(self, chart, U, V):
        Uw, Vw = self.wrapped_coords(chart, U, V)
        du, dv = self.base.eval_many(chart, Uw, Vw)
        du = np.array(du, dtype=float, copy=True)
        dv = np.array(dv, dtype=float, copy=True)
        for s in self.surgeries:
            f = s.factor_many(self.atlas, chart, Uw, Vw)
            du *= f
            dv *= f
        return du, dv

    def eval(self, p: SurfacePoint) -> np.ndarray:
        du, dv = self.eval_scalar(p.chart, p.u, p.v)
        return np.array([du, dv])

    def eval_scalar(self, chart: int, u: float, v: float) -> tuple[float, float]:
        kind = self.atlas.kind
        if kind is AtlasKind.TORUS:
            u %= 1.0
            v %= 1.0
        elif kind is AtlasKind.MAPPING_TORUS:
            v %= 1.0
        elif kind is AtlasKind.CLOSED_ANNULUS:
            u %= self.atlas.circumference
        du, dv = self.base.eval_scalar(chart, u, v)
        for s in self.surgeries:
            f = s.factor_scalar(self.atlas, chart, u, v)
            du *= f
            dv *= f
        return du, dv

    def speed(self, p: SurfacePoint) -> float:
        t = self.eval(p)
        return float(np.hypot(t[0], t[1]))

    def sing_structures(self) -> list[SingStructure]:
        cached = object.__getattribute__(self, "__dict__").get("_sing_cache")
        if cached is None:
            cached = list(self.base_sing)
            for s in self.surgeries:
                cached.append(s.zero_structure(self.atlas))
            object.__setattr__(self, "_sing_cache", cached)
        return cached

    def has_declared_sing(self) -> bool:
        return len(self.base_sing) > 0 or len(self.surgeries) > 0

    def sing_distance_many(self, chart, U, V) -> np.ndarray:
        Uw, Vw = self.wrapped_coords(chart, U, V)
        Uw = np.atleast_1d(Uw)
        Vw = np.atleast_1d(Vw)
        best = np.full(Uw.shape, np.inf)
        for s in self.sing_structures():
            best = np.minimum(best, s.distance_many(self.atlas, chart, Uw, Vw))
        return best

    def sing_distance(self, p: SurfacePoint) -> float:
        return float(self.sing_distance_many(p.chart, np.array([p.u]), np.array([p.v]))[0])

    def reversed(self) -> "FieldSpec":
        return replace(self, base=ReversedField(self.base), name=f"reversed({self.name})")

    def with_speed_factor(self, factor) -> "FieldSpec":
        return replace(self, base=ScaledField(self.base, factor),
                       name=f"scaled({self.name})")

    def with_surgery(self, surgery) -> "FieldSpec":
        return replace(self, surgeries=self.surgeries + (surgery,))

    def hamiltonian_values(self, chart, U, V) -> np.ndarray:
        if self.hamiltonian is None:
            raise ValueError(f"field {self.name!r} has no first integral attached")
        Uw, Vw = self.wrapped_coords(chart, U, V)
        return self.hamiltonian(chart, np.asarray(Uw, dtype=float), np.asarray(Vw, dtype=float))

    def hamiltonian_value(self, p: SurfacePoint) -> float:
        return float(self.hamiltonian_values(p.chart, np.array([p.u]), np.array([p.v]))[0])


# ---------------------------------------------------------------------------
# named first integrals

def h_sin_sin(chart, U, V):
    return np.sin(TWO_PI * U) * np.sin(TWO_PI * V)


def h_sphere_height(chart, U, V):
    r2 = U * U + V * V
    z = (r2 - 1.0) / (r2 + 1.0)
    return z if chart == 0 else -z


def check_hamiltonian_consistency(atlas: SurfaceAtlas, h, n_samples: int = 200,
                                  tol: float = 1e-9, seed: int = 7) -> None:
    """Raise InconsistentHamiltonian when chart values of ``h`` disagree on
    overlaps (sphere) or across the periodic identifications (torus)."""
    rng = np.random.default_rng(seed)
    if isinstance(atlas, SphereAtlas):
        r = rng.uniform(0.6, 1.9, n_samples)
        th = rng.uniform(0.0, TWO_PI, n_samples)
        U, V = r * np.cos(th), r * np.sin(th)
        h0 = h(0, U, V)
        r2 = U * U + V * V
        h1 = h(1, U / r2, V / r2)
        worst = float(np.max(np.abs(h0 - h1)))
        if worst > tol:
            raise InconsistentHamiltonian(f"chart disagreement {worst:.3e} exceeds {tol}")
        return
    U = rng.uniform(0.0, 1.0, n_samples)
    V = rng.uniform(0.0, 1.0, n_samples)
    worst = float(max(np.max(np.abs(h(0, U + 1.0, V) - h(0, U, V))),
                      np.max(np.abs(h(0, U, V + 1.0) - h(0, U, V)))))
    if worst > tol:
        raise InconsistentHamiltonian(f"periodicity violation {worst:.3e} exceeds {tol}")
