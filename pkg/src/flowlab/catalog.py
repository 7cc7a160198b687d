"""Named flow catalog: constructors, parameter schemas, declared singular
structures, default diagnostics sections, and start samplers.

Entries are addressed by name + parameter map from run configs; ``flowlab
list`` prints the schemas. Every entry builds a fresh immutable FieldSpec.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .atlas import (ClosedAnnulusAtlas, MappingTorusAtlas, SphereAtlas, SurfacePoint,
                    TorusAtlas, make_annulus, make_sphere, make_torus)
from .circlemap import GOLDEN, build_denjoy_map
from .errors import InvalidParameter
from .fields import (CircleSing, FieldSpec, LinearTorusField, MorseSmaleSphereField,
                     PointSing, ReebCircleTorusField, Section, SingleLimitCycleTorusField,
                     SphereGradientField, SphereRotationField, SuspensionField,
                     TorusGradientSinSin, TorusHamiltonianSinSin, ZeroField,
                     check_hamiltonian_consistency, h_sin_sin, h_sphere_height)
from .surgery import AffinePlacement, CantorStrip, PolarPlacement, apply_surgery

TORUS_SECTION = Section(chart=0, axis="u", value=0.0, lo=0.0, hi=1.0, wrap=True,
                        period=1.0, label="fiber circle u=0")

SINSIN_CENTERS = [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
SINSIN_SADDLES = [(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)]


def _resolve_slope(value) -> float:
    if value == "golden":
        return GOLDEN
    return float(value)


def linear_torus(slope="golden") -> FieldSpec:
    s = _resolve_slope(slope)
    return FieldSpec(atlas=make_torus(), base=LinearTorusField(s),
                     name="linear_torus", params={"slope": s},
                     finite_sing=True, base_sing=(), section=TORUS_SECTION)


def denjoy_suspension(rotation="golden", gap_constant: float = 0.1, depth: int = 200) -> FieldSpec:
    rho = GOLDEN if rotation == "golden" else float(rotation)
    cmap = build_denjoy_map(rho, float(gap_constant), int(depth))
    atlas = MappingTorusAtlas(cmap, cmap.inverse)
    section = Section(chart=0, axis="u", value=0.0, wrap=True, period=1.0,
                      label="fiber circle u=0")
    return FieldSpec(atlas=atlas, base=SuspensionField(),
                     name="denjoy_suspension",
                     params={"rotation": rho, "gap_constant": float(gap_constant),
                             "depth": int(depth), "circle_map": cmap},
                     finite_sing=True, base_sing=(), section=section)


def hamiltonian_torus_sinsin() -> FieldSpec:
    sing = tuple([PointSing(SurfacePoint(0, u, v), "center") for u, v in SINSIN_CENTERS]
                 + [PointSing(SurfacePoint(0, u, v), "saddle") for u, v in SINSIN_SADDLES])
    return FieldSpec(atlas=make_torus(), base=TorusHamiltonianSinSin(),
                     name="hamiltonian_torus_sinsin", params={},
                     finite_sing=True, base_sing=sing, hamiltonian=h_sin_sin,
                     section=None)


def gradient_torus_sinsin() -> FieldSpec:
    sing = tuple([PointSing(SurfacePoint(0, u, v), "extremum") for u, v in SINSIN_CENTERS]
                 + [PointSing(SurfacePoint(0, u, v), "saddle") for u, v in SINSIN_SADDLES])
    return FieldSpec(atlas=make_torus(), base=TorusGradientSinSin(),
                     name="gradient_torus_sinsin", params={"height": h_sin_sin},
                     finite_sing=True, base_sing=sing, section=None)


def hamiltonian_sphere_height() -> FieldSpec:
    sing = (PointSing(SurfacePoint(0, 0.0, 0.0), "center"),
            PointSing(SurfacePoint(1, 0.0, 0.0), "center"))
    section = Section(chart=0, axis="v", value=0.0, lo=0.1, hi=0.95, wrap=False,
                      label="equatorial radius arc")
    return FieldSpec(atlas=make_sphere(), base=SphereRotationField(),
                     name="hamiltonian_sphere_height", params={},
                     finite_sing=True, base_sing=sing, hamiltonian=h_sphere_height,
                     section=section)


def gradient_sphere_height() -> FieldSpec:
    sing = (PointSing(SurfacePoint(0, 0.0, 0.0), "extremum"),
            PointSing(SurfacePoint(1, 0.0, 0.0), "extremum"))
    return FieldSpec(atlas=make_sphere(), base=SphereGradientField(),
                     name="gradient_sphere_height", params={"height": h_sphere_height},
                     finite_sing=True, base_sing=sing, section=None)


def single_limit_cycle_torus() -> FieldSpec:
    return FieldSpec(atlas=make_torus(), base=SingleLimitCycleTorusField(),
                     name="single_limit_cycle_torus", params={},
                     finite_sing=True, base_sing=(), section=TORUS_SECTION)


def reeb_singular_circle_torus(drift: float = 0.2) -> FieldSpec:
    section = Section(chart=0, axis="u", value=0.0, lo=0.02, hi=0.98, wrap=True,
                      period=1.0, label="fiber circle u=0")
    return FieldSpec(atlas=make_torus(), base=ReebCircleTorusField(float(drift)),
                     name="reeb_singular_circle_torus", params={"drift": float(drift)},
                     finite_sing=False, base_sing=(CircleSing(0.0),), section=section)


def morse_smale_sphere() -> FieldSpec:
    sing = (PointSing(SurfacePoint(0, 0.0, 0.0), "source"),
            PointSing(SurfacePoint(1, 0.0, 0.0), "node"))
    section = Section(chart=0, axis="v", value=0.0, lo=0.05, hi=1.9, wrap=False,
                      label="outward radius arc")
    return FieldSpec(atlas=make_sphere(), base=MorseSmaleSphereField(),
                     name="morse_smale_sphere", params={},
                     finite_sing=True, base_sing=sing, section=section)


def cantor_annulus(depth: int = 6) -> FieldSpec:
    """Horizontal flow on the closed annulus R/3Z x [-1, 2] with the strip
    set of the given depth zeroed inside the square [0,1]^2."""
    atlas = make_annulus(3.0, (-1.0, 2.0))
    base = FieldSpec(atlas=atlas, base=LinearTorusField(0.0),
                     name="cantor_annulus", params={"depth": int(depth)},
                     finite_sing=False, base_sing=(),
                     section=Section(chart=0, axis="u", value=2.0, lo=-1.0, hi=2.0,
                                     wrap=True, period=3.0, label="vertical segment u=2"))
    strip = CantorStrip(depth=int(depth), placement=AffinePlacement(chart=0))
    return apply_surgery(base, strip)


def cantor_sphere_height(depth: int = 6) -> FieldSpec:
    """Latitude rotation on the sphere with a strip set bent into the band
    0.55 <= r <= 1.05 of chart 0; the height function stays a first
    integral while the band acquires totally disconnected singular points."""
    base = hamiltonian_sphere_height()
    placement = PolarPlacement(chart=0, theta0=0.0, theta_scale=0.5, r0=0.55, r_scale=0.5)
    strip = CantorStrip(depth=int(depth), placement=placement)
    spec = apply_surgery(base, strip)
    return FieldSpec(atlas=spec.atlas, base=spec.base, surgeries=spec.surgeries,
                     name="cantor_sphere_height",
                     params={"depth": int(depth)}, finite_sing=False,
                     base_sing=spec.base_sing, hamiltonian=spec.hamiltonian,
                     section=spec.section)


def constant_hamiltonian_torus() -> FieldSpec:
    """Degenerate case: a constant first integral generates the zero field."""
    return FieldSpec(atlas=make_torus(), base=ZeroField(),
                     name="constant_hamiltonian_torus", params={},
                     finite_sing=False, base_sing=(),
                     hamiltonian=lambda chart, U, V: np.zeros_like(np.asarray(U, dtype=float)))


def hamiltonian_field(h_id: str, atlas_kind: str = "torus") -> FieldSpec:
    """Catalog Hamiltonian constructor with the chart-consistency check."""
    if h_id == "sin_sin" and atlas_kind == "torus":
        spec = hamiltonian_torus_sinsin()
        check_hamiltonian_consistency(spec.atlas, h_sin_sin)
        return spec
    if h_id == "height" and atlas_kind == "sphere":
        spec = hamiltonian_sphere_height()
        check_hamiltonian_consistency(spec.atlas, h_sphere_height)
        return spec
    if h_id == "constant":
        return constant_hamiltonian_torus()
    raise InvalidParameter(f"unknown Hamiltonian {h_id!r} on {atlas_kind!r}")


# ---------------------------------------------------------------------------
# start samplers

def _sinsin_separatrix_starts(rng: np.random.Generator, n: int) -> list[SurfacePoint]:
    """Points on the invariant grid lines u = 0 and v = 0 (the saddle
    separatrices); these lines are exactly invariant in floating point, so
    the integrated orbits stay on the saddle connections they belong to."""
    pts = []
    for i in range(n):
        s = rng.uniform(0.06, 0.44) + (0.5 if rng.integers(2) else 0.0)
        if i % 2 == 0:
            pts.append(SurfacePoint(0, 0.0, s))
        else:
            pts.append(SurfacePoint(0, s, 0.0))
    return pts


def nonclosed_starts(spec: FieldSpec, rng: np.random.Generator, n: int) -> list[SurfacePoint]:
    """Sample starts on non-closed orbits of a catalog flow. Flows whose
    orbits are all closed (e.g. the sphere height field) return []."""
    name = spec.name
    if name == "linear_torus":
        return [SurfacePoint(0, rng.uniform(0, 1), rng.uniform(0, 1)) for _ in range(n)]
    if name == "hamiltonian_torus_sinsin":
        return _sinsin_separatrix_starts(rng, n)
    if name in ("gradient_torus_sinsin", "gradient_sphere_height"):
        pts = []
        while len(pts) < n:
            if spec.atlas.kind.value == "sphere":
                r = rng.uniform(0.15, 0.95)
                th = rng.uniform(0, 2 * math.pi)
                p = SurfacePoint(0, r * math.cos(th), r * math.sin(th))
            else:
                p = SurfacePoint(0, rng.uniform(0, 1), rng.uniform(0, 1))
            if spec.sing_distance(p) > 0.08:
                pts.append(p)
        return pts
    if name == "reeb_singular_circle_torus":
        return [SurfacePoint(0, rng.uniform(0, 1), rng.uniform(0.1, 0.9)) for _ in range(n)]
    if name == "single_limit_cycle_torus":
        return [SurfacePoint(0, rng.uniform(0, 1), rng.uniform(0.05, 0.95)) for _ in range(n)]
    if name == "denjoy_suspension":
        return [SurfacePoint(0, 0.5, rng.uniform(0, 1)) for _ in range(n)]
    if name == "morse_smale_sphere":
        pts = []
        while len(pts) < n:
            r = rng.uniform(0.05, 1.6)
            if abs(r - 1.0) < 0.03:
                continue
            th = rng.uniform(0, 2 * math.pi)
            pts.append(SurfacePoint(0, r * math.cos(th), r * math.sin(th)))
        return pts
    if name == "hamiltonian_sphere_height":
        return []  # every orbit is closed
    return []


def random_starts(spec: FieldSpec, rng: np.random.Generator, n: int) -> list[SurfacePoint]:
    kind = spec.atlas.kind.value
    pts = []
    for _ in range(n):
        if kind == "sphere":
            r = math.sqrt(rng.uniform(0.0, 1.0))
            th = rng.uniform(0, 2 * math.pi)
            pts.append(SurfacePoint(int(rng.integers(2)), r * math.cos(th), r * math.sin(th)))
        elif kind == "closed_annulus":
            pts.append(SurfacePoint(0, rng.uniform(0, spec.atlas.circumference),
                                    rng.uniform(*spec.atlas.y_range)))
        else:
            pts.append(SurfacePoint(0, rng.uniform(0, 1), rng.uniform(0, 1)))
    return pts


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    builder: Callable[..., FieldSpec]
    schema: dict
    summary: str


CATALOG: dict[str, CatalogEntry] = {
    e.name: e for e in [
        CatalogEntry("linear_torus", linear_torus,
                     {"slope": "float or 'golden'"},
                     "constant-slope flow on the flat torus"),
        CatalogEntry("denjoy_suspension", denjoy_suspension,
                     {"rotation": "float or 'golden'", "gap_constant": "float > 0",
                      "depth": "int >= 1"},
                     "suspension of a wandering-interval circle map"),
        CatalogEntry("hamiltonian_torus_sinsin", hamiltonian_torus_sinsin, {},
                     "rotated gradient of sin(2 pi u) sin(2 pi v)"),
        CatalogEntry("gradient_torus_sinsin", gradient_torus_sinsin, {},
                     "ascending gradient of sin(2 pi u) sin(2 pi v)"),
        CatalogEntry("hamiltonian_sphere_height", hamiltonian_sphere_height, {},
                     "latitude rotation of the round sphere"),
        CatalogEntry("gradient_sphere_height", gradient_sphere_height, {},
                     "pole-to-pole meridian gradient flow"),
        CatalogEntry("single_limit_cycle_torus", single_limit_cycle_torus, {},
                     "one periodic orbit, all other orbits non-recurrent"),
        CatalogEntry("reeb_singular_circle_torus", reeb_singular_circle_torus,
                     {"drift": "float > 0"},
                     "singular circle absorbing every orbit in both directions"),
        CatalogEntry("morse_smale_sphere", morse_smale_sphere, {},
                     "source, attracting cycle, and a degenerate node"),
        CatalogEntry("cantor_annulus", cantor_annulus, {"depth": "int >= 1"},
                     "horizontal annulus flow blocked by a strip of singular points"),
        CatalogEntry("cantor_sphere_height", cantor_sphere_height, {"depth": "int >= 1"},
                     "latitude flow with a totally disconnected singular band"),
    ]
}


def build(name: str, params: dict | None = None) -> FieldSpec:
    if name not in CATALOG:
        raise InvalidParameter(f"unknown catalog flow {name!r}")
    params = dict(params or {})
    params.pop("circle_map", None)
    return CATALOG[name].builder(**params)


def list_catalog() -> list[dict]:
    return [{"name": e.name, "params": e.schema, "summary": e.summary}
            for e in CATALOG.values()]
