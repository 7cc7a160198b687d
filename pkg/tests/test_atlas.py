import math

import numpy as np
import pytest

import flowlab as fl
from flowlab.atlas import SurfacePoint, make_annulus, make_sphere, make_torus
from flowlab.circlemap import rigid_rotation
from flowlab.errors import OutOfAtlas


def test_torus_wrap_normalize():
    t = make_torus()
    p = t.normalize(SurfacePoint(0, 1.25, 0.5))
    assert p.u == pytest.approx(0.25, abs=1e-15)
    assert p.v == pytest.approx(0.5, abs=1e-15)


def test_normalize_idempotent_on_fixed_point():
    t = make_torus()
    p = SurfacePoint(0, 0.25, 0.5)
    assert t.normalize(p) == p


def test_mapping_torus_identification():
    rho = 0.374
    g = rigid_rotation(rho)
    mt = fl.MappingTorusAtlas(g, g.inverse)
    p = mt.normalize(SurfacePoint(0, 1.0, 0.3))
    assert p.u == pytest.approx(0.0, abs=1e-15)
    assert p.v == pytest.approx((0.3 + rho) % 1.0, abs=1e-12)


@pytest.mark.parametrize("atlas", [make_torus(), make_sphere(), make_annulus()],
                         ids=["torus", "sphere", "annulus"])
def test_normalize_idempotent_random(atlas):
    rng = np.random.default_rng(5)
    for _ in range(10_000):
        if atlas.kind.value == "sphere":
            p = SurfacePoint(int(rng.integers(2)), rng.uniform(-3, 3), rng.uniform(-3, 3))
        elif atlas.kind.value == "closed_annulus":
            p = SurfacePoint(0, rng.uniform(-3, 6), rng.uniform(*atlas.y_range))
        else:
            p = SurfacePoint(0, rng.uniform(-1, 2), rng.uniform(-1, 2))
        n1 = atlas.normalize(p)
        n2 = atlas.normalize(n1)
        assert atlas.distance(n1, n2) < 1e-12


def test_sphere_transition_cocycle():
    sph = make_sphere()
    rng = np.random.default_rng(7)
    for _ in range(1000):
        r = rng.uniform(0.55, 1.95)
        th = rng.uniform(0, 2 * math.pi)
        p = SurfacePoint(0, r * math.cos(th), r * math.sin(th))
        q = sph.to_chart(sph.to_chart(p, 1), 0)
        assert math.hypot(q.u - p.u, q.v - p.v) < 1e-10


def test_mapping_torus_seam_roundtrip():
    g = fl.build_denjoy_map(fl.GOLDEN, 0.1, 40)
    mt = fl.MappingTorusAtlas(g, g.inverse)
    rng = np.random.default_rng(11)
    for _ in range(1000):
        v = rng.uniform(0, 1)
        assert abs(g.inverse(g(v)) - v) < 1e-12


def test_torus_distance_is_flat_quotient():
    t = make_torus()
    d = t.distance(SurfacePoint(0, 0.1, 0.5), SurfacePoint(0, 0.9, 0.5))
    assert d == pytest.approx(0.2, abs=1e-15)
    assert t.distance(SurfacePoint(0, 0.3, 0.3), SurfacePoint(0, 0.3, 0.3)) == 0.0


def test_sphere_pole_distance():
    # closed-form round-metric oracle: arccos of the ambient dot product
    sph = make_sphere()
    south = SurfacePoint(0, 0.0, 0.0)
    north = SurfacePoint(1, 0.0, 0.0)
    assert sph.distance(south, north) == pytest.approx(math.pi, abs=1e-12)
    a = sph.embed(south)
    b = sph.embed(north)
    assert math.acos(float(np.dot(a, b))) == pytest.approx(math.pi, abs=1e-12)


@pytest.mark.parametrize("atlas", [make_torus(), make_sphere()], ids=["torus", "sphere"])
def test_distance_symmetric_and_triangle(atlas):
    rng = np.random.default_rng(13)
    pts = []
    for _ in range(60):
        if atlas.kind.value == "sphere":
            pts.append(SurfacePoint(int(rng.integers(2)), rng.uniform(-1, 1), rng.uniform(-1, 1)))
        else:
            pts.append(SurfacePoint(0, rng.uniform(0, 1), rng.uniform(0, 1)))
    for i in range(0, 60, 3):
        p, q, r = pts[i], pts[i + 1], pts[i + 2]
        assert atlas.distance(p, q) == atlas.distance(q, p)
        assert atlas.distance(p, r) <= atlas.distance(p, q) + atlas.distance(q, r) + 1e-10


def test_out_of_atlas():
    t = make_torus()
    with pytest.raises(OutOfAtlas):
        t.normalize(SurfacePoint(0, math.nan, 0.0))
    with pytest.raises(OutOfAtlas):
        t.normalize(SurfacePoint(3, 0.1, 0.1))
    a = make_annulus()
    with pytest.raises(OutOfAtlas):
        a.normalize(SurfacePoint(0, 0.5, 5.0))
