import math

import numpy as np
import pytest

import flowlab as fl
from flowlab import catalog
from flowlab.atlas import SurfacePoint
from flowlab.errors import InvalidParameter, OverlapError, WrongBase
from flowlab.surgery import (AffinePlacement, CantorStrip, FakeSaddle, GenericBump,
                             apply_surgery, bump_factor, singularize_section)


def test_fake_saddle_factor_values():
    t = fl.make_torus()
    q = SurfacePoint(0, 0.3, 0.7)
    s = FakeSaddle(q)
    assert bump_factor(s, t, q) == 0.0
    assert bump_factor(s, t, SurfacePoint(0, 0.3 + 1.01 * s.width, 0.7)) == 1.0
    assert bump_factor(s, t, SurfacePoint(0, 0.9, 0.1)) == 1.0
    mid = bump_factor(s, t, SurfacePoint(0, 0.3 + s.width / 2, 0.7))
    assert mid == pytest.approx(0.5, abs=1e-12)


def test_factor_range_and_lipschitz():
    t = fl.make_torus()
    s = FakeSaddle(SurfacePoint(0, 0.5, 0.5), width=0.05)
    rng = np.random.default_rng(3)
    U = rng.uniform(0, 1, 500)
    V = rng.uniform(0, 1, 500)
    f = s.factor_many(t, 0, U, V)
    assert np.all((0.0 <= f) & (f <= 1.0))
    # Lipschitz constant 1/width along random short segments
    for i in range(0, 400, 40):
        p1 = np.array([U[i], V[i]])
        p2 = p1 + rng.uniform(-1e-3, 1e-3, 2)
        f1 = s.factor_many(t, 0, p1[:1], p1[1:])[0]
        f2 = s.factor_many(t, 0, p2[:1], p2[1:])[0]
        assert abs(f1 - f2) <= np.hypot(*(p2 - p1)) / s.width + 1e-12


def test_cantor_strip_zero_on_member_points():
    spec = catalog.build("cantor_annulus", {"depth": 6})
    strip = spec.surgeries[0]
    assert bump_factor(strip, spec.atlas, SurfacePoint(0, 0.5, 0.5)) == 0.0
    assert bump_factor(strip, spec.atlas, SurfacePoint(0, 0.0, 0.0)) == 0.0
    assert bump_factor(strip, spec.atlas, SurfacePoint(0, 0.25, 0.25)) > 0.0
    # outside the support box
    assert bump_factor(strip, spec.atlas, SurfacePoint(0, 1.8, 0.5)) == 1.0


def test_eval_vanishes_exactly_on_strip():
    spec = catalog.build("cantor_annulus", {"depth": 6})
    assert np.allclose(spec.eval(SurfacePoint(0, 0.5, 0.5)), [0.0, 0.0])
    t = spec.eval(SurfacePoint(0, 0.25, 0.25))
    assert np.hypot(*t) > 0.0


def test_identity_bump_leaves_eval_unchanged():
    base = catalog.build("linear_torus")
    spec = apply_surgery(base, GenericBump())
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = SurfacePoint(0, rng.uniform(0, 1), rng.uniform(0, 1))
        assert np.array_equal(spec.eval(p), base.eval(p))


def test_overlapping_zero_sets_rejected():
    base = catalog.build("linear_torus")
    q = SurfacePoint(0, 0.5, 0.5)
    spec = apply_surgery(base, FakeSaddle(q))
    with pytest.raises(OverlapError):
        apply_surgery(spec, FakeSaddle(q))


def test_disjoint_surgeries_stack():
    base = catalog.build("linear_torus")
    spec = apply_surgery(base, FakeSaddle(SurfacePoint(0, 0.2, 0.2)))
    spec = apply_surgery(spec, FakeSaddle(SurfacePoint(0, 0.8, 0.8)))
    assert len(spec.surgeries) == 2
    assert np.allclose(spec.eval(SurfacePoint(0, 0.2, 0.2)), [0, 0])
    assert np.allclose(spec.eval(SurfacePoint(0, 0.8, 0.8)), [0, 0])


def test_orbit_splits_at_fake_saddle():
    spec = apply_surgery(catalog.build("linear_torus"),
                         FakeSaddle(SurfacePoint(0, 0.5, 0.5)))
    d = spec.eval(SurfacePoint(0, 0.55, 0.55))
    n = math.hypot(*d)
    start = SurfacePoint(0, 0.5 + 0.02 * d[0] / n, 0.5 + 0.02 * d[1] / n)
    back = fl.integrate(spec, start, t_budget=50.0, direction="backward")
    assert back.termination.kind is fl.Termination.SING
    assert spec.atlas.distance(back.final_point(), SurfacePoint(0, 0.5, 0.5)) < 1e-5


def test_singularize_section_requires_denjoy():
    with pytest.raises(WrongBase):
        singularize_section(catalog.build("linear_torus"))
    rigid = catalog.build("denjoy_suspension", {"gap_constant": 0.0})
    with pytest.raises(WrongBase):
        singularize_section(rigid)
    dj = catalog.build("denjoy_suspension", {"depth": 40})
    with pytest.raises(InvalidParameter):
        singularize_section(dj, depth=999)


def test_singularize_off_section_unchanged():
    dj = catalog.build("denjoy_suspension", {"depth": 40})
    spec = singularize_section(dj)
    rng = np.random.default_rng(8)
    for _ in range(50):
        p = SurfacePoint(0, rng.uniform(0.1, 0.9), rng.uniform(0, 1))
        assert np.max(np.abs(spec.eval(p) - dj.eval(p))) < 1e-12


def test_singularize_zero_on_complement_arcs():
    dj = catalog.build("denjoy_suspension", {"depth": 40})
    spec = singularize_section(dj)
    cmap = dj.params["circle_map"]
    arcs = cmap.complement_arcs()
    mid = 0.5 * (arcs[0, 0] + arcs[0, 1])
    assert np.allclose(spec.eval(SurfacePoint(0, 0.0, mid % 1.0)), [0, 0])
    # gap interiors stay regular
    lo, hi = cmap.gap_by_index(0)
    assert np.hypot(*spec.eval(SurfacePoint(0, 0.0, 0.5 * (lo + hi)))) > 0


def test_singularized_orbit_terminates_near_sing():
    dj = catalog.build("denjoy_suspension", {"depth": 60})
    spec = singularize_section(dj)
    lo, hi = dj.params["circle_map"].gap_by_index(0)
    start = SurfacePoint(0, 0.5, lo + 0.35 * (hi - lo))
    tr = fl.integrate(spec, start, t_budget=200.0,
                      settings=fl.IntegratorSettings(tol=1e-8, detect_closed=False))
    assert tr.termination.kind is fl.Termination.SING
    assert spec.sing_distance(tr.final_point()) < 1e-6
