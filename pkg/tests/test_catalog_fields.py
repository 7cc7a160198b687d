import math

import numpy as np
import pytest

import flowlab as fl
from flowlab import catalog
from flowlab.atlas import SurfacePoint
from flowlab.errors import InconsistentHamiltonian
from flowlab.fields import check_hamiltonian_consistency, h_sin_sin
from flowlab.integrate import IntegratorSettings, integrate

GOLDEN = fl.GOLDEN


def test_linear_torus_constant_field():
    spec = catalog.build("linear_torus", {"slope": "golden"})
    for p in [SurfacePoint(0, 0.1, 0.9), SurfacePoint(0, 0.7, 0.2)]:
        assert np.allclose(spec.eval(p), [1.0, GOLDEN])


def test_sinsin_critical_points():
    spec = catalog.build("hamiltonian_torus_sinsin")
    # analytic oracle: the critical points of the generating function sit on
    # the quarter lattice; centers where both sines are extremal, saddles
    # where both vanish
    for u, v in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5),
                 (0.25, 0.25), (0.75, 0.75)]:
        assert np.allclose(spec.eval(SurfacePoint(0, u, v)), [0.0, 0.0], atol=1e-12)
    t = spec.eval(SurfacePoint(0, 0.3, 0.7))
    assert np.hypot(*t) > 0.1


def test_constant_hamiltonian_zero_field():
    spec = catalog.hamiltonian_field("constant")
    assert np.allclose(spec.eval(SurfacePoint(0, 0.3, 0.4)), [0.0, 0.0])


def test_inconsistent_hamiltonian_raises():
    def bad_h(chart, U, V):
        return np.asarray(U, dtype=float)      # not periodic on the torus
    with pytest.raises(InconsistentHamiltonian):
        check_hamiltonian_consistency(fl.make_torus(), bad_h)


def test_sphere_height_field_latitudes():
    spec = catalog.build("hamiltonian_sphere_height")
    p = SurfacePoint(0, 0.5, 0.0)
    assert np.allclose(spec.eval(p), [0.0, 0.5])
    # poles singular
    assert np.allclose(spec.eval(SurfacePoint(0, 0.0, 0.0)), [0, 0])
    assert np.allclose(spec.eval(SurfacePoint(1, 0.0, 0.0)), [0, 0])


def test_reeb_zero_set_is_exactly_the_circle():
    spec = catalog.build("reeb_singular_circle_torus")
    assert np.allclose(spec.eval(SurfacePoint(0, 0.5, 0.0)), [0, 0])
    # a grid scan of the speed: zeros only within resolution of v = 0
    uu = np.linspace(0, 1, 64, endpoint=False)
    vv = np.linspace(0, 1, 257, endpoint=False)
    U, V = np.meshgrid(uu, vv, indexing="ij")
    du, dv = spec.eval_many(0, U.ravel(), V.ravel())
    mag = np.hypot(du, dv).reshape(64, 257)
    small = np.flatnonzero(mag.min(axis=0) < 1e-3)
    dist_to_circle = np.minimum(vv[small], 1.0 - vv[small])
    assert np.all(dist_to_circle < 1 / 256)


def test_pushforward_continuity_across_sphere_charts():
    sph = fl.make_sphere()
    rng = np.random.default_rng(0)
    for name in ("hamiltonian_sphere_height", "gradient_sphere_height",
                 "morse_smale_sphere"):
        spec = catalog.build(name)
        worst = 0.0
        for _ in range(200):
            r = rng.uniform(0.6, 1.9)
            th = rng.uniform(0, 2 * math.pi)
            p0 = SurfacePoint(0, r * math.cos(th), r * math.sin(th))
            p1 = sph.to_chart(p0, 1)
            push = sph.transition_jacobian(p0) @ spec.eval(p0)
            worst = max(worst, float(np.max(np.abs(push - spec.eval(p1)))))
        assert worst < 1e-9, name


def test_first_integral_conservation_random_starts():
    # scaled-down version of the long-horizon conservation property (the
    # acceptance module runs the full-horizon version on non-closed starts)
    spec = catalog.build("hamiltonian_torus_sinsin")
    rng = np.random.default_rng(1)
    iset = IntegratorSettings(tol=1e-10, t_budget=100.0,
                              detect_closed=False, detect_sing=False)
    for p in catalog.random_starts(spec, rng, 10):
        h0 = spec.hamiltonian_value(p)
        tr = integrate(spec, p, settings=iset)
        drift = np.max(np.abs(spec.hamiltonian_values(0, tr.us, tr.vs) - h0))
        assert drift <= 1e-6


def test_gradient_monotone_along_orbits():
    spec = catalog.build("gradient_torus_sinsin")
    height = spec.params["height"]
    rng = np.random.default_rng(2)
    iset = IntegratorSettings(tol=1e-10, t_budget=20.0, detect_closed=False)
    for p in catalog.nonclosed_starts(spec, rng, 10):
        tr = integrate(spec, p, settings=iset)
        hv = height(0, tr.us, tr.vs)
        diffs = np.diff(hv)
        # strictly increasing until the terminal crawl
        assert np.all(diffs[np.abs(diffs) > 1e-12] > 0)


def test_rational_slope_closes_in_q():
    spec = catalog.build("linear_torus", {"slope": 0.5})
    tr = integrate(spec, SurfacePoint(0, 0.0, 0.0), t_budget=5.0)
    assert tr.termination.kind is fl.Termination.CLOSED
    assert tr.termination.period == pytest.approx(2.0, abs=1e-9)
    fp = tr.final_point()
    assert spec.atlas.distance(fp, SurfacePoint(0, 0, 0)) < 1e-9


def test_catalog_listing():
    names = {e["name"] for e in catalog.list_catalog()}
    assert {"linear_torus", "denjoy_suspension", "hamiltonian_torus_sinsin",
            "single_limit_cycle_torus", "reeb_singular_circle_torus",
            "morse_smale_sphere", "cantor_annulus"} <= names
