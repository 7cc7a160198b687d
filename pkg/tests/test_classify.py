import numpy as np
import pytest

import flowlab as fl
from flowlab import catalog
from flowlab.atlas import SurfacePoint
from flowlab.classify import (ClassifierSettings, LimitLabel, OccupancyGrid, OrbitClass,
                              box_dimension, classify_limit, detect_wandering_domain,
                              orbit_class, section_gap_statistics)
from flowlab.errors import InsufficientData
from flowlab.integrate import IntegratorSettings, integrate, poincare_crossings, resample_arclength
from flowlab.surgery import FakeSaddle, apply_surgery, singularize_section


@pytest.fixture(scope="module")
def denjoy_deep():
    return catalog.build("denjoy_suspension", {"gap_constant": 0.1, "depth": 1100})


def test_separatrix_omega_is_nowhere_dense_sing():
    spec = catalog.build("hamiltonian_torus_sinsin")
    r = classify_limit(spec, SurfacePoint(0, 0.0, 0.3), "omega", budget=100)
    assert r.label is LimitLabel.NowhereDenseSing
    assert r.diagnostics["terminal_dist_to_sing"] < 1e-3


def test_limit_cycle_both_sides():
    spec = catalog.build("single_limit_cycle_torus")
    for side in ("omega", "alpha"):
        r = classify_limit(spec, SurfacePoint(0, 0.3, 0.5), side, budget=400)
        assert r.label is LimitLabel.LimitCycle, side


def test_reeb_settles_on_singular_circle():
    spec = catalog.build("reeb_singular_circle_torus")
    r = classify_limit(spec, SurfacePoint(0, 0.5, 0.5), "omega", budget=2000)
    assert r.label is LimitLabel.NowhereDenseSing
    assert r.diagnostics["settled_fraction"] > 0.9


def test_minimal_flow_fills():
    spec = catalog.build("linear_torus")
    r = classify_limit(spec, SurfacePoint(0, 0.2, 0.7), "omega", budget=1500)
    assert r.label is LimitLabel.LocallyDenseQSet
    assert r.diagnostics["fill_fraction"] >= 0.99
    assert r.diagnostics["box_dimension"] >= 1.9


def test_denjoy_transversely_cantor(denjoy_deep):
    cmap = denjoy_deep.params["circle_map"]
    lo, hi = cmap.gap_by_index(1)
    start = SurfacePoint(0, 0.5, lo + 0.35 * (hi - lo))
    r = classify_limit(denjoy_deep, start, "omega", budget=1150,
                       settings=ClassifierSettings(tol=1e-8))
    assert r.label is LimitLabel.TransverselyCantorQSet
    stats = r.diagnostics["section_stats"]
    assert stats["persistent_gap"] >= r.diagnostics["gap_floor"]


def test_split_orbit_alpha_omega_pair(denjoy_deep):
    cmap = denjoy_deep.params["circle_map"]
    lo, hi = cmap.gap_by_index(1)
    v = lo + 0.35 * (hi - lo)
    spec = apply_surgery(denjoy_deep, FakeSaddle(SurfacePoint(0, 0.5, v)))
    start = SurfacePoint(0, 0.7, v)
    ra = classify_limit(spec, start, "alpha", budget=60,
                        settings=ClassifierSettings(tol=1e-8))
    assert ra.label is LimitLabel.NowhereDenseSing


def test_reversal_duality():
    spec = catalog.build("single_limit_cycle_torus")
    x = SurfacePoint(0, 0.3, 0.5)
    a = classify_limit(spec, x, "alpha", budget=400)
    b = classify_limit(spec.reversed(), x, "omega", budget=400)
    assert a.label is b.label


def test_orbit_classes():
    assert orbit_class(catalog.build("hamiltonian_torus_sinsin"),
                       SurfacePoint(0, 0.25, 0.25)) is OrbitClass.Singular
    assert orbit_class(catalog.build("hamiltonian_torus_sinsin"),
                       SurfacePoint(0, 0.25, 0.4), budget=100) is OrbitClass.Periodic
    assert orbit_class(catalog.build("linear_torus"),
                       SurfacePoint(0, 0.1, 0.2), budget=1500) is OrbitClass.LocallyDense
    # a separatrix converges to singular points in both directions
    assert orbit_class(catalog.build("hamiltonian_torus_sinsin"),
                       SurfacePoint(0, 0.0, 0.3), budget=100) is OrbitClass.ProperNonClosed


def test_denjoy_gap_start_is_proper_nonclosed(denjoy_deep):
    cmap = denjoy_deep.params["circle_map"]
    lo, hi = cmap.gap_by_index(2)
    start = SurfacePoint(0, 0.5, lo + 0.4 * (hi - lo))
    cls = orbit_class(denjoy_deep, start, budget=1100,
                      settings=ClassifierSettings(tol=1e-8))
    assert cls is OrbitClass.ProperNonClosed


def test_box_dimensions():
    # minimal-flow tail covers the torus: dimension 2.0 +- 0.1
    spec = catalog.build("linear_torus")
    tr = integrate(spec, SurfacePoint(0, 0.1, 0.6), t_budget=1500.0,
                   settings=IntegratorSettings(tol=1e-8, detect_closed=False))
    charts, U, V = resample_arclength(tr, 0.0015, 0.5)
    grid = OccupancyGrid.from_samples(spec.atlas, 512, charts, U, V)
    assert box_dimension(grid) == pytest.approx(2.0, abs=0.1)

    # a tail settled on a limit cycle is a curve: dimension 1 +- 0.1
    # (the sphere cycle is long enough to clear the occupied-cell floor)
    ms = catalog.build("morse_smale_sphere")
    tr2 = integrate(ms, SurfacePoint(0, 0.5, 0.0), t_budget=300.0,
                    settings=IntegratorSettings(tol=1e-8, detect_closed=False,
                                                detect_sing=False))
    charts2, U2, V2 = resample_arclength(tr2, 0.0015, 0.5)
    grid2 = OccupancyGrid.from_samples(ms.atlas, 512, charts2, U2, V2)
    assert box_dimension(grid2) == pytest.approx(1.0, abs=0.1)


def test_denjoy_box_dimension_inconclusive_band(denjoy_deep):
    # measured on the construction itself at a budget where line spacing
    # stays above the cell size; the value lands strictly inside (1, 2),
    # which is why the dimension alone never decides a label
    tr = integrate(denjoy_deep, SurfacePoint(0, 0.5, 0.123), t_budget=300.0,
                   settings=IntegratorSettings(tol=1e-8, detect_closed=False))
    charts, U, V = resample_arclength(tr, 0.0015, 0.9)
    grid = OccupancyGrid.from_samples(denjoy_deep.atlas, 512, charts, U, V)
    dim = box_dimension(grid)
    assert 1.0 < dim < 2.0


def test_box_dimension_insufficient_data():
    grid = OccupancyGrid.from_samples(fl.make_torus(), 512,
                                      np.zeros(10, dtype=int),
                                      np.linspace(0, 0.1, 10), np.zeros(10))
    with pytest.raises(InsufficientData):
        box_dimension(grid)


def test_section_gap_statistics_rotation_vs_denjoy(denjoy_deep):
    # rigid rotation hits become dense: the maximal gap keeps shrinking
    rot = (0.123 + fl.GOLDEN * np.arange(4000)) % 1.0
    s1 = section_gap_statistics(rot, wrap=True)
    assert s1["max_gap_sequence"][-1] < s1["max_gap_sequence"][0]
    assert s1["persistent_gap"] < 0.01

    cmap = denjoy_deep.params["circle_map"]
    x = 0.37
    hits = []
    for _ in range(2000):
        x = cmap(x)
        hits.append(x)
    s2 = section_gap_statistics(np.array(hits), wrap=True)
    assert s2["persistent_gap"] >= 0.5 * cmap.widest_gap()
    assert s2["perfectness"] >= 0.5

    # hits accumulating on one point collapse to a tiny terminal cluster
    conv = 1.0 - 0.5 * 0.8 ** np.arange(1000)
    s3 = section_gap_statistics(conv, wrap=True)
    assert s3["last_cluster_width"] < 1e-12
    assert s3["persistent_gap"] > 0.4


def test_wandering_domain_positive_and_negative():
    ca = catalog.build("cantor_annulus", {"depth": 6})
    w = detect_wandering_domain(ca, region=(0, 0.6, 1.4, 0.1, 0.9),
                                n_candidates=64, t_check=120.0, n_verify=1024)
    assert w is not None
    assert w.horizon <= 1e3
    assert orbit_wandering_negative()


def orbit_wandering_negative():
    per = catalog.build("linear_torus", {"slope": 0.5})
    w = detect_wandering_domain(per, region=(0, 0.0, 1.0, 0.0, 1.0),
                                n_candidates=25, t_check=60.0)
    return w is None


def test_minimal_flow_has_no_wandering_witness():
    lt = catalog.build("linear_torus")
    w = detect_wandering_domain(lt, region=(0, 0.0, 1.0, 0.0, 1.0),
                                n_candidates=25, t_check=200.0)
    assert w is None


def test_quasi_q_set_case(denjoy_deep_small=None):
    dj = catalog.build("denjoy_suspension", {"gap_constant": 0.1, "depth": 1200})
    spec = singularize_section(dj)
    lo, hi = dj.params["circle_map"].gap_by_index(0)
    start = SurfacePoint(0, 0.5, lo + 0.35 * (hi - lo))
    r = classify_limit(spec, start, "omega", budget=1400,
                       settings=ClassifierSettings(tol=1e-8))
    assert r.label is LimitLabel.QuasiQSetInSingP
    assert r.diagnostics["late_hits_min_dist_to_sing"] < 1e-3
    assert r.diagnostics["accumulated_nonrecurrent"]
