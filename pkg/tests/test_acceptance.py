"""Acceptance suite: one test per exit criterion, each printing a PASS line
with its headline numbers. Budgets and tolerances are pinned here; nothing
is deferred to later calibration.

Run with ``pytest tests/test_acceptance.py -v -s``.
"""
import json
import math
import time

import numpy as np
import pytest
from scipy.spatial import cKDTree

import flowlab as fl
from flowlab import catalog
from flowlab.atlas import SurfacePoint
from flowlab.cantor import minkowski_cover_gap, strip_component_scan
from flowlab.classify import (ClassifierSettings, LimitLabel, classify_limit,
                              detect_wandering_domain)
from flowlab.hamiltonian import Verdict, hamiltonian_verdict, pre_hamiltonian_check
from flowlab.integrate import (IntegratorSettings, Termination, advect_cloud, integrate,
                               resample_arclength)
from flowlab.report import reproduce_tables
from flowlab.surgery import FakeSaddle, apply_surgery
from flowlab.report import run as run_task

SING_OR_DENSE = {LimitLabel.NowhereDenseSing, LimitLabel.LocallyDenseQSet}


def _say(line: str) -> None:
    print(f"\n[acceptance] {line}")


# -------------------------------------------------------------------- 1 ---

def test_criterion_1_table_reproduction():
    """All in-scope limit-pair cells reproduce, each case within 60 s."""
    from flowlab.report import run_table_case
    t_per_case = {}
    rows = []
    for cid in _all_case_ids():
        t0 = time.time()
        row = run_table_case(cid)
        t_per_case[cid] = time.time() - t0
        rows.append(row)
    for row in rows:
        assert row["pass"], f"case {row['case']}: expected {row['expected']}, " \
                            f"observed {row['observed']}"
        assert t_per_case[row["case"]] <= 60.0, \
            f"case {row['case']} took {t_per_case[row['case']]:.1f}s"
    # forbidden-cell guard: a pair with one locally dense side and the other
    # side anything but singular/locally-dense never appears
    for row in rows:
        a, w = row["observed"]
        for x, y in ((a, w), (w, a)):
            if x == LimitLabel.LocallyDenseQSet.value:
                assert y in (LimitLabel.LocallyDenseQSet.value,
                             LimitLabel.NowhereDenseSing.value), row
    worst = max(t_per_case.values())
    _say(f"criterion 1 PASS: 9/9 cases, slowest {worst:.1f}s")


def _all_case_ids():
    from flowlab.report import TABLE_CASES
    return sorted(TABLE_CASES)


# -------------------------------------------------------------------- 2 ---

def test_criterion_2_nonwandering_omega_labels():
    """>= 50 non-closed starts per non-wandering catalog flow; every
    omega-label lands in {NowhereDenseSing, LocallyDenseQSet}."""
    rng = np.random.default_rng(202)
    plans = [
        ("linear_torus", {}, 1500, None),
        ("hamiltonian_torus_sinsin", {}, 150, None),
        ("reeb_singular_circle_torus", {}, 2000, None),
    ]
    counts = {}
    for name, params, budget, tol in plans:
        spec = catalog.build(name, params)
        cset = ClassifierSettings() if tol is None else ClassifierSettings(tol=tol)
        labels = []
        for p in catalog.nonclosed_starts(spec, rng, 50):
            r = classify_limit(spec, p, "omega", budget=budget, settings=cset)
            labels.append(r.label)
            assert r.label in SING_OR_DENSE, \
                f"{name} start ({p.u:.4f},{p.v:.4f}) gave {r.label}"
        counts[name] = {lab.value: labels.count(lab) for lab in set(labels)}
    _say(f"criterion 2 PASS: {counts}")


# -------------------------------------------------------------------- 3 ---

def test_criterion_3_hamiltonian_and_gradient_suites():
    """Non-closed orbits of Hamiltonian/gradient fields converge into Sing,
    conserve the first integral to 1e-6 over 10^3 time units at tol 1e-10,
    and show no recurrence."""
    rng = np.random.default_rng(303)
    drift_worst = 0.0
    return_best = math.inf
    for name in ("hamiltonian_torus_sinsin", "gradient_torus_sinsin",
                 "gradient_sphere_height"):
        spec = catalog.build(name)
        is_hamiltonian = spec.hamiltonian is not None
        height = spec.params.get("height")
        starts = catalog.nonclosed_starts(spec, rng, 50)
        assert len(starts) == 50
        for p in starts:
            r = classify_limit(spec, p, "omega", budget=150)
            assert r.label is LimitLabel.NowhereDenseSing, (name, p, r.label)
            assert r.diagnostics["terminal_dist_to_sing"] < 1e-3, (name, p)

            iset = IntegratorSettings(tol=1e-10, t_budget=1e3,
                                      detect_closed=False, detect_sing=False)
            tr = integrate(spec, p, settings=iset)
            if is_hamiltonian:
                h0 = spec.hamiltonian_value(p)
                worst = 0.0
                for c in np.unique(tr.charts):
                    m = tr.charts == c
                    hv = spec.hamiltonian_values(int(c), tr.us[m], tr.vs[m])
                    worst = max(worst, float(np.max(np.abs(hv - h0))))
                drift_worst = max(drift_worst, worst)
                assert worst <= 1e-6, (name, p, worst)
            elif height is not None and spec.atlas.kind.value == "torus":
                hv = height(0, tr.us, tr.vs)
                diffs = np.diff(hv)
                assert np.all(diffs[np.abs(diffs) > 1e-12] > 0), (name, p)

            # recurrence probe: once the orbit leaves a small ball around the
            # start it never comes back near it
            d = np.array([spec.atlas.distance(tr.point(k), p)
                          for k in range(0, tr.n_samples, max(1, tr.n_samples // 400))])
            far = np.flatnonzero(d > 0.05)
            if len(far):
                ret = float(d[far[0]:].min())
                return_best = min(return_best, ret)
                assert ret > 10 * 1e-9, (name, p, ret)
    _say(f"criterion 3 PASS: max drift {drift_worst:.2e}, "
         f"min return distance {return_best:.2e}")


# -------------------------------------------------------------------- 4 ---

@pytest.fixture(scope="module")
def cantor_flow():
    return catalog.build("cantor_annulus", {"depth": 6})


def test_criterion_4a_wandering_witness(cantor_flow):
    w = detect_wandering_domain(cantor_flow, region=(0, 0.6, 1.4, 0.1, 0.9),
                                n_candidates=64, t_check=120.0, n_verify=1024)
    assert w is not None
    assert w.horizon <= 1e3
    assert w.n_points >= 1000
    _say(f"criterion 4a PASS: witness disk at ({w.center.u:.3f},{w.center.v:.3f}), "
         f"horizon {w.horizon:.2f}")


def test_criterion_4b_orbit_union(cantor_flow):
    """Surgered trajectories stay on base-flow orbits: one-sided Hausdorff
    distance below two grid cells."""
    base = catalog.build("linear_torus", {"slope": 0.0})
    base = fl.FieldSpec(atlas=cantor_flow.atlas, base=base.base, name="annulus_base")
    rng = np.random.default_rng(44)
    cell = 1.0 / 512
    iset = IntegratorSettings(tol=1e-9, detect_closed=False)
    worst = 0.0
    for _ in range(50):
        p = SurfacePoint(0, rng.uniform(0, 3), rng.uniform(-0.9, 1.9))
        trs = integrate(cantor_flow, p, t_budget=6.0, settings=iset)
        trb = integrate(base, p, t_budget=6.0,
                        settings=IntegratorSettings(tol=1e-9, detect_closed=False,
                                                    detect_sing=False))
        _, us_s, vs_s = resample_arclength(trs, 1e-3)
        _, us_b, vs_b = resample_arclength(trb, 1e-3)
        # wrap-aware one-sided distance: duplicate base points one period off
        bu = np.concatenate([us_b, us_b + 3.0, us_b - 3.0])
        bv = np.concatenate([vs_b, vs_b, vs_b])
        tree = cKDTree(np.stack([bu, bv], axis=1))
        d, _ = tree.query(np.stack([us_s % 3.0, vs_s], axis=1))
        worst = max(worst, float(d.max()))
    assert worst < 2 * cell
    _say(f"criterion 4b PASS: one-sided Hausdorff {worst:.2e} < {2*cell:.2e}")


def test_criterion_4c_zero_set_components():
    res = strip_component_scan(6)
    assert res["max_component_diameter"] <= 0.5 / 3**6 + 2 * res["cell"]
    _say(f"criterion 4c PASS: {res['n_components']} components, max diameter "
         f"{res['max_component_diameter']:.2e} <= {res['bound']:.2e}")


def test_criterion_4d_confinement(cantor_flow):
    """Every start inside the unit square with height in [0, 1] is blocked
    in at least one time direction: that side's orbit never leaves."""
    rng = np.random.default_rng(45)
    n = 1000
    U0 = rng.uniform(0.0, 1.0, n)
    V0 = rng.uniform(0.0, 1.0, n)
    exited_fwd = np.zeros(n, dtype=bool)
    exited_back = np.zeros(n, dtype=bool)

    def watch_forward(t, U, V):
        exited_fwd[:] |= (U > 1.0 + 1e-9) & (U < 2.5)

    def watch_backward(t, U, V):
        exited_back[:] |= (U > 1.5) & (U < 3.0 - 1e-9)   # wrapped past u = 0

    advect_cloud(cantor_flow, 0, U0, V0, 12.0, callback=watch_forward)
    advect_cloud(cantor_flow.reversed(), 0, U0, V0, 12.0, callback=watch_backward)
    both_exited = exited_fwd & exited_back
    assert not both_exited.any(), \
        f"{int(both_exited.sum())} points escaped in both directions"
    _say(f"criterion 4d PASS: 1000/1000 confined "
         f"(forward-blocked {int((~exited_fwd).sum())}, "
         f"backward-blocked {int((~exited_back).sum())})")


# -------------------------------------------------------------------- 5 ---

def test_criterion_5_minkowski_oracle():
    t0 = time.time()
    for k in range(1, 9):
        tk = time.time()
        assert minkowski_cover_gap(k) == 0.0
        if k == 8:
            assert time.time() - tk <= 1.0
    _say(f"criterion 5 PASS: gap 0 for depths 1..8 in {time.time()-t0:.2f}s")


# -------------------------------------------------------------------- 6 ---

def test_criterion_6_hamiltonian_verdicts():
    v1 = hamiltonian_verdict(catalog.build("hamiltonian_torus_sinsin"))
    assert v1.verdict is Verdict.HAMILTONIAN
    v2 = hamiltonian_verdict(catalog.build("hamiltonian_sphere_height"))
    assert v2.verdict is Verdict.HAMILTONIAN

    ham3 = catalog.build("hamiltonian_torus_sinsin")
    for q in (SurfacePoint(0, 0.25, 0.4), SurfacePoint(0, 0.75, 0.6),
              SurfacePoint(0, 0.25, 0.85)):
        ham3 = apply_surgery(ham3, FakeSaddle(q, width=0.02))
    assert hamiltonian_verdict(ham3).verdict is Verdict.HAMILTONIAN

    sph3 = catalog.build("hamiltonian_sphere_height")
    for q in (SurfacePoint(0, 0.45, 0.0), SurfacePoint(0, -0.7, 0.0),
              SurfacePoint(1, 0.3, 0.2)):
        sph3 = apply_surgery(sph3, FakeSaddle(q, width=0.02))
    assert hamiltonian_verdict(sph3).verdict is Verdict.HAMILTONIAN

    vm = hamiltonian_verdict(catalog.build("linear_torus"))
    assert vm.verdict is Verdict.NOT_HAMILTONIAN
    assert "recurrent_witness" in vm.evidence or "locally_dense_witness" in vm.evidence
    vd = hamiltonian_verdict(catalog.build("denjoy_suspension", {"depth": 300}))
    assert vd.verdict is Verdict.NOT_HAMILTONIAN
    _say("criterion 6 PASS (verdicts): 4x Hamiltonian, 2x NotHamiltonian with witnesses")


def test_criterion_6_pre_hamiltonian_with_wandering():
    spec = catalog.build("cantor_sphere_height", {"depth": 6})
    ok, rep = pre_hamiltonian_check(spec)
    assert ok, rep
    w = detect_wandering_domain(spec, region=(0, -1.0, -0.6, -0.35, 0.35),
                                n_candidates=64, t_check=120.0)
    assert w is not None
    _say("criterion 6 PASS (composite): pre-Hamiltonian holds and a wandering "
         f"witness exists at ({w.center.u:.3f},{w.center.v:.3f})")


# -------------------------------------------------------------------- 7 ---

# spans per field keep the conditioning of the reversal check bounded: a
# backward pass through strong contraction amplifies every method's error
# by exp(L * T), so T is chosen with L * T < ~5
_SPANS = {
    "gradient_torus_sinsin": (0.01, 0.065),
    "hamiltonian_torus_sinsin": (0.05, 0.6),
    "cantor_annulus": (0.02, 0.12),
    "cantor_sphere_height": (0.02, 0.12),
}


def test_criterion_7_integrator_properties():
    rng = np.random.default_rng(707)
    iset = IntegratorSettings(tol=1e-10, detect_closed=False, detect_sing=False)
    tol10 = 10 * iset.tol
    worst_fp = worst_rev = 0.0
    for entry in catalog.list_catalog():
        spec = catalog.build(entry["name"])
        lo, hi = _SPANS.get(entry["name"], (0.05, 0.8))
        n = 0
        while n < 100:
            p = catalog.random_starts(spec, rng, 1)[0]
            if spec.speed(p) < 1e-6:
                continue
            n += 1
            s, t = rng.uniform(lo, hi, 2)
            a = integrate(spec, p, t_budget=s + t, settings=iset).final_point()
            mid = integrate(spec, p, t_budget=t, settings=iset).final_point()
            b = integrate(spec, mid, t_budget=s, settings=iset).final_point()
            d_fp = spec.atlas.distance(a, b)
            worst_fp = max(worst_fp, d_fp)
            assert d_fp <= tol10, (entry["name"], p, s, t, d_fp)
            back = integrate(spec, a, t_budget=s + t, direction="backward",
                             settings=iset).final_point()
            d_rev = spec.atlas.distance(back, p) / (2 * (s + t))
            worst_rev = max(worst_rev, d_rev)
            assert d_rev <= tol10, (entry["name"], p, s, t, d_rev)

    # periodic detection is robust under positive bounded reparametrization
    base = catalog.build("linear_torus", {"slope": 0.5})
    ref = integrate(base, SurfacePoint(0, 0.1, 0.1), t_budget=5.0)
    assert ref.termination.kind is Termination.CLOSED
    for k in range(10):
        a = float(rng.uniform(0.1, 1.0))
        b = float(rng.uniform(0.0, 3.0))

        def factor(chart, U, V, a=a, b=b):
            return a + 0.5 * (1 + np.sin(2 * np.pi * (U + 2 * V))) * b
        scaled = base.with_speed_factor(factor)
        tr = integrate(scaled, SurfacePoint(0, 0.1, 0.1), t_budget=80.0)
        assert tr.termination.kind is Termination.CLOSED, f"scalar #{k}"
        # the oriented trace is unchanged: every sample stays on the closed
        # line through the start (its wrapped residues live on a 1/2 lattice)
        _, us, vs = resample_arclength(tr, 0.01)
        r = ((vs - 0.1) - 0.5 * (us - 0.1)) % 0.5
        d = np.minimum(r, 0.5 - r) / math.sqrt(1 + 0.25)
        assert float(d.max()) < 1e-6
    _say(f"criterion 7 PASS: flow-property worst {worst_fp:.2e}, "
         f"reversal worst {worst_rev:.2e} (bound {tol10:.0e}), "
         "10/10 reparametrized closures")


# -------------------------------------------------------------------- 8 ---

def test_criterion_8_determinism(tmp_path):
    cfg = {"schema": "flowlab-config/1", "task": "classify", "seed": 7,
           "field": {"name": "single_limit_cycle_torus",
                     "surgeries": [{"kind": "fake_saddle", "point": [0, 0.5, 0.0]}]},
           "starts": [[0, 0.3, 0.5], [0, 0.6, 0.25]], "budget": 300}
    run_task(dict(cfg), output_dir=tmp_path / "a")
    run_task(dict(cfg), output_dir=tmp_path / "b")
    ra = (tmp_path / "a" / "report.json").read_bytes()
    rb = (tmp_path / "b" / "report.json").read_bytes()
    assert ra == rb

    tcfg = {"schema": "flowlab-config/1", "task": "tables", "seed": 7,
            "tables": {"cases": ["1", "2", "3"]}}
    run_task(dict(tcfg), output_dir=tmp_path / "ta")
    run_task(dict(tcfg), output_dir=tmp_path / "tb")
    ta = (tmp_path / "ta" / "report.json").read_bytes()
    tb = (tmp_path / "tb" / "report.json").read_bytes()
    assert ta == tb

    rcfg = {"schema": "flowlab-config/1", "task": "render", "seed": 7,
            "field": {"name": "morse_smale_sphere"},
            "render": {"n_seeds": 5, "t_span": 2.0}}
    run_task(dict(rcfg), output_dir=tmp_path / "ra")
    run_task(dict(rcfg), output_dir=tmp_path / "rb")
    sa = (tmp_path / "ra" / "portrait.svg").read_bytes()
    sb = (tmp_path / "rb" / "portrait.svg").read_bytes()
    assert sa == sb
    _say(f"criterion 8 PASS: report, table, and SVG bytes identical "
         f"({len(ra)}, {len(ta)}, {len(sa)} bytes)")
