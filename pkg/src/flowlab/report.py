"""Run configuration, task dispatch, and the limit-pair table reproduction.

Configs are single JSON documents with a versioned schema; unknown keys
anywhere raise ConfigError with a dotted pointer. Reports echo the full
config and every tunable, and identical config + seed reproduces identical
report bytes.

The limit-pair table lists, for each realizable (alpha, omega) cell within
scope, a concrete construction, a start point, and the expected pair of
labels. Expected labels are fixed constants of each construction's design;
they are never copied from observations.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import catalog
from .atlas import SurfacePoint
from .classify import (ClassifierSettings, LimitLabel, classify_limit,
                       detect_wandering_domain, orbit_class)
from .errors import ConfigError, FlowlabError
from .fields import FieldSpec
from .hamiltonian import hamiltonian_verdict, pre_hamiltonian_check
from .integrate import IntegratorSettings, integrate
from .surgery import (AffinePlacement, CantorStrip, FakeSaddle, PolarPlacement,
                      apply_surgery, singularize_section)

CONFIG_SCHEMA = "flowlab-config/1"
REPORT_SCHEMA = "flowlab-report/1"


# ---------------------------------------------------------------------------
# limit-pair table cases

@dataclass(frozen=True)
class TableCase:
    case_id: str
    summary: str
    expected_alpha: LimitLabel
    expected_omega: LimitLabel
    budget_alpha: float
    budget_omega: float
    tol: float = 1e-10

    def build(self) -> tuple[FieldSpec, SurfacePoint]:
        raise NotImplementedError


def _case_gradient_sphere():
    return catalog.build("gradient_sphere_height"), SurfacePoint(0, 0.5, 0.0)


def _case_reeb():
    return catalog.build("reeb_singular_circle_torus"), SurfacePoint(0, 0.5, 0.5)


def _case_morse_smale():
    return catalog.build("morse_smale_sphere"), SurfacePoint(0, 0.12, 0.0)


def _case_limit_cycle():
    return catalog.build("single_limit_cycle_torus"), SurfacePoint(0, 0.3, 0.5)


def _case_quasi_circuit():
    spec = catalog.build("single_limit_cycle_torus")
    spec = apply_surgery(spec, FakeSaddle(SurfacePoint(0, 0.5, 0.0)))
    return spec, SurfacePoint(0, 0.3, 0.5)


def _case_split_minimal():
    spec = catalog.build("linear_torus")
    q = SurfacePoint(0, 0.5, 0.5)
    spec = apply_surgery(spec, FakeSaddle(q))
    d = spec.eval(SurfacePoint(0, 0.52, 0.52))
    n = math.hypot(d[0], d[1])
    start = SurfacePoint(0, q.u + 0.03 * d[0] / n, q.v + 0.03 * d[1] / n)
    return spec, start


def _case_split_denjoy():
    spec = catalog.build("denjoy_suspension", {"gap_constant": 0.1, "depth": 1100})
    cmap = spec.params["circle_map"]
    lo, hi = cmap.gap_by_index(1)
    v = lo + 0.35 * (hi - lo)
    spec = apply_surgery(spec, FakeSaddle(SurfacePoint(0, 0.5, v)))
    return spec, SurfacePoint(0, 0.7, v)


def _case_minimal():
    return catalog.build("linear_torus"), SurfacePoint(0, 0.2, 0.7)


def _case_singular_section():
    spec = catalog.build("denjoy_suspension", {"gap_constant": 0.1, "depth": 1200})
    cmap = spec.params["circle_map"]
    spec = singularize_section(spec)
    lo, hi = cmap.gap_by_index(0)
    v = lo + 0.35 * (hi - lo)
    return spec, SurfacePoint(0, 0.5, v)


_BUILDERS = {
    "1": _case_gradient_sphere,
    "1p": _case_reeb,
    "2": _case_morse_smale,
    "3": _case_limit_cycle,
    "3p": _case_quasi_circuit,
    "4": _case_split_minimal,
    "5": _case_split_denjoy,
    "7": _case_minimal,
    "9": _case_singular_section,
}

TABLE_CASES: dict[str, TableCase] = {
    "1": TableCase("1", "pole-to-pole gradient flow on the sphere",
                   LimitLabel.NowhereDenseSing, LimitLabel.NowhereDenseSing, 60, 60),
    "1p": TableCase("1p", "singular-circle band flow on the torus",
                    LimitLabel.NowhereDenseSing, LimitLabel.NowhereDenseSing, 2000, 2000),
    "2": TableCase("2", "source spiraling onto an attracting cycle on the sphere",
                   LimitLabel.NowhereDenseSing, LimitLabel.LimitCycle, 60, 250),
    "3": TableCase("3", "unique periodic orbit on the torus, both limit sets the cycle",
                   LimitLabel.LimitCycle, LimitLabel.LimitCycle, 400, 400),
    "3p": TableCase("3p", "the cycle of case 3 broken by one singular point",
                    LimitLabel.LimitQuasiCircuit, LimitLabel.LimitQuasiCircuit, 400, 400),
    "4": TableCase("4", "minimal flow with one orbit split at a singular point",
                   LimitLabel.NowhereDenseSing, LimitLabel.LocallyDenseQSet, 60, 1500),
    "5": TableCase("5", "wandering-interval suspension with one split orbit",
                   LimitLabel.NowhereDenseSing, LimitLabel.TransverselyCantorQSet,
                   60, 1150, tol=1e-8),
    "7": TableCase("7", "minimal flow on the torus",
                   LimitLabel.LocallyDenseQSet, LimitLabel.LocallyDenseQSet, 1500, 1500),
    "9": TableCase("9", "wandering-interval suspension with the section set singular",
                   LimitLabel.QuasiQSetInSingP, LimitLabel.QuasiQSetInSingP,
                   1400, 1400, tol=1e-8),
}


def run_table_case(case_id: str, classifier: ClassifierSettings | None = None) -> dict:
    case = TABLE_CASES[case_id]
    spec, start = _BUILDERS[case_id]()
    cset = classifier or ClassifierSettings()
    cset = replace(cset, tol=case.tol)
    ra = classify_limit(spec, start, "alpha", budget=case.budget_alpha, settings=cset)
    rw = classify_limit(spec, start, "omega", budget=case.budget_omega, settings=cset)
    ok = (ra.label is case.expected_alpha) and (rw.label is case.expected_omega)
    return {
        "case": case_id,
        "summary": case.summary,
        "flow": spec.name,
        "start": [start.chart, start.u, start.v],
        "expected": [case.expected_alpha.value, case.expected_omega.value],
        "observed": [ra.label.value, rw.label.value],
        "pass": bool(ok),
        "alpha_report": ra.as_dict(),
        "omega_report": rw.as_dict(),
    }


def reproduce_tables(case_ids=None, classifier: ClassifierSettings | None = None,
                     max_workers: int = 1) -> dict:
    ids = list(case_ids) if case_ids else sorted(TABLE_CASES)
    for cid in ids:
        if cid not in TABLE_CASES:
            raise ConfigError(f"tables.cases: unknown case {cid!r}")
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda c: run_table_case(c, classifier), ids))
    else:
        rows = [run_table_case(c, classifier) for c in ids]
    rows.sort(key=lambda r: r["case"])
    return {"rows": rows, "all_pass": all(r["pass"] for r in rows)}


# ---------------------------------------------------------------------------
# config validation

def _check_keys(obj: dict, allowed: dict, path: str) -> None:
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"{path}{k}: unknown key")
    for k, sub in allowed.items():
        if sub is not None and k in obj and isinstance(obj[k], dict):
            _check_keys(obj[k], sub, f"{path}{k}.")


_SURGERY_KEYS = {"kind": None, "point": None, "width": None, "depth": None,
                 "placement": {"type": None, "chart": None, "origin": None,
                               "scale": None, "quarter_turns": None, "theta0": None,
                               "theta_scale": None, "r0": None, "r_scale": None}}

_ALLOWED = {
    "schema": None,
    "task": None,
    "seed": None,
    "output_dir": None,
    "field": {"name": None, "params": None, "surgeries": None},
    "integrator": {k: None for k in IntegratorSettings().__dataclass_fields__},
    "classifier": {k: None for k in ClassifierSettings().__dataclass_fields__},
    "starts": None,
    "sides": None,
    "budget": None,
    "wandering": {"region": None, "n_candidates": None, "t_check": None,
                  "radius": None, "n_verify": None},
    "tables": {"cases": None},
    "render": {"n_seeds": None, "t_span": None, "filename": None},
}

_TASKS = ("simulate", "classify", "wandering", "ham-check", "tables", "render")


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("top level: config must be a JSON object")
    _check_keys(cfg, _ALLOWED, "")
    if cfg.get("schema") != CONFIG_SCHEMA:
        raise ConfigError(f"schema: expected {CONFIG_SCHEMA!r}, got {cfg.get('schema')!r}")
    task = cfg.get("task")
    if task not in _TASKS:
        raise ConfigError(f"task: expected one of {_TASKS}, got {task!r}")
    if task in ("simulate", "classify", "wandering", "ham-check", "render") and "field" not in cfg:
        raise ConfigError(f"field: required for task {task!r}")
    for srg in cfg.get("field", {}).get("surgeries", []) or []:
        _check_keys(srg, _SURGERY_KEYS, "field.surgeries[].")
    return cfg


def build_field(field_cfg: dict) -> FieldSpec:
    spec = catalog.build(field_cfg["name"], field_cfg.get("params"))
    for srg in field_cfg.get("surgeries", []) or []:
        kind = srg.get("kind")
        width = float(srg.get("width", 0.05))
        if kind == "fake_saddle":
            c, u, v = srg["point"]
            spec = apply_surgery(spec, FakeSaddle(SurfacePoint(int(c), float(u), float(v)),
                                                  width=width))
        elif kind == "cantor_strip":
            pl_cfg = srg.get("placement", {}) or {}
            pl_type = pl_cfg.get("type", "affine")
            if pl_type == "affine":
                pl = AffinePlacement(chart=int(pl_cfg.get("chart", 0)),
                                     origin=tuple(pl_cfg.get("origin", (0.0, 0.0))),
                                     scale=float(pl_cfg.get("scale", 1.0)),
                                     quarter_turns=int(pl_cfg.get("quarter_turns", 0)))
            elif pl_type == "polar":
                pl = PolarPlacement(chart=int(pl_cfg.get("chart", 0)),
                                    theta0=float(pl_cfg.get("theta0", 0.0)),
                                    theta_scale=float(pl_cfg.get("theta_scale", 0.5)),
                                    r0=float(pl_cfg.get("r0", 0.8)),
                                    r_scale=float(pl_cfg.get("r_scale", 0.25)))
            else:
                raise ConfigError(f"field.surgeries[].placement.type: unknown {pl_type!r}")
            spec = apply_surgery(spec, CantorStrip(depth=int(srg.get("depth", 6)),
                                                   placement=pl, width=width))
        elif kind == "singularize_section":
            spec = singularize_section(spec, width=float(srg.get("width", 0.004)))
        else:
            raise ConfigError(f"field.surgeries[].kind: unknown {kind!r}")
    return spec


def _settings_from(cfg: dict, key: str, cls):
    body = cfg.get(key, {}) or {}
    st = cls()
    if body:
        st = replace(st, **{k: v for k, v in body.items()})
    return st


def _resolve_starts(cfg: dict, spec: FieldSpec, rng) -> list[SurfacePoint]:
    starts = cfg.get("starts")
    if starts is None:
        return catalog.random_starts(spec, rng, 8)
    if isinstance(starts, dict):
        n = int(starts.get("count", 8))
        sampler = starts.get("sampler", "random")
        if sampler == "random":
            return catalog.random_starts(spec, rng, n)
        if sampler == "nonclosed":
            return catalog.nonclosed_starts(spec, rng, n)
        raise ConfigError(f"starts.sampler: unknown {sampler!r}")
    return [SurfacePoint(int(c), float(u), float(v)) for c, u, v in starts]


def _max_workers() -> int:
    env = os.environ.get("FLOWLAB_THREADS")
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# task dispatch

def run(cfg: dict, output_dir: str | None = None) -> dict:
    """Execute a validated config; returns the report dict and writes
    report.json (plus task artifacts) under the output directory."""
    cfg = validate_config(cfg)
    task = cfg["task"]
    seed = int(cfg.get("seed", 0))
    out_dir = Path(output_dir or cfg.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    iset = _settings_from(cfg, "integrator", IntegratorSettings)
    cset = _settings_from(cfg, "classifier", ClassifierSettings)
    report: dict = {
        "schema": REPORT_SCHEMA,
        "task": task,
        "seed": seed,
        "config": cfg,
        "tunables": {"integrator": iset.as_dict(), "classifier": cset.as_dict()},
    }

    if task == "tables":
        ids = (cfg.get("tables", {}) or {}).get("cases")
        report["tables"] = reproduce_tables(ids, cset, _max_workers())
    elif task == "simulate":
        spec = build_field(cfg["field"])
        starts = _resolve_starts(cfg, spec, rng)
        budget = float(cfg.get("budget", iset.t_budget))
        rows = []
        for i, p in enumerate(starts):
            traj = integrate(spec, p, t_budget=budget, settings=iset)
            fname = f"trajectory_{i:03d}.tsv"
            (out_dir / fname).write_text(traj.export_text())
            fp = traj.final_point()
            rows.append({"start": [p.chart, p.u, p.v],
                         "termination": traj.termination.kind.value,
                         "period": traj.termination.period,
                         "final": [fp.chart, fp.u, fp.v],
                         "n_samples": traj.n_samples,
                         "file": fname})
        report["simulate"] = rows
    elif task == "classify":
        spec = build_field(cfg["field"])
        starts = _resolve_starts(cfg, spec, rng)
        sides = cfg.get("sides", ["omega", "alpha"])
        budget = cfg.get("budget")
        jobs = [(p, side) for p in starts for side in sides]

        def one(job):
            p, side = job
            return classify_limit(spec, p, side, budget=budget, settings=cset).as_dict()

        workers = _max_workers()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(one, jobs))
        else:
            rows = [one(j) for j in jobs]
        report["classify"] = rows
    elif task == "wandering":
        spec = build_field(cfg["field"])
        w = cfg.get("wandering", {}) or {}
        region = w.get("region")
        if region is None:
            raise ConfigError("wandering.region: required")
        witness = detect_wandering_domain(
            spec, region=(int(region[0]), *map(float, region[1:])),
            n_candidates=int(w.get("n_candidates", 1024)),
            t_check=float(w.get("t_check", 200.0)),
            radius=float(w.get("radius", 0.02)),
            n_verify=int(w.get("n_verify", 1024)))
        report["wandering"] = None if witness is None else witness.as_dict()
    elif task == "ham-check":
        spec = build_field(cfg["field"])
        verdict = hamiltonian_verdict(spec, seed=seed)
        report["ham_check"] = verdict.as_dict()
        if spec.hamiltonian is not None:
            ok, pre = pre_hamiltonian_check(spec, seed=seed)
            report["ham_check"]["pre_hamiltonian"] = {"ok": ok,
                                                      "n_orbits": pre.get("n_orbits"),
                                                      "n_arcs": pre.get("n_arcs"),
                                                      "failures": {
                k: len(v) for k, v in pre.items() if isinstance(v, list)}}
        if verdict.graph is not None:
            (out_dir / "orbit_graph.dot").write_text(verdict.graph.to_dot())
            report["ham_check"]["graph_file"] = "orbit_graph.dot"
    elif task == "render":
        from .render import render_phase_portrait, save_svg
        spec = build_field(cfg["field"])
        r = cfg.get("render", {}) or {}
        fig = render_phase_portrait(spec, seed=seed,
                                    n_seeds=int(r.get("n_seeds", 8)),
                                    t_span=float(r.get("t_span", 3.0)))
        fname = r.get("filename", "portrait.svg")
        save_svg(fig, out_dir / fname, seed=seed)
        report["render"] = {"file": fname}

    text = json.dumps(report, sort_keys=True, indent=2, allow_nan=True)
    (out_dir / "report.json").write_text(text + "\n")
    return report


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON ({e.msg})") from e
    except OSError as e:
        raise ConfigError(f"{path}: {e}") from e
