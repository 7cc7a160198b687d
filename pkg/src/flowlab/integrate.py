"""Trajectory integration across chart transitions.

The stepper is an adaptive embedded Dormand-Prince 5(4) pair with
error-per-unit-step control (accepted-step estimate <= tol * h * scale), so
the accumulated drift over a time span T stays near tol * T; the
first-integral acceptance checks rely on that. Steps are also capped by a
displacement bound so that consecutive samples stay within one chart
transition of each other and within-step linear interpolation is safe for
resampling and event bracketing.

Events handled on accepted steps:

* mapping-torus seam crossings (the gluing map is applied exactly at the
  crossing and the crossing fiber coordinate is recorded -- these are the
  exact return-map iterates);
* sphere chart hand-over with hysteresis at r = 1.5;
* verified closure: when the state re-enters a capture ball around the
  start after having left it, the closest approach is refined inside the
  step and the run terminates ClosedUp(period) if it lands within
  closed_tol;
* convergence to the declared singular set: speed below speed_floor within
  sing_capture of a declared zero set terminates ConvergedToSing.

Termination is otherwise BudgetExhausted; a step-size underflow away from
any declared zero set raises StiffnessAbort.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .atlas import AtlasKind, MappingTorusAtlas, SphereAtlas, SurfaceAtlas, SurfacePoint
from .errors import InsufficientData, NotTransverse, StiffnessAbort
from .fields import FieldSpec, Section

# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


class Termination(Enum):
    BUDGET = "BudgetExhausted"
    SING = "ConvergedToSing"
    CLOSED = "ClosedUp"


@dataclass(frozen=True)
class TerminationInfo:
    kind: Termination
    period: float | None = None
    point: SurfacePoint | None = None
    detail: str = ""


@dataclass
class IntegratorSettings:
    tol: float = 1e-10
    t_budget: float = 1e4
    max_steps: int = 10_000_000
    max_step: float = 0.5
    max_displacement: float = 0.05
    min_step: float = 1e-15
    speed_floor: float = 1e-9
    sing_capture: float = 1e-6
    closed_tol: float = 1e-9
    detect_closed: bool = True
    detect_sing: bool = True
    min_period: float = 1e-3
    # near the declared zero set, cap the step displacement by this fraction
    # of the distance to it, so a step can never jump across a conical zero
    # (past it the factor field pushes away, turning one accepted overshoot
    # into an escape); proximity is tracked through a 1-Lipschitz cache so
    # the exact distance is queried only when actually close
    slow_zone_frac: float = 0.5

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class Trajectory:
    """Time-stamped samples of one integration run.

    ``dus``/``dvs`` hold the unwrapped displacement from the previous sample
    in the previous sample's chart frame, which is what event refinement and
    resampling interpolate over. ``seam_hits`` records mapping-torus section
    crossings (time, fiber coordinate on the section).
    """

    spec: FieldSpec
    work_spec: FieldSpec
    direction: str
    settings: IntegratorSettings
    times: np.ndarray
    charts: np.ndarray
    us: np.ndarray
    vs: np.ndarray
    dus: np.ndarray
    dvs: np.ndarray
    termination: TerminationInfo
    seam_hits: list = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def final_point(self) -> SurfacePoint:
        return SurfacePoint(int(self.charts[-1]), float(self.us[-1]), float(self.vs[-1]))

    def point(self, i: int) -> SurfacePoint:
        return SurfacePoint(int(self.charts[i]), float(self.us[i]), float(self.vs[i]))

    def total_time(self) -> float:
        return float(abs(self.times[-1] - self.times[0]))

    def export_text(self) -> str:
        lines = ["# t\tchart\tu\tv"]
        for t, c, u, v in zip(self.times, self.charts, self.us, self.vs):
            lines.append(f"{t:.12g}\t{int(c)}\t{u:.12g}\t{v:.12g}")
        return "\n".join(lines) + "\n"


def _eval(spec: FieldSpec, chart: int, u: float, v: float) -> tuple[float, float]:
    return spec.eval_scalar(chart, u, v)


_A21, = _A[1]
_A31, _A32 = _A[2]
_A41, _A42, _A43 = _A[3]
_A51, _A52, _A53, _A54 = _A[4]
_A61, _A62, _A63, _A64, _A65 = _A[5]
_A71, _A72, _A73, _A74, _A75, _A76 = _A[6]
_E1, _E2, _E3, _E4, _E5, _E6, _E7 = _E


def _rk_step(spec, chart, u, v, h):
    """One DP45 step; returns (u5, v5, error estimate). Unrolled: this is
    the integrator's inner loop."""
    f = spec.eval_scalar
    k1u, k1v = f(chart, u, v)
    k2u, k2v = f(chart, u + h * (_A21 * k1u), v + h * (_A21 * k1v))
    k3u, k3v = f(chart, u + h * (_A31 * k1u + _A32 * k2u),
                 v + h * (_A31 * k1v + _A32 * k2v))
    k4u, k4v = f(chart, u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
                 v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v))
    k5u, k5v = f(chart, u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
                 v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v))
    k6u, k6v = f(chart,
                 u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u),
                 v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v))
    u5 = u + h * (_A71 * k1u + _A73 * k3u + _A74 * k4u + _A75 * k5u + _A76 * k6u)
    v5 = v + h * (_A71 * k1v + _A73 * k3v + _A74 * k4v + _A75 * k5v + _A76 * k6v)
    k7u, k7v = f(chart, u5, v5)
    eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
    ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
    return u5, v5, math.hypot(eu, ev)


def _rk4_advance(spec, chart, u, v, h):
    """Single classical RK4 step, used for in-step event refinement."""
    k1u, k1v = _eval(spec, chart, u, v)
    k2u, k2v = _eval(spec, chart, u + 0.5 * h * k1u, v + 0.5 * h * k1v)
    k3u, k3v = _eval(spec, chart, u + 0.5 * h * k2u, v + 0.5 * h * k2v)
    k4u, k4v = _eval(spec, chart, u + h * k3u, v + h * k3v)
    return (u + h * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0,
            v + h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0)


def integrate(spec: FieldSpec, x0: SurfacePoint, t_budget: float | None = None,
              tol: float | None = None, direction: str = "forward",
              settings: IntegratorSettings | None = None) -> Trajectory:
    """Integrate the flow of ``spec`` from ``x0``.

    ``direction="backward"`` integrates the reversed field and reports
    negative times.
    """
    st = settings or IntegratorSettings()
    if t_budget is not None:
        st = replace(st, t_budget=float(t_budget))
    if tol is not None:
        if not (1e-14 <= tol <= 1e-3):
            raise ValueError("tol must lie in [1e-14, 1e-3]")
        st = replace(st, tol=float(tol))

    work = spec if direction == "forward" else spec.reversed()
    atlas = spec.atlas
    start = atlas.normalize(x0)
    is_mapping = isinstance(atlas, MappingTorusAtlas)
    is_sphere = isinstance(atlas, SphereAtlas)

    chart, u, v = start.chart, start.u, start.v
    t = 0.0
    times = [0.0]
    charts = [chart]
    us = [u]
    vs = [v]
    dus = [0.0]
    dvs = [0.0]
    seam_hits: list[tuple[float, float]] = []

    du0, dv0 = _eval(work, chart, u, v)
    speed = math.hypot(du0, dv0)
    capture_radius = max(0.05, 1.2 * st.max_displacement)

    term: TerminationInfo | None = None
    if st.detect_sing and spec.has_declared_sing() and speed < st.speed_floor:
        d = spec.sing_distance(SurfacePoint(chart, u, v))
        if d < st.sing_capture:
            term = TerminationInfo(Termination.SING, point=SurfacePoint(chart, u, v),
                                   detail=f"start already at rest, distance {d:.2e}")

    h = min(st.max_step, 1e-3 if speed == 0 else min(st.max_step, 0.01 / max(speed, 1e-12)))
    left_start = False
    refined_episode = False
    d_prev_start = math.inf
    prev_state = None
    flat_wrap = atlas.kind in (AtlasKind.TORUS, AtlasKind.MAPPING_TORUS,
                               AtlasKind.CLOSED_ANNULUS)
    wrap_len = atlas.circumference if atlas.kind is AtlasKind.CLOSED_ANNULUS else 1.0
    watch_sing = st.detect_sing and spec.has_declared_sing()
    d_sing_cache = spec.sing_distance(start) if watch_sing else math.inf
    n_steps = 0

    while term is None:
        remaining = st.t_budget - t
        if remaining < 1e-12 * max(1.0, st.t_budget) or n_steps >= st.max_steps:
            term = TerminationInfo(Termination.BUDGET)
            break
        h = min(h, remaining, st.max_step)
        if speed > 0:
            h = min(h, st.max_displacement / speed)
            if watch_sing and d_sing_cache < 2.0 * st.max_displacement:
                d_sing_cache = spec.sing_distance(SurfacePoint(chart, u, v))
                if d_sing_cache < 2.0 * st.max_displacement:
                    h = min(h, max(st.slow_zone_frac * d_sing_cache, 1e-9) / speed)
        if h < st.min_step:
            d = spec.sing_distance(SurfacePoint(chart, u, v)) if spec.has_declared_sing() else math.inf
            if d < 1e-3:
                term = TerminationInfo(Termination.SING, point=SurfacePoint(chart, u, v),
                                       detail="step underflow inside the slow zone")
                break
            raise StiffnessAbort(f"step size underflow at t={t:.6g}, point=({u:.6g},{v:.6g})")

        u5, v5, err = _rk_step(work, chart, u, v, h)
        scale = 1.0 + max(abs(u), abs(v))
        target = st.tol * h * scale
        n_steps += 1
        if err > target and h > st.min_step:
            h *= max(0.2, 0.9 * (target / max(err, 1e-300)) ** 0.2)
            continue

        # accepted; handle events inside [t, t+h]
        step_h = h
        u_new, v_new = u5, v5
        crossed = None
        if is_mapping:
            if u_new >= 1.0:
                s = _bisection_time(work, chart, u, v, step_h, lambda uu, vv: uu - 1.0)
                uc, vc = _rk4_advance(work, chart, u, v, s)
                hit_coord = atlas.g(vc % 1.0)
                seam_hits.append((_signed(t + s, direction), hit_coord))
                crossed = (s, 0.0, hit_coord)
            elif u_new < 0.0:
                s = _bisection_time(work, chart, u, v, step_h, lambda uu, vv: uu)
                uc, vc = _rk4_advance(work, chart, u, v, s)
                hit_coord = vc % 1.0
                seam_hits.append((_signed(t + s, direction), hit_coord))
                crossed = (s, 1.0, atlas.g_inv(hit_coord))
        if crossed is not None:
            s, u_re, v_re = crossed
            du_s, dv_s = u_re - u, v_re - v  # frame jump is fine: flagged by wrap size
            t += s
            u_new, v_new = u_re, v_re
            step_h = s
        else:
            t += step_h

        du_rec = u_new - u
        dv_rec = v_new - v
        u_prev, v_prev, chart_prev = u, v, chart
        u, v = u_new, v_new

        # wrap / chart maintenance for the stored sample and the next step
        if atlas.kind is AtlasKind.TORUS:
            u %= 1.0
            v %= 1.0
        elif atlas.kind is AtlasKind.CLOSED_ANNULUS:
            u %= atlas.circumference
        elif is_sphere:
            r2 = u * u + v * v
            if r2 > atlas.switch_radius**2:
                p = atlas.to_chart(SurfacePoint(chart, u, v), 1 - chart)
                chart, u, v = p.chart, p.u, p.v

        times.append(_signed(t, direction))
        charts.append(chart)
        us.append(u)
        vs.append(v)
        dus.append(du_rec)
        dvs.append(dv_rec)

        du0, dv0 = _eval(work, chart, u, v)
        speed = math.hypot(du0, dv0)
        if watch_sing:
            if crossed is not None or chart != chart_prev:
                d_sing_cache = 0.0      # frame changed: force a fresh query
            else:
                # generous Lipschitz decrement keeps the cache a lower bound
                d_sing_cache -= 4.0 * math.hypot(du_rec, dv_rec)

        here = SurfacePoint(chart, u, v)
        if st.detect_sing and spec.has_declared_sing() and speed < st.speed_floor:
            d = spec.sing_distance(here)
            if d < st.sing_capture:
                term = TerminationInfo(Termination.SING, point=here,
                                       detail=f"speed {speed:.2e}, distance to Sing {d:.2e}")
                break

        if st.detect_closed:
            d_start = math.inf
            if flat_wrap:
                du_c = abs(u - start.u) % wrap_len
                coarse = min(du_c, wrap_len - du_c)
            else:
                coarse = 0.0
            if coarse <= capture_radius:
                d_start = atlas.distance(here, start)
            if not left_start and d_start > 2.0 * capture_radius:
                left_start = True
                d_prev_start = math.inf   # departures never seed a return episode
            elif left_start and t > st.min_period:
                if d_start < st.closed_tol:
                    term = TerminationInfo(Termination.CLOSED, period=t,
                                           detail=f"return distance {d_start:.2e}")
                    break
                # refine once per approach episode, over the pair of steps
                # bracketing the turning point of the distance to the start
                if (d_prev_start < capture_radius and d_start > d_prev_start
                        and not refined_episode and prev_state is not None):
                    c2, u2, v2, t2 = prev_state
                    if c2 == chart_prev:
                        s_best, d_best = _refine_closest(work, atlas, c2, u2, v2,
                                                         (t - t2), start)
                        refined_episode = True
                        if d_best < st.closed_tol and t2 + s_best > st.min_period:
                            uc, vc = _rk4_advance(work, c2, u2, v2, s_best)
                            pc = atlas.normalize(SurfacePoint(c2, uc, vc))
                            times.append(_signed(t2 + s_best, direction))
                            charts.append(pc.chart)
                            us.append(pc.u)
                            vs.append(pc.v)
                            dus.append(0.0)
                            dvs.append(0.0)
                            term = TerminationInfo(Termination.CLOSED, period=t2 + s_best,
                                                   detail=f"return distance {d_best:.2e}")
                            break
                if d_start >= capture_radius:
                    refined_episode = False
            d_prev_start = d_start
            prev_state = (chart_prev, u_prev, v_prev, t - step_h)

        if err > 0:
            h = step_h * min(5.0, max(0.2, 0.9 * (target / err) ** 0.2))
        else:
            h = step_h * 5.0

    return Trajectory(
        spec=spec, work_spec=work, direction=direction, settings=st,
        times=np.array(times), charts=np.array(charts, dtype=int),
        us=np.array(us), vs=np.array(vs), dus=np.array(dus), dvs=np.array(dvs),
        termination=term, seam_hits=seam_hits)


def _signed(t: float, direction: str) -> float:
    return t if direction == "forward" else -t


def _bisection_time(spec, chart, u, v, h, fn, iters: int = 60) -> float:
    """Crossing time of fn(u(s), v(s)) = 0 inside one step via RK4 re-takes."""
    lo, hi = 0.0, h
    f_lo = fn(u, v)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        um, vm = _rk4_advance(spec, chart, u, v, mid)
        fm = fn(um, vm)
        if (fm > 0) == (f_lo > 0):
            lo = mid
            f_lo = fm
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi)


def _refine_closest(spec, atlas, chart, u, v, h, target: SurfacePoint,
                    iters: int = 80):
    """Golden-section the distance-to-target along one step; returns (s, d)."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0

    def d_at(s):
        uu, vv = _rk4_advance(spec, chart, u, v, s)
        return atlas.distance(atlas.normalize(SurfacePoint(chart, uu, vv)), target)

    a, b = 0.0, h
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = d_at(c), d_at(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = d_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = d_at(d)
        if b - a < 1e-16:
            break
    s = 0.5 * (a + b)
    return s, d_at(s)


# ---------------------------------------------------------------------------
# section crossings

@dataclass
class SectionCrossings:
    section: Section
    times: np.ndarray
    coords: np.ndarray
    signs: np.ndarray

    @property
    def n_hits(self) -> int:
        return len(self.times)


def poincare_crossings(traj: Trajectory, section: Section,
                       check_transverse: bool = True) -> SectionCrossings:
    """All transverse crossings of ``section`` along a trajectory, ordered by
    time, each refined inside its step to |section function| < 1e-10."""
    spec = traj.work_spec
    atlas = traj.spec.atlas

    if check_transverse:
        _transversality_precheck(traj.spec, section)

    if isinstance(atlas, MappingTorusAtlas) and section.axis == "u" and section.value == 0.0:
        tt = np.array([t for t, _ in traj.seam_hits])
        cc = np.array([c for _, c in traj.seam_hits])
        sg = np.ones(len(tt)) if traj.direction == "forward" else -np.ones(len(tt))
        return SectionCrossings(section, tt, cc, sg)

    times, coords, signs = [], [], []
    per = section.period
    for k in range(1, traj.n_samples):
        if int(traj.charts[k - 1]) != section.chart or int(traj.charts[k]) != section.chart:
            continue
        u0, v0 = traj.us[k - 1], traj.vs[k - 1]
        du, dv = traj.dus[k], traj.dvs[k]
        a0 = (u0 if section.axis == "u" else v0) - section.value
        da = du if section.axis == "u" else dv
        if da == 0.0:
            continue
        if section.wrap:
            # crossings of any integer multiple of the period within the step
            n_lo = math.ceil(min(a0, a0 + da) / per)
            n_hi = math.floor(max(a0, a0 + da) / per)
            targets = [n * per for n in range(n_lo, n_hi + 1)]
        else:
            targets = [0.0] if (a0 != 0 and (a0 > 0) != (a0 + da > 0)) else []
        h_step = abs(traj.times[k] - traj.times[k - 1])
        for tgt in targets:
            if k == 1 and tgt == a0:
                continue        # the start lying on the section is not a crossing
            s = _bisection_time(spec, section.chart, u0, v0, h_step,
                                lambda uu, vv, tgt=tgt: ((uu if section.axis == "u" else vv)
                                                         - section.value - tgt))
            uc, vc = _rk4_advance(spec, section.chart, u0, v0, s)
            coord = (vc if section.axis == "u" else uc)
            if section.wrap:
                coord %= per
            elif not (section.lo <= coord <= section.hi):
                continue
            fu, fv = spec.eval_scalar(section.chart, uc, vc)
            normal = fu if section.axis == "u" else fv
            if abs(normal) <= 1e-9:
                continue
            times.append(abs(traj.times[k - 1]) + s)
            coords.append(coord)
            signs.append(1.0 if normal > 0 else -1.0)
    order = np.argsort(times)
    return SectionCrossings(section, np.array(times)[order],
                            np.array(coords)[order], np.array(signs)[order])


def _transversality_precheck(spec: FieldSpec, section: Section, n: int = 100) -> None:
    ss = np.linspace(section.lo, section.hi, n, endpoint=not section.wrap)
    if section.axis == "u":
        U = np.full(n, section.value)
        V = ss
    else:
        U = ss
        V = np.full(n, section.value)
    du, dv = spec.eval_many(section.chart, U, V)
    normal = du if section.axis == "u" else dv
    bad = np.abs(normal) <= 1e-9
    # points of the declared singular set sitting on the section are allowed
    if bad.any():
        if spec.has_declared_sing():
            d = spec.sing_distance_many(section.chart, U[bad], V[bad])
            if np.all(d < 1e-6):
                return
        raise NotTransverse(f"section {section.label or section} has "
                            f"{int(bad.sum())} non-transverse sample points")


# ---------------------------------------------------------------------------
# batched cloud advection (shared adaptive step)

def advect_cloud(spec: FieldSpec, chart: int, U0, V0, t_span: float,
                 callback=None, cadence: float = 0.01,
                 speed_floor: float = 1e-9, substeps: int = 1):
    """Advance a cloud of points by fixed-step RK4, one step per snapshot
    cadence (finer via ``substeps``).

    Points whose speed drops below ``speed_floor`` freeze in place: they sit
    in a surgery slow zone and cannot move visibly on any relevant horizon,
    so their field evaluations are skipped. ``callback(t, U, V)`` fires at
    every multiple of ``cadence``. Returns the final (U, V).
    """
    atlas = spec.atlas
    U = np.array(U0, dtype=float)
    V = np.array(V0, dtype=float)
    n = U.size
    frozen = np.zeros(n, dtype=bool)

    def wrap(Ua, Va):
        if atlas.kind is AtlasKind.TORUS:
            return Ua % 1.0, Va % 1.0
        if atlas.kind is AtlasKind.CLOSED_ANNULUS:
            return Ua % atlas.circumference, Va
        return Ua, Va

    h = cadence / substeps
    n_snaps = int(round(t_span / cadence))
    for snap in range(1, n_snaps + 1):
        for _ in range(substeps):
            act = ~frozen
            if not act.any():
                break
            Ua, Va = U[act], V[act]
            k1u, k1v = spec.eval_many(chart, Ua, Va)
            sp = np.hypot(k1u, k1v)
            newly = sp < speed_floor
            if newly.any():
                idx = np.flatnonzero(act)[newly]
                frozen[idx] = True
                keep = ~newly
                if not keep.any():
                    break
                act = ~frozen
                Ua, Va = U[act], V[act]
                k1u, k1v = k1u[keep], k1v[keep]
            k2u, k2v = spec.eval_many(chart, Ua + 0.5 * h * k1u, Va + 0.5 * h * k1v)
            k3u, k3v = spec.eval_many(chart, Ua + 0.5 * h * k2u, Va + 0.5 * h * k2v)
            k4u, k4v = spec.eval_many(chart, Ua + h * k3u, Va + h * k3v)
            Un = Ua + h * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0
            Vn = Va + h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
            Un, Vn = wrap(Un, Vn)
            U[act] = Un
            V[act] = Vn
        if callback is not None:
            callback(snap * cadence, U, V)
    return U, V


def resample_arclength(traj: Trajectory, spacing: float, tail_fraction: float = 1.0):
    """Uniform-arclength resampling by linear interpolation inside steps.

    Returns (charts, U, V) arrays over the trailing ``tail_fraction`` of the
    samples. Interpolated points inherit the frame of the step start; they
    are wrapped by the caller's occupancy domain.
    """
    n = traj.n_samples
    if n < 2:
        raise InsufficientData("trajectory too short to resample")
    k0 = int((1.0 - tail_fraction) * n)
    seg = np.hypot(traj.dus[k0 + 1:], traj.dvs[k0 + 1:])
    total = float(seg.sum())
    if total <= 0:
        return (traj.charts[k0:k0 + 1], traj.us[k0:k0 + 1], traj.vs[k0:k0 + 1])
    m = max(int(total / spacing), 1)
    targets = np.linspace(0.0, total, m, endpoint=False)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    frac = np.where(seg[idx] > 0, (targets - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0), 0.0)
    base = k0 + idx
    U = traj.us[base] + frac * traj.dus[base + 1]
    V = traj.vs[base] + frac * traj.dvs[base + 1]
    return traj.charts[base], U, V


def resample_time(traj: Trajectory, n_points: int, tail_fraction: float = 1.0):
    """Uniform-in-time resampling of the trailing fraction of the run."""
    tt = np.abs(traj.times)
    t_end = tt[-1]
    t_start = t_end * (1.0 - tail_fraction)
    targets = np.linspace(t_start, t_end, n_points)
    idx = np.searchsorted(tt, targets, side="right") - 1
    idx = np.clip(idx, 0, traj.n_samples - 2)
    dt = tt[idx + 1] - tt[idx]
    frac = np.where(dt > 0, (targets - tt[idx]) / np.where(dt > 0, dt, 1.0), 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    U = traj.us[idx] + frac * traj.dus[idx + 1]
    V = traj.vs[idx] + frac * traj.dvs[idx + 1]
    return targets, traj.charts[idx], U, V
