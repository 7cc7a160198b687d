"""Limit-set estimation and classification from trajectory tails.

``classify_limit`` runs one integration per side and walks a fixed decision
tree over tail diagnostics:

1. closed starts are SelfClosed;
2. a tail whose trailing stretch settles inside the eps_sing collar of the
   declared singular set is a nowhere dense subset of Sing;
3. section hits that become Cauchy identify a limiting loop -- a
   LimitQuasiCircuit when the loop's final lap passes through the singular
   collar, a LimitCycle otherwise;
4. a tail filling a disk of the occupancy grid (with box dimension near 2)
   is a locally dense Q-set;
5. Cantor-structured section accumulation (persistent gap + cluster
   splitting) is a transversely Cantor Q-set, refined to a quasi-Q-set
   inside Sing u P when the accumulation touches the singular set and the
   accumulated orbits are non-recurrent;
6. anything else stays Undecided, carrying the budget that was spent.

Every report echoes the tunables it was produced with, so a classification
is reproducible from the report alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .atlas import AtlasKind, SurfacePoint
from .errors import InsufficientData
from .fields import FieldSpec, Section
from .integrate import (IntegratorSettings, SectionCrossings, Termination, Trajectory,
                        advect_cloud, integrate, poincare_crossings, resample_arclength,
                        resample_time)


class LimitLabel(Enum):
    NowhereDenseSing = "NowhereDenseSing"
    LimitCycle = "LimitCycle"
    LimitQuasiCircuit = "LimitQuasiCircuit"
    LocallyDenseQSet = "LocallyDenseQSet"
    TransverselyCantorQSet = "TransverselyCantorQSet"
    QuasiQSetInSingP = "QuasiQSetInSingP"
    SelfClosed = "SelfClosed"
    Undecided = "Undecided"


class OrbitClass(Enum):
    Singular = "Singular"
    Periodic = "Periodic"
    ProperNonClosed = "ProperNonClosed"
    LocallyDense = "LocallyDense"
    Exceptional = "Exceptional"
    Undecided = "Undecided"


@dataclass
class ClassifierSettings:
    """One tunables block; defaults are echoed into every report."""

    grid_n: int = 512
    tail_fraction: float = 0.5
    eps_sing: float = 1e-3
    fill_disk_radius: float = 0.1
    fill_threshold: float = 0.99
    ld_min_boxdim: float = 1.9
    gap_floor: float | None = None      # None: half the widest wandering interval
    min_hits: int = 1000
    cycle_min_hits: int = 6
    cycle_tol: float = 1e-3
    settle_min_frac: float = 0.3
    perfect_min: float = 0.5
    resample_spacing: float = 0.0015
    settle_points: int = 4096
    budget: float = 1e4
    tol: float = 1e-10
    recurrence_tol: float = 1e-3

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class OccupancyGrid:
    """Cell counts of the trajectory tail over the atlas fundamental domain.

    One plane per chart; the total count equals the number of tail samples.
    """

    n: int
    extents: tuple            # ((u_lo, u_hi), (v_lo, v_hi))
    counts: np.ndarray        # (n_charts, n, n)

    @classmethod
    def from_samples(cls, atlas, n: int, charts, U, V) -> "OccupancyGrid":
        if atlas.kind in (AtlasKind.TORUS, AtlasKind.MAPPING_TORUS):
            ext = ((0.0, 1.0), (0.0, 1.0))
            U = np.asarray(U) % 1.0
            V = np.asarray(V) % 1.0
            n_charts = 1
        elif atlas.kind is AtlasKind.CLOSED_ANNULUS:
            ext = ((0.0, atlas.circumference), atlas.y_range)
            U = np.asarray(U) % atlas.circumference
            n_charts = 1
        else:
            ext = ((-1.05, 1.05), (-1.05, 1.05))
            n_charts = 2
        counts = np.zeros((n_charts, n, n))
        charts = np.asarray(charts)
        for c in range(n_charts):
            m = charts == c if n_charts > 1 else slice(None)
            h, _, _ = np.histogram2d(np.asarray(U)[m], np.asarray(V)[m], bins=n,
                                     range=ext)
            counts[c] = h
        return cls(n=n, extents=ext, counts=counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def occupied(self) -> int:
        return int((self.counts > 0).sum())

    def best_disk_fill(self, radius: float) -> tuple[float, tuple]:
        """Largest occupied-cell fraction over disks of the given radius.

        Computed for every cell center at once by circular convolution of
        the occupancy mask with the disk kernel; for non-wrapping domains
        the centers are restricted so the disk stays inside.
        """
        (u0, u1), (v0, v1) = self.extents
        cell_u = (u1 - u0) / self.n
        cell_v = (v1 - v0) / self.n
        ru = max(int(radius / cell_u), 1)
        rv = max(int(radius / cell_v), 1)
        ii = np.arange(self.n)
        ki = np.minimum(ii, self.n - ii)
        kernel = ((ki[:, None] / ru) ** 2 + (ki[None, :] / rv) ** 2 <= 1.0).astype(float)
        total = kernel.sum()
        fk = np.fft.rfft2(kernel)
        wraps = self.extents[0][0] == 0.0 and self.extents[1] == (0.0, 1.0)
        best = (0.0, (0, 0.0, 0.0))
        for c in range(self.counts.shape[0]):
            occ = (self.counts[c] > 0).astype(float)
            filled = np.fft.irfft2(np.fft.rfft2(occ) * fk, s=occ.shape)
            frac = filled / total
            if not wraps:
                # keep the disk inside the rectangle
                frac[:ru, :] = 0.0
                frac[-ru:, :] = 0.0
                frac[:, :rv] = 0.0
                frac[:, -rv:] = 0.0
            k = int(np.argmax(frac))
            iu, iv = divmod(k, self.n)
            f = float(min(frac[iu, iv], 1.0))
            if f > best[0]:
                best = (f, (c, u0 + (iu + 0.5) * cell_u, v0 + (iv + 0.5) * cell_v))
        return best


def box_dimension(grid: OccupancyGrid) -> float:
    """Least-squares slope of log(occupied boxes) against log(boxes per
    side) over the dyadic coarsenings n, n/2, ..., n/16."""
    if grid.occupied() < 1000:
        raise InsufficientData(f"only {grid.occupied()} occupied cells")
    occ = grid.counts > 0
    xs, ys = [], []
    cur = occ
    n = grid.n
    for j in range(5):
        xs.append(math.log(n / 2**j))
        ys.append(math.log(max(int(cur.sum()), 1)))
        if j < 4:
            cur = (cur.reshape(cur.shape[0], cur.shape[1] // 2, 2, cur.shape[2] // 2, 2)
                   .any(axis=(2, 4)))
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope)


def section_gap_statistics(coords: np.ndarray, wrap: bool, period: float = 1.0,
                           depth_limit: int = 9) -> dict:
    """Gap and cluster statistics of section hits.

    persistent_gap is the smallest of the maximal uncovered intervals seen
    at the last three doublings of the hit count (an interval that stays
    uncovered as hits accumulate). perfectness is the fraction of hit
    clusters at dyadic scale 2^-j containing at least two clusters at scale
    2^-(j+2), averaged over the scales with at least four clusters.
    """
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    if n < 8:
        raise InsufficientData(f"only {n} section hits")

    def max_gap(pts):
        s = np.sort(pts % period) if wrap else np.sort(pts)
        if wrap:
            gaps = np.diff(np.concatenate([s, [s[0] + period]]))
        else:
            gaps = np.diff(s)
        return float(gaps.max()) if len(gaps) else period

    gaps_at = [max_gap(coords[: n // 4]), max_gap(coords[: n // 2]), max_gap(coords)]
    persistent = min(gaps_at)
    stable = max(gaps_at) <= 2.0 * min(gaps_at) + 1e-12

    s = np.sort(coords % period) if wrap else np.sort(coords)

    def clusters(scale):
        if len(s) == 0:
            return []
        breaks = np.flatnonzero(np.diff(s) > scale)
        segs = np.split(s, breaks + 1)
        return segs

    fracs = []
    for j in range(2, depth_limit):
        coarse = clusters(2.0 ** -j)
        if len(coarse) < 4:
            continue
        fine_scale = 2.0 ** -(j + 2)
        split = 0
        for seg in coarse:
            sub = np.flatnonzero(np.diff(seg) > fine_scale)
            if len(sub) >= 1:
                split += 1
        fracs.append(split / len(coarse))
    perfectness = float(np.mean(fracs)) if fracs else 0.0
    return {
        "n_hits": n,
        "max_gap_sequence": gaps_at,
        "persistent_gap": persistent,
        "gap_stable": bool(stable),
        "perfectness": perfectness,
        "last_cluster_width": float(np.ptp(coords[-5:])) if n >= 5 else math.inf,
    }


def section_cantor_diagnostics(crossings: SectionCrossings, depth_limit: int = 9) -> dict:
    if crossings.n_hits < 1000:
        raise InsufficientData(f"need >= 1000 hits, got {crossings.n_hits}")
    return section_gap_statistics(crossings.coords, crossings.section.wrap,
                                  crossings.section.period, depth_limit)


# ---------------------------------------------------------------------------
# classify_limit

@dataclass
class LimitSetReport:
    label: LimitLabel
    side: str
    start: SurfacePoint
    flow: str
    termination: str
    budget_used: float
    diagnostics: dict
    tunables: dict

    def as_dict(self) -> dict:
        return {
            "label": self.label.value,
            "side": self.side,
            "start": [self.start.chart, self.start.u, self.start.v],
            "flow": self.flow,
            "termination": self.termination,
            "budget_used": self.budget_used,
            "diagnostics": self.diagnostics,
            "tunables": self.tunables,
        }


def _default_gap_floor(spec: FieldSpec, settings: ClassifierSettings) -> float:
    if settings.gap_floor is not None:
        return settings.gap_floor
    cmap = spec.params.get("circle_map")
    if cmap is not None and not cmap.is_rigid:
        return 0.5 * cmap.widest_gap()
    return 0.01


def classify_limit(spec: FieldSpec, x: SurfacePoint, side: str = "omega",
                   budget: float | None = None,
                   settings: ClassifierSettings | None = None) -> LimitSetReport:
    """Estimate and classify the omega- (or alpha-) limit set of x."""
    st = settings or ClassifierSettings()
    if budget is not None:
        st = replace(st, budget=float(budget))
    diag: dict = {}

    def report(label, term, used):
        return LimitSetReport(label=label, side=side, start=x, flow=spec.name,
                              termination=term, budget_used=used,
                              diagnostics=diag, tunables=st.as_dict())

    if spec.speed(x) < 1e-12:
        diag["start_speed"] = spec.speed(x)
        return report(LimitLabel.SelfClosed, "SingularStart", 0.0)

    # alpha side = omega side of the reversed field
    work = spec if side == "omega" else spec.reversed()
    iset = IntegratorSettings(tol=st.tol, t_budget=st.budget)
    traj = integrate(work, x, settings=iset)
    used = traj.total_time()
    term = traj.termination.kind.value
    diag["termination_detail"] = traj.termination.detail

    if traj.termination.kind is Termination.CLOSED:
        diag["period"] = traj.termination.period
        return report(LimitLabel.SelfClosed, term, used)

    # --- settle diagnostics against the declared singular set (time tail)
    settled_frac = 0.0
    if spec.has_declared_sing():
        tt, charts, U, V = resample_time(traj, st.settle_points, st.tail_fraction)
        d = np.empty(len(tt))
        for c in np.unique(charts):
            m = charts == c
            d[m] = spec.sing_distance_many(int(c), U[m], V[m])
        diag["min_dist_to_sing"] = float(d.min())
        diag["terminal_dist_to_sing"] = float(spec.sing_distance(traj.final_point()))
        near = d < st.eps_sing
        # longest fully-near suffix of the tail
        idx = np.flatnonzero(~near)
        settle_start = 0 if len(idx) == 0 else idx[-1] + 1
        if settle_start < len(tt):
            settled_frac = (tt[-1] - tt[settle_start]) / max(tt[-1] - tt[0], 1e-300)
        diag["settled_fraction"] = float(settled_frac)

    if settled_frac >= st.settle_min_frac:
        return report(LimitLabel.NowhereDenseSing, term, used)

    # --- section-based diagnostics
    hits = None
    if spec.section is not None:
        try:
            hits = poincare_crossings(traj, spec.section)
        except Exception as e:                      # non-transverse section: skip
            diag["section_error"] = str(e)
    if hits is not None and hits.n_hits >= st.cycle_min_hits:
        try:
            stats = section_gap_statistics(hits.coords, spec.section.wrap,
                                           spec.section.period)
        except InsufficientData:
            stats = None
        diag["n_hits"] = hits.n_hits
        last5 = hits.coords[-5:]
        width = _spread(last5, spec.section.wrap, spec.section.period)
        diag["last_hits_width"] = float(width)
        if width < st.cycle_tol:
            lap_min = _final_lap_min_sing(spec, traj, hits)
            diag["final_lap_min_dist_to_sing"] = lap_min
            if spec.has_declared_sing() and lap_min < st.eps_sing:
                return report(LimitLabel.LimitQuasiCircuit, term, used)
            return report(LimitLabel.LimitCycle, term, used)
    else:
        stats = None

    # --- transversely Cantor accumulation
    # checked before the fill criterion: a persistent transverse gap means
    # the closure misses an open strip near the section, which rules local
    # density out even when the tail aliases into full grid occupancy
    if hits is not None and hits.n_hits >= st.min_hits and stats is not None:
        diag["section_stats"] = stats
        floor = _default_gap_floor(spec, st)
        diag["gap_floor"] = floor
        if stats["persistent_gap"] >= floor and stats["perfectness"] >= st.perfect_min:
            if spec.has_declared_sing():
                # does the late accumulation touch Sing, and is it non-recurrent?
                late = hits.coords[-max(hits.n_hits // 4, 1):]
                dlate = spec.sing_distance_many(spec.section.chart,
                                                np.full(late.shape, spec.section.value),
                                                late)
                diag["late_hits_min_dist_to_sing"] = float(dlate.min())
                nonrec = traj.termination.kind is Termination.SING or \
                    _min_return(hits.coords, spec.section.wrap, spec.section.period) \
                    > st.recurrence_tol
                diag["accumulated_nonrecurrent"] = bool(nonrec)
                if float(dlate.min()) < st.eps_sing and nonrec:
                    return report(LimitLabel.QuasiQSetInSingP, term, used)
            return report(LimitLabel.TransverselyCantorQSet, term, used)

    # --- occupancy fill (arclength tail)
    try:
        charts_a, Ua, Va = resample_arclength(traj, st.resample_spacing, st.tail_fraction)
        grid = OccupancyGrid.from_samples(spec.atlas, st.grid_n, charts_a, Ua, Va)
        fill, disk = grid.best_disk_fill(st.fill_disk_radius)
        diag["fill_fraction"] = float(fill)
        diag["fill_disk"] = [int(disk[0]), float(disk[1]), float(disk[2])]
        try:
            diag["box_dimension"] = box_dimension(grid)
        except InsufficientData:
            diag["box_dimension"] = None
        if (fill >= st.fill_threshold and diag["box_dimension"] is not None
                and diag["box_dimension"] >= st.ld_min_boxdim):
            return report(LimitLabel.LocallyDenseQSet, term, used)
    except InsufficientData:
        pass

    return report(LimitLabel.Undecided, term, used)


def _spread(coords: np.ndarray, wrap: bool, period: float) -> float:
    if not wrap:
        return float(np.ptp(coords))
    c = np.sort(coords % period)
    gaps = np.diff(np.concatenate([c, [c[0] + period]]))
    return float(period - gaps.max())


def _min_return(coords: np.ndarray, wrap: bool, period: float) -> float:
    first = coords[0]
    rest = coords[1:]
    d = np.abs(rest - first)
    if wrap:
        d = np.minimum(d % period, period - (d % period))
    return float(d.min()) if len(d) else math.inf


def _final_lap_min_sing(spec: FieldSpec, traj: Trajectory, hits: SectionCrossings) -> float:
    """Minimum distance to the declared Sing along the last full lap."""
    if not spec.has_declared_sing():
        return math.inf
    if hits.n_hits < 2:
        return math.inf
    t_lo, t_hi = hits.times[-2], hits.times[-1]
    tt = np.abs(traj.times)
    m = (tt >= t_lo) & (tt <= t_hi)
    if not m.any():
        return math.inf
    best = math.inf
    for c in np.unique(traj.charts[m]):
        sel = m & (traj.charts == c)
        d = spec.sing_distance_many(int(c), traj.us[sel], traj.vs[sel])
        best = min(best, float(d.min()))
    return best


# ---------------------------------------------------------------------------
# orbit classification

def orbit_class(spec: FieldSpec, x: SurfacePoint, budget: float = 1500.0,
                settings: ClassifierSettings | None = None) -> OrbitClass:
    """Coarse class of the orbit through x (not of its limit sets)."""
    st = settings or ClassifierSettings()
    if spec.speed(x) < 1e-12:
        return OrbitClass.Singular
    iset = IntegratorSettings(tol=st.tol, t_budget=budget)
    traj = integrate(spec, x, settings=iset)
    if traj.termination.kind is Termination.CLOSED:
        return OrbitClass.Periodic
    fwd_sing = traj.termination.kind is Termination.SING
    if fwd_sing:
        back = integrate(spec, x, direction="backward", settings=iset)
        if back.termination.kind is Termination.SING:
            return OrbitClass.ProperNonClosed

    # section evidence first: persistent transverse gaps rule local density
    # out even when the tail aliases into full grid occupancy
    if spec.section is not None:
        try:
            hits = poincare_crossings(traj, spec.section)
        except Exception:
            hits = None
        if hits is not None and hits.n_hits >= st.cycle_min_hits:
            ret = _min_return(hits.coords, spec.section.wrap, spec.section.period)
            try:
                stats = section_gap_statistics(hits.coords, spec.section.wrap,
                                               spec.section.period)
                cantor = (stats["persistent_gap"] >= _default_gap_floor(spec, st)
                          and stats["perfectness"] >= st.perfect_min)
            except InsufficientData:
                cantor = False
            if cantor and ret <= st.recurrence_tol:
                return OrbitClass.Exceptional
            if cantor or ret > st.recurrence_tol:
                return OrbitClass.ProperNonClosed

    try:
        charts_a, Ua, Va = resample_arclength(traj, st.resample_spacing, st.tail_fraction)
        grid = OccupancyGrid.from_samples(spec.atlas, st.grid_n, charts_a, Ua, Va)
        fill, _ = grid.best_disk_fill(st.fill_disk_radius)
        if fill >= st.fill_threshold:
            return OrbitClass.LocallyDense
    except InsufficientData:
        pass
    return OrbitClass.Undecided


# ---------------------------------------------------------------------------
# wandering-domain search

@dataclass
class WanderingWitness:
    center: SurfacePoint
    radius: float
    horizon: float
    t_check: float
    n_points: int

    def as_dict(self):
        return {"center": [self.center.chart, self.center.u, self.center.v],
                "radius": self.radius, "horizon": self.horizon,
                "t_check": self.t_check, "n_points": self.n_points}


def _wrapped_dist2(atlas, chart, U, V, cu, cv):
    dU = U - cu
    dV = V - cv
    if atlas.kind is AtlasKind.TORUS:
        dU = (dU + 0.5) % 1.0 - 0.5
        dV = (dV + 0.5) % 1.0 - 0.5
    elif atlas.kind is AtlasKind.CLOSED_ANNULUS:
        L = atlas.circumference
        dU = (dU + L / 2) % L - L / 2
    return dU * dU + dV * dV


def detect_wandering_domain(spec: FieldSpec, region: tuple,
                            n_candidates: int = 1024, t_check: float = 200.0,
                            radius: float = 0.02, n_verify: int = 1024,
                            horizon_cap: float = 1e3, cadence: float = 0.01,
                            margin: float = 0.5) -> WanderingWitness | None:
    """Search ``region`` = (chart, u_lo, u_hi, v_lo, v_hi) for a disk whose
    forward images never meet it again after a finite horizon.

    Stage 1 advects all candidate centers at once and discards any whose
    orbit re-enters its own disk too late (horizon above the cap) or keeps
    re-entering. Stage 2 verifies the surviving candidate with a dense
    sample of the disk at snapshot cadence ``cadence`` over [horizon,
    t_check]; the first verified disk is returned.
    """
    chart, u_lo, u_hi, v_lo, v_hi = region
    side = max(int(math.sqrt(n_candidates)), 2)
    cu = np.linspace(u_lo + radius, u_hi - radius, side)
    cv = np.linspace(v_lo + radius, v_hi - radius, side)
    CU, CV = np.meshgrid(cu, cv, indexing="ij")
    CU = CU.ravel()
    CV = CV.ravel()
    n = CU.size
    last_in = np.zeros(n)

    def probe_cb(t, U, V):
        d2 = _wrapped_dist2(spec.atlas, chart, U, V, CU, CV)
        inside = d2 <= radius * radius
        last_in[inside] = t

    advect_cloud(spec, chart, CU.copy(), CV.copy(), t_check, callback=probe_cb,
                 cadence=cadence)
    horizons = last_in + margin
    order = np.argsort(horizons, kind="stable")
    for i in order:
        N = float(horizons[i])
        if N > horizon_cap or t_check - N < 5 * margin:
            continue
        witness = _verify_disk(spec, chart, float(CU[i]), float(CV[i]), radius,
                               N, t_check, n_verify, cadence)
        if witness:
            return WanderingWitness(center=SurfacePoint(chart, float(CU[i]), float(CV[i])),
                                    radius=radius, horizon=N, t_check=t_check,
                                    n_points=n_verify)
    return None


def _verify_disk(spec, chart, cu, cv, radius, N, t_check, n_points, cadence) -> bool:
    rng = np.random.default_rng(20240 + int(cu * 1e4) % 9973)
    rr = radius * np.sqrt(rng.uniform(0, 1, n_points))
    th = rng.uniform(0, 2 * math.pi, n_points)
    U0 = cu + rr * np.cos(th)
    V0 = cv + rr * np.sin(th)
    violated = [False]

    def cb(t, U, V):
        if violated[0] or t < N:
            return
        d2 = _wrapped_dist2(spec.atlas, chart, U, V, cu, cv)
        if bool((d2 <= radius * radius).any()):
            violated[0] = True

    advect_cloud(spec, chart, U0, V0, t_check, callback=cb, cadence=cadence)
    return not violated[0]
