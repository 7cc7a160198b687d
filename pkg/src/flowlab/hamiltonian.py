"""Singular inventories, the finite directed orbit graph, and the
Hamiltonian-structure verdict for finite-singular flows.

The verdict pipeline mirrors how the structure theory decides the question:

1. probe orbits -- a locally dense probe or a non-closed recurrent probe is
   a hard witness against Hamiltonian structure (a first integral would be
   constant on the probe's closure);
2. locate and classify the singular points: only centers and multi-saddles
   are compatible; a whole curve of zeros is a hard failure, other
   degeneracies leave the verdict Inconclusive;
3. collapse multi-saddle connections and periodic annuli to a finite
   directed graph, oriented by the first integral where one is attached;
4. the verdict is Hamiltonian exactly when that graph has no directed
   cycle.

Multi-saddle bookkeeping: a k-fold saddle carries 2k + 2 separatrices and
rotation index -k (an ordinary saddle is k = 1 with four separatrices and
index -1; a surgery point on a regular orbit is k = 0 with two separatrices
and index 0). Index and separatrix count are cross-checked and any mismatch
demotes the point to DEGENERATE.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .atlas import AtlasKind, SphereAtlas, SurfacePoint
from .classify import ClassifierSettings, OccupancyGrid, _min_return
from .errors import (InfiniteSingularSet, LocallyDenseObstruction, UnresolvedConnection)
from .fields import FieldSpec
from .integrate import (IntegratorSettings, Termination, integrate, poincare_crossings,
                        resample_arclength)


class SingKind(Enum):
    CENTER = "Center"
    MULTI_SADDLE = "MultiSaddle"
    DEGENERATE = "Degenerate/Unknown"


@dataclass
class SingularPoint:
    point: SurfacePoint
    kind: SingKind
    index: int
    saddle_order: int | None = None          # k for a k-fold saddle
    separatrix_dirs: list = field(default_factory=list)


@dataclass
class Separatrix:
    origin: int                               # inventory index of the saddle
    outgoing: bool
    trace: object                             # Trajectory
    dest: int | None                          # inventory index or None


@dataclass
class SingularInventory:
    points: list
    separatrices: list

    def index_sum(self) -> int:
        return sum(p.index for p in self.points)

    def __len__(self):
        return len(self.points)


@dataclass
class InventorySettings:
    grid_n: int = 512
    candidate_cap: int = 64
    component_cell_cap: int = 24
    refine_floor: float = 1e-9
    dedupe_tol: float = 1e-6
    probe_radius: float = 1e-3
    trace_radius: float = 1e-4
    sep_budget: float = 1e3
    match_tol: float = 1e-6


def _scan_domains(spec: FieldSpec):
    atlas = spec.atlas
    if atlas.kind is AtlasKind.TORUS:
        return [(0, 0.0, 1.0, 0.0, 1.0, True)]
    if atlas.kind is AtlasKind.MAPPING_TORUS:
        return [(0, 0.0, 1.0, 0.0, 1.0, True)]
    if atlas.kind is AtlasKind.CLOSED_ANNULUS:
        return [(0, 0.0, atlas.circumference, atlas.y_range[0], atlas.y_range[1], True)]
    # sphere: both chart disks out to just past the equator
    return [(0, -1.1, 1.1, -1.1, 1.1, False), (1, -1.1, 1.1, -1.1, 1.1, False)]


def singular_inventory(spec: FieldSpec, settings: InventorySettings | None = None) -> SingularInventory:
    """Locate the zeros of the field, classify each as center, multi-saddle
    or degenerate, and trace every separatrix to its other end.

    Grid candidates (low-speed components of the scan) are refined by a
    derivative-free shrinking search; a component much larger than a point
    is accepted only when the refined zero is isolated (the speed on a small
    ring around it has no deep angular dips -- a curve of zeros crossing the
    ring produces them). Surgery zero samples seed extra candidates, since a
    conical factor zero can be thinner than one scan cell.
    """
    st = settings or InventorySettings()
    from scipy import ndimage

    if not spec.finite_sing:
        raise InfiniteSingularSet(
            f"flow {spec.name!r} declares an infinite singular set (zero curve or "
            "strip); component spans the declared structure")

    candidates: list[SurfacePoint] = []
    curve_like: list[str] = []
    for chart, u0, u1, v0, v1, wraps in _scan_domains(spec):
        n = st.grid_n
        uu = np.linspace(u0, u1, n, endpoint=not wraps)
        vv = np.linspace(v0, v1, n, endpoint=not wraps)
        U, V = np.meshgrid(uu, vv, indexing="ij")
        du, dv = spec.eval_many(chart, U.ravel(), V.ravel())
        mag = np.hypot(du, dv).reshape(n, n)
        if spec.atlas.kind is AtlasKind.SPHERE:
            r2 = U * U + V * V
            mag[r2 > 1.1] = np.inf        # other chart covers it
        cell = max((u1 - u0) / n, (v1 - v0) / n)
        # low-speed cells: below what a nondegenerate zero one cell away allows
        thresh = np.nanmax(mag[np.isfinite(mag)]) * cell * 4.0
        mask = mag < thresh
        labels, n_comp = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
        if n_comp > st.candidate_cap:
            raise InfiniteSingularSet(
                f"{n_comp} candidate zero components on chart {chart}")
        for sl in ndimage.find_objects(labels):
            iu = (sl[0].start + sl[0].stop - 1) // 2
            iv = (sl[1].start + sl[1].stop - 1) // 2
            sub = mag[sl]
            ju, jv = np.unravel_index(int(np.argmin(sub)), sub.shape)
            best = SurfacePoint(chart, float(uu[sl[0].start + ju]),
                                float(vv[sl[1].start + jv]))
            span = max(sl[0].stop - sl[0].start, sl[1].stop - sl[1].start)
            if span > st.component_cell_cap:
                p = _refine_zero(spec, best, half_width=span * cell)
                if p is None:
                    continue
                if _ring_dip_ratio(spec, p, 2.0 * cell) < 0.05:
                    raise InfiniteSingularSet(
                        f"zero component spans {span} cells along a curve; "
                        "not a finite point set")
                candidates.append(p)
            else:
                candidates.append(SurfacePoint(chart, float(uu[iu]), float(vv[iv])))
    for s in spec.surgeries:
        candidates.extend(s.zero_samples())

    zeros: list[SurfacePoint] = []
    for cand in candidates:
        p = _refine_zero(spec, cand, half_width=2.5 * (1.0 / st.grid_n))
        if p is None:
            continue
        if all(spec.atlas.distance(p, q) > st.dedupe_tol for q in zeros):
            zeros.append(p)

    points = [_classify_zero(spec, p, st) for p in zeros]
    inventory = SingularInventory(points=points, separatrices=[])
    _trace_separatrices(spec, inventory, st)
    return inventory


def _ring_dip_ratio(spec: FieldSpec, p: SurfacePoint, radius: float, n: int = 128) -> float:
    """min/max of the speed on a ring around p; a curve of zeros through the
    ring yields deep localized dips (ratio near 0), an isolated zero of any
    order does not."""
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    du, dv = spec.eval_many(p.chart, p.u + radius * np.cos(th),
                            p.v + radius * np.sin(th))
    mag = np.hypot(du, dv)
    mx = float(mag.max())
    if mx == 0.0:
        return 0.0
    return float(mag.min()) / mx


def _refine_zero(spec: FieldSpec, guess: SurfacePoint, half_width: float,
                 floor: float = 1e-10) -> SurfacePoint | None:
    """Shrinking-grid minimization of |F|; derivative-free so it handles
    both smooth zeros and the conical zeros of surgery factors."""
    chart = guess.chart
    cu, cv = guess.u, guess.v
    w = half_width
    for _ in range(40):
        uu = np.linspace(cu - w, cu + w, 5)
        vv = np.linspace(cv - w, cv + w, 5)
        U, V = np.meshgrid(uu, vv, indexing="ij")
        du, dv = spec.eval_many(chart, U.ravel(), V.ravel())
        mag = np.hypot(du, dv)
        k = int(np.argmin(mag))
        cu, cv = float(U.ravel()[k]), float(V.ravel()[k])
        w *= 0.4
        if w < 1e-13:
            break
    if math.hypot(*spec.eval_scalar(chart, cu, cv)) > 1e-8:
        return None
    return spec.atlas.normalize(SurfacePoint(chart, cu, cv))


def _rotation_index(spec: FieldSpec, p: SurfacePoint, radius: float, n: int = 720) -> int:
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    U = p.u + radius * np.cos(th)
    V = p.v + radius * np.sin(th)
    du, dv = spec.eval_many(p.chart, U, V)
    ang = np.arctan2(dv, du)
    d = np.diff(np.concatenate([ang, ang[:1]]))
    d = (d + math.pi) % (2.0 * math.pi) - math.pi
    return int(round(d.sum() / (2.0 * math.pi)))


def _tangential(spec: FieldSpec, p: SurfacePoint, radius: float, theta: float) -> float:
    du, dv = spec.eval_scalar(p.chart, p.u + radius * math.cos(theta),
                              p.v + radius * math.sin(theta))
    return -math.sin(theta) * du + math.cos(theta) * dv


def _radial(spec: FieldSpec, p: SurfacePoint, radius: float, theta: float) -> float:
    du, dv = spec.eval_scalar(p.chart, p.u + radius * math.cos(theta),
                              p.v + radius * math.sin(theta))
    return math.cos(theta) * du + math.sin(theta) * dv


def _polish_direction(spec, p, radius, lo, hi, f_lo, iters: int = 80) -> float:
    """Bisect the tangential field component to pin a separatrix direction.

    Traced separatrices approach their destination saddle along a direction
    that is transversally expanding for the trace, so the launch angle must
    be exact to near machine precision or the trace slides past its
    endpoint."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = _tangential(spec, p, radius, mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (f_lo > 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def _classify_zero(spec: FieldSpec, p: SurfacePoint, st: InventorySettings) -> SingularPoint:
    idx = _rotation_index(spec, p, st.probe_radius)
    # separatrix directions: where the field is purely radial on a small
    # circle, found by sign changes of the tangential component and polished
    # by bisection at the trace radius
    n = 1440
    step = 2.0 * math.pi / n
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    U = p.u + st.trace_radius * np.cos(th)
    V = p.v + st.trace_radius * np.sin(th)
    du, dv = spec.eval_many(p.chart, U, V)
    f_t = -np.sin(th) * du + np.cos(th) * dv
    dirs = []
    for i in range(n):
        j = (i + 1) % n
        if f_t[i] == 0.0:
            ang = float(th[i])
        elif f_t[i] * f_t[j] < 0:
            ang = _polish_direction(spec, p, st.trace_radius,
                                    float(th[i]), float(th[i] + step), float(f_t[i]))
        else:
            continue
        fr = _radial(spec, p, st.trace_radius, ang)
        if abs(fr) > 1e-13 and all(abs(ang - a) > 1e-6 for a, _ in dirs):
            dirs.append((ang, fr > 0))
    s = len(dirs)

    if idx == 1:
        # center vs node/focus: a nearby orbit either closes or it does not
        probe = SurfacePoint(p.chart, p.u + 0.07, p.v)
        iset = IntegratorSettings(tol=1e-10, t_budget=200.0, detect_sing=False,
                                  closed_tol=1e-6)
        tr = integrate(spec, probe, settings=iset)
        if tr.termination.kind is Termination.CLOSED:
            return SingularPoint(p, SingKind.CENTER, 1)
        return SingularPoint(p, SingKind.DEGENERATE, idx)
    if idx <= 0 and s >= 2 and s % 2 == 0 and idx == 1 - s // 2:
        k = s // 2 - 1
        return SingularPoint(p, SingKind.MULTI_SADDLE, idx, saddle_order=k,
                             separatrix_dirs=dirs)
    return SingularPoint(p, SingKind.DEGENERATE, idx)


def _trace_separatrices(spec: FieldSpec, inv: SingularInventory, st: InventorySettings):
    # looser capture thresholds than a generic run: a separatrix launched a
    # trace-radius off its saddle carries a curvature-sized transverse
    # offset (~radius^2), so a loop returning to its own endpoint lands
    # within ~1e-8 of it rather than on it
    iset = IntegratorSettings(tol=1e-9, t_budget=st.sep_budget, detect_closed=False,
                              speed_floor=1e-3, sing_capture=1e-5)
    for i, sp in enumerate(inv.points):
        if sp.kind is not SingKind.MULTI_SADDLE:
            continue
        for ang, outgoing in sp.separatrix_dirs:
            x0 = SurfacePoint(sp.point.chart,
                              sp.point.u + st.trace_radius * math.cos(ang),
                              sp.point.v + st.trace_radius * math.sin(ang))
            tr = integrate(spec, x0, direction="forward" if outgoing else "backward",
                           settings=iset)
            dest = None
            if tr.termination.kind is Termination.SING:
                fp = tr.final_point()
                dists = [spec.atlas.distance(fp, q.point) for q in inv.points]
                j = int(np.argmin(dists))
                if dists[j] < 100 * st.match_tol + 1e-4:
                    dest = j
            inv.separatrices.append(Separatrix(origin=i, outgoing=outgoing,
                                               trace=tr, dest=dest))


# ---------------------------------------------------------------------------
# extended orbit graph

@dataclass
class GraphNode:
    node_id: int
    kind: str                  # "center" | "connection"
    members: list              # inventory indices
    level: float | None = None


@dataclass
class GraphEdge:
    src: int
    dst: int
    level_range: tuple
    oriented: bool = True


@dataclass
class ExtendedOrbitGraph:
    nodes: list
    edges: list
    rep_assignments: list = field(default_factory=list)

    def has_unoriented(self) -> bool:
        return any(not e.oriented for e in self.edges)

    def to_dot(self) -> str:
        lines = ["digraph orbit_space {"]
        for n in self.nodes:
            lvl = "" if n.level is None else f" H={n.level:.4g}"
            lines.append(f'  n{n.node_id} [label="{n.kind}{lvl}"];')
        for e in self.edges:
            style = "" if e.oriented else ' [dir=none,style=dashed]'
            lines.append(f"  n{e.src} -> n{e.dst}{style};")
        lines.append("}")
        return "\n".join(lines)


def has_directed_cycle(g: ExtendedOrbitGraph) -> bool:
    """Depth-first three-color cycle detection; unoriented edges are walked
    both ways (a cycle through them is reported as a cycle)."""
    adj: dict[int, list[int]] = {n.node_id: [] for n in g.nodes}
    for e in g.edges:
        adj[e.src].append(e.dst)
        if not e.oriented:
            adj[e.dst].append(e.src)
    color = {n.node_id: 0 for n in g.nodes}

    def dfs(x) -> bool:
        color[x] = 1
        for y in adj[x]:
            if color[y] == 1:
                return True
            if color[y] == 0 and dfs(y):
                return True
        color[x] = 2
        return False

    return any(color[n.node_id] == 0 and dfs(n.node_id) for n in g.nodes)


def _probe_locally_dense(spec: FieldSpec, n_probes: int, seed: int,
                         budget: float = 1200.0) -> SurfacePoint | None:
    """Return a probe start whose orbit fills a disk, or None."""
    from .catalog import random_starts
    rng = np.random.default_rng(seed)
    cset = ClassifierSettings()
    for p in random_starts(spec, rng, n_probes):
        if spec.speed(p) < 1e-9:
            continue
        iset = IntegratorSettings(tol=1e-8, t_budget=120.0, closed_tol=1e-6)
        tr = integrate(spec, p, settings=iset)
        if tr.termination.kind is not Termination.BUDGET:
            continue
        # only suspicious probes get the full fill run
        iset = IntegratorSettings(tol=1e-8, t_budget=budget)
        tr = integrate(spec, p, settings=iset)
        if tr.termination.kind is not Termination.BUDGET:
            continue
        try:
            charts, U, V = resample_arclength(tr, cset.resample_spacing, 0.5)
        except Exception:
            continue
        grid = OccupancyGrid.from_samples(spec.atlas, cset.grid_n, charts, U, V)
        fill, _ = grid.best_disk_fill(cset.fill_disk_radius)
        if fill >= cset.fill_threshold:
            return p
    return None


def extended_orbit_graph(spec: FieldSpec, inventory: SingularInventory,
                         settings: InventorySettings | None = None,
                         n_probes: int = 50, seed: int = 11) -> ExtendedOrbitGraph:
    """Collapse multi-saddle connections and periodic annuli to a finite
    directed graph. Requires a first integral on the spec for orientation;
    without one the edges are marked unoriented."""
    st = settings or InventorySettings()
    ld = _probe_locally_dense(spec, n_probes, seed)
    if ld is not None:
        raise LocallyDenseObstruction(f"locally dense probe orbit at {ld}")

    # group saddles linked by separatrices (union-find over inventory indices)
    parent = list(range(len(inventory.points)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for sep in inventory.separatrices:
        if sep.dest is None:
            raise UnresolvedConnection(
                f"separatrix from point {sep.origin} did not reach a singular point")
        union(sep.origin, sep.dest)

    nodes: list[GraphNode] = []
    group_of: dict[int, int] = {}
    h = spec.hamiltonian
    for i, sp in enumerate(inventory.points):
        if sp.kind is SingKind.CENTER:
            nid = len(nodes)
            lvl = None if h is None else float(spec.hamiltonian_value(sp.point))
            nodes.append(GraphNode(nid, "center", [i], lvl))
            group_of[i] = nid
    saddle_groups: dict[int, list[int]] = {}
    for i, sp in enumerate(inventory.points):
        if sp.kind is SingKind.MULTI_SADDLE:
            saddle_groups.setdefault(find(i), []).append(i)
    connection_traces = []
    for root, members in sorted(saddle_groups.items()):
        nid = len(nodes)
        lvl = None if h is None else float(spec.hamiltonian_value(inventory.points[members[0]].point))
        nodes.append(GraphNode(nid, "connection", members, lvl))
        for i in members:
            group_of[i] = nid
        traces = [s.trace for s in inventory.separatrices if s.origin in members]
        connection_traces.append((nid, traces))

    # region representatives: periodic orbits between the structures
    structures = _structure_index(spec, inventory, connection_traces, group_of)
    wraps = spec.atlas.kind in (AtlasKind.TORUS, AtlasKind.MAPPING_TORUS)
    reps = _region_representatives(spec, inventory)
    raw: dict[tuple, list] = {}
    assignments = []
    for rep in reps:
        _, d0 = _nearest_structure(spec, structures, rep, wraps)
        if d0 < 2.5 * 6e-3:
            continue        # too close to a structure to march reliably
        ends = _march_to_boundaries(spec, inventory, nodes, structures, group_of, rep, st)
        if ends is None:
            continue
        lo_node, hi_node, lo_lvl, hi_lvl = ends
        if lo_node == hi_node and hi_lvl - lo_lvl < 0.05:
            continue        # marching artifact on a level curve, not an annulus
        raw.setdefault((lo_node, hi_node), []).append((lo_lvl, hi_lvl))
        assignments.append((rep, (lo_node, hi_node)))
    # edges between the same node pair merge when their level intervals
    # overlap (they sample the same annulus); disjoint intervals stay apart
    edges = []
    for (a, b), intervals in sorted(raw.items()):
        intervals.sort()
        merged = [list(intervals[0])]
        for lo, hi in intervals[1:]:
            if lo <= merged[-1][1] + 1e-9:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        for lo, hi in merged:
            edges.append(GraphEdge(src=a, dst=b, level_range=(lo, hi),
                                   oriented=h is not None))
    return ExtendedOrbitGraph(nodes=nodes, edges=edges, rep_assignments=assignments)


def _region_representatives(spec: FieldSpec, inventory: SingularInventory,
                            per_chart: int = 10) -> list[SurfacePoint]:
    pts = []
    for chart, u0, u1, v0, v1, wraps in _scan_domains(spec):
        for u in np.linspace(u0, u1, per_chart, endpoint=not wraps):
            for v in np.linspace(v0, v1, per_chart, endpoint=not wraps):
                p = SurfacePoint(chart, float(u) + 0.013, float(v) + 0.007)
                try:
                    p = spec.atlas.normalize(p)
                except Exception:
                    continue
                if spec.atlas.kind is AtlasKind.SPHERE and p.u**2 + p.v**2 > 1.1:
                    continue
                if spec.speed(p) < 1e-6:
                    continue
                if any(spec.atlas.distance(p, q.point) < 0.05 for q in inventory.points):
                    continue
                pts.append(p)
    return pts


def _structure_index(spec, inventory, connection_traces, group_of):
    """Per-chart arrays of (points, node ids) over all singular structures,
    for vectorized nearest-structure queries while marching."""
    per_chart: dict[int, list] = {}
    for i, sp in enumerate(inventory.points):
        per_chart.setdefault(sp.point.chart, []).append((sp.point.u, sp.point.v,
                                                         group_of[i]))
    for nid, traces in connection_traces:
        for tr in traces:
            stride = max(1, tr.n_samples // 600)
            for k in range(0, tr.n_samples, stride):
                per_chart.setdefault(int(tr.charts[k]), []).append(
                    (float(tr.us[k]), float(tr.vs[k]), nid))
    out = {}
    for chart, rows in per_chart.items():
        arr = np.array([(r[0], r[1]) for r in rows])
        ids = np.array([r[2] for r in rows], dtype=int)
        out[chart] = (arr, ids)
    return out


def _nearest_structure(spec, structures, q, wraps: bool):
    if q.chart not in structures:
        return None, math.inf
    arr, ids = structures[q.chart]
    du = np.abs(arr[:, 0] - q.u)
    dv = np.abs(arr[:, 1] - q.v)
    if wraps:
        du = np.minimum(du % 1.0, 1.0 - du % 1.0)
        dv = np.minimum(dv % 1.0, 1.0 - dv % 1.0)
    d = np.hypot(du, dv)
    k = int(np.argmin(d))
    return int(ids[k]), float(d[k])


def _march_to_boundaries(spec, inventory, nodes, structures, group_of,
                         rep: SurfacePoint, st: InventorySettings,
                         step: float = 2e-3, max_steps: int = 4000,
                         hit_tol: float = 6e-3):
    """From a periodic representative, march along +/- grad(H) until hitting
    a center or a multi-saddle connection; returns (low node, high node,
    low level, high level)."""
    h = spec.hamiltonian
    if h is None:
        return None
    iset = IntegratorSettings(tol=1e-8, t_budget=150.0, closed_tol=1e-6)
    tr = integrate(spec, rep, settings=iset)
    if tr.termination.kind is not Termination.CLOSED:
        return None

    wraps = spec.atlas.kind in (AtlasKind.TORUS, AtlasKind.MAPPING_TORUS)
    out = {}
    for sign in (+1.0, -1.0):
        p = rep
        hit = None
        for _ in range(max_steps):
            g = _grad_h(spec, p)
            norm = math.hypot(*g)
            if norm < 1e-9:
                hit = _nearest_center(spec, inventory, nodes, group_of, p)
                break
            q = SurfacePoint(p.chart, p.u + sign * step * g[0] / norm,
                             p.v + sign * step * g[1] / norm)
            try:
                q = spec.atlas.normalize(q)
            except Exception:
                return None
            if spec.atlas.kind is AtlasKind.SPHERE:
                q = spec.atlas.switch_chart_if_needed(q)
            nid, d = _nearest_structure(spec, structures, q, wraps)
            if nid is not None and d < hit_tol:
                hit = nid
                break
            p = q
        if hit is None:
            return None
        out[sign] = (hit, float(spec.hamiltonian_value(p)))
    (n_plus, l_plus) = out[+1.0]
    (n_minus, l_minus) = out[-1.0]
    if l_minus <= l_plus:
        return (n_minus, n_plus, l_minus, l_plus)
    return (n_plus, n_minus, l_plus, l_minus)


def _grad_h(spec: FieldSpec, p: SurfacePoint, d: float = 1e-5):
    hp = spec.hamiltonian_values
    gu = (hp(p.chart, np.array([p.u + d]), np.array([p.v]))[0]
          - hp(p.chart, np.array([p.u - d]), np.array([p.v]))[0]) / (2 * d)
    gv = (hp(p.chart, np.array([p.u]), np.array([p.v + d]))[0]
          - hp(p.chart, np.array([p.u]), np.array([p.v - d]))[0]) / (2 * d)
    return (float(gu), float(gv))


def _nearest_center(spec, inventory, nodes, group_of, p):
    best = None
    best_d = math.inf
    for i, sp in enumerate(inventory.points):
        if sp.kind is SingKind.CENTER:
            d = spec.atlas.distance(p, sp.point)
            if d < best_d:
                best_d, best = d, group_of[i]
    return best


# ---------------------------------------------------------------------------
# pre-Hamiltonian check

def pre_hamiltonian_check(spec: FieldSpec, H=None, n_orbits: int = 100,
                          n_arcs: int = 100, seed: int = 23) -> tuple[bool, dict]:
    """Check that H is constant on orbits, strictly monotone across them,
    and nowhere locally flat. Returns (verdict, itemized report)."""
    from .catalog import random_starts
    h = H if H is not None else spec.hamiltonian
    if h is None:
        return False, {"error": "no candidate function supplied"}
    rng = np.random.default_rng(seed)
    report: dict = {"constancy_failures": [], "monotonicity_failures": [],
                    "flat_patch_failures": []}

    def h_at(chart, u, v):
        return float(h(chart, np.array([u]), np.array([v]))[0])

    starts = [p for p in random_starts(spec, rng, 4 * n_orbits)
              if spec.speed(p) > 1e-6][:n_orbits]
    iset = IntegratorSettings(tol=1e-10, t_budget=20.0, detect_closed=False,
                              detect_sing=True)
    for p in starts:
        tr = integrate(spec, p, settings=iset)
        vals = []
        stride = max(1, tr.n_samples // 200)
        for k in range(0, tr.n_samples, stride):
            vals.append(h_at(int(tr.charts[k]), tr.us[k], tr.vs[k]))
        drift = max(vals) - min(vals)
        if drift > 1e-6:
            report["constancy_failures"].append(
                {"start": [p.chart, p.u, p.v], "drift": drift})

    arc_starts = [p for p in random_starts(spec, rng, 6 * n_arcs)
                  if spec.speed(p) > 1e-4
                  and (not spec.has_declared_sing() or spec.sing_distance(p) > 0.05)][:n_arcs]
    for p in arc_starts:
        fu, fv = spec.eval_scalar(p.chart, p.u, p.v)
        norm = math.hypot(fu, fv)
        nu, nv = -fv / norm, fu / norm
        ss = np.linspace(-1e-3, 1e-3, 9)
        vals = np.array([h_at(p.chart, p.u + s * nu, p.v + s * nv) for s in ss])
        diffs = np.diff(vals)
        if not (np.all(diffs > 1e-8) or np.all(diffs < -1e-8)):
            report["monotonicity_failures"].append(
                {"at": [p.chart, p.u, p.v], "diffs_range": [float(diffs.min()), float(diffs.max())]})

    for p in arc_starts[: max(1, n_arcs // 2)]:
        th = np.linspace(0, 2 * math.pi, 8, endpoint=False)
        vals = np.array([h_at(p.chart, p.u + 1e-3 * math.cos(a), p.v + 1e-3 * math.sin(a))
                         for a in th])
        if float(vals.max() - vals.min()) <= 1e-8:
            report["flat_patch_failures"].append({"at": [p.chart, p.u, p.v]})

    ok = not (report["constancy_failures"] or report["monotonicity_failures"]
              or report["flat_patch_failures"])
    report["n_orbits"] = len(starts)
    report["n_arcs"] = len(arc_starts)
    return ok, report


# ---------------------------------------------------------------------------
# verdict

class Verdict(Enum):
    HAMILTONIAN = "Hamiltonian"
    NOT_HAMILTONIAN = "NotHamiltonian"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class VerdictReport:
    verdict: Verdict
    evidence: dict
    graph: ExtendedOrbitGraph | None = None

    def as_dict(self):
        return {"verdict": self.verdict.value, "evidence": self.evidence}


def hamiltonian_verdict(spec: FieldSpec, n_probes: int = 50, seed: int = 17,
                        settings: InventorySettings | None = None) -> VerdictReport:
    """Decide Hamiltonian structure for a finite-singular flow; hard
    witnesses give NotHamiltonian, budget-limited ambiguity Inconclusive."""
    from .catalog import random_starts
    st = settings or InventorySettings()
    rng = np.random.default_rng(seed)
    evidence: dict = {}

    # probe stage: recurrence or local density are hard obstructions
    probes = random_starts(spec, rng, n_probes)
    n_periodic = 0
    n_converged = 0
    for p in probes:
        if spec.speed(p) < 1e-9:
            continue
        iset = IntegratorSettings(tol=1e-8, t_budget=150.0, closed_tol=1e-6)
        tr = integrate(spec, p, settings=iset)
        if tr.termination.kind is Termination.CLOSED:
            n_periodic += 1
            continue
        if tr.termination.kind is Termination.SING:
            n_converged += 1
            continue
        if spec.section is not None:
            long_tr = integrate(spec, p, settings=IntegratorSettings(tol=1e-8, t_budget=1500.0,
                                                                     detect_closed=False))
            try:
                hits = poincare_crossings(long_tr, spec.section)
            except Exception:
                hits = None
            if hits is not None and hits.n_hits > 30:
                ret = _min_return(hits.coords, spec.section.wrap, spec.section.period)
                if ret < 1e-3:
                    evidence["recurrent_witness"] = [p.chart, p.u, p.v]
                    evidence["min_return_displacement"] = ret
                    return VerdictReport(Verdict.NOT_HAMILTONIAN, evidence)
    ld = _probe_locally_dense(spec, min(n_probes, 8), seed + 1)
    if ld is not None:
        evidence["locally_dense_witness"] = [ld.chart, ld.u, ld.v]
        return VerdictReport(Verdict.NOT_HAMILTONIAN, evidence)
    evidence["probes"] = {"periodic": n_periodic, "converged": n_converged,
                          "total": len(probes)}

    try:
        inventory = singular_inventory(spec, st)
    except InfiniteSingularSet as e:
        evidence["infinite_singular_set"] = str(e)
        if "spans" in str(e):
            # a whole curve of zeros is structurally incompatible
            return VerdictReport(Verdict.NOT_HAMILTONIAN, evidence)
        return VerdictReport(Verdict.INCONCLUSIVE, evidence)

    evidence["inventory"] = {
        "n_points": len(inventory),
        "kinds": [p.kind.value for p in inventory.points],
        "index_sum": inventory.index_sum(),
    }
    if len(inventory) == 0:
        evidence["note"] = ("no singular points and no recurrence witness; "
                            "an all-periodic flow is left undecided")
        return VerdictReport(Verdict.INCONCLUSIVE, evidence)
    if any(p.kind is SingKind.DEGENERATE for p in inventory.points):
        return VerdictReport(Verdict.INCONCLUSIVE, evidence)

    try:
        graph = extended_orbit_graph(spec, inventory, st, n_probes=min(n_probes, 12),
                                     seed=seed + 2)
    except LocallyDenseObstruction as e:
        evidence["locally_dense_witness"] = str(e)
        return VerdictReport(Verdict.NOT_HAMILTONIAN, evidence)
    except UnresolvedConnection as e:
        evidence["unresolved_connection"] = str(e)
        return VerdictReport(Verdict.INCONCLUSIVE, evidence)

    evidence["graph"] = {"n_nodes": len(graph.nodes), "n_edges": len(graph.edges),
                         "unoriented": graph.has_unoriented()}
    if graph.has_unoriented():
        return VerdictReport(Verdict.INCONCLUSIVE, evidence, graph)
    if has_directed_cycle(graph):
        evidence["directed_cycle"] = True
        return VerdictReport(Verdict.NOT_HAMILTONIAN, evidence, graph)
    evidence["directed_cycle"] = False
    return VerdictReport(Verdict.HAMILTONIAN, evidence, graph)
