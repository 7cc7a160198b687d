"""Finite-depth ternary Cantor sets and the singular strip set built from them.

Everything here works with the depth-k approximation C_k of the middle-thirds
set scaled by one half: 2^k closed intervals of length (1/2) * 3^-k inside
[0, 1/2]. Interval endpoints are integer multiples of the unit
``(1/2) * 3^-k``, so membership, Minkowski sums, and component scans can be
done in exact integer arithmetic.

The strip set at depth k is

    M_k = {(x, x + y) : x in C_k-half, y in C_k-half}  subset of  [0, 1/2] x [0, 1]

which decomposes into 4^k slope-1 parallelogram slabs, pairwise separated by
at least ``unit / sqrt(2)``. Distance queries against M_k are exact and
vectorized; they sit in the integrator's inner loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter


def cantor_starts(depth: int) -> np.ndarray:
    """Integer left endpoints of the 2^depth intervals of the ternary set,
    in units of 3^-depth. Each interval is [s, s+1] in those units."""
    if depth < 1:
        raise InvalidParameter("depth must be >= 1")
    starts = np.array([0], dtype=np.int64)
    for level in range(depth):
        step = 2 * 3**level
        starts = np.concatenate([starts, starts + step])
    return np.sort(starts)


@dataclass(frozen=True)
class CantorApprox:
    """Depth-k approximation of the half-scaled ternary set.

    ``starts`` holds integer interval left endpoints in units of
    (1/2) * 3^-k; every interval is one unit long.
    """

    depth: int
    starts: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, depth: int) -> "CantorApprox":
        return cls(depth=depth, starts=cantor_starts(depth))

    @property
    def unit(self) -> float:
        """Interval length: (1/2) * 3^-depth."""
        return 0.5 / 3**self.depth

    def intervals(self) -> np.ndarray:
        """(n, 2) array of closed intervals in surface units, inside [0, 1/2].

        Endpoints are computed multiply-then-divide so that the binary-exact
        ones (0, 1/2, ...) come out exact.
        """
        denom = float(3**self.depth)
        return np.stack([self.starts * 0.5 / denom,
                         (self.starts + 1) * 0.5 / denom], axis=1)

    def contains(self, x: float) -> bool:
        """Membership of a real number in the union of closed intervals."""
        t = 2.0 * x
        if t < 0.0 or t > 1.0:
            return False
        for _ in range(self.depth):
            t *= 3.0
            if t <= 1.0:
                continue
            if t >= 2.0:
                t -= 2.0
                continue
            return False
        return True

    def distance_1d(self, x: np.ndarray) -> np.ndarray:
        """Distance from each x to the union of intervals (vectorized)."""
        iv = self.intervals()
        lo = iv[:, 0]
        hi = iv[:, 1]
        x = np.atleast_1d(np.asarray(x, dtype=float))
        i = np.searchsorted(lo, x)
        d = np.full(x.shape, np.inf)
        left_ok = i > 0
        d[left_ok] = np.maximum(x[left_ok] - hi[i[left_ok] - 1], 0.0)
        right_ok = i < len(lo)
        d[right_ok] = np.minimum(d[right_ok], np.maximum(lo[i[right_ok]] - x[right_ok], 0.0))
        return d


def minkowski_cover_gap(depth: int) -> float:
    """Largest sub-interval of [0, 1] missed by the interval sums of the
    half-scaled depth-k set with itself.

    Exhaustive sweep over all 4^depth interval pairs in integer units; the
    sums are [a + b, a + b + 2] so coverage reduces to a boolean run scan.
    """
    starts = cantor_starts(depth)        # units of 3^-depth over [0, 3^depth]
    n = 3**depth
    covered = np.zeros(2 * n, dtype=bool)
    sums = (starts[:, None] + starts[None, :]).ravel()
    for s in sums:
        covered[s:s + 2] = True
    if covered.all():
        return 0.0
    # longest run of uncovered unit cells, in surface units ((1/2) * 3^-k each)
    gaps = np.flatnonzero(~covered)
    runs = np.split(gaps, np.flatnonzero(np.diff(gaps) > 1) + 1)
    longest = max(len(r) for r in runs)
    return longest * 0.5 / n


class StripSet:
    """The depth-k singular strip set M_k and exact distance queries to it.

    The set lives in template coordinates (x, t) in [0, 1/2] x [0, 1]; an
    affine or polar placement into chart coordinates is applied by the
    surgery layer. In slab coordinates (x, w = t - x) the set is the product
    of the interval family with itself, which is what makes the queries
    exact.
    """

    def __init__(self, depth: int):
        self.depth = depth
        self.approx = CantorApprox.build(depth)
        iv = self.approx.intervals()
        self.lo = iv[:, 0]
        self.hi = iv[:, 1]
        self.unit = self.approx.unit

    def contains(self, x: float, t: float) -> bool:
        return self.approx.contains(x) and self.approx.contains(t - x)

    def contains_many(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        u = self.unit
        x = np.asarray(x, dtype=float)
        w = np.asarray(t, dtype=float) - x
        out = np.zeros(x.shape, dtype=bool)
        ok = (x >= 0) & (x <= 0.5 + 1e-15) & (w >= -1e-15) & (w <= 0.5 + 1e-15)
        if not ok.any():
            return out
        xi = x[ok] / u
        wi = w[ok] / u

        def in_family(vals):
            idx = np.searchsorted(self.approx.starts, np.floor(vals).astype(np.int64), side="right") - 1
            res = np.zeros(vals.shape, dtype=bool)
            has = idx >= 0
            s = self.approx.starts[idx[has]]
            res[has] = (vals[has] >= s) & (vals[has] <= s + 1)
            return res

        out[ok] = in_family(xi) & in_family(wi)
        return out

    def max_x_at_height(self, t: float) -> float | None:
        """Largest x with (x, t) in the strip set, or None if the height
        t misses it. Enumerates x-intervals from the right."""
        for lo, hi in zip(self.lo[::-1], self.hi[::-1]):
            # need some x in [lo, hi] with t - x in the family:
            # scan w-intervals intersecting [t - hi, t + -lo]
            wlo, whi = t - hi, t - lo
            cand = None
            for a, b in zip(self.lo, self.hi):
                if b < wlo or a > whi:
                    continue
                # x = t - w, w in [max(a, wlo), min(b, whi)]; largest x = t - max(a, wlo)
                x = t - max(a, wlo)
                cand = x if cand is None else max(cand, x)
            if cand is not None:
                return cand
        return None

    def distance(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Exact Euclidean distance from points (x, t) to the strip set.

        Works per point over the 4^k slabs with a marginal-distance prune:
        dist >= dist_x(x, X-interval) and dist >= dist_w(t - x, W-interval)
        / sqrt(2), so only pairs below the current upper bound need the
        exact slab formula.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = t - x
        dx = self._axis_dist(x)       # (n_pts, n_iv)
        dw = self._axis_dist(w)
        out = np.empty(x.shape)
        for p in range(x.size):
            out.flat[p] = self._point_distance(x.flat[p], t.flat[p], dx[p], dw[p])
        return out

    def _axis_dist(self, vals: np.ndarray) -> np.ndarray:
        v = vals.reshape(-1, 1)
        return np.maximum(np.maximum(self.lo[None, :] - v, v - self.hi[None, :]), 0.0)

    def distance_batch(self, x: np.ndarray, t: np.ndarray,
                       cutoff: float | None = None) -> np.ndarray:
        """Exact distances for a batch of points.

        With a ``cutoff``, points whose marginal lower bound already reaches
        it get the lower bound instead of the exact value (their bump factor
        is 1 either way). An upper bound from the marginally-nearest slab
        prunes the pair set for the rest.
        """
        x = np.asarray(x, dtype=float).ravel()
        t = np.asarray(t, dtype=float).ravel()
        n = x.size
        if n == 0:
            return np.empty(0)
        w = t - x
        dx = self._axis_dist(x)                  # (n, m)
        dw = self._axis_dist(w)
        sqrt2 = math.sqrt(2.0)
        # dist >= dist_x always, and |w' - w| <= sqrt(2) dist
        lb = np.maximum(dx.min(axis=1), dw.min(axis=1) / sqrt2)
        out = np.array(lb)
        if cutoff is not None:
            need = lb < cutoff
        else:
            need = np.ones(n, dtype=bool)
        if not need.any():
            return out
        idx = np.flatnonzero(need)
        i0 = np.argmin(dx[idx], axis=1)
        j0 = np.argmin(dw[idx], axis=1)
        ub = self._slab_distance_vec(x[idx], t[idx], i0, j0)
        for row, p in enumerate(idx):
            best = ub[row]
            if best > 0.0:
                ii = np.flatnonzero(dx[p] <= best)
                jj = np.flatnonzero(dw[p] <= best * sqrt2)
                if len(ii) * len(jj) > 1:
                    I, J = np.meshgrid(ii, jj, indexing="ij")
                    cand = self._slab_distance_vec(np.full(I.size, x[p]),
                                                   np.full(I.size, t[p]),
                                                   I.ravel(), J.ravel())
                    best = min(best, float(cand.min()))
            out[p] = best
        return out

    def distance_scalar_pruned(self, px: float, pt: float, cutoff: float) -> float:
        """Scalar distance with the same early exit as distance_batch."""
        dx = self._axis_dist(np.array([px]))[0]
        dw = self._axis_dist(np.array([pt - px]))[0]
        lb = max(float(dx.min()), float(dw.min()) / math.sqrt(2.0))
        if lb >= cutoff:
            return lb
        return self._point_distance(px, pt, dx, dw)

    def _slab_distance_vec(self, px, pt, i, j) -> np.ndarray:
        l = self.lo[i]
        r = self.hi[i]
        m = self.lo[j]
        s = self.hi[j]

        def g(xp):
            wp = np.clip(pt - xp, m, s)
            return (xp - px) ** 2 + (xp + wp - pt) ** 2

        best = np.minimum(g(l), g(r))
        for wfix in (m, s):
            xs = np.clip(0.5 * (px + pt - wfix), l, r)
            best = np.minimum(best, g(xs))
        best = np.minimum(best, g(np.clip(px, l, r)))
        return np.sqrt(best)

    def _point_distance(self, px: float, pt: float, dx: np.ndarray, dw: np.ndarray) -> float:
        i0 = int(np.argmin(dx))
        j0 = int(np.argmin(dw))
        best = float(self._slab_distance_vec(np.array([px]), np.array([pt]),
                                             np.array([i0]), np.array([j0]))[0])
        if best == 0.0:
            return 0.0
        ii = np.flatnonzero(dx <= best)
        jj = np.flatnonzero(dw <= best * math.sqrt(2.0))
        if len(ii) * len(jj) > 1:
            I, J = np.meshgrid(ii, jj, indexing="ij")
            cand = self._slab_distance_vec(np.full(I.size, px), np.full(I.size, pt),
                                           I.ravel(), J.ravel())
            best = min(best, float(cand.min()))
        return best


def strip_component_scan(depth: int, resolution: int | None = None) -> dict:
    """Grid-component diagnostic for the strip set's total disconnectedness.

    Marks grid cells whose center lies in M_depth (cell centers are offset a
    quarter cell vertically so that the slope-1 slab boundaries, which sit on
    integer lattice values of t - x, never run through a center), labels
    4-connected components, and reports the largest component diameter in
    surface units. The default resolution is 2 * 3^depth, one cell per
    interval unit.
    """
    from scipy import ndimage

    strip = StripSet(depth)
    if resolution is None:
        resolution = 2 * 3**depth
    cell = 1.0 / resolution
    xs = (np.arange(int(0.5 / cell) + 1) + 0.5) * cell
    ts = (np.arange(resolution) + 0.75) * cell
    X, T = np.meshgrid(xs, ts, indexing="ij")
    mask = strip.contains_many(X.ravel(), T.ravel()).reshape(X.shape)
    labels, n = ndimage.label(mask)
    max_diam = 0.0
    comp_sizes = []
    for idx in ndimage.find_objects(labels):
        su = (idx[0].stop - idx[0].start) * cell
        sv = (idx[1].stop - idx[1].start) * cell
        d = float(np.hypot(su, sv))
        comp_sizes.append(d)
        max_diam = max(max_diam, d)
    return {
        "resolution": resolution,
        "cell": cell,
        "n_components": int(n),
        "max_component_diameter": max_diam,
        "bound": 0.5 / 3**depth + 2 * cell,
    }
