"""Cut geometry, sheet tracking, homology cycles and path routing.

The branch y_plus(x) is assembled from one rotated square-root factor per
cut, so its discontinuity locus is exactly the union of the straight cuts.
Paths on the surface are polylines whose segments each live on one sheet;
sheet flips happen only at joints that lie on a cut.  Cycles are either
confocal ellipses around a cut (a-cycles) or explicit six-segment loops
through two cuts (b-cycles); a signed transversal-crossing count verifies
the standard symplectic pairing before any periods are computed.
"""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .curves import HyperellipticCurveSpec, SurfacePoint
from .errors import (
    HomologyEncodingError,
    PathSelectionFailure,
    PathThroughBranchPoint,
    SheetTrackingError,
)
from .quadrature import quad_periodic, quad_segment, quad_segment_endpoint_sqrt


def _cross(p: complex, q: complex) -> float:
    return p.real * q.imag - p.imag * q.real


def _seg_seg(a0, a1, b0, b1, par_tol=1e-12):
    """Intersection parameters (s, t) of two segments' support lines.

    Returns None for (near-)parallel lines.
    """
    da = a1 - a0
    db = b1 - b0
    den = _cross(da, db)
    if abs(den) <= par_tol * abs(da) * abs(db):
        return None
    diff = b0 - a0
    s = _cross(diff, db) / den
    t = _cross(diff, da) / den
    return s, t


def _point_seg_dist(p, a, b) -> float:
    d = b - a
    L2 = abs(d) ** 2
    if L2 == 0:
        return abs(p - a)
    t = ((p - a).real * d.real + (p - a).imag * d.imag) / L2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))


def _seg_seg_dist(a0, a1, b0, b1) -> float:
    hit = _seg_seg(a0, a1, b0, b1)
    if hit is not None:
        s, t = hit
        if 0 <= s <= 1 and 0 <= t <= 1:
            return 0.0
    return min(_point_seg_dist(a0, b0, b1), _point_seg_dist(a1, b0, b1),
               _point_seg_dist(b0, a0, a1), _point_seg_dist(b1, a0, a1))


@dataclass(frozen=True)
class Cut:
    """Straight cut between two branch points, or a ray to infinity.

    A ray is stored with a far pseudo-endpoint many scales away; all
    geometry of interest stays well inside.
    """

    index: int
    p: complex
    q: complex
    is_ray: bool = False

    @property
    def direction(self) -> complex:
        d = self.q - self.p
        return d / abs(d)

    def point_at(self, frac: float) -> complex:
        return self.p + frac * (self.q - self.p)


class CutSystem:
    """y-branch and crossing queries for one curve."""

    def __init__(self, curve: HyperellipticCurveSpec):
        self.curve = curve
        bp = np.array(curve.branch_points)
        self.branch_points = bp
        scale = max(np.max(np.abs(bp - np.mean(bp))), 1.0)
        self.scale = float(scale)

        cuts = []
        for k, (i, j) in enumerate(curve.cut_pairing):
            cuts.append(Cut(k, bp[i], bp[j]))
        if curve.is_odd_model:
            e = bp[curve.unpaired_index]
            if curve.ray_direction is not None:
                d = complex(curve.ray_direction)
                d /= abs(d)
            else:
                c = np.mean(bp)
                d = (e - c) / abs(e - c) if abs(e - c) > 1e-12 else 1.0 + 0j
            far = 60.0 * self.scale
            cuts.append(Cut(len(cuts), e, e + far * d, is_ray=True))
        self.cuts = cuts

        # pairwise cut clearance defines the global routing scale
        dmin = np.inf
        for i in range(len(cuts)):
            for j in range(i + 1, len(cuts)):
                dmin = min(dmin, _seg_seg_dist(cuts[i].p, cuts[i].q,
                                               cuts[j].p, cuts[j].q))
        if not np.isfinite(dmin) or dmin <= 0:
            raise HomologyEncodingError("cuts intersect; choose another pairing")
        self.gap = float(dmin)
        self.clearance = 0.04 * self.gap

        # principal axis of the branch points, for lane construction
        centered = bp - np.mean(bp)
        M = np.array([[np.sum(centered.real ** 2), np.sum(centered.real * centered.imag)],
                      [np.sum(centered.real * centered.imag), np.sum(centered.imag ** 2)]])
        evals, evecs = np.linalg.eigh(M)
        ax = evecs[:, -1]
        self.axis = complex(ax[0], ax[1])

        # constant making the ray factor square to (x - e) exactly
        if curve.is_odd_model:
            ray = self.cuts[-1]
            phi = ray.direction
            self._ray_mu = 1j * np.sqrt(phi)
        else:
            self._ray_mu = None

    # -- branch of y ------------------------------------------------------

    def y_plus(self, x):
        """Branch of sqrt(P(x)) with discontinuities exactly on the cuts."""
        x = np.asarray(x, dtype=complex)
        out = np.ones_like(x)
        for cut in self.cuts:
            if cut.is_ray:
                zeta = -(x - cut.p) / cut.direction
                out = out * np.sqrt(zeta) * self._ray_mu
            else:
                m = 0.5 * (cut.p + cut.q)
                h = 0.5 * (cut.q - cut.p)
                u = (x - m) / h
                out = out * h * np.sqrt(u - 1.0) * np.sqrt(u + 1.0)
        return out

    def y(self, x, sheet: int):
        return sheet * self.y_plus(x)

    def log_derivative_y(self, x):
        """y'/y = (1/2) sum 1/(x - e_i); branch independent."""
        x = np.asarray(x, dtype=complex)
        return 0.5 * np.sum(1.0 / (x[..., None] - self.branch_points), axis=-1)

    def poly(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.ones_like(x)
        for e in self.branch_points:
            out = out * (x - e)
        return out

    # -- crossing queries -------------------------------------------------

    def segment_crossings(self, z0: complex, z1: complex, end_tol: float = 1e-9):
        """Cut crossings strictly inside the segment z0 -> z1.

        Returns a list of (s, cut_index) sorted by the segment parameter s;
        crossings within end_tol of either endpoint are dropped (joints on
        cuts are handled by the path structure).
        """
        hits = []
        for cut in self.cuts:
            r = _seg_seg(z0, z1, cut.p, cut.q)
            if r is None:
                continue
            s, t = r
            if end_tol < s < 1.0 - end_tol and -1e-12 <= t <= 1.0 + 1e-12:
                hits.append((s, cut.index))
        hits.sort()
        return hits

    def point_on_cut(self, z: complex, tol: float) -> int | None:
        for cut in self.cuts:
            if _point_seg_dist(z, cut.p, cut.q) <= tol:
                return cut.index
        return None

    def nearest_branch_distance(self, z) -> float:
        z = np.asarray(z, dtype=complex)
        return float(np.min(np.abs(z[..., None] - self.branch_points)))

    def is_branch_point(self, x: complex, tol: float = None) -> bool:
        tol = tol if tol is not None else 1e-9 * self.scale
        return bool(np.min(np.abs(x - self.branch_points)) <= tol)


@dataclass
class SurfacePath:
    """Polyline path; points[k] -> points[k+1] travels on sheets[k].

    `terminal_branch` marks a path whose final point is a branch point, so
    integrators use the square-root endpoint substitution there.
    """

    points: list
    sheets: list
    terminal_branch: bool = False
    closed: bool = False

    def __post_init__(self):
        if len(self.points) != len(self.sheets) + 1:
            raise ValueError("need one sheet label per segment")
        self.points = [complex(p) for p in self.points]
        self.sheets = [int(s) for s in self.sheets]
        if self.closed and abs(self.points[0] - self.points[-1]) > 1e-12:
            raise ValueError("closed path must return to its start point")

    @property
    def start(self) -> SurfacePoint:
        return SurfacePoint(self.points[0], self.sheets[0])

    @property
    def end(self) -> SurfacePoint:
        return SurfacePoint(self.points[-1], self.sheets[-1])

    @property
    def is_closed(self) -> bool:
        return self.closed

    def reversed(self) -> "SurfacePath":
        return SurfacePath(self.points[::-1], self.sheets[::-1],
                           self.terminal_branch, self.closed)

    def validate(self, cs: CutSystem):
        tol = 1e-7 * cs.scale
        n = len(self.sheets)
        for k in range(n):
            z0, z1 = self.points[k], self.points[k + 1]
            if abs(z1 - z0) < 1e-13 * cs.scale:
                raise ValueError("degenerate path segment")
            if cs.segment_crossings(z0, z1):
                raise SheetTrackingError(
                    f"segment {k} crosses a cut away from its endpoints")
            # branch-point clearance, except for a sanctioned terminal hit
            for e in cs.branch_points:
                d = _point_seg_dist(e, z0, z1)
                if d < cs.clearance:
                    terminal_ok = (self.terminal_branch and k == n - 1 and
                                   abs(z1 - e) < tol)
                    if not terminal_ok:
                        raise PathThroughBranchPoint(
                            f"segment {k} passes within {d:.3g} of branch point")
        # sheet flips exactly at joints on cuts
        joints = range(1, n) if not self.is_closed else range(0, n)
        for k in joints:
            z = self.points[k]
            on_cut = cs.point_on_cut(z, tol) is not None
            s_prev = self.sheets[k - 1] if k > 0 else self.sheets[-1]
            flip = s_prev != self.sheets[k]
            if flip and not on_cut:
                raise SheetTrackingError(f"sheet flip at joint {k} off any cut")
            if not flip and on_cut and not cs.is_branch_point(z):
                raise SheetTrackingError(
                    f"joint {k} sits on a cut but the sheet does not flip")
        return self

    def check_continuity(self, cs: CutSystem, rtol: float = 1e-4):
        """y must be continuous across every joint (one-sided limits).

        Probes sit eps off the joint, so the probes of a legitimate joint
        differ by O(eps |y'|) while a sheet bug gives O(|y|); the tolerance
        separates the two regimes.
        """
        eps = 1e-8 * cs.scale
        n = len(self.sheets)
        joints = range(1, n) if not self.is_closed else range(0, n)
        for k in joints:
            z = self.points[k]
            prev_from = self.points[k - 1] if k > 0 else self.points[-2]
            d_in = z - prev_from
            d_out = self.points[k + 1] - z
            s_prev = self.sheets[k - 1] if k > 0 else self.sheets[-1]
            ya = cs.y(z - eps * d_in / abs(d_in), s_prev)
            yb = cs.y(z + eps * d_out / abs(d_out), self.sheets[k])
            if abs(ya - yb) > rtol * max(abs(ya), abs(yb), 1e-12):
                raise SheetTrackingError(
                    f"y jumps at joint {k}: {ya:.6g} vs {yb:.6g}")
        return self

    def integrate(self, fn, rtol: float = 1e-11):
        """Integral of fn(x, sheet) dx along the path."""
        total = 0.0 + 0.0j
        n = len(self.sheets)
        for k in range(n):
            s = self.sheets[k]
            f = lambda x, s=s: fn(x, s)
            if self.terminal_branch and k == n - 1:
                total += quad_segment_endpoint_sqrt(
                    lambda x: fn(x, s), self.points[k], self.points[k + 1],
                    at_start=False, rtol=rtol)
            else:
                total += quad_segment(f, self.points[k], self.points[k + 1],
                                      rtol=rtol)
        return total

    def polyline(self):
        return list(self.points), list(self.sheets)


class EllipseCycle:
    """Confocal ellipse around one cut, fixed sheet, theta increasing.

    For a cut with endpoints p, q the parametrization
    x(t) = m + h (cosh(s) cos t + i sinh(s) sin t), h = (q - p)/2,
    traverses an ellipse with foci p and q; for real p < q increasing t
    runs counterclockwise.
    """

    def __init__(self, cut: Cut, minor: float, sheet: int = 1,
                 orientation: int = 1):
        self.cut = cut
        self.h = 0.5 * (cut.q - cut.p)
        self.m = 0.5 * (cut.q + cut.p)
        self.s = float(np.arcsinh(minor / abs(self.h)))
        self.sheet = sheet
        self.orientation = orientation

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.orientation < 0:
            t = -t
        return self.m + self.h * (np.cosh(self.s) * np.cos(t) +
                                  1j * np.sinh(self.s) * np.sin(t))

    def tangent(self, t):
        t = np.asarray(t, dtype=float)
        sgn = 1.0 if self.orientation > 0 else -1.0
        tt = t if self.orientation > 0 else -t
        return sgn * self.h * (-np.cosh(self.s) * np.sin(tt) +
                               1j * np.sinh(self.s) * np.cos(tt))

    def integrate(self, fn, rtol: float = 1e-11):
        """Integral of fn(x, sheet) dx over the full ellipse."""
        def g(t):
            vals = np.asarray(fn(self.point(t), self.sheet))
            tang = self.tangent(t)
            if vals.ndim == 2:
                return vals * tang[:, None]
            return vals * tang
        return quad_periodic(g, rtol=rtol)

    def polyline(self, n: int = 128):
        # phase offset keeps vertices off the cut's symmetry axes, where
        # crossing segments of b-cycles live
        t = 2.0 * np.pi * np.arange(n + 1) / n + 0.37 * 2.0 * np.pi / n
        pts = list(self.point(t))
        return pts, [self.sheet] * n

    def reversed(self) -> "EllipseCycle":
        out = EllipseCycle.__new__(EllipseCycle)
        out.cut, out.h, out.m, out.s = self.cut, self.h, self.m, self.s
        out.sheet = self.sheet
        out.orientation = -self.orientation
        return out


def signed_intersection(poly1, poly2):
    """Signed transversal crossing count of two sheeted polylines.

    Each argument is (points, sheets).  Segment parameters use a half-open
    [0, 1) convention so a crossing at a shared polyline vertex counts
    exactly once.
    """
    pts1, sh1 = poly1
    pts2, sh2 = poly2
    total = 0
    for i in range(len(sh1)):
        a0, a1 = pts1[i], pts1[i + 1]
        for j in range(len(sh2)):
            if sh1[i] != sh2[j]:
                continue
            b0, b1 = pts2[j], pts2[j + 1]
            r = _seg_seg(a0, a1, b0, b1)
            if r is None:
                continue
            s, t = r
            if 0.0 <= s < 1.0 and 0.0 <= t < 1.0:
                total += int(np.sign(_cross(a1 - a0, b1 - b0)))
    return total


# -- homology cycle construction ------------------------------------------

def build_cycles(cs: CutSystem):
    """a- and b-cycle representatives realizing the standard pairing.

    a-cycles are counterclockwise ellipses on sheet +1; b-cycles are
    six-segment lane loops whose depths and crossing sites are staggered so
    that distinct b-cycles never intersect.  The pairing is verified by
    signed crossing counts and b-orientations flipped to make
    a_k . b_k = +1; failure raises HomologyEncodingError.
    """
    curve = cs.curve
    g = curve.genus
    G = cs.gap
    minor = 0.20 * G
    axis = cs.axis
    normal = 1j * axis

    a_cycles = [EllipseCycle(cs.cuts[ci], minor) for ci in curve.a_cycle_cuts]

    # depth rank: leftmost own cut (along the principal axis) gets the
    # deepest lane so lane/vertical piercings cancel pairwise
    proj = {k: ((0.5 * (cs.cuts[c0].p + cs.cuts[c0].q)) / axis).real
            for k, (c0, c1) in enumerate(curve.b_cycle_cuts)}
    order = sorted(range(g), key=lambda k: proj[k])
    depth = {}
    for rank, k in enumerate(order):
        depth[k] = G * (0.58 - 0.28 * rank / max(g - 1, 1))

    # crossing sites: for each cut, the b-cycles that cross it, deepest lane
    # crossing farthest from the cut body
    users: dict[int, list] = {}
    for k, (c0, c1) in enumerate(curve.b_cycle_cuts):
        users.setdefault(c0, []).append(k)
        users.setdefault(c1, []).append(k)
    site: dict[tuple, complex] = {}
    centroid = np.mean(cs.branch_points)
    for cidx, ks in users.items():
        cut = cs.cuts[cidx]
        ks_sorted = sorted(ks, key=lambda k: -depth[k])
        if cut.is_ray:
            for rank, k in enumerate(ks_sorted):
                rho = G * (0.55 + 0.45 * (len(ks_sorted) - 1 - rank))
                site[(k, cidx)] = cut.p + rho * cut.direction
        else:
            # fraction measured from the endpoint facing the curve body
            flip = abs(cut.p - centroid) > abs(cut.q - centroid)
            n_s = len(ks_sorted)
            for rank, k in enumerate(ks_sorted):
                if n_s == 1:
                    frac = 0.5
                else:
                    frac = 0.3 + 0.4 * (n_s - 1 - rank) / (n_s - 1)
                site[(k, cidx)] = cut.point_at(1.0 - frac if flip else frac)

    b_cycles = []
    for k, (c0, c1) in enumerate(curve.b_cycle_cuts):
        d = depth[k]
        X0 = site[(k, c0)]
        X1 = site[(k, c1)]
        D0, D1 = X0 - d * normal, X1 - d * normal
        U0, U1 = X0 + d * normal, X1 + d * normal
        path = SurfacePath(
            [X0, D0, D1, X1, U1, U0, X0],
            [-1, -1, -1, 1, 1, 1], closed=True)
        path.validate(cs).check_continuity(cs)
        b_cycles.append(path)

    # verify the symplectic pairing and orient
    a_pl = [a.polyline() for a in a_cycles]
    b_pl = [b.polyline() for b in b_cycles]
    inter = np.zeros((g, g), dtype=int)
    for i in range(g):
        for j in range(g):
            inter[i, j] = signed_intersection(a_pl[i], b_pl[j])
    for j in range(g):
        if inter[j, j] == -1:
            b_cycles[j] = b_cycles[j].reversed()
            inter[:, j] *= -1
    if not np.array_equal(inter, np.eye(g, dtype=int)):
        raise HomologyEncodingError(
            f"a.b intersection matrix is not the identity:\n{inter}")
    for i in range(g):
        for j in range(i + 1, g):
            if signed_intersection(a_pl[i], a_pl[j]) != 0:
                raise HomologyEncodingError(f"a{i}.a{j} != 0")
            bij = signed_intersection(b_cycles[i].polyline(),
                                      b_cycles[j].polyline())
            if bij != 0:
                raise HomologyEncodingError(f"b{i}.b{j} = {bij} != 0")
    return a_cycles, b_cycles


# -- point-to-point routing -----------------------------------------------

class PathRouter:
    """Shortest admissible surface paths between points.

    Builds a visibility graph over ellipse-ring waypoints (both sheets)
    with crossing edges through per-cut portal sites, then runs Dijkstra.
    Deterministic for a fixed CutSystem.
    """

    def __init__(self, cs: CutSystem):
        self.cs = cs
        G = cs.gap
        pts = []
        for cut in cs.cuts:
            ring = EllipseCycle(cut, 0.34 * G)
            if cut.is_ray:
                # flank the near part of the ray instead of ringing it
                d = cut.direction
                n = 1j * d
                for rho in (0.4 * G, 1.2 * G, 2.4 * G, 4.0 * G):
                    for side in (1, -1):
                        pts.append(cut.p + rho * d + side * 0.45 * G * n)
                pts.append(cut.p - 0.45 * G * d)
            else:
                for t in np.linspace(0, 2 * np.pi, 10, endpoint=False):
                    pts.append(complex(ring.point(t + 0.13)))
        bp = cs.branch_points
        lo = complex(np.min(bp.real), np.min(bp.imag))
        hi = complex(np.max(bp.real), np.max(bp.imag))
        mid = 0.5 * (lo + hi)
        span = max(abs(hi - lo), G)
        for dx in (-0.8, 0.0, 0.8):
            for dy in (-0.8, 0.0, 0.8):
                if dx == dy == 0:
                    continue
                pts.append(mid + span * (dx + 1j * dy))
        self.waypoints = [p for p in pts
                          if cs.point_on_cut(p, 2.0 * cs.clearance) is None]
        self.sites = {}
        for cut in cs.cuts:
            fr = [0.35, 0.5, 0.65]
            if cut.is_ray:
                self.sites[cut.index] = [cut.p + r * G * cut.direction
                                         for r in (0.5, 1.0, 2.0)]
            else:
                self.sites[cut.index] = [cut.point_at(f) for f in fr]
        self._graph = self._build_graph()

    def _along_cut(self, z0, z1):
        # collinear overlap with a cut defeats the crossing test; probe
        # interior points instead
        cs = self.cs
        for f in (0.25, 0.5, 0.75):
            if cs.point_on_cut(z0 + f * (z1 - z0), 0.5 * cs.clearance) is not None:
                return True
        return False

    def _clean(self, z0, z1):
        cs = self.cs
        if cs.segment_crossings(z0, z1):
            return False
        if self._along_cut(z0, z1):
            return False
        for e in cs.branch_points:
            if _point_seg_dist(e, z0, z1) < cs.clearance:
                return False
        return True

    def _reaches_site(self, w, x_site, cut_idx):
        cs = self.cs
        hits = cs.segment_crossings(w, x_site)
        if hits:
            return False
        if self._along_cut(w, x_site):
            return False
        for e in cs.branch_points:
            d = _point_seg_dist(e, w, x_site)
            if d < cs.clearance:
                return False
        return True

    def _build_graph(self):
        g = nx.Graph()
        W = self.waypoints
        for i, w in enumerate(W):
            for s in (1, -1):
                g.add_node(("w", i, s), pos=w)
        for i in range(len(W)):
            for j in range(i + 1, len(W)):
                if self._clean(W[i], W[j]):
                    d = abs(W[i] - W[j])
                    for s in (1, -1):
                        g.add_edge(("w", i, s), ("w", j, s), weight=d)
        for cidx, xs in self.sites.items():
            cut = self.cs.cuts[cidx]
            for si, x in enumerate(xs):
                for s in (1, -1):
                    for side in (1, -1):
                        g.add_node(("p", cidx, si, side, s), pos=x)
                for s in (1, -1):
                    g.add_edge(("p", cidx, si, 1, s),
                               ("p", cidx, si, -1, -s),
                               weight=1e-6 * self.cs.scale)
                for i, w in enumerate(W):
                    if self._reaches_site(w, x, cidx):
                        side = int(np.sign(_cross(cut.direction, w - x))) or 1
                        d = abs(w - x)
                        for s in (1, -1):
                            g.add_edge(("w", i, s), ("p", cidx, si, side, s),
                                       weight=d)
        return g

    def route(self, start: SurfacePoint, end: SurfacePoint) -> SurfacePath:
        cs = self.cs
        g = self._graph.copy()
        terminal_branch = cs.is_branch_point(end.x)
        end_anchor = end.x
        if terminal_branch:
            end_anchor = self._staging_point(end.x)
        for tag, pt, sheets in (("S", start.x, (start.sheet,)),
                                ("E", end_anchor,
                                 (1, -1) if terminal_branch else (end.sheet,))):
            for s in sheets:
                g.add_node((tag, 0, s), pos=pt)
                for i, w in enumerate(self.waypoints):
                    if self._clean(pt, w):
                        g.add_edge((tag, 0, s), ("w", i, s),
                                   weight=abs(pt - w))
                for cidx, xs in self.sites.items():
                    cut = cs.cuts[cidx]
                    for si, x in enumerate(xs):
                        if self._reaches_site(pt, x, cidx):
                            side = int(np.sign(_cross(cut.direction, pt - x))) or 1
                            g.add_edge((tag, 0, s), ("p", cidx, si, side, s),
                                       weight=abs(pt - x))
        if terminal_branch:
            targets = [("E", 0, 1), ("E", 0, -1)]
        else:
            targets = [("E", 0, end.sheet)]
        best = None
        for tgt in targets:
            # direct connection without intermediate waypoints
            if tgt[2] == start.sheet and self._clean(start.x, end_anchor) \
                    and abs(start.x - end_anchor) > 1e-13 * cs.scale:
                cand = ([start.x, end_anchor], [start.sheet])
                cost = abs(start.x - end_anchor)
                if best is None or cost < best[0]:
                    best = (cost, cand)
            try:
                length, nodes = nx.single_source_dijkstra(
                    g, ("S", 0, start.sheet), tgt, weight="weight")
            except (nx.NetworkXNoPath, nx.NodeNotFound):
                continue
            pts, sheets = self._assemble(g, nodes)
            if best is None or length < best[0]:
                best = (length, (pts, sheets))
        if best is None:
            raise PathSelectionFailure(
                f"no admissible path from {start} to {end}")
        pts, sheets = best[1]
        if terminal_branch:
            pts = pts + [end.x]
            sheets = sheets + [sheets[-1]]
        path = SurfacePath(pts, sheets, terminal_branch=terminal_branch)
        return path.validate(cs).check_continuity(cs)

    def _staging_point(self, e: complex) -> complex:
        """Approach point near a branch point, clear of every cut."""
        cs = self.cs
        own = None
        for cut in cs.cuts:
            if abs(cut.p - e) < 1e-9 * cs.scale:
                own = cut.direction
            elif abs(cut.q - e) < 1e-9 * cs.scale:
                own = -cut.direction
        r = 3.0 * cs.clearance
        candidates = []
        if own is not None:
            candidates.append(-own)
            candidates.append(-own * np.exp(0.35j))
            candidates.append(-own * np.exp(-0.35j))
        candidates += [np.exp(1j * t) for t in np.linspace(0, 2 * np.pi, 12,
                                                          endpoint=False)]
        for d in candidates:
            cand = e + r * d
            hits = cs.segment_crossings(e, cand, end_tol=1e-6)
            near = min(abs(cand - b) for b in cs.branch_points
                       if abs(b - e) > 1e-9 * cs.scale)
            if not hits and near > cs.clearance and \
                    cs.point_on_cut(cand, 0.5 * cs.clearance) is None:
                return cand
        raise PathSelectionFailure(f"no staging point near branch point {e}")

    def _assemble(self, graph, nodes):
        """Turn a node sequence into (points, segment sheets).

        Portal node pairs share a position; they contribute the sheet flip
        but no segment.  A same-sheet joint that merely touches a cut (a
        site used as an ordinary via point) is nudged off the cut so the
        path invariants hold.
        """
        tol = 1e-13 * self.cs.scale
        pts = [complex(graph.nodes[nodes[0]]["pos"])]
        sheets = []
        for k in range(1, len(nodes)):
            p = complex(graph.nodes[nodes[k]]["pos"])
            if abs(p - pts[-1]) > tol:
                sheets.append(nodes[k - 1][-1])
                pts.append(p)
        # nudge same-sheet on-cut joints sideways
        for k in range(1, len(pts) - 1):
            if sheets[k - 1] != sheets[k]:
                continue
            cidx = self.cs.point_on_cut(pts[k], 1e-9 * self.cs.scale)
            if cidx is None:
                continue
            cut = self.cs.cuts[cidx]
            n_hat = 1j * cut.direction
            side = _cross(cut.direction, pts[k - 1] - pts[k]) + \
                _cross(cut.direction, pts[k + 1] - pts[k])
            nudge = (1.0 if side >= 0 else -1.0) * 0.5 * self.cs.clearance
            pts[k] = pts[k] + nudge * n_hat
        return pts, sheets
