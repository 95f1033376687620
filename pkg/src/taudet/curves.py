"""Hyperelliptic curve descriptions and point/frame value types.

A curve y^2 = P(x) is described by its branch points (P monic), a pairing
of branch points into straight non-crossing cuts, and a homology encoding:
each a-cycle is a loop around one designated cut, each b-cycle a loop that
crosses two designated cuts and changes sheet in between.  The odd model
(2g+1 branch points) carries one ray cut from the unpaired branch point to
infinity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBranchPoints, HomologyEncodingError


@dataclass(frozen=True)
class SurfacePoint:
    """Point on the two-sheeted surface: y = sheet * y_plus(x).

    Branch points are canonicalized to sheet +1 (y = 0 there).  For the
    even model `at_infinity` points use the sheet to pick one of the two
    points over x = infinity; the odd model has a single branch point at
    infinity, sheet +1.
    """

    x: complex
    sheet: int = 1
    at_infinity: bool = False

    def __post_init__(self):
        if self.sheet not in (1, -1):
            raise ValueError("sheet must be +1 or -1")
        object.__setattr__(self, "x", complex(self.x))

    def opposite(self) -> "SurfacePoint":
        return SurfacePoint(self.x, -self.sheet, self.at_infinity)


@dataclass(frozen=True)
class LocalFrame:
    """Coordinate frame for tensor-valued quantities at a point.

    kind: 'affine' (t = x), 'sqrt-branch' (t = sqrt(x - center)),
    'inv-x' (t = 1/x).  Distinguished flat frames at divisor points are
    built from the differential itself and handled separately.
    """

    kind: str = "affine"
    center: complex = 0.0

    def __post_init__(self):
        if self.kind not in ("affine", "sqrt-branch", "inv-x"):
            raise ValueError(f"unknown frame kind {self.kind!r}")

    def dx_dt(self, x: complex) -> complex:
        """dx/dt at the point with affine coordinate x."""
        if self.kind == "affine":
            return 1.0
        if self.kind == "sqrt-branch":
            t = np.sqrt(complex(x) - self.center)
            return 2.0 * t
        return -complex(x) ** 2  # t = 1/x

    def schwarzian_x_of_t(self, x: complex) -> complex:
        """{x, t} at the point; enters the projective transformation law."""
        if self.kind == "affine":
            return 0.0
        if self.kind == "sqrt-branch":
            t2 = complex(x) - self.center
            return -1.5 / t2
        return 0.0  # Moebius


@dataclass(frozen=True)
class HyperellipticCurveSpec:
    """Branch data plus combinatorial cut/homology encoding.

    cut_pairing lists index pairs into branch_points; for the odd model
    exactly one branch point stays unpaired and is joined to infinity by a
    straight ray (direction `ray_direction`, default pointing away from the
    branch-point centroid).  a_cycle_cuts[k] names the cut encircled by the
    k-th a-cycle; b_cycle_cuts[k] the ordered pair of cuts the k-th b-cycle
    crosses.  The ray counts as cut index len(cut_pairing).
    """

    branch_points: tuple
    cut_pairing: tuple
    a_cycle_cuts: tuple
    b_cycle_cuts: tuple
    ray_direction: complex | None = None
    eps_sep: float = field(default=1e-8)

    def __post_init__(self):
        bp = tuple(complex(e) for e in self.branch_points)
        object.__setattr__(self, "branch_points", bp)
        object.__setattr__(self, "cut_pairing",
                           tuple((int(i), int(j)) for i, j in self.cut_pairing))
        object.__setattr__(self, "a_cycle_cuts",
                           tuple(int(i) for i in self.a_cycle_cuts))
        object.__setattr__(self, "b_cycle_cuts",
                           tuple((int(i), int(j)) for i, j in self.b_cycle_cuts))
        self._validate()

    @property
    def n_branch(self) -> int:
        return len(self.branch_points)

    @property
    def is_odd_model(self) -> bool:
        return self.n_branch % 2 == 1

    @property
    def genus(self) -> int:
        return (self.n_branch - 1) // 2

    @property
    def n_cuts(self) -> int:
        return len(self.cut_pairing) + (1 if self.is_odd_model else 0)

    def _validate(self):
        n = self.n_branch
        g = self.genus
        if g < 1:
            raise DegenerateBranchPoints(
                f"need genus >= 1 ({n} branch points gives genus {g})")
        pts = np.array(self.branch_points)
        scale = max(np.max(np.abs(pts)), 1.0)
        for i in range(n):
            for j in range(i + 1, n):
                if abs(pts[i] - pts[j]) <= max(self.eps_sep, 1e-13 * scale):
                    raise DegenerateBranchPoints(
                        f"branch points {i} and {j} coincide within eps_sep")
        used = [i for pair in self.cut_pairing for i in pair]
        if sorted(used) != sorted(set(used)):
            raise HomologyEncodingError("cut_pairing repeats a branch point")
        if any(i < 0 or i >= n for i in used):
            raise HomologyEncodingError("cut_pairing index out of range")
        expected_pairs = g + 1 if not self.is_odd_model else g
        if len(self.cut_pairing) != expected_pairs:
            raise HomologyEncodingError(
                f"expected {expected_pairs} cut pairs, got {len(self.cut_pairing)}")
        if self.is_odd_model:
            if len(used) != n - 1:
                raise HomologyEncodingError(
                    "odd model must leave exactly one branch point unpaired")
        elif len(used) != n:
            raise HomologyEncodingError("even model must pair all branch points")
        if len(self.a_cycle_cuts) != g or len(self.b_cycle_cuts) != g:
            raise HomologyEncodingError(f"need {g} a-cycles and {g} b-cycles")
        n_cuts = self.n_cuts
        if len(set(self.a_cycle_cuts)) != g:
            raise HomologyEncodingError("a-cycles must use distinct cuts")
        for idx in self.a_cycle_cuts:
            if idx < 0 or idx >= n_cuts:
                raise HomologyEncodingError("a-cycle cut index out of range")
        for i, j in self.b_cycle_cuts:
            if i == j or min(i, j) < 0 or max(i, j) >= n_cuts:
                raise HomologyEncodingError("bad b-cycle cut pair")

    @property
    def unpaired_index(self) -> int | None:
        if not self.is_odd_model:
            return None
        used = {i for pair in self.cut_pairing for i in pair}
        return next(i for i in range(self.n_branch) if i not in used)


def standard_real_curve(branch_points) -> HyperellipticCurveSpec:
    """Standard encoding for branch points sorted along a line.

    Consecutive points are paired into cuts; the a-cycles surround the
    first g cuts and every b-cycle crosses its own cut plus the last one
    (the ray for odd models, the final segment cut for even ones).
    """
    pts = sorted((complex(e) for e in branch_points), key=lambda z: (z.real, z.imag))
    n = len(pts)
    g = (n - 1) // 2
    pairs = tuple((2 * k, 2 * k + 1) for k in range(n // 2))
    far_cut = g  # ray for odd model, last segment cut for even
    return HyperellipticCurveSpec(
        branch_points=tuple(pts),
        cut_pairing=pairs,
        a_cycle_cuts=tuple(range(g)),
        b_cycle_cuts=tuple((k, far_cut) for k in range(g)),
    )
