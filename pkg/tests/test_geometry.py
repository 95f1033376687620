from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import quad

from taudet.curves import HyperellipticCurveSpec, SurfacePoint, standard_real_curve
from taudet.errors import (
    DegenerateBranchPoints,
    HomologyEncodingError,
    PathThroughBranchPoint,
    SheetTrackingError,
)
from taudet.geometry import (
    CutSystem,
    EllipseCycle,
    PathRouter,
    SurfacePath,
    build_cycles,
    signed_intersection,
)

ODD5 = standard_real_curve([-2.0, -0.9, 0.6, 1.7, 3.2])
EVEN6 = standard_real_curve([-2.5, -1.4, -0.3, 0.8, 1.9, 3.0])
ODD7 = standard_real_curve([-3.0, -2.1, -1.0, -0.1, 1.1, 2.0, 3.1])


class TestCurveSpec:
    def test_genus_and_model(self):
        assert ODD5.genus == 2 and ODD5.is_odd_model
        assert EVEN6.genus == 2 and not EVEN6.is_odd_model
        assert ODD7.genus == 3

    def test_rejects_coincident_branch_points(self):
        with pytest.raises(DegenerateBranchPoints):
            standard_real_curve([0.0, 1.0, 1.0 + 1e-12, 2.0, 3.0])

    def test_rejects_bad_pairing(self):
        with pytest.raises(HomologyEncodingError):
            HyperellipticCurveSpec(
                branch_points=(-2.0, -0.9, 0.6, 1.7, 3.2),
                cut_pairing=((0, 1), (1, 2)),
                a_cycle_cuts=(0, 1),
                b_cycle_cuts=((0, 2), (1, 2)),
            )

    def test_rejects_too_low_genus(self):
        with pytest.raises(DegenerateBranchPoints):
            standard_real_curve([0.0, 1.0])


class TestBranch:
    @pytest.mark.parametrize("curve", [ODD5, EVEN6, ODD7])
    def test_y_plus_squares_to_poly(self, curve):
        cs = CutSystem(curve)
        rng = np.random.default_rng(3)
        x = rng.normal(size=40) * 2.0 + 1j * rng.normal(size=40) * 2.0
        y2 = cs.y_plus(x) ** 2
        assert np.allclose(y2, cs.poly(x), rtol=1e-11)

    def test_sign_flips_exactly_across_cuts(self):
        cs = CutSystem(ODD5)
        eps = 1e-9
        # interior of the first cut: discontinuity of the chosen branch
        x_mid = 0.5 * (-2.0 + -0.9)
        above = cs.y_plus(x_mid + 1j * eps)
        below = cs.y_plus(x_mid - 1j * eps)
        assert abs(above + below) < 1e-6 * abs(above)
        # interior of the ray cut beyond the last branch point
        x_ray = 3.2 + 1.0
        above = cs.y_plus(x_ray + 1j * eps)
        below = cs.y_plus(x_ray - 1j * eps)
        assert abs(above + below) < 1e-6 * abs(above)
        # between cuts the branch is continuous
        x_gap = 0.0
        above = cs.y_plus(x_gap + 1j * eps)
        below = cs.y_plus(x_gap - 1j * eps)
        assert abs(above - below) < 1e-6 * abs(above)

    def test_log_derivative_matches_fd(self):
        cs = CutSystem(ODD5)
        x = 0.4 + 1.3j
        h = 1e-6
        fd = (np.log(cs.y_plus(x + h)) - np.log(cs.y_plus(x - h))) / (2 * h)
        assert abs(cs.log_derivative_y(x) - fd) < 1e-7


class TestPaths:
    def test_crossing_path_validates(self):
        cs = CutSystem(ODD5)
        x_site = 0.5 * (-2.0 + -0.9)
        path = SurfacePath([x_site + 0.5j, x_site, x_site - 0.5j], [1, -1])
        path.validate(cs).check_continuity(cs)

    def test_missing_flip_rejected(self):
        cs = CutSystem(ODD5)
        x_site = 0.5 * (-2.0 + -0.9)
        path = SurfacePath([x_site + 0.5j, x_site, x_site - 0.5j], [1, 1])
        with pytest.raises(SheetTrackingError):
            path.validate(cs)

    def test_interior_crossing_rejected(self):
        cs = CutSystem(ODD5)
        path = SurfacePath([-1.45 + 0.5j, -1.45 - 0.5j], [1])
        with pytest.raises(SheetTrackingError):
            path.validate(cs)

    def test_branch_clearance_enforced(self):
        cs = CutSystem(ODD5)
        path = SurfacePath([0.6 - 1.0j + 0.001, 0.6 + 0.001 - 0.0001j,
                            0.6 + 1.0j + 0.001], [1, 1])
        with pytest.raises(PathThroughBranchPoint):
            path.validate(cs)

    def test_integrate_constant_function(self):
        cs = CutSystem(ODD5)
        x_site = 0.5 * (-2.0 + -0.9)
        path = SurfacePath([x_site + 0.5j, x_site, x_site - 0.5j], [1, -1])
        val = path.integrate(lambda x, s: np.ones_like(x))
        assert abs(val - (-1j)) < 1e-12


class TestCycles:
    @pytest.mark.parametrize("curve", [ODD5, EVEN6, ODD7])
    def test_build_cycles_realizes_standard_pairing(self, curve):
        cs = CutSystem(curve)
        a_cycles, b_cycles = build_cycles(cs)
        assert len(a_cycles) == curve.genus
        assert len(b_cycles) == curve.genus

    def test_a_period_matches_real_integral(self):
        cs = CutSystem(ODD5)
        a_cycles, _ = build_cycles(cs)
        val = a_cycles[0].integrate(lambda x, s: 1.0 / cs.y(x, s))
        e = sorted(c.real for c in ODD5.branch_points)

        # direct real integral over the cut with sine substitution to kill
        # both endpoint singularities
        p, q = e[0], e[1]

        def f(u):
            x = p + (q - p) * np.sin(u) ** 2
            jac = (q - p) * 2.0 * np.sin(u) * np.cos(u)
            return jac / np.sqrt(np.abs(cs.poly(x)))

        direct, err = quad(f, 0.0, np.pi / 2.0, epsabs=1e-12, epsrel=1e-12)
        assert abs(abs(val) - 2.0 * direct) < 1e-9 * direct

    def test_a_period_independent_of_representative(self):
        cs = CutSystem(ODD5)
        cyc1 = EllipseCycle(cs.cuts[1], 0.2 * cs.gap)
        cyc2 = EllipseCycle(cs.cuts[1], 0.11 * cs.gap)
        f = lambda x, s: x / cs.y(x, s)
        v1 = cyc1.integrate(f)
        v2 = cyc2.integrate(f)
        assert abs(v1 - v2) < 1e-10 * abs(v1)

    def test_b_cycle_period_nonzero(self):
        cs = CutSystem(ODD5)
        _, b_cycles = build_cycles(cs)
        val = b_cycles[0].integrate(lambda x, s: 1.0 / cs.y(x, s))
        assert abs(val) > 1e-6


class TestSignedIntersection:
    def test_transversal_signs(self):
        h = ([-1.0, 1.0], [1])
        v_up = ([-1j, 1j], [1])
        assert signed_intersection(h, v_up) == -signed_intersection(v_up, h)
        assert abs(signed_intersection(h, v_up)) == 1

    def test_sheet_mismatch_ignored(self):
        h = ([-1.0, 1.0], [1])
        v = ([-1j, 1j], [-1])
        assert signed_intersection(h, v) == 0


class TestRouter:
    def test_same_sheet_route_direct(self):
        cs = CutSystem(ODD5)
        r = PathRouter(cs)
        path = r.route(SurfacePoint(-3.0 - 2.0j, 1), SurfacePoint(4.0 - 2.0j, 1))
        assert path.sheets[0] == 1 and path.sheets[-1] == 1
        assert sum(1 for k in range(len(path.sheets) - 1)
                   if path.sheets[k] != path.sheets[k + 1]) % 2 == 0

    def test_cross_sheet_route_flips_odd(self):
        cs = CutSystem(ODD5)
        r = PathRouter(cs)
        path = r.route(SurfacePoint(0.0 - 2.0j, 1), SurfacePoint(0.0 - 2.0j, -1))
        flips = sum(1 for k in range(len(path.sheets) - 1)
                    if path.sheets[k] != path.sheets[k + 1])
        # closed loop in x returning on the other sheet: odd crossings
        assert path.sheets[0] == 1 and path.sheets[-1] == -1
        assert flips % 2 == 1

    def test_route_to_branch_point(self):
        cs = CutSystem(ODD5)
        r = PathRouter(cs)
        path = r.route(SurfacePoint(0.0 - 2.0j, 1), SurfacePoint(0.6, 1))
        assert path.terminal_branch
        assert abs(path.points[-1] - 0.6) < 1e-12
        # integral of dx/y converges despite the endpoint singularity
        val = path.integrate(lambda x, s: 1.0 / cs.y(x, s))
        assert np.isfinite(val.real) and np.isfinite(val.imag)

    def test_routes_are_deterministic(self):
        cs = CutSystem(ODD5)
        r1 = PathRouter(cs)
        r2 = PathRouter(CutSystem(ODD5))
        p1 = r1.route(SurfacePoint(-1.5 - 1.0j, 1), SurfacePoint(2.4 + 0.8j, -1))
        p2 = r2.route(SurfacePoint(-1.5 - 1.0j, 1), SurfacePoint(2.4 + 0.8j, -1))
        assert np.allclose(p1.points, p2.points)
        assert p1.sheets == p2.sheets
