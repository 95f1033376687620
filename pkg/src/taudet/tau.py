"""Tau function of a flat surface (L, w) and its deformation theory.

The differential w = p(x) dx / y on a hyperelliptic curve induces a flat
metric |w|^2 with cone points at the zeros of w.  This module assembles the
zero divisor, the period coordinates

    zeta = (A_1..A_g, B_1..B_g, z_2..z_M),

the integer lattice vectors (r, q) fixed by the divisor's Abel image, and
the tau function

    tau = F^(2/3) * exp(-pi i/6 <r, B r>) * prod_{m<n} E(P_m,P_n)^(k_m k_n / 6),

with all prime forms evaluated in the distinguished flat parameters
x_m = (int_{P_m} w)^(1/(k_m+1)).  Deformation identities (Hamiltonians,
Rauch-type variations, the infinitesimal Polyakov formula) are exposed as
paired computations: a finite-difference member and a contour/residue
member, returned together so callers can compare them.

Contour dictionary for the coordinate index k (0-based):
k < g uses -b_{k+1}, g <= k < 2g uses a_{k-g+1}, and k >= 2g uses a small
positive circle around the zero P_{k-2g+2}.  Phases of fractional powers
follow principal branches chained over a short anchor arc; only the modulus
of tau is convention-free, and callers comparing phases get the convention
name in the result.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .curves import HyperellipticCurveSpec, SurfacePoint
from .errors import (
    AnchorDisagreement,
    ContourNearDivisor,
    DegenerateDivisor,
    DivisorsNotDisjoint,
    JacobianSingular,
    RoundingResidualTooLarge,
    StepSelectionFailure,
    ValidationFailure,
    WrongOrientation,
)
from .geometry import SurfacePath, _point_seg_dist, signed_intersection
from .quadrature import cauchy_taylor_coeffs, quad_periodic, quad_segment
from .series import PowerSeries
from .special_functions import dedekind_eta, eta_log_derivative
from .surface import SurfaceGeometry, get_geometry

__all__ = [
    "AbelianDifferentialData",
    "LatticeVectors",
    "TauValue",
    "StratumFamily",
    "divisor_of",
    "coordinates",
    "lattice_vectors",
    "differential_data",
    "bergman_tau",
    "tau_ratio",
    "det_laplacian_mod_constant",
    "hamiltonian",
    "zero_residue",
    "rauch_check",
    "prime_form_variation_check",
    "prime_form_zero_circle_residue",
    "projective_connection_variation_check",
    "infinitesimal_polyakov_check",
    "fay_projective_connection",
    "genus1_tau",
]

PHASE_CONVENTION = "principal-branch logs chained along the anchor arc"


# ---------------------------------------------------------------------------
# polynomial helpers (coefficients ascending, coeffs[j] multiplies x^j)

def _as_coeffs(w_coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(w_coeffs, dtype=complex))
    if c.ndim != 1 or c.size == 0:
        raise ValueError("differential coefficients must be a 1-d sequence")
    while c.size > 1 and c[-1] == 0.0:
        c = c[:-1]
    return c


def w_function(geo: SurfaceGeometry, w_coeffs):
    """Scalar of w = p(x) dx / y on a sheet, vectorized over x."""
    c = _as_coeffs(w_coeffs)

    def fn(x, sheet):
        x = np.asarray(x, dtype=complex)
        return npoly.polyval(x, c) / geo.cuts.y(x, sheet)

    return fn


# ---------------------------------------------------------------------------
# divisor of w

def _polished_roots(c: np.ndarray, scale: float):
    """Roots of the numerator with multiplicities, Newton-refined."""
    deg = c.size - 1
    if deg == 0:
        return []
    raw = npoly.polyroots(c)
    clusters: list[list[complex]] = []
    for r in sorted(raw, key=lambda z: (z.real, z.imag)):
        for cl in clusters:
            if abs(r - cl[0]) < 1e-6 * max(scale, abs(cl[0])):
                cl.append(r)
                break
        else:
            clusters.append([r])
    out = []
    for cl in clusters:
        mult = len(cl)
        x0 = complex(np.mean(cl))
        # Newton on the (mult-1)-th derivative, where the root is simple
        p = c.copy()
        for _ in range(mult - 1):
            p = npoly.polyder(p)
        dp = npoly.polyder(p)
        for _ in range(6):
            val = npoly.polyval(x0, p)
            der = npoly.polyval(x0, dp)
            if der == 0.0:
                break
            step = val / der
            x0 -= step
            if abs(step) < 1e-15 * max(1.0, abs(x0)):
                break
        out.append((x0, mult))
    return out


def divisor_of(curve: HyperellipticCurveSpec, w_coeffs):
    """Zero divisor of w on the surface as ((point, multiplicity), ...).

    Finite numerator roots are lifted to both sheets; the balance of the
    degree count 2g - 2 sits over x = infinity (one point on odd-degree
    models, two on even-degree ones).
    """
    c = _as_coeffs(w_coeffs)
    g = curve.genus
    deg = c.size - 1
    if not np.any(c != 0.0):
        raise ValueError("the zero differential has no divisor")
    if deg > g - 1:
        raise DegenerateDivisor(
            f"numerator degree {deg} exceeds g-1={g - 1}; w is not holomorphic")
    scale = max(abs(e) for e in curve.branch_points)
    cuts = get_geometry(curve).cuts
    entries: list[tuple[SurfacePoint, int]] = []
    for x0, mult in _polished_roots(c, scale):
        near = min(abs(x0 - e) for e in curve.branch_points)
        if near < max(curve.eps_sep, 1e-9 * scale):
            raise DegenerateDivisor(
                f"zero at x={x0} lies within {near:.2e} of a branch point; "
                "the even-order local structure there is not classified")
        if cuts.point_on_cut(x0, 2.0 * cuts.clearance) is not None:
            raise DegenerateDivisor(
                f"zero at x={x0} sits on or near a branch cut, where sheet "
                "attribution and routing are ill-posed; perturb w or the cuts")
        entries.append((SurfacePoint(x0, 1), mult))
        entries.append((SurfacePoint(x0, -1), mult))
    entries.sort(key=lambda e: (e[0].x.real, e[0].x.imag, -e[0].sheet))
    if curve.is_odd_model:
        inf_order = 2 * g - 2 - 2 * deg
        if inf_order > 0:
            entries.append((SurfacePoint(0.0, 1, at_infinity=True), inf_order))
    else:
        inf_order = g - 1 - deg
        if inf_order > 0:
            entries.append((SurfacePoint(0.0, 1, at_infinity=True), inf_order))
            entries.append((SurfacePoint(0.0, -1, at_infinity=True), inf_order))
    total = sum(k for _, k in entries)
    if total != 2 * g - 2:
        raise DegenerateDivisor(
            f"divisor degree {total} != 2g-2 = {2 * g - 2}")
    return tuple(entries)


def _finite_divisor_or_raise(divisor):
    for point, _ in divisor:
        if point.at_infinity:
            raise DegenerateDivisor(
                "tau assembly needs all zeros at finite non-branch points; "
                "got a zero over x = infinity")
    return divisor


# ---------------------------------------------------------------------------
# coordinates and lattice vectors

def coordinates(curve: HyperellipticCurveSpec, w_coeffs, divisor=None,
                paths=None, rtol: float = 1e-11):
    """(A, B, z) periods of w; z[m] integrates w from P_1 to P_{m+2}.

    `paths` optionally overrides the relative-period paths: a dict mapping
    the divisor index m >= 1 to a SurfacePath from divisor point 0 to
    divisor point m.  Homologous deformations that avoid the zeros leave
    every output unchanged.
    """
    geo = get_geometry(curve)
    if divisor is None:
        divisor = divisor_of(curve, w_coeffs)
    w_fn = w_function(geo, w_coeffs)
    A = np.array([cyc.integrate(w_fn, rtol=rtol) for cyc in geo.a_cycles])
    B = np.array([p.integrate(w_fn, rtol=rtol) for p in geo.b_cycles])
    z = [complex(p.integrate(w_fn, rtol=rtol))
         for p in _relative_paths(geo, divisor, paths)]
    return A, B, np.array(z, dtype=complex)


def _relative_paths(geo: SurfaceGeometry, divisor, paths=None):
    """Realized paths P_1 -> P_{m+1} behind the relative periods."""
    finite = [p for p, _ in divisor if not p.at_infinity]
    out = []
    for m in range(1, len(finite)):
        if paths is not None and m in paths:
            out.append(paths[m])
        else:
            out.append(geo.router.route(finite[0], finite[m]))
    return out


def _path_windings(geo: SurfaceGeometry, rel_paths):
    """Homology content of each realized relative-period path.

    Row m of the first array is p with path_m ~ arc + sum p_g a_g + q_g b_g,
    row m of the second is q.  build_cycles normalizes a_g . b_g = +1, so
    p_g = I(path, b_g) and q_g = -I(path, a_g) with signed crossing counts.
    """
    g = geo.genus
    p = np.zeros((len(rel_paths), g), dtype=int)
    q = np.zeros((len(rel_paths), g), dtype=int)
    a_polys = [cyc.polyline(512) for cyc in geo.a_cycles]
    b_polys = [cyc.polyline() for cyc in geo.b_cycles]
    for m, path in enumerate(rel_paths):
        pl = path.polyline()
        for gam in range(g):
            p[m, gam] = signed_intersection(pl, b_polys[gam])
            q[m, gam] = -signed_intersection(pl, a_polys[gam])
    return p, q


@dataclass(frozen=True)
class LatticeVectors:
    """Integer vectors (r, q) solving A_P((w)) + 2 K^P + B r + q = 0."""

    r: tuple
    q: tuple
    pre_rounding_residual: float
    residual: float


def _divisor_abel_sum(geo: SurfaceGeometry, divisor, anchor: SurfacePoint):
    total = np.zeros(geo.genus, dtype=complex)
    a_anchor = geo.abel(anchor)
    for point, k in divisor:
        total += k * (geo.abel(point) - a_anchor)
    return total


def lattice_vectors(curve: HyperellipticCurveSpec, w_data,
                    anchor: SurfacePoint) -> LatticeVectors:
    """Solve the divisor constraint for (r, q) at the given anchor point."""
    geo = get_geometry(curve)
    divisor = _finite_divisor_or_raise(w_data.divisor)
    target = _divisor_abel_sum(geo, divisor, anchor) \
        + 2.0 * geo.riemann_constants(anchor)
    r_real = np.linalg.solve(geo.B.imag, -target.imag)
    r = np.round(r_real)
    q_real = -target.real - geo.B.real @ r
    q = np.round(q_real)
    pre = float(np.linalg.norm(np.concatenate([r_real - r, q_real - q])))
    residual = float(np.linalg.norm(target + geo.B @ r + q))
    if residual > 1e-4:
        raise RoundingResidualTooLarge(
            f"lattice residual {residual:.3e} after rounding (pre {pre:.3e})")
    return LatticeVectors(tuple(int(v) for v in r), tuple(int(v) for v in q),
                          pre, residual)


@dataclass(frozen=True, eq=False)
class AbelianDifferentialData:
    """A holomorphic differential with its divisor, periods and (r, q)."""

    curve: HyperellipticCurveSpec
    w_coeffs: tuple
    divisor: tuple
    a_periods: np.ndarray
    b_periods: np.ndarray
    rel_periods: np.ndarray
    lattice_r: tuple
    lattice_q: tuple
    lattice: LatticeVectors = field(repr=False)
    # homology content of the realized relative-period paths, shape (M-1, g);
    # rel_periods[m] = in-cell value + a_windings[m] @ A + b_windings[m] @ B
    a_windings: np.ndarray = field(repr=False, default=None)
    b_windings: np.ndarray = field(repr=False, default=None)

    @property
    def area(self) -> float:
        return float(-np.imag(self.a_periods @ np.conj(self.b_periods)))

    @property
    def coordinate_vector(self) -> np.ndarray:
        return np.concatenate([self.a_periods, self.b_periods,
                               self.rel_periods])

    @property
    def zero_orders(self) -> tuple:
        return tuple(k for _, k in self.divisor)


def differential_data(curve: HyperellipticCurveSpec, w_coeffs,
                      anchor: SurfacePoint | None = None,
                      paths=None) -> AbelianDifferentialData:
    """Assemble and validate the full coordinate record of (L, w)."""
    geo = get_geometry(curve)
    divisor = divisor_of(curve, w_coeffs)
    _finite_divisor_or_raise(divisor)
    w_fn = w_function(geo, w_coeffs)
    rtol = 1e-11
    A = np.array([cyc.integrate(w_fn, rtol=rtol) for cyc in geo.a_cycles])
    B = np.array([p.integrate(w_fn, rtol=rtol) for p in geo.b_cycles])
    rel_paths = _relative_paths(geo, divisor, paths)
    z = np.array([complex(p.integrate(w_fn, rtol=rtol)) for p in rel_paths])
    area = float(-np.imag(A @ np.conj(B)))
    if area <= 0.0:
        raise ValidationFailure(f"flat area {area:.3e} is not positive")
    p_wind, q_wind = _path_windings(geo, rel_paths)
    stub = _DataStub(divisor)
    if anchor is None:
        anchor = _default_anchors(geo, 1)[0]
    lat = lattice_vectors(curve, stub, anchor)
    return AbelianDifferentialData(
        curve=curve,
        w_coeffs=tuple(complex(v) for v in _as_coeffs(w_coeffs)),
        divisor=divisor,
        a_periods=A,
        b_periods=B,
        rel_periods=z,
        lattice_r=lat.r,
        lattice_q=lat.q,
        lattice=lat,
        a_windings=p_wind,
        b_windings=q_wind,
    )


class _DataStub:
    def __init__(self, divisor):
        self.divisor = divisor


def _default_anchors(geo: SurfaceGeometry, count: int):
    """Generic points on a short arc below the branch set, off the cuts."""
    centroid = complex(np.mean(geo.cuts.branch_points))
    scale = geo.cuts.scale
    out = []
    ang = -0.62
    while len(out) < count:
        x = centroid + 1.9 * scale * cmath.exp(1j * ang)
        if geo.cuts.point_on_cut(x, 3.0 * geo.cuts.clearance) is None:
            out.append(SurfacePoint(x, 1))
        ang -= 0.17
        if ang < -3.0:
            raise ValidationFailure("could not place anchor points")
    return out


# ---------------------------------------------------------------------------
# distinguished flat frames at the zeros

class _DivisorFrames:
    """Series data of w at each finite zero: charts u with w = d(u^{k+1}).

    For a zero of order k at (x0, sheet) the flat parameter satisfies
    u^{k+1} = int w, so u(t) = t * h(t) as a series in t = x - x0 with
    h(0) = (f_k / (k+1))^{1/(k+1)} the chart derivative du/dx at the zero.
    """

    def __init__(self, geo: SurfaceGeometry, w_coeffs, divisor,
                 order: int = 8):
        self.geo = geo
        self.coeffs = _as_coeffs(w_coeffs)
        self.divisor = _finite_divisor_or_raise(divisor)
        self.order = order
        self._cache: dict = {}

    def f_series(self, m: int) -> PowerSeries:
        """w/dx as a series in t = x - x_m on the zero's sheet."""
        point, _ = self.divisor[m]
        x0 = complex(point.x)
        num = _shift_poly(self.coeffs, x0, self.order + 2)
        yinv = self.geo.y_series(x0, point.sheet, self.order + 2).reciprocal()
        return num * yinv

    def chart(self, m: int):
        """(u_of_t, t_of_u) power series for the zero's flat chart."""
        if m in self._cache:
            return self._cache[m]
        point, k = self.divisor[m]
        fs = self.f_series(m)
        S = fs.antiderivative()
        r = k + 1
        lead = S.c[r] if S.order > r else 0.0
        if abs(lead) == 0.0:
            raise DegenerateDivisor(
                f"flat chart at zero {m}: order-{k} structure not resolved")
        body = PowerSeries(S.c[r:]).truncate(self.order)
        u_of_t = (PowerSeries.x(self.order) * body.pow(1.0 / r)).truncate(
            self.order)
        t_of_u = u_of_t.invert()
        self._cache[m] = (u_of_t, t_of_u)
        return self._cache[m]

    def chart_derivative(self, m: int) -> complex:
        """du/dx at the zero (principal root)."""
        u_of_t, _ = self.chart(m)
        return complex(u_of_t.c[1])

    def prime_form_distinguished(self, i: int, j: int) -> complex:
        """E(P_i, P_j) with both slots in their flat charts."""
        pi, _ = self.divisor[i]
        pj, _ = self.divisor[j]
        aff = self.geo.prime_form(pi, pj)
        return aff * np.sqrt(self.chart_derivative(i)) \
            * np.sqrt(self.chart_derivative(j))

    def derivative_in_chart(self, m: int, phi_coeffs) -> complex:
        """d(phi/du)/du at the zero for another differential phi."""
        point, _ = self.divisor[m]
        x0 = complex(point.x)
        num = _shift_poly(_as_coeffs(phi_coeffs), x0, 3)
        yinv = self.geo.y_series(x0, point.sheet, 3).reciprocal()
        ph = (num * yinv).truncate(3)
        _, t_of_u = self.chart(m)
        t1 = complex(t_of_u.c[1])
        t2 = complex(t_of_u.c[2]) if t_of_u.order > 2 else 0.0
        return complex(ph.c[1] * t1 * t1 + 2.0 * ph.c[0] * t2)

    def value_in_chart(self, m: int, phi_coeffs) -> complex:
        """phi/du at the zero (zero when phi also vanishes there)."""
        point, _ = self.divisor[m]
        x0 = complex(point.x)
        val = complex(npoly.polyval(x0, _as_coeffs(phi_coeffs))
                      / self.geo.cuts.y(np.array([x0]), point.sheet)[0])
        return val / self.chart_derivative(m)


def _shift_poly(coeffs: np.ndarray, x0: complex, order: int) -> PowerSeries:
    """p(x0 + t) as a PowerSeries in t."""
    out = np.zeros(order, dtype=complex)
    work = coeffs.copy()
    fact = 1.0
    for j in range(min(order, coeffs.size)):
        out[j] = npoly.polyval(x0, work) / fact
        work = npoly.polyder(work)
        fact *= (j + 1)
    return PowerSeries(out)


# ---------------------------------------------------------------------------
# the tau function

@dataclass(frozen=True)
class TauValue:
    """|tau| with a convention-dependent phase and its log breakdown."""

    modulus: float
    phase: float
    phase_convention: str
    component_log_breakdown: dict

    @property
    def log_modulus(self) -> float:
        return math.log(self.modulus)

    @property
    def value(self) -> complex:
        return self.modulus * cmath.exp(1j * self.phase)


def _chain_log(value: complex, previous: complex | None) -> complex:
    lv = cmath.log(value)
    if previous is not None:
        lv += 2j * math.pi * round((previous.imag - lv.imag)
                                   / (2.0 * math.pi))
    return lv


def _f_factor_logs(geo: SurfaceGeometry, data: AbelianDifferentialData,
                   frames: _DivisorFrames, anchors):
    """log F at each anchor, with factor logs chained along the arc."""
    g = geo.genus
    r = np.array(data.lattice_r, dtype=float)
    w_fn = w_function(geo, data.w_coeffs)
    logs = []
    prev: dict = {}
    for P in anchors:
        lw = _chain_log(complex(w_fn(np.array([complex(P.x)]), P.sheet)[0]),
                        prev.get("w"))
        prev["w"] = lw
        lc = _chain_log(geo.c_value(P), prev.get("c"))
        prev["c"] = lc
        total = 0.5 * (g - 1) * lw + lc
        total += -1j * math.pi * complex(r @ geo.riemann_constants(P))
        for m, (point, k) in enumerate(data.divisor):
            e_dist = geo.prime_form(P, point) \
                * np.sqrt(frames.chart_derivative(m))
            le = _chain_log(complex(e_dist), prev.get(("e", m)))
            prev[("e", m)] = le
            total += 0.5 * (1 - g) * k * le
        logs.append(total)
    return logs


def bergman_tau(curve: HyperellipticCurveSpec,
                w_data: AbelianDifferentialData,
                n_anchors: int = 3,
                anchors=None,
                geometry: SurfaceGeometry | None = None) -> TauValue:
    """tau(L, w) from theta-function data, modulus plus tagged phase.

    F is evaluated at several anchor points and averaged; a relative spread
    above 1e-6 raises AnchorDisagreement.  F carries half-integer powers
    whose branches are tracked by chaining logs between consecutive
    anchors, so user-supplied `anchors` must form a close-spaced arc; far
    apart anchors can land on opposite square-root branches and trip the
    spread check even though |F| agrees.  When every zero is simple and
    (r, q) = 0 the exponential factor is skipped outright; otherwise the
    general lattice form is used.
    """
    geo = geometry if geometry is not None else get_geometry(curve)
    frames = _DivisorFrames(geo, w_data.w_coeffs, w_data.divisor)
    if anchors is None:
        anchors = _default_anchors(geo, max(3, n_anchors))
    if len(anchors) < 3:
        raise ValueError("need at least three anchor points")
    f_logs = _f_factor_logs(geo, w_data, frames, anchors)
    f_vals = np.array([cmath.exp(v) for v in f_logs])
    f_mean = np.mean(f_vals)
    spread = float(np.max(np.abs(f_vals - f_mean)) / np.abs(f_mean))
    if spread > 1e-6:
        raise AnchorDisagreement(
            f"F varies by relative {spread:.3e} across {len(anchors)} anchors")
    log_f = np.mean(f_logs)

    r = np.array(w_data.lattice_r, dtype=float)
    simple_reduced = all(k == 1 for _, k in w_data.divisor) \
        and not np.any(r) and not np.any(np.array(w_data.lattice_q))
    if simple_reduced:
        log_exp = 0.0 + 0.0j
    else:
        log_exp = -1j * math.pi / 6.0 * complex(r @ geo.B @ r)

    log_pairs = 0.0 + 0.0j
    prev = None
    for i in range(len(w_data.divisor)):
        for j in range(i + 1, len(w_data.divisor)):
            ki = w_data.divisor[i][1]
            kj = w_data.divisor[j][1]
            le = _chain_log(frames.prime_form_distinguished(i, j), prev)
            prev = le
            log_pairs += ki * kj / 6.0 * le

    log_tau = (2.0 / 3.0) * log_f + log_exp + log_pairs
    breakdown = {
        "f_factor": float((2.0 / 3.0) * log_f.real),
        "lattice_exponential": float(log_exp.real),
        "prime_form_product": float(log_pairs.real),
    }
    return TauValue(
        modulus=float(math.exp(log_tau.real)),
        phase=float(log_tau.imag % (2.0 * math.pi)),
        phase_convention=PHASE_CONVENTION,
        component_log_breakdown=breakdown,
    )


# ---------------------------------------------------------------------------
# tau ratios and the determinant formula

def _simple_zero_residue(geo: SurfaceGeometry, num_coeffs, den_coeffs,
                         point: SurfacePoint) -> complex:
    """res at a simple zero of w_den of (w_num)^2 / w_den.

    With w = p dx/y the quotient is p_num^2/(y p_den) dx, so the residue at
    a simple non-branch root of p_den is p_num^2 / (y p_den').
    """
    x0 = complex(point.x)
    y0 = complex(geo.cuts.y(np.array([x0]), point.sheet)[0])
    num = complex(npoly.polyval(x0, _as_coeffs(num_coeffs)))
    dden = complex(npoly.polyval(x0, npoly.polyder(_as_coeffs(den_coeffs))))
    return num * num / (y0 * dden)


def tau_ratio(curve: HyperellipticCurveSpec,
              w_data: AbelianDifferentialData,
              w_other: AbelianDifferentialData) -> float:
    """|tau(w)/tau(w_other)| from local residues at the zeros.

    Requires both divisors simple and mutually disjoint.
    """
    geo = get_geometry(curve)
    for data in (w_data, w_other):
        if any(k != 1 for _, k in data.divisor):
            raise DegenerateDivisor(
                "the residue-product ratio needs simple zeros")
        _finite_divisor_or_raise(data.divisor)
    pts = [(complex(p.x), p.sheet) for p, _ in w_data.divisor]
    pts_o = [(complex(p.x), p.sheet) for p, _ in w_other.divisor]
    scale = geo.cuts.scale
    for xa, sa in pts:
        for xb, sb in pts_o:
            if sa == sb and abs(xa - xb) < max(curve.eps_sep, 1e-9 * scale):
                raise DivisorsNotDisjoint(
                    f"shared zero near x = {xa} on sheet {sa}")
    log_mod = 0.0
    for point, _ in w_other.divisor:
        res = _simple_zero_residue(geo, w_data.w_coeffs, w_other.w_coeffs,
                                   point)
        log_mod += math.log(abs(res))
    for point, _ in w_data.divisor:
        res = _simple_zero_residue(geo, w_other.w_coeffs, w_data.w_coeffs,
                                   point)
        log_mod -= math.log(abs(res))
    return math.exp(log_mod / 24.0)


def det_laplacian_mod_constant(curve: HyperellipticCurveSpec,
                               w_data: AbelianDifferentialData,
                               tau: TauValue | None = None) -> float:
    """Area * det(Im B) * |tau|^2; the metric determinant up to a constant."""
    geo = get_geometry(curve)
    if tau is None:
        tau = bergman_tau(curve, w_data)
    det_im = float(np.linalg.det(geo.B.imag))
    return w_data.area * det_im * tau.modulus ** 2


# ---------------------------------------------------------------------------
# Hamiltonians of the tau defining system

def _sw_affine(geo: SurfaceGeometry, w_coeffs):
    """Schwarzian {int w, x} for w = p dx/y, vectorized, off the zeros."""
    c = _as_coeffs(w_coeffs)
    dc = npoly.polyder(c)
    ddc = npoly.polyder(dc)
    ee = np.asarray(geo.curve.branch_points)

    def fn(x, sheet):
        x = np.asarray(x, dtype=complex)
        p = npoly.polyval(x, c)
        dp = npoly.polyval(x, dc)
        ddp = npoly.polyval(x, ddc)
        L = geo.cuts.log_derivative_y(x)
        Lp = -0.5 * np.sum(1.0 / (x[..., None] - ee) ** 2, axis=-1)
        u = dp / p - L
        up = (ddp * p - dp * dp) / (p * p) - Lp
        return up - 0.5 * u * u

    return fn


def _check_cycle_clearance(geo: SurfaceGeometry, data, contour):
    eps = max(geo.curve.eps_sep, 1e-9 * geo.cuts.scale)
    for point, _ in data.divisor:
        x0 = complex(point.x)
        if isinstance(contour, SurfacePath):
            for seg in range(len(contour.points) - 1):
                if contour.sheets[seg] != point.sheet:
                    continue
                d = _point_seg_dist(x0, contour.points[seg],
                                    contour.points[seg + 1])
                if d < eps:
                    raise ContourNearDivisor(
                        f"cycle segment passes {d:.2e} from the zero at {x0}")
        else:
            if contour.sheet != point.sheet:
                continue
            sample = contour.point(np.linspace(0.0, 2.0 * np.pi, 256))
            d = float(np.min(np.abs(sample - x0)))
            if d < eps:
                raise ContourNearDivisor(
                    f"cycle passes {d:.2e} from the zero at {x0}")


def _sb_chart_series(geo: SurfaceGeometry, frames: _DivisorFrames, m: int,
                     n_terms: int) -> PowerSeries:
    """Bergman projective connection in the zero's flat chart, as a series."""
    point, k = frames.divisor[m]
    x0 = complex(point.x)
    rad = 0.35 * min(geo.cuts.nearest_branch_distance(x0),
                     geo._cut_distance(x0))
    for other, _ in frames.divisor:
        if other is point:
            continue
        if other.sheet == point.sheet:
            d = abs(complex(other.x) - x0)
            if d < max(geo.curve.eps_sep, 1e-9 * geo.cuts.scale):
                raise ContourNearDivisor(
                    f"another zero sits {d:.2e} from the chart center {x0}")
    order = max(n_terms + 2, k + 3)
    coeffs = cauchy_taylor_coeffs(
        lambda x: geo.projective_connection(x, point.sheet),
        x0, rad, order, rtol=1e-11)
    sb_t = PowerSeries(np.asarray(coeffs, dtype=complex))
    _, t_of_u = frames.chart(m)
    t_of_u = t_of_u.truncate(order)
    dt_du = t_of_u.derivative()
    comp = sb_t.compose(t_of_u)
    return (comp * dt_du * dt_du + t_of_u.schwarzian()).truncate(order - 2)


def zero_residue(curve: HyperellipticCurveSpec,
                 w_data: AbelianDifferentialData, m: int,
                 frames: _DivisorFrames | None = None) -> complex:
    """Residue of (S_B - S_w)/w at the m-th zero of w.

    In the flat chart w = d(u^r), S_w = (1 - r^2)/(2 u^2), and the residue
    is the u^{r-2} Taylor coefficient of S_B there divided by r.
    """
    geo = get_geometry(curve)
    if frames is None:
        frames = _DivisorFrames(geo, w_data.w_coeffs, w_data.divisor)
    _, k = w_data.divisor[m]
    r = k + 1
    sb_u = _sb_chart_series(geo, frames, m, r - 1)
    return complex(sb_u.c[r - 2] / r)


def _contour_for_index(geo: SurfaceGeometry, data, k: int):
    """(contour, sign) realizing s_k; None for zero-circle indices."""
    g = geo.genus
    if k < 0:
        raise ValueError("coordinate index must be non-negative")
    if k < g:
        return geo.b_cycles[k], -1.0
    if k < 2 * g:
        return geo.a_cycles[k - g], 1.0
    m = k - 2 * g + 1
    if m >= len(data.divisor):
        raise ValueError(f"coordinate index {k} beyond 2g+M-2")
    return None, float(m)


def _winding_corrections(geo: SurfaceGeometry, data, k: int):
    """Zero-circle counterterms for a cycle-coordinate derivative.

    The realized relative-period paths can wrap homology cycles (stored in
    a_windings / b_windings), so a derivative at fixed realized z differs
    from the in-cell one: d/dA_g picks up -p_g d/dz_m and d/dB_g picks up
    -q_g d/dz_m.  Returns (divisor index, integer coefficient) pairs.
    """
    g = geo.genus
    if k >= 2 * g or getattr(data, "a_windings", None) is None:
        return []
    wind = data.a_windings if k < g else data.b_windings
    col = k if k < g else k - g
    return [(m + 1, int(wind[m, col])) for m in range(wind.shape[0])
            if wind[m, col] != 0]


def hamiltonian(curve: HyperellipticCurveSpec,
                w_data: AbelianDifferentialData, k: int) -> complex:
    """H^{zeta_k} = -(1/12 pi i) oint_{s_k} (S_B - S_w)/w.

    Cycle coordinates integrate over the stored a/b contours; relative
    periods take the residue at the encircled zero.
    """
    geo = get_geometry(curve)
    contour, tag = _contour_for_index(geo, w_data, k)
    if contour is None:
        frames = _DivisorFrames(geo, w_data.w_coeffs, w_data.divisor)
        res = zero_residue(curve, w_data, int(tag), frames)
        return complex(-res / 6.0)
    _check_cycle_clearance(geo, w_data, contour)
    sw = _sw_affine(geo, w_data.w_coeffs)
    w_fn = w_function(geo, w_data.w_coeffs)

    def integrand(x, sheet):
        return (geo.projective_connection(x, sheet) - sw(x, sheet)) \
            / w_fn(x, sheet)

    val = contour.integrate(integrand, rtol=1e-10)
    out = complex(tag * val / (-12j * math.pi))
    corrections = _winding_corrections(geo, w_data, k)
    if corrections:
        frames = _DivisorFrames(geo, w_data.w_coeffs, w_data.divisor)
        for m, coef in corrections:
            res = zero_residue(curve, w_data, m, frames)
            out -= coef * complex(-res / 6.0)
    return out


def contour_integral(geo: SurfaceGeometry, data: AbelianDifferentialData,
                     k: int, fn, frames: _DivisorFrames | None = None,
                     rtol: float = 1e-10) -> complex:
    """oint_{s_k} fn(x, sheet) dx with the module's contour dictionary.

    Zero-circle indices integrate over a circle in the flat chart whose
    radius is 0.1 times the flat distance to the nearest other special
    point (branch points and other zeros).
    """
    contour, tag = _contour_for_index(geo, data, k)
    if contour is None:
        m = int(tag)
        if frames is None:
            frames = _DivisorFrames(geo, data.w_coeffs, data.divisor)
        return zero_circle_integral(geo, data, m, fn, frames, rtol=rtol)
    _check_cycle_clearance(geo, data, contour)
    out = complex(tag * contour.integrate(fn, rtol=rtol))
    corrections = _winding_corrections(geo, data, k)
    if corrections:
        if frames is None:
            frames = _DivisorFrames(geo, data.w_coeffs, data.divisor)
        for m, coef in corrections:
            out -= coef * zero_circle_integral(geo, data, m, fn, frames,
                                               rtol=rtol)
    return out


def zero_circle_integral(geo: SurfaceGeometry, data, m: int, fn,
                         frames: _DivisorFrames, rtol: float = 1e-10,
                         radius: float | None = None) -> complex:
    """Positively oriented circle around the m-th zero, flat-chart radius."""
    point, _ = data.divisor[m]
    x0 = complex(point.x)
    w_fn = w_function(geo, data.w_coeffs)
    _, t_of_u = frames.chart(m)
    if radius is None:
        targets = [complex(e) for e in geo.curve.branch_points]
        targets += [complex(other.x) for i, (other, _) in
                    enumerate(data.divisor)
                    if i != m and other.sheet == point.sheet]
        radius = 0.1 * min(
            _flat_distance_estimate(w_fn, x0, point.sheet, t) for t in targets)
        # keep the chart image well inside the series' reliable region
        x_clear = min(geo.cuts.nearest_branch_distance(x0),
                      geo._cut_distance(x0))
        while abs(t_of_u(radius)) > 0.4 * x_clear:
            radius *= 0.5
    dt_du = t_of_u.derivative()

    def integrand(theta):
        u = radius * np.exp(1j * theta)
        t = t_of_u(u)
        du = 1j * u
        return fn(x0 + t, point.sheet) * dt_du(u) * du

    return complex(quad_periodic(integrand, rtol=rtol))


def _flat_distance_estimate(w_fn, x0: complex, sheet: int,
                            target: complex) -> float:
    """Rough |int w| along the straight segment; radius selection only."""
    ts = (np.arange(8) + 0.5) / 8.0
    xs = x0 + (target - x0) * ts
    vals = np.abs(np.asarray(w_fn(xs, sheet)))
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return abs(target - x0)
    return abs(target - x0) * float(np.mean(vals))


# ---------------------------------------------------------------------------
# genus-one closed form

def genus1_tau(A: complex, B: complex) -> complex:
    """tau of a flat torus with periods (A, B): eta^2 of the modulus B/A."""
    if A == 0:
        raise WrongOrientation("zero a-period")
    sigma = complex(B) / complex(A)
    if sigma.imag <= 0.0:
        raise WrongOrientation(
            f"Im(B/A) = {sigma.imag:.3e} <= 0; swap or flip the periods")
    return dedekind_eta(sigma) ** 2


# ---------------------------------------------------------------------------
# stratum family: moving the curve and the differential together

class StratumFamily:
    """A local chart of the stratum through one (curve, w) pair.

    Two branch points stay frozen (killing the affine x-redundancy); the
    remaining branch points and the numerator coefficients are the real
    parameters p.  Period coordinates zeta(p) define the chart; directions
    d p realizing unit moves in a single zeta_k come from the inverse of a
    finite-difference Jacobian.
    """

    def __init__(self, branch_points, w_coeffs, n_frozen: int = 2,
                 fd_step: float = 1e-4):
        from .curves import standard_real_curve
        base_curve = standard_real_curve(tuple(complex(e)
                                               for e in branch_points))
        self.base_branch = [complex(e) for e in base_curve.branch_points]
        self.base_coeffs = [complex(c) for c in _as_coeffs(w_coeffs)]
        self.n_frozen = n_frozen
        self.fd_step = fd_step
        self._pairing = base_curve.cut_pairing
        self._a_cuts = base_curve.a_cycle_cuts
        self._b_cuts = base_curve.b_cycle_cuts
        g = base_curve.genus
        n_finite = len([p for p, _ in divisor_of(base_curve, self.base_coeffs)
                        if not p.at_infinity])
        self.n_params = (len(self.base_branch) - n_frozen) \
            + len(self.base_coeffs)
        self.n_coords = 2 * g + max(n_finite - 1, 0)
        if self.n_params != self.n_coords:
            raise ValueError(
                f"{self.n_params} parameters cannot chart {self.n_coords} "
                "period coordinates; adjust the frozen set")
        self._data_cache: dict = {}
        self._J = None

    def _pack(self) -> np.ndarray:
        return np.array(self.base_branch[self.n_frozen:] + self.base_coeffs,
                        dtype=complex)

    def _curve(self, p: np.ndarray) -> HyperellipticCurveSpec:
        n_free = len(self.base_branch) - self.n_frozen
        branch = tuple(self.base_branch[:self.n_frozen]) \
            + tuple(complex(v) for v in p[:n_free])
        return HyperellipticCurveSpec(
            branch_points=branch,
            cut_pairing=self._pairing,
            a_cycle_cuts=self._a_cuts,
            b_cycle_cuts=self._b_cuts,
        )

    def _coeffs(self, p: np.ndarray):
        n_free = len(self.base_branch) - self.n_frozen
        return tuple(complex(v) for v in p[n_free:])

    def member(self, p) -> tuple:
        """(curve, data) at parameter vector p, cached."""
        key = tuple(np.round(np.asarray(p, dtype=complex), 14))
        hit = self._data_cache.get(key)
        if hit is not None:
            return hit
        curve = self._curve(np.asarray(p, dtype=complex))
        data = differential_data(curve, self._coeffs(np.asarray(p,
                                                               dtype=complex)))
        self._data_cache[key] = (curve, data)
        return curve, data

    def coords(self, p) -> np.ndarray:
        return self.member(p)[1].coordinate_vector

    @property
    def base_params(self) -> np.ndarray:
        return self._pack()

    def jacobian(self) -> np.ndarray:
        """d zeta / d p at the base point, by central differences."""
        if self._J is not None:
            return self._J
        p0 = self._pack()
        n = self.n_params
        J = np.zeros((self.n_coords, n), dtype=complex)
        for j in range(n):
            h = self.fd_step * max(1.0, abs(p0[j]))
            pp, pm = p0.copy(), p0.copy()
            pp[j] += h
            pm[j] -= h
            J[:, j] = (self.coords(pp) - self.coords(pm)) / (2.0 * h)
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > 1e8:
            raise JacobianSingular(
                f"stratum chart Jacobian condition number {cond:.3e}")
        self._J = J
        return J

    def direction(self, k: int) -> np.ndarray:
        """Parameter direction moving zeta_k at unit rate."""
        e = np.zeros(self.n_coords, dtype=complex)
        e[k] = 1.0
        return np.linalg.solve(self.jacobian(), e)

    def shifted(self, k: int, h: complex) -> tuple:
        """Member displaced by h along the zeta_k chart direction."""
        return self.member(self._pack() + h * self.direction(k))

    def coordinate_derivative(self, quantity, k: int,
                              h: float | None = None) -> complex:
        """Central-difference d(quantity)/d zeta_k through the chart.

        `quantity` maps (curve, data) to a complex number; the step is in
        the zeta_k coordinate.
        """
        if h is None:
            h = self.fd_step * max(1.0, float(np.abs(self.coords(
                self._pack())[k])))
        qp = quantity(*self.shifted(k, +h))
        qm = quantity(*self.shifted(k, -h))
        return (qp - qm) / (2.0 * h)

    def wirtinger_derivative(self, real_quantity, k: int,
                             h: float | None = None) -> complex:
        """d/d zeta_k of a quantity whose stored value is Re-only.

        For f(zeta) holomorphic, Re f sampled on the four-point stencil
        recovers (1/2) f'(zeta_k); the factor 2 is applied here.
        """
        if h is None:
            h = self.fd_step * max(1.0, float(np.abs(self.coords(
                self._pack())[k])))
        vals = {}
        for step in (+h, -h, +1j * h, -1j * h):
            vals[step] = real_quantity(*self.shifted(k, step))
        d = (vals[+h] - vals[-h]) / (4.0 * h) \
            - 1j * (vals[+1j * h] - vals[-1j * h]) / (4.0 * h)
        return 2.0 * d


# ---------------------------------------------------------------------------
# variational checks: Rauch, prime form, projective connection

def rauch_check(family: StratumFamily, alpha: int, beta: int,
                k: int) -> tuple:
    """(finite-difference, contour) values of dB_{alpha beta}/d zeta_k."""
    curve, data = family.member(family.base_params)
    geo = get_geometry(curve)

    def quantity(c, d):
        return complex(get_geometry(c).B[alpha, beta])

    fd = family.coordinate_derivative(quantity, k)

    def integrand(x, sheet):
        v = geo.v(x, sheet)
        return v[..., alpha] * v[..., beta] \
            / w_function(geo, data.w_coeffs)(x, sheet)

    contour = contour_integral(geo, data, k, integrand)
    return complex(fd), complex(contour)


def rauch_zero_circle_residue(curve: HyperellipticCurveSpec,
                              w_data: AbelianDifferentialData,
                              alpha: int, beta: int, m: int) -> tuple:
    """Zero-circle integral of v_a v_b / w vs 2 pi i times its residue."""
    geo = get_geometry(curve)
    frames = _DivisorFrames(geo, w_data.w_coeffs, w_data.divisor)
    point, k = w_data.divisor[m]
    if k != 1:
        raise DegenerateDivisor("residue shortcut assumes a simple zero")
    x0 = complex(point.x)

    def integrand(x, sheet):
        v = geo.v(x, sheet)
        return v[..., alpha] * v[..., beta] \
            / w_function(geo, w_data.w_coeffs)(x, sheet)

    circle = zero_circle_integral(geo, w_data, m, integrand, frames)
    va = geo.v_at(point)
    dp = complex(npoly.polyval(x0, npoly.polyder(_as_coeffs(
        w_data.w_coeffs))))
    y0 = complex(geo.cuts.y(np.array([x0]), point.sheet)[0])
    res = va[alpha] * va[beta] * y0 / dp
    return complex(circle), complex(2j * math.pi * res)


def _fixed_flat_point(geo: SurfaceGeometry, data: AbelianDifferentialData,
                      z_target: complex, x_guess: complex,
                      sheet: int) -> SurfacePoint:
    """Solve int_{P_1}^{x} w = z_target near x_guess by Newton steps."""
    w_fn = w_function(geo, data.w_coeffs)
    base = data.divisor[0][0]
    path = geo.router.route(base, SurfacePoint(x_guess, sheet))
    z = complex(path.integrate(w_fn, rtol=1e-11))
    x = complex(x_guess)
    for _ in range(40):
        f = complex(w_fn(np.array([x]), sheet)[0])
        step = (z - z_target) / f
        if abs(step) < 1e-13 * max(1.0, abs(x)):
            return SurfacePoint(x, sheet)
        x_new = x - step
        z += complex(quad_segment(lambda t: w_fn(t, sheet), x, x_new,
                                  rtol=1e-11))
        x = x_new
    raise ValidationFailure(
        f"flat-coordinate point did not converge near x = {x_guess}")


def _flat_anchor_of(geo, data, point: SurfacePoint) -> complex:
    w_fn = w_function(geo, data.w_coeffs)
    path = geo.router.route(data.divisor[0][0], point)
    return complex(path.integrate(w_fn, rtol=1e-11))


def _log_e_weighted(geo: SurfaceGeometry, data, P: SurfacePoint,
                    Q: SurfacePoint) -> complex:
    """log of E(P,Q)^2 w(P) w(Q), the w-weighted square used in variations."""
    w_fn = w_function(geo, data.w_coeffs)
    e = geo.prime_form(P, Q)
    wp = complex(w_fn(np.array([complex(P.x)]), P.sheet)[0])
    wq = complex(w_fn(np.array([complex(Q.x)]), Q.sheet)[0])
    return cmath.log(e * e * wp * wq)


def _require_clear_abel_paths(geo: SurfaceGeometry, points):
    """Marked points must sit in the base chamber.

    The prime-form variational identity holds with theta arguments in the
    principal lattice class and contours clear of the marked points; both
    fail when the abel path of a marked point wraps a homology cycle, and
    the integrals then differ by residue pickups at the marked points.
    """
    a_polys = [c.polyline(512) for c in geo.a_cycles]
    b_polys = [c.polyline() for c in geo.b_cycles]
    for pt in points:
        pl = geo.router.route(geo.base_point, pt).polyline()
        for poly in a_polys + b_polys:
            if signed_intersection(pl, poly):
                raise ValidationFailure(
                    f"abel path of ({pt.x}, sheet {pt.sheet}) wraps a "
                    "homology cycle; place marked points in the base "
                    "chamber, clear of the a-ellipses and b-lanes")


def prime_form_variation_check(family: StratumFamily, P: SurfacePoint,
                               Q: SurfacePoint, k: int) -> tuple:
    """(finite-difference, contour) for the weighted prime-form variation.

    The quantity is log[E(P,Q) w^{1/2}(P) w^{1/2}(Q)] with P and Q pinned
    to fixed flat coordinates along the family; the contour member is
    -(1/4 pi i) oint_{s_k} (1/w) [d_R log(E(P,R)/E(Q,R))]^2.  P and Q must
    sit in the base chamber (see _require_clear_abel_paths).
    """
    curve0, data0 = family.member(family.base_params)
    geo0 = get_geometry(curve0)
    _require_clear_abel_paths(geo0, (P, Q))
    zP = _flat_anchor_of(geo0, data0, P)
    zQ = _flat_anchor_of(geo0, data0, Q)

    def quantity(c, d):
        g = get_geometry(c)
        Pm = _fixed_flat_point(g, d, zP, complex(P.x), P.sheet)
        Qm = _fixed_flat_point(g, d, zQ, complex(Q.x), Q.sheet)
        return 0.5 * _log_e_weighted(g, d, Pm, Qm)

    base_val = quantity(curve0, data0)

    def tracked(c, d):
        val = quantity(c, d)
        return val + 2j * math.pi * round((base_val.imag - val.imag)
                                          / (2.0 * math.pi))

    fd = family.coordinate_derivative(tracked, k)

    omega = geo0.third_kind(P, Q)
    w_fn = w_function(geo0, data0.w_coeffs)

    def integrand(x, sheet):
        o = omega(x, sheet)
        return o * o / w_fn(x, sheet)

    contour = contour_integral(geo0, data0, k, integrand)
    return complex(fd), complex(-contour / (4j * math.pi))


def prime_form_zero_circle_residue(curve: HyperellipticCurveSpec,
                                   w_data: AbelianDifferentialData,
                                   P: SurfacePoint, m: int) -> tuple:
    """Circle and residue routes for the zero-anchored variation kernel.

    Returns (-(1/4 pi i) oint_C, -(1/2) res) of (1/w)[d_R log
    (E(P,R)/E(P_m,R))]^2 at the simple zero P_m; the two agree by the
    residue theorem.
    """
    geo = get_geometry(curve)
    frames = _DivisorFrames(geo, w_data.w_coeffs, w_data.divisor)
    point, kk = w_data.divisor[m]
    if kk != 1:
        raise DegenerateDivisor("residue route assumes a simple zero")
    x0 = complex(point.x)
    omega = geo.third_kind(P, point)
    w_fn = w_function(geo, w_data.w_coeffs)

    def integrand(x, sheet):
        o = omega(x, sheet)
        return o * o / w_fn(x, sheet)

    x_clear = min(geo.cuts.nearest_branch_distance(x0),
                  geo._cut_distance(x0),
                  abs(x0 - complex(P.x)) if P.sheet == point.sheet
                  else np.inf)
    u_of_t, t_of_u = frames.chart(m)
    u_rad = abs(complex(u_of_t(0.35 * x_clear)))
    while abs(complex(t_of_u(u_rad))) > 0.45 * x_clear:
        u_rad *= 0.5
    circle = zero_circle_integral(geo, w_data, m, integrand, frames,
                                  radius=u_rad)

    # Laurent data: omega has residue -1 at P_m, w a simple zero, so the
    # integrand residue is the t^2 coefficient of A(t)^2 G(t) with
    # A = t*omega (Taylor) and G = t/f (Taylor).
    rad = 0.3 * min(geo.cuts.nearest_branch_distance(x0),
                    geo._cut_distance(x0),
                    abs(x0 - complex(P.x)) if P.sheet == point.sheet
                    else np.inf)
    a_coef = cauchy_taylor_coeffs(
        lambda x: omega(x, point.sheet) * (x - x0), x0, rad, 4, rtol=1e-11)
    A = PowerSeries(np.asarray(a_coef))
    fs = frames.f_series(m)
    G = PowerSeries(fs.c[1:]).truncate(4).reciprocal()
    res = (A * A * G).c[2]
    return complex(-circle / (4j * math.pi)), complex(-0.5 * res)


def projective_connection_variation_check(family: StratumFamily,
                                          P: SurfacePoint,
                                          k: int) -> tuple:
    """(finite-difference, contour) for the flat-frame (S_B - S_w)(P).

    Contour member: (3/pi i) oint_{s_k} w(P,R)^2 / w(R), with everything
    pinned to the flat coordinate of P.
    """
    curve0, data0 = family.member(family.base_params)
    geo0 = get_geometry(curve0)
    zP = _flat_anchor_of(geo0, data0, P)

    def quantity(c, d):
        g = get_geometry(c)
        Pm = _fixed_flat_point(g, d, zP, complex(P.x), P.sheet)
        x = np.array([complex(Pm.x)])
        sb = complex(g.projective_connection(x, Pm.sheet)[0])
        sw = complex(_sw_affine(g, d.w_coeffs)(x, Pm.sheet)[0])
        f = complex(w_function(g, d.w_coeffs)(x, Pm.sheet)[0])
        return (sb - sw) / (f * f)

    fd = family.coordinate_derivative(quantity, k)

    w_fn = w_function(geo0, data0.w_coeffs)
    fP = complex(w_fn(np.array([complex(P.x)]), P.sheet)[0])

    def integrand(x, sheet):
        row = geo0.bergman_row(P, np.asarray(x, dtype=complex), sheet)
        return row * row / w_fn(x, sheet)

    contour = contour_integral(geo0, data0, k, integrand)
    rhs = 3.0 / (1j * math.pi) * contour / (fP * fP)
    return complex(fd), complex(rhs)


# ---------------------------------------------------------------------------
# infinitesimal Polyakov formula

def infinitesimal_polyakov_check(curve: HyperellipticCurveSpec,
                                 w_data: AbelianDifferentialData,
                                 phi_coeffs,
                                 steps=(1e-3, 5e-4, 2.5e-4)) -> tuple:
    """(lhs, rhs) of the first-variation formula along w + eps phi.

    lhs is the holomorphic eps-derivative at 0 of log[det(Im B) |tau|^2],
    Richardson-extrapolated over the step ladder; rhs is (1/16) times the
    sum over simple zeros of the chart derivative of phi.
    """
    geo = get_geometry(curve)
    phi = _as_coeffs(phi_coeffs)
    if not np.any(phi != 0.0):
        return 0.0 + 0.0j, 0.0 + 0.0j
    frames = _DivisorFrames(geo, w_data.w_coeffs, w_data.divisor)
    rhs = 0.0 + 0.0j
    for m, (_, k) in enumerate(w_data.divisor):
        if k != 1:
            raise DegenerateDivisor(
                "the first-variation formula is implemented for simple zeros")
        rhs += frames.derivative_in_chart(m, phi)
    rhs /= 16.0

    det_im = float(np.linalg.det(geo.B.imag))
    base = np.array(_as_coeffs(w_data.w_coeffs), dtype=complex)
    n = max(base.size, phi.size)
    base = np.pad(base, (0, n - base.size))
    phi_p = np.pad(phi, (0, n - phi.size))

    def G(eps: complex) -> float:
        data = differential_data(curve, base + eps * phi_p)
        tv = bergman_tau(curve, data)
        return math.log(det_im) + 2.0 * tv.log_modulus

    def wirtinger(h: float) -> complex:
        return (G(h) - G(-h)) / (4.0 * h) \
            - 1j * (G(1j * h) - G(-1j * h)) / (4.0 * h)

    d = [wirtinger(h) for h in steps]
    r1 = (4.0 * d[1] - d[0]) / 3.0
    r2 = (4.0 * d[2] - d[1]) / 3.0
    scale = max(abs(r2), abs(rhs), 1e-12)
    if abs(r2 - r1) > 2e-4 * scale:
        raise StepSelectionFailure(
            f"Richardson levels differ by {abs(r2 - r1):.3e} "
            f"(scale {scale:.3e}); the step ladder did not converge")
    lhs = (16.0 * r2 - r1) / 15.0
    return complex(lhs), complex(rhs)


# ---------------------------------------------------------------------------
# Fay projective connection

def fay_projective_connection(curve: HyperellipticCurveSpec,
                              w_data: AbelianDifferentialData,
                              P: SurfacePoint, Q: SurfacePoint,
                              route: str = "assembled") -> complex:
    """S^P_Fay at Q in the flat frame of w.

    Both routes sample the normalized 1-form with a single zero of order
    2g-2 at P on a Cauchy circle and take the Schwarzian of its
    antiderivative: "assembled" writes its density through the C-ratio
    form of the s-differential, "canonical" through prime forms anchored
    at the divisor of w plus a lattice phase.  Values agree up to
    quadrature error; constant prefactors drop out of the Schwarzian.
    """
    geo = get_geometry(curve)
    g = geo.genus
    _finite_divisor_or_raise(w_data.divisor)
    xq = complex(Q.x)
    if any(abs(xq - complex(p.x)) < max(curve.eps_sep,
                                        1e-7 * geo.cuts.scale)
           and Q.sheet == p.sheet for p, _ in w_data.divisor):
        raise DegenerateDivisor("Q must stay away from the zeros of w")
    w_fn = w_function(geo, w_data.w_coeffs)
    r = np.array(w_data.lattice_r, dtype=float)
    a_p = geo.abel(P)

    if route == "assembled":
        def density(x):
            x = np.asarray(x, dtype=complex)
            out = np.empty(x.shape, dtype=complex)
            for i, xv in enumerate(x.ravel()):
                pt = SurfacePoint(complex(xv), Q.sheet)
                cv = geo.c_value(pt)
                th = geo.prime_theta(pt, P)
                qv = geo.q_affine(pt)
                out.ravel()[i] = cv ** (2.0 / (1.0 - g)) \
                    * th ** (2 * (g - 1)) * qv ** (1 - g)
            return out
    elif route == "canonical":
        ab_center = geo.abel(Q)
        ab_cache: dict = {}

        def _abel_on_disc(xv):
            # continuation from the center keeps the lattice class constant
            # across the sampling circle, where per-point routing may not
            hit = ab_cache.get(xv)
            if hit is None:
                hit = ab_center + np.asarray(quad_segment(
                    lambda t: geo.v(t, Q.sheet), xq, xv, rtol=1e-12))
                ab_cache[xv] = hit
            return hit

        ab_marked = [geo.abel(point) for point, _ in w_data.divisor]

        def density(x):
            x = np.asarray(x, dtype=complex)
            out = np.empty(x.shape, dtype=complex)
            fv = w_fn(x.ravel(), Q.sheet)
            for i, xv in enumerate(x.ravel()):
                ab = _abel_on_disc(complex(xv))
                acc = geo.theta.value(a_p - ab, char=geo.odd_char) \
                    ** (2 * g - 2) * complex(fv[i])
                for abm, (_, kk) in zip(ab_marked, w_data.divisor):
                    acc *= geo.theta.value(abm - ab, char=geo.odd_char) \
                        ** (-kk)
                # sign: continuation along b_k must multiply the density by
                # exp(4 pi i K^P_k); the opposite sign leaves a stray Br term
                acc *= cmath.exp(-2j * math.pi * complex(r @ (ab - a_p)))
                out.ravel()[i] = acc
            return out
    else:
        raise ValueError(f"unknown route {route!r}")

    rad = 0.3 * min(geo.cuts.nearest_branch_distance(xq),
                    geo._cut_distance(xq),
                    min(abs(xq - complex(p.x)) for p, _ in w_data.divisor),
                    abs(xq - complex(P.x)) if Q.sheet == P.sheet
                    else np.inf)
    c0, c1, c2 = cauchy_taylor_coeffs(density, xq, rad, 3, rtol=1e-11)
    # Schwarzian of the antiderivative: u''/u - (3/2)(u'/u)^2 at the center
    s_fay = 2.0 * c2 / c0 - 1.5 * (c1 / c0) ** 2
    s_w = complex(_sw_affine(geo, w_data.w_coeffs)(np.array([xq]), Q.sheet)[0])
    fq = complex(w_fn(np.array([xq]), Q.sheet)[0])
    return complex((s_fay - s_w) / (fq * fq))
