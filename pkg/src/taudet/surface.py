"""Global analytic data of a hyperelliptic curve.

Construction pipeline: cut system -> homology representatives -> raw
monomial periods -> normalized basis and period matrix -> theta machinery.
Everything downstream (Abel map, Riemann constants, prime form, Bergman
kernel and projective connection, the C and s differentials) hangs off a
single memoized :class:`SurfaceGeometry` per curve; the module-level
functions expose the same operations statelessly.

Phase conventions: square roots and fractional powers are principal, and
multivalued quantities (prime form, C, s) are evaluated along the fixed
deterministic paths chosen by the router.  Only moduli and phase-coherent
ratios of these quantities are comparable across independent evaluation
routes.
"""

from __future__ import annotations

import itertools
import math

from dataclasses import dataclass

import numpy as np

from .curves import HyperellipticCurveSpec, LocalFrame, SurfacePoint
from .errors import (
    AllOddCharacteristicsDegenerate,
    DegenerateDivisor,
    InvalidDimension,
    NonPositiveImaginaryPart,
    RadiusCollapse,
    RiemannRelationViolation,
    SingularPeriodMatrix,
    ValidationFailure,
    WronskianVanishes,
)
from .geometry import CutSystem, PathRouter, SurfacePath, build_cycles
from .quadrature import cauchy_taylor_coeffs
from .series import PowerSeries
from .special_functions import RiemannTheta, enumerate_characteristics


@dataclass(frozen=True)
class PeriodMatrix:
    """Symmetric period matrix with positive definite imaginary part."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimension("period matrix must be square")
        scale = max(float(np.linalg.norm(m)), 1e-30)
        if np.linalg.norm(m - m.T) > 1e-8 * scale:
            raise RiemannRelationViolation("period matrix is not symmetric")
        if np.min(np.linalg.eigvalsh(m.imag)) <= 0.0:
            raise NonPositiveImaginaryPart(
                "imaginary part is not positive definite")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def genus(self) -> int:
        return self.matrix.shape[0]


def _spectral_antiderivative(samples: np.ndarray) -> np.ndarray:
    """F with F' = f, F[0] = 0, for f sampled uniformly on [0, 2pi)."""
    f = np.asarray(samples, dtype=complex)
    n = f.shape[0]
    coef = np.fft.fft(f, axis=0) / n
    k = np.fft.fftfreq(n, d=1.0 / n)
    kk = k.reshape((n,) + (1,) * (f.ndim - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        anti = np.where(kk == 0, 0.0, coef / (1j * kk))
    per = np.fft.ifft(anti * n, axis=0)
    theta = (2.0 * np.pi / n) * np.arange(n).reshape(kk.shape)
    out = per + coef[:1] * theta
    return out - out[:1]


def _shifted_monomial(k: int, x0: complex, order: int) -> PowerSeries:
    """(x0 + t)^k truncated at the given order."""
    c = np.zeros(order, dtype=complex)
    for j in range(min(k, order - 1) + 1):
        c[j] = math.comb(k, j) * x0 ** (k - j)
    return PowerSeries(c)


class SurfaceGeometry:
    """Periods, theta machinery, and kernel objects of one curve.

    Immutable after construction; evaluation methods are pure apart from
    internal memo tables keyed by exact point coordinates.
    """

    def __init__(self, curve: HyperellipticCurveSpec, rtol: float = 1e-11):
        self.curve = curve
        self.rtol = rtol
        self.cuts = CutSystem(curve)
        self.a_cycles, self.b_cycles = build_cycles(self.cuts)
        self.router = PathRouter(self.cuts)
        g = curve.genus
        self.genus = g

        self._pcoef = np.polynomial.polynomial.polyfromroots(
            curve.branch_points).astype(complex)
        self._f2coef = self._second_pair_coeffs()

        powers = np.arange(g)

        def mono(x, sheet):
            x = np.asarray(x, dtype=complex)
            return x[..., None] ** powers / self.cuts.y(x, sheet)[..., None]

        raw_a = np.array([c.integrate(mono, rtol=rtol) for c in self.a_cycles])
        cond = np.linalg.cond(raw_a)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularPeriodMatrix(
                f"monomial a-period matrix has condition number {cond:.3e}")
        self.raw_a = raw_a
        self.basis = np.linalg.inv(raw_a)
        self.raw_b = np.array([p.integrate(mono, rtol=rtol)
                               for p in self.b_cycles])

        B = self.raw_b @ self.basis
        asym = np.linalg.norm(B - B.T)
        if asym > 1e-8 * max(np.linalg.norm(B), 1.0):
            raise RiemannRelationViolation(
                f"b-period matrix asymmetry {asym:.3e}")
        B = 0.5 * (B + B.T)
        if np.min(np.linalg.eigvalsh(B.imag)) <= 0.0:
            raise RiemannRelationViolation(
                "imaginary part of the period matrix is not positive definite")
        self.B = B
        self.period_matrix = PeriodMatrix(B)
        self.theta = RiemannTheta(B)

        rng = np.random.default_rng(7)
        self._theta_scale = float(np.median(np.abs(
            self.theta.values(rng.random((48, g))))))

        self._abel_cache: dict = {}
        self._c_cache: dict = {}
        self._kc_cache = None

        self.base_point = self._pick_base_point()
        self.odd_char, self._odd_grad = self._pick_odd_characteristic()
        self._K_base, self._A_base = self._locate_riemann_constants()

    # -- construction helpers ---------------------------------------------

    def _pick_base_point(self) -> SurfacePoint:
        centroid = complex(np.mean(self.cuts.branch_points))
        scale = self.cuts.scale
        for ang in (-0.5 * np.pi, -0.75 * np.pi, -0.25 * np.pi, 0.0,
                    np.pi, 0.5 * np.pi):
            x = centroid + 2.2 * scale * np.exp(1j * (ang + 0.062))
            if self.cuts.point_on_cut(x, 4.0 * self.cuts.clearance) is None:
                return SurfacePoint(x, 1)
        raise ValidationFailure("no admissible base point found")

    def _pick_odd_characteristic(self):
        vb = self.v_at(self.base_point)
        floor = 1e-8 * self._theta_scale * max(np.max(np.abs(vb)), 1e-30)
        for ch in enumerate_characteristics(self.genus, "odd"):
            grad = self.theta.value_bundle(
                np.zeros((1, self.genus)),
                [(a,) for a in range(self.genus)], char=ch)[:, 0]
            if abs(grad @ vb) > floor:
                return ch, grad
        raise AllOddCharacteristicsDegenerate(
            "every odd characteristic gives a vanishing q at the base point")

    def _locate_riemann_constants(self):
        """Half-period ansatz at a branch point, scored by theta vanishing."""
        g = self.genus
        e0 = self.curve.branch_points[0]
        A0 = self.abel(SurfacePoint(e0, 1))
        rng = np.random.default_rng(23)
        divisors = [self._random_points(g - 1, rng) for _ in range(4)]
        targets = np.array([
            sum((self.abel(pt) for pt in div), np.zeros(g, dtype=complex))
            - (g - 1) * A0
            for div in divisors])

        combos = list(itertools.product((0, 1), repeat=2 * g))
        scores = np.empty(len(combos))
        for i, c in enumerate(combos):
            eps = np.array(c[:g], dtype=float)
            delta = np.array(c[g:], dtype=float)
            h = 0.5 * (self.B @ eps + delta)
            vals = self.theta.values(targets + h[None, :])
            scores[i] = np.max(np.abs(vals))
        order = np.argsort(scores)
        best, second = scores[order[0]], scores[order[1]]
        if best > 1e-7 * self._theta_scale:
            raise ValidationFailure(
                f"no half-period satisfies theta vanishing (best {best:.3e})")
        if second < 100.0 * max(best, 1e-13 * self._theta_scale):
            raise ValidationFailure(
                "half-period selection for Riemann constants is ambiguous")
        c = combos[order[0]]
        eps = np.array(c[:g], dtype=float)
        delta = np.array(c[g:], dtype=float)
        return 0.5 * (self.B @ eps + delta), A0

    def _random_points(self, count: int, rng) -> list[SurfacePoint]:
        """Generic surface points clear of branch points and cuts."""
        centroid = complex(np.mean(self.cuts.branch_points))
        scale = self.cuts.scale
        out: list[SurfacePoint] = []
        while len(out) < count:
            x = centroid + scale * (0.7 * rng.normal() + 0.7j * rng.normal())
            if self.cuts.nearest_branch_distance(x) < 0.2 * self.cuts.gap:
                continue
            if self.cuts.point_on_cut(x, 2.0 * self.cuts.clearance) is not None:
                continue
            out.append(SurfacePoint(x, 1 if rng.random() < 0.5 else -1))
        return out

    def _second_pair_coeffs(self) -> np.ndarray:
        """x-polynomial giving the second diagonal derivative of the pair
        polynomial F(x1, x2) entering the algebraic kernel."""
        p = self._pcoef
        d = len(p) - 1
        out = np.zeros(max(2 * (d // 2) + 1, 1), dtype=complex)
        for i in range(d // 2 + 1):
            if 2 * i - 2 >= 0:
                out[2 * i - 2] += 2.0 * i * (i - 1) * p[2 * i]
            if 2 * i + 1 <= d and 2 * i - 1 >= 0:
                out[2 * i - 1] += 2.0 * i * i * p[2 * i + 1]
        return out

    # -- basis and Abel map -----------------------------------------------

    def v(self, x, sheet):
        """Normalized holomorphic differentials as (…, g) scalar values."""
        x = np.asarray(x, dtype=complex)
        powers = np.arange(self.genus)
        mono = x[..., None] ** powers / self.cuts.y(x, sheet)[..., None]
        return mono @ self.basis

    def v_at(self, point: SurfacePoint) -> np.ndarray:
        return self.v(np.array([point.x]), point.sheet)[0]

    def abel_of_path(self, path: SurfacePath) -> np.ndarray:
        return np.asarray(path.integrate(lambda x, s: self.v(x, s),
                                         rtol=self.rtol))

    def abel(self, point: SurfacePoint) -> np.ndarray:
        """Abel image from the curve's base point along the routed path."""
        if point.at_infinity:
            raise DegenerateDivisor(
                "Abel map at infinity is not supported; use a finite divisor")
        key = (complex(point.x), int(point.sheet))
        hit = self._abel_cache.get(key)
        if hit is None:
            if self.cuts.is_branch_point(point.x):
                key = (complex(point.x), 1)
                hit = self._abel_cache.get(key)
                if hit is not None:
                    return hit
            path = self.router.route(self.base_point, point)
            hit = self.abel_of_path(path)
            self._abel_cache[key] = hit
        return hit

    def lattice_decompose(self, vec):
        """Nearest lattice vector B m + n; returns (m, n, residual)."""
        v = np.asarray(vec, dtype=complex)
        m = np.rint(np.linalg.solve(self.B.imag, v.imag)).astype(int)
        n = np.rint((v - self.B @ m).real).astype(int)
        res = float(np.linalg.norm(v - self.B @ m - n))
        return m, n, res

    def riemann_constants(self, point: SurfacePoint) -> np.ndarray:
        A = self.abel(point)
        return self._K_base + (self.genus - 1) * (A - self._A_base)

    # -- local series -----------------------------------------------------

    def shifted_poly_series(self, x0: complex, order: int) -> PowerSeries:
        out = PowerSeries.constant(1.0, order)
        for e in self.curve.branch_points:
            out = out * PowerSeries(np.array([x0 - e, 1.0], dtype=complex),
                                    ).truncate(order)
        return out

    def y_series(self, x0: complex, sheet: int, order: int = 10) -> PowerSeries:
        """y along the sheet as a series in t = x - x0; x0 off the branch set."""
        ps = self.shifted_poly_series(x0, order)
        if abs(ps.c[0]) < 1e-12 * self.cuts.scale ** len(self.curve.branch_points):
            raise DegenerateDivisor("series base point sits on the branch set")
        ys = ps.sqrt()
        want = complex(self.cuts.y(np.array([x0]), sheet)[0])
        return ys * (want / ys.c[0])

    def v_series(self, x0: complex, sheet: int, order: int = 10):
        """Each normalized differential's scalar as a series in t = x - x0."""
        yinv = self.y_series(x0, sheet, order).reciprocal()
        out = []
        for beta in range(self.genus):
            num = PowerSeries(np.zeros(order, dtype=complex))
            for k in range(self.genus):
                coef = self.basis[k, beta]
                if coef != 0.0:
                    num = num + _shifted_monomial(k, x0, order) * coef
            out.append(num * yinv)
        return out

    # -- prime form -------------------------------------------------------

    def q_affine(self, point: SurfacePoint) -> complex:
        """Odd-characteristic half-differential squared, affine frame."""
        return complex(self._odd_grad @ self.v_at(point))

    def q_in_frame(self, point: SurfacePoint, frame: LocalFrame | None) -> complex:
        if frame is None or frame.kind == "affine":
            return self.q_affine(point)
        x = complex(point.x)
        if frame.kind == "sqrt-branch" and abs(x - frame.center) < 1e-12 * self.cuts.scale:
            # finite limit of q * dx/dt at the branch point itself
            e = frame.center
            others = [b for b in self.curve.branch_points
                      if abs(b - e) > 1e-12 * self.cuts.scale]
            dP = np.prod([e - b for b in others])
            powers = np.arange(self.genus)
            n_val = (e ** powers) @ (self.basis @ self._odd_grad)
            return complex(2.0 * n_val / np.sqrt(dP))
        return self.q_affine(point) * frame.dx_dt(x)

    def prime_theta(self, P: SurfacePoint, Q: SurfacePoint) -> complex:
        # argument order fixed so that E(P,Q)/(x(Q)-x(P)) -> +1 on the
        # diagonal with principal square roots in the q factors
        z = self.abel(Q) - self.abel(P)
        return self.theta.value(z, char=self.odd_char)

    def prime_form(self, P: SurfacePoint, Q: SurfacePoint,
                   frame_p: LocalFrame | None = None,
                   frame_q: LocalFrame | None = None) -> complex:
        """E(P,Q) as a scalar in the given frames; principal square roots."""
        qp = self.q_in_frame(P, frame_p)
        qq = self.q_in_frame(Q, frame_q)
        return self.prime_theta(P, Q) / (np.sqrt(qp) * np.sqrt(qq))

    # -- Bergman kernel ---------------------------------------------------

    def pair_poly(self, x1, x2):
        """Symmetric polynomial with F(x,x) = 2 P(x); kernel numerator."""
        p = self._pcoef
        d = len(p) - 1
        x1 = np.asarray(x1, dtype=complex)
        x2 = np.asarray(x2, dtype=complex)
        m = x1 * x2
        out = np.zeros(np.broadcast(x1, x2).shape, dtype=complex)
        for i in range(d // 2 + 1):
            odd = p[2 * i + 1] if 2 * i + 1 <= d else 0.0
            out = out + m ** i * (2.0 * p[2 * i] + odd * (x1 + x2))
        return out

    def bergman0(self, x1, y1, x2, y2):
        """Sheet-aware kernel with the double pole but nonzero a-periods."""
        F = self.pair_poly(x1, x2)
        return (F + 2.0 * y1 * y2) / (4.0 * (x1 - x2) ** 2 * y1 * y2)

    @property
    def bergman_correction(self) -> np.ndarray:
        """Matrix K with w(P,Q) = B0(P,Q) - v(P) K v(Q); a-periods of w vanish."""
        if self._kc_cache is not None:
            return self._kc_cache
        g = self.genus
        centroid = complex(np.mean(self.cuts.branch_points))
        scale = self.cuts.scale
        n_s = 2 * g + 2
        samples = []
        phi = 0.31
        while len(samples) < n_s:
            x = centroid + 1.45 * scale * np.exp(1j * phi)
            phi += 2.0 * np.pi / n_s + 0.017
            if self.cuts.point_on_cut(x, 3.0 * self.cuts.clearance) is not None:
                continue
            if self.cuts.nearest_branch_distance(x) < 0.3 * self.cuts.gap:
                continue
            samples.append(SurfacePoint(x, 1 if len(samples) % 2 else -1))
        V = np.array([self.v_at(q) for q in samples])
        M = np.empty((n_s, g), dtype=complex)
        for j, q in enumerate(samples):
            xq = complex(q.x)
            yq = complex(self.cuts.y(np.array([xq]), q.sheet)[0])
            for gamma in range(g):
                M[j, gamma] = self.a_cycles[gamma].integrate(
                    lambda x, s: self.bergman0(x, self.cuts.y(x, s), xq, yq),
                    rtol=1e-10)
        K, *_ = np.linalg.lstsq(V, M, rcond=None)
        resid = np.linalg.norm(V @ K - M)
        if resid > 1e-7 * max(np.linalg.norm(M), 1.0):
            raise ValidationFailure(
                f"kernel a-period correction is not holomorphic "
                f"(residual {resid:.3e})")
        K = K.T
        sym = np.linalg.norm(K - K.T)
        if sym > 1e-7 * max(np.linalg.norm(K), 1.0):
            raise ValidationFailure(
                f"kernel correction matrix asymmetry {sym:.3e}")
        self._kc_cache = 0.5 * (K + K.T)
        return self._kc_cache

    def bergman_kernel(self, P: SurfacePoint, Q: SurfacePoint,
                       frame_p: LocalFrame | None = None,
                       frame_q: LocalFrame | None = None) -> complex:
        """w(P,Q) as a scalar in the given frames (algebraic route)."""
        row = self.bergman_row(Q, np.array([complex(P.x)]), P.sheet)[0]
        for frame, pt in ((frame_p, P), (frame_q, Q)):
            if frame is not None and frame.kind != "affine":
                row *= frame.dx_dt(complex(pt.x))
        return complex(row)

    def bergman_row(self, Q: SurfacePoint, x, sheet) -> np.ndarray:
        """w(., Q) in affine frames along an x-array on one sheet."""
        xq = complex(Q.x)
        yq = complex(self.cuts.y(np.array([xq]), Q.sheet)[0])
        x = np.asarray(x, dtype=complex)
        y = self.cuts.y(x, sheet)
        b0 = self.bergman0(x, y, xq, yq)
        corr = self.v(x, sheet) @ (self.bergman_correction @ self.v_at(Q))
        return b0 - corr

    def bergman_kernel_theta(self, P: SurfacePoint, Q: SurfacePoint) -> complex:
        """Same kernel from second log-derivatives of the odd theta."""
        g = self.genus
        z = self.abel(P) - self.abel(Q)
        multis = [()] + [(a,) for a in range(g)] + \
            [(a, b) for a in range(g) for b in range(a, g)]
        vals = self.theta.value_bundle(z[None, :], multis,
                                       char=self.odd_char)[:, 0]
        th = vals[0]
        grad = vals[1:g + 1]
        hess = np.empty((g, g), dtype=complex)
        i = g + 1
        for a in range(g):
            for b in range(a, g):
                hess[a, b] = hess[b, a] = vals[i]
                i += 1
        log_hess = hess / th - np.outer(grad, grad) / th ** 2
        return complex(-self.v_at(P) @ log_hess @ self.v_at(Q))

    # -- projective connection --------------------------------------------

    def projective_connection(self, x, sheet: int = 1):
        """Closed form of the diagonal regularization, affine frame."""
        x = np.asarray(x, dtype=complex)
        P = self.cuts.poly(x)
        L = self.cuts.log_derivative_y(x)
        Lp = -0.5 * np.sum(
            1.0 / (x[..., None] - np.asarray(self.curve.branch_points)) ** 2,
            axis=-1)
        yypp = P * (Lp + L * L)
        F2 = np.polynomial.polynomial.polyval(x, self._f2coef)
        hb = self.v(x, sheet)
        corr = np.einsum("...a,ab,...b->...", hb, self.bergman_correction, hb)
        return 6.0 * (F2 - 2.0 * yypp) / (8.0 * P) - 6.0 * corr

    def projective_connection_circle(self, point: SurfacePoint,
                                     frame: LocalFrame | None = None,
                                     radius: float | None = None) -> complex:
        """Diagonal regularization by Cauchy-circle extraction."""
        x0 = complex(point.x)
        clear = min(self.cuts.nearest_branch_distance(x0),
                    min(self._cut_distance(x0), np.inf))
        r = radius if radius is not None else 0.45 * clear
        if r > 0.8 * clear:
            r = 0.8 * clear
        if r < 1e-7 * self.cuts.scale:
            raise RadiusCollapse(
                f"no admissible circle radius at {x0} (clearance {clear:.3e})")

        def reg(xq):
            row = self.bergman_row(point, xq, point.sheet)
            return row - 1.0 / (x0 - xq) ** 2

        c0 = cauchy_taylor_coeffs(reg, x0, r, 1, rtol=1e-11)[0]
        s_affine = complex(6.0 * c0)
        if frame is None or frame.kind == "affine":
            return s_affine
        dxdt = frame.dx_dt(x0)
        return s_affine * dxdt ** 2 + frame.schwarzian_x_of_t(x0)

    def _cut_distance(self, x: complex) -> float:
        from .geometry import _point_seg_dist
        best = np.inf
        for cut in self.cuts.cuts:
            best = min(best, _point_seg_dist(x, cut.p, cut.q))
        return best

    # -- third-kind differential ------------------------------------------

    def third_kind(self, P: SurfacePoint, Q: SurfacePoint):
        """Normalized differential with residues +1 at P, -1 at Q.

        Returns a scalar-valued fn(x, sheet); a-periods vanish.  Equals
        d log of the prime-form ratio E(., P)/E(., Q).
        """
        xp, xq = complex(P.x), complex(Q.x)
        yp = complex(self.cuts.y(np.array([xp]), P.sheet)[0])
        yq = complex(self.cuts.y(np.array([xq]), Q.sheet)[0])

        def raw(x, sheet):
            x = np.asarray(x, dtype=complex)
            y = self.cuts.y(x, sheet)
            return ((y + yp) / (x - xp) - (y + yq) / (x - xq)) / (2.0 * y)

        c = np.array([cyc.integrate(raw, rtol=1e-10)
                      for cyc in self.a_cycles]) / (2.0 * np.pi * 1j)

        def fn(x, sheet):
            return raw(x, sheet) - 2.0 * np.pi * 1j * (self.v(x, sheet) @ c)

        return fn

    # -- the C and s differentials ----------------------------------------

    def wronskian(self, point: SurfacePoint) -> complex:
        """Wronskian of the normalized basis in the affine frame."""
        g = self.genus
        vs = self.v_series(point.x, point.sheet, order=g + 2)
        M = np.array([[math.factorial(a) * vs[b].c[a] for b in range(g)]
                      for a in range(g)])
        W = complex(np.linalg.det(M))
        col_scale = np.prod(np.linalg.norm(M, axis=0))
        if abs(W) < 1e-10 * max(col_scale, 1e-30):
            raise WronskianVanishes(
                f"Wronskian vanishes at x = {point.x} (Weierstrass point?)")
        return W

    def c_value(self, point: SurfacePoint) -> complex:
        """The distinguished g(1-g)/2-differential, affine frame."""
        key = (complex(point.x), int(point.sheet))
        hit = self._c_cache.get(key)
        if hit is not None:
            return hit
        g = self.genus
        KP = self.riemann_constants(point)
        multis = list(itertools.combinations_with_replacement(range(g), g))
        vals = self.theta.value_bundle(KP[None, :], multis)[:, 0]
        vP = self.v_at(point)
        total = 0.0 + 0.0j
        for mu, th in zip(multis, vals):
            counts = [mu.count(a) for a in set(mu)]
            weight = math.factorial(g)
            for cnt in counts:
                weight //= math.factorial(cnt)
            total += th * weight * np.prod(vP[list(mu)])
        out = total / self.wronskian(point)
        self._c_cache[key] = out
        return out

    def s_value(self, P: SurfacePoint, Q: SurfacePoint) -> complex:
        """s(P,Q) from the C-ratio; principal branch of the 1/(1-g) power."""
        if self.genus < 2:
            raise InvalidDimension("s requires genus >= 2")
        ratio = self.c_value(P) / self.c_value(Q)
        return complex(ratio ** (1.0 / (1.0 - self.genus)))

    def s_direct(self, P: SurfacePoint, Q: SurfacePoint,
                 n_nodes: int = 2048) -> complex:
        """s(P,Q) from its defining a-period integrals of log E ratios.

        Phase-unwrapped trapezoid sums on the a-cycle ellipses; slower and
        looser than the C-ratio route, used as an independent check.
        """
        g = self.genus
        AP = self.abel(P)
        AQ = self.abel(Q)
        t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
        total = 0.0 + 0.0j
        for alpha in range(g):
            cyc = self.a_cycles[alpha]
            x = cyc.point(t)
            dx = cyc.tangent(t)
            vals = self.v(x, cyc.sheet)
            A0 = self.abel(SurfacePoint(complex(x[0]), cyc.sheet))
            cum = _spectral_antiderivative(vals * dx[:, None])
            A = A0[None, :] + cum
            thP = self.theta.values(A - AP[None, :], char=self.odd_char)
            thQ = self.theta.values(A - AQ[None, :], char=self.odd_char)
            ratio = thP / thQ
            ang = np.unwrap(np.angle(ratio))
            seam = np.angle(ratio[0] / ratio[-1])
            wind = int(np.rint((ang[-1] + seam - ang[0]) / (2.0 * np.pi)))
            # the winding makes log non-periodic; integrate the sawtooth
            # part in closed form so the node mean stays spectral
            logs_per = np.log(np.abs(ratio)) + 1j * (ang - wind * t)
            total += np.mean(vals[:, alpha] * dx * logs_per) * 2.0 * np.pi
            if wind:
                drift = cum[:, alpha] - t / (2.0 * np.pi)
                theta_moment = np.pi - 2.0 * np.pi * np.mean(drift)
                total += 1j * wind * theta_moment
        total += 0.5 * g * (np.log(self.q_affine(Q)) -
                            np.log(self.q_affine(P)))
        return complex(np.exp(-total))

    def c_value_aux(self, point: SurfacePoint, seed: int = 5) -> complex:
        """C via the auxiliary-point representation with random Q, R_1..R_g.

        Multivalued pieces enter through fixed routed paths, so only the
        modulus is comparable with :meth:`c_value`.
        """
        g = self.genus
        rng = np.random.default_rng(seed)
        aux = self._random_points(g + 1, rng)
        Q, Rs = aux[0], aux[1:]
        AP = self.abel(point)
        z = self.riemann_constants(point).astype(complex).copy()
        for R in Rs[:-1]:
            z += self.abel(R) - AP
        z += self.abel(Rs[-1]) - self.abel(Q)
        num = self.theta.value(z)
        for a in range(g):
            for b in range(a + 1, g):
                num *= self.prime_form(Rs[a], Rs[b])
        for R in Rs:
            num *= self.s_value(R, point)
        den = self.s_value(Q, point)
        for R in Rs:
            den *= self.prime_form(Q, R)
        den *= np.linalg.det(np.array([[self.v_at(R)[a] for R in Rs]
                                       for a in range(g)]))
        return complex(num / den)


# -- module-level interface -----------------------------------------------

_GEOMETRY_CACHE: dict = {}


def get_geometry(curve: HyperellipticCurveSpec,
                 rtol: float = 1e-11) -> SurfaceGeometry:
    geo = _GEOMETRY_CACHE.get(curve)
    if geo is None:
        geo = SurfaceGeometry(curve, rtol=rtol)
        _GEOMETRY_CACHE[curve] = geo
    return geo


def holomorphic_basis(curve: HyperellipticCurveSpec) -> np.ndarray:
    """Coefficients of the normalized differentials over x^k dx / y."""
    return get_geometry(curve).basis


def period_matrix(curve: HyperellipticCurveSpec) -> PeriodMatrix:
    return get_geometry(curve).period_matrix


def abel_map(curve: HyperellipticCurveSpec, path: SurfacePath) -> np.ndarray:
    """Integral of the normalized basis along an explicit validated path."""
    geo = get_geometry(curve)
    path.validate(geo.cuts)
    return geo.abel_of_path(path)


def riemann_constants(curve: HyperellipticCurveSpec,
                      basepoint: SurfacePoint) -> np.ndarray:
    return get_geometry(curve).riemann_constants(basepoint)


def prime_form(curve: HyperellipticCurveSpec, P: SurfacePoint,
               Q: SurfacePoint, frame_p: LocalFrame | None = None,
               frame_q: LocalFrame | None = None) -> complex:
    return get_geometry(curve).prime_form(P, Q, frame_p, frame_q)


def bergman_bidifferential(curve: HyperellipticCurveSpec, P: SurfacePoint,
                           Q: SurfacePoint,
                           frame_p: LocalFrame | None = None,
                           frame_q: LocalFrame | None = None) -> complex:
    return get_geometry(curve).bergman_kernel(P, Q, frame_p, frame_q)


def bergman_projective_connection(curve: HyperellipticCurveSpec,
                                  P: SurfacePoint,
                                  frame: LocalFrame | None = None,
                                  radius: float | None = None) -> complex:
    return get_geometry(curve).projective_connection_circle(P, frame, radius)


def c_differential(curve: HyperellipticCurveSpec,
                   P: SurfacePoint) -> complex:
    return get_geometry(curve).c_value(P)


def s_differential(curve: HyperellipticCurveSpec, P: SurfacePoint,
                   Q: SurfacePoint) -> complex:
    return get_geometry(curve).s_value(P, Q)
