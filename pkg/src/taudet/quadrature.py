"""Complex-plane quadrature used by the period and contour machinery.

Three integrators cover everything downstream:

* adaptive Gauss-Kronrod (G7,K15) on straight segments, vectorized over
  quadrature nodes and over vector-valued integrands,
* trapezoid doubling on 2*pi-periodic contours (spectral accuracy for the
  analytic integrands that arise on confocal ellipses and circles),
* Cauchy-circle Taylor extraction via FFT.

Integrands receive an ndarray of complex points and must return either a
matching 1-d array or an (n, m) array for m simultaneous components.
"""
from __future__ import annotations

import numpy as np

from .errors import ContourQuadratureFailure, RadiusCollapse

# (G7, K15) nodes and weights on [-1, 1], positive half.
_XGK = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

# full node set, ascending
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[1:15:2] = np.concatenate([_WG[:-1], _WG[::-1]])


def _gk_panel(f, a: complex, b: complex):
    """One (G7,K15) panel on the segment a->b. Returns (I15, err)."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid + half * _NODES
    vals = np.asarray(f(pts))
    i15 = half * np.tensordot(_WK, vals, axes=(0, 0))
    i7 = half * np.tensordot(_WG_FULL, vals, axes=(0, 0))
    err = np.max(np.abs(np.atleast_1d(i15 - i7)))
    return i15, err


def quad_segment(f, a: complex, b: complex, rtol: float = 1e-11,
                 atol: float = 1e-13, max_depth: int = 48):
    """Adaptive integral of f along the straight segment a->b."""
    stack = [(complex(a), complex(b), 0)]
    total = None
    # first pass to set the error scale
    ref, _ = _gk_panel(f, a, b)
    scale = max(float(np.max(np.abs(np.atleast_1d(ref)))), atol)
    budget = max(rtol * scale, atol)
    while stack:
        x0, x1, depth = stack.pop()
        val, err = _gk_panel(f, x0, x1)
        if err > budget * max(abs(x1 - x0) / abs(b - a), 1e-3):
            if depth >= max_depth:
                raise ContourQuadratureFailure(
                    f"segment quadrature stalled at depth {depth} "
                    f"(err {err:.3e}, budget {budget:.3e})")
            xm = 0.5 * (x0 + x1)
            stack.append((x0, xm, depth + 1))
            stack.append((xm, x1, depth + 1))
        else:
            total = val if total is None else total + val
    return total


def quad_segment_endpoint_sqrt(f, a: complex, b: complex, at_start: bool,
                               rtol: float = 1e-11):
    """Integral of f along a->b where f ~ (x - e)^(-1/2) at one endpoint.

    Substitutes x = e + u^2 * d so the integrand becomes analytic in u.
    `at_start` marks whether the singular endpoint is a.
    """
    e, far = (a, b) if at_start else (b, a)
    d = far - e

    def g(u):
        x = e + u * u * d
        vals = np.asarray(f(x))
        jac = 2.0 * u * d
        if vals.ndim == 2:
            return vals * jac[:, None]
        return vals * jac

    val = quad_segment(g, 0.0, 1.0, rtol=rtol)
    return val if at_start else -val


def quad_periodic(f, rtol: float = 1e-11, atol: float = 1e-13,
                  n0: int = 32, n_max: int = 1 << 17):
    """Trapezoid-doubling integral of f over [0, 2*pi).

    f takes an array of angles. Spectrally accurate for analytic periodic
    integrands; doubling stops when successive refinements agree.
    """
    n = n0
    theta = 2.0 * np.pi * np.arange(n) / n
    vals = np.asarray(f(theta))
    total = vals.sum(axis=0) * (2.0 * np.pi / n)
    while True:
        theta_new = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        vals_new = np.asarray(f(theta_new))
        n *= 2
        total_new = 0.5 * total + vals_new.sum(axis=0) * (2.0 * np.pi / n)
        scale = max(float(np.max(np.abs(np.atleast_1d(total_new)))), atol)
        if np.max(np.abs(np.atleast_1d(total_new - total))) <= max(rtol * scale, atol):
            return total_new
        total = total_new
        if n > n_max:
            raise ContourQuadratureFailure(
                f"periodic quadrature did not settle below {rtol:g} "
                f"after {n} nodes")


def cauchy_taylor_coeffs(f, center: complex, radius: float, n_coeffs: int,
                         rtol: float = 1e-9, n0: int = 64):
    r"""Taylor coefficients c_0..c_{n-1} of f at `center` via circle FFT.

    c_k = (1/2*pi*i) \oint f(x) / (x-center)^{k+1} dx, evaluated by FFT of
    samples on |x - center| = radius.  Doubles the sample count until the
    requested coefficients are stable.
    """
    n = max(n0, 2 * n_coeffs)
    prev = None
    while n <= 1 << 16:
        theta = 2.0 * np.pi * np.arange(n) / n
        z = center + radius * np.exp(1j * theta)
        vals = np.asarray(f(z), dtype=complex)
        c = np.fft.fft(vals) / n
        coeffs = c[:n_coeffs] / radius ** np.arange(n_coeffs)
        if prev is not None:
            scale = max(np.max(np.abs(coeffs)), 1e-300)
            if np.max(np.abs(coeffs - prev)) <= rtol * scale:
                return coeffs
        prev = coeffs
        n *= 2
    raise RadiusCollapse(
        f"Taylor extraction on radius {radius:g} did not converge; "
        "circle may be too close to a singularity")


def quad_path(f, waypoints, sheets=None, rtol: float = 1e-11):
    """Integrate f over consecutive straight segments.

    `f(x, sheet)` if sheets is given (one sheet per segment), else `f(x)`.
    """
    total = None
    for k in range(len(waypoints) - 1):
        if sheets is None:
            seg = quad_segment(f, waypoints[k], waypoints[k + 1], rtol=rtol)
        else:
            s = sheets[k]
            seg = quad_segment(lambda x, s=s: f(x, s), waypoints[k],
                               waypoints[k + 1], rtol=rtol)
        total = seg if total is None else total + seg
    return total
