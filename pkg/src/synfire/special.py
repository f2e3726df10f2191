"""Dawson-type integrals used by the first-passage-time (Siegert) maps.

Everything here is expressed through the scaled complementary error
function ``erfcx``, which is stable over the whole real line:

    D-(u)        = exp(u^2) * int_{-inf}^{u} exp(-v^2) dv
                 = (sqrt(pi)/2) * erfcx(-u)
    D-xD-(u)     = exp(u^2) * int_{-inf}^{u} exp(-v^2) * D-(v)^2 dv

``D-`` grows like exp(u^2) and overflows double precision near u = 26.6;
``D-xD-`` grows like exp(2*u^2).  The integral helpers therefore work with
the scaled inner integrand ``exp(-v^2) D-(v)^2`` (tabulated once) and with
asymptotic tail primitives, so that integrals over physically relevant
ranges stay finite even where the raw factors would overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erf, erfcx

from .errors import ConvergenceError, DomainError

SQRT_PI = math.sqrt(math.pi)
LOG_SQRT_PI = 0.5 * math.log(math.pi)

# Branch boundaries.  The dense inner-integral table covers [TAB_LO, TAB_HI];
# outside it the asymptotic series below are accurate to ~1e-5 relative or
# better, and those regions are never exercised by the Siegert maps.
TAB_LO = -12.0
TAB_HI = 11.0
TAB_STEP = 1e-3
_LEFT_SERIES_EDGE = -8.0  # deep-left analytic primitive for D- integrals

# 12-point Gauss-Legendre rule, used per 0.25-wide panel.  For integrands of
# local exponential rate <= 4*u ~ 44 this is accurate to far below 1e-12.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_PANEL_WIDTH = 0.25


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive integrals."""

    relative_tolerance: float = 1e-9
    absolute_tolerance: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def _check_finite(u, name="u"):
    if not np.all(np.isfinite(u)):
        raise DomainError(f"{name} must be finite")


def dawson_minus(u):
    """D-(u) = exp(u^2) * int_{-inf}^u exp(-v^2) dv.

    Strictly positive and strictly increasing.  Overflows to ``inf`` for
    u > ~26.6; use :func:`log_dawson_minus` there.
    """
    arr = np.asarray(u, dtype=float)
    _check_finite(arr)
    with np.errstate(over="ignore"):
        out = 0.5 * SQRT_PI * erfcx(-arr)
    return out if arr.ndim else float(out)


def log_dawson_minus(u):
    """ln D-(u), stable for arbitrarily large positive u."""
    scalar = np.ndim(u) == 0
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    _check_finite(arr)
    out = np.empty_like(arr, dtype=float)
    neg = arr <= 0.0
    out[neg] = math.log(0.5 * SQRT_PI) + np.log(erfcx(-arr[neg]))
    pos = ~neg
    # erfcx(-u) = exp(u^2) * (1 + erf(u)); log1p keeps full precision and
    # saturates to u^2 + ln(sqrt(pi)) once erf(u) rounds to 1.
    out[pos] = arr[pos] ** 2 + math.log(0.5 * SQRT_PI) + np.log1p(erf(arr[pos]))
    return float(out[0]) if scalar else out


def passage_bound(xi, y, z, L):
    """Normalized first-passage bound (xi*L - y) / z."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr <= 0.0):
        raise DomainError("z must be positive")
    out = (np.asarray(xi, dtype=float) * L - np.asarray(y, dtype=float)) / z_arr
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Inner integral table:  T(u) = int_{-inf}^{u} exp(-v^2) D-(v)^2 dv
# ---------------------------------------------------------------------------

def _scaled_tensor_integrand(v):
    # exp(-v^2) * D-(v)^2 = (pi/4) * exp(-v^2) * erfcx(-v)^2
    v = np.asarray(v, dtype=float)
    with np.errstate(over="ignore", under="ignore"):
        return 0.25 * math.pi * np.exp(-v * v) * erfcx(-v) ** 2


def _tensor_left_series(u):
    """D-xD-(u) for u << 0 (asymptotic in powers of 1/u^2)."""
    u = np.asarray(u, dtype=float)
    iu2 = 1.0 / (u * u)
    return (-1.0 / (8.0 * u**3)) + iu2 * (5.0 / (16.0 * u**3)) \
        - iu2**2 / u**3 + (65.0 / 16.0) * iu2**3 / u**3


def _tensor_right_series(u):
    """D-xD-(u) for u >> 0: pi*exp(2u^2)*(1/(2u) + 1/(4u^3) + ...)."""
    u = np.asarray(u, dtype=float)
    iu2 = 1.0 / (u * u)
    poly = 0.5 / u * (1.0 + 0.5 * iu2 + 0.75 * iu2**2 + 1.875 * iu2**3)
    with np.errstate(over="ignore"):
        return math.pi * np.exp(2.0 * u * u) * poly


class _InnerTable:
    """Dense cumulative table of the scaled inner integrand.

    Built once on first use, read-only afterwards (safe to share across
    threads).  Values are interpolated with cubic Hermite segments using the
    analytically known slope T'(u) = exp(-u^2) D-(u)^2, giving relative
    interpolation error below 1e-9 at the chosen step.
    """

    def __init__(self):
        n = int(round((TAB_HI - TAB_LO) / TAB_STEP)) + 1
        self.grid = np.linspace(TAB_LO, TAB_HI, n)
        self.slope = _scaled_tensor_integrand(self.grid)
        # per-panel Gauss-Legendre, then cumulative sum; seeded with the
        # asymptotic tail mass below TAB_LO
        a = self.grid[:-1]
        h = TAB_STEP
        x = a[:, None] + 0.5 * h * (_GL_X[None, :] + 1.0)
        panel = 0.5 * h * (_scaled_tensor_integrand(x) * _GL_W[None, :]).sum(axis=1)
        seed = math.exp(-TAB_LO * TAB_LO) * float(_tensor_left_series(TAB_LO))
        self.value = np.empty(n)
        self.value[0] = seed
        np.cumsum(panel, out=self.value[1:])
        self.value[1:] += seed

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        pos = np.clip((u - TAB_LO) / TAB_STEP, 0.0, len(self.grid) - 1.001)
        i = pos.astype(np.int64)
        t = pos - i
        y0 = self.value[i]
        y1 = self.value[i + 1]
        m0 = self.slope[i] * TAB_STEP
        m1 = self.slope[i + 1] * TAB_STEP
        t2 = t * t
        t3 = t2 * t
        return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0
                + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1)


_table = None


def _inner_table():
    global _table
    if _table is None:
        _table = _InnerTable()
    return _table


def dawson_tensor(u):
    """D-xD-(u) = exp(u^2) * int_{-inf}^u exp(-v^2) D-(v)^2 dv."""
    scalar = np.ndim(u) == 0
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    _check_finite(arr)
    out = np.empty_like(arr, dtype=float)
    lo = arr < TAB_LO
    hi = arr > TAB_HI
    mid = ~(lo | hi)
    if np.any(lo):
        out[lo] = _tensor_left_series(arr[lo])
    if np.any(hi):
        out[hi] = _tensor_right_series(arr[hi])
    if np.any(mid):
        um = arr[mid]
        with np.errstate(over="ignore"):
            out[mid] = np.exp(um * um) * _inner_table()(um)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Integrals of D- and D-xD- over finite ranges
# ---------------------------------------------------------------------------

def _dminus_left_primitive(u):
    # antiderivative of the deep-left asymptotic of D- (valid u <= -8)
    u = np.asarray(u, dtype=float)
    iu2 = 1.0 / (u * u)
    return -0.5 * np.log(-u) - 0.125 * iu2 + (3.0 / 32.0) * iu2**2 \
        - (5.0 / 32.0) * iu2**3


def _dtensor_left_primitive(u):
    # antiderivative of _tensor_left_series (valid u <= TAB_LO)
    u = np.asarray(u, dtype=float)
    iu2 = 1.0 / (u * u)
    return iu2 / 16.0 - (5.0 / 64.0) * iu2**2 + iu2**3 / 6.0 \
        - (65.0 / 128.0) * iu2**4


def _panel_integral(f, a, b):
    """Composite Gauss-Legendre of f over [a, b] elementwise (b >= a)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros(a.shape)
    span = b - a
    m = np.maximum(1, np.ceil(span / _PANEL_WIDTH).astype(np.int64))
    m[span <= 0] = 0
    for mv in np.unique(m):
        if mv == 0:
            continue
        sel = m == mv
        aa = a[sel][:, None]
        h = (span[sel] / mv)[:, None]
        starts = aa + h * np.arange(mv)[None, :]
        x = starts[:, :, None] + 0.5 * h[:, :, None] * (_GL_X + 1.0)
        vals = (f(x.ravel()).reshape(x.shape) * _GL_W).sum(axis=2)
        out[sel] = (0.5 * h[:, 0]) * vals.sum(axis=1)
    return out


def _split_integral(f, primitive, edge, a, b):
    """int_a^b f, with the part below `edge` taken from the analytic
    primitive and the rest from panel quadrature.  Requires b >= a."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    total = np.zeros(np.broadcast(a, b).shape)
    a, b = np.broadcast_arrays(a, b)
    a = a.astype(float)
    b = b.astype(float)
    cut_a = np.minimum(a, edge)
    cut_b = np.minimum(b, edge)
    deep = cut_b > cut_a
    if np.any(deep):
        total[deep] = primitive(cut_b[deep]) - primitive(cut_a[deep])
    pa = np.maximum(a, edge)
    pb = np.maximum(b, edge)
    total += _panel_integral(f, pa, np.maximum(pa, pb))
    return total


def integral_dminus(a, b):
    """Vectorized int_a^b D-(u) du (signed; antisymmetric by construction)."""
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    sign = np.where(b >= a, 1.0, -1.0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    val = _split_integral(dawson_minus, _dminus_left_primitive,
                          _LEFT_SERIES_EDGE, lo, hi)
    out = sign * val
    return float(out[0]) if scalar else out


def _dtensor_panel_integrand(u):
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(u * u) * _inner_table()(u)


def integral_dtensor(a, b):
    """Vectorized int_a^b D-xD-(u) du (signed)."""
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    sign = np.where(b >= a, 1.0, -1.0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    val = _split_integral(_dtensor_panel_integrand, _dtensor_left_primitive,
                          TAB_LO, lo, hi)
    out = sign * val
    return float(out[0]) if scalar else out


def _adaptive(f, a, b, spec):
    if not (np.isfinite(a) and np.isfinite(b)):
        raise DomainError("integration bounds must be finite")
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b = b, a
        sign = -1.0
    result = quad(f, a, b, epsabs=spec.absolute_tolerance,
                  epsrel=spec.relative_tolerance,
                  limit=spec.max_subdivisions, full_output=True)
    value, abserr = result[0], result[1]
    if len(result) > 3:  # warning message present: tolerance not reached
        raise ConvergenceError(
            f"quadrature did not converge on [{a}, {b}]: {result[3]}",
            estimate=sign * value)
    tol = max(spec.absolute_tolerance, spec.relative_tolerance * abs(value))
    if abserr > tol * 10.0:
        raise ConvergenceError(
            f"quadrature error estimate {abserr:.3e} above tolerance on "
            f"[{a}, {b}]", estimate=sign * value)
    return sign * value


def integrate_dminus(a, b, spec=DEFAULT_QUADRATURE):
    """Adaptive int_a^b D-(u) du to the requested tolerance."""
    return _adaptive(lambda u: dawson_minus(float(u)), a, b, spec)


def integrate_dtensor(a, b, spec=DEFAULT_QUADRATURE):
    """Adaptive int_a^b D-xD-(u) du to the requested tolerance."""
    return _adaptive(lambda u: dawson_tensor(float(u)), a, b, spec)
