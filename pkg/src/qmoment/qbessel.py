"""Normalized third-kind (Hahn-Exton) q-Bessel function and its transform.

    j_v(x, q^2) = sum_n (-1)^n q^(n(n+1)) x^(2n) / ((q^2; q^2)_n (q^(2v+2); q^2)_n)

The transform on the grid is

    F f(lam) = c_qv (1-q) sum_k q^(k(2v+2)) f(q^k) j_v(lam q^k, q^2)

and with ``c_qv = (q^(2v+2); q^2)_inf / ((1-q) (q^2; q^2)_inf)`` it is an
involution on the untruncated grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import PrecisionOverflowError, ValidationError
from .qcore import GridFunction, as_fraction, QContext, jackson_sum, jackson_terms, q_exp, qpochhammer_inf, to_mpf

GUARD_BITS = 32


def _peak_term_log2(x2_log2: float, q: float, v: float) -> float:
    """log2 of the largest |term| of the series, in floating point."""
    lq = math.log2(q)
    a = q ** (2 * v + 2)
    cur = peak = 0.0
    n = 0
    while True:
        n += 1
        cur += 2 * n * lq + x2_log2 - math.log2(1 - q ** (2 * n)) - math.log2(1 - a * q ** (2 * n - 2))
        peak = max(peak, cur)
        if cur < peak - 64:
            return peak


def _sum_series(x2, q2, a, m, stop_bits: int):
    """Alternating series at the current precision of ``m``.

    Stops once past the largest term and a term drops below
    ``2**-stop_bits`` times that largest term.
    """
    term = m.one
    total = m.one
    biggest = m.one
    n = 0
    while True:
        n += 1
        term = -term * q2**n * x2 / ((1 - q2**n) * (1 - a * q2 ** (n - 1)))
        total += term
        mag = abs(term)
        if mag > biggest:
            biggest = mag
        elif mag < m.ldexp(biggest, -stop_bits):
            return total, biggest


def _adaptive_j(x_at, x_log2: float, ctx: QContext):
    """Sum the series with ``x = x_at(m)`` formed inside the raised precision."""
    m = ctx.mp
    base = ctx.precision
    ceiling = ctx.ceiling_factor * base
    peak_log2 = _peak_term_log2(2 * x_log2, float(ctx.q), float(ctx.v))
    extra = max(0, math.ceil(peak_log2)) + GUARD_BITS
    while True:
        work = base + extra
        if work > ceiling:
            raise PrecisionOverflowError(f"j_v needs {work} bits at log2|x| = {x_log2:.1f}, ceiling is {ceiling}")
        with m.workprec(work):
            q = to_mpf(m, ctx.q)
            q2 = q * q
            a = q ** to_mpf(m, 2 * ctx.v + 2)
            total, biggest = _sum_series(x_at(m) ** 2, q2, a, m, work)
            if total == 0:
                lost = work
            else:
                lost = max(0, int(m.ceil(m.log(biggest / abs(total), 2))))
        if lost + GUARD_BITS <= extra:
            return +total  # rounds back to the base precision
        extra = lost + 2 * GUARD_BITS


def qbessel_j(x, ctx: QContext):
    """``j_v(x, q^2)`` with ``q, v`` from ``ctx``, accurate to working precision.

    Precision is raised by the number of bits lost to cancellation
    (log2 of largest term over result); :class:`PrecisionOverflowError` if
    that exceeds ``ctx.ceiling_factor * ctx.precision`` bits.  For large
    ``|x|`` the function is badly conditioned in ``x``: the value returned
    is exact for the argument as given (pass a Fraction or string to avoid
    rounding it first), see :func:`qbessel_j_grid` for grid points.
    """
    m = ctx.mp
    if isinstance(x, (int, str)) or hasattr(x, "denominator"):
        exact = as_fraction(x)
        if exact == 0:
            return m.one
        return _adaptive_j(lambda mm: to_mpf(mm, exact), math.log2(abs(exact)), ctx)
    x = to_mpf(m, x)
    if x == 0:
        return m.one
    return _adaptive_j(lambda mm: +x, float(m.log(abs(x), 2)), ctx)


def qbessel_j_grid(s: int, ctx: QContext):
    """``j_v(q^s, q^2)`` with ``q^s`` formed at the raised precision."""
    return _adaptive_j(lambda mm: to_mpf(mm, ctx.q) ** s, s * math.log2(float(ctx.q)), ctx)


def default_c_qv(ctx: QContext):
    """``(q^(2v+2); q^2)_inf / ((1-q) (q^2; q^2)_inf)``."""
    m = ctx.mp
    q = ctx.qf()
    q2 = q * q
    a = q ** to_mpf(m, 2 * ctx.v + 2)
    return qpochhammer_inf(a, q2, ctx) / ((1 - q) * qpochhammer_inf(q2, q2, ctx))


@dataclass(frozen=True, eq=False)
class QBesselTransform:
    """Truncated q-Bessel Fourier transform on the window ``[lo, hi]``.

    ``kernel[i][k] = c_qv (1-q) q^(k(2v+2)) j_v(q^(i+k), q^2)``, indices
    relative to ``lo``.  Immutable once built.
    """

    ctx: QContext
    c_qv: object
    lo: int
    hi: int
    kernel: tuple

    @classmethod
    def build(cls, ctx: QContext, c_qv=None, window: tuple[int, int] | None = None) -> "QBesselTransform":
        m = ctx.mp
        lo, hi = window if window is not None else (ctx.k_min, ctx.k_max)
        if lo > hi:
            raise ValidationError("empty transform window")
        c = default_c_qv(ctx) if c_qv is None else to_mpf(m, c_qv)
        q = ctx.qf()
        w = to_mpf(m, 2 * ctx.v + 2)
        # j_v depends on i + k only
        jcache = {s: qbessel_j_grid(s, ctx) for s in range(2 * lo, 2 * hi + 1)}
        scale = c * (1 - q)
        weights = [scale * q ** (k * w) for k in range(lo, hi + 1)]
        kernel = tuple(
            tuple(weights[k - lo] * jcache[i + k] for k in range(lo, hi + 1))
            for i in range(lo, hi + 1)
        )
        return cls(ctx, c, lo, hi, kernel)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def scaled(self, factor) -> "QBesselTransform":
        m = self.ctx.mp
        f = to_mpf(m, factor)
        kernel = tuple(tuple(f * to_mpf(m, e) for e in row) for row in self.kernel)
        return QBesselTransform(self.ctx, f * to_mpf(m, self.c_qv), self.lo, self.hi, kernel)

    def matrix(self):
        return self.ctx.mp.matrix([list(row) for row in self.kernel])


def _check_window(f: GridFunction, t: QBesselTransform):
    if (f.ctx.k_min, f.ctx.k_max) != (t.lo, t.hi):
        raise ValidationError("grid function and transform use different windows")


def qfourier(f: GridFunction, t: QBesselTransform) -> GridFunction:
    """Transform of ``f`` at every grid point ``lam = q^i`` of the window."""
    _check_window(f, t)
    m = f.ctx.mp
    # L^1 condition: the weighted series of |f| must not diverge on the window
    jackson_sum(f.map(abs))
    vals = [f[k] for k in f]
    out = {}
    for i, row in zip(f, t.kernel):
        out[i] = m.fdot(row, vals)
    return GridFunction(f.ctx, out)


def injectivity_diagnostic(t: QBesselTransform):
    """Smallest singular value of the kernel matrix."""
    m = t.ctx.mp
    sv = m.svd_r(t.matrix(), compute_uv=False)
    return min(abs(s) for s in sv)


def _inner(f: GridFunction, g: GridFunction):
    # finite-window inner product; no tail guard, residuals sit at rounding level
    m = f.ctx.mp
    terms = jackson_terms(f * g)
    return (1 - f.ctx.qf()) * m.fsum(terms.values())


def l2_norm(f: GridFunction):
    """Norm in ``L^2(x^(2v+1) d_q x)`` over the window."""
    return f.ctx.mp.sqrt(abs(_inner(f, f)))


def involution_residual(f: GridFunction, t: QBesselTransform):
    """``||F F f - f|| / ||f||`` in the weighted L^2 norm."""
    back = qfourier(qfourier(f, t), t)
    return l2_norm(back - f) / l2_norm(f)


def involution_window(ctx: QContext, tol: float = 1e-20) -> tuple[int, int]:
    """Padded window on which functions supported in ``ctx.window`` invert cleanly.

    The upper pad makes ``q^(k(2v+2))`` negligible; the lower pad makes
    ``j_v`` at the far negative grid indices negligible (it decays like
    ``q^(k^2)`` there).
    """
    lq = -math.log(float(ctx.q))
    w = float(2 * ctx.v + 2)
    up = math.ceil(-math.log(tol) / (w * lq))
    width = ctx.k_max - ctx.k_min
    down = 1
    while down * down * lq - w * (width + down) * lq < -math.log(tol) + 10:
        down += 1
    return ctx.k_min - down, ctx.k_max + up


class Calibration(NamedTuple):
    c_default: object
    scale: object  # measured <F F f, f> / <f, f> with the default constant
    c_calibrated: object
    residual: object  # involution residual with the calibrated constant
    window: tuple[int, int]


def calibrate(ctx: QContext, test_functions: Sequence[GridFunction] | None = None, tol: float = 1e-20) -> Calibration:
    """Measure the involution scale of ``default_c_qv`` and correct for it.

    Test functions are given on ``ctx``'s window and zero-padded onto
    :func:`involution_window`.  With the default constant the scale is one
    to within the truncation error.
    """
    lo, hi = involution_window(ctx, tol)
    wide = ctx.with_window(lo, hi)
    if test_functions is None:
        test_functions = default_test_functions(ctx)
    padded = [
        GridFunction(wide, {k: (f[k] if k in ctx.window else 0) for k in wide.window}) for f in test_functions
    ]
    t = QBesselTransform.build(wide)
    m = wide.mp
    num = m.zero
    den = m.zero
    for f in padded:
        num += _inner(qfourier(qfourier(f, t), t), f)
        den += _inner(f, f)
    scale = num / den
    c_cal = t.c_qv / m.sqrt(scale)
    t_cal = t.scaled(1 / m.sqrt(scale))
    residual = max(involution_residual(f, t_cal) for f in padded)
    return Calibration(t.c_qv, scale, c_cal, residual, (lo, hi))


def default_test_functions(ctx: QContext) -> list[GridFunction]:
    """``e(-x^2, q^2)`` restricted to the window, and atoms at its centre and edges."""
    q2 = ctx.qf() ** 2
    gauss = GridFunction.from_callable(ctx, lambda x: q_exp(-x * x, q2, ctx))
    atoms = [GridFunction.atom(ctx, k) for k in sorted({ctx.k_min, 0, ctx.k_max})]
    return [gauss, *atoms]
