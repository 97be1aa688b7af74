"""Extended-precision q-arithmetic on the geometric grid.

All scalars are :mod:`mpmath` reals.  Each thread gets its own
``MPContext`` per precision, so adaptive precision changes made by one
caller can never leak into another.  Values produced under one context are
re-rounded into the caller's context on entry to every public function.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Mapping, NamedTuple

import mpmath

from .errors import PoleError, TailDivergenceError, TailWarning, ValidationError

DEFAULT_PRECISION = 256
DEFAULT_WINDOW = (-64, 64)
DEFAULT_TAIL_TOL = 1e-30

_local = threading.local()


def mpctx(precision: int) -> mpmath.ctx_mp.MPContext:
    """Return this thread's mpmath context running at ``precision`` bits."""
    cache = getattr(_local, "contexts", None)
    if cache is None:
        cache = _local.contexts = {}
    m = cache.get(precision)
    if m is None:
        m = mpmath.MPContext()
        m.prec = precision
        cache[precision] = m
    return m


def as_fraction(value) -> Fraction:
    """Exact rational from int, Fraction, decimal string or float.

    Floats go through ``repr`` so that ``0.3`` means 3/10, not the nearest
    binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite parameter {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse {value!r} as a rational") from exc
    raise ValidationError(f"expected a rational parameter, got {type(value).__name__}")


def to_mpf(m, value):
    """Convert ``value`` (Fraction, int, float, str, mpf of any context) into ``m``."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return m.mpf(value.numerator)
        return m.mpf(value.numerator) / value.denominator
    if isinstance(value, complex) or hasattr(value, "_mpc_"):
        return m.mpc(value)
    return m.mpf(value)


@dataclass(frozen=True)
class QContext:
    """Global parameters shared by every evaluation.

    ``q`` and ``v`` are kept as exact rationals; they are rounded to
    ``precision`` bits only when a computation needs them.  The grid is
    ``{q**k : k_min <= k <= k_max}``.
    """

    q: Fraction
    v: Fraction = Fraction(0)
    precision: int = DEFAULT_PRECISION
    k_min: int = DEFAULT_WINDOW[0]
    k_max: int = DEFAULT_WINDOW[1]
    tail_tol: float = DEFAULT_TAIL_TOL
    ceiling_factor: int = 16

    def __post_init__(self):
        object.__setattr__(self, "q", as_fraction(self.q))
        object.__setattr__(self, "v", as_fraction(self.v))
        if not 0 < self.q < 1:
            raise ValidationError(f"q must lie in (0, 1), got {self.q}")
        if not self.v > -1:
            raise ValidationError(f"v must exceed -1, got {self.v}")
        if int(self.precision) != self.precision or self.precision < 64:
            raise ValidationError(f"precision must be an integer >= 64, got {self.precision}")
        if not self.k_min < 0 < self.k_max:
            raise ValidationError(f"window must satisfy k_min < 0 < k_max, got [{self.k_min}, {self.k_max}]")
        if not self.tail_tol > 0:
            raise ValidationError("tail_tol must be positive")
        if self.ceiling_factor < 1:
            raise ValidationError("ceiling_factor must be >= 1")

    @property
    def mp(self):
        return mpctx(self.precision)

    @property
    def window(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def qf(self):
        """``q`` rounded to the working precision."""
        return to_mpf(self.mp, self.q)

    def vf(self):
        return to_mpf(self.mp, self.v)

    def with_window(self, k_min: int, k_max: int) -> "QContext":
        return replace(self, k_min=k_min, k_max=k_max)

    def with_precision(self, precision: int) -> "QContext":
        return replace(self, precision=precision)


def _ctx_or_default(ctx: QContext | None):
    return ctx.mp if ctx is not None else mpctx(DEFAULT_PRECISION)


def qpochhammer_finite(x, q, n: int, ctx: QContext | None = None):
    """Finite q-Pochhammer symbol ``prod_{i<n} (1 - q**i * x)``."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    m = _ctx_or_default(ctx)
    x, q = to_mpf(m, x), to_mpf(m, q)
    result = m.one
    term = x
    for _ in range(n):
        result *= 1 - term
        term *= q
    return result


def qpochhammer_inf(x, q, ctx: QContext):
    """Infinite q-Pochhammer symbol ``(x; q)_inf``.

    Stops once a factor is within ``ctx.tail_tol`` of one, after three more
    factors have been multiplied in.
    """
    m = ctx.mp
    x, q = to_mpf(m, x), to_mpf(m, q)
    if not 0 < q < 1:
        raise ValidationError("base must lie in (0, 1)")
    if x == 0:
        return m.one
    tol = ctx.tail_tol
    result = m.one
    term = x
    settled = 0
    while settled <= 3:
        result *= 1 - term
        settled = settled + 1 if abs(term) < tol else 0
        term *= q
    return result


def vanishing_index(x, q, m) -> int | None:
    """Index ``i >= 0`` with ``q**i * x == 1`` at the working precision, if any."""
    if x <= 0:
        return None
    i = int(m.nint(-m.log(x) / m.log(q)))
    if i < 0:
        return None
    if abs(1 - x * q**i) <= m.ldexp(1, 8 - m.prec):
        return i
    return None


def q_exp(x, q, ctx: QContext):
    """q-exponential ``e(x, q) = 1 / (x; q)_inf``."""
    m = ctx.mp
    x, q = to_mpf(m, x), to_mpf(m, q)
    i = vanishing_index(x, q, m)
    if i is not None:
        raise PoleError(f"e(x, q) has a pole: x = q^-{i}")
    return 1 / qpochhammer_inf(x, q, ctx)


def grid_points(ctx: QContext) -> dict[int, object]:
    q = ctx.qf()
    return {k: q**k for k in ctx.window}


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A real function sampled at every point of the context grid."""

    ctx: QContext
    values: Mapping[int, object] = field(repr=False)

    def __post_init__(self):
        keys = set(self.values)
        if keys != set(self.ctx.window):
            raise ValidationError(
                f"grid function domain must be [{self.ctx.k_min}, {self.ctx.k_max}]"
            )
        m = self.ctx.mp
        frozen = {k: to_mpf(m, self.values[k]) for k in self.ctx.window}
        object.__setattr__(self, "values", MappingProxyType(frozen))

    @classmethod
    def from_callable(cls, ctx: QContext, func: Callable) -> "GridFunction":
        """Sample ``func(x)`` at ``x = q**k``; ``func`` receives an mpf."""
        return cls(ctx, {k: func(x) for k, x in grid_points(ctx).items()})

    @classmethod
    def atom(cls, ctx: QContext, k: int, value=1) -> "GridFunction":
        if k not in ctx.window:
            raise ValidationError(f"grid index {k} outside the window")
        return cls(ctx, {j: (value if j == k else 0) for j in ctx.window})

    @classmethod
    def zero(cls, ctx: QContext) -> "GridFunction":
        return cls(ctx, dict.fromkeys(ctx.window, 0))

    def __getitem__(self, k: int):
        return self.values[k]

    def __iter__(self):
        return iter(self.ctx.window)

    def as_list(self) -> list:
        return [self.values[k] for k in self.ctx.window]

    def _combine(self, other: "GridFunction", op) -> "GridFunction":
        if other.ctx.window != self.ctx.window:
            raise ValidationError("grid functions live on different windows")
        return GridFunction(self.ctx, {k: op(self.values[k], other.values[k]) for k in self})

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            return self._combine(other, lambda a, b: a * b)
        c = to_mpf(self.ctx.mp, other)
        return GridFunction(self.ctx, {k: c * val for k, val in self.values.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def map(self, func: Callable) -> "GridFunction":
        return GridFunction(self.ctx, {k: func(val) for k, val in self.values.items()})


class JacksonSum(NamedTuple):
    value: object
    lower_boundary: object  # |term at k_min| / |sum|
    upper_boundary: object  # |term at k_max| / |sum|


def _grows_outward(mags: list) -> bool:
    """True when magnitudes strictly increase along 5 consecutive steps."""
    return len(mags) >= 6 and all(mags[i] > mags[i + 1] for i in range(5))


def jackson_terms(f: GridFunction, ctx: QContext | None = None) -> dict[int, object]:
    """Terms ``q**(k(2v+2)) f(q**k)`` of the weighted Jackson sum (without 1-q)."""
    ctx = ctx or f.ctx
    if ctx.window != f.ctx.window:
        raise ValidationError("grid function window differs from the integration window")
    m = ctx.mp
    q = ctx.qf()
    w = 2 * ctx.v + 2
    qw = q ** to_mpf(m, w)
    base = qw ** ctx.k_min
    out = {}
    for k in ctx.window:
        out[k] = base * to_mpf(m, f.values[k])
        base *= qw
    return out


def jackson_sum(f: GridFunction, ctx: QContext | None = None) -> JacksonSum:
    """Weighted Jackson sum together with its boundary-term diagnostics.

    Raises :class:`TailDivergenceError` when the terms grow over the five
    outermost steps at either end of the window.
    """
    ctx = ctx or f.ctx
    m = ctx.mp
    terms = jackson_terms(f, ctx)
    ks = list(ctx.window)
    lower = [abs(terms[k]) for k in ks[:6]]
    upper = [abs(terms[k]) for k in reversed(ks[-6:])]
    if _grows_outward(lower):
        raise TailDivergenceError(f"weighted terms grow towards k_min={ctx.k_min}")
    if _grows_outward(upper):
        raise TailDivergenceError(f"weighted terms grow towards k_max={ctx.k_max}")
    total = m.fsum(terms[k] for k in ks)
    value = (1 - ctx.qf()) * total
    if total == 0:
        return JacksonSum(value, m.zero, m.zero)
    return JacksonSum(value, abs(terms[ks[0]] / total), abs(terms[ks[-1]] / total))


def jackson_integral(f: GridFunction, ctx: QContext | None = None):
    """``int_0^inf f(x) x^(2v+1) d_q x`` over the truncated grid.

    Emits a :class:`TailWarning` when a boundary term exceeds
    ``tail_tol`` times the sum.
    """
    ctx = ctx or f.ctx
    res = jackson_sum(f, ctx)
    tol = ctx.tail_tol
    if res.lower_boundary > tol or res.upper_boundary > tol:
        warnings.warn(
            f"Jackson sum boundary terms {mpmath.nstr(res.lower_boundary, 3)} (k_min) / "
            f"{mpmath.nstr(res.upper_boundary, 3)} (k_max) exceed tail_tol={tol:g}; widen the window",
            TailWarning,
            stacklevel=2,
        )
    return res.value
