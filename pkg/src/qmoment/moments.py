"""Even moments of the weighted q-measure.

The weight family is ``w_p(x) = e(-x**(2p), q**(2p))`` on the grid
``{q**k}`` with density ``x**(2v+1)``; moments are computed by direct
Jackson summation and by the closed form obtained from Ramanujan's
bilateral 1psi1 sum.  The measure is treated as even: ``s_{2n}`` is the
half-line integral of ``x**(2n) w(x)`` and odd moments are identically zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

from .errors import DomainError, PoleError, TailWarning, ValidationError
from .qcore import (
    DEFAULT_PRECISION,
    GridFunction,
    QContext,
    as_fraction,
    grid_points,
    jackson_integral,
    mpctx,
    q_exp,
    qpochhammer_inf,
    to_mpf,
    vanishing_index,
)

DIRECT = "direct"
CLOSED_FORM = "closed_form"
GIVEN = "given"


@dataclass(frozen=True)
class WeightSpec:
    """Either the family ``e(-x^(2p), q^(2p))`` or a grid-sampled custom weight.

    ``samples`` holds the values of the weight itself (omega squared), not of
    omega.
    """

    p: Fraction | None = None
    samples: GridFunction | None = None

    def __post_init__(self):
        if (self.p is None) == (self.samples is None):
            raise ValidationError("give exactly one of p (family) or samples (custom)")
        if self.p is not None:
            object.__setattr__(self, "p", as_fraction(self.p))
            if self.p <= 0:
                raise ValidationError(f"family exponent p must be positive, got {self.p}")

    @classmethod
    def family(cls, p) -> "WeightSpec":
        return cls(p=p)

    @classmethod
    def custom(cls, samples: GridFunction, require_positive: bool = True) -> "WeightSpec":
        """Custom weight; ``require_positive=False`` admits zero-extended weights."""
        vals = samples.as_list()
        if require_positive and any(v <= 0 for v in vals):
            raise ValidationError("custom weight must be positive at every grid point")
        if any(v < 0 for v in vals) or all(v == 0 for v in vals):
            raise ValidationError("custom weight must be non-negative and not identically zero")
        return cls(samples=samples)

    @property
    def is_family(self) -> bool:
        return self.p is not None

    def sample(self, ctx: QContext) -> GridFunction:
        if self.samples is not None:
            if self.samples.ctx.window != ctx.window:
                raise ValidationError("custom weight sampled on a different window")
            return GridFunction(ctx, dict(self.samples.values))
        m = ctx.mp
        Q = ctx.qf() ** to_mpf(m, 2 * self.p)
        return GridFunction.from_callable(ctx, lambda x: q_exp(-(x ** to_mpf(m, 2 * self.p)), Q, ctx))

    def describe(self) -> str:
        return f"family(p={self.p})" if self.is_family else "custom"


@dataclass(frozen=True)
class MomentEntry:
    n: int
    value: object  # s_{2n}
    method: str
    exponent: Fraction | None = None  # exact 2p*sigma(n/p), family closed form only


@dataclass(frozen=True)
class MomentSequence:
    """Even moments ``s_0, s_2, ..., s_{2N}`` of a symmetric measure."""

    entries: tuple[MomentEntry, ...]
    ctx: QContext | None = None
    weight: WeightSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for i, e in enumerate(self.entries):
            if e.n != i:
                raise ValidationError("moment entries must be indexed 0, 1, 2, ... without gaps")
            if not e.value > 0:
                raise ValidationError(f"even moment s_{2 * e.n} must be positive, got {e.value}")

    @classmethod
    def from_values(cls, values: Sequence, ctx: QContext | None = None) -> "MomentSequence":
        """Wrap externally supplied even moments ``[s_0, s_2, ...]``."""
        m = ctx.mp if ctx is not None else mpctx(DEFAULT_PRECISION)
        return cls(tuple(MomentEntry(n, to_mpf(m, v), GIVEN) for n, v in enumerate(values)), ctx)

    @property
    def mp(self):
        return self.ctx.mp if self.ctx is not None else mpctx(DEFAULT_PRECISION)

    @property
    def n_max(self) -> int:
        return len(self.entries) - 1

    def __len__(self):
        return len(self.entries)

    def even(self, n: int):
        """``s_{2n}`` rounded into the caller's context."""
        return to_mpf(self.mp, self.entries[n].value)

    def s(self, j: int):
        """Moment of order ``j``; odd orders vanish by symmetry."""
        if j % 2:
            return self.mp.zero
        return self.even(j // 2)

    def values(self) -> list:
        return [self.even(n) for n in range(len(self.entries))]


def moment_direct(n: int, w: WeightSpec, ctx: QContext):
    """``s_{2n}`` by Jackson summation of ``x**(2n) w(x)`` over the window."""
    return direct_moments(n, w, ctx).even(n)


def direct_moments(n_max: int, w: WeightSpec, ctx: QContext) -> MomentSequence:
    """``s_0..s_{2 n_max}`` by direct summation, sampling the weight only once."""
    weight = w.sample(ctx)
    pts = grid_points(ctx)
    entries = []
    for n in range(n_max + 1):
        integrand = GridFunction(ctx, {k: pts[k] ** (2 * n) * weight[k] for k in ctx.window})
        entries.append(MomentEntry(n, jackson_integral(integrand, ctx), DIRECT))
    return MomentSequence(tuple(entries), ctx, w)


def sigma_exponent(alpha) -> Fraction:
    """``([a]/2 - a)([a] + 1)`` with ``[a]`` the floor, in exact arithmetic."""
    a = as_fraction(alpha)
    if a < 0:
        raise ValidationError("alpha must be non-negative")
    fl = math.floor(a)
    return (Fraction(fl, 2) - a) * (fl + 1)


def _power(m, base, exponent: Fraction):
    if exponent.denominator == 1:
        return base ** int(exponent)
    return base ** to_mpf(m, exponent)


def C_prefactor(alpha, q_base, z, ctx: QContext):
    """Prefactor ``C(alpha, Q, z)`` of the asymptotic moment factorisation.

    With ``m = floor(alpha)`` and ``f = alpha - m``::

        C = (-Q^a z, Q, Q)_inf / (-1, Q^a z, -Q, Q)_inf
            * prod_{i=0}^{m} (1 + Q^(i+f-1) z)
            * (-Q^(m+2-a) / z; Q)_inf
            * (Q / z)^(m+1)

    so that ``sum_k (Q^a z)^k / (-Q^k; Q)_inf = C * Q^sigma(a)``.
    """
    m = ctx.mp
    a = as_fraction(alpha)
    if a < 0:
        raise ValidationError("alpha must be non-negative")
    Q, z = to_mpf(m, q_base), to_mpf(m, z)
    if not 0 < Q < 1:
        raise ValidationError("q_base must lie in (0, 1)")
    if z == 0:
        raise PoleError("z = 0 makes (Q/z) singular")
    fl = math.floor(a)
    frac = a - fl
    Qa = _power(m, Q, a)
    if vanishing_index(Qa * z, Q, m) is not None:
        raise PoleError("(Q^alpha z; Q)_inf vanishes")
    ratio = (
        qpochhammer_inf(-Qa * z, Q, ctx)
        * qpochhammer_inf(Q, Q, ctx)
        / (qpochhammer_inf(-1, Q, ctx) * qpochhammer_inf(Qa * z, Q, ctx) * qpochhammer_inf(-Q, Q, ctx))
    )
    finite = m.one
    Qf = _power(m, Q, frac) / Q
    for i in range(fl + 1):
        finite *= 1 + Q**i * Qf * z
    tail = qpochhammer_inf(-_power(m, Q, fl + 2 - a) / z, Q, ctx)
    return ratio * finite * tail * (Q / z) ** (fl + 1)


def moment_closed_form(n: int, p, ctx: QContext) -> MomentEntry:
    """``s_{2n} = (1-q) C(n/p, q^(2p), q^(2v+2)) q^(2p sigma(n/p))``.

    The returned entry carries the exact exponent ``2p sigma(n/p)``.
    """
    p = as_fraction(p)
    if p <= 0:
        raise ValidationError("p must be positive")
    m = ctx.mp
    q = ctx.qf()
    alpha = Fraction(n) / p
    exponent = 2 * p * sigma_exponent(alpha)
    Q = _power(m, q, 2 * p)
    z = _power(m, q, 2 * ctx.v + 2)
    value = (1 - q) * C_prefactor(alpha, Q, z, ctx) * _power(m, q, exponent)
    return MomentEntry(n, value, CLOSED_FORM, exponent)


def closed_form_moments(n_max: int, p, ctx: QContext) -> MomentSequence:
    return MomentSequence(
        tuple(moment_closed_form(n, p, ctx) for n in range(n_max + 1)), ctx, WeightSpec.family(p)
    )


def prefactor_log_limit(p, v) -> Fraction:
    """Exact limit of ``log_q [(1-q) C(n/p, q^(2p), q^(2v+2))]^(1/2n)``.

    Equals ``(p - v - 1)/p``; the root of the prefactor tends to one only
    when ``p = v + 1``.
    """
    p, v = as_fraction(p), as_fraction(v)
    return (p - v - 1) / p


class RamanujanCheck(NamedTuple):
    lhs: object
    rhs: object
    rel_err: object


def _bilateral_half(terms_at, ks, tol, m):
    """Sum terms along ``ks`` until 5 consecutive terms fall below tol * |sum|."""
    total = m.zero
    quiet = 0
    for k in ks:
        t = terms_at(k)
        total += t
        quiet = quiet + 1 if abs(t) <= tol * abs(total) else 0
        if quiet >= 5:
            return total, True
    return total, False


def ramanujan_check(b, z, q, ctx: QContext) -> RamanujanCheck:
    """Compare ``sum_k z^k / (b q^k; q)_inf`` with its product form.

    The sum runs outward from ``k = 0`` in both directions, each direction
    stopping on its own; ``ctx`` supplies precision, window and tolerance.
    """
    m = ctx.mp
    b, z, q = to_mpf(m, b), to_mpf(m, z), to_mpf(m, q)
    if not 0 < q < 1:
        raise ValidationError("base q must lie in (0, 1)")
    if z == 0 or abs(z) >= 1:
        raise DomainError(f"bilateral series needs 0 < |z| < 1, got z={mpctx(53).mpf(z)}")
    if b == 0:
        raise DomainError("b = 0 leaves the bilateral identity undefined")
    for name, val in (("b", b), ("z", z), ("q/b", q / b)):
        if vanishing_index(val, q, m) is not None:
            raise PoleError(f"({name}; q)_inf vanishes")

    def term(k):
        arg = b * q**k
        if vanishing_index(arg, q, m) is not None:
            raise PoleError(f"(b q^{k}; q)_inf vanishes")
        return z**k / qpochhammer_inf(arg, q, ctx)

    upper, up_ok = _bilateral_half(term, range(0, ctx.k_max + 1), ctx.tail_tol, m)
    lower, low_ok = _bilateral_half(term, range(-1, ctx.k_min - 1, -1), ctx.tail_tol, m)
    if not (up_ok and low_ok):
        warnings.warn("bilateral sum not settled inside the window; widen it", TailWarning, stacklevel=2)
    lhs = upper + lower
    P = lambda x: qpochhammer_inf(x, q, ctx)  # noqa: E731
    rhs = P(b * z) * P(q / (b * z)) * P(q) * P(q) / (P(b) * P(z) * P(q / b) * P(q))
    return RamanujanCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs))


def _log_qexp_neg(y_log: float, Q_log: float) -> float:
    """``log e(-y; Q)`` for ``y = exp(y_log)``, ``Q = exp(Q_log)``, in floats."""
    total = 0.0
    i = 0
    while True:
        t = y_log + i * Q_log
        if t < -80:
            break
        total += max(t, 0.0) + math.log1p(math.exp(-abs(t)))
        i += 1
    return -total


def fit_window(q, v, p, n_max: int, tol: float = 1e-30, limit: int = 100_000) -> tuple[int, int]:
    """Grid window holding the family-weight moments ``s_0..s_{2 n_max}``.

    Both truncated tails are bounded by ``tol`` relative to the sum.  The
    estimate runs in floating point on logarithms of the terms.
    """
    q, v, p = float(as_fraction(q)), float(as_fraction(v)), float(as_fraction(p))
    lq = math.log(q)
    Q_log = 2 * p * lq
    w = 2 * v + 2
    # upper end: weight <= 1, terms <= q^(k w); compare with the k = 0 term
    t0 = _log_qexp_neg(0.0, Q_log)
    budget = math.log(tol) + t0 + math.log1p(-q**w)
    k_max = max(8, math.ceil(budget / (w * lq)) + 1)

    def log_term(n, k):
        return (2 * n + w) * k * lq + _log_qexp_neg(2 * p * k * lq, Q_log)

    peak = -math.inf
    k_min = -8
    for j in range(limit):
        t = log_term(n_max, -j)
        peak = max(peak, t)
        nxt = log_term(n_max, -j - 1)
        if nxt < t - math.log(2) and nxt < peak + math.log(tol):
            k_min = min(k_min, -j - 2)
            break
    else:
        raise ValidationError("could not bound the lower tail; check parameters")
    return k_min, k_max
