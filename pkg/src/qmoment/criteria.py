"""Finite-horizon diagnostics for determinacy criteria of symmetric moments.

A limit cannot be decided from finitely many moments, so each criterion is
reduced to an explicit rule on its test values ``n = 1..horizon``, fitted
over the last half of the horizon:

* ``perron``      ``(s_{2n}/(2n)!)^(1/2n)`` bounded; the values are fitted
  as ``exp(A n) n^b``.
* ``riesz``       the liminf of the same values, tracked through block
  minima fitted with the same model.
* ``carleman``    ``sum s_{2n}^(-1/2n)`` diverges; ratio limit by
  extrapolation, Raabe's test when the ratios approach one.
* ``q_criterion`` ``q^(n/4) s_{2n}^(1/2n) -> 0`` implies determinacy; slope
  of ``log_q`` of the values.

Exponent bookkeeping for the weight family is exact rational arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InsufficientDataError, ValidationError
from .moments import MomentSequence, as_fraction, sigma_exponent
from .qcore import QContext, qpochhammer_finite, to_mpf

SATISFIED = "satisfied"
NOT_SATISFIED = "not_satisfied"
INCONCLUSIVE = "inconclusive"

MIN_HORIZON = 8
DEFAULT_HORIZON = 60
SLOPE_TOL = 0.01  # q-criterion: log_q slope per step
GROWTH_TOL = 0.005  # perron/riesz: exponential rate A in log v ~ A n + b ln n
POWER_TOL = 0.05  # perron/riesz power b; carleman Raabe margin
RATIO_DELTA = 0.01
BOUND_FACTOR = 2


@dataclass(frozen=True)
class CriterionReport:
    criterion: str
    horizon: int
    test_values: tuple
    trend: object
    verdict: str
    rule: str
    conclusion: str = ""
    extras: dict = field(default_factory=dict)


def _check_horizon(m: MomentSequence, horizon: int):
    if horizon < MIN_HORIZON:
        raise InsufficientDataError(f"horizon {horizon} < {MIN_HORIZON}")
    if m.n_max < horizon:
        raise InsufficientDataError(f"moments known up to s_{2 * m.n_max}, need s_{2 * horizon}")


def fit_slope(mp, xs, ys):
    """Ordinary least-squares slope of ``ys`` against ``xs``."""
    n = len(xs)
    xs = [mp.mpf(x) for x in xs]
    mx = mp.fsum(xs) / n
    my = mp.fsum(ys) / n
    num = mp.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = mp.fsum((x - mx) ** 2 for x in xs)
    return num / den


def fit_linear(mp, columns, ys):
    """Least-squares coefficients for ``ys ~ sum_j coef_j * columns[j]``."""
    k = len(columns)
    normal = mp.matrix(k, k)
    rhs = mp.matrix(k, 1)
    for i in range(k):
        rhs[i] = mp.fdot(columns[i], ys)
        for j in range(k):
            normal[i, j] = mp.fdot(columns[i], columns[j])
    sol = mp.lu_solve(normal, rhs)
    return [sol[i] for i in range(k)]


def _last_half(horizon: int) -> list[int]:
    return list(range(horizon // 2, horizon + 1))


def _quarters(values):
    k = max(1, len(values) // 4)
    return values[:k], values[-k:]


def _factorial_root_values(m: MomentSequence, horizon: int):
    mp = m.mp
    return [(m.even(n) / mp.factorial(2 * n)) ** (mp.one / (2 * n)) for n in range(1, horizon + 1)]


def growth_fit(mp, values, horizon):
    """Fit ``log v_n = A n + b ln n + c`` over the last half; returns (A, b)."""
    ns = _last_half(horizon)
    cols = [[mp.mpf(n) for n in ns], [mp.log(n) for n in ns], [mp.one] * len(ns)]
    a, b, _ = fit_linear(mp, cols, [mp.log(values[n - 1]) for n in ns])
    return a, b


def _bounded(a, b, growth_tol, power_tol) -> bool:
    return a <= growth_tol and b <= power_tol


def _grows(a, b, growth_tol, power_tol) -> bool:
    return a > 2 * growth_tol or b > 2 * power_tol


def perron_diag(
    m: MomentSequence, horizon: int = DEFAULT_HORIZON, growth_tol: float = GROWTH_TOL, power_tol: float = POWER_TOL
) -> CriterionReport:
    """``limsup (s_{2n}/(2n)!)^(1/2n) < inf``.

    The values are modelled as ``exp(A n) n^b`` over the last half of the
    horizon: bounded when neither rate is positive beyond its tolerance,
    growing when either exceeds twice it.
    """
    _check_horizon(m, horizon)
    mp = m.mp
    vals = _factorial_root_values(m, horizon)
    a, b = growth_fit(mp, vals, horizon)
    fitted = f"A={mp.nstr(a, 6)}, b={mp.nstr(b, 6)}"
    if _bounded(a, b, growth_tol, power_tol):
        verdict, rule = SATISFIED, f"bounded: fit exp(A n) n^b with {fitted}"
    elif _grows(a, b, growth_tol, power_tol):
        verdict, rule = NOT_SATISFIED, f"growing: fit exp(A n) n^b with {fitted}"
    else:
        verdict, rule = INCONCLUSIVE, f"borderline growth: {fitted}"
    return CriterionReport("perron", horizon, tuple(vals), a, verdict, rule, extras={"power": b})


def riesz_diag(
    m: MomentSequence,
    horizon: int = DEFAULT_HORIZON,
    growth_tol: float = GROWTH_TOL,
    power_tol: float = POWER_TOL,
    block: int = 4,
) -> CriterionReport:
    """``liminf (s_n/n!)^(1/n) < inf`` over even ``n`` (odd moments vanish).

    The liminf is tracked by the minima of consecutive blocks of ``block``
    values over the last half, fitted with the same growth model as
    :func:`perron_diag`.
    """
    _check_horizon(m, horizon)
    mp = m.mp
    vals = _factorial_root_values(m, horizon)
    ns = _last_half(horizon)
    mins = []
    for i in range(0, len(ns), block):
        chunk = ns[i : i + block]
        mins.append(min(chunk, key=lambda n: vals[n - 1]))
    cols = [[mp.mpf(n) for n in mins], [mp.log(n) for n in mins], [mp.one] * len(mins)]
    a, b, _ = fit_linear(mp, cols, [mp.log(vals[n - 1]) for n in mins])
    fitted = f"A={mp.nstr(a, 6)}, b={mp.nstr(b, 6)}"
    if _bounded(a, b, growth_tol, power_tol):
        verdict, rule = SATISFIED, f"block minima bounded: {fitted}"
    elif _grows(a, b, growth_tol, power_tol):
        verdict, rule = NOT_SATISFIED, f"block minima grow: {fitted}"
    else:
        verdict, rule = INCONCLUSIVE, f"borderline block minima: {fitted}"
    return CriterionReport(
        "riesz", horizon, tuple(vals), a, verdict, rule, extras={"block_minima_at": tuple(mins), "power": b}
    )


def carleman_diag(
    m: MomentSequence, horizon: int = DEFAULT_HORIZON, delta: float = RATIO_DELTA, raabe_tol: float = POWER_TOL
) -> CriterionReport:
    """``sum_n s_{2n}^(-1/2n) = inf``.

    The ratio limit ``L`` is extrapolated by fitting ``r_n = L + c/n`` over
    the last half.  ``L < 1 - delta`` means geometric convergence.
    Otherwise Raabe's statistic ``n (1 - r_n)`` (last-quarter mean)
    decides: at most ``1 + raabe_tol`` diverges, above
    ``1 + 2 raabe_tol`` converges.
    """
    _check_horizon(m, horizon)
    mp = m.mp
    terms = [m.even(n) ** (-mp.one / (2 * n)) for n in range(1, horizon + 1)]
    partial = []
    acc = mp.zero
    for t in terms:
        acc += t
        partial.append(acc)
    # ratios[i] = term_{i+2} / term_{i+1}, i.e. indexed by n = i + 1
    ratios = [terms[i + 1] / terms[i] for i in range(len(terms) - 1)]
    ns = [n for n in _last_half(horizon) if n < horizon]
    limit, _ = fit_linear(mp, [[mp.one] * len(ns), [mp.one / n for n in ns]], [ratios[n - 1] for n in ns])
    _, tail = _quarters(list(range(1, horizon)))
    raabe = mp.fsum(n * (1 - ratios[n - 1]) for n in tail) / len(tail)
    if limit < 1 - delta:
        verdict, rule = NOT_SATISFIED, f"converges: ratio limit {mp.nstr(limit, 6)} < {1 - delta}"
    elif raabe <= 1 + raabe_tol:
        verdict, rule = SATISFIED, f"diverges: Raabe statistic {mp.nstr(raabe, 6)} <= {1 + raabe_tol}"
    elif raabe > 1 + 2 * raabe_tol:
        verdict, rule = NOT_SATISFIED, f"converges: Raabe statistic {mp.nstr(raabe, 6)} > {1 + 2 * raabe_tol}"
    else:
        verdict, rule = INCONCLUSIVE, f"Raabe statistic {mp.nstr(raabe, 6)} near 1"
    return CriterionReport(
        "carleman", horizon, tuple(terms), limit, verdict, rule,
        extras={"partial_sums": tuple(partial), "ratios": tuple(ratios), "raabe": raabe},
    )


def q_criterion_diag(
    m: MomentSequence, q=None, horizon: int = DEFAULT_HORIZON, slope_tol: float = SLOPE_TOL
) -> CriterionReport:
    """``lim q^(n/4) s_{2n}^(1/2n) = 0`` implies determinacy.

    ``trend`` is the slope of ``log_q`` of the test values; positive means
    the values go to zero.
    """
    _check_horizon(m, horizon)
    mp = m.mp
    if q is None:
        if m.ctx is None:
            raise ValidationError("q is required for moment sequences without a context")
        q = m.ctx.q
    qf = to_mpf(mp, as_fraction(q) if not hasattr(q, "_mpf_") else q)
    lq = mp.log(qf)
    vals = [qf ** (mp.mpf(n) / 4) * m.even(n) ** (mp.one / (2 * n)) for n in range(1, horizon + 1)]
    logq = [mp.log(v) / lq for v in vals]
    ns = _last_half(horizon)
    slope = fit_slope(mp, ns, [logq[n - 1] for n in ns])
    first, last = _quarters(vals)
    if slope > slope_tol:
        verdict, rule = SATISFIED, f"log_q slope {mp.nstr(slope, 6)} > {slope_tol}: values tend to 0"
        conclusion = "determinate (by the q-criterion)"
    elif min(last) * BOUND_FACTOR >= min(first):
        verdict, rule = NOT_SATISFIED, "values bounded away from 0"
        conclusion = "criterion inconclusive about determinacy"
    else:
        verdict, rule = INCONCLUSIVE, "no clear trend"
        conclusion = "criterion inconclusive about determinacy"
    return CriterionReport(
        "q_criterion", horizon, tuple(vals), slope, verdict, rule, conclusion, extras={"log_q": tuple(logq)}
    )


def exact_exponent_sequence(p, n_max: int) -> list[Fraction]:
    """``e_n = (p/n) sigma(n/p) + n/4`` for ``n = 1..n_max``, exactly.

    Up to the prefactor's contribution (see
    :func:`qmoment.moments.prefactor_log_limit`) this is ``log_q`` of
    ``q^(n/4) s_{2n}^(1/2n)`` for the family weight.
    """
    p = as_fraction(p)
    if p <= 0:
        raise ValidationError("p must be positive")
    return [p / n * sigma_exponent(Fraction(n) / p) + Fraction(n, 4) for n in range(1, n_max + 1)]


def implication_consistent(perron: CriterionReport, riesz: CriterionReport, carleman: CriterionReport) -> bool:
    """Perron => Riesz => Carleman among verdicts that are not inconclusive."""
    chain = [perron.verdict, riesz.verdict, carleman.verdict]
    for a, b in zip(chain, chain[1:]):
        if a == SATISFIED and b == NOT_SATISFIED:
            return False
    if chain[0] == SATISFIED and chain[2] == NOT_SATISFIED:
        return False
    return True


@dataclass(frozen=True)
class SeriesBound:
    terms: tuple
    partial_sums: tuple
    ratios: tuple
    convergent: bool
    cauchy_gap: object  # |S_H - S_{H-1}| / |S_H|


@dataclass(frozen=True)
class ProofBoundReport:
    lam: object
    horizon: int
    even: SeriesBound
    odd: SeriesBound


def _series_bound(mp, terms) -> SeriesBound:
    partial = []
    acc = mp.zero
    for t in terms:
        acc += t
        partial.append(acc)
    ratios = tuple(terms[i + 1] / terms[i] if terms[i] != 0 else mp.zero for i in range(len(terms) - 1))
    # ratios fall below 1 and stay there, for at least the last quarter
    start = len(ratios)
    while start > 0 and ratios[start - 1] < 1:
        start -= 1
    convergent = len(ratios) - start >= max(1, len(ratios) // 4)
    # |S_H - S_{H-1}| / |S_H|, taken from the last term to avoid cancellation
    gap = abs(terms[-1]) / abs(partial[-1]) if partial[-1] != 0 else mp.zero
    return SeriesBound(tuple(terms), tuple(partial), ratios, convergent, gap)


def proof_bound_check(m: MomentSequence, lam, ctx: QContext, horizon: int = DEFAULT_HORIZON) -> ProofBoundReport:
    """Majorant series that justify swapping the q-Bessel sum and the integral.

    Even series: ``q^(n(n+1)) lam^(2n) sqrt(s_{4n}) / ((q^2;q^2)_n (q^(2v+2);q^2)_n)``;
    odd series uses ``sqrt(s_{2(2n+1)})``.  Both over ``n = 0..horizon-1``.
    """
    if horizon < MIN_HORIZON:
        raise InsufficientDataError(f"horizon {horizon} < {MIN_HORIZON}")
    if m.n_max < 2 * horizon - 1:
        raise InsufficientDataError(f"need moments up to s_{2 * (2 * horizon - 1)}")
    mp = ctx.mp
    q = ctx.qf()
    q2 = q * q
    a = q ** to_mpf(mp, 2 * ctx.v + 2)
    lam = to_mpf(mp, lam)
    even, odd = [], []
    for n in range(horizon):
        den = qpochhammer_finite(q2, q2, n, ctx) * qpochhammer_finite(a, q2, n, ctx)
        coef = q ** (n * (n + 1)) * lam ** (2 * n) / den
        even.append(coef * mp.sqrt(m.even(2 * n)))
        odd.append(coef * mp.sqrt(m.even(2 * n + 1)))
    return ProofBoundReport(lam, horizon, _series_bound(mp, even), _series_bound(mp, odd))
