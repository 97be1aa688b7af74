"""Acceptance gate: one PASS/FAIL line per criterion.

Run under pytest (lines are printed even with output capture on) or
directly with ``python tests/test_acceptance.py``.
"""
import math
import subprocess
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import pytest

from qmoment.criteria import (
    NOT_SATISFIED,
    SATISFIED,
    carleman_diag,
    exact_exponent_sequence,
    implication_consistent,
    perron_diag,
    proof_bound_check,
    q_criterion_diag,
    riesz_diag,
)
from qmoment.moments import (
    MomentSequence,
    WeightSpec,
    closed_form_moments,
    direct_moments,
    fit_window,
    ramanujan_check,
)
from qmoment.orthopoly import gram_matrix, max_identity_deviation, recurrence_from_moments
from qmoment.qbessel import QBesselTransform, calibrate, injectivity_diagnostic
from qmoment.qcore import QContext


def fitted(q, v, p, n_max):
    lo, hi = fit_window(q, v, p, n_max, 1e-40)
    return QContext(q, v, k_min=lo, k_max=hi)


def criterion_1():
    """Ramanujan bilateral identity, 12 triples, relative gap < 1e-25."""
    ctx = QContext(Fraction(1, 2), k_min=-400, k_max=2000)
    m = ctx.mp
    h = m.mpf(1) / 2
    triples = [
        (-1, h**2, h),  # z = q^alpha, alpha = 2
        (-1, h**2, h**6),  # family substitution p = 3, v = 0
        (-1, h**2, h**2),  # p = 1
        (-1, h**4, h**4),  # p = 2, v = 1
        (-1, m.mpf("0.7") ** 2, m.mpf("0.7") ** 6),  # p = 3, q = 0.7
        (-1, m.mpf("0.3"), m.mpf("0.3") ** 2),  # p = 1, v = -1/2
        (m.mpf("0.3"), m.mpf("0.5"), m.mpf("0.5")),
        (m.mpf("-2.5"), m.mpf("0.4"), m.mpf("0.3")),
        (m.mpf("1.7"), m.mpf("0.6"), m.mpf("0.45")),
        (m.mpf("-0.5"), m.mpf("-0.3"), m.mpf("0.6")),
        (m.mpf("0.9"), m.mpf("-0.75"), m.mpf("0.5")),
        (m.mpf(-4), m.mpf("0.95"), m.mpf("0.2")),
    ]
    worst = max(ramanujan_check(b, z, q, ctx).rel_err for b, z, q in triples)
    return worst < 1e-25, f"{len(triples)} triples, max rel gap {m.nstr(worst, 3)}"


def criterion_2():
    """Direct vs closed-form moments, n <= 10, relative gap < 1e-20."""
    worst = 0
    cases = 0
    for q in ("0.3", "0.5", "0.7"):
        for v in (Fraction(-1, 2), Fraction(0), Fraction(1)):
            for p in (1, 2, 3):
                ctx = fitted(q, v, p, 10)
                direct = direct_moments(10, WeightSpec.family(p), ctx)
                closed = closed_form_moments(10, p, ctx)
                for a, b in zip(direct.values(), closed.values()):
                    worst = max(worst, abs(a - b) / b)
                    cases += 1
    return worst < 1e-20, f"{cases} moments, max rel gap {ctx.mp.nstr(worst, 3)}"


def criterion_3():
    """Exact exponent identities for m <= 40, zero tolerance."""
    e3 = exact_exponent_sequence(3, 120)
    e2 = exact_exponent_sequence(2, 80)
    ok3 = all(e3[3 * m - 1] == Fraction(m, 4) - Fraction(1, 2) for m in range(1, 41))
    ok2 = all(e2[2 * m - 1] == Fraction(-1, 2) for m in range(1, 41))
    return ok3 and ok2, f"p=3: {ok3}, p=2: {ok2}, e_6={e3[5]}, e_12={e3[11]}"


def criterion_4():
    """q-criterion slope over n in [30, 60] within 5% of 1/12; satisfied."""
    ctx = QContext(Fraction(1, 2))
    r = q_criterion_diag(closed_form_moments(60, 3, ctx), ctx.q, 60)
    slope = r.trend
    target = ctx.mp.one / 12
    ok = abs(slope - target) < 0.05 * target and r.verdict == SATISFIED
    return ok, f"slope {ctx.mp.nstr(slope, 6)} vs 1/12, verdict {r.verdict}"


def criterion_5():
    """Carleman ratios within 1% of q^(1/6) by n = 60; not satisfied."""
    ctx = QContext(Fraction(1, 2))
    r = carleman_diag(closed_form_moments(60, 3, ctx), 60)
    target = ctx.qf() ** (ctx.mp.one / 6)
    ratio = r.extras["ratios"][-1]
    gap = abs(ratio - target) / target
    ok = gap < 0.01 and r.verdict == NOT_SATISFIED
    return ok, f"last ratio {ctx.mp.nstr(ratio, 6)} vs {ctx.mp.nstr(target, 6)} (gap {ctx.mp.nstr(gap, 2)}), verdict {r.verdict}"


def _chain_sequences():
    for q in ("0.3", "0.5", "0.7", "0.9", "0.95"):
        ctx = QContext(q)
        for p in (Fraction(1, 2), 1, 2, Fraction(5, 2), 3, 4, 6):
            yield f"family q={q} p={p}", closed_form_moments(60, p, ctx)
    ctx = QContext(Fraction(1, 2))
    toys = {
        "one": lambda n: 1,
        "(2n)!": lambda n: math.factorial(2 * n),
        "(2n-1)!!": lambda n: math.prod(range(1, 2 * n, 2)),
        "(3n)!": lambda n: math.factorial(3 * n),
        "(4n+1)!": lambda n: math.factorial(4 * n + 1),
        "2^(n^2)": lambda n: 2 ** (n * n),
        "n^n": lambda n: max(n, 1) ** n,
    }
    for name, func in toys.items():
        yield name, MomentSequence.from_values([func(n) for n in range(61)], ctx)


def criterion_6():
    """Perron => Riesz => Carleman among non-inconclusive verdicts."""
    bad = []
    count = 0
    for name, m in _chain_sequences():
        count += 1
        if not implication_consistent(perron_diag(m), riesz_diag(m), carleman_diag(m)):
            bad.append(name)
    return not bad, f"{count} sequences, violations: {bad or 'none'}"


def criterion_7():
    """Gram matrix of P_0..P_12 within 1e-15 of identity, p = 3 family."""
    worst = 0
    for q in ("0.3", "0.5", "0.7"):
        ctx = fitted(q, 0, 3, 24)
        basis = recurrence_from_moments(closed_form_moments(12, 3, ctx), 12)
        worst = max(worst, max_identity_deviation(gram_matrix(basis, WeightSpec.family(3), ctx)))
    return worst < 1e-15, f"q in (0.3, 0.5, 0.7), max deviation {ctx.mp.nstr(worst, 3)}"


def criterion_8():
    """Kernel on [-8, 8] injective; calibrated involution residual < 1e-10."""
    ctx = QContext(Fraction(1, 2), k_min=-8, k_max=8)
    smin = injectivity_diagnostic(QBesselTransform.build(ctx))
    cal = calibrate(ctx)
    ok = smin > 0 and cal.residual < 1e-10
    m = ctx.mp
    return ok, f"smallest singular value {m.nstr(smin, 4)}, residual {m.nstr(cal.residual, 3)}"


def criterion_9():
    """Majorant series at lambda = 1 converge and are Cauchy at 1e-20 by 60 terms."""
    ctx = QContext(Fraction(1, 2))
    r = proof_bound_check(closed_form_moments(119, 3, ctx), 1, ctx, 60)
    ok = all(s.convergent and s.cauchy_gap < 1e-20 for s in (r.even, r.odd))
    return ok, (
        f"even convergent={r.even.convergent} gap={ctx.mp.nstr(r.even.cauchy_gap, 3)}, "
        f"odd convergent={r.odd.convergent} gap={ctx.mp.nstr(r.odd.cauchy_gap, 3)}"
    )


def criterion_10():
    """Two reproduce-p3 runs with identical flags give byte-identical files."""
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for name in ("a.json", "b.json"):
            path = Path(tmp) / name
            subprocess.run(
                [sys.executable, "-m", "qmoment.cli", "reproduce-p3", "--out", str(path)],
                check=True,
                capture_output=True,
            )
            outs.append(path.read_bytes())
    same = outs[0] == outs[1]
    return same and len(outs[0]) > 0, f"{len(outs[0])} bytes, identical={same}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def _line(i, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {i}: {detail}"


@pytest.mark.parametrize("index", range(1, len(CRITERIA) + 1))
def test_criterion(index, capsys):
    ok, detail = CRITERIA[index - 1]()
    with capsys.disabled():
        print("\n" + _line(index, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for i, check in enumerate(CRITERIA, 1):
        ok, detail = check()
        results.append(ok)
        print(_line(i, ok, detail))
    sys.exit(0 if all(results) else 1)
