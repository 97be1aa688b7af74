import math
import warnings
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from qmoment.errors import DomainError, PoleError, TailWarning, ValidationError
from qmoment.moments import (
    CLOSED_FORM,
    C_prefactor,
    MomentEntry,
    MomentSequence,
    WeightSpec,
    closed_form_moments,
    direct_moments,
    fit_window,
    moment_closed_form,
    moment_direct,
    prefactor_log_limit,
    ramanujan_check,
    sigma_exponent,
)
from qmoment.qcore import GridFunction, QContext, mpctx, qpochhammer_inf, to_mpf

CTX = QContext(0.5)


def rel(a, b):
    return abs(a - b) / abs(b)


def fitted(q, v, p, n_max, tol=1e-40, **kw):
    return QContext(q, v, k_min=fit_window(q, v, p, n_max, tol)[0], k_max=fit_window(q, v, p, n_max, tol)[1], **kw)


class TestWeightSpec:
    def test_family_validation(self):
        with pytest.raises(ValidationError):
            WeightSpec.family(0)
        with pytest.raises(ValidationError):
            WeightSpec()
        assert WeightSpec.family("5/2").p == Fraction(5, 2)

    def test_custom_positive(self):
        with pytest.raises(ValidationError):
            WeightSpec.custom(GridFunction.atom(CTX, 0))
        w = WeightSpec.custom(GridFunction.atom(CTX, 0), require_positive=False)
        assert not w.is_family

    def test_custom_rejects_negative(self):
        f = GridFunction.atom(CTX, 0, -1)
        with pytest.raises(ValidationError):
            WeightSpec.custom(f, require_positive=False)


class TestDirect:
    @pytest.mark.parametrize("n", [0, 1, 5, 17])
    def test_single_atom(self, n):
        w = WeightSpec.custom(GridFunction.atom(CTX, 0), require_positive=False)
        assert moment_direct(n, w, CTX) == 1 - CTX.qf()

    def test_p1_n0(self):
        d = moment_direct(0, WeightSpec.family(1), CTX)
        assert rel(d, moment_closed_form(0, 1, CTX).value) < 1e-20

    def test_p3_n3(self):
        d = moment_direct(3, WeightSpec.family(3), CTX)
        assert rel(d, moment_closed_form(3, 3, CTX).value) < 1e-20

    def test_p3_first_nine(self):
        ctx = fitted(0.5, 0, 3, 8)
        direct = direct_moments(8, WeightSpec.family(3), ctx)
        closed = closed_form_moments(8, 3, ctx)
        for a, b in zip(direct.values(), closed.values()):
            assert rel(a, b) < 1e-20

    def test_p1_noninteger_v(self):
        ctx = fitted(0.7, Fraction(-1, 2), 1, 5)
        d = moment_direct(5, WeightSpec.family(1), ctx)
        assert rel(d, moment_closed_form(5, 1, ctx).value) < 1e-20

    def test_noninteger_p(self):
        ctx = fitted(0.5, 0, Fraction(5, 2), 8)
        direct = direct_moments(8, WeightSpec.family(Fraction(5, 2)), ctx)
        closed = closed_form_moments(8, Fraction(5, 2), ctx)
        assert max(rel(a, b) for a, b in zip(direct.values(), closed.values())) < 1e-20

    def test_narrow_window_warns(self):
        with pytest.warns(TailWarning):
            moment_direct(10, WeightSpec.family(1), QContext(0.7))


class TestSigma:
    def test_examples(self):
        assert sigma_exponent(0) == 0
        assert sigma_exponent(Fraction(1, 3)) == Fraction(-1, 3)
        assert sigma_exponent(1) == -1

    @pytest.mark.parametrize("m", range(1, 21))
    def test_integers(self, m):
        assert sigma_exponent(m) == Fraction(-m * (m + 1), 2)

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            sigma_exponent(-1)

    @given(st.fractions(min_value=0, max_value=50, max_denominator=12))
    def test_brute_force_minimum(self, a):
        # independent expression: sum of (i - a) for i = 0..[a]
        fl = math.floor(a)
        assert sigma_exponent(a) == sum(Fraction(i) - a for i in range(fl + 1))


class TestClosedForm:
    def test_n0(self):
        e = moment_closed_form(0, 3, CTX)
        assert e.exponent == 0 and e.method == CLOSED_FORM
        Q = CTX.qf() ** 6
        z = CTX.qf() ** 2
        assert e.value == (1 - CTX.qf()) * C_prefactor(0, Q, z, CTX)

    def test_alpha_zero_prefactor(self):
        # alpha = 0: the finite product is its single i = 0 factor (1 + z/Q), (Q/z)^1
        m = CTX.mp
        Q, z = m.mpf(0.25), m.mpf(0.3)
        P = qpochhammer_inf
        expected = (
            P(-z, Q, CTX) * P(Q, Q, CTX) / (P(-1, Q, CTX) * P(z, Q, CTX) * P(-Q, Q, CTX))
            * (1 + z / Q) * P(-Q * Q / z, Q, CTX) * (Q / z)
        )
        assert rel(C_prefactor(0, Q, z, CTX), expected) < 1e-70

    def test_prefactor_against_bilateral_sum(self):
        # sum_k (Q^a z)^k / (-Q^k; Q)_inf = C(a, Q, z) Q^sigma(a)
        m = CTX.mp
        Q, z = m.mpf(0.3), m.mpf(0.6)
        for a in (Fraction(0), Fraction(1, 3), Fraction(5, 2), Fraction(4)):
            Qa = Q ** to_mpf(m, a)
            with mpmath.workdps(80):
                direct = mpmath.nsum(lambda k: (Qa * z) ** k / mpmath.qp(-(Q**k), Q), [-mpmath.inf, mpmath.inf])
            closed = C_prefactor(a, Q, z, CTX) * Q ** to_mpf(m, sigma_exponent(a))
            assert rel(closed, direct) < 1e-25

    def test_pole(self):
        m = CTX.mp
        with pytest.raises(PoleError):
            C_prefactor(1, m.mpf(0.5), m.mpf(2), CTX)  # Q^a z = 1
        with pytest.raises(PoleError):
            C_prefactor(1, 0.5, 0, CTX)

    def test_exponent_recorded(self):
        for n in range(12):
            assert moment_closed_form(n, 3, CTX).exponent == 6 * sigma_exponent(Fraction(n, 3))

    def _log_q_excess(self, p, v, ns):
        ctx = QContext(0.5, v)
        m = ctx.mp
        lq = m.log(ctx.qf())
        out = []
        for n in ns:
            e = moment_closed_form(n, p, ctx)
            out.append(m.log(e.value) / lq - to_mpf(m, e.exponent))
        return out

    def test_exponent_dominance_when_p_is_v_plus_one(self):
        devs = self._log_q_excess(1, 0, range(0, 80, 4))
        assert max(devs) - min(devs) < 2

    def test_exponent_excess_grows_linearly_otherwise(self):
        # the prefactor adds 2n (p - v - 1)/p to log_q s_{2n}
        a, b = self._log_q_excess(3, 0, [120, 240])
        assert abs((b - a) / 120 - mpmath.mpf(4) / 3) < 0.01

    def test_prefactor_root_limit(self):
        # log_q of the 2n-th root of the prefactor tends to (p - v - 1)/p
        n = 240
        for p, v in [(3, 0), (1, 0), (2, 1), (Fraction(5, 2), Fraction(-1, 2))]:
            ctx = QContext(0.5, v)
            m = ctx.mp
            e = moment_closed_form(n, p, ctx)
            lq = m.log(ctx.qf())
            root = (m.log(e.value) / lq - to_mpf(m, e.exponent)) / (2 * n)
            assert abs(root - to_mpf(m, prefactor_log_limit(p, v))) < 0.02

    def test_prefactor_root_is_one_when_p_is_v_plus_one(self):
        assert prefactor_log_limit(1, 0) == 0
        assert prefactor_log_limit(2, 1) == 0
        assert prefactor_log_limit(3, 0) == Fraction(2, 3)


class TestSequence:
    def test_positive_and_even(self):
        m = closed_form_moments(20, 3, CTX)
        assert all(v > 0 for v in m.values())
        assert all(m.s(2 * j + 1) == 0 for j in range(20))
        assert m.s(4) == m.even(2)

    def test_rejects_gaps_and_nonpositive(self):
        mp = mpctx(256)
        with pytest.raises(ValidationError):
            MomentSequence((MomentEntry(1, mp.one, "given"),))
        with pytest.raises(ValidationError):
            MomentSequence.from_values([1, 0, 2])

    def test_immutable(self):
        m = MomentSequence.from_values([1, 2])
        with pytest.raises(AttributeError):
            m.entries = ()


class TestRamanujan:
    def test_alpha_two(self):
        q = CTX.qf()
        assert ramanujan_check(-1, q**2, q, CTX).rel_err < 1e-25

    def test_family_substitution(self):
        q = CTX.qf()
        assert ramanujan_check(-1, q**2, q**6, CTX).rel_err < 1e-25

    def test_negative_z(self):
        assert ramanujan_check(-0.5, -0.3, 0.6, CTX).rel_err < 1e-25

    @pytest.mark.parametrize("z", [1, 1.5, -1, 0])
    def test_domain(self, z):
        with pytest.raises(DomainError):
            ramanujan_check(-1, z, 0.5, CTX)

    def test_poles(self):
        with pytest.raises(PoleError):
            ramanujan_check(0.5, 0.3, 0.5, CTX)  # q/b = 1
        with pytest.raises(PoleError):
            ramanujan_check(1, 0.3, 0.5, CTX)

    @given(
        b=st.floats(-5, -0.1),
        z=st.floats(0.05, 0.8),
        q=st.floats(0.1, 0.8),
    )
    def test_random_parameters(self, b, z, q):
        ctx = QContext(0.5, k_min=-400, k_max=600)
        assert ramanujan_check(b, z, q, ctx).rel_err < 1e-25

    def test_warns_when_window_too_small(self):
        ctx = QContext(0.5, k_min=-4, k_max=4)
        with pytest.warns(TailWarning):
            ramanujan_check(-1, 0.9, 0.5, ctx)


class TestFitWindow:
    @pytest.mark.parametrize("q,v,p", [(0.3, 0, 3), (0.7, Fraction(-1, 2), 1), (0.9, 1, 2)])
    def test_fitted_window_silences_tail_warning(self, q, v, p):
        ctx = fitted(q, v, p, 10, tol=1e-35)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            direct_moments(10, WeightSpec.family(p), ctx)
