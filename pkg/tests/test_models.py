"""Likelihood recursions checked against independent hand-written loops."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from tsbayes import priors as pr
from tsbayes.models import (
    GarchSpec,
    SarimaSpec,
    batch_eval,
    constrain,
    default_priors,
    describe,
    display_names,
    finite_diff_check,
    grad_log_posterior,
    log_posterior,
    model_header,
    n_effective,
    param_names,
    unconstrain,
)
from tsbayes.series import TimeSeries, difference, fourier_terms


def sarima_loglik_loop(y, order, seasonal, s, mu0, sigma0, ar, ma, sar, sma,
                       xreg=None, breg=None):
    """Slow reference: difference, expand polynomials, run the recursion."""
    p, d, q = order
    P, D, Q = seasonal
    z = difference(np.asarray(y, dtype=float), d, D, s)
    w = z.copy()
    if xreg is not None:
        xd = np.column_stack(
            [difference(xreg[:, j], d, D, s) for j in range(xreg.shape[1])]
        )
        w = z - xd @ np.asarray(breg)

    # multiplicative expansion of (1 - sum phi B^i)(1 - sum Phi B^(s j))
    alpha = np.zeros(p + s * P + 1)
    for i in range(1, p + 1):
        alpha[i] += ar[i - 1]
    for j in range(1, P + 1):
        alpha[s * j] += sar[j - 1]
        for i in range(1, p + 1):
            alpha[i + s * j] -= ar[i - 1] * sar[j - 1]
    gamma = np.zeros(q + s * Q + 1)
    for i in range(1, q + 1):
        gamma[i] += ma[i - 1]
    for j in range(1, Q + 1):
        gamma[s * j] += sma[j - 1]
        for i in range(1, q + 1):
            gamma[i + s * j] -= ma[i - 1] * sma[j - 1]

    n = w.size
    eps = np.zeros(n)
    ll = np.zeros(n)
    for t in range(n):
        acc = w[t] - mu0
        for k in range(1, alpha.size):
            if t - k >= 0:
                acc -= alpha[k] * w[t - k]
        for k in range(1, gamma.size):
            if t - k >= 0:
                acc += gamma[k] * eps[t - k]
        eps[t] = acc
        ll[t] = stats.norm(0.0, sigma0).logpdf(eps[t])
    return ll, eps


def garch_loglik_loop(y, arch, garch_q, mu0, sigma0, alphas, betas,
                      innovation="normal", dfv=None):
    y = np.asarray(y, dtype=float)
    n = y.size
    pre = np.var(y)
    eps = y - mu0
    sig2 = np.zeros(n)
    ll = np.zeros(n)
    for t in range(n):
        v = sigma0
        for i in range(1, arch + 1):
            e2 = eps[t - i] ** 2 if t - i >= 0 else pre
            v += alphas[i - 1] * e2
        for j in range(1, garch_q + 1):
            s2 = sig2[t - j] if t - j >= 0 else pre
            v += betas[j - 1] * s2
        sig2[t] = v
        if innovation == "normal":
            ll[t] = stats.norm(0.0, math.sqrt(v)).logpdf(eps[t])
        else:
            scale = math.sqrt(v * (dfv - 2.0) / dfv)
            ll[t] = stats.t(dfv, 0.0, scale).logpdf(eps[t])
    return ll, eps, sig2


@pytest.fixture(scope="module")
def wiggle():
    rng = np.random.default_rng(91)
    return np.cumsum(rng.standard_normal(80)) * 0.3 + 5.0


class TestSarimaOracle:
    def test_ar1(self, wiggle):
        spec = SarimaSpec(order=(1, 0, 0))
        mu0, sigma0, phi = 0.2, 1.3, 0.55
        u = unconstrain(spec, np.array([mu0, sigma0, phi]))
        res = log_posterior(spec, wiggle, u, include_prior=False)
        want, eps = sarima_loglik_loop(
            wiggle, (1, 0, 0), (0, 0, 0), 1, mu0, sigma0, [phi], [], [], []
        )
        np.testing.assert_allclose(res.pointwise, want, atol=1e-10)
        np.testing.assert_allclose(res.residuals, eps, atol=1e-10)

    def test_arma11_with_differencing(self, wiggle):
        spec = SarimaSpec(order=(1, 1, 1))
        vals = np.array([0.05, 0.9, 0.4, -0.35])
        u = unconstrain(spec, vals)
        res = log_posterior(spec, wiggle, u, include_prior=False)
        want, _ = sarima_loglik_loop(
            wiggle, (1, 1, 1), (0, 0, 0), 1, *vals[:2], [vals[2]], [vals[3]], [], []
        )
        assert res.pointwise.size == wiggle.size - 1
        np.testing.assert_allclose(res.pointwise, want, atol=1e-10)

    def test_full_seasonal(self, wiggle):
        spec = SarimaSpec(order=(2, 1, 1), seasonal=(1, 1, 1), s=4)
        vals = np.array([0.0, 1.1, 0.3, -0.2, 0.25, 0.4, -0.3])
        u = unconstrain(spec, vals)
        res = log_posterior(spec, wiggle, u, include_prior=False)
        want, _ = sarima_loglik_loop(
            wiggle, (2, 1, 1), (1, 1, 1), 4,
            vals[0], vals[1], vals[2:4], [vals[4]], [vals[5]], [vals[6]],
        )
        assert res.pointwise.size == wiggle.size - 1 - 4
        np.testing.assert_allclose(res.pointwise, want, atol=1e-10)

    def test_regression_terms(self, wiggle):
        n = wiggle.size
        xreg = np.column_stack([np.linspace(0, 1, n), np.cos(np.arange(n))])
        spec = SarimaSpec(order=(1, 1, 0), xreg=xreg)
        vals = np.array([0.0, 1.0, 0.3, 0.8, -0.5])
        u = unconstrain(spec, vals)
        res = log_posterior(spec, wiggle, u, include_prior=False)
        want, _ = sarima_loglik_loop(
            wiggle, (1, 1, 0), (0, 0, 0), 1,
            vals[0], vals[1], [vals[2]], [], [], [],
            xreg=xreg, breg=vals[3:],
        )
        np.testing.assert_allclose(res.pointwise, want, atol=1e-10)

    def test_fourier_matches_explicit_xreg(self, wiggle):
        y = TimeSeries(wiggle, frequency=12)
        spec_f = SarimaSpec(order=(1, 0, 0), s=12, fourier_k=2)
        harmonics = fourier_terms(wiggle.size, 12, 2)
        spec_x = SarimaSpec(order=(1, 0, 0), s=12, xreg=harmonics.values)
        vals = np.array([0.1, 1.0, 0.4, 0.2, -0.1, 0.05, 0.3])
        res_f = log_posterior(spec_f, y, unconstrain(spec_f, vals), include_prior=False)
        res_x = log_posterior(spec_x, y, unconstrain(spec_x, vals), include_prior=False)
        np.testing.assert_allclose(res_f.pointwise, res_x.pointwise, atol=1e-12)

    def test_expansion_coefficient_placement(self, wiggle):
        # a pure seasonal AR must react only at lags s and s+1 when combined
        # with one ordinary lag: alpha = {phi@1, Phi@s, -phi*Phi@s+1}
        phi, Phi, s = 0.5, 0.3, 12
        n = 60
        w = np.zeros(n)
        w[0] = 1.0  # impulse
        spec = SarimaSpec(order=(1, 0, 0), seasonal=(1, 0, 0), s=s)
        vals = np.array([0.0, 1.0, phi, Phi])
        res = log_posterior(spec, w, unconstrain(spec, vals), include_prior=False)
        eps = res.residuals
        # eps_t = w_t - alpha convolution; impulse response reveals alpha
        assert eps[1] == pytest.approx(-phi)
        assert eps[s] == pytest.approx(-Phi)
        assert eps[s + 1] == pytest.approx(phi * Phi)
        for t in [2, 3, s - 1, s + 2]:
            assert eps[t] == pytest.approx(0.0, abs=1e-14)


@pytest.fixture(scope="module")
def returns():
    rng = np.random.default_rng(17)
    return rng.standard_normal(60) * 0.02


class TestGarchOracle:
    def test_garch11_normal(self, returns):
        spec = GarchSpec(arch=1, garch=1)
        vals = np.array([0.001, 0.0001, 0.15, 0.7])
        u = unconstrain(spec, vals)
        res = log_posterior(spec, returns, u, include_prior=False)
        want, eps, sig2 = garch_loglik_loop(
            returns, 1, 1, vals[0], vals[1], [vals[2]], [vals[3]]
        )
        np.testing.assert_allclose(res.pointwise, want, atol=1e-10)
        np.testing.assert_allclose(res.fitted, np.sqrt(sig2), atol=1e-12)

    def test_garch21_student_t(self, returns):
        spec = GarchSpec(arch=2, garch=1, innovation="student_t")
        vals = np.array([0.0, 0.0002, 0.1, 0.05, 0.6, 6.0])
        u = unconstrain(spec, vals)
        res = log_posterior(spec, returns, u, include_prior=False)
        want, _, _ = garch_loglik_loop(
            returns, 2, 1, vals[0], vals[1], vals[2:4], [vals[4]],
            innovation="student_t", dfv=vals[5],
        )
        np.testing.assert_allclose(res.pointwise, want, atol=1e-10)

    def test_student_t_large_df_approaches_normal(self, returns):
        sn = GarchSpec(arch=1, garch=1)
        stu = GarchSpec(arch=1, garch=1, innovation="student_t")
        vals = np.array([0.001, 0.0001, 0.15, 0.7])
        res_n = log_posterior(sn, returns, unconstrain(sn, vals), include_prior=False)
        vals_t = np.append(vals, 1e6)
        res_t = log_posterior(stu, returns, unconstrain(stu, vals_t), include_prior=False)
        np.testing.assert_allclose(res_t.pointwise, res_n.pointwise, atol=1e-4)

    def test_arch_only(self, returns):
        spec = GarchSpec(arch=1, garch=0)
        vals = np.array([0.0, 0.0002, 0.3])
        res = log_posterior(spec, returns, unconstrain(spec, vals), include_prior=False)
        want, _, _ = garch_loglik_loop(returns, 1, 0, vals[0], vals[1], [vals[2]], [])
        np.testing.assert_allclose(res.pointwise, want, atol=1e-10)


class TestDecomposition:
    def test_total_is_sum_of_parts(self, wiggle):
        spec = SarimaSpec(order=(1, 1, 1), seasonal=(1, 0, 0), s=4)
        u = np.array([0.3, -0.2, 0.5, 0.1, -0.4])
        res = log_posterior(spec, wiggle, u)
        assert res.log_posterior == pytest.approx(
            res.pointwise.sum() + res.log_prior + res.log_jacobian, rel=1e-12
        )

    def test_include_prior_false_zeroes_prior(self, wiggle):
        spec = SarimaSpec(order=(1, 0, 0))
        u = np.array([0.1, 0.2, 0.3])
        res = log_posterior(spec, wiggle, u, include_prior=False)
        assert res.log_prior == 0.0
        assert res.log_jacobian == 0.0

    def test_deterministic_series_zero_residuals(self):
        # an AR(1) driven with its own recursion and no noise leaves eps = 0
        mu0, phi = 0.5, 0.6
        n = 40
        w = np.zeros(n)
        w[0] = mu0
        for t in range(1, n):
            w[t] = mu0 + phi * w[t - 1]
        spec = SarimaSpec(order=(1, 0, 0))
        vals = np.array([mu0, 1.0, phi])
        res = log_posterior(spec, w, unconstrain(spec, vals), include_prior=False)
        np.testing.assert_allclose(res.residuals[1:], 0.0, atol=1e-12)


class TestConstrain:
    @settings(max_examples=50, deadline=None)
    @given(u=st.lists(st.floats(-3, 3), min_size=6, max_size=6))
    def test_roundtrip(self, u):
        spec = SarimaSpec(order=(2, 0, 1), seasonal=(1, 0, 0), s=12)
        u = np.asarray(u)
        vals, _ = constrain(spec, u)
        u2 = unconstrain(spec, vals)
        np.testing.assert_allclose(u2, u, atol=1e-9)

    def test_domains_respected(self):
        spec = GarchSpec(arch=1, garch=1, innovation="student_t")
        vals, _ = constrain(spec, np.array([-5.0, -3.0, 2.0, -2.0, 1.0]))
        assert vals[1] > 0  # scale positive
        assert 0 < vals[2] < 1 and 0 < vals[3] < 1  # volatility weights
        assert vals[4] > 2  # degrees of freedom above 2

    def test_jacobian_value(self):
        # positive transform: log|d exp(u)/du| = u
        spec = SarimaSpec(order=(0, 0, 0))
        _, lj = constrain(spec, np.array([0.0, 1.7]))
        assert lj == pytest.approx(1.7)


class TestGradients:
    CASES = [
        SarimaSpec(order=(1, 0, 1)),
        SarimaSpec(order=(2, 1, 1), seasonal=(1, 1, 1), s=12, fourier_k=2),
        GarchSpec(arch=1, garch=1),
        GarchSpec(arch=2, garch=1, innovation="student_t"),
    ]

    @pytest.mark.parametrize("spec", CASES, ids=lambda s: model_header(s))
    def test_fd_agreement(self, spec):
        rng = np.random.default_rng(5)
        n = 150
        y = TimeSeries(np.cumsum(rng.standard_normal(n)) * 0.1, frequency=spec.s)
        for _ in range(5):
            u = rng.uniform(-1.0, 1.0, len(param_names(spec)))
            assert finite_diff_check(spec, y, u) < 1e-6

    def test_gradient_value_matches_plain(self, wiggle):
        spec = SarimaSpec(order=(1, 1, 1))
        u = np.array([0.2, -0.1, 0.4, -0.3])
        g = grad_log_posterior(spec, wiggle, u)
        res = log_posterior(spec, wiggle, u)
        assert g.value == res.log_posterior  # bitwise


class TestBatchEval:
    def test_matches_single_eval(self, wiggle):
        spec = SarimaSpec(order=(1, 0, 1))
        rng = np.random.default_rng(3)
        udraws = rng.uniform(-0.5, 0.5, (6, 4))
        be = batch_eval(spec, wiggle, udraws)
        for i in range(6):
            res = log_posterior(spec, wiggle, udraws[i], include_prior=False)
            np.testing.assert_allclose(be.pointwise[i], res.pointwise, atol=1e-12)
            np.testing.assert_allclose(be.fitted[i], res.fitted, atol=1e-12)


class TestBookkeeping:
    def test_n_effective(self):
        spec = SarimaSpec(order=(1, 1, 1), seasonal=(1, 1, 1), s=12)
        assert n_effective(spec, 373) == 360
        assert n_effective(SarimaSpec(order=(0, 1, 0)), 373) == 372
        assert n_effective(GarchSpec(arch=1, garch=1), 200) == 200

    def test_too_short_series(self):
        with pytest.raises(ValueError, match="too short"):
            n_effective(SarimaSpec(order=(0, 1, 0), seasonal=(0, 1, 0), s=12), 13)

    def test_param_names(self):
        spec = SarimaSpec(order=(1, 0, 1), seasonal=(1, 0, 1), s=12, fourier_k=1)
        assert param_names(spec) == [
            "mu0", "sigma0", "ar[1]", "ma[1]", "sar[1]", "sma[1]",
            "breg[1]", "breg[2]",
        ]

    def test_display_names(self):
        spec = SarimaSpec(order=(2, 0, 1))
        assert display_names(spec) == ["mu0", "sigma0", "phi.1", "phi.2", "theta"]
        g = GarchSpec(arch=1, garch=1, innovation="student_t")
        assert display_names(g) == ["mu0", "sigma0", "arch.1", "garch.1", "dfv"]


class TestValidation:
    def test_negative_order(self):
        with pytest.raises(ValueError):
            SarimaSpec(order=(-1, 0, 0))

    def test_seasonal_without_period(self):
        with pytest.raises(ValueError):
            SarimaSpec(order=(1, 0, 0), seasonal=(1, 0, 0), s=1)

    def test_garch_needs_some_lag(self):
        with pytest.raises(ValueError):
            GarchSpec(arch=0, garch=0)

    def test_garch_innovation_name(self):
        with pytest.raises(ValueError):
            GarchSpec(arch=1, garch=0, innovation="cauchy")

    def test_fourier_and_xreg_are_exclusive(self):
        n = 48
        xreg = np.ones((n, 1))
        with pytest.raises(ValueError, match="not both"):
            SarimaSpec(order=(1, 0, 0), s=12, fourier_k=1, xreg=xreg)


class TestHeaders:
    def test_sarima_plain(self):
        spec = SarimaSpec(order=(1, 1, 1), seasonal=(1, 1, 1), s=12)
        assert model_header(spec) == "y ~ Sarima(1,1,1)(1,1,1)[12]"

    def test_sarima_reg_hides_trivial_seasonal(self):
        n = 48
        spec = SarimaSpec(order=(1, 1, 1), s=4, xreg=np.ones((n, 4)))
        assert model_header(spec) == "y ~ Sarima(1,1,1).reg[4]"

    def test_sarima_reg_keeps_real_seasonal(self):
        n = 48
        spec = SarimaSpec(order=(1, 0, 0), seasonal=(1, 0, 0), s=4, xreg=np.ones((n, 2)))
        assert model_header(spec) == "y ~ Sarima(1,0,0)(1,0,0)[4].reg[2]"

    def test_garch(self):
        assert model_header(GarchSpec(arch=1, garch=1)) == "y ~ Garch(1,1)"

    def test_named_series(self):
        spec = SarimaSpec(order=(1, 0, 0))
        assert model_header(spec, "birth").startswith("birth ~ ")


class TestDescribe:
    def test_block(self):
        rng = np.random.default_rng(2)
        y = TimeSeries(rng.standard_normal(373), frequency=12, name="birth")
        spec = SarimaSpec(order=(1, 1, 1), seasonal=(1, 1, 1), s=12)
        text = describe(spec, y)
        assert "birth ~ Sarima(1,1,1)(1,1,1)[12]" in text
        assert "373 observations and 1 dimension" in text
        assert "Differences: 1 seasonal Differences: 1" in text
        assert "Current observations: 360" in text
        assert "mu0 ~ t (loc = 0 ,scl = 2.5 ,df = 6 )" in text

    def test_custom_prior_shows_up(self):
        spec = SarimaSpec(order=(1, 0, 0))
        pr.set_prior(spec.priors, "ar", pr.beta(2.0, 2.0))
        text = describe(spec)
        assert "ar[ 1 ] ~ beta (form1 = 2 , form2 = 2 )" in text
