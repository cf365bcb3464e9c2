"""Tests for claim laws, bulk-count laws, counting pmfs, and compounds."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad, trapezoid
from scipy.stats import gamma as gamma_dist

from divbarrier import (
    CompoundClaimDistribution,
    Degenerate,
    EmpiricalDensity,
    Erlang,
    ExplicitPmf,
    Exponential,
    GeneralizedLogarithmic,
    Geometric,
    HyperExponential,
    Logarithmic,
    MixtureOfErlangs,
    ParameterError,
    compound_cdf,
    counting_pmf,
    exp_claims_tail,
    negative_binomial_pmf,
    polya_aeppli_pmf,
)
from divbarrier.errors import ExtrapolationError

from conftest import brute_counting_pmf


class TestCountingPmf:
    def test_degenerate_reduces_to_poisson(self):
        assert counting_pmf(Degenerate(), 1.0, 1.0, 0) == pytest.approx(np.exp(-1.0), abs=1e-15)

    def test_geometric_single_term(self):
        # one bulk of one claim: e^{-1} * lam (1-rho) t
        assert counting_pmf(Geometric(0.5), 1.0, 1.0, 1) == pytest.approx(0.5 * np.exp(-1.0), rel=1e-14)

    def test_geometric_matches_brute_convolution(self):
        comp = Geometric(0.3)
        terms = [comp.pmf(k) for k in range(1, 40)]
        for n in range(0, 12):
            oracle = brute_counting_pmf(terms, 2.0, 0.7, n)
            assert counting_pmf(comp, 2.0, 0.7, n) == pytest.approx(oracle, abs=1e-10)

    def test_explicit_pmf_matches_brute_convolution(self):
        comp = ExplicitPmf((0.5, 0.4, 0.1))
        terms = [0.5, 0.4, 0.1]
        for n in range(0, 10):
            oracle = brute_counting_pmf(terms, 1.3, 0.9, n)
            assert counting_pmf(comp, 1.3, 0.9, n) == pytest.approx(oracle, abs=1e-12)

    @pytest.mark.parametrize("comp", [Degenerate(), Geometric(0.4), Logarithmic(0.6)])
    def test_pmf_sums_to_one(self, comp):
        lam, t = 1.5, 2.0
        total = sum(counting_pmf(comp, lam, t, n) for n in range(0, 400))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_polya_aeppli_rho_zero_is_poisson(self):
        lam, t = 1.7, 0.9
        mu = lam * t
        pois = np.exp(-mu)
        for n in range(0, 15):
            assert polya_aeppli_pmf(0.0, lam, t, n) == pytest.approx(pois, rel=1e-13)
            pois *= mu / (n + 1)

    def test_invalid_parameters_name_field(self):
        with pytest.raises(ParameterError, match="lam"):
            counting_pmf(Degenerate(), -1.0, 1.0, 0)
        with pytest.raises(ParameterError, match="t"):
            counting_pmf(Degenerate(), 1.0, 0.0, 0)
        with pytest.raises(ParameterError, match="n"):
            counting_pmf(Degenerate(), 1.0, 1.0, -2)


class TestNegativeBinomial:
    def test_zero_count(self):
        assert negative_binomial_pmf(1.0, 0.5, 1.0, 0) == pytest.approx(0.5, abs=1e-15)

    def test_integer_shape_hand_value(self):
        # C(4,3) * 0.6^2 * 0.4^3 = 4 * 0.36 * 0.064
        assert negative_binomial_pmf(2.0, 0.4, 1.0, 3) == pytest.approx(0.09216, rel=1e-13)

    def test_matches_logarithmic_compounding(self):
        r, theta = 1.5, 0.3
        lam = -r * np.log1p(-theta)
        for t in (1.0, 2.0):
            for n in range(0, 12):
                nb = negative_binomial_pmf(r, theta, t, n)
                series = counting_pmf(Logarithmic(theta), lam, t, n)
                assert nb == pytest.approx(series, abs=1e-10)
        # the form with r*t folded into the intensity at t=1
        lam3 = -3.0 * np.log(0.7)
        assert counting_pmf(Logarithmic(0.3), lam3, 1.0, 5) == pytest.approx(
            negative_binomial_pmf(1.5, 0.3, 2.0, 5), abs=1e-10
        )

    def test_brute_convolution_agreement(self):
        theta = 0.45
        comp = Logarithmic(theta)
        r = 2.0
        lam = -r * np.log1p(-theta)
        terms = [comp.pmf(k) for k in range(1, 200)]
        for n in range(0, 21):
            oracle = brute_counting_pmf(terms, lam, 1.0, n)
            assert negative_binomial_pmf(r, theta, 1.0, n) == pytest.approx(oracle, abs=1e-10)


class TestCompoundDistribution:
    def test_cdf_zero_at_origin(self):
        cc = CompoundClaimDistribution(Geometric(0.5), Exponential(1.0))
        assert compound_cdf(cc, 0.0) == 0.0

    def test_geometric_exponential_closed_form(self):
        # geometric compounding of exponentials is exponential at rate beta(1-rho)
        cc = CompoundClaimDistribution(Geometric(0.5), Exponential(1.0))
        assert compound_cdf(cc, 2.0) == pytest.approx(1.0 - np.exp(-1.0), abs=1e-8)
        # truncated-series oracle assembled from gamma cdfs
        ks = np.arange(1, 80)
        weights = 0.5**(ks - 1) * 0.5
        for z in (0.5, 1.0, 2.0, 5.0):
            oracle = float(np.sum(weights * gamma_dist.cdf(z, a=ks, scale=1.0)))
            assert compound_cdf(cc, z) == pytest.approx(oracle, abs=1e-8)

    def test_degenerate_single_convolution(self):
        cc = CompoundClaimDistribution(Degenerate(), Exponential(2.0))
        assert compound_cdf(cc, 1.0) == pytest.approx(1.0 - np.exp(-2.0), abs=1e-10)

    def test_beyond_zmax_raises(self):
        cc = CompoundClaimDistribution(Degenerate(), Exponential(1.0), z_max=5.0)
        with pytest.raises(ExtrapolationError):
            compound_cdf(cc, 10.0)

    def test_monotone_and_consistent(self):
        cc = CompoundClaimDistribution(Logarithmic(0.4), HyperExponential((0.3, 0.7), (1.0, 5.0)))
        z = np.linspace(0.0, cc.z_max, 200)
        F = cc.cdf(z)
        assert F[0] == 0.0
        assert np.all(np.diff(F) >= -1e-12)
        assert_allclose(cc.sf(z), 1.0 - F, atol=5e-9)

    @pytest.mark.parametrize(
        "comp,claim",
        [
            (Geometric(0.5), Exponential(1.0)),
            (Degenerate(), Erlang(3, 2.0)),
            (Logarithmic(0.3), HyperExponential((0.4, 0.6), (0.8, 3.0))),
            (ExplicitPmf((0.2, 0.5, 0.3)), MixtureOfErlangs((0.5, 0.5), (1, 2), (1.0, 2.0))),
        ],
    )
    def test_transform_matches_pgf_composition(self, comp, claim):
        # integral of e^{-sz} dF(z) must equal g(L(s)); quadrature oracle
        cc = CompoundClaimDistribution(comp, claim)
        big = CompoundClaimDistribution(comp, claim, z_max=cc.z_max * 2.5)
        for s in (0.1, 0.5, 1.0, 2.0, 5.0):
            target = comp.pgf(claim.laplace(s))
            integral, _ = quad(lambda z: np.exp(-s * z) * big.pdf(z), 0.0, big.z_max, limit=400)
            assert integral == pytest.approx(float(target), abs=10 * big.eps_f + 1e-10)

    def test_empirical_claims_grid_backend(self):
        z = np.linspace(0.0, 30.0, 3000)
        f = np.exp(-z)
        f /= trapezoid(f, z)
        claim = EmpiricalDensity(z, f)
        cc = CompoundClaimDistribution(Degenerate(), claim)
        # should track the exact exponential compound closely
        for zz in (0.5, 1.0, 2.0):
            assert cc.cdf(zz) == pytest.approx(1.0 - np.exp(-zz), abs=5e-4)


class TestExpClaimsTail:
    def test_unit_at_zero(self):
        assert exp_claims_tail(Geometric(0.3), 1.0, 0.0) == 1.0

    def test_geometric_closed_form(self):
        assert exp_claims_tail(Geometric(0.5), 1.0, 1.0) == pytest.approx(np.exp(-0.5), rel=1e-12)

    def test_degenerate_tail(self):
        assert exp_claims_tail(Degenerate(), 1.0, 3.0) == pytest.approx(np.exp(-3.0), rel=1e-12)

    @pytest.mark.parametrize("comp", [Geometric(0.5), Logarithmic(0.4), ExplicitPmf((0.6, 0.3, 0.1))])
    def test_agrees_with_compound_cdf(self, comp):
        beta = 1.3
        cc = CompoundClaimDistribution(comp, Exponential(beta))
        grid = np.linspace(0.0, cc.z_max * 0.8, 100)
        series = np.array([exp_claims_tail(comp, beta, z) for z in grid])
        direct = 1.0 - cc.cdf(grid)
        assert_allclose(series, direct, atol=10 * cc.eps_f)


class TestClaimKinds:
    def test_exponential_basics(self):
        e = Exponential(2.0)
        assert e.mean() == 0.5
        assert e.laplace(0.0) == 1.0
        assert e.cdf(0.0) == 0.0
        assert e.quantile(0.5) == pytest.approx(np.log(2.0) / 2.0, rel=1e-12)

    def test_laplace_decreasing_and_normalized(self):
        claims = [
            Exponential(1.5),
            HyperExponential((0.2, 0.8), (0.5, 4.0)),
            Erlang(3, 2.0),
            MixtureOfErlangs((0.3, 0.7), (2, 1), (1.0, 3.0)),
        ]
        s = np.linspace(0.0, 8.0, 40)
        for claim in claims:
            vals = np.asarray(claim.laplace(s), dtype=float)
            assert vals[0] == pytest.approx(1.0, abs=1e-12)
            assert np.all(np.diff(vals) < 0)

    def test_erlang_mixture_reexpansion_identity(self):
        # common-rate mixture must reproduce the original density and cdf
        for claim in (
            HyperExponential((0.3, 0.7), (1.0, 5.0)),
            MixtureOfErlangs((0.5, 0.5), (2, 3), (1.0, 2.5)),
        ):
            B, coeffs = claim.erlang_mixture(1e-12)
            j = np.arange(1, coeffs.size + 1)
            for z in (0.3, 1.0, 2.7):
                direct = float(claim.cdf(z))
                mixture = float(np.sum(coeffs * gamma_dist.cdf(z, a=j, scale=1.0 / B)))
                assert mixture == pytest.approx(direct, abs=1e-10)

    def test_empirical_density_validation(self):
        z = np.linspace(0.0, 10.0, 500)
        with pytest.raises(ParameterError, match="f"):
            EmpiricalDensity(z, np.ones_like(z))  # integrates to 10

    def test_parameter_validation(self):
        with pytest.raises(ParameterError, match="rate"):
            Exponential(-1.0)
        with pytest.raises(ParameterError, match="shape"):
            Erlang(0, 1.0)
        with pytest.raises(ParameterError, match="weights"):
            HyperExponential((0.5, 0.6), (1.0, 2.0))


class TestCompounderKinds:
    @given(rho=st.floats(min_value=0.0, max_value=0.95))
    @settings(max_examples=25, deadline=None)
    def test_geometric_pmf_exact(self, rho):
        comp = Geometric(rho)
        ks = np.arange(1, 60)
        terms = np.array([comp.pmf(int(k)) for k in ks])
        assert_allclose(terms, (1 - rho) * rho ** (ks - 1), rtol=1e-14)
        assert comp.pgf(1.0) == pytest.approx(1.0, abs=1e-12)

    @given(theta=st.floats(min_value=0.01, max_value=0.95))
    @settings(max_examples=25, deadline=None)
    def test_logarithmic_pmf_exact(self, theta):
        comp = Logarithmic(theta)
        for k in (1, 2, 5):
            assert comp.pmf(k) == pytest.approx(theta**k / (-k * np.log1p(-theta)), rel=1e-13)
        assert float(comp.pgf(1.0)) == pytest.approx(1.0, abs=1e-12)

    def test_generalized_logarithmic_normalizes_and_reduces(self):
        g = GeneralizedLogarithmic(2.0, 0.3)
        ks = np.arange(1, 2000)
        assert np.sum([g.pmf(int(k)) for k in ks[:200]]) == pytest.approx(1.0, abs=1e-10)
        # beta = 1 reduces to the logarithmic family
        g1 = GeneralizedLogarithmic(1.0, 0.5)
        log_ = Logarithmic(0.5)
        for k in (1, 2, 7):
            assert g1.pmf(k) == pytest.approx(log_.pmf(k), rel=1e-12)

    def test_explicit_pmf_tail_accounting(self):
        comp = ExplicitPmf((0.5, 0.3, 0.1), tail_bound=0.1)
        assert comp.tail(3) == pytest.approx(0.1)
        assert comp.tail(1) == pytest.approx(0.5)
        with pytest.raises(ParameterError, match="probs"):
            ExplicitPmf((0.5, 0.3))

    def test_truncation_k_honest(self):
        comp = Geometric(0.5)
        k = comp.truncation_k(1e-10)
        assert comp.tail(k) <= 1e-10
        assert comp.tail(k - 1) > 1e-10

    def test_mean_matches_series(self):
        for comp in (Geometric(0.6), Logarithmic(0.4), GeneralizedLogarithmic(2.0, 0.3)):
            series = sum(k * comp.pmf(k) for k in range(1, 4000))
            assert comp.mean() == pytest.approx(series, rel=1e-9)
