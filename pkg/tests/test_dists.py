"""Distribution closed forms, certifications, sampling, and serialization."""


import numpy as np
import pytest
from scipy import stats

from refine_lab.dists import (
    DomainError,
    Exponential,
    ParameterError,
    TruncatedShiftedEqualRevenue,
    Uniform,
    dist_from_json,
)

U01 = Uniform(0.0, 1.0)
U35 = Uniform(3.0, 5.0)
EXP1 = Exponential(1.0)
TSER = TruncatedShiftedEqualRevenue(1000.0, -1.0)

ALL_DISTS = [U01, U35, EXP1, TSER]


class TestClosedForms:
    def test_cdf_values(self):
        assert U01.cdf(0.5) == pytest.approx(0.5, abs=1e-12)
        assert TSER.cdf(2.0) == pytest.approx(0.0, abs=1e-12)
        assert TSER.cdf(1001.0) == pytest.approx(1.0, abs=1e-12)

    def test_cdf_endpoints(self):
        for dist in ALL_DISTS:
            lo, hi = dist.support
            assert dist.cdf(lo) == pytest.approx(0.0, abs=1e-12)
            assert dist.cdf(hi) == pytest.approx(1.0, abs=1e-9)

    def test_pdf_values(self):
        assert U35.pdf(4.0) == pytest.approx(0.5, abs=1e-12)
        assert TSER.pdf(2.0) == pytest.approx(1000.0 / 999.0, abs=1e-9)
        assert EXP1.pdf(0.0) == pytest.approx(1.0, abs=1e-12)

    def test_out_of_support_rejected(self):
        with pytest.raises(DomainError):
            U01.cdf(1.5)
        with pytest.raises(DomainError):
            TSER.pdf(1.0)
        # the exponential's upper endpoint is a numeric truncation, not a bound
        assert EXP1.cdf(1e3) == pytest.approx(1.0)

    def test_pdf_is_cdf_derivative(self):
        for dist in ALL_DISTS:
            grid = dist.interior_grid(200)
            h = (dist.support[1] - dist.support[0]) * 1e-7
            numeric = (dist.cdf(grid + h) - dist.cdf(grid - h)) / (2 * h)
            assert np.allclose(numeric, dist.pdf(grid), rtol=1e-6)

    def test_quantile_round_trip(self):
        assert U35.quantile(0.5) == pytest.approx(4.0, abs=1e-12)
        assert U01.quantile(0.25) == pytest.approx(0.25, abs=1e-12)
        assert TSER.quantile(0.0) == pytest.approx(2.0, abs=1e-12)
        p = np.linspace(0.001, 0.999, 101)
        for dist in ALL_DISTS:
            assert np.allclose(dist.cdf(dist.quantile(p)), p, atol=1e-10)

    def test_quantile_rejects_bad_probability(self):
        with pytest.raises(ParameterError):
            U01.quantile(1.5)


class TestRentAndVirtualValue:
    def test_uniform_rent(self):
        assert U01.inverse_hazard_rate(0.5) == pytest.approx(0.5, abs=1e-12)
        v = np.linspace(3.01, 4.99, 50)
        assert np.allclose(U35.inverse_hazard_rate(v), 5.0 - v, atol=1e-12)

    def test_tser_rent_closed_form(self):
        v = np.linspace(2.0, 1001.0, 200)
        expected = v - (v - 1.0) ** 2 / 1000.0 - 1.0
        assert np.allclose(TSER.inverse_hazard_rate(v), expected, atol=1e-9)
        # agrees with the generic (1 - F) / f route
        generic = (1.0 - np.asarray(TSER.cdf(v))) / np.asarray(TSER.pdf(v))
        assert np.allclose(TSER.inverse_hazard_rate(v), generic, atol=1e-8)

    def test_virtual_value(self):
        v = np.linspace(0.01, 0.99, 50)
        assert np.allclose(U01.virtual_value(v), 2 * v - 1, atol=1e-12)
        assert U35.virtual_value(3.0) == pytest.approx(1.0, abs=1e-12)
        v = np.linspace(2.0, 1001.0, 200)
        assert np.allclose(
            TSER.virtual_value(v), (v - 1.0) ** 2 / 1000.0 + 1.0, atol=1e-9
        )

    def test_virtual_value_identity(self):
        for dist in ALL_DISTS:
            grid = dist.interior_grid(500)
            lhs = np.asarray(dist.virtual_value(grid))
            rhs = grid - np.asarray(dist.inverse_hazard_rate(grid))
            assert np.array_equal(lhs, rhs)

    def test_alpha_virtual_value(self):
        grid = np.linspace(0.05, 0.95, 20)
        assert np.allclose(U01.alpha_virtual_value(grid, 0.0), grid, atol=1e-12)
        assert np.allclose(
            U01.alpha_virtual_value(grid, 1.0), U01.virtual_value(grid), atol=1e-12
        )
        assert U01.alpha_virtual_value(0.8, 0.5) == pytest.approx(0.7, abs=1e-12)
        for dist in ALL_DISTS:
            g = dist.interior_grid(100)
            for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
                combo = (1 - alpha) * g + alpha * np.asarray(dist.virtual_value(g))
                assert np.allclose(
                    dist.alpha_virtual_value(g, alpha), combo, atol=1e-12
                )

    def test_alpha_out_of_range(self):
        with pytest.raises(ParameterError):
            U01.alpha_virtual_value(0.5, 1.1)

    def test_penalty_fraction(self):
        assert U01.penalty_fraction(0.5) == pytest.approx(1.0, abs=1e-12)
        assert U35.penalty_fraction(4.0) == pytest.approx(0.25, abs=1e-12)
        assert U35.penalty_fraction(5.0) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(DomainError):
            U01.penalty_fraction(0.0)


class TestCertifications:
    def test_mhr(self):
        assert U01.certify_mhr().holds
        assert U35.certify_mhr().holds
        assert EXP1.certify_mhr().holds

    def test_tser_not_mhr_with_witness(self):
        res = TSER.certify_mhr()
        assert not res.holds
        v1, v2 = res.witness
        assert 2.0 <= v1 < v2 <= 501.0
        assert TSER.inverse_hazard_rate(v1) < TSER.inverse_hazard_rate(v2)

    def test_regular(self):
        for dist in ALL_DISTS:
            assert dist.certify_regular().holds

    def test_mhr_implies_regular(self):
        for dist in ALL_DISTS:
            if dist.certify_mhr().holds:
                assert dist.certify_regular().holds

    def test_mhr_implies_penalty_fraction_non_increasing(self):
        for dist in (U01, U35, EXP1):
            assert dist.certify_mhr().holds
            grid = dist.interior_grid(2000)
            grid = grid[grid > 0]
            frac = np.asarray(dist.penalty_fraction(grid))
            assert np.all(np.diff(frac) <= 1e-9)


class TestRelevanceTransform:
    """Scaling values by a relevance p scales rent and virtual value by p.

    If r = p * v then the induced law G(r) = F(r / p) satisfies
    rent_G(r) = p * rent_F(r / p) and phi_G(r) = p * phi_F(r / p).
    """

    @pytest.mark.parametrize("p", [0.25, 0.5, 0.8, 1.0])
    def test_transform(self, p):
        for dist in ALL_DISTS:
            # central quantile range; finite differences degrade where f -> 0
            v = np.asarray(dist.quantile(np.linspace(0.01, 0.99, 99)))
            r = p * v
            h = 1e-5 * (np.abs(r) + 1.0)
            G = lambda x: np.asarray(dist.cdf(np.clip(x / p, *dist.support)))
            g = (G(r + h) - G(r - h)) / (2 * h)
            rent_g = (1.0 - G(r)) / g
            rent_expected = p * np.asarray(dist.inverse_hazard_rate(v))
            assert np.allclose(rent_g, rent_expected, atol=1e-8, rtol=1e-5)
            assert np.allclose(
                r - rent_g, p * np.asarray(dist.virtual_value(v)), atol=1e-8,
                rtol=1e-5,
            )


class TestSampling:
    def test_empty(self):
        assert U01.sample(seed=1, n=0).size == 0

    def test_deterministic(self):
        a = U01.sample(seed=7, n=3)
        b = U01.sample(seed=7, n=3)
        assert np.array_equal(a, b)
        c = U01.sample(seed=8, n=3)
        assert not np.array_equal(a, c)

    def test_streams_differ(self):
        a = U01.sample(seed=7, n=100, stream=0)
        b = U01.sample(seed=7, n=100, stream=1)
        assert not np.array_equal(a, b)

    def test_mean(self):
        x = U35.sample(seed=123, n=10_000)
        assert abs(x.mean() - 4.0) < 0.05

    def test_values_in_support(self):
        for dist in ALL_DISTS:
            x = dist.sample(seed=5, n=1000)
            assert np.all(x >= dist.support[0])
            if dist.hard_upper_bound:
                assert np.all(x <= dist.support[1])

    def test_kolmogorov_smirnov(self):
        for dist in ALL_DISTS:
            x = dist.sample(seed=11, n=10_000)
            stat = stats.kstest(x, lambda v: np.asarray(dist.cdf(v))).statistic
            assert stat < 0.02


class TestSerialization:
    def test_round_trip(self):
        for dist in ALL_DISTS:
            clone = dist_from_json(dist.to_json())
            assert clone == dist

    def test_schema(self):
        assert U35.to_json() == {"kind": "uniform", "params": {"lo": 3.0, "hi": 5.0}}
        assert EXP1.to_json() == {"kind": "exponential", "params": {"rate": 1.0}}
        assert TSER.to_json() == {"kind": "tser", "params": {"H": 1000.0, "b": -1.0}}

    def test_malformed(self):
        with pytest.raises(ParameterError):
            dist_from_json({"kind": "beta", "params": {}})
        with pytest.raises(ParameterError):
            dist_from_json({"params": {}})


class TestParameterValidation:
    def test_bad_params(self):
        with pytest.raises(ParameterError):
            Uniform(1.0, 1.0)
        with pytest.raises(ParameterError):
            Exponential(0.0)
        with pytest.raises(ParameterError):
            TruncatedShiftedEqualRevenue(1.0, -1.0)
