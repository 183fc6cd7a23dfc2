"""
Tests for bounded-likelihood regions and the credibility certificate
"""

import numpy as np
import pytest

from analytics.blr import (BlrCurve, blr_convergence, blr_curves, default_lambdas, likelihood_ratios,
                           region_indicator, region_mask, theoretical_credibility)
from analytics.sampler import Strategy, build_proposal, estimate_bound, rejection_sample, sample_uniform_bloch
from core.errors import EmptySample, InvalidParams
from core.estimation import ClickRecord, PosteriorTarget, mle
from core.state import BlochVector, bloch_to_rho


@pytest.fixture
def boundary_clicks():
    return ClickRecord((5, 20, 23, 7))


def _posterior(pom, clicks, n, seed):
    peak = mle(pom, clicks)
    target = PosteriorTarget.scaled_to_peak(pom, clicks, peak)
    spec = build_proposal(pom, clicks, Strategy.UNIFORM_ONLY)
    points, _ = rejection_sample(target, spec, estimate_bound(target, spec), n, seed)
    return peak, points


class TestRegions:

    def test_peak_is_in_every_region(self, tetrahedron, boundary_clicks):
        peak = mle(tetrahedron, boundary_clicks)
        rho = bloch_to_rho(BlochVector(tuple(np.array(peak.bloch.coords) * (1 - 1e-12))))
        assert region_indicator(tetrahedron, boundary_clicks, 1.0, rho, peak)

    def test_far_state_is_excluded(self, tetrahedron, boundary_clicks):
        peak = mle(tetrahedron, boundary_clicks)
        far = BlochVector(tuple(-np.array(peak.bloch.coords)))
        assert not region_indicator(tetrahedron, boundary_clicks, 0.5, bloch_to_rho(far), peak)

    def test_lambda_zero_covers_everything(self, trine, trine_clicks):
        points = sample_uniform_bloch(trine.field, 200, seed=4)
        assert np.all(region_mask(trine, trine_clicks, 0.0, points))

    def test_lambda_out_of_range(self, trine, trine_clicks):
        with pytest.raises(InvalidParams):
            region_mask(trine, trine_clicks, 1.5, np.zeros((1, 2)))

    def test_ratios_bounded_by_one(self, tetrahedron, boundary_clicks):
        peak = mle(tetrahedron, boundary_clicks)
        ratios = likelihood_ratios(tetrahedron, boundary_clicks, sample_uniform_bloch(tetrahedron.field, 500, 2), peak)
        assert np.all((ratios >= 0) & (ratios <= 1))


class TestTheoreticalCredibility:

    def test_linear_size_curve(self):
        # s = 1 - lam gives c = 1 - lam^2 exactly under the trapezoid rule
        lambdas = default_lambdas(11)
        np.testing.assert_allclose(theoretical_credibility(lambdas, 1 - lambdas), 1 - lambdas ** 2, atol=1e-12)

    def test_empty_size_curve(self):
        with pytest.raises(EmptySample):
            theoretical_credibility(default_lambdas(5), np.zeros(5))


class TestCurves:

    def test_shape_and_endpoints(self, trine, trine_clicks):
        peak, posterior = _posterior(trine, trine_clicks, 2000, seed=5)
        uniform = sample_uniform_bloch(trine.field, 2000, seed=6)
        curve = blr_curves(trine, trine_clicks, uniform, posterior, peak=peak)
        assert len(curve.lambdas) == 101
        assert curve.size[0] == 1.0 and curve.credibility_empirical[0] == 1.0
        assert curve.credibility_theoretical[0] == pytest.approx(1.0)
        assert np.all(np.diff(curve.size) <= 0)
        assert np.all(np.diff(curve.credibility_theoretical) <= 1e-15)

    def test_empty_sample(self, trine, trine_clicks):
        with pytest.raises(EmptySample):
            blr_curves(trine, trine_clicks, np.empty((0, 2)), np.zeros((3, 2)))

    def test_unsorted_lambdas(self, trine, trine_clicks):
        with pytest.raises(InvalidParams):
            blr_curves(trine, trine_clicks, np.zeros((3, 2)), np.zeros((3, 2)), lambdas=[0.5, 0.2])

    def test_frame_columns(self, trine, trine_clicks):
        points = sample_uniform_bloch(trine.field, 300, seed=7)
        frame = blr_curves(trine, trine_clicks, points, points).to_frame()
        assert list(frame.columns) == ['lambda', 'size', 'credibility_empirical', 'credibility_theoretical']
        assert BlrCurve.from_frame(frame).max_deviation == pytest.approx(
            np.abs(frame['credibility_empirical'] - frame['credibility_theoretical']).max())

    def test_posterior_sample_passes_certificate(self, tetrahedron, boundary_clicks):
        peak, posterior = _posterior(tetrahedron, boundary_clicks, 20000, seed=9)
        uniform = sample_uniform_bloch(tetrahedron.field, 20000, seed=10)
        assert blr_curves(tetrahedron, boundary_clicks, uniform, posterior, peak=peak).max_deviation <= 0.03

    def test_convergence_rejects_empty_sizes(self, trine, trine_clicks):
        with pytest.raises(InvalidParams):
            blr_convergence(trine, trine_clicks, [0], seed=1)

    def test_uniform_sample_fails_certificate(self, tetrahedron, boundary_clicks):
        peak = mle(tetrahedron, boundary_clicks)
        uniform = sample_uniform_bloch(tetrahedron.field, 5000, seed=10)
        wrong = sample_uniform_bloch(tetrahedron.field, 5000, seed=11)
        assert blr_curves(tetrahedron, boundary_clicks, uniform, wrong, peak=peak).max_deviation > 0.1


@pytest.mark.slow
class TestConvergence:

    def test_gap_at_full_size(self, tetrahedron, boundary_clicks):
        table = blr_convergence(tetrahedron, boundary_clicks, [10_000, 50_000, 100_000], seed=1)
        assert list(table['size']) == [10_000, 50_000, 100_000]
        assert table['max_deviation'].iloc[-1] <= 0.02