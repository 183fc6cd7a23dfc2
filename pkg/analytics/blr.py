"""
Bounded-likelihood regions: size and credibility curves

The region R_lambda holds the states whose likelihood is at least lambda times
the maximum likelihood. Its size is its share of a uniform sample, its
credibility its share of a posterior sample; the theoretical credibility
follows from the size curve alone, so agreement of the two credibility
curves certifies the posterior sample.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from config import settings
from analytics.sampler import (ProposalSpec, Strategy, build_proposal, estimate_bound, rejection_sample,
                               sample_uniform_bloch)
from core.errors import EmptySample, InvalidParams
from core.estimation import ClickRecord, MlePeak, Pom, PosteriorTarget, log_posterior, log_posterior_bloch, mle
from core.state import DensityMatrix


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BlrCurve:
    lambdas: np.ndarray
    size: np.ndarray
    credibility_empirical: np.ndarray
    credibility_theoretical: np.ndarray

    @property
    def max_deviation(self) -> float:
        """max over lambda of |c_emp - c_theory|."""
        return float(np.max(np.abs(self.credibility_empirical - self.credibility_theoretical)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'lambda': self.lambdas,
            'size': self.size,
            'credibility_empirical': self.credibility_empirical,
            'credibility_theoretical': self.credibility_theoretical,
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> 'BlrCurve':
        return cls(frame['lambda'].to_numpy(), frame['size'].to_numpy(),
                   frame['credibility_empirical'].to_numpy(), frame['credibility_theoretical'].to_numpy())


def default_lambdas(points: int = settings.DEFAULT_LAMBDA_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def _check_lambda(lam: float):
    if not 0 <= lam <= 1:
        raise InvalidParams('lambda must lie in [0, 1]', lam=lam)


def region_indicator(pom: Pom, clicks: ClickRecord, lam: float, rho: DensityMatrix,
                     peak: Optional[MlePeak] = None) -> bool:
    """True iff L(rho) >= lam * L(rho_ML)."""
    _check_lambda(lam)
    peak = peak or mle(pom, clicks)
    with np.errstate(divide='ignore'):
        return bool(log_posterior(pom, clicks, rho) >= np.log(lam) + peak.log_likelihood_at_peak - 1e-12)


def likelihood_ratios(pom: Pom, clicks: ClickRecord, points: np.ndarray, peak: MlePeak) -> np.ndarray:
    """L(b) / L(rho_ML) for Bloch points, clipped to [0, 1]."""
    log_values = log_posterior_bloch(pom, clicks, points)
    return np.clip(np.exp(log_values - peak.log_likelihood_at_peak), 0.0, 1.0)


def region_mask(pom: Pom, clicks: ClickRecord, lam: float, points: np.ndarray,
                peak: Optional[MlePeak] = None) -> np.ndarray:
    _check_lambda(lam)
    peak = peak or mle(pom, clicks)
    return likelihood_ratios(pom, clicks, points, peak) >= lam


def _fraction_at_least(sorted_ratios: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    n = len(sorted_ratios)
    return (n - np.searchsorted(sorted_ratios, lambdas, side='left')) / n


def theoretical_credibility(lambdas: np.ndarray, size: np.ndarray) -> np.ndarray:
    """
    (lam s_lam + int_lam^1 s) / int_0^1 s by the trapezoid rule.

    The grid must start at 0 and end at 1.
    """
    cumulative = cumulative_trapezoid(size, lambdas, initial=0.0)
    total = cumulative[-1]
    if total <= 0:
        raise EmptySample('Size curve integrates to zero')
    values = (lambdas * size + (total - cumulative)) / total
    return np.minimum.accumulate(np.clip(values, 0.0, 1.0))


def blr_curves(pom: Pom, clicks: ClickRecord, uniform_sample: np.ndarray, posterior_sample: np.ndarray,
               lambdas: Optional[Sequence[float]] = None, peak: Optional[MlePeak] = None) -> BlrCurve:
    """
    Size, empirical credibility and theoretical credibility on a lambda grid.

    Args:
        pom, clicks: the likelihood defining the regions
        uniform_sample: Bloch points from the flat distribution
        posterior_sample: Bloch points from the posterior
        lambdas: sorted grid in [0, 1] (default 101 points)
        peak: precomputed MLE

    Raises:
        EmptySample: if either sample is empty
    """
    uniform_sample = np.atleast_2d(np.asarray(uniform_sample, dtype=float))
    posterior_sample = np.atleast_2d(np.asarray(posterior_sample, dtype=float))
    if uniform_sample.size == 0 or posterior_sample.size == 0:
        raise EmptySample('Bounded-likelihood curves need non-empty samples',
                          uniform=len(uniform_sample), posterior=len(posterior_sample))
    lambdas = default_lambdas() if lambdas is None else np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lambdas) < 0) or lambdas[0] < 0 or lambdas[-1] > 1:
        raise InvalidParams('lambda grid must be sorted within [0, 1]')
    peak = peak or mle(pom, clicks)

    uniform_ratios = np.sort(likelihood_ratios(pom, clicks, uniform_sample, peak))
    posterior_ratios = np.sort(likelihood_ratios(pom, clicks, posterior_sample, peak))

    grid = np.union1d(lambdas, [0.0, 1.0])
    size_grid = _fraction_at_least(uniform_ratios, grid)
    theory_grid = theoretical_credibility(grid, size_grid)
    positions = np.searchsorted(grid, lambdas)

    curve = BlrCurve(lambdas=lambdas,
                     size=size_grid[positions],
                     credibility_empirical=_fraction_at_least(posterior_ratios, lambdas),
                     credibility_theoretical=theory_grid[positions])
    logger.info('Bounded-likelihood curves on %d points, max credibility gap %.4f',
                len(lambdas), curve.max_deviation)
    return curve


def blr_convergence(pom: Pom, clicks: ClickRecord, sizes: Sequence[int], seed: int,
                    spec: Optional[ProposalSpec] = None, c: Optional[float] = None,
                    lambdas: Optional[Sequence[float]] = None, workers: int = 1) -> pd.DataFrame:
    """
    Credibility gap max|c_emp - c_theory| at several sample sizes.

    One uniform and one posterior sample of the largest size are drawn;
    smaller sizes use their leading prefixes.
    """
    if not sizes or min(sizes) < 1:
        raise InvalidParams('Sample sizes must be positive', sizes=list(sizes))
    peak = mle(pom, clicks)
    target = PosteriorTarget.scaled_to_peak(pom, clicks, peak)
    spec = spec or build_proposal(pom, clicks, Strategy.UNIFORM_ONLY, peak=peak)
    c = c or estimate_bound(target, spec)
    largest = max(sizes)
    uniform = sample_uniform_bloch(pom.field, largest, seed, workers)
    posterior, _ = rejection_sample(target, spec, c, largest, seed + 1, workers)

    rows = []
    for size in sorted(sizes):
        curve = blr_curves(pom, clicks, uniform[:size], posterior[:size], lambdas, peak)
        rows.append({'size': size, 'max_deviation': curve.max_deviation})
    return pd.DataFrame(rows)
