"""
Posterior sampling pipeline, acceptance sweeps and timing benchmarks
"""

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from analytics.sampler import (ProposalKnobs, ProposalSpec, RejectionReport, Strategy, acceptance_trial,
                               build_proposal, estimate_bound, rejection_sample)
from config.experiment import BenchAcceptanceConfig, PosteriorConfig, PosteriorSampleConfig
from core.errors import InvalidParams, NumericError
from core.estimation import MlePeak, PosteriorTarget, mle
from utils.helpers import format_duration, format_percentage


logger = logging.getLogger(__name__)

STAGES = ('peak', 'proposal', 'bound', 'sample')


@dataclass
class PipelineResult:
    points: np.ndarray
    peak: MlePeak
    spec: ProposalSpec
    report: RejectionReport
    stage_seconds: Dict[str, float] = field(default_factory=dict)

    @property
    def total_seconds(self) -> float:
        return sum(self.stage_seconds.values())

    @property
    def samples_per_second(self) -> float:
        return self.report.accepted / self.total_seconds if self.total_seconds > 0 else float('inf')

    def timing(self) -> Dict:
        return {
            'stages': {stage: self.stage_seconds[stage] for stage in STAGES if stage in self.stage_seconds},
            'total_seconds': self.total_seconds,
            'samples_per_second': self.samples_per_second,
        }


class PosteriorPipeline:
    """
    Peak finding, proposal construction, envelope estimate and rejection
    sampling for one posterior config, with per-stage wall times.
    """

    def __init__(self, config: PosteriorConfig, workers: int = 1):
        """
        Initialize the pipeline.

        Args:
            config: posterior and proposal configuration
            workers: process count for sampling; results do not depend on it
        """
        self.config = config
        self.workers = max(1, int(workers))
        self.pom = config.get_pom()
        self.clicks = config.click_record()
        self.stage_seconds: Dict[str, float] = {}

    def _timed(self, stage: str, fn, *args, **kwargs):
        started = time.perf_counter()
        value = fn(*args, **kwargs)
        self.stage_seconds[stage] = time.perf_counter() - started
        logger.debug('Stage %s took %s', stage, format_duration(self.stage_seconds[stage]))
        return value

    def prepare(self) -> Tuple[MlePeak, PosteriorTarget, ProposalSpec, float]:
        """Run the first three stages: MLE, proposal, envelope constant."""
        config = self.config
        peak = self._timed('peak', mle, self.pom, self.clicks)
        target = PosteriorTarget.scaled_to_peak(self.pom, self.clicks, peak)
        spec = self._timed('proposal', build_proposal, self.pom, self.clicks,
                           config.strategy, config.knobs(), peak, target)
        c = self._timed('bound', estimate_bound, target, spec, config.grid_resolution, config.safety)
        return peak, target, spec, c

    def run(self, n_accept: int) -> PipelineResult:
        """
        Draw n_accept posterior samples.

        Raises:
            InvalidParams: if n_accept < 1
            NumericError: propagated from the stages
        """
        if n_accept < 1:
            raise InvalidParams('n_accept must be at least 1', n_accept=n_accept)
        peak, target, spec, c = self.prepare()
        points, report = self._timed('sample', rejection_sample, target, spec, c, n_accept,
                                     self.config.seed, self.workers)
        result = PipelineResult(points, peak, spec, report, dict(self.stage_seconds))
        logger.info('Posterior pipeline for %s %s: %d samples in %s (%.0f samples/s)', self.pom.name,
                    list(self.clicks.counts), report.accepted, format_duration(result.total_seconds),
                    result.samples_per_second)
        return result


def posterior_sample(config: PosteriorSampleConfig, workers: int = 1) -> PipelineResult:
    return PosteriorPipeline(config, workers).run(config.n_accept)


def bench_time(config: PosteriorSampleConfig, workers: int = 1) -> Tuple[PipelineResult, Dict]:
    """
    Time the full pipeline (peak, proposal, bound, sample) for one config.

    Args:
        config: posterior-sample configuration; n_accept sets the sample count
        workers: process count

    Returns:
        (pipeline result, report dict with per-stage seconds and samples/second)
    """
    result = posterior_sample(config, workers)
    report = {
        'pom': config.pom,
        'clicks': list(config.clicks),
        'strategy': Strategy.parse(config.strategy).value,
        'workers': workers,
        'sampling': result.report.to_dict(),
        **result.timing(),
    }
    logger.info('Acceptance rate %s, end-to-end %s', format_percentage(result.report.acceptance_rate),
                format_duration(result.total_seconds))
    return result, report


def _sweep_settings(config: BenchAcceptanceConfig) -> List[Dict]:
    strategy = Strategy.parse(config.strategy)
    if strategy is Strategy.UNIFORM_ONLY:
        return []
    columns = [config.N] if strategy is Strategy.BOUNDARY_PEAK else (list(config.N_values) or [config.N])
    rows = []
    for N, alpha, mu in itertools.product(columns, config.alphas, config.mu_values):
        rows.append({'strategy': strategy.value, 'N': N, 'alpha': alpha, 'mu': mu})
    return rows


def _knobs_for(config: BenchAcceptanceConfig, row: Dict) -> ProposalKnobs:
    strategy = Strategy.parse(row['strategy'])
    interior_mu = row['mu'] if strategy is Strategy.INTERIOR_PEAK else config.interior_mu
    boundary_mu = row['mu'] if strategy is not Strategy.INTERIOR_PEAK else config.boundary_mu
    return ProposalKnobs(N=row['N'], alpha=row['alpha'], interior_mu=interior_mu,
                         boundary_N=config.boundary_N, boundary_mu=boundary_mu, weights=config.weights)


def bench_acceptance(config: BenchAcceptanceConfig, workers: int = 1) -> Tuple[pd.DataFrame, Dict]:
    """
    Acceptance rate for every (N, alpha, mu) setting of a posterior.

    Each setting gets its own proposal and envelope constant and runs
    n_proposals acceptance tests from the config seed. Settings whose
    proposal cannot envelope the target are kept with the error name.

    Returns:
        (one row per setting, best row as a dict)
    """
    pom, clicks = config.get_pom(), config.click_record()
    peak = mle(pom, clicks)
    target = PosteriorTarget.scaled_to_peak(pom, clicks, peak)

    settings_rows = _sweep_settings(config)
    if config.include_uniform or not settings_rows:
        settings_rows.append({'strategy': Strategy.UNIFORM_ONLY.value, 'N': None, 'alpha': 1.0, 'mu': None})

    rows = []
    for row in settings_rows:
        strategy = Strategy.parse(row['strategy'])
        record = dict(row, bound_c=np.nan, proposed=0, accepted=0, acceptance_rate=np.nan, error=None)
        try:
            knobs = _knobs_for(config, row) if strategy is not Strategy.UNIFORM_ONLY else None
            spec = build_proposal(pom, clicks, strategy, knobs, peak, target)
            c = estimate_bound(target, spec, config.grid_resolution, config.safety)
            trial = acceptance_trial(target, spec, c, config.n_proposals, config.seed, workers)
        except NumericError as e:
            logger.warning('Setting %s failed: %s', row, e.message)
            record['error'] = type(e).__name__
        else:
            record.update(bound_c=c, proposed=trial.proposed, accepted=trial.accepted,
                          acceptance_rate=trial.acceptance_rate)
            logger.info('%s N=%s alpha=%g mu=%s: acceptance %s', strategy.value, row['N'], row['alpha'],
                        row['mu'], format_percentage(trial.acceptance_rate))
        rows.append(record)

    sweep = pd.DataFrame(rows, columns=['strategy', 'N', 'alpha', 'mu', 'bound_c', 'proposed', 'accepted',
                                        'acceptance_rate', 'error'])
    valid = sweep.dropna(subset=['acceptance_rate'])
    if valid.empty:
        best = {}
    else:
        best = {k: (None if pd.isna(v) else v) for k, v in valid.loc[valid['acceptance_rate'].idxmax()].items()}
        best = {k: (v.item() if hasattr(v, 'item') else v) for k, v in best.items()}
    return sweep, best
