"""
Mixture proposals and acceptance-rejection sampling of qubit posteriors

Everything here works on Bloch coordinates: (n, 2) arrays of (x, z) for the
real disc, (n, 3) arrays of (x, y, z) for the ball. Targets are callables
mapping such arrays to unnormalized log densities; the envelope constant c
absorbs their normalization.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq, minimize
from scipy.special import logsumexp

from config import settings
from core.density import det_exponent, log_density_bloch, log_normalization_constant_qubit
from core.errors import DimensionMismatch, InvalidParams, RatioExceedsBound, UnboundedRatio
from core.estimation import ClickRecord, MlePeak, Pom, PosteriorTarget, mle
from core.peak import PEAK_AXIS, PeakRequest, build_qubit_proposal
from core.state import (BlochVector, DensityMatrix, FieldKind, Rotation3, align_rotation,
                        bloch_to_rho, rho_to_bloch, rho_to_bloch_batch, to_plane)
from core.wishart import RandomStream, WishartParams, chunk_sizes, sample_bloch_array, sample_states_array


logger = logging.getLogger(__name__)

TargetLogPdf = Callable[[np.ndarray], np.ndarray]

_EVAL_CHUNK = 50_000


@dataclass(frozen=True)
class UniformState:
    """Flat density on the Bloch disc (real) or ball (complex)."""

    field: FieldKind = FieldKind.COMPLEX

    def __post_init__(self):
        object.__setattr__(self, 'field', FieldKind.parse(self.field))

    @property
    def log_density(self) -> float:
        volume = np.pi if self.field is FieldKind.REAL else 4 * np.pi / 3
        return -float(np.log(volume))

    def describe(self) -> dict:
        return {'kind': 'uniform', 'field': self.field.value}


Generator = Union[WishartParams, UniformState]


class ProposalSpec:
    """
    Weighted mixture of qubit Wishart and uniform components.

    A single rotation maps the frame in which the Wishart components peak
    (+x) onto the target frame; the uniform component is rotation invariant.
    """

    def __init__(self, components: Sequence[Tuple[float, Generator]], rotation: Optional[Rotation3] = None):
        components = [(float(w), g) for w, g in components]
        if not components:
            raise InvalidParams('Proposal needs at least one component')
        weights = np.array([w for w, _ in components])
        if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
            raise InvalidParams('Proposal weights must be non-negative and sum to 1', weights=weights)
        fields = {g.field for _, g in components}
        if len(fields) > 1:
            raise InvalidParams('Proposal components mix real and complex fields')
        for _, g in components:
            if isinstance(g, WishartParams) and g.d != 2:
                raise DimensionMismatch('Proposal components must be qubit ensembles', d=g.d)
        self.components: List[Tuple[float, Generator]] = components
        self.weights = weights
        self.rotation = rotation or Rotation3.identity()
        self._log_norms: Dict[int, float] = {}

    @property
    def field(self) -> FieldKind:
        return self.components[0][1].field

    @property
    def dim(self) -> int:
        return self.field.bloch_dim

    def log_normalizer(self, index: int) -> float:
        if index not in self._log_norms:
            self._log_norms[index] = log_normalization_constant_qubit(self.components[index][1])
        return self._log_norms[index]

    def prepare(self) -> 'ProposalSpec':
        """Compute every Wishart normalizer up front (before shipping the spec to workers)."""
        for index, (_, g) in enumerate(self.components):
            if isinstance(g, WishartParams):
                self.log_normalizer(index)
        return self

    def describe(self) -> List[dict]:
        return [
            {'weight': w, **(g.describe() if isinstance(g, UniformState) else {'kind': 'wishart', **g.describe()})}
            for w, g in self.components
        ]


def proposal_logpdf_bloch(spec: ProposalSpec, points: np.ndarray) -> np.ndarray:
    """Log of the normalized mixture density at Bloch points; -inf outside the state space."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    local = spec.rotation.inverse.apply(points)
    terms = []
    for index, (weight, g) in enumerate(spec.components):
        if weight == 0:
            continue
        if isinstance(g, UniformState):
            component = np.full(len(points), g.log_density)
        else:
            component = log_density_bloch(g, local) - spec.log_normalizer(index)
        terms.append(np.log(weight) + component)
    values = logsumexp(np.vstack(terms), axis=0)
    outside = np.sum(points ** 2, axis=1) > (1 + settings.BLOCH_RADIUS_TOL) ** 2
    return np.where(outside, -np.inf, values)


def proposal_logpdf(spec: ProposalSpec, rho: DensityMatrix) -> float:
    bloch = rho_to_bloch(rho, spec.field)
    return float(proposal_logpdf_bloch(spec, np.asarray(bloch.coords)[None])[0])


def propose_batch(spec: ProposalSpec, stream: RandomStream, n: int) -> np.ndarray:
    """
    Draw n Bloch points from the mixture.

    Component labels are drawn first, then each component's states in label
    order, so the output depends only on the stream.
    """
    labels = stream.generator.choice(len(spec.components), size=n, p=spec.weights)
    points = np.empty((n, spec.dim))
    for index, (_, g) in enumerate(spec.components):
        where = np.flatnonzero(labels == index)
        if where.size == 0:
            continue
        params = WishartParams.uniform(2, g.field) if isinstance(g, UniformState) else g
        drawn = sample_bloch_array(params, stream, where.size)
        points[where] = drawn if spec.field is FieldKind.COMPLEX else to_plane(drawn)
    return spec.rotation.apply(points)


def propose(spec: ProposalSpec, stream: RandomStream) -> DensityMatrix:
    point = propose_batch(spec, stream, 1)[0]
    return bloch_to_rho(BlochVector(tuple(point)))


def sample_uniform_bloch(field: FieldKind, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """n flat-distributed Bloch points (disc for real, ball for complex)."""
    field = FieldKind.parse(field)
    points = rho_to_bloch_batch(sample_states_array(WishartParams.uniform(2, field), n, seed, workers))
    return points if field is FieldKind.COMPLEX else to_plane(points)


def _log_ratio(target: TargetLogPdf, spec: ProposalSpec, points: np.ndarray) -> np.ndarray:
    target_values = np.asarray(target(points), dtype=float)
    target_values = np.where(target_values <= settings.LOG_FLOOR / 2, -np.inf, target_values)
    proposal_values = proposal_logpdf_bloch(spec, points)
    with np.errstate(invalid='ignore'):
        ratio = target_values - proposal_values
    return np.where(np.isneginf(target_values), -np.inf, ratio)


def fibonacci_boundary(field: FieldKind, count: int = settings.BOUNDARY_LATTICE) -> np.ndarray:
    """Near-uniform points on the unit circle (real) or unit sphere (complex)."""
    k = np.arange(count) + 0.5
    if field is FieldKind.REAL:
        angle = 2 * np.pi * k / count
        return np.column_stack([np.cos(angle), np.sin(angle)])
    polar = np.arccos(1 - 2 * k / count)
    azimuth = np.pi * (1 + np.sqrt(5)) * k
    return np.column_stack([np.cos(polar), np.sin(polar) * np.sin(azimuth), np.sin(polar) * np.cos(azimuth)])


def default_grid_resolution(field: FieldKind) -> float:
    if FieldKind.parse(field) is FieldKind.COMPLEX:
        return settings.DEFAULT_BALL_GRID_RESOLUTION
    return settings.DEFAULT_GRID_RESOLUTION


def bound_grid(field: FieldKind, resolution: float) -> np.ndarray:
    """Interior Cartesian grid with the given spacing plus the boundary lattice."""
    axis = np.arange(-1.0, 1.0 + resolution / 2, resolution)
    mesh = np.meshgrid(*([axis] * field.bloch_dim), indexing='ij')
    interior = np.column_stack([m.ravel() for m in mesh])
    interior = interior[np.sum(interior ** 2, axis=1) < 1]
    return np.vstack([interior, fibonacci_boundary(field)])


def estimate_bound(target_logpdf: TargetLogPdf, spec: ProposalSpec,
                   grid_resolution: Optional[float] = None,
                   safety: float = settings.DEFAULT_SAFETY) -> float:
    """
    Envelope constant c with target <= c * proposal.

    The log ratio is maximized over a grid plus a boundary lattice, then the
    best BOUND_REFINE_TOP points are refined by constrained SLSQP ascent.
    The grid spacing defaults to 0.01 on the disc and 0.025 in the ball;
    an explicit grid_resolution is used as given.

    Raises:
        UnboundedRatio: if the ratio is infinite somewhere (proposal vanishes
            where the target does not) or refinement runs away from the grid value
    """
    if safety < 1:
        raise InvalidParams('Safety factor must be at least 1', safety=safety)
    if grid_resolution is None:
        grid_resolution = default_grid_resolution(spec.field)
    if grid_resolution <= 0:
        raise InvalidParams('Grid resolution must be positive', grid_resolution=grid_resolution)
    spec.prepare()
    points = bound_grid(spec.field, grid_resolution)
    logger.debug('Bound grid: %d points at spacing %g', len(points), grid_resolution)
    log_ratio = np.concatenate([_log_ratio(target_logpdf, spec, points[i:i + _EVAL_CHUNK])
                                for i in range(0, len(points), _EVAL_CHUNK)])
    bad = np.isnan(log_ratio) | np.isposinf(log_ratio)
    if np.any(bad):
        raise UnboundedRatio('Target is positive where the proposal vanishes',
                             state=points[np.flatnonzero(bad)[0]])
    grid_max = float(np.max(log_ratio))
    if not np.isfinite(grid_max):
        raise InvalidParams('Target vanishes on the whole grid')

    def objective(b):
        scale = max(1.0, float(np.linalg.norm(b)))
        value = _log_ratio(target_logpdf, spec, (b / scale)[None])[0]
        if np.isnan(value) or np.isposinf(value):
            raise UnboundedRatio('Ratio diverges during bound refinement', state=b / scale)
        return -value if np.isfinite(value) else 1e10

    constraints = {'type': 'ineq', 'fun': lambda b: 1 - b @ b}
    best = grid_max
    for start in points[np.argsort(-log_ratio)[:settings.BOUND_REFINE_TOP]]:
        result = minimize(objective, start, method='SLSQP', constraints=constraints,
                          options={'ftol': 1e-12, 'maxiter': 200})
        best = max(best, -objective(result.x))
    if best - grid_max > np.log(settings.UNBOUNDED_FACTOR):
        raise UnboundedRatio('Bound refinement grew beyond the grid estimate',
                             grid_log_ratio=grid_max, refined_log_ratio=best)
    c = safety * float(np.exp(best))
    logger.info('Envelope constant c=%.6g (grid %.6g, refined %.6g)', c, np.exp(grid_max), np.exp(best))
    return c


@dataclass
class RejectionReport:
    proposed: int
    accepted: int
    bound_c: float
    max_observed_ratio: float
    wall_seconds: float

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0

    def to_dict(self) -> dict:
        return {
            'proposed': self.proposed,
            'accepted': self.accepted,
            'acceptance_rate': self.acceptance_rate,
            'bound_c': self.bound_c,
            'max_observed_ratio': self.max_observed_ratio,
            'wall_seconds': self.wall_seconds,
        }


def _rejection_batch(job):
    target, spec, log_c, seed, stream_id, size = job
    stream = RandomStream(seed, stream_id)
    points = propose_batch(spec, stream, size)
    log_ratio = _log_ratio(target, spec, points)
    bad = np.isnan(log_ratio) | (log_ratio > log_c + 1e-12)
    if np.any(bad):
        first = np.flatnonzero(bad)[0]
        raise RatioExceedsBound('Sampled ratio exceeds the envelope constant',
                                state=points[first], ratio=float(np.exp(log_ratio[first])),
                                bound_c=float(np.exp(log_c)), stream_id=stream_id)
    uniforms = stream.generator.random(size)
    with np.errstate(divide='ignore'):
        accept = np.log(uniforms) < log_ratio - log_c
    positions = np.flatnonzero(accept)
    return points[positions], positions, float(np.max(log_ratio))


def rejection_sample(target_logpdf: TargetLogPdf, spec: ProposalSpec, c: float, n_accept: int,
                     seed: int, workers: int = 1,
                     batch_size: int = settings.BATCH_SIZE) -> Tuple[np.ndarray, RejectionReport]:
    """
    Draw n_accept i.i.d. samples from the normalized target.

    Proposals are drawn in batches, batch i from stream (seed, i); batches are
    consumed in stream order and the output is cut at the n_accept-th
    acceptance, so results do not depend on the worker count.

    Args:
        target_logpdf: picklable callable on Bloch points (for workers > 1)
        spec: proposal mixture
        c: envelope constant
        n_accept: number of accepted samples
        seed: base seed
        workers: process count
        batch_size: proposals per stream

    Returns:
        (accepted Bloch points, RejectionReport)

    Raises:
        RatioExceedsBound: if any evaluated ratio exceeds c; details carry the state
    """
    if n_accept < 1:
        raise InvalidParams('n_accept must be at least 1', n_accept=n_accept)
    if not c > 0 or not np.isfinite(c):
        raise InvalidParams('Envelope constant must be positive and finite', c=c)
    started = time.perf_counter()
    spec.prepare()
    log_c = float(np.log(c))

    chunks: List[np.ndarray] = []
    accepted = proposed = stream_id = 0
    max_log_ratio = -np.inf
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while accepted < n_accept:
            jobs = [(target_logpdf, spec, log_c, seed, stream_id + j, batch_size)
                    for j in range(max(workers, 1))]
            stream_id += len(jobs)
            results = executor.map(_rejection_batch, jobs) if executor else map(_rejection_batch, jobs)
            for points, positions, batch_max in results:
                max_log_ratio = max(max_log_ratio, batch_max)
                need = n_accept - accepted
                if len(points) >= need:
                    chunks.append(points[:need])
                    proposed += int(positions[need - 1]) + 1
                    accepted = n_accept
                    break
                chunks.append(points)
                proposed += batch_size
                accepted += len(points)
            logger.debug('Rejection sampling: %d/%d accepted after %d proposals', accepted, n_accept, proposed)
    finally:
        if executor is not None:
            executor.shutdown()

    report = RejectionReport(proposed=proposed, accepted=accepted, bound_c=float(c),
                             max_observed_ratio=float(np.exp(max_log_ratio)),
                             wall_seconds=time.perf_counter() - started)
    logger.info('Accepted %d of %d proposals (rate %.4f) in %.2fs', report.accepted, report.proposed,
                report.acceptance_rate, report.wall_seconds)
    return np.concatenate(chunks, axis=0), report


def acceptance_trial(target_logpdf: TargetLogPdf, spec: ProposalSpec, c: float, n_proposals: int,
                     seed: int, workers: int = 1,
                     batch_size: int = settings.BATCH_SIZE) -> RejectionReport:
    """
    Run exactly n_proposals acceptance tests and report the acceptance rate.

    Uses the same streams as rejection_sample, so the first acceptances agree.
    """
    if n_proposals < 1:
        raise InvalidParams('n_proposals must be at least 1', n_proposals=n_proposals)
    started = time.perf_counter()
    spec.prepare()
    log_c = float(np.log(c))
    jobs = [(target_logpdf, spec, log_c, seed, stream_id, size)
            for stream_id, size in enumerate(chunk_sizes(n_proposals, batch_size))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_rejection_batch, jobs))
    else:
        results = [_rejection_batch(job) for job in jobs]
    return RejectionReport(proposed=n_proposals, accepted=sum(len(points) for points, _, _ in results),
                           bound_c=float(c),
                           max_observed_ratio=float(np.exp(max(m for _, _, m in results))),
                           wall_seconds=time.perf_counter() - started)


class Strategy(Enum):
    INTERIOR_PEAK = 'interior'
    BOUNDARY_PEAK = 'boundary'
    TWO_WISHART_MIX = 'mix'
    UNIFORM_ONLY = 'uniform'

    @classmethod
    def parse(cls, value: Union[str, 'Strategy']) -> 'Strategy':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParams(f"Unknown proposal strategy '{value}'", allowed=[s.value for s in cls])


@dataclass(frozen=True)
class ProposalKnobs:
    """
    Tuning knobs of the proposal strategies.

    N / interior_mu configure the interior Wishart (interior_mu=None fits the
    mean to the MLE radius); boundary_N / boundary_mu the boundary Wishart
    (boundary_mu=None matches the target's peak height); weights split the
    two Wishart components of the mixture; alpha is the uniform admixture.
    """

    N: Optional[int] = None
    alpha: float = settings.DEFAULT_UNIFORM_ALPHA
    interior_mu: Optional[float] = None
    boundary_N: Optional[int] = None
    boundary_mu: Optional[float] = None
    weights: Tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise InvalidParams('Uniform admixture alpha must lie in [0, 1)', alpha=self.alpha)
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != 2 or min(weights) < 0 or sum(weights) <= 0:
            raise InvalidParams('Mixture weights must be two non-negative numbers', weights=list(weights))
        object.__setattr__(self, 'weights', tuple(w / sum(weights) for w in weights))
        for name in ('interior_mu', 'boundary_mu'):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise InvalidParams(f'{name} must be non-negative', value=value)

    def boundary_columns(self, field: FieldKind) -> int:
        if self.boundary_N is not None:
            return self.boundary_N
        return 3 if field is FieldKind.REAL else 2


def _diameter(direction: np.ndarray, field: FieldKind, steps: int = 201) -> Tuple[np.ndarray, np.ndarray]:
    t = np.linspace(-1.0, 1.0, steps)
    points = t[:, None] * direction[None, :]
    return t, points if field is FieldKind.COMPLEX else to_plane(points)


def _log_peak_to_mean(log_f: np.ndarray, t: np.ndarray, index: int) -> float:
    finite = log_f[np.isfinite(log_f)]
    if finite.size == 0:
        return -np.inf
    shift = float(np.max(finite))
    f = np.exp(log_f - shift)
    mean = trapezoid(f, t) / (t[-1] - t[0])
    return float(log_f[index] - shift - np.log(mean))


def match_boundary_height(target_logpdf: TargetLogPdf, peak: MlePeak, field: FieldKind, N: int) -> float:
    """
    Mean of a boundary-peaked Wishart whose peak-to-mean ratio along the peak
    diameter matches the target's.

    The ratio is f(peak) / mean(f) on a 201-point diameter through the MLE
    direction; the Wishart ratio is 1 at mu = 0 and grows with mu.
    """
    field = FieldKind.parse(field)
    if det_exponent(WishartParams.central(field, 2, N)) != 0:
        raise InvalidParams('Height matching needs a Wishart that is positive on the boundary', N=N)
    direction = _direction(peak)
    t, target_points = _diameter(direction, field)
    target_values = np.asarray(target_logpdf(target_points), dtype=float)
    target_values = np.where(target_values <= settings.LOG_FLOOR / 2, -np.inf, target_values)
    log_target_ratio = _log_peak_to_mean(target_values, t, int(np.argmin(np.abs(t - peak.radius))))

    _, axis_points = _diameter(PEAK_AXIS.as_3d(), field)

    def log_proposal_ratio(mu):
        values = log_density_bloch(WishartParams.all_mu(field, 2, N, mu), axis_points)
        return _log_peak_to_mean(values, t, len(t) - 1)

    lo, hi = settings.MU_BRACKET
    if log_target_ratio <= 0:
        logger.info('Target peak-to-mean ratio <= 1, boundary mean set to 0')
        return 0.0
    if log_proposal_ratio(hi) < log_target_ratio:
        logger.warning('Target peak too sharp for N=%d, boundary mean clamped to %.1f', N, hi)
        return float(hi)
    mu = brentq(lambda m: log_proposal_ratio(m) - log_target_ratio, lo, hi, xtol=1e-10)
    logger.info('Boundary mean matched to target height: mu=%.6f', mu)
    return float(mu)


def _direction(peak: MlePeak) -> np.ndarray:
    vector = peak.bloch.as_3d()
    norm = np.linalg.norm(vector)
    return vector / norm if norm > 1e-12 else PEAK_AXIS.as_3d()


def _rotation_to(peak: MlePeak) -> Rotation3:
    if peak.radius < 1e-12:
        return Rotation3.identity()
    return align_rotation(PEAK_AXIS, peak.bloch)


def build_proposal(pom: Pom, clicks: ClickRecord, strategy: Union[Strategy, str],
                   knobs: Optional[ProposalKnobs] = None, peak: Optional[MlePeak] = None,
                   target_logpdf: Optional[TargetLogPdf] = None) -> ProposalSpec:
    """
    Proposal mixture for the posterior of (pom, clicks).

    INTERIOR_PEAK: Wishart peaked at the MLE plus uniform admixture.
    BOUNDARY_PEAK: boundary-positive Wishart along the MLE direction, mean
        from knobs or height matching, plus uniform admixture.
    TWO_WISHART_MIX: both Wishart components weighted by knobs.weights.
    UNIFORM_ONLY: flat proposal (baseline).
    """
    strategy = Strategy.parse(strategy)
    knobs = knobs or ProposalKnobs()
    field = pom.field
    if strategy is Strategy.UNIFORM_ONLY:
        return ProposalSpec([(1.0, UniformState(field))])

    peak = peak or mle(pom, clicks)
    target_logpdf = target_logpdf or PosteriorTarget(pom, clicks)
    rotation = _rotation_to(peak)
    wisharts: List[Tuple[float, WishartParams]] = []

    if strategy in (Strategy.INTERIOR_PEAK, Strategy.TWO_WISHART_MIX):
        if knobs.N is None:
            raise InvalidParams('Interior Wishart needs a column count N')
        if knobs.interior_mu is None:
            interior, rotation = build_qubit_proposal(PeakRequest(peak.bloch, knobs.N, field))
        else:
            interior = WishartParams.all_mu(field, 2, knobs.N, knobs.interior_mu)
        wisharts.append((knobs.weights[0] if strategy is Strategy.TWO_WISHART_MIX else 1.0, interior))

    if strategy in (Strategy.BOUNDARY_PEAK, Strategy.TWO_WISHART_MIX):
        boundary_N = knobs.boundary_columns(field)
        mu = knobs.boundary_mu
        if mu is None:
            mu = match_boundary_height(target_logpdf, peak, field, boundary_N)
        boundary = WishartParams.all_mu(field, 2, boundary_N, mu)
        wisharts.append((knobs.weights[1] if strategy is Strategy.TWO_WISHART_MIX else 1.0, boundary))

    components: List[Tuple[float, Generator]] = [((1 - knobs.alpha) * w, g) for w, g in wisharts]
    if knobs.alpha > 0:
        components.append((knobs.alpha, UniformState(field)))
    spec = ProposalSpec(components, rotation)
    logger.info('Built %s proposal for %s: %s', strategy.value, pom.name, spec.describe())
    return spec
