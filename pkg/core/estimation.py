"""
Qubit measurements, click records, posterior targets and maximum likelihood
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import xlogy

from config import settings
from core.errors import DimensionMismatch, InvalidParams
from core.state import (IDENTITY2, PAULI_X, PAULI_Y, PAULI_Z, PAULIS, BlochVector, DensityMatrix,
                        FieldKind, plane_to_3d, to_plane)


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Pom:
    """
    Qubit probability-operator measurement: PSD effects summing to the identity.

    Outcome probabilities are affine in Bloch coordinates,
    p_k = offsets[k] + directions[k] . b.
    """

    name: str
    effects: np.ndarray
    field: FieldKind = FieldKind.COMPLEX

    def __post_init__(self):
        effects = np.asarray(self.effects, dtype=complex)
        object.__setattr__(self, 'effects', effects)
        object.__setattr__(self, 'field', FieldKind.parse(self.field))
        if effects.ndim != 3 or effects.shape[1:] != (2, 2):
            raise DimensionMismatch('POM effects must be a stack of 2 x 2 matrices', shape=effects.shape)
        for k, effect in enumerate(effects):
            if np.max(np.abs(effect - effect.conj().T)) > settings.HERMITIAN_TOL:
                raise InvalidParams('POM effect is not Hermitian', outcome=k)
            if np.min(np.linalg.eigvalsh(effect)) < -1e-12:
                raise InvalidParams('POM effect is not positive semidefinite', outcome=k)
        deviation = np.max(np.abs(effects.sum(axis=0) - IDENTITY2))
        if deviation > 1e-12:
            raise InvalidParams('POM effects do not sum to the identity', deviation=float(deviation))

    @property
    def outcomes(self) -> int:
        return len(self.effects)

    @property
    def offsets(self) -> np.ndarray:
        return np.real(np.trace(self.effects, axis1=1, axis2=2)) / 2

    @property
    def directions(self) -> np.ndarray:
        """(K, 3) array of tr(Pi_k sigma_i)/2."""
        return np.real(np.einsum('kab,iba->ki', self.effects, PAULIS)) / 2

    def permuted(self, order: Sequence[int]) -> 'Pom':
        return Pom(self.name, self.effects[list(order)], self.field)


def _crosshair_real() -> Pom:
    effects = [(IDENTITY2 + s * P) / 4 for P in (PAULI_X, PAULI_Z) for s in (1, -1)]
    return Pom('crosshair-real', np.array(effects), FieldKind.REAL)


def _crosshair_complex() -> Pom:
    effects = [(IDENTITY2 + s * P) / 6 for P in (PAULI_X, PAULI_Y, PAULI_Z) for s in (1, -1)]
    return Pom('crosshair-complex', np.array(effects), FieldKind.COMPLEX)


def _trine() -> Pom:
    angles = 2 * np.pi * np.arange(3) / 3
    effects = [(IDENTITY2 + np.cos(a) * PAULI_X + np.sin(a) * PAULI_Z) / 3 for a in angles]
    return Pom('trine', np.array(effects), FieldKind.REAL)


def _tetrahedron() -> Pom:
    signs = np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]) / np.sqrt(3)
    effects = [(IDENTITY2 + np.einsum('i,ijk->jk', s, PAULIS)) / 4 for s in signs]
    return Pom('tetrahedron', np.array(effects), FieldKind.COMPLEX)


BUILTIN_POMS: Dict[str, Callable[[], Pom]] = {
    'crosshair-real': _crosshair_real,
    'crosshair-complex': _crosshair_complex,
    'trine': _trine,
    'tetrahedron': _tetrahedron,
}


def get_pom(name: str) -> Pom:
    """Built-in POM by name."""
    try:
        return BUILTIN_POMS[name]()
    except KeyError:
        raise InvalidParams(f"Unknown POM '{name}'", allowed=sorted(BUILTIN_POMS))


@dataclass(frozen=True)
class ClickRecord:
    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(self.counts)
        if not counts:
            raise InvalidParams('Click record is empty')
        for n in counts:
            if isinstance(n, bool) or int(n) != n or n < 0:
                raise InvalidParams('Click counts must be non-negative integers', counts=list(counts))
        counts = tuple(int(n) for n in counts)
        if sum(counts) < 1:
            raise InvalidParams('Click record needs at least one click', counts=list(counts))
        object.__setattr__(self, 'counts', counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=float)

    def check(self, pom: Pom):
        if len(self.counts) != pom.outcomes:
            raise DimensionMismatch('Click record does not match the POM outcome count',
                                    clicks=len(self.counts), outcomes=pom.outcomes)


@dataclass(frozen=True)
class MlePeak:
    bloch: BlochVector
    spherical: Tuple[float, float, float]
    log_likelihood_at_peak: float
    on_boundary: bool

    @property
    def radius(self) -> float:
        return self.spherical[0]

    @property
    def plane_angle(self) -> float:
        """Angle of the real-plane projection, from +x towards +z, in [0, 2 pi)."""
        x, _, z = self.bloch.as_3d()
        return float(np.arctan2(z, x) % (2 * np.pi))

    def to_dict(self) -> dict:
        r, theta, phi = self.spherical
        return {
            'bloch': list(self.bloch.coords),
            'spherical': {'r': r, 'theta': theta, 'phi': phi},
            'log_likelihood': self.log_likelihood_at_peak,
            'on_boundary': self.on_boundary,
        }


def born_probabilities_bloch(pom: Pom, points: np.ndarray) -> np.ndarray:
    """
    Outcome probabilities at Bloch points.

    Args:
        pom: qubit POM
        points: (n, 3) or real-plane (n, 2) coordinates

    Returns:
        (n, K) probabilities, clamped at zero
    """
    full = plane_to_3d(np.atleast_2d(np.asarray(points, dtype=float)))
    return np.maximum(pom.offsets[None, :] + full @ pom.directions.T, 0.0)


def born_probabilities(pom: Pom, rho: DensityMatrix) -> np.ndarray:
    """p_k = tr(Pi_k rho)."""
    if rho.dim != 2:
        raise DimensionMismatch('POM and state dimensions differ', state_dim=rho.dim, pom_dim=2)
    probabilities = np.real(np.einsum('kab,ba->k', pom.effects, rho.matrix))
    return np.where(probabilities < 0, 0.0, probabilities)


def _log_likelihood(probabilities: np.ndarray, counts: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore'):
        values = np.sum(xlogy(counts[None, :], probabilities), axis=1)
    return np.where(np.isfinite(values), values, settings.LOG_FLOOR)


def log_posterior_bloch(pom: Pom, clicks: ClickRecord, points: np.ndarray,
                        log_prior: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> np.ndarray:
    """
    sum_k n_k log p_k at Bloch points, plus an optional log prior (flat by default).

    States with p_k = 0 and n_k > 0 get LOG_FLOOR.
    """
    clicks.check(pom)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = _log_likelihood(born_probabilities_bloch(pom, points), clicks.as_array())
    if log_prior is not None:
        values = values + log_prior(points)
    return values


def log_posterior(pom: Pom, clicks: ClickRecord, rho: DensityMatrix) -> float:
    clicks.check(pom)
    return float(_log_likelihood(born_probabilities(pom, rho)[None, :], clicks.as_array())[0])


class PosteriorTarget:
    """Picklable unnormalized log posterior over Bloch points, used as a sampling target."""

    def __init__(self, pom: Pom, clicks: ClickRecord,
                 log_prior: Optional[Callable[[np.ndarray], np.ndarray]] = None, offset: float = 0.0):
        clicks.check(pom)
        self.pom = pom
        self.clicks = clicks
        self.log_prior = log_prior
        self.offset = offset

    @classmethod
    def scaled_to_peak(cls, pom: Pom, clicks: ClickRecord, peak: Optional['MlePeak'] = None) -> 'PosteriorTarget':
        """Target shifted so that its value at the MLE is 0 (keeps exp() in range for large click totals)."""
        peak = peak or mle(pom, clicks)
        return cls(pom, clicks, offset=peak.log_likelihood_at_peak)

    @property
    def field(self) -> FieldKind:
        return self.pom.field

    def __call__(self, points: np.ndarray) -> np.ndarray:
        values = log_posterior_bloch(self.pom, self.clicks, points, self.log_prior)
        return np.where(values <= settings.LOG_FLOOR / 2, settings.LOG_FLOOR, values - self.offset)

    def __repr__(self):
        return f'PosteriorTarget({self.pom.name}, {list(self.clicks.counts)})'


def _start_points(field: FieldKind, count: int, radius: float = 0.5) -> np.ndarray:
    """Origin plus a Fibonacci lattice on a sphere (or equally spaced circle points)."""
    k = np.arange(count - 1) + 0.5
    if field is FieldKind.REAL:
        angle = 2 * np.pi * k / (count - 1)
        shell = np.column_stack([np.cos(angle), np.sin(angle)])
    else:
        polar = np.arccos(1 - 2 * k / (count - 1))
        azimuth = np.pi * (1 + np.sqrt(5)) * k
        shell = np.column_stack([np.cos(polar), np.sin(polar) * np.sin(azimuth),
                                 np.sin(polar) * np.cos(azimuth)])
    return np.vstack([np.zeros(field.bloch_dim), radius * shell])


def mle(pom: Pom, clicks: ClickRecord, starts: int = settings.MLE_STARTS) -> MlePeak:
    """
    Maximum-likelihood state over the Bloch ball (complex) or disc (real).

    Multi-start SLSQP ascent with the constraint |b|^2 <= 1; the best start
    wins, ties going to the lowest start index. A start that ties on value
    but ends more than MLE_POSITION_TOL away is logged as a warning. Optima
    on the constraint are returned at radius exactly 1 with on_boundary set.
    """
    clicks.check(pom)
    counts = clicks.as_array()
    offsets = pom.offsets
    directions = pom.directions if pom.field is FieldKind.COMPLEX else to_plane(pom.directions)

    def objective(b):
        p = np.maximum(offsets + directions @ b, 1e-300)
        return -float(np.sum(xlogy(counts, p)))

    def gradient(b):
        p = np.maximum(offsets + directions @ b, 1e-300)
        return -(counts / p) @ directions

    constraints = {'type': 'ineq', 'fun': lambda b: 1 - b @ b, 'jac': lambda b: -2 * b}

    best_value, best_point = np.inf, None
    ties = 0
    for index, start in enumerate(_start_points(pom.field, max(starts, 2))):
        if np.any(offsets + directions @ start <= 0):
            logger.warning('MLE start %d has zero likelihood, skipping', index)
            continue
        result = minimize(objective, start, jac=gradient, method='SLSQP', constraints=constraints,
                          options={'ftol': 1e-14, 'maxiter': 500})
        point = result.x
        radius = float(np.linalg.norm(point))
        if radius > 1:
            point = point / radius
        value = objective(point)
        if value < best_value - 1e-12:
            best_value, best_point, ties = value, point, 0
        elif value <= best_value + 1e-12 and np.linalg.norm(point - best_point) > settings.MLE_POSITION_TOL:
            ties += 1

    if ties:
        logger.warning('%d MLE starts reach the best likelihood at another point; the maximum is not unique', ties)
    radius = float(np.linalg.norm(best_point))
    on_boundary = radius >= 1 - 1e-7
    if on_boundary:
        best_point = best_point / radius
    bloch = BlochVector(tuple(best_point))
    peak = MlePeak(bloch=bloch, spherical=bloch.spherical(),
                   log_likelihood_at_peak=float(log_posterior_bloch(pom, clicks, best_point[None])[0]),
                   on_boundary=on_boundary)
    logger.info('MLE for %s %s: r=%.6f theta=%.6f phi=%.6f boundary=%s', pom.name,
                list(clicks.counts), *peak.spherical, on_boundary)
    return peak
