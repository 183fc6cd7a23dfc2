"""
Peak placement for Wishart proposals

Two routes put the mode of a Wishart density at a requested state:
a 1-D solve for the mean of an identity-covariance qubit ensemble followed by
a Bloch rotation, and the stationary-point construction of (Sigma, M) for a
full-rank state of any dimension.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from config import settings
from core.density import det_exponent, log_density_batch, log_series_derivative, series_params
from core.errors import (DimensionMismatch, FixedPointDivergence, InvalidParams, NoRoot,
                         NotFullRank, RadiusOutOfRange)
from core.state import BlochVector, DensityMatrix, FieldKind, Rotation3, align_rotation, rho_to_bloch
from core.wishart import WishartParams


logger = logging.getLogger(__name__)

PEAK_AXIS = BlochVector((1.0, 0.0, 0.0))


@dataclass(frozen=True, eq=False)
class PeakRequest:
    """Where the proposal should peak: a Bloch vector (qubit path) or a state (general path)."""

    target: Union[BlochVector, DensityMatrix]
    N: int
    field: FieldKind = FieldKind.COMPLEX

    def __post_init__(self):
        object.__setattr__(self, 'field', FieldKind.parse(self.field))
        if isinstance(self.target, BlochVector) and self.target.radius > 1 + settings.BLOCH_RADIUS_TOL:
            raise RadiusOutOfRange('Peak target lies outside the state space', radius=self.target.radius)

    @property
    def bloch(self) -> BlochVector:
        if isinstance(self.target, BlochVector):
            return self.target
        return rho_to_bloch(self.target, self.field)


@dataclass(frozen=True, eq=False)
class StationarySolution:
    sigma1: np.ndarray
    M1: np.ndarray
    residual: float
    field: FieldKind
    iterations: int = field(default=0)

    @property
    def params(self) -> WishartParams:
        d, N = self.M1.shape
        return WishartParams(self.field, d, N, self.M1, self.sigma1)

    def to_dict(self) -> dict:
        return {
            'Sigma1': _complex_rows(self.sigma1),
            'M1': _complex_rows(self.M1),
            'residual': self.residual,
            'iterations': self.iterations,
        }


def _complex_rows(matrix: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(matrix, dtype=complex)]


def _radial_slope(mu: float, r: float, N: int, field: FieldKind) -> float:
    """d/dx of the log density along +x at x = r for the all-mu identity-covariance qubit."""
    p = WishartParams.central(field, 2, N)
    e = det_exponent(p)
    a, b = series_params(p)
    kappa = N / 2 if field is FieldKind.REAL else 2.0 * N
    u = kappa * mu * mu * (1 + r)
    return -2 * e * r / (1 - r * r) + kappa * mu * mu * float(log_series_derivative(a, b, u))


def fit_mean_radial(r: float, N: int, field: FieldKind = FieldKind.COMPLEX) -> float:
    """
    Mean mu that puts the peak of the all-mu qubit density at radius r on +x.

    Args:
        r: target radius in [0, 1)
        N: column count
        field: FieldKind

    Returns:
        mu >= 0 (0 for a peak at the origin)

    Raises:
        RadiusOutOfRange: if r is outside [0, 1]
        NoRoot: if no mu in the bracket places the peak at r; details carry the slope profile
    """
    field = FieldKind.parse(field)
    p = WishartParams.central(field, 2, N)
    if r < 0 or r > 1 + settings.BLOCH_RADIUS_TOL:
        raise RadiusOutOfRange('Peak radius must lie in [0, 1]', radius=r)
    if r < 1e-12:
        return 0.0

    lo, hi = settings.MU_BRACKET
    if r >= 1 - 1e-12 or det_exponent(p) == 0:
        raise NoRoot('Density peak cannot be placed at this radius by the mean alone',
                     radius=r, N=N, field=field.value, det_exponent=det_exponent(p))

    f_hi = _radial_slope(hi, r, N, field)
    if f_hi <= 0:
        grid = np.linspace(lo, hi, 21)
        profile = [[float(mu), _radial_slope(mu, r, N, field)] for mu in grid]
        raise NoRoot('No sign change of the radial slope in the mean bracket',
                     radius=r, N=N, field=field.value, profile=profile)

    mu = brentq(_radial_slope, lo, hi, args=(r, N, field), xtol=1e-14, rtol=1e-14, maxiter=500)
    logger.info('Fitted mean mu=%.6f for radius %.6f (N=%d, %s)', mu, r, N, field.value)
    return float(mu)


def build_qubit_proposal(req: PeakRequest) -> Tuple[WishartParams, Rotation3]:
    """
    Identity-covariance qubit ensemble peaked at the requested Bloch vector.

    The all-mu ensemble peaks on +x; the returned rotation maps +x onto the
    target direction and is applied to sampled states.
    """
    target = req.bloch
    if isinstance(req.target, DensityMatrix) and req.target.dim != 2:
        raise DimensionMismatch('Qubit proposal needs a 2 x 2 target', dim=req.target.dim)
    mu = fit_mean_radial(target.radius, req.N, req.field)
    params = WishartParams.all_mu(req.field, 2, req.N, mu)
    if target.radius < 1e-12:
        return params, Rotation3.identity()
    return params, align_rotation(PEAK_AXIS, target)


def _stationary_constants(field: FieldKind, d: int, N: int) -> Tuple[float, float, float]:
    """(c, a, e): xi^2 coefficient, series parameter a, det exponent."""
    if field is FieldKind.REAL:
        return 0.5, d * N / 2, (N - d - 1) / 2
    return 1.0, float(d * N), float(N - d)


def stationary_params(rho_p: DensityMatrix, M2: np.ndarray, N: int,
                      field: FieldKind = FieldKind.COMPLEX) -> StationarySolution:
    """
    Covariance and mean whose density is stationary at rho_p.

    Sigma1 = (a + c T lambda) (e rho_p^-1 + (a - e d) I + c T M2 M2^dagger)^-1
    and M1 = Sigma1 M2, with lambda = tr(M2 M2^dagger rho_p), T the log-derivative
    of the series factor at xi^2, and tr(Sigma1^-1 rho_p) = 1.
    T is iterated from zero (the central solution) to a fixed point.

    Raises:
        NotFullRank: if rho_p is singular
        InvalidParams: if N leaves no positive det exponent or M2 has the wrong shape
        FixedPointDivergence: if the iteration does not settle
    """
    field = FieldKind.parse(field)
    d = rho_p.dim
    M2 = np.asarray(M2, dtype=complex)
    if M2.shape != (d, N):
        raise InvalidParams('M2 must be d x N', shape=M2.shape, d=d, N=N)
    if field is FieldKind.REAL:
        if not rho_p.is_real() or np.any(M2.imag != 0):
            raise InvalidParams('Real field needs a real state and a real mean')
    eigenvalues = rho_p.eigenvalues()
    if eigenvalues[0] <= settings.RANK_TOL:
        raise NotFullRank('Stationary construction needs a full-rank state',
                          min_eigenvalue=float(eigenvalues[0]))
    c, a, e = _stationary_constants(field, d, N)
    if e <= 0:
        raise InvalidParams('Stationary construction needs a positive det exponent', N=N, d=d)

    rho_inv = np.linalg.inv(rho_p.matrix)
    outer = M2 @ M2.conj().T
    lam = float(np.real(np.trace(outer @ rho_p.matrix)))
    a_series, b_series = series_params(WishartParams.central(field, d, N))

    T = 0.0
    sigma1 = None
    for iteration in range(1, settings.FIXED_POINT_MAX_ITER + 1):
        precision = e * rho_inv + (a - e * d) * np.eye(d) + c * T * outer
        candidate = (a + c * T * lam) * np.linalg.inv(precision)
        candidate = 0.5 * (candidate + candidate.conj().T)
        M1 = candidate @ M2
        xi2 = _xi_squared_at(field, candidate, M1, rho_p.matrix)
        T = float(log_series_derivative(a_series, b_series, xi2))
        if sigma1 is not None and np.max(np.abs(candidate - sigma1)) <= settings.FIXED_POINT_TOL:
            sigma1 = candidate
            break
        sigma1 = candidate
    else:
        raise FixedPointDivergence('Stationary fixed point did not converge',
                                   iterations=settings.FIXED_POINT_MAX_ITER)

    if field is FieldKind.REAL:
        sigma1, M1 = sigma1.real, (sigma1 @ M2).real
    else:
        M1 = sigma1 @ M2
    solution = StationarySolution(sigma1, M1, 0.0, field, iteration)
    residual = verify_stationary(solution.params, rho_p)
    logger.info('Stationary parameters after %d iterations, gradient norm %.3e', iteration, residual)
    return StationarySolution(sigma1, M1, residual, field, iteration)


def _xi_squared_at(field: FieldKind, sigma: np.ndarray, M: np.ndarray, rho: np.ndarray) -> float:
    sigma_inv = np.linalg.inv(sigma)
    left = sigma_inv @ M
    numerator = np.real(np.trace(left @ left.conj().T @ rho))
    denominator = np.real(np.trace(sigma_inv @ rho))
    scale = 2.0 if field is FieldKind.REAL else 1.0
    return max(float(numerator / (scale * denominator)), 0.0)


def tangent_basis(d: int, field: FieldKind = FieldKind.COMPLEX) -> np.ndarray:
    """
    Frobenius-orthonormal basis of traceless Hermitian (or real symmetric) d x d matrices.

    Returns:
        (k, d, d) complex array; k = d^2 - 1 complex, d(d + 1)/2 - 1 real
    """
    basis = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            basis.append(sym)
            if field is FieldKind.COMPLEX:
                anti = np.zeros((d, d), dtype=complex)
                anti[j, k], anti[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
                basis.append(anti)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(basis)


def verify_stationary(p: WishartParams, rho_p: DensityMatrix,
                      step: float = settings.GRADIENT_STEP) -> float:
    """Euclidean norm of the central-difference log-density gradient at rho_p on the tangent space."""
    basis = tangent_basis(p.d, p.field)
    plus = rho_p.matrix[None] + step * basis
    minus = rho_p.matrix[None] - step * basis
    gradient = (log_density_batch(p, plus) - log_density_batch(p, minus)) / (2 * step)
    return float(np.linalg.norm(gradient))
