"""
Closed-form density of non-zero-mean quantum Wishart states

For a rank-1 mean the matrix hypergeometric factor of the Wishart density
collapses to a scalar confluent series in the non-centrality xi^2:

    S_{a,b}(u) = sum_k u^k Gamma(a + k) / (k! Gamma(b + k))
               = Gamma(a) / Gamma(b) * 1F1(a; b; u)

with a = dN/2, b = N/2 (real field) or a = dN, b = N (complex field).
When a - b = m is a positive integer the Kummer transform
1F1(a; b; u) = e^u 1F1(-m; b; -u) turns the series into e^u times a degree-m
polynomial with positive coefficients, which is the exact finite form used
here. Otherwise the series is summed in log scale.

Equivalently 1F1(a; b; u) = e^{u/2} u^{-b/2} M_{b/2 - a, (b - 1)/2}(u) with M the
Whittaker function; that representation is analytically identical and is not
evaluated numerically.

All densities are natural logs with respect to flat measure on the
independent entries of rho (flat Bloch measure for qubits, up to a constant).
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import integrate, special

from config import settings
from core.errors import DimensionMismatch, InvalidParams, NonConvergence, QuadratureFailure, SingularState
from core.state import DensityMatrix, FieldKind, bloch_to_rho_batch, plane_to_3d, rho_to_bloch_batch
from core.wishart import WishartParams


logger = logging.getLogger(__name__)

_ROW_BLOCK = 4096


@dataclass(frozen=True)
class XiSquared:
    """Non-centrality scalar; the only nonzero eigenvalue of a rank-1 matrix."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if value < -1e-12:
            raise InvalidParams('xi^2 must be non-negative', value=value)
        object.__setattr__(self, 'value', max(value, 0.0))

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class LogDensity:
    log_value: float
    exact_constant_dropped: bool = False

    def __float__(self):
        return self.log_value


def series_params(p: WishartParams) -> Tuple[float, float]:
    """(a, b) of the confluent series for this ensemble."""
    if p.field is FieldKind.REAL:
        return p.d * p.N / 2, p.N / 2
    return float(p.d * p.N), float(p.N)


def det_exponent(p: WishartParams) -> float:
    """Power of det(rho) in the density: (N - d - 1)/2 real, N - d complex."""
    if p.field is FieldKind.REAL:
        return (p.N - p.d - 1) / 2
    return float(p.N - p.d)


def _mean_quadratic(p: WishartParams) -> np.ndarray:
    """Sigma^-1 M M^dagger Sigma^-1, the rank-1 matrix behind xi^2."""
    left = p.sigma_inv @ p.M
    return left @ left.conj().T


def _traces(matrix: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    return np.einsum('ij,nji->n', matrix, rhos).real


def xi_squared_batch(p: WishartParams, rhos: np.ndarray) -> np.ndarray:
    """xi^2 for an (n, d, d) stack of states."""
    rhos = np.asarray(rhos)
    if rhos.shape[-2:] != (p.d, p.d):
        raise DimensionMismatch('State dimension does not match parameters',
                                shape=rhos.shape, d=p.d)
    numerator = _traces(_mean_quadratic(p), rhos)
    denominator = _traces(p.sigma_inv, rhos)
    scale = 2.0 if p.field is FieldKind.REAL else 1.0
    return np.maximum(numerator / (scale * denominator), 0.0)


def xi_squared(p: WishartParams, rho: DensityMatrix) -> XiSquared:
    """
    Non-centrality of a state.

    Real: tr(S^-1 M M^T S^-1 rho) / (2 tr(S^-1 rho)).
    Complex: tr(S^-1 M M^dagger S^-1 rho) / tr(S^-1 rho).
    """
    return XiSquared(xi_squared_batch(p, rho.matrix[None])[0])


def _kummer_log_sum(a: float, b: float, m: int, u: np.ndarray) -> np.ndarray:
    j = np.arange(m + 1)
    log_coeff = (special.gammaln(m + 1) - special.gammaln(m - j + 1)
                 - (special.gammaln(b + j) - special.gammaln(b)) - special.gammaln(j + 1))
    log_terms = log_coeff[None, :] + special.xlogy(j[None, :], u[:, None])
    return special.gammaln(a) - special.gammaln(b) + u + special.logsumexp(log_terms, axis=1)


def _series_log_sum(a: float, b: float, u: np.ndarray) -> np.ndarray:
    acc = np.full(u.shape, -np.inf)
    active = np.ones(u.shape, dtype=bool)
    log_tol = np.log(settings.SERIES_REL_TOL)
    for start in range(0, settings.SERIES_MAX_TERMS, settings.SERIES_CHUNK):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return acc
        k = np.arange(start, start + settings.SERIES_CHUNK, dtype=float)
        log_coeff = special.gammaln(a + k) - special.gammaln(k + 1) - special.gammaln(b + k)
        log_terms = special.xlogy(k[None, :], u[idx, None]) + log_coeff[None, :]
        acc[idx] = np.logaddexp(acc[idx], special.logsumexp(log_terms, axis=1))

        # tail after the last term is bounded by a geometric series once the
        # term ratio is below one and decreasing (k >= b)
        last = k[-1]
        ratio = u[idx] * (a + last) / ((last + 1) * (b + last))
        with np.errstate(divide='ignore'):
            log_tail = log_terms[:, -1] + np.log(ratio) - np.log1p(-np.minimum(ratio, 1 - 1e-16))
        converged = (ratio < 1) & (last >= b) & (log_tail <= log_tol + acc[idx])
        active[idx[converged]] = False
    if np.any(active):
        raise NonConvergence('Confluent series did not converge',
                             a=a, b=b, max_terms=settings.SERIES_MAX_TERMS,
                             u_max=float(np.max(u[active])))
    return acc


def series_factor(a: float, b: float, u: Union[float, np.ndarray],
                  method: str = 'auto') -> Union[float, np.ndarray]:
    """
    Log of sum_k u^k Gamma(a + k) / (k! Gamma(b + k)).

    Args:
        a, b: positive series parameters
        u: xi^2 value(s), non-negative
        method: 'auto' (Kummer polynomial when a - b is a positive integer,
            else series), 'kummer' or 'series'

    Returns:
        Log value(s), same shape as u

    Raises:
        NonConvergence: if the series misses its tail bound within the term cap
        InvalidParams: on bad parameters or forcing 'kummer' for non-integer a - b
    """
    if a <= 0 or b <= 0:
        raise InvalidParams('Series parameters must be positive', a=a, b=b)
    scalar = np.ndim(u) == 0
    values = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(values < 0):
        raise InvalidParams('xi^2 must be non-negative', u_min=float(np.min(values)))
    gap = a - b
    integer_gap = gap >= 1 and abs(gap - round(gap)) < 1e-12
    if method == 'auto':
        method = 'kummer' if integer_gap else 'series'
    if method == 'kummer' and not integer_gap:
        raise InvalidParams('Kummer polynomial form needs a - b to be a positive integer', a=a, b=b)
    if method not in ('kummer', 'series'):
        raise InvalidParams(f"Unknown series method '{method}'")

    flat = values.ravel()
    out = np.empty_like(flat)
    for start in range(0, flat.size, _ROW_BLOCK):
        block = flat[start:start + _ROW_BLOCK]
        if method == 'kummer':
            out[start:start + _ROW_BLOCK] = _kummer_log_sum(a, b, int(round(gap)), block)
        else:
            out[start:start + _ROW_BLOCK] = _series_log_sum(a, b, block)
    out = out.reshape(values.shape)
    return float(out[0]) if scalar else out


def log_series_derivative(a: float, b: float, u: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """S'(u)/S(u), using S'_{a,b} = S_{a+1,b+1}."""
    return np.exp(series_factor(a + 1, b + 1, u) - series_factor(a, b, u))


def _log_multigamma_complex(N: int, d: int) -> float:
    i = np.arange(1, d + 1)
    return d * (d - 1) / 2 * np.log(np.pi) + float(np.sum(special.gammaln(N + 1 - i)))


def log_constant(p: WishartParams) -> float:
    """State-independent part of the log density (everything but the trace, det and series terms)."""
    quad = float(np.real(np.trace(p.sigma_inv @ p.M @ p.M.conj().T)))
    if p.field is FieldKind.REAL:
        return (-0.5 * quad - special.multigammaln(p.N / 2, p.d)
                - p.N / 2 * p.log_det_sigma + special.gammaln(p.N / 2))
    return (special.gammaln(p.N) - quad - _log_multigamma_complex(p.N, p.d)
            - p.N * p.log_det_sigma)


def _combine(p: WishartParams, xi2: np.ndarray, sigma_trace: np.ndarray, det: np.ndarray,
             include_det: bool = True) -> np.ndarray:
    a, b = series_params(p)
    base = log_constant(p) - a * np.log(sigma_trace) + series_factor(a, b, xi2)
    if not include_det:
        return base
    exponent = det_exponent(p)
    if exponent == 0:
        return base
    singular = det <= 0
    if exponent < 0 and np.any(singular):
        raise SingularState('Density diverges on rank-deficient states',
                            exponent=exponent, count=int(np.sum(singular)))
    with np.errstate(divide='ignore'):
        log_det = np.where(singular, -np.inf, np.log(np.where(singular, 1.0, det)))
    return base + exponent * log_det


def log_density_batch(p: WishartParams, rhos: np.ndarray) -> np.ndarray:
    """Log density for an (n, d, d) stack of states."""
    rhos = np.asarray(rhos)
    xi2 = xi_squared_batch(p, rhos)
    det = np.real(np.linalg.det(rhos))
    return _combine(p, xi2, _traces(p.sigma_inv, rhos), det)


def log_density(p: WishartParams, rho: DensityMatrix) -> LogDensity:
    """
    Log of the non-zero-mean quantum Wishart density at rho.

    Raises:
        SingularState: if det(rho) <= 0 while the det exponent is negative
        NonConvergence: propagated from the series
    """
    return LogDensity(float(log_density_batch(p, rho.matrix[None])[0]))


def log_density_bloch(p: WishartParams, points: np.ndarray, include_det: bool = True) -> np.ndarray:
    """
    Qubit log density at Bloch points.

    Args:
        p: qubit ensemble (d = 2)
        points: (n, 3) or real-plane (n, 2) coordinates
        include_det: False drops the det(rho) factor (used by the quadrature fast path)

    Returns:
        (n,) log densities; -inf on the boundary when the det exponent is positive
    """
    if p.d != 2:
        raise DimensionMismatch('Bloch evaluation needs d = 2', d=p.d)
    full = plane_to_3d(np.atleast_2d(np.asarray(points, dtype=float)))
    rhos = bloch_to_rho_batch(full)
    det = (1.0 - np.sum(full ** 2, axis=1)) / 4.0
    return _combine(p, xi_squared_batch(p, rhos), _traces(p.sigma_inv, rhos), det, include_det)


def _is_isotropic(sigma: np.ndarray) -> bool:
    scale = float(np.real(sigma[0, 0]))
    return bool(np.allclose(sigma, scale * np.eye(len(sigma)), rtol=0, atol=1e-12 * max(scale, 1.0)))


def _mean_axis(p: WishartParams) -> np.ndarray:
    """Unit Bloch direction of the rank-1 projector behind M M^dagger (+x when M = 0)."""
    if p.is_central:
        return np.array([1.0, 0.0, 0.0])
    _, vectors = np.linalg.eigh(p.M @ p.M.conj().T)
    top = vectors[:, -1]
    axis = rho_to_bloch_batch(np.outer(top, top.conj())[None])[0]
    return axis / np.linalg.norm(axis)


def _check_quadrature(value: float, error: float, shift: float) -> float:
    if not np.isfinite(value) or value <= 0:
        raise QuadratureFailure('Quadrature returned a non-positive integral', value=value)
    if error > 1e-6 * value:
        raise QuadratureFailure('Quadrature missed its error target', value=value, error=error)
    return shift + float(np.log(value))


def log_normalization_constant_qubit(p: WishartParams) -> float:
    """
    Log of the integral of exp(log_density) over the Bloch disc (real) or ball (complex).

    With isotropic Sigma the density depends only on det(rho) and on the
    projection t of the Bloch vector onto the mean axis, and the integral over
    the remaining coordinates has a closed form, leaving 1-D adaptive
    quadrature in t. Otherwise the full 2-D or 3-D quadrature is used.
    """
    if p.d != 2:
        raise DimensionMismatch('Qubit normalization needs d = 2', d=p.d)
    exponent = det_exponent(p)
    if exponent < 0:
        raise SingularState('Qubit density is not integrable with a negative det exponent', exponent=exponent)

    if _is_isotropic(p.sigma):
        axis = _mean_axis(p)
        if p.field is FieldKind.REAL:
            # int over the chord: ((1 - t^2 - s^2)/4)^e ds = 4^-e (1 - t^2)^(e + 1/2) B(1/2, e + 1)
            transverse = special.betaln(0.5, exponent + 1) - exponent * np.log(4)
            power = exponent + 0.5
        else:
            # int over the disc at height t: pi 4^-e (1 - t^2)^(e + 1) / (e + 1)
            transverse = np.log(np.pi) - exponent * np.log(4) - np.log(exponent + 1)
            power = exponent + 1

        def log_integrand(t):
            t = np.atleast_1d(t)
            base = log_density_bloch(p, t[:, None] * axis[None, :], include_det=False)
            with np.errstate(divide='ignore'):
                return base + transverse + power * np.log1p(-t * t)

        grid = np.linspace(-1, 1, 401)[1:-1]
        shift = float(np.max(log_integrand(grid)))
        value, error = integrate.quad(lambda t: float(np.exp(log_integrand(t)[0] - shift)),
                                      -1.0, 1.0, epsabs=0, epsrel=settings.QUAD_EPSREL, limit=200)
        return _check_quadrature(value, error, shift)

    reference = _reference_points(p.field)
    shift = float(np.max(log_density_bloch(p, reference)))

    def density(*coords):
        return float(np.exp(log_density_bloch(p, np.array([coords]))[0] - shift))

    if p.field is FieldKind.REAL:
        value, error = integrate.dblquad(
            lambda z, x: density(x, z), -1, 1,
            lambda x: -np.sqrt(max(1 - x * x, 0)), lambda x: np.sqrt(max(1 - x * x, 0)),
            epsabs=0, epsrel=settings.QUAD_EPSREL)
    else:
        value, error = integrate.tplquad(
            lambda z, y, x: density(x, y, z), -1, 1,
            lambda x: -np.sqrt(max(1 - x * x, 0)), lambda x: np.sqrt(max(1 - x * x, 0)),
            lambda x, y: -np.sqrt(max(1 - x * x - y * y, 0)), lambda x, y: np.sqrt(max(1 - x * x - y * y, 0)),
            epsabs=0, epsrel=1e-7)
    return _check_quadrature(value, error, shift)


def normalization_constant_qubit(p: WishartParams) -> float:
    """
    Integral of exp(log_density) over the qubit state space in flat Bloch coordinates.

    Raises:
        QuadratureFailure: if the integral is not finite and positive or misses its error target
    """
    log_value = log_normalization_constant_qubit(p)
    logger.debug('Qubit normalization for %s: log Z = %.10f', p.describe(), log_value)
    return float(np.exp(log_value))


def _reference_points(field: FieldKind, steps: int = 41) -> np.ndarray:
    axis = np.linspace(-1, 1, steps)
    if field is FieldKind.REAL:
        x, z = np.meshgrid(axis, axis, indexing='ij')
        points = np.column_stack([x.ravel(), z.ravel()])
    else:
        x, y, z = np.meshgrid(axis, axis, axis, indexing='ij')
        points = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    return points[np.sum(points ** 2, axis=1) < 1]
