"""
Matrix-variate Gaussian sampling and trace-normalized Wishart states

Random streams are PCG64 generators seeded from SeedSequence([seed, stream_id]);
batch work is cut into fixed-size chunks, chunk i drawing from stream id i, so
batch output depends on the seed only, never on the worker count.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from config import settings
from core.errors import CholeskyFailure, InvalidParams
from core.state import DensityMatrix, FieldKind, rho_to_bloch_batch


logger = logging.getLogger(__name__)

_UINT64_MAX = 2 ** 64 - 1


@dataclass
class RandomStream:
    """
    A reproducible random stream identified by (seed, stream_id).

    Identical pairs yield bit-identical draws; distinct stream ids are
    statistically independent (SeedSequence entropy mixing).
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        for name in ('seed', 'stream_id'):
            value = getattr(self, name)
            if not 0 <= int(value) <= _UINT64_MAX:
                raise InvalidParams(f'{name} must be a 64-bit unsigned integer', value=value)
        sequence = np.random.SeedSequence([int(self.seed), int(self.stream_id)])
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def spawn(self, stream_id: int) -> 'RandomStream':
        """Independent stream sharing this seed."""
        return RandomStream(self.seed, stream_id)


@dataclass(frozen=True, eq=False)
class WishartParams:
    """
    One quantum Wishart ensemble: A is d x N Gaussian with mean M (rank <= 1)
    and column covariance sigma; the state is AA^dagger / tr(AA^dagger).
    """

    field: FieldKind
    d: int
    N: int
    M: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'field', FieldKind.parse(self.field))
        dtype = float if self.field is FieldKind.REAL else complex
        M = np.asarray(self.M)
        sigma = np.asarray(self.sigma)
        if self.field is FieldKind.REAL:
            if np.any(np.abs(np.imag(M)) > 0) or np.any(np.abs(np.imag(sigma)) > 0):
                raise InvalidParams('Real-field parameters must have real M and sigma')
            M, sigma = np.real(M), np.real(sigma)
        object.__setattr__(self, 'M', M.astype(dtype))
        object.__setattr__(self, 'sigma', sigma.astype(dtype))
        self._validate()

    def _validate(self):
        d, N = self.d, self.N
        if d < 1 or int(d) != d:
            raise InvalidParams('Dimension d must be a positive integer', d=d)
        min_cols = 3 if self.field is FieldKind.REAL else 2
        if int(N) != N or N < max(d, min_cols):
            raise InvalidParams(f'N must be an integer >= max(d, {min_cols}) for the {self.field.value} field',
                                N=N, d=d)
        if self.M.shape != (d, N):
            raise InvalidParams('Mean matrix must be d x N', shape=self.M.shape, d=d, N=N)
        if self.sigma.shape != (d, d):
            raise InvalidParams('Covariance must be d x d', shape=self.sigma.shape)
        singular_values = np.linalg.svd(self.M, compute_uv=False)
        if singular_values[0] > 0 and len(singular_values) > 1 \
                and singular_values[1] > settings.RANK_TOL * singular_values[0]:
            raise InvalidParams('Mean matrix must have rank <= 1',
                                singular_values=singular_values)
        if np.max(np.abs(self.sigma - self.sigma.conj().T)) > settings.HERMITIAN_TOL:
            raise InvalidParams('Covariance must be Hermitian')
        min_eig = float(np.min(np.linalg.eigvalsh(self.sigma)))
        if min_eig <= settings.PD_TOL:
            raise InvalidParams('Covariance must be positive definite', min_eigenvalue=min_eig)

    @classmethod
    def central(cls, field: FieldKind, d: int, N: int,
                sigma: Optional[np.ndarray] = None) -> 'WishartParams':
        sigma = np.eye(d) if sigma is None else sigma
        return cls(field, d, N, np.zeros((d, N)), sigma)

    @classmethod
    def all_mu(cls, field: FieldKind, d: int, N: int, mu: float,
               sigma: Optional[np.ndarray] = None) -> 'WishartParams':
        """
        Identity-covariance ensemble with every mean entry equal.

        Real field: M_ij = mu. Complex field: M_ij = sqrt(2) e^{i pi/4} mu, so
        that each quadrature has mean mu. For qubits the density then peaks
        towards +x (xi^2 grows with 1 + x).
        """
        field = FieldKind.parse(field)
        scale = 1.0 if field is FieldKind.REAL else np.sqrt(2) * np.exp(1j * np.pi / 4)
        sigma = np.eye(d) if sigma is None else sigma
        return cls(field, d, N, scale * mu * np.ones((d, N)), sigma)

    @classmethod
    def uniform(cls, d: int, field: FieldKind = FieldKind.COMPLEX) -> 'WishartParams':
        """Central ensemble whose state density is flat (N = d complex, N = d + 1 real)."""
        field = FieldKind.parse(field)
        N = d + 1 if field is FieldKind.REAL else max(d, 2)
        return cls.central(field, d, N)

    @property
    def is_central(self) -> bool:
        return not np.any(self.M)

    @property
    def cholesky(self) -> np.ndarray:
        cached = self.__dict__.get('_cholesky')
        if cached is None:
            try:
                cached = scipy.linalg.cholesky(self.sigma, lower=True)
            except np.linalg.LinAlgError as exc:
                raise CholeskyFailure('Covariance is numerically not positive definite',
                                      reason=str(exc))
            object.__setattr__(self, '_cholesky', cached)
        return cached

    @property
    def sigma_inv(self) -> np.ndarray:
        cached = self.__dict__.get('_sigma_inv')
        if cached is None:
            cached = np.linalg.inv(self.sigma)
            object.__setattr__(self, '_sigma_inv', cached)
        return cached

    @property
    def log_det_sigma(self) -> float:
        return float(np.linalg.slogdet(self.sigma)[1])

    def describe(self) -> dict:
        return {
            'field': self.field.value,
            'd': self.d,
            'N': self.N,
            'mean_norm': float(np.linalg.norm(self.M)),
            'sigma_diag': np.real(np.diag(self.sigma)).tolist(),
        }


def sample_gaussian_matrix(p: WishartParams, stream: RandomStream,
                           size: Optional[int] = None) -> np.ndarray:
    """
    Draw A = M + L G with L the Cholesky factor of sigma.

    Real field: G standard normal. Complex field: G = (g1 + i g2)/sqrt(2),
    unit complex variance per entry.

    Args:
        p: ensemble parameters
        stream: random stream, advanced by the draw
        size: optional number of matrices; None draws a single d x N matrix

    Returns:
        (d, N) or (size, d, N) array
    """
    shape = (p.d, p.N) if size is None else (size, p.d, p.N)
    rng = stream.generator
    if p.field is FieldKind.REAL:
        G = rng.standard_normal(shape)
    else:
        G = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return p.M + p.cholesky @ G


def states_from_gaussian(A: np.ndarray) -> np.ndarray:
    """Trace-normalize AA^dagger for one (d, N) matrix or an (n, d, N) stack."""
    W = A @ np.swapaxes(A.conj(), -1, -2)
    trace = np.trace(W, axis1=-2, axis2=-1).real
    return (W / trace[..., None, None]).astype(complex)


def sample_state(p: WishartParams, stream: RandomStream) -> DensityMatrix:
    """Draw one trace-normalized Wishart state."""
    rho = states_from_gaussian(sample_gaussian_matrix(p, stream))
    return DensityMatrix(_hermitize(rho))


def sample_state_array(p: WishartParams, stream: RandomStream, n: int) -> np.ndarray:
    """Draw n states as an (n, d, d) complex array."""
    return _hermitize(states_from_gaussian(sample_gaussian_matrix(p, stream, size=n)))


def sample_bloch_array(p: WishartParams, stream: RandomStream, n: int) -> np.ndarray:
    """Draw n qubit states as (n, 3) Bloch coordinates."""
    if p.d != 2:
        raise InvalidParams('Bloch sampling needs d = 2', d=p.d)
    return rho_to_bloch_batch(sample_state_array(p, stream, n))


def _hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))


def chunk_sizes(n: int, batch_size: int = settings.BATCH_SIZE) -> List[int]:
    """Split n draws into fixed-size chunks; chunk i uses stream id i."""
    full, rest = divmod(n, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def _draw_chunk(args) -> np.ndarray:
    p, seed, stream_id, count = args
    return sample_state_array(p, RandomStream(seed, stream_id), count)


def sample_states_array(p: WishartParams, n: int, seed: int, workers: int = 1,
                        batch_size: int = settings.BATCH_SIZE) -> np.ndarray:
    """
    Draw n independent states across disjoint streams.

    Args:
        p: ensemble parameters
        n: number of draws (>= 1)
        seed: 64-bit seed shared by all chunks
        workers: process count; results do not depend on it
        batch_size: draws per stream

    Returns:
        (n, d, d) complex array ordered by stream id
    """
    if n < 1:
        raise InvalidParams('Batch size n must be at least 1', n=n)
    jobs = [(p, seed, stream_id, count) for stream_id, count in enumerate(chunk_sizes(n, batch_size))]
    logger.debug('Sampling %d states in %d chunks with %d workers', n, len(jobs), workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(_draw_chunk, jobs))
    else:
        chunks = [_draw_chunk(job) for job in jobs]
    return np.concatenate(chunks, axis=0)


def sample_states_batch(p: WishartParams, n: int, seed: int, workers: int = 1,
                        batch_size: int = settings.BATCH_SIZE) -> List[DensityMatrix]:
    """List form of sample_states_array; each entry is a validated DensityMatrix."""
    return [DensityMatrix(rho, check=False) for rho in sample_states_array(p, n, seed, workers, batch_size)]
