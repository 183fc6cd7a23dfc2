"""
Density matrices, Bloch coordinates and alignment transforms
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from config import settings
from core.errors import DimensionMismatch, InvalidParams, RadiusOutOfRange, ZeroVector


IDENTITY2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([PAULI_X, PAULI_Y, PAULI_Z])


class FieldKind(Enum):
    """Number field of the Gaussian entries and of the state space."""

    REAL = 'real'
    COMPLEX = 'complex'

    @classmethod
    def parse(cls, value: Union[str, 'FieldKind']) -> 'FieldKind':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParams(f"Unknown field kind '{value}'", allowed=[k.value for k in cls])

    @property
    def bloch_dim(self) -> int:
        """Number of Bloch coordinates of a qubit: (x, z) on the real disc, (x, y, z) in the ball."""
        return 2 if self is FieldKind.REAL else 3


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    A d x d Hermitian, unit-trace, positive semidefinite matrix.

    The matrix is validated on construction; pass check=False only for arrays
    that are valid by construction (e.g. trace-normalized Wishart products).
    """

    matrix: np.ndarray
    check: bool = True

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatch('Density matrix must be square', shape=matrix.shape)
        object.__setattr__(self, 'matrix', matrix)
        if self.check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self):
        """
        Check the three state invariants.

        Raises:
            InvalidParams: if the matrix is not Hermitian, not unit trace or not PSD
        """
        m = self.matrix
        asym = np.max(np.abs(m - m.conj().T))
        if asym > settings.HERMITIAN_TOL:
            raise InvalidParams('Density matrix is not Hermitian', deviation=float(asym))
        trace = np.trace(m)
        if abs(trace - 1) > settings.TRACE_TOL:
            raise InvalidParams('Density matrix does not have unit trace', trace=float(trace.real))
        min_eig = float(np.min(self.eigenvalues()))
        if min_eig < -settings.PSD_TOL:
            raise InvalidParams('Density matrix is not positive semidefinite', min_eigenvalue=min_eig)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def det(self) -> float:
        return float(np.prod(self.eigenvalues()))

    def is_real(self) -> bool:
        return bool(np.all(self.matrix.imag == 0))


@dataclass(frozen=True)
class BlochVector:
    """
    Qubit Bloch coordinates: (x, z) on the real disc or (x, y, z) in the ball.
    """

    coords: Tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if len(coords) not in (2, 3):
            raise DimensionMismatch('Bloch vector needs 2 (real plane) or 3 coordinates',
                                    length=len(coords))
        object.__setattr__(self, 'coords', coords)

    @property
    def field(self) -> FieldKind:
        return FieldKind.REAL if len(self.coords) == 2 else FieldKind.COMPLEX

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.coords))

    def as_3d(self) -> np.ndarray:
        return plane_to_3d(np.asarray(self.coords))

    @classmethod
    def from_3d(cls, vector: np.ndarray, field: FieldKind = FieldKind.COMPLEX) -> 'BlochVector':
        vector = np.asarray(vector, dtype=float)
        if field is FieldKind.REAL:
            return cls((vector[0], vector[2]))
        return cls(tuple(vector))

    @classmethod
    def from_spherical(cls, r: float, theta: float, phi: float = 0.0,
                       field: FieldKind = FieldKind.COMPLEX) -> 'BlochVector':
        return cls.from_3d(spherical_to_cartesian(r, theta, phi), field)

    def spherical(self) -> Tuple[float, float, float]:
        return cartesian_to_spherical(self.as_3d())


@dataclass(frozen=True, eq=False)
class Rotation3:
    """Proper rotation of Bloch space."""

    matrix: np.ndarray

    @classmethod
    def identity(cls) -> 'Rotation3':
        return cls(np.eye(3))

    @property
    def inverse(self) -> 'Rotation3':
        return Rotation3(self.matrix.T)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """
        Rotate Bloch points.

        Args:
            points: (3,), (n, 3) or real-plane (n, 2) array

        Returns:
            Rotated points in the same layout as the input
        """
        points = np.asarray(points, dtype=float)
        plane = points.shape[-1] == 2
        full = plane_to_3d(points) if plane else points
        rotated = full @ self.matrix.T
        return to_plane(rotated) if plane else rotated

    def is_identity(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, np.eye(3), atol=tol))


def plane_to_3d(points: np.ndarray) -> np.ndarray:
    """Embed real-plane (x, z) points as (x, 0, z); 3-D points pass through."""
    points = np.asarray(points, dtype=float)
    if points.shape[-1] == 3:
        return points
    zeros = np.zeros(points.shape[:-1] + (1,))
    return np.concatenate([points[..., :1], zeros, points[..., 1:]], axis=-1)


def to_plane(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return points[..., [0, 2]]


def spherical_to_cartesian(r: float, theta: float, phi: float) -> np.ndarray:
    """Project convention: polar axis +x, azimuth measured from +z towards +y."""
    return np.array([
        r * np.cos(theta),
        r * np.sin(theta) * np.sin(phi),
        r * np.sin(theta) * np.cos(phi),
    ])


def cartesian_to_spherical(vector: np.ndarray) -> Tuple[float, float, float]:
    x, y, z = (float(v) for v in plane_to_3d(vector))
    r = float(np.sqrt(x * x + y * y + z * z))
    if r == 0:
        return 0.0, 0.0, 0.0
    theta = float(np.arccos(np.clip(x / r, -1.0, 1.0)))
    phi = float(np.arctan2(y, z) % (2 * np.pi))
    return r, theta, phi


def bloch_to_rho_batch(points: np.ndarray) -> np.ndarray:
    """
    Map Bloch points to density matrices (I + x sx + y sy + z sz)/2.

    Args:
        points: (n, 3) or real-plane (n, 2) array

    Returns:
        (n, 2, 2) complex array
    """
    full = plane_to_3d(np.atleast_2d(points))
    return 0.5 * (IDENTITY2 + np.einsum('ni,ijk->njk', full, PAULIS))


def rho_to_bloch_batch(rhos: np.ndarray) -> np.ndarray:
    """Bloch coordinates tr(sigma_i rho) of an (n, 2, 2) stack, as an (n, 3) array."""
    rhos = np.asarray(rhos)
    if rhos.shape[-2:] != (2, 2):
        raise DimensionMismatch('Bloch coordinates need 2 x 2 matrices', shape=rhos.shape)
    return np.einsum('ikj,njk->ni', PAULIS, rhos).real


def bloch_to_rho(b: BlochVector) -> DensityMatrix:
    """
    Density matrix of a qubit Bloch vector.

    Raises:
        RadiusOutOfRange: if the radius exceeds 1
    """
    if b.radius > 1 + settings.BLOCH_RADIUS_TOL:
        raise RadiusOutOfRange('Bloch vector lies outside the unit ball', radius=b.radius)
    rho = bloch_to_rho_batch(np.asarray(b.coords))[0]
    return DensityMatrix(rho)


def rho_to_bloch(rho: DensityMatrix, field: Optional[FieldKind] = None) -> BlochVector:
    """
    Bloch vector of a qubit state.

    Args:
        rho: 2 x 2 density matrix
        field: FieldKind.REAL returns real-plane (x, z) coordinates

    Returns:
        BlochVector
    """
    if rho.dim != 2:
        raise DimensionMismatch('Bloch coordinates are only defined for qubits', dim=rho.dim)
    vector = rho_to_bloch_batch(rho.matrix[None])[0]
    return BlochVector.from_3d(vector, field or FieldKind.COMPLEX)


def sample_uniform_state(d: int, stream, field: FieldKind = FieldKind.COMPLEX) -> DensityMatrix:
    """
    Draw a state from the flat (Hilbert-Schmidt) distribution.

    Realized as the central Wishart state with N = d columns (complex) or
    N = d + 1 columns (real), whose density det(rho)^0 is constant.

    Args:
        d: state dimension, at least 2
        stream: RandomStream
        field: FieldKind of the state space

    Returns:
        DensityMatrix
    """
    from core.wishart import WishartParams, sample_state

    if d < 2:
        raise InvalidParams('Uniform states need d >= 2', d=d)
    return sample_state(WishartParams.uniform(d, field), stream)


def align_rotation(from_: BlochVector, to: BlochVector) -> Rotation3:
    """
    Proper rotation taking the direction of from_ onto the direction of to.

    Antiparallel inputs rotate by pi about an axis orthogonal to from_,
    preferring +y so that real-plane vectors stay in the plane.

    Raises:
        ZeroVector: if either vector has (numerically) zero length
    """
    a = from_.as_3d()
    b = to.as_3d()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise ZeroVector('Cannot align a zero-length Bloch vector', from_norm=na, to_norm=nb)
    a, b = a / na, b / nb
    cross = np.cross(a, b)
    sin_angle = np.linalg.norm(cross)
    cos_angle = float(np.dot(a, b))
    if sin_angle < 1e-12:
        if cos_angle > 0:
            return Rotation3.identity()
        axis = np.array([0.0, 1.0, 0.0])
        if abs(np.dot(axis, a)) > 1e-6:
            axis = np.cross(a, [1.0, 0.0, 0.0])
            if np.linalg.norm(axis) < 1e-6:
                axis = np.cross(a, [0.0, 0.0, 1.0])
            axis = axis / np.linalg.norm(axis)
        return Rotation3(Rotation.from_rotvec(np.pi * axis).as_matrix())
    axis = cross / sin_angle
    angle = float(np.arctan2(sin_angle, cos_angle))
    return Rotation3(Rotation.from_rotvec(angle * axis).as_matrix())


def rotate_state(rho: DensityMatrix, rotation: Rotation3) -> DensityMatrix:
    """Apply a Bloch rotation to a qubit state."""
    vector = rho_to_bloch_batch(rho.matrix[None])
    rotated = rotation.apply(vector)
    return DensityMatrix(bloch_to_rho_batch(rotated)[0])


def conjugate(rho: DensityMatrix, unitary: np.ndarray) -> DensityMatrix:
    """
    Unitary conjugation U rho U^dagger, the alignment transform for d > 2.

    Raises:
        DimensionMismatch: if U does not match the state dimension
        InvalidParams: if U is not unitary
    """
    unitary = np.asarray(unitary, dtype=complex)
    if unitary.shape != (rho.dim, rho.dim):
        raise DimensionMismatch('Unitary does not match state dimension',
                                unitary_shape=unitary.shape, dim=rho.dim)
    if not np.allclose(unitary.conj().T @ unitary, np.eye(rho.dim), atol=1e-10):
        raise InvalidParams('Matrix is not unitary')
    return DensityMatrix(unitary @ rho.matrix @ unitary.conj().T)
