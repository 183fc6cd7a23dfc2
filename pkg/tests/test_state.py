"""
Tests for density matrices, Bloch coordinates and alignment transforms
"""

import numpy as np
import pytest

from core.errors import DimensionMismatch, InvalidParams, RadiusOutOfRange, ZeroVector
from core.state import (IDENTITY2, BlochVector, DensityMatrix, FieldKind, Rotation3, align_rotation,
                        bloch_to_rho, cartesian_to_spherical, conjugate, rho_to_bloch, rotate_state,
                        sample_uniform_state, spherical_to_cartesian)


class TestFieldKind:

    def test_parse_is_case_insensitive(self):
        assert FieldKind.parse('REAL') is FieldKind.REAL
        assert FieldKind.parse(FieldKind.COMPLEX) is FieldKind.COMPLEX

    def test_parse_rejects_unknown(self):
        with pytest.raises(InvalidParams):
            FieldKind.parse('quaternion')

    def test_bloch_dim(self):
        assert FieldKind.REAL.bloch_dim == 2
        assert FieldKind.COMPLEX.bloch_dim == 3


class TestDensityMatrix:

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidParams):
            DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))

    def test_rejects_wrong_trace(self):
        with pytest.raises(InvalidParams):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(InvalidParams):
            DensityMatrix(np.array([[1.2, 0.0], [0.0, -0.2]]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatch):
            DensityMatrix(np.ones((2, 3)) / 2)

    def test_det_and_realness(self):
        rho = DensityMatrix(np.diag([0.75, 0.25]))
        assert rho.det() == pytest.approx(0.1875)
        assert rho.is_real()


class TestBlochConversion:

    def test_center_is_maximally_mixed(self):
        rho = bloch_to_rho(BlochVector((0.0, 0.0, 0.0)))
        np.testing.assert_allclose(rho.matrix, IDENTITY2 / 2, atol=1e-15)

    def test_boundary_point_is_pure(self):
        rho = bloch_to_rho(BlochVector((1.0, 0.0, 0.0)))
        plus = np.array([1, 1]) / np.sqrt(2)
        np.testing.assert_allclose(rho.matrix, np.outer(plus, plus), atol=1e-15)
        assert rho.det() == pytest.approx(0.0, abs=1e-15)

    def test_half_radius_eigenvalues(self):
        rho = bloch_to_rho(BlochVector((0.5, 0.0, 0.0)))
        np.testing.assert_allclose(rho.eigenvalues(), [0.25, 0.75], atol=1e-14)

    def test_outside_ball_raises(self):
        with pytest.raises(RadiusOutOfRange):
            bloch_to_rho(BlochVector((1.1, 0.0, 0.0)))

    def test_real_plane_coordinates(self):
        rho = bloch_to_rho(BlochVector((0.3, -0.4)))
        assert rho.is_real()
        back = rho_to_bloch(rho, FieldKind.REAL)
        np.testing.assert_allclose(back.coords, (0.3, -0.4), atol=1e-14)

    def test_inverse_of_bloch_to_rho(self):
        vector = BlochVector((0.1, -0.2, 0.6))
        np.testing.assert_allclose(rho_to_bloch(bloch_to_rho(vector)).coords, vector.coords, atol=1e-14)

    def test_qutrit_has_no_bloch_vector(self):
        with pytest.raises(DimensionMismatch):
            rho_to_bloch(DensityMatrix(np.eye(3) / 3))


class TestSphericalConvention:
    """Polar axis +x, azimuth from +z towards +y."""

    def test_polar_axis_is_x(self):
        np.testing.assert_allclose(spherical_to_cartesian(1.0, 0.0, 0.0), [1, 0, 0], atol=1e-15)

    def test_z_axis(self):
        r, theta, phi = cartesian_to_spherical(np.array([0.0, 0.0, 1.0]))
        assert (r, theta, phi) == pytest.approx((1.0, np.pi / 2, 0.0))

    def test_y_axis(self):
        assert cartesian_to_spherical(np.array([0.0, 0.5, 0.0])) == pytest.approx((0.5, np.pi / 2, np.pi / 2))

    def test_azimuth_in_range(self):
        _, _, phi = BlochVector((0.0, -0.5, -0.1)).spherical()
        assert 0 <= phi < 2 * np.pi

    def test_from_spherical(self):
        b = BlochVector.from_spherical(0.72332, 2.18302, 1.92956)
        assert b.spherical() == pytest.approx((0.72332, 2.18302, 1.92956))


class TestAlignment:

    def test_maps_direction(self):
        target = BlochVector((0.1, 0.5, -0.3))
        rotation = align_rotation(BlochVector((1.0, 0.0, 0.0)), target)
        direction = target.as_3d() / target.radius
        np.testing.assert_allclose(rotation.apply(np.array([1.0, 0.0, 0.0])), direction, atol=1e-12)
        np.testing.assert_allclose(rotation.matrix @ rotation.matrix.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(rotation.matrix) == pytest.approx(1.0)

    def test_antiparallel_stays_in_real_plane(self):
        rotation = align_rotation(BlochVector((1.0, 0.0)), BlochVector((-1.0, 0.0)))
        rotated = rotation.apply(np.array([[0.3, 0.4], [1.0, 0.0]]))
        assert rotated.shape == (2, 2)
        np.testing.assert_allclose(rotated[1], [-1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(rotated[0]), 0.5)

    def test_parallel_is_identity(self):
        assert align_rotation(BlochVector((0.2, 0.0, 0.0)), BlochVector((0.9, 0.0, 0.0))).is_identity()

    def test_zero_vector_raises(self):
        with pytest.raises(ZeroVector):
            align_rotation(BlochVector((0.0, 0.0, 0.0)), BlochVector((1.0, 0.0, 0.0)))

    def test_rotate_state(self):
        rotation = align_rotation(BlochVector((1.0, 0.0, 0.0)), BlochVector((0.0, 0.0, 1.0)))
        rotated = rotate_state(bloch_to_rho(BlochVector((0.5, 0.0, 0.0))), rotation)
        np.testing.assert_allclose(rotated.matrix, np.diag([0.75, 0.25]), atol=1e-12)

    def test_inverse_rotation(self):
        rotation = align_rotation(BlochVector((1.0, 0.0, 0.0)), BlochVector((0.0, 1.0, 1.0)))
        point = np.array([0.2, -0.1, 0.4])
        np.testing.assert_allclose(rotation.inverse.apply(rotation.apply(point)), point, atol=1e-14)


class TestConjugate:

    def test_hadamard_maps_zero_to_plus(self):
        hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        rho = conjugate(DensityMatrix(np.diag([1.0, 0.0])), hadamard)
        np.testing.assert_allclose(rho_to_bloch(rho).coords, (1.0, 0.0, 0.0), atol=1e-12)

    def test_rejects_non_unitary(self):
        with pytest.raises(InvalidParams):
            conjugate(DensityMatrix(np.eye(2) / 2), np.array([[1, 1], [0, 1]]))

    def test_rejects_wrong_dimension(self):
        with pytest.raises(DimensionMismatch):
            conjugate(DensityMatrix(np.eye(2) / 2), np.eye(3))


class TestUniformState:

    def test_complex_state_is_valid(self, stream):
        rho = sample_uniform_state(3, stream)
        rho.validate()
        assert rho.dim == 3

    def test_real_state_is_real(self, stream):
        assert sample_uniform_state(2, stream, FieldKind.REAL).is_real()

    def test_dimension_one_rejected(self, stream):
        with pytest.raises(InvalidParams):
            sample_uniform_state(1, stream)

    def test_rotation_identity_matrix(self):
        np.testing.assert_array_equal(Rotation3.identity().matrix, np.eye(3))
