"""
Tests for random streams, ensemble parameters and Wishart state sampling
"""

import numpy as np
import pytest

from analytics.diagnostics import ks_radial_uniform
from core.errors import InvalidParams
from core.state import FieldKind, rho_to_bloch_batch, to_plane
from core.wishart import (RandomStream, WishartParams, chunk_sizes, sample_bloch_array, sample_gaussian_matrix,
                          sample_state, sample_states_array, sample_states_batch)


class TestRandomStream:

    def test_same_pair_same_draws(self):
        a = RandomStream(7, 3).generator.standard_normal(5)
        b = RandomStream(7, 3).generator.standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_stream_ids_differ(self):
        a = RandomStream(7, 0).generator.standard_normal(5)
        b = RandomStream(7, 1).generator.standard_normal(5)
        assert not np.allclose(a, b)

    def test_spawn_shares_seed(self):
        child = RandomStream(7, 0).spawn(4)
        assert (child.seed, child.stream_id) == (7, 4)

    def test_negative_seed_rejected(self):
        with pytest.raises(InvalidParams):
            RandomStream(-1)


class TestWishartParams:

    def test_rank_two_mean_rejected(self):
        with pytest.raises(InvalidParams):
            WishartParams(FieldKind.COMPLEX, 2, 3, np.eye(2, 3), np.eye(2))

    def test_too_few_columns(self):
        with pytest.raises(InvalidParams):
            WishartParams.central(FieldKind.COMPLEX, 3, 2)
        with pytest.raises(InvalidParams):
            WishartParams.central(FieldKind.REAL, 2, 2)

    def test_covariance_must_be_positive_definite(self):
        with pytest.raises(InvalidParams):
            WishartParams.central(FieldKind.COMPLEX, 2, 4, np.diag([1.0, 0.0]))

    def test_covariance_must_be_hermitian(self):
        with pytest.raises(InvalidParams):
            WishartParams.central(FieldKind.COMPLEX, 2, 4, np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_real_field_rejects_complex_mean(self):
        with pytest.raises(InvalidParams):
            WishartParams(FieldKind.REAL, 2, 3, 1j * np.ones((2, 3)), np.eye(2))

    def test_all_mu_entries(self):
        p = WishartParams.all_mu(FieldKind.COMPLEX, 2, 4, 0.5)
        np.testing.assert_allclose(p.M, (0.5 + 0.5j) * np.ones((2, 4)))
        assert not p.is_central

    def test_uniform_column_counts(self):
        assert WishartParams.uniform(2).N == 2
        assert WishartParams.uniform(2, FieldKind.REAL).N == 3
        assert WishartParams.uniform(4).N == 4

    def test_cholesky_factor(self):
        sigma = np.array([[2.0, 0.5 + 0.5j], [0.5 - 0.5j, 1.0]])
        p = WishartParams.central(FieldKind.COMPLEX, 2, 3, sigma)
        L = p.cholesky
        np.testing.assert_allclose(L @ L.conj().T, sigma, atol=1e-14)
        assert L[0, 1] == 0


class TestSampling:

    def test_state_is_valid(self, stream):
        p = WishartParams.all_mu(FieldKind.COMPLEX, 3, 5, 0.7)
        rho = sample_state(p, stream)
        rho.validate()

    def test_real_state_is_real(self, stream):
        rho = sample_state(WishartParams.all_mu(FieldKind.REAL, 2, 4, 0.3), stream)
        assert rho.is_real()

    def test_gaussian_mean(self, stream):
        p = WishartParams.all_mu(FieldKind.COMPLEX, 2, 3, 0.8)
        draws = sample_gaussian_matrix(p, stream, size=20000)
        np.testing.assert_allclose(draws.mean(axis=0), p.M, atol=0.03)
        # unit complex variance per entry
        assert np.mean(np.abs(draws - p.M) ** 2) == pytest.approx(1.0, rel=0.03)

    def test_chunk_sizes(self):
        assert chunk_sizes(50, 16) == [16, 16, 16, 2]
        assert chunk_sizes(32, 16) == [16, 16]

    def test_batch_is_reproducible(self):
        p = WishartParams.all_mu(FieldKind.COMPLEX, 2, 4, 0.5)
        a = sample_states_array(p, 40, seed=99, batch_size=16)
        b = sample_states_array(p, 40, seed=99, batch_size=16)
        np.testing.assert_array_equal(a, b)

    def test_batch_independent_of_workers(self):
        p = WishartParams.all_mu(FieldKind.REAL, 2, 5, 0.5)
        serial = sample_states_array(p, 50, seed=5, workers=1, batch_size=16)
        parallel = sample_states_array(p, 50, seed=5, workers=3, batch_size=16)
        np.testing.assert_array_equal(serial, parallel)

    def test_batch_rejects_empty(self):
        with pytest.raises(InvalidParams):
            sample_states_array(WishartParams.uniform(2), 0, seed=1)

    def test_batch_list_form(self):
        states = sample_states_batch(WishartParams.uniform(3), 5, seed=1)
        assert len(states) == 5
        for rho in states:
            rho.validate()

    def test_bloch_array_needs_qubits(self, stream):
        with pytest.raises(InvalidParams):
            sample_bloch_array(WishartParams.uniform(3), stream, 3)


class TestUniformLaw:
    """Hilbert-Schmidt states are flat in Bloch coordinates: radius CDF r^3 (ball), r^2 (disc)."""

    def test_complex_qubit_is_flat(self):
        points = rho_to_bloch_batch(sample_states_array(WishartParams.uniform(2), 20000, seed=11))
        assert ks_radial_uniform(points, FieldKind.COMPLEX)['p_value'] > 0.001

    def test_real_qubit_is_flat(self):
        p = WishartParams.uniform(2, FieldKind.REAL)
        points = to_plane(rho_to_bloch_batch(sample_states_array(p, 20000, seed=12)))
        assert ks_radial_uniform(points, FieldKind.REAL)['p_value'] > 0.001
