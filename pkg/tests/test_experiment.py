"""
Tests for experiment config validation
"""

import pytest

from config import settings
from config.experiment import (BenchAcceptanceConfig, BlrConfig, ExperimentConfig, MeasurementConfig,
                               PosteriorSampleConfig)
from core.errors import ConfigError, DimensionMismatch, InvalidParams


BASE = {'pom': 'trine', 'clicks': [7, 10, 13]}


class TestFromDict:

    def test_defaults(self):
        config = ExperimentConfig.from_dict('posterior-sample', dict(BASE))
        assert isinstance(config, PosteriorSampleConfig)
        assert config.clicks == (7, 10, 13)
        assert config.seed == settings.DEFAULT_SEED
        assert config.alpha == settings.DEFAULT_UNIFORM_ALPHA
        assert config.n_accept == 1000

    def test_blr_defaults_to_uniform_proposal(self):
        config = ExperimentConfig.from_dict('blr', dict(BASE))
        assert isinstance(config, BlrConfig)
        assert config.strategy == 'uniform'

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict('posterior-sample', dict(BASE, colour='red'))
        assert info.value.details['keys'] == ['colour']

    def test_missing_key(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.from_dict('posterior-sample', {'pom': 'trine'})
        assert info.value.details['keys'] == ['clicks']

    @pytest.mark.parametrize('key,value', [('clicks', '7,10,13'), ('seed', 1.5), ('seed', True), ('N', 'ten'),
                                           ('weights', [0.5, None])])
    def test_wrong_type(self, key, value):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict('posterior-sample', dict(BASE, **{key: value}))

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict('fit-peak', dict(BASE))

    def test_not_an_object(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict('posterior-sample', [1, 2])

    def test_unknown_pom(self):
        with pytest.raises(InvalidParams):
            ExperimentConfig.from_dict('posterior-sample', {'pom': 'hexagon', 'clicks': [1, 2]})

    def test_clicks_must_match_pom(self):
        with pytest.raises(DimensionMismatch):
            ExperimentConfig.from_dict('posterior-sample', {'pom': 'tetrahedron', 'clicks': [1, 2, 3]})

    def test_range_checks(self):
        with pytest.raises(InvalidParams):
            ExperimentConfig.from_dict('posterior-sample', dict(BASE, n_accept=0))
        with pytest.raises(InvalidParams):
            ExperimentConfig.from_dict('posterior-sample', dict(BASE, safety=0.5))
        with pytest.raises(InvalidParams):
            ExperimentConfig.from_dict('blr', dict(BASE, sizes=[]))

    def test_sweep_lists(self):
        config = ExperimentConfig.from_dict('bench-acceptance', dict(BASE, N_values=[6, 10], mu_values=[None, 0.5]))
        assert isinstance(config, BenchAcceptanceConfig)
        assert config.N_values == (6, 10)
        assert config.mu_values == (None, 0.5)

    def test_mle_takes_only_the_measurement(self):
        config = ExperimentConfig.from_dict('mle', {'pom': 'tetrahedron', 'clicks': [12, 7, 21, 10]})
        assert isinstance(config, MeasurementConfig)
        assert config.to_dict() == {'pom': 'tetrahedron', 'clicks': [12, 7, 21, 10]}
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict('mle', dict(BASE, seed=3))

    def test_grid_resolution_left_to_the_sampler(self):
        assert ExperimentConfig.from_dict('posterior-sample', dict(BASE)).grid_resolution is None
        config = ExperimentConfig.from_dict('posterior-sample', dict(BASE, grid_resolution=0.05))
        assert config.grid_resolution == 0.05
        with pytest.raises(InvalidParams):
            ExperimentConfig.from_dict('posterior-sample', dict(BASE, grid_resolution=0))


class TestConfigObjects:

    def test_schema_marks_required_fields(self):
        schema = ExperimentConfig.schema(PosteriorSampleConfig)
        assert schema['pom']['required'] and schema['clicks']['required']
        assert not schema['seed']['required']
        assert schema['clicks']['type'] == 'list of integers'

    def test_to_dict_is_json_friendly(self):
        data = PosteriorSampleConfig(pom='trine', clicks=(7, 10, 13)).to_dict()
        assert data['clicks'] == [7, 10, 13]
        assert data['weights'] == [0.5, 0.5]

    def test_knobs(self):
        knobs = PosteriorSampleConfig(pom='trine', clicks=(7, 10, 13), N=10, weights=(1, 1)).knobs()
        assert knobs.N == 10
        assert knobs.weights == (0.5, 0.5)
