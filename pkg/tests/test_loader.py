"""
Tests for config loading and output files
"""

import json
import os

import numpy as np
import pandas as pd
import pytest

from core.errors import ConfigError, DimensionMismatch
from core.loader import (load_frame, load_json, load_json_config, load_matrices, load_samples, output_dir,
                         save_frame, save_json, save_matrices, save_samples)
from core.state import FieldKind


class TestOutputDir:

    def test_override_wins(self, monkeypatch, tmp_path):
        monkeypatch.setenv('WISHART_OUTPUT_DIR', str(tmp_path / 'env'))
        assert output_dir(tmp_path / 'flag') == tmp_path / 'flag'

    def test_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv('WISHART_OUTPUT_DIR', str(tmp_path / 'env'))
        assert output_dir() == tmp_path / 'env'

    def test_default(self, monkeypatch):
        monkeypatch.delenv('WISHART_OUTPUT_DIR', raising=False)
        assert str(output_dir()) == 'results'


class TestJsonConfig:

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_json_config(tmp_path / 'absent.json')

    def test_malformed(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{"pom": ')
        with pytest.raises(ConfigError):
            load_json_config(path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / 'list.json'
        path.write_text('[1, 2]')
        with pytest.raises(ConfigError):
            load_json_config(path)

    def test_save_and_load(self, tmp_path):
        path = save_json({'b': 1, 'a': [1, 2]}, tmp_path / 'nested' / 'report.json')
        assert load_json(path) == {'a': [1, 2], 'b': 1}
        assert path.read_text().startswith('{\n  "a"')


class TestSamples:

    def test_real_columns(self, tmp_path):
        path = save_samples(np.array([[0.1, 0.2], [0.3, -0.4]]), tmp_path / 's.csv', FieldKind.REAL)
        assert path.read_text().splitlines()[0] == 'x,z'
        np.testing.assert_allclose(load_samples(path), [[0.1, 0.2], [0.3, -0.4]])

    def test_width_must_match_field(self, tmp_path):
        with pytest.raises(DimensionMismatch):
            save_samples(np.zeros((2, 2)), tmp_path / 's.csv', FieldKind.COMPLEX)

    def test_unknown_columns(self, tmp_path):
        path = tmp_path / 'other.csv'
        path.write_text('a,b\n1,2\n')
        with pytest.raises(ConfigError):
            load_samples(path)

    def test_no_temporary_files_left(self, tmp_path):
        save_samples(np.zeros((3, 3)), tmp_path / 's.csv', FieldKind.COMPLEX)
        assert os.listdir(tmp_path) == ['s.csv']


class TestMatrices:

    def test_complex_entries(self, tmp_path):
        rho = np.array([[0.6, 0.1 - 0.2j], [0.1 + 0.2j, 0.4]])
        path = save_matrices(rho[None], tmp_path / 'm.jsonl')
        assert json.loads(path.read_text().splitlines()[0])[0][1] == [0.1, -0.2]
        np.testing.assert_array_equal(load_matrices(path)[0], rho)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / 'm.jsonl'
        path.write_text('[[1, 2]]\n')
        with pytest.raises(ConfigError):
            load_matrices(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / 'm.jsonl'
        path.write_text('\n')
        with pytest.raises(ConfigError):
            load_matrices(path)


class TestFrames:

    def test_csv_without_index(self, tmp_path):
        frame = pd.DataFrame({'lambda': [0.0, 0.5, 1.0], 'size': [1.0, 0.4, 0.0]})
        path = save_frame(frame, tmp_path / 'curves.csv')
        assert path.read_text().splitlines()[0] == 'lambda,size'
        pd.testing.assert_frame_equal(load_frame(path), frame)
