"""
Data loading and saving utilities for configs, samples and reports

All writers are atomic (temporary file plus rename).
"""

import json
import os
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from config import settings
from core.errors import ConfigError, DimensionMismatch
from core.state import FieldKind
from utils.helpers import atomic_write_text


PathLike = Union[str, Path]

SAMPLE_COLUMNS = {
    FieldKind.REAL: ['x', 'z'],
    FieldKind.COMPLEX: ['x', 'y', 'z'],
}


def output_dir(override: Optional[PathLike] = None) -> Path:
    """
    Directory for command outputs.

    Args:
        override: explicit directory (e.g. the --output-dir flag)

    Returns:
        override, else $WISHART_OUTPUT_DIR, else results/
    """
    if override:
        return Path(override)
    return Path(os.environ.get(settings.OUTPUT_DIR_ENV) or settings.DEFAULT_OUTPUT_DIR)


def load_json_config(file_path: PathLike) -> Dict:
    """
    Load a JSON experiment configuration.

    Args:
        file_path: Path to the JSON file

    Returns:
        The parsed JSON object

    Raises:
        ConfigError: if the file is missing, malformed or not a JSON object
    """
    path = Path(file_path)
    if not path.exists():
        raise ConfigError(f'Config file not found: {path}', path=str(path))
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f'Config file is not valid JSON: {e.msg}', path=str(path), line=e.lineno)
    if not isinstance(data, dict):
        raise ConfigError('Config file must hold a JSON object', path=str(path))
    return data


def save_json(data: Dict, file_path: PathLike) -> Path:
    return atomic_write_text(file_path, json.dumps(data, indent=2, sort_keys=True) + '\n')


def load_json(file_path: PathLike) -> Dict:
    with open(file_path, 'r', encoding='utf-8') as f:
        return json.load(f)


def save_frame(frame: pd.DataFrame, file_path: PathLike) -> Path:
    """Write a DataFrame as CSV without its index."""
    return atomic_write_text(file_path, frame.to_csv(index=False))


def load_frame(file_path: PathLike) -> pd.DataFrame:
    return pd.read_csv(file_path)


def samples_frame(points: np.ndarray, field: FieldKind) -> pd.DataFrame:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    columns = SAMPLE_COLUMNS[FieldKind.parse(field)]
    if points.shape[1] != len(columns):
        raise DimensionMismatch('Sample width does not match the field', width=points.shape[1],
                                expected=len(columns))
    return pd.DataFrame(points, columns=columns)


def save_samples(points: np.ndarray, file_path: PathLike, field: FieldKind) -> Path:
    """
    Save Bloch samples as CSV with columns x,z (real) or x,y,z (complex).

    Args:
        points: (n, 2) or (n, 3) Bloch coordinates
        file_path: Destination CSV
        field: Field of the samples

    Returns:
        The destination path
    """
    return save_frame(samples_frame(points, field), file_path)


def load_samples(file_path: PathLike) -> np.ndarray:
    """
    Load Bloch samples written by save_samples.

    Returns:
        (n, 2) or (n, 3) array, depending on the columns present
    """
    df = pd.read_csv(file_path)
    for columns in SAMPLE_COLUMNS.values():
        if list(df.columns) == columns:
            return df[columns].to_numpy(dtype=float)
    raise ConfigError('Sample file must have columns x,z or x,y,z', path=str(file_path),
                      columns=list(df.columns))


def _encode_matrix(matrix: np.ndarray) -> List:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(matrix, dtype=complex)]


def save_matrices(matrices: np.ndarray, file_path: PathLike) -> Path:
    """
    Save a stack of complex matrices as JSON lines.

    Each line is one row-major matrix, every entry written as [re, im].
    """
    lines = [json.dumps(_encode_matrix(m)) for m in matrices]
    return atomic_write_text(file_path, '\n'.join(lines) + '\n')


def load_matrices(file_path: PathLike) -> np.ndarray:
    """
    Load matrices written by save_matrices.

    Returns:
        (n, d, d) complex array

    Raises:
        ConfigError: on malformed lines
    """
    matrices = []
    with open(file_path, 'r', encoding='utf-8') as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                entries = np.array(json.loads(line), dtype=float)
            except (json.JSONDecodeError, ValueError) as e:
                raise ConfigError('Malformed matrix line', path=str(file_path), line=number, reason=str(e))
            if entries.ndim != 3 or entries.shape[-1] != 2 or entries.shape[0] != entries.shape[1]:
                raise ConfigError('Matrix line must be a square array of [re, im] pairs',
                                  path=str(file_path), line=number)
            matrices.append(entries[..., 0] + 1j * entries[..., 1])
    if not matrices:
        raise ConfigError('Matrix file is empty', path=str(file_path))
    return np.stack(matrices)
