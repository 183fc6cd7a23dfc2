"""
Helper utilities for the quantum Wishart sampler
"""

import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import List, Optional, Union


LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class _StderrHandler(logging.StreamHandler):
    """Console handler that always writes to the current sys.stderr."""

    def __init__(self):
        super().__init__(sys.stderr)

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def setup_logger(name: str = 'wishart_sampler', log_file: Optional[str] = None,
                 level: int = logging.INFO) -> logging.Logger:
    """
    Set up a logger for the application.

    Console output goes to stderr so that stdout stays machine-readable.
    Calling this again reconfigures the level without duplicating handlers.

    Args:
        name: Logger name
        log_file: Optional path to a log file
        level: Logging level

    Returns:
        Logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    for handler in logger.handlers:
        handler.setLevel(level)

    # Console handler
    if not any(isinstance(h, _StderrHandler) for h in logger.handlers):
        console_handler = _StderrHandler()
        console_handler.setFormatter(formatter)
        console_handler.setLevel(level)
        logger.addHandler(console_handler)

    # File handler
    if log_file:
        target = os.path.abspath(log_file)
        if not any(isinstance(h, logging.FileHandler) and h.baseFilename == target for h in logger.handlers):
            Path(log_file).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_file)
            file_handler.setFormatter(formatter)
            file_handler.setLevel(level)
            logger.addHandler(file_handler)

    return logger


def format_percentage(value: float, decimals: int = 2) -> str:
    """
    Format a number as a percentage.

    Args:
        value: Value to format (0.05 = 5%)
        decimals: Number of decimal places

    Returns:
        Formatted percentage string
    """
    return f"{value * 100:.{decimals}f}%"


def format_duration(seconds: float) -> str:
    """Human-readable wall time, e.g. '950 ms', '42.3 s', '5 min 12 s'."""
    if seconds < 1:
        return f"{seconds * 1000:.0f} ms"
    if seconds < 60:
        return f"{seconds:.1f} s"
    minutes, rest = divmod(seconds, 60)
    if minutes < 60:
        return f"{int(minutes)} min {rest:.0f} s"
    hours, minutes = divmod(minutes, 60)
    return f"{int(hours)} h {int(minutes)} min"


def parse_number_list(text: str, kind: type = float) -> List:
    """
    Parse a comma-separated list such as '12,7,21,10'.

    Raises:
        ValueError: on an empty list or a malformed entry
    """
    parts = [part.strip() for part in str(text).split(',') if part.strip()]
    if not parts:
        raise ValueError(f"Empty list: '{text}'")
    return [kind(part) for part in parts]


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """
    Write text so that readers never see a partial file.

    The content goes to a temporary file in the destination directory,
    which then replaces the destination.

    Args:
        path: Destination file
        text: Content

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp_name = tempfile.mkstemp(prefix=f'.{path.name}.', suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(handle, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise
    return path
