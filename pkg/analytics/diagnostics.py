"""
Goodness-of-fit and independence checks for sampled Bloch points
"""

from typing import Callable, Dict, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from analytics.sampler import fibonacci_boundary
from core.state import FieldKind


def radii(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.atleast_2d(points), axis=1)


def chi_square_test(observed: np.ndarray, expected_probabilities: np.ndarray,
                    min_expected: float = 5.0) -> Dict:
    """
    Pearson chi-square test of binned counts against bin probabilities.

    Bins whose expected count falls below min_expected are pooled into one.

    Args:
        observed: counts per bin
        expected_probabilities: model probability per bin (rescaled to sum 1)
        min_expected: pooling threshold

    Returns:
        Dictionary with statistic, p_value and dof
    """
    observed = np.asarray(observed, dtype=float).ravel()
    probabilities = np.asarray(expected_probabilities, dtype=float).ravel()
    probabilities = probabilities / probabilities.sum()
    expected = probabilities * observed.sum()

    small = expected < min_expected
    if np.any(small):
        observed = np.append(observed[~small], observed[small].sum())
        expected = np.append(expected[~small], expected[small].sum())
        if expected[-1] == 0:
            observed, expected = observed[:-1], expected[:-1]

    statistic, p_value = stats.chisquare(observed, expected * observed.sum() / expected.sum())
    return {'statistic': float(statistic), 'p_value': float(p_value), 'dof': len(observed) - 1}


def ks_test(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> Dict:
    result = stats.kstest(np.asarray(samples, dtype=float), cdf)
    return {'statistic': float(result.statistic), 'p_value': float(result.pvalue)}


def ks_radial_uniform(points: np.ndarray, field: FieldKind = FieldKind.COMPLEX) -> Dict:
    """KS test of Bloch radii against the flat law: CDF r^3 on the ball, r^2 on the disc."""
    power = 2 if FieldKind.parse(field) is FieldKind.REAL else 3
    return ks_test(radii(points), lambda r: np.clip(r, 0, 1) ** power)


def lag1_autocorrelation(values: Sequence[float]) -> float:
    return float(pd.Series(values).autocorr(lag=1))


def expected_radial_probabilities(log_pdf: Callable[[np.ndarray], np.ndarray], field: FieldKind,
                                  edges: np.ndarray, nodes: int = 16, directions: int = 400) -> np.ndarray:
    """
    Radial-bin probabilities of a (possibly unnormalized) Bloch density.

    Gauss-Legendre nodes in r per bin, a Fibonacci set of directions, and the
    r^(dim - 1) volume element.
    """
    field = FieldKind.parse(field)
    unit = fibonacci_boundary(field, directions)
    x, w = np.polynomial.legendre.leggauss(nodes)
    masses = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        r = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        weights = 0.5 * (hi - lo) * w * r ** (field.bloch_dim - 1)
        points = (r[:, None, None] * unit[None, :, :]).reshape(-1, field.bloch_dim)
        density = np.exp(np.asarray(log_pdf(points), dtype=float)).reshape(nodes, directions)
        masses.append(float(np.sum(weights * density.mean(axis=1))))
    masses = np.array(masses)
    return masses / masses.sum()


def radial_chi_square(points: np.ndarray, log_pdf: Callable[[np.ndarray], np.ndarray],
                      field: FieldKind, bins: int = 10) -> Dict:
    """Chi-square test of the radial histogram of points against a Bloch density."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    observed, _ = np.histogram(np.clip(radii(points), 0, 1), bins=edges)
    return chi_square_test(observed, expected_radial_probabilities(log_pdf, field, edges))


def expected_disc_grid_probabilities(log_pdf: Callable[[np.ndarray], np.ndarray], edges: np.ndarray,
                                     subdivisions: int = 12) -> np.ndarray:
    """
    Cell probabilities of a real-disc density on an (x, z) grid.

    Each cell is integrated by a midpoint rule on a subdivision mesh,
    restricted to the unit disc.
    """
    cells = len(edges) - 1
    probabilities = np.zeros((cells, cells))
    fractions = (np.arange(subdivisions) + 0.5) / subdivisions
    for i in range(cells):
        xs = edges[i] + (edges[i + 1] - edges[i]) * fractions
        for j in range(cells):
            zs = edges[j] + (edges[j + 1] - edges[j]) * fractions
            X, Z = np.meshgrid(xs, zs, indexing='ij')
            points = np.column_stack([X.ravel(), Z.ravel()])
            inside = np.sum(points ** 2, axis=1) < 1
            if not np.any(inside):
                continue
            density = np.exp(np.asarray(log_pdf(points[inside]), dtype=float))
            probabilities[i, j] = density.sum()
    return probabilities / probabilities.sum()


def disc_grid_chi_square(points: np.ndarray, log_pdf: Callable[[np.ndarray], np.ndarray],
                         cells: int = 12) -> Dict:
    """Chi-square test of a 2-D (x, z) histogram against a real-disc density."""
    edges = np.linspace(-1.0, 1.0, cells + 1)
    observed, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=[edges, edges])
    return chi_square_test(observed, expected_disc_grid_probabilities(log_pdf, edges))


def sample_summary(points: np.ndarray) -> pd.DataFrame:
    """Per-coordinate and radial summary statistics."""
    points = np.atleast_2d(points)
    names = ['x', 'z'] if points.shape[1] == 2 else ['x', 'y', 'z']
    frame = pd.DataFrame(points, columns=names)
    frame['r'] = radii(points)
    return frame.describe()
