"""
Visualization utilities for sampler diagnostics
"""

import logging
from pathlib import Path
from typing import Callable, Optional

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import seaborn as sns
from scipy.integrate import trapezoid

from analytics.blr import BlrCurve
from analytics.sampler import ProposalSpec, proposal_logpdf_bloch
from core.state import FieldKind, to_plane


logger = logging.getLogger(__name__)

# Set style for all plots
plt.style.use('seaborn-v0_8-darkgrid')
sns.set_palette("husl")


def _save(fig, save_path: str):
    # Tight layout
    plt.tight_layout()

    # Save figure
    Path(save_path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(save_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info('Figure saved to %s', save_path)


def plot_blr_curves(curve: BlrCurve, save_path: str = 'results/charts/blr_curves.png'):
    """
    Size and both credibility curves against lambda.

    Args:
        curve: BlrCurve from blr_curves
        save_path: Path to save the chart
    """
    # Create figure
    fig, ax = plt.subplots(figsize=(9, 6))

    # Plot size and credibility curves
    ax.plot(curve.lambdas, curve.size, linewidth=2, color='#2E86AB', label='Size $s_\\lambda$')
    ax.plot(curve.lambdas, curve.credibility_empirical, linewidth=2, color='#A23B72',
            label='Credibility (sample)')
    ax.plot(curve.lambdas, curve.credibility_theoretical, linewidth=2, linestyle='--', color='#F18F01',
            label='Credibility (from size)')

    # Formatting
    ax.set_xlabel('$\\lambda$', fontsize=12, fontweight='bold')
    ax.set_ylabel('Fraction', fontsize=12, fontweight='bold')
    ax.set_title(f'Bounded-likelihood regions (max gap {curve.max_deviation:.4f})',
                 fontsize=14, fontweight='bold', pad=20)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc='best', fontsize=10)
    ax.grid(True, alpha=0.3)

    _save(fig, save_path)


def plot_acceptance_sweep(sweep: pd.DataFrame, save_path: str = 'results/charts/acceptance_sweep.png'):
    """
    Acceptance rate against the swept knob (column count N, or the mean when
    N is fixed), one line per uniform admixture.

    Args:
        sweep: DataFrame from bench_acceptance
        save_path: Path to save the chart
    """
    # Create figure
    fig, ax = plt.subplots(figsize=(10, 6))

    # One line per uniform admixture
    data = sweep[sweep['strategy'] != 'uniform'].dropna(subset=['acceptance_rate']).copy()
    x = 'N' if data['N'].nunique() > 1 else 'mu'
    data = data.dropna(subset=[x])
    data[x] = data[x].astype(float)
    data['alpha'] = data['alpha'].map(lambda a: f'{a:g}')
    if not data.empty:
        sns.lineplot(data=data, x=x, y='acceptance_rate', hue='alpha', marker='o', ax=ax)

    # Add uniform baseline
    baseline = sweep[sweep['strategy'] == 'uniform']['acceptance_rate'].dropna()
    if not baseline.empty:
        ax.axhline(y=baseline.iloc[0], color='gray', linestyle='--', linewidth=1, alpha=0.7,
                   label=f'Uniform proposal: {baseline.iloc[0]:.1%}')

    # Formatting
    ax.set_xlabel('Number of columns N' if x == 'N' else 'Mean $\\mu$', fontsize=12, fontweight='bold')
    ax.set_ylabel('Acceptance rate', fontsize=12, fontweight='bold')
    ax.set_title('Acceptance rate of the proposal sweep', fontsize=14, fontweight='bold', pad=20)
    # Format y-axis as percentage
    ax.yaxis.set_major_formatter(plt.FuncFormatter(lambda y, p: f'{y:.0%}'))
    ax.legend(loc='best', fontsize=10)
    ax.grid(True, alpha=0.3)

    _save(fig, save_path)


def cross_section(target_logpdf: Callable[[np.ndarray], np.ndarray], spec: ProposalSpec,
                  direction: np.ndarray, steps: int = 401) -> pd.DataFrame:
    """
    Target and proposal densities along the diameter through direction,
    each normalized to unit area on the diameter.
    """
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    t = np.linspace(-1, 1, steps)
    points = t[:, None] * direction[None, :]
    if spec.field is FieldKind.REAL and points.shape[1] == 3:
        points = to_plane(points)

    frame = pd.DataFrame({'t': t})
    for name, values in (('target', np.asarray(target_logpdf(points), dtype=float)),
                         ('proposal', proposal_logpdf_bloch(spec, points))):
        finite = values[np.isfinite(values)]
        density = np.exp(values - finite.max()) if finite.size else np.zeros_like(values)
        area = trapezoid(density, t)
        frame[name] = density / area if area > 0 else density
    return frame


def plot_cross_section(target_logpdf: Callable[[np.ndarray], np.ndarray], spec: ProposalSpec,
                       direction: np.ndarray, save_path: str = 'results/charts/cross_section.png',
                       title: Optional[str] = None):
    """
    Normalized target and proposal along the diameter through the peak direction.

    Args:
        target_logpdf: unnormalized log target on Bloch points
        spec: proposal mixture
        direction: Bloch direction of the diameter
        save_path: Path to save the chart
    """
    frame = cross_section(target_logpdf, spec, direction)

    # Create figure
    fig, ax = plt.subplots(figsize=(10, 6))

    # Plot both densities
    ax.plot(frame['t'], frame['target'], linewidth=2, color='#2E86AB', label='Target')
    ax.plot(frame['t'], frame['proposal'], linewidth=2, linestyle='--', color='#C73E1D', label='Proposal')

    # Formatting
    ax.set_xlabel('Position along diameter', fontsize=12, fontweight='bold')
    ax.set_ylabel('Normalized density', fontsize=12, fontweight='bold')
    ax.set_title(title or 'Target and proposal cross-section', fontsize=14, fontweight='bold', pad=20)
    ax.legend(loc='best', fontsize=10)
    ax.grid(True, alpha=0.3)

    _save(fig, save_path)


def plot_radial_histogram(points: np.ndarray, save_path: str = 'results/charts/radial_histogram.png',
                          bins: int = 50):
    """Histogram of Bloch radii of a sample."""
    radii = np.linalg.norm(np.atleast_2d(points), axis=1)

    # Create figure
    fig, ax = plt.subplots(figsize=(10, 6))

    # Create histogram
    ax.hist(radii, bins=bins, range=(0, 1), color='#2E86AB', alpha=0.7, edgecolor='black')
    # Add mean line
    ax.axvline(x=radii.mean(), color='red', linestyle='--', linewidth=2, label=f'Mean: {radii.mean():.4f}')

    # Formatting
    ax.set_xlabel('Bloch radius', fontsize=12, fontweight='bold')
    ax.set_ylabel('Frequency', fontsize=12, fontweight='bold')
    ax.set_title('Distribution of sampled radii', fontsize=14, fontweight='bold', pad=20)
    ax.legend(loc='best', fontsize=10)
    ax.grid(True, alpha=0.3, axis='y')

    _save(fig, save_path)
