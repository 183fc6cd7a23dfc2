"""
Smoke tests for figures
"""

import numpy as np
import pandas as pd
import pytest
from scipy.integrate import trapezoid

from analytics.blr import BlrCurve
from analytics.sampler import ProposalSpec
from analytics.visualizer import (cross_section, plot_acceptance_sweep, plot_blr_curves, plot_cross_section,
                                  plot_radial_histogram)
from core.state import FieldKind
from core.wishart import WishartParams
from tests.targets import flat_target


def test_blr_curves(tmp_path):
    lambdas = np.linspace(0, 1, 11)
    curve = BlrCurve(lambdas, 1 - lambdas, 1 - lambdas ** 2, 1 - lambdas ** 2)
    path = tmp_path / 'charts' / 'blr.png'
    plot_blr_curves(curve, str(path))
    assert path.exists()


def test_acceptance_sweep(tmp_path):
    sweep = pd.DataFrame({'strategy': ['interior', 'interior', 'uniform'], 'N': [6, 10, None],
                          'alpha': [0.002, 0.002, 1.0], 'mu': [None, None, None],
                          'acceptance_rate': [0.3, 0.5, 0.05]})
    path = tmp_path / 'sweep.png'
    plot_acceptance_sweep(sweep, str(path))
    assert path.exists()


def test_cross_section_is_normalized(tmp_path):
    spec = ProposalSpec([(1.0, WishartParams.all_mu(FieldKind.REAL, 2, 6, 0.5))])
    frame = cross_section(flat_target, spec, np.array([1.0, 0.0, 0.0]))
    assert list(frame.columns) == ['t', 'target', 'proposal']
    assert trapezoid(frame['target'], frame['t']) == pytest.approx(1.0)
    assert trapezoid(frame['proposal'], frame['t']) == pytest.approx(1.0)
    path = tmp_path / 'cross.png'
    plot_cross_section(flat_target, spec, np.array([0.0, 0.0, 1.0]), str(path), title='flat')
    assert path.exists()


def test_radial_histogram(tmp_path):
    points = np.random.default_rng(0).uniform(-0.5, 0.5, size=(500, 3))
    path = tmp_path / 'radii.png'
    plot_radial_histogram(points, str(path))
    assert path.exists()
