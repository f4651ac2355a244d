"""Standalone property suite: normalization, ordering, bounds, determinism.

Runnable on its own (`pytest tests/test_properties.py`); the acceptance gate
re-runs the same checks as its criterion 7.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import property_checks as pc
from sharpe_rmt import sr_limit_unknown
from sharpe_rmt.moments import PortfolioWeights


@pytest.mark.parametrize("check", pc.ALL_CHECKS, ids=lambda f: f.__name__)
def test_property(check):
    check()


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 50.0), st.floats(0.01, 5.0))
def test_sr_limit_below_sr_max_and_monotone(sr, c):
    val = sr_limit_unknown(sr, c)
    assert 0.0 <= val <= sr + 1e-12
    assert sr_limit_unknown(sr, c + 0.5) <= val + 1e-12  # decreasing in c


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5.0, 5.0), min_size=1, max_size=12))
def test_l1_normalized_weights_accepted(values):
    w = np.asarray(values)
    book = np.abs(w).sum()
    if book < 1e-9:
        return
    PortfolioWeights(w=w / book, normalization="l1_book")
