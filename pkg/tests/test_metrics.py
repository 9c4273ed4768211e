"""Every metric backend agrees with its own dense pairwise table."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimentropy.metrics import CoordMetric, ProductMetric, ShiftMetric, TableMetric, open_radius


def shift_distance(u, v):
    for j, (a, b) in enumerate(zip(u, v)):
        if a != b:
            return 2.0 ** -j
    return 0.0


@st.composite
def metrics(draw):
    kind = draw(st.sampled_from(["table", "coord", "shift", "product"]))
    k = draw(st.integers(1, 8))
    if kind == "shift":
        words = draw(st.lists(st.tuples(*[st.integers(0, 1)] * 5), min_size=k, max_size=k, unique=True))
        return ShiftMetric(words)
    cells = draw(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=k, max_size=k, unique=True))
    coord = CoordMetric(cells, draw(st.sampled_from(["chebyshev", "euclidean"])))
    if kind == "coord":
        return coord
    if kind == "table":
        idx = np.arange(k)
        return TableMetric(coord.pairwise(idx, idx))
    other = TableMetric(1 - np.eye(2))
    return ProductMetric(coord, other)


def test_shift_metric_matches_first_disagreement():
    words = [(0, 0, 1), (0, 1, 1), (1, 0, 0), (0, 0, 1)]
    m = ShiftMetric(words)
    idx = np.arange(4)
    want = np.array([[shift_distance(u, v) for v in words] for u in words])
    np.testing.assert_array_equal(m.pairwise(idx, idx), want)


def test_open_radius_is_just_below():
    assert open_radius(1.0) < 1.0
    assert np.nextafter(open_radius(1.0), 2.0) == 1.0


@settings(max_examples=80, deadline=None)
@given(metrics(), st.sampled_from([0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0]))
def test_backends_agree_with_pairwise(m, r):
    idx = np.arange(m.size)
    table = m.pairwise(idx, idx)
    np.testing.assert_array_equal(m.within(idx, idx, r), table <= r)
    i, j = np.meshgrid(idx, idx, indexing="ij")
    np.testing.assert_array_equal(m.paired(i.ravel(), j.ravel()), table.ravel())
    for x in idx:
        np.testing.assert_array_equal(m.dist_from(int(x), idx), table[x])
    assert m.diameter(idx) == pytest.approx(table.max(), abs=0)
