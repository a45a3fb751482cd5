import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from nucleograde import morphology as mo
from nucleograde.synthetic import ellipse_mask

masks = arrays(np.bool_, st.tuples(st.integers(1, 20), st.integers(1, 20)))
elements = st.sampled_from([mo.disk(1), mo.disk(2), mo.square(3), mo.CROSS])


def test_element_shapes():
    assert mo.disk(2).sum() == 13
    assert mo.square(3).sum() == 9
    with pytest.raises(ValueError):
        mo.disk(0)


def test_full_mask_erosion_loses_border():
    out = mo.erode(np.ones((6, 7), bool), mo.square(3))
    expect = np.zeros((6, 7), bool)
    expect[1:-1, 1:-1] = True
    assert np.array_equal(out, expect)


def test_empty_mask_stays_empty():
    m = np.zeros((5, 5), bool)
    for op in (mo.erode, mo.dilate, mo.open, mo.close):
        assert not op(m, mo.disk(1)).any()


def test_single_pixel_dilated_by_disk():
    m = np.zeros((9, 9), bool)
    m[4, 4] = True
    out = mo.dilate(m, mo.disk(2))
    ref = [[(i - 4) ** 2 + (j - 4) ** 2 <= 4 for j in range(9)] for i in range(9)]
    assert out.tolist() == ref and out.sum() == 13


def test_open_close_on_random_masks(rng):
    for _ in range(100):
        m = rng.random((32, 32)) < 0.5
        se = mo.disk(1)
        o, c = mo.open(m, se), mo.close(m, se)
        assert not (o & ~m).any()
        assert not (m & ~c).any()
        assert np.array_equal(mo.open(o, se), o)
        assert np.array_equal(mo.close(c, se), c)


@given(masks, elements)
def test_duality(m, se):
    pad = max(se.shape)
    big = np.pad(m, pad)
    lhs = mo.erode(big, se)
    rhs = ~mo.dilate(~big, se[::-1, ::-1])
    inner = (slice(pad, -pad), slice(pad, -pad))
    assert np.array_equal(lhs[inner], rhs[inner])


def test_ring_fills_to_disk():
    disk = ellipse_mask((31, 31), (15, 15), (10, 10))
    ring = disk & ~ellipse_mask((31, 31), (15, 15), (6, 6))
    assert np.array_equal(mo.fill_holes(ring), disk)


def test_fill_without_holes_is_identity(rng):
    m = np.zeros((10, 10), bool)
    m[2:5, 3:8] = True
    assert np.array_equal(mo.fill_holes(m), m)


def test_nested_rings_fill_solid():
    def ring(r0, r1):
        return ellipse_mask((41, 41), (20, 20), (r1, r1)) & ~ellipse_mask((41, 41), (20, 20), (r0, r0))
    m = ring(15, 18) | ring(5, 8)
    out = mo.fill_holes(m)
    assert out.tolist() == oracles.fill_from_border(m.tolist())
    assert np.array_equal(out, ellipse_mask((41, 41), (20, 20), (18, 18)))


@given(masks)
def test_fill_matches_flood_fill_and_is_extensive(m):
    out = mo.fill_holes(m)
    assert out.tolist() == oracles.fill_from_border(m.tolist())
    assert not (m & ~out).any()


def test_components_examples():
    assert mo.connected_components(np.zeros((3, 3), bool)) == []
    comps = mo.connected_components(np.ones((4, 6), bool))
    assert len(comps) == 1
    assert comps[0].centroid == pytest.approx((2.5, 1.5))
    assert comps[0].pixel_count == 24 and comps[0].bounding_box == (0, 0, 5, 3)
    board = (np.add.outer(np.arange(4), np.arange(4)) % 2 == 0)
    assert len(mo.connected_components(board, 4)) == 8
    # diagonal contacts join all 8 true squares; with the false squares the two phases make 2
    assert len(mo.connected_components(board, 8)) == 1
    assert len(mo.connected_components(board, 8)) + len(mo.connected_components(~board, 8)) == 2


def test_components_in_raster_order():
    m = np.zeros((6, 6), bool)
    m[4, 0] = True
    m[0, 5] = True
    m[2, 2:4] = True
    comps = mo.connected_components(m)
    assert [c.centroid for c in comps] == [(5.0, 0.0), (2.5, 2.0), (0.0, 4.0)]


@given(masks, st.sampled_from([4, 8]))
def test_components_partition_mask(m, conn):
    comps = mo.connected_components(m, conn)
    assert sum(c.pixel_count for c in comps) == m.sum()
    assert sorted(c.pixel_count for c in comps) == sorted(oracles.count_components(m.tolist(), conn))
    for c in comps:
        x0, y0, x1, y1 = c.bounding_box
        assert x0 <= c.centroid[0] <= x1 and y0 <= c.centroid[1] <= y1


def test_bad_connectivity():
    with pytest.raises(ValueError):
        mo.label(np.ones((2, 2)), 6)
