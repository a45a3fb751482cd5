import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from nucleograde.errors import InvalidImage, SingularStainMatrix
from nucleograde.stains import (StainMatrix, compose_rgb, rgb_to_optical_density,
                                separate_hematoxylin, stain_concentrations)


def _px(r, g, b):
    return np.array([[[r, g, b]]], dtype=np.uint8)


def test_white_has_zero_absorbance():
    assert np.allclose(rgb_to_optical_density(_px(255, 255, 255)), 0.0)


def test_black_optical_density():
    od = rgb_to_optical_density(_px(0, 0, 0))[0, 0]
    assert np.allclose(od, math.log10(256))
    assert od[0] == pytest.approx(2.408, abs=1e-3)


def test_single_channel_optical_density():
    od = rgb_to_optical_density(_px(25, 255, 255))[0, 0]
    assert od[0] == pytest.approx(-math.log10(26 / 256), abs=1e-12)
    assert od[0] == pytest.approx(0.993, abs=1e-3)
    assert od[1] == od[2] == 0.0


def test_default_matrix_is_unit_and_invertible():
    s = StainMatrix.default()
    assert np.allclose(np.linalg.norm(s.matrix, axis=1), 1.0, atol=1e-12)
    assert abs(np.linalg.det(s.matrix)) > 1e-3


def test_dependent_vectors_rejected():
    with pytest.raises(SingularStainMatrix):
        StainMatrix.from_vectors((1, 0, 0), (2, 0, 0), (0, 1, 0)).inverse()


def test_non_unit_vector_rejected():
    with pytest.raises(SingularStainMatrix):
        StainMatrix((1.0, 1.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


def test_white_image_maps_to_255():
    img = np.full((4, 5, 3), 255, dtype=np.uint8)
    h = separate_hematoxylin(img)
    assert h.shape == (4, 5)
    assert np.all(h == 255.0)


def test_pure_hematoxylin_od_gives_unit_concentration():
    s = StainMatrix.default()
    rgb = compose_rgb(np.array([[[1.0, 0.0, 0.0]]]), s)  # float RGB, not rounded
    c = stain_concentrations(rgb, s)[0, 0]
    assert c == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)


def test_concentrations_match_gaussian_elimination(rng):
    s = StainMatrix.default()
    img = rng.integers(0, 256, (6, 6, 3)).astype(np.uint8)
    conc = stain_concentrations(img, s)
    od = rgb_to_optical_density(img)
    m = s.matrix.tolist()
    for i in range(6):
        for j in range(6):
            ref = oracles.solve3(m, od[i, j].tolist())
            assert conc[i, j] == pytest.approx(ref, abs=1e-9)


def test_round_trip_reconstructs_od(rng):
    s = StainMatrix.default()
    img = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
    od = rgb_to_optical_density(img)
    assert np.allclose(stain_concentrations(img, s) @ s.matrix, od, atol=1e-9)


def test_invalid_images_rejected():
    with pytest.raises(InvalidImage):
        separate_hematoxylin(np.zeros((0, 4, 3)))
    with pytest.raises(InvalidImage):
        separate_hematoxylin(np.zeros((4, 4)))
    with pytest.raises(InvalidImage):
        separate_hematoxylin(np.full((2, 2, 3), 300.0))


def test_polarity_flag():
    img = compose_rgb(np.array([[[0.75, 0.0, 0.0]]]))
    assert separate_hematoxylin(img)[0, 0] == pytest.approx(127.5, abs=1e-9)
    assert separate_hematoxylin(img, dark_nuclei=False)[0, 0] == pytest.approx(127.5, abs=1e-9)
    img = compose_rgb(np.array([[[0.3, 0.0, 0.0]]]))
    assert separate_hematoxylin(img)[0, 0] == pytest.approx(255 * 0.8, abs=1e-9)
    assert separate_hematoxylin(img, dark_nuclei=False)[0, 0] == pytest.approx(255 * 0.2, abs=1e-9)


@given(st.floats(0.0, 0.8), st.floats(0.0, 0.8), st.floats(0.0, 0.5))
def test_more_hematoxylin_never_lowers_concentration(h, e, extra):
    # ranges keep the rendered RGB inside [0, 255], so no clipping occurs
    s = StainMatrix.default()
    c0 = stain_concentrations(compose_rgb(np.array([[[h, e, 0.0]]]), s), s)[0, 0, 0]
    c1 = stain_concentrations(compose_rgb(np.array([[[h + extra, e, 0.0]]]), s), s)[0, 0, 0]
    assert c1 >= c0 - 1e-9
