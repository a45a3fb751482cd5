import numpy as np
import pytest

from nucleograde.errors import DegenerateLabels, DimensionMismatch, EmptyRegion, ModelFormatError
from nucleograde.features import (NUCLEOLUS, OTHER, LinearSvmModel, annotated_descriptor,
                                  detect_nucleoli, dumps_model, extract_features, find_candidates,
                                  hinge_objective, load_model, loads_model, save_model,
                                  svm_predict, svm_train)
from nucleograde.synthetic import ellipse_mask, render_rgb


def blobs(rng, n=20):
    """Two square clouds of half-width 1 centred at (2, 2) and (-2, -2): margin >= 1."""
    pos = rng.uniform(-1, 1, (n, 2)) + 2.0
    neg = rng.uniform(-1, 1, (n, 2)) - 2.0
    return np.vstack([pos, neg]), np.array([1] * n + [0] * n)


# ------------------------------------------------------------------ SVM

def test_symmetric_1d_pair():
    m = svm_train([[-1.0], [1.0]], [0, 1], c_reg=100.0)
    assert m.weights[0] == pytest.approx(1.0, abs=0.1)
    assert m.bias == pytest.approx(0.0, abs=0.1)
    assert abs(-m.bias / m.weights[0]) <= 0.1


def test_separable_blobs_fully_separated(rng):
    X, y = blobs(rng)
    m = svm_train(X, y, 10.0)
    assert np.array_equal(svm_predict(m, X), y)
    assert svm_predict(m, np.array([2.0, 2.0])) == 1
    assert svm_predict(m, np.array([-2.0, -2.0])) == 0


def test_duplicated_samples_same_signs(rng):
    X, y = blobs(rng)
    a = svm_train(X, y, 10.0)
    b = svm_train(np.vstack([X, X]), np.concatenate([y, y]), 10.0)
    grid = np.stack(np.meshgrid(np.linspace(-4, 4, 9), np.linspace(-4, 4, 9)), -1).reshape(-1, 2)
    pts = np.vstack([X, grid[np.abs(grid.sum(1)) >= 2]])
    assert np.array_equal(np.sign(a.decision(pts)), np.sign(b.decision(pts)))


def test_objective_checkpoints_non_increasing(rng):
    X, y = blobs(rng)
    y[:3] = 0  # make it non-separable so the hinge term stays active
    cps = []
    m = svm_train(X, y, 5.0, checkpoints=cps)
    assert len(cps) == 100
    assert all(b <= a for a, b in zip(cps, cps[1:]))
    ys = np.where(y == 1, 1.0, -1.0)
    assert hinge_objective(m.weights, m.bias, X, ys, 5.0) == pytest.approx(cps[-1])
    # far below the objective at w = 0, b = 0
    assert cps[-1] < hinge_objective(np.zeros(2), 0.0, X, ys, 5.0)


def test_training_is_reproducible(rng):
    X, y = blobs(rng)
    a, b = svm_train(X, y, 3.0), svm_train(X, y, 3.0)
    assert dumps_model(a) == dumps_model(b)


def test_train_errors():
    with pytest.raises(DegenerateLabels):
        svm_train([[0.0], [1.0]], [1, 1])
    with pytest.raises(DegenerateLabels):
        svm_train([[0.0], [1.0], [2.0]], [1, 2, 3])
    with pytest.raises(DimensionMismatch):
        svm_train([[0.0], [1.0]], [1])
    with pytest.raises(ValueError):
        svm_train([[0.0], [1.0]], [0, 1], c_reg=0)


def test_positive_label_choice():
    m = svm_train([[-1.0], [1.0]], [NUCLEOLUS, OTHER], 10.0, positive_label=NUCLEOLUS)
    assert (m.positive_label, m.negative_label) == (NUCLEOLUS, OTHER)
    assert svm_predict(m, np.array([-1.0])) == NUCLEOLUS


def test_predict_conventions():
    zero = LinearSvmModel(np.zeros(3), 0.0, 7, 9)
    assert svm_predict(zero, np.array([1.0, -2.0, 3.0])) == 7
    m = LinearSvmModel(np.array([1.0, -2.0]), 0.5, 1, 0)
    neg = LinearSvmModel(-m.weights, -m.bias, 1, 0)
    for x in (np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([3.0, 1.0])):
        assert svm_predict(m, x) != svm_predict(neg, x)
    with pytest.raises(DimensionMismatch):
        svm_predict(m, np.ones(3))


def test_model_round_trip_is_bit_exact(tmp_path, rng):
    X, y = blobs(rng)
    m = svm_train(X, y, 10.0)
    save_model(m, tmp_path / "m.txt")
    back = load_model(tmp_path / "m.txt")
    assert np.array_equal(back.weights, m.weights)
    assert back.bias == m.bias
    assert (back.positive_label, back.negative_label) == (m.positive_label, m.negative_label)
    text = (tmp_path / "m.txt").read_text()
    assert text.splitlines()[0] == "NGSVM1" and len(text.splitlines()) == 5
    assert dumps_model(back) == text


@pytest.mark.parametrize("text", [
    "", "NOPE\n1\n1.0\n0.0\n1 0\n", "NGSVM1\n2\n1.0\n0.0\n1 0\n",
    "NGSVM1\n1\nabc\n0.0\n1 0\n", "NGSVM1\n1\n1.0\n0.0\n1\n", "NGSVM1\n1\nnan\n0.0\n1 0\n",
])
def test_malformed_models_rejected(text):
    with pytest.raises(ModelFormatError):
        loads_model(text)


def test_missing_model_file(tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "absent.txt")


# ------------------------------------------------------------------ nucleoli

def nucleus(spots=(), single=(), shape=(60, 60), centre=(30, 30), r=15):
    """Nucleus of hematoxylin 0.4 with radius-2 spots of hematoxylin 2.0."""
    h = np.zeros(shape)
    body = ellipse_mask(shape, centre, (r, r))
    h[body] = 0.4
    for x, y in spots:
        h[ellipse_mask(shape, (x, y), (2, 2))] = 2.0
    for x, y in single:
        h[y, x] = 2.0
    return render_rgb(h, np.where(body, 0.05, 0.25)), body


@pytest.fixture(scope="module")
def spot_model():
    X, y = [], []
    for spots in ([(25, 27), (36, 34)], [(30, 22), (28, 38)], [(22, 30), (38, 30)]):
        img, _ = nucleus(spots)
        for x, yy in spots:
            X.append(annotated_descriptor(img, x, yy))
            y.append(NUCLEOLUS)
        body = [(x, yy) for x in range(18, 43, 3) for yy in range(18, 43, 3)
                if (x - 30) ** 2 + (yy - 30) ** 2 <= 100
                and min((x - a) ** 2 + (yy - b) ** 2 for a, b in spots) >= 49]
        for x, yy in body[:4]:
            X.append(annotated_descriptor(img, x, yy))
            y.append(OTHER)
    m = svm_train(np.array(X), np.array(y), 10.0, positive_label=NUCLEOLUS)
    assert np.array_equal(svm_predict(m, np.array(X)), y)
    return m


def test_uniform_nucleus_has_no_candidates(spot_model):
    img, body = nucleus()
    assert find_candidates(img, body).masks == []
    assert detect_nucleoli(img, body, spot_model) == 0


def test_two_spots_counted(spot_model):
    img, body = nucleus([(25, 27), (36, 34)])
    assert len(find_candidates(img, body).masks) == 2
    assert detect_nucleoli(img, body, spot_model) == 2
    assert extract_features(img, np.zeros(body.shape), body, None, spot_model).nucleoli_count == 2


def test_unseen_layout_counted(spot_model):
    img, body = nucleus([(33, 24), (24, 35), (36, 37)])
    assert detect_nucleoli(img, body, spot_model) == 3


def test_single_pixel_spot_removed_by_opening():
    img, body = nucleus(single=[(30, 30)])
    assert find_candidates(img, body).masks == []


def test_rejecting_model_counts_nothing():
    img, body = nucleus([(25, 27), (36, 34)])
    dim = 2 * 256 + 2
    never = LinearSvmModel(np.zeros(dim), -1.0, NUCLEOLUS, OTHER)
    assert detect_nucleoli(img, body, never) == 0


def test_nucleoli_errors():
    img, body = nucleus()
    with pytest.raises(EmptyRegion):
        find_candidates(img, np.zeros_like(body))
    with pytest.raises(ValueError):
        annotated_descriptor(img, 100, 5)
