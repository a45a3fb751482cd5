import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nucleograde import scoring as sc
from nucleograde.config import ScoringConfig
from nucleograde.errors import (EmptyAnnotation, EmptyCounts, EmptyPopulation, LengthMismatch,
                                OutOfRange, UndefinedMetric, WrongQuarterCount)
from nucleograde.features import NucleusFeatures
from nucleograde.synthetic import stained_disks

BASE = sc.NormalBaseline(normal_area=100.0, normal_mean_intensity=120.0, normal_circularity=13.0)
GRADED_CM = np.array([[4, 0, 0], [0, 18, 2], [0, 1, 9]])


def nf(area=100, mean=120.0, circ=13.0, nucleoli=0):
    return NucleusFeatures(area, mean, circ, nucleoli)


def graded_lists():
    truth, pred = [], []
    for t in (1, 2, 3):
        for p in (1, 2, 3):
            truth += [t] * GRADED_CM[t - 1, p - 1]
            pred += [p] * GRADED_CM[t - 1, p - 1]
    return pred, truth


# ------------------------------------------------------------------ bands

def test_score_fraction_bands():
    assert [sc.score_fraction(f) for f in (0.25, 0.45, 0.75)] == [1, 2, 3]
    assert sc.score_fraction(0.30) == 1 and sc.score_fraction(0.60) == 2
    assert sc.score_fraction(0.0) == 1 and sc.score_fraction(1.0) == 3
    for bad in (-0.1, 1.01):
        with pytest.raises(OutOfRange):
            sc.score_fraction(bad)


@given(st.floats(0, 1), st.floats(0, 1))
def test_score_fraction_monotone(a, b):
    lo, hi = sorted((a, b))
    assert sc.score_fraction(lo) <= sc.score_fraction(hi)


# ------------------------------------------------------------------ criteria

def test_chromatin():
    assert sc.score_chromatin([nf() for _ in range(5)], BASE) == 1
    assert sc.score_chromatin([nf(mean=70.0) for _ in range(5)], BASE, margin=10) == 3
    nuclei = [nf(mean=70.0)] * 9 + [nf()] * 11
    assert sc.score_chromatin(nuclei, BASE) == 2
    # within the margin is not denser
    assert sc.score_chromatin([nf(mean=115.0)] * 4, BASE, margin=10) == 1


def test_contour():
    assert sc.score_contour([nf(circ=12.6)] * 6, sc.NormalBaseline(100, 120, 12.6)) == 1
    assert sc.score_contour([nf(circ=30.0)] * 6, BASE) == 3
    assert sc.score_contour([nf(circ=30.0)] * 13 + [nf()] * 7, BASE) == 3


def test_nucleoli():
    assert sc.score_nucleoli([nf()] * 5, BASE) == 1
    assert sc.score_nucleoli([nf(nucleoli=2)] * 5, BASE) == 3
    assert sc.score_nucleoli([nf(nucleoli=1)] * 7 + [nf()] * 13, BASE) == 2


def test_anisonucleosis():
    assert sc.score_anisonucleosis([nf()] * 10, BASE) == 1
    assert sc.score_anisonucleosis([nf()] * 9 + [nf(area=350)], BASE) == 3
    assert sc.score_anisonucleosis([nf(area=250)] + [nf(area=220)] * 9, BASE) == 2
    # irregular contours block score 1 even at normal size
    assert sc.score_anisonucleosis([nf(circ=30.0)] * 5, BASE) == 2
    # large spread alone gives 3
    assert sc.score_anisonucleosis([nf(area=20), nf(area=290), nf(area=40)], BASE, cv3=0.5) == 3


def test_empty_population_errors():
    for f in (sc.score_chromatin, sc.score_contour, sc.score_nucleoli, sc.score_anisonucleosis,
              sc.score_criteria):
        with pytest.raises(EmptyPopulation):
            f([], BASE)


def test_score_criteria_uses_config():
    nuclei = [nf(mean=105.0)] * 5
    assert sc.score_criteria(nuclei, BASE, ScoringConfig(chromatin_margin=10)).chromatin == 3
    assert sc.score_criteria(nuclei, BASE, ScoringConfig(chromatin_margin=20)).chromatin == 1


def test_criterion_scores_validated():
    with pytest.raises(OutOfRange):
        sc.CriterionScores(1, 2, 4, 1)


def test_baseline_validated():
    with pytest.raises(ValueError):
        sc.NormalBaseline(0, 120, 13)
    with pytest.raises(ValueError):
        sc.NormalBaseline(100, 120, 13, -1)


# ------------------------------------------------------------------ quarter and slide

def test_quarter_score_examples():
    assert sc.quarter_score(sc.CriterionScores(1, 1, 1, 1)) == 1
    assert sc.quarter_score(sc.CriterionScores(1, 2, 1, 1)) == 2
    assert sc.quarter_score(sc.CriterionScores(2, 3, 1, 2)) == 3


def test_slide_score_examples():
    assert sc.slide_score([1, 1, 1, 1]) == 1
    assert sc.slide_score([1, 2, 1, 1]) == 2
    assert sc.slide_score([2, 3, 1, 2]) == 3


def test_slide_score_is_max_on_all_combinations():
    combos = list(itertools.product((1, 2, 3), repeat=4))
    assert len(combos) == 81
    for q in combos:
        assert sc.slide_score(q) == max(q)


def test_slide_score_errors():
    with pytest.raises(WrongQuarterCount):
        sc.slide_score([1, 2, 3])
    with pytest.raises(OutOfRange):
        sc.slide_score([1, 2, 3, 0])


# ------------------------------------------------------------------ metrics

def test_accuracy_examples():
    assert sc.accuracy(sc.EvalCounts(1, 0, 1, 0)) == 1.0
    assert sc.accuracy(sc.EvalCounts(0, 1, 0, 1)) == 0.0
    assert sc.accuracy(sc.EvalCounts(tp=31, fp=3, tn=0, fn=0)) == pytest.approx(31 / 34)
    with pytest.raises(EmptyCounts):
        sc.accuracy(sc.EvalCounts(0, 0, 0, 0))
    with pytest.raises(ValueError):
        sc.EvalCounts(-1, 0, 0, 0)


def test_precision_recall_f_examples():
    assert tuple(sc.precision_recall_f(sc.EvalCounts(10, 0, 0, 0))[:3]) == (1.0, 1.0, 1.0)
    r = sc.precision_recall_f(sc.EvalCounts(0, 5, 0, 5))
    assert (r.precision, r.recall, r.f_measure, r.f_undefined) == (0.0, 0.0, 0.0, True)
    r = sc.precision_recall_f(sc.EvalCounts(tp=8, fp=2, tn=0, fn=4))
    assert r.precision == pytest.approx(0.8, abs=1e-4)
    assert r.recall == pytest.approx(0.6667, abs=1e-4)
    assert r.f_measure == pytest.approx(0.7273, abs=1e-4)
    assert not r.f_undefined


def test_recall_ignores_true_negatives():
    a = sc.precision_recall_f(sc.EvalCounts(8, 2, 0, 4))
    b = sc.precision_recall_f(sc.EvalCounts(8, 2, 100, 4))
    assert a == b


def test_undefined_metrics():
    with pytest.raises(UndefinedMetric):
        sc.precision_recall_f(sc.EvalCounts(0, 0, 3, 2))
    with pytest.raises(UndefinedMetric):
        sc.precision_recall_f(sc.EvalCounts(0, 2, 3, 0))


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_metrics_in_unit_interval(tp, fp, tn, fn):
    c = sc.EvalCounts(tp, fp, tn, fn)
    if tp + fp + tn + fn:
        assert 0 <= sc.accuracy(c) <= 1
    if tp + fp and tp + fn:
        r = sc.precision_recall_f(c)
        assert 0 <= r.precision <= 1 and 0 <= r.recall <= 1 and 0 <= r.f_measure <= 1


def test_confusion_matrix_examples():
    assert np.array_equal(sc.confusion_matrix([1, 2, 3, 3], [1, 2, 3, 3]), np.diag([1, 1, 2]))
    assert not sc.confusion_matrix([], []).any()
    pred, truth = graded_lists()
    assert len(pred) == 34
    assert np.array_equal(sc.confusion_matrix(pred, truth), GRADED_CM)
    with pytest.raises(LengthMismatch):
        sc.confusion_matrix([1], [1, 2])
    with pytest.raises(OutOfRange):
        sc.confusion_matrix([0], [1])


def test_graded_matrix_accuracies():
    assert sc.matrix_accuracy(GRADED_CM) == pytest.approx(31 / 34)
    assert sc.per_class_accuracy(GRADED_CM).tolist() == [1.0, 0.9, 0.9]
    assert np.isnan(sc.per_class_accuracy(np.diag([0, 2, 1]))[0])
    with pytest.raises(EmptyCounts):
        sc.matrix_accuracy(np.zeros((3, 3)))


@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3)), max_size=60))
def test_confusion_matrix_properties(pairs):
    pred = [p for p, _ in pairs]
    truth = [t for _, t in pairs]
    cm = sc.confusion_matrix(pred, truth)
    assert cm.sum() == len(pairs)
    assert cm.sum(axis=1).tolist() == [truth.count(k) for k in (1, 2, 3)]
    if pairs:
        # one-vs-rest tp summed over classes is the diagonal, so both accuracy forms agree
        assert sum(sc.one_vs_rest_counts(cm, k).tp for k in (1, 2, 3)) == np.trace(cm)
        assert sc.matrix_accuracy(cm) == pytest.approx(np.trace(cm) / len(pairs))
        for k in (1, 2, 3):
            c = sc.one_vs_rest_counts(cm, k)
            assert c.tp + c.fp + c.tn + c.fn == len(pairs)


# ------------------------------------------------------------------ baseline

def test_baseline_medians():
    feats = [nf(area=100, mean=100), nf(area=120, mean=130), nf(area=400, mean=110)]
    b = sc.baseline_from_features(feats)
    assert b.normal_area == 120 and b.normal_mean_intensity == 110
    one = sc.baseline_from_features([nf(area=77, mean=90.0, circ=14.0)])
    assert (one.normal_area, one.normal_mean_intensity, one.normal_circularity) == (77, 90.0, 14.0)
    with pytest.raises(EmptyAnnotation):
        sc.baseline_from_features([])


def test_measure_baseline_from_image():
    img = stained_disks((100, 100), [(30, 30, 12), (70, 65, 12)])
    b = sc.measure_baseline([(30, 30)], img)
    assert abs(b.normal_area - np.pi * 144) <= 0.1 * np.pi * 144
    b2 = sc.measure_baseline([(30, 30), (70, 65)], img)
    assert abs(b2.normal_area - np.pi * 144) <= 0.1 * np.pi * 144
    with pytest.raises(EmptyAnnotation):
        sc.measure_baseline([], img)
    with pytest.raises(EmptyAnnotation):
        sc.measure_baseline([(5, 95)], img)
