import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skit.metrics import (
    COCO_IOU_THRESHOLDS,
    BoundingBox,
    SizeBucket,
    average_precision,
    average_precision_range,
    average_recall,
    iou,
    lrp_error,
    match_detections,
    olrp,
    precision_recall,
)
from skit.metrics.matching import MatchResult

import oracles


def B(x0, y0, x1, y1, score=None):
    return BoundingBox(x0, y0, x1, y1, score=score)


def random_fixture(rng: random.Random, max_boxes=10, n_images=None):
    """Up to ``max_boxes`` boxes in total over 1-3 images, distinct scores."""
    n_images = n_images or rng.randint(1, 3)
    budget = rng.randint(2, max_boxes)
    images = []
    scores = rng.sample(range(1, 1000), budget)
    for i in range(n_images):
        gts, dts = [], []
        images.append((gts, dts))
    for k in range(budget):
        gts, dts = images[rng.randrange(n_images)]
        if rng.random() < 0.45 or not gts:
            x, y = rng.uniform(0, 80), rng.uniform(0, 80)
            w, h = rng.uniform(5, 30), rng.uniform(5, 30)
            gts.append((x, y, x + w, y + h))
        else:
            g = gts[rng.randrange(len(gts))]
            if rng.random() < 0.2:
                x, y = rng.uniform(0, 80), rng.uniform(0, 80)
                box = (x, y, x + rng.uniform(5, 30), y + rng.uniform(5, 30))
            else:
                j = lambda: rng.uniform(-4, 4)
                box = (g[0] + j(), g[1] + j(), g[2] + j(), g[3] + j())
                if box[2] <= box[0] or box[3] <= box[1]:
                    box = g
            dts.append((box, scores[k] / 1000))
    if sum(len(g) for g, _ in images) == 0:
        images[0][0].append((0.0, 0.0, 10.0, 10.0))
    return images


def to_boxes(images):
    gts = {i: [B(*g) for g in gg] for i, (gg, _) in enumerate(images)}
    dts = {i: [B(*d, score=s) for d, s in dd] for i, (_, dd) in enumerate(images)}
    return gts, dts


class TestIoU:
    def test_identity(self):
        a = B(3, 4, 10, 20)
        assert iou(a, a) == 1.0

    def test_disjoint(self):
        assert iou(B(0, 0, 1, 1), B(2, 2, 3, 3)) == 0.0

    def test_half_overlap(self):
        # intersection 2, union 6
        assert iou(B(0, 0, 2, 2), B(1, 0, 3, 2)) == pytest.approx(2 / 6, abs=1e-15)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            B(0, 0, 0, 5)
        with pytest.raises(ValueError):
            B(0, 0, 1, 1, score=1.5)

    @given(
        st.tuples(*[st.floats(0, 100)] * 2, *[st.floats(0.5, 50)] * 2),
        st.tuples(*[st.floats(0, 100)] * 2, *[st.floats(0.5, 50)] * 2),
    )
    def test_symmetric_and_bounded(self, a, b):
        ba = B(a[0], a[1], a[0] + a[2], a[1] + a[3])
        bb = B(b[0], b[1], b[0] + b[2], b[1] + b[3])
        v = iou(ba, bb)
        assert v == iou(bb, ba)
        assert 0.0 <= v <= 1.0
        assert oracles.box_iou(ba.as_tuple(), bb.as_tuple()) == pytest.approx(v, abs=1e-12)


class TestSizeBucket:
    @pytest.mark.parametrize(
        "area,bucket",
        [(32**2 - 1, SizeBucket.SMALL), (32**2, SizeBucket.MEDIUM), (96**2, SizeBucket.MEDIUM), (96**2 + 1, SizeBucket.LARGE)],
    )
    def test_boundaries(self, area, bucket):
        assert SizeBucket.of_area(area) is bucket


class TestMatching:
    def test_single_clear_match(self):
        gt = B(0, 0, 10, 10)
        dt = B(0, 0, 10, 6, score=0.9)  # iou 0.6
        m = match_detections([gt], [dt], 0.5)
        assert (m.n_tp, m.n_fp, m.n_fn) == (1, 0, 0)
        assert m.pairs[0][2] == pytest.approx(0.6)

    def test_duplicate_is_false_positive(self):
        gt = B(0, 0, 10, 10)
        m = match_detections([gt], [B(0, 0, 10, 9, score=0.8), B(0, 0, 10, 8, score=0.9)], 0.5)
        assert (m.n_tp, m.n_fp, m.n_fn) == (1, 1, 0)
        # higher score wins the gt
        assert m.pairs[0][1] == 1

    def test_crossed_ious_match_brute_force(self):
        gts = [(0, 0, 10, 10), (6, 0, 16, 10)]
        dts = [((3, 0, 13, 10), 0.9), ((5, 0, 15, 10), 0.8)]
        m = match_detections([B(*g) for g in gts], [B(*d, score=s) for d, s in dts], 0.3)
        expected = oracles.brute_force_match(gts, dts, 0.3)
        assert [(g, d) for g, d, _ in m.pairs] == [(g, d) for g, d, _ in expected]

    @pytest.mark.parametrize("seed", range(40))
    def test_random_small_instances_match_brute_force(self, seed):
        rng = random.Random(seed)
        images = random_fixture(rng, max_boxes=8, n_images=1)
        gts, dts = images[0]
        gts, dts = gts[:4], dts[:4]
        tau = rng.choice([0.1, 0.3, 0.5, 0.7])
        m = match_detections([B(*g) for g in gts], [B(*d, score=s) for d, s in dts], tau)
        expected = oracles.brute_force_match(gts, dts, tau)
        assert [(g, d) for g, d, _ in m.pairs] == [(g, d) for g, d, _ in expected]
        for _, _, v in m.pairs:
            assert v >= tau

    def test_equal_score_ties_broken_by_index(self):
        gt = B(0, 0, 10, 10)
        dts = [B(0, 0, 10, 7, score=0.5), B(0, 0, 10, 9, score=0.5)]
        m = match_detections([gt], dts, 0.5)
        assert m.pairs[0][1] == 0

    @given(st.permutations(range(4)))
    def test_equal_score_permutation_stability(self, perm):
        # same boxes listed in any order: the winning box is the one listed first
        boxes = [B(0, 0, 10, 6 + k, score=0.7) for k in range(4)]
        shuffled = [boxes[i] for i in perm]
        m = match_detections([B(0, 0, 10, 10)], shuffled, 0.5)
        assert m.pairs[0][1] == 0
        assert (m.n_tp, m.n_fp) == (1, 3)


class TestPrecisionRecall:
    @pytest.mark.parametrize(
        "tp,fp,fn,expected",
        [(5, 0, 0, (1.0, 1.0)), (3, 1, 2, (0.75, 0.6)), (0, 0, 4, (0.0, 0.0))],
    )
    def test_values(self, tp, fp, fn, expected):
        assert precision_recall(MatchResult((), tp, fp, fn)) == pytest.approx(expected)


class TestAveragePrecision:
    def test_perfect(self):
        gts = [B(0, 0, 10, 10), B(20, 20, 40, 40)]
        dts = [B(0, 0, 10, 10, score=0.9), B(20, 20, 40, 40, score=0.8)]
        assert average_precision(gts, dts, 0.5) == 1.0
        assert average_precision_range(gts, dts) == 1.0

    def test_no_detections(self):
        assert average_precision([B(0, 0, 10, 10)], [], 0.5) == 0.0

    def test_empty_ground_truth_is_an_error(self):
        with pytest.raises(ValueError):
            average_precision([], [B(0, 0, 1, 1, score=0.5)], 0.5)

    def test_three_gt_four_dt_fixture(self):
        gts = [(0, 0, 10, 10), (20, 0, 30, 10), (40, 0, 50, 10)]
        dts = [
            ((0, 0, 10, 10), 0.9),
            ((60, 0, 70, 10), 0.8),  # FP
            ((21, 0, 31, 10), 0.7),
            ((40, 0, 44, 10), 0.6),  # iou 0.4: FP at 0.5
        ]
        expected = oracles.naive_ap([(gts, dts)], 0.5)
        got = average_precision([B(*g) for g in gts], [B(*d, score=s) for d, s in dts], 0.5)
        assert got == pytest.approx(expected, abs=1e-12)
        # hand value: precision envelope 1.0 up to recall 1/3, 2/3 up to 2/3
        assert got == pytest.approx((34 * 1.0 + 33 * (2 / 3)) / 101, abs=1e-12)

    def test_size_bucket_ignores_out_of_bucket_boxes(self):
        small = B(0, 0, 10, 10)
        large = B(100, 100, 300, 300)
        gts = [small, large]
        dts = [B(0, 0, 10, 10, score=0.9), B(100, 100, 300, 300, score=0.8)]
        assert average_precision(gts, dts, 0.5, area=SizeBucket.SMALL) == 1.0
        assert average_precision(gts, dts, 0.5, area=SizeBucket.LARGE) == 1.0
        with pytest.raises(ValueError):
            average_precision(gts, dts, 0.5, area=SizeBucket.MEDIUM)
        # an unmatched large detection is ignored for the small bucket
        extra = dts + [B(400, 400, 600, 600, score=0.95)]
        assert average_precision(gts, extra, 0.5, area=SizeBucket.SMALL) == 1.0
        assert average_precision(gts, extra, 0.5, area=SizeBucket.LARGE) < 1.0

    @pytest.mark.parametrize("seed", range(30))
    def test_random_vs_threshold_sweep_oracle(self, seed):
        images = random_fixture(random.Random(seed))
        gts, dts = to_boxes(images)
        for tau in (0.5, 0.75):
            assert average_precision(gts, dts, tau) == pytest.approx(oracles.naive_ap(images, tau), abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_top_scoring_tp_never_lowers_ap_and_fp_never_raises(self, seed):
        rng = random.Random(seed)
        images = random_fixture(rng, n_images=1)
        gts, dts = to_boxes(images)
        base = average_precision(gts, dts, 0.5)
        # a fresh gt with an exact top-scoring detection
        g_new = B(200, 200, 220, 220)
        with_tp = average_precision(
            {0: gts[0] + [g_new]}, {0: dts[0] + [B(200, 200, 220, 220, score=1.0)]}, 0.5
        )
        without = average_precision({0: gts[0] + [g_new]}, dts, 0.5)
        assert with_tp >= without - 1e-12
        with_fp = average_precision(gts, {0: dts[0] + [B(500, 500, 520, 520, score=1.0)]}, 0.5)
        assert with_fp <= base + 1e-12


class TestAverageRecall:
    def test_perfect(self):
        gts = [B(0, 0, 10, 10)]
        assert average_recall(gts, [B(0, 0, 10, 10, score=0.5)]) == 1.0

    def test_all_below_every_threshold(self):
        gts = [B(0, 0, 10, 10), B(50, 50, 60, 60)]
        # overlap 4.5 x 10 / 10 x 10 -> iou 0.45
        dts = [B(0, 0, 4.5, 10, score=0.9), B(50, 50, 54.5, 60, score=0.8)]
        assert iou(gts[0], dts[0]) == pytest.approx(0.45)
        assert average_recall(gts, dts) == 0.0

    def test_max_det_truncates(self):
        gts = [B(0, 0, 10, 10), B(20, 0, 30, 10)]
        dts = [B(0, 0, 10, 10, score=0.9), B(20, 0, 30, 10, score=0.8)]
        assert average_recall(gts, dts, max_det=1) == 0.5
        assert average_recall(gts, dts, max_det=10) == 1.0

    def test_empty_ground_truth_is_an_error(self):
        with pytest.raises(ValueError):
            average_recall([], [])

    @pytest.mark.parametrize("seed", range(30))
    def test_random_vs_per_threshold_oracle(self, seed):
        images = random_fixture(random.Random(1000 + seed))
        gts, dts = to_boxes(images)
        for max_det in (1, 10, 100):
            expected = oracles.naive_ar(images, COCO_IOU_THRESHOLDS, max_det)
            assert average_recall(gts, dts, max_det=max_det) == pytest.approx(expected, abs=1e-9)


class TestLRP:
    def test_perfect_is_zero(self):
        gts = [B(0, 0, 10, 10)]
        r = lrp_error(gts, [B(0, 0, 10, 10, score=0.9)], 0.0, 0.5)
        assert r.lrp == 0.0
        assert (r.n_tp, r.n_fp, r.n_fn) == (1, 0, 0)

    def test_nothing_survives_threshold(self):
        gts = [B(0, 0, 10, 10), B(20, 0, 30, 10)]
        r = lrp_error(gts, [B(0, 0, 10, 10, score=0.2)], 0.5, 0.5)
        assert r.lrp == 1.0

    def test_hand_case(self):
        # 2 TP with iou 0.6 / 0.8, 1 FP, 1 FN: (1/4) * ((0.4 + 0.2) / 0.5 + 1 + 1) = 0.8
        gts = [B(0, 0, 10, 10), B(20, 0, 30, 10), B(40, 0, 50, 10)]
        dts = [
            B(0, 0, 10, 6, score=0.9),  # iou 0.6
            B(20, 0, 30, 8, score=0.8),  # iou 0.8
            B(100, 0, 110, 10, score=0.7),  # FP
        ]
        r = lrp_error(gts, dts, 0.0, 0.5)
        assert (r.n_tp, r.n_fp, r.n_fn) == (2, 1, 1)
        assert r.lrp == pytest.approx(0.8, abs=1e-15)
        assert r.lrp_iou == pytest.approx(0.3)
        assert r.lrp_fp == pytest.approx(1 / 3)
        assert r.lrp_fn == pytest.approx(1 / 3)

    def test_undefined_without_boxes(self):
        with pytest.raises(ValueError):
            lrp_error([], [], 0.0, 0.5)

    @pytest.mark.parametrize("seed", range(40))
    def test_components_recombine(self, seed):
        images = random_fixture(random.Random(2000 + seed))
        gts, dts = to_boxes(images)
        for s in (0.0, 0.3, 0.6):
            for tau in (0.5, 0.7):
                r = lrp_error(gts, dts, s, tau)
                assert r.recombined(tau) == pytest.approx(r.lrp, abs=1e-12)
                assert r.lrp == pytest.approx(oracles.naive_lrp(images, s, tau), abs=1e-9)


class TestOLRP:
    def test_single_perfect_detection(self):
        gts = [B(0, 0, 10, 10)]
        res = olrp(gts, [B(0, 0, 10, 10, score=0.8)])
        assert res.olrp == 0.0
        assert res.s_opt < 0.8

    def test_low_score_false_positives_cut_off(self):
        gts = [B(0, 0, 10, 10), B(20, 0, 30, 10)]
        dts = [
            B(0, 0, 10, 10, score=0.9),
            B(20, 0, 30, 10, score=0.8),
            B(50, 0, 60, 10, score=0.2),
            B(70, 0, 80, 10, score=0.1),
        ]
        res = olrp(gts, dts)
        assert res.olrp == 0.0
        assert 0.2 <= res.s_opt < 0.8
        assert not res.unreliable
        images = [([g.as_tuple() for g in gts], [(d.as_tuple(), d.score) for d in dts])]
        assert res.olrp == pytest.approx(oracles.naive_olrp(images, 0.5))

    def test_optimum_at_cutoff_is_flagged(self):
        # every extra detection down to the cutoff is a TP: LRP keeps improving below 0.3
        gts = [B(20 * k, 0, 20 * k + 10, 10) for k in range(4)]
        dts = [B(20 * k, 0, 20 * k + 10, 10, score=0.3 + 0.1 * k) for k in range(4)]
        res = olrp(gts, dts, cutoff=0.3)
        assert res.unreliable
        assert res.s_opt == 0.3
        assert res.olrp == 0.0

    @pytest.mark.parametrize("seed", range(30))
    def test_minimisation_property(self, seed):
        images = random_fixture(random.Random(3000 + seed))
        gts, dts = to_boxes(images)
        res = olrp(gts, dts)
        assert res.olrp == pytest.approx(oracles.naive_olrp(images, 0.5), abs=1e-9)
        for s in np.linspace(0, 1, 23):
            assert res.olrp <= lrp_error(gts, dts, float(s), 0.5).lrp + 1e-12
