import math

import numpy as np
import pytest

from crashsynth.metrics import (
    MissingOdometryError,
    UndefinedMetricsError,
    absolutize_ground_truth,
    evaluate,
)


def random_scene(rng, n_frames=12, n_objects=4):
    gt = []
    for obj in range(n_objects):
        start = int(rng.integers(0, n_frames // 2))
        for f in range(start, n_frames):
            gt.append((f, f"obj{obj}", float(obj * 30 + f), float(obj * 5)))
    return gt


class TestAbsolutize:
    def test_identity_odometry(self):
        rel = [(0, "a", 5.0, 1.0), (1, "a", 6.0, 1.0)]
        odo = {0: (0.0, 0.0, 0.0), 1: (0.0, 0.0, 0.0)}
        assert absolutize_ground_truth(rel, odo) == rel

    def test_translation(self):
        rel = [(0, "a", 5.0, 0.0)]
        out = absolutize_ground_truth(rel, {0: (10.0, 0.0, 0.0)})
        assert out[0][2:] == (15.0, 0.0)

    def test_rotation(self):
        rel = [(0, "a", 5.0, 0.0)]
        out = absolutize_ground_truth(rel, {0: (2.0, 3.0, math.pi / 2)})
        assert out[0][2] == pytest.approx(2.0)
        assert out[0][3] == pytest.approx(8.0)

    def test_missing_odometry_lists_frames(self):
        rel = [(0, "a", 5.0, 0.0), (3, "a", 5.0, 0.0)]
        with pytest.raises(MissingOdometryError) as err:
            absolutize_ground_truth(rel, {0: (0.0, 0.0, 0.0)})
        assert "3" in str(err.value)


class TestEvaluate:
    def test_perfect_tracker(self):
        gt = [(f, "a", float(f), 0.0) for f in range(10)]
        report = evaluate(gt, gt, match_threshold=3.0)
        assert report.MOTA == 100.0
        assert report.MOTP == 100.0
        assert report.MODA == 100.0
        assert report.FAR == 0.0
        assert report.FP == report.FN == report.IDSW == 0
        assert report.recall == report.precision == 100.0

    def test_hand_counted_seventy_percent(self):
        # 10 gt object-frames, 8 matched, 2 missed, 1 false positive, 0 switches
        gt = [(f, "g", float(f), 0.0) for f in range(10)]
        est = [(f, "e", float(f), 0.5) for f in range(8)]
        est.append((0, "phantom", 500.0, 500.0))
        report = evaluate(gt, est, match_threshold=3.0)
        assert report.TP == 8 and report.FN == 2 and report.FP == 1 and report.IDSW == 0
        assert report.MOTA == pytest.approx(70.0)
        assert report.MODA == pytest.approx(70.0)
        assert report.objects == 10 and report.trajectories == 1

    def test_mostly_tracked_at_ninety_percent(self):
        gt = [(f, "g", float(f), 0.0) for f in range(10)]
        est = [(f, "e", float(f), 0.0) for f in range(1, 10)]  # 9 of 10 frames
        report = evaluate(gt, est, match_threshold=3.0)
        assert report.MT == 100.0 and report.PT == 0.0 and report.ML == 0.0

    def test_mt_pt_ml_partition(self):
        gt = []
        est = []
        for f in range(10):
            gt.append((f, "full", float(f), 0.0))
            gt.append((f, "half", float(f), 10.0))
            gt.append((f, "lost", float(f), 20.0))
            est.append((f, "e1", float(f), 0.0))
            if f < 5:
                est.append((f, "e2", float(f), 10.0))
            if f < 2:
                est.append((f, "e3", float(f), 20.0))
        report = evaluate(gt, est, match_threshold=3.0)
        assert report.MT == pytest.approx(100.0 / 3)
        assert report.PT == pytest.approx(100.0 / 3)
        assert report.ML == pytest.approx(100.0 / 3)
        assert report.MT + report.PT + report.ML == pytest.approx(100.0, abs=0.01)

    def test_identity_switch_counted(self):
        gt = [(f, "g", float(f), 0.0) for f in range(6)]
        est = [(f, "e1" if f < 3 else "e2", float(f), 0.0) for f in range(6)]
        report = evaluate(gt, est, match_threshold=3.0)
        assert report.IDSW == 1
        assert report.MOTA == pytest.approx((1 - 1 / 6) * 100.0)
        assert report.MODA == pytest.approx(100.0)  # detection metrics ignore identity

    def test_empty_gt_undefined(self):
        with pytest.raises(UndefinedMetricsError):
            evaluate([], [(0, "e", 0.0, 0.0)], 3.0)

    def test_random_scenes_self_evaluation(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            gt = random_scene(rng)
            report = evaluate(gt, gt, 3.0)
            assert report.MOTA == 100.0 and report.MODA == 100.0
            assert report.recall == 100.0 and report.precision == 100.0
            assert report.FP == report.FN == report.IDSW == 0

    def test_rigid_transform_invariance(self):
        rng = np.random.default_rng(2)
        gt = random_scene(rng)
        est = [(f, o, x + rng.normal(0, 0.5), y + rng.normal(0, 0.5))
               for f, o, x, y in gt]
        base = evaluate(gt, est, 3.0)
        c, s = math.cos(0.9), math.sin(0.9)

        def rigid(rows):
            return [(f, o, c * x - s * y + 40.0, s * x + c * y - 7.0)
                    for f, o, x, y in rows]

        moved = evaluate(rigid(gt), rigid(est), 3.0)
        assert moved.to_dict() == pytest.approx(base.to_dict())

    def test_count_totals(self):
        rng = np.random.default_rng(3)
        gt = random_scene(rng)
        est = [(f, o, x + rng.normal(0, 2.0), y) for f, o, x, y in gt if rng.random() < 0.8]
        est += [(int(rng.integers(0, 12)), f"fp{k}", 500.0 + k, 0.0) for k in range(5)]
        report = evaluate(gt, est, 3.0)
        assert report.TP + report.FN == len(gt)
        assert report.TP + report.FP == len(est)

    def test_report_text_layout(self):
        gt = [(f, "g", float(f), 0.0) for f in range(10)]
        report = evaluate(gt, gt, 3.0)
        text = report.to_text()
        assert "MOTA | MOTP | MODA | MODP | recall" in text
        assert "precision | F1 | TP | FP | FN | FAR" in text
        assert "objects | trajectories | MT | PT | ML" in text
        assert "100.00 %" in text
