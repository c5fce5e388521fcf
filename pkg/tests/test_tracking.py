import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crashsynth.tracking import (
    Assignment,
    BBox2D,
    Detection,
    TrackSet,
    TrackState,
    associate_frame,
    iou,
    solve_assignment,
)


def brute_force_min_cost(cost):
    """Exhaustive oracle: lexicographically-first minimal injection of rows
    into columns."""
    cost = np.asarray(cost, dtype=float)
    n_rows, n_cols = cost.shape
    best_total, best_pairs = None, None
    if n_rows <= n_cols:
        for cols in itertools.permutations(range(n_cols), n_rows):
            total = 0.0
            for r, c in enumerate(cols):
                total += cost[r, c]
            if best_total is None or total < best_total:
                best_total, best_pairs = total, tuple(enumerate(cols))
    else:
        for rows in itertools.permutations(range(n_rows), n_cols):
            pairs = tuple(sorted((r, c) for c, r in enumerate(rows)))
            total = 0.0
            for r, c in pairs:  # row-order accumulation, like the solver
                total += cost[r, c]
            if best_total is None or total < best_total:
                best_total = total
                best_pairs = pairs
    return best_total, best_pairs


def box(u0, v0, u1, v1):
    return BBox2D(float(u0), float(v0), float(u1), float(v1))


class TestIou:
    def test_identical(self):
        b = box(0, 0, 10, 10)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(box(0, 0, 10, 10), box(20, 20, 30, 30)) == 0.0

    def test_hand_computed_third(self):
        # inter 5x10=50, union 100+100-50=150
        assert iou(box(0, 0, 10, 10), box(5, 0, 15, 10)) == pytest.approx(1 / 3)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0, 100), min_size=8, max_size=8))
    def test_symmetric_and_bounded(self, vals):
        try:
            a = box(min(vals[0], vals[2]), min(vals[1], vals[3]),
                    max(vals[0], vals[2]) + 1, max(vals[1], vals[3]) + 1)
            b = box(min(vals[4], vals[6]), min(vals[5], vals[7]),
                    max(vals[4], vals[6]) + 1, max(vals[5], vals[7]) + 1)
        except ValueError:
            return
        assert iou(a, b) == iou(b, a)
        assert 0.0 <= iou(a, b) <= 1.0

    def test_one_iff_identical(self):
        a = box(0, 0, 10, 10)
        almost = box(0, 0, 10, 10.001)
        assert iou(a, almost) < 1.0


class TestSolveAssignment:
    def test_two_by_two_antidiagonal(self):
        result = solve_assignment([[1.0, 2.0], [2.0, 4.0]])
        assert set(result.pairs) == {(0, 1), (1, 0)}
        assert result.total_cost == 4.0

    def test_diagonal_zero_identity(self):
        cost = np.full((4, 4), 7.0)
        np.fill_diagonal(cost, 0.0)
        result = solve_assignment(cost)
        assert result.pairs == tuple((i, i) for i in range(4))
        assert result.total_cost == 0.0

    def test_rectangular(self):
        result = solve_assignment([[9.0, 1.0, 9.0], [1.0, 9.0, 9.0]])
        assert set(result.pairs) == {(0, 1), (1, 0)}
        assert result.total_cost == 2.0

    def test_empty(self):
        assert solve_assignment(np.empty((0, 0))) == Assignment((), 0.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            solve_assignment([[1.0, np.inf], [0.0, 1.0]])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(150):
            n_rows = int(rng.integers(1, 6))
            n_cols = int(rng.integers(1, 6))
            cost = rng.uniform(-5, 10, (n_rows, n_cols))
            mine = solve_assignment(cost)
            best_total, _ = brute_force_min_cost(cost)
            assert mine.total_cost == best_total

    def test_tie_break_lexicographic(self):
        rng = np.random.default_rng(13)
        for _ in range(150):
            n = int(rng.integers(2, 5))
            cost = rng.integers(0, 3, (n, n)).astype(float)
            mine = solve_assignment(cost)
            best_total, best_pairs = brute_force_min_cost(cost)
            assert mine.total_cost == best_total
            assert mine.pairs == best_pairs

    def test_more_rows_than_columns(self):
        result = solve_assignment([[5.0], [1.0], [3.0]])
        assert result.pairs == ((1, 0),)
        assert result.total_cost == 1.0


class TestAssociateFrame:
    def test_no_detections(self):
        tracks = [box(0, 0, 10, 10)]
        matches, ut, ud = associate_frame(tracks, [], 0.3)
        assert matches == [] and ut == [0] and ud == []

    def test_single_confident_match(self):
        matches, ut, ud = associate_frame(
            [box(0, 0, 10, 10)], [box(0.5, 0, 10, 10)], 0.3
        )
        assert matches == [(0, 0)] and ut == [] and ud == []

    def test_gate_demotes_weak_pair(self):
        # optimal pairing has IOUs {~0.8, ~0.1}: only the strong pair survives
        tracks = [box(0, 0, 10, 10), box(100, 100, 110, 110)]
        dets = [box(1, 0, 10, 10), box(108.5, 100, 118.5, 110)]
        matches, ut, ud = associate_frame(tracks, dets, 0.3)
        assert matches == [(0, 0)]
        assert ut == [1] and ud == [1]


class TestLifecycle:
    def det(self, frame, u=0.0):
        return Detection(frame=frame, bbox=box(u, 0, u + 10, 10))

    def test_birth_after_consecutive_hits(self):
        ts = TrackSet(birth_hits=3, death_misses=5)
        ts.step(0, [self.det(0)])
        track = next(iter(ts.tracks.values()))
        assert track.state is TrackState.TENTATIVE
        ts.step(1, [self.det(1)])
        assert track.state is TrackState.TENTATIVE
        ts.step(2, [self.det(2)])
        assert track.state is TrackState.ACTIVE

    def test_death_after_misses(self):
        ts = TrackSet(birth_hits=1, death_misses=5)
        ts.step(0, [self.det(0)])
        track = next(iter(ts.tracks.values()))
        assert track.state is TrackState.ACTIVE
        for frame in range(1, 6):  # dead on the 5th consecutive miss
            ts.step(frame, [])
            if frame < 5:
                assert track.state is TrackState.LOST
        assert track.state is TrackState.DEAD

    def test_tentative_dies_on_first_miss(self):
        ts = TrackSet(birth_hits=3, death_misses=5)
        ts.step(0, [self.det(0)])
        ts.step(1, [])
        assert next(iter(ts.tracks.values())).state is TrackState.DEAD

    def test_dead_tracks_never_revive_and_ids_not_reused(self):
        ts = TrackSet(birth_hits=1, death_misses=1)
        ts.step(0, [self.det(0)])
        first_id = next(iter(ts.tracks))
        ts.step(1, [])
        assert ts.tracks[first_id].state is TrackState.DEAD
        ts.step(2, [self.det(2)])
        new_ids = set(ts.tracks) - {first_id}
        assert len(new_ids) == 1
        assert next(iter(new_ids)) > first_id
        assert ts.tracks[first_id].state is TrackState.DEAD

    def test_match_resets_misses_and_miss_resets_hits(self):
        ts = TrackSet(birth_hits=1, death_misses=3)
        ts.step(0, [self.det(0)])
        track = next(iter(ts.tracks.values()))
        ts.step(1, [])
        assert track.misses == 1 and track.hits == 0
        ts.step(2, [self.det(2)])
        assert track.misses == 0 and track.hits == 1

    def test_no_duplicate_detection_claims(self):
        rng = np.random.default_rng(5)
        ts = TrackSet(birth_hits=2, death_misses=3)
        for frame in range(30):
            dets = []
            for k in range(rng.integers(0, 5)):
                u = float(rng.uniform(0, 300))
                dets.append(Detection(frame=frame, bbox=box(u, 0, u + 20, 20)))
            result = ts.step(frame, dets)
            track_ids = [tid for tid, _ in result.matches]
            matched_dets = [id(d) for _, d in result.matches]
            assert len(track_ids) == len(set(track_ids))
            assert len(matched_dets) == len(set(matched_dets))
