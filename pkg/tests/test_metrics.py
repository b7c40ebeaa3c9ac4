import hashlib
import math

import numpy as np
import pytest

from conftest import schedule_for, synthetic_stream
from vedicthg.coart import Trajectory, WindowConfig, sample_trajectory
from vedicthg.errors import InputValidationError
from vedicthg.metrics import (
    export_cdf,
    frame_hashes,
    identity_drift,
    identity_outside_roi,
    mean_l1_flicker,
    nan_guard,
    read_cdf,
    sync_accuracy,
)
from vedicthg.render import RasterRect


def _traj(times, dominant, starts):
    times = np.asarray(times, dtype=np.float64)
    return Trajectory(
        frame_rate_hz=8.0,
        times=times,
        values=np.zeros((times.shape[0], 8)),
        dominant_event=np.asarray(dominant, dtype=np.int64),
        event_starts=np.asarray(starts, dtype=np.float64),
        event_visemes=tuple("V%d" % i for i in range(len(starts))),
        event_source=tuple(None for _ in starts),
    )


class TestSyncAccuracy:
    def test_exact_onsets(self):
        # times at eighths are binary-exact, so errors compare exactly
        traj = _traj([0.0, 0.125, 0.25, 0.375, 0.5],
                     [0, 0, 1, 1, 2],
                     [0.0, 0.125, 0.375])
        rep = sync_accuracy(traj, tolerance_s=0.125)
        np.testing.assert_array_equal(rep.onset_errors_s, [0.0, 0.125, 0.125])
        assert rep.fraction_within == 1.0          # boundary counts as within
        rep = sync_accuracy(traj, tolerance_s=0.1)
        assert rep.fraction_within == pytest.approx(1 / 3)

    def test_skipped_event_is_unmatched(self):
        traj = _traj([0.0, 0.125, 0.25, 0.375],
                     [0, 0, 2, 2],
                     [0.0, 0.1, 0.2])
        rep = sync_accuracy(traj, tolerance_s=10.0)
        assert rep.onset_errors_s[1] == np.inf
        np.testing.assert_array_equal(rep.matched, [True, False, True])
        assert rep.fraction_within == pytest.approx(2 / 3)
        assert rep.to_dict()["max_error_s"] == np.inf

    def test_negative_tolerance_rejected(self):
        traj = _traj([0.0], [0], [0.0])
        with pytest.raises(InputValidationError):
            sync_accuracy(traj, tolerance_s=-0.1)

    def test_real_trajectory_meets_half_frame_bound(self):
        rng = np.random.default_rng(42)
        sched = schedule_for(synthetic_stream(rng, 2.0, min_ms=90,
                                              gap_prob=0.0))
        traj = sample_trajectory(sched, 30.0, WindowConfig(delta_s=0.04))
        rep = sync_accuracy(traj, tolerance_s=0.5 / 30.0 + 1e-9)
        assert rep.matched.all()
        assert rep.fraction_within == 1.0


class TestCdf:
    def test_fixture_rows(self):
        text = export_cdf([0.05, 0.01, 0.02])
        rows = text.strip().splitlines()
        assert rows == [
            "0.01 0.333333333",
            "0.02 0.666666667",
            "0.05 1",
        ]

    def test_ties_collapse_to_highest_fraction(self):
        text = export_cdf([0.1, 0.1, 0.2])
        rows = [line.split() for line in text.strip().splitlines()]
        assert len(rows) == 2
        assert float(rows[0][1]) == pytest.approx(2 / 3)
        assert float(rows[1][1]) == 1.0

    def test_monotone_and_terminal_one(self):
        rng = np.random.default_rng(3)
        arr = read_cdf(export_cdf(rng.uniform(0, 0.05, 200)))
        assert np.all(np.diff(arr[:, 0]) > 0)
        assert np.all(np.diff(arr[:, 1]) > 0)
        assert arr[-1, 1] == 1.0

    def test_bit_stable(self):
        errs = list(np.random.default_rng(4).uniform(0, 1, 50))
        assert export_cdf(errs) == export_cdf(errs)

    def test_rejects_bad_input(self):
        with pytest.raises(InputValidationError):
            export_cdf([])
        with pytest.raises(InputValidationError):
            export_cdf([0.1, float("nan")])

    def test_read_rejects_malformed(self):
        with pytest.raises(InputValidationError, match="two columns"):
            read_cdf("0.1 0.5 extra\n")
        with pytest.raises(InputValidationError, match="line 1"):
            read_cdf("zero point one 0.5\n")
        with pytest.raises(InputValidationError, match="empty"):
            read_cdf("\n\n")


class TestFlicker:
    def test_constant_sequence_is_zero(self):
        frames = [np.full((4, 4, 3), 7, dtype=np.uint8)] * 3
        assert mean_l1_flicker(frames).mean_flicker == 0.0

    def test_uniform_step(self):
        a = np.zeros((4, 4, 3), dtype=np.uint8)
        b = np.full((4, 4, 3), 10, dtype=np.uint8)
        rep = mean_l1_flicker([a, b, a])
        np.testing.assert_array_equal(rep.pair_values, [10.0, 10.0])
        assert rep.mean_flicker == 10.0

    def test_rects_restrict_the_window(self):
        a = np.zeros((8, 8, 3), dtype=np.uint8)
        b = a.copy()
        b[7, 7] = 200          # change far outside the mouth box
        rr = RasterRect(2, 2, 4, 4, 3.0, 3.0, 2.0, 2.0)
        rep = mean_l1_flicker([a, b], raster_rects=[rr, rr])
        assert rep.mean_flicker == 0.0
        assert mean_l1_flicker([a, b]).mean_flicker > 0.0

    def test_windowed_value(self):
        a = np.zeros((8, 8, 3), dtype=np.uint8)
        b = a.copy()
        b[2:4, 2:4] = 12       # fills the whole 2x2 window
        rr = RasterRect(2, 2, 4, 4, 3.0, 3.0, 2.0, 2.0)
        rep = mean_l1_flicker([a, b], raster_rects=[rr, rr])
        assert rep.mean_flicker == 12.0

    def test_validation(self):
        a = np.zeros((4, 4, 3), dtype=np.uint8)
        with pytest.raises(InputValidationError):
            mean_l1_flicker([a])
        with pytest.raises(InputValidationError):
            mean_l1_flicker([a, a], raster_rects=[None])


class TestIdentity:
    def test_outside_roi_ignores_inside(self):
        tpl = np.zeros((6, 6, 3), dtype=np.uint8)
        frame = tpl.copy()
        frame[1, 1] = 50                    # inside the union box
        assert identity_outside_roi([frame], tpl, (0, 0, 3, 3)) == 0
        frame[5, 5] = 7                     # outside it
        assert identity_outside_roi([frame], tpl, (0, 0, 3, 3)) == 7
        assert identity_outside_roi([frame], tpl, None) == 50

    def test_outside_roi_shape_check(self):
        tpl = np.zeros((6, 6, 3), dtype=np.uint8)
        with pytest.raises(InputValidationError):
            identity_outside_roi([np.zeros((4, 4, 3), dtype=np.uint8)],
                                 tpl, None)

    def test_drift_zero_for_same_direction(self):
        a = np.full((4, 4, 3), 100, dtype=np.uint8)
        b = np.full((4, 4, 3), 200, dtype=np.uint8)   # scaled, same direction
        drift = identity_drift([a, a, b])
        np.testing.assert_array_equal(drift, [0.0, 0.0, 0.0])

    def test_drift_positive_on_change(self):
        rng = np.random.default_rng(9)
        a = rng.integers(0, 255, size=(4, 4, 3), dtype=np.uint8)
        b = a.copy()
        b[0, 0] = 255 - b[0, 0]
        drift = identity_drift([a, b])
        assert drift[0] == 0.0
        assert drift[1] > 0.0

    def test_drift_degenerate_frames(self):
        zero = np.zeros((4, 4, 3), dtype=np.uint8)
        with pytest.raises(InputValidationError):
            identity_drift([zero])
        ok = np.full((4, 4, 3), 5, dtype=np.uint8)
        assert identity_drift([ok, zero])[1] == 1.0


def test_frame_hashes():
    rng = np.random.default_rng(12)
    a = rng.integers(0, 255, size=(4, 4, 3), dtype=np.uint8)
    b = a.copy()
    assert frame_hashes([a]) == frame_hashes([b])
    assert frame_hashes([a])[0] == hashlib.sha256(a.tobytes()).hexdigest()
    b[0, 0, 0] ^= 1
    assert frame_hashes([a]) != frame_hashes([b])


def test_nan_guard():
    assert nan_guard("x", 1.5) == 1.5
    with pytest.raises(InputValidationError, match="speed"):
        nan_guard("speed", math.inf)
    with pytest.raises(InputValidationError):
        nan_guard("x", math.nan)
