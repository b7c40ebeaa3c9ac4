"""Quality metrics: lip-sync timing, temporal stability, identity checks.

All of these work on plain arrays (trajectories, frame lists, rects) so they
can run against freshly rendered output or anything reloaded from disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputValidationError
from .coart import Trajectory
from .render import RasterRect

DEFAULT_SYNC_TOLERANCE_S = 0.040


# ---------------------------------------------------------------------------
# lip-sync timing


@dataclass
class SyncReport:
    tolerance_s: float
    onset_errors_s: np.ndarray     # per event; inf when never realized
    matched: np.ndarray            # bool per event
    fraction_within: float
    num_events: int

    def to_dict(self) -> dict:
        return {
            "tolerance_s": self.tolerance_s,
            "num_events": self.num_events,
            "fraction_within": self.fraction_within,
            "max_error_s": float(np.max(self.onset_errors_s))
            if self.num_events else 0.0,
            "onset_errors_s": [float(e) for e in self.onset_errors_s],
        }


def sync_accuracy(traj: Trajectory,
                  tolerance_s: float = DEFAULT_SYNC_TOLERANCE_S) -> SyncReport:
    """Compare each event's scheduled start against its realized onset.

    The realized onset of event ``i`` is the time of the first frame whose
    dominant event is ``i``.  Events the frame grid skips entirely (shorter
    than a frame period, unluckily placed) count as unmatched with an
    infinite error.  An error exactly at the tolerance still counts as
    within it.
    """
    if tolerance_s < 0.0:
        raise InputValidationError("tolerance_s must be >= 0")
    n = traj.event_starts.shape[0]
    dominant = traj.dominant_event
    # dominant is nondecreasing (event starts are sorted, frame centres
    # increase), so the first frame per event is a searchsorted away.
    first = np.searchsorted(dominant, np.arange(n), side="left")
    matched = (first < dominant.shape[0])
    idx = np.minimum(first, dominant.shape[0] - 1)
    matched &= dominant[idx] == np.arange(n)

    errors = np.full(n, np.inf)
    errors[matched] = np.abs(
        traj.event_starts[matched] - traj.times[idx[matched]]
    )
    within = errors <= tolerance_s
    fraction = float(within.mean()) if n else 0.0
    return SyncReport(
        tolerance_s=float(tolerance_s),
        onset_errors_s=errors,
        matched=matched,
        fraction_within=fraction,
        num_events=n,
    )


def export_cdf(errors_s) -> str:
    """Empirical CDF of onset errors as two sorted text columns.

    One row per distinct error value: the value and the fraction of errors
    at or below it.  Rows are sorted ascending; the last fraction is 1.
    """
    errors = np.asarray(errors_s, dtype=np.float64)
    if errors.ndim != 1 or errors.size == 0:
        raise InputValidationError("need a non-empty 1-D error array")
    if np.isnan(errors).any():
        raise InputValidationError("errors contain NaN")
    order = np.sort(errors)
    n = order.size
    lines = []
    for i, value in enumerate(order):
        if i + 1 < n and order[i + 1] == value:
            continue  # collapse ties onto the highest fraction
        lines.append(f"{value:.9g} {(i + 1) / n:.9g}")
    return "\n".join(lines) + "\n"


def read_cdf(text: str) -> np.ndarray:
    rows = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputValidationError(f"CDF line {ln}: expected two columns")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise InputValidationError(f"CDF line {ln}: {exc}") from exc
    if not rows:
        raise InputValidationError("empty CDF")
    return np.asarray(rows, dtype=np.float64)


# ---------------------------------------------------------------------------
# temporal stability


@dataclass
class StabilityReport:
    mean_flicker: float
    pair_values: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "mean_flicker": self.mean_flicker,
            "num_pairs": int(self.pair_values.shape[0]),
        }


def _pair_window(ra: RasterRect | None, rb: RasterRect | None,
                 h: int, w: int) -> tuple[int, int, int, int]:
    rects = [r for r in (ra, rb) if r is not None]
    if not rects:
        return 0, 0, w, h
    x0 = min(r.x0 for r in rects)
    y0 = min(r.y0 for r in rects)
    x1 = max(r.x1 for r in rects)
    y1 = max(r.y1 for r in rects)
    return x0, y0, x1, y1


def mean_l1_flicker(frames, raster_rects=None) -> StabilityReport:
    """Mean absolute pixel change between consecutive frames.

    Measured inside the union of the two frames' mouth boxes when rects are
    given (that is where motion should live), over the whole frame
    otherwise.  Lower is steadier.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise InputValidationError("flicker needs at least two frames")
    if raster_rects is not None and len(raster_rects) != len(frames):
        raise InputValidationError("one rect per frame required")
    h, w = frames[0].shape[:2]
    values = np.empty(len(frames) - 1)
    for k in range(len(frames) - 1):
        if raster_rects is None:
            x0, y0, x1, y1 = 0, 0, w, h
        else:
            x0, y0, x1, y1 = _pair_window(
                raster_rects[k], raster_rects[k + 1], h, w)
        a = frames[k][y0:y1, x0:x1].astype(np.int16)
        b = frames[k + 1][y0:y1, x0:x1].astype(np.int16)
        values[k] = float(np.mean(np.abs(b - a)))
    return StabilityReport(
        mean_flicker=float(values.mean()),
        pair_values=values,
    )


# ---------------------------------------------------------------------------
# identity preservation


def identity_outside_roi(frames, template_image: np.ndarray,
                         roi_union) -> int:
    """Largest absolute deviation from the template outside the mouth region.

    With head motion off nothing outside the composited boxes should move,
    so this is 0 for a well-behaved run.
    """
    tpl = np.asarray(template_image)
    worst = 0
    for frame in frames:
        if frame.shape != tpl.shape:
            raise InputValidationError(
                f"frame shape {frame.shape} != template {tpl.shape}"
            )
        diff = np.abs(frame.astype(np.int16) - tpl.astype(np.int16))
        if roi_union is not None:
            x0, y0, x1, y1 = roi_union
            diff[y0:y1, x0:x1] = 0
        worst = max(worst, int(diff.max()))
    return worst


def identity_drift(frames) -> np.ndarray:
    """Cosine distance of every frame from the first, on unit-norm pixels.

    Returns ``1 - <e_0, e_k>`` per frame; 0 means pixel-identical direction.
    """
    frames = list(frames)
    if not frames:
        raise InputValidationError("identity_drift needs frames")
    ref = frames[0].astype(np.float64).ravel()
    norm = np.linalg.norm(ref)
    if norm == 0.0:
        raise InputValidationError("reference frame is all zeros")
    ref = ref / norm
    out = np.empty(len(frames))
    for k, frame in enumerate(frames):
        vec = frame.astype(np.float64).ravel()
        n = np.linalg.norm(vec)
        if n == 0.0:
            out[k] = 1.0
            continue
        out[k] = 1.0 - float(np.dot(ref, vec / n))
    # guard against -0.0 / tiny negatives from rounding
    return np.where(np.abs(out) < 1e-15, 0.0, out)


def frame_hashes(frames) -> list[str]:
    """SHA-256 of each frame's raw pixels; equal runs give equal lists."""
    import hashlib

    out = []
    for frame in frames:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(frame).tobytes())
        out.append(h.hexdigest())
    return out


def nan_guard(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise InputValidationError(f"{name} is not finite: {value}")
    return value
