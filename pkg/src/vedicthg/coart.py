"""Coarticulation: turn a viseme schedule into smooth rig-space trajectories.

Each viseme event claims a dominance window that extends ``delta_s`` beyond
its nominal interval on both sides.  Inside the nominal interval the weight
is 1; over the flanks it ramps to 0, either linearly or with a raised-cosine
profile.  Overlapping windows are resolved per sample, yielding mouth-control
curves that anticipate upcoming visemes and decay past ones.

Two blend modes:

* ``vedic_pairwise`` -- at most two events interact at any instant; their
  contributions are combined with a cross-term ``lam * a*(1-a) * (x*y)``
  that deepens the mid-transition pose.  With ``lam=0`` this reduces exactly
  to the normalized two-event dominance blend.
* ``dominance_weighted`` -- classic weighted average over every event whose
  window covers the sample.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InputValidationError
from .visemes import (
    NEUTRAL,
    RIG_DIM,
    RIG_RANGES,
    VisemeEvent,
    VisemeSchedule,
)

WINDOW_SHAPES = ("triangular", "raised_cosine")
BLEND_MODES = ("vedic_pairwise", "dominance_weighted")

DEFAULT_DELTA_S = 0.040
DEFAULT_LAMBDA = 0.2
DEFAULT_FRAME_RATE_HZ = 30.0


class ShortEventWarning(UserWarning):
    """An interior event was too short for clean pairwise transitions."""


@dataclass(frozen=True)
class WindowConfig:
    delta_s: float = DEFAULT_DELTA_S
    shape: str = "triangular"

    def __post_init__(self):
        if not (self.delta_s > 0.0 and math.isfinite(self.delta_s)):
            raise InputValidationError(
                f"delta_s must be a positive finite number, got {self.delta_s}"
            )
        if self.shape not in WINDOW_SHAPES:
            raise InputValidationError(
                f"window shape must be one of {WINDOW_SHAPES}, "
                f"got {self.shape!r}"
            )

    @property
    def raised_cosine(self) -> bool:
        return self.shape == "raised_cosine"


@dataclass(frozen=True)
class BlendConfig:
    lam: float = DEFAULT_LAMBDA
    mode: str = "vedic_pairwise"

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise InputValidationError(f"lam must be finite, got {self.lam}")
        if self.mode not in BLEND_MODES:
            raise InputValidationError(
                f"blend mode must be one of {BLEND_MODES}, got {self.mode!r}"
            )


def _shape_ramp(u: float, raised_cosine: bool) -> float:
    if raised_cosine:
        return 0.5 * (1.0 - math.cos(math.pi * u))
    return u


def dominance_weight(event: VisemeEvent, t: float,
                     window: WindowConfig) -> float:
    """Weight of *event* at time *t*: 1 inside, ramp over the flanks, else 0.
    """
    delta = window.delta_s
    if t < event.start_s - delta or t > event.end_s + delta:
        return 0.0
    if t < event.start_s:
        return _shape_ramp((t - (event.start_s - delta)) / delta,
                           window.raised_cosine)
    if t > event.end_s:
        return _shape_ramp(((event.end_s + delta) - t) / delta,
                           window.raised_cosine)
    return 1.0


def transition_phase(ev_a: VisemeEvent, ev_b: VisemeEvent, t: float,
                     window: WindowConfig) -> float:
    """Mixing fraction of ``ev_b`` across the ``ev_a -> ev_b`` boundary.

    The two events must be adjacent (``ev_a.end_s == ev_b.start_s``).  Phase
    runs 0 at ``boundary - delta``, 0.5 at the boundary, 1 at
    ``boundary + delta`` and is the same normalized ratio the pairwise
    blender uses, so a zero cross-term pairwise blend interpolates with
    exactly this fraction.
    """
    if abs(ev_a.end_s - ev_b.start_s) > 1e-9:
        raise InputValidationError(
            "transition_phase requires adjacent events; "
            f"got end={ev_a.end_s} vs start={ev_b.start_s}"
        )
    boundary = ev_a.end_s
    delta = window.delta_s
    if t <= boundary - delta:
        return 0.0
    if t >= boundary + delta:
        return 1.0
    if t < boundary:
        w_new = _shape_ramp((t - (boundary - delta)) / delta,
                            window.raised_cosine)
        return w_new / (1.0 + w_new)
    w_old = _shape_ramp(((boundary + delta) - t) / delta,
                        window.raised_cosine)
    return 1.0 / (1.0 + w_old)


def vedic_blend(a, c, alpha, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Blend pose vectors ``a -> c`` at fraction ``alpha`` with a cross-term.

    ``y = (1 - alpha) * a + alpha * c + lam * alpha * (1 - alpha) * (a * c)``

    Endpoints are exact: ``alpha=0`` returns ``a``, ``alpha=1`` returns ``c``.
    """
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if a.shape != c.shape:
        raise InputValidationError(
            f"pose shape mismatch: {a.shape} vs {c.shape}"
        )
    if not (np.isfinite(a).all() and np.isfinite(c).all()):
        raise InputValidationError("pose vectors must be finite")
    if not (math.isfinite(alpha) and 0.0 <= alpha <= 1.0):
        raise InputValidationError(f"alpha must be in [0, 1], got {alpha}")
    if not math.isfinite(lam):
        raise InputValidationError(f"lam must be finite, got {lam}")
    return (1.0 - alpha) * a + alpha * c + lam * alpha * (1.0 - alpha) * (a * c)


def blend_at(schedule: VisemeSchedule, t: float,
             window: WindowConfig | None = None) -> np.ndarray:
    """Dominance-weighted pose at a single instant (neutral where no window
    covers ``t``)."""
    window = window or WindowConfig()
    ts = np.asarray([float(t)], dtype=np.float64)
    out = np.empty((1, RIG_DIM), dtype=np.float64)
    neutral = np.asarray(schedule.param_bank[NEUTRAL], dtype=np.float64)
    kernels.dominance_blend(
        ts, schedule.starts(), schedule.ends(), schedule.param_matrix(),
        window.delta_s, window.raised_cosine, neutral, out,
    )
    return _clamp_rows(out)[0]


@dataclass(frozen=True)
class Trajectory:
    """Sampled mouth-control curves plus the per-frame dominant event."""

    frame_rate_hz: float
    times: np.ndarray          # (T,) seconds
    values: np.ndarray         # (T, RIG_DIM)
    dominant_event: np.ndarray  # (T,) index into the event arrays below
    event_starts: np.ndarray   # (n,) seconds
    event_visemes: tuple[str, ...]
    event_source: tuple[int | None, ...]

    @property
    def num_frames(self) -> int:
        return int(self.times.shape[0])

    def frame_period_s(self) -> float:
        return 1.0 / self.frame_rate_hz


_LOW = np.asarray([lo for lo, _ in RIG_RANGES], dtype=np.float64)
_HIGH = np.asarray([hi for _, hi in RIG_RANGES], dtype=np.float64)


def _clamp_rows(values: np.ndarray) -> np.ndarray:
    np.clip(values, _LOW, _HIGH, out=values)
    return values


def sample_trajectory(
    schedule: VisemeSchedule,
    frame_rate_hz: float = DEFAULT_FRAME_RATE_HZ,
    window: WindowConfig | None = None,
    blend: BlendConfig | None = None,
) -> Trajectory:
    """Sample the schedule at ``frame_rate_hz`` into a :class:`Trajectory`.

    Samples sit at ``t_k = k / frame_rate_hz`` for ``k = 0 .. T-1`` with
    ``T = ceil(duration * frame_rate_hz)``.  The dominant event for frame
    ``k`` is whichever event covers the midpoint of its display interval,
    ``t_k + 1/(2 f)``, which keeps the visible onset of every event within
    half a frame period of its scheduled start.

    Interior events shorter than ``2 * delta_s`` cannot host two clean
    pairwise ramps; their samples fall back to the dominance-weighted blend
    and a :class:`ShortEventWarning` is emitted.
    """
    window = window or WindowConfig()
    blend = blend or BlendConfig()
    if not (frame_rate_hz > 0.0 and math.isfinite(frame_rate_hz)):
        raise InputValidationError(
            f"frame_rate_hz must be positive, got {frame_rate_hz}"
        )

    duration = schedule.duration_s
    num = int(math.ceil(duration * frame_rate_hz - 1e-9))
    if num < 1:
        raise InputValidationError(
            f"schedule too short to sample: duration={duration}s "
            f"at {frame_rate_hz} Hz"
        )
    ts = np.arange(num, dtype=np.float64) / frame_rate_hz

    starts = schedule.starts()
    ends = schedule.ends()
    params = schedule.param_matrix()
    n = starts.shape[0]
    neutral = np.asarray(schedule.param_bank[NEUTRAL], dtype=np.float64)

    # Which event owns each sample time (events tile [0, duration]).
    owner = np.clip(np.searchsorted(starts, ts, side="right") - 1, 0, n - 1)
    owner = owner.astype(np.int64)

    out = np.empty((num, RIG_DIM), dtype=np.float64)
    if blend.mode == "dominance_weighted":
        kernels.dominance_blend(ts, starts, ends, params, window.delta_s,
                                window.raised_cosine, neutral, out)
    else:
        kernels.pairwise_blend(ts, owner, starts, ends, params,
                               window.delta_s, blend.lam,
                               window.raised_cosine, out)
        short = (ends - starts) < 2.0 * window.delta_s
        short[0] = False
        short[-1] = False
        if short.any():
            todo = short[owner]
            if todo.any():
                patch = np.empty((int(todo.sum()), RIG_DIM), dtype=np.float64)
                kernels.dominance_blend(
                    ts[todo], starts, ends, params, window.delta_s,
                    window.raised_cosine, neutral, patch,
                )
                out[todo] = patch
            warnings.warn(
                f"{int(short.sum())} interior event(s) shorter than "
                f"2*delta ({2.0 * window.delta_s:.3f}s); their samples use "
                "dominance-weighted blending",
                ShortEventWarning,
                stacklevel=2,
            )
    _clamp_rows(out)

    centers = ts + 0.5 / frame_rate_hz
    dominant = np.clip(np.searchsorted(starts, centers, side="right") - 1,
                       0, n - 1).astype(np.int64)

    return Trajectory(
        frame_rate_hz=float(frame_rate_hz),
        times=ts,
        values=out,
        dominant_event=dominant,
        event_starts=starts,
        event_visemes=schedule.viseme_labels(),
        event_source=schedule.source_indices(),
    )


def save_trajectory(traj: Trajectory) -> str:
    """Serialize a trajectory to a JSON document."""
    doc = {
        "frame_rate_hz": traj.frame_rate_hz,
        "times": traj.times.tolist(),
        "values": traj.values.tolist(),
        "dominant_event": traj.dominant_event.tolist(),
        "event_starts": traj.event_starts.tolist(),
        "event_visemes": list(traj.event_visemes),
        "event_source": [s for s in traj.event_source],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_trajectory(text: str) -> Trajectory:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputValidationError(f"bad trajectory JSON: {exc}") from exc
    try:
        return Trajectory(
            frame_rate_hz=float(doc["frame_rate_hz"]),
            times=np.asarray(doc["times"], dtype=np.float64),
            values=np.asarray(doc["values"], dtype=np.float64),
            dominant_event=np.asarray(doc["dominant_event"], dtype=np.int64),
            event_starts=np.asarray(doc["event_starts"], dtype=np.float64),
            event_visemes=tuple(doc["event_visemes"]),
            event_source=tuple(
                None if s is None else int(s) for s in doc["event_source"]
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputValidationError(f"bad trajectory document: {exc}") from exc
