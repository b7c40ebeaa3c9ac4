"""Frame rendering: composite viseme mouth patches onto a reference face.

The pipeline per frame is small and local: fit a padded box around the mouth
landmarks, steady it with an exponential moving average, pick a mouth patch
for the dominant viseme, scale it by the jaw/width controls, warp it into the
box, and alpha-composite it through a feathered polygon mask.  Everything
outside the box is left untouched, which is what makes identity checks and
region-of-interest metrics cheap.

Head motion is optional and applied before the mouth composite: either a
synthesized low-frequency sway or a similarity transform fitted to tracked
landmarks, warped through the head mask with disoccluded pixels taken from
the unmoved template.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import ConfigError, InputValidationError
from .visemes import NEUTRAL, RIG_DIM
from .coart import Trajectory

HEAD_MODES = ("off", "synthesized", "tracked")

DEFAULT_BETA = 0.85
DEFAULT_PADDING_SCALE = 1.15
DEFAULT_FEATHER_PX = 2.0

_IDENTITY_FWD = np.asarray([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


# ---------------------------------------------------------------------------
# scene data


def _check_points(name: str, pts, min_count: int) -> np.ndarray:
    arr = np.asarray(pts, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputValidationError(f"{name} must be an (N, 2) array")
    if arr.shape[0] < min_count:
        raise InputValidationError(
            f"{name} needs at least {min_count} points, got {arr.shape[0]}"
        )
    if not np.isfinite(arr).all():
        raise InputValidationError(f"{name} contains non-finite coordinates")
    return arr


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > 0:
            return 1
        if v < 0:
            return -1
        return 0

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return d1 != d2 and d3 != d4 and 0 not in (d1, d2, d3, d4)


def _is_simple_polygon(pts: np.ndarray) -> bool:
    n = pts.shape[0]
    for i in range(n):
        a1, a2 = pts[i], pts[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = pts[j], pts[(j + 1) % n]
            if _segments_properly_intersect(a1, a2, b1, b2):
                return False
    return True


@dataclass
class Template:
    """Reference face: image plus the geometry the renderer needs."""

    image: np.ndarray                 # (H, W, 3) uint8
    mouth_landmarks: np.ndarray       # (M >= 4, 2) x,y pixel coords
    mouth_polygon: np.ndarray         # (P >= 3, 2) composite mask outline
    stable_landmarks: np.ndarray | None = None  # for tracked head motion
    head_mask: np.ndarray | None = None         # (H, W) in [0, 1]

    def __post_init__(self):
        img = np.asarray(self.image)
        if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
            raise InputValidationError(
                "template image must be (H, W, 3) uint8"
            )
        self.image = img
        self.mouth_landmarks = _check_points(
            "mouth_landmarks", self.mouth_landmarks, 4)
        self.mouth_polygon = _check_points(
            "mouth_polygon", self.mouth_polygon, 3)
        if not _is_simple_polygon(self.mouth_polygon):
            raise InputValidationError(
                "mouth_polygon is self-intersecting"
            )
        if self.stable_landmarks is not None:
            self.stable_landmarks = _check_points(
                "stable_landmarks", self.stable_landmarks, 2)
        if self.head_mask is not None:
            hm = np.asarray(self.head_mask, dtype=np.float64)
            if hm.shape != img.shape[:2]:
                raise InputValidationError(
                    f"head_mask shape {hm.shape} does not match image "
                    f"{img.shape[:2]}"
                )
            if hm.min() < 0.0 or hm.max() > 1.0:
                raise InputValidationError("head_mask values must be in [0,1]")
            self.head_mask = hm

    @property
    def size(self) -> tuple[int, int]:
        return self.image.shape[1], self.image.shape[0]


@dataclass
class MouthPatch:
    """One RGBA mouth sprite with its four alignment anchors.

    Anchor order: left corner, right corner, top lip, bottom lip, in patch
    pixel coordinates.
    """

    rgba: np.ndarray    # (h, w, 4) uint8
    anchors: np.ndarray  # (4, 2) float

    def __post_init__(self):
        arr = np.asarray(self.rgba)
        if arr.ndim != 3 or arr.shape[2] != 4 or arr.dtype != np.uint8:
            raise InputValidationError("mouth patch must be (h, w, 4) uint8")
        self.rgba = arr
        anchors = _check_points("patch anchors", self.anchors, 4)
        if anchors.shape[0] != 4:
            raise InputValidationError(
                f"expected exactly 4 anchors, got {anchors.shape[0]}"
            )
        centered = anchors - anchors.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-9) < 2:
            raise InputValidationError("patch anchors are collinear")
        self.anchors = anchors


class MouthBank:
    """Viseme -> :class:`MouthPatch` lookup with cached float pixels."""

    def __init__(self, patches: dict[str, MouthPatch]):
        if NEUTRAL not in patches:
            raise InputValidationError(
                f"mouth bank must include a {NEUTRAL!r} patch"
            )
        self.patches = dict(patches)
        self._float_cache: dict[str, np.ndarray] = {}

    def __contains__(self, viseme: str) -> bool:
        return viseme in self.patches

    def __getitem__(self, viseme: str) -> MouthPatch:
        try:
            return self.patches[viseme]
        except KeyError:
            raise InputValidationError(
                f"mouth bank has no patch for viseme {viseme!r}"
            ) from None

    def visemes(self) -> tuple[str, ...]:
        return tuple(sorted(self.patches))

    def float_rgba(self, viseme: str) -> np.ndarray:
        out = self._float_cache.get(viseme)
        if out is None:
            out = self[viseme].rgba.astype(np.float64)
            self._float_cache[viseme] = out
        return out


@dataclass(frozen=True)
class HeadMotionConfig:
    amp_rot_deg: float = 1.2
    amp_px: float = 2.0
    freq_hz: float = 0.25
    phase_rad: float = math.pi / 2.0


@dataclass(frozen=True)
class RenderConfig:
    beta: float = DEFAULT_BETA
    padding_scale: float = DEFAULT_PADDING_SCALE
    feather_px: float = DEFAULT_FEATHER_PX
    use_mouth_bank: bool = True
    jaw_warp: bool = True
    cheek_warp: bool = True
    head_mode: str = "off"
    head: HeadMotionConfig = field(default_factory=HeadMotionConfig)

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise InputValidationError(
                f"beta must be in [0, 1), got {self.beta}"
            )
        if self.padding_scale <= 0.0:
            raise InputValidationError("padding_scale must be positive")
        if self.feather_px < 0.0:
            raise InputValidationError("feather_px must be >= 0")
        if self.head_mode not in HEAD_MODES:
            raise InputValidationError(
                f"head_mode must be one of {HEAD_MODES}, got {self.head_mode!r}"
            )


# ---------------------------------------------------------------------------
# region of interest


def compute_bbox(points, padding_scale: float = DEFAULT_PADDING_SCALE
                 ) -> np.ndarray:
    """Padded box around landmark points as ``[cx, cy, w, h]``.

    The box is centred on the landmark extent midpoint and sized to the
    extent times ``padding_scale``.  Fewer than four points or a flat extent
    raise, since a box fit to those would be meaningless.
    """
    pts = _check_points("bbox points", points, 4)
    mins = pts.min(axis=0)
    maxs = pts.max(axis=0)
    extent = maxs - mins
    if extent[0] <= 0.0 or extent[1] <= 0.0:
        raise InputValidationError(
            f"degenerate landmark extent {tuple(extent)}; points are "
            "collinear or coincident"
        )
    center = (mins + maxs) / 2.0
    size = extent * padding_scale
    return np.asarray([center[0], center[1], size[0], size[1]])


class RoiState:
    """Exponential moving average over successive raw boxes."""

    def __init__(self):
        self.rect: np.ndarray | None = None

    def update(self, raw_rect: np.ndarray, beta: float) -> np.ndarray:
        raw = np.asarray(raw_rect, dtype=np.float64)
        if self.rect is None:
            self.rect = raw.copy()
        else:
            self.rect = beta * self.rect + (1.0 - beta) * raw
        return self.rect.copy()


class RasterRect(NamedTuple):
    """Integer raster window for a continuous rect, clipped to the frame."""

    x0: int
    y0: int
    x1: int
    y1: int
    cx_local: float   # rect centre relative to (x0, y0)
    cy_local: float
    width: float      # continuous rect size (pre-clip)
    height: float


def rasterize_rect(rect, frame_w: int, frame_h: int) -> RasterRect | None:
    cx, cy, w, h = (float(v) for v in rect)
    rw = max(1, int(np.rint(w)))
    rh = max(1, int(np.rint(h)))
    x0 = int(np.rint(cx - (rw - 1) / 2.0))
    y0 = int(np.rint(cy - (rh - 1) / 2.0))
    x0c = max(x0, 0)
    y0c = max(y0, 0)
    x1c = min(x0 + rw, frame_w)
    y1c = min(y0 + rh, frame_h)
    if x1c <= x0c or y1c <= y0c:
        return None
    return RasterRect(x0c, y0c, x1c, y1c, cx - x0c, cy - y0c, w, h)


# ---------------------------------------------------------------------------
# head motion


def solve_similarity(src_pts, dst_pts) -> np.ndarray:
    """Least-squares similarity (rotation+scale+shift) ``src -> dst``, 2x3."""
    src = _check_points("src_pts", src_pts, 2)
    dst = _check_points("dst_pts", dst_pts, 2)
    if src.shape != dst.shape:
        raise InputValidationError("landmark sets differ in size")
    n = src.shape[0]
    A = np.zeros((2 * n, 4))
    b = np.empty(2 * n)
    A[0::2, 0] = src[:, 0]
    A[0::2, 1] = -src[:, 1]
    A[0::2, 2] = 1.0
    A[1::2, 0] = src[:, 1]
    A[1::2, 1] = src[:, 0]
    A[1::2, 3] = 1.0
    b[0::2] = dst[:, 0]
    b[1::2] = dst[:, 1]
    sol, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < 4:
        raise InputValidationError(
            "stable landmarks do not constrain a similarity transform"
        )
    a, c, tx, ty = sol
    return np.asarray([[a, -c, tx], [c, a, ty]])


def head_affine_synth(t: float, cfg: HeadMotionConfig,
                      centroid) -> np.ndarray:
    """Forward affine for the synthesized sway at time ``t`` (seconds)."""
    w = 2.0 * math.pi * cfg.freq_hz
    angle = math.radians(cfg.amp_rot_deg) * math.sin(w * t)
    shift = cfg.amp_px * math.sin(w * t + cfg.phase_rad)
    ca, sa = math.cos(angle), math.sin(angle)
    cx, cy = float(centroid[0]), float(centroid[1])
    # rotate about the centroid, then translate
    tx = cx - (ca * cx - sa * cy) + shift
    ty = cy - (sa * cx + ca * cy) + shift
    return np.asarray([[ca, -sa, tx], [sa, ca, ty]])


def invert_affine(fwd: np.ndarray) -> np.ndarray:
    """Invert a 2x3 forward affine into the flat [a,b,c,d,e,f] inverse."""
    m = np.eye(3)
    m[:2, :] = fwd
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < 1e-12:
        raise InputValidationError("affine transform is singular")
    inv = np.linalg.inv(m)
    return np.ascontiguousarray(inv[:2, :].reshape(-1))


def _affine_is_identity(fwd: np.ndarray | None) -> bool:
    return fwd is None or np.array_equal(fwd, _IDENTITY_FWD)


def apply_head_motion(template: Template, fwd: np.ndarray | None
                      ) -> np.ndarray:
    """Warp the masked head region; disoccluded pixels keep template values.
    """
    if _affine_is_identity(fwd):
        return template.image.copy()
    if template.head_mask is None:
        raise InputValidationError(
            "head motion requested but template has no head_mask"
        )
    inv = invert_affine(fwd)
    out = np.empty_like(template.image)
    kernels.masked_affine_rgb(template.image, template.head_mask,
                              template.image, inv, out)
    return out


def transform_points(pts: np.ndarray, fwd: np.ndarray | None) -> np.ndarray:
    if _affine_is_identity(fwd):
        return pts
    return pts @ fwd[:, :2].T + fwd[:, 2]


# ---------------------------------------------------------------------------
# mouth compositing


def select_mouth(values_row, viseme: str, bank: MouthBank,
                 jaw_warp: bool = True, cheek_warp: bool = True
                 ) -> tuple[MouthPatch, tuple[float, float], float]:
    """Pick the patch for ``viseme`` and derive its warp from the controls.

    Jaw opening stretches the patch vertically (up to 1.5x at full open);
    lip width beyond the 0.5 rest point widens it (up to 1.15x).  At an
    all-zero control row both scales are exactly 1.  Protrusion nudges the
    patch up by a small fraction of the box height.
    """
    y = np.asarray(values_row, dtype=np.float64)
    if y.shape != (RIG_DIM,):
        raise InputValidationError(
            f"expected a ({RIG_DIM},) control row, got shape {y.shape}"
        )
    patch = bank[viseme]
    vscale = 1.0 + 0.5 * y[0] if jaw_warp else 1.0
    hscale = 1.0 + 0.3 * max(y[1] - 0.5, 0.0) if cheek_warp else 1.0
    voffset_frac = -0.08 * y[2]
    return patch, (hscale, vscale), voffset_frac


def warp_patch(patch: MouthPatch, rr: RasterRect,
               warp_scale: tuple[float, float] = (1.0, 1.0),
               voffset_frac: float = 0.0,
               patch_rgba_f64: np.ndarray | None = None) -> np.ndarray:
    """Resample the patch into the rect raster; returns float RGBA.

    The patch is placed so its anchor centroid lands on the rect centre,
    scaled by rect_size/patch_size times ``warp_scale``.  When the rect
    matches the patch exactly and the anchors are centred, the mapping is
    the identity and pixels copy through untouched.
    """
    rgba = patch_rgba_f64
    if rgba is None:
        rgba = patch.rgba.astype(np.float64)
    ph, pw = rgba.shape[:2]
    sx = rr.width / pw * warp_scale[0]
    sy = rr.height / ph * warp_scale[1]
    if sx <= 0.0 or sy <= 0.0:
        raise InputValidationError("warp scale must be positive")
    ac = patch.anchors.mean(axis=0)
    tx = rr.cx_local - sx * ac[0]
    ty = rr.cy_local + voffset_frac * rr.height - sy * ac[1]
    inv = np.asarray([1.0 / sx, 0.0, -tx / sx, 0.0, 1.0 / sy, -ty / sy])
    out = np.empty((rr.y1 - rr.y0, rr.x1 - rr.x0, 4), dtype=np.float64)
    kernels.warp_bilinear_rgba(rgba, inv, out)
    return out


def feather_mask(polygon: np.ndarray, rr: RasterRect,
                 feather_px: float = DEFAULT_FEATHER_PX) -> np.ndarray:
    """Soft-edged polygon coverage over the rect raster, values in [0, 1]."""
    poly = _check_points("mask polygon", polygon, 3)
    if not _is_simple_polygon(poly):
        raise InputValidationError("mask polygon is self-intersecting")
    out = np.empty((rr.y1 - rr.y0, rr.x1 - rr.x0), dtype=np.float64)
    kernels.polygon_feather_mask(
        np.ascontiguousarray(poly[:, 0]), np.ascontiguousarray(poly[:, 1]),
        float(rr.x0), float(rr.y0), out, float(feather_px),
    )
    return out


def composite_mouth(frame: np.ndarray, warped_rgba: np.ndarray,
                    mask: np.ndarray, rr: RasterRect) -> None:
    """Alpha-blend the warped patch into ``frame`` inside the rect, in place.
    """
    view = frame[rr.y0:rr.y1, rr.x0:rr.x1]
    base = view.astype(np.float64)
    kernels.composite_rgb(base, warped_rgba, mask, view)


def render_frame(template: Template, bank: MouthBank, values_row,
                 viseme: str, rect, cfg: RenderConfig | None = None,
                 head_affine: np.ndarray | None = None,
                 mask: np.ndarray | None = None) -> np.ndarray:
    """Render one frame; only pixels inside the (clipped) rect can change."""
    cfg = cfg or RenderConfig()
    frame = apply_head_motion(template, head_affine)
    w, h = template.size
    rr = rasterize_rect(rect, w, h)
    if rr is None:
        return frame
    use_viseme = viseme if cfg.use_mouth_bank else NEUTRAL
    patch, scale, voff = select_mouth(
        values_row, use_viseme, bank, cfg.jaw_warp, cfg.cheek_warp)
    warped = warp_patch(patch, rr, scale, voff,
                        patch_rgba_f64=bank.float_rgba(use_viseme))
    if mask is None:
        poly = transform_points(template.mouth_polygon, head_affine)
        mask = feather_mask(poly, rr, cfg.feather_px)
    y3 = float(np.asarray(values_row, dtype=np.float64)[3])
    composite_mouth(frame, warped, mask * y3, rr)
    return frame


# ---------------------------------------------------------------------------
# sequences


@dataclass
class RenderResult:
    frames: list[np.ndarray]
    rects: np.ndarray                 # (T, 4) smoothed [cx, cy, w, h]
    raster_rects: list[RasterRect | None]
    roi_union: tuple[int, int, int, int] | None  # x0, y0, x1, y1


def resolve_threads() -> int:
    """Worker count from ``VEDICTHG_THREADS``: unset=1, 0=all cores, N=N."""
    raw = os.environ.get("VEDICTHG_THREADS")
    if raw is None or raw.strip() == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(
            f"VEDICTHG_THREADS must be an integer, got {raw!r}"
        ) from None
    if n < 0:
        raise ConfigError("VEDICTHG_THREADS must be >= 0")
    if n == 0:
        return os.cpu_count() or 1
    return n


def render_sequence(template: Template, bank: MouthBank, traj: Trajectory,
                    cfg: RenderConfig | None = None,
                    mouth_track: np.ndarray | None = None,
                    stable_track: np.ndarray | None = None) -> RenderResult:
    """Render every trajectory frame.

    Runs in two phases.  The first is a sequential scan that carries the
    box-smoothing state and head pose from frame to frame (it is order
    dependent and cheap).  The second renders frames, which are independent
    once their boxes and masks are fixed, optionally across a thread pool
    sized by ``VEDICTHG_THREADS``.

    ``mouth_track``/``stable_track`` supply per-frame landmark positions
    (shape ``(T, N, 2)``); when omitted the template landmarks are reused
    for every frame.  ``stable_track`` is required for tracked head motion.
    """
    cfg = cfg or RenderConfig()
    T = traj.num_frames
    w, h = template.size

    if mouth_track is not None:
        mouth_track = np.asarray(mouth_track, dtype=np.float64)
        if mouth_track.shape[0] != T:
            raise InputValidationError(
                f"mouth_track has {mouth_track.shape[0]} frames, "
                f"trajectory has {T}"
            )
    if cfg.head_mode == "tracked":
        if stable_track is None:
            raise InputValidationError(
                "tracked head motion requires stable_track landmark positions"
            )
        if template.stable_landmarks is None:
            raise InputValidationError(
                "tracked head motion requires template stable_landmarks"
            )
        stable_track = np.asarray(stable_track, dtype=np.float64)
        if stable_track.shape[0] != T:
            raise InputValidationError(
                f"stable_track has {stable_track.shape[0]} frames, "
                f"trajectory has {T}"
            )

    if cfg.head_mode == "synthesized":
        if template.head_mask is None:
            raise InputValidationError(
                "synthesized head motion requires a template head_mask"
            )
        ys, xs = np.nonzero(template.head_mask >= 0.5)
        if ys.size == 0:
            raise InputValidationError("head_mask selects no pixels")
        head_centroid = (float(xs.mean()), float(ys.mean()))

    # Phase 1: sequential state scan -- smoothed boxes, head poses, masks.
    roi = RoiState()
    rects = np.empty((T, 4), dtype=np.float64)
    rasters: list[RasterRect | None] = []
    affines: list[np.ndarray | None] = []
    masks: list[np.ndarray | None] = []
    mask_cache: dict = {}
    for k in range(T):
        t = float(traj.times[k])
        if cfg.head_mode == "synthesized":
            fwd = head_affine_synth(t, cfg.head, head_centroid)
        elif cfg.head_mode == "tracked":
            fwd = solve_similarity(template.stable_landmarks, stable_track[k])
        else:
            fwd = None

        pts = (mouth_track[k] if mouth_track is not None
               else template.mouth_landmarks)
        pts = transform_points(pts, fwd)
        raw = compute_bbox(pts, cfg.padding_scale)
        rects[k] = roi.update(raw, cfg.beta)
        rr = rasterize_rect(rects[k], w, h)
        rasters.append(rr)
        affines.append(fwd)
        if rr is None:
            masks.append(None)
            continue
        poly = transform_points(template.mouth_polygon, fwd)
        key = (rr.x0, rr.y0, rr.x1, rr.y1, poly.tobytes())
        m = mask_cache.get(key)
        if m is None:
            m = feather_mask(poly, rr, cfg.feather_px)
            mask_cache[key] = m
        masks.append(m)

    # Phase 2: per-frame rendering, independent given the phase-1 state.
    def _one(k: int) -> np.ndarray:
        viseme = traj.event_visemes[traj.dominant_event[k]]
        return render_frame(template, bank, traj.values[k], viseme,
                            rects[k], cfg, affines[k], masks[k])

    workers = resolve_threads()
    if workers <= 1:
        frames = [_one(k) for k in range(T)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(_one, range(T)))

    union = None
    for rr in rasters:
        if rr is None:
            continue
        if union is None:
            union = [rr.x0, rr.y0, rr.x1, rr.y1]
        else:
            union[0] = min(union[0], rr.x0)
            union[1] = min(union[1], rr.y0)
            union[2] = max(union[2], rr.x1)
            union[3] = max(union[3], rr.y1)

    return RenderResult(
        frames=frames,
        rects=rects,
        raster_rects=rasters,
        roi_union=tuple(union) if union is not None else None,
    )
