"""Asset and frame I/O.

A face bundle is a directory::

    face.png            RGB reference image
    head_mask.png       optional 8-bit mask (255 = head)
    landmarks.json      {"mouth": [[x,y],..], "stable": [..], "mouth_polygon": [..]}
    mouth_bank/
        bank.json       {"VISEME": {"file": "x.png", "anchors": [[x,y]x4]}, ..}
        *.png           RGBA patches

Rendered output is either numbered PNGs (``frame_000000.png`` ...) or a
single uncompressed Y4M stream (4:4:4, full-range BT.601) that ffplay and
mpv accept directly.
"""

from __future__ import annotations

import json
import wave
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InputValidationError
from .render import MouthBank, MouthPatch, Template

FRAME_PATTERN = "frame_{:06d}.png"


# ---------------------------------------------------------------------------
# face bundles


def _load_json(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputValidationError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputValidationError(f"{path}: expected a JSON object")
    return doc


def _load_image(path: Path, mode: str) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert(mode))
    except OSError as exc:
        raise InputValidationError(f"cannot read image {path}: {exc}") from exc


def load_template(bundle_dir) -> Template:
    root = Path(bundle_dir)
    image = _load_image(root / "face.png", "RGB")
    lm = _load_json(root / "landmarks.json")
    for key in ("mouth", "mouth_polygon"):
        if key not in lm:
            raise InputValidationError(
                f"{root / 'landmarks.json'}: missing {key!r}"
            )
    mask_path = root / "head_mask.png"
    head_mask = None
    if mask_path.exists():
        head_mask = _load_image(mask_path, "L").astype(np.float64) / 255.0
    stable = lm.get("stable")
    return Template(
        image=np.ascontiguousarray(image),
        mouth_landmarks=np.asarray(lm["mouth"], dtype=np.float64),
        mouth_polygon=np.asarray(lm["mouth_polygon"], dtype=np.float64),
        stable_landmarks=(np.asarray(stable, dtype=np.float64)
                          if stable else None),
        head_mask=head_mask,
    )


def save_template(template: Template, bundle_dir) -> None:
    root = Path(bundle_dir)
    root.mkdir(parents=True, exist_ok=True)
    Image.fromarray(template.image, "RGB").save(root / "face.png")
    if template.head_mask is not None:
        mask_u8 = np.rint(template.head_mask * 255.0).astype(np.uint8)
        Image.fromarray(mask_u8, "L").save(root / "head_mask.png")
    doc = {
        "mouth": template.mouth_landmarks.tolist(),
        "mouth_polygon": template.mouth_polygon.tolist(),
    }
    if template.stable_landmarks is not None:
        doc["stable"] = template.stable_landmarks.tolist()
    (root / "landmarks.json").write_text(json.dumps(doc, indent=2) + "\n")


def load_mouth_bank(bundle_dir) -> MouthBank:
    root = Path(bundle_dir) / "mouth_bank"
    index = _load_json(root / "bank.json")
    patches = {}
    for viseme, entry in index.items():
        if not isinstance(entry, dict) or "file" not in entry \
                or "anchors" not in entry:
            raise InputValidationError(
                f"{root / 'bank.json'}: entry {viseme!r} needs "
                "'file' and 'anchors'"
            )
        rgba = _load_image(root / entry["file"], "RGBA")
        patches[viseme] = MouthPatch(
            rgba=np.ascontiguousarray(rgba),
            anchors=np.asarray(entry["anchors"], dtype=np.float64),
        )
    return MouthBank(patches)


def save_mouth_bank(bank: MouthBank, bundle_dir) -> None:
    root = Path(bundle_dir) / "mouth_bank"
    root.mkdir(parents=True, exist_ok=True)
    index = {}
    for viseme in bank.visemes():
        patch = bank[viseme]
        fname = f"{viseme.lower()}.png"
        Image.fromarray(patch.rgba, "RGBA").save(root / fname)
        index[viseme] = {
            "file": fname,
            "anchors": patch.anchors.tolist(),
        }
    (root / "bank.json").write_text(json.dumps(index, indent=2) + "\n")


def load_landmark_track(text: str) -> dict[str, np.ndarray]:
    """Parse a per-frame landmark track: ``{"mouth": (T,M,2), "stable": ...}``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputValidationError(f"invalid track JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputValidationError("track must be a JSON object")
    out = {}
    for key in ("mouth", "stable"):
        if key not in doc:
            continue
        arr = np.asarray(doc[key], dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise InputValidationError(
                f"track {key!r} must have shape (frames, points, 2), "
                f"got {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise InputValidationError(f"track {key!r} has non-finite values")
        out[key] = arr
    if not out:
        raise InputValidationError(
            "track contains neither 'mouth' nor 'stable' entries"
        )
    return out


# ---------------------------------------------------------------------------
# frame output


def write_frames_png(frames, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        path = out / FRAME_PATTERN.format(i)
        Image.fromarray(np.ascontiguousarray(frame), "RGB").save(path)
        paths.append(path)
    return paths


def rgb_to_yuv444(frame: np.ndarray) -> np.ndarray:
    """Full-range BT.601 conversion; returns (3, H, W) uint8 planes."""
    rgb = frame.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0
    v = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0
    planes = np.stack([y, u, v])
    return np.clip(np.rint(planes), 0.0, 255.0).astype(np.uint8)


def _fps_fraction(fps: float) -> Fraction:
    frac = Fraction(fps).limit_denominator(1001)
    if frac <= 0:
        raise InputValidationError(f"fps must be positive, got {fps}")
    return frac


def write_y4m(frames, path, fps: float = 30.0) -> None:
    frames = list(frames)
    if not frames:
        raise InputValidationError("no frames to write")
    h, w = frames[0].shape[:2]
    frac = _fps_fraction(fps)
    header = (
        f"YUV4MPEG2 W{w} H{h} F{frac.numerator}:{frac.denominator} "
        "Ip A1:1 C444\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for frame in frames:
            if frame.shape[:2] != (h, w):
                raise InputValidationError(
                    "all frames must share one resolution"
                )
            fh.write(b"FRAME\n")
            fh.write(rgb_to_yuv444(frame).tobytes())


def read_y4m(path) -> tuple[int, int, str, list[np.ndarray]]:
    """Read back a 4:4:4 Y4M file; returns (width, height, fps, yuv frames).
    """
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        if not header.startswith("YUV4MPEG2"):
            raise InputValidationError("not a Y4M stream")
        fields = dict(
            (tok[0], tok[1:]) for tok in header.split()[1:]
        )
        try:
            w = int(fields["W"])
            h = int(fields["H"])
        except (KeyError, ValueError) as exc:
            raise InputValidationError(f"bad Y4M header: {header!r}") from exc
        if fields.get("C", "444") != "444":
            raise InputValidationError(
                f"only C444 streams supported, got C{fields.get('C')}"
            )
        frames = []
        plane = w * h
        while True:
            marker = fh.readline()
            if not marker:
                break
            if not marker.startswith(b"FRAME"):
                raise InputValidationError("corrupt Y4M frame marker")
            raw = fh.read(3 * plane)
            if len(raw) != 3 * plane:
                raise InputValidationError("truncated Y4M frame payload")
            frames.append(
                np.frombuffer(raw, dtype=np.uint8).reshape(3, h, w).copy()
            )
    return w, h, fields.get("F", ""), frames


def wav_duration_s(path) -> float:
    """Duration of a PCM WAV file (used only to cross-check timings)."""
    try:
        with wave.open(str(path), "rb") as wf:
            rate = wf.getframerate()
            if rate <= 0:
                raise InputValidationError(f"{path}: bad sample rate {rate}")
            return wf.getnframes() / rate
    except wave.Error as exc:
        raise InputValidationError(f"{path}: not a valid WAV: {exc}") from exc
    except OSError as exc:
        raise InputValidationError(f"cannot read {path}: {exc}") from exc
