"""Procedurally generated demo assets.

Nothing here is meant to look photographic; the point is a deterministic,
dependency-free scene with believable geometry (a face with eyes, a mouth
region, landmarks, a head mask) plus a full set of mouth patches so the
whole pipeline can run and be measured without shipping binary fixtures.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .phonetics import (
    PhonemeSegment,
    PhonemeStream,
    parse_lexicon,
    proportional_align,
)
from .render import (
    HeadMotionConfig,
    MouthBank,
    MouthPatch,
    Template,
    head_affine_synth,
    transform_points,
)
from .videoio import save_mouth_bank, save_template
from .visemes import JEFFERS_INVENTORY

SAMPLE_WORDS = [
    ("HELLO", 0.05, 0.50),
    ("WORLD", 0.50, 1.00),
    ("READ", 1.15, 1.55),
    ("ME", 1.55, 1.80),
    ("NOW", 1.80, 2.20),
]
SAMPLE_TOTAL_S = 2.40

SAMPLE_LEXICON = """\
;;; demo excerpt, CMU-style entries with stress digits
BROWN  B R AW1 N
DOG  D AO1 G
FOX  F AA1 K S
HELLO  HH AH0 L OW1
JUMPS  JH AH1 M P S
LAZY  L EY1 Z IY0
ME  M IY1
NOW  N AW1
OVER  OW1 V ER0
QUICK  K W IH1 K
READ  R IY1 D
READ(2)  R EH1 D
SEE  S IY1
SOON  S UW1 N
THE  DH AH0
THE(2)  DH IY0
WORLD  W ER1 L D
YOU  Y UW1
"""


# ---------------------------------------------------------------------------
# face template


def make_template(size: int = 256) -> Template:
    s = float(size)
    im = Image.new("RGB", (size, size))
    draw = ImageDraw.Draw(im)

    # backdrop gradient
    top = np.asarray([52, 58, 72], dtype=np.float64)
    bot = np.asarray([24, 28, 38], dtype=np.float64)
    for y in range(size):
        c = top + (bot - top) * (y / max(size - 1, 1))
        draw.line([(0, y), (size - 1, y)], fill=tuple(int(v) for v in c))

    cx, cy = s * 0.5, s * 0.52
    rx, ry = s * 0.30, s * 0.38
    skin = (222, 188, 160)
    draw.ellipse([cx - rx, cy - ry, cx + rx, cy + ry], fill=skin)
    # hair cap
    draw.chord([cx - rx * 1.02, cy - ry * 1.05, cx + rx * 1.02,
                cy + ry * 0.1], start=180, end=360, fill=(62, 44, 34))

    def eye(ex):
        ey = s * 0.45
        draw.ellipse([ex - s * 0.055, ey - s * 0.028,
                      ex + s * 0.055, ey + s * 0.028], fill=(245, 245, 245))
        draw.ellipse([ex - s * 0.018, ey - s * 0.018,
                      ex + s * 0.018, ey + s * 0.018], fill=(40, 30, 28))
        draw.line([ex - s * 0.06, ey - s * 0.055,
                   ex + s * 0.06, ey - s * 0.062], fill=(70, 50, 40), width=3)

    eye(s * 0.38)
    eye(s * 0.62)

    # nose
    draw.line([s * 0.5, s * 0.47, s * 0.47, s * 0.585], fill=(180, 140, 118),
              width=3)
    draw.line([s * 0.47, s * 0.585, s * 0.52, s * 0.595],
              fill=(180, 140, 118), width=3)

    # neutral closed lips
    mx, my = s * 0.5, s * 0.68
    hw, hh = s * 0.085, s * 0.022
    draw.ellipse([mx - hw, my - hh, mx + hw, my + hh], fill=(158, 84, 80))
    draw.line([mx - hw * 0.9, my, mx + hw * 0.9, my], fill=(96, 44, 44),
              width=2)

    image = np.asarray(im, dtype=np.uint8).copy()

    # head mask: same ellipse, slightly padded
    yy, xx = np.mgrid[0:size, 0:size]
    mask = (((xx - cx) / (rx * 1.04)) ** 2
            + ((yy - cy) / (ry * 1.04)) ** 2) <= 1.0
    head_mask = mask.astype(np.float64)

    mouth = []
    for ang in range(0, 360, 45):
        a = math.radians(ang)
        mouth.append([mx + hw * math.cos(a), my + hh * 1.6 * math.sin(a)])
    mouth_landmarks = np.asarray(mouth)

    poly = []
    for ang in range(0, 360, 45):
        a = math.radians(ang + 22.5)
        poly.append([mx + hw * 1.45 * math.cos(a),
                     my + hh * 3.4 * math.sin(a)])
    mouth_polygon = np.asarray(poly)

    stable = np.asarray([
        [s * 0.325, s * 0.45], [s * 0.435, s * 0.45],   # left eye corners
        [s * 0.565, s * 0.45], [s * 0.675, s * 0.45],   # right eye corners
        [s * 0.38, s * 0.45], [s * 0.62, s * 0.45],     # pupils
        [s * 0.32, s * 0.39], [s * 0.44, s * 0.385],    # left brow
        [s * 0.56, s * 0.385], [s * 0.68, s * 0.39],    # right brow
        [s * 0.5, s * 0.47], [s * 0.495, s * 0.59],     # nose bridge / tip
        [s * 0.5, s * 0.20], [s * 0.5, s * 0.88],       # forehead / chin
    ])

    return Template(
        image=image,
        mouth_landmarks=mouth_landmarks,
        mouth_polygon=mouth_polygon,
        stable_landmarks=stable,
        head_mask=head_mask,
    )


# ---------------------------------------------------------------------------
# mouth bank

# viseme -> (inner opening 0..1, width 0..1, rounding 0..1, show teeth)
_PATCH_SHAPES = {
    "NEUTRAL": (0.05, 0.90, 0.20, False),
    "BILABIAL": (0.00, 0.85, 0.15, False),
    "LABIODENTAL": (0.15, 0.90, 0.10, True),
    "DENTAL": (0.25, 0.90, 0.10, True),
    "ALVEOLAR": (0.30, 0.85, 0.15, True),
    "POSTALVEOLAR": (0.25, 0.70, 0.50, True),
    "VELAR": (0.35, 0.80, 0.20, False),
    "FRICATIVE_S": (0.15, 0.95, 0.05, True),
    "OPEN_VOWEL": (0.90, 0.80, 0.30, True),
    "MID_VOWEL": (0.55, 0.90, 0.20, True),
    "CLOSE_VOWEL": (0.25, 1.00, 0.05, True),
    "ROUNDED": (0.45, 0.55, 0.90, False),
    "DIPHTHONG_AW": (0.80, 0.65, 0.60, True),
    "DIPHTHONG_AY": (0.85, 0.90, 0.15, True),
}

PATCH_W, PATCH_H = 64, 44


def _draw_patch(open_frac: float, width_frac: float, round_frac: float,
                teeth: bool) -> MouthPatch:
    im = Image.new("RGBA", (PATCH_W, PATCH_H), (0, 0, 0, 0))
    draw = ImageDraw.Draw(im)
    cxc = (PATCH_W - 1) / 2.0
    cyc = (PATCH_H - 1) / 2.0

    hw = (PATCH_W * 0.46) * (width_frac * (1.0 - 0.25 * round_frac))
    lip = 3.0 + 2.0 * round_frac
    gap = 1.0 + open_frac * (PATCH_H * 0.38)
    hh = gap + lip

    draw.ellipse([cxc - hw, cyc - hh, cxc + hw, cyc + hh], fill=(150, 78, 76))
    if open_frac > 0.02:
        iw = hw - lip - 1.0
        ih = gap
        if iw > 1.0 and ih > 0.5:
            draw.ellipse([cxc - iw, cyc - ih, cxc + iw, cyc + ih],
                         fill=(52, 20, 22))
            if teeth and ih > 2.5:
                draw.ellipse([cxc - iw * 0.85, cyc - ih * 0.9,
                              cxc + iw * 0.85, cyc - ih * 0.25],
                             fill=(235, 230, 218))
    else:
        draw.line([cxc - hw * 0.85, cyc, cxc + hw * 0.85, cyc],
                  fill=(92, 42, 42), width=2)

    # anchors: lip corners and mid top/bottom, symmetric about the centre
    anchors = np.asarray([
        [cxc - hw, cyc],
        [cxc + hw, cyc],
        [cxc, cyc - hh],
        [cxc, cyc + hh],
    ])
    return MouthPatch(rgba=np.asarray(im, dtype=np.uint8).copy(),
                      anchors=anchors)


def make_mouth_bank() -> MouthBank:
    patches = {}
    for viseme in JEFFERS_INVENTORY:
        patches[viseme] = _draw_patch(*_PATCH_SHAPES[viseme])
    return MouthBank(patches)


# ---------------------------------------------------------------------------
# timing / tracks


def make_sample_stream() -> PhonemeStream:
    lex = parse_lexicon(SAMPLE_LEXICON)
    stream = proportional_align(SAMPLE_WORDS, lex)
    segs = list(stream.segments)
    # bracket with explicit silences so the stream spans [0, SAMPLE_TOTAL_S]
    segs.insert(0, PhonemeSegment("SIL", 0.0, SAMPLE_WORDS[0][1]))
    segs.append(PhonemeSegment("SIL", segs[-1].end_s, SAMPLE_TOTAL_S))
    return PhonemeStream.from_segments(segs)


def make_jitter_track(template: Template, num_frames: int,
                      sigma_px: float, seed: int = 0) -> np.ndarray:
    """Mouth landmarks with i.i.d. Gaussian jitter, for stability tests."""
    rng = np.random.default_rng(seed)
    base = template.mouth_landmarks[None, :, :]
    noise = rng.normal(0.0, sigma_px, size=(num_frames,) + base.shape[1:])
    return base + noise


def make_stable_track(template: Template, times,
                      head: HeadMotionConfig | None = None) -> np.ndarray:
    """Stable-landmark positions following the synthesized head sway."""
    if template.stable_landmarks is None or template.head_mask is None:
        raise ValueError("template lacks stable landmarks or head mask")
    head = head or HeadMotionConfig()
    ys, xs = np.nonzero(template.head_mask >= 0.5)
    centroid = (float(xs.mean()), float(ys.mean()))
    out = np.empty((len(times),) + template.stable_landmarks.shape)
    for k, t in enumerate(times):
        fwd = head_affine_synth(float(t), head, centroid)
        out[k] = transform_points(template.stable_landmarks, fwd)
    return out


def write_sample_bundle(out_dir, size: int = 256,
                        track_frames: int = 72) -> Path:
    """Write a complete runnable bundle: face, bank, lexicon, timing, track.
    """
    from .phonetics import serialize_alignment

    root = Path(out_dir)
    template = make_template(size)
    save_template(template, root)
    save_mouth_bank(make_mouth_bank(), root)
    (root / "lexicon.txt").write_text(SAMPLE_LEXICON)

    stream = make_sample_stream()
    (root / "timing.json").write_text(serialize_alignment(stream))

    times = np.arange(track_frames) / 30.0
    stable = make_stable_track(template, times)
    (root / "track.json").write_text(json.dumps(
        {"stable": stable.tolist()}) + "\n")
    return root
