"""Pure-numpy kernel implementations.

These are the reference path: the numba twins in ``numba_impl`` must produce
identical results.  Each function is vectorized but keeps the same arithmetic
order as the scalar loops so the two backends agree bitwise.

Geometry conventions: pixel (row r, col c) sits at coordinate (x=c, y=r);
affine maps are flat ``[a, b, c, d, e, f]`` arrays applying
``x' = a*x + b*y + c``, ``y' = d*x + e*y + f``.
"""

from __future__ import annotations

import numpy as np


def _ramp(u: np.ndarray, raised_cosine: bool) -> np.ndarray:
    if raised_cosine:
        return 0.5 * (1.0 - np.cos(np.pi * u))
    return u


def pairwise_blend(ts, event_idx, starts, ends, params, delta, lam,
                   raised_cosine, out):
    """Two-term cross-term blend along a schedule.

    For each sample: inside a boundary window of half-width ``delta`` the
    previous/next event params are mixed with the normalized crossfade alpha
    and a multiplicative cross term ``lam * alpha * (1-alpha) * (a*c)``;
    elsewhere the containing event's params pass through.
    """
    n = starts.shape[0]
    t = ts
    j = event_idx
    s = starts[j]
    e = ends[j]

    in_start = (j > 0) & (t < s + delta)
    in_end = (~in_start) & (j < n - 1) & (t > e - delta)

    boundary = np.where(in_start, s, e)
    a_idx = np.where(in_start, j - 1, j)
    c_idx = np.where(in_start, j, np.minimum(j + 1, n - 1))

    before = t < boundary
    u = (t - (boundary - delta)) / delta
    v = ((boundary + delta) - t) / delta
    w_new = np.where(before, _ramp(np.clip(u, 0.0, 1.0), raised_cosine), 1.0)
    w_old = np.where(before, 1.0, _ramp(np.clip(v, 0.0, 1.0), raised_cosine))
    alpha = w_new / (w_old + w_new)

    a = params[a_idx]
    c = params[c_idx]
    al = alpha[:, None]
    blended = (1.0 - al) * a + al * c + lam * al * (1.0 - al) * (a * c)

    window = (in_start | in_end)[:, None]
    out[:] = np.where(window, blended, params[j])
    return out


def dominance_blend(ts, starts, ends, params, delta, raised_cosine,
                    neutral, out):
    """Normalized dominance-weighted blend over all events whose window
    (event interval padded by ``delta``) contains each sample time."""
    T = ts.shape[0]
    d = params.shape[1]
    acc = np.zeros((T, d), dtype=np.float64)
    wsum = np.zeros(T, dtype=np.float64)

    for j in range(starts.shape[0]):
        s = starts[j]
        e = ends[j]
        lo = np.searchsorted(ts, s - delta, side="left")
        hi = np.searchsorted(ts, e + delta, side="right")
        if lo >= hi:
            continue
        t = ts[lo:hi]
        w = np.ones(t.shape[0], dtype=np.float64)
        rising = t < s
        falling = t > e
        w[rising] = _ramp((t[rising] - (s - delta)) / delta, raised_cosine)
        w[falling] = _ramp(((e + delta) - t[falling]) / delta, raised_cosine)
        acc[lo:hi] += w[:, None] * params[j]
        wsum[lo:hi] += w

    covered = wsum > 0.0
    out[covered] = acc[covered] / wsum[covered, None]
    out[~covered] = neutral
    return out


def warp_bilinear_rgba(patch, inv_affine, out):
    """Inverse-map ``out``'s pixel grid into ``patch`` and bilinearly sample
    RGBA; samples outside the patch are fully transparent."""
    rh, rw = out.shape[:2]
    h, w = patch.shape[:2]
    a, b, c, d, e, f = inv_affine

    x = np.arange(rw, dtype=np.float64)[None, :]
    y = np.arange(rh, dtype=np.float64)[:, None]
    xs = a * x + b * y + c
    ys = d * x + e * y + f

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    def corner(yy, xx):
        valid = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = patch[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return np.where(valid[..., None], vals, 0.0)

    p00 = corner(y0, x0)
    p01 = corner(y0, x0 + 1)
    p10 = corner(y0 + 1, x0)
    p11 = corner(y0 + 1, x0 + 1)

    fx = fx[..., None]
    fy = fy[..., None]
    out[:] = (
        (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01)
        + fy * ((1.0 - fx) * p10 + fx * p11)
    )
    return out


def composite_rgb(base, warped_rgba, mask, out_u8):
    """Alpha-composite a warped RGBA patch over a base crop.

    Effective alpha is ``mask * patch_alpha``; the result is quantized with
    round-half-to-even for cross-platform reproducibility.
    """
    alpha = mask * (warped_rgba[..., 3] / 255.0)
    al = alpha[..., None]
    blended = al * warped_rgba[..., :3] + (1.0 - al) * base
    out_u8[:] = np.clip(np.rint(blended), 0.0, 255.0).astype(np.uint8)
    return out_u8


def polygon_feather_mask(poly_x, poly_y, x0, y0, out, feather):
    """Feathered polygon coverage on a pixel grid starting at (x0, y0).

    Coverage is 1 deeper than ``feather`` inside the polygon, 0 further than
    ``feather`` outside, and linear in signed distance between; with zero
    feather it is a hard even-odd rasterization.
    """
    rh, rw = out.shape
    E = poly_x.shape[0]
    x = x0 + np.arange(rw, dtype=np.float64)[None, :]
    y = y0 + np.arange(rh, dtype=np.float64)[:, None]

    dist2 = np.full((rh, rw), np.inf)
    inside = np.zeros((rh, rw), dtype=bool)
    for i in range(E):
        ax, ay = poly_x[i], poly_y[i]
        bx, by = poly_x[(i + 1) % E], poly_y[(i + 1) % E]
        ex, ey = bx - ax, by - ay
        seg_len2 = ex * ex + ey * ey
        px, py = x - ax, y - ay
        tpar = np.clip((px * ex + py * ey) / seg_len2, 0.0, 1.0) if seg_len2 > 0 else 0.0
        dx = px - tpar * ex
        dy = py - tpar * ey
        dist2 = np.minimum(dist2, dx * dx + dy * dy)
        # even-odd crossing test against the ray x -> +inf
        crosses = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (y - ay) / (by - ay) * ex
        inside ^= crosses & (x < xint)

    sd = np.sqrt(dist2)
    sd = np.where(inside, -sd, sd)
    if feather <= 0.0:
        out[:] = inside.astype(np.float64)
    else:
        out[:] = np.clip((feather - sd) / (2.0 * feather), 0.0, 1.0)
    return out


def masked_affine_rgb(img, mask, background, inv_affine, out_u8):
    """Move the masked region of ``img`` by an affine transform.

    Pixels outside the mask copy through untouched; masked pixels sample the
    source image where the inverse-mapped location is still masked, and fall
    back to ``background`` where the motion disoccludes them.
    """
    H, W = img.shape[:2]
    a, b, c, d, e, f = inv_affine
    imgf = img.astype(np.float64)

    x = np.arange(W, dtype=np.float64)[None, :]
    y = np.arange(H, dtype=np.float64)[:, None]
    xs = a * x + b * y + c
    ys = d * x + e * y + f

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    x0c = np.clip(x0, 0, W - 1)
    x1c = np.clip(x0 + 1, 0, W - 1)
    y0c = np.clip(y0, 0, H - 1)
    y1c = np.clip(y0 + 1, 0, H - 1)
    in_bounds = (xs >= 0) & (xs <= W - 1) & (ys >= 0) & (ys <= H - 1)

    def sample(plane):
        p00 = plane[y0c, x0c]
        p01 = plane[y0c, x1c]
        p10 = plane[y1c, x0c]
        p11 = plane[y1c, x1c]
        return (
            (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01)
            + fy * ((1.0 - fx) * p10 + fx * p11)
        )

    src_mask = sample(mask)
    use_warp = (mask >= 0.5) & in_bounds & (src_mask >= 0.5)
    keep = mask < 0.5

    warped = np.stack([sample(imgf[..., ch]) for ch in range(3)], axis=-1)
    warped_u8 = np.clip(np.rint(warped), 0.0, 255.0).astype(np.uint8)

    out_u8[:] = background
    out_u8[use_warp] = warped_u8[use_warp]
    out_u8[keep] = img[keep]
    return out_u8
