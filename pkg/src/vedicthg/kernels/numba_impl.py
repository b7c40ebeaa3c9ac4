"""Numba-jitted kernel twins of :mod:`vedicthg.kernels.numpy_impl`.

Same signatures, same arithmetic, run as compiled scalar loops.  No fastmath:
IEEE semantics keep results interchangeable with the numpy path.  All kernels
release the GIL so frame-level rendering can thread.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _ramp(u, raised_cosine):
    if raised_cosine:
        return 0.5 * (1.0 - np.cos(np.pi * u))
    return u


@njit(**_JIT)
def pairwise_blend(ts, event_idx, starts, ends, params, delta, lam,
                   raised_cosine, out):
    n = starts.shape[0]
    d = params.shape[1]
    for i in range(ts.shape[0]):
        t = ts[i]
        j = event_idx[i]
        s = starts[j]
        e = ends[j]

        in_start = j > 0 and t < s + delta
        in_end = (not in_start) and j < n - 1 and t > e - delta
        if not (in_start or in_end):
            for k in range(d):
                out[i, k] = params[j, k]
            continue

        if in_start:
            boundary = s
            a_idx = j - 1
            c_idx = j
        else:
            boundary = e
            a_idx = j
            c_idx = j + 1

        if t < boundary:
            u = (t - (boundary - delta)) / delta
            if u < 0.0:
                u = 0.0
            elif u > 1.0:
                u = 1.0
            w_new = _ramp(u, raised_cosine)
            w_old = 1.0
        else:
            v = ((boundary + delta) - t) / delta
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            w_new = 1.0
            w_old = _ramp(v, raised_cosine)
        alpha = w_new / (w_old + w_new)

        for k in range(d):
            a = params[a_idx, k]
            c = params[c_idx, k]
            out[i, k] = (1.0 - alpha) * a + alpha * c \
                + lam * alpha * (1.0 - alpha) * (a * c)
    return out


@njit(**_JIT)
def dominance_blend(ts, starts, ends, params, delta, raised_cosine,
                    neutral, out):
    T = ts.shape[0]
    n = starts.shape[0]
    d = params.shape[1]
    acc = np.zeros((T, d), dtype=np.float64)
    wsum = np.zeros(T, dtype=np.float64)

    for j in range(n):
        s = starts[j]
        e = ends[j]
        lo = np.searchsorted(ts, s - delta, side="left")
        hi = np.searchsorted(ts, e + delta, side="right")
        for i in range(lo, hi):
            t = ts[i]
            if t < s:
                w = _ramp((t - (s - delta)) / delta, raised_cosine)
            elif t > e:
                w = _ramp(((e + delta) - t) / delta, raised_cosine)
            else:
                w = 1.0
            for k in range(d):
                acc[i, k] += w * params[j, k]
            wsum[i] += w

    for i in range(T):
        if wsum[i] > 0.0:
            for k in range(d):
                out[i, k] = acc[i, k] / wsum[i]
        else:
            for k in range(d):
                out[i, k] = neutral[k]
    return out


@njit(**_JIT)
def warp_bilinear_rgba(patch, inv_affine, out):
    rh, rw = out.shape[:2]
    h, w = patch.shape[:2]
    a, b, c, d, e, f = (inv_affine[0], inv_affine[1], inv_affine[2],
                        inv_affine[3], inv_affine[4], inv_affine[5])
    for r in range(rh):
        for q in range(rw):
            xs = a * q + b * r + c
            ys = d * q + e * r + f
            x0 = int(np.floor(xs))
            y0 = int(np.floor(ys))
            fx = xs - x0
            fy = ys - y0
            for ch in range(4):
                p00 = patch[y0, x0, ch] if 0 <= y0 < h and 0 <= x0 < w else 0.0
                p01 = patch[y0, x0 + 1, ch] \
                    if 0 <= y0 < h and 0 <= x0 + 1 < w else 0.0
                p10 = patch[y0 + 1, x0, ch] \
                    if 0 <= y0 + 1 < h and 0 <= x0 < w else 0.0
                p11 = patch[y0 + 1, x0 + 1, ch] \
                    if 0 <= y0 + 1 < h and 0 <= x0 + 1 < w else 0.0
                out[r, q, ch] = (
                    (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01)
                    + fy * ((1.0 - fx) * p10 + fx * p11)
                )
    return out


@njit(**_JIT)
def composite_rgb(base, warped_rgba, mask, out_u8):
    rh, rw = base.shape[:2]
    for r in range(rh):
        for q in range(rw):
            alpha = mask[r, q] * (warped_rgba[r, q, 3] / 255.0)
            for ch in range(3):
                v = alpha * warped_rgba[r, q, ch] \
                    + (1.0 - alpha) * base[r, q, ch]
                v = np.rint(v)
                if v < 0.0:
                    v = 0.0
                elif v > 255.0:
                    v = 255.0
                out_u8[r, q, ch] = np.uint8(v)
    return out_u8


@njit(**_JIT)
def polygon_feather_mask(poly_x, poly_y, x0, y0, out, feather):
    rh, rw = out.shape
    E = poly_x.shape[0]
    for r in range(rh):
        y = y0 + r
        for q in range(rw):
            x = x0 + q
            dist2 = np.inf
            inside = False
            for i in range(E):
                ax = poly_x[i]
                ay = poly_y[i]
                bx = poly_x[(i + 1) % E]
                by = poly_y[(i + 1) % E]
                ex = bx - ax
                ey = by - ay
                seg_len2 = ex * ex + ey * ey
                px = x - ax
                py = y - ay
                if seg_len2 > 0.0:
                    tpar = (px * ex + py * ey) / seg_len2
                    if tpar < 0.0:
                        tpar = 0.0
                    elif tpar > 1.0:
                        tpar = 1.0
                else:
                    tpar = 0.0
                dx = px - tpar * ex
                dy = py - tpar * ey
                d2 = dx * dx + dy * dy
                if d2 < dist2:
                    dist2 = d2
                if (ay > y) != (by > y):
                    xint = ax + (y - ay) / (by - ay) * ex
                    if x < xint:
                        inside = not inside
            sd = np.sqrt(dist2)
            if inside:
                sd = -sd
            if feather <= 0.0:
                out[r, q] = 1.0 if inside else 0.0
            else:
                v = (feather - sd) / (2.0 * feather)
                if v < 0.0:
                    v = 0.0
                elif v > 1.0:
                    v = 1.0
                out[r, q] = v
    return out


@njit(**_JIT)
def masked_affine_rgb(img, mask, background, inv_affine, out_u8):
    H, W = img.shape[:2]
    a, b, c, d, e, f = (inv_affine[0], inv_affine[1], inv_affine[2],
                        inv_affine[3], inv_affine[4], inv_affine[5])
    for r in range(H):
        for q in range(W):
            if mask[r, q] < 0.5:
                for ch in range(3):
                    out_u8[r, q, ch] = img[r, q, ch]
                continue
            xs = a * q + b * r + c
            ys = d * q + e * r + f
            in_bounds = 0.0 <= xs <= W - 1 and 0.0 <= ys <= H - 1
            if in_bounds:
                x0 = int(np.floor(xs))
                y0 = int(np.floor(ys))
                fx = xs - x0
                fy = ys - y0
                x0c = min(max(x0, 0), W - 1)
                x1c = min(max(x0 + 1, 0), W - 1)
                y0c = min(max(y0, 0), H - 1)
                y1c = min(max(y0 + 1, 0), H - 1)
                src_mask = (
                    (1.0 - fy) * ((1.0 - fx) * mask[y0c, x0c]
                                  + fx * mask[y0c, x1c])
                    + fy * ((1.0 - fx) * mask[y1c, x0c]
                            + fx * mask[y1c, x1c])
                )
                if src_mask >= 0.5:
                    for ch in range(3):
                        p00 = float(img[y0c, x0c, ch])
                        p01 = float(img[y0c, x1c, ch])
                        p10 = float(img[y1c, x0c, ch])
                        p11 = float(img[y1c, x1c, ch])
                        v = (
                            (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01)
                            + fy * ((1.0 - fx) * p10 + fx * p11)
                        )
                        v = np.rint(v)
                        if v < 0.0:
                            v = 0.0
                        elif v > 255.0:
                            v = 255.0
                        out_u8[r, q, ch] = np.uint8(v)
                    continue
            for ch in range(3):
                out_u8[r, q, ch] = background[r, q, ch]
    return out_u8
