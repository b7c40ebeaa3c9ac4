"""Kernel backend selection.

Two interchangeable implementations of the numeric hot loops live here:

* :mod:`vedicthg.kernels.numpy_impl` -- vectorized reference, always available
* :mod:`vedicthg.kernels.numba_impl` -- jitted twins, used when numba imports

The active one is picked once at import time from ``VEDICTHG_BACKEND``:

* ``auto`` (default) -- numba if importable, else numpy
* ``numba`` -- require numba, raise if missing
* ``numpy`` -- force the reference path

Both produce bit-identical results; the env var only trades speed.
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import numpy_impl

_CHOICES = ("auto", "numba", "numpy")


def _select() -> tuple[str, object]:
    requested = os.environ.get("VEDICTHG_BACKEND", "auto").strip().lower()
    if requested not in _CHOICES:
        raise ConfigError(
            f"VEDICTHG_BACKEND must be one of {_CHOICES}, got {requested!r}"
        )
    if requested == "numpy":
        return "numpy", numpy_impl
    try:
        from . import numba_impl
    except ImportError:
        if requested == "numba":
            raise ConfigError(
                "VEDICTHG_BACKEND=numba but numba is not importable"
            ) from None
        return "numpy", numpy_impl
    return "numba", numba_impl


BACKEND_NAME, _impl = _select()

pairwise_blend = _impl.pairwise_blend
dominance_blend = _impl.dominance_blend
warp_bilinear_rgba = _impl.warp_bilinear_rgba
composite_rgb = _impl.composite_rgb
polygon_feather_mask = _impl.polygon_feather_mask
masked_affine_rgb = _impl.masked_affine_rgb

__all__ = [
    "BACKEND_NAME",
    "numpy_impl",
    "pairwise_blend",
    "dominance_blend",
    "warp_bilinear_rgba",
    "composite_rgb",
    "polygon_feather_mask",
    "masked_affine_rgb",
]
