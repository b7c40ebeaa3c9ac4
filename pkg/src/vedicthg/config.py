"""Run configuration, ablation levels, and the output manifest.

One :class:`RunConfig` carries every tunable the CLI exposes.  Values merge
in a fixed order: built-in defaults, then a JSON config file, then explicit
command-line flags.  Ablation levels are cumulative feature sets used to
isolate what each rendering stage contributes:

====  =======================================================
A0    mouth patch selection only (no warps, no smoothing)
A1    A0 plus jaw-driven vertical patch scaling
A2    A1 plus lip-width horizontal scaling
A3    A2 plus box smoothing (the EMA with the configured beta)
A4    A3 plus synthesized head motion
====  =======================================================
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from ._version import __version__
from .errors import ConfigError, InputValidationError
from .coart import BlendConfig, WindowConfig
from .render import HeadMotionConfig, RenderConfig

ABLATION_LEVELS = ("A0", "A1", "A2", "A3", "A4")

_WINDOW_ALIASES = {
    "tri": "triangular", "triangular": "triangular",
    "cos": "raised_cosine", "raised_cosine": "raised_cosine",
}
_MODE_ALIASES = {
    "vedic": "vedic_pairwise", "vedic_pairwise": "vedic_pairwise",
    "dominance": "dominance_weighted",
    "dominance_weighted": "dominance_weighted",
}
_HEAD_ALIASES = {
    "off": "off",
    "synth": "synthesized", "synthesized": "synthesized",
    "tracked": "tracked",
}


def _alias(table: dict[str, str], value: str, what: str) -> str:
    try:
        return table[str(value).strip().lower()]
    except KeyError:
        raise ConfigError(
            f"unknown {what} {value!r}; choose from "
            f"{sorted(set(table.values()))}"
        ) from None


@dataclass
class RunConfig:
    frame_rate_hz: float = 30.0
    delta_ms: float = 40.0
    lam: float = 0.2
    beta: float = 0.85
    window: str = "triangular"
    blend_mode: str = "vedic_pairwise"
    head_mode: str = "off"
    feather_px: float = 2.0
    padding_scale: float = 1.15
    use_mouth_bank: bool = True
    jaw_warp: bool = True
    cheek_warp: bool = True
    merge_adjacent: bool = False
    out_format: str = "png"
    ablation: str | None = None

    def normalized(self) -> "RunConfig":
        cfg = dataclasses.replace(
            self,
            window=_alias(_WINDOW_ALIASES, self.window, "window shape"),
            blend_mode=_alias(_MODE_ALIASES, self.blend_mode, "blend mode"),
            head_mode=_alias(_HEAD_ALIASES, self.head_mode, "head mode"),
        )
        if cfg.out_format not in ("png", "y4m"):
            raise ConfigError(
                f"out_format must be 'png' or 'y4m', got {cfg.out_format!r}"
            )
        if cfg.ablation is not None:
            level = str(cfg.ablation).upper()
            if level not in ABLATION_LEVELS:
                raise ConfigError(
                    f"ablation must be one of {ABLATION_LEVELS}, "
                    f"got {cfg.ablation!r}"
                )
            cfg = _apply_ablation(cfg, level)
        try:
            cfg.window_config()
            cfg.blend_config()
            cfg.render_config()
        except InputValidationError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def window_config(self) -> WindowConfig:
        return WindowConfig(delta_s=self.delta_ms / 1000.0, shape=self.window)

    def blend_config(self) -> BlendConfig:
        return BlendConfig(lam=self.lam, mode=self.blend_mode)

    def render_config(self) -> RenderConfig:
        return RenderConfig(
            beta=self.beta,
            padding_scale=self.padding_scale,
            feather_px=self.feather_px,
            use_mouth_bank=self.use_mouth_bank,
            jaw_warp=self.jaw_warp,
            cheek_warp=self.cheek_warp,
            head_mode=self.head_mode,
            head=HeadMotionConfig(),
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _apply_ablation(cfg: RunConfig, level: str) -> RunConfig:
    rank = ABLATION_LEVELS.index(level)
    return dataclasses.replace(
        cfg,
        ablation=level,
        jaw_warp=rank >= 1,
        cheek_warp=rank >= 2,
        beta=cfg.beta if rank >= 3 else 0.0,
        head_mode="synthesized" if rank >= 4 else "off",
    )


def ablation_config(base: RunConfig, level: str) -> RunConfig:
    """The base config with one ablation level applied and validated."""
    return dataclasses.replace(base, ablation=level).normalized()


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config_file(path) -> dict:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    unknown = set(doc) - _FIELD_NAMES
    if unknown:
        raise ConfigError(
            f"{p}: unknown config keys {sorted(unknown)}"
        )
    return doc


def merge_config(file_values: dict | None,
                 cli_values: dict | None) -> RunConfig:
    """Defaults, then config-file values, then CLI flags (None = not given).
    """
    merged: dict = {}
    if file_values:
        merged.update(file_values)
    if cli_values:
        merged.update({k: v for k, v in cli_values.items() if v is not None})
    try:
        cfg = RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(f"bad config values: {exc}") from exc
    return cfg.normalized()


# ---------------------------------------------------------------------------
# manifest


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(cfg: RunConfig, *, inputs: dict[str, str],
                   stage_ms: dict[str, float], backend: str, threads: int,
                   resolution: tuple[int, int], num_frames: int,
                   roi_union=None, extra: dict | None = None) -> dict:
    doc = {
        "tool": "vedicthg",
        "version": __version__,
        "config": cfg.as_dict(),
        "inputs_sha256": dict(inputs),
        "backend": backend,
        "threads": threads,
        "resolution": list(resolution),
        "num_frames": num_frames,
        "roi_union": list(roi_union) if roi_union is not None else None,
        "stage_ms": {k: round(v, 3) for k, v in stage_ms.items()},
    }
    if extra:
        doc.update(extra)
    return doc


def write_manifest(doc: dict, out_dir) -> Path:
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
