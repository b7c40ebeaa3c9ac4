"""Command-line interface.

Subcommands: ``synth`` (render frames), ``bench`` (runtime measurement),
``metrics`` (sync/stability/identity numbers), ``ablate`` (feature-level
comparison), ``validate`` (check inputs), ``demo-assets`` (generate a
runnable sample bundle).

Exit codes: 0 success, 2 configuration problems, 3 invalid input data,
4 pipeline failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from ._version import __version__
from .bench import runtime_bench
from .coart import sample_trajectory, save_trajectory
from .config import (
    ABLATION_LEVELS,
    RunConfig,
    ablation_config,
    build_manifest,
    load_config_file,
    merge_config,
    sha256_file,
    write_manifest,
)
from .errors import (
    AlignmentError,
    ConfigError,
    InputValidationError,
    LexiconParseError,
    PipelineError,
    UnknownWordError,
)
from .metrics import (
    export_cdf,
    identity_drift,
    identity_outside_roi,
    mean_l1_flicker,
    sync_accuracy,
)
from .phonetics import (
    CONSONANTS,
    PhonemeSegment,
    PhonemeStream,
    VOWELS,
    ingest_alignment,
    lookup_pronunciation,
    parse_lexicon,
    proportional_align,
)
from .render import render_sequence, resolve_threads
from .sample_assets import make_jitter_track, write_sample_bundle
from .videoio import (
    load_landmark_track,
    load_mouth_bank,
    load_template,
    wav_duration_s,
    write_frames_png,
    write_y4m,
)
from .visemes import (
    builtin_jeffers_map,
    load_param_bank,
    load_viseme_map,
    map_phonemes_to_visemes,
)


# ---------------------------------------------------------------------------
# argument plumbing


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tuning")
    g.add_argument("--config", metavar="JSON",
                   help="config file; flags given here override it")
    g.add_argument("--fv", type=float, dest="fv", metavar="HZ",
                   help="output frame rate (default 30)")
    g.add_argument("--delta-ms", type=float, metavar="MS",
                   help="coarticulation window half-width (default 40)")
    g.add_argument("--lambda", type=float, dest="lam", metavar="L",
                   help="cross-term strength (default 0.2)")
    g.add_argument("--beta", type=float, metavar="B",
                   help="box smoothing factor in [0,1) (default 0.85)")
    g.add_argument("--window", choices=["tri", "cos"],
                   help="dominance ramp shape (default tri)")
    g.add_argument("--mode", choices=["vedic", "dominance"],
                   help="blending mode (default vedic)")
    g.add_argument("--no-vedic", action="store_true",
                   help="shorthand for --lambda 0")
    g.add_argument("--head", choices=["off", "synth", "tracked"],
                   help="head motion mode (default off)")
    g.add_argument("--feather-px", type=float, metavar="PX",
                   help="mask edge softness (default 2)")
    g.add_argument("--merge", action="store_const", const=True,
                   dest="merge", help="merge adjacent same-class visemes")
    g.add_argument("--ablation", choices=list(ABLATION_LEVELS),
                   help="apply a cumulative feature level")
    g.add_argument("--format", choices=["png", "y4m"],
                   help="frame output format (default png)")


def _add_input_flags(p: argparse.ArgumentParser, need_assets=True) -> None:
    g = p.add_argument_group("inputs")
    if need_assets:
        g.add_argument("--assets", required=True, metavar="DIR",
                       help="face bundle directory")
    g.add_argument("--timing", metavar="JSON",
                   help="phoneme timing file "
                        "(default: <assets>/timing.json when present)")
    g.add_argument("--text", metavar="WORDS",
                   help="synthesize timings for these words via the lexicon")
    g.add_argument("--lexicon", metavar="FILE",
                   help="pronunciation lexicon "
                        "(default: <assets>/lexicon.txt)")
    g.add_argument("--viseme-map", metavar="FILE",
                   help="custom phoneme->viseme table "
                        "(default: built-in inventory)")
    g.add_argument("--track", metavar="JSON",
                   help="per-frame landmark track "
                        "(required for --head tracked)")
    g.add_argument("--audio", metavar="WAV",
                   help="reference audio; only its duration is checked")


def _collect_cli_config(args) -> dict:
    values = {
        "frame_rate_hz": args.fv,
        "delta_ms": args.delta_ms,
        "lam": args.lam,
        "beta": args.beta,
        "window": args.window,
        "blend_mode": args.mode,
        "head_mode": args.head,
        "feather_px": args.feather_px,
        "merge_adjacent": args.merge,
        "ablation": args.ablation,
        "out_format": getattr(args, "format", None),
    }
    if args.no_vedic:
        values["lam"] = 0.0
    return values


def _build_config(args) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else None
    return merge_config(file_values, _collect_cli_config(args))


_SPW = 0.09  # seconds per phoneme weight unit for --text timings


def _stream_from_text(text: str, lexicon_path: Path) -> PhonemeStream:
    try:
        lex_text = lexicon_path.read_text()
    except OSError as exc:
        raise InputValidationError(
            f"cannot read lexicon {lexicon_path}: {exc}"
        ) from exc
    lex = parse_lexicon(lex_text)
    words = text.split()
    if not words:
        raise InputValidationError("--text contains no words")

    def weight(word: str) -> float:
        phones = lookup_pronunciation(lex, word)
        return sum(1.5 if p in VOWELS else 1.0 if p in CONSONANTS else 0.5
                   for p in phones)

    lead = 0.1
    t = lead
    windows = []
    for word in words:
        dur = weight(word) * _SPW
        windows.append((word, t, t + dur))
        t += dur
    stream = proportional_align(windows, lex)
    segs = [PhonemeSegment("SIL", 0.0, lead), *stream.segments]
    segs.append(PhonemeSegment("SIL", segs[-1].end_s, segs[-1].end_s + 0.1))
    return PhonemeStream.from_segments(segs)


def _load_stream(args, assets: Path) -> tuple[PhonemeStream, dict[str, str]]:
    """Resolve the phoneme stream plus sha256 entries for the manifest."""
    hashes: dict[str, str] = {}
    if args.text is not None and args.timing is not None:
        raise ConfigError("give either --text or --timing, not both")
    if args.text is not None:
        lex_path = Path(args.lexicon) if args.lexicon \
            else assets / "lexicon.txt"
        stream = _stream_from_text(args.text, lex_path)
        if lex_path.exists():
            hashes["lexicon"] = sha256_file(lex_path)
        return stream, hashes
    timing = Path(args.timing) if args.timing else assets / "timing.json"
    if not timing.exists():
        raise InputValidationError(
            f"no timing input: {timing} not found and no --text given"
        )
    try:
        text = timing.read_text()
    except OSError as exc:
        raise InputValidationError(
            f"cannot read timing {timing}: {exc}"
        ) from exc
    hashes["timing"] = sha256_file(timing)
    return ingest_alignment(text), hashes


def _load_scene(args):
    assets = Path(args.assets)
    template = load_template(assets)
    bank = load_mouth_bank(assets)
    return assets, template, bank


def _load_tracks(args, template, num_frames):
    mouth_track = stable_track = None
    if args.track:
        try:
            text = Path(args.track).read_text()
        except OSError as exc:
            raise InputValidationError(
                f"cannot read track {args.track}: {exc}"
            ) from exc
        track = load_landmark_track(text)
        mouth_track = track.get("mouth")
        stable_track = track.get("stable")
        for name, arr in (("mouth", mouth_track), ("stable", stable_track)):
            if arr is not None and arr.shape[0] < num_frames:
                raise InputValidationError(
                    f"track {name!r} has {arr.shape[0]} frames, "
                    f"need {num_frames}"
                )
        if mouth_track is not None:
            mouth_track = mouth_track[:num_frames]
        if stable_track is not None:
            stable_track = stable_track[:num_frames]
    return mouth_track, stable_track


def _check_audio(args, stream) -> dict[str, str]:
    if not args.audio:
        return {}
    dur = wav_duration_s(args.audio)
    drift = abs(dur - stream.total_duration_s)
    if drift > 0.050:
        print(
            f"warning: audio duration {dur:.3f}s differs from timings "
            f"{stream.total_duration_s:.3f}s by {drift * 1000:.0f} ms",
            file=sys.stderr,
        )
    return {"audio": sha256_file(args.audio)}


def _viseme_map(args):
    if getattr(args, "viseme_map", None):
        try:
            text = Path(args.viseme_map).read_text()
        except OSError as exc:
            raise InputValidationError(
                f"cannot read viseme map {args.viseme_map}: {exc}"
            ) from exc
        return load_viseme_map(text)
    return builtin_jeffers_map()


def _run_pipeline(cfg: RunConfig, template, bank, stream, vmap,
                  mouth_track=None, stable_track=None):
    """Schedule, blend, render; returns (traj, result, stage_ms)."""
    stage_ms: dict[str, float] = {}
    bank_params = load_param_bank()

    t0 = time.perf_counter()
    schedule = map_phonemes_to_visemes(
        stream, vmap, merge_adjacent=cfg.merge_adjacent,
        param_bank=bank_params)
    stage_ms["scheduling"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    traj = sample_trajectory(schedule, cfg.frame_rate_hz,
                             cfg.window_config(), cfg.blend_config())
    stage_ms["blending"] = (time.perf_counter() - t0) * 1000.0

    if mouth_track is not None and mouth_track.shape[0] != traj.num_frames:
        mouth_track = mouth_track[:traj.num_frames]
    if stable_track is not None and stable_track.shape[0] != traj.num_frames:
        stable_track = stable_track[:traj.num_frames]

    t0 = time.perf_counter()
    try:
        result = render_sequence(template, bank, traj, cfg.render_config(),
                                 mouth_track=mouth_track,
                                 stable_track=stable_track)
    except InputValidationError:
        raise
    except Exception as exc:  # numerical/unexpected -> pipeline failure
        raise PipelineError("rendering", str(exc)) from exc
    stage_ms["rendering"] = (time.perf_counter() - t0) * 1000.0
    return traj, result, stage_ms


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args) -> int:
    cfg = _build_config(args)
    assets, template, bank = _load_scene(args)
    stream, hashes = _load_stream(args, assets)
    hashes["face.png"] = sha256_file(assets / "face.png")
    hashes["bank.json"] = sha256_file(assets / "mouth_bank" / "bank.json")
    hashes.update(_check_audio(args, stream))
    if args.config:
        hashes["config"] = sha256_file(args.config)
    vmap = _viseme_map(args)

    # head tracking needs per-frame landmarks before the frame count is
    # known; probe with the nominal count and trim later
    probe_frames = int(np.ceil(stream.total_duration_s * cfg.frame_rate_hz))
    mouth_track, stable_track = _load_tracks(args, template, probe_frames)
    if cfg.head_mode == "tracked" and stable_track is None:
        raise ConfigError("--head tracked requires --track with 'stable'")
    if args.track:
        hashes["track"] = sha256_file(args.track)

    traj, result, stage_ms = _run_pipeline(
        cfg, template, bank, stream, vmap, mouth_track, stable_track)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if cfg.out_format == "y4m":
        target = out / "frames.y4m"
        write_y4m(result.frames, target, fps=cfg.frame_rate_hz)
    else:
        write_frames_png(result.frames, out)
        target = out
    stage_ms["io"] = (time.perf_counter() - t0) * 1000.0

    if args.save_traj:
        Path(args.save_traj).write_text(save_trajectory(traj))

    manifest = build_manifest(
        cfg, inputs=hashes, stage_ms=stage_ms,
        backend=kernels.BACKEND_NAME, threads=resolve_threads(),
        resolution=template.size, num_frames=traj.num_frames,
        roi_union=result.roi_union,
    )
    write_manifest(manifest, out)

    print(f"rendered {traj.num_frames} frames "
          f"({template.size[0]}x{template.size[1]}, "
          f"{cfg.frame_rate_hz:g} fps) -> {target}")
    print(f"backend {kernels.BACKEND_NAME}, roi union {result.roi_union}")
    for stage, ms in stage_ms.items():
        print(f"  {stage:<11} {ms:8.1f} ms")
    return 0


def _cmd_bench(args) -> int:
    cfg = _build_config(args)
    assets, template, bank = _load_scene(args)
    stream, _ = _load_stream(args, assets)
    vmap = _viseme_map(args)

    writer = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if cfg.out_format == "y4m":
            def writer(frames):
                write_y4m(frames, out / "frames.y4m",
                          fps=cfg.frame_rate_hz)
        else:
            def writer(frames):
                write_frames_png(frames, out)

    report, _result = runtime_bench(
        template, bank, stream,
        mode=args.bench_mode,
        frame_rate_hz=cfg.frame_rate_hz,
        window=cfg.window_config(),
        blend=cfg.blend_config(),
        render_cfg=cfg.render_config(),
        vmap=vmap,
        warmup_frames=args.warmup,
        writer=writer,
    )
    for line in report.summary_lines():
        print(line)
    if args.json:
        Path(args.json).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n")
    return 0


def _cmd_metrics(args) -> int:
    cfg = _build_config(args)
    assets, template, bank = _load_scene(args)
    stream, _ = _load_stream(args, assets)
    vmap = _viseme_map(args)
    probe_frames = int(np.ceil(stream.total_duration_s * cfg.frame_rate_hz))
    mouth_track, stable_track = _load_tracks(args, template, probe_frames)

    traj, result, _ = _run_pipeline(
        cfg, template, bank, stream, vmap, mouth_track, stable_track)

    sync = sync_accuracy(traj, tolerance_s=args.tolerance_ms / 1000.0)
    flick = mean_l1_flicker(result.frames, result.raster_rects)
    drift = identity_drift(result.frames)
    report = {
        "sync": sync.to_dict(),
        "mean_flicker": flick.mean_flicker,
        "identity_drift_max": float(drift.max()),
    }
    if cfg.head_mode == "off":
        report["outside_roi_max_diff"] = identity_outside_roi(
            result.frames, template.image, result.roi_union)

    print(f"events               {sync.num_events}")
    print(f"sync fraction within {args.tolerance_ms:g} ms: "
          f"{sync.fraction_within:.4f}")
    finite = sync.onset_errors_s[np.isfinite(sync.onset_errors_s)]
    if finite.size:
        print(f"max onset error      {finite.max() * 1000.0:.2f} ms")
    print(f"mean flicker         {flick.mean_flicker:.4f}")
    print(f"identity drift max   {report['identity_drift_max']:.3e}")
    if "outside_roi_max_diff" in report:
        print(f"outside-ROI max diff {report['outside_roi_max_diff']}")

    if args.cdf:
        Path(args.cdf).write_text(export_cdf(sync.onset_errors_s))
        print(f"wrote CDF -> {args.cdf}")
    if args.json:
        Path(args.json).write_text(json.dumps(report, indent=2) + "\n")
    return 0


def _cmd_ablate(args) -> int:
    base = _build_config(args)
    assets, template, bank = _load_scene(args)
    stream, _ = _load_stream(args, assets)
    vmap = _viseme_map(args)

    levels = (args.levels.split(",") if args.levels
              else list(ABLATION_LEVELS))
    probe_frames = int(np.ceil(stream.total_duration_s * base.frame_rate_hz))
    mouth_track = None
    if args.jitter_px > 0.0:
        mouth_track = make_jitter_track(
            template, probe_frames, args.jitter_px, seed=0)
    rows = []
    for level in levels:
        cfg = ablation_config(base, level.strip().upper())
        traj, result, stage_ms = _run_pipeline(
            cfg, template, bank, stream, vmap, mouth_track=mouth_track)
        flick = mean_l1_flicker(result.frames, result.raster_rects)
        rows.append({
            "level": cfg.ablation,
            "mean_flicker": flick.mean_flicker,
            "render_ms_per_frame": stage_ms["rendering"] / traj.num_frames,
        })

    print(f"{'level':<6} {'flicker':>10} {'ms/frame':>10}"
          f"   (jitter {args.jitter_px:g} px)")
    for row in rows:
        print(f"{row['level']:<6} {row['mean_flicker']:>10.4f} "
              f"{row['render_ms_per_frame']:>10.2f}")
    if args.json:
        Path(args.json).write_text(json.dumps(rows, indent=2) + "\n")
    return 0


def _cmd_validate(args) -> int:
    checked = 0
    if args.assets:
        assets = Path(args.assets)
        load_template(assets)
        load_mouth_bank(assets)
        print(f"assets bundle {assets}: ok")
        checked += 1
    if args.timing:
        stream = ingest_alignment(Path(args.timing).read_text())
        print(f"timing {args.timing}: ok "
              f"({len(stream.segments)} segments, "
              f"{stream.total_duration_s:.3f}s)")
        checked += 1
    if args.lexicon:
        lex = parse_lexicon(Path(args.lexicon).read_text())
        print(f"lexicon {args.lexicon}: ok ({len(lex.entries)} words)")
        checked += 1
    if args.track:
        track = load_landmark_track(Path(args.track).read_text())
        kinds = ", ".join(sorted(track))
        print(f"track {args.track}: ok ({kinds})")
        checked += 1
    if not checked:
        raise ConfigError(
            "nothing to validate; give --assets/--timing/--lexicon/--track"
        )
    return 0


def _cmd_demo_assets(args) -> int:
    root = write_sample_bundle(args.out, size=args.size)
    print(f"wrote demo bundle -> {root}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vedicthg",
        description="Deterministic CPU talking-head synthesis from "
                    "phoneme timings.",
    )
    p.add_argument("--version", action="version",
                   version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("synth", help="render lip-synced frames")
    _add_input_flags(ps)
    _add_config_flags(ps)
    ps.add_argument("--out", required=True, metavar="DIR",
                    help="output directory")
    ps.add_argument("--save-traj", metavar="JSON",
                    help="also write the sampled control trajectory")
    ps.set_defaults(func=_cmd_synth)

    pb = sub.add_parser("bench", help="measure runtime")
    _add_input_flags(pb)
    _add_config_flags(pb)
    pb.add_argument("--bench-mode", choices=["render_only", "end_to_end"],
                    default="end_to_end")
    pb.add_argument("--warmup", type=int, default=8, metavar="N",
                    help="warmup frames excluded from timing (default 8)")
    pb.add_argument("--out", metavar="DIR",
                    help="also write frames (adds an io stage)")
    pb.add_argument("--json", metavar="FILE", help="dump the report as JSON")
    pb.set_defaults(func=_cmd_bench)

    pm = sub.add_parser("metrics", help="sync/stability/identity metrics")
    _add_input_flags(pm)
    _add_config_flags(pm)
    pm.add_argument("--tolerance-ms", type=float, default=40.0)
    pm.add_argument("--cdf", metavar="FILE",
                    help="write the onset-error CDF (two columns)")
    pm.add_argument("--json", metavar="FILE")
    pm.set_defaults(func=_cmd_metrics)

    pa = sub.add_parser("ablate", help="compare cumulative feature levels")
    _add_input_flags(pa)
    _add_config_flags(pa)
    pa.add_argument("--levels", metavar="A0,A1,..",
                    help=f"subset of {','.join(ABLATION_LEVELS)}")
    pa.add_argument("--jitter-px", type=float, default=2.0,
                    help="landmark jitter sigma used for the comparison")
    pa.add_argument("--json", metavar="FILE")
    pa.set_defaults(func=_cmd_ablate)

    pv = sub.add_parser("validate", help="check input files parse cleanly")
    pv.add_argument("--assets", metavar="DIR")
    pv.add_argument("--timing", metavar="JSON")
    pv.add_argument("--lexicon", metavar="FILE")
    pv.add_argument("--track", metavar="JSON")
    pv.set_defaults(func=_cmd_validate)

    pd = sub.add_parser("demo-assets", help="generate the sample bundle")
    pd.add_argument("--out", required=True, metavar="DIR")
    pd.add_argument("--size", type=int, default=256)
    pd.set_defaults(func=_cmd_demo_assets)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (LexiconParseError, AlignmentError, UnknownWordError,
            InputValidationError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
