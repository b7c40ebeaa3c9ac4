"""End-to-end acceptance checks.

Each test exercises one headline guarantee of the toolkit at its stated
tolerance and prints a single PASS/FAIL line (run with ``-s`` to see them
on success).  The checks are deliberately independent of the unit tests:
fixtures are synthesized here and compared against closed-form expectations.
"""

import math
import warnings

import numpy as np
import pytest

from conftest import schedule_for, synthetic_stream
from vedicthg import kernels
from vedicthg.bench import blend_stage_cost, runtime_bench
from vedicthg.coart import (
    BlendConfig,
    ShortEventWarning,
    Trajectory,
    WindowConfig,
    sample_trajectory,
    vedic_blend,
)
from vedicthg.config import RunConfig, ablation_config
from vedicthg.errors import (
    AlignmentError,
    LexiconParseError,
    UnknownWordError,
)
from vedicthg.metrics import (
    export_cdf,
    frame_hashes,
    identity_outside_roi,
    mean_l1_flicker,
    read_cdf,
    sync_accuracy,
)
from vedicthg.phonetics import (
    ingest_alignment,
    parse_lexicon,
    proportional_align,
    serialize_lexicon,
)
from vedicthg.render import RenderConfig, render_sequence
from vedicthg.sample_assets import make_jitter_track
from vedicthg.visemes import NEUTRAL, RIG_DIM, VisemeEvent, VisemeSchedule, \
    load_param_bank

FRAME_RATE_HZ = 30.0
DELTA_S = 0.040
HALF_FRAME_TOL_S = 0.0167          # half the display interval at 30 fps

# context figures for the runtime report line: the per-frame budget at the
# output rate, a desktop-CPU reference run of this pipeline shape, and the
# hard floor below which the run fails outright
FRAME_BUDGET_MS = 33.0
REFERENCE_MS_PER_FRAME = 26.67
REFERENCE_FPS = 37.5
HARD_FLOOR_FPS = 15.0


def _report(num: int, name: str, ok: bool, detail: str = ""):
    line = f"[criterion {num:02d}] {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def _quiet_sample(schedule, fv=FRAME_RATE_HZ, window=None, blend=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ShortEventWarning)
        return sample_trajectory(schedule, fv,
                                 window or WindowConfig(delta_s=DELTA_S),
                                 blend or BlendConfig())


def test_criterion_01_onset_alignment():
    rng = np.random.default_rng(101)
    streams = [synthetic_stream(rng, 1.5) for _ in range(24)]
    total_s = sum(s.total_duration_s for s in streams)
    assert total_s >= 30.0, "fixture set too short to be meaningful"

    errors = []
    events = 0
    fractions = []
    for stream in streams:
        traj = _quiet_sample(schedule_for(stream))
        rep = sync_accuracy(traj, tolerance_s=HALF_FRAME_TOL_S)
        errors.extend(rep.onset_errors_s)
        events += rep.num_events
        fractions.append(rep.fraction_within)
    worst = float(np.max(errors))
    fraction = float(np.mean(fractions))
    ok = fraction == 1.0 and worst <= HALF_FRAME_TOL_S
    _report(1, "viseme onsets within half a frame", ok,
            f"{events} events over {total_s:.1f}s, worst "
            f"{worst * 1000:.2f} ms <= 16.7 ms, fraction {fraction:.3f}")


def test_criterion_02_blend_endpoint_and_peak():
    rng = np.random.default_rng(102)
    a = rng.random(RIG_DIM)
    c = rng.random(RIG_DIM)

    endpoints = (np.array_equal(vedic_blend(a, c, 0.0), a)
                 and np.array_equal(vedic_blend(a, c, 1.0), c))

    lerp_ok = True
    for alpha in np.linspace(0.0, 1.0, 101):
        got = vedic_blend(a, c, alpha, lam=0.0)
        ref = (1 - alpha) * a + alpha * c
        rel = np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300)
        lerp_ok &= bool(np.all(rel <= 1e-12))

    grid = np.linspace(0.0, 1.0, 101)
    excess = np.array([
        np.sum(vedic_blend(a, c, al, lam=0.2)
               - vedic_blend(a, c, al, lam=0.0))
        for al in grid
    ])
    peak_ok = int(np.argmax(excess)) == 50

    ok = endpoints and lerp_ok and peak_ok
    _report(2, "cross-term blend endpoints/linearity/peak", ok,
            f"endpoints exact={endpoints}, lam0 lerp<=1e-12={lerp_ok}, "
            f"cross-term max at alpha=0.5={peak_ok}")


def test_criterion_03_pairwise_reduces_to_dominance():
    rng = np.random.default_rng(103)
    bank = load_param_bank()
    names = [v for v in bank if v != NEUTRAL]
    t = 0.0
    events = []
    for _ in range(40):
        dur = rng.uniform(2 * DELTA_S, 0.4)
        events.append(VisemeEvent(str(rng.choice(names)), t, t + dur))
        t += dur
    sched = VisemeSchedule(events=events, param_bank=bank)

    ts = np.sort(rng.uniform(0.0, sched.duration_s, 1000))
    starts, ends = sched.starts(), sched.ends()
    params = sched.param_matrix()
    owner = np.clip(np.searchsorted(starts, ts, side="right") - 1,
                    0, len(starts) - 1).astype(np.int64)
    a = np.empty((1000, RIG_DIM))
    b = np.empty_like(a)
    kernels.pairwise_blend(ts, owner, starts, ends, params,
                           DELTA_S, 0.0, False, a)
    kernels.dominance_blend(ts, starts, ends, params, DELTA_S, False,
                            np.asarray(bank[NEUTRAL]), b)
    diff = float(np.max(np.abs(a - b)))
    ok = diff <= 1e-9
    _report(3, "pairwise blend at lam=0 equals dominance blend", ok,
            f"max |diff| {diff:.3e} <= 1e-9 over 1000 times, "
            f"{len(events)} events")


def test_criterion_04_realtime_render(template, bank, sample_stream):
    report, _ = runtime_bench(template, bank, sample_stream,
                              mode="render_only", warmup_frames=8)
    ok = (report.mean_ms_per_frame <= FRAME_BUDGET_MS
          and report.fps >= HARD_FLOOR_FPS)
    _report(4, "render-only real time at 256x256", ok,
            f"measured {report.mean_ms_per_frame:.2f} ms/frame "
            f"({report.fps:.1f} fps) vs reference "
            f"{REFERENCE_MS_PER_FRAME} ms ({REFERENCE_FPS} fps), "
            f"budget {FRAME_BUDGET_MS} ms, floor {HARD_FLOOR_FPS} fps, "
            f"backend {report.backend}")


def test_criterion_05_cross_term_costs_no_more():
    # A long input keeps the stage cost dominated by blend math rather than
    # per-call overhead.  Events all exceed 2*delta so both modes run their
    # single intended blending pass over identical samples.  Scheduler
    # interference only ever adds time, so each mode's cost is taken as the
    # minimum over interleaved rounds whose order flips every round (neither
    # mode always inherits the other's cache/allocator footprint); comparing
    # single means instead flakes on a busy machine because the true gap is
    # similar in size to trial-to-trial drift.
    rng = np.random.default_rng(105)
    sched = schedule_for(synthetic_stream(rng, 2000.0, min_ms=90,
                                          gap_prob=0.0))
    window = WindowConfig(delta_s=DELTA_S)
    vedic_cfg = BlendConfig(mode="vedic_pairwise")
    dom_cfg = BlendConfig(mode="dominance_weighted")

    def one_pass(cfg):
        return blend_stage_cost(sched, FRAME_RATE_HZ, window, cfg,
                                repeats=1, warmup=0)

    for cfg in (vedic_cfg, dom_cfg):       # warm compiled paths
        one_pass(cfg)
    vedic_s = math.inf
    dom_s = math.inf
    for r in range(10):
        order = (vedic_cfg, dom_cfg) if r % 2 == 0 else (dom_cfg, vedic_cfg)
        for cfg in order:
            t = one_pass(cfg)
            if cfg is vedic_cfg:
                vedic_s = min(vedic_s, t)
            else:
                dom_s = min(dom_s, t)

    ok = vedic_s <= dom_s
    samples = int(sched.duration_s * FRAME_RATE_HZ)
    _report(5, "cross-term blend no dearer than dominance blend", ok,
            f"vedic {vedic_s * 1000:.2f} ms vs dominance "
            f"{dom_s * 1000:.2f} ms per pass (min of 10 rounds), "
            f"{sched.duration_s:.0f}s input at {FRAME_RATE_HZ:g} Hz "
            f"({samples} samples)")


def test_criterion_06_identity_outside_mouth_region(template, bank,
                                                    sample_schedule):
    traj = _quiet_sample(sample_schedule)
    result = render_sequence(template, bank, traj, RenderConfig())
    worst = identity_outside_roi(result.frames, template.image,
                                 result.roi_union)
    ok = worst == 0
    _report(6, "pixels outside the mouth region untouched", ok,
            f"max |diff| {worst} over {len(result.frames)} frames, "
            f"union {result.roi_union}")


def test_criterion_07_box_smoothing_damps_jitter(template, bank):
    rng = np.random.default_rng(107)
    stream = synthetic_stream(rng, 10.0, gap_prob=0.0)
    traj = _quiet_sample(schedule_for(stream))
    T = traj.num_frames
    assert T >= 300, "need a long enough run to average jitter"
    track = make_jitter_track(template, T, sigma_px=2.0, seed=7)

    def flicker_for(cfg):
        res = render_sequence(template, bank, traj, cfg, mouth_track=track)
        return mean_l1_flicker(res.frames, res.raster_rects).mean_flicker

    smoothed = flicker_for(RenderConfig(beta=0.85))
    raw = flicker_for(RenderConfig(beta=0.0))

    a1 = flicker_for(ablation_config(RunConfig(), "A1").render_config())
    a3 = flicker_for(ablation_config(RunConfig(), "A3").render_config())

    ok = smoothed < raw and a3 < a1
    _report(7, "box smoothing lowers flicker under 2 px jitter", ok,
            f"beta 0.85: {smoothed:.3f} < beta 0: {raw:.3f}; "
            f"A3 {a3:.3f} < A1 {a1:.3f}; {T} frames")


def test_criterion_08_two_runs_bit_identical(template, bank,
                                             sample_schedule):
    traj = _quiet_sample(sample_schedule)
    first = render_sequence(template, bank, traj, RenderConfig())
    second = render_sequence(template, bank, traj, RenderConfig())
    hashes_equal = frame_hashes(first.frames) == frame_hashes(second.frames)
    rects_equal = np.array_equal(first.rects, second.rects)
    ok = hashes_equal and rects_equal
    _report(8, "repeat runs produce byte-identical frames", ok,
            f"{len(first.frames)} frames, hashes equal={hashes_equal}, "
            f"boxes equal={rects_equal}")


def test_criterion_09_text_ingest_round_trip_and_rejection():
    lex_text = "HELLO  HH AH0 L OW1\nREAD  R IY1 D\nREAD(2)  R EH1 D\n"
    lex = parse_lexicon(lex_text)
    round_tripped = parse_lexicon(serialize_lexicon(lex))
    stable = serialize_lexicon(round_tripped) == serialize_lexicon(lex)
    entries_equal = round_tripped.entries == lex.entries

    rejected = []

    def expect(exc_type, fn):
        try:
            fn()
        except exc_type:
            rejected.append(True)
        except Exception:
            rejected.append(False)
        else:
            rejected.append(False)

    expect(AlignmentError, lambda: ingest_alignment("{not json"))
    expect(AlignmentError, lambda: ingest_alignment(
        '[{"phoneme": "AA", "start_s": 0.3, "end_s": 0.1}]'))
    expect(AlignmentError, lambda: ingest_alignment(
        '[{"phoneme": "AA", "start_s": 0.0, "end_s": 0.3},'
        ' {"phoneme": "IY", "start_s": 0.2, "end_s": 0.5}]'))
    expect(AlignmentError, lambda: ingest_alignment(
        '[{"phoneme": "QX", "start_s": 0.0, "end_s": 0.3}]'))
    expect(LexiconParseError, lambda: parse_lexicon("WORD\n"))
    expect(UnknownWordError,
           lambda: proportional_align([("MISSING", 0.0, 0.5)], lex))

    ok = stable and entries_equal and all(rejected)
    _report(9, "lexicon round trip and malformed input rejection", ok,
            f"round trip stable={stable}, entries equal={entries_equal}, "
            f"{sum(rejected)}/{len(rejected)} bad inputs rejected")


def test_criterion_10_error_cdf_export():
    # fixed three-event fixture: onsets realized 10, 20 and 50 ms late
    traj = Trajectory(
        frame_rate_hz=FRAME_RATE_HZ,
        times=np.asarray([0.01, 0.12, 0.25]),
        values=np.zeros((3, RIG_DIM)),
        dominant_event=np.asarray([0, 1, 2]),
        event_starts=np.asarray([0.0, 0.1, 0.2]),
        event_visemes=("A", "B", "C"),
        event_source=(None, None, None),
    )
    rep = sync_accuracy(traj, tolerance_s=0.040)
    fraction_ok = rep.fraction_within == pytest.approx(2 / 3)

    text = export_cdf(rep.onset_errors_s)
    stable = text == export_cdf(rep.onset_errors_s)
    rows = read_cdf(text)
    monotone = bool(np.all(np.diff(rows[:, 0]) > 0)
                    and np.all(np.diff(rows[:, 1]) > 0))
    terminal = rows[-1, 1] == 1.0
    expected = np.asarray([[0.01, 1 / 3], [0.02, 2 / 3], [0.05, 1.0]])
    values_ok = np.allclose(rows, expected, atol=1e-9)

    ok = fraction_ok and stable and monotone and terminal and values_ok
    _report(10, "onset-error CDF export", ok,
            f"fraction within 40 ms {rep.fraction_within:.3f} (want 0.667), "
            f"rows={rows.tolist()}, monotone={monotone}, "
            f"terminal 1.0={terminal}, bit-stable={stable}")
