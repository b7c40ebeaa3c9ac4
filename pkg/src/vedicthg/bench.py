"""Runtime measurement for the synthesis pipeline.

Latency is wall-clock per frame over the timed region; CPU load is sampled
on a side thread as process CPU time over wall time, i.e. percent of one
core (a thread pool can push it past 100).  Warmup passes run the same code
paths first so one-time costs (JIT compilation, allocator growth) stay out
of the numbers.
"""

from __future__ import annotations

import gc
import threading
import time
from dataclasses import dataclass, field

from .errors import InputValidationError
from . import kernels
from .coart import (
    BlendConfig,
    Trajectory,
    WindowConfig,
    sample_trajectory,
)
from .phonetics import PhonemeStream, ingest_alignment
from .render import (
    MouthBank,
    RenderConfig,
    RenderResult,
    Template,
    render_sequence,
    resolve_threads,
)
from .visemes import (
    builtin_jeffers_map,
    load_param_bank,
    map_phonemes_to_visemes,
)

BENCH_MODES = ("render_only", "end_to_end")
MIN_BENCH_DURATION_S = 1.0


class CpuSampler:
    """Samples process CPU utilisation at a fixed cadence on a side thread."""

    def __init__(self, interval_s: float = 0.1):
        self.interval_s = interval_s
        self.samples: list[float] = []
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._overall: float | None = None

    def _run(self):
        last_wall = time.perf_counter()
        last_cpu = time.process_time()
        while not self._stop.wait(self.interval_s):
            wall = time.perf_counter()
            cpu = time.process_time()
            dt = wall - last_wall
            if dt > 0.0:
                self.samples.append((cpu - last_cpu) / dt * 100.0)
            last_wall, last_cpu = wall, cpu

    def __enter__(self) -> "CpuSampler":
        self._wall0 = time.perf_counter()
        self._cpu0 = time.process_time()
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        wall = time.perf_counter() - self._wall0
        cpu = time.process_time() - self._cpu0
        if wall > 0.0:
            self._overall = cpu / wall * 100.0
        return False

    def mean_pct(self) -> float:
        if self.samples:
            return sum(self.samples) / len(self.samples)
        return self._overall if self._overall is not None else 0.0

    def peak_pct(self) -> float:
        if self.samples:
            return max(self.samples)
        return self._overall if self._overall is not None else 0.0


@dataclass
class RuntimeReport:
    mode: str
    num_frames: int
    warmup_frames: int
    total_s: float
    mean_ms_per_frame: float
    fps: float
    stage_ms: dict[str, float] = field(default_factory=dict)
    cpu_mean_pct: float = 0.0
    cpu_peak_pct: float = 0.0
    resolution: tuple[int, int] = (0, 0)
    backend: str = kernels.BACKEND_NAME
    threads: int = 1

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "num_frames": self.num_frames,
            "warmup_frames": self.warmup_frames,
            "total_s": self.total_s,
            "mean_ms_per_frame": self.mean_ms_per_frame,
            "fps": self.fps,
            "stage_ms": dict(self.stage_ms),
            "cpu_mean_pct": self.cpu_mean_pct,
            "cpu_peak_pct": self.cpu_peak_pct,
            "resolution": list(self.resolution),
            "backend": self.backend,
            "threads": self.threads,
        }

    def summary_lines(self) -> list[str]:
        lines = [
            f"mode            {self.mode}",
            f"resolution      {self.resolution[0]}x{self.resolution[1]}",
            f"backend         {self.backend} ({self.threads} thread(s))",
            f"frames          {self.num_frames} "
            f"(+{self.warmup_frames} warmup, excluded)",
            f"latency         {self.mean_ms_per_frame:.2f} ms/frame",
            f"throughput      {self.fps:.1f} fps",
            f"cpu load        {self.cpu_mean_pct:.1f}% mean, "
            f"{self.cpu_peak_pct:.1f}% peak of one core",
        ]
        for stage, ms in self.stage_ms.items():
            lines.append(f"  stage {stage:<11} {ms:.1f} ms")
        return lines


def _slice_trajectory(traj: Trajectory, count: int) -> Trajectory:
    count = max(1, min(count, traj.num_frames))
    return Trajectory(
        frame_rate_hz=traj.frame_rate_hz,
        times=traj.times[:count],
        values=traj.values[:count],
        dominant_event=traj.dominant_event[:count],
        event_starts=traj.event_starts,
        event_visemes=traj.event_visemes,
        event_source=traj.event_source,
    )


def runtime_bench(
    template: Template,
    bank: MouthBank,
    source,
    *,
    mode: str = "end_to_end",
    frame_rate_hz: float = 30.0,
    window: WindowConfig | None = None,
    blend: BlendConfig | None = None,
    render_cfg: RenderConfig | None = None,
    vmap=None,
    param_bank=None,
    warmup_frames: int = 8,
    mouth_track=None,
    stable_track=None,
    writer=None,
) -> tuple[RuntimeReport, RenderResult]:
    """Time one pipeline pass; returns the report and the rendered result.

    ``source`` is either a :class:`PhonemeStream` or alignment JSON text
    (the latter also times the parse).  ``writer``, when given, is called
    with the frame list inside the timed region and billed to the ``io``
    stage.  Inputs shorter than a second are rejected: the per-frame means
    would be noise.
    """
    if mode not in BENCH_MODES:
        raise InputValidationError(
            f"mode must be one of {BENCH_MODES}, got {mode!r}"
        )
    window = window or WindowConfig()
    blend = blend or BlendConfig()
    render_cfg = render_cfg or RenderConfig()
    vmap = vmap or builtin_jeffers_map()
    param_bank = param_bank or load_param_bank()

    if isinstance(source, PhonemeStream):
        stream, text = source, None
    else:
        stream, text = ingest_alignment(source), str(source)
    if stream.total_duration_s < MIN_BENCH_DURATION_S:
        raise InputValidationError(
            f"benchmark input must cover at least {MIN_BENCH_DURATION_S}s "
            f"of speech, got {stream.total_duration_s:.3f}s"
        )

    # Warmup: run the same code paths on a short prefix, untimed.
    schedule = map_phonemes_to_visemes(stream, vmap, param_bank=param_bank)
    traj = sample_trajectory(schedule, frame_rate_hz, window, blend)
    if warmup_frames > 0:
        render_sequence(template, bank, _slice_trajectory(traj, warmup_frames),
                        render_cfg, mouth_track=None, stable_track=None)

    stage_ms: dict[str, float] = {}

    def timed(name, fn):
        t0 = time.perf_counter()
        out = fn()
        stage_ms[name] = (time.perf_counter() - t0) * 1000.0
        return out

    with CpuSampler() as cpu:
        t_begin = time.perf_counter()
        if mode == "end_to_end":
            if text is not None:
                stream2 = timed("timing", lambda: ingest_alignment(text))
            else:
                stream2 = stream
                stage_ms["timing"] = 0.0
            schedule2 = timed(
                "scheduling",
                lambda: map_phonemes_to_visemes(stream2, vmap,
                                                param_bank=param_bank))
            traj2 = timed(
                "blending",
                lambda: sample_trajectory(schedule2, frame_rate_hz,
                                          window, blend))
        else:
            traj2 = traj
            stage_ms["timing"] = 0.0
            stage_ms["scheduling"] = 0.0
            stage_ms["blending"] = 0.0
        result = timed(
            "rendering",
            lambda: render_sequence(template, bank, traj2, render_cfg,
                                    mouth_track=mouth_track,
                                    stable_track=stable_track))
        if writer is not None:
            timed("io", lambda: writer(result.frames))
        else:
            stage_ms["io"] = 0.0
        t_total = time.perf_counter() - t_begin

    num = traj2.num_frames
    if mode == "render_only":
        billed_s = stage_ms["rendering"] / 1000.0
    else:
        billed_s = t_total
    mean_ms = billed_s * 1000.0 / num
    fps = num / billed_s if billed_s > 0.0 else float("inf")

    report = RuntimeReport(
        mode=mode,
        num_frames=num,
        warmup_frames=min(warmup_frames, traj.num_frames),
        total_s=billed_s,
        mean_ms_per_frame=mean_ms,
        fps=fps,
        stage_ms=stage_ms,
        cpu_mean_pct=cpu.mean_pct(),
        cpu_peak_pct=cpu.peak_pct(),
        resolution=template.size,
        backend=kernels.BACKEND_NAME,
        threads=resolve_threads(),
    )
    return report, result


def blend_stage_cost(schedule, frame_rate_hz: float,
                     window: WindowConfig, blend: BlendConfig,
                     repeats: int = 5, warmup: int = 1) -> float:
    """Mean seconds for one trajectory sampling pass under ``blend``.

    Garbage collection is paused over the timed passes (as ``timeit`` does)
    so the figure reflects the sampling work, not collector pauses.
    """
    if repeats < 1:
        raise InputValidationError("repeats must be >= 1")
    import warnings as _warnings

    def once():
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            sample_trajectory(schedule, frame_rate_hz, window, blend)

    for _ in range(warmup):
        once()
    gc_was_on = gc.isenabled()
    gc.disable()
    try:
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            once()
            times.append(time.perf_counter() - t0)
    finally:
        if gc_was_on:
            gc.enable()
    return sum(times) / len(times)
