"""Deterministic, training-free talking-head synthesis on the CPU.

Pipeline: time-aligned phonemes -> viseme schedule -> blended mouth-control
trajectories -> composited frames.  Every stage is pure computation over
numpy arrays; two runs with the same inputs produce identical bytes.
"""

from ._version import __version__
from .errors import (
    AlignmentError,
    ConfigError,
    InputValidationError,
    LexiconParseError,
    PipelineError,
    UnknownWordError,
    VedicThgError,
)
from .phonetics import (
    PhonemeSegment,
    PhonemeStream,
    ingest_alignment,
    parse_lexicon,
    proportional_align,
)
from .visemes import (
    VisemeEvent,
    VisemeSchedule,
    builtin_jeffers_map,
    load_param_bank,
    map_phonemes_to_visemes,
)
from .coart import (
    BlendConfig,
    Trajectory,
    WindowConfig,
    blend_at,
    dominance_weight,
    sample_trajectory,
    transition_phase,
    vedic_blend,
)
from .render import (
    MouthBank,
    MouthPatch,
    RenderConfig,
    Template,
    compute_bbox,
    render_frame,
    render_sequence,
)
from .metrics import (
    export_cdf,
    identity_outside_roi,
    mean_l1_flicker,
    sync_accuracy,
)
from .bench import RuntimeReport, runtime_bench

__all__ = [
    "__version__",
    "VedicThgError", "ConfigError", "InputValidationError",
    "LexiconParseError", "UnknownWordError", "AlignmentError",
    "PipelineError",
    "PhonemeSegment", "PhonemeStream", "parse_lexicon",
    "proportional_align", "ingest_alignment",
    "VisemeEvent", "VisemeSchedule", "builtin_jeffers_map",
    "map_phonemes_to_visemes", "load_param_bank",
    "WindowConfig", "BlendConfig", "Trajectory", "dominance_weight",
    "transition_phase", "vedic_blend", "blend_at", "sample_trajectory",
    "Template", "MouthPatch", "MouthBank", "RenderConfig",
    "compute_bbox", "render_frame", "render_sequence",
    "sync_accuracy", "export_cdf", "mean_l1_flicker",
    "identity_outside_roi",
    "runtime_bench", "RuntimeReport",
]
