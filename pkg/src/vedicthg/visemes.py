"""Phoneme-to-viseme scheduling.

A viseme map is a total lookup table from ARPAbet phonemes to a small
inventory of mouth-shape classes.  The builtin ``jeffers`` table uses 14
classes following the classic groupings that merge visually similar phonemes
(/p b m/ as one bilabial closure class, /f v/ labiodental, and so on).

Each viseme class carries an 8-component control vector driving the mouth
rig:

====  =================  =========
idx   meaning            range
====  =================  =========
0     jaw_open           [0, 1]
1     lip_width          [0, 1]
2     lip_protrusion     [0, 1]
3     mouth_bank_blend   [0, 1]
4-7   reserved warp      [-1, 1]
====  =================  =========
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import InputValidationError
from .phonetics import ARPABET, SILENCE_LABELS, PhonemeStream

#: Rig control dimension.
RIG_DIM = 8

#: Per-component (low, high) clamp ranges applied after blending.
RIG_RANGES = tuple([(0.0, 1.0)] * 4 + [(-1.0, 1.0)] * 4)

NEUTRAL = "NEUTRAL"

#: Canonical 14-class inventory of the builtin table.
JEFFERS_INVENTORY = (
    "NEUTRAL",
    "BILABIAL",
    "LABIODENTAL",
    "DENTAL",
    "ALVEOLAR",
    "POSTALVEOLAR",
    "VELAR",
    "FRICATIVE_S",
    "OPEN_VOWEL",
    "MID_VOWEL",
    "CLOSE_VOWEL",
    "ROUNDED",
    "DIPHTHONG_AW",
    "DIPHTHONG_AY",
)

_JEFFERS_GROUPS = {
    "BILABIAL": ["P", "B", "M"],
    "LABIODENTAL": ["F", "V"],
    "DENTAL": ["TH", "DH"],
    "ALVEOLAR": ["T", "D", "N", "L"],
    "POSTALVEOLAR": ["SH", "ZH", "CH", "JH"],
    "VELAR": ["K", "G", "NG", "HH"],
    "FRICATIVE_S": ["S", "Z"],
    "OPEN_VOWEL": ["AA", "AE", "AH", "AO"],
    "MID_VOWEL": ["EH", "ER", "EY"],
    "CLOSE_VOWEL": ["IH", "IY", "Y"],
    "ROUNDED": ["UW", "UH", "OW", "OY", "W", "R"],
    "DIPHTHONG_AW": ["AW"],
    "DIPHTHONG_AY": ["AY"],
    "NEUTRAL": ["SIL", "SP"],
}


@dataclass(frozen=True)
class VisemeMap:
    """Total phoneme -> viseme-name lookup with a default for silence/unknown."""

    table: dict[str, str]
    inventory: tuple[str, ...]
    default_viseme: str = NEUTRAL

    def viseme_for(self, phoneme: str) -> str:
        return self.table.get(phoneme, self.default_viseme)

    def id_of(self, name: str) -> int:
        return self.inventory.index(name)


@dataclass(frozen=True)
class VisemeEvent:
    """One viseme class active over ``[start_s, end_s)``.

    ``source_index`` tracks which phoneme segment produced the event (None
    for silence fill; the first segment for merged runs), which lets metrics
    pair events back to phoneme onsets.
    """

    viseme: str
    start_s: float
    end_s: float
    source_index: int | None = None

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise InputValidationError(
                f"viseme event {self.viseme} has start {self.start_s} "
                f">= end {self.end_s}"
            )


@dataclass
class VisemeSchedule:
    """Sorted, non-overlapping viseme events plus the rig parameter bank."""

    events: list[VisemeEvent]
    param_bank: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for i in range(1, len(self.events)):
            if self.events[i].start_s < self.events[i - 1].end_s:
                raise InputValidationError(
                    f"schedule events overlap at index {i}"
                )
        for ev in self.events:
            if self.param_bank and ev.viseme not in self.param_bank:
                raise InputValidationError(
                    f"no rig params for viseme {ev.viseme!r}"
                )
        # Derived arrays are cached: schedules are treated as immutable once
        # built, and samplers call these accessors once per pass.
        self._starts: np.ndarray | None = None
        self._ends: np.ndarray | None = None
        self._params: np.ndarray | None = None
        self._labels: tuple | None = None
        self._sources: tuple | None = None

    @property
    def duration_s(self) -> float:
        return self.events[-1].end_s if self.events else 0.0

    def starts(self) -> np.ndarray:
        """Event start times, shape (n,).  Shared cache; do not mutate."""
        if self._starts is None:
            arr = np.array([e.start_s for e in self.events], dtype=np.float64)
            arr.setflags(write=False)
            self._starts = arr
        return self._starts

    def ends(self) -> np.ndarray:
        """Event end times, shape (n,).  Shared cache; do not mutate."""
        if self._ends is None:
            arr = np.array([e.end_s for e in self.events], dtype=np.float64)
            arr.setflags(write=False)
            self._ends = arr
        return self._ends

    def param_matrix(self) -> np.ndarray:
        """Per-event rig vectors, shape (n_events, d).  Shared cache."""
        if self._params is None:
            arr = np.stack([self.param_bank[e.viseme] for e in self.events])
            arr = np.ascontiguousarray(arr, dtype=np.float64)
            arr.setflags(write=False)
            self._params = arr
        return self._params

    def viseme_labels(self) -> tuple:
        """Per-event viseme names, cached."""
        if self._labels is None:
            self._labels = tuple(ev.viseme for ev in self.events)
        return self._labels

    def source_indices(self) -> tuple:
        """Per-event originating phoneme index (None for fill), cached."""
        if self._sources is None:
            self._sources = tuple(ev.source_index for ev in self.events)
        return self._sources


def builtin_jeffers_map() -> VisemeMap:
    table = {}
    for viseme, phones in _JEFFERS_GROUPS.items():
        for p in phones:
            table[p] = viseme
    return VisemeMap(table=table, inventory=JEFFERS_INVENTORY)


def load_viseme_map(source: str) -> VisemeMap:
    """Load a map from file contents (``PHONEME VISEME`` lines, ``#``
    comments) or by builtin name (``jeffers``).

    The map must cover the full supported phoneme set; duplicates and gaps
    are errors.
    """
    if source.strip() == "jeffers":
        return builtin_jeffers_map()

    table: dict[str, str] = {}
    names: list[str] = []
    for line_no, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputValidationError(
                f"viseme map line {line_no}: expected 'PHONEME VISEME', "
                f"got {raw!r}"
            )
        phoneme, viseme = parts[0].upper(), parts[1].upper()
        if phoneme in table:
            raise InputValidationError(
                f"viseme map line {line_no}: phoneme {phoneme} mapped twice"
            )
        table[phoneme] = viseme
        if viseme not in names:
            names.append(viseme)

    supported = ARPABET | SILENCE_LABELS
    missing = sorted(supported - set(table))
    if missing:
        raise InputValidationError(
            f"viseme map leaves phonemes unmapped: {' '.join(missing)}"
        )
    if NEUTRAL not in names:
        names.insert(0, NEUTRAL)
    default = table.get("SIL", NEUTRAL)
    return VisemeMap(table=table, inventory=tuple(names), default_viseme=default)


def load_param_bank(text: str | None = None, dim: int = RIG_DIM) -> dict[str, np.ndarray]:
    """Load a viseme-name -> rig-vector bank, validating the rig dimension.

    With no argument, loads the bank shipped with the package (an editable
    data file, so rigs can be re-authored per identity).
    """
    if text is None:
        text = (
            resources.files("vedicthg").joinpath("data/param_bank.json").read_text()
        )
    raw = json.loads(text)
    bank: dict[str, np.ndarray] = {}
    for name, vec in raw.items():
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape != (dim,):
            raise InputValidationError(
                f"param bank entry {name!r} has dimension {arr.shape}, "
                f"expected ({dim},)"
            )
        if not np.all(np.isfinite(arr)):
            raise InputValidationError(f"param bank entry {name!r} is not finite")
        bank[name.upper()] = arr
    return bank


def serialize_param_bank(bank: dict[str, np.ndarray]) -> str:
    return json.dumps({k: list(map(float, v)) for k, v in bank.items()}, indent=2)


def params_for(schedule: VisemeSchedule, viseme: str) -> np.ndarray:
    """The rig vector for ``viseme`` from the schedule's bank."""
    try:
        return schedule.param_bank[viseme]
    except KeyError:
        raise InputValidationError(f"no rig params for viseme {viseme!r}") from None


def clamp_params(values: np.ndarray) -> np.ndarray:
    """Clamp rig components to their documented ranges (post-blend)."""
    lo = np.array([r[0] for r in RIG_RANGES])
    hi = np.array([r[1] for r in RIG_RANGES])
    return np.clip(values, lo, hi)


def map_phonemes_to_visemes(
    stream: PhonemeStream,
    vmap: VisemeMap,
    merge_adjacent: bool = False,
    param_bank: dict[str, np.ndarray] | None = None,
) -> VisemeSchedule:
    """Deterministically map a phoneme stream to a viseme schedule.

    Events inherit segment boundaries exactly.  Uncovered spans (leading,
    internal, trailing silence) become NEUTRAL events so the schedule tiles
    ``[0, total_duration_s]`` without holes.  With ``merge_adjacent``,
    consecutive events of the same class are coalesced into one.
    """
    if param_bank is None:
        param_bank = load_param_bank()

    events: list[VisemeEvent] = []
    cursor = 0.0
    for i, seg in enumerate(stream.segments):
        if seg.start_s > cursor:
            events.append(
                VisemeEvent(vmap.default_viseme, cursor, seg.start_s)
            )
        events.append(
            VisemeEvent(vmap.viseme_for(seg.phoneme), seg.start_s, seg.end_s, i)
        )
        cursor = seg.end_s
    if stream.total_duration_s > cursor:
        events.append(
            VisemeEvent(vmap.default_viseme, cursor, stream.total_duration_s)
        )

    if merge_adjacent:
        merged: list[VisemeEvent] = []
        for ev in events:
            if (
                merged
                and merged[-1].viseme == ev.viseme
                and merged[-1].end_s == ev.start_s
            ):
                prev = merged.pop()
                src = prev.source_index if prev.source_index is not None else ev.source_index
                merged.append(VisemeEvent(ev.viseme, prev.start_s, ev.end_s, src))
            else:
                merged.append(ev)
        events = merged

    return VisemeSchedule(events=events, param_bank=param_bank)
