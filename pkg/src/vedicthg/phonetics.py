"""Time-aligned phoneme streams: lexicon parsing, alignment ingestion, and a
proportional-duration fallback aligner.

Phoneme labels are uppercase ARPAbet symbols with stress digits stripped
(``HH AH0 L OW1`` becomes ``HH AH L OW``).  Streams are ordered,
non-overlapping lists of ``(phoneme, start_s, end_s)`` segments; gaps between
segments are allowed and stand for silence.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import AlignmentError, LexiconParseError, UnknownWordError

_LABEL_RE = re.compile(r"^[A-Z]{1,3}$")
_ALT_RE = re.compile(r"^(.*)\((\d+)\)$")

# The 15 ARPAbet vowel classes (stress-stripped).  Everything else in the
# 39-phoneme set is treated as a consonant for duration weighting.
VOWELS = frozenset(
    "AA AE AH AO AW AY EH ER EY IH IY OW OY UH UW".split()
)

CONSONANTS = frozenset(
    "B CH D DH F G HH JH K L M N NG P R S SH T TH V W Y Z ZH".split()
)

#: Silence / pause labels preserved verbatim in streams.
SILENCE_LABELS = frozenset({"SIL", "SP"})

#: Full supported label set.
ARPABET = VOWELS | CONSONANTS

_KNOWN_LABELS = ARPABET | SILENCE_LABELS


def normalize_phoneme(symbol: str) -> str:
    """Uppercase, strip a trailing stress digit, and validate a phoneme label.

    Raises :class:`AlignmentError` unless the result is a known ARPAbet
    symbol or a silence label.
    """
    sym = symbol.strip().upper()
    if sym and sym[-1] in "012":
        sym = sym[:-1]
    if not _LABEL_RE.match(sym) or sym not in _KNOWN_LABELS:
        raise AlignmentError(f"invalid phoneme label {symbol!r}")
    return sym


@dataclass(frozen=True)
class PhonemeSegment:
    """One labeled phoneme interval, in seconds."""

    phoneme: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if self.start_s < 0:
            raise AlignmentError(
                f"negative start time {self.start_s} for {self.phoneme}"
            )
        if not self.start_s < self.end_s:
            raise AlignmentError(
                f"start {self.start_s} must be < end {self.end_s} "
                f"for {self.phoneme}"
            )

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class PhonemeStream:
    """Ordered, non-overlapping phoneme segments covering ``[0, total_duration_s]``.

    Segments need not tile the duration; uncovered spans are silence.
    """

    segments: tuple[PhonemeSegment, ...]
    total_duration_s: float

    @classmethod
    def from_segments(cls, segments, total_duration_s=None) -> "PhonemeStream":
        """Validate ordering/overlap invariants and build a stream.

        ``total_duration_s`` defaults to the last segment's end (0 for an
        empty list).
        """
        segs = tuple(segments)
        for i in range(1, len(segs)):
            if segs[i].start_s < segs[i - 1].end_s:
                raise AlignmentError(
                    f"overlaps previous segment "
                    f"(starts {segs[i].start_s} < {segs[i - 1].end_s})",
                    index=i,
                )
        last_end = segs[-1].end_s if segs else 0.0
        if total_duration_s is None:
            total_duration_s = last_end
        if total_duration_s < last_end:
            raise AlignmentError(
                f"total duration {total_duration_s} shorter than last "
                f"segment end {last_end}"
            )
        return cls(segments=segs, total_duration_s=float(total_duration_s))

    def __len__(self):
        return len(self.segments)


@dataclass
class Lexicon:
    """Word -> pronunciations map in normalized (uppercase, stress-free) form.

    ``entries[word]`` holds one or more pronunciations in file order; the
    first one is the default.
    """

    entries: dict[str, list[tuple[str, ...]]] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return word.upper() in self.entries

    def __len__(self):
        return len(self.entries)


def parse_lexicon(text: str) -> Lexicon:
    """Parse CMUdict-style plain text into a :class:`Lexicon`.

    One entry per line (``WORD  PH1 PH2 ...``), ``;;;`` comment lines,
    alternates written ``WORD(2)``.  Stress digits are stripped.
    """
    entries: dict[str, list[tuple[str, ...]]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";;;"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise LexiconParseError(
                f"entry has no phonemes: {line!r}", line_no=line_no
            )
        word = parts[0].upper()
        m = _ALT_RE.match(word)
        if m:
            word = m.group(1)
        try:
            phones = tuple(normalize_phoneme(p) for p in parts[1:])
        except AlignmentError as exc:
            raise LexiconParseError(str(exc), line_no=line_no) from exc
        entries.setdefault(word, []).append(phones)
    return Lexicon(entries=entries)


def serialize_lexicon(lex: Lexicon) -> str:
    """Inverse of :func:`parse_lexicon` (words sorted, alternates in order)."""
    lines = []
    for word in sorted(lex.entries):
        for i, phones in enumerate(lex.entries[word]):
            key = word if i == 0 else f"{word}({i + 1})"
            lines.append(f"{key}  {' '.join(phones)}")
    return "\n".join(lines) + "\n"


def lookup_pronunciation(lex: Lexicon, word: str) -> tuple[str, ...]:
    """Return the first pronunciation for ``word`` (case-insensitive).

    Raises :class:`UnknownWordError` for out-of-vocabulary words; there is no
    letter-to-sound fallback.
    """
    if not word:
        raise UnknownWordError(word)
    prons = lex.entries.get(word.upper())
    if not prons:
        raise UnknownWordError(word)
    return prons[0]


def ingest_alignment(text: str) -> PhonemeStream:
    """Build a validated stream from an external aligner's timing file.

    The file is a JSON array of ``{"phoneme": "AA", "start": 0.08,
    "end": 0.20}`` objects with times in seconds.  Silence labels (SIL/SP)
    are kept as ordinary segments.
    """
    try:
        records = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AlignmentError(f"timing file is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise AlignmentError("timing file must be a JSON array of objects")

    segments = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict) or not {"phoneme", "start", "end"} <= set(rec):
            raise AlignmentError(
                "expected object with phoneme/start/end keys", index=i
            )
        try:
            seg = PhonemeSegment(
                phoneme=normalize_phoneme(str(rec["phoneme"])),
                start_s=float(rec["start"]),
                end_s=float(rec["end"]),
            )
        except AlignmentError as exc:
            raise AlignmentError(str(exc), index=i) from exc
        segments.append(seg)
    try:
        return PhonemeStream.from_segments(segments)
    except AlignmentError:
        raise


def serialize_alignment(stream: PhonemeStream) -> str:
    """Write a stream back to the canonical timing-file format."""
    records = [
        {"phoneme": s.phoneme, "start": s.start_s, "end": s.end_s}
        for s in stream.segments
    ]
    return json.dumps(records, indent=2) + "\n"


def proportional_align(
    words,
    lex: Lexicon,
    vowel_weight: float = 1.5,
    consonant_weight: float = 1.0,
) -> PhonemeStream:
    """Distribute each word's interval across its phonemes by duration weight.

    ``words`` is an ordered list of ``(word, start_s, end_s)`` tuples.  Vowels
    get ``vowel_weight``, consonants ``consonant_weight``; boundaries tile the
    word interval exactly, with the remainder assigned to the last phoneme so
    the final end equals ``end_s`` bit-exactly.

    This is a deterministic stand-in for an acoustic forced aligner: it keeps
    the same output contract (millisecond-timestamped phonemes) without any
    audio dependency.
    """
    segments: list[PhonemeSegment] = []
    prev_end = 0.0
    for word, start_s, end_s in words:
        start_s = float(start_s)
        end_s = float(end_s)
        if end_s <= start_s:
            raise AlignmentError(
                f"word {word!r} has zero or negative interval "
                f"[{start_s}, {end_s}]"
            )
        if start_s < prev_end:
            raise AlignmentError(
                f"word {word!r} overlaps previous word (starts {start_s})"
            )
        phones = lookup_pronunciation(lex, word)
        weights = [
            vowel_weight if p in VOWELS else consonant_weight for p in phones
        ]
        total_w = sum(weights)
        span = end_s - start_s
        t = start_s
        for j, (p, w) in enumerate(zip(phones, weights)):
            if j == len(phones) - 1:
                seg_end = end_s  # absorb rounding remainder
            else:
                seg_end = t + span * (w / total_w)
            segments.append(PhonemeSegment(phoneme=p, start_s=t, end_s=seg_end))
            t = seg_end
        prev_end = end_s
    return PhonemeStream.from_segments(segments, total_duration_s=prev_end)
