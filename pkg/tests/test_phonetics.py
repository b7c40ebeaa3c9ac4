import json

import pytest

from vedicthg.errors import (
    AlignmentError,
    LexiconParseError,
    UnknownWordError,
)
from vedicthg.phonetics import (
    ARPABET,
    PhonemeSegment,
    PhonemeStream,
    ingest_alignment,
    lookup_pronunciation,
    normalize_phoneme,
    parse_lexicon,
    proportional_align,
    serialize_alignment,
    serialize_lexicon,
)

LEX = """\
;;; comment line to skip
HELLO  HH AH0 L OW1
ME  M IY1
READ  R IY1 D
READ(2)  R EH1 D
"""


def test_normalize_strips_stress():
    assert normalize_phoneme("AA1") == "AA"
    assert normalize_phoneme("ah0") == "AH"
    assert normalize_phoneme("  iy2 ") == "IY"
    assert normalize_phoneme("SIL") == "SIL"


@pytest.mark.parametrize("bad", ["", "XX9Z", "A1B", "AA3", "Q", "123"])
def test_normalize_rejects_garbage(bad):
    # AA3 is out: stress digits are only 0/1/2, so the trailing 3 stays
    # attached and fails the label pattern
    with pytest.raises(AlignmentError):
        normalize_phoneme(bad)


def test_segment_validation():
    with pytest.raises(AlignmentError):
        PhonemeSegment("AA", -0.1, 0.2)
    with pytest.raises(AlignmentError):
        PhonemeSegment("AA", 0.3, 0.3)
    seg = PhonemeSegment("AA", 0.1, 0.35)
    assert seg.duration_s == pytest.approx(0.25)


def test_stream_rejects_overlap_with_index():
    segs = [PhonemeSegment("AA", 0.0, 0.2), PhonemeSegment("B", 0.15, 0.3)]
    with pytest.raises(AlignmentError, match="segment 1:"):
        PhonemeStream.from_segments(segs)


def test_stream_total_duration_rules():
    segs = [PhonemeSegment("AA", 0.0, 0.2)]
    assert PhonemeStream.from_segments(segs).total_duration_s == 0.2
    assert PhonemeStream.from_segments(
        segs, total_duration_s=0.5).total_duration_s == 0.5
    with pytest.raises(AlignmentError):
        PhonemeStream.from_segments(segs, total_duration_s=0.1)


class TestLexicon:
    def test_parse_basics(self):
        lex = parse_lexicon(LEX)
        assert len(lex) == 3
        assert lex.entries["HELLO"] == [("HH", "AH", "L", "OW")]
        assert lex.entries["READ"] == [("R", "IY", "D"), ("R", "EH", "D")]

    def test_lookup_first_pron_case_insensitive(self):
        lex = parse_lexicon(LEX)
        assert lookup_pronunciation(lex, "read") == ("R", "IY", "D")
        assert lookup_pronunciation(lex, "Me") == ("M", "IY")
        with pytest.raises(UnknownWordError):
            lookup_pronunciation(lex, "MISSING")
        with pytest.raises(UnknownWordError):
            lookup_pronunciation(lex, "")

    def test_parse_errors_carry_line_numbers(self):
        with pytest.raises(LexiconParseError, match="line 2:"):
            parse_lexicon("ME  M IY\nBROKEN\n")
        with pytest.raises(LexiconParseError, match="line 1:"):
            parse_lexicon("WORD  Q9X\n")

    def test_round_trip_is_stable(self):
        lex = parse_lexicon(LEX)
        text = serialize_lexicon(lex)
        again = serialize_lexicon(parse_lexicon(text))
        assert text == again
        assert parse_lexicon(text).entries == lex.entries


class TestIngest:
    def test_valid_file(self):
        doc = [
            {"phoneme": "HH", "start": 0.0, "end": 0.08},
            {"phoneme": "AH1", "start": 0.08, "end": 0.2},
        ]
        stream = ingest_alignment(json.dumps(doc))
        assert [s.phoneme for s in stream.segments] == ["HH", "AH"]
        assert stream.total_duration_s == 0.2

    def test_round_trip(self):
        doc = [{"phoneme": "AA", "start": 0.125, "end": 0.375}]
        stream = ingest_alignment(json.dumps(doc))
        assert ingest_alignment(serialize_alignment(stream)) == stream

    def test_not_json(self):
        with pytest.raises(AlignmentError, match="not valid JSON"):
            ingest_alignment("nope{")

    def test_not_a_list(self):
        with pytest.raises(AlignmentError):
            ingest_alignment('{"phoneme": "AA"}')

    def test_bad_record_reports_index(self):
        doc = [
            {"phoneme": "AA", "start": 0.0, "end": 0.1},
            {"phoneme": "AA", "start": 0.2},
        ]
        with pytest.raises(AlignmentError, match="segment 1:"):
            ingest_alignment(json.dumps(doc))

    def test_bad_phoneme_reports_index(self):
        doc = [{"phoneme": "QQQQ", "start": 0.0, "end": 0.1}]
        with pytest.raises(AlignmentError, match="segment 0:"):
            ingest_alignment(json.dumps(doc))

    def test_inverted_interval_reports_index(self):
        doc = [{"phoneme": "AA", "start": 0.3, "end": 0.1}]
        with pytest.raises(AlignmentError, match="segment 0:"):
            ingest_alignment(json.dumps(doc))


class TestProportionalAlign:
    def test_two_phoneme_word_oracle(self):
        # ME = M IY over [0, 1]: weights 1.0 and 1.5, so the boundary sits
        # at 1.0 * 1/2.5 = 0.4
        lex = parse_lexicon(LEX)
        stream = proportional_align([("ME", 0.0, 1.0)], lex)
        (m, iy) = stream.segments
        assert m.phoneme == "M" and iy.phoneme == "IY"
        assert m.end_s == pytest.approx(0.4, abs=1e-12)
        assert iy.end_s == 1.0  # last phoneme absorbs the remainder exactly

    def test_word_boundaries_exact(self):
        lex = parse_lexicon(LEX)
        words = [("HELLO", 0.1, 0.6), ("READ", 0.6, 1.0)]
        stream = proportional_align(words, lex)
        ends = [s.end_s for s in stream.segments]
        assert 0.6 in ends and ends[-1] == 1.0
        assert stream.segments[0].start_s == 0.1
        # all labels belong to the supported set
        assert all(s.phoneme in ARPABET for s in stream.segments)

    def test_custom_weights_shift_boundary(self):
        lex = parse_lexicon(LEX)
        stream = proportional_align([("ME", 0.0, 1.0)], lex,
                                    vowel_weight=1.0, consonant_weight=1.0)
        assert stream.segments[0].end_s == pytest.approx(0.5, abs=1e-12)

    def test_unknown_word(self):
        lex = parse_lexicon(LEX)
        with pytest.raises(UnknownWordError):
            proportional_align([("NOPE", 0.0, 1.0)], lex)

    def test_overlapping_words_rejected(self):
        lex = parse_lexicon(LEX)
        with pytest.raises(AlignmentError):
            proportional_align([("ME", 0.0, 1.0), ("ME", 0.9, 1.5)], lex)
        with pytest.raises(AlignmentError):
            proportional_align([("ME", 0.5, 0.5)], lex)
