import numpy as np
import pytest

from vedicthg.errors import InputValidationError
from vedicthg.phonetics import ARPABET, SILENCE_LABELS, PhonemeSegment, \
    PhonemeStream
from vedicthg.visemes import (
    JEFFERS_INVENTORY,
    NEUTRAL,
    RIG_DIM,
    RIG_RANGES,
    VisemeEvent,
    VisemeSchedule,
    builtin_jeffers_map,
    clamp_params,
    load_param_bank,
    load_viseme_map,
    map_phonemes_to_visemes,
    serialize_param_bank,
)

SPOT_CHECKS = {
    "P": "BILABIAL", "B": "BILABIAL", "M": "BILABIAL",
    "F": "LABIODENTAL", "V": "LABIODENTAL",
    "TH": "DENTAL", "DH": "DENTAL",
    "T": "ALVEOLAR", "D": "ALVEOLAR", "N": "ALVEOLAR", "L": "ALVEOLAR",
    "SH": "POSTALVEOLAR", "CH": "POSTALVEOLAR", "JH": "POSTALVEOLAR",
    "K": "VELAR", "G": "VELAR", "NG": "VELAR", "HH": "VELAR",
    "S": "FRICATIVE_S", "Z": "FRICATIVE_S",
    "AA": "OPEN_VOWEL", "AE": "OPEN_VOWEL", "AH": "OPEN_VOWEL",
    "EH": "MID_VOWEL", "ER": "MID_VOWEL", "EY": "MID_VOWEL",
    "IH": "CLOSE_VOWEL", "IY": "CLOSE_VOWEL", "Y": "CLOSE_VOWEL",
    "UW": "ROUNDED", "OW": "ROUNDED", "W": "ROUNDED", "R": "ROUNDED",
    "AW": "DIPHTHONG_AW", "AY": "DIPHTHONG_AY",
    "SIL": "NEUTRAL", "SP": "NEUTRAL",
}


def test_builtin_map_covers_every_phoneme():
    vmap = builtin_jeffers_map()
    for p in ARPABET | SILENCE_LABELS:
        assert vmap.viseme_for(p) in JEFFERS_INVENTORY


def test_builtin_map_spot_checks():
    vmap = builtin_jeffers_map()
    for phoneme, viseme in SPOT_CHECKS.items():
        assert vmap.viseme_for(phoneme) == viseme, phoneme


def test_inventory_shape():
    assert len(JEFFERS_INVENTORY) == 14
    assert JEFFERS_INVENTORY[0] == NEUTRAL
    assert len(set(JEFFERS_INVENTORY)) == 14


def test_load_viseme_map_builtin_alias():
    assert load_viseme_map("jeffers").table == builtin_jeffers_map().table


def _full_custom_map_text():
    vmap = builtin_jeffers_map()
    lines = ["# custom copy of the builtin table"]
    for p in sorted(ARPABET | SILENCE_LABELS):
        lines.append(f"{p} {vmap.viseme_for(p)}")
    return "\n".join(lines) + "\n"


def test_load_viseme_map_from_text():
    vmap = load_viseme_map(_full_custom_map_text())
    assert vmap.viseme_for("P") == "BILABIAL"
    assert vmap.default_viseme == "NEUTRAL"


def test_load_viseme_map_duplicate_rejected():
    text = _full_custom_map_text() + "P BILABIAL\n"
    with pytest.raises(InputValidationError, match="mapped twice"):
        load_viseme_map(text)


def test_load_viseme_map_gap_rejected():
    text = _full_custom_map_text().replace("ZH POSTALVEOLAR\n", "")
    with pytest.raises(InputValidationError, match="ZH"):
        load_viseme_map(text)


class TestParamBank:
    def test_default_bank_covers_inventory(self):
        bank = load_param_bank()
        for viseme in JEFFERS_INVENTORY:
            assert viseme in bank
            assert bank[viseme].shape == (RIG_DIM,)

    def test_default_bank_within_ranges(self):
        bank = load_param_bank()
        lo = np.array([r[0] for r in RIG_RANGES])
        hi = np.array([r[1] for r in RIG_RANGES])
        for vec in bank.values():
            assert np.all(vec >= lo) and np.all(vec <= hi)

    def test_pinned_values(self):
        bank = load_param_bank()
        assert np.array_equal(bank["NEUTRAL"], np.zeros(RIG_DIM))
        assert bank["BILABIAL"][0] == 0.0       # closed jaw
        assert bank["BILABIAL"][1] == 0.45
        assert bank["OPEN_VOWEL"][0] == 0.9     # wide-open jaw

    def test_round_trip(self):
        bank = load_param_bank()
        again = load_param_bank(serialize_param_bank(bank))
        assert set(bank) == set(again)
        for k in bank:
            assert np.array_equal(bank[k], again[k])

    def test_bad_dimension(self):
        with pytest.raises(InputValidationError, match="dimension"):
            load_param_bank('{"NEUTRAL": [0, 0, 0]}')

    def test_non_finite(self):
        vec = "[0,0,0,0,0,0,0," + '"NaN"' + "]"
        with pytest.raises(InputValidationError, match="finite"):
            load_param_bank('{"NEUTRAL": ' + vec + "}")


def test_clamp_params():
    vals = np.array([1.3, -0.2, 0.5, 1.0, 2.0, -2.0, 0.0, 1.5])
    out = clamp_params(vals)
    assert np.array_equal(out, [1.0, 0.0, 0.5, 1.0, 1.0, -1.0, 0.0, 1.0])


class TestMapping:
    def test_gap_fill_tiles_duration(self):
        stream = PhonemeStream.from_segments(
            [PhonemeSegment("AA", 0.1, 0.2), PhonemeSegment("B", 0.3, 0.4)],
            total_duration_s=0.5,
        )
        sched = map_phonemes_to_visemes(stream, builtin_jeffers_map(),
                                        param_bank=load_param_bank())
        kinds = [(e.viseme, e.start_s, e.end_s, e.source_index)
                 for e in sched.events]
        assert kinds == [
            ("NEUTRAL", 0.0, 0.1, None),
            ("OPEN_VOWEL", 0.1, 0.2, 0),
            ("NEUTRAL", 0.2, 0.3, None),
            ("BILABIAL", 0.3, 0.4, 1),
            ("NEUTRAL", 0.4, 0.5, None),
        ]
        assert sched.duration_s == 0.5
        # events tile without holes
        for a, b in zip(sched.events, sched.events[1:]):
            assert a.end_s == b.start_s

    def test_merge_adjacent_same_class(self):
        # T and D are both alveolar; merging keeps the first source index
        stream = PhonemeStream.from_segments(
            [PhonemeSegment("T", 0.0, 0.1), PhonemeSegment("D", 0.1, 0.2),
             PhonemeSegment("AA", 0.2, 0.3)]
        )
        sched = map_phonemes_to_visemes(stream, builtin_jeffers_map(),
                                        merge_adjacent=True,
                                        param_bank=load_param_bank())
        assert [e.viseme for e in sched.events] == ["ALVEOLAR", "OPEN_VOWEL"]
        assert sched.events[0].start_s == 0.0
        assert sched.events[0].end_s == 0.2
        assert sched.events[0].source_index == 0

    def test_no_merge_by_default(self):
        stream = PhonemeStream.from_segments(
            [PhonemeSegment("T", 0.0, 0.1), PhonemeSegment("D", 0.1, 0.2)]
        )
        sched = map_phonemes_to_visemes(stream, builtin_jeffers_map(),
                                        param_bank=load_param_bank())
        assert len(sched.events) == 2

    def test_param_matrix_matches_events(self):
        stream = PhonemeStream.from_segments(
            [PhonemeSegment("P", 0.0, 0.1), PhonemeSegment("AA", 0.1, 0.3)]
        )
        bank = load_param_bank()
        sched = map_phonemes_to_visemes(stream, builtin_jeffers_map(),
                                        param_bank=bank)
        mat = sched.param_matrix()
        assert mat.shape == (2, RIG_DIM)
        assert np.array_equal(mat[0], bank["BILABIAL"])
        assert np.array_equal(mat[1], bank["OPEN_VOWEL"])


def test_event_validation():
    with pytest.raises(InputValidationError):
        VisemeEvent("NEUTRAL", 0.2, 0.2)


def test_schedule_validation():
    bank = load_param_bank()
    evs = [VisemeEvent("NEUTRAL", 0.0, 0.2), VisemeEvent("BILABIAL", 0.1, 0.3)]
    with pytest.raises(InputValidationError, match="overlap"):
        VisemeSchedule(events=evs, param_bank=bank)
    with pytest.raises(InputValidationError, match="no rig params"):
        VisemeSchedule(events=[VisemeEvent("MYSTERY", 0.0, 0.1)],
                       param_bank=bank)
