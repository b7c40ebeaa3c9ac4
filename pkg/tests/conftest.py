import numpy as np
import pytest

from vedicthg.phonetics import PhonemeSegment, PhonemeStream
from vedicthg.render import MouthBank, Template
from vedicthg.sample_assets import (
    make_mouth_bank,
    make_sample_stream,
    make_template,
)
from vedicthg.visemes import (
    builtin_jeffers_map,
    load_param_bank,
    map_phonemes_to_visemes,
)

# phonemes drawn for synthetic streams; mix of all viseme classes
_POOL = (
    "P B M F V TH DH T D N L SH CH K G NG S Z "
    "AA AE AH EH ER EY IH IY UW OW W R AW AY HH"
).split()


def synthetic_stream(rng: np.random.Generator, total_s: float,
                     min_ms: float = 40.0, max_ms: float = 400.0,
                     gap_prob: float = 0.15) -> PhonemeStream:
    """Random phoneme stream: segment lengths in [min_ms, max_ms], occasional
    silent gaps, spanning roughly ``total_s`` seconds."""
    t = 0.0
    segs = []
    while t < total_s:
        dur = rng.uniform(min_ms, max_ms) / 1000.0
        if rng.random() < gap_prob and segs:
            t += dur  # leave a gap; the schedule fills it with neutral
            continue
        segs.append(PhonemeSegment(str(rng.choice(_POOL)), t, t + dur))
        t += dur
    return PhonemeStream.from_segments(segs, total_duration_s=t)


def schedule_for(stream: PhonemeStream):
    return map_phonemes_to_visemes(
        stream, builtin_jeffers_map(), param_bank=load_param_bank())


@pytest.fixture(scope="session")
def template() -> Template:
    return make_template()


@pytest.fixture(scope="session")
def bank() -> MouthBank:
    return make_mouth_bank()


@pytest.fixture(scope="session")
def sample_stream() -> PhonemeStream:
    return make_sample_stream()


@pytest.fixture(scope="session")
def sample_schedule(sample_stream):
    return schedule_for(sample_stream)
