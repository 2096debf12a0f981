"""Seeded random pipeline scenarios shared by the simulator tests."""

from __future__ import annotations

import random
from fractions import Fraction

from omnistream.codec import CodecLayout
from omnistream.core import MediaManifest, MediaSegment
from omnistream.sim import InputMode, Scenario, StageModel


def random_small_case(rng: random.Random) -> dict:
    num, den = rng.randint(1, 4), rng.randint(1, 3)
    text = rng.randint(1, 5)
    allowance = num * text // den
    speech = rng.randint(1, max(1, min(allowance, 5)))
    if allowance == 0:
        text, speech = den, 1
    codec_us = rng.randint(0, 60) * 100
    return {
        "media_us": rng.choice([0, rng.randint(1, 40) * 100_000]),
        "prefill_chunk_us": rng.choice([1_000_000, 2_000_000]),
        "real_time": rng.random() < 0.5,
        "enc_us": rng.randint(0, 300) * 100,
        "ttft_us": rng.randint(0, 3000) * 100,
        "thinker_us": rng.randint(0, 300) * 100,
        "talker_us": rng.randint(0, 300) * 100,
        "codec_us": codec_us,
        "num": num,
        "den": den,
        "text": text,
        "speech": speech,
        "chunk_frames": rng.choice([1, 2, 4]),
    }


def to_model(case: dict) -> tuple[Scenario, StageModel]:
    ms = lambda us: us / 1000  # noqa: E731
    segs = (MediaSegment.audio(case["media_us"] / 1e6),) if case["media_us"] else ()
    scenario = Scenario(
        manifest=MediaManifest(segs),
        input_mode=InputMode.REAL_TIME_STREAM if case["real_time"] else InputMode.PRELOADED,
        aria_ratio=Fraction(case["num"], case["den"]),
        text_len=case["text"],
        speech_len=case["speech"],
        layout=CodecLayout(chunk_frames=case["chunk_frames"]),
    )
    stages = StageModel(
        name="case",
        thinker_ttft_ms={1: ms(case["ttft_us"])},
        thinker_tpop_ms={1: ms(case["thinker_us"])},
        talker_tpop_ms={1: ms(case["talker_us"])},
        codec_decode_ms=(ms(case["codec_us"]), ms(case["codec_us"])),
        encoder_chunk_ms=ms(case["enc_us"]),
        prefill_chunk_seconds=case["prefill_chunk_us"] / 1e6,
    )
    return scenario, stages
