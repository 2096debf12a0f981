import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omnistream.core import InvalidManifest, MediaManifest, MediaSegment
from omnistream.mrope import (
    EntryKind,
    PositionConfig,
    Rounding,
    TimestampConfig,
    assign_positions,
    audio_frame_count,
    context_budget,
    video_frame_tid,
)

NO_STAMPS = TimestampConfig(enabled=False)


@pytest.mark.parametrize("duration, expected", [(0.48, 3), (1.00, 7), (36000, 225_000)])
def test_audio_frame_count_examples(duration, expected):
    assert audio_frame_count(duration, 0.16) == expected


def test_audio_frame_count_rounding_modes():
    assert audio_frame_count(1.0, 0.16, Rounding.FLOOR) == 6
    assert audio_frame_count(1.0, 0.16, "round") == 6
    assert audio_frame_count(1.04, 0.16, "round") == 7  # 6.5 rounds up


@pytest.mark.parametrize("ts, tid", [(0.0, 0), (0.5, 3), (1.6, 10), (0.08, 1), (0.24, 2)])
def test_video_frame_tid_examples(ts, tid):
    assert video_frame_tid(ts) == tid


@given(st.integers(0, 10**7))
def test_video_frame_tid_matches_exact_rounding(ms):
    q = Fraction(ms, 160)
    assert video_frame_tid(ms / 1000) == math.floor(q + Fraction(1, 2))


def test_text_only_positions():
    t = assign_positions(MediaManifest((MediaSegment.text(5),)), NO_STAMPS)
    assert [e.ids for e in t.entries] == [(i, i, i) for i in range(5)]


def test_text_then_image():
    m = MediaManifest((MediaSegment.text(3), MediaSegment.image(2, 2)))
    img = [e for e in assign_positions(m, NO_STAMPS).entries if e.kind is EntryKind.IMAGE]
    assert [e.tid for e in img] == [3, 3, 3, 3]
    assert [e.hid for e in img] == [3, 3, 4, 4]
    assert [e.wid for e in img] == [3, 4, 3, 4]


def test_short_audio():
    t = assign_positions(MediaManifest((MediaSegment.audio(0.32),)), NO_STAMPS)
    assert [e.tid for e in t.entries] == [0, 1]


def test_invalid_manifest_rejected():
    with pytest.raises(InvalidManifest):
        assign_positions(MediaManifest((MediaSegment.text(0),)))


def test_video_uses_grid_and_timestamps():
    m = MediaManifest((MediaSegment.video(1, 2, [0.0, 0.5, 1.6]),))
    vids = [e for e in assign_positions(m, NO_STAMPS).entries if e.kind is EntryKind.VIDEO]
    assert [e.tid for e in vids] == [0, 0, 3, 3, 10, 10]
    assert {e.hid for e in vids} == {0}
    assert [e.wid for e in vids] == [0, 1] * 3


def test_stamps_precede_frames_and_share_tid():
    ts = TimestampConfig(tokens_per_stamp=2)
    m = MediaManifest((MediaSegment.video(1, 1, [0.0, 1.0]),))
    entries = assign_positions(m, ts).entries
    assert [e.kind for e in entries] == [EntryKind.TIMESTAMP] * 2 + [EntryKind.VIDEO] + [EntryKind.TIMESTAMP] * 2 + [
        EntryKind.VIDEO
    ]
    assert entries[3].label == "[1.00s]"
    assert entries[3].ids == (6, 6, 6) and entries[5].tid == 6


def test_audio_video_interleave_by_chunk():
    m = MediaManifest((MediaSegment.video(1, 1, [0.0, 1.0, 2.0, 3.0]), MediaSegment.audio(4.0)))
    cfg = PositionConfig(chunk_ms=2000)
    kinds = [e.kind for e in assign_positions(m, NO_STAMPS, cfg).entries]
    per_chunk = 2000 // 160 + 1  # frames starting inside [0, 2 s)
    assert kinds[:2] == [EntryKind.VIDEO] * 2
    assert kinds[2 : 2 + per_chunk] == [EntryKind.AUDIO] * per_chunk
    assert kinds[2 + per_chunk : 4 + per_chunk] == [EntryKind.VIDEO] * 2
    unpaired = assign_positions(m, NO_STAMPS, PositionConfig(pair_audio_with_video=False))
    assert len(unpaired.blocks()) == 2


def test_budget_examples():
    r = context_budget(MediaManifest((MediaSegment.text(100),)), NO_STAMPS)
    assert (r.total, r.fits) == (100, True)
    r = context_budget(MediaManifest((MediaSegment.audio(36000),)), NO_STAMPS)
    assert (r.total, r.limit, r.fits) == (225_000, 262_144, True)
    video = MediaSegment.video(15, 20, [float(i) for i in range(400)])
    r = context_budget(MediaManifest((video, MediaSegment.audio(400))), NO_STAMPS, tokens_per_video_frame=300)
    assert (r.total, r.fits) == (122_500, True)


def test_budget_over_limit():
    r = context_budget(MediaManifest((MediaSegment.text(10),), context_limit=9), NO_STAMPS)
    assert not r.fits


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

grids = st.tuples(st.integers(1, 4), st.integers(1, 4))


@st.composite
def segments(draw):
    kind = draw(st.sampled_from(["text", "image", "video", "audio"]))
    if kind == "text":
        return MediaSegment.text(draw(st.integers(1, 20)))
    if kind == "image":
        return MediaSegment.image(*draw(grids))
    if kind == "audio":
        return MediaSegment.audio(draw(st.integers(1, 30_000)) / 1000)
    times = sorted(draw(st.sets(st.integers(0, 20_000), min_size=1, max_size=8)))
    return MediaSegment.video(*draw(grids), [t / 1000 for t in times])


manifests = st.lists(segments(), min_size=1, max_size=6).map(lambda s: MediaManifest(tuple(s)))
stamp_configs = st.builds(
    TimestampConfig,
    enabled=st.booleans(),
    tokens_per_stamp=st.integers(1, 4),
    audio_interval_ms=st.tuples(st.integers(100, 2000), st.integers(0, 3000)).map(lambda p: (p[0], p[0] + p[1])),
    seed=st.integers(0, 2**63),
)
position_configs = st.builds(
    PositionConfig, chunk_ms=st.integers(100, 5000), pair_audio_with_video=st.booleans()
)


@settings(max_examples=150)
@given(manifests, stamp_configs, position_configs)
def test_blocks_are_contiguous(m, ts, cfg):
    blocks = assign_positions(m, ts, cfg).blocks()
    top = -1
    for block in blocks:
        ids = [i for e in block for i in e.ids]
        assert min(ids) == top + 1
        top = max(ids)


@settings(max_examples=150)
@given(manifests, stamp_configs, position_configs)
def test_audio_temporal_resolution(m, ts, cfg):
    by_seg: dict[int, list] = {}
    for e in assign_positions(m, ts, cfg).entries:
        if e.kind is EntryKind.AUDIO:
            by_seg.setdefault(e.segment, []).append(e)
    for audio in by_seg.values():
        for i, e in enumerate(audio):
            assert e.token == i
            assert e.tid - audio[0].tid == i


@settings(max_examples=150)
@given(manifests, stamp_configs, position_configs)
def test_stamp_values_increase_and_gaps_in_range(m, ts, cfg):
    stamps: dict[int, list[int]] = {}
    for e in assign_positions(m, ts, cfg).entries:
        if e.kind is EntryKind.TIMESTAMP:
            vals = stamps.setdefault(e.segment, [])
            if not vals or vals[-1] != e.token:
                vals.append(e.token)
    lo, hi = ts.audio_interval_ms
    for si, vals in stamps.items():
        assert all(b > a for a, b in zip(vals, vals[1:]))
        if m.segments[si].duration_ms is not None:
            assert all(lo <= b - a <= hi for a, b in zip(vals, vals[1:]))


@settings(max_examples=50)
@given(manifests, stamp_configs, position_configs)
def test_deterministic(m, ts, cfg):
    a = assign_positions(m, ts, cfg).to_text()
    b = assign_positions(m, ts, cfg).to_text()
    assert a == b
    assert context_budget(m, ts, 7, cfg).to_dict() == context_budget(m, ts, 7, cfg).to_dict()


@settings(max_examples=150)
@given(manifests, stamp_configs, st.integers(1, 500), st.data())
def test_budget_additivity(m, ts, per_frame, data):
    full = context_budget(m, ts, per_frame)
    assert full.total == sum(full.per_segment_tokens) + full.timestamp_tokens
    i = data.draw(st.integers(0, len(m.segments) - 1))
    less = context_budget(m.without(i), ts, per_frame)
    assert full.total - less.total == full.per_segment_tokens[i] + full.per_segment_timestamp_tokens[i]


@settings(max_examples=100)
@given(manifests, stamp_configs)
def test_table_size_matches_budget_except_video(m, ts):
    # the table spells video out by grid, the budget by a per-frame constant
    t = assign_positions(m, ts)
    r = context_budget(m, ts)
    video_grid = sum(len(s.frame_timestamps_ms) * s.grid[0] * s.grid[1] for s in m.segments if s.grid and s.frame_timestamps_ms)
    video_budget = sum(len(s.frame_timestamps_ms) * 300 for s in m.segments if s.frame_timestamps_ms)
    assert len(t) == r.total - video_budget + video_grid


def test_ten_hour_table_is_fast():
    t = assign_positions(MediaManifest((MediaSegment.audio(36000),)), NO_STAMPS)
    assert len(t) == 225_000 and t.entries[-1].tid == 224_999
