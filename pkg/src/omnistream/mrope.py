"""Temporal/height/width position IDs for a multimodal input sequence.

Each modality block starts at one plus the largest ID used by the block before
it.  Audio gets one temporal ID per frame (160 ms by default); video frames get
temporal IDs from their timestamps at the same resolution, with the spatial
grid laid out like a still image.  Video frames and audio stretches are
preceded by rendered timestamp pseudo-tokens.
"""

from __future__ import annotations

import enum
import random
from collections.abc import Iterator
from dataclasses import dataclass, field

from .core import MediaKind, MediaManifest, MediaSegment, require_valid, seconds_to_ms

DEFAULT_TOKENS_PER_VIDEO_FRAME = 300


class Rounding(enum.Enum):
    CEIL = "ceil"
    FLOOR = "floor"
    ROUND = "round"


def _div_round(n: int, d: int, mode: Rounding) -> int:
    if mode is Rounding.CEIL:
        return -(-n // d)
    if mode is Rounding.FLOOR:
        return n // d
    return (2 * n + d) // (2 * d)  # half-up


def audio_frame_count_ms(duration_ms: int, frame_ms: int, rounding: Rounding = Rounding.CEIL) -> int:
    """Encoder frames for ``duration_ms`` of audio.

    Non-ceil modes may round a short clip down to zero; one frame is kept so
    that every audio segment stays visible to the model.
    """
    if duration_ms <= 0 or frame_ms <= 0:
        raise ValueError("duration and frame length must be positive")
    return max(1, _div_round(duration_ms, frame_ms, Rounding(rounding)))


def audio_frame_count(duration: float, frame: float = 0.16, rounding: Rounding | str = Rounding.CEIL) -> int:
    return audio_frame_count_ms(seconds_to_ms(duration), seconds_to_ms(frame), Rounding(rounding))


def video_frame_tid_ms(timestamp_ms: int, resolution_ms: int = 160) -> int:
    if timestamp_ms < 0:
        raise ValueError("timestamp must be non-negative")
    return _div_round(timestamp_ms, resolution_ms, Rounding.ROUND)


def video_frame_tid(timestamp: float, resolution: float = 0.16) -> int:
    """Temporal ID offset of a video frame, before block offsetting."""
    return video_frame_tid_ms(seconds_to_ms(timestamp), seconds_to_ms(resolution))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimestampConfig:
    """Timestamp pseudo-token insertion.

    Video frames always get a stamp; audio gets stamps at random gaps drawn
    uniformly (integer ms) from ``audio_interval_ms``.
    """

    enabled: bool = True
    format: str = "[%.2fs]"
    tokens_per_stamp: int = 5
    audio_interval_ms: tuple[int, int] = (4000, 12000)
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.audio_interval_ms
        if not 0 < lo <= hi:
            raise ValueError(f"audio interval must satisfy 0 < min <= max, got {self.audio_interval_ms}")
        if self.tokens_per_stamp < 1:
            raise ValueError("tokens_per_stamp must be >= 1")
        self.format % 1.0  # fail early on a bad template

    def render(self, ms: int) -> str:
        return self.format % (ms / 1000)


@dataclass(frozen=True)
class PositionConfig:
    chunk_ms: int = 2000
    audio_rounding: Rounding = Rounding.CEIL
    pair_audio_with_video: bool = True

    def __post_init__(self):
        object.__setattr__(self, "audio_rounding", Rounding(self.audio_rounding))
        if self.chunk_ms <= 0:
            raise ValueError("chunk length must be positive")


# ---------------------------------------------------------------------------
# Position table
# ---------------------------------------------------------------------------


class EntryKind(enum.Enum):
    TEXT = "TEXT"
    IMAGE = "IMAGE"
    VIDEO = "VIDEO"
    AUDIO = "AUDIO"
    TIMESTAMP = "TIMESTAMP"


@dataclass(frozen=True)
class PositionEntry:
    block: int
    segment: int
    token: int
    kind: EntryKind
    tid: int
    hid: int
    wid: int
    label: str | None = None

    @property
    def ids(self) -> tuple[int, int, int]:
        return (self.tid, self.hid, self.wid)


@dataclass(frozen=True)
class PositionTable:
    entries: tuple[PositionEntry, ...] = ()

    def __len__(self):
        return len(self.entries)

    def blocks(self) -> list[list[PositionEntry]]:
        out: list[list[PositionEntry]] = []
        for e in self.entries:
            if not out or out[-1][0].block != e.block:
                out.append([])
            out[-1].append(e)
        return out

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            line = f"{e.kind.value} {e.tid} {e.hid} {e.wid}"
            if e.label is not None:
                line += f" {e.label}"
            lines.append(line)
        return "\n".join(lines) + ("\n" if lines else "")

    def rows(self) -> list[dict]:
        return [
            {
                "block": e.block,
                "segment": e.segment,
                "token": e.token,
                "kind": e.kind.value,
                "tid": e.tid,
                "hid": e.hid,
                "wid": e.wid,
                "label": e.label or "",
            }
            for e in self.entries
        ]


@dataclass(frozen=True)
class Stamp:
    frame: int
    value_ms: int


def _audio_rng(ts: TimestampConfig, duration_ms: int) -> random.Random:
    # keyed on content, not position, so dropping a segment leaves the others' stamps intact
    return random.Random(f"audio-stamps:{ts.seed}:{duration_ms}")


def timestamp_plan(seg: MediaSegment, m: MediaManifest, ts: TimestampConfig, cfg: PositionConfig) -> list[Stamp]:
    """Where timestamps go inside one segment, as (frame index, value) pairs."""
    if not ts.enabled:
        return []
    if seg.kind is MediaKind.VIDEO:
        return [Stamp(f, t) for f, t in enumerate(seg.frame_timestamps_ms)]
    if seg.kind is MediaKind.AUDIO:
        n_frames = audio_frame_count_ms(seg.duration_ms, m.audio_frame_ms, cfg.audio_rounding)
        rng = _audio_rng(ts, seg.duration_ms)
        lo, hi = ts.audio_interval_ms
        out = []
        tau = 0
        while tau < seg.duration_ms:
            frame = tau // m.audio_frame_ms
            if frame >= n_frames:
                break
            out.append(Stamp(frame, tau))
            tau += rng.randint(lo, hi)
        return out
    return []


def _stamp_entries(stamps: list[Stamp], ts: TimestampConfig, block: int, segment: int, tid: int):
    for s in stamps:
        label = ts.render(s.value_ms)
        for _ in range(ts.tokens_per_stamp):
            yield (block, segment, s.value_ms, EntryKind.TIMESTAMP, tid, tid, tid, label)


def _group_blocks(m: MediaManifest, cfg: PositionConfig) -> list[tuple[int, ...]]:
    blocks = []
    i = 0
    segs = m.segments
    while i < len(segs):
        if (
            cfg.pair_audio_with_video
            and segs[i].kind is MediaKind.VIDEO
            and i + 1 < len(segs)
            and segs[i + 1].kind is MediaKind.AUDIO
        ):
            blocks.append((i, i + 1))
            i += 2
        else:
            blocks.append((i,))
            i += 1
    return blocks


def _stamps_by_frame(stamps: list[Stamp]) -> dict[int, list[Stamp]]:
    out: dict[int, list[Stamp]] = {}
    for s in stamps:
        out.setdefault(s.frame, []).append(s)
    return out


def _video_frame(seg, si, f, block, base, m, ts, stamps) -> Iterator[tuple]:
    rows, cols = seg.grid
    tid = base + video_frame_tid_ms(seg.frame_timestamps_ms[f], m.audio_frame_ms)
    yield from _stamp_entries(stamps.get(f, []), ts, block, si, tid)
    for r in range(rows):
        for c in range(cols):
            yield (block, si, f * rows * cols + r * cols + c, EntryKind.VIDEO, tid, base + r, base + c, None)


def _audio_frame(si, k, block, base, ts, stamps) -> Iterator[tuple]:
    tid = base + k
    yield from _stamp_entries(stamps.get(k, []), ts, block, si, tid)
    yield (block, si, k, EntryKind.AUDIO, tid, tid, tid, None)


def _block_entries(block: int, members: tuple[int, ...], base: int, m, ts, cfg) -> Iterator[tuple]:
    segs = [m.segments[i] for i in members]
    first = segs[0]
    si = members[0]
    if first.kind is MediaKind.TEXT:
        for j in range(first.token_count):
            yield (block, si, j, EntryKind.TEXT, base + j, base + j, base + j, None)
    elif first.kind is MediaKind.IMAGE:
        rows, cols = first.grid
        for r in range(rows):
            for c in range(cols):
                yield (block, si, r * cols + c, EntryKind.IMAGE, base, base + r, base + c, None)
    elif first.kind is MediaKind.AUDIO:
        n = audio_frame_count_ms(first.duration_ms, m.audio_frame_ms, cfg.audio_rounding)
        stamps = _stamps_by_frame(timestamp_plan(first, m, ts, cfg))
        for k in range(n):
            yield from _audio_frame(si, k, block, base, ts, stamps)
    elif len(segs) == 1:
        stamps = _stamps_by_frame(timestamp_plan(first, m, ts, cfg))
        for f in range(len(first.frame_timestamps_ms)):
            yield from _video_frame(first, si, f, block, base, m, ts, stamps)
    else:
        video, audio = segs
        ai = members[1]
        v_stamps = _stamps_by_frame(timestamp_plan(video, m, ts, cfg))
        a_stamps = _stamps_by_frame(timestamp_plan(audio, m, ts, cfg))
        n_audio = audio_frame_count_ms(audio.duration_ms, m.audio_frame_ms, cfg.audio_rounding)
        v_times = video.frame_timestamps_ms
        f = k = 0
        window_end = cfg.chunk_ms
        while f < len(v_times) or k < n_audio:
            while f < len(v_times) and v_times[f] < window_end:
                yield from _video_frame(video, si, f, block, base, m, ts, v_stamps)
                f += 1
            while k < n_audio and k * m.audio_frame_ms < window_end:
                yield from _audio_frame(ai, k, block, base, ts, a_stamps)
                k += 1
            window_end += cfg.chunk_ms


def assign_positions(
    m: MediaManifest, ts: TimestampConfig | None = None, cfg: PositionConfig | None = None
) -> PositionTable:
    """Position IDs for every model-input token of ``m``, in input order."""
    ts = ts or TimestampConfig()
    cfg = cfg or PositionConfig()
    require_valid(m)
    entries = []
    base = 0
    for b, members in enumerate(_group_blocks(m, cfg)):
        top = base - 1
        for raw in _block_entries(b, members, base, m, ts, cfg):
            e = PositionEntry(*raw)
            entries.append(e)
            top = max(top, e.tid, e.hid, e.wid)
        base = top + 1
    return PositionTable(tuple(entries))


# ---------------------------------------------------------------------------
# Context budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BudgetReport:
    per_segment_tokens: tuple[int, ...]
    per_segment_timestamp_tokens: tuple[int, ...]
    timestamp_tokens: int
    total: int
    limit: int
    fits: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "fits", self.total <= self.limit)

    def to_dict(self) -> dict:
        return {
            "per_segment_tokens": list(self.per_segment_tokens),
            "per_segment_timestamp_tokens": list(self.per_segment_timestamp_tokens),
            "timestamp_tokens": self.timestamp_tokens,
            "total": self.total,
            "limit": self.limit,
            "fits": self.fits,
        }


def segment_tokens(seg: MediaSegment, m: MediaManifest, cfg: PositionConfig, tokens_per_video_frame: int) -> int:
    if seg.kind is MediaKind.TEXT:
        return seg.token_count
    if seg.kind is MediaKind.IMAGE:
        return seg.grid[0] * seg.grid[1]
    if seg.kind is MediaKind.VIDEO:
        return len(seg.frame_timestamps_ms) * tokens_per_video_frame
    return audio_frame_count_ms(seg.duration_ms, m.audio_frame_ms, cfg.audio_rounding)


def context_budget(
    m: MediaManifest,
    ts: TimestampConfig | None = None,
    tokens_per_video_frame: int = DEFAULT_TOKENS_PER_VIDEO_FRAME,
    cfg: PositionConfig | None = None,
) -> BudgetReport:
    """Token count of ``m`` against its context limit.

    Video is costed at ``tokens_per_video_frame`` per frame rather than its
    grid, so long videos can be sized without spelling out patch grids.
    """
    ts = ts or TimestampConfig()
    cfg = cfg or PositionConfig()
    if tokens_per_video_frame < 1:
        raise ValueError("tokens_per_video_frame must be positive")
    require_valid(m)
    base = tuple(segment_tokens(s, m, cfg, tokens_per_video_frame) for s in m.segments)
    stamps = tuple(len(timestamp_plan(s, m, ts, cfg)) * ts.tokens_per_stamp for s in m.segments)
    return BudgetReport(base, stamps, sum(stamps), sum(base) + sum(stamps), m.context_limit)


def stream_ms(m: MediaManifest, cfg: PositionConfig | None = None) -> int:
    """Wall-clock length of the input stream; a paired video and audio track overlap."""
    cfg = cfg or PositionConfig()
    return sum(max(m.segments[i].media_ms for i in members) for members in _group_blocks(m, cfg))
