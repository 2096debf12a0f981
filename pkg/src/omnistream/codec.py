"""Multi-codebook speech frames and causal chunking for the waveform renderer.

Each Talker step yields a base code; the MTP stage fills in the remaining
``Q - 1`` residual codes of the same frame.  Frames are grouped into chunks of
``chunk_frames`` before they are handed to the streaming decoder.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from .core import OmniStreamError


class ResidualArity(OmniStreamError):
    pass


class CodeOutOfRange(OmniStreamError):
    pass


class OutOfOrderFrame(OmniStreamError):
    pass


class FrameFormatError(OmniStreamError):
    pass


@dataclass(frozen=True)
class CodecLayout:
    num_codebooks: int = 8
    codebook_size: int = 2048
    frame_rate_hz: float = 12.5
    chunk_frames: int = 1

    def __post_init__(self):
        if self.num_codebooks < 1:
            raise ValueError("num_codebooks must be >= 1")
        if self.codebook_size < 2:
            raise ValueError("codebook_size must be >= 2")
        if not self.frame_rate_hz > 0:
            raise ValueError("frame_rate_hz must be positive")
        if self.chunk_frames < 1:
            raise ValueError("chunk_frames must be >= 1")


@dataclass(frozen=True)
class CodecFrame:
    index: int
    base: int
    residuals: tuple[int, ...] = ()

    @property
    def codes(self) -> tuple[int, ...]:
        return (self.base, *self.residuals)

    def to_line(self) -> str:
        return " ".join(str(x) for x in (self.index, *self.codes))


@dataclass(frozen=True)
class CodecChunk:
    first_frame_index: int
    frames: tuple[CodecFrame, ...]
    is_final: bool = False

    def __len__(self):
        return len(self.frames)


def _check_codes(layout: CodecLayout, base: int, residuals) -> None:
    if len(residuals) != layout.num_codebooks - 1:
        raise ResidualArity(f"expected {layout.num_codebooks - 1} residual codes, got {len(residuals)}")
    for c in (base, *residuals):
        if not 0 <= c < layout.codebook_size:
            raise CodeOutOfRange(f"code {c} outside [0, {layout.codebook_size})")


def make_frame(layout: CodecLayout, index: int, base: int, residuals: Iterable[int]) -> CodecFrame:
    residuals = tuple(residuals)
    _check_codes(layout, base, residuals)
    if index < 0:
        raise ValueError("frame index must be non-negative")
    return CodecFrame(index, base, residuals)


class FrameAssembler:
    """Numbers frames as they come out of the Talker/MTP pair."""

    def __init__(self, layout: CodecLayout, start_index: int = 0):
        self.layout = layout
        self.next_index = start_index

    def make_frame(self, base: int, residuals: Iterable[int]) -> CodecFrame:
        frame = make_frame(self.layout, self.next_index, base, residuals)
        self.next_index += 1
        return frame


class Chunker:
    """Accumulates frames and releases a chunk every ``chunk_frames`` frames."""

    def __init__(self, chunk_frames: int):
        if chunk_frames < 1:
            raise ValueError("chunk_frames must be >= 1")
        self.chunk_frames = chunk_frames
        self._pending: list[CodecFrame] = []
        self._last_index: int | None = None

    def push(self, frame: CodecFrame) -> CodecChunk | None:
        if self._last_index is not None and frame.index != self._last_index + 1:
            raise OutOfOrderFrame(f"frame {frame.index} pushed after frame {self._last_index}")
        self._last_index = frame.index
        self._pending.append(frame)
        if len(self._pending) == self.chunk_frames:
            return self._release(final=False)
        return None

    def flush(self) -> CodecChunk | None:
        if not self._pending:
            return None
        return self._release(final=True)

    def _release(self, final: bool) -> CodecChunk:
        frames = tuple(self._pending)
        self._pending.clear()
        return CodecChunk(frames[0].index, frames, final)


def chunk_frames(frames: Iterable[CodecFrame], chunk_frames: int) -> list[CodecChunk]:
    chunker = Chunker(chunk_frames)
    out = [c for c in map(chunker.push, frames) if c is not None]
    tail = chunker.flush()
    if tail is not None:
        out.append(tail)
    return out


def audio_seconds(frame_count: int, layout: CodecLayout) -> float:
    if frame_count < 0:
        raise ValueError("frame_count must be non-negative")
    return frame_count / layout.frame_rate_hz


# ---------------------------------------------------------------------------
# Line format: "index base r1 ... r(Q-1)", blank line after each chunk
# ---------------------------------------------------------------------------


def serialize_chunks(chunks: Iterable[CodecChunk]) -> str:
    return "".join("".join(f.to_line() + "\n" for f in c.frames) + "\n" for c in chunks)


def serialize_frames(frames: Iterable[CodecFrame]) -> str:
    return "".join(f.to_line() + "\n" for f in frames)


def parse_chunks(text: str, layout: CodecLayout | None = None) -> list[CodecChunk]:
    """Inverse of :func:`serialize_chunks`.

    The last chunk is marked final when it is shorter than ``layout.chunk_frames``.
    """
    groups: list[list[CodecFrame]] = [[]]
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            if groups[-1]:
                groups.append([])
            continue
        try:
            values = [int(x) for x in line.split()]
        except ValueError:
            raise FrameFormatError(f"line {lineno}: non-integer field") from None
        if len(values) < 2:
            raise FrameFormatError(f"line {lineno}: expected index and base code")
        index, base, *res = values
        frame = make_frame(layout, index, base, res) if layout else CodecFrame(index, base, tuple(res))
        groups[-1].append(frame)
    if not groups[-1]:
        groups.pop()
    out = []
    for i, g in enumerate(groups):
        final = i == len(groups) - 1 and layout is not None and len(g) < layout.chunk_frames
        out.append(CodecChunk(g[0].index, tuple(g), final))
    return out


def parse_frames(text: str, layout: CodecLayout | None = None) -> list[CodecFrame]:
    return [f for c in parse_chunks(text, layout) for f in c.frames]
