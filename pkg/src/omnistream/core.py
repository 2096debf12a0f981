"""Shared value types: exact ratios, stream symbols, media segments and manifests.

Everything here is immutable.  Times are held as integer milliseconds; seconds
only appear at construction helpers and in serialized output.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

DEFAULT_AUDIO_FRAME_SECONDS = 0.16
DEFAULT_CONTEXT_LIMIT = 262_144


class OmniStreamError(Exception):
    """Base class for domain errors raised by this package."""


class InvalidManifest(OmniStreamError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


# ---------------------------------------------------------------------------
# Rational ratios
# ---------------------------------------------------------------------------

Rational = Fraction


def rational(num: int, den: int = 1) -> Fraction:
    """Build a non-negative ratio in lowest terms."""
    if isinstance(num, bool) or isinstance(den, bool):
        raise TypeError("ratio parts must be integers")
    if not isinstance(num, int) or not isinstance(den, int):
        raise TypeError("ratio parts must be integers")
    if den <= 0:
        raise ValueError(f"ratio denominator must be positive, got {den}")
    if num < 0:
        raise ValueError(f"ratio numerator must be non-negative, got {num}")
    return Fraction(num, den)


def parse_rational(text: str) -> Fraction:
    """Parse ``"a/b"`` or ``"a"`` into an exact ratio.  Decimal strings are rejected."""
    parts = text.strip().split("/")
    if len(parts) > 2 or not all(p.strip().isdigit() for p in parts):
        raise ValueError(f"not a ratio of non-negative integers: {text!r}")
    num = int(parts[0])
    den = int(parts[1]) if len(parts) == 2 else 1
    return rational(num, den)


def rational_le(a: Fraction, b: Fraction) -> bool:
    # cross-multiplication keeps the comparison exact for any magnitude
    return a.numerator * b.denominator <= b.numerator * a.denominator


def format_rational(r: Fraction) -> str:
    return f"{r.numerator}/{r.denominator}"


# ---------------------------------------------------------------------------
# Output stream symbols
# ---------------------------------------------------------------------------


class StreamSymbol(enum.Enum):
    TEXT = "T"
    SPEECH = "S"


@dataclass(frozen=True)
class PrefixCount:
    text_emitted: int = 0
    speech_emitted: int = 0

    def __post_init__(self):
        if self.text_emitted < 0 or self.speech_emitted < 0:
            raise ValueError("prefix counts must be non-negative")

    def advance(self, symbol: StreamSymbol) -> PrefixCount:
        if symbol is StreamSymbol.TEXT:
            return PrefixCount(self.text_emitted + 1, self.speech_emitted)
        return PrefixCount(self.text_emitted, self.speech_emitted + 1)

    @classmethod
    def of(cls, slots) -> PrefixCount:
        t = sum(1 for s in slots if s is StreamSymbol.TEXT)
        return cls(t, len(slots) - t)


# ---------------------------------------------------------------------------
# Media description
# ---------------------------------------------------------------------------


class MediaKind(enum.Enum):
    TEXT = "TEXT"
    IMAGE = "IMAGE"
    VIDEO = "VIDEO"
    AUDIO = "AUDIO"


def seconds_to_ms(seconds: float) -> int:
    return round(seconds * 1000)


def ms_to_seconds(ms: int) -> float:
    return ms / 1000


@dataclass(frozen=True)
class MediaSegment:
    """One input run.  Only the fields belonging to ``kind`` should be set.

    Construction never raises on bad values; use :func:`manifest_validate`.
    """

    kind: MediaKind
    token_count: int | None = None
    grid: tuple[int, int] | None = None
    frame_timestamps_ms: tuple[int, ...] | None = None
    duration_ms: int | None = None

    @classmethod
    def text(cls, token_count: int) -> MediaSegment:
        return cls(MediaKind.TEXT, token_count=token_count)

    @classmethod
    def image(cls, rows: int, cols: int) -> MediaSegment:
        return cls(MediaKind.IMAGE, grid=(rows, cols))

    @classmethod
    def video(cls, rows: int, cols: int, frame_timestamps: list[float]) -> MediaSegment:
        return cls(
            MediaKind.VIDEO,
            grid=(rows, cols),
            frame_timestamps_ms=tuple(seconds_to_ms(t) for t in frame_timestamps),
        )

    @classmethod
    def audio(cls, duration: float) -> MediaSegment:
        return cls(MediaKind.AUDIO, duration_ms=seconds_to_ms(duration))

    @property
    def frame_timestamps(self) -> list[float] | None:
        if self.frame_timestamps_ms is None:
            return None
        return [ms_to_seconds(t) for t in self.frame_timestamps_ms]

    @property
    def duration(self) -> float | None:
        return None if self.duration_ms is None else ms_to_seconds(self.duration_ms)

    @property
    def media_ms(self) -> int:
        """Wall-clock length of the media the segment describes (0 for text and images)."""
        if self.kind is MediaKind.AUDIO:
            return self.duration_ms or 0
        if self.kind is MediaKind.VIDEO and self.frame_timestamps_ms:
            return self.frame_timestamps_ms[-1]
        return 0


@dataclass(frozen=True)
class MediaManifest:
    segments: tuple[MediaSegment, ...] = ()
    audio_frame_ms: int = seconds_to_ms(DEFAULT_AUDIO_FRAME_SECONDS)
    context_limit: int = DEFAULT_CONTEXT_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def audio_frame_seconds(self) -> float:
        return ms_to_seconds(self.audio_frame_ms)

    @property
    def media_ms(self) -> int:
        return sum(s.media_ms for s in self.segments)

    def without(self, index: int) -> MediaManifest:
        segs = self.segments[:index] + self.segments[index + 1 :]
        return MediaManifest(segs, self.audio_frame_ms, self.context_limit)


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


_KIND_FIELDS = {
    MediaKind.TEXT: {"token_count"},
    MediaKind.IMAGE: {"grid"},
    MediaKind.VIDEO: {"grid", "frame_timestamps_ms"},
    MediaKind.AUDIO: {"duration_ms"},
}
_ALL_FIELDS = ("token_count", "grid", "frame_timestamps_ms", "duration_ms")
_PUBLIC_NAME = {
    "token_count": "token_count",
    "grid": "grid",
    "frame_timestamps_ms": "frame_timestamps",
    "duration_ms": "duration",
}


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _segment_violations(seg: MediaSegment, path: str) -> list[Violation]:
    out: list[Violation] = []
    wanted = _KIND_FIELDS.get(seg.kind)
    if wanted is None:
        return [Violation(f"{path}.kind", f"unknown kind {seg.kind!r}")]
    for name in _ALL_FIELDS:
        present = getattr(seg, name) is not None
        if name in wanted and not present:
            out.append(Violation(f"{path}.{_PUBLIC_NAME[name]}", "missing field"))
        elif name not in wanted and present:
            out.append(Violation(f"{path}.{_PUBLIC_NAME[name]}", f"not allowed for {seg.kind.value}"))

    if "token_count" in wanted and seg.token_count is not None:
        if not _is_int(seg.token_count) or seg.token_count <= 0:
            out.append(Violation(f"{path}.token_count", "token_count must be a positive integer"))
    if "grid" in wanted and seg.grid is not None:
        if len(seg.grid) != 2 or not all(_is_int(g) and g > 0 for g in seg.grid):
            out.append(Violation(f"{path}.grid", "grid must be two positive integers"))
    if "frame_timestamps_ms" in wanted and seg.frame_timestamps_ms is not None:
        ts = seg.frame_timestamps_ms
        if not ts:
            out.append(Violation(f"{path}.frame_timestamps", "at least one frame required"))
        if any(t < 0 for t in ts):
            out.append(Violation(f"{path}.frame_timestamps", "timestamps must be non-negative"))
        if any(b <= a for a, b in zip(ts, ts[1:])):
            out.append(Violation(f"{path}.frame_timestamps", "timestamps not strictly increasing"))
    if "duration_ms" in wanted and seg.duration_ms is not None:
        if seg.duration_ms <= 0:
            out.append(Violation(f"{path}.duration", "duration must be positive"))
    return out


def manifest_validate(m: MediaManifest) -> list[Violation]:
    """Return every invariant breach in ``m``; an empty list means valid."""
    out: list[Violation] = []
    if not _is_int(m.audio_frame_ms) or m.audio_frame_ms <= 0:
        out.append(Violation("audio_frame_seconds", "audio frame length must be positive"))
    if not _is_int(m.context_limit) or m.context_limit <= 0:
        out.append(Violation("context_limit", "context limit must be a positive integer"))
    for i, seg in enumerate(m.segments):
        out.extend(_segment_violations(seg, f"segments[{i}]"))
    return out


def require_valid(m: MediaManifest) -> None:
    violations = manifest_validate(m)
    if violations:
        raise InvalidManifest(violations)
