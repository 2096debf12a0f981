"""JSON input formats: media manifests and simulation scenarios.

Manifest::

    {"segments": [{"kind": "TEXT", "token_count": 12},
                  {"kind": "IMAGE", "grid": [2, 2]},
                  {"kind": "VIDEO", "grid": [2, 2], "frame_timestamps": [0.0, 1.0]},
                  {"kind": "AUDIO", "duration": 1.0}],
     "audio_frame_seconds": 0.16,
     "context_limit": 262144}

Scenario::

    {"name": "...", "manifest": {...}, "input_mode": "PRELOADED",
     "aria_ratio": "2/1", "text_len": 32, "speech_len": null, "concurrency": 1,
     "layout": {"num_codebooks": 8, "codebook_size": 2048,
                "frame_rate_hz": 12.5, "chunk_frames": 1},
     "stages": "flash-audio"}

``stages`` is either a bundled variant name or an inline stage table.
"""

from __future__ import annotations

import json
from typing import Any

from .core import (
    MediaKind,
    MediaManifest,
    MediaSegment,
    OmniStreamError,
    Violation,
    manifest_validate,
    seconds_to_ms,
)


class ParseError(OmniStreamError):
    pass


class SchemaError(OmniStreamError):
    def __init__(self, errors: list[Violation]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


class ValidationError(OmniStreamError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


_SEGMENT_FIELDS = {
    "TEXT": ("token_count",),
    "IMAGE": ("grid",),
    "VIDEO": ("grid", "frame_timestamps"),
    "AUDIO": ("duration",),
}
_MANIFEST_KEYS = {"segments", "audio_frame_seconds", "context_limit"}


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def load_json(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from None


def _segment(raw: Any, path: str, errors: list[Violation]) -> MediaSegment | None:
    if not isinstance(raw, dict):
        errors.append(Violation(path, "segment must be an object"))
        return None
    kind = raw.get("kind")
    if kind not in _SEGMENT_FIELDS:
        errors.append(Violation(f"{path}.kind", f"expected one of {sorted(_SEGMENT_FIELDS)}, got {kind!r}"))
        return None
    wanted = _SEGMENT_FIELDS[kind]
    n_before = len(errors)
    for name in wanted:
        if name not in raw:
            errors.append(Violation(f"{path}.{name}", "missing field"))
    for name in sorted(set(raw) - set(wanted) - {"kind"}):
        errors.append(Violation(f"{path}.{name}", f"unexpected field for {kind}"))

    fields: dict[str, Any] = {}
    if "token_count" in wanted and "token_count" in raw:
        if _is_int(raw["token_count"]):
            fields["token_count"] = raw["token_count"]
        else:
            errors.append(Violation(f"{path}.token_count", "expected an integer"))
    if "grid" in wanted and "grid" in raw:
        g = raw["grid"]
        if isinstance(g, list) and len(g) == 2 and all(_is_int(x) for x in g):
            fields["grid"] = (g[0], g[1])
        else:
            errors.append(Violation(f"{path}.grid", "expected [rows, cols] integers"))
    if "frame_timestamps" in wanted and "frame_timestamps" in raw:
        ts = raw["frame_timestamps"]
        if isinstance(ts, list) and all(_is_num(x) for x in ts):
            fields["frame_timestamps_ms"] = tuple(seconds_to_ms(x) for x in ts)
        else:
            errors.append(Violation(f"{path}.frame_timestamps", "expected a list of seconds"))
    if "duration" in wanted and "duration" in raw:
        if _is_num(raw["duration"]):
            fields["duration_ms"] = seconds_to_ms(raw["duration"])
        else:
            errors.append(Violation(f"{path}.duration", "expected a number of seconds"))
    if len(errors) != n_before:
        return None
    return MediaSegment(MediaKind(kind), **fields)


def manifest_from_obj(obj: Any, path: str = "") -> MediaManifest:
    prefix = f"{path}." if path else ""
    errors: list[Violation] = []
    if not isinstance(obj, dict):
        raise SchemaError([Violation(path or "$", "manifest must be an object")])
    for key in sorted(set(obj) - _MANIFEST_KEYS):
        errors.append(Violation(f"{prefix}{key}", "unexpected field"))
    segs_raw = obj.get("segments")
    segments: list[MediaSegment] = []
    if segs_raw is None:
        errors.append(Violation(f"{prefix}segments", "missing field"))
    elif not isinstance(segs_raw, list):
        errors.append(Violation(f"{prefix}segments", "expected an array"))
    else:
        for i, raw in enumerate(segs_raw):
            seg = _segment(raw, f"{prefix}segments[{i}]", errors)
            if seg is not None:
                segments.append(seg)
    kwargs: dict[str, Any] = {}
    if "audio_frame_seconds" in obj:
        if _is_num(obj["audio_frame_seconds"]):
            kwargs["audio_frame_ms"] = seconds_to_ms(obj["audio_frame_seconds"])
        else:
            errors.append(Violation(f"{prefix}audio_frame_seconds", "expected a number"))
    if "context_limit" in obj:
        if _is_int(obj["context_limit"]):
            kwargs["context_limit"] = obj["context_limit"]
        else:
            errors.append(Violation(f"{prefix}context_limit", "expected an integer"))
    if errors:
        raise SchemaError(errors)
    m = MediaManifest(tuple(segments), **kwargs)
    violations = manifest_validate(m)
    if violations:
        if path:
            violations = [Violation(f"{path}.{v.path}", v.message) for v in violations]
        raise ValidationError(violations)
    return m


def parse_manifest(data: bytes | str) -> MediaManifest:
    """Parse and validate a manifest document."""
    return manifest_from_obj(load_json(data))


def manifest_to_obj(m: MediaManifest) -> dict:
    segs = []
    for s in m.segments:
        d: dict[str, Any] = {"kind": s.kind.value}
        if s.token_count is not None:
            d["token_count"] = s.token_count
        if s.grid is not None:
            d["grid"] = list(s.grid)
        if s.frame_timestamps_ms is not None:
            d["frame_timestamps"] = s.frame_timestamps
        if s.duration_ms is not None:
            d["duration"] = s.duration
        segs.append(d)
    return {"segments": segs, "audio_frame_seconds": m.audio_frame_seconds, "context_limit": m.context_limit}
