"""Command-line front end.

    omnistream schedule --text 2 --speech 4
    omnistream positions --input manifest.json --format text
    omnistream budget --input manifest.json --set timestamps.enabled=false
    omnistream simulate --input scenario.json --set stage.thinker_tpop_ms=0
    omnistream sweep --input sweep.json --format csv --workers 4

Exit codes: 0 success, 1 domain error (structured error report on the output
stream), 2 usage error.  Every random draw flows from ``--seed`` (default 0).
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import aria, mrope, sim
from .codec import CodecLayout
from .core import (
    MediaManifest,
    OmniStreamError,
    PrefixCount,
    Violation,
    format_rational,
    parse_rational,
    seconds_to_ms,
)
from .schema import SchemaError, load_json, manifest_from_obj, parse_manifest

SUBCOMMANDS = ("schedule", "positions", "budget", "simulate", "sweep")
FORMATS = ("json", "csv", "text")
DEFAULT_FORMAT = {"schedule": "text", "positions": "text", "budget": "json", "simulate": "json", "sweep": "csv"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Flat configuration namespace shared by --set, scenario files and sweep grids
# ---------------------------------------------------------------------------


def _bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _int(v: Any) -> int:
    if isinstance(v, bool):
        raise ValueError(f"not an integer: {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, str) and v.strip().lstrip("-").isdigit():
        return int(v)
    raise ValueError(f"not an integer: {v!r}")


def _opt_int(v: Any) -> int | None:
    return None if v is None or v == "" or v == "none" else _int(v)


def _float(v: Any) -> float:
    if isinstance(v, bool):
        raise ValueError(f"not a number: {v!r}")
    return float(v)


def _opt_float(v: Any) -> float | None:
    return None if v is None or v == "" or v == "none" else _float(v)


def _opt_bool(v: Any) -> bool | None:
    return None if v is None or v == "" or v == "none" else _bool(v)


def _ratio(v: Any) -> str:
    if isinstance(v, bool):
        raise ValueError(f"not a ratio: {v!r}")
    return format_rational(parse_rational(str(v)))


def _choice(*choices: str) -> Callable[[Any], str]:
    def parse(v: Any) -> str:
        s = str(v)
        if s not in choices:
            raise ValueError(f"expected one of {list(choices)}, got {v!r}")
        return s

    return parse


@dataclass(frozen=True)
class Option:
    default: Any
    coerce: Callable[[Any], Any]


OPTIONS: dict[str, Option] = {
    "manifest.audio_frame_seconds": Option(None, _opt_float),
    "manifest.context_limit": Option(None, _opt_int),
    "timestamps.enabled": Option(True, _bool),
    "timestamps.format": Option("[%.2fs]", str),
    "timestamps.tokens_per_stamp": Option(5, _int),
    "timestamps.audio_interval_min_ms": Option(4000, _int),
    "timestamps.audio_interval_max_ms": Option(12000, _int),
    "positions.chunk_seconds": Option(2.0, _float),
    "positions.audio_rounding": Option("ceil", _choice("ceil", "floor", "round")),
    "positions.pair_audio_with_video": Option(True, _bool),
    "budget.tokens_per_video_frame": Option(mrope.DEFAULT_TOKENS_PER_VIDEO_FRAME, _int),
    "scenario.input_mode": Option("PRELOADED", _choice("PRELOADED", "REAL_TIME_STREAM")),
    "scenario.aria_ratio": Option("2/1", _ratio),
    "scenario.text_len": Option(32, _int),
    "scenario.speech_len": Option(None, _opt_int),
    "scenario.concurrency": Option(1, _int),
    "codec.num_codebooks": Option(CodecLayout.num_codebooks, _int),
    "codec.codebook_size": Option(CodecLayout.codebook_size, _int),
    "codec.frame_rate_hz": Option(CodecLayout.frame_rate_hz, _float),
    "codec.chunk_frames": Option(CodecLayout.chunk_frames, _int),
    "stages.variant": Option("flash-audio", str),
    "stage.thinker_ttft_ms": Option(None, _opt_float),
    "stage.thinker_tpop_ms": Option(None, _opt_float),
    "stage.talker_tpop_ms": Option(None, _opt_float),
    "stage.codec_decode_lo_ms": Option(None, _opt_float),
    "stage.codec_decode_hi_ms": Option(None, _opt_float),
    "stage.codec_jitter": Option(None, _opt_bool),
    "stage.encoder_chunk_ms": Option(None, _opt_float),
    "stage.prefill_chunk_seconds": Option(None, _opt_float),
}

_POSITION_KEYS = [k for k in OPTIONS if k.split(".")[0] in ("manifest", "timestamps", "positions")]
_SIM_KEYS = [k for k in OPTIONS if k.split(".")[0] in ("manifest", "scenario", "codec", "stages", "stage")]
KEYS_FOR = {
    "schedule": [],
    "positions": _POSITION_KEYS,
    "budget": _POSITION_KEYS + ["budget.tokens_per_video_frame"],
    "simulate": _SIM_KEYS,
    "sweep": _SIM_KEYS,
}


def _set(cfg: dict[str, Any], key: str, value: Any, allowed: Sequence[str], where: str) -> None:
    if key not in allowed:
        raise UsageError(f"unknown configuration key {key!r} in {where}")
    try:
        cfg[key] = OPTIONS[key].coerce(value)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad value for {key!r} in {where}: {exc}") from None


def apply_overrides(cfg: dict[str, Any], overrides: Sequence[str], allowed: Sequence[str]) -> dict[str, Any]:
    cfg = dict(cfg)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        _set(cfg, key.strip(), value, allowed, "--set")
    return cfg


def defaults_for(subcommand: str) -> dict[str, Any]:
    return {k: OPTIONS[k].default for k in KEYS_FOR[subcommand]}


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _manifest_with(cfg: dict[str, Any], m: MediaManifest) -> MediaManifest:
    if cfg.get("manifest.audio_frame_seconds") is not None:
        m = replace(m, audio_frame_ms=seconds_to_ms(cfg["manifest.audio_frame_seconds"]))
    if cfg.get("manifest.context_limit") is not None:
        m = replace(m, context_limit=cfg["manifest.context_limit"])
    return m


def timestamp_config(cfg: dict[str, Any], seed: int) -> mrope.TimestampConfig:
    return mrope.TimestampConfig(
        enabled=cfg["timestamps.enabled"],
        format=cfg["timestamps.format"],
        tokens_per_stamp=cfg["timestamps.tokens_per_stamp"],
        audio_interval_ms=(cfg["timestamps.audio_interval_min_ms"], cfg["timestamps.audio_interval_max_ms"]),
        seed=seed,
    )


def position_config(cfg: dict[str, Any]) -> mrope.PositionConfig:
    return mrope.PositionConfig(
        chunk_ms=seconds_to_ms(cfg["positions.chunk_seconds"]),
        audio_rounding=mrope.Rounding(cfg["positions.audio_rounding"]),
        pair_audio_with_video=cfg["positions.pair_audio_with_video"],
    )


def stage_model(cfg: dict[str, Any], inline: dict | None = None) -> sim.StageModel:
    if inline is not None:
        stages = sim.StageModel.from_dict(inline.get("name", "inline"), inline)
    else:
        bundled = sim.bundled_stage_models()
        name = cfg["stages.variant"]
        if name not in bundled:
            raise UsageError(f"unknown stage variant {name!r}; bundled: {sorted(bundled)}")
        stages = bundled[name]
    uniform = {
        k.split(".", 1)[1]: cfg[k]
        for k in ("stage.thinker_ttft_ms", "stage.thinker_tpop_ms", "stage.talker_tpop_ms")
        if cfg.get(k) is not None
    }
    if uniform:
        stages = stages.with_uniform(**uniform)
    lo, hi = stages.codec_decode_ms
    if cfg.get("stage.codec_decode_lo_ms") is not None:
        lo = cfg["stage.codec_decode_lo_ms"]
    if cfg.get("stage.codec_decode_hi_ms") is not None:
        hi = cfg["stage.codec_decode_hi_ms"]
    changes: dict[str, Any] = {"codec_decode_ms": (lo, hi)}
    if cfg.get("stage.codec_jitter") is not None:
        changes["codec_jitter"] = cfg["stage.codec_jitter"]
    if cfg.get("stage.encoder_chunk_ms") is not None:
        changes["encoder_chunk_ms"] = cfg["stage.encoder_chunk_ms"]
    if cfg.get("stage.prefill_chunk_seconds") is not None:
        changes["prefill_chunk_seconds"] = cfg["stage.prefill_chunk_seconds"]
    return replace(stages, **changes)


def build_scenario(cfg: dict[str, Any], manifest: MediaManifest, seed: int, name: str = "") -> sim.Scenario:
    return sim.Scenario(
        manifest=_manifest_with(cfg, manifest),
        input_mode=sim.InputMode(cfg["scenario.input_mode"]),
        aria_ratio=parse_rational(cfg["scenario.aria_ratio"]),
        text_len=cfg["scenario.text_len"],
        speech_len=cfg["scenario.speech_len"],
        layout=CodecLayout(
            num_codebooks=cfg["codec.num_codebooks"],
            codebook_size=cfg["codec.codebook_size"],
            frame_rate_hz=cfg["codec.frame_rate_hz"],
            chunk_frames=cfg["codec.chunk_frames"],
        ),
        concurrency=cfg["scenario.concurrency"],
        seed=seed,
        name=name,
    )


_SCENARIO_FIELDS = {
    "input_mode": "scenario.input_mode",
    "aria_ratio": "scenario.aria_ratio",
    "text_len": "scenario.text_len",
    "speech_len": "scenario.speech_len",
    "concurrency": "scenario.concurrency",
}
_LAYOUT_FIELDS = ("num_codebooks", "codebook_size", "frame_rate_hz", "chunk_frames")


@dataclass
class ScenarioDoc:
    cfg: dict[str, Any]
    manifest: MediaManifest = field(default_factory=MediaManifest)
    stages_inline: dict | None = None
    name: str = ""


def scenario_from_obj(obj: Any, base: ScenarioDoc, allowed: Sequence[str], path: str) -> ScenarioDoc:
    """Layer a scenario object over ``base``; file fields map onto the flat keys."""
    if not isinstance(obj, dict):
        raise SchemaError([_v(path or "$", "scenario must be an object")])
    doc = ScenarioDoc(dict(base.cfg), base.manifest, base.stages_inline, base.name)
    known = set(_SCENARIO_FIELDS) | {"name", "manifest", "layout", "stages"}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise SchemaError([_v(f"{path}{k}", "unexpected field") for k in unknown])
    where = f"scenario file {path.rstrip('.') or '$'}"
    try:
        for k, key in _SCENARIO_FIELDS.items():
            if k in obj:
                _set(doc.cfg, key, obj[k], allowed, where)
        layout = obj.get("layout", {})
        if not isinstance(layout, dict) or set(layout) - set(_LAYOUT_FIELDS):
            raise SchemaError([_v(f"{path}layout", f"expected an object with keys from {list(_LAYOUT_FIELDS)}")])
        for k, v in layout.items():
            _set(doc.cfg, f"codec.{k}", v, allowed, where)
    except UsageError as exc:
        raise SchemaError([_v(path or "$", str(exc))]) from None
    if "name" in obj:
        doc.name = str(obj["name"])
    if "manifest" in obj:
        doc.manifest = manifest_from_obj(obj["manifest"], f"{path}manifest")
    stages = obj.get("stages")
    if isinstance(stages, str):
        doc.cfg["stages.variant"] = stages
        doc.stages_inline = None
    elif isinstance(stages, dict):
        doc.stages_inline = stages
    elif stages is not None:
        raise SchemaError([_v(f"{path}stages", "expected a variant name or a stage table")])
    return doc


def _v(path: str, message: str) -> Violation:
    return Violation(path, message)


# ---------------------------------------------------------------------------
# Output rendering
# ---------------------------------------------------------------------------


def _json(obj: Any) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for r in rows:
        w.writerow(["" if x is None else x for x in r])
    return buf.getvalue().encode("utf-8")


def _kv_text(d: dict[str, Any], prefix: str = "") -> str:
    lines = []
    for k in sorted(d):
        v = d[k]
        if isinstance(v, dict):
            lines.append(_kv_text(v, f"{prefix}{k}."))
        else:
            lines.append(f"{prefix}{k}: {json.dumps(v) if isinstance(v, (list, bool)) or v is None else v}\n")
    return "".join(lines)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    subcommand: str
    input_path: str | None = None
    output_path: str | None = None
    output_format: str | None = None
    seed: int = 0
    overrides: list[str] = field(default_factory=list)
    # schedule
    text: int | None = None
    speech: int | None = None
    ratio: str | None = None
    prefix_text: int = 0
    prefix_speech: int = 0
    check: str | None = None
    # simulate / sweep
    trace_path: str | None = None
    workers: int = 1

    @property
    def fmt(self) -> str:
        return self.output_format or DEFAULT_FORMAT[self.subcommand]


def _read_input(rc: RunConfig, required: bool) -> bytes | None:
    if rc.input_path is None:
        if required:
            raise UsageError(f"{rc.subcommand} requires --input")
        return None
    p = Path(rc.input_path)
    if not p.is_file():
        raise UsageError(f"input file not found: {rc.input_path}")
    return p.read_bytes()


def _cmd_schedule(rc: RunConfig) -> bytes | tuple[int, bytes]:
    if rc.overrides:
        apply_overrides({}, rc.overrides, KEYS_FOR["schedule"])
    if rc.text is None or rc.speech is None:
        raise UsageError("schedule requires --text and --speech")
    try:
        ratio = parse_rational(rc.ratio) if rc.ratio is not None else None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    budget = aria.AriaBudget(rc.text, rc.speech, ratio)
    echo = {
        "text_total": rc.text,
        "speech_total": rc.speech,
        "ratio": format_rational(budget.ratio),
        "ratio_source": "explicit" if ratio is not None else "totals",
        "prefix_text": rc.prefix_text,
        "prefix_speech": rc.prefix_speech,
        "policy": "eager",
    }
    if rc.check is not None:
        violation = aria.check_plan(rc.check.strip(), budget)
        result = {
            "ok": violation is None,
            "violation": None
            if violation is None
            else {
                "kind": violation.kind.value,
                "index": violation.index,
                "text_emitted": violation.prefix.text_emitted,
                "speech_emitted": violation.prefix.speech_emitted,
            },
        }
        # a failing check is reported like any other domain error: exit 1
        code = 0 if violation is None else 1
        if rc.fmt == "json":
            return code, _json({**result, "plan": rc.check.strip(), "config_echo": echo})
        if rc.fmt == "csv":
            v = result["violation"] or {}
            return code, _csv(
                ["ok", "kind", "index", "text_emitted", "speech_emitted"],
                [[result["ok"], v.get("kind"), v.get("index"), v.get("text_emitted"), v.get("speech_emitted")]],
            )
        return code, (("ok" if violation is None else f"violation: {violation}") + "\n").encode()

    if rc.prefix_text or rc.prefix_speech:
        plan = aria.resume(budget, PrefixCount(rc.prefix_text, rc.prefix_speech))
        mode = "resume"
    else:
        plan = aria.plan_eager(budget)
        mode = "full"
    if rc.fmt == "json":
        need = aria.first_speech_text_need(budget.ratio) if budget.ratio.numerator else None
        return _json({"plan": plan.line, "mode": mode, "first_speech_text_need": need, "config_echo": echo})
    if rc.fmt == "csv":
        return _csv(["index", "symbol"], list(enumerate(plan.line)))
    return (plan.line + "\n").encode()


def _cmd_positions(rc: RunConfig) -> bytes:
    cfg = apply_overrides(defaults_for("positions"), rc.overrides, KEYS_FOR["positions"])
    manifest = _manifest_with(cfg, parse_manifest(_read_input(rc, True)))
    table = mrope.assign_positions(manifest, timestamp_config(cfg, rc.seed), position_config(cfg))
    if rc.fmt == "json":
        return _json({"count": len(table), "entries": table.rows(), "config_echo": {**cfg, "seed": rc.seed}})
    if rc.fmt == "csv":
        rows = table.rows()
        header = ["block", "segment", "token", "kind", "tid", "hid", "wid", "label"]
        return _csv(header, [[r[h] for h in header] for r in rows])
    return table.to_text().encode()


def _cmd_budget(rc: RunConfig) -> bytes:
    cfg = apply_overrides(defaults_for("budget"), rc.overrides, KEYS_FOR["budget"])
    manifest = _manifest_with(cfg, parse_manifest(_read_input(rc, True)))
    report = mrope.context_budget(
        manifest, timestamp_config(cfg, rc.seed), cfg["budget.tokens_per_video_frame"], position_config(cfg)
    )
    if rc.fmt == "json":
        return _json({**report.to_dict(), "config_echo": {**cfg, "seed": rc.seed}})
    if rc.fmt == "csv":
        rows = [
            [i, s.kind.value, n, ts]
            for i, (s, n, ts) in enumerate(
                zip(manifest.segments, report.per_segment_tokens, report.per_segment_timestamp_tokens)
            )
        ]
        rows.append(["total", "", report.total - report.timestamp_tokens, report.timestamp_tokens])
        return _csv(["segment", "kind", "tokens", "timestamp_tokens"], rows)
    return _kv_text(report.to_dict()).encode()


def _sim_echo(cfg: dict[str, Any], stages: sim.StageModel, seed: int) -> dict[str, Any]:
    return {**cfg, "seed": seed, "resolved_stages": stages.to_dict()}


def _cmd_simulate(rc: RunConfig) -> bytes:
    allowed = KEYS_FOR["simulate"]
    raw = _read_input(rc, False)
    obj = load_json(raw) if raw is not None else {}
    doc = scenario_from_obj(obj, ScenarioDoc({k: OPTIONS[k].default for k in allowed}), allowed, "")
    doc.cfg = apply_overrides(doc.cfg, rc.overrides, allowed)
    stages = stage_model(doc.cfg, doc.stages_inline)
    scenario = build_scenario(doc.cfg, doc.manifest, rc.seed, doc.name)
    trace, report = sim.simulate(scenario, stages)
    if rc.trace_path:
        Path(rc.trace_path).write_text(trace.to_text(), encoding="utf-8")
    if rc.fmt == "json":
        return _json(
            {
                "name": doc.name,
                "report": report.metrics(),
                "metadata": dict(report.metadata),
                "config_echo": _sim_echo(doc.cfg, stages, rc.seed),
            }
        )
    if rc.fmt == "csv":
        return _csv(["name", *report.FIELDS], [[doc.name, *report.metrics().values()]])
    return _kv_text({"report": report.metrics(), "metadata": dict(report.metadata)}).encode()


def _expand_sweep(
    obj: Any, allowed: Sequence[str], overrides: Sequence[str] = ()
) -> tuple[ScenarioDoc, list[ScenarioDoc]]:
    """Rows from explicit ``scenarios`` then the ``grid`` product; ``--set`` applies to the base only."""
    if not isinstance(obj, dict) or set(obj) - {"base", "grid", "scenarios"}:
        raise SchemaError([_v("$", "sweep file must be an object with keys base, grid, scenarios")])
    root = ScenarioDoc({k: OPTIONS[k].default for k in allowed})
    base = scenario_from_obj(obj.get("base", {}), root, allowed, "base.")
    base.cfg = apply_overrides(base.cfg, overrides, allowed)
    docs = []
    for i, s in enumerate(obj.get("scenarios", [])):
        docs.append(scenario_from_obj(s, base, allowed, f"scenarios[{i}]."))
    grid = obj.get("grid", {})
    if not isinstance(grid, dict) or not all(isinstance(v, list) for v in grid.values()):
        raise SchemaError([_v("grid", "expected an object of key -> list of values")])
    if grid:
        keys = list(grid)
        for values in itertools.product(*(grid[k] for k in keys)):
            d = ScenarioDoc(dict(base.cfg), base.manifest, base.stages_inline, base.name)
            parts = []
            for k, v in zip(keys, values):
                try:
                    _set(d.cfg, k, v, allowed, "sweep grid")
                except UsageError as exc:
                    raise SchemaError([_v(f"grid.{k}", str(exc))]) from None
                parts.append(f"{k}={d.cfg[k]}")
            d.name = ";".join(parts) if not base.name else f"{base.name};" + ";".join(parts)
            docs.append(d)
    if not obj.get("scenarios") and not grid and "base" in obj:
        docs.append(base)
    return base, docs


def _cmd_sweep(rc: RunConfig) -> bytes:
    allowed = KEYS_FOR["sweep"]
    raw = _read_input(rc, True)
    base, docs = _expand_sweep(load_json(raw), allowed, rc.overrides)
    stages = stage_model(base.cfg, base.stages_inline)
    scenarios = [build_scenario(d.cfg, d.manifest, rc.seed, d.name) for d in docs]
    rows = sim.sweep(scenarios, stages, workers=rc.workers)
    fields = sim.ScenarioReport.FIELDS
    if rc.fmt == "json":
        return _json(
            {
                "rows": [
                    {
                        "name": r.name,
                        "concurrency": r.concurrency,
                        "chunk_frames": r.chunk_frames,
                        "status": "ok" if r.report else "failed",
                        "error": r.error,
                        "report": r.report.metrics() if r.report else None,
                    }
                    for r in rows
                ],
                "config_echo": _sim_echo(base.cfg, stages, rc.seed),
            }
        )
    header = ["name", "concurrency", "chunk_frames", "status", *fields, "error"]
    table = [
        [r.name, r.concurrency, r.chunk_frames, "ok" if r.report else "failed"]
        + [getattr(r.report, f) if r.report else None for f in fields]
        + [r.error]
        for r in rows
    ]
    if rc.fmt == "csv":
        return _csv(header, table)
    cells = [header] + [["" if x is None else (f"{x:.4f}" if isinstance(x, float) else str(x)) for x in row] for row in table]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n" for row in cells).encode()


_COMMANDS = {
    "schedule": _cmd_schedule,
    "positions": _cmd_positions,
    "budget": _cmd_budget,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
}


def _error_report(exc: Exception, fmt: str) -> bytes:
    details = [str(v) for v in getattr(exc, "errors", None) or getattr(exc, "violations", None) or []]
    if fmt == "json":
        return _json({"error": {"type": type(exc).__name__, "message": str(exc), "details": details}})
    if fmt == "csv":
        return _csv(["type", "message"], [[type(exc).__name__, d] for d in (details or [str(exc)])])
    return "".join(f"error: {type(exc).__name__}: {d}\n" for d in (details or [str(exc)])).encode()


def run(rc: RunConfig) -> tuple[int, bytes]:
    """Execute one subcommand and return ``(exit code, report bytes)``."""
    if rc.subcommand not in _COMMANDS:
        return 2, f"unknown subcommand {rc.subcommand!r}\n".encode()
    if rc.fmt not in FORMATS:
        return 2, f"unknown format {rc.fmt!r}\n".encode()
    try:
        out = _COMMANDS[rc.subcommand](rc)
        return out if isinstance(out, tuple) else (0, out)
    except UsageError as exc:
        return 2, f"usage error: {exc}\n".encode()
    except (OmniStreamError, ValueError, TypeError, KeyError, RecursionError) as exc:
        return 1, _error_report(exc, rc.fmt)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", dest="input_path")
    common.add_argument("--output", dest="output_path")
    common.add_argument("--format", dest="output_format", choices=FORMATS)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    parser = argparse.ArgumentParser(prog="omnistream", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    p = sub.add_parser("schedule", parents=[common], help="interleave plan for text/speech totals")
    p.add_argument("--text", type=int, required=True)
    p.add_argument("--speech", type=int, required=True)
    p.add_argument("--ratio", help="explicit speech/text bound, e.g. 2/1")
    p.add_argument("--prefix-text", type=int, default=0)
    p.add_argument("--prefix-speech", type=int, default=0)
    p.add_argument("--check", metavar="LINE", help="validate a plan line instead of planning")
    sub.add_parser("positions", parents=[common], help="position IDs for a manifest")
    sub.add_parser("budget", parents=[common], help="context-budget token count for a manifest")
    p = sub.add_parser("simulate", parents=[common], help="simulate one scenario")
    p.add_argument("--trace", dest="trace_path", help="write the event trace to this path")
    p = sub.add_parser("sweep", parents=[common], help="simulate a table of scenarios")
    p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    rc = RunConfig(**vars(ns))
    code, out = run(rc)
    if code == 2:
        sys.stderr.write(out.decode())
        return code
    if rc.output_path:
        Path(rc.output_path).write_bytes(out)
    else:
        sys.stdout.buffer.write(out)
        sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
