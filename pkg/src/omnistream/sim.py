"""Discrete-event model of the streaming speech pipeline.

Stages, in dependency order:

* encoder prefill over temporal chunks of the input (sequential, one encoder);
* Thinker decode: first text token ``thinker_ttft`` after prefill completes,
  then one token per ``thinker_tpop``;
* Talker + MTP decode: one codec frame per ``talker_tpop``, each frame gated by
  the interleave ratio on the text tokens already out;
* codec decoder: one decode per chunk of ``chunk_frames`` frames (sequential).

All clock arithmetic is integer microseconds.  Latency metrics are measured
from the end of the user's input: time 0 for preloaded input, the end of the
stream for real-time input.
"""

from __future__ import annotations

import enum
import graphlib
import heapq
import json
import random
from collections.abc import Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources

from . import aria
from .codec import CodecLayout
from .core import MediaManifest, OmniStreamError, format_rational, require_valid
from .mrope import stream_ms


class UnconfiguredConcurrency(OmniStreamError):
    pass


class CycleDetected(OmniStreamError):
    pass


class NoSpeech(OmniStreamError):
    pass


def ms_to_us(ms: float) -> int:
    return round(ms * 1000)


def us_to_ms(us: int) -> float:
    return us / 1000


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StageModel:
    """Per-stage latencies for one model variant, keyed by concurrency level."""

    name: str
    thinker_ttft_ms: Mapping[int, float]
    thinker_tpop_ms: Mapping[int, float]
    talker_tpop_ms: Mapping[int, float]
    codec_decode_ms: tuple[float, float] = (3.0, 5.0)
    codec_jitter: bool = False
    encoder_chunk_ms: float = 0.0
    prefill_chunk_seconds: float = 2.0
    measured: Mapping[str, Mapping[int, float]] = field(default_factory=dict)

    def __post_init__(self):
        for attr in ("thinker_ttft_ms", "thinker_tpop_ms", "talker_tpop_ms"):
            table = {int(k): float(v) for k, v in getattr(self, attr).items()}
            if any(v < 0 for v in table.values()):
                raise ValueError(f"{attr} latencies must be non-negative")
            object.__setattr__(self, attr, table)
        levels = set(self.thinker_ttft_ms)
        if levels != set(self.thinker_tpop_ms) or levels != set(self.talker_tpop_ms):
            raise ValueError("latency tables must cover the same concurrency levels")
        lo, hi = (float(x) for x in self.codec_decode_ms)
        if not 0 <= lo <= hi:
            raise ValueError("codec decode interval must satisfy 0 <= lo <= hi")
        object.__setattr__(self, "codec_decode_ms", (lo, hi))
        if self.encoder_chunk_ms < 0:
            raise ValueError("encoder_chunk_ms must be non-negative")
        if not self.prefill_chunk_seconds > 0:
            raise ValueError("prefill_chunk_seconds must be positive")

    @property
    def levels(self) -> list[int]:
        return sorted(self.thinker_ttft_ms)

    def with_uniform(self, **values: float) -> StageModel:
        """Copy with the named per-level tables set to one value at every level."""
        tables = {k: {c: v for c in self.levels} for k, v in values.items()}
        return replace(self, **tables)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "thinker_ttft_ms": {str(k): v for k, v in sorted(self.thinker_ttft_ms.items())},
            "thinker_tpop_ms": {str(k): v for k, v in sorted(self.thinker_tpop_ms.items())},
            "talker_tpop_ms": {str(k): v for k, v in sorted(self.talker_tpop_ms.items())},
            "codec_decode_ms": list(self.codec_decode_ms),
            "codec_jitter": self.codec_jitter,
            "encoder_chunk_ms": self.encoder_chunk_ms,
            "prefill_chunk_seconds": self.prefill_chunk_seconds,
        }

    @classmethod
    def from_dict(cls, name: str, d: Mapping) -> StageModel:
        known = {
            "thinker_ttft_ms", "thinker_tpop_ms", "talker_tpop_ms", "codec_decode_ms",
            "codec_jitter", "encoder_chunk_ms", "prefill_chunk_seconds", "measured", "name",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown stage fields: {sorted(unknown)}")
        measured = {k: {int(c): float(v) for c, v in t.items()} for k, t in d.get("measured", {}).items()}
        return cls(
            name=d.get("name", name),
            thinker_ttft_ms=d["thinker_ttft_ms"],
            thinker_tpop_ms=d["thinker_tpop_ms"],
            talker_tpop_ms=d["talker_tpop_ms"],
            codec_decode_ms=tuple(d.get("codec_decode_ms", (3.0, 5.0))),
            codec_jitter=bool(d.get("codec_jitter", False)),
            encoder_chunk_ms=float(d.get("encoder_chunk_ms", 0.0)),
            prefill_chunk_seconds=float(d.get("prefill_chunk_seconds", 2.0)),
            measured=measured,
        )


def bundled_stage_models() -> dict[str, StageModel]:
    """Stage tables transcribed from published per-concurrency measurements."""
    raw = json.loads(resources.files("omnistream").joinpath("data/stages.json").read_text("utf-8"))
    return {name: StageModel.from_dict(name, d) for name, d in raw.items()}


class InputMode(enum.Enum):
    PRELOADED = "PRELOADED"
    REAL_TIME_STREAM = "REAL_TIME_STREAM"


@dataclass(frozen=True)
class Scenario:
    manifest: MediaManifest
    input_mode: InputMode = InputMode.PRELOADED
    aria_ratio: Fraction = Fraction(2)
    text_len: int = 32
    speech_len: int | None = None
    layout: CodecLayout = CodecLayout()
    concurrency: int = 1
    seed: int = 0
    name: str = ""

    @property
    def speech_total(self) -> int:
        """Speech frames to generate; defaults to the most the ratio admits for ``text_len``."""
        if self.speech_len is not None:
            return self.speech_len
        return aria.speech_allowance(self.text_len, self.aria_ratio)


# ---------------------------------------------------------------------------
# Resolved timings (shared by the simulator and the dependency graph)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Timings:
    ttft_us: int
    thinker_tpop_us: int
    talker_tpop_us: int
    encoder_chunk_us: int
    chunk_available_us: tuple[int, ...]
    codec_us: tuple[int, ...]
    origin_us: int
    text_total: int
    speech_total: int
    chunk_frames: int


def codec_latencies_us(stages: StageModel, n_chunks: int, seed: int) -> tuple[int, ...]:
    lo, hi = (ms_to_us(x) for x in stages.codec_decode_ms)
    if not stages.codec_jitter:
        return ((lo + hi) // 2,) * n_chunks
    rng = random.Random(seed)
    # lo + u*(hi-lo) keeps every draw monotone in both interval ends
    return tuple(lo + round(rng.random() * (hi - lo)) for _ in range(n_chunks))


def resolve(scenario: Scenario, stages: StageModel) -> Timings:
    c = scenario.concurrency
    if c not in stages.thinker_ttft_ms:
        raise UnconfiguredConcurrency(
            f"concurrency {c} not configured for {stages.name!r} (levels: {stages.levels})"
        )
    require_valid(scenario.manifest)
    T, S = scenario.text_len, scenario.speech_total
    if T < 0 or S < 0:
        raise ValueError("token counts must be non-negative")
    # raises InfeasibleRatio when the ratio can never admit S frames
    aria.plan_eager(aria.AriaBudget(T, S, scenario.aria_ratio))
    if S == 0:
        raise NoSpeech("scenario generates no speech frames")

    media_us = stream_ms(scenario.manifest) * 1000
    chunk_us = round(stages.prefill_chunk_seconds * 1_000_000)
    n_enc = -(-media_us // chunk_us)
    if scenario.input_mode is InputMode.PRELOADED:
        available = (0,) * n_enc
        origin = 0
    else:
        available = tuple(min((k + 1) * chunk_us, media_us) for k in range(n_enc))
        origin = media_us
    C = scenario.layout.chunk_frames
    n_codec = -(-S // C)
    return Timings(
        ttft_us=ms_to_us(stages.thinker_ttft_ms[c]),
        thinker_tpop_us=ms_to_us(stages.thinker_tpop_ms[c]),
        talker_tpop_us=ms_to_us(stages.talker_tpop_ms[c]),
        encoder_chunk_us=ms_to_us(stages.encoder_chunk_ms),
        chunk_available_us=available,
        codec_us=codec_latencies_us(stages, n_codec, scenario.seed),
        origin_us=origin,
        text_total=T,
        speech_total=S,
        chunk_frames=C,
    )


# ---------------------------------------------------------------------------
# Trace and report
# ---------------------------------------------------------------------------


class EventKind(enum.Enum):
    ENC_CHUNK_DONE = "ENC_CHUNK_DONE"
    TEXT_TOKEN = "TEXT_TOKEN"
    SPEECH_FRAME = "SPEECH_FRAME"
    CODEC_CHUNK_DONE = "CODEC_CHUNK_DONE"


@dataclass(frozen=True)
class Event:
    time_us: int
    kind: EventKind
    index: int


@dataclass(frozen=True)
class EventTrace:
    events: tuple[Event, ...]

    def of_kind(self, kind: EventKind) -> list[Event]:
        return [e for e in self.events if e.kind is kind]

    def interleave_line(self) -> str:
        return "".join(
            "T" if e.kind is EventKind.TEXT_TOKEN else "S"
            for e in self.events
            if e.kind in (EventKind.TEXT_TOKEN, EventKind.SPEECH_FRAME)
        )

    def to_text(self) -> str:
        return "".join(f"{e.time_us / 1000:.3f} {e.kind.value} {e.index}\n" for e in self.events)


@dataclass(frozen=True)
class ScenarioReport:
    ttft_ms: float
    ttfc_ms: float
    first_packet_ms: float
    thinker_tpop_ms: float
    talker_tpop_ms: float
    thinker_tps: float | None
    talker_tps: float | None
    generation_rtf: float
    first_packet_us: int
    metadata: Mapping[str, object] = field(default_factory=dict)

    FIELDS = (
        "ttft_ms", "ttfc_ms", "first_packet_ms", "thinker_tpop_ms", "talker_tpop_ms",
        "thinker_tps", "talker_tps", "generation_rtf",
    )

    def metrics(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}

    def to_dict(self) -> dict:
        return {**self.metrics(), "metadata": dict(self.metadata)}


def _tps(tpop_ms: float, concurrency: int) -> float | None:
    return None if tpop_ms == 0 else concurrency * 1000 / tpop_ms


def _report(trace: EventTrace, tm: Timings, scenario: Scenario) -> ScenarioReport:
    texts = trace.of_kind(EventKind.TEXT_TOKEN)
    frames = trace.of_kind(EventKind.SPEECH_FRAME)
    codec = trace.of_kind(EventKind.CODEC_CHUNK_DONE)
    o = tm.origin_us
    first_chunk_frame = frames[min(tm.chunk_frames, len(frames)) - 1]
    if len(texts) >= 2:
        thinker_us = (texts[-1].time_us - texts[0].time_us) / (len(texts) - 1)
    else:
        thinker_us = tm.thinker_tpop_us
    if len(frames) >= 2:
        talker_us = (frames[-1].time_us - frames[0].time_us) / (len(frames) - 1)
    else:
        talker_us = tm.talker_tpop_us
    thinker_tpop, talker_tpop = thinker_us / 1000, talker_us / 1000
    # wall seconds per frame divided by audio seconds per frame
    rtf = talker_us * scenario.layout.frame_rate_hz / 1_000_000
    line = trace.interleave_line()
    return ScenarioReport(
        ttft_ms=us_to_ms(texts[0].time_us - o),
        ttfc_ms=us_to_ms(first_chunk_frame.time_us - o),
        first_packet_ms=us_to_ms(codec[0].time_us - o),
        thinker_tpop_ms=thinker_tpop,
        talker_tpop_ms=talker_tpop,
        thinker_tps=_tps(thinker_tpop, scenario.concurrency),
        talker_tps=_tps(talker_tpop, scenario.concurrency),
        generation_rtf=rtf,
        first_packet_us=codec[0].time_us - o,
        metadata={
            "ttfc_origin": "input_end",
            "ttfc_from_first_text_ms": us_to_ms(first_chunk_frame.time_us - texts[0].time_us),
            "text_needed_for_first_frame": aria.first_speech_text_need(scenario.aria_ratio),
            "text_done_at_first_frame": line.index("S"),
            "text_tokens": len(texts),
            "speech_frames": len(frames),
            "codec_chunks": len(codec),
            "audio_seconds": len(frames) / scenario.layout.frame_rate_hz,
            "input_end_ms": us_to_ms(o),
            "aria_ratio": format_rational(scenario.aria_ratio),
        },
    )


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

_ARRIVAL = "ARRIVAL"


class _Sim:
    def __init__(self, tm: Timings, ratio: Fraction):
        self.tm = tm
        self.gate = aria.StreamingPlanner(ratio)
        self.queue: list[tuple[int, int, str, int]] = []
        self.seq = 0
        self.trace: list[Event] = []
        self.enc_waiting: list[int] = []
        self.enc_busy = False
        self.enc_done = 0
        self.talker_busy = False
        self.frames_started = 0
        self.frames_done = 0
        self.codec_waiting: list[int] = []
        self.codec_busy = False
        self.codec_ready = 0

    def at(self, time_us: int, kind: str, index: int) -> None:
        heapq.heappush(self.queue, (time_us, self.seq, kind, index))
        self.seq += 1

    def run(self) -> EventTrace:
        tm = self.tm
        if tm.chunk_available_us:
            for k, t in enumerate(tm.chunk_available_us):
                self.at(t, _ARRIVAL, k)
        elif tm.text_total:
            self.at(tm.origin_us + tm.ttft_us, EventKind.TEXT_TOKEN.value, 0)
        while self.queue:
            now, _, kind, index = heapq.heappop(self.queue)
            if kind != _ARRIVAL:
                self.trace.append(Event(now, EventKind(kind), index))
            getattr(self, "_on_" + kind.lower())(now, index)
        return EventTrace(tuple(self.trace))

    def _on_arrival(self, now, k):
        self.enc_waiting.append(k)
        self._start_encoder(now)

    def _start_encoder(self, now):
        if not self.enc_busy and self.enc_waiting:
            k = self.enc_waiting.pop(0)
            self.enc_busy = True
            self.at(now + self.tm.encoder_chunk_us, EventKind.ENC_CHUNK_DONE.value, k)

    def _on_enc_chunk_done(self, now, k):
        self.enc_busy = False
        self.enc_done += 1
        if self.enc_done == len(self.tm.chunk_available_us) and self.tm.text_total:
            self.at(now + self.tm.ttft_us, EventKind.TEXT_TOKEN.value, 0)
        self._start_encoder(now)

    def _on_text_token(self, now, i):
        self.gate.push(aria.StreamSymbol.TEXT)
        if i + 1 < self.tm.text_total:
            self.at(now + self.tm.thinker_tpop_us, EventKind.TEXT_TOKEN.value, i + 1)
        self._start_talker(now)

    def _start_talker(self, now):
        if self.talker_busy or self.frames_started == self.tm.speech_total:
            return
        if not self.gate.speech_ready():
            return
        self.gate.push(aria.StreamSymbol.SPEECH)
        self.talker_busy = True
        self.at(now + self.tm.talker_tpop_us, EventKind.SPEECH_FRAME.value, self.frames_started)
        self.frames_started += 1

    def _on_speech_frame(self, now, j):
        self.talker_busy = False
        self.frames_done += 1
        C = self.tm.chunk_frames
        if self.frames_done % C == 0 or self.frames_done == self.tm.speech_total:
            self.codec_waiting.append(self.codec_ready)
            self.codec_ready += 1
            self._start_codec(now)
        self._start_talker(now)

    def _start_codec(self, now):
        if not self.codec_busy and self.codec_waiting:
            m = self.codec_waiting.pop(0)
            self.codec_busy = True
            self.at(now + self.tm.codec_us[m], EventKind.CODEC_CHUNK_DONE.value, m)

    def _on_codec_chunk_done(self, now, m):
        self.codec_busy = False
        self._start_codec(now)


def simulate(scenario: Scenario, stages: StageModel) -> tuple[EventTrace, ScenarioReport]:
    """Run one request through the pipeline and read the metrics off its trace.

    Speech frames are gated on the interleave ratio, so a frame never starts
    before enough text tokens exist.  The Talker is otherwise never starved.
    """
    tm = resolve(scenario, stages)
    trace = _Sim(tm, scenario.aria_ratio).run()
    return trace, _report(trace, tm, scenario)


# ---------------------------------------------------------------------------
# Dependency graph and longest path
# ---------------------------------------------------------------------------


@dataclass
class Dag:
    nodes: set[str] = field(default_factory=set)
    edges: list[tuple[str, str, int]] = field(default_factory=list)

    def add_edge(self, u: str, v: str, weight: int) -> None:
        self.nodes.update((u, v))
        self.edges.append((u, v, weight))


def critical_path(dag: Dag, source: str = "start", target: str | None = None) -> int:
    """Longest weighted path from ``source`` to ``target``.

    With no target, the longest path from the source to any node is returned;
    a graph with only the source gives 0.
    """
    preds: dict[str, list[tuple[str, int]]] = {n: [] for n in dag.nodes | {source}}
    for u, v, w in dag.edges:
        if w < 0:
            raise ValueError("edge weights must be non-negative")
        preds[v].append((u, w))
    sorter = graphlib.TopologicalSorter({n: [u for u, _ in p] for n, p in preds.items()})
    try:
        order = list(sorter.static_order())
    except graphlib.CycleError as exc:
        raise CycleDetected(f"dependency cycle through {exc.args[1]}") from None
    dist: dict[str, int] = {source: 0}
    for n in order:
        if n == source:
            continue
        cands = [dist[u] + w for u, w in preds[n] if u in dist]
        if cands:
            dist[n] = max(cands)
    if target is None:
        return max(dist.values())
    if target not in dist:
        raise ValueError(f"{target!r} is not reachable from {source!r}")
    return dist[target]


def dependency_dag(scenario: Scenario, stages: StageModel) -> tuple[Dag, int]:
    """Event dependency graph of one run and the metric origin in microseconds.

    Nodes are the pipeline events; an edge ``u -> v`` weighted ``w`` means
    ``v`` cannot finish earlier than ``w`` after ``u``.  The first playable
    packet is node ``codec0``.
    """
    tm = resolve(scenario, stages)
    g = Dag({"start"})
    prev = None
    for k, avail in enumerate(tm.chunk_available_us):
        g.add_edge("start", f"arrive{k}", avail)
        g.add_edge(f"arrive{k}", f"enc{k}", tm.encoder_chunk_us)
        if prev is not None:
            g.add_edge(prev, f"enc{k}", tm.encoder_chunk_us)
        prev = f"enc{k}"
    if prev is None:
        g.add_edge("start", "prefill", tm.origin_us)
    else:
        g.add_edge(prev, "prefill", 0)
    g.add_edge("prefill", "text1", tm.ttft_us)
    for i in range(2, tm.text_total + 1):
        g.add_edge(f"text{i - 1}", f"text{i}", tm.thinker_tpop_us)
    C = tm.chunk_frames
    for j in range(1, tm.speech_total + 1):
        need = aria.text_needed_for(j, scenario.aria_ratio)
        g.add_edge(f"text{need}", f"frame{j}", tm.talker_tpop_us)
        if j > 1:
            g.add_edge(f"frame{j - 1}", f"frame{j}", tm.talker_tpop_us)
    for m, lat in enumerate(tm.codec_us):
        last = min((m + 1) * C, tm.speech_total)
        g.add_edge(f"frame{last}", f"codec{m}", lat)
        if m:
            g.add_edge(f"codec{m - 1}", f"codec{m}", lat)
    return g, tm.origin_us


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    name: str
    concurrency: int
    chunk_frames: int
    report: ScenarioReport | None
    error: str | None = None


def _sweep_one(args: tuple[Scenario, StageModel]) -> SweepRow:
    scenario, stages = args
    try:
        _, report = simulate(scenario, stages)
        return SweepRow(scenario.name, scenario.concurrency, scenario.layout.chunk_frames, report)
    except (OmniStreamError, ValueError) as exc:
        return SweepRow(
            scenario.name, scenario.concurrency, scenario.layout.chunk_frames, None,
            f"{type(exc).__name__}: {exc}",
        )


def sweep(scenarios: Sequence[Scenario], stages: StageModel, workers: int = 1) -> list[SweepRow]:
    """One row per scenario in input order; failing rows carry the error instead of a report."""
    jobs = [(s, stages) for s in scenarios]
    if workers <= 1 or len(jobs) <= 1:
        return [_sweep_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, jobs))


def steady_state_rtf(talker_tpop_ms: float, layout: CodecLayout) -> float:
    return talker_tpop_ms * layout.frame_rate_hz / 1000

