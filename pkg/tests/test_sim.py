import random
from fractions import Fraction

import pytest
from cases import random_small_case, to_model
from oracles import pipeline_first_packet_us

from omnistream.aria import InfeasibleRatio, check_plan, AriaBudget
from omnistream.codec import CodecLayout
from omnistream.core import MediaManifest, MediaSegment
from omnistream.sim import (
    CycleDetected,
    Dag,
    EventKind,
    InputMode,
    Scenario,
    StageModel,
    UnconfiguredConcurrency,
    bundled_stage_models,
    critical_path,
    dependency_dag,
    simulate,
    steady_state_rtf,
    sweep,
)

AUDIO4 = MediaManifest((MediaSegment.audio(4.0),))


def fixed_stages(ttft=80.0, thinker=0.0, talker=14.2, codec=4.0, enc=0.0, levels=(1,)):
    return StageModel(
        name="fixed",
        thinker_ttft_ms={c: ttft for c in levels},
        thinker_tpop_ms={c: thinker for c in levels},
        talker_tpop_ms={c: talker for c in levels},
        codec_decode_ms=(codec, codec),
        encoder_chunk_ms=enc,
    )


def test_hand_trace_first_packet():
    # one text token at 80 ms licenses frame 1 (need 1 at R=2), +14.2 talker, +4 codec
    trace, r = simulate(Scenario(AUDIO4, text_len=4), fixed_stages())
    assert r.first_packet_us == 98_200
    assert r.first_packet_ms == pytest.approx(98.2)
    assert r.ttft_ms == 80.0 and r.ttfc_ms == pytest.approx(94.2)
    assert trace.events[-1].kind is EventKind.CODEC_CHUNK_DONE


def test_zero_latency():
    s = Scenario(AUDIO4, text_len=6)
    trace, r = simulate(s, fixed_stages(0, 0, 0, 0))
    assert r.first_packet_ms == 0
    assert check_plan(trace.interleave_line(), AriaBudget(6, 12, Fraction(2))) is None


def test_report_invariants():
    _, r = simulate(Scenario(AUDIO4), bundled_stage_models()["flash-audio"])
    assert r.first_packet_ms >= r.ttft_ms and r.first_packet_ms >= r.ttfc_ms
    assert all(v is None or v >= 0 for v in r.metrics().values())


def test_real_time_origin_is_input_end():
    s = Scenario(AUDIO4, input_mode=InputMode.REAL_TIME_STREAM, text_len=4)
    _, r = simulate(s, fixed_stages(enc=50.0))
    # the last 2 s chunk lands at 4 s and takes 50 ms to encode
    assert r.metadata["input_end_ms"] == 4000.0
    assert r.first_packet_us == 50_000 + 98_200


def test_unconfigured_concurrency():
    with pytest.raises(UnconfiguredConcurrency):
        simulate(Scenario(AUDIO4, concurrency=3), fixed_stages())


def test_infeasible_ratio_propagates():
    with pytest.raises(InfeasibleRatio):
        simulate(Scenario(AUDIO4, text_len=2, speech_len=5, aria_ratio=Fraction(2)), fixed_stages())


@pytest.mark.parametrize(
    "edges, target, expected",
    [
        ([("start", "a", 80_000), ("a", "b", 14_200), ("b", "c", 4_000)], "c", 98_200),
        ([("start", "x", 10), ("x", "end", 0), ("start", "y", 3), ("y", "z", 3), ("z", "end", 0)], "end", 10),
        ([], None, 0),
    ],
)
def test_critical_path_examples(edges, target, expected):
    g = Dag({"start"})
    for e in edges:
        g.add_edge(*e)
    assert critical_path(g, target=target) == expected


def test_critical_path_cycle():
    g = Dag()
    g.add_edge("start", "a", 1)
    g.add_edge("a", "b", 1)
    g.add_edge("b", "a", 1)
    with pytest.raises(CycleDetected):
        critical_path(g)


def test_simulator_matches_longest_path():
    rng = random.Random(2024)
    for _ in range(200):
        case = random_small_case(rng)
        scenario, stages = to_model(case)
        _, r = simulate(scenario, stages)
        ref = pipeline_first_packet_us(case)
        assert r.first_packet_us == ref, case
        g, origin = dependency_dag(scenario, stages)
        assert critical_path(g, target="codec0") - origin == ref


def test_traces_respect_ratio():
    rng = random.Random(5)
    for _ in range(200):
        case = random_small_case(rng)
        scenario, stages = to_model(case)
        trace, _ = simulate(scenario, stages)
        budget = AriaBudget(scenario.text_len, scenario.speech_total, scenario.aria_ratio)
        assert check_plan(trace.interleave_line(), budget) is None
        times = [e.time_us for e in trace.events]
        assert times == sorted(times)


def test_jittered_codec_matches_graph_and_is_seeded():
    stages = StageModel(
        name="j", thinker_ttft_ms={1: 80}, thinker_tpop_ms={1: 5.6}, talker_tpop_ms={1: 14.2}, codec_jitter=True
    )
    for seed in range(20):
        s = Scenario(AUDIO4, text_len=8, layout=CodecLayout(chunk_frames=2), seed=seed)
        trace, r = simulate(s, stages)
        g, origin = dependency_dag(s, stages)
        assert r.first_packet_us == critical_path(g, target="codec0") - origin
        assert 3000 <= r.first_packet_us - (80_000 + 2 * 14_200) <= 5000
        assert trace.to_text() == simulate(s, stages)[0].to_text()


@pytest.mark.parametrize("field", ["ttft", "thinker", "talker", "codec", "enc"])
def test_first_packet_monotone_in_each_stage(field):
    rng = random.Random(field)
    s = Scenario(AUDIO4, input_mode=InputMode.REAL_TIME_STREAM, text_len=5, aria_ratio=Fraction(1, 2))
    base = {"ttft": 80.0, "thinker": 5.6, "talker": 14.2, "codec": 4.0, "enc": 10.0}
    prev = -1
    for _ in range(15):
        base[field] += rng.randint(0, 40) / 10
        _, r = simulate(s, fixed_stages(**base))
        assert r.first_packet_us >= prev
        prev = r.first_packet_us


def test_first_packet_monotone_in_chunk_frames():
    prev = -1
    for C in (1, 2, 3, 4, 8, 16):
        _, r = simulate(Scenario(AUDIO4, text_len=8, layout=CodecLayout(chunk_frames=C)), fixed_stages(thinker=5.6))
        assert r.first_packet_us >= prev
        prev = r.first_packet_us


def test_rtf_identity():
    for tpop in (14.2, 16.9, 20.5, 1.0, 33.3):
        for F in (12.5, 25.0, 50.0):
            _, r = simulate(Scenario(AUDIO4, layout=CodecLayout(frame_rate_hz=F)), fixed_stages(talker=tpop))
            expected = F * tpop / 1000
            assert abs(r.generation_rtf - expected) <= 1e-9 * expected
            assert steady_state_rtf(tpop, CodecLayout(frame_rate_hz=F)) == pytest.approx(expected, rel=1e-12)


def test_sweep_examples():
    stages = bundled_stage_models()["flash-audio"]
    rows = sweep([Scenario(AUDIO4, concurrency=c, name=f"c{c}") for c in (1, 4, 8)], stages)
    fp = [row.report.first_packet_ms for row in rows]
    assert [row.name for row in rows] == ["c1", "c4", "c8"]
    assert fp[0] < fp[1] < fp[2]
    assert sweep([], stages) == []
    chunked = sweep([Scenario(AUDIO4, layout=CodecLayout(chunk_frames=c)) for c in (1, 2, 4)], stages)
    ttfc = [row.report.ttfc_ms for row in chunked]
    assert ttfc == sorted(ttfc)


def test_sweep_marks_failed_rows_and_keeps_order():
    stages = fixed_stages(levels=(1, 4))
    scenarios = [Scenario(AUDIO4, concurrency=c, name=str(c)) for c in (1, 3, 4)]
    rows = sweep(scenarios, stages)
    assert [r.error is None for r in rows] == [True, False, True]
    assert "UnconfiguredConcurrency" in rows[1].error
    parallel = sweep(scenarios, stages, workers=2)
    assert [r.report for r in parallel] == [r.report for r in rows]


def test_bundled_tables_cover_levels():
    models = bundled_stage_models()
    assert set(models) == {"flash-audio", "flash-video", "plus-audio", "plus-video"}
    for m in models.values():
        assert m.levels == [1, 4, 8]
