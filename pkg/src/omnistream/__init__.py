"""Streaming text/speech interleaving, multimodal position IDs, codec framing
and a discrete-event latency model for a two-stage speech pipeline."""

from .aria import AriaBudget, InterleavePlan, check_plan, first_speech_text_need, plan_eager, resume
from .codec import Chunker, CodecChunk, CodecFrame, CodecLayout, audio_seconds, make_frame
from .core import (
    MediaKind,
    MediaManifest,
    MediaSegment,
    OmniStreamError,
    PrefixCount,
    StreamSymbol,
    manifest_validate,
    rational,
    rational_le,
)
from .mrope import TimestampConfig, assign_positions, audio_frame_count, context_budget, video_frame_tid
from .sim import InputMode, Scenario, StageModel, bundled_stage_models, critical_path, simulate, sweep

__version__ = "0.1.0"
