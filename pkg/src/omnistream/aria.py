"""Adaptive-rate interleaving of text and speech tokens.

A stream is admissible when every prefix holding ``t`` text and ``s`` speech
tokens satisfies ``s * R.den <= R.num * t``, where ``R`` is the item-level
speech/text ratio.  Plans are produced with eager placement: a speech token
goes out as soon as the prefix admits it.

Plans are stored as compact lines (``"TSSTSS"``) because they can hold tens of
thousands of slots; ``InterleavePlan.slots`` expands to ``StreamSymbol`` values
on demand.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import OmniStreamError, PrefixCount, StreamSymbol, format_rational

# products below this bound are safe in int64
_INT64_SAFE = 1 << 62

_SYMBOLS = (StreamSymbol.TEXT, StreamSymbol.SPEECH)
_T, _S = ord("T"), ord("S")


class InfeasibleRatio(OmniStreamError):
    pass


class InvalidPrefix(OmniStreamError):
    pass


class ZeroRatio(OmniStreamError):
    pass


class GateClosed(OmniStreamError):
    """Raised by :class:`StreamingPlanner` when speech is pushed before the prefix admits it."""


@dataclass(frozen=True)
class AriaBudget:
    """Token totals for one item plus the ratio bounding every prefix.

    When ``explicit_ratio`` is ``None`` the ratio is derived as ``S/T``.
    Supplying it directly covers open-ended streams whose totals are unknown.
    """

    text_total: int
    speech_total: int
    explicit_ratio: Fraction | None = None

    def __post_init__(self):
        if self.text_total < 0 or self.speech_total < 0:
            raise ValueError("token totals must be non-negative")
        if self.explicit_ratio is not None and self.explicit_ratio < 0:
            raise ValueError("ratio must be non-negative")

    @property
    def ratio(self) -> Fraction:
        if self.explicit_ratio is not None:
            return self.explicit_ratio
        if self.text_total == 0:
            return Fraction(0)
        return Fraction(self.speech_total, self.text_total)


def admits(t: int, s: int, ratio: Fraction) -> bool:
    """Whether a prefix with ``t`` text and ``s`` speech tokens satisfies the bound."""
    return s * ratio.denominator <= ratio.numerator * t


def speech_allowance(t: int, ratio: Fraction) -> int:
    """Largest speech count admitted after ``t`` text tokens."""
    return ratio.numerator * t // ratio.denominator


def first_speech_text_need(ratio: Fraction) -> int:
    """Minimal number of text tokens before the first speech token can go out."""
    if ratio.numerator == 0:
        raise ZeroRatio("a zero ratio never admits speech")
    return -(-ratio.denominator // ratio.numerator)


def text_needed_for(k: int, ratio: Fraction) -> int:
    """Minimal text count that admits the ``k``-th speech token (``k >= 1``)."""
    if ratio.numerator == 0:
        raise ZeroRatio("a zero ratio never admits speech")
    return -(-(k * ratio.denominator) // ratio.numerator)


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterleavePlan:
    line: str
    budget: AriaBudget

    @property
    def slots(self) -> tuple[StreamSymbol, ...]:
        return tuple(StreamSymbol(c) for c in self.line)

    def __len__(self):
        return len(self.line)

    def __str__(self):
        return self.line

    def speech_indices(self) -> np.ndarray:
        return np.flatnonzero(_mask(self.line))


def _eager_line(text_total: int, speech_total: int, ratio: Fraction, t0: int, s0: int) -> str:
    num, den = ratio.numerator, ratio.denominator
    n_text = text_total - t0
    n = n_text + speech_total - s0
    if n == 0:
        return ""
    if num * max(text_total, 1) < _INT64_SAFE:
        t = np.arange(t0, text_total + 1, dtype=np.int64)
        allowed = np.minimum(speech_total, np.maximum(s0, num * t // den))
        final = int(allowed[-1])
        # text number i (t0 < i <= T) follows (i-1-t0) text and allowed(i-1)-s0 speech slots
        text_pos = np.arange(n_text, dtype=np.int64) + (allowed[:-1] - s0)
        buf = np.full(n, _S, dtype=np.uint8)
        buf[text_pos] = _T
        line = buf.tobytes().decode("ascii")
    else:
        parts = []
        prev = min(speech_total, max(s0, num * t0 // den))
        parts.append("S" * (prev - s0))
        for i in range(t0 + 1, text_total + 1):
            cur = min(speech_total, max(s0, num * i // den))
            parts.append("T" + "S" * (cur - prev))
            prev = cur
        final = prev
        line = "".join(parts)
    if final < speech_total:
        raise InfeasibleRatio(
            f"ratio {format_rational(ratio)} admits only {final} of {speech_total} speech tokens "
            f"after {text_total} text tokens"
        )
    return line


def plan_eager(budget: AriaBudget) -> InterleavePlan:
    """Complete plan placing every speech token at its earliest admissible slot."""
    if budget.speech_total >= 1 and budget.text_total == 0:
        raise InfeasibleRatio("speech tokens without any text can never be admitted")
    line = _eager_line(budget.text_total, budget.speech_total, budget.ratio, 0, 0)
    return InterleavePlan(line, budget)


def resume(budget: AriaBudget, prefix: PrefixCount) -> InterleavePlan:
    """Eager remainder of a plan whose first slots produced ``prefix``.

    The returned plan holds only the remaining slots; its ``budget`` is the
    original one.
    """
    t0, s0 = prefix.text_emitted, prefix.speech_emitted
    if t0 > budget.text_total or s0 > budget.speech_total:
        raise InvalidPrefix(
            f"prefix (t={t0}, s={s0}) exceeds totals (T={budget.text_total}, S={budget.speech_total})"
        )
    if not admits(t0, s0, budget.ratio):
        raise InvalidPrefix(
            f"prefix (t={t0}, s={s0}) already exceeds ratio {format_rational(budget.ratio)}"
        )
    line = _eager_line(budget.text_total, budget.speech_total, budget.ratio, t0, s0)
    return InterleavePlan(line, budget)


# ---------------------------------------------------------------------------
# Checking
# ---------------------------------------------------------------------------


class ViolationKind(enum.Enum):
    PREFIX_RATIO = "prefix_ratio"
    TOTAL_MISMATCH = "total_mismatch"


@dataclass(frozen=True)
class ConstraintViolation:
    kind: ViolationKind
    index: int
    prefix: PrefixCount

    def __str__(self):
        p = self.prefix
        return f"{self.kind.value} at index {self.index} (t={p.text_emitted}, s={p.speech_emitted})"


def _mask(slots: InterleavePlan | str | Iterable[StreamSymbol]) -> np.ndarray:
    if isinstance(slots, InterleavePlan):
        slots = slots.line
    if isinstance(slots, str):
        raw = np.frombuffer(slots.encode("ascii"), dtype=np.uint8)
        if raw.size and not np.isin(raw, (_T, _S)).all():
            raise ValueError("plan line may only contain 'T' and 'S'")
        return raw == _S
    return np.fromiter((s is StreamSymbol.SPEECH for s in slots), dtype=bool)


def check_plan(
    slots: InterleavePlan | str | Sequence[StreamSymbol], budget: AriaBudget
) -> ConstraintViolation | None:
    """First prefix violation scanning left to right, else a total mismatch, else ``None``."""
    speech = _mask(slots)
    ratio = budget.ratio
    num, den = ratio.numerator, ratio.denominator
    n = speech.size
    if n and max(num, den) * n < _INT64_SAFE:
        s = np.cumsum(speech, dtype=np.int64)
        t = np.arange(1, n + 1, dtype=np.int64) - s
        bad = s * den > num * t
        if bad.any():
            i = int(np.argmax(bad))
            return ConstraintViolation(ViolationKind.PREFIX_RATIO, i, PrefixCount(int(t[i]), int(s[i])))
        t_end, s_end = int(t[-1]), int(s[-1])
    else:
        t_end = s_end = 0
        for i, is_speech in enumerate(speech.tolist()):
            if is_speech:
                s_end += 1
            else:
                t_end += 1
            if not admits(t_end, s_end, ratio):
                return ConstraintViolation(ViolationKind.PREFIX_RATIO, i, PrefixCount(t_end, s_end))
    if t_end != budget.text_total or s_end != budget.speech_total:
        return ConstraintViolation(ViolationKind.TOTAL_MISMATCH, n, PrefixCount(t_end, s_end))
    return None


def check_prefix(slots: str | Sequence[StreamSymbol], ratio: Fraction) -> ConstraintViolation | None:
    """Prefix-ratio check only; totals are not compared."""
    speech = _mask(slots)
    v = check_plan(slots, AriaBudget(int((~speech).sum()), int(speech.sum()), ratio))
    return v


def prefix_counts(slots: str | Sequence[StreamSymbol]) -> PrefixCount:
    if isinstance(slots, str):
        s = slots.count("S")
        return PrefixCount(len(slots) - s, s)
    return PrefixCount.of(slots)


def parse_line(line: str) -> tuple[StreamSymbol, ...]:
    line = line.strip()
    _mask(line)
    return tuple(StreamSymbol(c) for c in line)


def to_line(slots: Iterable[StreamSymbol]) -> str:
    return "".join(s.value for s in slots)


# ---------------------------------------------------------------------------
# Open-ended streaming
# ---------------------------------------------------------------------------


class StreamingPlanner:
    """Slot-by-slot planner for streams whose totals are not known up front.

    Holds mutable prefix state; one planner per stream.
    """

    def __init__(self, ratio: Fraction, prefix: PrefixCount | None = None):
        self.ratio = ratio
        self.prefix = prefix or PrefixCount()
        if not admits(self.prefix.text_emitted, self.prefix.speech_emitted, ratio):
            raise InvalidPrefix(f"starting prefix {self.prefix} violates the ratio")

    def speech_ready(self) -> bool:
        p = self.prefix
        return admits(p.text_emitted, p.speech_emitted + 1, self.ratio)

    def push(self, symbol: StreamSymbol) -> PrefixCount:
        if symbol is StreamSymbol.SPEECH and not self.speech_ready():
            raise GateClosed(f"speech not admitted at {self.prefix}")
        self.prefix = self.prefix.advance(symbol)
        return self.prefix

    def next_symbol(self, text_available: bool = True, speech_available: bool = True) -> StreamSymbol | None:
        """Eager choice for the next slot, or ``None`` when nothing can be emitted."""
        if speech_available and self.speech_ready():
            return StreamSymbol.SPEECH
        if text_available:
            return StreamSymbol.TEXT
        return None
