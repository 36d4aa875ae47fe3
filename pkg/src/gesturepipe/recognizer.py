"""Streaming sliding-window classification with vote smoothing.

Frames stream into a ring buffer sized for the stream's FPS and speed ratio.
Once the buffer fills, the model runs on its contents; afterwards it re-runs
every ceil((1 - retention) * capacity) frames, so half the window carries
over between evaluations by default. Raw predictions feed a majority vote
over the last few outputs, which suppresses single-frame flicker.
"""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from .errors import EncodingMismatch, InvalidConfig, TooShort
from .features import Encoding, FeatureVector
from .nn import ModelParams, forward, softmax
from .skeleton import GestureLabel
from .util import round_half_away


@dataclass(frozen=True)
class WindowConfig:
    base_len: int = 50
    base_fps: float = 30.0
    speed_ratio: float = 1.0
    vote_n: int = 5
    retention: float = 0.5

    def __post_init__(self):
        if self.base_len < 2:
            raise InvalidConfig("base_len must be at least 2")
        if not self.base_fps > 0:
            raise InvalidConfig("base_fps must be positive")
        if not self.speed_ratio > 0:
            raise InvalidConfig("speed_ratio must be positive")
        if self.vote_n < 1:
            raise InvalidConfig("vote_n must be positive")
        if not 0.0 < self.retention < 1.0:
            raise InvalidConfig("retention must lie strictly between 0 and 1")


def effective_window(config: WindowConfig, fps: float) -> int:
    """Window length in frames for a stream at ``fps``.

    Scales the base length so the window spans the same wall-clock time as at
    base_fps, then divides by the speed ratio so faster gestures get shorter
    windows (at 30 fps: ratio 0.5 -> 100 frames, ratio 2.0 -> 25 frames).
    """
    if not fps > 0:
        raise InvalidConfig("fps must be positive")
    return max(2, round_half_away(config.base_len * (fps / config.base_fps) / config.speed_ratio))


def majority_vote(votes) -> int:
    """Most frequent value; ties resolve to the most recent among the tied."""
    counts = Counter(votes)
    best = max(counts.values())
    tied = {v for v, c in counts.items() if c == best}
    for v in reversed(list(votes)):
        if v in tied:
            return v
    raise ValueError("empty vote history")


@dataclass(frozen=True)
class Emission:
    """One recognizer output.

    ``frame_index`` counts frames consumed so far, so the first emission
    carries frame_index == capacity. ``confidence`` is the softmax maximum of
    the raw prediction.
    """

    frame_index: int
    raw: GestureLabel
    smoothed: GestureLabel
    confidence: float


class WindowState:
    """Ring buffer of recent feature vectors plus the recent-vote history.

    Single-writer: one stream owns one state. Model parameters are read-only
    snapshots passed per push, so they can be swapped between evaluations.
    """

    def __init__(self, capacity: int, vote_n: int, retention: float, encoding: Encoding):
        if capacity < 2:
            raise InvalidConfig("capacity must be at least 2")
        if not 0.0 < retention < 1.0:
            raise InvalidConfig("retention must lie strictly between 0 and 1")
        self.capacity = capacity
        self.cadence = math.ceil((1.0 - retention) * capacity)
        self.encoding = encoding
        self.buffer: deque[np.ndarray] = deque(maxlen=capacity)
        self.votes: deque[int] = deque(maxlen=vote_n)
        self.frames_seen = 0
        self.last_emitted: GestureLabel | None = None

    def push(self, fv: FeatureVector, params: ModelParams) -> Emission | None:
        if fv.encoding is not self.encoding:
            raise EncodingMismatch(
                f"stream encodes {fv.encoding.value}, recognizer expects {self.encoding.value}"
            )
        self.buffer.append(fv.values)
        self.frames_seen += 1
        if self.frames_seen < self.capacity:
            return None
        if (self.frames_seen - self.capacity) % self.cadence != 0:
            return None
        logits = forward(params, np.stack(self.buffer))
        probs = softmax(logits)
        raw = int(probs.argmax())
        self.votes.append(raw)
        smoothed = majority_vote(self.votes)
        self.last_emitted = GestureLabel(smoothed)
        return Emission(self.frames_seen, GestureLabel(raw), GestureLabel(smoothed), float(probs[raw]))


def make_window_state(config: WindowConfig, fps: float, encoding: Encoding) -> WindowState:
    return WindowState(effective_window(config, fps), config.vote_n, config.retention, encoding)


def push_frame(state: WindowState, fv: FeatureVector, params: ModelParams) -> Emission | None:
    """Feed one frame into the streaming state; see WindowState.push."""
    return state.push(fv, params)


def classify_sequence(
    fvs: list[FeatureVector],
    params: ModelParams,
    config: WindowConfig,
    fps: float,
    encoding: Encoding | None = None,
) -> list[tuple[int, GestureLabel, GestureLabel]]:
    """Offline replay of the streaming contract over a whole sequence.

    Folds push_frame over the frames, so the outputs are identical - bit for
    bit - to live streaming.
    """
    capacity = effective_window(config, fps)
    if len(fvs) < capacity:
        raise TooShort(f"sequence has {len(fvs)} frames, window needs {capacity}")
    if encoding is None:
        encoding = fvs[0].encoding
    state = WindowState(capacity, config.vote_n, config.retention, encoding)
    out = []
    for fv in fvs:
        emission = state.push(fv, params)
        if emission is not None:
            out.append((emission.frame_index, emission.raw, emission.smoothed))
    return out
