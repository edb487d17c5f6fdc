"""Travel-time forecasting for an edge from its observed history."""

from __future__ import annotations

SMOOTHING_ALPHA = 0.3


def predict_travel_time(history: list[tuple[float, float]], horizon_s: float = 0.0) -> float:
    """Level-only exponential smoothing (alpha 0.3) over (timestamp, seconds) pairs.

    The forecast is the smoothed level; horizon_s is part of the interface
    but does not shift a level-only forecast. History must be non-empty and
    chronologically ordered.
    """
    if not history:
        raise ValueError("cannot predict from empty history")
    timestamps = [t for t, _ in history]
    if any(b < a for a, b in zip(timestamps, timestamps[1:])):
        raise ValueError("history must be chronologically ordered")
    level = history[0][1]
    for _, value in history[1:]:
        level = SMOOTHING_ALPHA * value + (1.0 - SMOOTHING_ALPHA) * level
    return level
