"""Group bytes into spans with the global, monotonic or combined constraint."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import repeat
from typing import Literal, NamedTuple

import numpy as np

from .corpus import SignalTrack

ConstraintKind = Literal["global", "monotonic", "combined"]
SignalName = Literal["surprisal", "entropy"]


@dataclass(frozen=True)
class ConstraintConfig:
    """Which continuation test to apply and with which thresholds.

    A byte continues the current span when its information is below
    ``theta_g`` (global), when it drops by more than ``-theta_m`` relative to
    the previous byte (monotonic), or when either holds (combined).
    """

    kind: ConstraintKind
    signal: SignalName = "surprisal"
    theta_g: float | None = None
    theta_m: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("global", "monotonic", "combined"):
            raise ValueError(f"unknown constraint {self.kind!r}")
        if self.signal not in ("surprisal", "entropy"):
            raise ValueError(f"unknown signal {self.signal!r}")
        if self.kind != "monotonic":
            if self.theta_g is None or math.isnan(self.theta_g):
                raise ValueError(f"{self.kind} constraint needs theta_g")
        if not self.theta_m >= 0:
            raise ValueError("theta_m must be >= 0")

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "signal": self.signal,
            "theta_g": self.theta_g,
            "theta_m": self.theta_m,
        }


class Span(NamedTuple):
    # a tuple rather than a dataclass: segment() builds millions of these
    doc_id: str
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length


def continuation_mask(info: np.ndarray, cfg: ConstraintConfig) -> np.ndarray:
    """``mask[t]`` is true when byte ``t`` may extend the span holding ``t-1``."""
    info = np.asarray(info, dtype=np.float64)
    mask = np.zeros(info.size, dtype=bool)
    if info.size < 2:
        return mask
    cur, prev = info[1:], info[:-1]
    if cfg.kind == "global":
        mask[1:] = cur < cfg.theta_g
    elif cfg.kind == "monotonic":
        mask[1:] = cur - prev < cfg.theta_m
    else:
        mask[1:] = (cur < cfg.theta_g) | (cur - prev < cfg.theta_m)
    return mask


def span_starts(track: SignalTrack, cfg: ConstraintConfig) -> np.ndarray:
    """Start offsets of every span; the final document length is appended."""
    starts = ~continuation_mask(track.signal(cfg.signal), cfg)
    starts[list(track.boundaries[:-1])] = True
    return np.append(np.flatnonzero(starts), len(track.data))


def segment(track: SignalTrack, cfg: ConstraintConfig) -> list[Span]:
    """Partition a track into spans that never cross a pre-token boundary."""
    edges = span_starts(track, cfg)
    fields = zip(repeat(track.doc_id), edges[:-1].tolist(), np.diff(edges).tolist())
    # tuple.__new__ skips the Python-level constructor
    return list(map(tuple.__new__, repeat(Span), fields))


__all__ = ["ConstraintConfig", "Span", "continuation_mask", "segment", "span_starts"]
