"""Decode instrumentation: chosen-index tallies, beam counts, timing."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np


@dataclass
class DecodeStats:
    index_counts: Counter = field(default_factory=Counter)
    index_emission_sum: Counter = field(default_factory=Counter)
    beam_counts: list = field(default_factory=list)
    expansions: int = 0
    wall_time: float = 0.0

    def merge(self, other: "DecodeStats") -> "DecodeStats":
        """New stats pooling ``self`` and ``other`` (beam counts concatenated)."""
        out = DecodeStats()
        for s in (self, other):
            out.index_counts.update(s.index_counts)
            for k, v in s.index_emission_sum.items():
                out.index_emission_sum[k] += v
            out.beam_counts.extend(s.beam_counts)
            out.expansions += s.expansions
            out.wall_time += s.wall_time
        return out

    @property
    def selections(self) -> int:
        return sum(self.index_counts.values())


def record_selection(stats: DecodeStats, sorted_index: int,
                     emission_prob: float) -> DecodeStats:
    stats.index_counts[sorted_index] += 1
    stats.index_emission_sum[sorted_index] += emission_prob
    return stats


def best_beam_backtrace_indices(result) -> list[tuple[int, int, float]]:
    """Per-frame ``(t, sorted_index, prob)`` trail of the winning hypothesis."""
    trail = result.best.trail
    if trail is None:
        raise ValueError("decode ran without instrumentation; no trail recorded")
    return list(trail)


def aggregate(stats: Iterable[DecodeStats]) -> DecodeStats:
    out = DecodeStats()
    for s in stats:
        out = out.merge(s)
    return out


@dataclass
class StatsSummary:
    index_counts: dict
    index_mean_emission: dict
    num_timesteps: int
    beam_mean: Optional[float] = None
    beam_median: Optional[float] = None
    beam_q1: Optional[float] = None
    beam_q3: Optional[float] = None
    beam_min: Optional[int] = None
    beam_max: Optional[int] = None
    wall_time: float = 0.0
    expansions: int = 0

    @property
    def empty(self) -> bool:
        return self.num_timesteps == 0

    def cumulative_fraction(self) -> dict:
        """Fraction of selections at sorted index <= k, for each seen k."""
        total = sum(self.index_counts.values())
        out, run = {}, 0
        for k in sorted(self.index_counts):
            run += self.index_counts[k]
            out[k] = run / total
        return out

    def coverage(self, k: int) -> float:
        """Fraction of selections at sorted index <= k."""
        total = sum(self.index_counts.values())
        if total == 0:
            return 0.0
        return sum(v for i, v in self.index_counts.items() if i <= k) / total

    def to_dict(self) -> dict:
        return {
            "index_counts": {str(k): v for k, v in sorted(self.index_counts.items())},
            "index_mean_emission": {
                str(k): v for k, v in sorted(self.index_mean_emission.items())},
            "num_timesteps": self.num_timesteps,
            "beam_mean": self.beam_mean,
            "beam_median": self.beam_median,
            "beam_q1": self.beam_q1,
            "beam_q3": self.beam_q3,
            "beam_min": self.beam_min,
            "beam_max": self.beam_max,
            "wall_time": self.wall_time,
            "expansions": self.expansions,
        }


def summarize(stats: DecodeStats) -> StatsSummary:
    """Per-index means and beam-count order statistics (linear quartiles)."""
    counts = {k: v for k, v in sorted(stats.index_counts.items()) if v}
    means = {k: stats.index_emission_sum[k] / v for k, v in counts.items()}
    out = StatsSummary(counts, means, len(stats.beam_counts),
                       wall_time=stats.wall_time, expansions=stats.expansions)
    if stats.beam_counts:
        b = np.asarray(stats.beam_counts, dtype=np.float64)
        q1, med, q3 = np.percentile(b, [25, 50, 75], method="linear")
        out.beam_mean = float(b.mean())
        out.beam_median = float(med)
        out.beam_q1 = float(q1)
        out.beam_q3 = float(q3)
        out.beam_min = int(b.min())
        out.beam_max = int(b.max())
    return out
