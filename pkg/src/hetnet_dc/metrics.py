"""PF utility, Jain's fairness index and per-run aggregates."""
from __future__ import annotations

import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .scheduling import ScheduleResult


class StarvedMTError(ValueError):
    """Some MT received no throughput, so the PF utility is -inf."""

    def __init__(self, mt_ids):
        self.mt_ids = list(mt_ids)
        super().__init__(f"MTs with zero throughput: {self.mt_ids}")


def pf_utility(throughputs: Sequence[float]) -> float:
    """Sum of natural logs of per-MT throughput."""
    x = np.asarray(throughputs, dtype=float)
    starved = np.flatnonzero(~(x > 0))
    if starved.size:
        raise StarvedMTError(starved.tolist())
    return float(np.sum(np.log(x)))


def jain_index(throughputs: Sequence[float]) -> float:
    x = np.asarray(throughputs, dtype=float)
    sq = float(np.sum(x * x))
    if x.size == 0 or sq == 0.0:
        raise ValueError("Jain's index is undefined for an all-zero vector")
    return float(np.sum(x)) ** 2 / (x.size * sq)


@dataclass
class RunMetrics:
    throughput: np.ndarray           # x_u, bits/slot
    pf_utility: float
    jfi: float
    system_throughput: float
    counters: dict[str, Fraction]
    sync_events: int = 0

    @property
    def num_mts(self) -> int:
        return len(self.throughput)


def aggregate(result: ScheduleResult) -> RunMetrics:
    x = result.delivered / result.slots
    return RunMetrics(
        throughput=x,
        pf_utility=pf_utility(x),
        jfi=jain_index(x),
        system_throughput=float(x.sum()),
        counters=result.counters.per_slot(result.slots),
        sync_events=result.counters.sync_events,
    )


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    values = list(values)
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, sd


def summarize(runs: Sequence[RunMetrics]) -> dict[str, tuple[float, float]]:
    """Replication-level mean and sample sd of the headline metrics."""
    if not runs:
        raise ValueError("no runs to summarize")
    return {
        "pf_utility": mean_sd([r.pf_utility for r in runs]),
        "system_throughput": mean_sd([r.system_throughput for r in runs]),
        "jfi": mean_sd([r.jfi for r in runs]),
        "messages_per_slot": mean_sd([float(r.counters["messages"]) for r in runs]),
    }
