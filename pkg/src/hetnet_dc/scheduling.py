"""Per-slot PF scheduling for SCP, DCSP, DCP (PF-DC) and ACP (GPF).

Every BS picks one MT per slot. The metric denominator is

* SCP / DCSP: the BS's own moving average r̄_j^k,
* DCP / ACP: the live local r̄_j^k plus a snapshot of the MT's averages at
  its other serving BSs. The snapshot is refreshed by ``src_sync`` every
  ``sync_period`` slots (after the updates of slots T, 2T, ...).

Two routes compute the same schedule. ``ReferenceScheduler`` walks BSs and
candidates one at a time with the scalar operations below and counts every
comparison it makes. ``simulate`` is the batched numpy kernel used by the
engine; it runs several schedules over one rate tensor at once.

Operation accounting (per slot, per tracked link unless noted):

* comparisons: ``len(candidates) - 1`` per BS when taking the argmax,
* multiplications: 3, i.e. the metric division, (1-γ)·r̄ and γ·r,
* additions: 1 for the Eq.-(1) accumulation; at each sync the controller
  adds ``|A(u)| - 1`` numbers per MT to form its total,
* messages per sync: ``2 |A(u)|`` per MT through the controller (reports
  in, totals out) for DCP; ``|A(u)| (|A(u)| - 1)`` per MT for the pairwise
  BS exchange of GPF.

The live-local plus snapshot sum between syncs is kept out of ``additions``
and tallied in ``combine_additions``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .association import AssociationMap

PROCEDURES = ("scp", "dcsp", "dcp", "acp")


@dataclass(frozen=True)
class SchedulerParams:
    gamma: float = 0.01
    sync_period: int | None = 25
    acp_sync_period: int | None = 1
    epsilon_init: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.epsilon_init <= 0:
            raise ValueError("epsilon_init must be positive")
        for t in (self.sync_period, self.acp_sync_period):
            if t is not None and t < 1:
                raise ValueError("sync periods must be >= 1 (or None to disable)")


@dataclass
class ComplexityCounters:
    comparisons: int = 0
    additions: int = 0
    multiplications: int = 0
    messages: int = 0
    combine_additions: int = 0
    sync_events: int = 0

    def per_slot(self, slots: int) -> dict[str, Fraction]:
        return {
            "comparisons": Fraction(self.comparisons, slots),
            "additions": Fraction(self.additions, slots),
            "multiplications": Fraction(self.multiplications, slots),
            "messages": Fraction(self.messages, slots),
        }

    def reset(self) -> None:
        self.comparisons = self.additions = self.multiplications = 0
        self.messages = self.combine_additions = self.sync_events = 0


def count_operations(procedure: str, num_mts: int, num_bs: int, sync_period: int) -> ComplexityCounters:
    """Closed-form per-slot counts, as exact fractions.

    PF-DC: comparisons 2M-N, additions 2M + M/T, multiplications 6M,
    messages 4M/T. GPF: N(M-1), NM + (N-1)M/T, 3NM and MN(N-1)/T.
    """
    m, n, t = num_mts, num_bs, Fraction(sync_period)
    if procedure == "dcp":
        return _FracCounters(2 * m - n, 2 * m + m / t, 6 * m, 4 * m / t)
    if procedure == "acp":
        return _FracCounters(n * (m - 1), n * m + (n - 1) * m / t, 3 * n * m, m * n * (n - 1) / t)
    raise ValueError(f"closed forms exist for 'dcp' and 'acp', not {procedure!r}")


@dataclass(frozen=True)
class _FracCounters:
    comparisons: Fraction
    additions: Fraction
    multiplications: Fraction
    messages: Fraction

    def as_dict(self) -> dict[str, Fraction]:
        return {k: Fraction(getattr(self, k)) for k in ("comparisons", "additions", "multiplications", "messages")}


# ---------------------------------------------------------------------------
# scalar operations


def pf_metric_standard(rate: float, avg: float) -> float:
    if avg <= 0:
        raise ValueError(f"average throughput must be positive, got {avg}")
    return rate / avg


def _argmax(candidates: Sequence[int], metric, counters: ComplexityCounters | None) -> int | None:
    best, best_val = None, None
    for j in candidates:
        val = metric(j)
        if best is None:
            best, best_val = j, val
            continue
        if counters is not None:
            counters.comparisons += 1
        # strict > keeps the earliest (lowest id) candidate on ties
        if val > best_val:
            best, best_val = j, val
    return best


def select_mt_standard(candidates: Sequence[int], rates, avg, counters: ComplexityCounters | None = None):
    """argmax_j rates[j] / avg[j] over ``candidates``; None if empty."""
    return _argmax(sorted(candidates), lambda j: pf_metric_standard(rates[j], avg[j]), counters)


def select_mt_pfdc(candidates: Sequence[int], rates, avg, partner_avg,
                   counters: ComplexityCounters | None = None):
    """argmax_j rates[j] / (avg[j] + partner_avg[j])."""
    return _argmax(sorted(candidates), lambda j: rates[j] / (avg[j] + partner_avg[j]), counters)


def select_mt_gpf(candidates: Sequence[int], rates, total_avg, counters: ComplexityCounters | None = None):
    """argmax_j rates[j] / sum over all BSs of r̄_j."""
    return _argmax(sorted(candidates), lambda j: rates[j] / total_avg[j], counters)


def update_avg(avg: float, rate: float, scheduled: bool, gamma: float) -> float:
    """Weighted moving average; unscheduled links only decay."""
    return (1.0 - gamma) * avg + (gamma * rate if scheduled else 0.0)


# ---------------------------------------------------------------------------
# reference route


@dataclass
class SchedulerState:
    mask: np.ndarray                 # (N, M) tracked links
    avg: np.ndarray                  # (N, M) r̄, zero off-mask
    partner: np.ndarray              # (N, M) synced sum over the other serving BSs
    gamma: float
    sync_period: int | None
    epsilon_init: float

    @classmethod
    def initial(cls, mask: np.ndarray, params: SchedulerParams, sync_period: int | None) -> "SchedulerState":
        mask = np.asarray(mask, dtype=bool)
        avg = np.where(mask, params.epsilon_init, 0.0)
        degree = mask.sum(axis=0)
        partner = np.where(mask, params.epsilon_init * (degree - 1), 0.0)
        return cls(mask, avg, partner, params.gamma, sync_period, params.epsilon_init)


def src_sync(state: SchedulerState, counters: ComplexityCounters | None = None,
             pairwise: bool = False) -> None:
    """Recompute each MT's total and push the partner share back to its BSs."""
    n, m = state.mask.shape
    for j in range(m):
        serving = np.flatnonzero(state.mask[:, j])
        for k in serving:
            state.partner[k, j] = sum(state.avg[kk, j] for kk in serving if kk != k)
        if counters is not None:
            a = len(serving)
            counters.additions += max(a - 1, 0)
            counters.messages += a * (a - 1) if pairwise else 2 * a
    if counters is not None:
        counters.sync_events += 1


@dataclass
class ScheduleResult:
    slots: int
    delivered: np.ndarray            # (M,) bits delivered over the run
    served_by_bs: np.ndarray         # (N,) bits sent by each BS over the run
    scheduled: np.ndarray            # (N, M) number of slots BS k served MT j
    avg: np.ndarray                  # (N, M) final r̄
    counters: ComplexityCounters = field(default_factory=ComplexityCounters)

    @property
    def throughput(self) -> np.ndarray:
        return self.delivered / self.slots


@dataclass(frozen=True)
class ScheduleSpec:
    """One schedule to run: which links exist and how the metric is formed."""

    mask: np.ndarray
    shared: bool = False             # PF-DC / GPF denominator
    sync_period: int | None = None
    pairwise_messages: bool = False  # GPF-style exchange accounting

    @classmethod
    def for_procedure(cls, procedure: str, association: AssociationMap,
                      params: SchedulerParams = SchedulerParams()) -> "ScheduleSpec":
        procedure = procedure.lower()
        mask = association.mask()
        if procedure in ("scp", "dcsp"):
            return cls(mask)
        if procedure == "dcp":
            return cls(mask, True, params.sync_period)
        if procedure == "acp":
            return cls(mask, True, params.acp_sync_period, pairwise_messages=True)
        raise ValueError(f"unknown procedure {procedure!r}; expected one of {PROCEDURES}")


class ReferenceScheduler:
    """Slot-by-slot scheduler built from the scalar operations.

    Slow; meant for small instances, operation counting and cross-checking
    the batched kernel.
    """

    def __init__(self, spec: ScheduleSpec, params: SchedulerParams = SchedulerParams()):
        self.spec = spec
        self.params = params
        self.state = SchedulerState.initial(spec.mask, params, spec.sync_period)
        self.counters = ComplexityCounters()
        n, m = spec.mask.shape
        self.candidates = [np.flatnonzero(spec.mask[k]).tolist() for k in range(n)]
        self.t = 0

    def step(self, rates: np.ndarray) -> list[int | None]:
        """Run one slot with rates of shape (N, M); return the MT per BS."""
        st, c = self.state, self.counters
        n, m = st.mask.shape
        picks = []
        for k in range(n):
            cand = self.candidates[k]
            if self.spec.shared:
                c.combine_additions += len(cand)
                j = select_mt_pfdc(cand, rates[k], st.avg[k], st.partner[k], c)
            else:
                j = select_mt_standard(cand, rates[k], st.avg[k], c)
            picks.append(j)
        # batch update after every BS has decided
        for k in range(n):
            for j in self.candidates[k]:
                st.avg[k, j] = update_avg(st.avg[k, j], rates[k, j], picks[k] == j, st.gamma)
                c.multiplications += 3
                c.additions += 1
        self.t += 1
        if self.spec.shared and self.spec.sync_period and self.t % self.spec.sync_period == 0:
            src_sync(st, c, self.spec.pairwise_messages)
        return picks

    def run(self, rates: np.ndarray) -> ScheduleResult:
        slots, n, m = rates.shape
        delivered = np.zeros(m)
        served = np.zeros(n)
        scheduled = np.zeros((n, m), dtype=np.int64)
        for t in range(slots):
            for k, j in enumerate(self.step(rates[t])):
                if j is None:
                    continue
                delivered[j] += rates[t, k, j]
                served[k] += rates[t, k, j]
                scheduled[k, j] += 1
        return ScheduleResult(slots, delivered, served, scheduled, self.state.avg.copy(), self.counters)


def run_reference(procedure: str, association: AssociationMap, rates: np.ndarray,
                  params: SchedulerParams = SchedulerParams()) -> ScheduleResult:
    spec = ScheduleSpec.for_procedure(procedure, association, params)
    return ReferenceScheduler(spec, params).run(rates)


# ---------------------------------------------------------------------------
# batched kernel


def _static_counts(spec: ScheduleSpec) -> tuple[int, int, int, int, int, int]:
    degree_bs = spec.mask.sum(axis=1)
    degree_mt = spec.mask.sum(axis=0)
    links = int(spec.mask.sum())
    cmp = int(np.maximum(degree_bs - 1, 0).sum())
    sync_add = int(np.maximum(degree_mt - 1, 0).sum())
    if spec.pairwise_messages:
        sync_msg = int((degree_mt * (degree_mt - 1)).sum())
    else:
        sync_msg = int((2 * degree_mt).sum())
    return links, cmp, 3 * links, links if spec.shared else 0, sync_add, sync_msg


def simulate(rates: np.ndarray, specs: Sequence[ScheduleSpec],
             params: SchedulerParams = SchedulerParams()) -> list[ScheduleResult]:
    """Run several schedules over one (S, N, M) rate tensor.

    Decisions match ``ReferenceScheduler`` slot for slot.
    """
    slots, n, m = rates.shape
    p = len(specs)
    gamma = params.gamma
    mask = np.stack([np.asarray(s.mask, dtype=bool) for s in specs])
    for s in specs:
        if s.mask.shape != (n, m):
            raise ValueError(f"mask shape {s.mask.shape} does not match rates {(n, m)}")
    states = [SchedulerState.initial(s.mask, params, s.sync_period) for s in specs]
    avg = np.stack([st.avg for st in states])
    partner = np.stack([st.partner for st in states])
    off = (~mask).astype(float)          # keeps untracked denominators nonzero
    penalty = np.where(mask, 0.0, -np.inf)
    active = mask.any(axis=2)            # (P, N) BS has at least one candidate
    others = 1.0 - np.eye(n)
    counters = [ComplexityCounters() for _ in specs]
    static = [_static_counts(s) for s in specs]
    periods = [s.sync_period if s.shared else None for s in specs]

    bs_idx = np.arange(n)[None, :]
    p_idx = np.arange(p)[:, None]
    picks = np.empty((slots, p, n), dtype=np.int64)
    served = np.empty((slots, p, n))

    for t in range(slots):
        r = rates[t]
        metric = r / (avg + partner + off) + penalty
        sel = metric.argmax(axis=2)      # first maximum -> lowest MT id
        got = r[bs_idx, sel] * active
        avg *= 1.0 - gamma
        avg[p_idx, bs_idx, sel] += gamma * got
        picks[t] = sel
        served[t] = got
        due = [i for i, T in enumerate(periods) if T and (t + 1) % T == 0]
        if due:
            partner[due] = np.matmul(others, avg[due]) * mask[due]
            for i in due:
                counters[i].additions += static[i][4]
                counters[i].messages += static[i][5]
                counters[i].sync_events += 1

    results = []
    for i, spec in enumerate(specs):
        links, cmp, mul, comb, _, _ = static[i]
        c = counters[i]
        c.comparisons += cmp * slots
        c.additions += links * slots
        c.multiplications += mul * slots
        c.combine_additions += comb * slots
        sel = picks[:, i, :]
        got = served[:, i, :]
        on = np.broadcast_to(active[i], sel.shape)
        flat = (np.arange(n)[None, :] * m + sel)[on]
        scheduled = np.bincount(flat, minlength=n * m).reshape(n, m)
        delivered = np.bincount(sel[on], weights=got[on], minlength=m)
        results.append(ScheduleResult(slots, delivered, got.sum(axis=0), scheduled, avg[i].copy(), c))
    return results


def run_procedure(procedure: str, association: AssociationMap, rates: np.ndarray,
                  params: SchedulerParams = SchedulerParams()) -> ScheduleResult:
    return simulate(rates, [ScheduleSpec.for_procedure(procedure, association, params)], params)[0]
