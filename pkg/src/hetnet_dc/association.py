"""MT-to-BS association: best RSRP, three dual-connectivity heuristics, all.

All functions take an RSRP matrix of shape (N, M) in dBm (row = BS,
column = MT). Ties are broken towards the lowest id everywhere.
"""
from __future__ import annotations

import csv
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class AssociationError(ValueError):
    """Raised when the requested association cannot be built."""


@dataclass(frozen=True)
class AssociationParams:
    h1: float = 10.0
    h2: float = 10.0
    sm_c: int = 1
    bigu_max_rounds: int | None = None  # None -> 10 * M

    def __post_init__(self):
        if self.h1 < 0 or self.h2 < 0:
            raise ValueError("thresholds h1, h2 must be >= 0")
        if self.sm_c < 0:
            raise ValueError("sm_c must be >= 0")


@dataclass
class AssociationMap:
    """Ordered serving BSs per MT: [A1] single, [A1, A2] dual, or all."""

    serving: list[tuple[int, ...]]
    num_bs: int
    mode: str
    warning: bool = False
    comparisons: int = 0
    info: dict = field(default_factory=dict)

    @property
    def num_mts(self) -> int:
        return len(self.serving)

    def a1(self, u: int) -> int:
        return self.serving[u][0]

    def a2(self, u: int) -> int | None:
        return self.serving[u][1] if len(self.serving[u]) > 1 else None

    def mask(self) -> np.ndarray:
        """Boolean (N, M) link map."""
        m = np.zeros((self.num_bs, self.num_mts), dtype=bool)
        for u, bss in enumerate(self.serving):
            m[list(bss), u] = True
        return m

    def connections(self) -> int:
        return sum(len(s) for s in self.serving)

    def load(self) -> np.ndarray:
        return self.mask().sum(axis=1)

    def validate(self) -> None:
        for u, bss in enumerate(self.serving):
            if len(set(bss)) != len(bss):
                raise AssociationError(f"MT {u} has repeated serving BS {bss}")
            if any(not 0 <= b < self.num_bs for b in bss):
                raise AssociationError(f"MT {u} has invalid BS id in {bss}")
            if self.mode == "dual" and len(bss) != 2:
                raise AssociationError(f"MT {u} is not dual associated: {bss}")
            if self.mode == "single" and len(bss) != 1:
                raise AssociationError(f"MT {u} is not single associated: {bss}")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mt_id", "a1", "a2"])
            for u in range(self.num_mts):
                a2 = self.a2(u)
                w.writerow([u, self.a1(u), "" if a2 is None else a2])


class _Counter:
    """Tallies RSRP comparisons made while taking argmaxes."""

    def __init__(self):
        self.n = 0

    def argmax(self, values: np.ndarray, allowed: Iterable[int]) -> int | None:
        best = None
        for i in allowed:
            if best is None:
                best = i
                continue
            self.n += 1
            if values[i] > values[best]:
                best = i
        return best


def _check_dual(rsrp: np.ndarray) -> None:
    if rsrp.shape[0] < 2:
        raise AssociationError(
            f"dual association needs at least 2 BSs, topology has {rsrp.shape[0]}"
        )


def associate_best_rsrp(rsrp: np.ndarray) -> AssociationMap:
    rsrp = np.asarray(rsrp, dtype=float)
    # np.argmax returns the first maximum, i.e. the lowest BS id on ties
    a1 = np.argmax(rsrp, axis=0)
    return AssociationMap([(int(b),) for b in a1], rsrp.shape[0], "single")


def associate_uigo(rsrp: np.ndarray, is_macro: Sequence[bool],
                   params: AssociationParams = AssociationParams()) -> AssociationMap:
    """User initiated greedy with offloading.

    Each MT takes its best BS first. The runner-up becomes the second link,
    unless it is a macro and the best remaining pico is within ``h1`` dB of
    it, in which case the pico is taken instead.
    """
    rsrp = np.asarray(rsrp, dtype=float)
    _check_dual(rsrp)
    n, m = rsrp.shape
    is_macro = np.asarray(is_macro, dtype=bool)
    picos = [b for b in range(n) if not is_macro[b]]
    cnt = _Counter()

    a1 = [cnt.argmax(rsrp[:, u], range(n)) for u in range(m)]
    serving = []
    for u in range(m):
        col = rsrp[:, u]
        c = cnt.argmax(col, (b for b in range(n) if b != a1[u]))
        a2 = c
        if is_macro[c]:
            d = cnt.argmax(col, (b for b in picos if b != a1[u]))
            if d is not None:
                cnt.n += 1
                if col[c] - col[d] < params.h1:
                    a2 = d
        serving.append((a1[u], a2))
    return AssociationMap(serving, n, "dual", comparisons=cnt.n)


def associate_bigu(rsrp: np.ndarray, params: AssociationParams = AssociationParams()) -> AssociationMap:
    """BS initiated greedy with user feedback.

    BSs take turns (ascending id) offering a link to their strongest MT that
    still has a free interface. The MT accepts if the offer is within ``h2``
    dB of the best BS it could still get; an accepted link is removed from
    the working matrix. Rounds stop when every MT holds two links. A round
    with no acceptance repeats forever, so it ends the loop early; MTs left
    short are then filled with their best remaining BSs and ``warning`` is
    set.
    """
    rsrp = np.asarray(rsrp, dtype=float)
    _check_dual(rsrp)
    n, m = rsrp.shape
    work = rsrp.copy()
    state = np.full(m, 2, dtype=int)
    links: list[list[int]] = [[] for _ in range(m)]
    max_rounds = params.bigu_max_rounds if params.bigu_max_rounds is not None else 10 * m

    rounds = 0
    while state.any() and rounds < max_rounds:
        rounds += 1
        accepted = 0
        for b in range(n):
            eligible = state > 0
            if not eligible.any():
                break
            row = np.where(eligible, work[b], -np.inf)
            u = int(np.argmax(row))
            if row[u] == -np.inf:
                continue  # b already serves every MT that is still open
            c = int(np.argmax(work[:, u]))
            if work[c, u] - work[b, u] < params.h2:
                state[u] -= 1
                links[u].append(b)
                work[b, u] = -np.inf
                accepted += 1
        if accepted == 0:
            break

    warning = bool(state.any())
    if warning:
        short = np.flatnonzero(state).tolist()
        log.warning("BIGU stalled after %d rounds; %d MTs filled by best RSRP: %s",
                    rounds, len(short), short)
        for u in short:
            order = sorted(range(n), key=lambda b: (-rsrp[b, u], b))
            for b in order:
                if len(links[u]) == 2:
                    break
                if b not in links[u]:
                    links[u].append(b)
    return AssociationMap([tuple(l) for l in links], n, "dual", warning=warning,
                          info={"rounds": rounds})


def preference_order(values: np.ndarray) -> list[int]:
    """Indices by descending value, lowest index first on ties."""
    return sorted(range(len(values)), key=lambda i: (-values[i], i))


def gale_shapley(proposer_prefs: list[list[int]], receiver_prefs: list[list[int]]) -> list[int | None]:
    """Proposer-optimal one-to-one stable matching.

    ``proposer_prefs[p]`` lists acceptable receivers, best first;
    ``receiver_prefs[r]`` ranks proposers, best first (must be complete).
    Returns the receiver matched to each proposer, or None.
    """
    rank = []
    for prefs in receiver_prefs:
        r = {p: i for i, p in enumerate(prefs)}
        rank.append(r)
    held: list[int | None] = [None] * len(receiver_prefs)
    nxt = [0] * len(proposer_prefs)
    free = deque(range(len(proposer_prefs)))
    while free:
        p = free.popleft()
        if nxt[p] >= len(proposer_prefs[p]):
            continue  # exhausted its list, stays single
        r = proposer_prefs[p][nxt[p]]
        nxt[p] += 1
        cur = held[r]
        if cur is None:
            held[r] = p
        elif rank[r][p] < rank[r][cur]:
            held[r] = p
            free.append(cur)
        else:
            free.append(p)
    match: list[int | None] = [None] * len(proposer_prefs)
    for r, p in enumerate(held):
        if p is not None:
            match[p] = r
    return match


@dataclass
class SeatMatching:
    """One Gale-Shapley pass over replicated BS seats."""

    seats: list[tuple[int, int]]          # seat -> (bs, copy index)
    mt_prefs: list[list[int]]             # MT -> seats, best first
    seat_prefs: list[list[int]]           # seat -> MTs, best first
    mt_seat: list[int | None]             # MT -> seat

    def bs_of(self, u: int) -> int | None:
        s = self.mt_seat[u]
        return None if s is None else self.seats[s][0]


def stable_matching_round(rsrp: np.ndarray, q: int, exclude: Sequence[int | None] | None = None,
                          demote: Sequence[Sequence[int]] | None = None) -> SeatMatching:
    """Match MTs to ``q`` replicated seats per BS, MTs proposing.

    ``exclude[u]`` removes that BS from MT u's list. ``demote[b]`` lists MTs
    that BS b ranks last (their relative order kept).
    """
    n, m = rsrp.shape
    seats = [(b, i) for b in range(n) for i in range(q)]
    bs_seats = [[b * q + i for i in range(q)] for b in range(n)]

    mt_prefs = []
    for u in range(m):
        order = preference_order(rsrp[:, u])
        if exclude is not None and exclude[u] is not None:
            order = [b for b in order if b != exclude[u]]
        mt_prefs.append([s for b in order for s in bs_seats[b]])

    bs_prefs = []
    for b in range(n):
        order = preference_order(rsrp[b])
        if demote is not None and demote[b]:
            last = set(demote[b])
            order = [u for u in order if u not in last] + [u for u in order if u in last]
        bs_prefs.append(order)
    seat_prefs = [bs_prefs[b] for b, _ in seats]
    return SeatMatching(seats, mt_prefs, seat_prefs, gale_shapley(mt_prefs, seat_prefs))


def sm_seats(num_mts: int, num_bs: int, c: int) -> int:
    return math.ceil(num_mts / num_bs) + c


def associate_sm(rsrp: np.ndarray, params: AssociationParams = AssociationParams()) -> AssociationMap:
    """Two rounds of seat-replicated stable matching.

    Round 1 gives A1. Round 2 drops A1(u) from MT u's list and has every BS
    rank its round-1 MTs last. If round 2 leaves an MT unmatched the seat
    count is raised by one and the round retried.
    """
    rsrp = np.asarray(rsrp, dtype=float)
    _check_dual(rsrp)
    n, m = rsrp.shape
    q = sm_seats(m, n, params.sm_c)

    first = stable_matching_round(rsrp, q)
    a1 = [first.bs_of(u) for u in range(m)]
    if any(b is None for b in a1):  # q * N >= M makes this unreachable
        raise AssociationError("stable matching left MTs without a first association")

    demote = [[u for u in range(m) if a1[u] == b] for b in range(n)]
    q2 = q
    while True:
        second = stable_matching_round(rsrp, q2, exclude=a1, demote=demote)
        a2 = [second.bs_of(u) for u in range(m)]
        if all(b is not None for b in a2):
            break
        q2 += 1
    if q2 != q:
        log.info("SM second round needed %d seats per BS (started at %d)", q2, q)
    return AssociationMap([(a1[u], a2[u]) for u in range(m)], n, "dual",
                          info={"q": q, "q_second": q2})


def associate_all(num_bs: int, num_mts: int) -> AssociationMap:
    return AssociationMap([tuple(range(num_bs)) for _ in range(num_mts)], num_bs, "all")


def associate(name: str, rsrp: np.ndarray, is_macro: Sequence[bool],
              params: AssociationParams = AssociationParams()) -> AssociationMap:
    """Dispatch by name: best, uigo, bigu, sm, all."""
    name = name.lower()
    if name == "best":
        return associate_best_rsrp(rsrp)
    if name == "uigo":
        return associate_uigo(rsrp, is_macro, params)
    if name == "bigu":
        return associate_bigu(rsrp, params)
    if name == "sm":
        return associate_sm(rsrp, params)
    if name == "all":
        return associate_all(*np.shape(rsrp))
    raise ValueError(f"unknown association {name!r}")
