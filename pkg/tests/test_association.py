import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hetnet_dc.association import (
    AssociationError,
    AssociationParams,
    associate,
    associate_all,
    associate_best_rsrp,
    associate_bigu,
    associate_sm,
    associate_uigo,
    gale_shapley,
    sm_seats,
    stable_matching_round,
)

M1, P1, P2 = 0, 1, 2
UIGO_MACRO = [True, False, False]


def blocking_pairs(rsrp, q, mt_seat):
    """Brute-force (seat, MT) scan built straight from the RSRP matrix."""
    n, m = rsrp.shape
    seats = [(b, i) for b in range(n) for i in range(q)]

    def mt_key(u, s):  # smaller is better
        b, i = seats[s]
        return (-rsrp[b, u], b, i)

    def seat_key(s, u):
        return (-rsrp[seats[s][0], u], u)

    occupant = {s: u for u, s in enumerate(mt_seat) if s is not None}
    found = []
    for u in range(m):
        for s in range(len(seats)):
            if mt_seat[u] == s:
                continue
            u_wants = mt_seat[u] is None or mt_key(u, s) < mt_key(u, mt_seat[u])
            cur = occupant.get(s)
            s_wants = cur is None or seat_key(s, u) < seat_key(s, cur)
            if u_wants and s_wants:
                found.append((s, u))
    return found


def random_rsrp(rng, n, m):
    return rng.uniform(-120.0, -50.0, size=(n, m)).round(1)


# ---------------------------------------------------------------- best RSRP

def test_best_rsrp_argmax_and_ties():
    assert associate_best_rsrp(np.array([[-80.0], [-85.0], [-100.0]])).serving == [(0,)]
    assert associate_best_rsrp(np.array([[-80.0], [-80.0]])).serving == [(0,)]


def test_best_rsrp_relabeling():
    rng = np.random.default_rng(3)
    rsrp = random_rsrp(rng, 6, 15)
    perm = rng.permutation(6)
    base = associate_best_rsrp(rsrp)
    permuted = associate_best_rsrp(rsrp[perm])
    for u in range(15):
        assert perm[permuted.a1(u)] == base.a1(u)


# ---------------------------------------------------------------- UIGO

def test_uigo_runner_up_is_pico():
    rsrp = np.array([[-80.0], [-85.0], [-100.0]])
    assert associate_uigo(rsrp, UIGO_MACRO, AssociationParams(h1=10)).serving == [(M1, P1)]


@pytest.mark.parametrize("h1,expected", [(10, P2), (5, M1)])
def test_uigo_offload_threshold(h1, expected):
    # P1 -70, M1 -75, P2 -84: gap between M1 and P2 is 9 dB
    rsrp = np.array([[-75.0], [-70.0], [-84.0]])
    amap = associate_uigo(rsrp, UIGO_MACRO, AssociationParams(h1=h1))
    assert amap.serving == [(P1, expected)]


def test_uigo_without_spare_pico_keeps_macro():
    rsrp = np.array([[-70.0], [-75.0], [-90.0]])
    amap = associate_uigo(rsrp, [False, True, True], AssociationParams(h1=100))
    assert amap.serving == [(0, 1)]


@settings(max_examples=60, deadline=None)
@given(data=st.data(), n=st.integers(2, 7), m=st.integers(1, 12), h1=st.floats(0, 30))
def test_uigo_properties(data, n, m, h1):
    rsrp = data.draw(arrays(float, (n, m), elements=st.floats(-130, -40)))
    is_macro = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
    amap = associate_uigo(rsrp, is_macro, AssociationParams(h1=h1))
    amap.validate()
    assert amap.comparisons <= 3 * m * n
    for u in range(m):
        a1, a2 = amap.serving[u]
        assert rsrp[a1, u] == rsrp[:, u].max()
        rest = [b for b in range(n) if b != a1]
        c = max(rest, key=lambda b: (rsrp[b, u], -b))
        picos = [b for b in rest if not is_macro[b]]
        if is_macro[c] and picos:
            d = max(picos, key=lambda b: (rsrp[b, u], -b))
            if rsrp[c, u] - rsrp[d, u] < h1:
                assert not is_macro[a2]


# ---------------------------------------------------------------- BIGU

BIGU_RSRP = np.array([[-70.0, -80.0],
                      [-72.0, -75.0]])


def test_bigu_hand_trace():
    amap = associate_bigu(BIGU_RSRP, AssociationParams(h2=5))
    assert amap.serving == [(0, 1), (1, 0)]
    assert not amap.warning


def test_bigu_infinite_threshold_takes_earliest_offers():
    amap = associate_bigu(BIGU_RSRP, AssociationParams(h2=math.inf))
    # round 1: both BSs offer u1; round 2: both offer u2, b1 first
    assert amap.serving == [(0, 1), (0, 1)]


def test_bigu_single_bs_is_infeasible():
    with pytest.raises(AssociationError):
        associate_bigu(np.array([[-70.0]]))


def test_bigu_zero_threshold_falls_back():
    # with a strict "< 0" nothing is ever accepted
    rsrp = np.array([[-70.0, -90.0], [-80.0, -60.0], [-85.0, -65.0]])
    amap = associate_bigu(rsrp, AssociationParams(h2=0))
    assert amap.warning
    amap.validate()
    assert amap.serving == [(0, 1), (1, 2)]


@settings(max_examples=60, deadline=None)
@given(data=st.data(), n=st.integers(2, 6), m=st.integers(1, 10), h2=st.floats(0.1, 30))
def test_bigu_properties(data, n, m, h2):
    rsrp = data.draw(arrays(float, (n, m), elements=st.floats(-130, -40)))
    amap = associate_bigu(rsrp, AssociationParams(h2=h2))
    amap.validate()
    assert not amap.warning
    assert amap.info["rounds"] <= 10 * m


# ---------------------------------------------------------------- SM

def test_gale_shapley_textbook():
    # men propose; classic 3x3 instance with a unique stable matching
    men = [[0, 1, 2], [1, 0, 2], [0, 1, 2]]
    women = [[1, 0, 2], [0, 1, 2], [0, 1, 2]]
    assert gale_shapley(men, women) == [0, 1, 2]


def test_sm_two_by_two_matches_brute_force():
    rsrp = np.array([[-70.0, -80.0],
                     [-75.0, -72.0]])
    amap = associate_sm(rsrp, AssociationParams(sm_c=0))
    assert amap.serving == [(0, 1), (1, 0)]
    # round 1: the only stable perfect matching among both candidates
    stable = []
    for perm in itertools.permutations(range(2)):
        if not blocking_pairs(rsrp, 1, list(perm)):
            stable.append(perm)
    assert stable == [(0, 1)]


def test_sm_symmetric_instance_uses_lowest_ids():
    rsrp = np.full((2, 2), -80.0)
    first = stable_matching_round(rsrp, 1)
    assert [first.bs_of(u) for u in range(2)] == [0, 1]
    assert associate_sm(rsrp, AssociationParams(sm_c=0)).serving == [(0, 1), (1, 0)]


def test_sm_round_one_stable_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 9))
        rsrp = random_rsrp(rng, n, m)
        q = sm_seats(m, n, int(rng.integers(0, 3)))
        first = stable_matching_round(rsrp, q)
        assert all(s is not None for s in first.mt_seat)
        assert blocking_pairs(rsrp, q, first.mt_seat) == []


def test_sm_second_round_demotes_and_excludes():
    rng = np.random.default_rng(5)
    rsrp = random_rsrp(rng, 3, 6)
    amap = associate_sm(rsrp)
    amap.validate()
    q = sm_seats(6, 3, 1)
    a1 = [amap.a1(u) for u in range(6)]
    demote = [[u for u in range(6) if a1[u] == b] for b in range(3)]
    second = stable_matching_round(rsrp, amap.info["q_second"], exclude=a1, demote=demote)
    assert [second.bs_of(u) for u in range(6)] == [amap.a2(u) for u in range(6)]
    assert amap.info["q"] == q


def test_sm_raises_seats_when_second_round_strands_an_mt():
    # three MTs, three BSs, one seat each (c = 0): each BS ranks the MT it
    # already serves last, and u2's only options get taken by u0 and u1
    rsrp = np.array([
        [-60.0, -70.0, -90.0],
        [-70.0, -60.0, -91.0],
        [-95.0, -95.0, -61.0],
    ])
    amap = associate_sm(rsrp, AssociationParams(sm_c=0))
    amap.validate()
    assert amap.info["q"] == 1
    assert amap.info["q_second"] == 2
    assert amap.serving[2][1] in (0, 1)


def test_sm_single_bs_infeasible():
    with pytest.raises(AssociationError):
        associate_sm(np.array([[-70.0, -71.0]]))


# ---------------------------------------------------------------- all

def test_all_connectivity():
    amap = associate_all(12, 30)
    assert all(len(s) == 12 for s in amap.serving)
    assert amap.connections() == 360
    single = associate_all(1, 4)
    assert single.serving == associate_best_rsrp(np.full((1, 4), -70.0)).serving


@pytest.mark.parametrize("name,seed", [("uigo", 1), ("bigu", 2), ("sm", 3)])
def test_dual_algorithms_on_random_instances(name, seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        n = int(rng.integers(2, 13))
        m = int(rng.integers(1, 40))
        rsrp = random_rsrp(rng, n, m)
        is_macro = rng.random(n) < 0.3
        amap = associate(name, rsrp, is_macro)
        assert all(len(s) == 2 and s[0] != s[1] for s in amap.serving)
        assert all(0 <= b < n for s in amap.serving for b in s)


def test_association_csv(tmp_path):
    amap = associate_sm(np.array([[-70.0, -80.0], [-75.0, -72.0]]))
    path = tmp_path / "assoc.csv"
    amap.write_csv(path)
    assert path.read_text().splitlines() == ["mt_id,a1,a2", "0,0,1", "1,1,0"]
