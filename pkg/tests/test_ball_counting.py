import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import matrix, profile
from geoperm.ball_counting import (
    ball_count,
    ball_counts,
    brute_force_count,
    brute_force_counts,
    exact_distance_count,
    pair_intersection_count,
    pair_intersection_counts,
    serial_count,
)
from geoperm.genomodel import deduplicate_profiles
from geoperm.partition import num_desired_partitions
from geoperm.simgen import SimConfig, simulate_genotypes


# independent enumeration oracle on plain tuples


def _canonical_partitions(n, t):
    out = []
    for ones in itertools.combinations(range(n), t):
        v = tuple(1 if i in ones else 0 for i in range(n))
        if 2 * t == n and v[0] == 1:
            continue
        out.append(v)
    return out


def _pdist(m, v):
    d = sum(a != b for a, b in zip(m, v))
    return min(d, len(m) - d)


def oracle_ball(m, t, r):
    return sum(_pdist(m, v) <= r for v in _canonical_partitions(len(m), t))


def oracle_pair(m1, m2, t, r):
    return sum(_pdist(m1, v) <= r and _pdist(m2, v) <= r for v in _canonical_partitions(len(m1), t))


def test_exact_distance_count_examples():
    assert exact_distance_count(4, 2, 2, 0) == 1
    assert exact_distance_count(4, 2, 2, 1) == 0
    assert exact_distance_count(4, 2, 2, 2) == 4
    with pytest.raises(ValueError):
        exact_distance_count(4, 2, 5, 0)


@pytest.mark.parametrize("n", range(1, 11))
def test_exact_distance_count_vs_enumeration(n):
    for s in range(n + 1):
        m = [1] * s + [0] * (n - s)
        for t in range(n + 1):
            counts = [0] * (n + 1)
            for ones in itertools.combinations(range(n), t):
                d = sum((i in ones) != bool(m[i]) for i in range(n))
                counts[d] += 1
            assert [exact_distance_count(n, t, s, d) for d in range(n + 1)] == counts


@given(st.integers(1, 80).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n), st.integers(0, n), st.integers(0, n))))
def test_exact_distance_count_identities(args):
    n, t, s, d = args
    assert exact_distance_count(n, t, s, d) == exact_distance_count(n, n - t, n - s, d)
    assert sum(exact_distance_count(n, t, s, k) for k in range(n + 1)) == math.comb(n, t)


@pytest.mark.parametrize("n", [4, 5, 6, 7, 8, 9, 10])
def test_ball_count_vs_oracle(n, rng):
    for t in sorted({n // 2, max(1, n // 2 - 1), 1}):
        for _ in range(6):
            m = tuple(int(x) for x in rng.integers(0, 2, n))
            got = ball_counts(profile(m), t)
            assert got == [oracle_ball(m, t, r) for r in range(n // 2 + 1)]


@pytest.mark.parametrize("n", [4, 5, 6, 8, 9, 10])
def test_pair_intersection_vs_oracle(n, rng):
    for t in sorted({n // 2, max(1, n // 2 - 1)}):
        for _ in range(6):
            m1 = tuple(int(x) for x in rng.integers(0, 2, n))
            m2 = tuple(int(x) for x in rng.integers(0, 2, n))
            got = pair_intersection_counts(profile(m1), profile(m2), t)
            assert got == [oracle_pair(m1, m2, t, r) for r in range(n // 2 + 1)]


def test_ball_count_examples():
    m = profile([0, 1, 1, 0, 1, 0])
    assert ball_count(m, 3, 0) == 1
    assert ball_count(profile([1, 1, 1, 1, 1, 0]), 3, 0) == 0
    assert ball_count(profile([0, 1, 1, 1, 1, 1]), 1, 0) == 1  # n - t ones
    assert ball_count(m, 3, 3) == num_desired_partitions(6, 3)
    with pytest.raises(ValueError):
        ball_count(m, 3, 4)


def test_ball_count_n12_r3(rng):
    m = tuple(int(x) for x in rng.integers(0, 2, 12))
    assert ball_count(profile(m), 6, 3) == oracle_ball(m, 6, 3)


@given(st.integers(2, 40).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
)))
def test_pair_intersection_identities(case):
    a, b = (profile(x) for x in case)
    n = a.n
    t = max(1, n // 2)
    if t >= n:
        return
    ab = pair_intersection_counts(a, b, t)
    assert ab == pair_intersection_counts(b, a, t)
    balls_a, balls_b = ball_counts(a, t), ball_counts(b, t)
    assert pair_intersection_counts(a, a, t) == balls_a
    assert pair_intersection_counts(a, a.complement(), t) == balls_a
    for r in range(n // 2 + 1):
        assert ab[r] <= min(balls_a[r], balls_b[r])
    assert ab[-1] == num_desired_partitions(n, t)


def test_pair_dimension_mismatch():
    with pytest.raises(ValueError):
        pair_intersection_count(profile([0, 1]), profile([0, 1, 1]), 1, 0)


def test_serial_single_marker():
    m = profile([0, 1, 1, 0, 0, 1, 0, 1])
    table = serial_count(matrix([m.bits]), 4)
    assert table.c_u[0] == 0
    assert table.c_u[1:] == ball_counts(m, 4)[1:]
    assert table.c_u0_raw == 1


def test_serial_identical_markers_after_dedup():
    rows = [[0, 1, 1, 0, 1, 0]] * 4
    g, _ = deduplicate_profiles(matrix(rows))
    assert serial_count(g, 3).c_u == serial_count(matrix(rows[:1]), 3).c_u


def test_brute_force_examples():
    g = matrix([[0, 1, 1, 0, 1, 0], [1, 1, 1, 0, 0, 0], [0, 0, 0, 1, 1, 1]])
    assert brute_force_count(g, 3, 3) == num_desired_partitions(6, 3)
    assert brute_force_count(g, 3, 0) == 2  # rows 2 and 3 are the same partition
    with pytest.raises(ValueError):
        brute_force_count(matrix([[0, 1] * 15]), 15, 0, budget=1000)


def test_brute_force_matches_tuple_oracle(rng):
    rows = rng.integers(0, 2, (5, 10))
    g = matrix(rows)
    parts = _canonical_partitions(10, 5)
    ref = [sum(min(_pdist(tuple(m), v) for m in rows.tolist()) <= r for v in parts) for r in range(6)]
    assert brute_force_counts(g, 5) == ref


@pytest.mark.parametrize("seed", range(8))
def test_serial_overcounts_chain_data(seed):
    g0 = simulate_genotypes(SimConfig(n=12, p=8, theta=0.1, seed=seed))
    g, _ = deduplicate_profiles(g0)
    for t in (6, 5):
        exact = brute_force_counts(g, t)
        table = serial_count(g, t)
        assert all(table.c_u[r] >= exact[r] for r in range(1, 7))
        assert table.c_u0_raw >= exact[0]


def test_serial_exact_for_nested_chain():
    # markers differing by one flip along a path: neighbor intersections capture all overlap at r=1
    rows = [[0, 0, 0, 1, 1, 1, 0, 1], [0, 0, 1, 1, 1, 1, 0, 0]]
    g = matrix(rows)
    assert serial_count(g, 4).c_u[1:] == brute_force_counts(g, 4)[1:]


def test_count_table_tsv_and_bounds(tmp_path):
    g = simulate_genotypes(SimConfig(n=12, p=10, theta=0.2, seed=3))
    g, _ = deduplicate_profiles(g)
    table = serial_count(g, 6, keep_balls=True)
    max_ball = max(ball_counts(m, 6)[-1] for m in g.profiles)
    assert all(c <= g.p * max_ball for c in table.c_u)
    text = table.to_tsv(tmp_path / "c.tsv")
    assert text.splitlines()[0] == "r\tc_u"
    assert len(text.splitlines()) == 8
    assert table.per_marker_balls[(0, 6)] == num_desired_partitions(12, 6)


def test_serial_monotone_below_saturation():
    g0 = simulate_genotypes(SimConfig(n=20, p=40, theta=0.1, seed=11))
    g, _ = deduplicate_profiles(g0)
    table = serial_count(g, 10)
    cu = table.c_u
    for r in range(1, len(cu)):
        if cu[r - 1] < table.n_p and cu[r] < table.n_p:
            assert cu[r] >= cu[r - 1]
