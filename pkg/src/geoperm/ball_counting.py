"""Exact counts of desired partitions near observed genotype profiles.

A partition with group sizes ``t``/``n - t`` is identified with its profile
that has ``t`` ones; its distance to a profile ``m`` is ``min(d, n - d)`` where
``d`` is the Hamming distance to that profile. When ``t == n/2`` both the
profile and its complement have ``t`` ones and fall in the same distance
bucket, so every bucket holds an even number of vectors and is halved once.

All counts are Python integers. Functions returning per-radius lists compute
every radius in one pass; the scalar functions index into them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .genomodel import BinaryProfile, DimensionError, GenotypeMatrix
from .partition import enumerate_partitions, num_desired_partitions

ENUMERATION_BUDGET = 2_000_000


@lru_cache(maxsize=None)
def _comb_row(n: int) -> tuple[int, ...]:
    return tuple(math.comb(n, k) for k in range(n + 1))


def exact_distance_count(n: int, t: int, s: int, d: int) -> int:
    """Vectors with ``t`` ones at Hamming distance ``d`` from a fixed ``s``-ones profile.

    Reaching distance ``d`` means clearing ``a`` of the profile's ones and
    setting ``b`` of its zeros with ``a + b = d`` and ``s - a + b = t``.
    """
    for name, v in (("s", s), ("t", t), ("d", d)):
        if not 0 <= v <= n:
            raise ValueError(f"{name}={v} outside [0, {n}]")
    twice_a = d - t + s
    if twice_a % 2:
        return 0
    a = twice_a // 2
    b = d - a
    if a < 0 or b < 0 or a > s or b > n - s:
        return 0
    return math.comb(s, a) * math.comb(n - s, b)


def _check_r(n: int, r: int) -> None:
    if not 0 <= r <= n // 2:
        raise ValueError(f"radius {r} outside [0, {n // 2}]")


def ball_counts(m: BinaryProfile, t: int, r_max: int | None = None) -> list[int]:
    """``|B(r)|`` for ``r = 0..r_max`` around one profile."""
    n = m.n
    half = n // 2
    r_max = half if r_max is None else r_max
    _check_r(n, r_max)
    s = m.ones_count
    shell = [0] * (half + 1)
    for d in range(n + 1):
        shell[min(d, n - d)] += exact_distance_count(n, t, s, d)
    if 2 * t == n:
        shell = [c // 2 for c in shell]
    out, acc = [], 0
    for r in range(r_max + 1):
        acc += shell[r]
        out.append(acc)
    return out


def ball_count(m: BinaryProfile, t: int, r: int) -> int:
    """Number of desired partitions within distance ``r`` of ``m``."""
    _check_r(m.n, r)
    return ball_counts(m, t, r)[r]


def pair_intersection_counts(
    m1: BinaryProfile, m2: BinaryProfile, t: int, r_max: int | None = None
) -> list[int]:
    """``|B_1(r) ∩ B_2(r)|`` for ``r = 0..r_max``.

    Positions are split by ``(m1_i, m2_i)`` into classes of sizes
    ``(a, b, c, d)`` for (0,0), (0,1), (1,0), (1,1); a ``t``-ones vector is
    summarized by how many ones it places in each class.
    """
    if m1.n != m2.n:
        raise DimensionError(f"profile lengths differ: {m1.n} vs {m2.n}")
    n = m1.n
    half = n // 2
    r_max = half if r_max is None else r_max
    _check_r(n, r_max)
    full = (1 << n) - 1
    x1, x2 = m1.value, m2.value
    nd = (x1 & x2).bit_count()
    nc = (x1 & ~x2 & full).bit_count()
    nb = (~x1 & x2 & full).bit_count()
    na = n - nb - nc - nd
    ca, cb, cc, cd = _comb_row(na), _comb_row(nb), _comb_row(nc), _comb_row(nd)

    shell = [0] * (half + 1)
    for ka in range(min(na, t) + 1):
        wa = ca[ka]
        for kb in range(min(nb, t - ka) + 1):
            wab = wa * cb[kb]
            rest = t - ka - kb
            for kc in range(max(0, rest - nd), min(nc, rest) + 1):
                kd = rest - kc
                h1 = ka + kb + (nc - kc) + (nd - kd)
                h2 = ka + kc + (nb - kb) + (nd - kd)
                d1 = min(h1, n - h1)
                d2 = min(h2, n - h2)
                shell[max(d1, d2)] += wab * cc[kc] * cd[kd]
    if 2 * t == n:
        shell = [c // 2 for c in shell]
    out, acc = [], 0
    for r in range(r_max + 1):
        acc += shell[r]
        out.append(acc)
    return out


def pair_intersection_count(m1: BinaryProfile, m2: BinaryProfile, t: int, r: int) -> int:
    """Number of desired partitions within distance ``r`` of both profiles."""
    _check_r(m1.n, r)
    return pair_intersection_counts(m1, m2, t, r)[r]


@dataclass
class CountTable:
    """Serial cumulative counts ``C_U(r)`` with ``C_U(0)`` fixed to 0.

    ``c_u0_raw`` keeps the unforced radius-0 value (distinct partitions
    realized by observed profiles, up to the serial approximation), which the
    estimator needs when the best-partition profile itself is significant.
    """

    n: int
    t: int
    p: int
    c_u: list[int]
    c_u0_raw: int
    n_p: int
    per_marker_balls: dict[tuple[int, int], int] | None = field(default=None, repr=False)

    @property
    def r_max(self) -> int:
        return len(self.c_u) - 1

    @property
    def overcount(self) -> bool:
        return any(c > self.n_p for c in self.c_u)

    def value(self, r: int, raw_zero: bool = False) -> int:
        if r == 0 and raw_zero:
            return self.c_u0_raw
        return self.c_u[r]

    def to_tsv(self, path: str | Path | None = None) -> str:
        lines = ["r\tc_u"] + [f"{r}\t{c}" for r, c in enumerate(self.c_u)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def serial_count(
    g: GenotypeMatrix, t: int, r_max: int | None = None, keep_balls: bool = False
) -> CountTable:
    """Serial counting approximation over markers in input order.

    ``C_U(r) = sum_h |B_h(r)| - sum_{h>=2} |B_h(r) ∩ B_{h-1}(r)|``, with
    consecutive pairs taken across chromosome boundaries as well.
    """
    if g.p == 0:
        raise ValueError("genotype matrix has no markers")
    n = g.n
    r_max = n // 2 if r_max is None else r_max
    _check_r(n, r_max)
    totals = [0] * (r_max + 1)
    balls_by_value: dict[int, list[int]] = {}
    per_marker = {} if keep_balls else None
    for h, prof in enumerate(g.profiles):
        balls = balls_by_value.get(prof.value)
        if balls is None:
            balls = balls_by_value[prof.value] = ball_counts(prof, t, r_max)
        for r in range(r_max + 1):
            totals[r] += balls[r]
        if per_marker is not None:
            per_marker.update({(h, r): balls[r] for r in range(r_max + 1)})
        if h:
            inter = pair_intersection_counts(g.profiles[h - 1], prof, t, r_max)
            for r in range(r_max + 1):
                totals[r] -= inter[r]
    raw0 = totals[0]
    totals[0] = 0
    return CountTable(n, t, g.p, totals, raw0, num_desired_partitions(n, t), per_marker)


# --------------------------------------------------------------------------
# brute-force oracles


def _as_words(profiles) -> np.ndarray:
    return np.array([p.value for p in profiles], dtype=np.uint64)


def _check_budget(n: int, t: int, budget: int) -> None:
    if n > 64:
        raise ValueError("brute-force enumeration supports at most 64 individuals")
    if num_desired_partitions(n, t) > budget:
        raise ValueError(
            f"{num_desired_partitions(n, t)} partitions exceed the enumeration budget of {budget}"
        )


def partition_min_distances(g: GenotypeMatrix, t: int, budget: int = ENUMERATION_BUDGET) -> np.ndarray:
    """Distance from every canonical partition to its nearest observed profile."""
    n = g.n
    _check_budget(n, t, budget)
    parts = enumerate_partitions(n, t)
    words = _as_words(g.profiles)
    best = np.full(parts.size, n, dtype=np.int64)
    chunk = max(1, 4_000_000 // max(1, words.size))
    for lo in range(0, parts.size, chunk):
        block = parts[lo : lo + chunk]
        d = np.bitwise_count(block[:, None] ^ words[None, :]).astype(np.int64)
        d = np.minimum(d, n - d).min(axis=1)
        best[lo : lo + chunk] = d
    return best


def brute_force_counts(g: GenotypeMatrix, t: int, budget: int = ENUMERATION_BUDGET) -> list[int]:
    """Exact ``C(r)`` for ``r = 0..floor(n/2)`` by full enumeration."""
    d = partition_min_distances(g, t, budget)
    return [int(x) for x in np.cumsum(np.bincount(d, minlength=g.n // 2 + 1))]


def brute_force_count(g: GenotypeMatrix, t: int, r: int, budget: int = ENUMERATION_BUDGET) -> int:
    """Exact number of partitions within ``r`` of at least one observed profile."""
    _check_r(g.n, r)
    return brute_force_counts(g, t, budget)[r]


def brute_force_intersection_counts(
    m1: BinaryProfile, m2: BinaryProfile, t: int, budget: int = ENUMERATION_BUDGET
) -> list[int]:
    """Exact ``|B_1(r) ∩ B_2(r)|`` for every radius by enumeration."""
    if m1.n != m2.n:
        raise DimensionError(f"profile lengths differ: {m1.n} vs {m2.n}")
    n = m1.n
    _check_budget(n, t, budget)
    parts = enumerate_partitions(n, t)
    d1 = np.bitwise_count(parts ^ np.uint64(m1.value)).astype(np.int64)
    d2 = np.bitwise_count(parts ^ np.uint64(m2.value)).astype(np.int64)
    d = np.maximum(np.minimum(d1, n - d1), np.minimum(d2, n - d2))
    return [int(x) for x in np.cumsum(np.bincount(d, minlength=n // 2 + 1))]
