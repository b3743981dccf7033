"""Desired partitions: two-group splits of the sample used as significance-set centers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .genomodel import BinaryProfile, DimensionError, TraitVector


def default_t(n: int, odd: str = "floor") -> int:
    """Group size of the best partition; half the sample, rounded per ``odd``."""
    if odd not in ("floor", "ceil"):
        raise ValueError("odd must be 'floor' or 'ceil'")
    return n // 2 if odd == "floor" else (n + 1) // 2


def _check_t(n: int, t: int) -> None:
    if not 1 <= t <= n - 1:
        raise ValueError(f"group size t={t} outside [1, {n - 1}]")


@dataclass(frozen=True)
class DesiredPartition:
    """A split of ``n`` individuals into groups of ``t`` and ``n - t``.

    ``representative`` is the profile with ones on the size-``t`` group. When
    ``t == n/2`` either group qualifies, and the one with individual 0 in the
    zero class is kept, so a profile and its complement map to the same object.
    """

    representative: BinaryProfile
    t: int

    def __post_init__(self) -> None:
        rep = self.representative
        if rep.ones_count != self.t:
            raise ValueError("representative must have exactly t ones")
        if 2 * self.t == rep.n and rep.value & 1:
            raise ValueError("balanced representative must have a 0 in the first position")

    @classmethod
    def from_profile(cls, profile: BinaryProfile, t: int | None = None) -> "DesiredPartition":
        n = profile.n
        k = profile.ones_count
        if t is None:
            t = k
        _check_t(n, t)
        if k == t:
            rep = profile
        elif k == n - t:
            rep = profile.complement()
        else:
            raise ValueError(f"profile with {k} ones does not split the sample into {t} and {n - t}")
        if 2 * t == n and rep.value & 1:
            rep = rep.complement()
        return cls(rep, t)

    @property
    def n(self) -> int:
        return self.representative.n

    @property
    def centers(self) -> tuple[BinaryProfile, BinaryProfile]:
        """The two genotype profiles realizing this partition."""
        return self.representative, self.representative.complement()


def best_partition(trait: TraitVector, t: int | None = None) -> DesiredPartition:
    """Project a trait onto the desired partition most associated with it.

    A binary trait is its own partition. For a quantitative trait the ``t``
    smallest values (stable on index for ties) form the zero class.
    """
    n = trait.n
    y = trait.values
    if trait.kind == "binary":
        zeros = int((y == 0).sum())
        if t is not None and t not in (zeros, n - zeros):
            raise ValueError(f"binary trait splits into {zeros}/{n - zeros}, not t={t}")
        if zeros in (0, n):
            raise ValueError("binary trait is constant")
        return DesiredPartition.from_profile(BinaryProfile.from_bits(y.astype(int)), t or zeros)
    if t is None:
        t = default_t(n)
    _check_t(n, t)
    order = np.argsort(y, kind="stable")
    bits = np.ones(n, dtype=int)
    bits[order[:t]] = 0
    return DesiredPartition.from_profile(BinaryProfile.from_bits(bits), t)


def num_desired_partitions(n: int, t: int) -> int:
    """Number of distinct desired partitions (exact integer)."""
    _check_t(n, t)
    c = math.comb(n, t)
    return c // 2 if 2 * t == n else c


def partition_distance(m: BinaryProfile, dp: DesiredPartition) -> int:
    """Distance to the nearer of the partition's two profiles."""
    if m.n != dp.n:
        raise DimensionError(f"profile has {m.n} individuals, partition has {dp.n}")
    d = (m.value ^ dp.representative.value).bit_count()
    return min(d, m.n - d)


def enumerate_partitions(n: int, t: int) -> np.ndarray:
    """All canonical representatives as bitmasks (uint64, needs ``n <= 64``)."""
    _check_t(n, t)
    if n > 64:
        raise ValueError("enumeration supports at most 64 individuals")
    first = 1 if 2 * t == n else 0
    positions = range(first, n)
    out = np.fromiter(
        (sum(1 << i for i in c) for c in combinations(positions, t)),
        dtype=np.uint64,
        count=math.comb(n - first, t),
    )
    return out
