"""Monte Carlo estimate of the radial significance probability P(r, alpha).

Profiles are drawn at exact Hamming distance ``r`` from the best-partition
profile by flipping ``r`` distinct individuals, and the fraction reaching
nominal p <= alpha is recorded per radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np

from ._random import STREAM_RADIAL, substream
from .assoc_stats import attains, pvalues
from .genomodel import BinaryProfile, DimensionError, TraitVector
from .partition import DesiredPartition

DEFAULT_H = 1000
EARLY_EXIT = 200


@dataclass
class RadialProfile:
    """Per-radius estimates after the nonincreasing envelope is applied.

    ``raw`` holds the unsmoothed fractions; ``p_hat`` the running minimum.
    """

    alpha: float
    t: int
    H: int
    p_hat: dict[int, float]
    se: dict[int, float]
    r_L: int
    r_U: int
    raw: dict[int, float] = field(default_factory=dict)
    hits: dict[int, int] = field(default_factory=dict)
    draws: dict[int, int] = field(default_factory=dict)
    envelope_adjusted: bool = False
    exact: dict[int, Fraction] = field(default_factory=dict, repr=False)

    @property
    def center_attains(self) -> bool:
        """Whether the best-partition profile itself reaches the cutoff."""
        return self.p_hat.get(0, 0.0) == 1.0

    def weight(self, r: int) -> Fraction:
        """Exact rational value of ``p_hat(r)`` (0 past the scanned range)."""
        return self.exact.get(r, Fraction(0))

    def to_tsv(self, path: str | Path | None = None) -> str:
        lines = ["r\tp_hat\tse\traw\tdraws"]
        for r in sorted(self.p_hat):
            lines.append(f"{r}\t{self.p_hat[r]:.6g}\t{self.se[r]:.6g}\t{self.raw[r]:.6g}\t{self.draws[r]}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} must lie strictly between 0 and 1")


def sample_shell(center: np.ndarray, r: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` uniform profiles at Hamming distance exactly ``r`` from ``center``."""
    n = center.size
    out = np.broadcast_to(center, (size, n)).copy()
    if r == 0 or size == 0:
        return out
    if r == n:
        return 1 - out
    idx = np.argpartition(rng.random((size, n)), r - 1, axis=1)[:, :r]
    rows = np.repeat(np.arange(size), r)
    out[rows, idx.ravel()] ^= 1
    return out


def _shell_hits(trait, center, r, alpha, H, rng, early_exit) -> tuple[int, int]:
    first = min(H, early_exit)
    hit = int(attains(pvalues(trait, sample_shell(center, r, first, rng)), alpha).sum())
    if H <= first:
        return hit, first
    if hit in (0, first):
        # unanimous pilot: clamp to 0 or 1
        return (0, first) if hit == 0 else (first, first)
    more = H - first
    hit += int(attains(pvalues(trait, sample_shell(center, r, more, rng)), alpha).sum())
    return hit, H


def estimate_radial(
    trait: TraitVector,
    dp: DesiredPartition,
    alpha: float,
    H: int = DEFAULT_H,
    seed: int | None = 0,
    early_exit: int = EARLY_EXIT,
    r_max: int | None = None,
) -> RadialProfile:
    """Scan radii outward from the best partition until two consecutive zeros."""
    _check_alpha(alpha)
    if H < 1:
        raise ValueError("H must be at least 1")
    if dp.n != trait.n:
        raise DimensionError(f"partition has {dp.n} individuals, trait has {trait.n}")
    n = trait.n
    half = n // 2 if r_max is None else min(r_max, n // 2)
    center = dp.representative.to_array()
    hits: dict[int, int] = {}
    draws: dict[int, int] = {}

    p0 = pvalues(trait, center[None, :])
    hits[0], draws[0] = int(attains(p0, alpha)[0]), 1
    zeros_in_row = 1 if hits[0] == 0 else 0
    for r in range(1, half + 1):
        if zeros_in_row >= 2:
            break
        hits[r], draws[r] = _shell_hits(trait, center, r, alpha, H, substream(seed, STREAM_RADIAL, r), early_exit)
        zeros_in_row = zeros_in_row + 1 if hits[r] == 0 else 0

    raw = {r: hits[r] / draws[r] for r in hits}
    exact: dict[int, Fraction] = {}
    running = Fraction(1)
    adjusted = False
    for r in sorted(hits):
        frac = Fraction(hits[r], draws[r])
        adjusted = adjusted or frac > running
        running = min(running, frac)
        exact[r] = running
    p_hat = {r: float(v) for r, v in exact.items()}
    # clamped radii report the SE of the pilot fraction, i.e. 0
    se = {r: math.sqrt(v * (1.0 - v) / draws[r]) for r, v in p_hat.items()}
    ones = [r for r in p_hat if p_hat[r] == 1.0]
    r_L = max(ones) if ones else 0
    zero_r = [r for r in p_hat if p_hat[r] == 0.0]
    r_U = min(zero_r) if zero_r else max(p_hat) + 1
    return RadialProfile(alpha, dp.t, H, p_hat, se, r_L, r_U, raw, hits, draws, adjusted, exact)


def radial_symmetry_check(
    trait: TraitVector,
    dp: DesiredPartition,
    alpha: float,
    r: int,
    H: int = DEFAULT_H,
    seed: int | None = 0,
) -> tuple[float, float]:
    """Independent estimates of the shell probability around each partition profile."""
    _check_alpha(alpha)
    n = trait.n
    if r < 0 or 2 * r >= n:
        raise ValueError(f"radius {r} must satisfy 0 <= r < n/2")
    out = []
    for a, center in enumerate(dp.centers):
        arr = center.to_array()
        rng = substream(seed, STREAM_RADIAL, r, a)
        prof = sample_shell(arr, r, H, rng)
        out.append(float(attains(pvalues(trait, prof), alpha).mean()))
    return out[0], out[1]


def exact_shell_probability(
    trait: TraitVector, center: BinaryProfile, alpha: float, r: int, chunk: int = 100_000
) -> Fraction:
    """Exact fraction of the ``C(n, r)`` profiles at distance ``r`` reaching ``alpha``."""
    n = center.n
    if not 0 <= r <= n:
        raise ValueError("radius out of range")
    total = math.comb(n, r)
    if total > 5_000_000:
        raise ValueError("shell too large to enumerate")
    base = center.to_array()
    hit = 0
    it = combinations(range(n), r)
    while True:
        flips = [c for _, c in zip(range(chunk), it)]
        if not flips:
            break
        block = np.broadcast_to(base, (len(flips), n)).copy()
        if r:
            idx = np.array(flips)
            block[np.repeat(np.arange(len(flips)), r), idx.ravel()] ^= 1
        hit += int(attains(pvalues(trait, block), alpha).sum())
    return Fraction(hit, total)
