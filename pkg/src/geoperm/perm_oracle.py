"""Direct permutation p-values: fixed count, staged adaptive schedule, exhaustive.

Permutations are generated in blocks of :data:`BLOCK` rows; block ``k`` draws
from the substream keyed by ``k`` under ``seed``, so the permutation set for a seed does not
depend on batching or on how many workers consume the blocks.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from ._random import STREAM_PERM, substream
from .assoc_stats import PermutationScanner, attains, min_nominal_p
from .genomodel import GenotypeMatrix, TraitVector
from .partition import enumerate_partitions, num_desired_partitions

logger = logging.getLogger(__name__)

BLOCK = 100
BATCH_BLOCKS = 50

# (cumulative permutations, stop if p is certified above this)
ADAPTIVE_STAGES: tuple[tuple[int, float], ...] = (
    (100, 0.1),
    (1_000, 0.05),
    (5_000, 0.02),
    (10_000, 0.01),
    (50_000, 0.002),
    (100_000, 0.001),
)
ADAPTIVE_FINAL = 500_000
ADAPTIVE_CONFIDENCE = 0.9999


@dataclass
class PermutationResult:
    n_perms: int
    n_exceed: int
    p_hat: float
    ci95: tuple[float, float]
    stopped_at_stage: int | None = None
    exact: bool = False
    alpha: float | None = None
    lower_bound: float | None = None
    p_exact: Fraction | None = field(default=None, repr=False)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "n_perms": self.n_perms,
            "n_exceed": self.n_exceed,
            "p_hat": self.p_hat,
            "ci95": list(self.ci95),
            "stopped_at_stage": self.stopped_at_stage,
            "exact": self.exact,
            "lower_bound": self.lower_bound,
            "interval": "clopper-pearson",
            "seconds": self.seconds,
        }


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Two-sided exact binomial interval."""
    tail = (1.0 - level) / 2.0
    lo = 0.0 if k == 0 else float(stats.beta.ppf(tail, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1.0 - tail, k + 1, n - k))
    return lo, hi


def lower_confidence_bound(k: int, n: int, confidence: float = ADAPTIVE_CONFIDENCE) -> float:
    """One-sided Clopper-Pearson lower bound on a binomial proportion."""
    if k == 0:
        return 0.0
    return float(stats.beta.ppf(1.0 - confidence, k, n - k + 1))


def _resolve_alpha(g: GenotypeMatrix, trait: TraitVector, alpha: float | None) -> float:
    if alpha is None:
        return min_nominal_p(trait, g).nominal_p
    return float(alpha)


def _block_rows(base: np.ndarray, seed: int | None, block: int, rows: int) -> np.ndarray:
    rng = substream(seed, STREAM_PERM, block)
    return rng.permuted(np.broadcast_to(base, (rows, base.size)), axis=1)


def _count_exceed(scanner: PermutationScanner, alpha: float, start: int, stop: int, seed) -> int:
    """Exceedances among permutations ``start..stop-1`` (block aligned)."""
    assert start % BLOCK == 0
    hit = 0
    block = start // BLOCK
    done = start
    while done < stop:
        parts = []
        while done < stop and len(parts) < BATCH_BLOCKS:
            rows = min(BLOCK, stop - done)
            parts.append(_block_rows(scanner.base, seed, block, rows))
            block += 1
            done += rows
        Y = np.concatenate(parts) if len(parts) > 1 else parts[0]
        hit += int(attains(scanner.min_p(Y), alpha).sum())
    return hit


def direct_permutation_p(
    g: GenotypeMatrix,
    trait: TraitVector,
    alpha: float | None,
    n_perms: int,
    seed: int | None = 0,
) -> PermutationResult:
    """Fraction of random trait permutations whose genome-wide min p is <= alpha."""
    if n_perms < 1:
        raise ValueError("n_perms must be at least 1")
    t0 = time.perf_counter()
    alpha = _resolve_alpha(g, trait, alpha)
    scanner = PermutationScanner(trait, g)
    k = _count_exceed(scanner, alpha, 0, n_perms, seed)
    return PermutationResult(
        n_perms, k, k / n_perms, clopper_pearson(k, n_perms), None, False, alpha,
        seconds=time.perf_counter() - t0,
    )


def adaptive_permutation_p(
    g: GenotypeMatrix,
    trait: TraitVector,
    seed: int | None = 0,
    alpha: float | None = None,
    stages=ADAPTIVE_STAGES,
    final: int = ADAPTIVE_FINAL,
    confidence: float = ADAPTIVE_CONFIDENCE,
) -> PermutationResult:
    """Staged permutation run that stops once p is certified above the stage threshold.

    After each stage of cumulative size ``N`` with ``k`` exceedances, the run
    stops if the one-sided lower confidence bound for ``k/N`` exceeds the
    stage's threshold; otherwise it proceeds, finishing at ``final``.
    ``alpha`` defaults to the observed genome-wide minimum nominal p.
    """
    t0 = time.perf_counter()
    alpha = _resolve_alpha(g, trait, alpha)
    scanner = PermutationScanner(trait, g)
    k = 0
    done = 0
    for i, (size, threshold) in enumerate(stages, start=1):
        k += _count_exceed(scanner, alpha, done, size, seed)
        done = size
        lb = lower_confidence_bound(k, done, confidence)
        logger.info("stage %d: %d/%d exceed, lower bound %.3g vs %.3g", i, k, done, lb, threshold)
        if lb > threshold:
            return PermutationResult(
                done, k, k / done, clopper_pearson(k, done), i, False, alpha, lb,
                seconds=time.perf_counter() - t0,
            )
    k += _count_exceed(scanner, alpha, done, final, seed)
    done = final
    lb = lower_confidence_bound(k, done, confidence)
    return PermutationResult(
        done, k, k / done, clopper_pearson(k, done), None, False, alpha, lb,
        seconds=time.perf_counter() - t0,
    )


def _unpack_words(words: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n, dtype=np.uint64)
    return ((words[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.float64)


def exhaustive_binary(
    g: GenotypeMatrix,
    trait: TraitVector,
    alpha: float | None = None,
    budget: int = 2_000_000,
    chunk: int = 20_000,
) -> PermutationResult:
    """Exact permutation p-value for a binary trait by enumerating all labelings.

    Swapping the two labels leaves the chi-square statistic unchanged, so for
    a balanced trait each partition stands for both of its labelings.
    """
    if trait.kind != "binary":
        raise ValueError("exhaustive enumeration needs a binary trait")
    n = trait.n
    t1 = int(trait.values.sum())
    if t1 in (0, n):
        raise ValueError("binary trait is constant")
    if num_desired_partitions(n, t1) > budget:
        raise ValueError(f"{num_desired_partitions(n, t1)} labelings exceed the enumeration budget")
    alpha = _resolve_alpha(g, trait, alpha)
    scanner = PermutationScanner(trait, g)
    labelings = enumerate_partitions(n, t1)
    hit = 0
    for lo in range(0, labelings.size, chunk):
        Y = _unpack_words(labelings[lo : lo + chunk], n)
        hit += int(attains(scanner.min_p(Y), alpha).sum())
    total = int(labelings.size)
    frac = Fraction(hit, total)
    return PermutationResult(total, hit, float(frac), (float(frac), float(frac)), None, True, alpha, p_exact=frac)
