"""Permutation p-value estimate from radial probabilities and serial partition counts.

The estimate sums, over shells of desired partitions at distance ``r`` from
their nearest observed profile, the shell size times the probability that a
profile at distance ``r`` from the best partition reaches the cutoff:

    numerator = C(r_L) + sum_{r = r_L+1}^{r_U-1} P(r) * (C(r) - C(r-1))

and divides by the number of desired partitions. Counting needs only the
genotypes and ``t``; the trait enters through the radial profile alone.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

from ._random import STREAM_SDA, substream
from .assoc_stats import PermutationScanner, attains, min_nominal_p
from .ball_counting import CountTable, exact_distance_count, serial_count
from .genomodel import BinaryProfile, GenotypeMatrix, TraitVector
from .partition import DesiredPartition, best_partition, default_t, partition_distance
from .radial_prob import DEFAULT_H, EARLY_EXIT, RadialProfile, estimate_radial

LARGE_P = 0.1
SDA_WARN_ALPHA = 0.05


@dataclass(frozen=True)
class EstimatorConfig:
    t: int | None = None
    odd: str = "floor"
    H: int = DEFAULT_H
    seed: int | None = 0
    early_exit: int = EARLY_EXIT
    mode: str = "general"

    def __post_init__(self) -> None:
        if self.mode not in ("general", "hypersphere"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class EstimateReport:
    alpha: float
    numerator: Fraction
    n_p: int
    estimate_raw: float
    estimate: float
    r_L: int
    r_U: int
    mode: str
    flags: frozenset[str]
    seconds: float
    radial: RadialProfile | None = field(default=None, repr=False)
    counts: CountTable | None = field(default=None, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    def numerator_str(self, digits: int = 30) -> str:
        with localcontext() as ctx:
            ctx.prec = digits
            return str(Decimal(self.numerator.numerator) / Decimal(self.numerator.denominator))

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "alpha": self.alpha,
            "numerator": self.numerator_str(),
            "n_p": self.n_p,
            "estimate_raw": self.estimate_raw,
            "estimate": self.estimate,
            "r_l": self.r_L,
            "r_u": self.r_U,
            "mode": self.mode,
            "flags": sorted(self.flags),
            "seconds": self.seconds if include_timing else None,
            "diagnostics": self.diagnostics,
        }
        return out

    def tsv_row(self, label: str = "") -> str:
        cells = [label, repr(self.alpha), self.numerator_str(12), str(self.n_p), repr(self.estimate_raw),
                 repr(self.estimate), str(self.r_L), str(self.r_U), self.mode, ",".join(sorted(self.flags)),
                 f"{self.seconds:.4f}"]
        return "\t".join(cells)

    TSV_HEADER = "label\talpha\tnumerator\tn_p\testimate_raw\testimate\tr_l\tr_u\tmode\tflags\tseconds"


def _check_inputs(g: GenotypeMatrix, trait: TraitVector, alpha: float | None) -> float:
    if g.p == 0:
        raise ValueError("genotype matrix has no markers")
    if g.n != trait.n:
        raise ValueError(f"genotypes have {g.n} individuals, trait has {trait.n}")
    if np.ptp(trait.values) == 0:
        raise ValueError("trait is constant")
    if alpha is None:
        alpha = min_nominal_p(trait, g).nominal_p
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} must lie strictly between 0 and 1")
    return float(alpha)


def requested_t(trait: TraitVector, config: EstimatorConfig) -> int | None:
    """Group size asked of the best partition; a binary trait brings its own."""
    if config.t is not None:
        return config.t
    return None if trait.kind == "binary" else default_t(trait.n, config.odd)


def _ratio(num: Fraction, den: int) -> float:
    return float(num / den) if den else math.nan


def estimate_permutation_p(
    g: GenotypeMatrix,
    trait: TraitVector,
    alpha: float | None = None,
    config: EstimatorConfig = EstimatorConfig(),
    counts: CountTable | None = None,
) -> EstimateReport:
    """Estimate the genome-wide permutation p-value for cutoff ``alpha``.

    ``alpha=None`` uses the observed minimum nominal p. ``g`` should already be
    deduplicated. A precomputed ``counts`` table for the same genotypes and
    ``t`` is reused when it reaches far enough.
    """
    t0 = time.perf_counter()
    alpha = _check_inputs(g, trait, alpha)
    dp = best_partition(trait, requested_t(trait, config))
    radial = estimate_radial(trait, dp, alpha, config.H, config.seed, config.early_exit)

    r_need = max(0, min(radial.r_U - 1, g.n // 2), radial.r_L)
    if counts is None or counts.t != dp.t or counts.n != g.n or counts.p != g.p or counts.r_max < r_need:
        counts = serial_count(g, dp.t, r_need)

    raw_zero = radial.center_attains

    def C(r: int) -> int:
        return counts.value(r, raw_zero=raw_zero)

    numerator = Fraction(C(radial.r_L))
    if config.mode == "general":
        for r in range(radial.r_L + 1, radial.r_U):
            w = radial.weight(r)
            if w:
                numerator += w * (C(r) - C(r - 1))
    n_p = counts.n_p
    est_raw = _ratio(numerator, n_p)
    estimate = min(max(est_raw, 0.0), 1.0)

    flags = set()
    if est_raw > 1.0:
        flags.add("clamped")
    if estimate > LARGE_P:
        flags.add("large_p_unreliable")
    if radial.r_L == 0 and not radial.center_attains:
        flags.add("extreme_small_alpha")
    if any(p.ones_count in (0, g.n) for p in g.profiles):
        flags.add("degenerate")

    diagnostics = {
        "n": g.n,
        "markers": g.p,
        "t": dp.t,
        "H": config.H,
        "seed": config.seed,
        "test": "chi-square (1 df, no continuity correction)" if trait.kind == "binary"
        else "pooled two-sample t (df = n - 2)",
        "envelope": "running minimum over radius",
        "envelope_adjusted": radial.envelope_adjusted,
        "center_attains": radial.center_attains,
        "c_u_exceeds_n_p": any(C(r) > n_p for r in range(0, r_need + 1)),
        "radial": [[r, radial.p_hat[r], radial.se[r], radial.draws[r]] for r in sorted(radial.p_hat)],
        "c_u": [C(r) for r in range(0, r_need + 1)],
    }
    return EstimateReport(
        alpha, numerator, n_p, est_raw, estimate, radial.r_L, radial.r_U, config.mode,
        frozenset(flags), time.perf_counter() - t0, radial, counts, diagnostics,
    )


def estimate_hypersphere(
    g: GenotypeMatrix,
    trait: TraitVector,
    alpha: float | None = None,
    config: EstimatorConfig = EstimatorConfig(),
    counts: CountTable | None = None,
) -> EstimateReport:
    """Hypersphere variant: count partitions within ``r_L`` of some observed profile."""
    cfg = EstimatorConfig(config.t, config.odd, config.H, config.seed, config.early_exit, "hypersphere")
    return estimate_permutation_p(g, trait, alpha, cfg, counts)


# --------------------------------------------------------------------------
# shortest-distance approximation check


def _plant_partition(g: GenotypeMatrix, t: int, r: int, rng: np.random.Generator) -> DesiredPartition | None:
    """Random partition at distance ``r`` from a random observed profile, or None."""
    n = g.n
    k = int(rng.integers(g.p))
    m = g.profiles[k]
    mats = g.matrix[k].astype(np.int64)
    # distance r to m itself, or to its complement
    options = []
    for base in (mats, 1 - mats):
        s = int(base.sum())
        cnt = exact_distance_count(n, t, s, r)
        options.append((cnt, base, s))
    total = options[0][0] + options[1][0]
    if total == 0:
        return None
    cnt, base, s = options[0] if rng.random() * total < options[0][0] else options[1]
    a = (r - t + s) // 2
    b = r - a
    v = base.copy()
    v[rng.choice(np.flatnonzero(base == 1), a, replace=False)] = 0
    v[rng.choice(np.flatnonzero(base == 0), b, replace=False)] = 1
    dp = DesiredPartition.from_profile(BinaryProfile.from_bits(v.tolist()), t)
    assert partition_distance(m, dp) == r
    return dp


def sda_components(
    g: GenotypeMatrix,
    trait: TraitVector,
    alpha: float,
    r: int,
    n_dp: int = 50,
    n_perm: int = 1000,
    seed: int | None = 0,
    config: EstimatorConfig = EstimatorConfig(),
    radial: RadialProfile | None = None,
    max_tries: int = 200,
) -> tuple[float, float, list[float]]:
    """``(P(r, alpha), rho_bar(r), per-partition probabilities)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    n = g.n
    if not 0 <= r <= n // 2:
        raise ValueError(f"radius {r} outside [0, {n // 2}]")
    if alpha > SDA_WARN_ALPHA:
        warnings.warn(
            f"alpha={alpha:g} is large; the shortest-distance approximation is unreliable there",
            RuntimeWarning,
            stacklevel=2,
        )
    dp_y = best_partition(trait, requested_t(trait, config))
    t = dp_y.t
    if radial is None:
        radial = estimate_radial(trait, dp_y, alpha, config.H, config.seed, config.early_exit)
    p_r = radial.p_hat.get(r, 0.0)

    scanner = PermutationScanner(trait, g)
    base_sorted = np.sort(scanner.base, kind="stable")
    rng = substream(seed, STREAM_SDA, r)
    probs = []
    tries = 0
    while len(probs) < n_dp:
        tries += 1
        if tries > max_tries * n_dp:
            raise ValueError(f"could not plant partitions with nearest-profile distance {r}")
        dp = _plant_partition(g, t, r, rng)
        if dp is None or min(partition_distance(m, dp) for m in g.profiles) != r:
            continue
        ones = np.flatnonzero(dp.representative.to_array() == 1)
        zeros = np.flatnonzero(dp.representative.to_array() == 0)
        Y = np.empty((n_perm, n))
        Y[:, ones] = rng.permuted(np.broadcast_to(base_sorted[:t], (n_perm, t)), axis=1)
        Y[:, zeros] = rng.permuted(np.broadcast_to(base_sorted[t:], (n_perm, n - t)), axis=1)
        probs.append(float(attains(scanner.min_p(Y), alpha).mean()))
    return p_r, float(np.mean(probs)), probs


def evaluate_sda(
    g: GenotypeMatrix,
    trait: TraitVector,
    alpha: float,
    r: int,
    n_dp: int = 50,
    n_perm: int = 1000,
    seed: int | None = 0,
    config: EstimatorConfig = EstimatorConfig(),
    radial: RadialProfile | None = None,
) -> float:
    """Ratio of the radial probability to the mean per-partition probability at ``r``.

    Values near 1 mean the nearest observed profile alone explains whether a
    permutation centered at that distance reaches the cutoff.
    """
    p_r, rho, _ = sda_components(g, trait, alpha, r, n_dp, n_perm, seed, config, radial)
    if rho == 0.0:
        return math.nan if p_r == 0.0 else math.inf
    return p_r / rho
