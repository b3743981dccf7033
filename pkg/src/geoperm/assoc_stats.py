"""Single-marker association tests: pooled two-sample t-test and 2x2 chi-square.

Besides the per-marker API there are vectorized scans over many profiles or
many permuted traits. Within one scan every marker test has the same null
distribution (t with n-2 df, or chi-square with 1 df), so the smallest p-value
is found by maximizing the statistic and converting once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .genomodel import BinaryProfile, DimensionError, GenotypeMatrix, TraitVector

# Relative slack used whenever a p-value is compared to a cutoff, so a profile
# whose p-value *is* the cutoff is not lost to floating-point noise.
ALPHA_RTOL = 1e-9


# r^2 this close to 1 leaves only rounding in the residual SS; treated as p = 0
R2_SINGULAR = 1.0 - 1e-13


def attains(pvals, alpha: float):
    """Elementwise ``p <= alpha`` with a small relative tolerance."""
    return np.asarray(pvals) <= alpha * (1.0 + ALPHA_RTOL)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    statistic: float
    nominal_p: float
    marker_index: int = -1
    flags: frozenset[str] = field(default_factory=frozenset)

    @property
    def degenerate(self) -> bool:
        return "degenerate" in self.flags


def t_pvalue_from_t2(t2, df: int):
    """Two-sided p-value of a t statistic given its square.

    Uses the regularized incomplete beta form, which keeps relative accuracy
    deep into the tail.
    """
    t2 = np.asarray(t2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(np.isinf(t2), 0.0, df / (df + t2))
    return special.betainc(0.5 * df, 0.5, x)


def t_pvalue_from_r2(r2, df: int):
    """Same p-value expressed through the squared point-biserial correlation.

    ``t^2 = df * r2 / (1 - r2)``, so ``df / (df + t^2) = 1 - r2``.
    """
    x = np.clip(1.0 - np.asarray(r2, dtype=float), 0.0, 1.0)
    return special.betainc(0.5 * df, 0.5, x)


def chi2_1df_pvalue(stat):
    return special.erfc(np.sqrt(np.maximum(np.asarray(stat, dtype=float), 0.0) / 2.0))


def _split(trait: TraitVector, profile: BinaryProfile) -> tuple[np.ndarray, np.ndarray]:
    if profile.n != trait.n:
        raise DimensionError(f"profile has {profile.n} individuals, trait has {trait.n}")
    mask = profile.to_array().astype(bool)
    return trait.values[~mask], trait.values[mask]


def t_test(trait: TraitVector, profile: BinaryProfile, marker_index: int = -1) -> TestResult:
    """Pooled-variance two-sided two-sample t-test (df = n - 2)."""
    y0, y1 = _split(trait, profile)
    n = trait.n
    if y0.size == 0 or y1.size == 0:
        return TestResult(0.0, 1.0, marker_index, frozenset({"degenerate"}))
    m0, m1 = y0.mean(), y1.mean()
    ssw = float(((y0 - m0) ** 2).sum() + ((y1 - m1) ** 2).sum())
    diff = m1 - m0
    scale = max(abs(m0), abs(m1), float(np.abs(trait.values).max()), 1.0)
    if ssw <= (1e-12 * scale) ** 2 * n:
        if abs(diff) <= 1e-12 * scale:
            return TestResult(0.0, 1.0, marker_index, frozenset({"degenerate"}))
        return TestResult(float(np.copysign(np.inf, diff)), 0.0, marker_index, frozenset({"singular"}))
    df = n - 2
    se = np.sqrt(ssw / df * (1.0 / y0.size + 1.0 / y1.size))
    t = diff / se
    return TestResult(float(t), float(t_pvalue_from_t2(t * t, df)), marker_index)


def chisq_test(trait: TraitVector, profile: BinaryProfile, marker_index: int = -1) -> TestResult:
    """Pearson chi-square on the 2x2 table, 1 df, no continuity correction."""
    if profile.n != trait.n:
        raise DimensionError(f"profile has {profile.n} individuals, trait has {trait.n}")
    y = trait.values
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("chi-square test needs a 0/1 trait")
    g = profile.to_array().astype(np.int64)
    n = trait.n
    t1 = int(y.sum())
    k = int(g.sum())
    if t1 in (0, n) or k in (0, n):
        return TestResult(0.0, 1.0, marker_index, frozenset({"degenerate"}))
    a = int(g @ y.astype(np.int64))
    # a*d - b*c simplifies to a*n - k*t1 for the 2x2 table
    num = n * (a * n - k * t1) ** 2
    den = k * (n - k) * t1 * (n - t1)
    stat = num / den
    return TestResult(float(stat), float(chi2_1df_pvalue(stat)), marker_index)


def marker_test(trait: TraitVector, profile: BinaryProfile, marker_index: int = -1) -> TestResult:
    if trait.kind == "binary":
        return chisq_test(trait, profile, marker_index)
    return t_test(trait, profile, marker_index)


# --------------------------------------------------------------------------
# vectorized scans


def _as_float_matrix(mat) -> np.ndarray:
    mat = np.asarray(mat)
    if mat.ndim == 1:
        mat = mat[None, :]
    return mat.astype(np.float64, copy=False)


def quantitative_r2(yc: np.ndarray, sst: float, G: np.ndarray, n1: np.ndarray) -> np.ndarray:
    """Squared correlation between centered trait(s) and 0/1 profiles.

    ``yc`` is ``(B, n)`` (or ``(n,)``), ``G`` is ``(p, n)``; result ``(B, p)``.
    Constant profiles give 0.
    """
    n = G.shape[1]
    s1 = np.atleast_2d(yc) @ G.T
    n0 = n - n1
    with np.errstate(divide="ignore", invalid="ignore"):
        ssb = s1 * s1 * (n / (n1 * n0))
    ssb = np.where((n1 > 0) & (n0 > 0), ssb, 0.0)
    if sst <= 0:
        return np.zeros_like(ssb)
    return np.clip(ssb / sst, 0.0, 1.0)


def binary_chi2(y01: np.ndarray, G: np.ndarray, k: np.ndarray, t1: int) -> np.ndarray:
    """Chi-square statistics for 0/1 trait row(s) against 0/1 profiles."""
    n = G.shape[1]
    a = np.atleast_2d(y01) @ G.T
    den = k * (n - k) * float(t1 * (n - t1))
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = n * (a * n - k * t1) ** 2 / den
    return np.where(den > 0, stat, 0.0)


def pvalues(trait: TraitVector, profiles) -> np.ndarray:
    """Nominal p-value of every row of a 0/1 profile matrix against ``trait``."""
    if isinstance(profiles, GenotypeMatrix):
        profiles = profiles.matrix
    G = _as_float_matrix(profiles)
    if G.shape[1] != trait.n:
        raise DimensionError(f"profiles have {G.shape[1]} individuals, trait has {trait.n}")
    n1 = G.sum(axis=1)
    y = trait.values
    if trait.kind == "binary":
        stat = binary_chi2(y, G, n1, int(y.sum()))[0]
        return chi2_1df_pvalue(stat)
    yc = y - y.mean()
    r2 = quantitative_r2(yc, float(yc @ yc), G, n1)[0]
    p = t_pvalue_from_r2(r2, trait.n - 2)
    return np.where(r2 >= R2_SINGULAR, 0.0, p)


class PermutationScanner:
    """Minimum nominal p-value over a fixed genotype matrix for batches of traits.

    Every batch row must be a rearrangement of the same trait values (a
    permutation or a relabelling), which keeps the total sum of squares and
    class sizes fixed.
    """

    def __init__(self, trait: TraitVector, g: GenotypeMatrix | np.ndarray):
        mat = g.matrix if isinstance(g, GenotypeMatrix) else np.asarray(g)
        self.G = _as_float_matrix(mat)
        self.n = self.G.shape[1]
        if self.n != trait.n:
            raise DimensionError(f"genotypes have {self.n} individuals, trait has {trait.n}")
        self.kind = trait.kind
        self.n1 = self.G.sum(axis=1)
        y = trait.values
        if self.kind == "binary":
            self.t1 = int(y.sum())
            self.base = y.astype(np.float64)
        else:
            self.base = y - y.mean()
            self.sst = float(self.base @ self.base)

    def max_stat(self, Y: np.ndarray) -> np.ndarray:
        if self.kind == "binary":
            return binary_chi2(Y, self.G, self.n1, self.t1).max(axis=1)
        return quantitative_r2(Y, self.sst, self.G, self.n1).max(axis=1)

    def stat_to_p(self, stat) -> np.ndarray:
        stat = np.asarray(stat, dtype=float)
        if self.kind == "binary":
            return chi2_1df_pvalue(stat)
        p = t_pvalue_from_r2(stat, self.n - 2)
        return np.where(stat >= R2_SINGULAR, 0.0, p)

    def min_p(self, Y: np.ndarray) -> np.ndarray:
        """Row-wise genome-wide minimum p-value for a ``(B, n)`` batch.

        For quantitative traits rows must already be centered (use
        :attr:`base` as the source vector).
        """
        return self.stat_to_p(self.max_stat(Y))


def min_nominal_p(trait: TraitVector, g: GenotypeMatrix) -> TestResult:
    """Smallest nominal p-value over all markers; ties go to the lowest index."""
    if g.p == 0:
        raise ValueError("genotype matrix has no markers")
    if g.n != trait.n:
        raise DimensionError(f"genotypes have {g.n} individuals, trait has {trait.n}")
    p = pvalues(trait, g.matrix)
    idx = int(np.argmin(p))
    res = marker_test(trait, g.profiles[idx], idx)
    if p[idx] >= 1.0:
        return TestResult(res.statistic, 1.0, idx, frozenset({"degenerate"}))
    return res
