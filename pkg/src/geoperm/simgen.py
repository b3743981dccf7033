"""Synthetic linkage-style genotypes (Markov chain along each chromosome) and traits."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ._random import substream
from .genomodel import GenotypeMatrix, TraitVector


@dataclass(frozen=True)
class SimConfig:
    n: int = 60
    p: int = 300
    theta: float = 0.05
    chromosomes: int = 1
    qtl_index: int | None = None
    qtl_effect: float = 0.0
    qtl_noise: float = 1.0
    seed: int = 0
    trait: str = "quantitative"
    binary_marker: int | None = None
    mismatches: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= 0.5:
            raise ValueError(f"theta={self.theta} outside [0, 0.5]")
        if self.n < 2 or self.p < 1:
            raise ValueError("need n >= 2 and p >= 1")
        if not 1 <= self.chromosomes <= self.p:
            raise ValueError("chromosomes must be between 1 and p")
        for name in ("qtl_index", "binary_marker"):
            idx = getattr(self, name)
            if idx is not None and not 0 <= idx < self.p:
                raise ValueError(f"{name}={idx} outside [0, {self.p})")
        if self.trait not in ("quantitative", "binary"):
            raise ValueError("trait must be 'quantitative' or 'binary'")
        if self.qtl_noise < 0:
            raise ValueError("qtl_noise must be nonnegative")

    @property
    def qtl(self) -> tuple[int, float, float] | None:
        if self.qtl_index is None:
            return None
        return self.qtl_index, self.qtl_effect, self.qtl_noise

    @classmethod
    def from_text(cls, text: str) -> "SimConfig":
        """Parse flat ``key = value`` lines (``#`` starts a comment)."""
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            if val.lower() in ("none", ""):
                kw[key] = None
            elif "int" in str(types[key]):
                kw[key] = int(val)
            elif "float" in str(types[key]):
                kw[key] = float(val)
            else:
                kw[key] = val
        return cls(**kw)

    @classmethod
    def from_file(cls, path: str | Path) -> "SimConfig":
        return cls.from_text(Path(path).read_text())


def _chromosome_sizes(p: int, k: int) -> list[int]:
    return [len(a) for a in np.array_split(np.arange(p), k)]


def simulate_genotypes(cfg: SimConfig) -> GenotypeMatrix:
    """Per chromosome, each individual starts at a fair coin and flips with prob ``theta`` per step."""
    rng = substream(cfg.seed, 0)
    blocks, ids, positions = [], [], []
    for c, size in enumerate(_chromosome_sizes(cfg.p, cfg.chromosomes), start=1):
        steps = (rng.random((size, cfg.n)) < cfg.theta).astype(np.uint8)
        steps[0] = rng.integers(0, 2, cfg.n, dtype=np.uint8)
        blocks.append(np.bitwise_xor.accumulate(steps, axis=0))
        ids += [f"c{c}_m{k + 1}" for k in range(size)]
        positions += [(str(c), float(k)) for k in range(size)]
    return GenotypeMatrix.from_array(np.vstack(blocks), ids, positions)


def balanced_labels(n: int, rng: np.random.Generator, start: np.ndarray | None = None) -> np.ndarray:
    """0/1 labels with ``floor(n/2)`` ones, flipping as few entries of ``start`` as possible."""
    target = n // 2
    if start is None:
        y = np.zeros(n, dtype=np.int64)
        y[rng.choice(n, target, replace=False)] = 1
        return y
    y = np.asarray(start, dtype=np.int64).copy()
    ones = int(y.sum())
    if ones > target:
        y[rng.choice(np.flatnonzero(y == 1), ones - target, replace=False)] = 0
    elif ones < target:
        y[rng.choice(np.flatnonzero(y == 0), target - ones, replace=False)] = 1
    return y


def simulate_trait(g: GenotypeMatrix, cfg: SimConfig, replicate: int = 0) -> TraitVector:
    """Null, single-QTL, or balanced binary trait per ``cfg``.

    ``replicate`` selects an independent draw under the same seed.
    """
    rng = substream(cfg.seed, 1, replicate)
    n = g.n
    if cfg.trait == "binary":
        if cfg.binary_marker is None:
            y = balanced_labels(n, rng)
        else:
            y = balanced_labels(n, rng, g.matrix[cfg.binary_marker])
            k = cfg.mismatches
            if k:
                ones, zeros = np.flatnonzero(y == 1), np.flatnonzero(y == 0)
                if k > min(ones.size, zeros.size):
                    raise ValueError("too many mismatches for this sample size")
                a = rng.choice(ones, k, replace=False)
                b = rng.choice(zeros, k, replace=False)
                y[a], y[b] = 0, 1
        return TraitVector(y.astype(float), "binary")
    if cfg.qtl_index is None:
        return TraitVector(rng.standard_normal(n))
    geno = g.matrix[cfg.qtl_index].astype(float)
    return TraitVector(cfg.qtl_effect * geno + rng.normal(0.0, cfg.qtl_noise, n))
