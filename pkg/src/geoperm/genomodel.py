"""Binary genotype profiles, traits, TSV ingestion and deduplication.

A profile is stored as a Python integer bitmask (bit ``i`` is individual ``i``),
so Manhattan distance between two profiles is a single XOR plus popcount.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "na", "nan", ".", "-", "?", "null", "none"})
_META_HEADER_NAMES = frozenset(
    {"marker", "marker_id", "id", "snp", "chrom", "chromosome", "chr", "pos", "position", "coordinate"}
)


class DimensionError(ValueError):
    """Raised when sample counts disagree between profiles or files."""


class FormatError(ValueError):
    """Raised for malformed genotype or trait input."""


class MissingDataError(FormatError):
    """Raised when input carries missing values (impute before analysis)."""


@dataclass(frozen=True)
class BinaryProfile:
    """One marker's genotypes across ``n`` individuals, bit-packed."""

    value: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionError("profile length must be positive")
        if self.value < 0 or self.value >> self.n:
            raise FormatError("bitmask has bits outside the profile length")

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BinaryProfile":
        bits = list(bits)
        value = 0
        for i, b in enumerate(bits):
            b = int(b)
            if b not in (0, 1):
                raise FormatError(f"genotype value {b!r} is not binary")
            value |= b << i
        return cls(value, len(bits))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.value >> i) & 1 for i in range(self.n))

    @property
    def ones_count(self) -> int:
        return self.value.bit_count()

    def complement(self) -> "BinaryProfile":
        return BinaryProfile(self.value ^ ((1 << self.n) - 1), self.n)

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"BinaryProfile({''.join(map(str, self.bits))})"


def as_profile(x: BinaryProfile | Sequence[int] | np.ndarray) -> BinaryProfile:
    if isinstance(x, BinaryProfile):
        return x
    return BinaryProfile.from_bits(np.asarray(x).ravel().tolist())


def manhattan_distance(a: BinaryProfile, b: BinaryProfile) -> int:
    """Number of individuals whose genotypes differ."""
    if a.n != b.n:
        raise DimensionError(f"profile lengths differ: {a.n} vs {b.n}")
    return (a.value ^ b.value).bit_count()


def profiles_to_matrix(profiles: Sequence[BinaryProfile]) -> np.ndarray:
    """Stack profiles into a ``(len(profiles), n)`` uint8 matrix."""
    if not profiles:
        return np.zeros((0, 0), dtype=np.uint8)
    n = profiles[0].n
    nbytes = (n + 7) // 8
    raw = np.frombuffer(
        b"".join(p.value.to_bytes(nbytes, "little") for p in profiles), dtype=np.uint8
    ).reshape(len(profiles), nbytes)
    return np.unpackbits(raw, axis=1, count=n, bitorder="little")


def matrix_to_profiles(mat: np.ndarray) -> list[BinaryProfile]:
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise DimensionError("expected a 2-d genotype matrix")
    if mat.size and not np.isin(mat, (0, 1)).all():
        raise FormatError("genotype matrix must contain only 0/1")
    n = mat.shape[1]
    packed = np.packbits(mat.astype(np.uint8), axis=1, bitorder="little")
    return [BinaryProfile(int.from_bytes(row.tobytes(), "little"), n) for row in packed]


@dataclass(frozen=True, eq=False)
class GenotypeMatrix:
    """Ordered marker profiles; order encodes chromosomal adjacency."""

    profiles: tuple[BinaryProfile, ...]
    marker_ids: tuple[str, ...] = ()
    positions: tuple[tuple[str, float], ...] | None = None
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        profiles = tuple(self.profiles)
        object.__setattr__(self, "profiles", profiles)
        if profiles:
            n = profiles[0].n
            if any(p.n != n for p in profiles):
                raise DimensionError("all profiles must share the same sample count")
        ids = tuple(self.marker_ids) or tuple(f"m{i + 1}" for i in range(len(profiles)))
        if len(ids) != len(profiles):
            raise DimensionError("marker_ids length does not match number of profiles")
        object.__setattr__(self, "marker_ids", ids)
        if self.positions is not None:
            pos = tuple((str(c), float(x)) for c, x in self.positions)
            if len(pos) != len(profiles):
                raise DimensionError("positions length does not match number of profiles")
            object.__setattr__(self, "positions", pos)

    @classmethod
    def from_array(cls, mat, marker_ids=(), positions=None) -> "GenotypeMatrix":
        return cls(tuple(matrix_to_profiles(mat)), tuple(marker_ids), positions)

    @property
    def n(self) -> int:
        return self.profiles[0].n if self.profiles else 0

    @property
    def p(self) -> int:
        return len(self.profiles)

    @property
    def matrix(self) -> np.ndarray:
        """Read-only ``(p, n)`` uint8 view, built once."""
        if self._matrix is None:
            mat = profiles_to_matrix(self.profiles)
            mat.setflags(write=False)
            object.__setattr__(self, "_matrix", mat)
        return self._matrix

    def subset(self, indices: Sequence[int]) -> "GenotypeMatrix":
        pos = None if self.positions is None else tuple(self.positions[i] for i in indices)
        return GenotypeMatrix(
            tuple(self.profiles[i] for i in indices),
            tuple(self.marker_ids[i] for i in indices),
            pos,
        )

    def __len__(self) -> int:
        return self.p


@dataclass(frozen=True, eq=False)
class TraitVector:
    values: np.ndarray
    kind: str = "quantitative"

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size == 0:
            raise DimensionError("trait is empty")
        if not np.isfinite(vals).all():
            raise MissingDataError("trait has missing or non-finite values; impute before analysis")
        if self.kind not in ("quantitative", "binary"):
            raise ValueError(f"unknown trait kind {self.kind!r}")
        if self.kind == "binary" and not np.isin(vals, (0.0, 1.0)).all():
            raise FormatError("binary trait values must be 0 or 1")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def infer(cls, values) -> "TraitVector":
        vals = np.asarray(values, dtype=float)
        kind = "binary" if np.isin(vals, (0.0, 1.0)).all() else "quantitative"
        return cls(vals, kind)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.n


def _is_missing(tok: str) -> bool:
    return tok.strip().lower() in MISSING_TOKENS


def read_genotype_tsv(path: str | Path) -> tuple[GenotypeMatrix, list[str]]:
    """Parse a genotype TSV, returning the matrix and individual IDs."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter="\t") if r and not r[0].startswith("#")]
    if not rows:
        raise FormatError(f"{path}: empty genotype file")
    header = rows[0]
    while header and header[0].strip().lower() in _META_HEADER_NAMES:
        header = header[1:]
    sample_ids = [h.strip() for h in header]
    n = len(sample_ids)
    if n == 0:
        raise FormatError(f"{path}: header has no individual IDs")

    profiles, ids, positions = [], [], []
    any_pos = False
    for lineno, row in enumerate(rows[1:], start=2):
        extra = len(row) - n
        if extra not in (1, 2, 3):
            raise DimensionError(
                f"{path}:{lineno}: expected {n} genotype cells plus 1-3 metadata columns, got {len(row)} fields"
            )
        meta, cells = row[:extra], row[extra:]
        value = 0
        for i, tok in enumerate(cells):
            if _is_missing(tok):
                raise MissingDataError(
                    f"{path}:{lineno}: missing genotype for individual {sample_ids[i]}; "
                    "impute missing genotypes before analysis"
                )
            tok = tok.strip()
            if tok not in ("0", "1"):
                raise FormatError(f"{path}:{lineno}: genotype value {tok!r} is not 0 or 1")
            if tok == "1":
                value |= 1 << i
        profiles.append(BinaryProfile(value, n))
        ids.append(meta[0].strip())
        chrom = meta[1].strip() if extra >= 2 else ""
        coord = float(meta[2]) if extra == 3 else float("nan")
        any_pos = any_pos or extra >= 2
        positions.append((chrom, coord))
    if not profiles:
        raise FormatError(f"{path}: no marker rows")
    return GenotypeMatrix(tuple(profiles), tuple(ids), tuple(positions) if any_pos else None), sample_ids


def read_trait_tsv(path: str | Path, kind: str = "auto") -> tuple[TraitVector, list[str]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter="\t") if r and not r[0].startswith("#")]
    ids, vals = [], []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise FormatError(f"{path}:{lineno}: expected 2 columns (id, value), got {len(row)}")
        sid, tok = row[0].strip(), row[1].strip()
        if _is_missing(tok):
            raise MissingDataError(f"{path}:{lineno}: missing trait value for {sid}; impute before analysis")
        try:
            v = float(tok)
        except ValueError:
            if lineno == 1:
                continue  # header
            raise FormatError(f"{path}:{lineno}: trait value {tok!r} is not numeric") from None
        ids.append(sid)
        vals.append(v)
    if kind == "auto":
        return TraitVector.infer(vals), ids
    return TraitVector(np.array(vals), kind), ids


def load_dataset(
    genotype_source: str | Path,
    trait_source: str | Path,
    trait_kind: str = "auto",
    check_ids: bool = True,
) -> tuple[GenotypeMatrix, TraitVector]:
    """Load a genotype TSV and a matching trait TSV."""
    g, sample_ids = read_genotype_tsv(genotype_source)
    trait, trait_ids = read_trait_tsv(trait_source, trait_kind)
    if trait.n != g.n:
        raise DimensionError(f"trait has {trait.n} values but genotypes have {g.n} individuals")
    if check_ids and trait_ids != sample_ids:
        raise FormatError("trait individual IDs do not match genotype header order")
    return g, trait


def iter_trait_matrix(path: str | Path, kind: str = "auto", sample_ids: Sequence[str] | None = None):
    """Yield ``(trait_id, TraitVector)`` per row of a traits-by-individuals TSV.

    The first line is a header (any first cell, then individual IDs). Rows are
    read lazily so a file with thousands of traits never sits in memory.
    """
    with open(path, newline="") as fh:
        reader = csv.reader((ln for ln in fh if ln.strip() and not ln.startswith("#")), delimiter="\t")
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}: empty trait matrix")
        ids = [h.strip() for h in header[1:]]
        if sample_ids is not None and ids != list(sample_ids):
            raise FormatError(f"{path}: individual IDs do not match genotype header order")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(ids) + 1:
                raise FormatError(f"{path}:{lineno}: expected {len(ids) + 1} columns, got {len(row)}")
            toks = [c.strip() for c in row[1:]]
            if any(_is_missing(tok) for tok in toks):
                raise MissingDataError(f"{path}:{lineno}: missing values in trait {row[0]}; impute before analysis")
            try:
                vals = [float(tok) for tok in toks]
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric trait value") from None
            yield row[0].strip(), (TraitVector.infer(vals) if kind == "auto" else TraitVector(np.array(vals), kind))


def write_genotype_tsv(path: str | Path, g: GenotypeMatrix, sample_ids: Sequence[str] | None = None) -> None:
    sample_ids = list(sample_ids or (f"ind{i + 1}" for i in range(g.n)))
    mat = g.matrix
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        meta = ["marker_id"] + (["chrom", "pos"] if g.positions is not None else [])
        w.writerow(meta + sample_ids)
        for k in range(g.p):
            row = [g.marker_ids[k]]
            if g.positions is not None:
                chrom, pos = g.positions[k]
                row += [chrom, f"{pos:g}"]
            w.writerow(row + [str(int(x)) for x in mat[k]])


def write_trait_tsv(path: str | Path, trait: TraitVector, sample_ids: Sequence[str] | None = None) -> None:
    sample_ids = list(sample_ids or (f"ind{i + 1}" for i in range(trait.n)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for sid, v in zip(sample_ids, trait.values):
            w.writerow([sid, repr(float(v)) if trait.kind == "quantitative" else str(int(v))])


def deduplicate_profiles(
    g: GenotypeMatrix, max_gap: float | None = None
) -> tuple[GenotypeMatrix, dict[int, int]]:
    """Collapse exact-duplicate profiles, keeping first occurrences in order.

    A profile and its complement are distinct and both kept. With ``max_gap``
    set, a duplicate is merged only if it lies on the same chromosome within
    ``max_gap`` coordinate units of the kept copy.

    Returns the reduced matrix and a map from original index to the index of
    the kept profile in the reduced matrix.
    """
    if max_gap is not None and g.positions is None:
        raise FormatError("distance-gated merging needs marker positions")
    kept: list[int] = []
    seen: dict[int, list[int]] = {}
    mapping: dict[int, int] = {}
    for i, prof in enumerate(g.profiles):
        target = None
        for j in seen.get(prof.value, ()):
            if max_gap is None:
                target = j
                break
            (ci, xi), (cj, xj) = g.positions[i], g.positions[kept[j]]
            if ci == cj and abs(xi - xj) < max_gap:
                target = j
                break
        if target is None:
            target = len(kept)
            kept.append(i)
            seen.setdefault(prof.value, []).append(target)
        mapping[i] = target
    if len(kept) < g.p:
        logger.info("collapsed %d duplicate profiles (%d -> %d)", g.p - len(kept), g.p, len(kept))
    return g.subset(kept), mapping
