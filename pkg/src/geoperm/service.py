"""Shared pipeline plus a small FastAPI app around it.

:class:`Engine` turns requests into reports and keeps recent count tables,
keyed by a hash of the deduplicated genotypes and ``t``. Counting depends only
on the genotypes, so many traits scanned against one genotype panel (eQTL
style) pay for it once.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import OrderedDict

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__
from .ball_counting import CountTable, serial_count
from .efftests import fit_effective_tests
from .estimator import EstimatorConfig, estimate_permutation_p, requested_t
from .genomodel import FormatError, GenotypeMatrix, TraitVector, deduplicate_profiles
from .partition import best_partition
from .perm_oracle import adaptive_permutation_p, direct_permutation_p
from .schemas import (
    CompareOut,
    CompareRequest,
    Dataset,
    EffTestsOut,
    EffTestsRequest,
    EstimateOut,
    EstimateRequest,
    PermutationOut,
    PermuteRequest,
)

logger = logging.getLogger(__name__)


def _alpha(value) -> float | None:
    return None if value == "min" else float(value)


def dataset_arrays(ds: Dataset) -> tuple[GenotypeMatrix, TraitVector]:
    mat = np.asarray(ds.genotypes)
    if not np.isin(mat, (0, 1)).all():
        raise FormatError("genotypes must be 0 or 1")
    g = GenotypeMatrix.from_array(mat.astype(np.uint8), ds.marker_ids or ())
    vals = np.asarray(ds.trait, dtype=float)
    trait = TraitVector.infer(vals) if ds.trait_kind == "auto" else TraitVector(vals, ds.trait_kind)
    if ds.dedup:
        g, _ = deduplicate_profiles(g)
    return g, trait


def genotype_key(g: GenotypeMatrix) -> str:
    h = hashlib.sha256()
    h.update(np.asarray([g.n, g.p], dtype=np.int64).tobytes())
    h.update(np.packbits(g.matrix, axis=1).tobytes())
    return h.hexdigest()


class Engine:
    """Runs estimates, permutations and fits; caches count tables."""

    def __init__(self, cache_size: int = 16):
        self.cache_size = cache_size
        self._counts: OrderedDict[tuple[str, int], CountTable] = OrderedDict()

    def _cached(self, g: GenotypeMatrix, t: int) -> CountTable | None:
        key = (genotype_key(g), t)
        if key in self._counts:
            self._counts.move_to_end(key)
            return self._counts[key]
        return None

    def _store(self, g: GenotypeMatrix, table: CountTable) -> None:
        key = (genotype_key(g), table.t)
        old = self._counts.get(key)
        if old is None or old.r_max < table.r_max:
            self._counts[key] = table
        self._counts.move_to_end(key)
        while len(self._counts) > self.cache_size:
            self._counts.popitem(last=False)

    def estimate_arrays(
        self,
        g: GenotypeMatrix,
        trait: TraitVector,
        alpha: float | None = None,
        mode: str = "general",
        t: int | None = None,
        samples_per_radius: int = 1000,
        seed: int = 0,
        auto_permute: bool = False,
    ) -> dict:
        cfg = EstimatorConfig(t=t, H=samples_per_radius, seed=seed, mode=mode)
        t_eff = best_partition(trait, requested_t(trait, cfg)).t
        counts = self._cached(g, t_eff)
        if counts is None:
            # all radii up front so later traits on the same panel reuse it
            counts = serial_count(g, t_eff)
            self._store(g, counts)
        report = estimate_permutation_p(g, trait, alpha, cfg, counts=counts)
        out = report.to_dict()
        if auto_permute and "large_p_unreliable" in report.flags:
            out["permutation"] = adaptive_permutation_p(g, trait, seed=seed, alpha=report.alpha).to_dict()
        return out

    def permute_arrays(
        self,
        g: GenotypeMatrix,
        trait: TraitVector,
        alpha: float | None = None,
        max_perms: int | None = None,
        adaptive: bool = False,
        seed: int = 0,
    ) -> dict:
        if adaptive:
            return adaptive_permutation_p(g, trait, seed=seed, alpha=alpha).to_dict()
        if max_perms is None:
            raise ValueError("give max_perms or adaptive")
        return direct_permutation_p(g, trait, alpha, max_perms, seed).to_dict()

    def compare_arrays(
        self,
        g: GenotypeMatrix,
        trait: TraitVector,
        alpha: float | None = None,
        samples_per_radius: int = 1000,
        seed: int = 0,
        label: str = "",
    ) -> dict:
        est = self.estimate_arrays(g, trait, alpha, samples_per_radius=samples_per_radius, seed=seed)
        perm = adaptive_permutation_p(g, trait, seed=seed, alpha=est["alpha"]).to_dict()
        ratio = log_diff = None
        if perm["p_hat"] > 0:
            ratio = est["estimate"] / perm["p_hat"]
            if est["estimate"] > 0:
                log_diff = math.log10(est["estimate"]) - math.log10(perm["p_hat"])
        return {"label": label, "estimate": est, "permutation": perm, "ratio": ratio, "log10_diff": log_diff}

    # request-level wrappers used by the HTTP layer and the thin client

    def estimate(self, req: EstimateRequest) -> EstimateOut:
        g, trait = dataset_arrays(req)
        out = self.estimate_arrays(g, trait, _alpha(req.alpha), req.mode, req.t, req.samples_per_radius,
                                   req.seed, req.auto_permute)
        return EstimateOut(**out)

    def permute(self, req: PermuteRequest) -> PermutationOut:
        g, trait = dataset_arrays(req)
        return PermutationOut(**self.permute_arrays(g, trait, _alpha(req.alpha), req.max_perms, req.adaptive, req.seed))

    def compare(self, req: CompareRequest) -> CompareOut:
        g, trait = dataset_arrays(req)
        return CompareOut(**self.compare_arrays(g, trait, _alpha(req.alpha), req.samples_per_radius, req.seed))

    def efftests(self, req: EffTestsRequest) -> EffTestsOut:
        return EffTestsOut(**efftests_dict(req.pairs, req.fit_lo, req.fit_hi))


def efftests_dict(pairs, fit_lo: float, fit_hi: float) -> dict:
    fit = fit_effective_tests(pairs, fit_lo, fit_hi)
    out = fit.to_dict()
    out["effective_tests"] = {f"{p:g}": float(fit.effective_tests(p)) for p in (1e-3, 1e-6)}
    return out


def create_app(engine: Engine | None = None) -> FastAPI:
    engine = engine or Engine()
    app = FastAPI(title="geoperm", version=__version__)

    def guarded(fn, req):
        try:
            return fn(req)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "cached_count_tables": len(engine._counts)}

    @app.post("/v1/estimate", response_model=EstimateOut)
    def estimate(req: EstimateRequest):
        return guarded(engine.estimate, req)

    @app.post("/v1/permute", response_model=PermutationOut)
    def permute(req: PermuteRequest):
        return guarded(engine.permute, req)

    @app.post("/v1/compare", response_model=CompareOut)
    def compare(req: CompareRequest):
        return guarded(engine.compare, req)

    @app.post("/v1/efftests", response_model=EffTestsOut)
    def efftests(req: EffTestsRequest):
        return guarded(engine.efftests, req)

    return app
