"""Request and response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

AlphaSpec = Union[float, Literal["min"]]


class Dataset(BaseModel):
    """Genotypes as a markers-by-individuals 0/1 matrix plus one trait."""

    genotypes: list[list[int]] = Field(min_length=1)
    marker_ids: Optional[list[str]] = None
    trait: list[float] = Field(min_length=2)
    trait_kind: Literal["auto", "quantitative", "binary"] = "auto"
    dedup: bool = True

    @model_validator(mode="after")
    def _shapes(self):
        n = len(self.trait)
        for k, row in enumerate(self.genotypes):
            if len(row) != n:
                raise ValueError(f"marker {k} has {len(row)} genotypes, trait has {n} values")
        if self.marker_ids is not None and len(self.marker_ids) != len(self.genotypes):
            raise ValueError("marker_ids length does not match genotypes")
        return self


class EstimateRequest(Dataset):
    alpha: AlphaSpec = "min"
    mode: Literal["general", "hypersphere"] = "general"
    t: Optional[int] = Field(default=None, ge=1)
    samples_per_radius: int = Field(default=1000, ge=1)
    seed: int = 0
    auto_permute: bool = False


class PermuteRequest(Dataset):
    alpha: AlphaSpec = "min"
    max_perms: Optional[int] = Field(default=None, ge=1)
    adaptive: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def _one_mode(self):
        if self.adaptive == (self.max_perms is not None):
            raise ValueError("give exactly one of max_perms or adaptive")
        return self


class CompareRequest(Dataset):
    alpha: AlphaSpec = "min"
    samples_per_radius: int = Field(default=1000, ge=1)
    seed: int = 0


class EffTestsRequest(BaseModel):
    pairs: list[tuple[float, float]]
    fit_lo: float = Field(default=1e-10, gt=0)
    fit_hi: float = Field(default=1e-3, gt=0)


class PermutationOut(BaseModel):
    alpha: Optional[float]
    n_perms: int
    n_exceed: int
    p_hat: float
    ci95: tuple[float, float]
    stopped_at_stage: Optional[int]
    exact: bool
    lower_bound: Optional[float]
    interval: str
    seconds: Optional[float]


class EstimateOut(BaseModel):
    model_config = ConfigDict(extra="allow")

    alpha: float
    numerator: str
    n_p: int
    estimate_raw: float
    estimate: float
    r_l: int
    r_u: int
    mode: str
    flags: list[str]
    seconds: Optional[float]
    diagnostics: dict = {}
    permutation: Optional[PermutationOut] = None


class CompareOut(BaseModel):
    label: str = ""
    estimate: EstimateOut
    permutation: PermutationOut
    ratio: Optional[float]
    log10_diff: Optional[float]


class EffTestsOut(BaseModel):
    eta: float
    kappa: float
    n_points: int
    fit_range: tuple[float, float]
    objective: float
    residuals: list[float]
    effective_tests: dict[str, float]
