import json
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import binary_trait, matrix
from geoperm.ball_counting import serial_count
from geoperm.estimator import (
    EstimateReport,
    EstimatorConfig,
    estimate_hypersphere,
    estimate_permutation_p,
    evaluate_sda,
    sda_components,
)
from geoperm.genomodel import GenotypeMatrix, TraitVector, deduplicate_profiles
from geoperm.perm_oracle import exhaustive_binary
from geoperm.simgen import SimConfig, simulate_genotypes, simulate_trait


@pytest.fixture(scope="module")
def chain60():
    cfg = SimConfig(n=60, p=200, theta=0.05, chromosomes=4, seed=2)
    g0 = simulate_genotypes(cfg)
    g, _ = deduplicate_profiles(g0)
    return g0, g, serial_count(g, 30)


def test_single_marker_n4_one_third():
    g = matrix([[0, 0, 1, 1]])
    tr = binary_trait([0, 0, 1, 1])
    for fn in (estimate_permutation_p, estimate_hypersphere):
        rep = fn(g, tr)
        assert rep.numerator == 1 and rep.n_p == 3
        assert rep.estimate == pytest.approx(1 / 3)
    assert exhaustive_binary(g, tr).p_exact == Fraction(1, 3)


def test_report_fields_and_json():
    rep = estimate_permutation_p(matrix([[0, 0, 1, 1]]), binary_trait([0, 0, 1, 1]))
    d = rep.to_dict()
    for key in ("alpha", "numerator", "n_p", "estimate_raw", "estimate", "r_l", "r_u", "mode", "flags", "seconds"):
        assert key in d
    json.dumps(d)
    assert d["numerator"] == "1"
    assert "large_p_unreliable" in d["flags"]
    assert rep.tsv_row("x").count("\t") == EstimateReport.TSV_HEADER.count("\t")


def test_errors():
    g = matrix([[0, 0, 1, 1]])
    with pytest.raises(ValueError):
        estimate_permutation_p(g, TraitVector([1.0, 1.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        estimate_permutation_p(g, binary_trait([0, 0, 1, 1]), alpha=1.0)
    with pytest.raises(ValueError):
        estimate_permutation_p(g, binary_trait([0, 0, 1, 1, 1]))


def test_extreme_small_alpha_flag(chain60):
    g0, g, ct = chain60
    tr = simulate_trait(g0, SimConfig(n=60, p=200, seed=2), replicate=1)
    rep = estimate_permutation_p(g, tr, 1e-30, counts=ct)
    assert rep.estimate == 0.0
    assert "extreme_small_alpha" in rep.flags


def test_degenerate_flag():
    g = matrix([[0, 0, 1, 1, 0, 1], [1, 1, 1, 1, 1, 1]])
    rep = estimate_permutation_p(g, binary_trait([0, 0, 1, 1, 0, 1]))
    assert "degenerate" in rep.flags


def test_clamped_flag():
    # over-counting neighbors far apart pushes the raw estimate above 1
    rng = np.random.default_rng(0)
    rows = rng.integers(0, 2, (60, 12))
    g, _ = deduplicate_profiles(matrix(rows))
    tr = binary_trait([0, 1] * 6)
    rep = estimate_permutation_p(g, tr, alpha=0.9)
    assert rep.estimate_raw > 1
    assert "clamped" in rep.flags and rep.estimate == 1.0


def test_counts_depend_only_on_genotypes(chain60):
    g0, g, ct = chain60
    tr = simulate_trait(g0, SimConfig(n=60, p=200, seed=2, qtl_index=50, qtl_effect=1.0), replicate=3)
    a = estimate_permutation_p(g, tr)
    b = estimate_permutation_p(g, tr, counts=ct)
    assert a.numerator == b.numerator
    assert a.counts.c_u == ct.c_u[: len(a.counts.c_u)]


def test_hypersphere_equals_general_on_step():
    # balanced binary trait at an alpha where the radial profile is a sharp 0/1 step
    g0 = simulate_genotypes(SimConfig(n=40, p=60, theta=0.1, seed=4))
    g, _ = deduplicate_profiles(g0)
    tr = simulate_trait(g0, SimConfig(n=40, p=60, seed=4, trait="binary"))
    for alpha in (1e-2, 1e-3, 1e-4):
        gen = estimate_permutation_p(g, tr, alpha)
        if all(v in (0.0, 1.0) for v in gen.radial.p_hat.values()):
            hyp = estimate_hypersphere(g, tr, alpha)
            assert gen.numerator == hyp.numerator


def test_hypersphere_not_above_general(chain60):
    g0, g, ct = chain60
    for rep in range(4):
        tr = simulate_trait(g0, SimConfig(n=60, p=200, seed=2, qtl_index=20 + rep, qtl_effect=1.0), replicate=rep)
        gen = estimate_permutation_p(g, tr, counts=ct)
        hyp = estimate_hypersphere(g, tr, counts=ct)
        assert hyp.numerator <= gen.numerator


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_monotone_in_alpha(rep):
    g0 = simulate_genotypes(SimConfig(n=30, p=60, theta=0.08, seed=7))
    g, _ = deduplicate_profiles(g0)
    tr = simulate_trait(g0, SimConfig(n=30, p=60, seed=7), replicate=rep)
    ct = serial_count(g, 15)
    cfg = EstimatorConfig(H=300, seed=rep)
    ests = [estimate_permutation_p(g, tr, a, cfg, ct).estimate for a in (1e-5, 1e-4, 1e-3, 1e-2)]
    assert ests == sorted(ests)


def test_order_perturbation_inflates(chain60):
    g0, g, ct = chain60
    rng = np.random.default_rng(17)
    tr = simulate_trait(g0, SimConfig(n=60, p=200, seed=2, qtl_index=70, qtl_effect=1.0), replicate=9)
    base = estimate_permutation_p(g, tr, counts=ct)
    shuffled = g.subset(rng.permutation(g.p).tolist())
    assert estimate_permutation_p(shuffled, tr).estimate > base.estimate


def test_deterministic(chain60):
    g0, g, ct = chain60
    tr = simulate_trait(g0, SimConfig(n=60, p=200, seed=2, qtl_index=5, qtl_effect=1.0), replicate=0)
    a = estimate_permutation_p(g, tr, config=EstimatorConfig(seed=11), counts=ct).to_dict(include_timing=False)
    b = estimate_permutation_p(g, tr, config=EstimatorConfig(seed=11), counts=ct).to_dict(include_timing=False)
    assert json.dumps(a) == json.dumps(b)


def test_sda_binary_step_ratio_near_one():
    g0 = simulate_genotypes(SimConfig(n=40, p=60, theta=0.1, seed=4))
    g, _ = deduplicate_profiles(g0)
    tr = simulate_trait(g0, SimConfig(n=40, p=60, seed=4, trait="binary"))
    alpha = 1e-3
    rep = estimate_permutation_p(g, tr, alpha)
    r = max(1, rep.r_L)
    p_r, rho, _ = sda_components(g, tr, alpha, r, n_dp=20, n_perm=10, seed=1, radial=rep.radial)
    assert p_r == 1.0
    assert rho == pytest.approx(1.0, abs=0.1)


def test_sda_quantitative_ratio_range(chain60):
    g0, g, ct = chain60
    tr = simulate_trait(g0, SimConfig(n=60, p=200, seed=2, qtl_index=90, qtl_effect=1.2), replicate=4)
    alpha = 2e-4
    rep = estimate_permutation_p(g, tr, alpha, counts=ct)
    mids = [r for r, v in rep.radial.p_hat.items() if 0.2 < v < 0.8]
    assert mids
    ratio = evaluate_sda(g, tr, alpha, mids[0], n_dp=30, n_perm=400, seed=3, radial=rep.radial)
    assert 0.5 < ratio <= 1.2


def test_sda_warns_for_large_alpha():
    g0 = simulate_genotypes(SimConfig(n=20, p=20, theta=0.1, seed=1))
    g, _ = deduplicate_profiles(g0)
    tr = simulate_trait(g0, SimConfig(n=20, p=20, seed=1))
    with pytest.warns(RuntimeWarning):
        evaluate_sda(g, tr, 0.1, 1, n_dp=3, n_perm=20)
    with pytest.raises(ValueError):
        evaluate_sda(g, tr, 0.01, 11)
