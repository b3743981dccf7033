"""Genome-wide permutation p-values from the geometry of genotype profiles.

The permutation p-value of a single-marker scan is estimated as the share of
two-group splits of the sample lying close enough to some observed marker
profile, weighted by a Monte Carlo radial significance probability.
"""

__version__ = "0.1.0"

from .assoc_stats import TestResult, chisq_test, min_nominal_p, t_test
from .ball_counting import (
    CountTable,
    ball_count,
    brute_force_count,
    exact_distance_count,
    pair_intersection_count,
    serial_count,
)
from .efftests import EffTestsFit, fit_effective_tests
from .estimator import EstimateReport, EstimatorConfig, estimate_hypersphere, estimate_permutation_p, evaluate_sda
from .genomodel import (
    BinaryProfile,
    GenotypeMatrix,
    TraitVector,
    deduplicate_profiles,
    load_dataset,
    manhattan_distance,
)
from .partition import DesiredPartition, best_partition, num_desired_partitions, partition_distance
from .perm_oracle import PermutationResult, adaptive_permutation_p, direct_permutation_p, exhaustive_binary
from .radial_prob import RadialProfile, estimate_radial, radial_symmetry_check
from .simgen import SimConfig, simulate_genotypes, simulate_trait

__all__ = [
    "BinaryProfile",
    "CountTable",
    "DesiredPartition",
    "EffTestsFit",
    "EstimateReport",
    "EstimatorConfig",
    "GenotypeMatrix",
    "PermutationResult",
    "RadialProfile",
    "SimConfig",
    "TestResult",
    "TraitVector",
    "adaptive_permutation_p",
    "ball_count",
    "best_partition",
    "brute_force_count",
    "chisq_test",
    "deduplicate_profiles",
    "direct_permutation_p",
    "estimate_hypersphere",
    "estimate_permutation_p",
    "estimate_radial",
    "evaluate_sda",
    "exact_distance_count",
    "exhaustive_binary",
    "fit_effective_tests",
    "load_dataset",
    "manhattan_distance",
    "min_nominal_p",
    "num_desired_partitions",
    "pair_intersection_count",
    "partition_distance",
    "radial_symmetry_check",
    "serial_count",
    "simulate_genotypes",
    "simulate_trait",
    "t_test",
]
