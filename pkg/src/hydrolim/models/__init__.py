"""Model families, environments, specifications and monotonicity checks."""

from .environment import DisorderSpec, Environment, check_overtaking_rates
from .families import (
    KStepExclusion,
    KStepMisanthrope,
    Misanthrope,
    Overtaking,
    PathType,
    TransformationFamily,
    absorbed_walk_paths,
    all_configurations,
    kstep_exclusion_apply,
    kstep_misanthrope_apply,
    misanthrope_apply,
    move_particle,
    overtaking_apply,
)
from .kernels import JumpKernel, k_exclusion_rates, linear_misanthrope_rates, validate_rate_table
from .monotone import MonotonicityCertificate, check_monotone
from .spec import ModelSpec, build_family, sample_environment
from . import zoo

__all__ = [
    "DisorderSpec",
    "Environment",
    "JumpKernel",
    "KStepExclusion",
    "KStepMisanthrope",
    "Misanthrope",
    "ModelSpec",
    "MonotonicityCertificate",
    "Overtaking",
    "PathType",
    "TransformationFamily",
    "absorbed_walk_paths",
    "all_configurations",
    "build_family",
    "check_monotone",
    "check_overtaking_rates",
    "k_exclusion_rates",
    "kstep_exclusion_apply",
    "kstep_misanthrope_apply",
    "linear_misanthrope_rates",
    "misanthrope_apply",
    "move_particle",
    "overtaking_apply",
    "sample_environment",
    "validate_rate_table",
    "zoo",
]
