"""Hitting- and return-time statistics for ergodic dynamical systems.

The package computes, transforms and cross-validates distribution functions
of normalized hitting and return times: exact rational arithmetic on finite
rotations, exact fixed-point orbit simulation for circle rotations and the
doubling map, continued-fraction renormalization data, and the integral
transform linking return-time laws to hitting-time laws.
"""

from .cfrac import (
    GOLDEN,
    CFAlpha,
    CFState,
    CircleArc,
    NaturalExtensionPoint,
    expand,
    gauss_map,
    natural_extension,
    parse_alpha,
    renormalization_interval,
)
from .distfn import (
    ClassReport,
    LimitLaw,
    PLConcaveFn,
    StepFn,
    derivative_convergence_check,
    forward_transform,
    inverse_transform,
    make_law,
    pl_eval,
    read_pl_csv,
    read_step_csv,
    step_eval,
    sup_distance,
    validate_hitting_class,
    validate_return_class,
    write_function_csv,
)
from .dynsys import (
    ArcSet,
    CircleRotation,
    DoublingMap,
    DyadicCell,
    FiniteRotation,
    PrecisionExhausted,
    ResidueSet,
    contains,
    iterate_to,
    parse_system,
    parse_target,
    sample_points,
    step,
)
from .hitstat import (
    EmpiricalLaws,
    HittingSample,
    IdentityReport,
    ReturnDecomposition,
    SamplingError,
    collect_hitting_sample,
    decompose_exact,
    decomposition_laws,
    direct_return_sample,
    empirical_distributions,
    hitting_time,
    verify_decomposition_identities,
)

__version__ = "0.1.0"
