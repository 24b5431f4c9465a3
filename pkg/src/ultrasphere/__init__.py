"""Spherical harmonics on S^{n-1}, weight sequences and spherical means.

Modules
-------
weight_seq   weight sequences, their conditions and associated functions
sphharm      real orthonormal solid harmonics, zonal kernels, rotations
quadrature   certified product quadrature, coefficient tables, transforms
regularity   coefficient-decay norms and regularity classification
polar_rep    radial coefficient profiles, membership test, factorization
rotmean      spherical means, rotation invariance, zonal moments
"""

from .errors import (
    CertificationError,
    ConsistencyError,
    InvalidArgumentError,
    NumericalInstabilityError,
    OutOfRangeError,
    UltrasphereError,
)
from .polar_rep import (
    ProfileSet,
    RadialCoeffProfile,
    check_V_membership,
    default_grid,
    pullback_profiles,
    radial_factorize,
    reconstruct,
)
from .quadrature import CoeffTable, SphereQuadrature, analyze, build_quadrature, synthesize
from .regularity import DecayProfile, classify, decay_profile, dual_norm, sh_norm
from .rotmean import (
    PointMassFunctional,
    invariance_test,
    moment_functional_test,
    spherical_mean_coeffs,
    spherical_mean_haar,
    spherical_mean_surface,
)
from .sphharm import (
    HarmonicBasis,
    Rotation,
    build_basis,
    eval_solid,
    harmonic_dimension,
    random_rotation,
    zonal,
)
from .weight_seq import (
    AssociatedFunction,
    WeightSequence,
    associated_function,
    build_gevrey,
    check_conditions,
    derived_root_sequence,
)

__version__ = "0.1.0"
