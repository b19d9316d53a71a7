"""Pseudo-spectral laboratory for stationary fractional Navier-Stokes flows.

The package solves the stationary momentum balance with a fractional
dissipation operator on a periodic box via a regularized fixed-point scheme,
and provides the norm computations and localization diagnostics needed to
check the scheme's energy estimates, boundary-term decay, pressure
integrability, and regularity-gain arithmetic as numerical invariants.
"""

__version__ = "0.1.0"

from .spectral import (  # noqa: F401
    Grid,
    PhysicalField,
    SpectralField,
    advective_term,
    dealias,
    divergence,
    fractional_laplacian,
    gradient,
    leray_project,
    regularized_inverse,
    spectral_inner,
    transform_forward,
    transform_inverse,
)
from .norms import lebesgue_norm, sobolev_norm  # noqa: F401
from .forcing import ForcingSpec, build_forcing  # noqa: F401
