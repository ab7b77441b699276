"""Symbol calculus, curvature derivation and spectral checks for the
conformally perturbed noncommutative 3-torus."""

from .ncalg import (
    SUM_INDEX,
    Coeff,
    CommPoly,
    ModularDeltaError,
    NCPoly,
    apply_delta,
    apply_modular,
    commutative_image,
    nc_mul,
    normal_order,
)

__version__ = "0.1.0"

__all__ = [
    "SUM_INDEX",
    "Coeff",
    "CommPoly",
    "ModularDeltaError",
    "NCPoly",
    "apply_delta",
    "apply_modular",
    "commutative_image",
    "nc_mul",
    "normal_order",
    "__version__",
]
