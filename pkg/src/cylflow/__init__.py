"""cylflow: rotationally symmetric mean curvature flow near cylindrical
neckpinches. Solvers, spectral tools, and the diagnostics that quantify how a
flow approaches and passes through a nondegenerate singularity."""

from .cylinder import CylinderParams, chi_eval, make_cylinder, odist
from .flow import RadialProfile, StepperConfig, mcf_step, rmcf_step
from .spectral import enumerate_spectrum, hermite_eval, sphere_mode_eigenvalue

__all__ = [
    "CylinderParams",
    "make_cylinder",
    "chi_eval",
    "odist",
    "RadialProfile",
    "StepperConfig",
    "rmcf_step",
    "mcf_step",
    "enumerate_spectrum",
    "hermite_eval",
    "sphere_mode_eigenvalue",
]
