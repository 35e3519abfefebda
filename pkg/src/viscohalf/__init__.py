"""Frequency-domain Green tensors of a fractional-Zener viscoelastic half-space."""
from .config import JobConfig, load_config, parse_config, serialize
from .correction import correction_displacement, correction_field, correction_stress
from .errors import (BranchDegenerate, CoincidentPoints, DecayViolation, DegenerateBasis,
                     GreenError, MaterialError, ModeDegenerate, NearSurfaceLimit, NoConvergence,
                     ParseError, SingularSystem, SurfaceSource, ValidationError)
from .fullspace import (WEYL_CONSTANT, fullspace_displacement, fullspace_stress,
                        spectral_fullspace_traction, traction)
from .green import (GreenResult, ResidualReport, VerificationConfig, green_displacement,
                    green_field, green_traction, pde_residual, reciprocity_residual,
                    traction_free_residual)
from .jobs import run_job
from .material import FrequencyContext, Material, frequency_context, vertical_wavenumber, zener_factor
from .quadrature import (IntegralResult, QuadratureConfig, calibrate_weyl_constant,
                         inverse_fourier_2d, weyl_phi)
from .spectral import (ScanGrid, ScanReport, assemble_N, boundary_system, delta_closed,
                       eigenbasis, hypothesis_scan, solve_coefficients, spectral_point)

__version__ = "0.1.0"
