"""Deformed heat kernels and radially weighted Brownian motion on R^N.

The deformation replaces the Laplacian generator by (1/a)|x|^(2-a) Lap
acting against the measure dy/|y|^(2-a).  The package evaluates the
associated Fourier-type and heat kernels in closed form (through a
Bessel-Gegenbauer series kernel with two independent evaluation routes),
integrates against the weighted measure, samples the induced diffusion
exactly, and ships a verification suite for every closed-form identity.
"""

from .errors import (ConvergenceError, DomainError, PoleError, SamplerError,
                     SeriesCapError)
from .ikernel import (IKernelArgs, IKernelResult, growth_scan, ikernel,
                      ikernel_contour, ikernel_grid, ikernel_series,
                      itilde_stable)
from .kernels import (DeformParams, KernelEval, PolarPoint, ZonalHarmonic,
                      eigenfunction, eigenvalue, fourier_kernel, heat_kernel,
                      heat_kernel_grid, heat_kernel_spectral, lambda_am,
                      laguerre_semigroup_kernel, moment_flow_f, moment_poly_p,
                      poly_flow, radial_kernel, weber_integral_check)
from .heatflow import (FlowRequest, QuadratureRule, ScalarField, build_rule,
                       composition_check, constant_field, heat_equation_residual,
                       heat_flow, initial_condition_check, max_principle_scan,
                       monomial_field, radial_field, weighted_integral,
                       zonal_field)
from .brownian import (AngularTables, KernelGrid, PathSample,
                       chapman_kolmogorov_mc, continuity_moment_mc,
                       feynman_kac_estimate, make_rng, moment_check_mc,
                       sample_increment, sample_path, semigroup_property_mc,
                       simulate_endpoints, write_paths_csv)
from . import specfun

__version__ = "0.1.0"
