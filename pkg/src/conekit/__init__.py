"""Orthogonal polynomials, localized kernels, cubature, needlets and
approximation on the conic surface and the solid cone."""
import os as _os

# CONEKIT_THREADS caps the BLAS/OpenMP pools; it must be set before numpy loads
_threads = _os.environ.get("CONEKIT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .specfun import CutoffKind, CutoffSpec, gauss_jacobi, jacobi_eval, zonal_eval  # noqa: E402
from .geometry import (Domain, WeightSpec, build_separated_set, cap_measure_formula,  # noqa: E402
                       cap_measure_quad, dist, reference_quadrature)
from .basis import Basis, Expansion, MomentOperator, basis_eval  # noqa: E402
from .kernels import (KernelConfig, christoffel, decay_report, localized_kernel,  # noqa: E402
                      reprod_kernel)
from .cubature import Infeasible, solve_positive_cubature, verify_exactness  # noqa: E402
from .frames import analyze, build_frame, parseval_check, synthesize  # noqa: E402
from .approx import (best_approx_error, convolve, k_functional_upper, modulus,  # noqa: E402
                     near_best)

__version__ = "0.1.0"
