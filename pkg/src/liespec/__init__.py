"""Spectral inequalities and null controls for elliptic multipliers on compact Lie groups.

Backends are the tori ``T^1``, ``T^2`` and ``SU(2)``.  The modules build on
each other in this order:

``groups``     Fourier analysis, Haar quadrature, observation sets
``symbols``    positive multipliers, complex powers, symbol-class estimates
``spectral``   eigenmode subspaces, observation Gram matrices, doubling ratios
``extension``  cut-off, sinh extension and space-time norm checks
``control``    HUM controls, observability costs, dyadic scheme, cost scans
"""

from .errors import *  # noqa: F401,F403
from .groups import (SU2, DualIndex, FourierCoefficients, ObservationSet, QuadratureGrid,
                     Torus, arc_set, check_bandlimit, empty_set, enumerate_dual,
                     fourier_transform, full_set, geodesic_ball, get_backend, haar_quadrature,
                     inverse_fourier, panel_quadrature, rep_matrix)
from .symbols import (ContourSpec, Sector, SpectralOperator, apply_operator,
                      check_ellipticity, check_parameter_ellipticity, check_symbol_class,
                      compose, contour_power, direct_power, make_operator, matrix_power)
from .spectral import (SpectralSubspace, build_subspace, doubling_ratio, doubling_sweep,
                       fit_spectral_constants, gram_on_set, observability_constant,
                       spectral_constant_sweep)
from .extension import (CutoffSpec, check_cancellation, check_spacetime_bounds,
                        check_symmetry, cutoff_psi, derive_eta_coeffs, h_norm,
                        interpolation_check, sinh_extension)
from .control import (ControlProblem, cost_scan, control_gramian, heat_propagate,
                      hum_control, lr_scheme, observability_cost)
from .config import ExperimentConfig

__version__ = "0.1.0"
