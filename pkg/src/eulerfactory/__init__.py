"""Euler factors of rank-4 Calabi-Yau motives from their Picard-Fuchs operators."""

from .congruence import DecompositionType, factor_mod_l, scan_congruences
from .euler import (BadEulerFactor, EulerFactor, FactorStore, batch_compute, euler_factor_at,
                    lift_coefficients, load_bad_factors, load_factor_table)
from .frobenius import FrobeniusBasis, build_E, solve_frobenius
from .lfunction import (LFunctionSpec, PrecisionCurve, check_feq, dirichlet_coefficients, gamma_kernel,
                        precision_curve, search_sign_conductor)
from .matching import ParamodularRecord, ingest_database, match
from .operator import CalabiYauOperator, Discriminant, discriminant, load_operator, parse_operator
from .padic import PadicContext, TruncatedSeries, teichmueller, zeta_p3
from .umatrix import RationalUMatrix, UMatrixSeries, calibrate_x, rational_umatrix, reconstruct_x

__version__ = "0.1.0"
