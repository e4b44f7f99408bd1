"""Numerical toolkit for Toeplitz-type operators on weighted Fock spaces."""

from .core import (CoeffVec, FockModel, TrustRadiusWarning, check_submeanvalue, kernel, make_model,
                   normalized_kernel, p_norm, tilde_kernel, weighted_basis, weighted_kernel)
from .operators import (OpMatrix, berezin, carleson_norm, kernel_correlation, op_norm, toeplitz_function,
                        toeplitz_indicator_ball, toeplitz_measure, toeplitz_poly, trace_pairing)
from .quadrature import QuadSpec
from .symbols import DiscreteMeasure, GridSymbol, Symbol, SymbolPoly, constant, gaussian, indicator_ball
from .weights import (InvalidParameterError, MomentTable, QuadratureError, Weight, check_phi_condition,
                      make_weight)

__version__ = "0.1.0"
