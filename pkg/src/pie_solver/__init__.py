"""
Solvability analysis and numerical solution of partial integral equations.

The library side is re-exported here; the command line lives in
pie_solver.pie_solver_app.
"""

from pie_solver.errors import PieError
from pie_solver.expr import parse
from pie_solver.kernel import builtin_kernel, kernel_from_expression, rhs_from_expression
from pie_solver.pie import classify, detect_eigenvalues, determinant_profile, solve
from pie_solver.quadrature import Domain, gauss_legendre

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "PieError",
    "builtin_kernel",
    "classify",
    "detect_eigenvalues",
    "determinant_profile",
    "gauss_legendre",
    "kernel_from_expression",
    "parse",
    "rhs_from_expression",
    "solve",
]
