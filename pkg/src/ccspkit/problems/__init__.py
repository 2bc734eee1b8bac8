"""Problem generators paired with reference fixed points or LP oracles."""

from .chebyshev import (Polytope, chebyshev_lp, chebyshev_problem, inscribed_radius,
                        random_polytope, triangle, unit_square)
from .filters import (FilterDesignSpec, band_grid, cosine_basis, filter_lp, frequency_response,
                      impulse_response, lowpass_spec, max_weighted_deviation,
                      minimax_filter_problem)
from .generators import (OMEGA, dissipative_affine_problem, exp_operator, exp_problem,
                         fixed_point_by_iteration, passive_source_problem, scalar_affine_problem,
                         scaled_problem)
from .instance import CLOSED_FORM, EXTERNAL_ORACLE, HIGH_PRECISION_SYNC, ProblemInstance
from .lp import AffineProjector, LinearProgram, LpReference, lp_operator, lp_reference
from .orthogonal import nearest_orthogonal, random_orthogonal, random_orthogonal_bounded
from .registry import (MAPS, PROBLEMS, load_instance, make_map, make_problem, parse_params,
                       save_instance)

__all__ = [
    "Polytope", "chebyshev_lp", "chebyshev_problem", "inscribed_radius", "random_polytope",
    "triangle", "unit_square", "FilterDesignSpec", "band_grid", "cosine_basis", "filter_lp",
    "frequency_response", "impulse_response", "lowpass_spec", "max_weighted_deviation",
    "minimax_filter_problem", "OMEGA", "dissipative_affine_problem", "exp_operator",
    "exp_problem", "fixed_point_by_iteration", "passive_source_problem",
    "scalar_affine_problem", "scaled_problem", "CLOSED_FORM", "EXTERNAL_ORACLE",
    "HIGH_PRECISION_SYNC", "ProblemInstance", "AffineProjector", "LinearProgram",
    "LpReference", "lp_operator", "lp_reference", "nearest_orthogonal", "random_orthogonal",
    "random_orthogonal_bounded", "MAPS", "PROBLEMS", "load_instance", "make_map",
    "make_problem", "parse_params", "save_instance",
]
