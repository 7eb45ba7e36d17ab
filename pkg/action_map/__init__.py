"""
Action-mapping package for the race-driving toolkit
"""

from .boundary import (
    BISECTION_TOL,
    DESK_COUNTS,
    FULL_COUNTS,
    GridSpec,
    max_safe_length,
    max_safe_length_array,
    rho_square,
    sample_boundary,
    steady_state_array,
    steady_state_for,
)
from .table import (
    CONSERVATIVE_MARGIN,
    BoundaryTable,
    boundary_slice,
    build_table,
    from_polar,
    load_table,
    lookup,
    map_action,
    parse_table,
    save_table,
    symmetry_residual,
    table_stats,
    to_polar,
)

__all__ = [
    'BISECTION_TOL',
    'DESK_COUNTS',
    'FULL_COUNTS',
    'GridSpec',
    'max_safe_length',
    'max_safe_length_array',
    'rho_square',
    'sample_boundary',
    'steady_state_array',
    'steady_state_for',
    'CONSERVATIVE_MARGIN',
    'BoundaryTable',
    'boundary_slice',
    'build_table',
    'from_polar',
    'load_table',
    'lookup',
    'map_action',
    'parse_table',
    'save_table',
    'symmetry_residual',
    'table_stats',
    'to_polar',
]
