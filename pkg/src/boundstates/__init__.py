"""Bound states of -d^2/dx^2 +/- V on the line.

Eigenvalue counting and solving by oscillation theory, certified W' + Q
interval decompositions, inverse Lieb-Thirring diagnostics, a trace-formula
check, and construction of sparse potentials with prescribed spectra.
"""

from .potentials import (
    DipoleBump,
    GridFunction,
    Interval,
    Negated,
    Potential,
    Sampled,
    Scaled,
    SparseSum,
    SquareBump,
    Zero,
    interval_norm,
    negate,
    pc_profile_on,
    potential_from_json,
    potential_to_json,
    rescale,
    sample,
)
from .odes import (
    PruferState,
    ShootingSolution,
    SolutionTrace,
    TransferMatrix,
    dirac_evolve_Z,
    integrate_schrodinger,
    prufer_evolve,
    riccati_log_derivative,
    transfer_matrix,
    zero_count,
)
from .eigen import (
    DIRICHLET,
    NEUMANN,
    BoundaryCondition,
    EigenEntry,
    EigenvalueList,
    count_below,
    eigenfunction,
    jacobi_identity_residual,
    lowest_eigenvalue,
    merged_spectrum,
    moment_sum,
    negative_spectrum,
    sup_norm,
    truncation_radius,
)
from .decompose import (
    Certificate,
    CertificateError,
    Decomposition,
    DecompositionError,
    Domain,
    HypothesisError,
    IntervalLabel,
    boundary_method,
    decomposition_from_json,
    decomposition_to_json,
    find_localized_interval,
    half_line_dirichlet,
    half_line_neumann,
    match_W,
    reconstruction_residual,
    run_decomposition,
    verify_decomposition,
    whole_line,
    wq_on_interval,
)
from .inequalities import (
    correction_potential,
    ilt_check_a,
    ilt_check_b,
    length_moment_diag,
    positivity_check,
)
from .sparse import (
    bump_eigenvalue,
    invert_bump,
    place_bumps,
    verify_sparse,
)
from .scattering import (
    RiccatiPotential,
    angle_increment_scan,
    maximal_function,
    plane_wave_coefficients,
    profile_reflection,
    reflection_coefficient,
    riccati_potential,
    trace_formula_residual,
)

__version__ = "0.1.0"

__all__ = [
    "DipoleBump", "GridFunction", "Interval", "Negated", "Potential",
    "Sampled", "Scaled", "SparseSum", "SquareBump", "Zero", "interval_norm",
    "negate", "pc_profile_on", "potential_from_json", "potential_to_json",
    "rescale", "sample",
    "PruferState", "ShootingSolution", "SolutionTrace", "TransferMatrix",
    "dirac_evolve_Z", "integrate_schrodinger", "prufer_evolve",
    "riccati_log_derivative", "transfer_matrix", "zero_count",
    "DIRICHLET", "NEUMANN", "BoundaryCondition", "EigenEntry",
    "EigenvalueList", "count_below", "eigenfunction",
    "jacobi_identity_residual", "lowest_eigenvalue", "merged_spectrum",
    "moment_sum", "negative_spectrum", "sup_norm", "truncation_radius",
    "Certificate", "CertificateError", "Decomposition", "DecompositionError",
    "Domain", "HypothesisError", "IntervalLabel", "boundary_method",
    "decomposition_from_json", "decomposition_to_json",
    "find_localized_interval", "half_line_dirichlet", "half_line_neumann",
    "match_W", "reconstruction_residual", "run_decomposition",
    "verify_decomposition", "whole_line", "wq_on_interval",
    "correction_potential", "ilt_check_a", "ilt_check_b",
    "length_moment_diag", "positivity_check",
    "bump_eigenvalue", "invert_bump", "place_bumps", "verify_sparse",
    "RiccatiPotential", "angle_increment_scan", "maximal_function",
    "plane_wave_coefficients", "profile_reflection",
    "reflection_coefficient", "riccati_potential", "trace_formula_residual",
    "__version__",
]
