"""Numerical verification of eigenvalue-counting bounds for two-dimensional
Schrodinger operators with monotone potentials.

The package evaluates and optimizes the closed-form bound constants,
discretizes the operator families (half-plane Dirichlet, Aharonov-Bohm flux,
antisymmetric restriction, operator-valued half-line), counts negative
eigenvalues exactly at the discrete level through factorization inertia, and
certifies that counted N never exceeds constant * integral.
"""

__version__ = "0.1.0"

from .constants import (
    FluxData,
    SplitParams,
    TheoremId,
    aharonov_bohm,
    antisymmetric,
    eval_R,
    eval_g,
    flux_constants,
    g0_series,
    half_plane,
    operator_calogero,
    optimize_constant,
    theorem_constant,
)
from .potentials import (
    GridPotential1D,
    HalfPlanePotential,
    MatrixPotential,
    RadialPotential,
    integrate,
    make_potential,
    schatten_half_norm,
    validate_monotone,
)
from .spectral import (
    BandedSymmetric,
    Inertia,
    RadialModeOperator,
    TridiagonalOperator,
    build_circle,
    build_halfline,
    build_halfplane,
    build_matrix_halfline,
    build_neumann_well,
    build_radial_mode,
    count_negative,
    eigenvalues_dense,
    lowest_eigenvalue,
    mode_cutoff,
    trace_half_moment,
)
from .bounds import (
    BoundReport,
    Partition,
    birman_schwinger_bound,
    lemma4_bound_check,
    lemma4_partition,
    neumann_well_bounds,
    prop5_cell_count,
    prop5_cell_majorant,
    theorem_bound,
)
