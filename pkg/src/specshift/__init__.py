"""Numerical laboratory for spectral shift functions of explicit
rank-one and rank-two perturbations of a multiplication-plus-level
operator with Gaussian channel vector.

The package computes the total spectral shift through branch-tracked
coupling determinants, splits it into absolutely continuous and
singular parts through the coupling-average of boundary densities,
checks the scattering-determinant identities, and validates the totals
against independent finite-dimensional discretizations.
"""

from .specfun import GaussianWeight, dawson, faddeeva, gaussian_borel
from .model import (
    BaseOperator,
    FiniteRankPerturbation,
    OperatorPair,
    PoleError,
    diagonal_pair,
    make_diag_pert,
    make_v_a,
    operator_identity_check,
    rank_one_pair,
    rank_two_pair_reversed,
    reduced_matrix,
    resolvent_gram,
)
from .krein import (
    BoundarySample,
    BranchTrackingError,
    CouplingPath,
    pert_det,
    ssf_total,
    ssf_total_epsilon_route,
)
from .decomp import (
    PpAbsenceReport,
    ScReport,
    SingularityFloorError,
    SsfTable,
    StepFunctionRef,
    ac_spectral_density,
    build_ssf_table,
    check_birman_krein,
    det_s,
    integer_residual,
    pp_absence_evidence,
    sc_report,
    ssf_ac,
    ssf_singular,
    sum_rule,
)
from .oracle import (
    DiscretizedPair,
    SmoothingKernel,
    averaged_ssf,
    commutant_dimension,
    counting_ssf,
    eigen_flow,
    hermite_discretize,
    krylov_dimension,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
