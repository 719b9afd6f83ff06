"""Truncated WZW transfer operators, correlators and matrix product state extraction."""

from .affine_module import TruncModule, TruncationError, build_module, mode_action
from .bounds import KAPPA, ErrorBudget, bond_dimension, character_truncated, error_budget, polylog_bound
from .full_cft import CPMap, FullInsertion, FullRequest, FullSpace, fcs_assemble, fcs_evaluate, full_correlator
from .intertwiner import FusionForbidden, Intertwiner, NoInvariant, build_intertwiner, solve_g_intertwiner
from .lie_core import LieError, LieSpec, central_charge, conformal_weight, irrep, lie_algebra
from .transfer import (
    ChannelError,
    CorrRequest,
    DomainError,
    Geometry,
    Insertion,
    genus0_correlator,
    genus1_correlator,
    mps_extract,
    scaled_truncated,
)

__all__ = [
    "CPMap",
    "ChannelError",
    "CorrRequest",
    "DomainError",
    "ErrorBudget",
    "FullInsertion",
    "FullRequest",
    "FullSpace",
    "FusionForbidden",
    "Geometry",
    "Insertion",
    "Intertwiner",
    "KAPPA",
    "LieError",
    "LieSpec",
    "NoInvariant",
    "TruncModule",
    "TruncationError",
    "bond_dimension",
    "build_intertwiner",
    "build_module",
    "central_charge",
    "character_truncated",
    "conformal_weight",
    "error_budget",
    "fcs_assemble",
    "fcs_evaluate",
    "full_correlator",
    "genus0_correlator",
    "genus1_correlator",
    "irrep",
    "lie_algebra",
    "mode_action",
    "mps_extract",
    "polylog_bound",
    "scaled_truncated",
    "solve_g_intertwiner",
]
