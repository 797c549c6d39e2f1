"""Discrete magnetic induction tomography: forward model, transfer operator,
Loewner-order monotonicity checks and non-iterative shape reconstruction."""

__version__ = "0.1.0"

from .constants import MU0, SIGN_CONVENTION
from .errors import DomainError, MitError, NumericError, ValidationError
from .geometry import (
    CellSet,
    CoilSet,
    GridSpec,
    ResistivityMap,
    Scenario,
    build_grid,
    cover_with_test_elements,
    make_inclusion_map,
)
from .assembly import (
    OperatorMatrices,
    assemble_coupling,
    assemble_inductance,
    assemble_loop_basis,
    assemble_operators,
    assemble_resistance,
)
from .spectral import ModalBasis, ValidityDomain, check_coercive, solve_modes, validity_domain
from .transfer import TransferMatrix, transfer_direct, transfer_modal

__all__ = [
    "MU0",
    "SIGN_CONVENTION",
    "MitError",
    "ValidationError",
    "DomainError",
    "NumericError",
    "GridSpec",
    "ResistivityMap",
    "CoilSet",
    "CellSet",
    "Scenario",
    "build_grid",
    "make_inclusion_map",
    "cover_with_test_elements",
    "OperatorMatrices",
    "assemble_loop_basis",
    "assemble_resistance",
    "assemble_inductance",
    "assemble_coupling",
    "assemble_operators",
    "ModalBasis",
    "ValidityDomain",
    "solve_modes",
    "validity_domain",
    "check_coercive",
    "TransferMatrix",
    "transfer_direct",
    "transfer_modal",
]
