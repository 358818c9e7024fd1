"""Fermionic circuit simulation by truncated Majorana-monomial back-propagation."""

from .algebra import (
    MajoranaMonomial,
    SignedMonomial,
    commutes,
    hermitian_phase_exponent,
    length,
    multiply_hermitian,
    overlap,
)
from .expectation import FockState, expectation, fock_trace, is_paired
from .opsum import OperatorSum, fermionic_to_majorana
from .propagation import (
    Circuit,
    Gate,
    TruncationPolicy,
    apply_gate_adjoint,
    propagate,
    random_unstructured_circuit,
)

__all__ = [
    "MajoranaMonomial",
    "SignedMonomial",
    "commutes",
    "hermitian_phase_exponent",
    "length",
    "multiply_hermitian",
    "overlap",
    "FockState",
    "expectation",
    "fock_trace",
    "is_paired",
    "OperatorSum",
    "fermionic_to_majorana",
    "Circuit",
    "Gate",
    "TruncationPolicy",
    "apply_gate_adjoint",
    "propagate",
    "random_unstructured_circuit",
]

__version__ = "0.1.0"
