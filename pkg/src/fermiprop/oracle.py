"""Brute-force dense reference on the full 2^N Fock space.

Everything here is for verification at desk scale: Majorana operators as
dense matrices, circuit states via statevector evolution, exact expectation
values and low-lying eigensystems.  The Fock basis is ordered by occupation
bitstrings with mode 1 as the most significant position, and annihilation
carries the standard ordered-product sign a_j|n> = (-1)^(n_1+..+n_{j-1}) ...
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .algebra import MajoranaMonomial, hermitian_phase_exponent
from .errors import NumericContractError, ResourceCeilingError
from .expectation import FockState
from .opsum import OperatorSum
from .propagation import Circuit

DEFAULT_CEILING = 12
HARD_CEILING = 14  # memory guard: dense work above this is refused outright

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_ID2 = np.eye(2, dtype=complex)


def _check_ceiling(modes: int, ceiling: int) -> None:
    limit = min(ceiling, HARD_CEILING)
    if modes > limit:
        raise ResourceCeilingError(
            f"dense oracle refused: {modes} modes exceeds ceiling {limit}"
        )


def majorana_matrix(index: int, modes: int, ceiling: int = DEFAULT_CEILING) -> np.ndarray:
    """Dense matrix of m_index (1-based) in the Fock basis."""
    _check_ceiling(modes, ceiling)
    if not 1 <= index <= 2 * modes:
        raise ValueError(f"Majorana index {index} outside 1..{2 * modes}")
    mode = (index + 1) // 2  # 1-based mode
    local = _PAULI_X if index % 2 else _PAULI_Y
    out = np.array([[1.0 + 0j]])
    for j in range(1, modes + 1):
        if j < mode:
            factor = _PAULI_Z
        elif j == mode:
            factor = local
        else:
            factor = _ID2
        out = np.kron(out, factor)
    return out


def monomial_matrix(m: MajoranaMonomial, ceiling: int = DEFAULT_CEILING) -> np.ndarray:
    """Dense matrix of the canonical Hermitian monomial."""
    _check_ceiling(m.modes, ceiling)
    dim = 1 << m.modes
    out = np.eye(dim, dtype=complex)
    for idx in m.indices:
        out = out @ majorana_matrix(idx, m.modes, ceiling)
    r = hermitian_phase_exponent(m.length)
    if r:
        out = 1j * out
    return out


def dense_operator(opsum: OperatorSum, ceiling: int = DEFAULT_CEILING) -> np.ndarray:
    """Dense matrix of an operator sum."""
    _check_ceiling(opsum.modes, ceiling)
    dim = 1 << opsum.modes
    out = np.zeros((dim, dim), dtype=complex)
    for mono, c in opsum:
        out += c * monomial_matrix(mono, ceiling)
    return out


def gate_matrix(
    generator: MajoranaMonomial, theta: float, ceiling: int = DEFAULT_CEILING
) -> np.ndarray:
    """exp(-i theta M / 2), exact since M^2 = I."""
    mat = monomial_matrix(generator, ceiling)
    dim = mat.shape[0]
    return np.cos(theta / 2) * np.eye(dim, dtype=complex) - 1j * np.sin(theta / 2) * mat


# -- statevector path (no dense matrices) ------------------------------------


def fock_vector(phi: FockState) -> np.ndarray:
    vec = np.zeros(1 << phi.modes, dtype=complex)
    vec[phi.basis_index()] = 1.0
    return vec


def _apply_single_majorana(index: int, modes: int, psi: np.ndarray) -> np.ndarray:
    mode = (index + 1) // 2
    shift = modes - mode
    flip = 1 << shift
    hi_mask = ((1 << (mode - 1)) - 1) << (shift + 1)
    idx = np.arange(psi.shape[0], dtype=np.uint64)
    parity = np.bitwise_count(idx & np.uint64(hi_mask)) & np.uint64(1)
    phase = np.where(parity == 0, 1.0 + 0j, -1.0 + 0j)
    src = psi[(idx ^ np.uint64(flip)).astype(np.intp)]
    if index % 2:  # m_{2j-1} = adag + a
        return phase * src
    occ = ((idx >> np.uint64(shift)) & np.uint64(1)).astype(np.float64)
    return 1j * phase * (2.0 * occ - 1.0) * src


def apply_monomial_to_state(m: MajoranaMonomial, psi: np.ndarray) -> np.ndarray:
    """M |psi> computed factor-by-factor; O(w 2^N), no dense matrix."""
    out = psi
    for idx in reversed(m.indices):
        out = _apply_single_majorana(idx, m.modes, out)
    if hermitian_phase_exponent(m.length):
        out = 1j * out
    return out


def circuit_state(
    circuit: Circuit, phi: FockState, ceiling: int = DEFAULT_CEILING
) -> np.ndarray:
    """U |phi> with gates applied in order j = 1..L."""
    _check_ceiling(circuit.modes, ceiling)
    if circuit.modes != phi.modes:
        raise ValueError("circuit and state mode counts differ")
    psi = fock_vector(phi)
    for gate in circuit.gates:
        theta = circuit.angle_of(gate)
        mpsi = apply_monomial_to_state(gate.generator, psi)
        psi = np.cos(theta / 2) * psi - 1j * np.sin(theta / 2) * mpsi
    return psi


def state_expectation(opsum: OperatorSum, psi: np.ndarray) -> float:
    """<psi| H |psi> with the reality contract enforced."""
    total = 0j
    for mono, c in opsum:
        total += c * np.vdot(psi, apply_monomial_to_state(mono, psi))
    if abs(total.imag) > 1e-10:
        raise NumericContractError(
            f"expectation has imaginary residue {total.imag:.3e}"
        )
    return float(total.real)


def exact_expectation(
    ham: OperatorSum,
    circuit: Circuit,
    phi: FockState,
    ceiling: int = DEFAULT_CEILING,
) -> float:
    """Tr[U rho U^dag H] for the Fock projector rho = |phi><phi|."""
    _check_ceiling(ham.modes, ceiling)
    psi = circuit_state(circuit, phi, ceiling)
    return state_expectation(ham, psi)


class Eigensystem(NamedTuple):
    e0: float
    e1: float
    ground: np.ndarray

    @property
    def gap(self) -> float:
        return self.e1 - self.e0

    def is_degenerate(self, tol: float = 1e-9) -> bool:
        return self.gap <= tol


def exact_eigensystem(opsum: OperatorSum, ceiling: int = DEFAULT_CEILING) -> Eigensystem:
    """Two lowest eigenvalues (with multiplicity) and a ground eigenvector."""
    _check_ceiling(opsum.modes, ceiling)
    mat = dense_operator(opsum, ceiling)
    residue = np.abs(mat - mat.conj().T).max()
    if residue > 1e-10:
        raise NumericContractError(f"operator sum not Hermitian: residue {residue:.3e}")
    evals, evecs = np.linalg.eigh(mat)
    return Eigensystem(float(evals[0]), float(evals[1]), evecs[:, 0])
