"""Fock-state expectation values of Majorana monomials.

Only *paired* monomials (both partners m_{2j-1}, m_{2j} present for every
touched mode j) have a nonzero diagonal in the occupation basis; for those
the value is +-1 with a closed-form sign.  The sign formula is locked in by
the exhaustive dense-matrix tests rather than derived here.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .algebra import MajoranaMonomial
from .errors import DimensionMismatchError, ParseError
from .opsum import OperatorSum


@dataclass(frozen=True, slots=True)
class FockState:
    """Occupation-number basis state |n_1 n_2 ... n_N>."""

    occupations: tuple[int, ...]

    def __post_init__(self):
        if not self.occupations:
            raise ValueError("Fock state needs at least one mode")
        if any(n not in (0, 1) for n in self.occupations):
            raise ValueError(f"occupations must be 0/1, got {self.occupations}")

    @classmethod
    def from_string(cls, text: str, *, source=None, line=None) -> FockState:
        """Parse a bitstring like `1100`, leftmost bit is mode 1."""
        text = text.strip()
        if not text or any(ch not in "01" for ch in text):
            raise ParseError(f"bad Fock bitstring {text!r}", source, line)
        return cls(tuple(int(ch) for ch in text))

    @property
    def modes(self) -> int:
        return len(self.occupations)

    @property
    def occupied_count(self) -> int:
        return sum(self.occupations)

    def basis_index(self) -> int:
        """Index in the dense Fock basis (mode 1 most significant)."""
        idx = 0
        for n in self.occupations:
            idx = (idx << 1) | n
        return idx

    def __str__(self) -> str:
        return "".join(str(n) for n in self.occupations)


def _pair_mask(modes: int) -> int:
    # bits 0, 2, 4, ... set: the m_{2j-1} slots
    return ((1 << (2 * modes)) - 1) // 3


def is_paired(m: MajoranaMonomial) -> bool:
    """True iff every touched mode contributes both of its Majorana partners."""
    return is_paired_bits(m.bits, m.modes)


def is_paired_bits(bits: int, modes: int) -> bool:
    mask = _pair_mask(modes)
    return (bits & mask) == ((bits >> 1) & mask)


def fock_trace(m: MajoranaMonomial, phi: FockState) -> int:
    """<phi| M |phi> for a Fock basis state: 0, +1 or -1."""
    if m.modes != phi.modes:
        raise DimensionMismatchError(
            f"{m.modes}-mode monomial traced against {phi.modes}-mode state"
        )
    return fock_trace_bits(m.bits, phi)


def fock_trace_bits(bits: int, phi: FockState) -> int:
    lo = bits & _pair_mask(phi.modes)
    if lo != (bits >> 1) & (_pair_mask(phi.modes)):
        return 0
    npairs = lo.bit_count()
    occupied = 0
    occ = phi.occupations
    rest = lo
    while rest:
        low = rest & -rest
        occupied += occ[(low.bit_length() - 1) >> 1]
        rest ^= low
    sign = ((npairs + 1) >> 1) + occupied
    return -1 if sign & 1 else 1


def expectation(opsum: OperatorSum, phi: FockState) -> float:
    """Sum of coefficient * fock_trace over all stored terms."""
    if opsum.modes != phi.modes:
        raise DimensionMismatchError(
            f"{opsum.modes}-mode sum against {phi.modes}-mode state"
        )
    total = 0.0
    for bits, c in opsum.items_bits():
        t = fock_trace_bits(bits, phi)
        if t:
            total += c * t
    return total


def fock_operator_sum(phi: FockState, max_length: int | None = None) -> OperatorSum:
    """Expansion of 2^N |phi><phi| in the monomial basis.

    The coefficient on each paired monomial M equals fock_trace(M, phi); all
    other monomials vanish.  With `max_length` set, only paired monomials up
    to that length are emitted (the low-length window used when the engine
    runs with a length cutoff), keeping the term count polynomial.
    """
    n = phi.modes
    cap = 2 * n if max_length is None else min(max_length, 2 * n)
    occ = phi.occupations
    terms: dict[int, float] = {}
    for size in range(0, cap // 2 + 1):
        base_sign = (size + 1) >> 1
        for modes_subset in combinations(range(n), size):
            bits = 0
            occupied = 0
            for j in modes_subset:
                bits |= 0b11 << (2 * j)
                occupied += occ[j]
            terms[bits] = -1.0 if (base_sign + occupied) & 1 else 1.0
    return OperatorSum(n, terms)
