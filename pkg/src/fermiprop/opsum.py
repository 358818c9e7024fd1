"""Sparse real linear combinations of Majorana monomials.

An OperatorSum stores a Hermitian operator in the Hermitian monomial basis,
so all coefficients are real.  This module also ingests second-quantized
fermionic coefficient tables (one- and two-body) and expands them exactly
into the Majorana basis, and it owns the `.majh` text format.
"""

from __future__ import annotations

from itertools import product as _cartesian

from .algebra import (
    MajoranaMonomial,
    bitvec_lex_key,
    hermitian_phase_exponent,
    parse_monomial,
    render_monomial_bits,
)
from .errors import ContractViolationError, DimensionMismatchError, ParseError

# coefficients below this are treated as floating cancellation debris
CANCELLATION_EPS = 1e-14


class OperatorSum:
    """Map from Majorana monomials to real coefficients on a fixed mode count.

    Exact zeros are never stored.  The sum is single-writer; hand out
    copies (or iterate) for concurrent readers.
    """

    __slots__ = ("modes", "_terms")

    def __init__(self, modes: int, terms: dict[int, float] | None = None):
        if modes < 1:
            raise ValueError(f"modes must be positive, got {modes}")
        self.modes = modes
        self._terms: dict[int, float] = terms if terms is not None else {}

    # -- construction ------------------------------------------------------

    @classmethod
    def from_terms(cls, modes: int, pairs) -> OperatorSum:
        """Build from an iterable of (MajoranaMonomial, coefficient)."""
        out = cls(modes)
        for m, c in pairs:
            out.add_term(m, c)
        return out

    def add_term(self, m: MajoranaMonomial, c: float) -> OperatorSum:
        """Add c times the monomial; removes the key on exact cancellation."""
        if m.modes != self.modes:
            raise DimensionMismatchError(
                f"term on {m.modes} modes added to sum on {self.modes}"
            )
        self.add_bits(m.bits, c)
        return self

    def add_bits(self, bits: int, c: float) -> None:
        """Raw-key variant of add_term for engine-internal hot paths."""
        terms = self._terms
        new = terms.get(bits, 0.0) + c
        if new == 0.0:
            terms.pop(bits, None)
        else:
            terms[bits] = new

    # -- access ------------------------------------------------------------

    def coefficient(self, m: MajoranaMonomial) -> float:
        if m.modes != self.modes:
            raise DimensionMismatchError(
                f"queried {m.modes}-mode monomial on {self.modes}-mode sum"
            )
        return self._terms.get(m.bits, 0.0)

    def coefficient_bits(self, bits: int) -> float:
        return self._terms.get(bits, 0.0)

    def items_bits(self):
        """Iterate (bits, coefficient) pairs without wrapping monomials."""
        return self._terms.items()

    def __iter__(self):
        modes = self.modes
        for bits, c in self._terms.items():
            yield MajoranaMonomial(bits, modes), c

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, m: MajoranaMonomial) -> bool:
        return m.bits in self._terms

    def sorted_terms(self) -> list[tuple[MajoranaMonomial, float]]:
        """Terms sorted by bit-vector lexicographic order (deterministic)."""
        modes = self.modes
        order = sorted(self._terms, key=lambda b: bitvec_lex_key(b, modes))
        return [(MajoranaMonomial(b, modes), self._terms[b]) for b in order]

    def copy(self) -> OperatorSum:
        return OperatorSum(self.modes, dict(self._terms))

    def scaled(self, factor: float) -> OperatorSum:
        if factor == 0.0:
            return OperatorSum(self.modes)
        return OperatorSum(self.modes, {b: c * factor for b, c in self._terms.items()})

    def add_sum(self, other: OperatorSum) -> OperatorSum:
        if other.modes != self.modes:
            raise DimensionMismatchError("mode counts differ")
        for bits, c in other._terms.items():
            self.add_bits(bits, c)
        return self

    def squared_norm(self) -> float:
        return sum(c * c for c in self._terms.values())

    def max_length(self) -> int:
        return max((b.bit_count() for b in self._terms), default=0)

    def __repr__(self):
        return f"OperatorSum(modes={self.modes}, terms={len(self._terms)})"


# -- fermionic ingestion -----------------------------------------------------


def fermionic_to_majorana(one_body, two_body, modes: int) -> OperatorSum:
    """Expand fermionic coefficient tables into the Majorana monomial basis.

    `one_body` maps (i, j) -> h_ij for h_ij * adag_i a_j and `two_body` maps
    (i, j, k, l) -> h_ijkl for h_ijkl * adag_i adag_j a_k a_l, with 1-based
    mode indices.  Each ladder operator is substituted by
    a_j = (m_{2j-1} + i m_{2j})/2 and its adjoint, and the products are
    normal-ordered into canonical Hermitian monomials.  A Hermitian input
    yields an all-real expansion; imaginary residue above 1e-12 on any
    output coefficient is reported as an input error.
    """
    acc: dict[int, complex] = {}

    def push(factors, h):
        # factors: sequence of (mode, is_creation); h: complex weight
        if h == 0:
            return
        scale = h * (0.5 ** len(factors))
        options = []
        for mode, dag in factors:
            if not 1 <= mode <= modes:
                raise ValueError(f"mode index {mode} outside 1..{modes}")
            lo = 2 * mode - 2  # bit position of m_{2j-1}
            im = -1j if dag else 1j
            options.append(((lo, 1.0 + 0j), (lo + 1, im)))
        for combo in _cartesian(*options):
            coeff = scale
            bits = 0
            par = 0
            for pos, fac in combo:
                coeff *= fac
                # append m at `pos` on the right: hop it left past higher bits
                par ^= (bits >> (pos + 1)).bit_count() & 1
                bits ^= 1 << pos
            if par:
                coeff = -coeff
            # raw ascending product equals (-i)^r times the canonical monomial
            r = hermitian_phase_exponent(bits.bit_count())
            if r:
                coeff *= -1j
            acc[bits] = acc.get(bits, 0j) + coeff

    for (i, j), h in one_body.items():
        push(((i, True), (j, False)), h)
    for (i, j, k, l), h in two_body.items():
        push(((i, True), (j, True), (k, False), (l, False)), h)

    worst = max((abs(c.imag) for c in acc.values()), default=0.0)
    if worst > 1e-12:
        raise ContractViolationError(
            f"fermionic coefficients are not Hermitian: imaginary residue {worst:.3e}"
        )
    terms = {b: c.real for b, c in acc.items() if abs(c.real) >= CANCELLATION_EPS}
    return OperatorSum(modes, terms)


# -- .majh text format -------------------------------------------------------


def _strip_comment(raw: str) -> str:
    cut = raw.find("#")
    return raw if cut < 0 else raw[:cut]


def parse_hamiltonian(text: str, source: str = "<string>") -> OperatorSum:
    """Parse the `.majh` format: `modes N` header then `coeff [i,...]` lines."""
    result = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw).strip()
        if not body:
            continue
        if result is None:
            fields = body.split()
            if len(fields) != 2 or fields[0] != "modes":
                raise ParseError("expected header `modes N`", source, lineno)
            try:
                modes = int(fields[1])
            except ValueError:
                raise ParseError(f"bad mode count {fields[1]!r}", source, lineno) from None
            if modes < 1:
                raise ParseError(f"mode count must be positive, got {modes}", source, lineno)
            result = OperatorSum(modes)
            continue
        fields = body.split(None, 1)
        if len(fields) != 2:
            raise ParseError("expected `coeff [i1,...,ik]`", source, lineno)
        try:
            coeff = float(fields[0])
        except ValueError:
            raise ParseError(f"bad coefficient {fields[0]!r}", source, lineno) from None
        mono = parse_monomial(fields[1], result.modes, source=source, line=lineno)
        result.add_term(mono, coeff)
    if result is None:
        raise ParseError("empty Hamiltonian file", source)
    return result


def format_hamiltonian(opsum: OperatorSum) -> str:
    lines = [f"modes {opsum.modes}"]
    modes = opsum.modes
    for bits in sorted(opsum._terms, key=lambda b: bitvec_lex_key(b, modes)):
        lines.append(f"{opsum._terms[bits]:.17g} {render_monomial_bits(bits)}")
    return "\n".join(lines) + "\n"


def read_hamiltonian(path) -> OperatorSum:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_hamiltonian(fh.read(), source=str(path))


def write_hamiltonian(path, opsum: OperatorSum) -> None:
    text = format_hamiltonian(opsum)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
