"""Canonical Hermitian Majorana monomials and their exact arithmetic.

A system of N fermionic modes carries 2N Majorana operators m_1 .. m_{2N}
(Hermitian, unitary, pairwise anticommuting).  Every product of distinct
Majorana operators, multiplied by i when needed to make it Hermitian, is a
*monomial*: we encode it as a 2N-bit integer where bit (i-1) set means m_i
is present.  The i-exponent is never stored; it is a function of the number
of factors only.

All operations here are pure and all values immutable, so they are safe to
share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractViolationError, DimensionMismatchError, ParseError

# i-exponent making an ascending product of w Majorana operators Hermitian,
# indexed by w mod 4.  (Reversing a w-factor product costs w(w-1)/2 swaps.)
_R_BY_LEN = (0, 0, 1, 1)


def hermitian_phase_exponent(w: int) -> int:
    """Exponent r in {0,1} such that i^r * m_{x_1}...m_{x_w} is Hermitian."""
    if w < 0:
        raise ValueError(f"negative monomial length {w}")
    return _R_BY_LEN[w & 3]


@dataclass(frozen=True, slots=True)
class MajoranaMonomial:
    """A canonical Hermitian Majorana monomial on `modes` fermionic modes.

    `bits` holds the membership vector: bit (i-1) set means Majorana
    operator m_i appears.  Equality is bitwise (for equal mode counts).
    """

    bits: int
    modes: int

    def __post_init__(self):
        if self.modes < 1:
            raise ValueError(f"modes must be positive, got {self.modes}")
        if self.bits < 0 or self.bits >> (2 * self.modes):
            raise ValueError(
                f"bit vector {self.bits:#x} out of range for {self.modes} modes"
            )

    @classmethod
    def identity(cls, modes: int) -> MajoranaMonomial:
        return cls(0, modes)

    @classmethod
    def from_indices(cls, indices, modes: int) -> MajoranaMonomial:
        """Build from 1-based Majorana indices; duplicates are rejected."""
        bits = 0
        for i in indices:
            if not 1 <= i <= 2 * modes:
                raise ValueError(f"Majorana index {i} outside 1..{2 * modes}")
            bit = 1 << (i - 1)
            if bits & bit:
                raise ValueError(f"duplicate Majorana index {i}")
            bits |= bit
        return cls(bits, modes)

    @property
    def length(self) -> int:
        return self.bits.bit_count()

    @property
    def indices(self) -> tuple[int, ...]:
        """Ascending 1-based Majorana indices."""
        return tuple(i + 1 for i in range(2 * self.modes) if (self.bits >> i) & 1)

    def is_identity(self) -> bool:
        return self.bits == 0

    def __str__(self) -> str:
        return "[" + ",".join(str(i) for i in self.indices) + "]"


@dataclass(frozen=True, slots=True)
class SignedMonomial:
    """A monomial together with the only phase propagation can produce."""

    monomial: MajoranaMonomial
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +-1, got {self.sign}")


def length(m: MajoranaMonomial) -> int:
    return m.bits.bit_count()


def _check_same_modes(a: MajoranaMonomial, b: MajoranaMonomial) -> None:
    if a.modes != b.modes:
        raise DimensionMismatchError(
            f"monomials live on different mode counts: {a.modes} vs {b.modes}"
        )


def overlap(a: MajoranaMonomial, b: MajoranaMonomial) -> int:
    """Number of Majorana operators the two monomials share."""
    _check_same_modes(a, b)
    return (a.bits & b.bits).bit_count()


def commutes(a: MajoranaMonomial, b: MajoranaMonomial) -> bool:
    """Whether the two monomials commute as operators.

    Two monomials of lengths w, k sharing s operators satisfy
    A B = (-1)^(w k - s) B A.
    """
    _check_same_modes(a, b)
    return commutes_bits(a.bits, b.bits)


def commutes_bits(abits: int, bbits: int) -> bool:
    wk = abits.bit_count() * bbits.bit_count()
    s = (abits & bbits).bit_count()
    return ((wk - s) & 1) == 0


def merge_parity_bits(abits: int, bbits: int) -> int:
    """Transposition parity of sorting the concatenated index sequence a+b.

    Counting is done with equal indices cancelling in place (m_x m_x = 1),
    which costs no extra swap beyond bringing the pair together.
    """
    par = 0
    rest = abits
    while rest:
        low = rest & -rest
        # b-indices strictly below this a-index must hop over it
        par ^= (bbits & (low - 1)).bit_count() & 1
        rest ^= low
    return par


def product_bits_sign(gbits: int, mbits: int) -> tuple[int, int]:
    """Bits and sign of the canonical Hermitian product of two monomials.

    Returns (cbits, sign) with sign * M_c equal to i * M_g * M_m when the
    inputs anticommute, and to M_g * M_m when they commute; both cases give
    an exactly Hermitian result.
    """
    wg = gbits.bit_count()
    wm = mbits.bit_count()
    s = (gbits & mbits).bit_count()
    anti = (wg * wm - s) & 1
    cbits = gbits ^ mbits
    par = merge_parity_bits(gbits, mbits)
    e = (
        anti
        + _R_BY_LEN[wg & 3]
        + _R_BY_LEN[wm & 3]
        - _R_BY_LEN[cbits.bit_count() & 3]
        + 2 * par
    ) % 4
    assert e in (0, 2), "product of Hermitian monomials left a stray i"
    return cbits, (1 if e == 0 else -1)


def multiply_hermitian(g: MajoranaMonomial, m: MajoranaMonomial) -> SignedMonomial:
    """Exact signed product of two canonical Hermitian monomials.

    For anticommuting inputs returns sign*M_c = i*M_g*M_m (the branch the
    propagation engine needs); for commuting inputs the plain product
    sign*M_c = M_g*M_m, which is already Hermitian.  The output length is
    always length(g) + length(m) - 2*overlap(g, m).
    """
    _check_same_modes(g, m)
    cbits, sign = product_bits_sign(g.bits, m.bits)
    return SignedMonomial(MajoranaMonomial(cbits, g.modes), sign)


def bitvec_lex_key(bits: int, modes: int) -> tuple[int, ...]:
    """Sort key realising lexicographic order on the vector (b_1 .. b_2N)."""
    return tuple((bits >> i) & 1 for i in range(2 * modes))


def render_monomial_bits(bits: int) -> str:
    """Text form `[i1,...,ik]` with ascending 1-based indices."""
    out = []
    rest = bits
    while rest:
        low = rest & -rest
        out.append(str(low.bit_length()))
        rest ^= low
    return "[" + ",".join(out) + "]"


def parse_monomial(text: str, modes: int, *, source=None, line=None) -> MajoranaMonomial:
    """Parse `[i1,...,ik]`; rejects indices outside 1..2N and duplicates."""
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ParseError(f"expected monomial like [1,2], got {text!r}", source, line)
    inner = body[1:-1].strip()
    if not inner:
        return MajoranaMonomial.identity(modes)
    bits = 0
    for part in inner.split(","):
        try:
            idx = int(part)
        except ValueError:
            raise ParseError(f"bad Majorana index {part!r}", source, line) from None
        if not 1 <= idx <= 2 * modes:
            raise ParseError(
                f"Majorana index {idx} outside 1..{2 * modes}", source, line
            )
        bit = 1 << (idx - 1)
        if bits & bit:
            raise ParseError(f"duplicate Majorana index {idx}", source, line)
        bits |= bit
    return MajoranaMonomial(bits, modes)


def require_anticommuting(g: MajoranaMonomial, m: MajoranaMonomial) -> None:
    """Guard for callers that rely on the i-convention branch."""
    if commutes(g, m):
        raise ContractViolationError(
            f"monomials {g} and {m} commute; the i-convention product is undefined"
        )
