"""Exact combinatorics behind length truncation.

Pairing probabilities, overlap (hypergeometric) probabilities, the
increase/decrease branching split, and the k=4 backflow ratio, all computed
with exact big-integer arithmetic and converted to float at the end so that
mode counts in the hundreds neither overflow nor underflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

from .expectation import is_paired_bits
from .seeding import spawn_generator


def _check_w(modes: int, w: int) -> None:
    if not 0 <= w <= 2 * modes:
        raise ValueError(f"monomial length {w} outside 0..{2 * modes}")


def pairing_probability_exact(modes: int, w: int) -> Fraction:
    """P(w): chance a uniformly random length-w monomial is paired.

    Odd lengths can never pair completely, so they give exactly 0.
    """
    _check_w(modes, w)
    if w % 2:
        return Fraction(0)
    return Fraction(comb(modes, w // 2), comb(2 * modes, w))


def pairing_probability(modes: int, w: int) -> float:
    return float(pairing_probability_exact(modes, w))


def overlap_probability_exact(modes: int, w: int, k: int, s: int) -> Fraction:
    """Chance that random length-w and length-k monomials share exactly s operators."""
    _check_w(modes, w)
    _check_w(modes, k)
    if not 0 <= s <= min(w, k):
        raise ValueError(f"overlap {s} outside 0..min({w},{k})")
    if w - s > 2 * modes - k:
        return Fraction(0)
    return Fraction(comb(k, s) * comb(2 * modes - k, w - s), comb(2 * modes, w))


def overlap_probability(modes: int, w: int, k: int, s: int) -> float:
    return float(overlap_probability_exact(modes, w, k, s))


@dataclass(frozen=True, slots=True)
class BranchProbabilities:
    """Chances that one branching step grows / shrinks / keeps monomial length.

    p_same aggregates both no-branching (even overlap) and branching with
    unchanged length (odd overlap equal to k/2, possible only for
    k = 2 mod 4); it is defined as the complement of the other two.
    """

    p_plus: float
    p_minus: float
    p_same: float


def branch_probabilities(modes: int, w: int, k: int) -> BranchProbabilities:
    """Split the overlap distribution into length-raising / -lowering events.

    Branching needs odd overlap s; the product length is w + k - 2s, so odd
    s < k/2 raises the length and odd s > k/2 lowers it.
    """
    if k % 2:
        raise ValueError(f"gate length k must be even, got {k}")
    _check_w(modes, w)
    _check_w(modes, k)
    plus = Fraction(0)
    minus = Fraction(0)
    for s in range(1, min(w, k) + 1, 2):
        p = overlap_probability_exact(modes, w, k, s)
        if 2 * s < k:
            plus += p
        elif 2 * s > k:
            minus += p
    return BranchProbabilities(float(plus), float(minus), float(1 - plus - minus))


def backflow_ratio_k4(modes: int, w: int) -> float:
    """Closed form of P-/P+ for length-4 generators."""
    if not 3 <= w <= 2 * modes - 3:
        raise ValueError(
            f"backflow ratio defined for 3 <= w <= {2 * modes - 3}, got {w}"
        )
    num = (w - 1) * (w - 2)
    den = (2 * modes - 1 - w) * (2 * modes - 2 - w)
    return float(Fraction(num, den))


def result_length(w: int, k: int, s: int) -> int:
    """Length of the branch product: w + k - 2s."""
    if s > min(w, k):
        raise ValueError(f"overlap {s} exceeds min({w}, {k})")
    return w + k - 2 * s


def figure2_rows(modes: int, k: int) -> list[tuple[int, float, float, float, float]]:
    """Transition and pairing probabilities for w = 0..2N."""
    rows = []
    for w in range(0, 2 * modes + 1):
        bp = branch_probabilities(modes, w, k)
        rows.append((w, bp.p_plus, bp.p_minus, bp.p_same, pairing_probability(modes, w)))
    return rows


def format_transition_csv(modes: int, k: int) -> str:
    lines = [
        "# p_same counts both no-branching (even overlap) and branching with"
        " unchanged length (odd overlap k/2); it is 1 - p_plus - p_minus",
        "w,p_plus,p_minus,p_same,pairing",
    ]
    for w, pp, pm, ps, pair in figure2_rows(modes, k):
        lines.append(f"{w},{pp:.17g},{pm:.17g},{ps:.17g},{pair:.17g}")
    return "\n".join(lines) + "\n"


def write_transition_csv(path, modes: int, k: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_transition_csv(modes, k))


def monte_carlo_pairing(modes: int, w: int, samples: int | None, seed: int = 0) -> float:
    """Empirical pairing fraction over random length-w monomials.

    With samples=None every length-w monomial is enumerated instead, which
    reproduces the exact probability as a ratio of counts.
    """
    if w % 2:
        raise ValueError(f"pairing sampling needs even length, got {w}")
    _check_w(modes, w)
    if samples is None:
        total = 0
        paired = 0
        for combo in combinations(range(2 * modes), w):
            bits = 0
            for i in combo:
                bits |= 1 << i
            total += 1
            paired += is_paired_bits(bits, modes)
        return paired / total if total else 1.0
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    rng = spawn_generator(seed, "pairing-monte-carlo")
    paired = 0
    for _ in range(samples):
        idx = rng.choice(2 * modes, size=w, replace=False)
        bits = 0
        for i in idx:
            bits |= 1 << int(i)
        paired += is_paired_bits(bits, modes)
    return paired / samples
