"""Seeded random problem instances for experiments, benchmarks and tests."""

from __future__ import annotations

from itertools import product as _cartesian

from .expectation import FockState, fock_trace_bits
from .opsum import OperatorSum, fermionic_to_majorana
from .seeding import spawn_generator


def random_two_body_hamiltonian(
    modes: int,
    seed: int,
    one_body_scale: float = 1.0,
    two_body_count: int | None = None,
    two_body_scale: float = 0.5,
) -> OperatorSum:
    """Random Hermitian one-body matrix plus sparse Hermitian two-body terms."""
    rng = spawn_generator(seed, "two-body-hamiltonian")
    raw = rng.normal(size=(modes, modes)) + 1j * rng.normal(size=(modes, modes))
    herm = (raw + raw.conj().T) / 2 * one_body_scale
    one_body = {
        (i + 1, j + 1): complex(herm[i, j]) for i in range(modes) for j in range(modes)
    }
    two_body: dict[tuple[int, int, int, int], complex] = {}
    count = 2 * modes if two_body_count is None else two_body_count
    for _ in range(count):
        i, j, k, l = (int(x) + 1 for x in rng.integers(0, modes, size=4))
        h = complex(rng.normal(), rng.normal()) * two_body_scale
        two_body[(i, j, k, l)] = two_body.get((i, j, k, l), 0j) + h / 2
        two_body[(l, k, j, i)] = two_body.get((l, k, j, i), 0j) + h.conjugate() / 2
    return fermionic_to_majorana(one_body, two_body, modes)


def random_even_observable(
    modes: int, term_count: int, max_length: int, seed: int
) -> OperatorSum:
    """Sum of a few random even monomials with uniform coefficients."""
    if max_length % 2 or not 2 <= max_length <= 2 * modes:
        raise ValueError(f"bad observable length bound {max_length}")
    rng = spawn_generator(seed, "even-observable")
    lengths = list(range(2, max_length + 1, 2))
    out = OperatorSum(modes)
    for _ in range(term_count):
        ell = int(rng.choice(lengths))
        idx = rng.choice(2 * modes, size=ell, replace=False)
        bits = 0
        for i in idx:
            bits |= 1 << int(i)
        out.add_bits(bits, float(rng.uniform(-1.0, 1.0)))
    return out


def best_fock_state(ham: OperatorSum, ceiling: int = 20) -> FockState:
    """Fock basis state with the lowest diagonal expectation of the sum.

    Scans all 2^N occupations, so it is guarded for desk-scale N only.
    """
    n = ham.modes
    if n > ceiling:
        raise ValueError(f"Fock scan over 2^{n} states refused (ceiling {ceiling})")
    best = None
    best_val = None
    for occ in _cartesian((0, 1), repeat=n):
        phi = FockState(occ)
        val = 0.0
        for bits, c in ham.items_bits():
            t = fock_trace_bits(bits, phi)
            if t:
                val += c * t
        if best_val is None or val < best_val:
            best, best_val = phi, val
    return best
