"""Parameter-free symbolic propagation for fast re-evaluation.

Instead of numbers, each propagated monomial carries a bag of *paths*: a
signed coefficient times a multiset of (parameter, sin/cos) factors picked
up at each branching.  Building the model is the expensive pre-processing
step; evaluating it at a concrete parameter table is cheap, which is what
makes it useful inside parameter optimization loops.

Gates with fixed (non-named) angles contribute numeric trig factors that
are folded directly into the path coefficient; only named parameters appear
as symbolic factors, and only symbolic sine factors count against the
sine cutoff.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass, field

from .algebra import _R_BY_LEN, MajoranaMonomial, bitvec_lex_key, render_monomial_bits
from .errors import (
    DimensionMismatchError,
    TiedParameterError,
    UnresolvedParameterError,
)
from .expectation import FockState, fock_trace_bits
from .opsum import OperatorSum
from .propagation import Circuit, TruncationPolicy

COS = 0
SIN = 1

# a factor is (parameter name, COS|SIN); a path key is a sorted tuple of factors
PathKey = tuple[tuple[str, int], ...]


@dataclass(frozen=True, slots=True)
class PathTerm:
    """One propagation path: a signed coefficient and its trig factors."""

    coefficient: float
    factors: PathKey

    @property
    def sine_count(self) -> int:
        return sum(1 for _, kind in self.factors if kind == SIN)


@dataclass
class SurrogateModel:
    """Symbolic coefficients c_b as path bags, keyed by monomial bits."""

    modes: int
    entries: dict[int, dict[PathKey, float]]
    policy_used: TruncationPolicy
    _fock_cache: tuple[tuple[int, ...], dict[int, int]] | None = field(
        default=None, repr=False
    )

    def paths(self, m: MajoranaMonomial) -> list[PathTerm]:
        bag = self.entries.get(m.bits, {})
        return [PathTerm(c, key) for key, c in sorted(bag.items())]

    @property
    def path_count(self) -> int:
        return sum(len(bag) for bag in self.entries.values())

    @property
    def monomial_count(self) -> int:
        return len(self.entries)

    def parameter_names(self) -> set[str]:
        names = set()
        for bag in self.entries.values():
            for key in bag:
                names.update(name for name, _ in key)
        return names

    def fock_weights(self, phi: FockState) -> dict[int, int]:
        """Cached Tr[rho M] per stored monomial for the bound Fock state.

        Single-writer: populate from one thread, then share freely.  Binding
        a different state replaces the cache.
        """
        if phi.modes != self.modes:
            raise DimensionMismatchError(
                f"{phi.modes}-mode state bound to {self.modes}-mode model"
            )
        cached = self._fock_cache
        if cached is not None and cached[0] == phi.occupations:
            return cached[1]
        weights = {}
        for bits in self.entries:
            t = fock_trace_bits(bits, phi)
            if t:
                weights[bits] = t
        self._fock_cache = (phi.occupations, weights)
        return weights

    def dump_text(self) -> str:
        """Inspection dump, one line per path (format not stability-guaranteed)."""
        lines = []
        for bits in sorted(self.entries, key=lambda b: bitvec_lex_key(b, self.modes)):
            mono = render_monomial_bits(bits)
            for key, coeff in sorted(self.entries[bits].items()):
                coss = ",".join(name for name, kind in key if kind == COS)
                sins = ",".join(name for name, kind in key if kind == SIN)
                parts = [mono, f"{coeff:.17g}"]
                if coss:
                    parts.append(f"cos:{coss}")
                if sins:
                    parts.append(f"sin:{sins}")
                lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"


def _with_factor(key: PathKey, factor: tuple[str, int]) -> PathKey:
    items = list(key)
    insort(items, factor)
    return tuple(items)


def build_surrogate(
    ham: OperatorSum, circuit: Circuit, policy: TruncationPolicy
) -> SurrogateModel:
    """Symbolic analogue of `propagate`.

    Paths whose symbolic sine count would exceed policy.sine_cutoff are
    pruned at creation; the length cutoff applies to monomials exactly as in
    the numeric engine.  The coefficient threshold is ignored (coefficients
    are symbolic).
    """
    if circuit.modes != ham.modes:
        raise DimensionMismatchError(
            f"{circuit.modes}-mode circuit applied to {ham.modes}-mode sum"
        )
    sine_cutoff = policy.sine_cutoff
    wstar = policy.length_cutoff
    rph = _R_BY_LEN

    # no filtering before the first gate: like the numeric engine, the
    # length cutoff is applied after each full gate application
    entries: dict[int, dict[PathKey, float]] = {
        bits: {(): c} for bits, c in ham.items_bits()
    }

    for j in range(len(circuit.gates) - 1, -1, -1):
        gate = circuit.gates[j]
        gbits = gate.generator.bits
        glen = gbits.bit_count()
        rg = rph[glen & 3]
        below = []
        rest = gbits
        while rest:
            low = rest & -rest
            below.append(low - 1)
            rest ^= low
        named = gate.param is not None
        if not named:
            ct = math.cos(gate.angle)
            st = math.sin(gate.angle)
        out: dict[int, dict[PathKey, float]] = {}
        for bits, bag in entries.items():
            s = (gbits & bits).bit_count()
            if not (s & 1):
                dest = out.setdefault(bits, {})
                for key, c in bag.items():
                    dest[key] = dest.get(key, 0.0) + c
                continue
            par = 0
            for mask in below:
                par ^= (bits & mask).bit_count() & 1
            nbits = bits ^ gbits
            e = (
                1 + rg + rph[bits.bit_count() & 3] - rph[nbits.bit_count() & 3] + 2 * par
            ) & 3
            sign = 1.0 if e == 0 else -1.0
            keep_sine = wstar is None or nbits.bit_count() <= wstar
            dest_cos = out.setdefault(bits, {})
            dest_sin = out.setdefault(nbits, {}) if keep_sine else None
            if named:
                fcos = (gate.param, COS)
                fsin = (gate.param, SIN)
                for key, c in bag.items():
                    kc = _with_factor(key, fcos)
                    dest_cos[kc] = dest_cos.get(kc, 0.0) + c
                    if dest_sin is None:
                        continue
                    if sine_cutoff is not None:
                        sines = sum(1 for _, kind in key if kind == SIN)
                        if sines + 1 > sine_cutoff:
                            continue
                    ks = _with_factor(key, fsin)
                    dest_sin[ks] = dest_sin.get(ks, 0.0) + sign * c
            else:
                for key, c in bag.items():
                    dest_cos[key] = dest_cos.get(key, 0.0) + c * ct
                    if dest_sin is not None:
                        dest_sin[key] = dest_sin.get(key, 0.0) + sign * c * st
        # post-gate filter: over-length monomials, merged-to-zero paths
        entries = {}
        for bits, bag in out.items():
            if wstar is not None and bits.bit_count() > wstar:
                continue
            kept = {key: c for key, c in bag.items() if c != 0.0}
            if kept:
                entries[bits] = kept
    return SurrogateModel(circuit.modes, entries, policy)


def _trig_table(model: SurrogateModel, params: dict[str, float]) -> dict[tuple[str, int], float]:
    table: dict[tuple[str, int], float] = {}
    for bag in model.entries.values():
        for key in bag:
            for factor in key:
                if factor not in table:
                    name, kind = factor
                    if name not in params:
                        raise UnresolvedParameterError(name)
                    theta = params[name]
                    table[factor] = math.cos(theta) if kind == COS else math.sin(theta)
    return table


def evaluate(model: SurrogateModel, params: dict[str, float], phi: FockState) -> float:
    """Expectation value at the given parameter table and Fock state."""
    weights = model.fock_weights(phi)
    trig = _trig_table(model, params)
    total = 0.0
    for bits, weight in weights.items():
        bag = model.entries[bits]
        acc = 0.0
        for key, c in bag.items():
            p = c
            for factor in key:
                p *= trig[factor]
            acc += p
        total += acc * weight
    return total


def restrict_to_parameter(
    model: SurrogateModel,
    phi: FockState,
    params: dict[str, float],
    name: str,
) -> tuple[float, float, float]:
    """Reals (a, b, c) with E(theta) = a + b cos(theta) + c sin(theta).

    Exact whenever the named parameter appears at most once per path, which
    holds for circuits with a distinct parameter per gate.  If a path holds
    the parameter more than once the restriction is not trigonometric-linear
    and TiedParameterError is raised; callers fall back to grid search.
    """
    weights = model.fock_weights(phi)
    a = b = c = 0.0
    for bits, weight in weights.items():
        for key, coeff in model.entries[bits].items():
            hits = [kind for pname, kind in key if pname == name]
            if len(hits) > 1:
                raise TiedParameterError(
                    f"parameter {name!r} appears {len(hits)} times along one path"
                )
            p = coeff * weight
            for pname, kind in key:
                if pname == name:
                    continue
                if pname not in params:
                    raise UnresolvedParameterError(pname)
                theta = params[pname]
                p *= math.cos(theta) if kind == COS else math.sin(theta)
            if not hits:
                a += p
            elif hits[0] == COS:
                b += p
            else:
                c += p
    return a, b, c
