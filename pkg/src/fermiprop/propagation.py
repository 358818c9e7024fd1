"""Heisenberg-picture back-propagation of operator sums through circuits.

A circuit is an ordered list of rotations exp(-i theta M/2) generated by
even-length Majorana monomials.  Conjugating a monomial that anticommutes
with the generator splits it into a cosine branch (itself) and a sine
branch (the signed product with the generator); commuting monomials pass
through untouched.  After every gate the coefficient filter (eps) and the
length filter (w*) are applied to the whole sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

from .algebra import (
    MajoranaMonomial,
    _R_BY_LEN,
    parse_monomial,
    render_monomial_bits,
)
from .errors import (
    ContractViolationError,
    DimensionMismatchError,
    ParseError,
    UnresolvedParameterError,
)
from .opsum import OperatorSum
from .seeding import spawn_generator


@dataclass(frozen=True, slots=True)
class TruncationPolicy:
    """Filters applied after each gate of a propagation.

    coeff_threshold (eps): drop terms with |coefficient| < eps.
    length_cutoff (w*): drop terms with monomial length > w*; None = unbounded.
    sine_cutoff: symbolic engine only; prune paths with more sine factors.
    """

    coeff_threshold: float = 0.0
    length_cutoff: int | None = None
    sine_cutoff: int | None = None

    def __post_init__(self):
        if self.coeff_threshold < 0:
            raise ValueError(f"coeff_threshold must be >= 0, got {self.coeff_threshold}")
        if self.length_cutoff is not None:
            if self.length_cutoff < 0 or self.length_cutoff % 2:
                raise ValueError(
                    f"length_cutoff must be even and >= 0, got {self.length_cutoff}"
                )
        if self.sine_cutoff is not None and self.sine_cutoff < 0:
            raise ValueError(f"sine_cutoff must be >= 0, got {self.sine_cutoff}")

    @classmethod
    def exact(cls) -> TruncationPolicy:
        return cls()


@dataclass(frozen=True, slots=True)
class Gate:
    """A rotation exp(-i theta M/2) with a fixed angle or a named parameter."""

    generator: MajoranaMonomial
    angle: float | None = None
    param: str | None = None

    def __post_init__(self):
        if (self.angle is None) == (self.param is None):
            raise ValueError("exactly one of angle/param must be given")
        w = self.generator.length
        if w < 2 or w % 2:
            raise ValueError(
                f"gate generator must have even length >= 2, got length {w}"
            )


@dataclass
class Circuit:
    """Ordered gates (application order j = 1..L) plus a parameter table."""

    modes: int
    gates: list[Gate] = field(default_factory=list)
    parameters: dict[str, float] = field(default_factory=dict)

    def append(self, gate: Gate) -> None:
        if gate.generator.modes != self.modes:
            raise DimensionMismatchError(
                f"{gate.generator.modes}-mode gate appended to {self.modes}-mode circuit"
            )
        self.gates.append(gate)

    def angle_of(self, gate: Gate) -> float:
        if gate.angle is not None:
            return gate.angle
        try:
            return self.parameters[gate.param]
        except KeyError:
            raise UnresolvedParameterError(gate.param) from None

    def resolved_angles(self) -> list[float]:
        return [self.angle_of(g) for g in self.gates]

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    def copy(self) -> Circuit:
        return Circuit(self.modes, list(self.gates), dict(self.parameters))

    def with_named_parameters(self, prefix: str = "t") -> Circuit:
        """Rebind every gate to a fresh named parameter at its current angle."""
        out = Circuit(self.modes)
        for j, gate in enumerate(self.gates, start=1):
            name = f"{prefix}{j}"
            out.parameters[name] = self.angle_of(gate)
            out.gates.append(Gate(gate.generator, param=name))
        return out


@dataclass
class StepStats:
    gate_index: int
    generator: str
    terms_before: int
    terms_after: int
    dropped_small: int
    dropped_long: int


@dataclass
class PropagationRecord:
    """Per-gate bookkeeping collected during a propagation run."""

    steps: list[StepStats] = field(default_factory=list)

    @property
    def total_dropped(self) -> tuple[int, int]:
        return (
            sum(s.dropped_small for s in self.steps),
            sum(s.dropped_long for s in self.steps),
        )


def _apply_gate_bits(
    terms: dict[int, float],
    gbits: int,
    theta: float,
    eps: float,
    wstar: int | None,
) -> tuple[dict[int, float], int, int]:
    """One adjoint gate application on a raw bits->coeff map.

    Returns the new map plus the number of terms dropped by the coefficient
    and length filters.  Contributions landing on the same monomial are
    accumulated before filtering.
    """
    ct = math.cos(theta)
    st = math.sin(theta)
    glen = gbits.bit_count()
    rg = _R_BY_LEN[glen & 3]
    below = []
    rest = gbits
    while rest:
        low = rest & -rest
        below.append(low - 1)
        rest ^= low
    out: dict[int, float] = {}
    get = out.get
    rph = _R_BY_LEN
    for bits, c in terms.items():
        s = (gbits & bits).bit_count()
        if not (s & 1):
            v = get(bits)
            out[bits] = c if v is None else v + c
            continue
        cc = c * ct
        v = get(bits)
        out[bits] = cc if v is None else v + cc
        par = 0
        for mask in below:
            par ^= (bits & mask).bit_count() & 1
        nbits = bits ^ gbits
        e = (
            1
            + rg
            + rph[bits.bit_count() & 3]
            - rph[nbits.bit_count() & 3]
            + 2 * par
        ) & 3
        sc = c * st if e == 0 else -c * st
        v = get(nbits)
        out[nbits] = sc if v is None else v + sc
    dropped_small = 0
    dropped_long = 0
    if wstar is None:
        kept = {}
        for bits, v in out.items():
            if v == 0.0 or abs(v) < eps:
                dropped_small += 1
            else:
                kept[bits] = v
    else:
        kept = {}
        for bits, v in out.items():
            if bits.bit_count() > wstar:
                dropped_long += 1
            elif v == 0.0 or abs(v) < eps:
                dropped_small += 1
            else:
                kept[bits] = v
    return kept, dropped_small, dropped_long


def apply_gate_adjoint(
    opsum: OperatorSum,
    generator: MajoranaMonomial,
    theta: float,
    policy: TruncationPolicy,
) -> OperatorSum:
    """Conjugate the sum by one gate, exp(+i theta M/2) (.) exp(-i theta M/2)."""
    if generator.modes != opsum.modes:
        raise DimensionMismatchError(
            f"{generator.modes}-mode generator applied to {opsum.modes}-mode sum"
        )
    if generator.length % 2:
        raise ContractViolationError(
            f"gate generator {generator} has odd length; gates must be even"
        )
    new_terms, _, _ = _apply_gate_bits(
        dict(opsum.items_bits()),
        generator.bits,
        theta,
        policy.coeff_threshold,
        policy.length_cutoff,
    )
    return OperatorSum(opsum.modes, new_terms)


def propagate(
    ham: OperatorSum,
    circuit: Circuit,
    policy: TruncationPolicy,
    record: PropagationRecord | None = None,
) -> OperatorSum:
    """Back-propagate the sum through the whole circuit (gates L down to 1).

    The result approximates U^dag H U, exactly so when the policy disables
    both filters.  All gate angles are resolved up front; a missing
    parameter raises before any work is done.
    """
    if circuit.modes != ham.modes:
        raise DimensionMismatchError(
            f"{circuit.modes}-mode circuit applied to {ham.modes}-mode sum"
        )
    angles = circuit.resolved_angles()
    eps = policy.coeff_threshold
    wstar = policy.length_cutoff
    terms = dict(ham.items_bits())
    for j in range(len(circuit.gates) - 1, -1, -1):
        gate = circuit.gates[j]
        if gate.generator.length % 2:
            raise ContractViolationError(f"odd generator {gate.generator} in circuit")
        before = len(terms)
        terms, n_small, n_long = _apply_gate_bits(
            terms, gate.generator.bits, angles[j], eps, wstar
        )
        if record is not None:
            record.steps.append(
                StepStats(
                    gate_index=j + 1,
                    generator=str(gate.generator),
                    terms_before=before,
                    terms_after=len(terms),
                    dropped_small=n_small,
                    dropped_long=n_long,
                )
            )
    return OperatorSum(ham.modes, terms)


def conjugate_state_sum(
    state_sum: OperatorSum,
    circuit: Circuit,
    policy: TruncationPolicy,
) -> OperatorSum:
    """Forward (Schroedinger-side) conjugation U (.) U^dag of a state expansion.

    Gates are folded in application order 1..L; each is the adjoint rule at
    the negated angle.  Used for gradient scoring against evolved states.
    """
    if circuit.modes != state_sum.modes:
        raise DimensionMismatchError("mode counts differ")
    angles = circuit.resolved_angles()
    eps = policy.coeff_threshold
    wstar = policy.length_cutoff
    terms = dict(state_sum.items_bits())
    for j, gate in enumerate(circuit.gates):
        terms, _, _ = _apply_gate_bits(terms, gate.generator.bits, -angles[j], eps, wstar)
    return OperatorSum(state_sum.modes, terms)


def random_unstructured_circuit(
    modes: int,
    gate_count: int,
    max_generator_length: int,
    angle_range: float,
    seed: int,
) -> Circuit:
    """Circuit with generators uniform over even monomials of length <= k*.

    The identity is excluded; each generator is drawn uniformly from the
    pool of all even-length monomials up to `max_generator_length`, and each
    angle uniformly from [-angle_range, angle_range].
    """
    kstar = max_generator_length
    if kstar % 2 or not 2 <= kstar <= 2 * modes:
        raise ValueError(
            f"max generator length must be even and in 2..{2 * modes}, got {kstar}"
        )
    lengths = list(range(2, kstar + 1, 2))
    counts = [comb(2 * modes, ell) for ell in lengths]
    total = sum(counts)
    weights = [c / total for c in counts]
    rng = spawn_generator(seed, "unstructured-circuit")
    circuit = Circuit(modes)
    for _ in range(gate_count):
        ell = lengths[rng.choice(len(lengths), p=weights)]
        idx = rng.choice(2 * modes, size=ell, replace=False)
        bits = 0
        for i in idx:
            bits |= 1 << int(i)
        theta = float(rng.uniform(-angle_range, angle_range))
        circuit.gates.append(Gate(MajoranaMonomial(bits, modes), angle=theta))
    return circuit


# -- .majc text format -------------------------------------------------------


def _strip_comment(raw: str) -> str:
    cut = raw.find("#")
    return raw if cut < 0 else raw[:cut]


def parse_circuit(text: str, source: str = "<string>") -> Circuit:
    """Parse the `.majc` format: header, `gate` lines, `param` lines."""
    circuit = None
    param_uses: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw).strip()
        if not body:
            continue
        fields = body.split()
        if circuit is None:
            if len(fields) != 2 or fields[0] != "modes":
                raise ParseError("expected header `modes N`", source, lineno)
            try:
                modes = int(fields[1])
            except ValueError:
                raise ParseError(f"bad mode count {fields[1]!r}", source, lineno) from None
            if modes < 1:
                raise ParseError(f"mode count must be positive, got {modes}", source, lineno)
            circuit = Circuit(modes)
            continue
        if fields[0] == "gate":
            if len(fields) != 3:
                raise ParseError("expected `gate [i,...] <angle>|@name`", source, lineno)
            mono = parse_monomial(fields[1], circuit.modes, source=source, line=lineno)
            try:
                if fields[2].startswith("@"):
                    name = fields[2][1:]
                    if not name:
                        raise ParseError("empty parameter name", source, lineno)
                    gate = Gate(mono, param=name)
                    param_uses.setdefault(name, lineno)
                else:
                    gate = Gate(mono, angle=float(fields[2]))
            except ParseError:
                raise
            except ValueError as exc:
                raise ParseError(str(exc), source, lineno) from None
            circuit.gates.append(gate)
        elif fields[0] == "param":
            if len(fields) != 3:
                raise ParseError("expected `param <name> <value>`", source, lineno)
            try:
                circuit.parameters[fields[1]] = float(fields[2])
            except ValueError:
                raise ParseError(f"bad parameter value {fields[2]!r}", source, lineno) from None
        else:
            raise ParseError(f"unknown directive {fields[0]!r}", source, lineno)
    if circuit is None:
        raise ParseError("empty circuit file", source)
    for name, lineno in param_uses.items():
        if name not in circuit.parameters:
            raise ParseError(f"parameter {name!r} used but never defined", source, lineno)
    return circuit


def format_circuit(circuit: Circuit) -> str:
    lines = [f"modes {circuit.modes}"]
    for gate in circuit.gates:
        mono = render_monomial_bits(gate.generator.bits)
        if gate.param is not None:
            lines.append(f"gate {mono} @{gate.param}")
        else:
            lines.append(f"gate {mono} {gate.angle:.17g}")
    for name in sorted(circuit.parameters):
        lines.append(f"param {name} {circuit.parameters[name]:.17g}")
    return "\n".join(lines) + "\n"


def read_circuit(path) -> Circuit:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_circuit(fh.read(), source=str(path))


def write_circuit(path, circuit: Circuit) -> None:
    text = format_circuit(circuit)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
