"""Adaptive ground-state circuit construction.

The loop scores a pool of candidate generators by the energy derivative of
a trial rotation appended to the circuit, appends the best one starting at
the exact one-parameter optimum, then re-optimizes all angles with
rotosolve sweeps (closed-form per-parameter minimization of
a + b cos(theta) + c sin(theta)).

The (a, b, c) restrictions are computed without symbolic path models: the
observable is back-propagated through the gates *after* the one being
tuned, the state expansion is conjugated forward through the gates before
it, and the two meet in a single trace.  For a distinct parameter per gate
this reproduces the three-point evaluation identity exactly.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

from .algebra import (
    _R_BY_LEN,
    MajoranaMonomial,
    bitvec_lex_key,
    parse_monomial,
    product_bits_sign,
)
from .errors import ContractViolationError, DimensionMismatchError, ParseError
from .expectation import FockState, expectation, fock_operator_sum
from .opsum import OperatorSum
from .propagation import (
    Circuit,
    Gate,
    TruncationPolicy,
    _apply_gate_bits,
    conjugate_state_sum,
    propagate,
)


@dataclass
class GatePool:
    """Candidate generators for the adaptive loop."""

    candidates: list[MajoranaMonomial]

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("gate pool is empty")
        modes = self.candidates[0].modes
        seen = set()
        for cand in self.candidates:
            if cand.modes != modes:
                raise DimensionMismatchError("pool candidates mix mode counts")
            w = cand.length
            if w < 2 or w % 2:
                raise ValueError(f"pool candidate {cand} must have even length >= 2")
            if cand.bits in seen:
                raise ValueError(f"duplicate pool candidate {cand}")
            seen.add(cand.bits)

    @property
    def modes(self) -> int:
        return self.candidates[0].modes

    @classmethod
    def default(cls, modes: int, max_length: int = 4) -> GatePool:
        """All even monomials of length 2..max_length, identity excluded."""
        if max_length % 2 or not 2 <= max_length <= 2 * modes:
            raise ValueError(f"bad pool length bound {max_length}")
        cands = []
        for ell in range(2, max_length + 1, 2):
            for combo in combinations(range(2 * modes), ell):
                bits = 0
                for i in combo:
                    bits |= 1 << i
                cands.append(MajoranaMonomial(bits, modes))
        return cls(cands)

    @classmethod
    def from_file(cls, path, modes: int) -> GatePool:
        """One monomial per line, `#` comments allowed."""
        cands = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                cut = raw.find("#")
                body = (raw if cut < 0 else raw[:cut]).strip()
                if not body:
                    continue
                cands.append(parse_monomial(body, modes, source=str(path), line=lineno))
        if not cands:
            raise ParseError("pool file holds no monomials", str(path))
        return cls(cands)


@dataclass(frozen=True, slots=True)
class AdaptConfig:
    max_gates: int = 40
    gradient_floor: float = 1e-6
    energy_tolerance: float = 1e-9
    sweep_limit: int = 4
    truncation: TruncationPolicy = TruncationPolicy()
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.max_gates < 1:
            raise ValueError("max_gates must be >= 1")
        if self.gradient_floor < 0 or self.energy_tolerance < 0:
            raise ValueError("tolerances must be >= 0")
        if self.sweep_limit < 1:
            raise ValueError("sweep_limit must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    generator: MajoranaMonomial
    gradient: float
    energy: float
    gate_count: int
    parameters: dict[str, float]


@dataclass
class AdaptTrace:
    initial_energy: float
    records: list[IterationRecord] = field(default_factory=list)
    stop_reason: str = ""

    def energies(self) -> list[float]:
        return [r.energy for r in self.records]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "generator", "grad", "energy", "gates"])
        for r in self.records:
            writer.writerow(
                [
                    r.iteration,
                    str(r.generator),
                    f"{r.gradient:.17g}",
                    f"{r.energy:.17g}",
                    r.gate_count,
                ]
            )
        return buf.getvalue()


def state_error_bound(p: float) -> float:
    """Upper bound 1 - sqrt(1 - p) on 1 - |<psi|psi_0>| from the relative error p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"relative error p must lie in [0, 1], got {p}")
    return 1.0 - math.sqrt(1.0 - p)


# -- restriction machinery ----------------------------------------------------


def _split_restriction(
    suffix: dict[int, float], gbits: int, state: dict[int, float]
) -> tuple[float, float, float]:
    """(a, b, c) of E(theta) = a + b cos + c sin for one gate position.

    `suffix` is the observable back-propagated through all later gates;
    `state` is the (2^N-scaled) initial-state expansion conjugated forward
    through all earlier gates.
    """
    a = b = c = 0.0
    get = state.get
    for bits, coeff in suffix.items():
        s = (gbits & bits).bit_count()
        if not (s & 1):
            v = get(bits)
            if v is not None:
                a += coeff * v
            continue
        v = get(bits)
        if v is not None:
            b += coeff * v
        nbits = bits ^ gbits
        v = get(nbits)
        if v is not None:
            _, sign = product_bits_sign(gbits, bits)
            c += coeff * sign * v
    return a, b, c


def _numeric_energy(
    ham: OperatorSum, circuit: Circuit, phi: FockState, policy: TruncationPolicy
) -> float:
    return expectation(propagate(ham, circuit, policy), phi)


def forward_state_sum(
    phi: FockState, circuit: Circuit, policy: TruncationPolicy
) -> OperatorSum:
    """2^N U rho U^dag in the monomial basis, truncated like the engine."""
    sigma = fock_operator_sum(phi, policy.length_cutoff)
    return conjugate_state_sum(sigma, circuit, policy)


def candidate_gradient(
    ham: OperatorSum,
    circuit: Circuit,
    candidate: MajoranaMonomial,
    phi: FockState,
    policy: TruncationPolicy = TruncationPolicy(),
    state: OperatorSum | None = None,
) -> float:
    """dE/dtheta at theta = 0 for a trial rotation appended after the circuit.

    Equals the sine coefficient c of the trig restriction, i.e.
    (E(pi/2) - E(-pi/2)) / 2.
    """
    if candidate.length % 2:
        raise ContractViolationError(f"candidate {candidate} has odd length")
    if state is None:
        state = forward_state_sum(phi, circuit, policy)
    ham_items = list(ham.items_bits())
    _, _, c = _split_restriction(dict(ham_items), candidate.bits, dict(state.items_bits()))
    return c


def select_gate(gradients: dict[MajoranaMonomial, float]) -> MajoranaMonomial:
    """Candidate with maximal |gradient|; ties to the bitvec-lex smallest."""
    if not gradients:
        raise ValueError("no candidates to select from")
    best = None
    best_abs = -1.0
    best_key = None
    for mono, g in gradients.items():
        mag = abs(g)
        key = bitvec_lex_key(mono.bits, mono.modes)
        if mag > best_abs or (mag == best_abs and key < best_key):
            best, best_abs, best_key = mono, mag, key
    return best


def _pool_gradients(
    ham_items: list[tuple[int, float]],
    candidates: list[MajoranaMonomial],
    state: dict[int, float],
) -> list[float]:
    rph = _R_BY_LEN
    get = state.get
    out = []
    for cand in candidates:
        gbits = cand.bits
        glen_r = rph[gbits.bit_count() & 3]
        below = []
        rest = gbits
        while rest:
            low = rest & -rest
            below.append(low - 1)
            rest ^= low
        total = 0.0
        for bits, coeff in ham_items:
            s = (gbits & bits).bit_count()
            if not (s & 1):
                continue
            nbits = bits ^ gbits
            v = get(nbits)
            if v is None:
                continue
            par = 0
            for mask in below:
                par ^= (bits & mask).bit_count() & 1
            e = (
                1 + glen_r + rph[bits.bit_count() & 3] - rph[nbits.bit_count() & 3] + 2 * par
            ) & 3
            total += coeff * v if e == 0 else -coeff * v
        out.append(total)
    return out


def _score_pool(
    ham: OperatorSum,
    candidates: list[MajoranaMonomial],
    state: OperatorSum,
    threads: int,
) -> dict[MajoranaMonomial, float]:
    ham_items = list(ham.items_bits())
    state_terms = dict(state.items_bits())
    if threads <= 1 or len(candidates) < 64:
        values = _pool_gradients(ham_items, candidates, state_terms)
    else:
        chunks = [candidates[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_pool_gradients, ham_items, chunk, state_terms)
                for chunk in chunks
            ]
            parts = [f.result() for f in futures]
        values = [0.0] * len(candidates)
        for t, part in enumerate(parts):
            for i, val in enumerate(part):
                values[t + i * threads] = val
    return dict(zip(candidates, values))


# -- rotosolve ----------------------------------------------------------------


def optimize_parameters(
    circuit: Circuit,
    ham: OperatorSum,
    phi: FockState,
    policy: TruncationPolicy,
    config: AdaptConfig,
) -> tuple[Circuit, float]:
    """Rotosolve sweeps over all named parameters.

    Each parameter is set to the exact minimizer theta* = atan2(-c, -b) of
    its trig restriction; sweeps repeat until the energy improvement drops
    below config.energy_tolerance or config.sweep_limit is reached.  The
    returned energy is the propagation-engine value at the final parameters
    under the given policy.  Circuits where one name drives several gates
    fall back to per-parameter grid minimization.
    """
    circuit = circuit.copy()
    if not circuit.gates:
        return circuit, expectation(ham, phi)
    names = [g.param for g in circuit.gates if g.param is not None]
    if not names:
        return circuit, _numeric_energy(ham, circuit, phi, policy)
    if len(set(names)) != len(names):
        return _optimize_tied(circuit, ham, phi, policy, config)

    eps = policy.coeff_threshold
    wstar = policy.length_cutoff
    state0 = dict(fock_operator_sum(phi, wstar).items_bits())
    ham_terms = dict(ham.items_bits())
    gates = circuit.gates
    nlast = max(j for j, g in enumerate(gates) if g.param is not None)
    energy = _numeric_energy(ham, circuit, phi, policy)
    for _ in range(config.sweep_limit):
        angles = circuit.resolved_angles()
        suffix = [None] * (len(gates) + 1)
        suffix[len(gates)] = ham_terms
        for j in range(len(gates), 0, -1):
            suffix[j - 1], _, _ = _apply_gate_bits(
                suffix[j], gates[j - 1].generator.bits, angles[j - 1], eps, wstar
            )
        rho = state0
        sweep_energy = None
        for j, gate in enumerate(gates):
            gbits = gate.generator.bits
            if gate.param is not None:
                a, b, c = _split_restriction(suffix[j + 1], gbits, rho)
                if b == 0.0 and c == 0.0:
                    theta = circuit.parameters[gate.param]
                    value = a
                else:
                    theta = math.atan2(-c, -b)
                    circuit.parameters[gate.param] = theta
                    value = a - math.hypot(b, c)
                if j == nlast:
                    sweep_energy = value
            else:
                theta = gate.angle
            rho, _, _ = _apply_gate_bits(rho, gbits, -theta, eps, wstar)
        improvement = energy - sweep_energy
        energy = sweep_energy
        if improvement < config.energy_tolerance:
            break
    return circuit, _numeric_energy(ham, circuit, phi, policy)


def _optimize_tied(
    circuit: Circuit,
    ham: OperatorSum,
    phi: FockState,
    policy: TruncationPolicy,
    config: AdaptConfig,
) -> tuple[Circuit, float]:
    """Grid fallback for circuits with shared parameter names."""

    def energy_at(name, theta):
        circuit.parameters[name] = theta
        return _numeric_energy(ham, circuit, phi, policy)

    names = sorted({g.param for g in circuit.gates if g.param is not None})
    energy = _numeric_energy(ham, circuit, phi, policy)
    for _ in range(config.sweep_limit):
        before = energy
        for name in names:
            grid = [-math.pi + i * (2 * math.pi / 64) for i in range(64)]
            best_theta = min(grid, key=lambda t: energy_at(name, t))
            lo, hi = best_theta - math.pi / 32, best_theta + math.pi / 32
            for _ in range(40):
                m1 = lo + (hi - lo) / 3
                m2 = hi - (hi - lo) / 3
                if energy_at(name, m1) <= energy_at(name, m2):
                    hi = m2
                else:
                    lo = m1
            best_theta = (lo + hi) / 2
            energy = energy_at(name, best_theta)
        if before - energy < config.energy_tolerance:
            break
    return circuit, energy


# -- the adaptive loop --------------------------------------------------------


def adapt_run(
    ham: OperatorSum,
    phi: FockState,
    pool: GatePool,
    config: AdaptConfig,
) -> tuple[Circuit, AdaptTrace]:
    """Grow a circuit gate by gate until a stopping rule fires.

    Per iteration: score the pool by trial gradient, stop if the best
    magnitude is below gradient_floor, otherwise append that generator with
    a fresh parameter starting at its one-dimensional optimum, re-optimize
    everything, and record the engine-evaluated energy.  An iteration that
    fails to improve the energy by energy_tolerance is rolled back.
    Deterministic given the inputs and config.
    """
    for mono, _ in ham:
        if mono.length % 2:
            raise ContractViolationError(
                f"observable term {mono} has odd length; adapt needs even sums"
            )
    if pool.modes != ham.modes or phi.modes != ham.modes:
        raise DimensionMismatchError("Hamiltonian, state and pool mode counts differ")
    policy = config.truncation
    circuit = Circuit(ham.modes)
    current = expectation(ham, phi)
    trace = AdaptTrace(initial_energy=current)
    stop = "max_gates"
    for iteration in range(1, config.max_gates + 1):
        sigma_f = forward_state_sum(phi, circuit, policy)
        last_gen = circuit.gates[-1].generator if circuit.gates else None
        candidates = [c for c in pool.candidates if c != last_gen]
        if not candidates:
            stop = "pool_exhausted"
            break
        grads = _score_pool(ham, candidates, sigma_f, config.threads)
        best = select_gate(grads)
        grad = grads[best]
        if abs(grad) < config.gradient_floor:
            stop = "gradient_floor"
            break
        a, b, c = _split_restriction(
            dict(ham.items_bits()), best.bits, dict(sigma_f.items_bits())
        )
        theta0 = math.atan2(-c, -b) if (b, c) != (0.0, 0.0) else 0.0
        name = f"t{len(circuit.gates) + 1}"
        circuit.gates.append(Gate(best, param=name))
        circuit.parameters[name] = theta0
        circuit, energy = optimize_parameters(circuit, ham, phi, policy, config)
        if current - energy < config.energy_tolerance:
            circuit.gates.pop()
            circuit.parameters.pop(name, None)
            stop = "stalled"
            break
        current = energy
        trace.records.append(
            IterationRecord(
                iteration=iteration,
                generator=best,
                gradient=grad,
                energy=energy,
                gate_count=len(circuit.gates),
                parameters=dict(circuit.parameters),
            )
        )
    trace.stop_reason = stop
    return circuit, trace
