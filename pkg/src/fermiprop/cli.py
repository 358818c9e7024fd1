"""Command-line front end tying the file formats to the engines.

Exit codes: 0 success, 2 input/parse error, 3 numeric contract violation,
4 resource ceiling.  All randomness flows from --seed through labelled
SeedSequence streams, so reruns with identical flags reproduce results
bit for bit regardless of --threads.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import oracle
from .adapt import AdaptConfig, GatePool, adapt_run, state_error_bound
from .errors import (
    NumericContractError,
    ParseError,
    ResourceCeilingError,
)
from .expectation import FockState, expectation
from .instances import random_even_observable
from .opsum import read_hamiltonian
from .propagation import (
    Circuit,
    Gate,
    PropagationRecord,
    TruncationPolicy,
    propagate,
    random_unstructured_circuit,
    read_circuit,
    write_circuit,
)
from .seeding import spawn_generator
from .surrogate import build_surrogate, evaluate
from .theory import format_transition_csv


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _load_fock(value: str) -> FockState:
    if value and set(value) <= {"0", "1"}:
        return FockState.from_string(value)
    with open(value, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            body = raw.split("#", 1)[0].strip()
            if body:
                return FockState.from_string(body, source=value, line=lineno)
    raise ParseError("no Fock bitstring found", value)


def _policy(args, with_sine: bool = False) -> TruncationPolicy:
    return TruncationPolicy(
        coeff_threshold=args.eps,
        length_cutoff=args.wstar,
        sine_cutoff=args.sine_cutoff if with_sine else None,
    )


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


# -- subcommands ---------------------------------------------------------------


def cmd_propagate(args) -> int:
    ham = read_hamiltonian(args.hamiltonian)
    circuit = read_circuit(args.circuit)
    phi = _load_fock(args.fock)
    record = PropagationRecord()
    result = propagate(ham, circuit, _policy(args), record)
    value = expectation(result, phi)
    print(f"expectation {_fmt(value)}")
    print(f"final_terms {len(result)}")
    small, long_ = record.total_dropped
    print(f"dropped_small_total {small}")
    print(f"dropped_long_total {long_}")
    for step, stats in enumerate(record.steps, start=1):
        print(
            f"step {step} gate {stats.gate_index} {stats.generator} "
            f"terms {stats.terms_before}->{stats.terms_after} "
            f"dropped_small {stats.dropped_small} dropped_long {stats.dropped_long}"
        )
    if args.out:
        lines = ["step,gate,terms_before,terms_after,dropped_small,dropped_long"]
        for step, stats in enumerate(record.steps, start=1):
            lines.append(
                f"{step},{stats.gate_index},{stats.terms_before},"
                f"{stats.terms_after},{stats.dropped_small},{stats.dropped_long}"
            )
        _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def cmd_surrogate_eval(args) -> int:
    ham = read_hamiltonian(args.hamiltonian)
    circuit = read_circuit(args.circuit)
    phi = _load_fock(args.fock)
    t0 = time.perf_counter()
    model = build_surrogate(ham, circuit, _policy(args, with_sine=True))
    t1 = time.perf_counter()
    value = evaluate(model, circuit.parameters, phi)
    t2 = time.perf_counter()
    print(f"expectation {_fmt(value)}")
    print(f"paths {model.path_count}")
    print(f"monomials {model.monomial_count}")
    print(f"build_seconds {t1 - t0:.6f}")
    print(f"eval_seconds {t2 - t1:.6f}")
    if args.out:
        _write_or_print(model.dump_text(), args.out)
    return 0


def cmd_adapt(args) -> int:
    ham = read_hamiltonian(args.hamiltonian)
    phi = _load_fock(args.fock)
    if args.pool:
        pool = GatePool.from_file(args.pool, ham.modes)
    else:
        pool = GatePool.default(ham.modes, args.pool_max_length)
    config = AdaptConfig(
        max_gates=args.max_gates,
        gradient_floor=args.gradient_floor,
        energy_tolerance=args.energy_tolerance,
        sweep_limit=args.sweep_limit,
        truncation=_policy(args),
        seed=args.seed,
        threads=args.threads,
    )
    circuit, trace = adapt_run(ham, phi, pool, config)
    print(f"initial_energy {_fmt(trace.initial_energy)}")
    final = trace.records[-1].energy if trace.records else trace.initial_energy
    print(f"final_energy {_fmt(final)}")
    print(f"gates {len(circuit.gates)}")
    print(f"stop_reason {trace.stop_reason}")
    e0 = e1 = None
    if args.e0 is not None and args.e1 is not None:
        e0, e1 = args.e0, args.e1
    elif ham.modes <= args.oracle_ceiling:
        eig = oracle.exact_eigensystem(ham, args.oracle_ceiling)
        e0, e1 = eig.e0, eig.e1
    if e0 is not None:
        print(f"e0 {_fmt(e0)}")
        print(f"e1 {_fmt(e1)}")
        gap = e1 - e0
        if gap <= 0:
            print("spectral_gap 0 (degenerate ground space; bound unavailable)")
        else:
            p = (final - e0) / gap
            print(f"p {_fmt(p)}")
            if 0.0 <= p <= 1.0:
                print(f"state_error_bound {_fmt(state_error_bound(p))}")
            else:
                print("state_error_bound unavailable (p outside [0,1])")
    if args.out:
        _write_or_print(trace.to_csv(), args.out)
    if args.circuit_out:
        write_circuit(args.circuit_out, circuit)
    return 0


def cmd_theory(args) -> int:
    if args.modes > 200:
        raise ValueError(f"mode count {args.modes} above the supported 200")
    if args.k % 2 or not 2 <= args.k <= 2 * args.modes:
        raise ValueError(f"gate length k must be even and in 2..{2 * args.modes}")
    _write_or_print(format_transition_csv(args.modes, args.k), args.out)
    return 0


def cmd_oracle_check(args) -> int:
    ham = read_hamiltonian(args.hamiltonian)
    circuit = read_circuit(args.circuit)
    phi = _load_fock(args.fock)
    value = oracle.exact_expectation(ham, circuit, phi, args.oracle_ceiling)
    print(f"expectation {_fmt(value)}")
    return 0


def _randomized_copy(circuit: Circuit, rng) -> Circuit:
    out = Circuit(circuit.modes)
    for gate in circuit.gates:
        theta = float(rng.uniform(-0.1, 0.1))
        out.gates.append(Gate(gate.generator, angle=theta))
    return out


def cmd_wstar_sweep(args) -> int:
    ham = read_hamiltonian(args.hamiltonian)
    circuit = read_circuit(args.circuit)
    phi = _load_fock(args.fock)
    targets = [circuit]
    if args.randomize:
        targets = [
            _randomized_copy(circuit, spawn_generator(args.seed, f"wstar-randomize-{i}"))
            for i in range(args.randomize)
        ]
    references = []
    for target in targets:
        if args.reference is not None and not args.randomize:
            references.append(args.reference)
        else:
            references.append(oracle.exact_expectation(ham, target, phi, args.oracle_ceiling))
    cutoffs = list(range(2, 2 * ham.modes + 1, 2))
    if args.randomize:
        lines = ["wstar,abs_error_mean,abs_error_min,abs_error_max"]
    else:
        lines = ["wstar,energy,abs_error"]
    for wstar in cutoffs:
        policy = TruncationPolicy(coeff_threshold=args.eps, length_cutoff=wstar)
        errors = []
        energy = None
        for target, ref in zip(targets, references):
            energy = expectation(propagate(ham, target, policy), phi)
            errors.append(abs(energy - ref))
        if args.randomize:
            mean = sum(errors) / len(errors)
            lines.append(f"{wstar},{_fmt(mean)},{_fmt(min(errors))},{_fmt(max(errors))}")
        else:
            lines.append(f"{wstar},{_fmt(energy)},{_fmt(errors[0])}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def cmd_bench(args) -> int:
    circuit = random_unstructured_circuit(
        args.modes, args.gates, args.kstar, 3.141592653589793, args.seed
    )
    ham = random_even_observable(args.modes, 3, 4, args.seed)
    phi = FockState(tuple(i % 2 for i in range(args.modes)))
    policy = _policy(args, with_sine=True)
    t0 = time.perf_counter()
    result = propagate(ham, circuit, policy)
    value = expectation(result, phi)
    t1 = time.perf_counter()
    named = circuit.with_named_parameters()
    model = build_surrogate(ham, named, policy)
    t2 = time.perf_counter()
    reps = 20
    for _ in range(reps):
        surrogate_value = evaluate(model, named.parameters, phi)
    t3 = time.perf_counter()
    print(f"numeric_expectation {_fmt(value)}")
    print(f"surrogate_expectation {_fmt(surrogate_value)}")
    print(f"numeric_terms {len(result)}")
    print(f"surrogate_paths {model.path_count}")
    print(f"propagate_seconds {t1 - t0:.6f}")
    print(f"surrogate_build_seconds {t2 - t1:.6f}")
    print(f"surrogate_eval_seconds {(t3 - t2) / reps:.6f}")
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fermiprop",
        description="Fermionic circuit expectation values via Majorana-monomial back-propagation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, fock=False, ham=False, circ=False, sine=False):
        p.add_argument("--eps", type=float, default=0.0, help="coefficient threshold")
        p.add_argument("--wstar", type=int, default=None, help="monomial length cutoff")
        if sine:
            p.add_argument("--sine-cutoff", dest="sine_cutoff", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument(
            "--oracle-ceiling", dest="oracle_ceiling", type=int, default=oracle.DEFAULT_CEILING
        )
        if ham:
            p.add_argument("--hamiltonian", required=True, help=".majh file")
        if circ:
            p.add_argument("--circuit", required=True, help=".majc file")
        if fock:
            p.add_argument("--fock", required=True, help="bitstring like 1100, or a file")

    p = sub.add_parser("propagate", help="numeric back-propagation + expectation")
    common(p, fock=True, ham=True, circ=True)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("surrogate-eval", help="build the symbolic model and evaluate it")
    common(p, fock=True, ham=True, circ=True, sine=True)
    p.set_defaults(func=cmd_surrogate_eval)

    p = sub.add_parser("adapt", help="adaptive ground-state circuit construction")
    common(p, fock=True, ham=True)
    p.add_argument("--pool", default=None, help="pool file (default: lengths 2 and 4)")
    p.add_argument("--pool-max-length", dest="pool_max_length", type=int, default=4)
    p.add_argument("--max-gates", dest="max_gates", type=int, default=40)
    p.add_argument("--gradient-floor", dest="gradient_floor", type=float, default=1e-6)
    p.add_argument(
        "--energy-tolerance", dest="energy_tolerance", type=float, default=1e-9
    )
    p.add_argument("--sweep-limit", dest="sweep_limit", type=int, default=4)
    p.add_argument("--e0", type=float, default=None, help="reference ground energy")
    p.add_argument("--e1", type=float, default=None, help="reference first excited energy")
    p.add_argument("--circuit-out", dest="circuit_out", default=None, help=".majc output")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("theory", help="transition/pairing probability table")
    common(p)
    p.add_argument("--modes", type=int, required=True)
    p.add_argument("--k", type=int, default=4, help="gate generator length")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("oracle-check", help="dense statevector reference value")
    common(p, fock=True, ham=True, circ=True)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("wstar-sweep", help="error vs length cutoff table")
    common(p, fock=True, ham=True, circ=True)
    p.add_argument("--reference", type=float, default=None, help="reference energy")
    p.add_argument(
        "--randomize",
        type=int,
        default=0,
        help="instead sweep over this many angle randomizations in [-0.1, 0.1]",
    )
    p.set_defaults(func=cmd_wstar_sweep)

    p = sub.add_parser("bench", help="time the engines on a random instance")
    common(p, sine=True)
    p.add_argument("--modes", type=int, default=8)
    p.add_argument("--gates", type=int, default=20)
    p.add_argument("--kstar", type=int, default=4)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericContractError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except ResourceCeilingError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
