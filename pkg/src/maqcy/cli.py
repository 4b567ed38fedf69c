"""Command-line entry point: ``maqcy {compile,simulate,verify,estimate,qft3-demo}``.

Outputs are tab-separated with a one-line header.  Exit status: 0 success,
1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .blockade import BlockadeError
from .checks import run_checks
from .compiler import (CircuitParseError, CompileError, compile_circuit, estimate_resources,
                       parse_circuit, qft3_reference_schedule, run_schedule, validate_schedule)
from .noise import NoiseError, NoiseParams, haar_average_fidelity, load_params
from .oracle import OracleError, basis_state, qft_matrix
from .schedule import TraceError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _tsv(header, rows) -> str:
    lines = ["\t".join(header)] + ["\t".join(str(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def _read(path: str | None, what: str) -> str:
    if not path:
        raise InputError(f"--{what} is required")
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} file: {exc.strerror}") from None


def _circuit(args):
    return parse_circuit(_read(args.circuit, "circuit"))


def _params(args) -> NoiseParams:
    return load_params(args.params) if args.params else NoiseParams()


def _sweep(spec: str) -> np.ndarray:
    try:
        lo, hi, steps = spec.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError:
        raise InputError("--p-sweep expects lo:hi:steps") from None
    if not (0 < lo <= hi < 1) or steps < 1:
        raise InputError("--p-sweep needs 0 < lo <= hi < 1 and steps >= 1")
    return np.geomspace(lo, hi, steps)


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _validated(schedule):
    issues = validate_schedule(schedule)
    if issues:
        for msg in issues:
            print(f"invalid schedule: {msg}", file=sys.stderr)
        return None
    return schedule


def cmd_compile(args) -> int:
    schedule = _validated(compile_circuit(_circuit(args)))
    if schedule is None:
        return EXIT_FAIL
    _write(schedule.to_trace(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.noise:
        if args.samples < 1:
            raise InputError("--samples must be >= 1")
        ps = _sweep(args.p_sweep) if args.p_sweep else np.array([_params(args).p])
        rows = []
        for i, p in enumerate(ps):
            mean, err = haar_average_fidelity(args.protocol, float(p), args.samples,
                                              seed=[args.seed, i], workers=args.workers)
            rows.append((_fmt(p), _fmt(mean), _fmt(err)))
        _write(_tsv(("p", "mean_F", "stderr"), rows), args.out)
        return EXIT_OK
    circuit = _circuit(args)
    schedule = _validated(compile_circuit(circuit))
    if schedule is None:
        return EXIT_FAIL
    dim = 2 ** circuit.qubit_count
    if not 0 <= args.input < dim:
        raise InputError(f"--input must be a basis index in 0..{dim - 1}")
    out = run_schedule(schedule, basis_state(args.input, circuit.qubit_count))
    rows = [(j, format(j, f"0{max(circuit.qubit_count, 1)}b"), _fmt(a.real), _fmt(a.imag),
             _fmt(abs(a))) for j, a in enumerate(out)]
    _write(_tsv(("index", "bits", "re", "im", "abs"), rows), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_checks(seed=args.seed, inject_failure=args.inject_failure)
    rows = [(r.name, f"{r.error:.3e}", f"{r.tolerance:.1e}", "pass" if r.passed else "FAIL")
            for r in results]
    _write(_tsv(("check", "max_error", "tolerance", "status"), rows), args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_estimate(args) -> int:
    params = _params(args)
    schedule = compile_circuit(_circuit(args))
    report = estimate_resources(schedule, params)
    rows = [("p", f"{params.p:.1g}"), ("p_exact", f"{params.p:.6e}"),
            ("gamma_per_s", f"{params.gamma:.6g}"),
            ("t_g_s", f"{params.t_g:.6g}")] + report.rows()
    _write(_tsv(("quantity", "value"), rows), args.out)
    return EXIT_OK


def cmd_qft3_demo(args) -> int:
    schedule = qft3_reference_schedule()
    issues = validate_schedule(schedule)
    oracle = qft_matrix(3)
    rows, worst = [], 0.0
    for j in range(8):
        out = run_schedule(schedule, basis_state(j, 3))
        infid = 1 - abs(np.vdot(oracle[:, j], out)) ** 2
        worst = max(worst, infid)
        rows.append((j, format(j, "03b"), f"{infid:.3e}"))
    _write(_tsv(("input", "bits", "infidelity"), rows), args.out)
    for msg in issues:
        print(f"invalid schedule: {msg}", file=sys.stderr)
    return EXIT_OK if worst < 1e-8 and not issues else EXIT_FAIL


COMMANDS = {"compile": cmd_compile, "simulate": cmd_simulate, "verify": cmd_verify,
            "estimate": cmd_estimate, "qft3-demo": cmd_qft3_demo}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maqcy", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--circuit", help="circuit file (one gate per line)")
    parser.add_argument("--params", help="key=value parameter presets file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--noise", action="store_true", help="Haar-averaged noisy translation")
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--p-sweep", help="geometric p grid lo:hi:steps")
    parser.add_argument("--protocol", choices=("qpair", "single_atom"), default="qpair")
    parser.add_argument("--input", type=int, default=0, help="computational basis input index")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--inject-failure", help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CircuitParseError as exc:
        print(str(exc), file=sys.stderr)
    except (InputError, NoiseError, CompileError, OracleError, TraceError, BlockadeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
