"""Command-line front end: ``cpgate {levels,truth-table,run,sweep,budget}``.

Frequencies are in units of g_b unless stated otherwise; ``--gb-si`` sets
g_b in s^-1 for reporting times in seconds. Exit codes: 0 success, 2 usage
or config error, 3 pulse-sequence error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from cpgate import analysis, device
from cpgate.dynamics import GateParams, ModelKind
from cpgate.hilbert import SQUID_LEVELS
from cpgate.protocol import (
    COMPUTATIONAL,
    apply_gate,
    build_schedule,
    gate_time,
    run_truth_table,
)
from cpgate.pulseseq import DEFAULT_GB_SI, CompileError, ParseError, load_sequence

EXIT_USAGE = 2
EXIT_SEQUENCE = 3
EXIT_NUMERICAL = 4

_PARAM_KEYS = {
    "ga": "g_a",
    "gb": "g_b",
    "delta_c": "delta_c",
    "omega13": "omega_13",
    "omega02": "omega_02",
    "omega12": "omega_12",
    "n_max": "n_max",
}


class UsageError(Exception):
    pass


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# --- gate parameter handling ------------------------------------------------


def _add_gate_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("gate parameters (units of g_b)")
    g.add_argument("--params", metavar="FILE", help="key = value file (ga, gb, delta_c, omega13, omega02, omega12, n_max)")
    g.add_argument("--ga", type=float)
    g.add_argument("--gb", type=float)
    g.add_argument("--delta-c", type=float)
    g.add_argument("--omega", type=float, help="set omega13 = omega02 = omega12")
    g.add_argument("--omega13", type=float)
    g.add_argument("--omega02", type=float, help="also sets omega12 unless given")
    g.add_argument("--omega12", type=float, help="also sets omega02 unless given")
    g.add_argument("--n-max", type=int)
    g.add_argument("--gb-si", type=float, default=DEFAULT_GB_SI, help="g_b in s^-1 (default 3e9)")


def _read_param_file(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read params file: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (s.strip() for s in line.partition("="))
        if not sep or key not in _PARAM_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown or malformed entry {line!r}")
        try:
            values[_PARAM_KEYS[key]] = int(value) if key == "n_max" else float(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: invalid value for {key}") from None
    return values


def gate_params_from_args(args) -> GateParams:
    values = _read_param_file(args.params) if args.params else {}
    if args.omega is not None:
        values.update(omega_13=args.omega, omega_02=args.omega, omega_12=args.omega)
    for flag, name in (("ga", "g_a"), ("gb", "g_b"), ("delta_c", "delta_c"),
                       ("omega13", "omega_13"), ("n_max", "n_max")):
        if getattr(args, flag) is not None:
            values[name] = getattr(args, flag)
    o02, o12 = args.omega02, args.omega12
    if o02 is not None:
        values["omega_02"] = o02
        values["omega_12"] = o02 if o12 is None else o12
    elif o12 is not None:
        values["omega_02"] = values["omega_12"] = o12
    if values.get("omega_02", 10.0) != values.get("omega_12", 10.0):
        raise UsageError("omega02 must equal omega12 (the simultaneous pulses share one duration)")
    if not args.gb_si > 0:
        raise UsageError("--gb-si must be positive")
    try:
        return GateParams(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


# --- subcommands ----------------------------------------------------------------


def cmd_levels(args) -> int:
    try:
        params, grid = device.load_device_config(args.config)
    except device.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        ls = device.eigenlevels(params, grid, k=args.levels)
    except device.WindowTooSmallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except device.NotConvergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(_dump({"coarse": exc.coarse.tolist(), "fine": exc.fine.tolist()}), file=sys.stderr)
        return EXIT_NUMERICAL
    table = device.transition_table(ls)
    named = {
        f"omega_{j}{i}": float(table[i, j])
        for i in range(min(args.levels, SQUID_LEVELS))
        for j in range(i + 1, min(args.levels, SQUID_LEVELS))
    }
    report = {
        "params": {
            "capacitance_f": params.capacitance_C,
            "inductance_h": params.inductance_L,
            "critical_current_a": params.critical_current_Ic,
            "bias_flux_phi0_fraction": params.bias_flux_Phix / device.PHI0,
            "beta_L": params.beta_L,
        },
        "energies_rad_s": ls.energies.tolist(),
        "transition_table_rad_s": table.tolist(),
        "transitions_rad_s": named,
        "convergence": {
            "max_rel_change_on_doubling": ls.convergence,
            "grid_points": grid.points,
            "window_phi0": grid.window_phi0,
            "ground_above_well_bottom_rad_s": ls.well_bottom,
        },
    }
    _emit(_dump(report), args.output)
    return 0


def cmd_truth_table(args) -> int:
    p = gate_params_from_args(args)
    model = ModelKind(args.model)
    table = run_truth_table(p, model)
    rows = []
    for row in table.rows:
        k = COMPUTATIONAL.index(row.label)
        sign = "-" if math.cos(row.phase) < 0 else ""
        rows.append(
            {
                "input": row.label,
                "maps_to": sign + row.label,
                "amplitudes": {lbl: _pair(a) for lbl, a in zip(COMPUTATIONAL, row.qubit_amplitudes)},
                "diagonal_magnitude": float(abs(row.qubit_amplitudes[k])),
                "phase": row.phase,
                "leakage": row.leakage,
            }
        )
    if args.format == "csv":
        lines = ["input,maps_to,phase,leakage," + ",".join(f"amp{l}_re,amp{l}_im" for l in COMPUTATIONAL)]
        for r in rows:
            amps = ",".join(f"{v:.12g}" for l in COMPUTATIONAL for v in r["amplitudes"][l])
            lines.append(f"{r['input']},{r['maps_to']},{r['phase']:.12g},{r['leakage']:.12g},{amps}")
        _emit("\n".join(lines) + "\n", args.output)
    else:
        _emit(_dump({"model": model.value, "rows": rows}), args.output)
    if model is ModelKind.IDEAL:
        target = np.diag([1, 1, 1, -1])
        if np.max(np.abs(table.matrix() - target)) > 1e-10:
            print("error: ideal truth table deviates from CP target", file=sys.stderr)
            return EXIT_NUMERICAL
    return 0


def _parse_state(args) -> np.ndarray:
    if (args.state is None) == (args.amplitudes is None):
        raise UsageError("give exactly one of --state or --amplitudes")
    if args.state is not None:
        amps = np.zeros(4, dtype=complex)
        amps[COMPUTATIONAL.index(args.state)] = 1
        return amps
    try:
        amps = np.array([complex(s.strip().replace(" ", "")) for s in args.amplitudes.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse amplitudes {args.amplitudes!r}") from None
    if amps.shape != (4,):
        raise UsageError("--amplitudes needs four comma-separated complex numbers")
    norm = np.linalg.norm(amps)
    if abs(norm - 1) > 1e-6:
        raise UsageError(f"amplitudes not normalized (norm {norm:.9g})")
    return amps / norm


def cmd_run(args) -> int:
    p = gate_params_from_args(args)
    amps = _parse_state(args)
    if args.seq:
        try:
            source = Path(args.seq).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read sequence: {exc}") from None
        schedule = load_sequence(source, p, args.gb_si)
    else:
        schedule = build_schedule(p)
    result = apply_gate(amps, p, args.model, schedule, norm_tol=1e-9)
    n_dim = p.n_max + 1
    final = {}
    for idx, a in enumerate(result.state.amplitudes):
        if abs(a) > 1e-12:
            k, rem = divmod(idx, SQUID_LEVELS * n_dim)
            l, n = divmod(rem, n_dim)
            final[f"{k}{l}|{n}"] = _pair(a)
    tau = schedule.duration
    report = {
        "model": ModelKind(args.model).value,
        "sequence": args.seq or "built-in",
        "input": {lbl: _pair(a) for lbl, a in zip(COMPUTATIONAL, amps)},
        "final_state": final,
        "qubit_amplitudes": {lbl: _pair(a) for lbl, a in zip(COMPUTATIONAL, result.qubit_amplitudes)},
        "ideal_target": {lbl: _pair(a) for lbl, a in zip(COMPUTATIONAL, result.ideal)},
        "overlap": _pair(result.overlap),
        "fidelity": result.fidelity,
        "leakage": max(0.0, 1 - float(np.sum(np.abs(result.qubit_amplitudes) ** 2))),
        "tau": tau,
        "tau_s": tau / args.gb_si,
        "tau_formula": gate_time(p),
    }
    _emit(_dump(report), args.output)
    return 0


def cmd_sweep(args) -> int:
    p = gate_params_from_args(args)
    if args.param != "omega12":
        raise UsageError("only --param omega12 is supported")
    if args.start <= 0:
        raise UsageError("--from must be positive")
    if not args.start < args.stop:
        raise UsageError("--from must be smaller than --to")
    if args.steps < 2:
        raise UsageError("--steps must be >= 2")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    grid = np.linspace(args.start, args.stop, args.steps) * p.g_b
    rows = analysis.sweep_rows(grid, p, args.full, args.samples, args.seed, args.jobs)
    _emit(analysis.sweep_csv(rows, args.full), args.output)
    return 0


def cmd_budget(args) -> int:
    p = gate_params_from_args(args)
    if args.gamma3_inv is not None and not args.gamma3_inv > 0:
        raise UsageError("--gamma3-inv must be positive")
    budget = analysis.error_budget(p, args.gamma3_inv, args.samples, args.seed, shift=args.shift)
    _emit(_dump(budget), args.output)
    return 0


# --- entry point --------------------------------------------------------------


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("CPGATE_JOBS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpgate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    lv = sub.add_parser("levels", help="rf-SQUID spectrum from a device config")
    lv.add_argument("config")
    lv.add_argument("--levels", type=int, default=4)
    lv.add_argument("--output", "-o")
    lv.set_defaults(func=cmd_levels)

    tt = sub.add_parser("truth-table", help="propagate the four computational inputs")
    _add_gate_flags(tt)
    tt.add_argument("--model", choices=[m.value for m in ModelKind], default="ideal")
    tt.add_argument("--format", choices=["json", "csv"], default="json")
    tt.add_argument("--output", "-o")
    tt.set_defaults(func=cmd_truth_table)

    rn = sub.add_parser("run", help="run a pulse sequence on a two-qubit input")
    _add_gate_flags(rn)
    rn.add_argument("--seq", help=".pseq file (default: built-in CP schedule)")
    rn.add_argument("--state", choices=COMPUTATIONAL)
    rn.add_argument("--amplitudes", help="four complex amplitudes, e.g. '0.5,0.5,0.5,0.5j'")
    rn.add_argument("--model", choices=[m.value for m in ModelKind], default="ideal")
    rn.add_argument("--output", "-o")
    rn.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="average fidelity versus omega12 (CSV)")
    _add_gate_flags(sw)
    sw.add_argument("--param", default="omega12")
    sw.add_argument("--from", dest="start", type=float, required=True)
    sw.add_argument("--to", dest="stop", type=float, required=True)
    sw.add_argument("--steps", type=int, required=True)
    sw.add_argument("--full", action="store_true", help="add full-model Monte-Carlo column")
    sw.add_argument("--samples", type=int, default=200)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--jobs", type=int, default=_default_jobs())
    sw.add_argument("--output", "-o")
    sw.set_defaults(func=cmd_sweep)

    bd = sub.add_parser("budget", help="error budget as JSON")
    _add_gate_flags(bd)
    bd.add_argument("--gamma3-inv", type=float, help="level-3 lifetime of SQUID a, units of 1/g_b")
    bd.add_argument("--shift", type=float, help="override s = g_b^2/delta_c in the analytic entry")
    bd.add_argument("--samples", type=int, default=200)
    bd.add_argument("--seed", type=int, default=0)
    bd.add_argument("--output", "-o")
    bd.set_defaults(func=cmd_budget)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, CompileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEQUENCE
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
