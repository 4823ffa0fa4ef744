"""Command-line front end.

Every subcommand produces a summary and zero or more tables.  ``--format``
selects CSV files (tables, plus the summary as key/value rows), one JSON
document (summary with tables embedded), or both.  Each file records the
resolved parameters and the seed, and contains nothing run-dependent, so a
rerun with the same inputs is byte-identical.

Errors print one JSON line ``{"error": ..., "message": ...}`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, kernels
from .adder import (
    DEFAULT_GAMMA01,
    REFERENCE_RUNTIME_PS,
    adder_truth_table,
    aux_swap_calibration,
    default_schedule,
    run_adder,
    sample_adder_shots,
)
from .dynamics import NOISE_PER_STEP, NOISE_WHITE
from .energetics import (
    FRONTIER_TDS_GFLOPS_PER_W,
    REFERENCE_MEASUREMENT_EV,
    CostModel,
    comparison_table,
    cooling_headroom,
    energy_ledger,
    flops_to_ev_per_bitop,
)
from .fock import LOGICAL_INPUTS, SINGLE_ELECTRON, TWO_ELECTRON, codeword_mask, codewords
from .fredkin import analyze_gate, gate_time, gate_trajectories, leakage_probability_analytic, u_sweep
from .hamiltonian import ConfigError, HubbardParams, params_from_mapping, parse_config_text
from .noise import (
    REPORTED_QUASISTATIC_CHANGE,
    HighFrequencyModel,
    QuasistaticModel,
    fit_lambda,
    high_frequency_ensemble,
    lambda_coefficient,
    noise_free_amplitude,
    quasistatic_average_analytic,
    quasistatic_average_mc,
)
from .units import natural_time_to_ps

SEED_MAX = 2**64 - 1


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


def _bits(text: str) -> int:
    if text not in ("0", "1"):
        raise argparse.ArgumentTypeError(f"expected a bit (0 or 1), got {text!r}")
    return int(text)


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand."""
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", type=Path, default=d(None), help="key = value parameter file")
    p.add_argument("--seed", type=_seed, default=d(0), help="RNG seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, default=d(Path(".")), help="output directory")
    p.add_argument("--format", choices=("csv", "json", "both"), default=d("both"))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qdsim", parents=[_global_flags(False)],
                     description="Triple quantum dot Fredkin gate and full-adder simulator.")
    parser.add_argument("--version", action="version", version=f"qdsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_global_flags(True)]

    g = sub.add_parser("gate", parents=common, help="gate time, fidelity and population dynamics")
    g.add_argument("--encoding", choices=("two-electron", "single-electron"), default="two-electron")
    g.add_argument("--snapshots", type=_positive_int, default=401, help="trajectory rows per input")

    s = sub.add_parser("sweep", parents=common, help="gate fidelity versus U")
    s.add_argument("--u-min", type=float, default=18.0)
    s.add_argument("--u-max", type=float, default=25.0)
    s.add_argument("--n", type=_positive_int, default=701)

    n = sub.add_parser("noise", parents=common, help="charge-noise sensitivity of the swap")
    n.add_argument("kind", choices=("quasistatic", "highfreq"))
    n.add_argument("--epsilon-bar", type=float, default=0.01, help="quasistatic offset std [Gamma]")
    n.add_argument("--samples", type=_positive_int, default=10_000)
    n.add_argument("--include-control", action="store_true", help="also perturb the control dot")
    n.add_argument("--analytic", action="store_true", help="closed-form average")
    n.add_argument("--mc", action="store_true", help="Monte-Carlo average (default)")
    n.add_argument("--amplitude", type=float, default=0.01, help="high-frequency amplitude [Gamma]")
    n.add_argument("--runs", type=_positive_int, default=1000)
    n.add_argument("--dt", type=float, default=None, help="step [hbar/Gamma], default t*/1000")
    n.add_argument("--convention", choices=(NOISE_WHITE, NOISE_PER_STEP), default=NOISE_WHITE)
    n.add_argument("--backend", choices=sorted(kernels.available_backends()), default=None)

    a = sub.add_parser("adder", parents=common, help="full-adder protocol")
    a.add_argument("p", type=_bits, nargs="?")
    a.add_argument("q", type=_bits, nargs="?")
    a.add_argument("r", type=_bits, nargs="?")
    a.add_argument("--all", action="store_true", help="all 8 inputs")
    a.add_argument("--mode", choices=("ideal_branch", "sampled"), default="ideal_branch")
    a.add_argument("--shots", type=_positive_int, default=1, help="sampled-mode trajectories")

    e = sub.add_parser("energy", parents=common, help="energy ledger and cost comparison")
    e.add_argument("--include-measurement", action="store_true")
    e.add_argument("--measurement-ev", type=float, default=None, help="override V I dt [eV]")
    e.add_argument("--audit", action="store_true", help="charge actual electron flow for --inputs")
    e.add_argument("--inputs", type=str, default="000", help="p q r bits for the audited schedule")
    e.add_argument("--cooling-power-uw", type=float, default=500.0)
    return parser


# --- output ----------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


class Output:
    def __init__(self, args, meta: dict):
        self.dir = args.out
        self.format = args.format
        self.meta = meta
        self.written: list[Path] = []
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CliError("io", f"cannot create output directory {self.dir}: {exc.strerror}") from None

    def _open(self, name: str):
        path = self.dir / name
        try:
            fh = path.open("w", newline="")
        except OSError as exc:
            raise CliError("io", f"cannot write {path}: {exc.strerror}") from None
        self.written.append(path)
        return fh

    def _csv(self, name: str, columns: Sequence[str], rows):
        with self._open(name) as fh:
            for k, v in self.meta.items():
                fh.write(f"# {k}={_fmt(v)}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(x) for x in row])

    def emit(self, stem: str, summary: dict, tables: Optional[dict] = None):
        """``tables`` maps file stem to ``(columns, rows)``."""
        tables = tables or {}
        if self.format in ("csv", "both"):
            flat = {k: v for k, v in summary.items() if not isinstance(v, (dict, list, tuple))}
            for k, v in summary.items():
                if isinstance(v, dict):
                    flat.update({f"{k}.{kk}": vv for kk, vv in v.items()})
            self._csv(f"{stem}_summary.csv", ("key", "value"), sorted(flat.items()))
            for name, (cols, rows) in tables.items():
                self._csv(f"{name}.csv", cols, rows)
        if self.format in ("json", "both"):
            doc = {"meta": self.meta, "summary": summary}
            if tables:
                doc["tables"] = {name: [dict(zip(cols, row)) for row in rows]
                                 for name, (cols, rows) in tables.items()}
            with self._open(f"{stem}.json") as fh:
                fh.write(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


# --- configuration ------------------------------------------------------------------


def resolve_params(config: Optional[Path], adder: bool = False) -> HubbardParams:
    values: dict[str, str] = {}
    if config is not None:
        try:
            text = config.read_text()
        except OSError as exc:
            raise CliError("io", f"cannot read config {config}: {exc.strerror}") from None
        values = parse_config_text(text)
    params = params_from_mapping(values)
    if adder and "gamma01" not in values:
        params = params.replace(gamma01=DEFAULT_GAMMA01)
    return params


def _meta(args, params: HubbardParams, **options) -> dict:
    meta = {"command": args.command, "qdsim_version": __version__, "seed": args.seed}
    meta.update(params.to_config())
    meta.update(options)
    return meta


# --- subcommands ----------------------------------------------------------------------


def cmd_gate(args) -> Output:
    params = resolve_params(args.config)
    enc = SINGLE_ELECTRON if args.encoding == "single-electron" else TWO_ELECTRON
    if args.snapshots < 2:
        raise CliError("invalid_argument", "--snapshots must be >= 2")
    out = Output(args, _meta(args, params, encoding=args.encoding, snapshots=args.snapshots))
    ga = analyze_gate(params, enc)
    summary = ga.to_dict()
    summary["slow_mode_period_ps"] = float(natural_time_to_ps(ga.t_star_slow_mode, params.gamma_si))
    if enc is TWO_ELECTRON and params.eps[1] == params.eps[2]:
        summary["leakage_analytic_per_state"] = float(leakage_probability_analytic(ga.t_star.natural, params))
    tables = {}
    traj = gate_trajectories(params, enc, n_snapshots=args.snapshots)
    words = codewords(enc)
    for bits, res in traj.items():
        basis = res.basis
        mask = codeword_mask(basis, enc)
        cols = [basis.index(words[b]) for b in LOGICAL_INPUTS]
        pops = res.populations
        leak = pops[:, ~mask].sum(axis=1)
        rows = [[t, natural_time_to_ps(t, params.gamma_si), *pops[k, cols], leak[k]]
                for k, t in enumerate(res.times)]
        names = ["time_hbar_over_gamma", "time_ps"] + [f"pop_{''.join(map(str, b))}" for b in LOGICAL_INPUTS]
        tables[f"gate_trajectory_{''.join(map(str, bits))}"] = (names + ["pop_leakage"], rows)
    out.emit("gate", summary, tables)
    return out


def cmd_sweep(args) -> Output:
    params = resolve_params(args.config)
    if not args.u_min < args.u_max:
        raise CliError("invalid_argument", f"need u_min < u_max, got [{args.u_min}, {args.u_max}]")
    out = Output(args, _meta(args, params, u_min=args.u_min, u_max=args.u_max, n=args.n))
    try:
        res = u_sweep(params, (args.u_min, args.u_max), args.n)
    except ValueError as exc:
        raise CliError("invalid_argument", str(exc)) from None
    nearest_u, nearest_f = res.nearest_local_maximum(params.charging)
    summary = {
        "argmax_u_gamma": res.argmax_charging,
        "max_fidelity": res.max_fidelity,
        "nearest_local_max_u_gamma": nearest_u,
        "nearest_local_max_fidelity": nearest_f,
        "reference_u_gamma": params.charging,
        "local_maxima": [{"u_gamma": u, "fidelity": f} for u, f in res.local_maxima()],
    }
    rows = [[u, f, natural_time_to_ps(gate_time(params.replace(charging=float(u))).natural, params.gamma_si)]
            for u, f in zip(res.charging, res.fidelity)]
    out.emit("sweep", summary, {"sweep": (["u_gamma", "fidelity", "t_star_ps"], rows)})
    return out


def cmd_noise(args) -> Output:
    params = resolve_params(args.config)
    if args.kind == "quasistatic":
        return _noise_quasistatic(args, params)
    return _noise_highfreq(args, params)


def _noise_quasistatic(args, params) -> Output:
    if args.epsilon_bar < 0:
        raise CliError("invalid_argument", "--epsilon-bar must be >= 0")
    use_mc = args.mc or not args.analytic
    out = Output(args, _meta(args, params, kind="quasistatic", epsilon_bar=args.epsilon_bar,
                             samples=args.samples, include_control=args.include_control,
                             analytic=args.analytic, mc=use_mc))
    f0 = noise_free_amplitude(params)
    summary = {
        "epsilon_bar_gamma": args.epsilon_bar,
        "lambda_formula": lambda_coefficient(params),
        "f0": f0,
        "p0": f0 * f0,
        "reported_change": REPORTED_QUASISTATIC_CHANGE,
    }
    tables = {}
    if args.analytic:
        mean = quasistatic_average_analytic(params, args.epsilon_bar, f0)
        summary["analytic"] = {"mean": mean, "change": f0 * f0 - mean}
    if use_mc:
        model = QuasistaticModel(args.epsilon_bar, args.samples, args.seed, include_control=args.include_control)
        rep = quasistatic_average_mc(params, model)
        mc = {"mean": rep.mean, "std": rep.std, "stderr": rep.stderr, "change": rep.change, "n": rep.n}
        if args.epsilon_bar > 0 and rep.n > 2:
            fit = fit_lambda(rep, params.gamma12)
            mc.update(lambda_fit=fit.lam, f0_fit=fit.f0, fit_residual_rms=fit.residual_rms)
        summary["mc"] = mc
        rows = [[i, *off, p] for i, (off, p) in enumerate(zip(rep.offsets, rep.samples))]
        tables["noise_quasistatic_samples"] = (
            ["sample", "eps0_offset_gamma", "eps1_offset_gamma", "eps2_offset_gamma", "success"], rows)
    out.emit("noise_quasistatic", summary, tables)
    return out


def _noise_highfreq(args, params) -> Output:
    if args.amplitude < 0:
        raise CliError("invalid_argument", "--amplitude must be >= 0")
    if args.dt is not None and args.dt <= 0:
        raise CliError("invalid_argument", "--dt must be > 0")
    backend = args.backend or kernels.BACKEND
    model = HighFrequencyModel(args.amplitude, args.dt, args.runs, args.seed, args.convention)
    rep = high_frequency_ensemble(params, model, backend=backend)
    out = Output(args, _meta(args, params, kind="highfreq", amplitude=args.amplitude, runs=args.runs,
                             dt=rep.settings["dt"], steps=rep.settings["steps"], convention=args.convention,
                             backend=backend))
    summary = {
        "amplitude_gamma": args.amplitude,
        "dt_hbar_over_gamma": rep.settings["dt"],
        "steps": rep.settings["steps"],
        "runs": rep.n,
        "p0": rep.p0,
        "mean": rep.mean,
        "std": rep.std,
        "stderr": rep.stderr,
        "change": rep.change,
    }
    rows = [[t, natural_time_to_ps(t, params.gamma_si), m, s, c, c - m]
            for t, m, s, c in zip(rep.times, rep.mean_trajectory, rep.std_trajectory, rep.clean_trajectory)]
    cols = ["time_hbar_over_gamma", "time_ps", "mean_success", "std_success", "noise_free_success", "change"]
    out.emit("noise_highfreq", summary, {"noise_highfreq_trajectory": (cols, rows)})
    return out


def _adder_row(res) -> list:
    return [*res.inputs, res.parity, res.carry, res.fidelity, ";".join(repr(f) for f in res.step_fidelities)]


ADDER_COLUMNS = ["p", "q", "r", "parity", "carry", "fidelity", "step_fidelities"]


def cmd_adder(args) -> Output:
    params = resolve_params(args.config, adder=True)
    given = [b for b in (args.p, args.q, args.r) if b is not None]
    if not args.all and len(given) != 3:
        raise CliError("invalid_argument", "give three input bits p q r, or --all")
    if args.all and given:
        raise CliError("invalid_argument", "--all takes no input bits")
    out = Output(args, _meta(args, params, mode=args.mode, shots=args.shots, all=args.all,
                             inputs="all" if args.all else "".join(map(str, given))))
    cal = aux_swap_calibration(params)
    t_star = gate_time(params)
    summary = {
        "aux_duration_hbar_over_gamma": cal.duration,
        "aux_swap_fidelity": cal.fidelity,
        "t_star_ps": t_star.ps,
        "reference_runtime_ps": REFERENCE_RUNTIME_PS,
    }
    tables = {}
    if args.all:
        results = adder_truth_table(params)
        summary["coherent_time_ps"] = default_schedule(0, 0, 0, params).coherent_time_ps()
        summary["rows"] = [r.to_dict() for r in results]
        tables["adder_truth_table"] = (ADDER_COLUMNS, [_adder_row(r) for r in results])
        if args.mode == "sampled":
            shot_rows = []
            for bits in LOGICAL_INPUTS:
                rec = sample_adder_shots(default_schedule(*bits, params), args.shots, args.seed)
                shot_rows.append([*bits, *rec.majority(), int(rec.leaked.sum()), rec.shots])
            tables["adder_sampled_majority"] = (
                ["p", "q", "r", "parity_majority", "carry_majority", "leaked_shots", "shots"], shot_rows)
    else:
        sched = default_schedule(*given, params)
        summary["coherent_time_ps"] = sched.coherent_time_ps()
        summary["schedule"] = sched.to_dict()
        res = run_adder(sched)
        summary["result"] = res.to_dict()
        if args.mode == "sampled":
            rec = sample_adder_shots(sched, args.shots, args.seed)
            summary["sampled"] = {"majority_parity": rec.majority()[0], "majority_carry": rec.majority()[1],
                                  "leaked_shots": int(rec.leaked.sum()), "shots": rec.shots}
            tables["adder_shots"] = (["shot", "parity", "carry", "g", "leaked"],
                                     [[i, rec.parity[i], rec.carry[i], rec.g[i], rec.leaked[i]]
                                      for i in range(rec.shots)])
        tables["adder_result"] = (ADDER_COLUMNS, [_adder_row(res)])
        if out.format in ("json", "both"):
            sched.to_json(out.dir / "adder_schedule.json")
            out.written.append(out.dir / "adder_schedule.json")
    out.emit("adder", summary, tables)
    return out


def cmd_energy(args) -> Output:
    params = resolve_params(args.config, adder=True)
    if len(args.inputs) != 3 or any(c not in "01" for c in args.inputs):
        raise CliError("invalid_argument", f"--inputs must be three bits, got {args.inputs!r}")
    if args.cooling_power_uw <= 0:
        raise CliError("invalid_argument", "--cooling-power-uw must be > 0")
    try:
        model = CostModel(measurement_ev=args.measurement_ev)
    except ValueError as exc:
        raise CliError("invalid_argument", str(exc)) from None
    out = Output(args, _meta(args, params, include_measurement=args.include_measurement,
                             measurement_ev=args.measurement_ev, audit=args.audit, inputs=args.inputs,
                             cooling_power_uw=args.cooling_power_uw))
    sched = default_schedule(*(int(c) for c in args.inputs), params)
    ledger = energy_ledger(sched, model, audit=args.audit)
    summary = ledger.summary()
    summary["grand_total_ev"] = ledger.total_with_measurement_ev if args.include_measurement else ledger.total_ev
    summary["column_mev"] = ledger.column_mev()
    runtime_s = sched.coherent_time_ps() * 1e-12
    summary["runtime_ps"] = sched.coherent_time_ps()
    summary["cooling_headroom"] = cooling_headroom(ledger.total_ev, runtime_s, args.cooling_power_uw * 1e-6)
    summary["frontier_tds_ev_per_bitop"] = flops_to_ev_per_bitop(FRONTIER_TDS_GFLOPS_PER_W)
    summary["reference_delta_e_m_ev"] = REFERENCE_MEASUREMENT_EV
    rows = comparison_table(ledger)
    if not args.include_measurement:
        rows = [r for r in rows if r.technology != "qd_full_adder_measurement"]
    t = ledger.totals
    ledger_rows = [[r.step, r.charging, r.eps_control, r.gamma_control, r.measurements,
                    r.measurement_ev if args.include_measurement else 0.0, ledger.row_mev(r)]
                   for r in (*ledger.rows, t)]
    tables = {
        "energy_ledger": (["step", "charging_u", "eps_control_gamma", "gamma_control_u", "measurements",
                           "measurement_ev", "energy_mev"], ledger_rows),
        "energy_comparison": (["technology", "cost_ev_per_bitop", "order_of_magnitude"],
                              [[r.technology, r.cost_ev_per_bitop, r.order_of_magnitude] for r in rows]),
    }
    out.emit("energy", summary, tables)
    if out.format in ("csv", "both"):
        with out._open("energy_ledger.txt") as fh:
            fh.write(ledger.to_text())
    return out


COMMANDS = {"gate": cmd_gate, "sweep": cmd_sweep, "noise": cmd_noise, "adder": cmd_adder, "energy": cmd_energy}


def _fail(code: str, message: str) -> int:
    msg = " ".join(str(message).split())
    sys.stderr.write(json.dumps({"error": code, "message": msg}) + "\n")
    return 2 if code == "usage" else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = COMMANDS[args.command](args)
    except CliError as exc:
        return _fail(exc.code, str(exc))
    except ConfigError as exc:
        return _fail("config", str(exc))
    except OSError as exc:
        return _fail("io", f"{exc.filename or ''}: {exc.strerror or exc}")
    except (ValueError, RuntimeError) as exc:
        return _fail(type(exc).__name__, str(exc))
    for path in out.written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
