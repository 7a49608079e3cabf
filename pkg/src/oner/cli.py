"""Command line front end.

    oner [--config FILE] [--set section.key=value ...] [--profile desk|paper]
         {levels,table2,steady,waveform,vib,simulate,scan} [-o CSV] [--summary JSON]

CSV goes to ``-o`` (stdout by default) with 10 significant digits. The JSON
summary echoes the fully resolved configuration under ``config`` and can be
passed back through ``--config`` to replay the run.

Exit codes: 0 success, 2 invalid input, 3 regime violation, 4 numerical failure.
"""

import argparse
import contextlib
import csv
import json
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import __version__
from .config import load_config
from .constants import (
    DE_EXCITED_CM,
    DE_GROUND_CM,
    MU_LINA_U,
    OMEGA_E_EXCITED_CM,
    OMEGA_E_GROUND_CM,
    RE_EXCITED_BOHR,
    RE_GROUND_BOHR,
)
from .dynamics import evolve_spin, extract_rabi, find_resonances, scan_repetition_rate, validate_regime
from .errors import FitError, InvalidArgumentError, OnerError, RegimeError
from .nqi import generate_table2, rabi_prefactor, table1_tensors
from .optics import steady_state, write_waveform_csv
from .spin import exact_transition_energies
from .tables import load_isotopes, load_table1
from .vibration import harmonic_model, load_pes, morse_model, solve_vibrational

EXIT_OK, EXIT_INVALID, EXIT_REGIME, EXIT_NUMERIC = 0, 2, 3, 4


def _fmt(x):
    return format(float(x), ".10g")


def _write_csv(path, header, rows):
    with _open_out(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else str(float(obj))
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def _write_summary(args, cfg, results):
    if not args.summary:
        return
    doc = {"command": args.command, "version": __version__, "config": cfg.canonical(), "results": results}
    with _open_out(args.summary) as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _print_table(header, rows, fh=None):
    fh = fh or sys.stdout
    cells = [[c if isinstance(c, str) else f"{c:.1f}" for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) for i, h in enumerate(header)]
    fh.write("  ".join(h.rjust(w) for h, w in zip(header, widths)) + "\n")
    for r in cells:
        fh.write("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n")


def _regime_dict(report):
    return {c.name: {"ratio": c.ratio, "status": c.status} for c in report.checks}


def cmd_levels(args, cfg):
    """First-order line positions beside exact diagonalisation of the DC Hamiltonian."""
    sc = cfg.scenario()
    Q0, _ = sc.dc_harmonic()
    lines = sc.lines()
    exact = {(ln.m_i, ln.m_f): ln for ln in exact_transition_energies(sc.spin, sc.field, Q0)}
    header = ["isotope", "transition", "dm", "zeeman_khz", "correction_khz", "energy_khz", "exact_khz", "exact_minus_first_order_khz"]
    rows = []
    for ln in lines:
        ex = exact[(ln.m_i, ln.m_f)].magnitude
        rows.append([sc.spin.label, ln.label, str(ln.dm), abs(ln.zeeman), ln.correction, ln.magnitude, ex, ex - ln.magnitude])
    if args.format == "table":
        _print_table(header, rows)
    else:
        _write_csv(args.output, header, rows)
    _write_summary(args, cfg, {"B_T": sc.field.B0, "rho_ee": sc.rho_inf, "lines": {r[1]: r[5] for r in rows}})


def cmd_table2(args, cfg):
    """Corrected energies and spin Rabi frequencies for every tabulated isotope."""
    isotopes, table1 = load_isotopes(), load_table1()
    sc = cfg.scenario()
    rho = sc.rho_inf
    duty = cfg["laser"]["duty"]
    rows_t2 = generate_table2(isotopes, table1, sc.field.B0, cfg.theta, rho, duty)
    prefactors = {}
    for label in sorted({r.isotope for r in rows_t2}):
        qg, qe = table1_tensors(table1, label)
        for dm in (1, 2):
            prefactors[(label, dm)] = rabi_prefactor(isotopes[label], qg, qe, dm, duty)
    header = ["isotope", "transition", "zeeman_khz", "correction_khz", "energy_khz", "rabi_khz", "rabi_prefactor_khz"]
    rows = [
        [r.isotope, r.label, r.zeeman_khz, r.correction_khz, r.energy_khz, r.rabi_khz, prefactors[(r.isotope, round(r.m_i - r.m_f))]]
        for r in rows_t2
    ]
    if args.format == "table":
        _print_table(header, rows)
    else:
        _write_csv(args.output, header, rows)
    _write_summary(
        args,
        cfg,
        {
            "B_T": sc.field.B0,
            "rho_ee": rho,
            "rabi_prefactor_khz": {f"{k[0]} dm={k[1]}": v for k, v in prefactors.items()},
        },
    )


def cmd_steady(args, cfg):
    """Closed-form steady state over a detuning sweep."""
    opt = cfg.optics
    run = cfg["run"]
    n = run["n_delta"]
    if n == 1:
        deltas = np.array([opt.Delta])
    else:
        span = 5.0 * max(opt.Gamma, abs(opt.Omega))
        lo = -span if run["delta_min_ghz"] is None else run["delta_min_ghz"]
        hi = span if run["delta_max_ghz"] is None else run["delta_max_ghz"]
        if not lo < hi:
            raise InvalidArgumentError("run.delta_min_ghz must be below run.delta_max_ghz")
        deltas = np.linspace(lo, hi, n)
    rows = []
    for d in deltas:
        ee, eg = steady_state(replace(opt, Delta=float(d), omega=None))
        rows.append([d, ee, eg.real, eg.imag])
    _write_csv(args.output, ["Delta_ghz", "rho_ee", "rho_eg_re", "rho_eg_im"], rows)
    peak = max(rows, key=lambda r: r[1])
    _write_summary(args, cfg, {"max_rho_ee": peak[1], "Delta_at_max_ghz": peak[0]})


def cmd_waveform(args, cfg):
    """One period of the excited-state occupation at the drive repetition rate."""
    sc = cfg.scenario()
    f = sc.drive_rate_khz
    w = sc.occupation(f)
    with _open_out(args.output) as fh:
        write_waveform_csv(w, fh)
    _write_summary(
        args,
        cfg,
        {
            "rep_rate_khz": f,
            "tau_ns": w.tau,
            "c0": w.c0,
            "c1_abs": abs(w.c1),
            "c1_arg": float(np.angle(w.c1)),
            "periods_to_converge": w.periods,
            "ideal_c0": sc.rho_inf * sc.duty,
            "ideal_c1_abs": 2 * sc.rho_inf / np.pi * np.sin(np.pi * sc.duty),
        },
    )


def _vib_problem(cfg):
    v = cfg["vib"]
    ground = v["state"] == "ground"
    mu = v["mu_u"] or MU_LINA_U
    if v["model"] == "file":
        return load_pes(v["pes_file"], mu)
    Re = v["Re_bohr"] or (RE_GROUND_BOHR if ground else RE_EXCITED_BOHR)
    we = v["omega_e_cm"] or (OMEGA_E_GROUND_CM if ground else OMEGA_E_EXCITED_CM)
    if v["model"] == "harmonic":
        prob = harmonic_model(Re, we, mu, v["n_states"], v["n_points"])
    else:
        De = v["De_cm"] or (DE_GROUND_CM if ground else DE_EXCITED_CM)
        prob = morse_model(Re, we, De, mu, v["n_states"], v["n_points"])
    prob.properties["R_bohr"] = prob.grid.copy()
    return prob


def cmd_vib(args, cfg):
    """Vibrational eigenvalues and vibrationally averaged property curves."""
    prob = _vib_problem(cfg)
    res = solve_vibrational(prob, cfg["vib"]["n_states"])
    names = sorted(prob.properties)
    header = ["n", "energy_cm", "above_ground_cm", "nodes"] + [f"avg_{k}" for k in names]
    rows = []
    for n, e in enumerate(res.energies):
        avg = res.averages(n)
        rows.append([str(n), e, e - res.energies[0], str(res.nodes(n))] + [avg[k] for k in names])
    _write_csv(args.output, header, rows)
    _write_summary(args, cfg, {"fundamental_cm": res.fundamental, "energies_cm": list(res.energies)})


def _t_rabi(sc, value, periods):
    if value is not None:
        return value
    g = sc.predicted_rabi_khz()
    if g == 0:
        raise InvalidArgumentError("target coupling is zero; set run.t_end_ms / run.t_probe_ms explicitly")
    return periods / g


def cmd_simulate(args, cfg):
    """Spin trajectory under the pulsed drive, with a Rabi fit of the target."""
    sc = cfg.scenario()
    run = cfg["run"]
    report = validate_regime(sc)
    t_end = _t_rabi(sc, run["t_end_ms"], 3.0)
    traj = evolve_spin(
        sc,
        t_end,
        method=run["method"],
        max_samples=run["max_samples"],
        enforce_regime=cfg.enforce_regime,
    )
    with _open_out(args.output) as fh:
        traj.write_csv(fh)
    m_i, m_f = sc.target
    try:
        fit = extract_rabi(traj, m_i, m_f)
        fit_out = {"frequency_khz": fit.frequency_khz, "contrast": fit.contrast, "offset": fit.offset, "residual": fit.residual}
    except FitError as exc:
        fit_out = {"error": str(exc)}
    _write_summary(
        args,
        cfg,
        {
            "B_T": sc.field.B0,
            "rho_ee": sc.rho_inf,
            "rep_rate_khz": traj.rep_rate_khz,
            "predicted_rabi_khz": sc.predicted_rabi_khz(),
            "fit": fit_out,
            "purity_drift": float(np.ptp(traj.purity)),
            "regime": _regime_dict(report),
        },
    )


def _scan_range(sc, run):
    g = sc.predicted_rabi_khz()
    dm = round(sc.target[0] - sc.target[1])
    same = [ln.magnitude for ln in sc.lines() if ln.dm == dm]
    pad = 4.0 * g if g > 0 else 0.01 * min(same)
    lo = min(same) - pad if run["f_min_khz"] is None else run["f_min_khz"]
    hi = max(same) + pad if run["f_max_khz"] is None else run["f_max_khz"]
    return max(lo, 1e-6), hi


def cmd_scan(args, cfg):
    """Maximum transfer per transition against repetition rate, with peak assignment."""
    sc = cfg.scenario()
    run = cfg["run"]
    lo, hi = _scan_range(sc, run)
    t_probe = _t_rabi(sc, run["t_probe_ms"], 1.0)
    spectrum = scan_repetition_rate(
        sc,
        (lo, hi),
        run["n_points"],
        t_probe,
        workers=run["workers"],
        enforce_regime=cfg.enforce_regime,
    )
    with _open_out(args.output) as fh:
        spectrum.write_csv(fh)
    peaks = find_resonances(spectrum, threshold=run["peak_threshold"])
    _write_summary(
        args,
        cfg,
        {
            "B_T": sc.field.B0,
            "f_range_khz": [lo, hi],
            "t_probe_ms": t_probe,
            "step_khz": spectrum.step,
            "predicted_lines_khz": {ln.label: ln.magnitude for ln in spectrum.lines},
            "peaks": [
                {"transition": p.transition, "f_rep_khz": p.f_rep_khz, "transfer": p.transfer, "kind": p.kind}
                for p in peaks
            ],
        },
    )


COMMANDS = {
    "levels": cmd_levels,
    "table2": cmd_table2,
    "steady": cmd_steady,
    "waveform": cmd_waveform,
    "vib": cmd_vib,
    "simulate": cmd_simulate,
    "scan": cmd_scan,
}


def _add_scenario_options(parser, prefix=""):
    parser.add_argument("--config", dest=prefix + "config", help="INI scenario file or JSON run summary (default: bundled LiNa scenario)")
    parser.add_argument(
        "--set",
        dest=prefix + "overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config key (repeatable)",
    )
    parser.add_argument(
        "--profile", dest=prefix + "profile", choices=("desk", "paper"), help="scaled (desk) or literal (paper) parameters"
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="oner", description="Optical nuclear electric resonance simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_scenario_options(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=func.__doc__.splitlines()[0])
        # scenario options are accepted after the subcommand too
        _add_scenario_options(p, "sub_")
        p.add_argument("-o", "--output", help="CSV output path (default stdout)")
        p.add_argument("--summary", help="JSON summary path ('-' for stdout)")
        if name in ("levels", "table2"):
            p.add_argument("--format", choices=("csv", "table"), default="csv")
    return parser


def parse_args(argv=None):
    args = build_parser().parse_args(argv)
    args.config = args.sub_config or args.config
    args.overrides = args.overrides + args.sub_overrides
    args.profile = args.sub_profile or args.profile
    return args


def main(argv=None):
    args = parse_args(argv)
    cfg = None
    try:
        cfg = load_config(args.config, args.overrides, args.profile)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](args, cfg)
    except RegimeError as exc:
        print(f"oner: regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except InvalidArgumentError as exc:
        print(f"oner: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OnerError, ArithmeticError, np.linalg.LinAlgError) as exc:
        params = cfg.to_json() if cfg is not None else "{}"
        print(f"oner: numerical failure: {exc}\n  parameters: {params}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
