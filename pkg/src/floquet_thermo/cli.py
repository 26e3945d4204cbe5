"""Command line front end: ``run``, ``validate`` and ``pq``.

Exit status is 0 on success, 2 when a thermodynamic law check fails beyond
tolerance and 1 on configuration or numerical errors.
"""
import argparse
import csv
import io
import json
import math
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import build_scenario, config_from_dict, initial_state, parse_config, with_parameter
from .dynamics import evolve, steady_state
from .errors import FloquetThermoError
from .operators import vec, von_neumann_entropy
from .qubit import t_eff, xi_table
from .thermo import SECOND_LAW_TOL, entropy_production, fmt, steady_report

EXIT_OK, EXIT_ERROR, EXIT_LAW = 0, 1, 2


def _number(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _matrix(rho):
    return [[[_number(z.real), _number(z.imag)] for z in row] for row in rho]


def _json(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _report_dict(report):
    d = report.to_dict()
    for key in ("per_bath", "temperatures"):
        d[key] = {k: _number(v) for k, v in d[key].items()}
    return d


def _steady(scenario):
    rho = steady_state(scenario.bundle)
    report = steady_report(scenario.bundle, rho, scenario.units)
    extra = {}
    if scenario.model is not None:
        extra["t_eff"] = _number(t_eff(scenario.model))
    return rho, report, extra


def _write(out, name, text, written):
    path = out / name
    path.write_text(text)
    written.append(path)


def run_steady(cfg, scenario, out, figures, written):
    rho, report, extra = _steady(scenario)
    formats = cfg.output["formats"]
    if "json" in formats:
        state = {"units": cfg.units, "dim": scenario.dim, "frame": "interaction",
                 "rho": _matrix(rho),
                 "populations": [_number(p) for p in np.real(np.diag(rho))],
                 "residual": _number(np.linalg.norm(scenario.bundle.total @ vec(rho))),
                 **extra}
        _write(out, "steady_state.json", _json(state), written)
        _write(out, "thermo_report.json", _json(_report_dict(report)), written)
    if "csv" in formats:
        _write(out, "thermo_report.csv", report.to_csv(), written)
    if figures:
        from .plotting import plot_channels
        written.append(plot_channels(report, out / "channels.png"))
    summary = {"regime": report.regime, "power": report.power,
               **{f"J[{k}]": v for k, v in report.per_bath.items()},
               "second_law_margin": report.second_law_margin,
               "first_law_residual": report.first_law_residual,
               "dual_formula_ok": report.dual_formula_ok, **extra}
    return summary, report.law_checks_ok


def run_evolve(cfg, scenario, out, figures, written):
    summary, ok = run_steady(cfg, scenario, out, figures, written)
    run = cfg.run
    rho0 = initial_state(run["rho0"], scenario)
    traj = evolve(scenario.bundle, rho0, run["t_end"], run["dt"])
    lab = evolve(scenario.bundle, rho0, run["t_end"], run["dt"], scenario.hamiltonian,
                 cfg.floquet["steps_per_period"])
    pops = lab.populations()
    entropy = [von_neumann_entropy(r) for r in traj.states]
    sigma = [entropy_production(scenario.bundle, r).production for r in traj.states]
    if "csv" in cfg.output["formats"]:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"p{k}" for k in range(scenario.dim)] + ["entropy", "sigma"])
        for i, t in enumerate(traj.times):
            w.writerow([fmt(t)] + [fmt(p) for p in pops[i]] + [fmt(entropy[i]), fmt(sigma[i])])
        _write(out, "trajectory.csv", buf.getvalue(), written)
    if figures:
        from .plotting import plot_trajectory
        written.append(plot_trajectory(traj.times, pops, sigma, out / "trajectory.png"))
    summary["min_sigma"] = min(sigma)
    return summary, ok and min(sigma) >= -SECOND_LAW_TOL


def sweep_point(args):
    """One sweep job; module level so it can run in a worker process."""
    cfg_dict, param, value = args
    cfg = with_parameter(config_from_dict(cfg_dict), param, value)
    scenario = build_scenario(cfg)
    _, report, extra = _steady(scenario)
    return value, report.per_bath, report.power, report.second_law_margin, \
        report.first_law_residual, report.law_checks_ok, extra.get("t_eff")


def run_sweep(cfg, scenario, out, figures, written):
    sw = cfg.run["sweep"]
    jobs = [(cfg.to_dict(), sw["parameter"], v) for v in sw["values"]]
    if cfg.run["workers"] > 1:
        with ProcessPoolExecutor(cfg.run["workers"]) as pool:
            rows = list(pool.map(sweep_point, jobs))
    else:
        rows = [sweep_point(j) for j in jobs]
    rows.sort(key=lambda r: r[0])
    labels = cfg.bath_labels
    unit = f" [{cfg.units}]" if cfg.units else ""
    if "csv" in cfg.output["formats"]:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = [sw["parameter"]] + [f"J_{lab}{unit}" for lab in labels] + \
            [f"power{unit}", "second_law_margin", "first_law_residual"]
        if cfg.is_qubit:
            head.append("t_eff")
        w.writerow(head)
        for v, per_bath, power, margin, resid, _, te in rows:
            line = [fmt(v)] + [fmt(per_bath.get(lab, 0.0)) for lab in labels] + \
                [fmt(power), fmt(margin), fmt(resid)]
            if cfg.is_qubit:
                line.append(fmt(te) if not isinstance(te, str) else te)
            w.writerow(line)
        _write(out, "sweep.csv", buf.getvalue(), written)
    if figures:
        from .plotting import plot_sweep
        currents = {lab: [r[1].get(lab, 0.0) for r in rows] for lab in labels}
        written.append(plot_sweep(sw["parameter"], [r[0] for r in rows], currents,
                                  [r[2] for r in rows], out / "sweep.png"))
    worst = max(r[3] for r in rows)
    summary = {"points": len(rows), "worst_second_law_margin": worst,
               "worst_first_law_residual": max(r[4] for r in rows)}
    return summary, all(r[5] for r in rows)


RUNNERS = {"steady": run_steady, "evolve": run_evolve, "sweep": run_sweep}


@dataclass
class RunResult:
    status: int
    mode: str
    summary: dict
    files: list


def run_scenario(cfg, out=None, mode=None, figures=False):
    """Run a parsed config and write its artifacts under ``out``.

    ``status`` is ``EXIT_LAW`` when a law check fails beyond tolerance.
    """
    mode = mode or cfg.run["mode"]
    if mode == "sweep" and cfg.run["sweep"] is None:
        raise FloquetThermoError("sweep mode needs a run.sweep section in the config")
    out = Path(out or cfg.output["directory"])
    out.mkdir(parents=True, exist_ok=True)
    scenario = build_scenario(cfg)
    written = []
    summary, ok = RUNNERS[mode](cfg, scenario, out, figures, written)
    return RunResult(EXIT_OK if ok else EXIT_LAW, mode, summary, written)


def cmd_run(args):
    res = run_scenario(parse_config(args.config), args.out, args.mode, args.figures)
    if not args.quiet:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["quantity", "value"])
        w.writerow(["mode", res.mode])
        for k, v in res.summary.items():
            w.writerow([k, fmt(v) if isinstance(v, float) else v])
        for p in res.files:
            w.writerow(["file", str(p)])
    if res.status != EXIT_OK:
        print(f"law check failed: {json.dumps({k: str(v) for k, v in res.summary.items()})}",
              file=sys.stderr)
    return res.status


def cmd_validate(args):
    cfg = parse_config(args.config)
    if args.print:
        sys.stdout.write(cfg.dumps())
    else:
        print(f"ok: {args.config}")
    return EXIT_OK


def cmd_pq(args):
    cfg = parse_config(args.config)
    if not cfg.is_qubit:
        raise FloquetThermoError("pq needs a qubit system")
    from .config import profile_from
    mod = profile_from(cfg.system["modulation"])
    q_max = cfg.floquet["Q"]
    xs = xi_table(mod, q_max)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["q", "xi_re", "xi_im", "P"])
    for q, x in zip(range(-q_max, q_max + 1), xs):
        w.writerow([q, fmt(x.real), fmt(x.imag), fmt(abs(x) ** 2)])
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    print(f"captured mass {fmt(np.sum(np.abs(xs) ** 2))} at Q={q_max}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="floquet-thermo",
                                description="Floquet-Markov heat-current bookkeeping")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario and write reports")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output.directory)")
    r.add_argument("--mode", choices=sorted(RUNNERS))
    r.add_argument("--quiet", action="store_true")
    r.add_argument("--figures", action="store_true", help="also render PNG figures")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a config file")
    v.add_argument("config")
    v.add_argument("--print", action="store_true", help="print the resolved config")
    v.set_defaults(func=cmd_validate)
    q = sub.add_parser("pq", help="print the P(q) table of a qubit config")
    q.add_argument("config")
    q.add_argument("--out", help="also write the table to this CSV file")
    q.set_defaults(func=cmd_pq)
    return p


def _origin(exc):
    """Name of the innermost package module the exception passed through."""
    name = "cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        path = Path(frame.filename)
        if path.parent.name == "floquet_thermo":
            name = path.stem
    return name


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FloquetThermoError, ValueError) as exc:
        print(f"error [{_origin(exc)}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
