"""Command line front end: ``run``, ``validate`` and ``scenario``.

Exit codes: 0 success, 2 configuration error, 3 complete-positivity
violation, 4 numerical failure (boundary leak, instability, diverging
closed form). ``HYBRIDQC_OUT`` overrides the output directory of a config;
``--out`` overrides both.
"""
import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import parse_config, serialize
from .diagnostics import model_params, run_scenario
from .diffusive import check_validity
from .errors import CPViolationError, HybridError
from .models import example_moments
from .state import Lattice

OUT_ENV = "HYBRIDQC_OUT"
CSV_HEADER = "t,n,q,p_plus,p_minus,re_c,im_c,det,phi_t"
SYMMETRY_TOL = 1e-8


def _num(x):
    return f"{x:.12g}"


def trajectory_csv(traj, phi):
    """One row per ``(t, n)`` in fixed column order, 12 significant digits."""
    lat = traj.lattice
    pops, coh, det = traj.populations, traj.coherences, traj.determinants
    lines = [CSV_HEADER]
    for k, t in enumerate(traj.times):
        tt, pt = _num(t), _num(phi * t)
        for i, (n, q) in enumerate(zip(lat.sites, lat.coords)):
            row = (tt, str(n), _num(q), _num(pops[k, i, 0]), _num(pops[k, i, 1]),
                   _num(coh[k, i].real), _num(coh[k, i].imag), _num(det[k, i]), pt)
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _f(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def validity_summary(report):
    return {
        "failures": list(report.failures),
        "coarse_time": _f(np.max(report.coarse_time)),
        "coarse_length": _f(np.max(report.coarse_length)),
        "operator_ratios": np.asarray(report.gamma_ratios).tolist(),
        "ratio_threshold": report.ratio_threshold,
        "d_phi_gt_d_gamma": report.d_phi_gt_d_gamma,
        "qfp_slack_min": _f(np.min(report.qfp_slack)),
        "recommended_sigma0_sq_min": _f(report.sigma0_min_sq),
        "recommended_t_min": _f(report.t_min),
    }


def scenario_summary(result):
    phi = result.config.rates.phi
    th = result.threshold
    analytic = {"error": result.threshold_error}
    if th is not None:
        analytic = {"phi_t_star": _f(th.phi_t_star), "t_star": _f(th.t_star),
                    "sigma0_sq_min": _f(th.sigma0_min_sq), "valid": th.valid,
                    "A": _f(th.A), "B": _f(th.B)}
    numeric = {}
    for key, rep in result.positivity.items():
        t_star = rep.t_star_numeric
        numeric[key] = {
            "t_star": _f(t_star),
            "phi_t_star": _f(None if t_star is None else phi * t_star),
            "t_star_origin": _f(rep.t_star_origin),
            "relative_gap": _f(rep.relative_gap),
            "min_det": _f(rep.min_det_over_time[:, 1].min()),
        }
    comparison = {}
    for key, comp in result.comparison.items():
        times = sorted(set(result.panel_times) | {float(comp.times[-1])})
        comparison[key] = {_num(phi * t): comp.at(t) for t in times}
    symmetry = None
    if result.symmetry:
        symmetry = {"defect": result.symmetry, "tolerance": SYMMETRY_TOL,
                    "qfp_pass": result.symmetry["qfp"] <= SYMMETRY_TOL}
    return {
        "analytic": analytic,
        "numeric": numeric,
        "cp": result.cp,
        "validity": validity_summary(result.validity),
        "comparison": comparison,
        "qfp_symmetry": symmetry,
        "qfp": None if "qfp" in result.trajectories else "n/a: no coherent coupling",
        "panel_phi_times": [phi * t for t in result.panel_times],
    }


def error_record(exc):
    rec = {"type": type(exc).__name__, "message": str(exc),
           "exit_code": getattr(exc, "exit_code", 1)}
    if isinstance(exc, CPViolationError):
        rec.update(pair=list(exc.pair) if exc.pair is not None else None,
                   site=exc.site, slack=exc.slack)
    return rec


PLOT_SCRIPT = '''"""Render the determinant, population and coherence panels from the CSV files."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
panels = [float(x) for x in {panels!r}]
columns = ["det", "p_plus", "p_minus", "re_c", "im_c"]
for name in {files!r}:
    data = defaultdict(lambda: defaultdict(list))
    with open(here / name) as fh:
        for row in csv.DictReader(fh):
            data[round(float(row["phi_t"]), 9)]["n"].append(int(row["n"]))
            for c in columns:
                data[round(float(row["phi_t"]), 9)][c].append(float(row[c]))
    fig, axes = plt.subplots(len(columns), len(panels), figsize=(3 * len(panels), 10),
                             squeeze=False)
    for j, pt in enumerate(panels):
        snap = data[min(data, key=lambda s: abs(s - pt))]
        for i, c in enumerate(columns):
            axes[i][j].plot(snap["n"], snap[c], ".")
            axes[i][j].set_title(f"{{c}}, phi t = {{pt}}")
    fig.tight_layout()
    fig.savefig(here / (Path(name).stem + ".png"))
'''


def write_outputs(result, out_dir):
    """Write CSV trajectories, ``summary.json`` and optionally a plotting script."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    formats = set(cfg.outputs.formats)
    files = []
    if "csv" in formats:
        for key, traj in result.trajectories.items():
            name = f"{key}.csv"
            (out / name).write_text(trajectory_csv(traj, cfg.rates.phi))
            files.append(name)
    if "plot" in formats:
        phi = cfg.rates.phi
        (out / "plot_panels.py").write_text(
            PLOT_SCRIPT.format(panels=[phi * t for t in result.panel_times], files=files))
        files.append("plot_panels.py")
    summary = {"status": "ok", "scenario": cfg.scenario, "version": __version__,
               "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
               "config": serialize(cfg), "files": files}
    summary.update(scenario_summary(result))
    if "json" in formats:
        _write_json(out / "summary.json", summary)
    return summary


def _write_json(path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _out_dir(cfg, override=None):
    return override or os.environ.get(OUT_ENV) or cfg.outputs.directory


def _execute(cfg, out_override=None):
    out = _out_dir(cfg, out_override)
    try:
        result = run_scenario(cfg)
    except HybridError as exc:
        Path(out).mkdir(parents=True, exist_ok=True)
        _write_json(Path(out) / "summary.json",
                    {"status": "error", "scenario": cfg.scenario, "config": serialize(cfg),
                     "error": error_record(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    summary = write_outputs(result, out)
    analytic = summary["analytic"].get("phi_t_star")
    print(f"{cfg.scenario}: wrote {len(summary['files'])} files to {out}"
          + (f"; analytic phi t* = {analytic:.4f}" if analytic is not None else ""))
    return 0


def validate(cfg):
    """CP and validity checks only, as a JSON-ready report."""
    params = model_params(cfg)
    lattice = Lattice.symmetric(cfg.grid.n_half_width, cfg.grid.r0)
    flavor = "case4" if cfg.rates.coherent else "case2+3"
    report = check_validity(example_moments(params, lattice.coords, cfg.grid.r0), flavor)
    cp = {"ok": True}
    if cfg.rates.coherent:
        up, dn = params.ellipse_ratios
        cp.update(ellipse_ratio_up=up, ellipse_ratio_dn=dn)
    return {"cp": cp, "validity": validity_summary(report)}


def _load(path, overrides=()):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SystemExit(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)


def build_parser():
    parser = argparse.ArgumentParser(prog="hybridqc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a configuration file")
    p.add_argument("config")
    p.add_argument("--out", help="output directory")
    p = sub.add_parser("validate", help="CP and validity checks, no integration")
    p.add_argument("config")
    p = sub.add_parser("scenario", help="run a named figure scenario")
    p.add_argument("name")
    p.add_argument("--out", help="output directory")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "scenario":
            cfg = parse_config(f"scenario = {args.name}", args.override)
            return _execute(cfg, args.out)
        cfg = _load(args.config)
        if args.command == "run":
            return _execute(cfg, args.out)
        print(json.dumps(validate(cfg), indent=2, sort_keys=True))
        return 0
    except HybridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, CPViolationError):
            print(json.dumps({"error": error_record(exc)}, sort_keys=True))
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
