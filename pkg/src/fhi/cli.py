"""Command-line front end: ``fhi <subcommand> ...``.

Exit status: 0 success, 2 bad configuration or arguments, 3 numerical
failure (blow-up, accuracy), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from fhi import __version__
from fhi.config import SCHEMA, load_config
from fhi.errors import AccuracyError, BlowUpError, ConfigError, ContractError, DomainError
from fhi.fd_scheme import simulate
from fhi.fractional_calculus import caputo_at, caputo_monomial_exact
from fhi.gridio import Transform, export_figure_data, write_fhig, write_field_csv
from fhi.inclusion import OdeKind, derive_rng, ode_inclusion_solve, ode_inclusion_verify, random_selector
from fhi.mildness import GROWING, SETTLED, cutoff_ladder, mildness_verdict, refinement_ladder
from fhi.mittag_leffler import MLParams, ml_eval
from fhi.noise import white_noise_field
from fhi.report import RunReport
from fhi.spectral_kernel import kernel_h0, term_I1

__all__ = ["EXIT_CONFIG", "EXIT_IO", "EXIT_NUMERIC", "export_figure_data", "main", "paper_config_path"]

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def paper_config_path() -> Path:
    """Location of the shipped ``paper.cfg``."""
    return Path(str(resources.files("fhi") / "data" / "paper.cfg"))


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def _emit_report(report: RunReport, path) -> None:
    if path is None:
        sys.stderr.write(report.to_json() + "\n")
    else:
        report.append_to(path)


def _write_rows(path, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# {{{ subcommands


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    overrides = {k: getattr(args, k) for k in SCHEMA if getattr(args, k, None) is not None}
    cfg_path = args.config
    if cfg_path == "paper":
        cfg_path = paper_config_path()
    cfg = load_config(cfg_path, overrides)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    field, report = simulate(cfg.scheme, cfg.grid, cfg.policy, cfg.seed,
                             override=cfg.values["override_stability"])
    report.config = dict(cfg.values)
    report.diagnostics["config_text"] = cfg.echo()

    csv_path = out / f"{args.prefix}.csv"
    bin_path = out / f"{args.prefix}.fhig"
    write_field_csv(csv_path, field)
    write_fhig(bin_path, field.Y)
    report.add_output("field_csv", csv_path)
    report.add_output("field_fhig", bin_path)
    if args.export:
        exp_path = out / f"{args.prefix}_figure.csv"
        rows = export_figure_data(field, exp_path, Transform.exceedance_mask, args.threshold)
        report.add_output("figure_csv", exp_path)
        report.diagnostics["figure_rows"] = rows
    if args.dump_noise and cfg.scheme.sigma > 0:
        noise_path = out / f"{args.prefix}_noise.fhig"
        write_fhig(noise_path, white_noise_field(cfg.grid, cfg.seed, cfg.scheme.noise_scaling).eta)
        report.add_output("noise_fhig", noise_path)
    report.finish(t0)
    _emit_report(report, args.report if args.report else out / "report.jsonl")
    d = report.diagnostics
    print(f"simulated {cfg.grid.N_t} steps x {cfg.grid.N_x + 1} nodes; max|Y| = {d['max_abs_Y']:.6g}; "
          f"stability margin = {d['stability']['margin']:.4g}")
    return 0


def cmd_ml_eval(args) -> int:
    t0 = time.perf_counter()
    p = MLParams(alpha=args.alpha, beta=args.beta, tol=args.tol, max_terms=args.max_terms)
    values = [ml_eval(p, z) for z in args.z]
    for v in values:
        print(repr(v))
    report = RunReport("ml-eval", config={"alpha": args.alpha, "beta": args.beta, "z": args.z,
                                          "tol": args.tol, "max_terms": args.max_terms},
                       diagnostics={"values": values}).finish(t0)
    _emit_report(report, args.report)
    return 0


def cmd_caputo_check(args) -> int:
    t0 = time.perf_counter()
    exact = caputo_monomial_exact(args.alpha, args.x)
    rows = []
    for n in args.n:
        dt = args.x / n
        samples = dt * np.arange(n + 1)
        approx = caputo_at(samples, args.alpha, dt)
        rows.append([n, repr(dt), repr(approx), repr(exact), repr(abs(approx - exact) / abs(exact))])
    text = _write_rows(args.out, ["n", "dt", "discrete", "exact", "rel_error"], rows)
    sys.stdout.write(text)
    report = RunReport("caputo-check", config={"alpha": args.alpha, "x": args.x, "n": args.n},
                       diagnostics={"rel_errors": [float(r[-1]) for r in rows]})
    if args.out:
        report.add_output("csv", args.out)
    _emit_report(report.finish(t0), args.report)
    return 0


def cmd_kernel(args) -> int:
    t0 = time.perf_counter()
    offsets = np.linspace(-args.x_max, args.x_max, args.n_x)
    func = kernel_h0 if args.what == "h0" else term_I1
    rows, notes = [], {}
    for lag in args.lags:
        res = func(lag, offsets, args.alpha, args.lam, d=1, check=not args.no_check)
        notes[repr(lag)] = {"rel_change": res.rel_change, "warnings": list(res.warnings),
                            "imag_residual": res.imag_residual}
        rows.extend([repr(float(lag)), repr(float(x)), repr(float(v))] for x, v in zip(offsets, res.value))
    text = _write_rows(args.out, ["lag", "offset", "value"], rows)
    if args.out is None:
        sys.stdout.write(text)
    report = RunReport("kernel", config={"what": args.what, "alpha": args.alpha, "lambda": args.lam,
                                         "lags": args.lags, "x_max": args.x_max, "n_x": args.n_x},
                       diagnostics={"convergence": notes})
    if args.out:
        report.add_output("csv", args.out)
    _emit_report(report.finish(t0), args.report)
    return 0


def _ladder_evidence(steps) -> str:
    inc = [s.increment for s in steps]
    if all(math.isinf(s.V) for s in steps):
        return "divergent"
    if inc[-1] < SETTLED and all(b <= a for a, b in zip(inc, inc[1:])):
        return "saturating"
    if all(v > GROWING for v in inc):
        return "growing"
    return "inconclusive"


def cmd_mildness(args) -> int:
    t0 = time.perf_counter()
    case = mildness_verdict(args.alpha, args.d)
    steps = cutoff_ladder(args.alpha, args.d, args.t, args.lam, args.radii)
    evidence = _ladder_evidence(steps)
    expected = {"mild": "saturating", "not_mild": "growing"}.get(case.verdict.value)
    print(f"verdict: {case.verdict.value} ({case.reason})")
    print(f"ladder evidence: {evidence}"
          + ("" if expected is None else f" (theory expects {expected})"))
    rows = [[repr(s.R), repr(s.V), repr(s.V_double), repr(s.increment)] for s in steps]
    text = _write_rows(args.out, ["R", "V(R)", "V(2R)", "V(2R)/V(R)-1"], rows)
    sys.stdout.write(text)
    diagnostics = {"verdict": case.verdict.value, "evidence": evidence,
                   "agrees": expected == evidence if expected else None,
                   "ladder": [[s.R, s.V, s.V_double, s.increment] for s in steps]}
    if args.n_paths:
        if args.d == 1 and 0 < args.alpha < 1:
            mc = refinement_ladder(args.alpha, args.dxs, args.n_paths, args.seed, lam=args.lam, t=args.t)
            print("dx,N_t,second_moment,standard_error")
            for r in mc:
                print(f"{r.dx!r},{r.N_t},{r.estimate.second_moment!r},{r.estimate.standard_error!r}")
            diagnostics["refinement"] = [[r.dx, r.N_t, r.estimate.second_moment, r.estimate.standard_error]
                                         for r in mc]
        else:
            print("grid refinement skipped: the grid scheme covers d = 1 and 0 < alpha < 1 only")
    report = RunReport("mildness", config={"alpha": args.alpha, "d": args.d, "t": args.t,
                                           "lambda": args.lam, "radii": args.radii,
                                           "n_paths": args.n_paths, "dxs": args.dxs},
                       seed=args.seed if args.n_paths else None, diagnostics=diagnostics)
    if args.out:
        report.add_output("csv", args.out)
    _emit_report(report.finish(t0), args.report)
    return 0


def cmd_ode_inclusion(args) -> int:
    t0 = time.perf_counter()
    x = np.linspace(0.0, args.x_max, args.n)
    if args.selector == "constant":
        g = np.full_like(x, args.value)
    else:
        g = random_selector(derive_rng(args.seed, 0), args.lo, args.hi)(x)
    f = ode_inclusion_solve(args.kind, g, x, allow_boundary=args.allow_boundary)
    h = x[1] - x[0]
    tol = 10.0 * h * h if args.tol is None else args.tol
    rep = ode_inclusion_verify(args.kind, x, f, tol)
    rows = []
    for j, (xv, fv) in enumerate(zip(x, f)):
        if 0 < j < x.size - 1:
            rows.append([repr(float(xv)), repr(float(fv)), int(rep.lower_ok[j - 1]), int(rep.upper_ok[j - 1])])
        else:
            rows.append([repr(float(xv)), repr(float(fv)), "", ""])
    text = _write_rows(args.out, ["x", "f", "lower_ok", "upper_ok"], rows)
    if args.out is None:
        sys.stdout.write(text)
    print(f"verification {'passed' if rep.passed else 'failed'} (tol = {tol:.3g})",
          file=sys.stdout if args.out else sys.stderr)
    report = RunReport("ode-inclusion", config={"kind": args.kind, "selector": args.selector,
                                                "value": args.value, "x_max": args.x_max, "n": args.n,
                                                "allow_boundary": args.allow_boundary, "tol": tol},
                       seed=args.seed, diagnostics={"passed": rep.passed,
                                                    "first_failure": rep.first_failure()})
    if args.out:
        report.add_output("csv", args.out)
    _emit_report(report.finish(t0), args.report)
    return 0


# }}}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fhi", description="Fractional stochastic heat inclusion toolkit")
    ap.add_argument("--version", action="version", version=f"fhi {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--report", help="append the JSON run report to this file (default: stderr)")

    p = sub.add_parser("simulate", help="run the finite-difference scheme")
    p.add_argument("--config", help="key = value file; 'paper' selects the shipped paper.cfg")
    p.add_argument("--out-dir", default=".", help="directory for outputs (default: .)")
    p.add_argument("--prefix", default="field", help="output file stem (default: field)")
    p.add_argument("--export", action="store_true", help="also write the long-form figure CSV")
    p.add_argument("--threshold", type=float, default=0.0, help="exceedance threshold (default 0)")
    p.add_argument("--dump-noise", action="store_true", help="write the noise matrix as FHIG")
    p.add_argument("--report", help="report file (default: <out-dir>/report.jsonl)")
    for key, (typ, _) in SCHEMA.items():
        if typ is bool:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, action="store_const", const="true")
        else:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar=typ.__name__.upper())
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ml-eval", help="evaluate E_{alpha,beta}(z)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--z", type=float, nargs="+", required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-terms", type=int, default=200)
    common(p)
    p.set_defaults(func=cmd_ml_eval)

    p = sub.add_parser("caputo-check", help="discrete Caputo derivative of f(x)=x vs the exact value")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--n", type=int, nargs="+", default=[64, 128, 256], help="steps on [0, x]")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_caputo_check)

    p = sub.add_parser("kernel", help="dump h0 or I1 slices as lag,offset,value CSV")
    p.add_argument("--what", choices=["h0", "I1"], default="h0")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--lags", type=_floats, default=[1.0], help="time lags, comma separated")
    p.add_argument("--x-max", type=float, default=5.0)
    p.add_argument("--n-x", type=int, default=101)
    p.add_argument("--no-check", action="store_true", help="skip the grid-refinement check")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("mildness", help="classify (alpha, d) and show the cutoff ladder")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--radii", type=_floats, default=[50.0, 100.0, 200.0])
    p.add_argument("--n-paths", type=int, default=0,
                   help="also run a Monte Carlo dx-refinement ladder with this many paths (0: skip)")
    p.add_argument("--dxs", type=_floats, default=[0.2, 0.1, 0.05], help="dx ladder for --n-paths")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_mildness)

    p = sub.add_parser("ode-inclusion", help="solve and verify a scalar ODE inclusion")
    p.add_argument("--kind", choices=[k.value for k in OdeKind], required=True)
    p.add_argument("--selector", choices=["constant", "random"], default="constant")
    p.add_argument("--value", type=float, default=0.5, help="constant selector value")
    p.add_argument("--lo", type=float, default=0.05)
    p.add_argument("--hi", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x-max", type=float, default=1.0)
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--tol", type=float, help="verification slack (default 10*h^2)")
    p.add_argument("--allow-boundary", action="store_true")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_ode_inclusion)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, ContractError) as exc:
        print(f"fhi: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, AccuracyError) as exc:
        print(f"fhi: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"fhi: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
