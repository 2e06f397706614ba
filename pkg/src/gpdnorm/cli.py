"""Command-line entry point: ``gpdnorm {simulate,reject,audit,fit,normtest}``.

Every command writes its tables as CSV plus a JSON result file and a
``run-manifest.ini`` holding the fully resolved settings. Passing that
manifest back with ``--config`` reproduces the outputs byte for byte.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .appfit import exceedances, fit_tail, load_price_csv, log_returns, pp_plot_data
from .config import ConfigError, dump_section, load_section, resolve
from .estimators import Method
from .gpd import GpdParams
from .normtest import jarque_bera, lilliefors, moment_stats, mse_bias_summary
from .simlab import (ExperimentConfig, audit_published, read_audit_rows, run_normality_grid,
                     run_rejection_study)

log = logging.getLogger("gpdnorm")

MANIFEST = "run-manifest.ini"


class CliError(Exception):
    pass


# --- output helpers ---------------------------------------------------------

def _fmt(v, digits=4):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.{digits}f}"
    return str(v)


def _write_text(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _render_table(header, rows, digits=4):
    # digits: one int for every column, or a dict of per-column overrides
    per = {h: (digits.get(h, 4) if isinstance(digits, dict) else digits) for h in header}
    cells = [[_fmt(v, per[h]) for h, v in zip(header, r)] for r in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


def _emit(out_dir, stem, header, rows, payload, command, settings, digits=4):
    os.makedirs(out_dir, exist_ok=True)
    _write_text(os.path.join(out_dir, f"{stem}.csv"), _csv_text(header, rows))
    table = _render_table(header, rows, digits)
    _write_text(os.path.join(out_dir, f"{stem}.txt"), table)
    doc = {"command": command, "version": __version__, "config": settings, "results": payload}
    _write_text(os.path.join(out_dir, f"{stem}.json"), json.dumps(doc, indent=2) + "\n")
    _write_text(os.path.join(out_dir, MANIFEST), dump_section(command, settings))
    sys.stdout.write(table)


def _settings(args, command, overrides):
    raw = load_section(args.config, command) if args.config else {}
    overrides = dict(overrides)
    overrides["seed"] = args.seed
    return resolve(command, raw, overrides)


def _need(settings, key, flag):
    if settings.get(key) is None:
        raise CliError(f"missing required setting {key!r} (use {flag} or the config file)")
    return settings[key]


# --- commands ---------------------------------------------------------------

def cmd_simulate(args):
    s = _settings(args, "simulate", {})
    seed = _need(s, "seed", "--seed")
    header = ["xi0", "n", "method", "jb_pvalue", "lilliefors_pvalue", "t_pvalue", "t_stat",
              "skewness", "kurtosis", "bias", "mse", "failures"]
    rows, payload = [], []
    for xi0 in s["xi0"]:
        cfg = ExperimentConfig(xi0=xi0, sigma0=s["sigma0"], mu0=s["mu0"],
                               sample_sizes=s["sample_sizes"], methods=s["methods"], m=s["m"],
                               mc_pvalue_reps=s["mc_pvalue_reps"], master_seed=seed,
                               keep_minimum=s["keep_minimum"])
        for c in run_normality_grid(cfg, threads=args.threads):
            rows.append([xi0, c.n, c.method.value, c.jb_pvalue, c.lilliefors_pvalue, c.t_pvalue,
                         c.t_stat, c.skewness, c.kurtosis, c.summary.bias, c.summary.mse,
                         c.failures])
            payload.append(dict(zip(header, rows[-1])))
    _emit(args.out, "simulate", header, rows, payload, "simulate", s)


def cmd_reject(args):
    s = _settings(args, "reject", {})
    seed = _need(s, "seed", "--seed")
    header = ["xi0", "n", "mean_z", "var_z", "pct_rejected", "used", "failures"]
    rows, payload = [], []
    for xi0 in s["xi0"]:
        cfg = ExperimentConfig(xi0=xi0, sigma0=s["sigma0"], mu0=s["mu0"],
                               sample_sizes=s["sample_sizes"], methods=(s["method"],), m=s["m"],
                               bootstrap_reps=s["bootstrap_reps"], master_seed=seed,
                               keep_minimum=s["keep_minimum"])
        for r in run_rejection_study(cfg, threads=args.threads):
            rows.append([xi0, r.n, r.mean_z, r.var_z, round(100 * r.reject_rate_5pct, 1),
                         r.used, r.failures])
            payload.append(dict(zip(header, rows[-1])))
    _emit(args.out, "reject", header, rows, payload, "reject", s, digits={"pct_rejected": 1})


def cmd_audit(args):
    s = _settings(args, "audit", {"input": args.input, "m_target": args.m_target})
    path = _need(s, "input", "--input")
    audit = audit_published(read_audit_rows(path), s["m_target"])
    with_star = s["m_target"] is not None
    header = ["label", "n", "z"] + (["z_star"] if with_star else [])
    rows = [[a.label, a.n, a.z] + ([a.z_star] if with_star else []) for a in audit]
    payload = [dict(zip(header, r)) for r in rows]
    _emit(args.out, "audit", header, rows, payload, "audit", s)


def cmd_fit(args):
    s = _settings(args, "fit", {
        "prices": args.prices, "top_k": args.top_k, "threshold": args.threshold,
        "method": args.method, "boot_reps": args.boot_reps, "confidence": args.confidence,
        "pp_out": args.pp_out, "date_col": args.date_col, "price_col": args.price_col,
    })
    if args.top_k is not None:
        s["threshold"] = None
    elif args.threshold is not None:
        s["top_k"] = None
    if s["top_k"] is not None and s["threshold"] is not None:
        raise CliError("top_k and threshold are mutually exclusive")
    if s["top_k"] is None and s["threshold"] is None:
        s["top_k"] = 150
    seed = _need(s, "seed", "--seed")
    path = _need(s, "prices", "--prices")

    prices = load_price_csv(path, s["date_col"], s["price_col"])
    rets = log_returns(prices)
    exc, u = exceedances(rets, top_k=s["top_k"], threshold=s["threshold"])
    tf = fit_tail(exc, s["method"], s["boot_reps"], np.random.default_rng(seed),
                  s["confidence"], threshold=u)
    tf.extra.update({"n_prices": len(prices), "n_returns": len(rets)})

    header = ["method", "xi", "sigma", "converged"]
    rows = [[m.value, r.xi_hat, r.sigma_hat, r.converged] for m, r in tf.fits.items()]
    _emit(args.out, "fit", header, rows, tf.to_dict(), "fit", s)

    pp = pp_plot_data(exc, GpdParams(tf.xi_hat, tf.sigma_hat)) if tf.xi_hat > 0 else None
    pp_path = s["pp_out"] or os.path.join(args.out, "pp.csv")
    if pp is not None:
        _write_text(pp_path, _csv_text(["empirical", "model"], pp.tolist()))
    else:
        log.warning("fitted shape is not positive; P-P data not written")
    lo, hi = tf.ci95
    sys.stdout.write(
        f"threshold {u:.6f}, k = {tf.k}; {tf.method.value} xi = {tf.xi_hat:.4f}, "
        f"bootstrap sd = {tf.bootstrap_sd:.4f}\n"
        f"{100 * tf.confidence:g}% CI [{lo:.4f}, {hi:.4f}], tail index >= {tf.index_lower_bound:.4f}\n")


def _read_numbers(path, column):
    with open(path, newline="") as fh:
        text = fh.read()
    vals = []
    if column is None:
        for i, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                vals.append(float(line))
            except ValueError:
                if not vals and i == 1:
                    continue  # header
                raise CliError(f"{path}, line {i}: not a number: {line!r}") from None
    else:
        reader = csv.DictReader(io.StringIO(text))
        if column not in (reader.fieldnames or []):
            raise CliError(f"{path}: no column {column!r}")
        for row in reader:
            try:
                vals.append(float(row[column]))
            except (TypeError, ValueError):
                raise CliError(f"{path}, line {reader.line_num}: bad value in {column!r}") from None
    return np.array(vals)


def cmd_normtest(args):
    s = _settings(args, "normtest", {"input": args.input, "column": args.column,
                                     "theta0": args.theta0, "mc_reps": args.mc_reps})
    x = _read_numbers(_need(s, "input", "--input"), s["column"])
    rng = s["seed"]
    jb = jarque_bera(x, mc_reps=s["mc_reps"], rng=rng)
    jba = jarque_bera(x, pvalue_method="asymptotic")
    lf = lilliefors(x, mc_reps=s["mc_reps"], rng=rng)
    mom = moment_stats(x)
    header = ["test", "statistic", "pvalue", "pvalue_method"]
    rows = [["jarque_bera", jb.statistic, jb.pvalue, jb.pvalue_method.value],
            ["jarque_bera", jba.statistic, jba.pvalue, jba.pvalue_method.value],
            ["lilliefors", lf.statistic, lf.pvalue, lf.pvalue_method.value]]
    payload = {"n": int(x.size), "mean": mom.mean, "variance": mom.variance,
               "skewness": mom.skewness, "kurtosis": mom.kurtosis,
               "tests": [dict(zip(header, r)) for r in rows]}
    if s["theta0"] is not None:
        sm = mse_bias_summary(x, s["theta0"])
        rows.append(["mse_bias_t", sm.t, sm.z_pvalue, "asymptotic"])
        payload["tests"].append(dict(zip(header, rows[-1])))
        payload["summary"] = {"bias": sm.bias, "mse": sm.mse, "S2": sm.S2, "t": sm.t}
    _emit(args.out, "normtest", header, rows, payload, "normtest", s)


# --- parser -----------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file (or a run manifest)")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed")
    common.add_argument("--out", default=".", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=int, default=1, metavar="N",
                        help="worker threads; results do not depend on it")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="gpdnorm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common],
                   help="normality of the estimators over a grid of sample sizes")
    sub.add_parser("reject", parents=[common],
                   help="rejection rate of H0: xi = xi0 with a bootstrap sd")

    a = sub.add_parser("audit", parents=[common],
                       help="bias t statistic from published bias/RMSE rows")
    a.add_argument("--input", metavar="PATH", help="CSV with header label,n,bias,rmse,m")
    a.add_argument("--m-target", type=int, metavar="M",
                   help="also rescale to M replicates (z*)")

    f = sub.add_parser("fit", parents=[common], help="tail fit of a closing-price file")
    f.add_argument("--prices", metavar="PATH")
    f.add_argument("--date-col")
    f.add_argument("--price-col")
    rule = f.add_mutually_exclusive_group()
    rule.add_argument("--top-k", type=int, metavar="K", help="use the K largest returns")
    rule.add_argument("--threshold", type=float, metavar="U", help="use returns above U")
    f.add_argument("--method", choices=[m.value for m in Method])
    f.add_argument("--boot-reps", type=int, metavar="B")
    f.add_argument("--confidence", type=float, metavar="C")
    f.add_argument("--pp-out", metavar="PATH", help="P-P plot data (default OUT/pp.csv)")

    n = sub.add_parser("normtest", parents=[common],
                       help="Jarque-Bera / Lilliefors / bias t on a column of numbers")
    n.add_argument("--input", metavar="PATH")
    n.add_argument("--column")
    n.add_argument("--theta0", type=float)
    n.add_argument("--mc-reps", type=int)
    return p


COMMANDS = {
    "simulate": cmd_simulate,
    "reject": cmd_reject,
    "audit": cmd_audit,
    "fit": cmd_fit,
    "normtest": cmd_normtest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        COMMANDS[args.command](args)
    except (CliError, ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"gpdnorm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
