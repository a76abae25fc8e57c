"""Command-line front end.

Every subcommand reads a TOML configuration with the sections ``model``,
``constraints``, ``estimation``, ``task`` and ``io``; command-line flags
override the matching keys. A human summary goes to standard output and,
with ``--out``, a result document (see :mod:`scoredriven.fileio`) is
written.

Exit codes: 0 on success, 1 for usage, configuration or input errors, 2
when the computation itself fails.
"""

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import list_distributions
from .dynamics import filter_pass
from .errors import ConvergenceWarning, SpecificationError
from .estimation import ConstraintSpec, estimate, resolve_lik_skip
from .fileio import DataError, Document, Table, parse_data, read_matrix, read_results, write_results
from .forecast import forecast, simulate_series
from .model import ModelSpec
from .uncertainty import bootstrap, filter_uncertainty

if sys.version_info >= (3, 11):  # pragma: no cover
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SUBCOMMANDS = ("estimate", "forecast", "simulate", "bootstrap", "filter", "distr")

DEFAULTS = {
    "model": {"distr": None, "param": None, "scaling": "unit", "regress": "joint", "p": 1, "q": 1,
              "par_static": None, "par_link": None, "par_init": None, "coef": None},
    "constraints": {"fix_value": None, "fix_other": None, "special": [], "lower": None, "upper": None},
    "estimation": {"lik_skip": 0, "coef_start": None, "max_eval": 1_000_000, "xtol": 1e-10, "hessian": True},
    "task": {"t_ahead": 1, "t_sim": None, "burn_in": 0, "method": None, "rep_ahead": 1000, "rep_boot": 1000,
             "rep_gen": 1000, "block_length": None, "quant": [0.025, 0.975], "seed": None},
    "io": {"data": None, "out": None, "y": None, "x": None, "x_ahead": None, "data_out": None},
}


class UsageError(Exception):
    """Bad command line, configuration or input; exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_config(path):
    """Read a TOML configuration and merge it over the defaults.

    Raises
    ------
    UsageError
        For unreadable files, syntax errors and unknown sections or keys.
    """
    cfg = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    if path is None:
        return cfg
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config {path}: {exc}") from None
    for sec, vals in raw.items():
        if sec not in cfg:
            raise UsageError(f"config: unknown section [{sec}]")
        if not isinstance(vals, dict):
            raise UsageError(f"config: {sec} must be a section")
        for key, value in vals.items():
            if key not in cfg[sec]:
                raise UsageError(f"config: unknown key {sec}.{key}")
            cfg[sec][key] = value
    base = Path(path).parent
    for key in ("data", "x_ahead"):
        value = cfg["io"][key]
        if value is not None and not Path(value).is_absolute():
            cfg["io"][key] = str(base / value)
    return cfg


def _apply_flags(cfg, args):
    io, task = cfg["io"], cfg["task"]
    for flag, sec, key in (("data", io, "data"), ("out", io, "out"), ("seed", task, "seed"),
                           ("t_sim", task, "t_sim"), ("t_ahead", task, "t_ahead"), ("method", task, "method"),
                           ("block_length", task, "block_length"), ("x_ahead", io, "x_ahead"),
                           ("data_out", io, "data_out")):
        value = getattr(args, flag, None)
        if value is not None:
            sec[key] = value
    rep = getattr(args, "rep", None)
    if rep is not None:
        key = {"forecast": "rep_ahead", "bootstrap": "rep_boot", "filter": "rep_gen"}.get(args.command)
        if key:
            task[key] = rep


def _x_columns(cfg, spec_probe):
    """Regressor column names per time-varying parameter."""
    x = cfg["io"]["x"]
    names = [spec_probe.distr.param_names[i] for i in spec_probe.tv_index]
    if x is None:
        return [[] for _ in names]
    if isinstance(x, str):
        x = [x]
    if isinstance(x, list):
        return [list(x) for _ in names]
    if isinstance(x, dict):
        unknown = set(x) - set(names)
        if unknown:
            raise UsageError(f"config: io.x names unknown time-varying parameter {sorted(unknown)[0]!r}")
        return [list(x.get(n, [])) for n in names]
    raise UsageError("config: io.x must be a column name, a list or a table by parameter")


def build_spec(cfg):
    """Model specification and regressor columns from a configuration."""
    m = cfg["model"]
    if m["distr"] is None:
        raise UsageError("config: model.distr is required")
    try:
        kw = dict(param=m["param"], scaling=m["scaling"], regress=m["regress"], p=m["p"], q=m["q"],
                  par_static=m["par_static"], par_link=m["par_link"])
        probe = ModelSpec.build(m["distr"], **kw)
        cols = _x_columns(cfg, probe)
        counts = np.zeros(probe.distr.param_count, dtype=int)
        counts[probe.tv_index] = [len(c) for c in cols]
        spec = ModelSpec.build(m["distr"], par_init=m["par_init"], m=counts, **kw)
    except (SpecificationError, TypeError, ValueError) as exc:
        raise UsageError(f"config: model: {exc}") from None
    return spec, cols


def _read_data(cfg, cols, required=True):
    path = cfg["io"]["data"]
    if path is None:
        if required:
            raise UsageError("no data: pass --data or set io.data")
        return None, None
    table = parse_data(path)
    ycol = cfg["io"]["y"] or table.names[0]
    y = table.numeric(ycol)
    return y, _regressors(table, cols)


def _regressors(table, cols):
    if not any(cols):
        return None
    mats = []
    for c in cols:
        mat = np.column_stack([table.numeric(n) for n in c]) if c else np.zeros((table.n_rows, 0))
        if np.any(np.isnan(mat)):
            raise DataError(f"{table.path}: regressor columns contain missing values")
        mats.append(mat)
    return mats


def build_constraints(cfg):
    c = cfg["constraints"]
    fix_other = c["fix_other"]
    if fix_other is not None:
        fix_other = [tuple(t) for t in fix_other]
    return ConstraintSpec(c["fix_value"], fix_other, tuple(c["special"] or ()), c["lower"], c["upper"])


def _coef_vector(spec, coef, what):
    names = spec.layout.names
    if isinstance(coef, dict):
        missing = [n for n in names if n not in coef]
        extra = [n for n in coef if n not in names]
        if missing or extra:
            raise UsageError(f"{what}: coefficient names do not match the model "
                             f"(missing {missing}, unknown {extra})")
        return np.array([float(coef[n]) for n in names])
    arr = np.asarray(coef, dtype=float).ravel()
    if arr.size != len(names):
        raise UsageError(f"{what}: expected {len(names)} coefficients, got {arr.size}")
    return arr


def _coefs_from_fit(spec, path):
    doc = read_results(path)
    if "coefficients" not in doc:
        raise UsageError(f"{path}: no coefficients section")
    table = doc["coefficients"]
    return _coef_vector(spec, dict(zip(table.column("name"), table.numeric("estimate"))), str(path))


def _fit(cfg, spec, y, x, args, start=None):
    e = cfg["estimation"]
    lik_skip = e["lik_skip"]
    coef_start = start if start is not None else (
        None if e["coef_start"] is None else _coef_vector(spec, e["coef_start"], "estimation.coef_start"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return estimate(y, spec, x, build_constraints(cfg), lik_skip, coef_start, int(e["max_eval"]),
                        float(e["xtol"]), bool(e["hessian"]), getattr(args, "progress", False))


def _config_section(cfg):
    flat = {}
    for sec, vals in cfg.items():
        for key, value in vals.items():
            if value is not None:
                flat[f"{sec}.{key}"] = value
    return flat


def _model_meta(spec):
    d = spec.distr
    return {"distr": d.label, "param": d.parametrization, "scaling": spec.scaling, "regress": spec.regress}


def _path_table(out, t0=1):
    names = out.par_names
    cols = ["t"] + [f"par:{n}" for n in names] + [f"score:{n}" for n in names] + ["loglik"]
    rows = [[t0 + t] + list(out.par_tv[t]) + list(out.score_tv[t]) + [out.loglik_t[t]]
            for t in range(out.par_tv.shape[0])]
    return Table(cols, rows)


def _coef_table(est):
    rows = [[n, est.coef_est.values[i], est.coef_sd[i], est.z_stat[i], est.p_value[i]]
            for i, n in enumerate(est.coef_est.names)]
    return Table(["name", "estimate", "std_error", "z_test", "p_value"], rows)


def cmd_estimate(cfg, args, doc):
    spec, cols = build_spec(cfg)
    y, x = _read_data(cfg, cols)
    est = _fit(cfg, spec, y, x, args)
    print(est.summary())
    meta = doc.add("result", {"kind": "estimate", **_model_meta(spec)})
    meta.update(T=int(y.size), t_eff=est.t_eff, k=est.k, loglik=est.loglik, aic=est.aic, bic=est.bic,
                converged=est.optim["converged"], evaluations=est.optim["evaluations"],
                degenerate=est.optim["degenerate"], lik_skip=est.lik_skip)
    doc.add("coefficients", _coef_table(est))
    if args.emit_vcov and est.coef_vcov is not None:
        names = est.coef_est.names
        doc.add("vcov", Table(["name"] + names, [[n] + list(est.coef_vcov[i]) for i, n in enumerate(names)]))
    doc.add("filter", _path_table(est.filter))


def _resolve_coef(cfg, args, spec, y, x):
    if getattr(args, "fit", None):
        return _coefs_from_fit(spec, args.fit)
    if cfg["model"]["coef"] is not None:
        return _coef_vector(spec, cfg["model"]["coef"], "model.coef")
    if y is None:
        raise UsageError("coefficients needed: pass --fit, set model.coef or supply data to estimate")
    return _fit(cfg, spec, y, x, args).coef_est.values


def _x_ahead(cfg, cols, t_ahead):
    if not any(cols) or t_ahead == 0:
        return None
    path = cfg["io"]["x_ahead"]
    if path is None:
        raise UsageError("the model has regressors: pass --x-ahead or set io.x_ahead")
    table = parse_data(path)
    xs = _regressors(table, cols)
    if table.n_rows < t_ahead:
        raise DataError(f"{path}: {table.n_rows} rows of future regressors, need {t_ahead}")
    return [xi[:t_ahead] for xi in xs]


def cmd_forecast(cfg, args, doc):
    spec, cols = build_spec(cfg)
    y, x = _read_data(cfg, cols)
    coef = _resolve_coef(cfg, args, spec, y, x)
    task = cfg["task"]
    method = task["method"] or "mean_path"
    t_ahead = int(task["t_ahead"])
    fc = forecast(None, t_ahead, _x_ahead(cfg, cols, t_ahead), method, int(task["rep_ahead"]), task["quant"],
                  task["seed"], spec=spec, coef=coef, y=y, x=x)
    cols_out = ["t", "y_mean"]
    rows = [[int(fc.t_index[h]), fc.y_mean[h]] for h in range(fc.horizon)]
    if fc.y_sd is not None:
        cols_out += ["y_sd"] + [f"y_q{q:g}" for q in fc.quant]
        for h, row in enumerate(rows):
            row += [fc.y_sd[h]] + list(fc.y_quant[h])
    cols_out += [f"par:{n}" for n in fc.par_names]
    for h, row in enumerate(rows):
        row += list(fc.par_tv_ahead[h])
    table = Table(cols_out, rows)
    print(f"Forecast ({method}), {fc.horizon} steps ahead")
    print(_text_table(table))
    doc.add("result", {"kind": "forecast", "method": method, **_model_meta(spec), "T": int(y.size),
                       "horizon": fc.horizon, "quant": list(fc.quant)})
    doc.add("coefficients", Table(["name", "estimate"], [[n, v] for n, v in zip(spec.layout.names, coef)]))
    doc.add("forecast", table)


def cmd_simulate(cfg, args, doc):
    spec, cols = build_spec(cfg)
    task = cfg["task"]
    if task["t_sim"] is None:
        raise UsageError("simulate needs --t-sim or task.t_sim")
    if cfg["model"]["coef"] is None and not getattr(args, "fit", None):
        raise UsageError("simulate needs coefficients: set model.coef or pass --fit")
    coef = _resolve_coef(cfg, args, spec, None, None)
    t_sim, burn = int(task["t_sim"]), int(task["burn_in"])
    x = None
    if any(cols):
        if cfg["io"]["data"] is None:
            raise UsageError("the model has regressors: pass --data with the regressor columns")
        x = _regressors(parse_data(cfg["io"]["data"]), cols)
    sim = simulate_series(spec, coef, t_sim, x, task["seed"], burn)
    names = sim.par_names
    table = Table(["t", "y"] + [f"par:{n}" for n in names] + [f"score:{n}" for n in names],
                  [[t + 1, sim.y_sim[t]] + list(sim.par_tv_sim[t]) + list(sim.score_sim[t])
                   for t in range(t_sim)])
    print(f"Simulated {t_sim} observations from {spec.describe()}")
    if t_sim:
        print(f"mean {np.mean(sim.y_sim):.7g}, sd {np.std(sim.y_sim):.7g}")
    doc.add("result", {"kind": "simulate", **_model_meta(spec), "t_sim": t_sim, "burn_in": burn,
                       "seed": task["seed"]})
    doc.add("simulation", table)
    data_out = cfg["io"]["data_out"]
    if data_out:
        lines = ["y"] + [f"{v:.17g}" for v in sim.y_sim]
        try:
            Path(data_out).write_text("\n".join(lines) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {data_out}: {exc.strerror}") from None


def cmd_bootstrap(cfg, args, doc):
    spec, cols = build_spec(cfg)
    y, x = _read_data(cfg, cols)
    start = _coefs_from_fit(spec, args.fit) if args.fit else None
    est = _fit(cfg, spec, y, x, args, start=start)
    task = cfg["task"]
    method = task["method"] or "parametric"
    boot = bootstrap(est, method, int(task["rep_boot"]), task["block_length"], task["quant"], task["seed"],
                     args.jobs)
    qcols = [f"q{q:g}" for q in boot.quant]
    table = Table(["name", "estimate", "mean", "sd"] + qcols,
                  [[n, est.coef_est.values[i], boot.coef_mean[i], boot.coef_sd[i]] + list(boot.coef_quant[i])
                   for i, n in enumerate(boot.coef_names)])
    print(f"Bootstrap ({method}), {boot.rep_boot} replicates, {boot.failures} failed")
    print(_text_table(table))
    doc.add("result", {"kind": "bootstrap", "method": method, **_model_meta(spec), "rep_boot": boot.rep_boot,
                       "failures": boot.failures, "quant": list(boot.quant)})
    doc.add("bootstrap", table)
    if args.emit_samples:
        doc.add("coef_samples", Table(["rep"] + boot.coef_names,
                                      [[r + 1] + list(row) for r, row in enumerate(boot.coef_samples)]))


def cmd_filter(cfg, args, doc):
    spec, cols = build_spec(cfg)
    y, x = _read_data(cfg, cols)
    task = cfg["task"]
    method = task["method"]
    if method == "simulated_coefs" and not args.fit and cfg["model"]["coef"] is None:
        est = _fit(cfg, spec, y, x, args)
        coef, vcov = est.coef_est.values, est.coef_vcov
    else:
        coef = _resolve_coef(cfg, args, spec, y, x)
        vcov = None
        if method == "simulated_coefs":
            if not args.fit:
                raise UsageError("simulated_coefs needs a covariance: pass --fit with a vcov section")
            doc_fit = read_results(args.fit)
            if "vcov" not in doc_fit:
                raise UsageError(f"{args.fit}: no vcov section (estimate with --emit-vcov)")
            vcov = doc_fit["vcov"].matrix(spec.layout.names)
    out = filter_pass(spec, coef, y, x, resolve_lik_skip(spec, cfg["estimation"]["lik_skip"]))
    print(f"Filtered {spec.describe()}: log-likelihood {out.loglik_sum:.7g}")
    doc.add("result", {"kind": "filter", **_model_meta(spec), "T": int(y.size), "loglik": out.loglik_sum,
                       "ok": out.ok})
    doc.add("coefficients", Table(["name", "estimate"], [[n, v] for n, v in zip(spec.layout.names, coef)]))
    doc.add("filter", _path_table(out))
    if method is None:
        return
    if method not in ("given_coefs", "simulated_coefs"):
        raise UsageError(f"filter --method must be given_coefs or simulated_coefs, not {method!r}")
    coef_set = coef[None, :] if method == "given_coefs" else None
    fu = filter_uncertainty(None, method, coef_set, int(task["rep_gen"]), 0, None, 1, task["quant"],
                            task["seed"], spec=spec, y=y, x=x, vcov=vcov, coef=coef)
    qs = fu.quant
    colsu = ["t"]
    for n in fu.par_names:
        colsu += [f"mean:{n}", f"sd:{n}"] + [f"q{q:g}:{n}" for q in qs]
    rows = []
    for t in range(fu.par_tv_mean.shape[0]):
        row = [t + 1]
        for k in range(len(fu.par_names)):
            row += [fu.par_tv_mean[t, k], fu.par_tv_sd[t, k]] + list(fu.par_tv_quant[t, k])
        rows.append(row)
    print(f"Parameter band width ({qs[0]:g} to {qs[-1]:g}), averaged over time: {fu.band_width():.7g}")
    doc.add("filter_uncertainty", Table(colsu, rows))


def cmd_distr(cfg, args, doc):
    descs = list_distributions(args.type, True if args.default_only else None)
    cols = ["distr", "param", "type", "dim", "n_params", "params", "supports"]
    rows = [[d.label, d.parametrization, d.data_type, d.dim_kind, d.param_count, " ".join(d.param_names),
             " ".join(d.param_supports)] for d in descs]
    table = Table(cols, rows)
    print(_text_table(table))
    doc.add("result", {"kind": "distr", "count": len(rows)})
    doc.add("distributions", table)


def _text_table(table):
    def cell(v):
        if isinstance(v, float):
            return "NA" if not np.isfinite(v) else f"{v:.7g}"
        return str(v)

    grid = [table.columns] + [[cell(v) for v in row] for row in table.rows]
    widths = [max(len(r[j]) for r in grid) for j in range(len(table.columns))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in grid)


COMMANDS = {"estimate": cmd_estimate, "forecast": cmd_forecast, "simulate": cmd_simulate,
            "bootstrap": cmd_bootstrap, "filter": cmd_filter, "distr": cmd_distr}


def build_parser():
    parser = _Parser(prog="scoredriven", description="Score-driven (GAS) time-series models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def common(p, data=True):
        p.add_argument("--config", help="TOML configuration file")
        if data:
            p.add_argument("--data", help="CSV file with the series (and regressors)")
        p.add_argument("--out", help="write a result document here")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--progress", action="store_true", help="report optimizer progress on stderr")
        return p

    p = common(sub.add_parser("estimate", help="fit a model by maximum likelihood"))
    p.add_argument("--emit-vcov", action="store_true", help="include the covariance matrix in --out")
    p = common(sub.add_parser("forecast", help="forecast from a fitted model"))
    p.add_argument("--fit", help="result document of a previous estimate")
    p.add_argument("--t-ahead", type=int, dest="t_ahead")
    p.add_argument("--method", choices=("mean_path", "simulated_paths"))
    p.add_argument("--rep", type=int, help="simulated paths")
    p.add_argument("--x-ahead", dest="x_ahead", help="CSV with future regressor values")
    p = common(sub.add_parser("simulate", help="simulate a series"))
    p.add_argument("--fit", help="take coefficients from a previous estimate")
    p.add_argument("--t-sim", type=int, dest="t_sim")
    p.add_argument("--data-out", dest="data_out", help="also write the simulated series as CSV")
    p = common(sub.add_parser("bootstrap", help="bootstrap the coefficient distribution"))
    p.add_argument("--fit", help="start from a previous estimate")
    p.add_argument("--method", choices=("parametric", "simple_block", "moving_block", "stationary_block"))
    p.add_argument("--rep", type=int, help="bootstrap replicates")
    p.add_argument("--block-length", type=float, dest="block_length")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--emit-samples", action="store_true", help="include every replicate in --out")
    p = common(sub.add_parser("filter", help="filter parameters at given coefficients"))
    p.add_argument("--fit", help="take coefficients from a previous estimate")
    p.add_argument("--method", choices=("given_coefs", "simulated_coefs"))
    p.add_argument("--rep", type=int, help="coefficient draws for simulated_coefs")
    p.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; filtering runs serially")
    p = sub.add_parser("distr", help="list the available distributions")
    p.add_argument("--type", help="keep one data type (binary, count, integer, real, positive, ...)")
    p.add_argument("--default-only", action="store_true", help="only default parametrizations")
    p.add_argument("--out", help="write a result document here")
    return parser


def run(argv=None):
    """Run the command line; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"scoredriven: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    try:
        cfg = load_config(getattr(args, "config", None))
        _apply_flags(cfg, args)
        if args.command == "bootstrap" and args.block_length is not None and args.block_length.is_integer():
            cfg["task"]["block_length"] = int(args.block_length)
        doc = Document()
        COMMANDS[args.command](cfg, args, doc)
        if args.command != "distr":
            doc.add("config", _config_section(cfg))
        out = cfg["io"]["out"] if args.command != "distr" else args.out
        if out:
            write_results(doc, out)
    except (UsageError, DataError, SpecificationError) as exc:
        print(f"scoredriven: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # computation failures
        print(f"scoredriven: computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
