"""Command-line front end.

One-shot queries take flags; experiment reports take a JSON config.  Every
subcommand accepts ``--config FILE`` with the same keys as its flags (flags
win) and ``--emit-config FILE`` to write the effective configuration, which
reproduces the same output when fed back through ``--config``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .closedform import (
    DegenerateTransform,
    LimitKind,
    joint_laplace,
    joint_laplace_pre,
    limit_kind,
)
from .experiments import ExperimentConfig, consistency_sweep, run_report
from .mle import estimate_alpha_batch, fisher_normalized_error, random_normalized_error
from .model import PRESETS, ModelError, model_from_spec
from .riccati import RiccatiError, riccati_laplace
from .simulate import TimeGrid, ito_integral, sample_paths, sample_wiener_batch, time_at_tail
from .stats import ks_1samp, ks_2samp

__all__ = ["main", "build_parser", "CliError"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_MODEL_KEYS = ("preset", "alpha", "T", "K", "C", "sigma")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: error: {message}")


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--preset", choices=PRESETS)
    g.add_argument("--alpha", type=float)
    g.add_argument("--T", type=str, help="horizon, a number or 'inf'")
    g.add_argument("--K", type=float)
    g.add_argument("--C", type=float)
    g.add_argument("--sigma", type=float, help="constant volatility level")


def _add_common(p):
    p.add_argument("--config", type=Path, help="JSON file with the same keys as the flags")
    p.add_argument("--emit-config", type=Path, help="write the effective config as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sdelaplace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("laplace", help="closed-form E exp{-mu Q_t - nu X_t^2}")
    _add_model_flags(p)
    p.add_argument("--t", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--out", type=Path)
    _add_common(p)

    p = sub.add_parser("simulate", help="CSV of X_t, Q_t and the Ito integral per path")
    _add_model_flags(p)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    _add_common(p)

    p = sub.add_parser("riccati-check", help="closed form against the Riccati ODE")
    _add_model_flags(p)
    p.add_argument("--t", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-rel-error", dest="max_rel_error", type=float)
    p.add_argument("--out", type=Path)
    _add_common(p)

    p = sub.add_parser("mle-dist", help="normalized MLE errors and a KS summary")
    _add_model_flags(p)
    p.add_argument("--t", type=float)
    p.add_argument("--delta", type=float, help="observe where int_t^T sigma^2 = delta S(T)")
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--normalization", choices=("fisher", "random"))
    p.add_argument("--csv", type=Path, help="write the statistics here")
    p.add_argument("--out", type=Path, help="write the JSON summary here")
    _add_common(p)

    p = sub.add_parser("consistency", help="median |alpha_hat - alpha| along a delta ladder")
    _add_model_flags(p)
    p.add_argument("--deltas", type=float, nargs="+")
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)
    _add_common(p)

    p = sub.add_parser("report", help="run a JSON report config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.add_argument("--csv", type=Path, help="directory for per-check CSV files")
    p.add_argument("--timings", action="store_true", help="include runtimes in the JSON")
    return parser


_DEFAULTS = {
    "laplace": {"nu": 0.0},
    "simulate": {"paths": 100, "steps": 400, "seed": 0},
    "riccati-check": {"nu": 0.0, "tol": 1e-10, "max_rel_error": 1e-6},
    "mle-dist": {"paths": 2000, "steps": 2000, "seed": 0, "normalization": "fisher"},
    "consistency": {"deltas": [1e-1, 1e-2, 1e-3, 1e-4], "paths": 1000, "steps": 2000, "seed": 0},
}
_REQUIRED = {
    "laplace": ("preset", "t", "mu"),
    "simulate": ("preset", "t_end"),
    "riccati-check": ("preset", "t", "mu"),
    "mle-dist": ("preset",),
    "consistency": ("preset",),
}
_PATH_KEYS = ("config", "emit_config", "out", "csv")


def _effective(parser, args) -> dict:
    """Merge --config, flags and defaults; reject unknown keys."""
    flags = {k: v for k, v in vars(args).items() if k not in _PATH_KEYS and k != "command"}
    merged = dict(_DEFAULTS[args.command])
    if args.config is not None:
        raw = json.loads(args.config.read_text())
        unknown = set(raw) - set(flags)
        if unknown:
            parser.error(f"unknown config keys: {sorted(unknown)}")
        merged.update(raw)
    merged.update({k: v for k, v in flags.items() if v is not None})
    missing = [k for k in _REQUIRED[args.command] if merged.get(k) is None]
    if missing:
        parser.error("missing required arguments: " + ", ".join("--" + m.replace("_", "-") for m in missing))
    if args.emit_config is not None:
        args.emit_config.write_text(json.dumps(merged, indent=2, sort_keys=True) + "\n")
    return merged


def _model(cfg: dict):
    spec = {}
    for key in _MODEL_KEYS:
        if cfg.get(key) is None:
            continue
        spec[key] = {"kind": "constant", "s": cfg[key]} if key == "sigma" else cfg[key]
    return model_from_spec(spec)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _cmd_laplace(cfg, args) -> int:
    model = _model(cfg)
    t, mu, nu = float(cfg["t"]), float(cfg["mu"]), float(cfg["nu"])
    out = {"psi": joint_laplace(model, t, mu, nu), "t": t, "mu": mu, "nu": nu, "model": model.to_spec()}
    if mu > 0:
        out["psi_pre_simplification"] = joint_laplace_pre(model, t, mu, nu)
    _emit(_json(out), args.out)
    return EXIT_OK


def _check_paths(cfg):
    if int(cfg["paths"]) < 1 or int(cfg["steps"]) < 1:
        raise ModelError("paths and steps must be positive")


def _cmd_simulate(cfg, args) -> int:
    model = _model(cfg)
    _check_paths(cfg)
    t = float(cfg["t_end"])
    grid = TimeGrid.for_model(model, t, int(cfg["steps"]))
    batch = sample_paths(model, grid, int(cfg["paths"]), int(cfg["seed"]))
    X, Q = batch.X[:, 0], batch.Q[:, 0]
    ito = ito_integral(model, t, X, Q)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path_id", "X_t", "Q_t", "ito_integral"])
    for j in range(X.size):
        w.writerow([j, repr(float(X[j])), repr(float(Q[j])), repr(float(ito[j]))])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _cmd_riccati(cfg, args) -> int:
    model = _model(cfg)
    t, mu, nu = float(cfg["t"]), float(cfg["mu"]), float(cfg["nu"])
    closed = joint_laplace(model, t, mu, nu)
    ric = riccati_laplace(model, t, mu, tol=float(cfg["tol"]), nu=nu)
    rel = abs(closed - ric) / closed
    ok = rel < float(cfg["max_rel_error"])
    _emit(_json({"closed_form": closed, "riccati": ric, "relative_error": rel, "passed": ok}), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_mle_dist(cfg, args) -> int:
    model = _model(cfg)
    _check_paths(cfg)
    if (cfg.get("t") is None) == (cfg.get("delta") is None):
        raise CliError("give exactly one of --t and --delta")
    if cfg.get("t") is not None:
        t = float(cfg["t"])
    else:
        t = float(time_at_tail(model, float(cfg["delta"]) * model.S_T))
    grid = TimeGrid.for_model(model, t, int(cfg["steps"]))
    n, seed = int(cfg["paths"]), int(cfg["seed"])
    res = estimate_alpha_batch(model, sample_paths(model, grid, n, seed), t)
    alpha, K = model.alpha, model.K
    kind = limit_kind(alpha, K) if model.is_terminal else None
    if cfg["normalization"] == "fisher":
        stat = np.asarray(fisher_normalized_error(model, res, alpha))
        if kind is LimitKind.CAUCHY:
            D, p = ks_1samp(stat, "cauchy")
        elif kind is LimitKind.DICKEY_FULLER:
            W1, I2, _ = sample_wiener_batch(n, 2000, seed)
            D, p = ks_2samp(stat, -np.sign(K) / (2 * math.sqrt(2)) * (W1 * W1 - 1) / I2)
        else:
            D, p = ks_1samp(stat, "norm")
    else:
        stat = np.asarray(random_normalized_error(res, alpha))
        if kind is LimitKind.DICKEY_FULLER:
            _, I2, IWdW = sample_wiener_batch(n, 2000, seed)
            D, p = ks_2samp(stat, -np.sign(K) * IWdW / np.sqrt(I2))
        else:
            D, p = ks_1samp(stat, "norm")
    if args.csv is not None:
        lines = ["path_id,alpha_hat,statistic"]
        lines += [f"{j},{float(a)!r},{float(s)!r}" for j, (a, s) in enumerate(zip(res.alpha_hat, stat))]
        args.csv.write_text("\n".join(lines) + "\n")
    summary = {
        "ks_stat": D,
        "ks_pvalue": p,
        "regime": kind.value if kind is not None else "none",
        "normalization": cfg["normalization"],
        "t": t,
        "paths": n,
        "seed": seed,
    }
    _emit(_json(summary), args.out)
    return EXIT_OK


def _cmd_consistency(cfg, args) -> int:
    exp = ExperimentConfig(
        name="consistency",
        check="consistency",
        model=_model(cfg).to_spec(),
        deltas=tuple(float(d) for d in cfg["deltas"]),
        paths=int(cfg["paths"]),
        steps=int(cfg["steps"]),
        seed=int(cfg["seed"]),
    )
    rep = consistency_sweep(exp)
    _emit(_json(rep.to_dict()), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _write_csv_dir(directory: Path, reports):
    directory.mkdir(parents=True, exist_ok=True)
    rows = ["check,record,statistic,reference,tolerance,se,p_value,passed,runtime"]
    for rep in reports:
        for r in rep.records:
            cells = [rep.name, r.name, r.statistic, r.reference, r.tolerance, r.se, r.p_value, r.passed, r.runtime]
            rows.append(",".join('"' + str(c) + '"' if isinstance(c, str) else ("" if c is None else repr(c)) for c in cells))
        for key, values in rep.samples.items():
            safe = key.replace("=", "_").replace(".", "p")
            np.savetxt(directory / f"{rep.name}__{safe}.csv", np.asarray(values), fmt="%.17g", header=key, comments="")
    (directory / "summary.csv").write_text("\n".join(rows) + "\n")


def _cmd_report(args) -> int:
    raw = json.loads(args.config.read_text())
    out, reports = run_report(raw, include_runtime=args.timings)
    _emit(_json(out), args.out)
    if args.csv is not None:
        _write_csv_dir(args.csv, reports)
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} {rep.name}", file=sys.stderr)
    return EXIT_OK if out["passed"] else EXIT_FAIL


_COMMANDS = {
    "laplace": _cmd_laplace,
    "simulate": _cmd_simulate,
    "riccati-check": _cmd_riccati,
    "mle-dist": _cmd_mle_dist,
    "consistency": _cmd_consistency,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.command == "report":
            return _cmd_report(args)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        cfg = _effective(sub, args)
        return _COMMANDS[args.command](cfg, args)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, DegenerateTransform, RiccatiError, json.JSONDecodeError, OSError) as exc:
        print(f"sdelaplace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
