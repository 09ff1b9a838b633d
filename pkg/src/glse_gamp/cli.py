"""Command-line front end: tune, precode, sweep, and validate.

Configuration files are flat INI-style key = value documents with three
sections (experiment, engine, output).  Unknown sections or keys are
rejected, and parse -> serialize -> parse is an identity.  All dB
conversions happen here at the boundary; the library works in linear
units throughout.
"""

import argparse
import configparser
import io
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import oracle
from .engine import run
from .errors import (Divergence, GlseGampError, InfeasibleTargets,
                     InvalidConfig, NoSolution)
from .simharness import (ExperimentSpec, gen_channel, gen_symbols, distortion,
                         run_sweep, rows_to_csv)
from .thresholding import (PrecoderConfig, g_in_numeric, g_in_papr, g_in_tas,
                           g_out_closed, g_out_numeric)
from .tuning import TuningTargets, solve_papr, solve_tas

EXPERIMENT_KEYS = {
    "mode": str,
    "n_antennas": int,
    "inv_load_grid": "floats",
    "rho": float,
    "p_avg": float,
    "eta_grid": "floats",
    "papr_db_grid": "floats",
    "eta": float,
    "trials": int,
    "seed": int,
}
ENGINE_KEYS = {"max_iter": int, "tol": float, "damping": float}
OUTPUT_KEYS = {"csv": str}
ENGINE_DEFAULTS = {"max_iter": 20, "tol": 1e-8, "damping": 1.0}


@dataclass
class RunConfig:
    """Parsed sweep configuration: experiment spec plus output path."""

    spec: ExperimentSpec
    csv_path: str = "sweep.csv"


def _parse_floats(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok:
            out.append(float(tok))
    return out


def parse_config(text):
    """Parse a config document into a RunConfig; unknown keys rejected."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfig(f"malformed config: {exc}") from exc

    known = {"experiment": EXPERIMENT_KEYS, "engine": ENGINE_KEYS,
             "output": OUTPUT_KEYS}
    for section in parser.sections():
        if section not in known:
            raise InvalidConfig(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in known[section]:
                raise InvalidConfig(f"unknown key '{key}' in [{section}]")

    if "experiment" not in parser:
        raise InvalidConfig("config needs an [experiment] section")
    exp = {}
    for key, value in parser["experiment"].items():
        kind = EXPERIMENT_KEYS[key]
        exp[key] = _parse_floats(value) if kind == "floats" else kind(value)
    eng = dict(ENGINE_DEFAULTS)
    if "engine" in parser:
        for key, value in parser["engine"].items():
            eng[key] = ENGINE_KEYS[key](value)
    csv_path = parser["output"].get("csv", "sweep.csv") if "output" in parser else "sweep.csv"

    env_seed = os.environ.get("GLSE_SEED")
    if env_seed is not None:
        exp["seed"] = int(env_seed)

    spec = ExperimentSpec(**exp, **eng)
    return RunConfig(spec=spec, csv_path=csv_path)


def serialize_config(cfg):
    """Inverse of parse_config (modulo formatting)."""
    spec = cfg.spec
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "mode": spec.mode,
        "n_antennas": str(spec.n_antennas),
        "inv_load_grid": ", ".join(repr(v) for v in spec.inv_load_grid),
        "rho": repr(spec.rho),
        "p_avg": repr(spec.p_avg),
        "eta_grid": ", ".join(repr(v) for v in spec.eta_grid),
        "papr_db_grid": ", ".join(repr(v) for v in spec.papr_db_grid),
        "eta": repr(spec.eta),
        "trials": str(spec.trials),
        "seed": str(spec.seed),
    }
    if not spec.papr_db_grid:
        del parser["experiment"]["papr_db_grid"]
    parser["engine"] = {
        "max_iter": str(spec.max_iter),
        "tol": repr(spec.tol),
        "damping": repr(spec.damping),
    }
    parser["output"] = {"csv": cfg.csv_path}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def cmd_tune(args):
    try:
        if args.mode == "papr":
            if args.papr_db is None:
                raise InvalidConfig("papr mode needs --papr-db")
            p_max = args.p * 10.0 ** (args.papr_db / 10.0)
            targets = TuningTargets(p_avg=args.p, eta=args.eta, rho=args.rho,
                                    alpha=args.alpha, p_max=p_max)
            result = solve_papr(targets)
        else:
            targets = TuningTargets(p_avg=args.p, eta=args.eta, rho=args.rho,
                                    alpha=args.alpha)
            result = solve_tas(targets)
    except (InvalidConfig, InfeasibleTargets, NoSolution) as exc:
        print(f"tuning failed: {exc}", file=sys.stderr)
        return 2
    print(f"lambda = {result.lam!r}")
    print(f"mu = {result.mu!r}")
    print(f"xi = {result.xi!r}")
    print(f"theta = {result.theta!r}")
    for name, value in sorted(result.residuals.items()):
        print(f"residual[{name}] = {value:.3e}")
    if any(v >= 1e-10 for v in result.residuals.values()):
        print("residuals exceed 1e-10", file=sys.stderr)
        return 2
    return 0


def cmd_precode(args):
    seed = int(os.environ.get("GLSE_SEED", args.seed))
    cfg = PrecoderConfig(rho=args.rho, lam=args.lam, mu=args.mu,
                         p_max=args.p_max)
    ss = np.random.SeedSequence(seed)
    h_seed, s_seed = ss.spawn(2)
    h = gen_channel(args.k, args.n, h_seed)
    s = gen_symbols(args.k, s_seed)
    try:
        x, diag = run(h, s, cfg, max_iter=args.max_iter, tol=args.tol,
                      damping=args.damping)
    except Divergence as exc:
        print(f"diverged at iteration {exc.iteration}", file=sys.stderr)
        return 1
    for value in x:
        print(f"{float(value.real)!r} {float(value.imag)!r}")
    d = distortion(h, x, s, args.rho)
    print(f"distortion = {d!r}")
    print(f"iterations = {diag.iterations}")
    return 0


def cmd_sweep(args):
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 3
    cfg = parse_config(text)
    rows = run_sweep(cfg.spec, workers=args.workers)
    for row in rows:
        print(f"inv_load={row['inv_load']} eta={row['eta_target']} "
              f"papr_db={row['papr_target_db']} ok={row['trials_ok']} "
              f"diverged={row['trials_diverged']} D_db={row['D_db']}")
    path = args.output or cfg.csv_path
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(rows))
    except OSError as exc:
        print(f"cannot write csv: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {path}")
    return 0


def _validate_case(rng_seed):
    """One oracle-equivalence case; returns (objective gap, threshold gap)."""
    rng = np.random.default_rng(rng_seed)
    k = int(rng.integers(2, 9))
    n = int(rng.integers(2 * k, 33))
    h = gen_channel(k, n, rng.integers(0, 2**32))
    s = gen_symbols(k, rng.integers(0, 2**32))
    if rng.random() < 0.5:
        cfg = PrecoderConfig(rho=1.0, lam=float(rng.uniform(0.2, 0.5)),
                             mu=float(rng.uniform(0.0, 0.08)))
    else:
        cfg = PrecoderConfig(rho=1.0, lam=float(rng.uniform(0.25, 0.45)),
                             mu=float(rng.uniform(0.0, 0.03)), p_max=1.5)
    x, _ = run(h, s, cfg, max_iter=200, tol=1e-10, damping=0.8)
    report = oracle.solve_glse(h, s, cfg, tol=1e-9)
    gap = (oracle.objective(h, s, cfg, x) - report.objective) / max(
        abs(report.objective), 1e-12)

    # closed-form vs numeric thresholding on a scalar-matched block
    r_scale = float(rng.uniform(0.2, 2.0))
    r_blk = r_scale * np.eye(2)
    u = rng.normal(size=2)
    g_in = g_in_papr if cfg.peak_limited else g_in_tas
    closed = g_in(u, r_blk, cfg)
    numeric = g_in_numeric(u, r_blk, cfg)
    tgap = float(np.max(np.abs(closed.x - numeric.x)))
    w = rng.normal(size=2)
    sa = rng.normal(size=2)
    out_c = g_out_closed(w, sa, r_blk, cfg.rho)
    out_n = g_out_numeric(w, sa, r_blk, cfg.rho)
    tgap = max(tgap, float(np.max(np.abs(out_c.y - out_n.y))))
    return gap, tgap


def cmd_validate(args):
    seed = int(os.environ.get("GLSE_SEED", args.seed))
    worst_gap = 0.0
    worst_tgap = 0.0
    for case in range(args.cases):
        case_seed = seed + case
        try:
            gap, tgap = _validate_case(case_seed)
        except GlseGampError as exc:
            print(f"case seed {case_seed} failed: {exc}", file=sys.stderr)
            return 1
        if gap > 1e-3 or tgap > 1e-5:
            print(f"case seed {case_seed}: objective gap {gap:.3e}, "
                  f"thresholding gap {tgap:.3e}", file=sys.stderr)
            return 1
        worst_gap = max(worst_gap, gap)
        worst_tgap = max(worst_tgap, tgap)
    print(f"max objective gap = {worst_gap:.3e}")
    print(f"max thresholding gap = {worst_tgap:.3e}")
    print(f"cases = {args.cases}, base seed = {seed}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="glse-gamp",
                                     description="GLSE-GAMP precoding tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p_tune = sub.add_parser("tune", help="solve the tuning fixed point")
    p_tune.add_argument("--mode", choices=["tas", "papr"], required=True)
    p_tune.add_argument("--alpha", type=float, required=True)
    p_tune.add_argument("--rho", type=float, default=1.0)
    p_tune.add_argument("--p", type=float, required=True)
    p_tune.add_argument("--eta", type=float, default=1.0)
    p_tune.add_argument("--papr-db", type=float, default=None)
    p_tune.set_defaults(func=cmd_tune)

    p_pre = sub.add_parser("precode", help="precode one random instance")
    p_pre.add_argument("--k", type=int, required=True)
    p_pre.add_argument("--n", type=int, required=True)
    p_pre.add_argument("--rho", type=float, default=1.0)
    p_pre.add_argument("--lam", type=float, required=True)
    p_pre.add_argument("--mu", type=float, default=0.0)
    p_pre.add_argument("--p-max", type=float, default=None)
    p_pre.add_argument("--seed", type=int, default=0)
    p_pre.add_argument("--max-iter", type=int, default=20)
    p_pre.add_argument("--tol", type=float, default=1e-8)
    p_pre.add_argument("--damping", type=float, default=1.0)
    p_pre.set_defaults(func=cmd_precode)

    p_sweep = sub.add_parser("sweep", help="run a sweep from a config file")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--output", default=None)
    p_sweep.add_argument("--workers", type=int, default=os.cpu_count())
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run oracle-equivalence checks")
    p_val.add_argument("--cases", type=int, default=20)
    p_val.add_argument("--seed", type=int, default=0)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
