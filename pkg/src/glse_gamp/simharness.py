"""Monte-Carlo experiment layer: channels, symbols, distortion, sweeps.

A sweep walks a grid of inverse load factors and constraint targets,
tunes the penalty weights per grid point, runs seeded independent
trials through the iterative precoder, and aggregates the per-trial
statistics into CSV rows.  Every trial derives its RNG stream from
(seed, grid index, trial index), so the output is byte-deterministic
and independent of scheduling.
"""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import ChannelMatrix, run
from .errors import Divergence, InfeasibleTargets, InvalidConfig, NoSolution
from .thresholding import PrecoderConfig
from .tuning import TuningTargets, solve_papr, solve_tas

CSV_HEADER = [
    "inv_load", "eta_target", "papr_target_db", "lambda", "mu",
    "trials_ok", "trials_diverged", "D_mean", "D_db", "D_stderr",
    "power_mean", "active_frac_mean", "papr_emp_mean",
]


@dataclass
class ExperimentSpec:
    """Sweep description: sizes, grids, targets, and engine knobs."""

    n_antennas: int
    inv_load_grid: list
    rho: float
    p_avg: float
    mode: str = "tas"                      # "tas" or "papr"
    eta_grid: list = field(default_factory=lambda: [1.0])
    papr_db_grid: list = field(default_factory=list)
    eta: float = 1.0
    max_iter: int = 20
    tol: float = 1e-8
    damping: float = 1.0
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_antennas < 1:
            raise InvalidConfig("need at least one antenna")
        if self.trials < 1:
            raise InvalidConfig("need at least one trial")
        if self.mode not in ("tas", "papr"):
            raise InvalidConfig("mode must be 'tas' or 'papr'")
        if self.rho < 0 or self.p_avg <= 0:
            raise InvalidConfig("rho must be >= 0 and p_avg > 0")
        if any(il <= 0 for il in self.inv_load_grid):
            raise InvalidConfig("inverse loads must be positive")
        if self.mode == "papr" and not self.papr_db_grid:
            raise InvalidConfig("papr mode needs a papr_db_grid")

    def grid(self):
        """(inv_load, eta target, PAPR target in dB or None) tuples."""
        if self.mode == "tas":
            return [(il, eta, None) for il in self.inv_load_grid
                    for eta in self.eta_grid]
        return [(il, self.eta, db) for il in self.inv_load_grid
                for db in self.papr_db_grid]


@dataclass
class TrialResult:
    """Per-trial statistics of one precoded transmit vector."""

    distortion: float
    distortion_db: float
    avg_power: float
    active_fraction: float
    papr_emp: float
    iterations: int
    diverged: bool


def gen_channel(k, n, seed):
    """i.i.d. complex Gaussian K x N channel with per-entry variance 1/N."""
    rng = np.random.default_rng(seed)
    scale = math.sqrt(0.5 / n)
    entries = scale * (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n)))
    return ChannelMatrix(entries)


def gen_symbols(k, seed):
    """i.i.d. unit-variance complex Gaussian symbol vector of length K."""
    rng = np.random.default_rng(seed)
    return math.sqrt(0.5) * (rng.standard_normal(k) + 1j * rng.standard_normal(k))


def distortion(h, x, s, rho):
    """Per-user residual power (1/K) ||H x - sqrt(rho) s||^2."""
    entries = getattr(h, "entries", h)
    res = entries @ np.asarray(x) - math.sqrt(rho) * np.asarray(s)
    return float(np.vdot(res, res).real) / entries.shape[0]


def run_trial(k, n, cfg, rho, seed, max_iter=20, tol=1e-8, damping=1.0,
              p_avg=None):
    """One seeded (H, s) draw pushed through the precoder.

    The activity count uses the threshold 1e-6 * sqrt(p_avg) (falling
    back to the realized power) — the inactive branch returns exact
    zeros, so the epsilon only guards float noise.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    h_seed, s_seed = ss.spawn(2)
    h = gen_channel(k, n, h_seed)
    s = gen_symbols(k, s_seed)
    try:
        x, diag = run(h, s, cfg, max_iter=max_iter, tol=tol, damping=damping)
    except Divergence as exc:
        return TrialResult(distortion=math.nan, distortion_db=math.nan,
                           avg_power=math.nan, active_fraction=math.nan,
                           papr_emp=math.nan,
                           iterations=exc.iteration or 0, diverged=True)
    d = distortion(h, x, s, rho)
    power = float(np.vdot(x, x).real) / n
    eps = 1e-6 * math.sqrt(p_avg if p_avg is not None else max(power, 1e-30))
    active = float(np.count_nonzero(np.abs(x) > eps)) / n
    peak = float(np.max(np.abs(x)) ** 2) if n else 0.0
    return TrialResult(
        distortion=d,
        distortion_db=10.0 * math.log10(d) if d > 0 else -math.inf,
        avg_power=power,
        active_fraction=active,
        papr_emp=peak / power if power > 0 else math.nan,
        iterations=diag.iterations,
        diverged=False,
    )


def _tune_point(spec, inv_load, eta, papr_db, alpha):
    """Penalty weights for one grid point; returns (lam, mu, p_max)."""
    if papr_db is None or math.isinf(papr_db):
        result = solve_tas(TuningTargets(p_avg=spec.p_avg, eta=eta,
                                         rho=spec.rho, alpha=alpha))
        return result.lam, result.mu, None
    if papr_db == 0:
        # constant-envelope bound: peak pinned to the average power, no
        # feasible ridge/shrink pair exists, so run penalty-free clipping
        return 0.0, 0.0, spec.p_avg
    p_max = spec.p_avg * 10.0 ** (papr_db / 10.0)
    result = solve_papr(TuningTargets(p_avg=spec.p_avg, eta=eta, rho=spec.rho,
                                      alpha=alpha, p_max=p_max))
    return result.lam, result.mu, p_max


def _trial_seed(base_seed, grid_index, trial_index):
    return np.random.SeedSequence([int(base_seed), grid_index, trial_index])


def _point_trials(args):
    spec, gi, lam, mu, p_max, k = args
    cfg = PrecoderConfig(rho=spec.rho, lam=lam, mu=mu, p_max=p_max)
    results = []
    for ti in range(spec.trials):
        seed = _trial_seed(spec.seed, gi, ti)
        results.append(run_trial(k, spec.n_antennas, cfg, spec.rho, seed,
                                 max_iter=spec.max_iter, tol=spec.tol,
                                 damping=spec.damping, p_avg=spec.p_avg))
    return results


def _aggregate(inv_load, eta, papr_db, lam, mu, trials):
    ok = [t for t in trials if not t.diverged]
    n_div = len(trials) - len(ok)
    row = {
        "inv_load": inv_load,
        "eta_target": eta,
        "papr_target_db": math.inf if papr_db is None else papr_db,
        "lambda": lam,
        "mu": mu,
        "trials_ok": len(ok),
        "trials_diverged": n_div,
    }
    if ok:
        d = np.array([t.distortion for t in ok])
        d_mean = float(np.mean(d))
        row["D_mean"] = d_mean
        row["D_db"] = 10.0 * math.log10(d_mean) if d_mean > 0 else -math.inf
        row["D_stderr"] = (float(np.std(d, ddof=1)) / math.sqrt(len(ok))
                           if len(ok) > 1 else 0.0)
        row["power_mean"] = float(np.mean([t.avg_power for t in ok]))
        row["active_frac_mean"] = float(np.mean([t.active_fraction for t in ok]))
        row["papr_emp_mean"] = float(np.mean([t.papr_emp for t in ok]))
    else:
        for key in ("D_mean", "D_db", "D_stderr", "power_mean",
                    "active_frac_mean", "papr_emp_mean"):
            row[key] = math.nan
    return row


def _infeasible_row(inv_load, eta, papr_db):
    row = {
        "inv_load": inv_load,
        "eta_target": eta,
        "papr_target_db": math.inf if papr_db is None else papr_db,
        "lambda": math.nan,
        "mu": math.nan,
        "trials_ok": 0,
        "trials_diverged": 0,
    }
    for key in ("D_mean", "D_db", "D_stderr", "power_mean",
                "active_frac_mean", "papr_emp_mean"):
        row[key] = math.nan
    return row


def run_sweep(spec, workers=None):
    """Tune, simulate, and aggregate every grid point; returns row dicts.

    Infeasible grid points are kept as rows with zero trials and NaN
    statistics so the grid shape survives into the CSV.
    """
    n = spec.n_antennas
    jobs = []
    rows = {}
    for gi, (inv_load, eta, papr_db) in enumerate(spec.grid()):
        k = int(round(n / inv_load))
        if k < 1:
            raise InvalidConfig("inverse load too large for the antenna count")
        alpha = k / n
        try:
            lam, mu, p_max = _tune_point(spec, inv_load, eta, papr_db, alpha)
        except (InfeasibleTargets, NoSolution):
            rows[gi] = _infeasible_row(inv_load, eta, papr_db)
            continue
        jobs.append((gi, inv_load, eta, papr_db, lam, mu, p_max, k))

    args = [(spec, gi, lam, mu, p_max, k)
            for gi, _, _, _, lam, mu, p_max, k in jobs]
    if workers is not None and workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trial_lists = list(pool.map(_point_trials, args))
    else:
        trial_lists = [_point_trials(a) for a in args]

    for (gi, inv_load, eta, papr_db, lam, mu, _, _), trials in zip(jobs, trial_lists):
        rows[gi] = _aggregate(inv_load, eta, papr_db, lam, mu, trials)
    return [rows[gi] for gi in sorted(rows)]


def rows_to_csv(rows):
    """Serialize sweep rows to CSV text (deterministic float repr)."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: row[key] for key in CSV_HEADER})
    return buf.getvalue()


def write_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))
