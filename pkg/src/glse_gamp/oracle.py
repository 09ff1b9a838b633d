"""Exact convex solver for the precoding objective, used to certify GAMP.

Solves  min_{x in X^N} ||H x - sqrt(rho) s||^2 + lam ||x||^2 + mu ||x||_1
(complex l1 = sum of magnitudes) by accelerated proximal gradient with
restart on non-monotone objective.  Both penalty families used here are
convex, so the solution is a global minimizer.
"""

from dataclasses import dataclass

import numpy as np

from .errors import MaxIterations, SupportViolation


@dataclass
class OracleReport:
    x_star: np.ndarray
    objective: float
    prox_residual: float
    iterations: int


def prox_penalty(a, step, cfg):
    """Prox of step * (lam |v|^2 + mu |v| + indicator of the support).

    Magnitude soft-threshold, l2 shrink, then radial projection onto the
    peak-power disk when present.  Vectorized over complex arrays.
    """
    a = np.asarray(a)
    mag = np.abs(a)
    scale = np.maximum(mag - step * cfg.mu, 0.0) / (1.0 + 2.0 * step * cfg.lam)
    safe = np.where(mag > 0, mag, 1.0)
    v = np.where(mag > 0, scale / safe, 0.0) * a
    if cfg.peak_limited:
        vmag = np.abs(v)
        cap = np.sqrt(cfg.p_max)
        over = vmag > cap
        v = np.where(over, v * (cap / np.where(over, vmag, 1.0)), v)
    return v


def objective(h, s, cfg, x):
    """Objective value at x; raises SupportViolation outside the support."""
    entries = getattr(h, "entries", h)
    x = np.asarray(x)
    if cfg.peak_limited and np.any(np.abs(x) ** 2 > cfg.p_max + 1e-9):
        raise SupportViolation("peak power exceeded")
    res = entries @ x - np.sqrt(cfg.rho) * np.asarray(s)
    val = float(np.vdot(res, res).real)
    val += cfg.lam * float(np.vdot(x, x).real)
    val += cfg.mu * float(np.sum(np.abs(x)))
    return val


def _lipschitz(entries, iters=50, tol=1e-10, seed=0):
    """Largest eigenvalue of H^H H by power iteration."""
    rng = np.random.default_rng(seed)
    n = entries.shape[1]
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = entries.conj().T @ (entries @ v)
        new = float(np.linalg.norm(w))
        if new == 0:
            return 0.0
        v = w / new
        if abs(new - lam) <= tol * max(new, 1.0):
            lam = new
            break
        lam = new
    return lam


def solve_glse(h, s, cfg, tol=1e-9, max_iter=200000):
    """Accelerated proximal gradient solve of the precoding objective.

    Stops when the proximal-gradient residual ||x - prox(x - t grad)|| / t
    drops below tol.  Raises MaxIterations (carrying the best iterate)
    if the cap is hit first.
    """
    entries = getattr(h, "entries", h)
    s = np.asarray(s)
    n = entries.shape[1]
    lip = max(_lipschitz(entries), 1e-12)
    step = 1.0 / (2.0 * lip)
    target = np.sqrt(cfg.rho) * s

    def grad(x):
        return 2.0 * (entries.conj().T @ (entries @ x - target))

    x = np.zeros(n, dtype=complex)
    z = x.copy()
    t_mom = 1.0
    best = objective(entries, s, cfg, x)
    residual = np.inf
    for it in range(1, max_iter + 1):
        x_new = prox_penalty(z - step * grad(z), step, cfg)
        obj_new = objective(entries, s, cfg, x_new)
        if obj_new > best + 1e-15 * max(1.0, best):
            # restart momentum from the last good point
            z = x.copy()
            t_mom = 1.0
            x_new = prox_penalty(z - step * grad(z), step, cfg)
            obj_new = objective(entries, s, cfg, x_new)
        residual = float(np.linalg.norm(x_new - prox_penalty(x_new - step * grad(x_new), step, cfg))) / step
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom**2))
        z = x_new + ((t_mom - 1.0) / t_new) * (x_new - x)
        x, t_mom = x_new, t_new
        best = min(best, obj_new)
        if residual < tol:
            return OracleReport(x_star=x, objective=objective(entries, s, cfg, x),
                                prox_residual=residual, iterations=it)
    raise MaxIterations("prox-gradient solver hit its iteration cap",
                        x=x, residual=residual)
