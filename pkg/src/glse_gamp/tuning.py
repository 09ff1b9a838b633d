"""Asymptotic tuning of the precoder penalty weights.

Maps constraint targets (average power P, active-antenna fraction eta,
optional peak power P_max) to penalty weights (lam, mu) through the
large-system fixed-point systems of the antenna-selection and
peak-limited precoders.  Both systems are triangular once the
substitutions a = xi*mu and b = 1 + 2*xi*lam are made: the eta-equation
fixes a in closed form, the power equation fixes b (closed form for the
selection system, a one-dimensional root find for the peak-limited one),
and the xi-equation then gives xi directly.

Also provides the general decoupled scalar model: a single-letter
estimation problem whose statistics reproduce the per-antenna marginals
of the full precoder in the large-system limit, parameterized by the
R-transform of the channel Gram spectrum.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .errors import InfeasibleTargets, InvalidConfig, NoConvergence, NoSolution, PoleAtOne

RESIDUAL_TOL = 1e-10


def phi_tilde(x, lam):
    """exp(-x^2 / lam)."""
    if lam <= 0:
        raise InvalidConfig("phi_tilde needs lam > 0")
    return np.exp(-np.square(x) / lam)


def q_tilde(x, lam):
    """Integral of phi_tilde(u, lam) over u in [x, inf), divided by lam.

    Evaluates through the complementary error function:
    q_tilde(x, lam) = sqrt(pi / lam) / 2 * erfc(x / sqrt(lam)).
    """
    if lam <= 0:
        raise InvalidConfig("q_tilde needs lam > 0")
    return 0.5 * math.sqrt(math.pi / lam) * erfc(x / math.sqrt(lam))


def rayleigh_r_transform(omega, alpha):
    """R-transform alpha / (1 - omega) of the Rayleigh-fading Gram spectrum."""
    if omega == 1:
        raise PoleAtOne("R-transform has a pole at omega = 1")
    return alpha / (1.0 - omega)


@dataclass
class RTransform:
    """Pluggable R-transform of the asymptotic eigenvalue distribution."""

    evaluator: object

    def __call__(self, omega):
        return self.evaluator(omega)


def rayleigh(alpha):
    """RTransform instance for an i.i.d. channel with entry variance 1/N."""
    return RTransform(lambda omega: rayleigh_r_transform(omega, alpha))


@dataclass
class TuningTargets:
    """Constraint targets driving the penalty-weight solve."""

    p_avg: float
    eta: float
    rho: float
    alpha: float
    p_max: float = None

    def __post_init__(self):
        if self.p_avg <= 0:
            raise InvalidConfig("average power target must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise InvalidConfig("active fraction target must lie in (0, 1]")
        if self.rho < 0:
            raise InvalidConfig("rho must be non-negative")
        if self.alpha <= 0:
            raise InvalidConfig("load alpha must be positive")
        if self.p_max is not None and self.p_max <= self.p_avg:
            raise InvalidConfig("peak power must exceed the average power")

    @property
    def theta(self):
        return (self.rho + self.p_avg) / self.alpha


@dataclass
class TuningResult:
    """Solved penalty weights with per-equation back-substitution residuals."""

    lam: float
    mu: float
    xi: float
    theta: float
    residuals: dict = field(default_factory=dict)


@dataclass
class DecoupledModel:
    """Fixed point of the scalar decoupled precoding model."""

    xi: float
    sigma2: float
    chi: float
    p: float


def _active_threshold(targets):
    """a = xi*mu from the eta-equation phi_tilde(a; theta) = eta."""
    return math.sqrt(targets.theta * math.log(1.0 / targets.eta))


def solve_tas(targets):
    """Penalty weights for the antenna-selection precoder.

    System (theta = (rho+P)/alpha, a = xi*mu, b = 1 + 2*xi*lam):
        phi_tilde(a; theta) = eta
        b^2 = (theta/P) [eta - 2 a q_tilde(a; theta)]
        alpha xi = 1/2 + (xi/b) [eta - a q_tilde(a; theta)]
    """
    if targets.p_max is not None:
        raise InvalidConfig("peak-limited targets belong to solve_papr")
    theta = targets.theta
    a = _active_threshold(targets)
    qa = q_tilde(a, theta)
    power_rhs = (theta / targets.p_avg) * (targets.eta - 2.0 * a * qa)
    if power_rhs <= 0:
        raise InfeasibleTargets("power equation has non-positive right side")
    # b < 1 yields a (small) negative ridge weight: legitimate in the
    # sparse regime, where the active subsystem stays overdetermined.
    b = math.sqrt(power_rhs)
    denom = targets.alpha - (targets.eta - a * qa) / b
    if denom <= 0:
        raise NoSolution("xi-equation admits no positive solution")
    xi = float(0.5 / denom)
    lam = float((b - 1.0) / (2.0 * xi))
    mu = float(a / xi)
    residuals = {
        "eta": float(abs(phi_tilde(xi * mu, theta) - targets.eta)),
        "power": float(abs(b * b - power_rhs)),
        "xi": float(abs(targets.alpha * xi - 0.5
                        - (xi / b) * (targets.eta - a * qa))),
    }
    return TuningResult(lam=lam, mu=mu, xi=xi, theta=theta, residuals=residuals)


def _papr_brackets(a, b, theta, p_max):
    """Delta_1 and Delta_2 of the peak-limited system at (a, b)."""
    edge = a + b * math.sqrt(p_max)
    d1 = phi_tilde(a, theta) - phi_tilde(edge, theta)
    d2 = q_tilde(a, theta) - q_tilde(edge, theta)
    return d1, d2


def solve_papr(targets):
    """Penalty weights for the peak-power-limited precoder.

    Same eta-equation as solve_tas; the power and xi equations use the
    truncated brackets Delta_1, Delta_2 evaluated at a + b*sqrt(P_max):
        b^2 = (theta/P) [Delta_1(a) - 2 a Delta_2(a)]
        alpha xi = 1/2 + (xi/b) [Delta_1(a) - 2 a Delta_2(a)]
    Since both right-hand brackets coincide, the solved b makes the
    xi-equation linear: xi = 1/2 / (alpha - P*b/theta).
    """
    if targets.p_max is None:
        raise InvalidConfig("solve_papr needs a peak power target")
    theta = targets.theta
    a = _active_threshold(targets)

    def gap(b):
        d1, d2 = _papr_brackets(a, b, theta, targets.p_max)
        return b * b - (theta / targets.p_avg) * (d1 - 2.0 * a * d2)

    # b = 1 + 2*xi*lam >= 1; gap is eventually positive (quadratic growth),
    # so a sign change above 1 is required for a feasible ridge weight.
    g1 = gap(1.0)
    if g1 < 0:
        b_hi = 2.0
        for _ in range(200):
            if gap(b_hi) > 0:
                break
            b_hi *= 2.0
        else:
            raise NoSolution("failed to bracket the power equation root")
        b = brentq(gap, 1.0, b_hi, xtol=1e-14, rtol=1e-15)
    elif g1 == 0:
        b = 1.0
    else:
        # negative-ridge regime: look for a sign change below 1 (the
        # gap vanishes to high order at b = 0, so stay away from it)
        grid = np.geomspace(1e-3, 1.0, 400)
        vals = np.array([gap(bb) for bb in grid])
        idx = np.flatnonzero((vals[:-1] < 0) & (vals[1:] >= 0))
        if idx.size == 0:
            raise InfeasibleTargets(
                "peak power too small to carry the average power")
        b = brentq(gap, grid[idx[0]], grid[idx[0] + 1], xtol=1e-14, rtol=1e-15)
    denom = targets.alpha - targets.p_avg * b / theta
    if denom <= 0:
        raise NoSolution("xi-equation admits no positive solution")
    xi = float(0.5 / denom)
    lam = float((b - 1.0) / (2.0 * xi))
    mu = float(a / xi)
    d1, d2 = _papr_brackets(a, b, theta, targets.p_max)
    bracket = d1 - 2.0 * a * d2
    residuals = {
        "eta": float(abs(phi_tilde(xi * mu, theta) - targets.eta)),
        "power": float(abs(b * b - (theta / targets.p_avg) * bracket)),
        "xi": float(abs(targets.alpha * xi - 0.5 - (xi / b) * bracket)),
    }
    return TuningResult(lam=lam, mu=mu, xi=xi, theta=theta, residuals=residuals)


def _scalar_solution(mag, xi, cfg):
    """Radius of argmin_{v in X} |v - s0|^2 + xi (lam|v|^2 + mu|v|) at |s0|=mag.

    Magnitude soft-threshold at xi*mu/2, shrink by 1 + xi*lam, then clip
    to the peak radius when the support is a disk.
    """
    r = np.maximum(mag - 0.5 * xi * cfg.mu, 0.0) / (1.0 + xi * cfg.lam)
    if cfg.peak_limited:
        r = np.minimum(r, math.sqrt(cfg.p_max))
    return r


def _gauss_hermite_grid(sigma2, nodes=64):
    """Complex Gaussian quadrature grid: points s0 and weights summing to 1."""
    t, w = np.polynomial.hermite.hermgauss(nodes)
    sig = math.sqrt(sigma2)
    s0 = sig * (t[:, None] + 1j * t[None, :])
    weight = (w[:, None] * w[None, :]) / math.pi
    return s0.ravel(), weight.ravel()


def decoupled_solve(cfg, r_transform, rho, constraints=(), damping=0.5,
                    tol=1e-11, max_iter=10000, nodes=64):
    """Fixed point (chi, p) of the decoupled scalar model.

    Iterates: xi = 1/R(-chi); sigma2 from the central finite difference
    of (lam_s*chi - p) R(-chi) with lam_s = rho; the scalar problem is
    solved in closed form over a Gauss-Hermite grid for s0; then
    p <- E|x|^2 and chi <- xi E Re{x* s0} / sigma2, damped.  Returns
    (DecoupledModel, [E f_j(x) for each constraint evaluator]).
    """
    if not 0.0 < damping <= 1.0:
        raise InvalidConfig("damping must be in (0, 1]")
    chi, p = 1.0, cfg.rho if cfg.rho > 0 else 1.0

    def step(chi, p):
        r0 = r_transform(-chi)
        xi = 1.0 / r0
        h = 1e-6 * max(1.0, abs(chi))
        up = (rho * (chi + h) - p) * r_transform(-(chi + h))
        dn = (rho * (chi - h) - p) * r_transform(-(chi - h))
        sigma2 = (up - dn) / (2.0 * h) / (r0 * r0)
        if sigma2 <= 0:
            raise NoSolution("decoupled model produced a non-positive variance")
        s0, w = _gauss_hermite_grid(sigma2, nodes)
        mag = np.abs(s0)
        r = _scalar_solution(mag, xi, cfg)
        p_new = float(np.sum(w * r * r))
        overlap = float(np.sum(w * r * mag))
        chi_new = xi * overlap / sigma2
        return xi, sigma2, chi_new, p_new

    for _ in range(max_iter):
        xi, sigma2, chi_new, p_new = step(chi, p)
        delta = abs(chi_new - chi) + abs(p_new - p)
        chi = damping * chi_new + (1.0 - damping) * chi
        p = damping * p_new + (1.0 - damping) * p
        if delta < tol:
            break
    else:
        raise NoConvergence("decoupled fixed point did not converge")

    xi, sigma2, chi_fp, p_fp = step(chi, p)
    model = DecoupledModel(xi=xi, sigma2=sigma2, chi=chi, p=p)
    s0, w = _gauss_hermite_grid(sigma2, nodes)
    mag = np.abs(s0)
    r = _scalar_solution(mag, xi, cfg)
    safe = np.where(mag > 0, mag, 1.0)
    x = np.where(mag > 0, r / safe, 0.0) * s0
    values = [float(np.sum(w * np.asarray(f(x)))) for f in constraints]
    return model, values


def decoupled_expectations(xi, sigma2, cfg, n_samples=10_000_000, seed=0):
    """Monte-Carlo moments of the decoupled model at the solved weights.

    Uses the tuned-system convention: magnitude threshold xi*mu, shrink
    1 + 2*xi*lam, clip at sqrt(p_max).  Returns a dict with the average
    power, active fraction, and overlap E Re{x* s0}.
    """
    rng = np.random.default_rng(seed)
    mag = rng.rayleigh(scale=math.sqrt(sigma2 / 2.0), size=n_samples)
    r = np.maximum(mag - xi * cfg.mu, 0.0) / (1.0 + 2.0 * xi * cfg.lam)
    if cfg.peak_limited:
        np.minimum(r, math.sqrt(cfg.p_max), out=r)
    return {
        "power": float(np.mean(r * r)),
        "active_fraction": float(np.mean(r > 0)),
        "overlap": float(np.mean(r * mag)),
    }
