"""Input and output thresholding functions of the GAMP precoding sweep.

The output channel is quadratic, so its thresholding function has an
exact closed form built from A = (I + 2R)^{-1}.  The input channel
(ridge + l1-magnitude penalty, optionally a peak-power disk) uses the
complex-scalar closed forms; those are exact whenever R is a scalar
matrix and are the standard surrogate otherwise.  Numeric argmin
versions of both functions are provided as independent cross-checks.

All functions are vectorized over leading axes (u, w, s: (..., 2);
R: (..., 2, 2)).
"""

from dataclasses import dataclass

import numpy as np

from .aug import I2, spd_inverse, sym, trace_inverse
from .errors import InvalidConfig


@dataclass(frozen=True)
class PrecoderConfig:
    """Penalty weights and support of the precoding objective.

    rho    power control factor (scales the target symbols)
    lam    l2 penalty weight
    mu     l1-magnitude penalty weight (antenna selection)
    p_max  peak power; None means unbounded support

    lam may be slightly negative: the power-tuned sparse precoder can
    require a small negative ridge, and the iteration stays well posed
    as long as the shrink matrices remain positive definite.
    """

    rho: float
    lam: float
    mu: float = 0.0
    p_max: float | None = None

    def __post_init__(self):
        if self.rho < 0 or self.mu < 0:
            raise InvalidConfig("rho and mu must be non-negative")
        if self.lam < 0 and self.mu == 0 and self.p_max is None:
            raise InvalidConfig("negative lam needs an l1 term or a peak bound")
        if self.p_max is not None and self.p_max <= 0:
            raise InvalidConfig("p_max must be positive")

    @property
    def peak_limited(self):
        return self.p_max is not None


@dataclass
class OutputResult:
    y: np.ndarray    # output estimate, (..., 2)
    r_y: np.ndarray  # negated w-gradient, (..., 2, 2), symmetric PSD


@dataclass
class InputResult:
    x: np.ndarray  # input estimate, (..., 2)
    g: np.ndarray  # u-gradient of the estimate, (..., 2, 2)


def e_out(z, w, s, r, rho):
    """Output channel energy 0.5 (z-w)^T R^{-1} (z-w) + ||z - sqrt(rho) s||^2."""
    z, w, s = (np.asarray(v, dtype=float) for v in (z, w, s))
    rinv = spd_inverse(r)
    d = z - w
    quad = 0.5 * np.einsum("...a,...ab,...b->...", d, rinv, d)
    res = z - np.sqrt(rho) * s
    return quad + np.einsum("...a,...a->...", res, res)


def g_out_closed(w, s, r, rho):
    """Closed-form output thresholding: y = G_w w + G_s (sqrt(rho) s)."""
    w = np.asarray(w, dtype=float)
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)
    rinv = spd_inverse(r)
    a = spd_inverse(I2 + 2.0 * r)
    ami = a - I2
    at = np.swapaxes(a, -1, -2)
    amit = np.swapaxes(ami, -1, -2)
    g_w = -2.0 * at @ a - amit @ rinv @ ami
    g_s = -2.0 * (2.0 * at @ a @ r - at + amit @ rinv @ a @ r)
    y = np.einsum("...ab,...b->...a", g_w, w) + np.einsum(
        "...ab,...b->...a", g_s, np.sqrt(rho) * s
    )
    return OutputResult(y=y, r_y=sym(-g_w))


def g_out_numeric(w, s, r, rho, fd_step=1e-6):
    """Direct evaluation of the output channel definition.

    Minimizes e_out over z (an unconstrained quadratic) with a generic
    linear solve, returns y = R^{-1}(z* - w), and differentiates y in w
    by central finite differences.  Independent of :func:`g_out_closed`.
    """
    w = np.asarray(w, dtype=float)
    s = np.asarray(s, dtype=float)
    r = np.asarray(r, dtype=float)

    def estimate(wv):
        rinv = np.linalg.inv(r)
        m = rinv + 2.0 * np.broadcast_to(I2, rinv.shape)
        rhs = np.einsum("...ab,...b->...a", rinv, wv) + 2.0 * np.sqrt(rho) * s
        z_star = np.linalg.solve(m, rhs)
        return np.einsum("...ab,...b->...a", rinv, z_star - wv)

    y = estimate(w)
    h = fd_step * (1.0 + np.linalg.norm(w, axis=-1, keepdims=True))
    jac = np.empty(w.shape + (2,))
    for j in range(2):
        e = np.zeros(2)
        e[j] = 1.0
        step = h * e
        jac[..., j] = (estimate(w + step) - estimate(w - step)) / (2.0 * h[..., 0, None])
    return OutputResult(y=y, r_y=-jac)


def _tas_pieces(u, r, cfg):
    """tau, G_u, f(u), F(u) and ||u|| shared by the TAS/PAPR closed forms."""
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    tr_inv = trace_inverse(r)
    tau = 2.0 * cfg.mu / tr_inv
    nu = np.linalg.norm(u, axis=-1)
    g_u = spd_inverse(I2 + 2.0 * cfg.lam * r)

    # continuous extension at u = 0 (only reachable with tau = 0)
    safe = np.where(nu > 0, nu, 1.0)
    shrink = np.where(nu > 0, 1.0 - tau / safe, 0.0)
    f = shrink[..., None] * u
    outer = u[..., :, None] * u[..., None, :]
    big_f = np.where(nu > 0, tau / safe**3, 0.0)[..., None, None] * outer
    big_f = big_f + shrink[..., None, None] * I2
    big_f = np.where((nu == 0)[..., None, None], I2, big_f)
    return tau, tr_inv, nu, g_u, f, big_f


def g_in_tas(u, r, cfg):
    """Closed-form input thresholding for the antenna-selection penalty."""
    tau, _, nu, g_u, f, big_f = _tas_pieces(u, r, cfg)
    active = nu >= tau
    x = np.where(active[..., None], np.einsum("...ab,...b->...a", g_u, f), 0.0)
    g = np.where(active[..., None, None], g_u @ big_f, 0.0)
    return InputResult(x=x, g=g)


def g_in_papr(u, r, cfg):
    """Closed-form input thresholding with the peak-power disk support.

    Three branches on ||u||: zero below tau, the TAS shrinkage between
    tau and tau~, and radial clipping onto the peak circle above tau~.
    The middle branch is additionally projected onto the disk, which is
    inactive for scalar R but guards the hard peak invariant when R is
    anisotropic.
    """
    tau, tr_inv, nu, g_u, f, big_f = _tas_pieces(u, r, cfg)
    sqrt_pmax = np.sqrt(cfg.p_max)
    tau_t = (1.0 + 4.0 * cfg.lam / tr_inv) * sqrt_pmax + 2.0 * cfg.mu / tr_inv

    mid = np.einsum("...ab,...b->...a", g_u, f)
    mid_norm = np.linalg.norm(mid, axis=-1)
    over = mid_norm > sqrt_pmax
    scale = np.where(over, sqrt_pmax / np.where(over, mid_norm, 1.0), 1.0)
    mid = scale[..., None] * mid

    safe = np.where(nu > 0, nu, 1.0)
    clip = (sqrt_pmax / safe)[..., None] * u
    u_perp = np.stack([u[..., 1], -u[..., 0]], axis=-1)
    outer_perp = u_perp[..., :, None] * u_perp[..., None, :]
    clip_grad = (sqrt_pmax / safe**3)[..., None, None] * outer_perp

    clipped = nu >= tau_t
    active = nu >= tau
    x = np.where(
        clipped[..., None], clip, np.where(active[..., None], mid, 0.0)
    )
    g = np.where(
        clipped[..., None, None],
        clip_grad,
        np.where(active[..., None, None], g_u @ big_f, 0.0),
    )
    return InputResult(x=x, g=g)


def _e_in_radial(rinv, u, cfg, cos_a, sin_a, r_max):
    """Exact minimum of the input energy along each direction (cos_a, sin_a).

    The energy is quadratic in the radius for a fixed direction, so the
    constrained radial minimizer is closed form; returns (radius, energy).
    """
    d0 = np.stack([cos_a, sin_a], axis=-1)
    quad = np.einsum("...a,ab,...b->...", d0, rinv, d0) + 2.0 * cfg.lam
    lin = np.einsum("...a,ab,b->...", d0, rinv, u)
    radius = np.clip((lin - cfg.mu) / quad, 0.0, r_max)
    # E(r d) = 0.5 u^T Rinv u - r lin + 0.5 r^2 quad + mu r  (+ const terms folded)
    energy = 0.5 * quad * radius**2 - (lin - cfg.mu) * radius
    return radius, energy


def _polish_interior(rinv, u, cfg, x, r_max, iters=60):
    """Newton on the stationarity condition of the interior branch."""
    m = rinv + 2.0 * cfg.lam * I2
    rhs = rinv @ u
    for _ in range(iters):
        nx = np.linalg.norm(x)
        if nx <= 0 or nx >= r_max:
            return x, False
        phi = m @ x + cfg.mu * x / nx - rhs
        jac = m + cfg.mu * (I2 / nx - np.outer(x, x) / nx**3)
        try:
            step = np.linalg.solve(jac, phi)
        except np.linalg.LinAlgError:
            return x, False
        x_new = x - step
        if np.linalg.norm(step) < 1e-15 * max(1.0, nx):
            return x_new, True
        x = x_new
    return x, True


def _polish_circle(rinv, u, cfg, theta, r_max, iters=60):
    """Newton on dE/dtheta along the peak-power circle."""
    m = rinv + 2.0 * cfg.lam * I2
    for _ in range(iters):
        x = r_max * np.array([np.cos(theta), np.sin(theta)])
        t = r_max * np.array([-np.sin(theta), np.cos(theta)])
        grad = m @ x - rinv @ u
        d1 = grad @ t
        d2 = t @ m @ t - grad @ x
        if d2 <= 0:
            break
        step = d1 / d2
        theta -= step
        if abs(step) < 1e-15:
            break
    return r_max * np.array([np.cos(theta), np.sin(theta)])


def g_in_numeric(u, r, cfg, n_angles=721, refine_iters=30, fd_step=1e-6):
    """Numeric argmin of the input channel energy, used as an oracle.

    Minimizes 0.5 (u-x)^T R^{-1} (u-x) + lam ||x||^2 + mu ||x|| over the
    support by scanning directions on a polar grid with an exact radial
    minimization per direction, golden-section refinement on the angle,
    and a Newton polish of the stationarity conditions.  The gradient is
    taken by central finite differences in u.  Not vectorized; u has
    shape (2,).
    """
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    rinv = np.linalg.inv(r)
    r_max = np.sqrt(cfg.p_max) if cfg.peak_limited else np.inf

    def argmin(uv):
        angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
        rad, en = _e_in_radial(rinv, uv, cfg, np.cos(angles), np.sin(angles), r_max)
        best = int(np.argmin(en))
        lo = angles[best] - 2.0 * np.pi / n_angles
        hi = angles[best] + 2.0 * np.pi / n_angles

        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc = _e_in_radial(rinv, uv, cfg, np.cos(c), np.sin(c), r_max)[1]
        fd = _e_in_radial(rinv, uv, cfg, np.cos(d), np.sin(d), r_max)[1]
        for _ in range(refine_iters):
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = _e_in_radial(rinv, uv, cfg, np.cos(c), np.sin(c), r_max)[1]
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = _e_in_radial(rinv, uv, cfg, np.cos(d), np.sin(d), r_max)[1]
        ang = c if fc < fd else d
        rad, en = _e_in_radial(rinv, uv, cfg, np.cos(ang), np.sin(ang), r_max)
        # the grid minimum may still win if refinement stayed local
        rad0, en0 = _e_in_radial(
            rinv, uv, cfg, np.cos(angles[best]), np.sin(angles[best]), r_max
        )
        if en0 < en:
            ang, rad = angles[best], rad0
        if rad <= 0:
            return np.zeros(2)
        if np.isfinite(r_max) and rad >= r_max * (1.0 - 1e-9):
            return _polish_circle(rinv, uv, cfg, ang, r_max)
        x0 = rad * np.array([np.cos(ang), np.sin(ang)])
        x1, ok = _polish_interior(rinv, uv, cfg, x0, r_max)
        if ok and 0.0 < np.linalg.norm(x1) < r_max:
            return x1
        if np.isfinite(r_max):
            return _polish_circle(rinv, uv, cfg, ang, r_max)
        return x0

    x = argmin(u)
    h = fd_step * max(1.0, float(np.linalg.norm(u)))
    g = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        g[:, j] = (argmin(u + e) - argmin(u - e)) / (2.0 * h)
    return InputResult(x=x, g=g)
