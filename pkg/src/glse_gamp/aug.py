"""Real 2x2 augmented representation of complex scalars.

A complex scalar c maps to the vector [Re c, Im c] and a complex channel
entry h maps to the block [[Re h, -Im h], [Im h, Re h]].  All symmetric
2x2 matrices handled here are kept positive definite by symmetrizing and
clamping eigenvalues to [EIG_FLOOR, EIG_CEIL] before inversion, which is
enough to keep the GAMP sweeps iterable on badly scaled instances.

Every function is vectorized over leading axes: vectors have shape
(..., 2) and matrices (..., 2, 2).
"""

import numpy as np

from .errors import NonInvertible

EIG_FLOOR = 1e-12
EIG_CEIL = 1e12

I2 = np.eye(2)


def to_aug(z):
    """Augmented vector [Re z, Im z] of a complex array, shape (..., 2)."""
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1)


def to_complex(v):
    """Inverse of :func:`to_aug`."""
    v = np.asarray(v)
    return v[..., 0] + 1j * v[..., 1]


def augment_complex(h):
    """2x2 rotation-scaling block [[Re h, -Im h], [Im h, Re h]]."""
    h = np.asarray(h)
    out = np.empty(h.shape + (2, 2))
    out[..., 0, 0] = h.real
    out[..., 0, 1] = -h.imag
    out[..., 1, 0] = h.imag
    out[..., 1, 1] = h.real
    return out


def sym(m):
    """Symmetric part (m + m^T) / 2."""
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def spd_floor(r, lo=EIG_FLOOR, hi=EIG_CEIL):
    """Symmetrize and clamp eigenvalues into [lo, hi].

    Returns (floored matrix, number of blocks whose eigenvalues moved).
    Closed-form 2x2 eigendecomposition: m = mean*I + rad*U with U the
    traceless reflection part, so clamping only rescales those two terms.
    """
    r = sym(np.asarray(r, dtype=float))
    a = r[..., 0, 0]
    b = r[..., 0, 1]
    d = r[..., 1, 1]
    mean = 0.5 * (a + d)
    delta = 0.5 * (a - d)
    rad = np.hypot(delta, b)

    e1 = mean + rad
    e2 = mean - rad
    c1 = np.clip(e1, lo, hi)
    c2 = np.clip(e2, lo, hi)
    moved = (c1 != e1) | (c2 != e2)

    new_mean = 0.5 * (c1 + c2)
    new_rad = 0.5 * (c1 - c2)
    safe_rad = np.where(rad > 0, rad, 1.0)
    cos2 = np.where(rad > 0, delta / safe_rad, 1.0)
    sin2 = np.where(rad > 0, b / safe_rad, 0.0)

    out = np.empty_like(r)
    out[..., 0, 0] = new_mean + new_rad * cos2
    out[..., 1, 1] = new_mean - new_rad * cos2
    out[..., 0, 1] = new_rad * sin2
    out[..., 1, 0] = new_rad * sin2
    return out, int(np.count_nonzero(moved))


def spd_inverse(r, lo=EIG_FLOOR, hi=EIG_CEIL):
    """Closed-form inverse of a (floored) symmetric positive definite 2x2."""
    f, _ = spd_floor(r, lo, hi)
    a = f[..., 0, 0]
    b = f[..., 0, 1]
    d = f[..., 1, 1]
    det = a * d - b * b
    if not np.all(np.isfinite(det)) or np.any(det <= 0):
        raise NonInvertible("2x2 block not invertible after eigenvalue flooring")
    out = np.empty_like(f)
    out[..., 0, 0] = d / det
    out[..., 0, 1] = -b / det
    out[..., 1, 0] = -b / det
    out[..., 1, 1] = a / det
    return out


def trace_inverse(r):
    """tr(R^{-1}) of a symmetric positive definite 2x2."""
    inv = spd_inverse(r)
    return inv[..., 0, 0] + inv[..., 1, 1]
