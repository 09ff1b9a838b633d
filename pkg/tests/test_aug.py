import numpy as np
import pytest

from glse_gamp.aug import (EIG_FLOOR, augment_complex, spd_floor, spd_inverse,
                           sym, to_aug, to_complex, trace_inverse)
from glse_gamp.errors import NonInvertible


def test_to_aug_round_trip():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    assert np.array_equal(to_complex(to_aug(z)), z)
    assert to_aug(z).shape == (5, 3, 2)


def test_augment_complex_multiplication():
    # the block of h acting on [Re z, Im z] is complex multiplication h*z
    rng = np.random.default_rng(1)
    h = rng.normal(size=4) + 1j * rng.normal(size=4)
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    prod = np.einsum("kab,kb->ka", augment_complex(h), to_aug(z))
    assert np.allclose(to_complex(prod), h * z, atol=1e-14)


def test_augment_block_is_rotation_scaling():
    q = augment_complex(np.array(2.0 + 1.0j))
    assert np.allclose(q @ q.T, 5.0 * np.eye(2))


def test_sym():
    m = np.array([[1.0, 2.0], [0.0, 3.0]])
    s = sym(m)
    assert np.allclose(s, s.T)
    assert np.allclose(s, [[1.0, 1.0], [1.0, 3.0]])


def test_spd_floor_leaves_good_matrices_alone():
    r = np.array([[2.0, 0.5], [0.5, 1.0]])
    out, moved = spd_floor(r)
    assert moved == 0
    assert np.allclose(out, r)


def test_spd_floor_clamps_negative_eigenvalue():
    # eigenvalues 3 and -1
    v = np.array([1.0, 1.0]) / np.sqrt(2.0)
    r = 3.0 * np.outer(v, v) - 1.0 * (np.eye(2) - np.outer(v, v))
    out, moved = spd_floor(r)
    assert moved == 1
    eigs = np.linalg.eigvalsh(out)
    assert eigs.min() >= EIG_FLOOR * (1.0 - 1e-12)
    assert np.isclose(eigs.max(), 3.0)


def test_spd_floor_counts_batched():
    r = np.stack([np.eye(2), -np.eye(2), 2e12 * np.eye(2)])
    out, moved = spd_floor(r)
    assert moved == 2
    assert out.shape == (3, 2, 2)


def test_spd_inverse_matches_dense():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(10, 2, 2))
    r = np.einsum("nab,ncb->nac", a, a) + 0.1 * np.eye(2)
    inv = spd_inverse(r)
    assert np.allclose(inv, np.linalg.inv(r), atol=1e-10)


def test_spd_inverse_rejects_nan():
    with pytest.raises(NonInvertible):
        spd_inverse(np.full((2, 2), np.nan))


def test_trace_inverse():
    r = np.diag([2.0, 4.0])
    assert np.isclose(trace_inverse(r), 0.5 + 0.25)
