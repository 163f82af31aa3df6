"""Kernel-level checks: factorization counts against the dense eigensolver."""

import numpy as np
import pytest

from calogero2d import _kernels as K


def band_to_dense(band, border=None):
    w1, m = band.shape
    w = w1 - 1
    b = 0 if border is None else border.shape[0]
    n = m + b
    a = np.zeros((n, n))
    for k in range(w1):
        for j in range(m):
            if k == 0 or j + k < m:
                a[j + k, j] = band[k, j]
                a[j, j + k] = band[k, j]
    if b:
        for r in range(b):
            for c in range(m + r + 1):
                a[m + r, c] = border[r, c]
                a[c, m + r] = border[r, c]
    return a


def backends():
    out = ["numpy"]
    if K.HAVE_NUMBA:
        out.append("numba")
    return out


@pytest.fixture(params=backends())
def backend(request, monkeypatch):
    monkeypatch.setattr(K, "BACKEND", request.param)
    return request.param


def test_sturm_trivial(backend):
    neg, zero, pos, ok = K.sturm_inertia(np.array([-1.0, 2.0, -3.0]), np.zeros(2))
    assert (neg, zero, pos, ok) == (2, 0, 1, 1)
    neg, zero, pos, ok = K.sturm_inertia(np.ones(7), np.zeros(6))
    assert (neg, zero, pos, ok) == (0, 0, 7, 1)


def test_sturm_zero_diagonal_counts_zero(backend):
    # fully decoupled zeros are reported in the zero band, not as breakdowns
    neg, zero, pos, ok = K.sturm_inertia(np.zeros(4), np.zeros(3), tol=1e-12)
    assert ok == 1
    assert (neg, zero, pos) == (0, 4, 0)


def test_sturm_breakdown_flag(backend):
    # zero pivot with a live off-diagonal must not silently miscount
    neg, zero, pos, ok = K.sturm_inertia(
        np.array([0.0, 1.0]), np.array([1.0]), tol=1e-12
    )
    assert ok == 0


def test_sturm_random_vs_dense(backend):
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(2, 80))
        d = rng.normal(size=n) * 3
        e = rng.normal(size=n - 1)
        shift = float(rng.normal()) * 0.5
        a = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        ev = np.linalg.eigvalsh(a)
        tol = 1e-12 * max(1.0, np.abs(a).sum(axis=1).max())
        neg, zero, pos, ok = K.sturm_inertia(d, e, shift, tol)
        assert ok == 1
        assert neg + zero + pos == n
        assert neg == int((ev < shift - tol).sum())


def test_banded_random_vs_dense(backend):
    rng = np.random.default_rng(11)
    for _ in range(50):
        m = int(rng.integers(3, 50))
        w = int(rng.integers(1, min(7, m)))
        band = np.zeros((w + 1, m))
        band[0] = rng.normal(size=m) * 2
        for k in range(1, w + 1):
            band[k, : m - k] = rng.normal(size=m - k)
        a = band_to_dense(band)
        ev = np.linalg.eigvalsh(a)
        tol = 1e-12 * max(1.0, np.abs(a).sum(axis=1).max())
        neg, zero, pos, ok = K.banded_border_inertia(band, np.zeros((0, m)), 0.0, tol)
        assert ok == 1
        assert neg + zero + pos == m
        assert neg == int((ev < -tol).sum())


def test_banded_with_border_vs_dense(backend):
    rng = np.random.default_rng(13)
    for _ in range(50):
        m = int(rng.integers(4, 40))
        w = int(rng.integers(1, 4))
        b = int(rng.integers(1, 3))
        band = np.zeros((w + 1, m))
        band[0] = rng.normal(size=m) * 2
        for k in range(1, w + 1):
            band[k, : m - k] = rng.normal(size=m - k)
        border = rng.normal(size=(b, m + b))
        a = band_to_dense(band, border)
        ev = np.linalg.eigvalsh(a)
        tol = 1e-12 * max(1.0, np.abs(a).sum(axis=1).max())
        neg, zero, pos, ok = K.banded_border_inertia(band, border, 0.0, tol)
        assert ok == 1
        assert neg + zero + pos == m + b
        assert neg == int((ev < -tol).sum())


def test_jacobi_matches_dense(backend):
    rng = np.random.default_rng(17)
    for _ in range(40):
        d = int(rng.integers(1, 24))
        x = rng.normal(size=(d, d))
        a = (x + x.T) / 2
        ev = np.linalg.eigvalsh(a)
        jv = K.jacobi_eigenvalues(a)
        scale = max(1.0, np.abs(ev).max())
        assert np.abs(jv - ev).max() <= 1e-10 * scale


def test_jacobi_zero_and_diagonal(backend):
    assert np.all(K.jacobi_eigenvalues(np.zeros((3, 3))) == 0)
    got = K.jacobi_eigenvalues(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(got, [1.0, 2.0, 3.0])


def test_backends_agree_on_counts():
    if not K.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(23)
    d = rng.normal(size=500)
    e = rng.normal(size=499)
    assert K._sturm_inertia_loops(d.copy(), e, 1e-12) == tuple(
        K._sturm_inertia_numba(d.copy(), e, 1e-12)
    )
    band = np.zeros((4, 300))
    band[0] = rng.normal(size=300)
    for k in range(1, 4):
        band[k, : 300 - k] = rng.normal(size=300 - k)
    border = rng.normal(size=(2, 302))
    r1 = K._banded_border_inertia_numpy(band.copy(), border.copy(), 1e-12)
    r2 = tuple(K._banded_border_inertia_numba(band.copy(), border.copy(), 1e-12))
    assert r1 == r2
