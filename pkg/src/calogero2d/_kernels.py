"""Factorization kernels for inertia counting and small dense eigenproblems.

Two backends share one algorithmic contract:

* ``numba`` -- the loop kernels below compiled with ``@njit`` (default when
  numba imports cleanly),
* ``numpy`` -- a pure-numpy path (vectorized column updates for the banded
  elimination, plain loops elsewhere).

Select with ``CALOGERO2D_BACKEND=numba|numpy`` in the environment; unset
means "numba if available".  Both backends produce identical counts; the
benchmark in ``benchmarks/bench_kernels.py`` compares their speed.

All inertia kernels return ``(neg, zero, pos, ok)``.  ``ok == 0`` signals a
pivot breakdown (a pivot below tolerance with a nonzero column remainder);
the caller is expected to retry with a jittered shift.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


def _resolve_backend() -> str:
    choice = os.environ.get("CALOGERO2D_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise ImportError(
                "CALOGERO2D_BACKEND=numba requested but numba is not importable"
            )
        return "numba"
    raise ValueError(f"unknown CALOGERO2D_BACKEND={choice!r} (use numba|numpy)")


BACKEND = _resolve_backend()


# ----------------------------------------------------------------------
# Sturm pivot recursion for symmetric tridiagonal matrices.
# ----------------------------------------------------------------------

def _sturm_inertia_loops(diag, off, tol):
    n = diag.shape[0]
    neg = 0
    zero = 0
    pos = 0
    carry = 0.0  # off[i-1]^2 / previous pivot
    for i in range(n):
        piv = diag[i] - carry
        rem = abs(off[i]) if i < n - 1 else 0.0
        if abs(piv) < tol:
            if rem > tol:
                return neg, zero, pos, 0
            zero += 1
            carry = 0.0
        else:
            if piv < 0.0:
                neg += 1
            else:
                pos += 1
            carry = rem * rem / piv
    return neg, zero, pos, 1


# ----------------------------------------------------------------------
# Symmetric banded LDL^T elimination with an optional dense bottom border.
#
# The matrix is (m + b) x (m + b):
#   * leading m x m block packed in `band`, band[k, j] = M[j+k, j], k <= w,
#   * last b rows dense in `border`, border[r, c] = M[m+r, c] for c <= m+r
#     (the b x b tail block lives in columns m..m+b-1).
# Twisted-periodic circle operators use b = 2 (the wrap couplings live in
# the border rows); plain banded matrices use b = 0.
# ----------------------------------------------------------------------

def _banded_border_inertia_loops(band, border, tol):
    w = band.shape[0] - 1
    m = band.shape[1]
    b = border.shape[0]
    neg = 0
    zero = 0
    pos = 0
    for j in range(m):
        piv = band[0, j]
        rem = 0.0
        for k in range(1, w + 1):
            if j + k >= m:
                break
            a = abs(band[k, j])
            if a > rem:
                rem = a
        for r in range(b):
            a = abs(border[r, j])
            if a > rem:
                rem = a
        if abs(piv) < tol:
            if rem > tol:
                return neg, zero, pos, 0
            zero += 1
            continue
        if piv < 0.0:
            neg += 1
        else:
            pos += 1
        if rem == 0.0:
            continue
        for k in range(1, w + 1):
            if j + k >= m:
                break
            ljk = band[k, j] / piv
            if ljk != 0.0:
                for k2 in range(k, w + 1):
                    if j + k2 >= m:
                        break
                    band[k2 - k, j + k] -= ljk * band[k2, j]
        for r in range(b):
            lrj = border[r, j] / piv
            if lrj != 0.0:
                for k in range(1, w + 1):
                    if j + k >= m:
                        break
                    border[r, j + k] -= lrj * band[k, j]
                for r2 in range(b):
                    border[r, m + r2] -= lrj * border[r2, j]
    # dense LDL^T on the b x b tail block
    for r in range(b):
        piv = border[r, m + r]
        rem = 0.0
        for r2 in range(r + 1, b):
            a = abs(border[r2, m + r])
            if a > rem:
                rem = a
        if abs(piv) < tol:
            if rem > tol:
                return neg, zero, pos, 0
            zero += 1
            continue
        if piv < 0.0:
            neg += 1
        else:
            pos += 1
        for r2 in range(r + 1, b):
            l = border[r2, m + r] / piv
            if l != 0.0:
                for r3 in range(r2, b):
                    border[r3, m + r2] -= l * border[r3, m + r]
    return neg, zero, pos, 1


# ----------------------------------------------------------------------
# Cyclic Jacobi eigenvalues for small dense symmetric matrices (d <= 64).
# ----------------------------------------------------------------------

def _jacobi_eigenvalues_loops(a, sweeps, rel_tol):
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(a[i, j])
            if v > scale:
                scale = v
    if scale == 0.0:
        return np.zeros(n)
    thresh = rel_tol * scale
    for _ in range(sweeps):
        offmax = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) > offmax:
                    offmax = abs(apq)
                if abs(apq) <= thresh:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = c * aip - s * aiq
                        a[p, i] = a[i, p]
                        a[i, q] = s * aip + c * aiq
                        a[q, i] = a[i, q]
        if offmax <= thresh:
            break
    diag = np.empty(n)
    for i in range(n):
        diag[i] = a[i, i]
    return np.sort(diag)


if HAVE_NUMBA:
    _sturm_inertia_numba = numba.njit(cache=True, nogil=True)(_sturm_inertia_loops)
    _banded_border_inertia_numba = numba.njit(cache=True, nogil=True)(
        _banded_border_inertia_loops
    )
    _jacobi_eigenvalues_numba = numba.njit(cache=True, nogil=True)(
        _jacobi_eigenvalues_loops
    )


# ----------------------------------------------------------------------
# Pure-numpy variants.  The Sturm recursion is inherently sequential, so
# its fallback is the plain loop above; the banded elimination is
# vectorized per column with a sliding dense window.
# ----------------------------------------------------------------------

def _banded_border_inertia_numpy(band, border, tol):
    w = band.shape[0] - 1
    m = band.shape[1]
    b = border.shape[0]
    neg = zero = pos = 0
    # pad the band with w+1 zero columns so the sliding window below never
    # runs off the edge; padded entries are zero and never counted as pivots
    padded = np.zeros((w + 1, m + w + 1))
    padded[:, :m] = band
    tail_at = m + w + 1
    bord = np.zeros((b, tail_at + b))
    if b:
        bord[:, :m] = border[:, :m]
        bord[:, tail_at:] = border[:, m:]
    # win[p, q] = current value of M[j+p, j+q] over the active block [j, j+w]
    win = np.zeros((w + 1, w + 1))
    for q in range(w + 1):
        for p in range(q, w + 1):
            win[p, q] = padded[p - q, q]
            win[q, p] = win[p, q]
    for j in range(m):
        piv = win[0, 0]
        col = win[1:, 0]
        rem = abs(col).max() if w else 0.0
        if b:
            bcol = bord[:, j].copy()
            rem = max(rem, abs(bcol).max())
        if abs(piv) < tol:
            if rem > tol:
                return neg, zero, pos, 0
            zero += 1
        else:
            if piv < 0.0:
                neg += 1
            else:
                pos += 1
            if rem != 0.0:
                win[1:, 1:] -= np.outer(col / piv, col)
                if b:
                    lb = bcol / piv
                    bord[:, j + 1:j + w + 1] -= np.outer(lb, col)
                    bord[:, tail_at:] -= np.outer(lb, bcol)
        # slide the window to block [j+1, j+w+1]; the fresh row j+w+1 is
        # still untouched by elimination, so it comes straight from storage
        win[:-1, :-1] = win[1:, 1:]
        for q in range(w):
            v = padded[w - q, j + 1 + q]
            win[w, q] = v
            win[q, w] = v
        win[w, w] = padded[0, j + w + 1]
    # dense LDL^T on the b x b tail block
    for r in range(b):
        piv = bord[r, tail_at + r]
        rem = 0.0
        for r2 in range(r + 1, b):
            rem = max(rem, abs(bord[r2, tail_at + r]))
        if abs(piv) < tol:
            if rem > tol:
                return neg, zero, pos, 0
            zero += 1
            continue
        if piv < 0.0:
            neg += 1
        else:
            pos += 1
        for r2 in range(r + 1, b):
            l = bord[r2, tail_at + r] / piv
            if l != 0.0:
                for r3 in range(r2, b):
                    bord[r3, tail_at + r2] -= l * bord[r3, tail_at + r]
    return neg, zero, pos, 1


# ----------------------------------------------------------------------
# Public dispatchers.  Shift is applied here so kernels stay shift-free.
# ----------------------------------------------------------------------

def sturm_inertia(diag, off, shift=0.0, tol=0.0):
    """Inertia counts of a symmetric tridiagonal matrix minus ``shift``."""
    d = np.ascontiguousarray(diag, dtype=np.float64)
    e = np.ascontiguousarray(off, dtype=np.float64)
    if shift != 0.0:
        d = d - shift
    if BACKEND == "numba":
        return _sturm_inertia_numba(d, e, tol)
    return _sturm_inertia_loops(d, e, tol)


def banded_border_inertia(band, border, shift=0.0, tol=0.0):
    """Inertia counts of a banded symmetric matrix with dense border rows.

    ``band`` is packed lower storage of the leading block, ``border`` the
    last ``b`` dense rows (pass shape ``(0, m)`` for a plain banded matrix).
    """
    bd = np.array(band, dtype=np.float64, copy=True, order="C")
    m = bd.shape[1]
    br = np.array(border, dtype=np.float64, copy=True, order="C")
    if br.ndim != 2:
        raise ValueError("border must be 2-D (use shape (0, m) when absent)")
    b = br.shape[0]
    if b and br.shape[1] != m + b:
        raise ValueError("border rows must span all columns of the matrix")
    if shift != 0.0:
        bd[0, :] -= shift
        for r in range(b):
            br[r, m + r] -= shift
    if BACKEND == "numba":
        return _banded_border_inertia_numba(bd, br, tol)
    return _banded_border_inertia_numpy(bd, br, tol)


def jacobi_eigenvalues(a, sweeps=60, rel_tol=1e-13):
    """All eigenvalues of a small dense symmetric matrix, ascending."""
    m = np.array(a, dtype=np.float64, copy=True, order="C")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if m.shape[0] == 0:
        return np.zeros(0)
    if BACKEND == "numba":
        return _jacobi_eigenvalues_numba(m, sweeps, rel_tol)
    return _jacobi_eigenvalues_loops(m, sweeps, rel_tol)
