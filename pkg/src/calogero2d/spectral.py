"""Operator discretizations and exact negative-eigenvalue counting.

Builders produce symmetric matrices (tridiagonal, banded, or tridiagonal
with a twisted-periodic wrap) from validated potentials; ``count_negative``
extracts inertia through factorization pivots, and ``eigenvalues_dense``
serves as the independent dense oracle.

Discretization choices (fixed across the package):
  * second-order centered differences, potential sampled piecewise-constant;
  * artificial boundaries are Dirichlet, which only removes eigenvalues, so
    "counted <= bound" conclusions stay sound under truncation;
  * the flux operator on the circle is gauged to a real tridiagonal chain
    plus one complex wrap phase, realized as a real symmetric doubling of
    dimension 2n whose multiplicities are halved on report.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .constants import FluxData
from .errors import FluxDegenerateError, GridBudgetError, IndeterminateCountError
from .potentials import GridPotential1D, HalfPlanePotential, MatrixPotential, RadialPotential

MAX_UNKNOWNS = 200_000  # desk-scale budget for banded factorizations
MAX_DENSE = 2000  # dense-oracle dimension cap

PIVOT_TOL_FACTOR = 1e-9
JITTER_FACTOR = 1e-8

BC_DIRICHLET = "dirichlet"
BC_NEUMANN = "neumann"
BC_TWISTED = "twisted"


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix from a 1-D discretization.

    For ``bc == "twisted"`` the chain closes with one wrap coupling of
    modulus ``wrap`` and phase angle ``phase`` (stored, not materialized).
    """

    diag: np.ndarray
    off: np.ndarray
    h: float
    bc: str = BC_DIRICHLET
    phase: float = 0.0
    wrap: float = 0.0

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=np.float64)
        e = np.ascontiguousarray(self.off, dtype=np.float64)
        if e.size != d.size - 1:
            raise ValueError("off-diagonal must be one shorter than the diagonal")
        if self.bc not in (BC_DIRICHLET, BC_NEUMANN, BC_TWISTED):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "off", e)

    @property
    def n(self) -> int:
        return self.diag.size

    def inf_norm(self) -> float:
        a = np.abs(self.diag).copy()
        a[:-1] += np.abs(self.off)
        a[1:] += np.abs(self.off)
        if self.bc == BC_TWISTED:
            a[0] += abs(self.wrap)
            a[-1] += abs(self.wrap)
        return float(a.max()) if a.size else 0.0


@dataclass(frozen=True)
class BandedSymmetric:
    """Packed symmetric band: band[k, j] = M[j + k, j] for 0 <= k <= bandwidth."""

    n: int
    bandwidth: int
    band: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(self.band, dtype=np.float64)
        if b.shape != (self.bandwidth + 1, self.n):
            raise ValueError("band storage must have shape (bandwidth+1, n)")
        if not self.bandwidth < self.n:
            raise ValueError("half-bandwidth must be smaller than the dimension")
        object.__setattr__(self, "band", b)

    def inf_norm(self) -> float:
        rowsum = np.abs(self.band[0]).copy()
        for k in range(1, self.bandwidth + 1):
            a = np.abs(self.band[k, : self.n - k])
            rowsum[: self.n - k] += a
            rowsum[k:] += a
        return float(rowsum.max()) if self.n else 0.0


@dataclass(frozen=True)
class Inertia:
    """Signs of factorization pivots: counts of negative/zero/positive."""

    neg: int
    zero: int
    pos: int
    tolerance: float

    @property
    def n(self) -> int:
        return self.neg + self.zero + self.pos


@dataclass(frozen=True)
class RadialModeOperator:
    """One angular mode of a planar operator with radial potential.

    ``nu`` is the centrifugal strength: (m + psi)^2 for flux operators,
    m^2 for the antisymmetric restriction.  ``weight_exponent`` picks the
    volume measure r^p dr (p = 1 for the plane, p = 0 for the half-line).
    """

    nu: float
    potential: RadialPotential
    r_max: float
    weight_exponent: int = 1

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("mode strength nu must be nonnegative")
        if self.weight_exponent not in (0, 1):
            raise ValueError("weight exponent must be 0 or 1")
        if self.r_max <= 0:
            raise ValueError("domain radius must be positive")


# ----------------------------------------------------------------------
# Builders.
# ----------------------------------------------------------------------

def build_halfline(v: GridPotential1D, L: float, n: int) -> TridiagonalOperator:
    """-d^2/dt^2 - v on (0, L), Dirichlet at both ends.

    The origin condition is the theorem's; the one at L is domain
    truncation.  The potential should be supported in [0, L]; excess
    support is dropped (flagged), which only lowers the count.
    """
    if n < 16:
        raise ValueError("need at least 16 interior points")
    if v.nodes[-1] > L and v.sample(L) > 0:
        warnings.warn(
            f"potential support extends past the domain (nodes to {v.nodes[-1]:g}, L={L:g}); "
            "the excess is truncated",
            stacklevel=2,
        )
    h = L / (n + 1)
    x = (np.arange(n) + 1.0) * h
    diag = 2.0 / h ** 2 - v.sample(x)
    off = np.full(n - 1, -1.0 / h ** 2)
    return TridiagonalOperator(diag, off, h, BC_DIRICHLET)


def build_neumann_well(q: GridPotential1D, ell: float, n: int,
                       kinetic: float = 1.0) -> TridiagonalOperator:
    """-kinetic * d^2/dx^2 - q on (0, ell) with Neumann conditions.

    Cell-centered grid (nodes at (j + 1/2) h), the standard symmetric
    second-order Neumann discretization.
    """
    if n < 2:
        raise ValueError("need at least 2 cells")
    h = ell / n
    x = (np.arange(n) + 0.5) * h
    k = kinetic / h ** 2
    diag = 2.0 * k - q.sample(x)
    diag[0] -= k
    diag[-1] -= k
    off = np.full(n - 1, -k)
    return TridiagonalOperator(diag, off, h, BC_NEUMANN)


def build_circle(v: GridPotential1D, flux: FluxData, n: int) -> TridiagonalOperator:
    """(i d/dphi + psi)^2 - v on [-pi, pi] with periodic conditions.

    Gauge-transformed so the chain couplings are real and the whole flux
    sits in a single wrap phase e^{i 2 pi psi}; spectra are reported with
    doubled-embedding multiplicities halved.
    """
    if n < 16:
        raise ValueError("need at least 16 grid points")
    if abs(flux.psi - round(flux.psi)) <= 1e-9:
        raise FluxDegenerateError("integer flux: the circle operator has a zero mode")
    h = 2.0 * math.pi / n
    phi = -math.pi + np.arange(n) * h
    diag = 2.0 / h ** 2 - v.sample(phi)
    off = np.full(n - 1, -1.0 / h ** 2)
    return TridiagonalOperator(
        diag, off, h, BC_TWISTED, phase=2.0 * math.pi * flux.psi, wrap=1.0 / h ** 2
    )


def build_radial_mode(op: RadialModeOperator, n: int) -> TridiagonalOperator:
    """One angular mode: -r^(-p) d/dr (r^p d/dr) + nu/r^2 - V(r) on (0, R].

    Symmetrized in the weighted space L^2(r^p dr) with face-centered
    weights, so the returned matrix is honestly symmetric.  The mesh starts
    at h; the centrifugal term is repulsive there, and the outer end is
    truncation-Dirichlet.
    """
    if n < 16:
        raise ValueError("need at least 16 interior points")
    h = op.r_max / (n + 1)
    i = np.arange(1, n + 1, dtype=np.float64)
    r = i * h
    vvals = op.potential.sample(r)
    diag = 2.0 / h ** 2 + op.nu / r ** 2 - vvals
    if op.weight_exponent == 0:
        off = np.full(n - 1, -1.0 / h ** 2)
    else:
        # face-centered r_{i+1/2} over sqrt(r_i r_{i+1}) after the diagonal
        # similarity with sqrt(r_i)
        off = -(i[:-1] + 0.5) / (h ** 2 * np.sqrt(i[:-1] * (i[:-1] + 1.0)))
    return TridiagonalOperator(diag, off, h, BC_DIRICHLET)


def _check_budget(n_unknowns: int, bandwidth: int):
    if n_unknowns > MAX_UNKNOWNS:
        shrink = math.sqrt(MAX_UNKNOWNS / n_unknowns)
        raise GridBudgetError(
            f"{n_unknowns} unknowns exceed the desk-scale budget of {MAX_UNKNOWNS}; "
            f"scale the grid dimensions by <= {shrink:.2f}"
        )
    band_bytes = 8 * (bandwidth + 1) * n_unknowns
    if band_bytes > 1_600_000_000:
        raise GridBudgetError(
            f"band storage would need {band_bytes / 1e9:.1f} GB; choose a coarser "
            "transverse grid"
        )


def build_halfplane(V: HalfPlanePotential, n1: int, n2: int,
                    L1: float | None = None, L2: float | None = None) -> BandedSymmetric:
    """-Laplacian - V on [0, L1] x [-L2, L2], Dirichlet on all four sides.

    Row-major ordering over the n1 x n2 interior lattice; the half-bandwidth
    equals the transverse size n2.
    """
    L1 = V.extent1 if L1 is None else L1
    L2 = V.half_width2 if L2 is None else L2
    n = n1 * n2
    _check_budget(n, n2)
    h1 = L1 / (n1 + 1)
    h2 = 2.0 * L2 / (n2 + 1)
    x1 = (np.arange(n1) + 1.0) * h1
    x2 = -L2 + (np.arange(n2) + 1.0) * h2
    # cell lookup, vectorized over the lattice
    i_cell = np.floor(x1 / V.h1).astype(int)
    j_cell = np.floor((x2 + V.half_width2) / V.h2).astype(int)
    ok1 = (i_cell >= 0) & (i_cell < V.values.shape[0])
    ok2 = (j_cell >= 0) & (j_cell < V.values.shape[1])
    vals = np.zeros((n1, n2))
    sub = V.values[np.clip(i_cell, 0, V.values.shape[0] - 1)][
        :, np.clip(j_cell, 0, V.values.shape[1] - 1)
    ]
    vals[np.ix_(ok1, ok2)] = sub[np.ix_(ok1, ok2)]
    band = np.zeros((n2 + 1, n))
    band[0] = (2.0 / h1 ** 2 + 2.0 / h2 ** 2 - vals).ravel()
    # x2-neighbors: offset 1 within a row of the lattice
    coupling2 = np.full((n1, n2), -1.0 / h2 ** 2)
    coupling2[:, -1] = 0.0  # no wrap into the next lattice row
    band[1, : n - 1] = coupling2.ravel()[: n - 1]
    # x1-neighbors: offset n2
    if n1 > 1:
        band[n2, : n - n2] = -1.0 / h1 ** 2
    return BandedSymmetric(n=n, bandwidth=n2, band=band)


def build_matrix_halfline(MV: MatrixPotential, L: float, n: int) -> BandedSymmetric:
    """-d^2/dt^2 (x) I - phi(t) A on (0, L), Dirichlet ends, block packed.

    Half-bandwidth equals the shape dimension d.
    """
    d = MV.dim
    if d > 64:
        raise ValueError("shape dimension is capped at 64")
    if n < 16:
        raise ValueError("need at least 16 interior nodes")
    ntot = n * d
    _check_budget(ntot, d)
    h = L / (n + 1)
    t = (np.arange(n) + 1.0) * h
    phi = MV.profile.sample(t)
    band = np.zeros((d + 1, ntot))
    a = MV.shape
    for c in range(d):
        band[0, c::d] = 2.0 / h ** 2 - phi * a[c, c]
        for k in range(1, d - c):
            band[k, c::d] = -phi * a[c + k, c]
    band[d, : ntot - d] = -1.0 / h ** 2
    return BandedSymmetric(n=ntot, bandwidth=d, band=band)


# ----------------------------------------------------------------------
# Twisted-periodic doubling helpers.
# ----------------------------------------------------------------------

def _twisted_band_border(op: TridiagonalOperator, shift: float):
    """Real symmetric doubling of the twisted chain, permuted to a
    half-bandwidth-1 band (both copies of the open chain) plus two dense
    border rows carrying the chain closure and the wrap phase."""
    n = op.n
    c = -op.wrap * math.cos(op.phase)
    s = op.wrap * math.sin(op.phase)
    m = 2 * (n - 1)
    band = np.zeros((2, m))
    band[0, : n - 1] = op.diag[: n - 1] - shift
    band[0, n - 1 :] = op.diag[: n - 1] - shift
    band[1, : n - 2] = op.off[: n - 2]
    band[1, n - 1 : m - 1] = op.off[: n - 2]
    border = np.zeros((2, m + 2))
    last = op.off[n - 2] if n >= 2 else 0.0
    # row for Re_{n-1}: chain link, wrap to Re_0 and Im_0, diagonal
    border[0, n - 2] = last
    border[0, 0] = c
    border[0, n - 1] = s
    border[0, m] = op.diag[n - 1] - shift
    # row for Im_{n-1}
    border[1, m - 1] = last
    border[1, n - 1] = c
    border[1, 0] = -s
    border[1, m + 1] = op.diag[n - 1] - shift
    return band, border


def _twisted_dense(op: TridiagonalOperator) -> np.ndarray:
    n = op.n
    a = np.zeros((n, n))
    a[np.arange(n), np.arange(n)] = op.diag
    a[np.arange(n - 1), np.arange(1, n)] = op.off
    a[np.arange(1, n), np.arange(n - 1)] = op.off
    b = np.zeros((n, n))
    # wrap coupling H[n-1, 0] = -wrap * e^{i phase}
    a[n - 1, 0] = a[0, n - 1] = -op.wrap * math.cos(op.phase)
    b[n - 1, 0] = -op.wrap * math.sin(op.phase)
    b[0, n - 1] = op.wrap * math.sin(op.phase)
    return np.block([[a, -b], [b, a]])


def to_dense(M) -> np.ndarray:
    """Materialize an operator as a dense symmetric matrix (oracle use).

    Twisted-periodic operators materialize as their real symmetric doubling
    (dimension 2n, every eigenvalue twice).
    """
    if isinstance(M, TridiagonalOperator):
        if M.bc == BC_TWISTED:
            return _twisted_dense(M)
        n = M.n
        a = np.zeros((n, n))
        a[np.arange(n), np.arange(n)] = M.diag
        a[np.arange(n - 1), np.arange(1, n)] = M.off
        a[np.arange(1, n), np.arange(n - 1)] = M.off
        return a
    if isinstance(M, BandedSymmetric):
        a = np.zeros((M.n, M.n))
        for k in range(M.bandwidth + 1):
            idx = np.arange(M.n - k)
            a[idx + k, idx] = M.band[k, : M.n - k]
            a[idx, idx + k] = M.band[k, : M.n - k]
        return a
    a = np.asarray(M, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise TypeError("expected an operator or a square matrix")
    return a


# ----------------------------------------------------------------------
# Counting.
# ----------------------------------------------------------------------

def _attempt_count(M, shift: float, tol: float):
    if isinstance(M, TridiagonalOperator):
        if M.bc == BC_TWISTED:
            band, border = _twisted_band_border(M, shift)
            res = _kernels.banded_border_inertia(band, border, 0.0, tol)
            if not res[3]:
                return None
            neg, zero, pos = res[0], res[1], res[2]
            if neg % 2 or zero % 2 or pos % 2:
                return None  # doubling multiplicities must be even
            return neg // 2, zero // 2, pos // 2
        res = _kernels.sturm_inertia(M.diag, M.off, shift, tol)
    elif isinstance(M, BandedSymmetric):
        res = _kernels.banded_border_inertia(
            M.band, np.zeros((0, M.n)), shift, tol
        )
    else:
        raise TypeError(f"cannot count on {type(M).__name__}")
    if not res[3]:
        return None
    return res[0], res[1], res[2]


def count_negative(M, shift: float = 0.0) -> Inertia:
    """Inertia of M - shift*I from factorization pivots.

    Pivots below tol = 1e-9 * ||M||_inf with an otherwise clean column count
    as zero eigenvalues; a breakdown (small pivot, live column) triggers a
    retry with the shift jittered by +-1e-8 * ||M||, and persistent failure
    raises IndeterminateCountError rather than guessing.
    """
    nrm = M.inf_norm()
    tol = PIVOT_TOL_FACTOR * max(nrm, 1e-300)
    jitter = JITTER_FACTOR * max(nrm, 1e-300)
    for delta in (0.0, jitter, -jitter, 3 * jitter, -3 * jitter):
        res = _attempt_count(M, shift + delta, tol)
        if res is not None:
            return Inertia(neg=res[0], zero=res[1], pos=res[2], tolerance=tol)
    raise IndeterminateCountError(
        f"pivot breakdown persists after shift jitter near shift={shift:g}"
    )


def eigenvalues_dense(M, check: bool = False) -> np.ndarray:
    """All eigenvalues (ascending) through the dense symmetric eigensolver.

    The independent oracle for counts and half-moment traces.  Twisted
    operators are solved in their doubling and the duplicated multiplicities
    are merged, so the returned spectrum is the physical one.
    """
    twisted = isinstance(M, TridiagonalOperator) and M.bc == BC_TWISTED
    cap = 2 * MAX_DENSE if twisted else MAX_DENSE
    a = to_dense(M)
    if a.shape[0] > cap:
        raise ValueError(f"dense path capped at {MAX_DENSE} unknowns")
    vals = np.linalg.eigvalsh(a)
    if twisted:
        nrm = max(float(np.abs(a).max()), 1e-300)
        pairs = vals.reshape(-1, 2)
        gap = float(np.abs(pairs[:, 1] - pairs[:, 0]).max())
        if gap > 1e-7 * nrm:
            raise RuntimeError(f"doubled spectrum failed to pair (gap {gap:g})")
        vals = pairs.mean(axis=1)
    if check:
        w, vecs = np.linalg.eigh(a)
        resid = np.abs(a @ vecs - vecs * w).max()
        if resid > 1e-8 * max(float(np.abs(a).max()), 1e-300):
            raise RuntimeError(f"eigensolver residual {resid:g} out of contract")
    return vals


def trace_half_moment(M: TridiagonalOperator) -> float:
    """Sum of |lambda|^(1/2) over the negative spectrum (dense path)."""
    vals = eigenvalues_dense(M)
    neg = vals[vals < 0.0]
    return float(np.sqrt(-neg).sum())


def lowest_eigenvalue(M, tol: float = 1e-11) -> float:
    """Smallest eigenvalue by bisection on factorization counts."""
    nrm = M.inf_norm()
    lo = -nrm - 1.0
    hi = nrm + 1.0
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        inertia = count_negative(M, shift=mid)
        if inertia.neg >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def mode_cutoff(V: RadialPotential, flux: FluxData | None = None) -> int:
    """Smallest M with every mode of shifted index >= M manifestly nonneg.

    Modes with centrifugal strength nu >= V0 R^2 dominate the potential
    pointwise on its support, so they contribute no negative eigenvalues:
    M = ceil(R sqrt(V0)) + 1 works for both (m + psi)^2 and m^2 ladders.
    A potential that never vanishes is flagged and cut at its last node.
    """
    v0 = V.max_value
    if v0 == 0.0:
        return 1
    r = V.support_radius()
    if V.grid.values[-2] > 0 and r >= V.r_max:
        warnings.warn(
            "potential has no compactly supported tail inside the grid; using the "
            "last node as the support radius",
            stacklevel=2,
        )
    return int(math.ceil(r * math.sqrt(v0))) + 1


def count_radial_modes(V: RadialPotential, nus, r_max: float, n: int) -> int:
    """Total negative count over a list of mode strengths at resolution n."""
    total = 0
    for nu in nus:
        op = build_radial_mode(RadialModeOperator(nu, V, r_max), n)
        total += count_negative(op).neg
    return total


def flux_mode_strengths(flux: FluxData, cutoff: int):
    """Centrifugal ladder (m + psi)^2 for |m| <= cutoff."""
    return [(m + flux.psi) ** 2 for m in range(-cutoff, cutoff + 1)]


def antisymmetric_mode_strengths(cutoff: int):
    """Centrifugal ladder m^2 for the odd angular modes, 1 <= m <= cutoff."""
    return [float(m * m) for m in range(1, cutoff + 1)]
