"""Potential families: validation of monotonicity hypotheses and quadrature.

All scalar data is piecewise-constant-left on its nodes: the value stored at
node i holds on [nodes[i], nodes[i+1]) and the potential vanishes outside
[nodes[0], nodes[-1]].  This makes monotonicity checking exact on samples and
keeps every integral a finite sum, exact for well-type potentials whose jumps
sit on nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import HypothesisError


@dataclass(frozen=True)
class MonotoneVerdict:
    ok: bool
    first_violation: tuple | None = None
    detail: str = ""

    def __bool__(self):
        return self.ok


def _as_float_array(x, name):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


@dataclass(frozen=True)
class GridPotential1D:
    """Sampled scalar potential with piecewise-constant-left interpolation."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = _as_float_array(self.nodes, "nodes")
        values = _as_float_array(self.values, "values")
        if nodes.size < 2:
            raise ValueError("need at least two nodes")
        if nodes.size != values.size:
            raise ValueError("nodes and values must have equal length")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("potential values must be nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    def sample(self, x):
        """Evaluate at x (scalar or array); zero outside the node range."""
        x = np.asarray(x, dtype=np.float64)
        idx = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.nodes.size - 1)
        out = self.values[idx]
        out = np.where((x < self.nodes[0]) | (x > self.nodes[-1]), 0.0, out)
        return out if out.ndim else float(out)

    def integral(self) -> float:
        """Exact integral of the piecewise-constant interpolant."""
        return float(np.dot(self.values[:-1], np.diff(self.nodes)))

    def sqrt_integral(self) -> float:
        """Exact integral of sqrt(v)."""
        return float(np.dot(np.sqrt(self.values[:-1]), np.diff(self.nodes)))

    def cumulative(self):
        """Prefix integrals at nodes (for interval root-finds)."""
        return np.concatenate(([0.0], np.cumsum(self.values[:-1] * np.diff(self.nodes))))

    def restrict(self, indices) -> "GridPotential1D":
        """Subsample onto a node subset (used by the coarsening invariant)."""
        idx = np.asarray(indices, dtype=int)
        return GridPotential1D(self.nodes[idx], self.values[idx])


@dataclass(frozen=True)
class RadialPotential:
    """Radial potential V(r) on [0, R_max]; hypothesis: non-increasing in r."""

    grid: GridPotential1D

    def __post_init__(self):
        if self.grid.nodes[0] != 0.0:
            raise ValueError("radial grids must start at r = 0")

    @property
    def r_max(self) -> float:
        return float(self.grid.nodes[-1])

    def sample(self, r):
        return self.grid.sample(r)

    def integral(self) -> float:
        """2 pi * integral of V(r) r dr, exact for the interpolant."""
        r = self.grid.nodes
        return math.pi * float(np.dot(self.grid.values[:-1], np.diff(r ** 2)))

    def support_radius(self) -> float:
        """End of the last cell with a positive value (r_max if V never dies)."""
        pos = np.nonzero(self.grid.values[:-1] > 0)[0]
        if pos.size == 0:
            return 0.0
        return float(self.grid.nodes[pos[-1] + 1])

    @property
    def max_value(self) -> float:
        return float(self.grid.values.max())


@dataclass(frozen=True)
class HalfPlanePotential:
    """Cell-sampled potential on [0, L1] x [-L2, L2].

    values[i, j] holds on the cell [i*h1, (i+1)*h1) x [-L2 + j*h2, -L2 + (j+1)*h2);
    hypothesis: non-increasing in x1 along every row of cells.
    """

    values: np.ndarray
    h1: float
    h2: float

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError("values must be a 2-D cell array")
        if np.any(vals < 0):
            raise ValueError("potential values must be nonnegative")
        if self.h1 <= 0 or self.h2 <= 0:
            raise ValueError("cell spacings must be positive")
        object.__setattr__(self, "values", vals)

    @property
    def extent1(self) -> float:
        return self.values.shape[0] * self.h1

    @property
    def half_width2(self) -> float:
        return 0.5 * self.values.shape[1] * self.h2

    def sample(self, x1, x2):
        i = math.floor(x1 / self.h1)
        j = math.floor((x2 + self.half_width2) / self.h2)
        if 0 <= i < self.values.shape[0] and 0 <= j < self.values.shape[1]:
            return float(self.values[i, j])
        return 0.0

    def integral(self) -> float:
        return float(self.values.sum()) * self.h1 * self.h2

    @property
    def max_value(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class MatrixPotential:
    """Separable operator-valued potential phi(t) * A.

    With phi >= 0 non-increasing and A symmetric positive semidefinite the
    family is automatically non-increasing in quadratic-form order.
    """

    profile: GridPotential1D
    shape: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.shape, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("shape matrix must be square")
        object.__setattr__(self, "shape", a)

    @property
    def dim(self) -> int:
        return self.shape.shape[0]

    def integral(self) -> float:
        """Integral of sqrt of the Schatten-1/2 norm of phi(t) * A."""
        return math.sqrt(schatten_half_norm(self.shape)) * self.profile.sqrt_integral()


Potential = GridPotential1D | RadialPotential | HalfPlanePotential | MatrixPotential


# ----------------------------------------------------------------------
# Hypothesis validation.  Exact on samples: any tolerance would silently
# admit out-of-hypothesis inputs.
# ----------------------------------------------------------------------

def _check_nonincreasing(values, what) -> MonotoneVerdict:
    diffs = np.diff(values)
    bad = np.nonzero(diffs > 0)[0]
    if bad.size:
        i = int(bad[0])
        return MonotoneVerdict(
            False,
            (i, i + 1),
            f"{what} increases between samples {i} and {i + 1} "
            f"({values[i]:g} -> {values[i + 1]:g})",
        )
    return MonotoneVerdict(True)


def validate_monotone(p) -> MonotoneVerdict:
    """Check the monotonicity hypothesis of the matching theorem.

    Rejections name the first offending index pair; the bound is then not
    asserted for such a potential.
    """
    if isinstance(p, RadialPotential):
        return _check_nonincreasing(p.grid.values, "radial potential")
    if isinstance(p, HalfPlanePotential):
        for j in range(p.values.shape[1]):
            v = _check_nonincreasing(p.values[:, j], f"half-plane potential (column {j})")
            if not v.ok:
                return MonotoneVerdict(
                    False, (v.first_violation[0], v.first_violation[1], j), v.detail
                )
        return MonotoneVerdict(True)
    if isinstance(p, MatrixPotential):
        v = _check_nonincreasing(p.profile.values, "matrix-potential profile")
        if not v.ok:
            return v
        a = p.shape
        nrm = float(np.abs(a).max())
        if nrm and float(np.abs(a - a.T).max()) > 1e-12 * nrm:
            return MonotoneVerdict(False, None, "shape matrix is not symmetric")
        lo = float(_kernels.jacobi_eigenvalues(a)[0]) if a.size else 0.0
        if lo < -1e-10 * max(nrm, 1e-300):
            return MonotoneVerdict(
                False, None, f"shape matrix is indefinite (lowest eigenvalue {lo:g})"
            )
        return MonotoneVerdict(True)
    if isinstance(p, GridPotential1D):
        return _check_nonincreasing(p.values, "half-line potential")
    raise TypeError(f"no monotonicity hypothesis for {type(p).__name__}")


def require_hypothesis(p) -> None:
    verdict = validate_monotone(p)
    if not verdict.ok:
        raise HypothesisError(verdict.detail)


def integrate(p) -> float:
    """Quadrature with the measure the matching theorem uses.

    Scalar data integrates dx (or r dr dphi for radial potentials); matrix
    potentials integrate sqrt of their Schatten-1/2 norm.
    """
    return p.integral()


def schatten_half_norm(a) -> float:
    """(sum_n sqrt(mu_n))^2 over the eigenvalues of a symmetric PSD matrix.

    Eigenvalues in [-1e-10 * norm, 0) are clamped to zero; anything lower
    counts as genuinely indefinite and is rejected.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if a.size == 0:
        return 0.0
    nrm = float(np.abs(a).max())
    if nrm and float(np.abs(a - a.T).max()) > 1e-12 * nrm:
        raise ValueError("matrix is not symmetric")
    mu = _kernels.jacobi_eigenvalues(a)
    if mu[0] < -1e-10 * max(nrm, 1e-300):
        raise ValueError(f"matrix is significantly indefinite (lowest eigenvalue {mu[0]:g})")
    mu = np.clip(mu, 0.0, None)
    return float(np.sum(np.sqrt(mu)) ** 2)


# ----------------------------------------------------------------------
# Canonical families, constructible by name + parameters (config surface).
# ----------------------------------------------------------------------

def scalar_well(amplitude, width=1.0, x_max=None) -> GridPotential1D:
    """amplitude * indicator([0, width]) on the half-line."""
    x_max = 4.0 * width if x_max is None else x_max
    if x_max <= width:
        x_max = width * (1.0 + 1e-9)
    return GridPotential1D([0.0, width, x_max], [amplitude, 0.0, 0.0])


def radial_well(amplitude, radius=1.0, r_max=None) -> RadialPotential:
    """amplitude * indicator(r <= radius)."""
    r_max = 4.0 * radius if r_max is None else r_max
    return RadialPotential(GridPotential1D([0.0, radius, r_max], [amplitude, 0.0, 0.0]))


def radial_exponential(amplitude, rate=1.0, r_max=8.0, cells=512) -> RadialPotential:
    """amplitude * exp(-rate * r), sampled at cell left edges."""
    nodes = np.linspace(0.0, r_max, cells + 1)
    vals = amplitude * np.exp(-rate * nodes)
    return RadialPotential(GridPotential1D(nodes, vals))


def radial_power_cutoff(amplitude, exponent=3.0, radius=1.0, r_max=8.0, cells=512) -> RadialPotential:
    """amplitude * min(1, (radius/r)^exponent), truncated at r_max."""
    nodes = np.linspace(0.0, r_max, cells + 1)
    with np.errstate(divide="ignore", over="ignore"):
        vals = amplitude * np.minimum(1.0, (radius / np.maximum(nodes, 1e-300)) ** exponent)
    return RadialPotential(GridPotential1D(nodes, vals))


def radial_annulus(amplitude, inner=1.0, outer=2.0, r_max=None) -> RadialPotential:
    """amplitude * indicator(inner <= r <= outer): violates monotonicity
    whenever inner > 0 (the shipped negative control)."""
    r_max = 2.0 * outer if r_max is None else r_max
    return RadialPotential(
        GridPotential1D([0.0, inner, outer, r_max], [0.0, amplitude, 0.0, 0.0])
    )


def circle_constant(amplitude) -> GridPotential1D:
    """Constant potential on [-pi, pi]."""
    return GridPotential1D([-math.pi, math.pi], [amplitude, amplitude])


def circle_well(amplitude, half_width=1.0) -> GridPotential1D:
    """amplitude * indicator([-half_width, half_width]) on [-pi, pi]."""
    if not (0 < half_width < math.pi):
        raise ValueError("half_width must lie in (0, pi)")
    return GridPotential1D(
        [-math.pi, -half_width, half_width, math.pi],
        [0.0, amplitude, 0.0, 0.0],
    )


def halfplane_well(amplitude, extent1=1.0, half_width2=1.0, cover1=None, cover2=None,
                   cells1=None, cells2=None) -> HalfPlanePotential:
    """amplitude * indicator([0, extent1] x [-half_width2, half_width2]).

    The cell array covers [0, cover1] x [-cover2, cover2] with the well cells
    aligned exactly, so the integral is exact.
    """
    cover1 = 2.0 * extent1 if cover1 is None else cover1
    cover2 = 2.0 * half_width2 if cover2 is None else cover2
    cells1 = 2 * max(1, round(cover1 / extent1)) if cells1 is None else cells1
    cells2 = 2 * max(1, round(cover2 / half_width2)) if cells2 is None else cells2
    h1 = cover1 / cells1
    h2 = 2.0 * cover2 / cells2
    vals = np.zeros((cells1, cells2))
    i_max = round(extent1 / h1)
    j_lo = round((cover2 - half_width2) / h2)
    j_hi = round((cover2 + half_width2) / h2)
    if abs(i_max * h1 - extent1) > 1e-12 * max(1.0, extent1) or abs(
        j_lo * h2 - (cover2 - half_width2)
    ) > 1e-12 * max(1.0, cover2):
        raise ValueError("well edges must align with the cell lattice")
    vals[:i_max, j_lo:j_hi] = amplitude
    return HalfPlanePotential(vals, h1, h2)


def halfplane_sampled(func, cover1, cover2, cells1, cells2) -> HalfPlanePotential:
    """Sample V(x1, x2) at cell lower-left corners (piecewise-constant-left)."""
    h1 = cover1 / cells1
    h2 = 2.0 * cover2 / cells2
    x1 = np.arange(cells1) * h1
    x2 = -cover2 + np.arange(cells2) * h2
    vals = np.empty((cells1, cells2))
    for i, a in enumerate(x1):
        for j, b in enumerate(x2):
            vals[i, j] = func(a, b)
    return HalfPlanePotential(vals, h1, h2)


def matrix_well(shape, amplitude=1.0, width=1.0, x_max=None) -> MatrixPotential:
    """phi = amplitude * indicator([0, width]) times a fixed PSD shape."""
    return MatrixPotential(scalar_well(amplitude, width, x_max), np.asarray(shape, dtype=float))


FAMILIES = {
    "well": scalar_well,
    "radial_well": radial_well,
    "radial_exponential": radial_exponential,
    "radial_power": radial_power_cutoff,
    "radial_annulus": radial_annulus,
    "circle_constant": circle_constant,
    "circle_well": circle_well,
    "halfplane_well": halfplane_well,
    "matrix_well": matrix_well,
}


def make_potential(family: str, **params):
    """Construct a canonical family by name (the config-file surface)."""
    try:
        ctor = FAMILIES[family]
    except KeyError:
        raise ValueError(
            f"unknown potential family {family!r}; known: {sorted(FAMILIES)}"
        ) from None
    return ctor(**params)
