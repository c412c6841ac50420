"""Graded radial mesh and quadrature for the measures r*dr and dr/r.

Nodes are r_i = Rmax*(i/n)^gamma, i = 0..n, so gamma > 1 concentrates
resolution at the origin where the fields carry the 1/r weights.  Two
quadrature families live on the mesh:

* ``w_rdr``   -- node weights for integrals f -> int f(r) r dr, built by
  integrating the piecewise-linear interpolant of f against r dr exactly
  (so affine f is integrated exactly on every cell, and sum(w_rdr) equals
  Rmax^2/2 identically);
* ``w_drr``   -- cell-midpoint weights h_i/m_i for f -> int f(r)/r dr.
  Midpoint evaluation keeps the r = 0 cell finite; fields obeying the
  manifold constraints (b(0) = 0, u(0) = 0 for k != 0) have bounded
  integrands there anyway.

The energy assembly additionally uses two *lumped* node rules that make
the discrete gradient coincide row-by-row with a conservative
finite-difference operator (see ``functional``):

* ``w_rdr_lumped``  -- T_j = r_j * hbar_j  (plain trapezoid in f*r; the
  sum still telescopes to Rmax^2/2 exactly, but affine f is no longer
  cell-exact);
* ``w_drr_node``    -- sigma_j = hbar_j / r_j with sigma_0 = 0 (trapezoid
  for f/r with the origin node dropped; legitimate whenever the integrand
  vanishes at r = 0, which the constraints guarantee).

Here hbar_j is the half-cell sum (h_{j-1} + h_j)/2 with one-sided halves
at the ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, ConstraintViolationError, ShapeError

__all__ = [
    "RadialGrid",
    "make_graded_grid",
    "norm_h1r",
    "norm_h1",
    "norm_star",
    "star_norm_info",
    "integrate_rdr",
    "integrate_drr",
]


@dataclass(frozen=True)
class RadialGrid:
    r: np.ndarray          # nodes, shape (n+1), r[0] = 0, r[n] = rmax
    w_rdr: np.ndarray      # node weights for int f r dr (affine-exact per cell)
    w_drr: np.ndarray      # cell weights h/m for int f/r dr at midpoints, shape (n,)
    rmax: float
    n: int
    gamma: float
    # derived quantities (filled in by make_graded_grid)
    h: np.ndarray = field(repr=False, default=None)         # cell widths, (n,)
    rmid: np.ndarray = field(repr=False, default=None)      # cell midpoints, (n,)
    hbar: np.ndarray = field(repr=False, default=None)      # half-cell sums, (n+1,)
    w_rdr_lumped: np.ndarray = field(repr=False, default=None)  # T_j = r_j hbar_j
    w_drr_node: np.ndarray = field(repr=False, default=None)    # sigma_j = hbar_j/r_j

    def require_nodes(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        arr = np.asarray(f, dtype=float)
        if arr.shape != (self.n + 1,):
            raise ShapeError(
                f"{name} must have {self.n + 1} entries, got shape {arr.shape}"
            )
        return arr


def make_graded_grid(rmax: float, n: int = 2000, gamma: float = 2.0) -> RadialGrid:
    if not rmax > 0.0:
        raise ConfigurationError(f"Rmax must be positive, got {rmax}")
    if n < 16:
        raise ConfigurationError(f"need at least 16 cells, got {n}")
    if gamma < 1.0:
        raise ConfigurationError(f"grading exponent must be >= 1, got {gamma}")

    i = np.arange(n + 1, dtype=float)
    r = rmax * (i / n) ** gamma
    h = np.diff(r)
    rmid = 0.5 * (r[:-1] + r[1:])

    # integrate the P1 interpolant of f against r dr exactly:
    # cell [a, b] contributes h(2a+b)/6 to the left node, h(a+2b)/6 to the right
    a, b = r[:-1], r[1:]
    w_rdr = np.zeros(n + 1)
    w_rdr[:-1] += h * (2.0 * a + b) / 6.0
    w_rdr[1:] += h * (a + 2.0 * b) / 6.0

    w_drr = h / rmid

    hbar = np.zeros(n + 1)
    hbar[:-1] += 0.5 * h
    hbar[1:] += 0.5 * h

    w_rdr_lumped = r * hbar
    w_drr_node = np.zeros(n + 1)
    w_drr_node[1:] = hbar[1:] / r[1:]

    return RadialGrid(
        r=r, w_rdr=w_rdr, w_drr=w_drr, rmax=float(rmax), n=int(n), gamma=float(gamma),
        h=h, rmid=rmid, hbar=hbar, w_rdr_lumped=w_rdr_lumped, w_drr_node=w_drr_node,
    )


def integrate_rdr(f: np.ndarray, grid: RadialGrid) -> float:
    """int f(r) r dr over [0, Rmax] from node samples."""
    return float(np.dot(grid.require_nodes(f), grid.w_rdr))


def integrate_drr(f: np.ndarray, grid: RadialGrid) -> float:
    """int f(r)/r dr over [0, Rmax], f sampled on nodes, evaluated at midpoints."""
    arr = grid.require_nodes(f)
    fmid = 0.5 * (arr[:-1] + arr[1:])
    return float(np.dot(fmid, grid.w_drr))


def _dirichlet_rdr(u: np.ndarray, grid: RadialGrid) -> float:
    # int (u')^2 r dr, exact for piecewise-linear u
    du = np.diff(u)
    return float(np.sum(du * du * grid.rmid / grid.h))


def _deriv_drr(f: np.ndarray, grid: RadialGrid) -> float:
    # int (f')^2 / r dr with cell-constant derivatives and midpoint 1/r
    df = np.diff(f)
    return float(np.sum(df * df / (grid.h * grid.rmid)))


def norm_h1r(u: np.ndarray, grid: RadialGrid) -> float:
    """Weighted norm sqrt(int (u')^2 r dr + int u^2 r dr + int u^2/r dr).

    The overall 2*pi of the angular integration is dropped, as everywhere
    in this package.
    """
    arr = grid.require_nodes(u, "u")
    return float(np.sqrt(
        _dirichlet_rdr(arr, grid)
        + integrate_rdr(arr * arr, grid)
        + integrate_drr(arr * arr, grid)
    ))


def norm_h1(u: np.ndarray, grid: RadialGrid) -> float:
    """Plain H1 norm sqrt(int (u')^2 r dr + int u^2 r dr) (2*pi dropped)."""
    arr = grid.require_nodes(u, "u")
    return float(np.sqrt(_dirichlet_rdr(arr, grid) + integrate_rdr(arr * arr, grid)))


def norm_star(b: np.ndarray, grid: RadialGrid) -> float:
    """Gauge-coefficient norm sqrt(int b^2/r dr + int (b')^2/r dr).

    Requires b[0] = 0; the midpoint rule then sees a bounded integrand in
    the first cell.
    """
    value, _ = star_norm_info(b, grid)
    return value


def star_norm_info(b: np.ndarray, grid: RadialGrid) -> tuple[float, bool]:
    """norm_star value plus a near-singular flag.

    The flag trips when the first three cells carry >= 25% of the
    derivative part of the square norm, which is the discrete signature
    of a logarithmically divergent int (b')^2/r dr (e.g. b'(0) != 0).
    """
    arr = grid.require_nodes(b, "b")
    if arr[0] != 0.0:
        raise ConstraintViolationError("b[0] must vanish (b(0) = 0 constraint)")
    db = np.diff(arr)
    deriv_cells = db * db / (grid.h * grid.rmid)
    deriv_total = float(np.sum(deriv_cells))
    value = float(np.sqrt(integrate_drr(arr * arr, grid) + deriv_total))
    near_singular = deriv_total > 0.0 and float(np.sum(deriv_cells[:3])) >= 0.25 * deriv_total
    return value, near_singular
