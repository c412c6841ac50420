"""Discrete penalized vortex energy, its gradient and strong residuals.

With a radial amplitude u(r) and gauge coefficient b(r) (the vector
potential is b(r) grad(theta), |grad(theta)| = 1/r), every term of the
planar energy collapses to a single radial integral; the uniform 2*pi
angular factor is dropped throughout:

    E(u, b) = 1/2 int (u')^2 r dr            (dirichlet_u)
            + 1/2 int (b')^2 / r dr          (curl_b)
            + 1/2 int (k - b)^2 u^2 / r dr   (coupling)
            + eps/2 int b^2 / r dr           (penalty)
            + int W(u) r dr                  (potential)

u and b are piecewise linear on the graded nodes.  The derivative terms
are integrated cell-exactly (midpoint radius); coupling, penalty and
potential use the lumped node rules sigma_j = hbar_j/r_j and
T_j = r_j*hbar_j.  This pairing is deliberate: the exact partial
derivative of E with respect to a free node value, divided by its lumped
weight (T_j for u rows, sigma_j for b rows), reproduces the conservative
second-order stencil for the strong system

    -u'' - u'/r + (k - b)^2 u / r^2 + W'(u) = 0
    -b'' + b'/r + eps b - (k - b) u^2       = 0,

so zeroing the discrete gradient zeroes the pointwise residual at the
same iterate instead of leaving an O(h^2) gap between the two.
``el_residual`` re-derives the stencils independently as a cross-check.

Constraints (eliminated, not penalized): b[0] = 0 always, u[0] = 0 for
k != 0, u[n] = 0 at the truncation radius.  b[n] stays free, which is the
discrete natural condition b'(Rmax) ~ 0; a Dirichlet value there would
wrongly pin the magnetic flux plateau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import (
    ConstraintViolationError,
    DomainError,
    EvaluationError,
    ShapeError,
)
from .grid import RadialGrid
from .model import ModelParams, potential_W, potential_Wprime, potential_Wsecond

__all__ = [
    "State",
    "EnergyBreakdown",
    "StrongResidual",
    "energy",
    "gradient",
    "hessian_vec",
    "el_residual",
    "residual_2d_spotcheck",
    "curl_energy_2d",
    "curl_energy_radial",
    "free_mask",
    "grad_norm",
]


@dataclass
class State:
    """Paired nodal samples (u_i, b_i); one point of the constraint manifold."""

    u: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.u.shape != self.b.shape or self.u.ndim != 1:
            raise ShapeError("u and b must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.b))):
            raise EvaluationError("state contains non-finite entries")
        if self.b[0] != 0.0:
            raise ConstraintViolationError("b[0] must vanish (b(0) = 0 constraint)")

    def copy(self) -> "State":
        return State(self.u.copy(), self.b.copy())

    @staticmethod
    def zero(grid: RadialGrid) -> "State":
        return State(np.zeros(grid.n + 1), np.zeros(grid.n + 1))


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet_u: float
    curl_b: float
    coupling: float
    penalty: float
    potential: float

    @property
    def total(self) -> float:
        return self.dirichlet_u + self.curl_b + self.coupling + self.penalty + self.potential


@dataclass(frozen=True)
class StrongResidual:
    """Pointwise strong-form residuals; boundary slots are zero."""

    res_u: np.ndarray
    res_b: np.ndarray

    @property
    def sup(self) -> float:
        return float(max(np.max(np.abs(self.res_u)), np.max(np.abs(self.res_b))))

    def weighted_l2(self, grid: RadialGrid) -> float:
        return float(np.sqrt(
            np.dot(self.res_u**2, grid.w_rdr_lumped)
            + np.dot(self.res_b**2, grid.w_drr_node)
        ))


def _check_state(s: State, grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    u = grid.require_nodes(s.u, "u")
    b = grid.require_nodes(s.b, "b")
    return u, b


def free_mask(params: ModelParams, grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of the free (unconstrained) u and b nodes."""
    n = grid.n
    mu = np.ones(n + 1, dtype=bool)
    mu[n] = False                      # Dirichlet decay at Rmax
    if params.k != 0:
        mu[0] = False                  # u(0) = 0 forced by the 1/r^2 weight
    mb = np.ones(n + 1, dtype=bool)
    mb[0] = False                      # b(0) = 0 always
    return mu, mb


def energy(s: State, params: ModelParams, grid: RadialGrid) -> EnergyBreakdown:
    u, b = _check_state(s, grid)
    k, eps = float(params.k), params.eps

    du = np.diff(u)
    db = np.diff(b)
    dirichlet_u = 0.5 * float(np.sum(du * du * grid.rmid / grid.h))
    curl_b = 0.5 * float(np.sum(db * db / (grid.h * grid.rmid)))
    kb = k - b
    coupling = 0.5 * float(np.dot(kb * kb * u * u, grid.w_drr_node))
    penalty = 0.5 * eps * float(np.dot(b * b, grid.w_drr_node))
    potential = float(np.dot(potential_W(u, params), grid.w_rdr_lumped))

    for name, value in (
        ("dirichlet_u", dirichlet_u), ("curl_b", curl_b), ("coupling", coupling),
        ("penalty", penalty), ("potential", potential),
    ):
        if not np.isfinite(value):
            raise EvaluationError(f"non-finite energy term '{name}'")
    return EnergyBreakdown(dirichlet_u, curl_b, coupling, penalty, potential)


def gradient(s: State, params: ModelParams, grid: RadialGrid) -> State:
    """Partial derivatives of the discrete energy w.r.t. each node value.

    Constrained slots (u[0] for k != 0, u[n], b[0]) carry zeros.  This is
    the plain derivative vector, not a Riesz representative: descent and
    Newton consume it directly and finite differences of ``energy`` test
    it without a mass-matrix solve.
    """
    u, b = _check_state(s, grid)
    k, eps = float(params.k), params.eps
    n = grid.n

    fu = np.diff(u) * grid.rmid / grid.h       # cell fluxes of the u-Dirichlet term
    fb = np.diff(b) / (grid.h * grid.rmid)     # cell fluxes of the curl term

    gu = np.zeros(n + 1)
    gu[:-1] -= fu
    gu[1:] += fu
    kb = k - b
    gu += kb * kb * u * grid.w_drr_node
    gu += potential_Wprime(u, params) * grid.w_rdr_lumped

    gb = np.zeros(n + 1)
    gb[:-1] -= fb
    gb[1:] += fb
    gb += (eps * b - kb * u * u) * grid.w_drr_node

    mu, mb = free_mask(params, grid)
    gu[~mu] = 0.0
    gb[~mb] = 0.0
    return State(gu, gb)


def grad_norm(g: State) -> float:
    return float(np.sqrt(np.dot(g.u, g.u) + np.dot(g.b, g.b)))


def hessian_vec(s: State, direction: State, params: ModelParams, grid: RadialGrid) -> State:
    """Directional derivative of ``gradient`` at s along ``direction``.

    Symmetric by construction; the direction should vanish on the
    constrained slots (output slots are zeroed either way).
    """
    u, b = _check_state(s, grid)
    du_, db_ = _check_state(direction, grid)
    k, eps = float(params.k), params.eps
    n = grid.n

    fu = np.diff(du_) * grid.rmid / grid.h
    fb = np.diff(db_) / (grid.h * grid.rmid)

    hu = np.zeros(n + 1)
    hu[:-1] -= fu
    hu[1:] += fu
    kb = k - b
    hu += (kb * kb * du_ - 2.0 * kb * db_ * u) * grid.w_drr_node
    hu += potential_Wsecond(u, params) * du_ * grid.w_rdr_lumped

    hb = np.zeros(n + 1)
    hb[:-1] -= fb
    hb[1:] += fb
    hb += (eps * db_ + db_ * u * u - 2.0 * kb * u * du_) * grid.w_drr_node

    mu, mb = free_mask(params, grid)
    hu[~mu] = 0.0
    hb[~mb] = 0.0
    return State(hu, hb)


def el_residual(s: State, params: ModelParams, grid: RadialGrid) -> StrongResidual:
    """Strong-form residuals at the interior nodes via conservative stencils.

    u-row:  [m_W (u_j - u_{j-1})/h_W - m_E (u_{j+1} - u_j)/h_E] / (r_j hbar_j)
            + (k - b_j)^2 u_j / r_j^2 + W'(u_j)
    b-row:  r_j/hbar_j [ (b_j - b_{j-1})/(h_W m_W) - (b_{j+1} - b_j)/(h_E m_E) ]
            + eps b_j - (k - b_j) u_j^2

    On the smoothly graded mesh both stencils are second-order accurate.
    Boundary slots (and, for the u array, the origin) are reported as 0:
    second differences are undefined there.
    """
    u, b = _check_state(s, grid)
    k, eps = float(params.k), params.eps
    n = grid.n
    r, h, m = grid.r, grid.h, grid.rmid

    hW, hE = h[:-1], h[1:]              # west/east cell widths at interior nodes
    mW, mE = m[:-1], m[1:]
    rj = r[1:-1]
    hbar = 0.5 * (hW + hE)

    uj = u[1:-1]
    bj = b[1:-1]

    res_u = np.zeros(n + 1)
    lap_u = (mW * (uj - u[:-2]) / hW - mE * (u[2:] - uj) / hE) / (rj * hbar)
    res_u[1:-1] = lap_u + (k - bj) ** 2 * uj / rj**2 + potential_Wprime(uj, params)

    res_b = np.zeros(n + 1)
    lap_b = ((bj - b[:-2]) / (hW * mW) - (b[2:] - bj) / (hE * mE)) * rj / hbar
    res_b[1:-1] = lap_b + eps * bj - (k - bj) * uj * uj

    for name, arr in (("u", res_u), ("b", res_b)):
        if not np.all(np.isfinite(arr)):
            raise EvaluationError(f"non-finite strong residual in the {name} equation")
    return StrongResidual(res_u, res_b)


def _radial_splines(s: State, grid: RadialGrid):
    return CubicSpline(grid.r, s.u), CubicSpline(grid.r, s.b)


def residual_2d_spotcheck(
    s: State,
    params: ModelParams,
    grid: RadialGrid,
    sample_points: np.ndarray,
    fd_step: float = 0.01,
) -> float:
    """Max |residual| of the planar matter equation at off-axis points.

    Interpolates u, b radially (cubic splines through the nodes) and
    evaluates -Lap u + |k grad(theta) - A|^2 u + W'(u) in Cartesian
    coordinates with a 5-point Laplacian of step ``fd_step``.  Radial
    critical points of the constrained problem must drive this to the
    discretization floor: the radial constraint is natural.
    """
    pts = np.asarray(sample_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ShapeError("sample_points must be an (m, 2) array")
    rad = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(rad + fd_step > grid.rmax):
        raise DomainError("sample point (plus stencil arm) outside the grid radius")
    if np.any(rad - fd_step <= 0.0):
        raise DomainError("sample points must keep clear of the origin")

    su, sb = _radial_splines(s, grid)

    def u_at(x, y):
        return su(np.hypot(x, y))

    x, y = pts[:, 0], pts[:, 1]
    d = fd_step
    lap = (u_at(x + d, y) + u_at(x - d, y) + u_at(x, y + d) + u_at(x, y - d)
           - 4.0 * u_at(x, y)) / (d * d)
    uc = u_at(x, y)
    bc = sb(rad)
    res = -lap + (params.k - bc) ** 2 * uc / rad**2 + potential_Wprime(uc, params)
    return float(np.max(np.abs(res)))


def curl_energy_radial(b: np.ndarray, grid: RadialGrid, rcut: float | None = None) -> float:
    """int_0^rcut (b')^2 / r dr from node samples (no 1/2, no 2*pi)."""
    arr = grid.require_nodes(b, "b")
    db = np.diff(arr)
    cells = db * db / (grid.h * grid.rmid)
    if rcut is None:
        return float(np.sum(cells))
    return float(np.sum(cells[grid.rmid <= rcut]))


def curl_energy_2d(
    b: np.ndarray,
    grid: RadialGrid,
    half_width: float,
    npts: int = 400,
) -> float:
    """Cartesian check of the curl energy: int |curl(b grad theta)|^2 dx dy.

    The potential A = b(r) grad(theta) = (b/r^2) (-y, x) is sampled on an
    (npts x npts) patch [-L, L]^2 and curl A = dA2/dx - dA1/dy is formed
    with central differences; the squared curl is summed over the interior
    with the uniform cell area.  The result carries the physical 2*pi, so
    it compares against 2*pi * curl_energy_radial.  A is smooth through
    the origin because b ~ r^2 there.
    """
    arr = grid.require_nodes(b, "b")
    L = float(half_width)
    if L * np.sqrt(2.0) > grid.rmax:
        raise DomainError("patch corners exceed the grid radius")
    sb = CubicSpline(grid.r, arr)
    xs = np.linspace(-L, L, npts)
    dx = xs[1] - xs[0]
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    R2 = X * X + Y * Y
    R = np.sqrt(R2)
    coef = np.zeros_like(R)
    nz = R > 0.0
    coef[nz] = sb(R[nz]) / R2[nz]      # b(0) = 0 quadratically: A(0) = 0
    A1 = -coef * Y
    A2 = coef * X
    curl = (A2[2:, 1:-1] - A2[:-2, 1:-1]) / (2.0 * dx) \
         - (A1[1:-1, 2:] - A1[1:-1, :-2]) / (2.0 * dx)
    return float(np.sum(curl * curl) * dx * dx)
