"""Numerical mountain-pass deformation on the radial constraint manifold.

The functional vanishes at the zero state, is positive on a small sphere,
and dives to -infinity along every matter ray t -> (t*u_seed, 0), so a
path from zero to a negative-energy endpoint must cross a positive
barrier.  The classical numerical realization deforms a discrete path by
descent at its maximum-energy node:

  1. locate the max-energy node j*,
  2. take a backtracking step from it along -gradient (projecting the
     matter amplitude onto u >= 0, where the nonlinearity is inert),
  3. periodically re-space the path by piecewise-linear interpolation in
     state space, node density ~ 1/sqrt(E_max - E), which concentrates
     nodes in equal energy gaps near the peak and prevents clustering
     collapse; a re-spacing that would raise the path maximum is skipped.

The endpoint is found once at eps = 0 and reused for every penalty value:
its gauge component vanishes, so the penalty term never sees it.  Along
the ray the discrete energy is exactly A t^2/2 - B t^p/p, which also
yields the barrier bound K = max_t J0(t*endpoint) in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, ConvergenceError, GeometryFailureError
from .functional import State, energy, grad_norm, gradient
from .grid import RadialGrid
from .model import ModelParams, potential_Wprime  # noqa: F401  (re-exported surface)

__all__ = [
    "MpaConfig",
    "Path",
    "MpaResult",
    "ray_coefficients",
    "ray_energy",
    "ray_max",
    "default_seed",
    "find_endpoint",
    "initial_path",
    "mpa_iterate",
]


@dataclass(frozen=True)
class MpaConfig:
    path_len: int = 31
    max_iter: int = 20000
    grad_tol: float = 1e-6
    backtrack: float = 0.5
    initial_step: float = 1.0
    armijo: float = 1e-4
    respace_interval: int = 10

    def __post_init__(self):
        if self.path_len < 5:
            raise ConfigurationError("path needs at least 5 nodes")
        if self.grad_tol <= 0.0:
            raise ConfigurationError("grad_tol must be positive")


@dataclass
class Path:
    """Ordered chain of states from the zero state to the endpoint."""

    nodes: list

    def __len__(self):
        return len(self.nodes)


@dataclass
class MpaResult:
    path: Path
    candidate: State
    level: float
    grad_norm: float
    iterations: int
    converged: bool


def default_seed(grid: RadialGrid, k: int) -> np.ndarray:
    """Localized matter bump r^|k| exp(-r^2/4), normalized to unit max."""
    kappa = abs(int(k))
    u = grid.r**kappa * np.exp(-0.25 * grid.r**2)
    return u / np.max(u)


def _project_seed(seed: np.ndarray, params: ModelParams, grid: RadialGrid) -> np.ndarray:
    u = grid.require_nodes(seed, "seed_profile").copy()
    u[-1] = 0.0
    if params.k != 0:
        u[0] = 0.0
    if not np.any(u):
        raise ConfigurationError("seed profile is identically zero after projection")
    return u


def ray_coefficients(seed: np.ndarray, params: ModelParams, grid: RadialGrid) -> tuple[float, float]:
    """A, B with J0(t * seed, 0) = A t^2/2 - B t^p/p (the eps = 0 ray energy).

    Uses the same quadratures as ``energy`` so ray values are exactly the
    discrete energies of the ray states.
    """
    u = np.asarray(seed, dtype=float)
    du = np.diff(u)
    dirichlet = float(np.sum(du * du * grid.rmid / grid.h))
    coupling = float(params.k) ** 2 * float(np.dot(u * u, grid.w_drr_node))
    mass = float(np.dot(u * u, grid.w_rdr_lumped))
    A = dirichlet + coupling + mass
    B = params.lam * float(np.dot(np.maximum(u, 0.0) ** params.p, grid.w_rdr_lumped))
    return A, B


def ray_energy(t: float, A: float, B: float, p: float) -> float:
    return 0.5 * A * t * t - (B / p) * t**p


def ray_max(A: float, B: float, p: float) -> float:
    """K = max_t J0(t*seed, 0) along the ray; the barrier upper bound."""
    if B <= 0.0:
        raise ConfigurationError("ray has no nonlinear descent (B <= 0)")
    t_hat = (A / B) ** (1.0 / (p - 2.0))
    return (0.5 - 1.0 / p) * A * t_hat * t_hat


def find_endpoint(params: ModelParams, grid: RadialGrid, seed_profile: np.ndarray) -> State:
    """Scale the seed until the eps = 0 energy drops below -1.

    The returned state has no gauge component, so it closes the path for
    every penalty value at once.
    """
    u = _project_seed(seed_profile, params, grid)
    A, B = ray_coefficients(u, params, grid)
    t = 1.0
    while ray_energy(t, A, B, params.p) > -1.0:
        t *= 2.0
        if t > 2.0**60:
            raise GeometryFailureError(
                "no negative-energy endpoint along the seed ray (bad seed?)"
            )
    return State(t * u, np.zeros_like(u))


def initial_path(endpoint: State, path_len: int) -> Path:
    if path_len < 5:
        raise ConfigurationError("path needs at least 5 nodes")
    nodes = [
        State(endpoint.u * (j / (path_len - 1)), np.zeros_like(endpoint.b))
        for j in range(path_len)
    ]
    return Path(nodes)


# --- packed helpers ---------------------------------------------------------

def _pack(s: State) -> np.ndarray:
    return np.concatenate([s.u, s.b])


def _unpack(x: np.ndarray, m: int) -> State:
    return State(x[:m], x[m:])


def _energy_packed(x: np.ndarray, params, grid, m: int) -> float:
    return energy(_unpack(x, m), params, grid).total


def _project_packed(x: np.ndarray, m: int) -> np.ndarray:
    out = x.copy()
    np.maximum(out[:m], 0.0, out=out[:m])
    return out


def _respace(X: np.ndarray, E: np.ndarray, jstar: int, params, grid, m: int):
    """Re-space both sub-paths around the peak node; None if not beneficial."""
    P = X.shape[0]
    emax, emin = float(np.max(E)), float(np.min(E))
    floor = max((emax - emin) / (4.0 * P), 1e-300)
    w = 1.0 / np.sqrt(np.maximum(emax - E, floor))

    def side(i0, i1):
        idx = np.arange(i0, i1 + 1)
        if len(idx) < 3:
            return X[idx].copy()
        seg = np.linalg.norm(np.diff(X[idx], axis=0), axis=1)
        seg = np.maximum(seg, 1e-300)
        wseg = seg * 0.5 * (w[idx[:-1]] + w[idx[1:]])
        cum = np.concatenate([[0.0], np.cumsum(wseg)])
        targets = np.linspace(0.0, cum[-1], len(idx))
        out = np.empty_like(X[idx])
        out[0], out[-1] = X[i0], X[i1]
        for t_i, t in enumerate(targets[1:-1], start=1):
            s = np.searchsorted(cum, t, side="right") - 1
            s = min(max(s, 0), len(seg) - 1)
            frac = (t - cum[s]) / wseg[s]
            out[t_i] = (1.0 - frac) * X[idx[s]] + frac * X[idx[s + 1]]
        return out

    Xn = np.vstack([side(0, jstar), side(jstar, P - 1)[1:]])
    En = E.copy()
    for i in range(1, P - 1):
        if i == jstar:
            continue
        En[i] = _energy_packed(Xn[i], params, grid, m)
    if np.max(En) > E[jstar] + 1e-12 * (1.0 + abs(E[jstar])):
        return None
    return Xn, En


def mpa_iterate(path: Path, params: ModelParams, grid: RadialGrid, cfg: MpaConfig) -> MpaResult:
    """Deform the path until the gradient at its max node meets grad_tol.

    Raises ConvergenceError (with the best candidate attached) only when
    the budget is exhausted while the gradient still exceeds 10x the
    requested tolerance.
    """
    m = grid.n + 1
    X = np.array([_pack(s) for s in path.nodes])
    E = np.array([_energy_packed(x, params, grid, m) for x in X])
    P = X.shape[0]
    step = cfg.initial_step
    gn = math.inf
    it = 0

    for it in range(1, cfg.max_iter + 1):
        jstar = int(np.argmax(E))
        if jstar in (0, P - 1):  # barrier must sit strictly inside
            jstar = 1 + int(np.argmax(E[1:-1]))
        g = gradient(_unpack(X[jstar], m), params, grid)
        gvec = _pack(g)
        gn = grad_norm(g)
        if gn <= cfg.grad_tol:
            break

        t = min(cfg.initial_step, 2.0 * step)
        accepted = False
        while t >= 1e-16:
            trial = _project_packed(X[jstar] - t * gvec, m)
            e_t = _energy_packed(trial, params, grid, m)
            if e_t <= E[jstar] - cfg.armijo * t * gn * gn:
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            break  # descent exhausted at this resolution
        X[jstar] = trial
        E[jstar] = e_t
        step = t

        if it % cfg.respace_interval == 0:
            res = _respace(X, E, int(np.argmax(E)), params, grid, m)
            if res is not None:
                X, E = res

    jstar = int(np.argmax(E))
    candidate = _unpack(X[jstar], m)
    level = float(E[jstar])
    out_path = Path([_unpack(x, m) for x in X])
    converged = gn <= cfg.grad_tol
    if not converged and gn > 10.0 * cfg.grad_tol:
        raise ConvergenceError(
            f"mountain-pass deformation stalled at |grad| = {gn:.3e} "
            f"(tol {cfg.grad_tol:.1e}) after {it} iterations",
            best=MpaResult(out_path, candidate, level, gn, it, False),
        )
    return MpaResult(out_path, candidate, level, gn, it, converged)
