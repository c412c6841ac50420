"""Newton refinement and penalty continuation eps -> 0.

``newton_refine`` solves the strong-form rows (the energy gradient divided
by its lumped row weights, which the quadrature pairing makes identical to
the conservative stencils) with an analytic pentadiagonal Jacobian and an
Armijo-damped line search on the residual norm.  Unknowns are interleaved
node by node -- u_j then b_j where free -- so every coupling sits within
band offset 2 and one LAPACK banded solve per step suffices.

``run_continuation`` drives the penalty to zero: the first value of the
schedule is solved cold (endpoint -> path -> mountain-pass -> Newton), each
later value warm-starts Newton from the previous solution.  Negative
vorticity is handled by solving with |k| and flipping the sign of the
gauge coefficient afterwards; the discrete energy is exactly invariant
under (k, b) -> (-k, -b), so this is the same solution bit for bit.
eps = 0 itself is approached, never set: the gauge block would acquire a
near-null constant-shift direction at large radius.  The last solution is
reported as the eps -> 0 answer together with the gap to a linear-in-eps
extrapolation refined at the final penalty value.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .exceptions import (
    ConfigurationError,
    ConvergenceError,
    SingularSystemError,
    StagnationError,
)
from .functional import State, el_residual, energy, grad_norm, gradient
from .grid import RadialGrid, integrate_rdr, norm_h1, norm_h1r, norm_star
from .model import ModelParams, potential_Wsecond
from .mountain_pass import (
    MpaConfig,
    default_seed,
    find_endpoint,
    initial_path,
    mpa_iterate,
    ray_coefficients,
    ray_max,
)

__all__ = [
    "EpsSchedule",
    "NewtonResult",
    "EpsRecord",
    "SolveReport",
    "newton_refine",
    "run_continuation",
]

_TRIVIAL_FLOOR = 1e-8   # ||u||_p^p below this is the collapsed zero branch


@dataclass(frozen=True)
class EpsSchedule:
    """Strictly decreasing penalty values plus per-step Newton control."""

    eps_values: tuple
    newton_tol: float = 1e-10
    newton_max_iter: int = 60
    residual_tol: float = 1e-6

    def __post_init__(self):
        vals = tuple(float(e) for e in self.eps_values)
        if not vals:
            raise ConfigurationError("schedule must contain at least one eps")
        if any(not (0.0 < e < 1.0) for e in vals):
            raise ConfigurationError("every eps must lie in (0, 1)")
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise ConfigurationError("eps values must be strictly decreasing")
        object.__setattr__(self, "eps_values", vals)

    @staticmethod
    def geometric(start: float = 1e-1, end: float = 1e-6, factor: float = 0.25,
                  **kwargs) -> "EpsSchedule":
        """start, start*factor, ... clamped so the last value is exactly end."""
        if not (0.0 < end <= start < 1.0) or not (0.0 < factor < 1.0):
            raise ConfigurationError("need 0 < end <= start < 1 and 0 < factor < 1")
        vals = []
        e = start
        while e > end * (1.0 + 1e-12):
            vals.append(e)
            e *= factor
        vals.append(end)
        return EpsSchedule(tuple(vals), **kwargs)


@dataclass
class NewtonResult:
    state: State
    iterations: int
    grad_norm: float
    residual_sup: float
    converged: bool


@dataclass
class EpsRecord:
    eps: float
    state: State
    breakdown: object
    level: float
    residual_sup: float
    u_h1: float
    u_h1_hat: float
    b_star: float
    flux: float
    min_u: float
    newton_iterations: int
    grad_norm: float
    wall_time: float


@dataclass
class SolveReport:
    params: ModelParams
    grid: RadialGrid
    K: float
    barrier: float
    mpa_level: float
    mpa_iterations: int
    records: list
    eps0_state: State
    extrapolation_gap: float
    timings: dict = field(default_factory=dict)

    @property
    def levels(self):
        return [rec.level for rec in self.records]

    @property
    def fluxes(self):
        return [rec.flux for rec in self.records]

    @property
    def final(self) -> EpsRecord:
        return self.records[-1]


# --- banded Newton ----------------------------------------------------------

class _Layout:
    """Interleaved free-unknown indexing with band offset <= 2."""

    def __init__(self, params: ModelParams, grid: RadialGrid):
        n = grid.n
        iu = np.full(n + 1, -1, dtype=int)
        ib = np.full(n + 1, -1, dtype=int)
        pos = 0
        for j in range(n + 1):
            if j < n and (j > 0 or params.k == 0):
                iu[j] = pos
                pos += 1
            if j > 0:
                ib[j] = pos
                pos += 1
        self.iu, self.ib, self.size = iu, ib, pos
        self.n = n

        w = np.empty(pos)
        for j in range(n + 1):
            if iu[j] >= 0:
                w[iu[j]] = grid.w_rdr_lumped[j] if j > 0 else grid.rmid[0]
            if ib[j] >= 0:
                w[ib[j]] = grid.w_drr_node[j]
        self.row_weights = w
        self.u_slots = iu[iu >= 0]
        self.b_slots = ib[ib >= 0]

    def pack(self, s: State) -> np.ndarray:
        z = np.empty(self.size)
        z[self.u_slots] = s.u[self.iu >= 0]
        z[self.b_slots] = s.b[self.ib >= 0]
        return z

    def unpack(self, z: np.ndarray) -> State:
        u = np.zeros(self.n + 1)
        b = np.zeros(self.n + 1)
        u[self.iu >= 0] = z[self.u_slots]
        b[self.ib >= 0] = z[self.b_slots]
        return State(u, b)


def _strong_rows(z: np.ndarray, lay: _Layout, params: ModelParams, grid: RadialGrid) -> np.ndarray:
    """Free-row residual vector; gradient = rows * row_weights (to rounding)."""
    s = lay.unpack(z)
    res = el_residual(s, params, grid)
    n = grid.n
    F = np.empty(lay.size)
    F[lay.iu[1:n][lay.iu[1:n] >= 0]] = res.res_u[1:n][lay.iu[1:n] >= 0]
    F[lay.ib[1:n]] = res.res_b[1:n]
    if lay.iu[0] >= 0:  # k = 0: symmetry row u'(0) = 0
        F[lay.iu[0]] = -(s.u[1] - s.u[0]) / grid.h[0]
    # natural row at Rmax: the free b_n gradient over its lumped weight
    fb_last = (s.b[n] - s.b[n - 1]) / (grid.h[n - 1] * grid.rmid[n - 1])
    sigma_n = grid.w_drr_node[n]
    F[lay.ib[n]] = fb_last / sigma_n + params.eps * s.b[n] - (params.k - s.b[n]) * s.u[n] ** 2
    return F


def _jacobian_banded(z: np.ndarray, lay: _Layout, params: ModelParams, grid: RadialGrid) -> np.ndarray:
    n = grid.n
    s = lay.unpack(z)
    u, b = s.u, s.b
    r, h, m = grid.r, grid.h, grid.rmid
    k, eps = float(params.k), params.eps
    ku = 2
    ab = np.zeros((2 * ku + 1, lay.size))

    rows, cols, vals = [], [], []

    def put(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    jj = np.arange(1, n)
    hW, hE, mW, mE = h[:-1], h[1:], m[:-1], m[1:]
    hbar = 0.5 * (hW + hE)
    rj = r[1:-1]
    Tj = rj * hbar
    kb = k - b[1:-1]

    # u rows
    ur = lay.iu[1:n]
    live = ur >= 0
    diag_u = (mW / hW + mE / hE) / Tj + kb**2 / rj**2 + potential_Wsecond(u[1:-1], params)
    for j, ri, dv in zip(jj[live], ur[live], diag_u[live]):
        put(ri, ri, dv)
        if lay.iu[j - 1] >= 0:
            put(ri, lay.iu[j - 1], -m[j - 1] / (h[j - 1] * r[j] * hbar[j - 1]))
        if lay.iu[j + 1] >= 0:
            put(ri, lay.iu[j + 1], -m[j] / (h[j] * r[j] * hbar[j - 1]))
        put(ri, lay.ib[j], -2.0 * (k - b[j]) * u[j] / r[j] ** 2)

    # b rows (interior)
    diag_b = (1.0 / (hW * mW) + 1.0 / (hE * mE)) * rj / hbar + eps + u[1:-1] ** 2
    for j, dv in zip(jj, diag_b):
        bi = lay.ib[j]
        put(bi, bi, dv)
        if lay.ib[j - 1] >= 0:
            put(bi, lay.ib[j - 1], -r[j] / (hbar[j - 1] * h[j - 1] * m[j - 1]))
        put(bi, lay.ib[j + 1], -r[j] / (hbar[j - 1] * h[j] * m[j]))
        if lay.iu[j] >= 0:
            put(bi, lay.iu[j], -2.0 * (k - b[j]) * u[j])

    # u_0 symmetry row (k = 0)
    if lay.iu[0] >= 0:
        put(lay.iu[0], lay.iu[0], 1.0 / h[0])
        put(lay.iu[0], lay.iu[1], -1.0 / h[0])

    # b_n natural row
    bn = lay.ib[n]
    sigma_n = grid.w_drr_node[n]
    put(bn, bn, 1.0 / (h[n - 1] * m[n - 1] * sigma_n) + eps + u[n] ** 2)
    put(bn, lay.ib[n - 1], -1.0 / (h[n - 1] * m[n - 1] * sigma_n))

    ri = np.asarray(rows)
    ci = np.asarray(cols)
    np.add.at(ab, (ku + ri - ci, ci), np.asarray(vals))
    return ab


def newton_refine(
    seed: State,
    params: ModelParams,
    grid: RadialGrid,
    tol: float = 1e-10,
    max_iter: int = 60,
) -> NewtonResult:
    """Damped Newton on the strong rows until the energy gradient meets tol.

    The matter amplitude is re-projected onto u >= 0 after every damped
    step; near a positive vortex profile the projection is inactive and
    the iteration is plainly quadratic.
    """
    lay = _Layout(params, grid)
    z = lay.pack(seed)
    np.maximum(z[lay.u_slots], 0.0, out=z[lay.u_slots])

    F = _strong_rows(z, lay, params, grid)
    for it in range(max_iter + 1):
        gn = float(np.linalg.norm(F * lay.row_weights))
        if gn <= tol:
            state = lay.unpack(z)
            res = el_residual(state, params, grid)
            return NewtonResult(state, it, grad_norm(gradient(state, params, grid)),
                                res.sup, True)
        if it == max_iter:
            break
        ab = _jacobian_banded(z, lay, params, grid)
        try:
            delta = solve_banded((2, 2), ab, -F)
        except Exception as exc:
            raise SingularSystemError(f"banded Jacobian solve failed: {exc}",
                                      best=lay.unpack(z))
        if not np.all(np.isfinite(delta)):
            raise SingularSystemError("banded Jacobian produced non-finite step",
                                      best=lay.unpack(z))
        fnorm = float(np.linalg.norm(F))
        alpha = 1.0
        while True:
            zt = z + alpha * delta
            np.maximum(zt[lay.u_slots], 0.0, out=zt[lay.u_slots])
            Ft = _strong_rows(zt, lay, params, grid)
            if np.all(np.isfinite(Ft)) and float(np.linalg.norm(Ft)) <= (1.0 - 1e-4 * alpha) * fnorm:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                raise StagnationError(
                    f"Newton line search stalled at |grad| = {gn:.3e}",
                    best=lay.unpack(z))
        z, F = zt, Ft
    raise ConvergenceError(
        f"Newton did not reach tol {tol:.1e} in {max_iter} iterations "
        f"(|grad| = {gn:.3e})", best=lay.unpack(z))


# --- continuation driver ----------------------------------------------------

def _record(eps, state, params, grid, iters, gnorm, wall) -> EpsRecord:
    eb = energy(state, params, grid)
    res = el_residual(state, params, grid)
    return EpsRecord(
        eps=eps, state=state, breakdown=eb, level=eb.total,
        residual_sup=res.sup,
        u_h1=norm_h1(state.u, grid), u_h1_hat=norm_h1r(state.u, grid),
        b_star=norm_star(state.b, grid), flux=2.0 * np.pi * float(state.b[-1]),
        min_u=float(np.min(state.u)),
        newton_iterations=iters, grad_norm=gnorm, wall_time=wall,
    )


def _flip_gauge(state: State) -> State:
    return State(state.u.copy(), -state.b)


def run_continuation(
    schedule: EpsSchedule,
    params: ModelParams,
    grid: RadialGrid,
    cfg: MpaConfig | None = None,
    seed_profile: np.ndarray | None = None,
    warm_state: State | None = None,
) -> SolveReport:
    """Solve along the penalty schedule; cold-start via mountain pass.

    ``warm_state`` skips the deformation entirely (newton-only mode).
    """
    cfg = cfg or MpaConfig()
    flip = params.k < 0
    pos = ModelParams(abs(params.k), params.p, params.lam, schedule.eps_values[0],
                      zero_k_ok=params.zero_k_ok)
    timings: dict = {}
    t0 = time.perf_counter()

    seed = default_seed(grid, pos.k) if seed_profile is None else np.asarray(seed_profile, float)
    endpoint = find_endpoint(pos, grid, seed)
    A, B = ray_coefficients(endpoint.u, pos, grid)
    K = ray_max(A, B, pos.p)
    timings["endpoint"] = time.perf_counter() - t0

    if warm_state is not None:
        start = warm_state if not flip else _flip_gauge(warm_state)
        barrier = mpa_level = float("nan")
        mpa_iters = 0
        timings["mpa"] = 0.0
    else:
        t0 = time.perf_counter()
        path = initial_path(endpoint, cfg.path_len)
        barrier = max(energy(s, pos, grid).total for s in path.nodes)
        mpa = mpa_iterate(path, pos, grid, cfg)
        mpa_level, mpa_iters = mpa.level, mpa.iterations
        start = mpa.candidate
        timings["mpa"] = time.perf_counter() - t0

    records = []
    state = start
    t_newton = 0.0
    for eps in schedule.eps_values:
        pe = pos.with_eps(eps)
        t0 = time.perf_counter()
        result = newton_refine(state, pe, grid, tol=schedule.newton_tol,
                               max_iter=schedule.newton_max_iter)
        wall = time.perf_counter() - t0
        t_newton += wall
        state = result.state
        if integrate_rdr(np.maximum(state.u, 0.0) ** pos.p, grid) < _TRIVIAL_FLOOR:
            raise ConvergenceError(
                f"solution collapsed to the trivial branch at eps = {eps:g}",
                best=state)
        records.append(_record(eps, state, pe, grid, result.iterations,
                               result.grad_norm, wall))
    timings["newton"] = t_newton

    # linear extrapolation of the last two profiles to eps = 0, refined at
    # the final penalty as the eps -> 0 proxy
    t0 = time.perf_counter()
    if len(records) >= 2:
        s1, s0 = records[-2].state, records[-1].state
        e1, e0 = records[-2].eps, records[-1].eps
        fac = e0 / (e1 - e0)
        guess = State(np.maximum(s0.u + fac * (s0.u - s1.u), 0.0),
                      s0.b + fac * (s0.b - s1.b))
        refined = newton_refine(guess, pos.with_eps(e0), grid,
                                tol=schedule.newton_tol,
                                max_iter=schedule.newton_max_iter).state
        gap = max(float(np.max(np.abs(refined.u - s0.u))),
                  float(np.max(np.abs(refined.b - s0.b))))
        eps0_state = refined
    else:
        eps0_state = records[-1].state
        gap = 0.0
    timings["extrapolation"] = time.perf_counter() - t0

    if flip:
        records = [
            EpsRecord(**{**rec.__dict__, "state": _flip_gauge(rec.state),
                         "flux": -rec.flux})
            for rec in records
        ]
        eps0_state = _flip_gauge(eps0_state)

    return SolveReport(
        params=params, grid=grid, K=K, barrier=barrier,
        mpa_level=mpa_level, mpa_iterations=mpa_iters,
        records=records, eps0_state=eps0_state, extrapolation_gap=gap,
        timings=timings,
    )
