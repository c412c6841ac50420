"""Independent verification by two-parameter shooting.

Solves the same coupled radial system as the variational pipeline,

    u'' = -u'/r + (k - b)^2 u / r^2 + W'(u)
    b'' =  b'/r + eps b - (k - b) u^2,

but by adaptive high-order integration (DOP853) from a two-term series at
r0 = 1e-4 (the origin is a regular singular point):

    u ~ a r^|k| (1 + c2 r^2),   c2 = (1 - 2 k beta - lam a^(p-2) [if |k|(p-2)=2]) / (4(|k|+1))
    b ~ beta r^2 + b4 r^4,      b4 = (eps beta - k a^2 [if |k|=1]) / 8.

Free coefficients (a, beta) are adjusted so that u decays and b meets the
far-field condition.  Two practical points shape the implementation:

* u rides an exponential dichotomy: parameter error delta_a grows like
  e^r, so u is targeted at R_u = min(Rend, 16) where double precision
  still resolves the decaying branch, and is clamped to zero beyond
  (the true tail there is < 1e-7, far below every comparison tolerance).
  The amplitude is located by bisection on the observed dichotomy --
  overshoot crosses zero, undershoot turns back up -- then polished by a
  damped 2x2 Newton with finite-difference sensitivities.
* b is benign (growth rate sqrt(eps) at most), so its leg continues from
  R_u to Rend with the u-forcing off.  The far-field target is
  b'(Rend) - ell * b(Rend) = 0 with ell the logarithmic derivative of the
  decaying tail r K1(sqrt(eps) r) when sqrt(eps)*Rend is large ("decay"
  mode), and ell = 0 -- the flux plateau, matching the natural boundary
  condition of the truncated variational problem -- when sqrt(eps)*Rend
  is small ("plateau" mode, the cross-check configuration).

Given a frozen u-profile the b-equation is linear, so beta is obtained
exactly from one particular plus one homogeneous integration; alternating
that with the a-bisection bootstraps the Newton polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import k0 as bessel_k0, k1 as bessel_k1

from .exceptions import ConfigurationError, OracleFailureError
from .functional import State
from .grid import RadialGrid
from .model import ModelParams

__all__ = ["ShootParams", "ShootResult", "OracleSolution", "shoot_once", "shoot_solve"]

_RU_CAP = 16.0          # largest radius at which u(R)=0 is still well conditioned
_BLOWUP = 1e6


@dataclass(frozen=True)
class ShootParams:
    """Free series coefficients and integration control for one trajectory."""

    a: float                 # u ~ a r^|k| near the origin
    beta: float = 0.0        # b ~ beta r^2 near the origin
    r0: float = 1e-4         # series handoff radius
    rtol: float = 1e-11
    atol: float = 1e-13
    blowup: float = _BLOWUP

    def __post_init__(self):
        if self.a < 0.0:
            raise ConfigurationError("leading coefficient a must be >= 0")
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise ConfigurationError("integration tolerances must be positive")
        if not (0.0 < self.r0 < 1.0):
            raise ConfigurationError("series start r0 must lie in (0, 1)")


@dataclass
class ShootResult:
    u: float
    du: float
    b: float
    db: float
    blown_up: bool
    blowup_radius: float | None
    sol: object  # dense solution (scipy OdeSolution) over the integrated span


def _series_state(a: float, beta: float, params: ModelParams, r0: float) -> np.ndarray:
    k = params.k
    kappa = abs(k)
    lam, p, eps = params.lam, params.p, params.eps
    if kappa == 0:
        c2 = 0.25 * (1.0 - lam * a ** (p - 2.0)) if a > 0.0 else 0.25
        u = a * (1.0 + c2 * r0 * r0)
        du = 2.0 * a * c2 * r0
    else:
        cubic = lam * a ** (p - 2.0) if abs(kappa * (p - 2.0) - 2.0) < 1e-12 else 0.0
        c2 = (1.0 - 2.0 * k * beta - cubic) / (4.0 * (kappa + 1.0))
        u = a * r0**kappa * (1.0 + c2 * r0 * r0)
        du = a * r0 ** (kappa - 1.0) * (kappa + (kappa + 2.0) * c2 * r0 * r0)
    b4 = (eps * beta - (k * a * a if kappa == 1 else 0.0)) / 8.0
    b = beta * r0 * r0 + b4 * r0**4
    db = 2.0 * beta * r0 + 4.0 * b4 * r0**3
    return np.array([u, du, b, db])


def _coupled_rhs(params: ModelParams):
    k, lam, p, eps = float(params.k), params.lam, params.p, params.eps

    def rhs(r, y):
        u, du, b, db = y
        kb = k - b
        wp = u - lam * u ** (p - 1.0) if u > 0.0 else u
        return (du, -du / r + kb * kb * u / (r * r) + wp,
                db, db / r + eps * b - kb * u * u)

    return rhs


def _blowup_event(cap: float):
    def event(r, y):
        return abs(y[0]) - cap
    event.terminal = True
    event.direction = 1.0
    return event


def shoot_once(sp: ShootParams, params: ModelParams, rend: float) -> ShootResult:
    """Integrate the coupled system from the series start out to rend.

    On |u| blow-up the integration stops and the blow-up radius is
    reported; the bisection driver uses that signal.
    """
    y0 = _series_state(sp.a, sp.beta, params, sp.r0)
    sol = solve_ivp(
        _coupled_rhs(params), (sp.r0, rend), y0, method="DOP853",
        rtol=sp.rtol, atol=sp.atol, dense_output=True,
        events=[_blowup_event(sp.blowup)],
    )
    blown = len(sol.t_events[0]) > 0
    y = sol.y[:, -1]
    return ShootResult(
        u=float(y[0]), du=float(y[1]), b=float(y[2]), db=float(y[3]),
        blown_up=blown,
        blowup_radius=float(sol.t_events[0][0]) if blown else None,
        sol=sol.sol,
    )


# ---------------------------------------------------------------------------
# amplitude dichotomy (u-equation with a frozen gauge profile)

def _u_rhs_frozen_b(params: ModelParams, bfun):
    k, lam, p = float(params.k), params.lam, params.p

    def rhs(r, y):
        u, du = y
        kb = k - bfun(r)
        wp = u - lam * u ** (p - 1.0) if u > 0.0 else u
        return (du, -du / r + kb * kb * u / (r * r) + wp)

    return rhs


def _classify(a: float, beta: float, params: ModelParams, bfun, r_u: float,
              r0: float, rtol: float) -> str:
    """'high' if u crosses zero (a too large), 'low' if it turns back up."""
    y4 = _series_state(a, beta, params, r0)

    def cross(r, y):
        return y[0]
    cross.terminal = True
    cross.direction = -1.0

    def valley(r, y):
        return y[1]
    valley.terminal = True
    valley.direction = 1.0

    sol = solve_ivp(
        _u_rhs_frozen_b(params, bfun), (r0, r_u), y4[:2], method="DOP853",
        rtol=rtol, atol=1e-14, events=[cross, valley],
    )
    t_cross = sol.t_events[0][0] if len(sol.t_events[0]) else np.inf
    t_valley = sol.t_events[1][0] if len(sol.t_events[1]) else np.inf
    if t_cross < t_valley:
        return "high"
    if t_valley < t_cross:
        return "low"
    return "low" if sol.y[0, -1] > 0.0 else "high"


def _bisect_amplitude(params: ModelParams, bfun, r_u: float, r0: float,
                      beta: float = 0.0, lo: float = 0.2, hi: float = 8.0,
                      rtol: float = 1e-9) -> float:
    scale = params.lam ** (-1.0 / (params.p - 2.0))
    lo, hi = lo * scale, hi * scale
    for _ in range(60):
        if _classify(lo, beta, params, bfun, r_u, r0, rtol) == "low":
            break
        lo *= 0.5
    else:
        raise OracleFailureError("no undershooting amplitude found")
    for _ in range(60):
        if _classify(hi, beta, params, bfun, r_u, r0, rtol) == "high":
            break
        hi *= 2.0
    else:
        raise OracleFailureError("no overshooting amplitude found")
    while (hi - lo) > 1e-14 * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _classify(mid, beta, params, bfun, r_u, r0, rtol) == "high":
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# gauge leg (linear in b once u is frozen)

def _b_rhs_frozen_u(params: ModelParams, ufun, homogeneous: bool):
    k, eps = float(params.k), params.eps

    def rhs(r, y):
        b, db = y
        u = ufun(r)
        forcing = 0.0 if homogeneous else -k * u * u
        return (db, db / r + eps * b + b * u * u + forcing)

    return rhs


def _integrate_b(params: ModelParams, ufun, beta: float, r0: float, rend: float,
                 homogeneous: bool, rtol: float, a_for_series: float):
    if homogeneous:
        y0 = np.array([r0 * r0, 2.0 * r0])  # unit-beta series, quartic term dropped
    else:
        y4 = _series_state(a_for_series, beta, params, r0)
        y0 = y4[2:]
    return solve_ivp(
        _b_rhs_frozen_u(params, ufun, homogeneous), (r0, rend), y0,
        method="DOP853", rtol=rtol, atol=1e-14, dense_output=True,
    )


def _far_field_ell(params: ModelParams, rend: float, mode: str) -> float:
    """Logarithmic derivative g'/g of the admissible b-tail at rend.

    decay:   g = r K1(sqrt(eps) r)  =>  g'/g = -sqrt(eps) K0(z)/K1(z)
    plateau: g = const               =>  g'/g = 0
    """
    if mode == "plateau" or params.eps == 0.0:
        return 0.0
    z = math.sqrt(params.eps) * rend
    return -math.sqrt(params.eps) * bessel_k0(z) / bessel_k1(z)


def _solve_beta(params: ModelParams, ufun, beta0: float, a: float, r0: float,
                rend: float, ell: float, rtol: float):
    """Exact beta for the linear frozen-u problem, plus the particular leg."""
    part = _integrate_b(params, ufun, beta0, r0, rend, False, rtol, a)
    hom = _integrate_b(params, ufun, 1.0, r0, rend, True, rtol, a)
    t_part = part.y[1, -1] - ell * part.y[0, -1]
    t_hom = hom.y[1, -1] - ell * hom.y[0, -1]
    if t_hom == 0.0:
        raise OracleFailureError("degenerate homogeneous gauge response")
    beta = beta0 - t_part / t_hom
    return beta, part, hom


# ---------------------------------------------------------------------------
# assembled solution

@dataclass
class OracleSolution:
    a: float
    beta: float
    params: ModelParams
    rend: float
    r_u: float
    r0: float
    far_field: str
    residual_u: float
    residual_b: float
    newton_iterations: int
    _sol_core: object      # coupled leg on [r0, r_u]
    _sol_tail: object      # b-only leg on [r_u, rend] (None if r_u == rend)

    def eval_u(self, r) -> np.ndarray:
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(rr)
        kappa = abs(self.params.k)
        small = rr < self.r0
        if np.any(small):
            if kappa == 0:
                out[small] = self.a  # u(0+) = a, curvature negligible below r0
            else:
                out[small] = self.a * rr[small] ** kappa
        core = (rr >= self.r0) & (rr <= self.r_u)
        if np.any(core):
            out[core] = self._sol_core(rr[core])[0]
        return out if np.ndim(r) else float(out[0])

    def eval_b(self, r) -> np.ndarray:
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(rr)
        small = rr < self.r0
        out[small] = self.beta * rr[small] ** 2
        core = (rr >= self.r0) & (rr <= self.r_u)
        if np.any(core):
            out[core] = self._sol_core(rr[core])[2]
        if self._sol_tail is not None:
            tail = rr > self.r_u
            if np.any(tail):
                rt = np.minimum(rr[tail], self.rend)
                out[tail] = self._sol_tail(rt)[0]
        return out if np.ndim(r) else float(out[0])

    def state_on(self, grid: RadialGrid) -> State:
        return State(self.eval_u(grid.r), self.eval_b(grid.r))

    def mass_rdr(self, two_pi: bool = True, samples: int = 20000) -> float:
        """int u^2 r dr over [0, rend] (optionally times 2*pi)."""
        r = np.linspace(0.0, self.r_u, samples)
        val = float(np.trapezoid(self.eval_u(r) ** 2 * r, r))
        return 2.0 * math.pi * val if two_pi else val


def _pick_far_field(params: ModelParams, rend: float, far_field: str) -> str:
    if far_field != "auto":
        if far_field not in ("plateau", "decay"):
            raise ConfigurationError("far_field must be 'auto', 'plateau' or 'decay'")
        return far_field
    return "decay" if math.sqrt(params.eps) * rend >= 2.0 else "plateau"


def shoot_solve(
    params: ModelParams,
    rend: float,
    far_field: str = "auto",
    rtol: float = 1e-11,
    r0: float = 1e-4,
    max_newton: int = 50,
) -> OracleSolution:
    """Find (a, beta) so that u decays and b meets the far-field condition.

    k = 0 reduces to the one-parameter scalar mode with b == 0.  Raises
    OracleFailureError when the bootstrap or the Newton polish fails;
    callers treat that as a downgrade, not a fatal error.
    """
    if rend <= 2.0:
        raise ConfigurationError("rend too small for a decaying profile")
    k = params.k
    r_u = min(rend, _RU_CAP)
    mode = _pick_far_field(params, rend, far_field)
    ell = _far_field_ell(params, rend, mode)
    tol = 1e-10

    if k == 0:
        a = _bisect_amplitude(params, lambda r: 0.0, r_u, r0, rtol=min(rtol, 1e-10))
        a, its, res_u = _polish_scalar(params, a, r_u, r0, rtol, tol, max_newton)
        core = solve_ivp(_coupled_rhs(params), (r0, r_u),
                         _series_state(a, 0.0, params, r0), method="DOP853",
                         rtol=rtol, atol=1e-14, dense_output=True)
        return OracleSolution(a, 0.0, params, rend, r_u, r0, mode,
                              res_u, 0.0, its, core.sol, None)

    # bootstrap: alternate amplitude bisection (frozen b) with the exact
    # linear beta solve (frozen u)
    beta = 0.0
    bfun = lambda r: 0.0
    a = _bisect_amplitude(params, bfun, r_u, r0, beta=beta, rtol=1e-9)
    for _ in range(3):
        core = solve_ivp(_u_rhs_frozen_b(params, bfun), (r0, r_u),
                         _series_state(a, beta, params, r0)[:2], method="DOP853",
                         rtol=rtol, atol=1e-14, dense_output=True)
        usol = core.sol

        def ufun(r, usol=usol):
            return float(usol(r)[0]) if r <= r_u else 0.0

        beta, part, _ = _solve_beta(params, ufun, beta, a, r0, rend, ell, rtol)
        bsol = _integrate_b(params, ufun, beta, r0, rend, False, rtol, a)

        def bfun(r, bsol=bsol):
            return float(bsol.sol(min(r, rend))[0])

        a = _bisect_amplitude(params, bfun, r_u, r0, beta=beta, rtol=1e-9)

    # polish on an increasing-interval ladder: the u-residual amplifies
    # parameter error like e^{r_u}, so each rung stays inside the Newton
    # basin left by the previous one
    rungs = [x for x in (8.0, 12.0) if x < r_u] + [r_u]
    result = None
    for rung in rungs:
        result = _polish_coupled(params, a, beta, rung, rend, r0, mode, ell,
                                 rtol, tol, max_newton)
        a, beta = result.a, result.beta
    return result


def _shoot_targets(params: ModelParams, a: float, beta: float, r_u: float,
                   rend: float, ell: float, rtol: float, r0: float):
    """Residuals (u(r_u), b'(rend) - ell b(rend)) plus both legs."""
    y0 = _series_state(a, beta, params, r0)
    core = solve_ivp(_coupled_rhs(params), (r0, r_u), y0, method="DOP853",
                     rtol=rtol, atol=1e-14, dense_output=True,
                     events=[_blowup_event(_BLOWUP)])
    if len(core.t_events[0]):
        return None
    phi1 = float(core.y[0, -1])
    if r_u < rend:
        tail = solve_ivp(_b_rhs_frozen_u(params, lambda r: 0.0, False),
                         (r_u, rend), core.y[2:, -1], method="DOP853",
                         rtol=rtol, atol=1e-14, dense_output=True)
        bend, dbend = float(tail.y[0, -1]), float(tail.y[1, -1])
        tail_sol = tail.sol
    else:
        bend, dbend = float(core.y[2, -1]), float(core.y[3, -1])
        tail_sol = None
    phi2 = dbend - ell * bend
    return phi1, phi2, core.sol, tail_sol


def _polish_coupled(params, a, beta, r_u, rend, r0, mode, ell, rtol, tol, max_newton):
    shot = _shoot_targets(params, a, beta, r_u, rend, ell, rtol, r0)
    if shot is None:
        raise OracleFailureError("bootstrap iterate blows up")
    phi1, phi2, core, tail = shot
    for it in range(max_newton):
        if abs(phi1) <= tol and abs(phi2) <= tol:
            return OracleSolution(a, beta, params, rend, r_u, r0, mode,
                                  abs(phi1), abs(phi2), it, core, tail)
        da = 1e-7 * max(abs(a), 1.0)
        db = 1e-7 * max(abs(beta), 1.0)
        pa = _shoot_targets(params, a + da, beta, r_u, rend, ell, rtol, r0)
        pb = _shoot_targets(params, a, beta + db, r_u, rend, ell, rtol, r0)
        if pa is None or pb is None:
            raise OracleFailureError("divergence while forming sensitivities")
        J = np.array([[(pa[0] - phi1) / da, (pb[0] - phi1) / db],
                      [(pa[1] - phi2) / da, (pb[1] - phi2) / db]])
        try:
            step = np.linalg.solve(J, -np.array([phi1, phi2]))
        except np.linalg.LinAlgError as exc:
            raise OracleFailureError(f"singular shooting Jacobian: {exc}")
        norm0 = math.hypot(phi1, phi2)
        alpha = 1.0
        for _ in range(25):
            trial = _shoot_targets(params, a + alpha * step[0], beta + alpha * step[1],
                                   r_u, rend, ell, rtol, r0)
            if trial is not None and math.hypot(trial[0], trial[1]) < norm0:
                a += alpha * step[0]
                beta += alpha * step[1]
                phi1, phi2, core, tail = trial
                break
            alpha *= 0.5
        else:
            raise OracleFailureError("shooting Newton line search stalled")
    raise OracleFailureError(f"shooting Newton did not converge in {max_newton} iterations")


def _polish_scalar(params, a, r_u, r0, rtol, tol, max_newton):
    def phi(x):
        shot = _shoot_targets(params, x, 0.0, r_u, r_u, 0.0, rtol, r0)
        return None if shot is None else shot[0]

    f = phi(a)
    if f is None:
        raise OracleFailureError("scalar bootstrap iterate blows up")
    for it in range(max_newton):
        if abs(f) <= tol:
            return a, it, abs(f)
        da = 1e-8 * max(abs(a), 1.0)
        fp = phi(a + da)
        if fp is None or fp == f:
            raise OracleFailureError("degenerate scalar sensitivity")
        step = -f * da / (fp - f)
        alpha = 1.0
        for _ in range(25):
            ft = phi(a + alpha * step)
            if ft is not None and abs(ft) < abs(f):
                a += alpha * step
                f = ft
                break
            alpha *= 0.5
        else:
            raise OracleFailureError("scalar shooting line search stalled")
    raise OracleFailureError(f"scalar shooting did not converge in {max_newton} iterations")
