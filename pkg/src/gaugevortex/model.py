"""Nonlinear potential family W(s) = s^2/2 - lambda*s^p/p.

The monomial nonlinearity R(s) = lambda*s^p/p (p > 2, lambda > 0) is the
canonical instance of the structural requirements R(0) = R'(0) = 0,
|R(s)| <= (lambda/p) s^p and s R'(s) >= p R(s) > 0.  For s <= 0 the
nonlinearity is switched off (R = 0), so W(s) = s^2/2 there; negative
field values are then energetically inert, which is what justifies
projecting iterates onto u >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigurationError, DomainError

__all__ = [
    "ModelParams",
    "AssumptionReport",
    "potential_W",
    "potential_Wprime",
    "potential_Wsecond",
    "check_assumptions",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical and penalty parameters of one solve.

    k:    integer vorticity; k = 0 is admitted only for the reduced
          (b == 0) oracle test mode and must be opted into.
    p:    nonlinearity exponent, > 2.
    lam:  coupling strength of the nonlinearity, > 0.
    eps:  penalty weight, in [0, 1).
    """

    k: int
    p: float
    lam: float
    eps: float = 0.0
    zero_k_ok: bool = False

    def __post_init__(self):
        if int(self.k) != self.k:
            raise ConfigurationError(f"vorticity k must be an integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        if self.k == 0 and not self.zero_k_ok:
            raise ConfigurationError(
                "k = 0 is only allowed in oracle test mode (pass zero_k_ok=True)"
            )
        if not (self.p > 2.0):
            raise ConfigurationError(f"exponent p must exceed 2, got {self.p}")
        if not (self.lam > 0.0):
            raise ConfigurationError(f"coupling lambda must be positive, got {self.lam}")
        if not (0.0 <= self.eps < 1.0):
            raise ConfigurationError(f"penalty eps must lie in [0, 1), got {self.eps}")

    def with_eps(self, eps: float) -> "ModelParams":
        return replace(self, eps=eps)


def _as_checked(s):
    arr = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("potential evaluated at a non-finite argument")
    return arr


def potential_W(s, params: ModelParams):
    """W(s) = s^2/2 - lambda*s^p/p for s >= 0, s^2/2 for s < 0."""
    arr = _as_checked(s)
    pos = np.maximum(arr, 0.0)  # pos**p vanishes on s <= 0, giving the R = 0 extension
    w = 0.5 * arr * arr - (params.lam / params.p) * pos**params.p
    return float(w) if np.isscalar(s) else w


def potential_Wprime(s, params: ModelParams):
    """W'(s) = s - lambda*s^(p-1) for s >= 0, s for s < 0."""
    arr = _as_checked(s)
    pos = np.maximum(arr, 0.0)
    w = arr - params.lam * pos ** (params.p - 1.0)
    return float(w) if np.isscalar(s) else w


def potential_Wsecond(s, params: ModelParams):
    """W''(s); continuous at 0 because p > 2."""
    arr = _as_checked(s)
    pos = np.maximum(arr, 0.0)
    w = 1.0 - params.lam * (params.p - 1.0) * pos ** (params.p - 2.0)
    return float(w) if np.isscalar(s) else w


@dataclass(frozen=True)
class AssumptionReport:
    """Per-assumption pass flags from a numerical sweep over s in (0, 10]."""

    vanishes_at_zero: bool      # R(0) = R'(0) = 0
    growth_bounded: bool        # |R(s)| <= (lambda/p) s^p
    superlinear: bool           # s R'(s) >= p R(s) > 0

    @property
    def all_pass(self) -> bool:
        return self.vanishes_at_zero and self.growth_bounded and self.superlinear


def check_assumptions(params: ModelParams, sample_count: int = 256) -> AssumptionReport:
    """Verify the structural assumptions on R on sampled s in (0, 10].

    Report-only: never raises for a failing assumption.  For the monomial
    family s R'(s) = p R(s) holds with equality, so only rounding noise is
    tolerated.
    """
    if sample_count < 1:
        raise ConfigurationError("sample_count must be >= 1")
    lam, p = params.lam, params.p
    s = np.linspace(10.0 / sample_count, 10.0, sample_count)

    def R(x):
        return lam / p * x**p

    def Rprime(x):
        return lam * x ** (p - 1.0)

    vanishes = (R(0.0) == 0.0) and (Rprime(0.0) == 0.0)
    slack = 1e-12 * np.maximum(1.0, s**p)
    growth = bool(np.all(np.abs(R(s)) <= (lam / p) * s**p + slack))
    super_gap = s * Rprime(s) - p * R(s)
    superlinear = bool(np.all(super_gap >= -slack) and np.all(R(s) > 0.0))
    return AssumptionReport(vanishes, growth, superlinear)
