"""Stepsize conditions and convergence-rate bounds for the tracking recursion.

The bounds hold with unspecified positive constants; the gamma fields default
to 1 and exist for qualitative trade-off exploration, not for certifying
measured error against the bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

_SQRT6 = math.sqrt(6.0)


class TheoremScopeError(ValueError):
    """The requested parameters fall outside the convergence theorem's scope."""


class ScaleAssumptionWarning(UserWarning):
    """The tuned-stepsize bound assumes n >> 1/(beta*tau)^2, which fails here."""


@dataclass(frozen=True)
class BoundParams:
    """Inputs to the rate bounds: smoothness L, contraction factor beta,
    averaging period tau, agent count n, noise level sigma, horizon K, and
    the bound constants gamma1..gamma6."""

    L: float
    beta: float
    tau: int
    n: int = 1
    sigma: float = 0.0
    K: int = 1000
    gamma1: float = 1.0
    gamma2: float = 1.0
    gamma3: float = 1.0
    gamma4: float = 1.0
    gamma5: float = 1.0
    gamma6: float = 1.0

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"smoothness constant must be positive, got {self.L}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"contraction factor must lie in (0, 1), got {self.beta}")
        _check_tau(self.tau)
        if self.n < 1:
            raise ValueError(f"agent count must be >= 1, got {self.n}")
        if self.sigma < 0:
            raise ValueError(f"noise level must be nonnegative, got {self.sigma}")
        if self.K < self.tau + 1:
            raise TheoremScopeError(f"horizon K={self.K} must be at least tau+1={self.tau + 1}")
        for name in ("gamma1", "gamma2", "gamma3", "gamma4", "gamma5", "gamma6"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _check_tau(tau):
    if not (isinstance(tau, (int, float)) and float(tau).is_integer() and 2 <= tau < math.inf):
        raise TheoremScopeError(
            f"the convergence guarantee requires an integer averaging period >= 2, got {tau!r}"
        )
    return int(tau)


def stepsize_bound(L: float, beta: float, tau) -> float:
    """Largest stepsize covered by the convergence guarantee:
    min(1/(2L), 1/(4*sqrt(6)*beta*tau^2*L)).

    beta = 0 (exact averaging at every gossip step) is accepted as the
    continuous limit, where only the 1/(2L) branch binds.
    """
    if L <= 0:
        raise ValueError(f"smoothness constant must be positive, got {L}")
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"contraction factor must lie in [0, 1), got {beta}")
    tau = _check_tau(tau)
    base = 1.0 / (2.0 * L)
    if beta == 0.0:
        return base
    return min(base, 1.0 / (4.0 * _SQRT6 * beta * tau * tau * L))


def corollary_stepsize(bp: BoundParams) -> float:
    """Horizon-tuned stepsize: the theorem bound with two extra K-dependent
    branches sqrt(c1/(c2*K)) and sqrt(c1/(c3*K)), where c1 = L^2,
    c2 = L*sigma^2/n, and c3 = beta^2*tau^2*L^2*sigma^2/(1-beta^2).

    With sigma = 0 the K-dependent branches are inactive.
    """
    if bp.n * bp.beta**2 * bp.tau**2 < 10.0:
        warnings.warn(
            f"n*beta^2*tau^2 = {bp.n * bp.beta**2 * bp.tau**2:.3g} < 10; the tuned bound "
            "assumes n >> 1/(beta*tau)^2",
            ScaleAssumptionWarning,
            stacklevel=2,
        )
    alpha = stepsize_bound(bp.L, bp.beta, bp.tau)
    if bp.sigma > 0:
        c1 = bp.L**2
        c2 = bp.L * bp.sigma**2 / bp.n
        c3 = bp.beta**2 * bp.tau**2 * bp.L**2 * bp.sigma**2 / (1.0 - bp.beta**2)
        # a branch whose constant underflows to zero is +inf and never binds
        if c2 > 0:
            alpha = min(alpha, math.sqrt(c1 / (c2 * bp.K)))
        if c3 > 0:
            alpha = min(alpha, math.sqrt(c1 / (c3 * bp.K)))
    return alpha


class RateBound(NamedTuple):
    term1: float
    term2: float
    term3: float
    total: float


def rate_bound_theorem(bp: BoundParams) -> RateBound:
    """The three-term rate bound on the averaged stationarity measure:

        gamma1*L^2/(n*K) + gamma2*beta*tau^2*L^2/K
        + gamma3*sigma^2*(1/((1-beta^2)*tau^2) + 1/(beta*tau^2*n)).
    """
    term1 = bp.gamma1 * bp.L**2 / (bp.n * bp.K)
    term2 = bp.gamma2 * bp.beta * bp.tau**2 * bp.L**2 / bp.K
    if bp.sigma == 0:
        term3 = 0.0
    else:
        term3 = bp.gamma3 * bp.sigma**2 * (
            1.0 / ((1.0 - bp.beta**2) * bp.tau**2) + 1.0 / (bp.beta * bp.tau**2 * bp.n)
        )
    return RateBound(term1, term2, term3, term1 + term2 + term3)


def tau_tradeoff_table(bp: BoundParams, tau_list) -> list:
    """Evaluate the rate bound across averaging periods.

    Returns one (tau, term1, term2, term3, total) row per entry; no claim is
    made about monotonicity, the rows just report the bound.
    """
    rows = []
    for tau in tau_list:
        bound = rate_bound_theorem(replace(bp, tau=_check_tau(tau)))
        rows.append((int(tau), *bound))
    return rows
