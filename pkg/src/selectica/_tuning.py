"""Shared (eta, nu) search for the infer-and-widen level adjustment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .exceptions import InfiniteWidth

GRID_POINTS = 512
NU_TOL = 1e-10
# Closest approach to an open end of the nu range, relative to its length.
EDGE = 1e-15
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

# 1 - q/2 rounds to 1.0 in double precision once q/2 < 2**-54, which is when a
# quantile computed as qnorm(1 - q/2) comes back infinite.
DOUBLE_TAIL_FLOOR = 2.0 ** -54


@dataclass(frozen=True)
class IwTuning:
    eta: float
    nu: float
    log_level: float

    @property
    def adjusted_level(self) -> float:
        return math.exp(self.log_level)


def golden_max(f: Callable[[float], float], a: float, b: float, tol: float = NU_TOL) -> float:
    """Maximiser of a unimodal f on [a, b] by golden-section search."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def tune(eta_of_nu: Callable[[float], float], log_base: Callable[[float], float],
         nu_hi: float, tail_floor: float) -> IwTuning:
    """Maximise log_base(nu) - eta(nu) over nu in (0, nu_hi).

    The width is increasing in eta at fixed nu, so eta sits on its
    constraint boundary and only nu is searched: a uniform grid first, then
    golden-section refinement between the grid neighbours of the best point.
    When the best grid point is at either end, refinement runs on the log
    distance to that end, since the optimum can approach the open boundary.
    """

    def objective(nu: float) -> float:
        try:
            return log_base(nu) - eta_of_nu(nu)
        except ArithmeticError:
            return -math.inf

    h = nu_hi / GRID_POINTS
    grid = [(k + 0.5) * h for k in range(GRID_POINTS)]
    vals = [objective(nu) for nu in grid]
    k = max(range(GRID_POINTS), key=vals.__getitem__)
    if k == 0:
        # The optimum may be the open end nu -> 0; refine in log(nu).
        t = golden_max(lambda t: objective(math.exp(t)), math.log(nu_hi * EDGE),
                       math.log(grid[1]), NU_TOL)
        nu = math.exp(t)
    elif k == GRID_POINTS - 1:
        t = golden_max(lambda t: objective(nu_hi - math.exp(t)), math.log(nu_hi * EDGE),
                       math.log(nu_hi - grid[-2]), NU_TOL)
        nu = nu_hi - math.exp(t)
    else:
        nu = golden_max(objective, grid[k - 1], grid[k + 1])
    if objective(nu) < vals[k]:
        nu = grid[k]
    eta = eta_of_nu(nu)
    log_level = log_base(nu) - eta
    if not log_level - math.log(2.0) >= math.log(tail_floor):
        raise InfiniteWidth(
            f"adjusted level exp({log_level:.4g}) needs a normal quantile beyond "
            f"the {tail_floor:.3g} tail"
        )
    return IwTuning(eta=eta, nu=nu, log_level=log_level)
