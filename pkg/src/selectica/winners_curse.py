"""Inference on the mean of the largest of n Gaussian observations."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ._tuning import DOUBLE_TAIL_FLOOR, IwTuning, tune
from .exceptions import InfiniteWidth
from .interval import Interval
from .selection import SelectionOutcome, select_gauss_v1
from .stat_core import RealInterval, RngStream, normal_isf, solve_mean

__all__ = [
    "IwTuning",
    "iw_tuning_v1",
    "iw_interval_v1",
    "classical_interval_v1",
    "fission_interval_v1",
    "gauss_thin_interval_v1",
    "bias_lower_bound",
]


def iw_tuning_v1(alpha: float, n: int, c: float, *,
                 tail_floor: float = DOUBLE_TAIL_FLOOR) -> IwTuning:
    """Narrowest algorithmic-stability level for Laplace(c) argmax selection.

    Valid pairs satisfy ``eta * c >= 2 z_{1 - alpha (alpha - nu) / (2n)}`` with
    ``nu in (0, alpha)``; the interval uses level
    ``alpha (1 - alpha + nu) exp(-eta)``. Raises InfiniteWidth when half that
    level is below ``tail_floor``. The default floor reproduces the double
    precision overflow of ``qnorm(1 - level / 2)``; pass ``1e-300`` to only
    give up when the quantile itself is unrepresentable.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if n < 1 or not c > 0:
        raise ValueError("need n >= 1 and c > 0")
    return tune(
        eta_of_nu=lambda nu: 2.0 * normal_isf(alpha * (alpha - nu) / (2.0 * n)) / c,
        log_base=lambda nu: math.log(alpha) + math.log(1.0 - alpha + nu),
        nu_hi=alpha,
        tail_floor=tail_floor,
    )


_tuning_v1 = lru_cache(maxsize=256)(iw_tuning_v1)


def iw_interval_v1(Y, out: SelectionOutcome, alpha: float, c: float, sigma: float,
                   *, tail_floor: float = DOUBLE_TAIL_FLOOR) -> Interval:
    y_sel = float(np.asarray(Y)[out.index])
    try:
        tuning = _tuning_v1(alpha, len(Y), c, tail_floor=tail_floor)
    except InfiniteWidth:
        return Interval.unbounded(y_sel, 1 - alpha, "iw")
    half = sigma * normal_isf(tuning.adjusted_level / 2.0)
    return Interval.symmetric(y_sel, half, 1 - alpha, "iw")


def classical_interval_v1(Y, out: SelectionOutcome, alpha: float, sigma: float) -> Interval:
    """Unadjusted z-interval around the selected observation."""
    y_sel = float(np.asarray(Y)[out.index])
    return Interval.symmetric(y_sel, sigma * normal_isf(alpha / 2), 1 - alpha, "classical")


def fission_interval_v1(Y, out: SelectionOutcome, alpha: float, c: float,
                        sigma: float) -> Interval:
    """Data-fission interval given the selected sum Y_i + zeta_i and sign(zeta_i).

    Conditionally, Y_i is N(mu_i + sign(zeta_i) sigma^2 / c, sigma^2)
    truncated to the side of Y_i + zeta_i it was observed on. The endpoints
    invert that truncated CDF at Y_i and undo the mean shift.
    """
    i = out.index
    y = float(np.asarray(Y)[i])
    delta = int(out.delta[i])
    cut = y + float(out.zeta[i])
    support = RealInterval(-math.inf, cut) if delta > 0 else RealInterval(cut, math.inf)
    shift = delta * sigma**2 / c
    lo = solve_mean(y, sigma, support, 1.0 - alpha / 2.0) - shift
    hi = solve_mean(y, sigma, support, alpha / 2.0) - shift
    return Interval(lo, hi, 1 - alpha, "fission")


def gauss_thin_interval_v1(Y, c: float, sigma: float, alpha: float,
                           stream: RngStream) -> tuple[SelectionOutcome, Interval]:
    """Select on Y + c zeta and centre the interval on Y - zeta / c.

    The two pieces are independent, so the midpoint is unbiased for the
    selected mean and the classical critical value applies.
    """
    out = select_gauss_v1(Y, c, stream, sigma)
    i = out.index
    mid = float(np.asarray(Y)[i] - out.zeta[i] / c)
    half = sigma * math.sqrt(1.0 + c**-2) * normal_isf(alpha / 2)
    return out, Interval.symmetric(mid, half, 1 - alpha, "gauss_thin")


def bias_lower_bound(n: int, c: float, sigma: float = 1.0) -> float:
    """(sigma / 2) (sqrt(1 + c^2) - c) sqrt(log n)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if c < 0:
        raise ValueError("c must be nonnegative")
    # 1 / (sqrt(1 + c^2) + c) avoids cancellation for large c.
    return 0.5 * sigma / (math.sqrt(1.0 + c * c) + c) * math.sqrt(math.log(n))
