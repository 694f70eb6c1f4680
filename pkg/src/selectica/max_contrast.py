"""Inference on the maximal contrast X_j^T mu chosen by a noisy argmax.

The conditional interval rests on the polyhedral lemma: once the noise
zeta, the sign delta and the residual W are fixed, the selection event is
an interval [v_min, v_max] for the statistic X_j^T Y, and X_j^T Y given the
event is a truncated normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._tuning import DOUBLE_TAIL_FLOOR, IwTuning, tune
from .exceptions import InfiniteWidth, SelectionEventViolated
from .interval import Interval
from .selection import SelectionOutcome
from .stat_core import RealInterval, normal_isf, solve_mean

__all__ = [
    "PolyhedralEvent",
    "TruncationLimits",
    "iw_tuning_v2",
    "iw_interval_v2",
    "classical_interval_v2",
    "build_A",
    "polyhedral_event",
    "truncation_limits",
    "rcsi_interval_v2",
]

DENOM_TOL = 1e-12
CONSISTENCY_TOL = 1e-8


@dataclass(frozen=True)
class PolyhedralEvent:
    A: np.ndarray
    delta: int
    zeta: np.ndarray
    W: np.ndarray
    j_star: int


@dataclass(frozen=True)
class TruncationLimits:
    v_min: float
    v_max: float

    def as_interval(self) -> RealInterval:
        return RealInterval(self.v_min, self.v_max)


def iw_tuning_v2(alpha: float, p: int, c: float, *,
                 tail_floor: float = DOUBLE_TAIL_FLOOR) -> IwTuning:
    """Narrowest stability level for Laplace(c) maximal-|contrast| selection.

    Constraint ``c >= 2 z_{1 - alpha nu / (2p)} / eta`` with ``nu in (0, 1)``;
    level ``alpha (1 - nu) exp(-eta)``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if p < 1 or not c > 0:
        raise ValueError("need p >= 1 and c > 0")
    return tune(
        eta_of_nu=lambda nu: 2.0 * normal_isf(alpha * nu / (2.0 * p)) / c,
        log_base=lambda nu: math.log(alpha) + math.log1p(-nu),
        nu_hi=1.0,
        tail_floor=tail_floor,
    )


_tuning_v2 = lru_cache(maxsize=256)(iw_tuning_v2)


def _statistic(Y, X, j: int) -> float:
    return float(np.asarray(X)[:, j] @ np.asarray(Y))


def iw_interval_v2(Y, X, out: SelectionOutcome, alpha: float, c: float, sigma: float,
                   *, tail_floor: float = DOUBLE_TAIL_FLOOR) -> Interval:
    mid = _statistic(Y, X, out.index)
    try:
        tuning = _tuning_v2(alpha, np.shape(X)[1], c, tail_floor=tail_floor)
    except InfiniteWidth:
        return Interval.unbounded(mid, 1 - alpha, "iw")
    return Interval.symmetric(mid, sigma * normal_isf(tuning.adjusted_level / 2.0),
                              1 - alpha, "iw")


def classical_interval_v2(Y, X, out: SelectionOutcome, alpha: float, sigma: float) -> Interval:
    mid = _statistic(Y, X, out.index)
    return Interval.symmetric(mid, sigma * normal_isf(alpha / 2), 1 - alpha, "classical")


def build_A(p: int, j_star: int) -> np.ndarray:
    """Constraint matrix of the event {argmax_j |z_j + zeta_j| = j_star}.

    With delta = sign(z_j* + zeta_j*), the event is
    ``delta * A z <= -delta * A zeta``. Rows, in order: -e_j*; e_j - e_j* for
    j < j*, then j > j*; -e_j - e_j* for j < j*, then j > j*. That is
    2p - 1 rows in all.
    """
    if not 0 <= j_star < p:
        raise IndexError(f"j_star={j_star} out of range for p={p}")
    others = np.array([j for j in range(p) if j != j_star], dtype=np.int64)
    A = np.zeros((2 * p - 1, p))
    A[:, j_star] = -1.0
    rows = np.arange(1, p)
    A[rows, others] = 1.0
    A[rows + (p - 1), others] = -1.0
    return A


def in_selection_event(A: np.ndarray, delta: int, z, zeta) -> bool:
    """Whether ``delta A z <= -delta A zeta`` holds."""
    return bool(np.all(delta * (A @ z) <= -delta * (A @ zeta)))


def polyhedral_event(Y, X, out: SelectionOutcome) -> PolyhedralEvent:
    """Conditioning record (j*, zeta, W, delta) plus the constraint matrix."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    j = out.index
    xj = X[:, j]
    W = Y - xj * (xj @ Y)
    return PolyhedralEvent(A=build_A(X.shape[1], j), delta=int(out.delta), zeta=out.zeta,
                           W=W, j_star=j)


def truncation_limits(ev: PolyhedralEvent, X, Y=None) -> TruncationLimits:
    """Range of X_j*^T Y compatible with the selection event given (zeta, W, delta).

    Row j of ``delta A X^T Y <= -delta A zeta`` reads ``t * D_j <= delta * r_j``
    with ``D_j = delta (A X^T X_j*)_j`` and ``r_j = -(A zeta + A X^T W)_j``, so
    rows with ``D_j > 0`` cap t from above at ``v_j = r_j / (A X^T X_j*)_j`` and
    rows with ``D_j < 0`` bound it from below. The lower limit is thus the
    max over negative-D rows. Rows with ``|D_j| < DENOM_TOL`` do not involve t.
    """
    X = np.asarray(X, dtype=float)
    xtx = X.T @ X[:, ev.j_star]
    denom = ev.A @ xtx
    resid = -(ev.A @ ev.zeta + ev.A @ (X.T @ ev.W))
    signed = ev.delta * denom
    lower_rows = signed < -DENOM_TOL
    upper_rows = signed > DENOM_TOL
    v_min = float(np.max(resid[lower_rows] / denom[lower_rows])) if lower_rows.any() else -math.inf
    v_max = float(np.min(resid[upper_rows] / denom[upper_rows])) if upper_rows.any() else math.inf
    if v_min > v_max + CONSISTENCY_TOL:
        raise SelectionEventViolated(f"empty truncation set [{v_min}, {v_max}]")
    if Y is not None:
        t = float(X[:, ev.j_star] @ np.asarray(Y, dtype=float))
        scale = CONSISTENCY_TOL * max(1.0, abs(t))
        if not v_min - scale <= t <= v_max + scale:
            raise SelectionEventViolated(f"statistic {t} outside [{v_min}, {v_max}]")
    return TruncationLimits(v_min, max(v_min, v_max))


def rcsi_interval_v2(Y, X, out: SelectionOutcome, alpha: float, sigma: float) -> Interval:
    """Randomised conditional selective interval for X_j*^T mu."""
    ev = polyhedral_event(Y, X, out)
    lim = truncation_limits(ev, X, Y)
    t = _statistic(Y, X, ev.j_star)
    support = lim.as_interval()
    t = support.clamp(t)
    lo = solve_mean(t, sigma, support, 1.0 - alpha / 2.0)
    hi = solve_mean(t, sigma, support, alpha / 2.0)
    return Interval(lo, hi, 1 - alpha, "rcsi")
