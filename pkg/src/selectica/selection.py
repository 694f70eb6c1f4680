"""Randomised selection rules.

Each rule returns the selected index together with the noise that was
drawn, since every conditional method downstream needs that record.
Indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptySelection
from .lasso_dt import cv_lambda, lasso_fit
from .stat_core import RngStream, sample_laplace, sample_normal

__all__ = [
    "SelectionOutcome",
    "argmax_select",
    "check_unit_columns",
    "select_v1",
    "select_v2",
    "select_v3",
    "select_gauss_v1",
]

UNIT_NORM_TOL = 1e-8


@dataclass(frozen=True)
class SelectionOutcome:
    selected: int | tuple[int, ...]
    zeta: np.ndarray
    delta: np.ndarray | int | None = None
    lam: float | None = None

    @property
    def index(self) -> int:
        """The single selected index (first of an ordered set)."""
        if isinstance(self.selected, tuple):
            return self.selected[0]
        return self.selected


def argmax_select(v) -> int:
    """Index of the maximum; the smallest index wins ties."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("cannot select from an empty sequence")
    return int(np.argmax(v))


def check_unit_columns(X, tol: float = UNIT_NORM_TOL) -> None:
    norms = np.linalg.norm(X, axis=0)
    if np.any(np.abs(norms - 1.0) > tol):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"design columns must have unit norm (max deviation {worst:.3g})")


def _nonzero_laplace(stream: RngStream, n: int, c: float) -> np.ndarray:
    zeta = sample_laplace(stream, n, c)
    zero = zeta == 0.0
    while zero.any():
        zeta[zero] = sample_laplace(stream, int(zero.sum()), c)
        zero = zeta == 0.0
    return zeta


def select_v1(Y, c: float, stream: RngStream) -> SelectionOutcome:
    """argmax_i (Y_i + zeta_i) with zeta_i ~ Laplace(c)."""
    if not c > 0:
        raise ValueError("c must be positive")
    Y = np.asarray(Y, dtype=float)
    zeta = _nonzero_laplace(stream, Y.size, c)
    return SelectionOutcome(
        selected=argmax_select(Y + zeta),
        zeta=zeta,
        delta=np.sign(zeta).astype(np.int64),
    )


def select_v2(Y, X, c: float, stream: RngStream) -> SelectionOutcome:
    """argmax_j |X_j^T Y + zeta_j| with zeta_j ~ Laplace(c); records the sign."""
    if not c > 0:
        raise ValueError("c must be positive")
    X = np.asarray(X, dtype=float)
    check_unit_columns(X)
    zeta = _nonzero_laplace(stream, X.shape[1], c)
    noisy = X.T @ np.asarray(Y, dtype=float) + zeta
    j = argmax_select(np.abs(noisy))
    return SelectionOutcome(selected=j, zeta=zeta, delta=1 if noisy[j] >= 0 else -1)


def select_gauss_v1(Y, c: float, stream: RngStream, sigma: float = 1.0) -> SelectionOutcome:
    """argmax_i (Y_i + c zeta_i) with zeta_i ~ N(0, sigma^2)."""
    if not c > 0:
        raise ValueError("c must be positive")
    Y = np.asarray(Y, dtype=float)
    zeta = sample_normal(stream, Y.size, sigma)
    return SelectionOutcome(selected=argmax_select(Y + c * zeta), zeta=zeta)


def select_v3(Y, X, c: float, stream: RngStream, cv_folds: int = 3, *, sigma: float = 1.0,
              lam: float | None = None, grid_size: int = 50) -> SelectionOutcome:
    """Lasso on Y + c zeta, zeta ~ N(0, sigma^2 I), with lam chosen by CV.

    Returns the nonzero coefficients ordered by decreasing magnitude. Raises
    EmptySelection (carrying the outcome) when nothing is selected.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    if cv_folds < 2:
        raise ValueError("cv_folds must be at least 2")
    X = np.asarray(X, dtype=float)
    check_unit_columns(X)
    Y = np.asarray(Y, dtype=float)
    zeta = sample_normal(stream.child("thin"), Y.size, sigma)
    y_train = Y + c * zeta
    if lam is None:
        lam = cv_lambda(X, y_train, cv_folds, grid_size, stream.child("cv"))
    fit = lasso_fit(X, y_train, lam)
    out = SelectionOutcome(selected=tuple(int(j) for j in fit.support), zeta=zeta, lam=float(lam))
    if not out.selected:
        err = EmptySelection(f"lasso selected nothing at lam={lam:.4g}")
        err.outcome = out
        raise err
    return out
