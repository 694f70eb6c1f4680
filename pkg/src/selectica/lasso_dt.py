"""Lasso selection followed by data-thinning inference.

The lasso here minimises ``||y - X b||^2 + lam * ||b||_1`` (no 1/2 on the
quadratic), so the soft-threshold level in each coordinate update is
``lam / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import EmptySelection, SingularDesign
from .interval import Interval
from .stat_core import RngStream, normal_isf, sample_normal

__all__ = [
    "LassoFit",
    "ThinnedPair",
    "lasso_fit",
    "lasso_path",
    "lambda_max",
    "cv_lambda",
    "kkt_violation",
    "thin",
    "ols_on_selected",
    "dt_interval",
    "classical_interval_v3",
]

CD_TOL = 1e-8
CD_MAX_SWEEPS = 10_000
CV_TOL = 1e-4
CV_MIN_RSS_FRAC = 1e-3
POLISH_EVERY = 25
POLISH_TOL = 1e-10
# Sweeps of coordinate descent before the exact homotopy is tried instead.
STALL_SWEEPS = 500


@dataclass(frozen=True)
class LassoFit:
    beta: np.ndarray
    lam: float
    iterations: int
    converged: bool

    @property
    def support(self) -> np.ndarray:
        """Nonzero coefficients ordered by decreasing magnitude (stable on ties)."""
        nz = np.flatnonzero(self.beta)
        return nz[np.argsort(-np.abs(self.beta[nz]), kind="stable")]


@dataclass(frozen=True)
class ThinnedPair:
    y_train: np.ndarray
    y_test: np.ndarray
    zeta: np.ndarray
    c: float


@njit(cache=True)
def _sweep(G, q, Gb, beta, half_lam, idx):
    max_delta = 0.0
    for j in idx:
        gjj = G[j, j]
        if gjj <= 0.0:
            continue
        old = beta[j]
        r = q[j] - Gb[j] + gjj * old
        if r > half_lam:
            new = (r - half_lam) / gjj
        elif r < -half_lam:
            new = (r + half_lam) / gjj
        else:
            new = 0.0
        d = new - old
        if d != 0.0:
            beta[j] = new
            for k in range(Gb.shape[0]):
                Gb[k] += G[k, j] * d
            if abs(d) > max_delta:
                max_delta = abs(d)
    return max_delta


@njit(cache=True)
def _cd_gram(G, q, lam, beta, tol, max_sweeps):
    """Cyclic coordinate descent on the Gram form; ``beta`` is updated in place.

    Alternates full sweeps with sweeps restricted to the active set; stops
    once a full sweep moves no coordinate by more than ``tol``.
    """
    p = q.shape[0]
    Gb = G @ beta
    half_lam = 0.5 * lam
    everything = np.arange(p)
    sweeps = 0
    while sweeps < max_sweeps:
        delta = _sweep(G, q, Gb, beta, half_lam, everything)
        sweeps += 1
        if delta < tol:
            return sweeps, True
        active = np.flatnonzero(beta)
        while sweeps < max_sweeps:
            delta = _sweep(G, q, Gb, beta, half_lam, active)
            sweeps += 1
            if delta < tol:
                break
    return sweeps, False


def _polish(G, q, lam, beta) -> bool:
    """Replace beta by the exact solution on its current active set and signs.

    Accepted only if the result keeps those signs and satisfies the
    optimality conditions on every coordinate; beta is left untouched
    otherwise.
    """
    active = np.flatnonzero(beta)
    if active.size == 0:
        return False
    signs = np.sign(beta[active])
    half = 0.5 * lam
    try:
        b = np.linalg.solve(G[np.ix_(active, active)], q[active] - half * signs)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.sign(b) == signs):
        return False
    grad = q - G[:, active] @ b
    slack = POLISH_TOL * max(1.0, half)
    if np.max(np.abs(grad[active] - half * signs)) > slack:
        return False
    inactive = np.ones(q.size, dtype=bool)
    inactive[active] = False
    if np.any(np.abs(grad[inactive]) > half + slack):
        return False
    beta[:] = 0.0
    beta[active] = b
    return True


def _kkt_ok(G, q, lam, beta) -> bool:
    half = 0.5 * lam
    grad = q - G @ beta
    slack = POLISH_TOL * max(1.0, half)
    nz = beta != 0
    if np.any(np.abs(grad[~nz]) > half + slack):
        return False
    return not np.any(np.abs(grad[nz] - half * np.sign(beta[nz])) > slack)


def _homotopy(G, q, lam, max_steps=None):
    """Exact lasso solution by following the piecewise-linear path from lam_max.

    Works with the correlations c = q - G beta and the level g = lam / 2:
    along each segment the active coefficients move linearly, and a segment
    ends when an inactive correlation reaches the level (join) or an active
    coefficient crosses zero (drop). Returns None if the path breaks down
    numerically.
    """
    p = q.size
    target = 0.5 * lam
    beta = np.zeros(p)
    c = q.copy()
    gamma = float(np.max(np.abs(c)))
    if gamma <= target:
        return beta
    active = [int(np.argmax(np.abs(c)))]
    signs = [float(np.sign(c[active[0]]))]
    tiny = 1e-14 * max(1.0, gamma)
    for _ in range(max_steps or 20 * p + 100):
        A = np.array(active)
        try:
            w = np.linalg.solve(G[np.ix_(A, A)], np.array(signs))
        except np.linalg.LinAlgError:
            return None
        a = G[:, A] @ w
        t_best, event, who = gamma - target, "stop", -1
        inactive = np.ones(p, dtype=bool)
        inactive[A] = False
        for sgn in (1.0, -1.0):
            den = 1.0 - sgn * a
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (gamma - sgn * c) / den
            ok = inactive & (den > 1e-12) & (t > tiny)
            if ok.any():
                j = int(np.flatnonzero(ok)[np.argmin(t[ok])])
                if t[j] < t_best:
                    t_best, event, who = float(t[j]), "join", j
        with np.errstate(divide="ignore", invalid="ignore"):
            t_zero = -beta[A] / w
        ok = t_zero > tiny
        if ok.any():
            k = int(np.flatnonzero(ok)[np.argmin(t_zero[ok])])
            if t_zero[k] < t_best:
                t_best, event, who = float(t_zero[k]), "drop", k
        beta[A] += t_best * w
        c -= t_best * a
        gamma -= t_best
        if event == "stop":
            return beta
        if event == "join":
            active.append(who)
            signs.append(float(np.sign(c[who])))
        else:
            beta[active[who]] = 0.0
            del active[who], signs[who]
            if not active:
                return None
    return None


def _solve_gram(G, q, lam, beta, tol, max_sweeps, exact_fallback=True):
    """Coordinate descent with periodic active-set polishing; updates beta.

    If descent stalls for STALL_SWEEPS sweeps the exact path solution is
    tried and kept when it certifies optimality.
    """
    done = 0
    tried_exact = not exact_fallback
    while done < max_sweeps:
        sweeps, ok = _cd_gram(G, q, lam, beta, tol, min(POLISH_EVERY, max_sweeps - done))
        done += sweeps
        if ok:
            return done, True
        if _polish(G, q, lam, beta):
            return done, True
        if not tried_exact and (done >= STALL_SWEEPS or done >= max_sweeps):
            tried_exact = True
            exact = _homotopy(G, q, lam)
            if exact is not None and _kkt_ok(G, q, lam, exact):
                beta[:] = exact
                return done, True
    return done, False


def _path_sse(G, q, yy, lams, tol, X_out, y_out):
    """Held-out squared error along a decreasing lambda path with warm starts.

    The path stops once the training fit leaves less than CV_MIN_RSS_FRAC
    of the training sum of squares unexplained; later penalties get +inf.
    """
    beta = np.zeros(q.size)
    out = np.full(lams.size, np.inf)
    for i, lam in enumerate(lams):
        _solve_gram(G, q, lam, beta, tol, CD_MAX_SWEEPS)
        resid = y_out - X_out @ beta
        out[i] = resid @ resid
        rss = yy - 2.0 * (q @ beta) + beta @ (G @ beta)
        if rss < CV_MIN_RSS_FRAC * yy:
            break
    return out


def lambda_max(X, Y) -> float:
    """Smallest lam at which the all-zero fit is optimal."""
    return float(2.0 * np.max(np.abs(X.T @ Y)))


def lasso_fit(X, Y, lam: float, *, beta0=None, tol: float = CD_TOL,
              max_sweeps: int = CD_MAX_SWEEPS, exact_fallback: bool = True) -> LassoFit:
    """Fit the lasso at a single penalty by cyclic coordinate descent.

    Columns need not be unit norm; with unit-norm columns each update is
    exactly ``S(X_j^T r_j, lam / 2)``. Every POLISH_EVERY sweeps the current
    active set is solved exactly and kept if it is optimal, which rescues
    the slow tail of coordinate descent on correlated designs. Descent that
    still stalls (typically p > n at a small penalty, where the iterates
    carry more nonzeros than the solution) hands over to the exact homotopy
    unless ``exact_fallback`` is off. Non-convergence is reported through ``LassoFit.converged`` rather than
    raised.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    G = X.T @ X
    q = X.T @ Y
    beta = np.zeros(X.shape[1]) if beta0 is None else np.array(beta0, dtype=float)
    sweeps, ok = _solve_gram(G, q, float(lam), beta, tol, max_sweeps, exact_fallback)
    return LassoFit(beta=beta, lam=float(lam), iterations=int(sweeps), converged=bool(ok))


def lasso_path(X, Y, lams, **kw) -> list[LassoFit]:
    """Warm-started fits, evaluated in the order given."""
    fits = []
    beta = None
    for lam in lams:
        fit = lasso_fit(X, Y, lam, beta0=beta, **kw)
        beta = fit.beta
        fits.append(fit)
    return fits


def kkt_violation(X, Y, fit: LassoFit) -> float:
    """Largest violation of the lasso optimality conditions at ``fit``.

    Zero coefficients need ``|g_j| <= lam``; nonzero ones need
    ``g_j == lam * sign(beta_j)``, where ``g = 2 X^T (Y - X beta)``.
    """
    g = 2.0 * X.T @ (Y - X @ fit.beta)
    nz = fit.beta != 0
    viol_zero = np.max(np.abs(g[~nz]) - fit.lam, initial=0.0)
    viol_nz = np.max(np.abs(g[nz] - fit.lam * np.sign(fit.beta[nz])), initial=0.0)
    return float(max(viol_zero, viol_nz))


def fold_ids(n: int, folds: int, stream: RngStream) -> np.ndarray:
    """Fold label per row: contiguous blocks of a seeded permutation."""
    perm = stream.generator.permutation(n)
    ids = np.empty(n, dtype=np.int64)
    for k, block in enumerate(np.array_split(perm, folds)):
        ids[block] = k
    return ids


def lambda_grid(X, Y, grid_size: int = 50, ratio: float = 1e-3) -> np.ndarray:
    """Log-spaced penalties from lam_max * ratio up to lam_max (ascending)."""
    lmax = lambda_max(X, Y)
    if lmax == 0.0:
        return np.zeros(1)
    return np.geomspace(lmax * ratio, lmax, grid_size)


def cv_lambda(X, Y, folds: int = 3, grid_size: int = 50, stream: RngStream | None = None,
              *, seed: int = 0) -> float:
    """Penalty on the grid with the smallest mean held-out squared error.

    Fold fits use a looser coordinate tolerance than ``lasso_fit`` and stop
    the path once the training data are (almost) interpolated, the same
    saturation rule glmnet applies.
    """
    if folds < 2:
        raise ValueError("need at least two folds")
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    if stream is None:
        stream = RngStream(seed, 0, "cv")
    grid = lambda_grid(X, Y, grid_size)
    desc = np.ascontiguousarray(grid[::-1])
    ids = fold_ids(n, folds, stream)
    sse = np.zeros(desc.size)
    for k in range(folds):
        hold = ids == k
        Xtr, Ytr = X[~hold], Y[~hold]
        G = Xtr.T @ Xtr
        q = Xtr.T @ Ytr
        sse += _path_sse(G, q, float(Ytr @ Ytr), desc, CV_TOL, X[hold], Y[hold])
    # Ties go to the larger penalty.
    return float(desc[int(np.argmin(sse / n))])


def thin(Y, c: float, sigma: float, stream: RngStream) -> ThinnedPair:
    """Split Y into independent training and test copies with Gaussian noise."""
    if not c > 0:
        raise ValueError("c must be positive")
    Y = np.asarray(Y, dtype=float)
    zeta = sample_normal(stream, Y.size, sigma)
    return ThinnedPair(y_train=Y + c * zeta, y_test=Y - zeta / c, zeta=zeta, c=float(c))


def ols_on_selected(X, y, selected) -> tuple[np.ndarray, np.ndarray]:
    """OLS coefficients of y on X[:, selected] and the inverse Gram matrix."""
    if len(selected) == 0:
        raise EmptySelection("no features selected")
    Xs = X[:, np.asarray(selected)]
    gram = Xs.T @ Xs
    if np.linalg.matrix_rank(Xs) < Xs.shape[1]:
        raise SingularDesign(f"selected design of {Xs.shape[1]} columns is rank deficient")
    gram_inv = np.linalg.inv(gram)
    return gram_inv @ (Xs.T @ y), gram_inv


def selected_target(X, mu, selected) -> float:
    """First coordinate of the projection (X_S^T X_S)^{-1} X_S^T mu."""
    coef, _ = ols_on_selected(X, mu, selected)
    return float(coef[0])


def dt_interval(Y, X, out, c: float, alpha: float, sigma: float) -> Interval:
    """Data-thinning interval for the top lasso coefficient.

    ``out`` must come from ``select_v3`` on Y so that ``out.zeta`` is the
    thinning noise; inference uses only ``Y - zeta / c``.
    """
    y_test = np.asarray(Y, dtype=float) - out.zeta / c
    coef, gram_inv = ols_on_selected(X, y_test, out.selected)
    se = sigma * np.sqrt((1.0 + 1.0 / c**2) * gram_inv[0, 0])
    return Interval.symmetric(float(coef[0]), normal_isf(alpha / 2) * float(se), 1 - alpha, "dt")


def classical_interval_v3(Y, X, out, alpha: float, sigma: float) -> Interval:
    """Naive OLS interval on all of Y, ignoring that S was chosen from Y."""
    coef, gram_inv = ols_on_selected(X, np.asarray(Y, dtype=float), out.selected)
    se = sigma * np.sqrt(gram_inv[0, 0])
    return Interval.symmetric(float(coef[0]), normal_isf(alpha / 2) * float(se), 1 - alpha,
                              "classical")
