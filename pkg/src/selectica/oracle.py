"""Monte-Carlo oracle for infer-and-widen intervals.

The oracle interval is the narrowest interval symmetric about the plug-in
midpoint that reaches a target unconditional coverage. Building it needs
the true mean, so it is a benchmark rather than a usable method: it shows
how narrow any infer-and-widen interval could possibly be.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptySelection, SingularDesign
from .lasso_dt import ols_on_selected
from .selection import check_unit_columns, select_v3
from .stat_core import RngStream, sample_laplace

__all__ = [
    "OracleSpec",
    "OracleCurve",
    "oracle_errors",
    "oracle_halfwidth",
    "oracle_coverage_check",
    "order_statistic_quantile",
]

MIN_REPLICATES = 1000
BLOCK = 4096


@dataclass(frozen=True)
class OracleSpec:
    """Data model and Monte-Carlo budget for one oracle curve.

    ``mu`` is the mean of Y (length n). ``X`` is required for v2 and v3 and
    must have unit-norm columns. ``c`` is the Laplace scale for v1/v2 and
    the thinning scale for v3.
    """

    vignette: str
    mu: np.ndarray
    c: float
    X: np.ndarray | None = None
    sigma: float = 1.0
    replicates: int = 10_000
    levels: tuple[float, ...] = (0.95,)
    cv_folds: int = 3

    def __post_init__(self):
        if self.vignette not in ("v1", "v2", "v3"):
            raise ValueError(f"unknown vignette {self.vignette!r}")
        mu = np.asarray(self.mu, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "levels", tuple(float(a) for a in self.levels))
        if self.replicates < MIN_REPLICATES:
            raise ValueError(f"need at least {MIN_REPLICATES} replicates")
        if not self.levels or not all(0.0 < a < 1.0 for a in self.levels):
            raise ValueError("levels must be a nonempty subset of (0, 1)")
        if not self.c > 0 or not self.sigma > 0:
            raise ValueError("c and sigma must be positive")
        if self.vignette != "v1":
            if self.X is None:
                raise ValueError(f"{self.vignette} needs a design matrix")
            X = np.asarray(self.X, dtype=float)
            check_unit_columns(X)
            if X.shape[0] != mu.size:
                raise ValueError("mu and X disagree on n")
            object.__setattr__(self, "X", X)


@dataclass(frozen=True)
class OracleCurve(Mapping):
    """Half-width per coverage level, plus Monte-Carlo bookkeeping."""

    halfwidths: dict = field(default_factory=dict)
    used: int = 0
    skipped: int = 0

    def __getitem__(self, level):
        return self.halfwidths[level]

    def __iter__(self):
        return iter(self.halfwidths)

    def __len__(self):
        return len(self.halfwidths)


def _errors_v1(spec: OracleSpec, stream: RngStream, m: int) -> np.ndarray:
    n = spec.mu.size
    gen = stream.generator
    eps = spec.sigma * gen.standard_normal((m, n))
    zeta = sample_laplace(stream, m * n, spec.c).reshape(m, n)
    sel = np.argmax(spec.mu + eps + zeta, axis=1)
    return np.abs(eps[np.arange(m), sel])


def _errors_v2(spec: OracleSpec, stream: RngStream, m: int) -> np.ndarray:
    X = spec.X
    p = X.shape[1]
    gen = stream.generator
    eps = spec.sigma * gen.standard_normal((m, X.shape[0]))
    zeta = sample_laplace(stream, m * p, spec.c).reshape(m, p)
    noise_stat = eps @ X
    sel = np.argmax(np.abs(spec.mu @ X + noise_stat + zeta), axis=1)
    return np.abs(noise_stat[np.arange(m), sel])


def _error_v3(spec: OracleSpec, stream: RngStream) -> float | None:
    X, mu = spec.X, spec.mu
    Y = mu + spec.sigma * stream.child("y").generator.standard_normal(mu.size)
    try:
        out = select_v3(Y, X, spec.c, stream.child("select"), spec.cv_folds, sigma=spec.sigma)
        # Same projection applied to Y and mu, so the error is the projected noise.
        coef, _ = ols_on_selected(X, Y - mu, out.selected)
    except (EmptySelection, SingularDesign):
        return None
    return abs(float(coef[0]))


def oracle_errors(spec: OracleSpec, stream: RngStream, replicates: int | None = None):
    """|midpoint - target| for each replicate, and the number of skipped ones.

    v1 and v2 run in vectorised blocks, each with its own child stream, so
    results depend only on (spec, stream). v3 replicates that select nothing
    (or a rank-deficient set) are skipped.
    """
    m_total = spec.replicates if replicates is None else int(replicates)
    if spec.vignette == "v3":
        errs, skipped = [], 0
        for m in range(m_total):
            e = _error_v3(spec, stream.child(f"rep/{m}"))
            if e is None:
                skipped += 1
            else:
                errs.append(e)
        return np.asarray(errs), skipped
    block_fn = _errors_v1 if spec.vignette == "v1" else _errors_v2
    parts = []
    for k, start in enumerate(range(0, m_total, BLOCK)):
        size = min(BLOCK, m_total - start)
        parts.append(block_fn(spec, stream.child(f"block/{k}"), size))
    return np.concatenate(parts), 0


def order_statistic_quantile(values, level: float) -> float:
    """Order statistic of rank ceil(level * M) among M values (1-based rank)."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("no values")
    # The small slack keeps e.g. 0.95 * 1000 from rounding up to rank 951.
    rank = max(1, math.ceil(level * v.size - 1e-9))
    return float(v[rank - 1])


def oracle_halfwidth(spec: OracleSpec, stream: RngStream) -> OracleCurve:
    """Empirical quantiles of the plug-in error at each coverage level."""
    errs, skipped = oracle_errors(spec, stream)
    if errs.size == 0:
        raise EmptySelection("every replicate had an empty selection")
    return OracleCurve(
        halfwidths={a: order_statistic_quantile(errs, a) for a in spec.levels},
        used=int(errs.size),
        skipped=skipped,
    )


def oracle_coverage_check(spec: OracleSpec, halfwidths: Mapping,
                          stream: RngStream) -> dict[float, float]:
    """Coverage of mid +/- halfwidth on fresh replicates drawn from ``stream``.

    Use a stream distinct from the one that produced ``halfwidths``.
    """
    errs, _ = oracle_errors(spec, stream)
    if errs.size == 0:
        raise EmptySelection("every replicate had an empty selection")
    return {a: float(np.mean(errs <= h)) for a, h in halfwidths.items()}
