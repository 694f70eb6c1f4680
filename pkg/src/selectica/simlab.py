"""Simulation grids comparing selective intervals under identical selections.

A grid cell fixes (n, p, c). The design X and signal phi are drawn once per
cell; every replicate draws fresh Y and fresh selection noise. Within a
replicate every method reuses the one SelectionOutcome, so widths compare
pairwise (``gauss_thin`` runs its own Gaussian-noise selection).
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    DegenerateTruncation,
    EmptySelection,
    RootNotBracketed,
    SelectionEventViolated,
    SingularDesign,
)
from .lasso_dt import classical_interval_v3, dt_interval, selected_target
from .max_contrast import classical_interval_v2, iw_interval_v2, rcsi_interval_v2
from .selection import select_v1, select_v2, select_v3
from .stat_core import RngStream
from .winners_curse import (
    classical_interval_v1,
    fission_interval_v1,
    gauss_thin_interval_v1,
    iw_interval_v1,
)

__all__ = [
    "METHODS",
    "CSV_HEADER",
    "ExperimentConfig",
    "RunRecord",
    "CellSummary",
    "gen_design",
    "gen_signal",
    "cell_data",
    "run_replicate",
    "run_grid",
    "summarize",
    "width_ratios",
    "write_csv",
    "records_to_csv",
    "read_csv",
]

METHODS = {
    "v1": ("classical", "iw", "fission", "gauss_thin"),
    "v2": ("classical", "iw", "rcsi"),
    "v3": ("classical", "dt"),
}

CSV_HEADER = ("vignette", "method", "n", "p", "c", "alpha", "rep", "lower", "upper",
              "width", "target", "covered", "status", "seed_label")

STATUSES = ("ok", "infinite", "empty_selection", "degenerate")

_DEGENERATE = (DegenerateTruncation, RootNotBracketed, SingularDesign, SelectionEventViolated)


def _as_tuple(x, cast) -> tuple:
    if isinstance(x, (str, bytes)) or not isinstance(x, Iterable):
        return (cast(x),)
    return tuple(cast(v) for v in x)


@dataclass(frozen=True)
class ExperimentConfig:
    vignette: str
    n: tuple[int, ...] = (100,)
    p: tuple[int, ...] = (100,)
    c: tuple[float, ...] = (math.sqrt(1.5),)
    alpha: float = 0.05
    replicates: int = 250
    seed: int = 0
    methods: tuple[str, ...] | None = None
    rho: float = 0.5
    signal_mean: float = 0.0
    sparsity: float = 0.5
    sigma: float = 1.0
    cv_folds: int = 3
    mu_equals_phi: bool = False

    def __post_init__(self):
        if self.vignette not in METHODS:
            raise ValueError(f"unknown vignette {self.vignette!r}")
        object.__setattr__(self, "n", _as_tuple(self.n, int))
        object.__setattr__(self, "p", _as_tuple(self.p, int))
        object.__setattr__(self, "c", _as_tuple(self.c, float))
        methods = METHODS[self.vignette] if self.methods is None else _as_tuple(self.methods, str)
        bad = [m for m in methods if m not in METHODS[self.vignette]]
        if bad:
            raise ValueError(f"methods {bad} not available for {self.vignette}")
        object.__setattr__(self, "methods", methods)
        if not (self.n and self.p and self.c and methods):
            raise ValueError("grids must be nonempty")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")
        if self.signal_mean < 0:
            raise ValueError("signal_mean must be nonnegative")
        if any(c <= 0 for c in self.c) or min(self.n) < 1 or min(self.p) < 1:
            raise ValueError("dimensions and noise scales must be positive")

    def cells(self) -> list[tuple[int, int, float]]:
        """Grid cells (n, p, c); for v1 p is tied to n."""
        if self.vignette == "v1":
            return [(n, n, c) for n, c in product(self.n, self.c)]
        return list(product(self.n, self.p, self.c))


@dataclass(frozen=True)
class RunRecord:
    vignette: str
    method: str
    n: int
    p: int
    c: float
    alpha: float
    rep: int
    lower: float
    upper: float
    width: float
    target: float
    covered: bool
    status: str
    seed_label: str

    def row(self) -> list[str]:
        return [self.vignette, self.method, str(self.n), str(self.p), _fmt(self.c),
                _fmt(self.alpha), str(self.rep), _fmt(self.lower), _fmt(self.upper),
                _fmt(self.width), _fmt(self.target), str(int(self.covered)), self.status,
                self.seed_label]


def _fmt(x: float) -> str:
    return repr(float(x))


# -- data generation -------------------------------------------------------

def gen_design(n: int, p: int, rho: float, stream: RngStream) -> np.ndarray:
    """Equicorrelated Gaussian rows, then columns scaled to unit norm."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    gen = stream.generator
    shared = gen.standard_normal((n, 1))
    X = math.sqrt(rho) * shared + math.sqrt(1.0 - rho) * gen.standard_normal((n, p))
    norms = np.linalg.norm(X, axis=0)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        X[:, bad] = gen.standard_normal((n, int(bad.sum())))
        norms = np.linalg.norm(X, axis=0)
    return X / norms


def gen_signal(p: int, sparsity: float, exp_mean: float, stream: RngStream) -> np.ndarray:
    """Sparse coefficients: ceil(sparsity * p) zeros, the rest Exponential(exp_mean)."""
    if not 0.0 <= sparsity <= 1.0:
        raise ValueError("sparsity must lie in [0, 1]")
    if exp_mean < 0:
        raise ValueError("exp_mean must be nonnegative")
    gen = stream.generator
    phi = gen.exponential(exp_mean, p) if exp_mean > 0 else np.zeros(p)
    zeros = gen.permutation(p)[: math.ceil(sparsity * p - 1e-12)]
    phi[zeros] = 0.0
    return phi


def _cell_label(cfg: ExperimentConfig, n: int, p: int, c: float) -> str:
    return f"{cfg.vignette}/n={n}/p={p}/c={c!r}"


def cell_data(cfg: ExperimentConfig, n: int, p: int, c: float):
    """Fixed (X, mu) for a cell. X is None for v1."""
    stream = RngStream(cfg.seed, 0, "design/" + _cell_label(cfg, n, p, c))
    if cfg.vignette == "v1":
        if cfg.signal_mean > 0:
            return None, gen_signal(n, cfg.sparsity, cfg.signal_mean, stream)
        return None, np.zeros(n)
    X = gen_design(n, p, cfg.rho, stream)
    phi = gen_signal(p, cfg.sparsity, cfg.signal_mean, stream)
    if cfg.mu_equals_phi:
        if p != n:
            raise ValueError("mu = phi needs n == p")
        return X, phi
    return X, X @ phi


# -- replicates -------------------------------------------------------------

def _record(cfg, method, n, p, c, rep, label, interval=None, target=math.nan,
            status="ok") -> RunRecord:
    if interval is None:
        lo = hi = width = math.nan
        covered = False
    else:
        lo, hi, width = interval.lo, interval.hi, interval.width
        covered = interval.covers(target)
        if interval.infinite:
            status = "infinite"
    return RunRecord(cfg.vignette, method, n, p, c, cfg.alpha, rep, lo, hi, width,
                     float(target), bool(covered), status, label)


def run_replicate(cfg: ExperimentConfig, n: int, p: int, c: float, rep: int,
                  X=None, mu=None) -> list[RunRecord]:
    if mu is None:
        X, mu = cell_data(cfg, n, p, c)
    label = f"{cfg.seed}:{_cell_label(cfg, n, p, c)}/rep={rep}"
    base = RngStream(cfg.seed, rep, _cell_label(cfg, n, p, c))
    Y = mu + cfg.sigma * base.child("y").generator.standard_normal(n)
    alpha, sigma = cfg.alpha, cfg.sigma
    out_records = []

    if cfg.vignette == "v1":
        out = select_v1(Y, c, base.child("select"))
        target = float(mu[out.index])
        builders = {
            "classical": lambda: classical_interval_v1(Y, out, alpha, sigma),
            "iw": lambda: iw_interval_v1(Y, out, alpha, c, sigma),
            "fission": lambda: fission_interval_v1(Y, out, alpha, c, sigma),
        }
        for method in cfg.methods:
            if method == "gauss_thin":
                g_out, iv = gauss_thin_interval_v1(Y, c, sigma, alpha, base.child("gthin"))
                out_records.append(_record(cfg, method, n, p, c, rep, label, iv,
                                           float(mu[g_out.index])))
                continue
            out_records.append(_attempt(cfg, method, n, p, c, rep, label, builders[method],
                                        target))
        return out_records

    if cfg.vignette == "v2":
        out = select_v2(Y, X, c, base.child("select"))
        target = float(X[:, out.index] @ mu)
        builders = {
            "classical": lambda: classical_interval_v2(Y, X, out, alpha, sigma),
            "iw": lambda: iw_interval_v2(Y, X, out, alpha, c, sigma),
            "rcsi": lambda: rcsi_interval_v2(Y, X, out, alpha, sigma),
        }
        return [_attempt(cfg, m, n, p, c, rep, label, builders[m], target)
                for m in cfg.methods]

    try:
        out = select_v3(Y, X, c, base.child("select"), cfg.cv_folds, sigma=sigma)
    except EmptySelection:
        return [_record(cfg, m, n, p, c, rep, label, status="empty_selection")
                for m in cfg.methods]
    try:
        target = selected_target(X, mu, out.selected)
    except SingularDesign:
        return [_record(cfg, m, n, p, c, rep, label, status="degenerate") for m in cfg.methods]
    builders = {
        "classical": lambda: classical_interval_v3(Y, X, out, alpha, sigma),
        "dt": lambda: dt_interval(Y, X, out, c, alpha, sigma),
    }
    return [_attempt(cfg, m, n, p, c, rep, label, builders[m], target) for m in cfg.methods]


def _attempt(cfg, method, n, p, c, rep, label, build, target) -> RunRecord:
    try:
        iv = build()
    except _DEGENERATE:
        return _record(cfg, method, n, p, c, rep, label, target=target, status="degenerate")
    return _record(cfg, method, n, p, c, rep, label, iv, target)


def _run_chunk(args) -> list[RunRecord]:
    cfg, cell_index, reps = args
    n, p, c = cfg.cells()[cell_index]
    X, mu = cell_data(cfg, n, p, c)
    records = []
    for rep in reps:
        records.extend(run_replicate(cfg, n, p, c, rep, X, mu))
    return records


def _sort_key(cfg: ExperimentConfig):
    cells = {cell: k for k, cell in enumerate(cfg.cells())}
    order = {m: k for k, m in enumerate(cfg.methods)}
    return lambda r: (cells[(r.n, r.p, r.c)], r.rep, order[r.method])


def default_threads() -> int:
    env = os.environ.get("SELECTICA_THREADS")
    return max(1, int(env)) if env else 1


def run_grid(cfg: ExperimentConfig, threads: int | None = None,
             chunk: int = 25) -> list[RunRecord]:
    """Run every (cell, replicate, method); records come back in canonical order.

    Output does not depend on ``threads``: each replicate derives its own
    streams from (seed, rep, cell) and records are sorted before returning.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    tasks = []
    for k in range(len(cfg.cells())):
        for start in range(0, cfg.replicates, chunk):
            tasks.append((cfg, k, range(start, min(start + chunk, cfg.replicates))))
    if threads == 1:
        parts = map(_run_chunk, tasks)
        records = [r for part in parts for r in part]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = [r for part in pool.map(_run_chunk, tasks) for r in part]
    records.sort(key=_sort_key(cfg))
    return records


# -- aggregation and persistence --------------------------------------------

@dataclass(frozen=True)
class CellSummary:
    vignette: str
    method: str
    n: int
    p: int
    c: float
    alpha: float
    count: int
    n_ok: int
    n_infinite: int
    n_empty: int
    n_degenerate: int
    mean_width: float
    coverage: float

    @property
    def infinite_fraction(self) -> float:
        return self.n_infinite / self.count

    @property
    def has_infinite(self) -> bool:
        return self.n_infinite > 0


def summarize(records: Sequence[RunRecord]) -> list[CellSummary]:
    """Per (vignette, method, n, p, c, alpha) aggregates.

    Mean width averages finite ``ok`` records only; coverage counts ``ok``
    and ``infinite`` records (an infinite interval always covers).
    """
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.vignette, r.method, r.n, r.p, r.c, r.alpha), []).append(r)
    out = []
    for key, rs in groups.items():
        status = [r.status for r in rs]
        widths = [r.width for r in rs if r.status == "ok"]
        scored = [r.covered for r in rs if r.status in ("ok", "infinite")]
        out.append(CellSummary(
            *key,
            count=len(rs),
            n_ok=status.count("ok"),
            n_infinite=status.count("infinite"),
            n_empty=status.count("empty_selection"),
            n_degenerate=status.count("degenerate"),
            mean_width=float(np.mean(widths)) if widths else math.nan,
            coverage=float(np.mean(scored)) if scored else math.nan,
        ))
    return out


def width_ratios(summary: Sequence[CellSummary], numerator: str,
                 denominator: str) -> dict[tuple, float]:
    """Mean-width ratio per (vignette, n, p, c, alpha); +inf if the numerator has
    any infinite-width record."""
    by_key = {(s.vignette, s.method, s.n, s.p, s.c, s.alpha): s for s in summary}
    ratios = {}
    for (v, m, n, p, c, a), s in by_key.items():
        if m != numerator:
            continue
        d = by_key.get((v, denominator, n, p, c, a))
        if d is None:
            continue
        ratios[(v, n, p, c, a)] = math.inf if s.has_infinite else s.mean_width / d.mean_width
    return ratios


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.row())
    return buf.getvalue()


def write_csv(records: Iterable[RunRecord], path) -> None:
    text = records_to_csv(records)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_csv(path) -> list[RunRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            RunRecord(
                row["vignette"], row["method"], int(row["n"]), int(row["p"]),
                float(row["c"]), float(row["alpha"]), int(row["rep"]), float(row["lower"]),
                float(row["upper"]), float(row["width"]), float(row["target"]),
                row["covered"] == "1", row["status"], row["seed_label"],
            )
            for row in reader
        ]


def with_replicates(cfg: ExperimentConfig, replicates: int) -> ExperimentConfig:
    return replace(cfg, replicates=replicates)
