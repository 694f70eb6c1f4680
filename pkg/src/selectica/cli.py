"""Command-line entry point: ``selectica {v1,v2,v3,oracle,demo} ...``."""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from .exceptions import EmptySelection, SelecticaError
from .simlab import METHODS, ExperimentConfig, cell_data, run_grid, summarize, write_csv
from .stat_core import RngStream

__all__ = ["main", "build_parser"]

DEFAULT_C = {"v1": math.sqrt(1.5), "v2": math.sqrt(1.5), "v3": 1.0}
DEFAULT_SIGNAL = {"v1": 0.0, "v2": 50 / 7, "v3": 50 / 7}


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _names(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _add_noise_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--c-grid", type=_floats, help="noise scale(s) c, comma separated")
    g.add_argument("--noise-var", type=_floats,
                   help="noise variance(s): 2c^2 for v1/v2 (Laplace), c^2 for v3")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=_ints, default=(100,), help="sample size(s)")
    p.add_argument("--p", type=_ints, default=None, help="feature count(s); v1 ignores it")
    _add_noise_flags(p)
    p.add_argument("--signal-mean", type=float, default=None,
                   help="mean of the exponential nonzero signal; 0 for a null signal")
    p.add_argument("--sparsity", type=float, default=0.5, help="fraction of zero coefficients")
    p.add_argument("--rho", type=float, default=0.5, help="column correlation of the design")
    p.add_argument("--sigma", type=float, default=1.0, help="noise standard deviation")
    p.add_argument("--mu-equals-phi", action="store_true",
                   help="v2 only: use mu = phi instead of mu = X phi")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selectica",
        description="Selective confidence intervals: simulation grids, oracle curves, demos.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for v, what in (("v1", "winner's curse"), ("v2", "maximal contrast"),
                    ("v3", "lasso coefficient")):
        p = sub.add_parser(v, help=f"simulation grid for the {what} problem")
        _add_model_flags(p)
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--reps", type=int, default=250, help="replicates per grid cell")
        p.add_argument("--methods", type=_names, default=None,
                       help=f"comma separated subset of {','.join(METHODS[v])}")
        p.add_argument("--cv-folds", type=int, default=3, help="v3 only: CV folds")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: $SELECTICA_THREADS or 1)")
        p.add_argument("--out", required=True, help="CSV output path")

    p = sub.add_parser("oracle", help="Monte-Carlo oracle infer-and-widen half-widths")
    p.add_argument("--vignette", choices=("v1", "v2", "v3"), required=True)
    _add_model_flags(p)
    p.add_argument("--coverage-grid", type=_floats, default=(0.8, 0.85, 0.9, 0.95),
                   help="coverage levels in (0, 1)")
    p.add_argument("--m", type=int, default=10_000, help="Monte-Carlo replicates (>= 1000)")
    p.add_argument("--cv-folds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV output path")

    p = sub.add_parser("demo", help="print one worked replicate")
    p.add_argument("--vignette", choices=("v1", "v2", "v3"), required=True)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _c_values(args, vignette: str) -> tuple[float, ...]:
    if args.c_grid is not None:
        cs = args.c_grid
    elif args.noise_var is not None:
        if any(v <= 0 for v in args.noise_var):
            raise UsageError("--noise-var values must be positive")
        div = 1.0 if vignette == "v3" else 2.0
        cs = tuple(math.sqrt(v / div) for v in args.noise_var)
    else:
        cs = (DEFAULT_C[vignette],)
    if any(not c > 0 for c in cs):
        raise UsageError("noise scales must be positive")
    return cs


def _config(args, vignette: str, replicates: int, methods=None) -> ExperimentConfig:
    p = args.p if args.p is not None else args.n
    signal = DEFAULT_SIGNAL[vignette] if args.signal_mean is None else args.signal_mean
    try:
        return ExperimentConfig(
            vignette=vignette, n=args.n, p=p, c=_c_values(args, vignette),
            alpha=getattr(args, "alpha", 0.05), replicates=replicates, seed=args.seed,
            methods=methods, rho=args.rho, signal_mean=signal, sparsity=args.sparsity,
            sigma=args.sigma, cv_folds=args.cv_folds, mu_equals_phi=args.mu_equals_phi,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _run_grid_command(args) -> int:
    cfg = _config(args, args.command, args.reps, args.methods)
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be at least 1")
    records = run_grid(cfg, threads=args.threads)
    _write(args.out, lambda: write_csv(records, args.out))
    for s in summarize(records):
        print(f"{s.method:<10} n={s.n:<5} p={s.p:<5} c={s.c:<10.6g} coverage={s.coverage:.3f} "
              f"mean_width={s.mean_width:.4g} infinite={s.n_infinite} "
              f"empty={s.n_empty} degenerate={s.n_degenerate}")
    return 0


def _write(path: str, action) -> None:
    try:
        action()
    except OSError as exc:
        raise SelecticaError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _run_oracle(args) -> int:
    from .oracle import OracleSpec, oracle_coverage_check, oracle_halfwidth

    cfg = _config(args, args.vignette, 1)
    if args.m < 1000:
        raise UsageError("--m must be at least 1000")
    if not all(0 < a < 1 for a in args.coverage_grid):
        raise UsageError("--coverage-grid levels must lie in (0, 1)")
    rows = []
    for n, p, c in cfg.cells():
        X, mu = cell_data(cfg, n, p, c)
        spec = OracleSpec(args.vignette, mu, c, X=X, sigma=cfg.sigma, replicates=args.m,
                          levels=args.coverage_grid, cv_folds=cfg.cv_folds)
        label = f"oracle/{args.vignette}/n={n}/p={p}/c={c!r}"
        curve = oracle_halfwidth(spec, RngStream(args.seed, 0, label))
        cover = oracle_coverage_check(spec, curve, RngStream(args.seed, 1, label))
        for a in spec.levels:
            rows.append([args.vignette, n, p, repr(c), repr(a), repr(curve[a]),
                         repr(2 * curve[a]), repr(cover[a]), curve.used, curve.skipped])
            print(f"n={n} p={p} c={c:.6g} level={a:.4g} width={2 * curve[a]:.4f} "
                  f"fresh_coverage={cover[a]:.4f}")

    def dump():
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["vignette", "n", "p", "c", "level", "halfwidth", "width",
                        "coverage", "used", "skipped"])
            w.writerows(rows)

    _write(args.out, dump)
    return 0


def _fmt_vec(v, k: int = 6) -> str:
    v = np.asarray(v, dtype=float)
    head = ", ".join(f"{x:.4f}" for x in v[:k])
    return f"[{head}{', ...' if v.size > k else ''}]"


def _show_interval(name: str, iv) -> None:
    print(f"  {name:<11} [{iv.lo:.4f}, {iv.hi:.4f}]  width {iv.width:.4f}")


def _run_demo(args) -> int:
    from .lasso_dt import classical_interval_v3, dt_interval, selected_target
    from .max_contrast import (classical_interval_v2, iw_interval_v2, polyhedral_event,
                               rcsi_interval_v2, truncation_limits)
    from .selection import select_v1, select_v2, select_v3
    from .winners_curse import (classical_interval_v1, fission_interval_v1,
                                gauss_thin_interval_v1, iw_interval_v1)

    v, alpha, sigma = args.vignette, 0.05, 1.0
    stream = RngStream(args.seed, 0, f"demo/{v}")
    if v == "v1":
        n, c = 20, DEFAULT_C[v]
        mu = np.zeros(n)
        Y = mu + stream.child("y").generator.standard_normal(n)
        out = select_v1(Y, c, stream.child("select"))
        i = out.index
        print(f"winner's curse demo: n={n}, mu=0, sigma={sigma}, Laplace scale c={c:.4f}")
        print(f"Y = {_fmt_vec(Y)}")
        print(f"selected i={i}: Y_i={Y[i]:.4f}, zeta_i={out.zeta[i]:.4f}, "
              f"delta_i={int(out.delta[i])}, target mu_i={mu[i]:.4f}")
        print("intervals (95%):")
        _show_interval("classical", classical_interval_v1(Y, out, alpha, sigma))
        _show_interval("iw", iw_interval_v1(Y, out, alpha, c, sigma))
        _show_interval("fission", fission_interval_v1(Y, out, alpha, c, sigma))
        g_out, g_iv = gauss_thin_interval_v1(Y, c, sigma, alpha, stream.child("gthin"))
        print(f"  gaussian thinning selects i={g_out.index}")
        _show_interval("gauss_thin", g_iv)
        return 0

    cfg = ExperimentConfig(v, n=30 if v == "v2" else 60, p=30 if v == "v2" else 60,
                           c=DEFAULT_C[v], signal_mean=DEFAULT_SIGNAL[v], seed=args.seed)
    n, p, c = cfg.cells()[0]
    X, mu = cell_data(cfg, n, p, c)
    Y = mu + stream.child("y").generator.standard_normal(n)
    if v == "v2":
        out = select_v2(Y, X, c, stream.child("select"))
        j = out.index
        ev = polyhedral_event(Y, X, out)
        lim = truncation_limits(ev, X, Y)
        print(f"maximal contrast demo: n=p={n}, rho={cfg.rho}, Laplace scale c={c:.4f}")
        print(f"selected column j={j}, delta={out.delta}, X_j'Y={X[:, j] @ Y:.4f}, "
              f"target X_j'mu={X[:, j] @ mu:.4f}")
        print(f"conditioning record: zeta_j={out.zeta[j]:.4f}, |W|={np.linalg.norm(ev.W):.4f}, "
              f"constraints={ev.A.shape[0]}, truncation=[{lim.v_min:.4f}, {lim.v_max:.4f}]")
        print("intervals (95%):")
        _show_interval("classical", classical_interval_v2(Y, X, out, alpha, sigma))
        _show_interval("iw", iw_interval_v2(Y, X, out, alpha, c, sigma))
        _show_interval("rcsi", rcsi_interval_v2(Y, X, out, alpha, sigma))
        return 0

    print(f"lasso demo: n=p={n}, rho={cfg.rho}, thinning scale c={c:.4f}")
    try:
        out = select_v3(Y, X, c, stream.child("select"), cfg.cv_folds, sigma=sigma)
    except EmptySelection as exc:
        print(f"lasso selected nothing at lam={exc.outcome.lam:.4f}")
        return 0
    print(f"CV lambda={out.lam:.4f}; selected {len(out.selected)} features, "
          f"leading feature {out.index}")
    print(f"conditioning record: zeta={_fmt_vec(out.zeta)}")
    print(f"target (projected coefficient)={selected_target(X, mu, out.selected):.4f}")
    print("intervals (95%):")
    _show_interval("classical", classical_interval_v3(Y, X, out, alpha, sigma))
    _show_interval("dt", dt_interval(Y, X, out, c, alpha, sigma))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command in METHODS:
            return _run_grid_command(args)
        if args.command == "oracle":
            return _run_oracle(args)
        return _run_demo(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"selectica: error: {exc}", file=sys.stderr)
        return 2
    except (SelecticaError, ArithmeticError, ValueError, OSError) as exc:
        print(f"selectica: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
