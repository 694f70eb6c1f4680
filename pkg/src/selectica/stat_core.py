"""Gaussian, Laplace and truncated-Gaussian primitives.

Everything that builds an interval in this package goes through the
functions here: tail-stable normal CDF/quantiles, the truncated normal CDF
evaluated in log space, and the monotone root solver that inverts it in the
mean parameter.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .exceptions import DegenerateTruncation, InfiniteQuantile, RootNotBracketed

__all__ = [
    "MASS_FLOOR",
    "RealInterval",
    "TruncatedGaussian",
    "RngStream",
    "normal_cdf",
    "normal_sf",
    "normal_logcdf",
    "normal_quantile",
    "normal_isf",
    "trunc_cdf",
    "trunc_log_mass",
    "solve_mean",
    "sample_normal",
    "sample_laplace",
]

MASS_FLOOR = 1e-280
QUANTILE_FLOOR = 1e-300

_SQRT2 = math.sqrt(2.0)
_INF = math.inf


@dataclass(frozen=True)
class RealInterval:
    """Closed interval on the extended real line."""

    lo: float = -_INF
    hi: float = _INF

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def real_line(cls) -> "RealInterval":
        return cls(-_INF, _INF)

    @property
    def is_real_line(self) -> bool:
        return self.lo == -_INF and self.hi == _INF

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class TruncatedGaussian:
    """N(mean, sd**2) restricted to ``support``."""

    mean: float
    sd: float
    support: RealInterval = field(default_factory=RealInterval.real_line)

    def __post_init__(self):
        if not self.sd > 0 or not math.isfinite(self.sd):
            raise ValueError(f"sd must be positive and finite, got {self.sd}")
        if not math.isfinite(self.mean):
            raise ValueError(f"mean must be finite, got {self.mean}")

    def standardize(self, x: float) -> float:
        return (x - self.mean) / self.sd

    def sample(self, stream: "RngStream", n: int, batch: int = 100_000) -> np.ndarray:
        """Exact draws by rejection, with a proposal chosen for the support.

        A plain normal proposal serves wide supports around the mean; tails use
        a translated exponential and narrow windows a uniform proposal, so the
        acceptance rate stays bounded away from zero even far in a tail.
        """
        a, b = self.standardize(self.support.lo), self.standardize(self.support.hi)
        mirrored = b < 0.0
        if mirrored:
            a, b = -b, -a
        gen = stream.generator
        out: list[np.ndarray] = []
        have = 0
        while have < n:
            z = _tail_proposals(gen, a, b, batch) if a > 0.0 else _central_proposals(gen, a, b, batch)
            out.append(z)
            have += z.size
        z = np.concatenate(out)[:n]
        if mirrored:
            z = -z
        return self.mean + self.sd * z


def _central_proposals(gen, a: float, b: float, size: int) -> np.ndarray:
    # a <= 0 <= b.
    if b - a >= math.sqrt(2.0 * math.pi):
        z = gen.standard_normal(size)
        return z[(z >= a) & (z <= b)]
    z = gen.uniform(a, b, size)
    return z[gen.random(size) <= np.exp(-0.5 * z * z)]


def _tail_proposals(gen, a: float, b: float, size: int) -> np.ndarray:
    # 0 < a < b.
    rate = 0.5 * (a + math.sqrt(a * a + 4.0))
    exp_cutoff = a + 2.0 / (a + math.sqrt(a * a + 4.0)) * math.exp(
        0.25 * (a * a - a * math.sqrt(a * a + 4.0)) + 0.5)
    if b >= exp_cutoff:
        z = a + gen.exponential(1.0 / rate, size)
        keep = (gen.random(size) <= np.exp(-0.5 * (z - rate) ** 2)) & (z <= b)
        return z[keep]
    z = gen.uniform(a, b, size)
    return z[gen.random(size) <= np.exp(0.5 * (a * a - z * z))]


class RngStream:
    """Deterministic generator keyed by (master seed, replicate index, label).

    Streams with the same key replay the same draws no matter when or in
    which process they are created.
    """

    __slots__ = ("seed", "index", "label", "generator")

    def __init__(self, seed: int, index: int = 0, label: str = ""):
        if seed < 0 or index < 0:
            raise ValueError("seed and index must be nonnegative")
        self.seed = int(seed)
        self.index = int(index)
        self.label = str(label)
        key = (self.index, zlib.crc32(self.label.encode("utf-8")))
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, label: str) -> "RngStream":
        return RngStream(self.seed, self.index, f"{self.label}/{label}")

    def __repr__(self):
        return f"RngStream(seed={self.seed}, index={self.index}, label={self.label!r})"


# -- standard normal ---------------------------------------------------------

def normal_cdf(x):
    """Standard normal CDF (erfc-based, accurate deep into the lower tail)."""
    return special.ndtr(x)


def normal_sf(x):
    return special.ndtr(np.negative(x))


def normal_logcdf(x):
    return special.log_ndtr(x)


def _check_prob(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if p < QUANTILE_FLOOR:
        raise InfiniteQuantile(f"quantile of p={p:.3g} is not representable")
    return p


def normal_quantile(p: float) -> float:
    """Lower quantile z with Phi(z) = p."""
    return float(special.ndtri(_check_prob(p)))


def normal_isf(q: float) -> float:
    """Upper quantile z_{1-q}, computed without forming 1 - q."""
    return -float(special.ndtri(_check_prob(q)))


# -- truncated normal --------------------------------------------------------

def _std_kernel(a: float, b: float, z: float) -> tuple[float, float]:
    """CDF at z and log support mass of N(0,1) truncated to [a, b].

    Works on the side of the support away from the mode so that the ratio
    stays accurate when the whole support sits in a far tail.
    """
    if a >= 0.0:
        # Right tail: Phi-bar(t) = exp(ls(t)).
        la = special.log_ndtr(-a)
        lb = special.log_ndtr(-b)
        lz = special.log_ndtr(-z)
        den = -math.expm1(lb - la)
        num = -math.expm1(lz - la)
        log_mass = la + math.log(den) if den > 0.0 else -_INF
    elif b <= 0.0:
        la = special.log_ndtr(a)
        lb = special.log_ndtr(b)
        lz = special.log_ndtr(z)
        den = -math.expm1(la - lb)
        num = math.exp(lz - lb) * -math.expm1(la - lz) if lz > -_INF else 0.0
        log_mass = lb + math.log(den) if den > 0.0 else -_INF
    else:
        ea = math.erf(a / _SQRT2)
        den = math.erf(b / _SQRT2) - ea
        num = math.erf(z / _SQRT2) - ea
        log_mass = math.log(den / 2.0) if den > 0.0 else -_INF
    if not den > 0.0:
        return math.nan, -_INF
    return min(max(num / den, 0.0), 1.0), float(log_mass)


def _standardized(mean: float, sd: float, support: RealInterval, x: float):
    xc = support.clamp(x)
    return (support.lo - mean) / sd, (support.hi - mean) / sd, (xc - mean) / sd


def trunc_log_mass(d: TruncatedGaussian) -> float:
    """log P(lo <= N(mean, sd**2) <= hi)."""
    a, b, _ = _standardized(d.mean, d.sd, d.support, d.support.clamp(d.mean))
    return _std_kernel(a, b, a)[1]


def trunc_cdf(d: TruncatedGaussian, x: float, mass_floor: float = MASS_FLOOR) -> float:
    """CDF of the truncated Gaussian ``d`` at ``x``.

    Raises DegenerateTruncation when the support mass is below
    ``mass_floor``. Pass ``mass_floor=0`` to accept any support whose mass
    is still resolvable in log space.
    """
    a, b, z = _standardized(d.mean, d.sd, d.support, float(x))
    value, log_mass = _std_kernel(a, b, z)
    floor = math.log(mass_floor) if mass_floor > 0 else -_INF
    if not log_mass > floor or math.isnan(value):
        raise DegenerateTruncation(
            f"support [{d.support.lo}, {d.support.hi}] has log-mass {log_mass:.4g} "
            f"under N({d.mean}, {d.sd}^2)"
        )
    return value


def solve_mean(
    x: float,
    sd: float,
    support: RealInterval,
    target: float,
    *,
    tol: float = 1e-9,
    max_iter: int = 200,
    max_span: float = 1e8,
) -> float:
    """Mean m with trunc_cdf((m, sd, support), x) == target.

    The truncated CDF at fixed x is strictly decreasing in the mean, so the
    root is bracketed by doubling a window around x and then bisected.
    The search evaluates means whose support mass is far below MASS_FLOOR;
    the log-space pivot stays accurate there, so only supports with no
    resolvable mass are treated as degenerate.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target must lie in (0, 1), got {target}")
    if not sd > 0:
        raise ValueError("sd must be positive")
    x = float(x)
    slack = 1e-12 * max(1.0, abs(x))
    if not (support.lo - slack <= x <= support.hi + slack):
        raise ValueError(f"x={x} lies outside the support [{support.lo}, {support.hi}]")
    if support.lo == support.hi:
        raise DegenerateTruncation("support is a single point")

    lo_s, hi_s = support.lo, support.hi
    xc = support.clamp(x)

    def pivot(m: float) -> float:
        value, _ = _std_kernel((lo_s - m) / sd, (hi_s - m) / sd, (xc - m) / sd)
        return value

    def failed(f: float) -> bool:
        return math.isnan(f)

    cap = max_span * sd
    half = sd
    m_lo, m_hi = x - half, x + half
    f_lo, f_hi = pivot(m_lo), pivot(m_hi)
    while failed(f_lo) or f_lo < target:
        half *= 2.0
        if half > cap:
            raise RootNotBracketed(f"no mean below x={x} reaches CDF {target}")
        m_lo = x - half
        f_lo = pivot(m_lo)
    half = sd
    while failed(f_hi) or f_hi > target:
        half *= 2.0
        if half > cap:
            raise RootNotBracketed(f"no mean above x={x} reaches CDF {target}")
        m_hi = x + half
        f_hi = pivot(m_hi)

    if abs(f_lo - target) <= tol:
        return m_lo
    if abs(f_hi - target) <= tol:
        return m_hi
    best_m, best_err = m_lo, abs(f_lo - target)
    for _ in range(max_iter):
        mid = 0.5 * (m_lo + m_hi)
        f = pivot(mid)
        if failed(f):
            raise DegenerateTruncation(f"pivot undefined at mean {mid}")
        err = abs(f - target)
        if err < best_err:
            best_m, best_err = mid, err
        if err <= tol or mid in (m_lo, m_hi):
            break
        if f > target:
            m_lo = mid
        else:
            m_hi = mid
    return best_m


# -- sampling ----------------------------------------------------------------

def sample_normal(stream: RngStream, n: int, sd: float = 1.0) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    if not sd > 0:
        raise ValueError("sd must be positive")
    return sd * stream.generator.standard_normal(int(n))


def sample_laplace(stream: RngStream, n: int, scale: float = 1.0) -> np.ndarray:
    """Laplace(scale) draws by inverting the CDF of a uniform."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not scale > 0:
        raise ValueError("scale must be positive")
    u = stream.generator.random(int(n)) - 0.5
    out = -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    bad = ~np.isfinite(out)
    while bad.any():
        # u == -0.5 exactly; probability 2**-53 per draw.
        u = stream.generator.random(int(bad.sum())) - 0.5
        out[bad] = -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
        bad = ~np.isfinite(out)
    return out
