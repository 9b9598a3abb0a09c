"""Estimators and tests used by the verification harness.

Moment estimates carry delete-one-batch jackknife standard errors. Batches
are the residue classes of the replica id modulo 50, so any estimator is a
deterministic function of the merged :class:`EnsembleStats`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb
from typing import Callable, List, Sequence

import numpy as np
from scipy.special import erfc

from .closed_form import a_coeff, mean_exact
from .errors import DegenerateFit, InsufficientData
from .model import ModelParams
from .simulate import EnsembleStats

Sums = tuple  # (count, S1, S2, S3, S4)


@dataclass(frozen=True)
class MomentEstimate:
    order: int
    value: float
    standard_error: float
    count: int


@dataclass(frozen=True)
class Estimate:
    """A scalar estimate with its jackknife standard error."""

    value: float
    standard_error: float

    def z_against(self, target: float) -> float:
        diff = self.value - target
        if self.standard_error == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.standard_error


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value_asymptotic: float
    sample_size: int


def central_moments_from_sums(sums: Sums) -> dict:
    """Mean and population central moments 2-4 from power sums.

    With integer sums the numerators are formed exactly and only the final
    division rounds.
    """
    n, s1, s2, s3, s4 = sums
    if n <= 0:
        raise InsufficientData("empty sample")
    if all(isinstance(v, int) for v in sums):
        return {
            1: s1 / n,
            2: (n * s2 - s1 * s1) / n**2,
            3: (n * n * s3 - 3 * n * s1 * s2 + 2 * s1**3) / n**3,
            4: (n**3 * s4 - 4 * n * n * s1 * s3 + 6 * n * s1 * s1 * s2 - 3 * s1**4) / n**4,
        }
    m1 = s1 / n
    r2, r3, r4 = s2 / n, s3 / n, s4 / n
    return {
        1: m1,
        2: r2 - m1 * m1,
        3: r3 - 3 * m1 * r2 + 2 * m1**3,
        4: r4 - 4 * m1 * r3 + 6 * m1 * m1 * r2 - 3 * m1**4,
    }


def as_stats(source) -> EnsembleStats:
    if isinstance(source, EnsembleStats):
        return source
    values = np.asarray(source)
    if values.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if values.size < 2:
        raise InsufficientData("need at least two samples")
    return EnsembleStats.from_values(0, values)


def jackknife(stats: EnsembleStats, fn: Callable[[Sums], float]) -> Estimate:
    """Delete-one-batch jackknife of ``fn`` evaluated on power sums."""
    total = (stats.count,) + tuple(stats.power_sums)
    value = fn(total)
    loo = []
    for b in stats.batches:
        if b[0] == 0 or b[0] == stats.count:
            continue
        loo.append(fn(tuple(t - x for t, x in zip(total, b))))
    k = len(loo)
    if k < 2:
        return Estimate(float(value), float("nan"))
    mean_loo = math.fsum(loo) / k
    var = (k - 1) / k * math.fsum((v - mean_loo) ** 2 for v in loo)
    return Estimate(float(value), math.sqrt(var))


def empirical_moments(source, orders: Sequence[int] = (1, 2, 3, 4)) -> List[MomentEstimate]:
    """Raw moments ``E[X^k]`` with jackknife standard errors."""
    stats = as_stats(source)
    if stats.count < 2:
        raise InsufficientData("need at least two samples")
    out = []
    for k in orders:
        if not 1 <= k <= 4:
            raise ValueError("orders must be within 1..4")
        est = jackknife(stats, lambda t, k=k: t[k] / t[0])
        out.append(MomentEstimate(k, est.value, est.standard_error, stats.count))
    return out


def affine_raw_moment(sums: Sums, order: int, shift: float, scale: float) -> float:
    """``E[((X - shift) / scale)^order]`` computed through central moments."""
    cm = central_moments_from_sums(sums)
    d = (sums[1] - sums[0] * shift) / sums[0] / scale
    central = {0: 1.0, 1: 0.0, 2: cm[2], 3: cm[3], 4: cm[4]}
    return math.fsum(comb(order, j) * central[j] / scale**j * d ** (order - j) for j in range(order + 1))


def variance_estimate(stats: EnsembleStats, scale: float = 1.0) -> Estimate:
    """Population variance of ``X / scale``."""
    return jackknife(stats, lambda t: central_moments_from_sums(t)[2] / scale**2)


def skewness_estimate(stats: EnsembleStats) -> Estimate:
    def fn(t):
        cm = central_moments_from_sums(t)
        return cm[3] / cm[2] ** 1.5 if cm[2] > 0 else 0.0

    return jackknife(stats, fn)


def excess_kurtosis_estimate(stats: EnsembleStats) -> Estimate:
    def fn(t):
        cm = central_moments_from_sums(t)
        return cm[4] / cm[2] ** 2 - 3.0 if cm[2] > 0 else 0.0

    return jackknife(stats, fn)


def standard_normal_cdf(x):
    """Standard normal CDF as ``erfc(-x / sqrt 2) / 2``.

    ``erfc`` is the Cephes implementation (relative error below 1e-15 on its
    whole range), so the absolute error of the CDF stays below 1e-15; the
    complement form keeps the lower tail accurate instead of rounding to 0.
    """
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(x) == 0 else out


def kolmogorov_survival(lam: float) -> float:
    """``Q(λ) = 2 Σ_{k>=1} (-1)^(k-1) exp(-2 k² λ²)``; 1 where the series stalls."""
    if lam < 0.18:
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term <= 1e-16 * abs(total):
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def ks_test(samples, reference_cdf: Callable = standard_normal_cdf, min_size: int = 100) -> KsResult:
    """One-sample Kolmogorov-Smirnov test with the Stephens-corrected p-value."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < min_size:
        raise InsufficientData(f"KS test needs at least {min_size} samples, got {n}")
    f = np.asarray(reference_cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = max(float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    rn = math.sqrt(n)
    lam = d * (rn + 0.12 + 0.11 / rn)
    return KsResult(d, kolmogorov_survival(lam), n)


def growth_exponent(checkpoints: Sequence[float], variances: Sequence[float]):
    """Least-squares slope of ``log Var`` against ``log n`` on the upper half.

    Returns ``(slope, intercept, r2)``.
    """
    n = np.asarray(checkpoints, dtype=float)
    v = np.asarray(variances, dtype=float)
    if n.size != v.size:
        raise ValueError("checkpoints and variances differ in length")
    if n.size < 4:
        raise DegenerateFit("need at least 4 checkpoints")
    if np.any(~(v > 0)):
        raise DegenerateFit("variances must be positive")
    lo = n.size // 2
    lx, ly = np.log(n[lo:]), np.log(v[lo:])
    xm, ym = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - xm) ** 2))
    slope = float(np.sum((lx - xm) * (ly - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = ly - (intercept + slope * lx)
    ss_tot = float(np.sum((ly - ym) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return slope, intercept, r2


@dataclass(frozen=True)
class MartingaleBin:
    lo: int
    hi: int
    count: int
    mean: float
    standard_error: float

    @property
    def z(self) -> float:
        if self.standard_error == 0:
            return 0.0 if self.mean == 0 else math.inf
        return self.mean / self.standard_error


@dataclass(frozen=True)
class MartingaleReport:
    step: int
    bins: List[MartingaleBin] = field(default_factory=list)
    threshold: float = 4.0

    @property
    def flagged(self) -> List[MartingaleBin]:
        return [b for b in self.bins if abs(b.z) > self.threshold]

    @property
    def passed(self) -> bool:
        return not self.flagged


def _equal_count_groups(values: np.ndarray, nbins: int):
    uniq, counts = np.unique(values, return_counts=True)
    target = values.size / nbins
    groups, start, acc = [], 0, 0
    for i, c in enumerate(counts):
        acc += c
        if acc >= target:
            groups.append((uniq[start], uniq[i]))
            start, acc = i + 1, 0
    if start < uniq.size:
        if groups and acc < target / 2:
            groups[-1] = (groups[-1][0], uniq[-1])
        else:
            groups.append((uniq[start], uniq[-1]))
    return groups


def martingale_check(
    before,
    after,
    step: int,
    params: ModelParams,
    nbins: int = 20,
    threshold: float = 4.0,
    min_pairs: int = 10_000,
) -> MartingaleReport:
    """Check that ``M_j - M_{j-1}`` has conditional mean zero given ``X_{j-1}``.

    ``before``/``after`` hold ``X_{j-1}`` and ``X_j`` for the same paths;
    ``step`` is ``j >= 2``. Paths are grouped into equal-count bins of
    ``X_{j-1}`` and a bin is flagged when its mean increment is more than
    ``threshold`` standard errors from zero.
    """
    before = np.asarray(before, dtype=np.int64)
    after = np.asarray(after, dtype=np.int64)
    if before.size < min_pairs:
        raise InsufficientData(f"need at least {min_pairs} pairs, got {before.size}")
    if step < 2:
        raise ValueError("step must be >= 2")
    j = step
    alpha = params.alpha
    a_prev = float(a_coeff(j - 1, alpha))
    a_j = float(a_coeff(j, alpha))
    m_prev = (before - mean_exact(params, j - 1)) / a_prev
    m_now = (after - mean_exact(params, j)) / a_j
    d = m_now - m_prev

    bins = []
    for lo, hi in _equal_count_groups(before, nbins):
        sel = (before >= lo) & (before <= hi)
        db = d[sel]
        cnt = int(db.size)
        se = float(db.std(ddof=1) / math.sqrt(cnt)) if cnt > 1 else 0.0
        bins.append(MartingaleBin(int(lo), int(hi), cnt, float(db.mean()), se))
    return MartingaleReport(step, bins, threshold)
