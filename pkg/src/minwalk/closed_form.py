"""Exact and asymptotic formulas for the walk.

All gamma ratios go through :func:`minwalk.gammafn.log_gamma_ratio`;
``Γ(n + 4p)`` alone overflows a double near ``n = 170``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateAlpha, HypothesisViolation, OutOfRange, SingularCase, UnsupportedAlpha
from .gammafn import log_gamma_ratio
from .model import ModelParams, validate

GAMMA_SUM_POLE_TOL = 1e-9
# p - q is rarely exact in binary (0.7 - 0.2 != 0.5); regime boundaries use this slack
ALPHA_TOL = 1e-12


def is_marginal(alpha: float) -> bool:
    return abs(alpha - 0.5) <= ALPHA_TOL


def is_degenerate(alpha: float) -> bool:
    return alpha >= 1.0 - ALPHA_TOL


class Regime(str, enum.Enum):
    DIFFUSIVE = "diffusive"
    MARGINAL = "marginal"
    SUPERDIFFUSIVE = "superdiffusive"
    OPEN = "open"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class LimitMoments:
    m1: float
    m2: float
    m3: float
    m4: float

    @property
    def skewness(self) -> float:
        return self.m3 / self.m2**1.5

    @property
    def kurtosis(self) -> float:
        return self.m4 / self.m2**2

    def as_tuple(self):
        return (self.m1, self.m2, self.m3, self.m4)


@dataclass(frozen=True)
class ScalingLaw:
    """How to center and scale ``X_n`` for the applicable limit theorem.

    ``variance_constant`` is the limit variance (``None`` where no formula
    exists); ``limit_moments`` is only set for the ``q = 0`` superdiffusive
    limit.
    """

    centering: Callable[[int], float]
    normalizer: Callable[[int], float]
    variance_constant: Optional[float]
    regime: Regime
    asymptotic_normalizer: Optional[Callable[[int], float]] = None
    limit_moments: Optional[LimitMoments] = None


def _check_alpha_for_a(alpha: float) -> None:
    if not alpha > -1.0:
        raise UnsupportedAlpha(f"a_n needs alpha > -1, got {alpha}")


def a_coeff(n, alpha: float):
    """``a_n = Γ(n+α) / (Γ(n) Γ(1+α))``, the martingale normalizer.

    Accepts a scalar or an array of step counts. ``a_1 == 1`` exactly.
    """
    _check_alpha_for_a(alpha)
    n_arr = np.asarray(n)
    if np.any(n_arr < 1):
        raise ValueError("n must be >= 1")
    return np.exp(log_gamma_ratio(n, alpha) - gammaln(1.0 + alpha))


def _limit_value(params: ModelParams) -> float:
    return params.q / (1.0 - params.alpha)


def mean_exact(params: ModelParams, n: int) -> float:
    """``E[X_n]`` for ``alpha < 1``.

    Uses ``q n / (1-α) + (s - q/(1-α)) a_n``; at ``α = -1`` the gamma form has
    a pole so the mean recurrence is iterated instead.
    """
    params = validate(params)
    alpha = params.alpha
    if alpha >= 1.0:
        raise DegenerateAlpha("mean formula needs alpha < 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha <= -1.0:
        m = params.s
        for k in range(1, n):
            m = m * (1.0 + alpha / k) + params.q
        return m
    lim = _limit_value(params)
    return lim * n + (params.s - lim) * float(a_coeff(n, alpha))


def mean_asymptotic(params: ModelParams, n: int) -> float:
    """Large-``n`` approximation with ``a_n ~ n^α / Γ(1+α)``."""
    params = validate(params)
    alpha = params.alpha
    if alpha >= 1.0:
        raise DegenerateAlpha("mean formula needs alpha < 1")
    _check_alpha_for_a(alpha)
    lim = _limit_value(params)
    return lim * n + (params.s - lim) * n**alpha / math.gamma(1.0 + alpha)


def mean_recursive(params: ModelParams, n: int) -> float:
    """``E[X_n]`` by iterating ``E[X_{k+1}] = E[X_k](1 + α/k) + q``."""
    params = validate(params)
    m = params.s
    for k in range(1, n):
        m = m * (1.0 + params.alpha / k) + params.q
    return m


def pn_exact(params: ModelParams, n):
    """``p_n = P(η_n = 1)``; ``p_1 = s`` by definition. Vectorized over ``n``."""
    params = validate(params)
    alpha = params.alpha
    if alpha >= 1.0:
        raise DegenerateAlpha("p_n formula needs alpha < 1")
    n_arr = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if np.any(n_arr < 1):
        raise ValueError("n must be >= 1")
    lim = _limit_value(params)
    out = np.full(n_arr.shape, params.s, dtype=float)
    rest = n_arr >= 2
    if np.any(rest):
        m = n_arr[rest] - 1
        out[rest] = lim + alpha * (a_coeff(m, alpha) / m) * (params.s - lim)
    return float(out[0]) if np.ndim(n) == 0 else out


def gamma_sum(a: float, b: float, n: int) -> float:
    """Closed form of ``sum_{k=1}^n Γ(k+a)/Γ(k+b)`` for ``b != a + 1``.

    Rearranged as ``(Γ(1+a)/Γ(b) - Γ(n+a+1)/Γ(n+b)) / (b - a - 1)``; the first
    term vanishes at ``b = 0`` where ``1/Γ(b) = 0``.
    """
    if a < 0 or b < 0:
        raise OutOfRange("a/b", (a, b), "[0, inf)")
    if n < 1:
        raise ValueError("n must be >= 1")
    gap = b - a - 1.0
    if abs(gap) < GAMMA_SUM_POLE_TOL:
        raise SingularCase(f"b = a + 1 is a pole of the closed form (a={a}, b={b})")
    head = 0.0 if b == 0 else math.exp(gammaln(1.0 + a) - gammaln(b))
    tail = math.exp(log_gamma_ratio(n + b, a + 1.0 - b))
    return (head - tail) / gap


def _check_p_open(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise OutOfRange("p", p, "(0, 1)")


def _g(n, power: float):
    """``Γ(n + power) / (Γ(n) Γ(1 + power))``; equals 1 exactly at ``n = 1``."""
    return np.exp(log_gamma_ratio(n, power) - gammaln(1.0 + power))


# coefficients of Γ(n+kp)/(Γ(n)Γ(1+kp)), k = 1..order, in E[X_n^order] for q = 0
_Q0_COEFFS = {
    1: (1,),
    2: (-1, 2),
    3: (1, -6, 6),
    4: (-1, 14, -36, 24),
}


def moment_q0(order: int, s: float, p: float, n, asymptotic: bool = False):
    """Raw moment ``E[X_n^order]`` of the ``q = 0`` walk, ``order <= 4``.

    With ``asymptotic=True`` returns the leading term
    ``order! * s * n^(order p) / Γ(1 + order p)`` instead.
    """
    _check_p_open(p)
    if not 0.0 <= s <= 1.0:
        raise OutOfRange("s", s)
    if order not in _Q0_COEFFS:
        raise ValueError("order must be 1..4")
    if asymptotic:
        return math.factorial(order) * s * np.asarray(n, float) ** (order * p) / math.gamma(1.0 + order * p)
    total = 0.0
    # highest power first: terms shrink, so the sum is dominated by one term
    for k in range(order, 0, -1):
        total = total + _Q0_COEFFS[order][k - 1] * s * _g(n, k * p)
    return total


def moment2_q0(s, p, n, asymptotic=False):
    return moment_q0(2, s, p, n, asymptotic)


def moment3_q0(s, p, n, asymptotic=False):
    return moment_q0(3, s, p, n, asymptotic)


def moment4_q0(s, p, n, asymptotic=False):
    return moment_q0(4, s, p, n, asymptotic)


def limit_moments(s: float, p: float) -> LimitMoments:
    """First four moments of the almost-sure limit of ``X_n / a_n - s``."""
    if not (0.5 < p < 1.0):
        raise OutOfRange("p", p, "(1/2, 1)")
    if not (0.0 < s <= 1.0):
        raise OutOfRange("s", s, "(0, 1]")
    r2 = math.exp(2 * gammaln(1.0 + p) - gammaln(1.0 + 2 * p))
    r3 = math.exp(3 * gammaln(1.0 + p) - gammaln(1.0 + 3 * p))
    r4 = math.exp(4 * gammaln(1.0 + p) - gammaln(1.0 + 4 * p))
    m2 = 2 * s * r2 - s**2
    m3 = 6 * s * r3 - 6 * s**2 * r2 + 2 * s**3
    m4 = 24 * s * r4 - 24 * s**2 * r3 + 12 * s**3 * r2 - 3 * s**4
    return LimitMoments(0.0, m2, m3, m4)


def sn_squared_exact(params: ModelParams, n: int) -> float:
    """``s_n^2 = sum_{j<=n} p_j (1 - p_j) / a_j^2`` by direct summation."""
    params = validate(params)
    _check_alpha_for_a(params.alpha)
    j = np.arange(1, n + 1)
    pj = pn_exact(params, j)
    aj = a_coeff(j, params.alpha)
    return math.fsum(pj * (1.0 - pj) / aj**2)


def sn_squared_asymptotic(params: ModelParams, n: int) -> float:
    """Leading behavior of ``s_n^2`` for ``alpha <= 1/2``."""
    params = validate(params)
    alpha, p, q = params.alpha, params.p, params.q
    if is_marginal(alpha):
        return 4 * q * (1 - p) * math.gamma(1.5) ** 2 * math.log(n)
    if alpha < 0.5:
        return q * (1 - p) / (1 - alpha) ** 2 * math.gamma(1 + alpha) ** 2 * n ** (1 - 2 * alpha) / (1 - 2 * alpha)
    raise HypothesisViolation("s_n^2 diverges only for alpha <= 1/2")


def clt_variance(params: ModelParams) -> float:
    """Limit variance constant of the centered, scaled walk for ``alpha <= 1/2``."""
    alpha, p, q = params.alpha, params.p, params.q
    if is_marginal(alpha):
        return 4 * q * (1 - p)
    if alpha < 0.5:
        return q * (1 - p) / ((1 - alpha) ** 2 * (1 - 2 * alpha))
    raise HypothesisViolation("alpha <= 1/2 required")


def regime_of(params: ModelParams) -> Regime:
    params = validate(params)
    alpha = params.alpha
    if is_degenerate(alpha):
        return Regime.DEGENERATE
    if params.q == 0.0:
        return Regime.SUPERDIFFUSIVE if params.p > 0.5 else Regime.OPEN
    if is_marginal(alpha):
        return Regime.MARGINAL
    if alpha < 0.5:
        return Regime.DIFFUSIVE
    return Regime.SUPERDIFFUSIVE


def scaling_law(params: ModelParams) -> ScalingLaw:
    """Centering, normalizer and limit constant for the regime of ``params``.

    The superdiffusive normalizer is the exact ``a_n``; its asymptotic form
    ``n^α / Γ(1+α)`` is exposed as ``asymptotic_normalizer``.
    """
    params = validate(params)
    alpha = params.alpha
    regime = regime_of(params)

    if regime is Regime.DEGENERATE:
        return ScalingLaw(
            centering=lambda n: params.s * n,
            normalizer=lambda n: float(n),
            variance_constant=params.s * (1 - params.s),
            regime=regime,
        )
    if regime is Regime.OPEN:
        return ScalingLaw(
            centering=lambda n: mean_exact(params, n),
            normalizer=lambda n: float("nan"),
            variance_constant=None,
            regime=regime,
        )
    if regime is Regime.DIFFUSIVE:
        lim = _limit_value(params)
        return ScalingLaw(
            centering=lambda n: lim * n,
            normalizer=lambda n: math.sqrt(n),
            variance_constant=clt_variance(params),
            regime=regime,
        )
    if regime is Regime.MARGINAL:
        return ScalingLaw(
            centering=lambda n: 2 * params.q * n,
            normalizer=lambda n: math.sqrt(n * math.log(n)),
            variance_constant=clt_variance(params),
            regime=regime,
        )
    # superdiffusive
    asym = lambda n: n**alpha / math.gamma(1 + alpha)  # noqa: E731
    if params.q == 0.0:
        lm = limit_moments(params.s, params.p) if params.s > 0 else None
        return ScalingLaw(
            centering=lambda n: params.s * float(a_coeff(n, alpha)),
            normalizer=lambda n: float(a_coeff(n, alpha)),
            variance_constant=lm.m2 if lm else 0.0,
            regime=regime,
            asymptotic_normalizer=asym,
            limit_moments=lm,
        )
    return ScalingLaw(
        centering=lambda n: mean_exact(params, n),
        normalizer=lambda n: float(a_coeff(n, alpha)),
        variance_constant=None,
        regime=regime,
        asymptotic_normalizer=asym,
    )


def lil_constant(params: ModelParams) -> float:
    """Almost-sure limsup constant of the iterated-logarithm law."""
    params = validate(params)
    if not (params.q > 0 and params.p < 1 and (params.alpha < 0.5 or is_marginal(params.alpha))):
        raise OutOfRange("params", params.as_dict(), "q > 0, p < 1, alpha <= 1/2")
    return math.sqrt(clt_variance(params))


def inverse_a_squared_partial_sums(alpha: float, n: int) -> np.ndarray:
    """Running sums of ``1 / a_j^2`` for ``j = 1..n``."""
    j = np.arange(1, n + 1)
    return np.cumsum(1.0 / a_coeff(j, alpha) ** 2)
