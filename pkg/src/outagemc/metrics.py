"""Efficiency metrics for comparing estimators.

Relative error is per-run (shrinks with sample count); the squared
coefficient of variation var(single-sample estimator) / p^2 is sample-size
free and answers "which estimator needs fewer samples"; work-normalized
relative variance folds cost back in, either as measured wall time or as a
machine-independent work-unit count.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy import special

from .model import EstimateResult


@dataclass(frozen=True)
class EfficiencyReport:
    re: float
    scv: float
    wnrv: float
    wnrv_work: float
    ci95: tuple
    work_units: int


def relative_error(result: EstimateResult) -> float:
    """sqrt(var_hat / samples) / p_hat, the estimated relative error."""
    if result.p_hat <= 0.0:
        raise ValueError("degenerate estimate, RE undefined")
    if result.var_hat == 0.0:
        return 0.0
    return math.sqrt(result.var_hat / result.samples) / result.p_hat


def scv(result: EstimateResult) -> float:
    """Squared coefficient of variation var_hat / p_hat^2 (sample-size free)."""
    if result.p_hat <= 0.0:
        raise ValueError("degenerate estimate, SCV undefined")
    return result.var_hat / (result.p_hat * result.p_hat)


def wnrv(result: EstimateResult) -> float:
    """Work-normalized relative variance, squared RE times wall seconds."""
    if result.wall_time_s == 0.0:
        warnings.warn("wall time is zero; WNRV degenerates to 0", stacklevel=2)
        return 0.0
    re = relative_error(result)
    return re * re * result.wall_time_s


def wnrv_work(result: EstimateResult) -> float:
    """Machine-independent WNRV surrogate: scv * work_units / samples."""
    return scv(result) * result.work_units / result.samples


def confidence_interval(result: EstimateResult, level: float,
                        chebyshev: bool = False) -> tuple:
    """Normal-approximation CI p_hat * (1 -+ z * RE), clipped to [0, 1].

    With chebyshev=True the multiplier is the distribution-free
    1 / sqrt(1 - level) (4.47 at 95%) instead of the normal quantile.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    re = relative_error(result)
    if chebyshev:
        z = 1.0 / math.sqrt(1.0 - level)
    else:
        z = float(special.ndtri(0.5 * (1.0 + level)))
    lo = max(result.p_hat * (1.0 - z * re), 0.0)
    hi = min(result.p_hat * (1.0 + z * re), 1.0)
    return (lo, hi)


def log_m_ell_asymptotic(mu: float, n: int, gamma_th: float) -> float:
    """Large-mean log-asymptote of the partition rejection constant.

    ln M ~ ln[ n^{(2n+1)/4} g^{(n+1)/4} / (2^{n-1} n! pi^{(n-1)/2}
    e^{(n-1)g}) ] + (n+1)/2 ln mu + 2 sqrt(g) (n - sqrt(n)) mu, valid for
    mu > 1 with the threshold below the density mode.
    """
    if mu <= 1.0:
        raise ValueError("asymptotic regime needs mu > 1")
    if gamma_th >= 2.0 * mu * mu - 2.0:
        raise ValueError("asymptotic regime needs gamma_th < 2 mu^2 - 2")
    if n < 1:
        raise ValueError("n must be >= 1")
    return ((2 * n + 1) / 4.0 * math.log(n)
            + (n + 1) / 4.0 * math.log(gamma_th)
            - (n - 1) * math.log(2.0)
            - float(special.gammaln(n + 1))
            - (n - 1) / 2.0 * math.log(math.pi)
            - (n - 1) * gamma_th
            + (n + 1) / 2.0 * math.log(mu)
            + 2.0 * math.sqrt(gamma_th) * (n - math.sqrt(n)) * mu)


def m_ell_asymptotic(mu: float, n: int, gamma_th: float) -> float:
    """Large-mean asymptote of the rejection constant (exp of the log form)."""
    try:
        return math.exp(log_m_ell_asymptotic(mu, n, gamma_th))
    except OverflowError:
        return math.inf


def efficiency_report(result: EstimateResult, level: float = 0.95) -> EfficiencyReport:
    return EfficiencyReport(
        re=relative_error(result),
        scv=scv(result),
        wnrv=wnrv(result) if result.wall_time_s > 0.0 else 0.0,
        wnrv_work=wnrv_work(result),
        ci95=confidence_interval(result, level),
        work_units=result.work_units,
    )
