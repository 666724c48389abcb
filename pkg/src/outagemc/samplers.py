"""Seeded variate generation for all estimators.

Streams are split with SeedSequence spawn keys over a counter-based Philox
generator: identical (seed, stream_id) always reproduces the same sequence,
distinct stream ids are statistically independent, and child streams let an
estimator shard work across blocks without the result depending on how many
workers execute them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import ChannelConfig
from .specfun import (
    Ncx2Params,
    log_bessel_i0,
    ncx2_cdf,
    ncx2_logcdf,
    ncx2_logpdf,
    ncx2_quantile,
)

# numerically verified envelope constant for the near-mode density bound
REJECTION_C = 1.031
# f <= M_ell * g must hold on every proposal; anything above rounding noise
# signals a bound-formula bug
_LOG_RATIO_SLACK = 1e-9
_MAX_PROPOSAL_ROWS = 1 << 20


class RejectionStalledError(RuntimeError):
    """Rejection sampler exceeded its trial budget (bound-formula bug)."""


class TruncationUnderflowError(ValueError):
    """Threshold too extreme for the truncated inverse transform."""


@dataclass(frozen=True)
class RngStream:
    """Reproducible, splittable random stream.

    (seed, stream_id) identifies a root stream; child(i) derives an
    independent substream, so per-block or per-replication sharding is
    deterministic no matter how blocks are scheduled.
    """

    seed: int
    stream_id: int = 0
    path: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, (*self.path, int(index)))


@dataclass
class SampleBlock:
    """A batch of M-dimensional nonnegative sample vectors with log-likelihood ratios."""

    x: np.ndarray
    log_lr: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.log_lr = np.asarray(self.log_lr, dtype=float)
        if self.x.ndim != 2 or self.log_lr.shape != (self.x.shape[0],):
            raise ValueError("SampleBlock needs x of shape (S, M) and log_lr of shape (S,)")


@dataclass(frozen=True)
class MellBound:
    """Rejection constant for one equal-mean block of the partition sampler."""

    value: float
    log_value: float
    case: str
    block_mu: float
    block_size: int
    log_block_cdf: float  # ln P(sum of block <= gamma_th), the f-normalizer

    def __post_init__(self):
        if self.log_value < -_LOG_RATIO_SLACK:
            raise ValueError(
                f"rejection constant below 1 ({self.value!r}) indicates a formula error")


def _nominal_rows(mu: np.ndarray, gen: np.random.Generator, n: int) -> np.ndarray:
    """n draws of the M-vector of squared gains, X_i ~ (1/2) ncx2(2, 2 mu_i^2)."""
    root_lam = math.sqrt(2.0) * mu  # sqrt of per-branch noncentrality
    z1 = gen.standard_normal((n, mu.shape[0]))
    z2 = gen.standard_normal((n, mu.shape[0]))
    return 0.5 * ((z1 + root_lam) ** 2 + z2 ** 2)


def sample_nominal(config: ChannelConfig, rng: RngStream) -> np.ndarray:
    """One M-vector from the nominal channel law."""
    return _nominal_rows(config.mu_array, rng.generator(), 1)[0]


def _truncation_constant(mu: float, gamma_th: float) -> float:
    k = ncx2_cdf(2.0 * gamma_th, Ncx2Params(2, 2.0 * mu * mu))
    if k <= 0.0:
        raise TruncationUnderflowError(
            "threshold too extreme for truncated inverse transform")
    return k


def _truncated_column(mu: float, gamma_th: float, gen, n: int) -> np.ndarray:
    k = _truncation_constant(mu, gamma_th)
    u = gen.random(n)
    p = np.maximum(k * u, 1e-300)
    return 0.5 * ncx2_quantile(p, Ncx2Params(2, 2.0 * mu * mu))


def sample_truncated_univariate(mu: float, gamma_th: float, rng: RngStream) -> float:
    """One draw of X | X <= gamma_th via the inverse transform."""
    if gamma_th <= 0.0:
        raise ValueError("gamma_th must be > 0")
    return float(_truncated_column(mu, gamma_th, rng.generator(), 1)[0])


def _simplex_rows(n: int, gamma_th: float, gen, rows: int) -> np.ndarray:
    """rows draws, uniform over {x_i >= 0, sum x_i <= gamma_th}."""
    e = gen.standard_exponential((rows, n + 1))
    return gamma_th * e[:, :n] / e.sum(axis=1, keepdims=True)


def sample_uniform_simplex(n: int, gamma_th: float, rng: RngStream) -> np.ndarray:
    """One point uniform over the solid simplex, via n+1 exponential spacings."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if gamma_th <= 0.0:
        raise ValueError("gamma_th must be > 0")
    return _simplex_rows(n, gamma_th, rng.generator(), 1)[0]


def compute_m_ell(mu: float, n: int, gamma_th: float) -> MellBound:
    """Rejection constant for a block of n equal-mean coordinates.

    Bounds the ratio of the threshold-conditioned joint density to the
    uniform-simplex proposal.  Three branches, all in log space:

      mu <= 1            : the one-dimensional density peaks at zero, so
                           the bound is gamma^n e^{-n mu^2} / (n! F)
      gamma <= 2 mu^2 - 2: density increasing up to the threshold, bound
                           [2 gamma f(2 gamma)]^n / (n! F)
      otherwise          : near-mode envelope C * f(A_mu) with
                           A_mu = 2 mu^2 - 2 + 2/(2 mu^2)

    where f is the ncx2(2, 2 mu^2) density and F the CDF of the block sum's
    ncx2(2n, 2n mu^2) at 2 gamma.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if gamma_th <= 0.0:
        raise ValueError("gamma_th must be > 0")
    if not (math.isfinite(mu) and mu >= 0.0):
        raise ValueError("mu must be finite and >= 0")
    lam = 2.0 * mu * mu
    log_f = ncx2_logcdf(2.0 * gamma_th, Ncx2Params(2 * n, n * lam))
    log_nfact = float(special.gammaln(n + 1))
    if mu <= 1.0:
        case = "small_mean"
        log_m = n * math.log(gamma_th) - n * mu * mu - log_nfact - log_f
    elif gamma_th <= lam - 2.0:
        case = "large_mean_small_gamma"
        log_pdf = ncx2_logpdf(2.0 * gamma_th, Ncx2Params(2, lam))
        log_m = n * (math.log(2.0 * gamma_th) + log_pdf) - log_nfact - log_f
    else:
        case = "large_mean_large_gamma"
        a_mu = lam - 2.0 + 2.0 / lam
        log_pdf = ncx2_logpdf(a_mu, Ncx2Params(2, lam))
        log_m = (n * (math.log(2.0 * gamma_th) + math.log(REJECTION_C) + log_pdf)
                 - log_nfact - log_f)
    try:
        value = math.exp(log_m)
    except OverflowError:
        value = math.inf
    return MellBound(value=value, log_value=log_m, case=case,
                     block_mu=mu, block_size=n, log_block_cdf=log_f)


def _pis_block_rows(mu: float, n: int, gamma_th: float, gen,
                    count: int, bound: MellBound = None):
    """count accepted blocks from the threshold-conditioned joint density.

    Returns (samples, proposals): samples has shape (count, n); proposals is
    the total number of uniform-simplex trials consumed.  Proposals are
    generated in batches sized to the expected need (about M_ell per
    acceptance).  Raises if the density ratio ever exceeds the bound or if
    the trial budget of 1e4 * M_ell per sample is exhausted.
    """
    if bound is None:
        bound = compute_m_ell(mu, n, gamma_th)
    log_g = float(special.gammaln(n + 1)) - n * math.log(gamma_th)
    out = np.empty((count, n))
    filled = 0
    proposals = 0
    budget = 1e4 * max(bound.value, 1.0) * count + 1e4
    while filled < count:
        want = count - filled
        rows = min(max(256, int(math.ceil(want * bound.value * 1.15))),
                   _MAX_PROPOSAL_ROWS)
        u = _simplex_rows(n, gamma_th, gen, rows)
        log_f = (-n * mu * mu - u.sum(axis=1)
                 + log_bessel_i0(2.0 * mu * np.sqrt(u)).sum(axis=1)
                 - bound.log_block_cdf)
        log_ratio = log_f - log_g - bound.log_value
        worst = float(log_ratio.max())
        if worst > _LOG_RATIO_SLACK:
            raise RejectionStalledError(
                f"rejection bound violated: log f/(M g) = {worst:.3e} > 0 "
                f"(mu={mu}, n={n}, gamma_th={gamma_th}, case={bound.case})")
        accept = gen.random(rows) <= np.exp(log_ratio)
        acc_rows = u[accept]
        take = min(acc_rows.shape[0], want)
        if take:
            out[filled:filled + take] = acc_rows[:take]
            filled += take
        # trials up to and including the last acceptance actually used
        if acc_rows.shape[0] > take:
            last_used = np.nonzero(accept)[0][take - 1] + 1 if take else 0
            proposals += int(last_used)
        else:
            proposals += rows
        if proposals > budget:
            raise RejectionStalledError(
                f"rejection sampler stalled after {proposals} proposals "
                f"(mu={mu}, n={n}, gamma_th={gamma_th})")
    return out, proposals


def sample_pis_block(mu: float, n: int, gamma_th: float, rng: RngStream) -> np.ndarray:
    """One accepted block from the threshold-conditioned joint density."""
    rows, _ = _pis_block_rows(mu, n, gamma_th, rng.generator(), 1)
    return rows[0]


def _exponential_rows(rate: float, gen, shape) -> np.ndarray:
    u = gen.random(shape)
    return -np.log1p(-u) / rate


def sample_exponential(rate: float, n: int, rng: RngStream) -> np.ndarray:
    """n iid Exp(rate) variates by the inverse transform."""
    if rate <= 0.0:
        raise ValueError("rate must be > 0")
    return _exponential_rows(rate, rng.generator(), n)


def _scaled_ncx2_rows(v1: float, v2: float, gen, shape) -> np.ndarray:
    root = math.sqrt(v2)
    z1 = gen.standard_normal(shape)
    z2 = gen.standard_normal(shape)
    return v1 * ((z1 + root) ** 2 + z2 ** 2)


def sample_scaled_ncx2(v1: float, v2: float, n: int, rng: RngStream) -> np.ndarray:
    """n iid draws of v1 * ncx2(2, v2)."""
    if v1 <= 0.0:
        raise ValueError("v1 must be > 0")
    if v2 < 0.0:
        raise ValueError("v2 must be >= 0")
    return _scaled_ncx2_rows(v1, v2, rng.generator(), n)


def gamma_increment(shape: float, rng: RngStream) -> float:
    """One Gamma(shape, rate 1) variate; shapes below 1 are fine."""
    if shape <= 0.0:
        raise ValueError("shape must be > 0")
    return float(rng.generator().gamma(shape))
