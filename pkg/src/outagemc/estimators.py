"""Six outage-probability estimators.

All estimators return an EstimateResult whose var_hat is the per-sample
estimator variance, so relative error is sqrt(var_hat / samples) / p_hat:

  nmc  naive Monte Carlo over the nominal channel law
  uis  selection sampling conditioned on every branch below threshold
       (universal: the conditioning probability factorizes per branch)
  pis  selection sampling conditioned on every size-m partition block's sum
       below threshold; blocks are drawn by acceptance-rejection against a
       uniform simplex proposal
  et   approximate exponential tilting: iid Exp(M / gamma_th) proposal with
       an explicit likelihood ratio, accumulated in log space
  ce   cross-entropy adaptation inside the scaled noncentral chi-square
       family, with decreasing auxiliary thresholds at the rho-quantile
  mls  multilevel splitting along a gamma-process embedding of the channel,
       with survivor resampling at pilot-chosen levels

Sampling is sharded into fixed-size blocks with one child stream per block,
so results are identical for any worker count given the same seed.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .model import ChannelConfig, EstimateResult, gsc_statistic_rows
from .samplers import (
    MellBound,
    RngStream,
    SampleBlock,
    TruncationUnderflowError,
    _exponential_rows,
    _nominal_rows,
    _pis_block_rows,
    _scaled_ncx2_rows,
    compute_m_ell,
)
from .specfun import Ncx2Params, log_bessel_i0, ncx2_cdf, ncx2_quantile

BLOCK_SIZE = 1 << 17
CE_MAX_ITER = 50


class CeAdaptationError(RuntimeError):
    """Cross-entropy adaptation failed (empty elite set or iteration cap)."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class CEParams:
    """State of the cross-entropy proposal v1 * ncx2(2, v2)."""

    v1: float
    v2: float
    iteration: int = 0
    gamma_t: float = math.inf

    def __post_init__(self):
        if self.v1 <= 0.0:
            raise ValueError("v1 must be > 0")
        if self.v2 < 0.0:
            raise ValueError("v2 must be >= 0")


@dataclass(frozen=True)
class MlsSchedule:
    """Splitting levels t_0 = 0 < ... < t_L = 1 with pilot survivor fractions."""

    levels: tuple
    per_level_samples: int
    survivor_fractions: tuple
    pilot_work: int = 0

    def __post_init__(self):
        lv = tuple(float(t) for t in self.levels)
        if len(lv) < 2 or lv[0] != 0.0 or lv[-1] != 1.0:
            raise ValueError("levels must run from exactly 0 to exactly 1")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise ValueError("levels must be strictly increasing")
        if any(not 0.0 < f <= 1.0 for f in self.survivor_fractions):
            raise ValueError("survivor fractions must lie in (0, 1]")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "survivor_fractions", tuple(self.survivor_fractions))

    @property
    def n_levels(self) -> int:
        return len(self.levels) - 1


@dataclass(frozen=True)
class PartitionPlan:
    """Equal-mean blocks covering all M branches, plus the conditioning probability."""

    blocks: tuple  # (start, size, delta) per block
    ell2: float
    bounds: tuple  # MellBound per block

    def __post_init__(self):
        if not 0.0 < self.ell2 <= 1.0:
            raise ValueError("ell2 must lie in (0, 1]")


def build_partition_plan(config: ChannelConfig) -> PartitionPlan:
    """Split M = q*m + r branches into q blocks of m and one of r.

    The rejection bound assumes one common mean per block, so the means must
    be blockwise identical.  ell2 multiplies each block-sum CDF at the
    threshold; the block noncentrality is twice the block's summed squared
    means.
    """
    M, m, g = config.M, config.m, config.gamma_th
    mu = config.mu_array
    q, r = divmod(M, m)
    sizes = [m] * q + ([r] if r else [])
    blocks = []
    bounds = []
    ell2 = 1.0
    start = 0
    for size in sizes:
        seg = mu[start:start + size]
        if np.ptp(seg) != 0.0:
            raise ValueError("PIS requires blockwise-identical means")
        delta = float(np.sqrt(np.sum(seg ** 2)))
        blocks.append((start, size, delta))
        ell2 *= ncx2_cdf(2.0 * g, Ncx2Params(2 * size, 2.0 * delta * delta))
        bounds.append(compute_m_ell(float(seg[0]), size, g))
        start += size
    return PartitionPlan(blocks=tuple(blocks), ell2=float(ell2), bounds=tuple(bounds))


# ---------------------------------------------------------------------------
# block scheduling (fixed block size keeps results worker-count independent)


def _block_sizes(total: int, block: int = BLOCK_SIZE):
    full, rem = divmod(total, block)
    return [block] * full + ([rem] if rem else [])


def _map_ordered(fn, tasks, workers: int):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


# ---------------------------------------------------------------------------
# naive Monte Carlo


def _nmc_block(task):
    config, stream, n = task
    gen = stream.generator()
    x = _nominal_rows(config.mu_array, gen, n)
    h = gsc_statistic_rows(x, config.m)
    return int(np.count_nonzero(h <= config.gamma_th))


def estimate_nmc(config: ChannelConfig, S: int, rng: RngStream,
                 workers: int = 1) -> EstimateResult:
    """Naive MC: hit fraction of the outage event under the nominal law."""
    if S < 1:
        raise ValueError("S must be >= 1")
    sizes = _block_sizes(S)
    tasks = [(config, rng.child(i), n) for i, n in enumerate(sizes)]
    t0 = time.perf_counter()
    hits = sum(_map_ordered(_nmc_block, tasks, workers))
    wall = time.perf_counter() - t0
    p = hits / S
    return EstimateResult(p_hat=p, var_hat=p * (1.0 - p), samples=S,
                          wall_time_s=wall, method="nmc", seed=rng.seed,
                          diagnostics={"hits": hits})


# ---------------------------------------------------------------------------
# universal importance sampling (selection sampling on the per-branch event)


def _uis_block(task):
    config, stream, n = task
    gen = stream.generator()
    M = config.M
    u = gen.random((n, M))
    x = np.empty((n, M))
    mu = config.mu_array
    for val in sorted(set(config.mu)):
        cols = np.nonzero(mu == val)[0]
        k = ncx2_cdf(2.0 * config.gamma_th, Ncx2Params(2, 2.0 * val * val))
        p = np.maximum(k * u[:, cols], 1e-300)
        q = ncx2_quantile(p.ravel(), Ncx2Params(2, 2.0 * val * val))
        x[:, cols] = 0.5 * q.reshape(p.shape)
    h = gsc_statistic_rows(x, config.m)
    return int(np.count_nonzero(h <= config.gamma_th))


def estimate_uis(config: ChannelConfig, S: int, rng: RngStream,
                 workers: int = 1) -> EstimateResult:
    """Selection sampling with every branch truncated below the threshold.

    The conditioning probability ell1 is the product of per-branch CDFs at
    the threshold; the estimator is ell1 times the conditional hit fraction
    and its single-sample variance is ell1 * p - p^2 exactly.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    ell1 = 1.0
    for mu in config.mu:
        k = ncx2_cdf(2.0 * config.gamma_th, Ncx2Params(2, 2.0 * mu * mu))
        if k <= 0.0:
            raise TruncationUnderflowError(
                "threshold too extreme for truncated inverse transform")
        ell1 *= k
    sizes = _block_sizes(S)
    tasks = [(config, rng.child(i), n) for i, n in enumerate(sizes)]
    t0 = time.perf_counter()
    hits = sum(_map_ordered(_uis_block, tasks, workers))
    wall = time.perf_counter() - t0
    p = ell1 * hits / S
    var = max(ell1 * p - p * p, 0.0)
    return EstimateResult(p_hat=p, var_hat=var, samples=S, wall_time_s=wall,
                          method="uis", seed=rng.seed,
                          diagnostics={"ell1": ell1, "hit_fraction": hits / S})


# ---------------------------------------------------------------------------
# partition importance sampling


def _pis_block_task(task):
    config, plan, stream, n = task
    gen = stream.generator()
    x = np.empty((n, config.M))
    proposals = 0
    for (start, size, _), bnd in zip(plan.blocks, plan.bounds):
        rows, used = _pis_block_rows(bnd.block_mu, size, config.gamma_th,
                                     gen, n, bound=bnd)
        x[:, start:start + size] = rows
        proposals += used
    h = gsc_statistic_rows(x, config.m)
    return int(np.count_nonzero(h <= config.gamma_th)), proposals


def estimate_pis(config: ChannelConfig, S: int, rng: RngStream,
                 workers: int = 1) -> EstimateResult:
    """Selection sampling on the partition event (every block sum below threshold).

    Tighter than the per-branch event, so ell2 <= ell1 and the variance
    ell2 * p - p^2 shrinks accordingly; blocks are sampled by
    acceptance-rejection with the per-block constants from compute_m_ell.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    plan = build_partition_plan(config)
    sizes = _block_sizes(S)
    tasks = [(config, plan, rng.child(i), n) for i, n in enumerate(sizes)]
    t0 = time.perf_counter()
    parts = _map_ordered(_pis_block_task, tasks, workers)
    wall = time.perf_counter() - t0
    hits = sum(h for h, _ in parts)
    proposals = sum(pr for _, pr in parts)
    p = plan.ell2 * hits / S
    var = max(plan.ell2 * p - p * p, 0.0)
    n_blocks = len(plan.blocks)
    return EstimateResult(
        p_hat=p, var_hat=var, samples=S, wall_time_s=wall, method="pis",
        seed=rng.seed, work_units=S,
        diagnostics={
            "ell2": plan.ell2,
            "hit_fraction": hits / S,
            "m_ell": [b.value for b in plan.bounds],
            "m_ell_case": [b.case for b in plan.bounds],
            "proposals": proposals,
            "acceptance_rate": (S * n_blocks / proposals) if proposals else 1.0,
        })


# ---------------------------------------------------------------------------
# approximate exponential tilting


def _et_log_const(config: ChannelConfig) -> float:
    M, g = config.M, config.gamma_th
    return M * math.log(g) - M * math.log(M) - config.mu_norm_sq


def _et_block(task):
    config, stream, n = task
    gen = stream.generator()
    M, g = config.M, config.gamma_th
    x = _exponential_rows(M / g, gen, (n, M))
    h = gsc_statistic_rows(x, config.m)
    mask = h <= g
    hits = int(np.count_nonzero(mask))
    if not hits:
        return 0.0, 0.0, 0
    xs = x[mask]
    log_lr = (_et_log_const(config) + (M - g) / g * xs.sum(axis=1)
              + log_bessel_i0(2.0 * config.mu_array * np.sqrt(xs)).sum(axis=1))
    ell = np.exp(log_lr)
    return float(ell.sum()), float(np.dot(ell, ell)), hits


def estimate_et(config: ChannelConfig, S: int, rng: RngStream,
                workers: int = 1) -> EstimateResult:
    """Exponentially tilted proposal: iid Exp(M / gamma_th) branches.

    The tilt is the KL-optimal one for the full sum, approximated by an
    exponential with mean gamma_th / M; the likelihood ratio is accumulated
    in log space and exponentiated once per outage sample.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    sizes = _block_sizes(S)
    tasks = [(config, rng.child(i), n) for i, n in enumerate(sizes)]
    t0 = time.perf_counter()
    parts = _map_ordered(_et_block, tasks, workers)
    wall = time.perf_counter() - t0
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    hits = sum(p[2] for p in parts)
    p = total / S
    var = max((total_sq - S * p * p) / (S - 1), 0.0) if S > 1 else 0.0
    return EstimateResult(p_hat=p, var_hat=var, samples=S, wall_time_s=wall,
                          method="et", seed=rng.seed,
                          diagnostics={"hit_rate": hits / S})


# ---------------------------------------------------------------------------
# cross-entropy


def _ce_log_pdf_rows(x: np.ndarray, v1: float, v2: float) -> np.ndarray:
    """Row sums of ln f(x_i; v1, v2) for the scaled ncx2(2, .) family."""
    arg = np.sqrt(np.maximum(v2 * x / v1, 0.0))
    terms = -math.log(2.0 * v1) - v2 / 2.0 - x / (2.0 * v1) + log_bessel_i0(arg)
    return terms.sum(axis=1)


def _ce_log_lr_rows(x: np.ndarray, nominal: CEParams, sampling: CEParams) -> np.ndarray:
    """ln of the likelihood ratio f(x; nominal) / f(x; sampling), per row."""
    return (_ce_log_pdf_rows(x, nominal.v1, nominal.v2)
            - _ce_log_pdf_rows(x, sampling.v1, sampling.v2))


def ce_update(samples: SampleBlock, weights: np.ndarray, current: CEParams,
              fix_v2: float = None) -> CEParams:
    """Weighted maximum likelihood over the scaled ncx2 family.

    Maximizes sum_s w_s * ln f(x_s; v) over v = (v1, v2), seeded by moment
    matching and polished with Nelder-Mead in (ln v1, sqrt v2) coordinates;
    never returns a point with a worse objective than `current`.  With
    fix_v2 the noncentrality is pinned and only the scale is fitted (the
    pure-scale fit has the closed form v1 = weighted mean / (2 + v2)).
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (samples.x.shape[0],):
        raise ValueError("weights must have one entry per sample")
    pos = w > 0.0
    if not np.any(pos):
        raise ValueError("ce_update needs at least one positive weight")
    z = samples.x[pos].ravel()
    wz = np.repeat(w[pos], samples.x.shape[1])
    wsum = wz.sum()
    if not np.any(z > 0.0):
        return CEParams(v1=1e-12, v2=0.0, iteration=current.iteration + 1,
                        gamma_t=current.gamma_t)
    m1 = float(np.dot(wz, z)) / wsum

    if fix_v2 is not None and fix_v2 == 0.0:
        # exponential maximum likelihood: mean 2 v1 matched to the data
        v1 = float(np.clip(m1 / 2.0, 1e-12, 1e12))
        return CEParams(v1=v1, v2=0.0, iteration=current.iteration + 1,
                        gamma_t=current.gamma_t)

    def neg_obj(theta):
        v1 = math.exp(min(theta[0], 700.0))
        v2 = fix_v2 if fix_v2 is not None else theta[1] * theta[1]
        arg = np.sqrt(v2 * z / v1)
        t = -math.log(2.0 * v1) - v2 / 2.0 - z / (2.0 * v1) + log_bessel_i0(arg)
        return -float(np.dot(wz, t))

    m2c = float(np.dot(wz, (z - m1) ** 2)) / wsum
    r = m2c / (m1 * m1) if m1 > 0 else 1.0
    if r >= 1.0 or r <= 0.0:
        v2_0, v1_0 = 0.0, m1 / 2.0
    else:
        root = math.sqrt(1.0 - r)
        v2_0 = 2.0 * root * (root + 1.0) / r
        v1_0 = m1 / (2.0 + v2_0)
    if fix_v2 is not None:
        v2_0 = fix_v2
        v1_0 = m1 / (2.0 + v2_0)
    theta0 = np.array([math.log(max(v1_0, 1e-12)), math.sqrt(max(v2_0, 0.0))])
    f0 = neg_obj(theta0)
    res = optimize.minimize(neg_obj, theta0, method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-8 * (1.0 + abs(f0)),
                                     "maxiter": 4000, "maxfev": 4000})
    best = res.x if res.fun <= f0 else theta0
    # ascent guard relative to the incoming parameters
    cur_theta = np.array([math.log(current.v1), math.sqrt(current.v2)])
    if fix_v2 is None and neg_obj(cur_theta) < min(res.fun, f0):
        best = cur_theta
    v1 = float(np.clip(math.exp(min(best[0], 700.0)), 1e-12, 1e12))
    v2 = fix_v2 if fix_v2 is not None else float(np.clip(best[1] * best[1], 0.0, 1e12))
    return CEParams(v1=v1, v2=v2, iteration=current.iteration + 1,
                    gamma_t=current.gamma_t)


def _ce_final_block(task):
    config, nominal, vfin, stream, n = task
    gen = stream.generator()
    x = _scaled_ncx2_rows(vfin.v1, vfin.v2, gen, (n, config.M))
    h = gsc_statistic_rows(x, config.m)
    mask = h <= config.gamma_th
    hits = int(np.count_nonzero(mask))
    if not hits:
        return 0.0, 0.0, 0
    ell = np.exp(_ce_log_lr_rows(x[mask], nominal, vfin))
    return float(ell.sum()), float(np.dot(ell, ell)), hits


def estimate_ce(config: ChannelConfig, S: int, rng: RngStream,
                S0: int = 100_000, rho: float = 0.1,
                workers: int = 1) -> EstimateResult:
    """Cross-entropy adaptive importance sampling (identical means only).

    Pilot batches of S0 walk an auxiliary threshold down the rho-quantile of
    the combined statistic, refitting the proposal by weighted maximum
    likelihood at each step; once the auxiliary threshold drops below
    gamma_th a final fit at gamma_th fixes the proposal used for the S
    estimation samples.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    if S0 < 100:
        raise ValueError("S0 must be >= 100")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must be in (0, 1)")
    if not config.identical_mu:
        raise ValueError("CE requires identical mu_i across branches")
    mu = config.mu[0]
    nominal = CEParams(v1=0.5, v2=2.0 * mu * mu)
    g = config.gamma_th
    kth = max(int(math.floor(rho * S0)), 1) - 1

    t0 = time.perf_counter()
    gen = rng.child(0).generator()
    v = replace(nominal)
    x = _scaled_ncx2_rows(v.v1, v.v2, gen, (S0, config.M))
    h = gsc_statistic_rows(x, config.m)
    gamma_hat = float(np.partition(h, kth)[kth])
    trace = [{"iteration": 0, "gamma_t": gamma_hat, "v1": v.v1, "v2": v.v2}]
    pilot_work = S0
    iteration = 0
    while gamma_hat >= g:
        iteration += 1
        if iteration > CE_MAX_ITER:
            raise CeAdaptationError("CE failed to reach target threshold")
        w = np.where(h <= gamma_hat, np.exp(_ce_log_lr_rows(x, nominal, v)), 0.0)
        if not np.any(w > 0.0):
            raise CeAdaptationError("CE elite set empty")
        v = ce_update(SampleBlock(x, np.zeros(S0)), w,
                      replace(v, gamma_t=gamma_hat))
        x = _scaled_ncx2_rows(v.v1, v.v2, gen, (S0, config.M))
        h = gsc_statistic_rows(x, config.m)
        gamma_hat = float(np.partition(h, kth)[kth])
        pilot_work += S0
        trace.append({"iteration": iteration, "gamma_t": gamma_hat,
                      "v1": v.v1, "v2": v.v2})
    # final update at the true threshold, then the estimation run
    w = np.where(h <= g, np.exp(_ce_log_lr_rows(x, nominal, v)), 0.0)
    if not np.any(w > 0.0):
        raise CeAdaptationError("CE elite set empty")
    vfin = ce_update(SampleBlock(x, np.zeros(S0)), w, replace(v, gamma_t=g))
    trace.append({"iteration": iteration + 1, "gamma_t": g,
                  "v1": vfin.v1, "v2": vfin.v2})

    sizes = _block_sizes(S)
    tasks = [(config, nominal, vfin, rng.child(1 + i), n)
             for i, n in enumerate(sizes)]
    parts = _map_ordered(_ce_final_block, tasks, workers)
    wall = time.perf_counter() - t0
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    hits = sum(p[2] for p in parts)
    p = total / S
    var = max((total_sq - S * p * p) / (S - 1), 0.0) if S > 1 else 0.0
    return EstimateResult(p_hat=p, var_hat=var, samples=S, wall_time_s=wall,
                          method="ce", seed=rng.seed, work_units=S + pilot_work,
                          diagnostics={"trace": trace, "hit_rate": hits / S,
                                       "v_final": {"v1": vfin.v1, "v2": vfin.v2}})


# ---------------------------------------------------------------------------
# multilevel splitting


def _mls_transform(g_mat: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Map gamma-process coordinates to channel space, X = F^{-1}(1 - e^{-G})."""
    x = np.empty_like(g_mat)
    for val in sorted(set(mu.tolist())):
        cols = np.nonzero(mu == val)[0]
        p = np.maximum(-np.expm1(-g_mat[:, cols]), 5e-324)
        q = ncx2_quantile(p.ravel(), Ncx2Params(2, 2.0 * val * val))
        x[:, cols] = 0.5 * q.reshape(p.shape)
    return x


def _mls_replication(task):
    config, levels, s, stream = task
    gen = stream.generator()
    mu = config.mu_array
    M, m, g = config.M, config.m, config.gamma_th
    estimate = 1.0
    g_surv = None
    for idx in range(1, len(levels)):
        dt = levels[idx] - levels[idx - 1]
        if idx == 1:
            g_mat = gen.gamma(dt, size=(s, M))
        else:
            pick = gen.integers(0, g_surv.shape[0], size=s)
            g_mat = g_surv[pick] + gen.gamma(dt, size=(s, M))
        h = gsc_statistic_rows(_mls_transform(g_mat, mu), m)
        mask = h <= g
        count = int(np.count_nonzero(mask))
        estimate *= count / s
        if count == 0:
            return 0.0, idx
        g_surv = g_mat[mask]
    return estimate, 0


def mls_pilot_levels(config: ChannelConfig, pilot_samples: int,
                     target_cond_prob: float, rng: RngStream) -> MlsSchedule:
    """Greedy forward level construction for the splitting schedule.

    From the current time t, bisection finds the largest step t' whose
    empirical conditional survival P[H(X(t')) <= gamma | survivors at t]
    still meets the target, so no level's event is rare; terminates the
    moment t' = 1 qualifies.  Bisection tolerance is 1e-3 in t.
    """
    if not 0.0 < target_cond_prob < 1.0:
        raise ValueError("target_cond_prob must be in (0, 1)")
    if pilot_samples < 100:
        raise ValueError("pilot_samples must be >= 100")
    gen = rng.generator()
    mu = config.mu_array
    M, m, g = config.M, config.m, config.gamma_th
    work = 0

    def cond_fraction(t_from, t_to, g_surv):
        nonlocal work
        dt = t_to - t_from
        if g_surv is None:
            g_mat = gen.gamma(dt, size=(pilot_samples, M))
        else:
            pick = gen.integers(0, g_surv.shape[0], size=pilot_samples)
            g_mat = g_surv[pick] + gen.gamma(dt, size=(pilot_samples, M))
        work += pilot_samples
        h = gsc_statistic_rows(_mls_transform(g_mat, mu), m)
        mask = h <= g
        return float(np.mean(mask)), g_mat[mask]

    levels = [0.0]
    fractions = []
    g_surv = None
    t = 0.0
    for _ in range(200):
        frac_end, surv_end = cond_fraction(t, 1.0, g_surv)
        if frac_end >= target_cond_prob:
            if t == 0.0:
                warnings.warn("outage event is not rare: single-level schedule",
                              stacklevel=2)
            levels.append(1.0)
            fractions.append(max(frac_end, 1.0 / pilot_samples))
            break
        lo, hi = t, 1.0
        while hi - lo > 1e-3:
            mid = 0.5 * (lo + hi)
            frac, _ = cond_fraction(t, mid, g_surv)
            if frac >= target_cond_prob:
                lo = mid
            else:
                hi = mid
        t_next = max(lo, t + 1e-3)
        frac, surv = cond_fraction(t, t_next, g_surv)
        if surv.shape[0] == 0:
            raise RuntimeError("pilot produced no survivors; increase pilot_samples")
        levels.append(t_next)
        fractions.append(frac)
        g_surv = surv
        t = t_next
    else:
        raise RuntimeError("pilot failed to reach t = 1 within 200 levels")
    return MlsSchedule(levels=tuple(levels), per_level_samples=pilot_samples,
                       survivor_fractions=tuple(fractions), pilot_work=work)


def estimate_mls(config: ChannelConfig, s: int, rng: RngStream,
                 schedule="auto", replications: int = 50,
                 target_cond_prob: float = 0.2, pilot_samples: int = 10_000,
                 workers: int = 1) -> EstimateResult:
    """Multilevel splitting over the gamma-process embedding.

    Each replication simulates s chains per level, resampling uniformly from
    the previous level's survivors, and multiplies the survivor fractions.
    The estimate averages the replications; var_hat is the replication
    variance rescaled so that var_hat / samples is the variance of the mean
    (samples counts simulated chain-steps, s * L * replications).
    """
    if s < 10:
        raise ValueError("s must be >= 10")
    if replications < 2:
        raise ValueError("replications must be >= 2")
    t0 = time.perf_counter()
    if schedule == "auto":
        schedule = mls_pilot_levels(config, pilot_samples, target_cond_prob,
                                    rng.child(0))
    elif not isinstance(schedule, MlsSchedule):
        raise ValueError("schedule must be an MlsSchedule or 'auto'")
    tasks = [(config, schedule.levels, s, rng.child(1 + i))
             for i in range(replications)]
    parts = _map_ordered(_mls_replication, tasks, workers)
    wall = time.perf_counter() - t0
    estimates = np.array([p[0] for p in parts])
    dead = [i for i, p in enumerate(parts) if p[1]]
    p = float(estimates.mean())
    var_repl = float(estimates.var(ddof=1))
    chain_steps = s * schedule.n_levels * replications
    warnings = []
    if dead:
        warnings.append(f"{len(dead)} replication(s) died with zero survivors")
    return EstimateResult(
        p_hat=p, var_hat=var_repl * s * schedule.n_levels, samples=chain_steps,
        wall_time_s=wall, method="mls", seed=rng.seed,
        work_units=chain_steps + schedule.pilot_work,
        diagnostics={"levels": list(schedule.levels),
                     "pilot_fractions": list(schedule.survivor_fractions),
                     "replications": replications, "per_level_samples": s,
                     "replication_estimates": estimates.tolist(),
                     "warnings": warnings})


ESTIMATORS = {
    "nmc": estimate_nmc,
    "uis": estimate_uis,
    "pis": estimate_pis,
    "et": estimate_et,
    "ce": estimate_ce,
    "mls": estimate_mls,
}
