"""Batch experiment harness: spec files, runs, sweeps, verification.

A spec file is flat INI text:

    [channel]
    M = 8
    m = 4
    mu = 0.5            ; scalar broadcast, or comma list of length M
    gamma_th = 1.0

    [run]
    methods = pis, et, ce
    samples = 1000000
    seed = 20240601

    [samples]           ; optional per-method overrides
    uis = 5000000
    mls = 20000         ; per-level chain count for the splitting estimator

    [sweep]             ; optional
    axis = gamma_th     ; or mu
    values = 1.0, 0.5

    [hyper]             ; optional
    rho = 0.1
    s0 = 100000
    mls_replications = 50
    mls_target_cond_prob = 0.2
    mls_pilot_samples = 10000

Each run writes a CSV (4-significant-digit scientific notation) and a JSON
sidecar with full-precision values and per-method diagnostics.  All columns
except wall_time_s and wnrv_time are byte-reproducible for a fixed seed,
independent of the worker count.
"""

from __future__ import annotations

import configparser
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import estimators as est
from . import metrics
from .model import ChannelConfig, EstimateResult, closed_form_outage
from .samplers import RngStream

CSV_COLUMNS = ["method", "M", "m", "mu", "gamma_th", "S", "p_hat", "var_hat",
               "re_pct", "scv", "wnrv_time", "wnrv_work", "wall_time_s",
               "seed", "warnings"]

METHODS = ("nmc", "uis", "pis", "et", "ce", "mls")

DEFAULT_HYPER = {
    "rho": 0.1,
    "s0": 100_000,
    "mls_replications": 50,
    "mls_target_cond_prob": 0.2,
    "mls_pilot_samples": 10_000,
}


class SpecError(ValueError):
    """Experiment spec failed to parse or validate."""


@dataclass
class ExperimentSpec:
    config: ChannelConfig
    methods: tuple
    samples: dict
    seed: int
    sweep_axis: str = None
    sweep_values: tuple = ()
    hyper: dict = field(default_factory=lambda: dict(DEFAULT_HYPER))

    def __post_init__(self):
        if not self.methods:
            raise SpecError("run.methods must list at least one method")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise SpecError(f"unknown method(s) {bad}; choose from {METHODS}")
        if self.sweep_axis is not None:
            if self.sweep_axis not in ("gamma_th", "mu"):
                raise SpecError("sweep.axis must be gamma_th or mu")
            vals = tuple(float(v) for v in self.sweep_values)
            if not vals:
                raise SpecError("sweep.values must be nonempty")
            if any(v <= 0 for v in vals):
                raise SpecError("sweep.values must be positive")
            if list(vals) != sorted(vals) and list(vals) != sorted(vals, reverse=True):
                raise SpecError("sweep.values must be sorted")
            self.sweep_values = vals


def _get(parser, section, key, cast, default=None, required=False):
    try:
        raw = parser.get(section, key)
    except (configparser.NoSectionError, configparser.NoOptionError):
        if required:
            raise SpecError(f"missing required key [{section}] {key}")
        return default
    try:
        return cast(raw)
    except Exception as exc:
        raise SpecError(f"invalid value for [{section}] {key}: {raw!r} ({exc})")


def _float_list(raw: str):
    return [float(v) for v in raw.replace(",", " ").split()]


def _str_list(raw: str):
    return [v.strip() for v in raw.replace(",", " ").split() if v.strip()]


def load_spec(path) -> ExperimentSpec:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keys are case-sensitive (M vs m)
    path = Path(path)
    if not path.exists():
        raise SpecError(f"spec file not found: {path}")
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise SpecError(f"spec parse error: {exc}")
    allowed = {
        "channel": {"M", "m", "mu", "gamma_th"},
        "run": {"methods", "samples", "seed"},
        "samples": set(METHODS),
        "sweep": {"axis", "values"},
        "hyper": set(DEFAULT_HYPER),
    }
    for section in parser.sections():
        if section not in allowed:
            raise SpecError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in allowed[section]:
                raise SpecError(f"unknown key {key!r} in section [{section}]")
    M = _get(parser, "channel", "M", int, required=True)
    m = _get(parser, "channel", "m", int, required=True)
    mu = _get(parser, "channel", "mu", _float_list, required=True)
    gamma_th = _get(parser, "channel", "gamma_th", float, required=True)
    try:
        config = ChannelConfig(M=M, m=m, mu=tuple(mu), gamma_th=gamma_th)
    except ValueError as exc:
        raise SpecError(f"invalid [channel] section: {exc}")
    methods = tuple(_get(parser, "run", "methods", _str_list, required=True))
    base_samples = _get(parser, "run", "samples", int, default=100_000)
    seed = _get(parser, "run", "seed", int, default=0)
    samples = {meth: base_samples for meth in methods}
    if parser.has_section("samples"):
        for key in parser.options("samples"):
            if key not in METHODS:
                raise SpecError(f"[samples] key {key!r} is not a method name")
            samples[key] = _get(parser, "samples", key, int)
    axis = _get(parser, "sweep", "axis", str)
    values = _get(parser, "sweep", "values", _float_list, default=[])
    hyper = dict(DEFAULT_HYPER)
    if parser.has_section("hyper"):
        for key in parser.options("hyper"):
            if key not in DEFAULT_HYPER:
                raise SpecError(f"unknown [hyper] key {key!r}")
            cast = float if key in ("rho", "mls_target_cond_prob") else int
            hyper[key] = _get(parser, "hyper", key, cast)
    return ExperimentSpec(config=config, methods=methods, samples=samples,
                          seed=seed, sweep_axis=axis,
                          sweep_values=tuple(values), hyper=hyper)


def _sweep_configs(spec: ExperimentSpec):
    if spec.sweep_axis is None:
        return [(None, spec.config)]
    out = []
    for v in spec.sweep_values:
        if spec.sweep_axis == "gamma_th":
            out.append((v, spec.config.replace(gamma_th=v)))
        else:
            out.append((v, spec.config.replace(mu=(v,) * spec.config.M)))
    return out


def run_method(method: str, config: ChannelConfig, S: int, rng: RngStream,
               hyper: dict, workers: int = 1) -> EstimateResult:
    if method == "ce":
        return est.estimate_ce(config, S, rng, S0=hyper["s0"],
                               rho=hyper["rho"], workers=workers)
    if method == "mls":
        return est.estimate_mls(
            config, S, rng, schedule="auto",
            replications=hyper["mls_replications"],
            target_cond_prob=hyper["mls_target_cond_prob"],
            pilot_samples=hyper["mls_pilot_samples"], workers=workers)
    return est.ESTIMATORS[method](config, S, rng, workers=workers)


def _fmt_mu(config: ChannelConfig) -> str:
    if config.identical_mu:
        return f"{config.mu[0]:.10g}"
    return ";".join(f"{v:.10g}" for v in config.mu)


def _row_from_result(result: EstimateResult, config: ChannelConfig) -> dict:
    rep = metrics.efficiency_report(result) if result.p_hat > 0 else None
    notes = list(result.warnings)
    if result.p_hat <= 0.0:
        notes.append("zero hits at this sample count; derived metrics undefined")
    return {
        "method": result.method,
        "M": config.M,
        "m": config.m,
        "mu": _fmt_mu(config),
        "gamma_th": f"{config.gamma_th:.10g}",
        "S": result.samples,
        "p_hat": f"{result.p_hat:.3e}",
        "var_hat": f"{result.var_hat:.3e}",
        "re_pct": f"{100.0 * rep.re:.3e}" if rep else "",
        "scv": f"{rep.scv:.3e}" if rep else "",
        "wnrv_time": f"{rep.wnrv:.3e}" if rep else "",
        "wnrv_work": f"{rep.wnrv_work:.3e}" if rep else "",
        "wall_time_s": f"{result.wall_time_s:.3e}",
        "seed": result.seed,
        "warnings": ";".join(notes),
    }


def _error_row(method: str, config: ChannelConfig, S: int, seed: int,
               message: str) -> dict:
    return {
        "method": method, "M": config.M, "m": config.m, "mu": _fmt_mu(config),
        "gamma_th": f"{config.gamma_th:.10g}", "S": S, "p_hat": "",
        "var_hat": "", "re_pct": "", "scv": "", "wnrv_time": "",
        "wnrv_work": "", "wall_time_s": "", "seed": seed,
        "warnings": f"error: {message}",
    }


def run_experiment(spec: ExperimentSpec, workers: int = 1, seed: int = None):
    """Run every (sweep point, method) cell; returns (rows, sidecar, hard_failure).

    Inapplicable or failed methods produce an error-tagged row and the run
    continues; hard_failure is set if any method raised at run time (as
    opposed to failing validation).
    """
    base_seed = spec.seed if seed is None else seed
    rows = []
    sidecar = {"hyper": dict(spec.hyper), "seed": base_seed,
               "workers_note": "results are independent of the worker count",
               "results": []}
    hard_failure = False
    stream_id = 0
    for axis_value, config in _sweep_configs(spec):
        for method in spec.methods:
            S = spec.samples[method]
            rng = RngStream(base_seed, stream_id)
            stream_id += 1
            try:
                result = run_method(method, config, S, rng, spec.hyper,
                                    workers=workers)
            except ValueError as exc:
                rows.append(_error_row(method, config, S, base_seed, str(exc)))
                continue
            except RuntimeError as exc:
                rows.append(_error_row(method, config, S, base_seed, str(exc)))
                hard_failure = True
                continue
            rows.append(_row_from_result(result, config))
            sidecar["results"].append({
                "method": method,
                "axis_value": axis_value,
                "config": {"M": config.M, "m": config.m, "mu": list(config.mu),
                           "gamma_th": config.gamma_th},
                "samples": result.samples,
                "stream_id": rng.stream_id,
                "p_hat": result.p_hat,
                "var_hat": result.var_hat,
                "re": metrics.relative_error(result) if result.p_hat > 0 else None,
                "scv": metrics.scv(result) if result.p_hat > 0 else None,
                "wnrv_work": metrics.wnrv_work(result) if result.p_hat > 0 else None,
                "wall_time_s": result.wall_time_s,
                "work_units": result.work_units,
                "diagnostics": result.diagnostics,
            })
    return rows, sidecar, hard_failure


def write_csv(rows, path):
    path = Path(path)
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(str(row[c]) for c in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(payload, path):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def sweep_scv_rows(spec: ExperimentSpec, workers: int = 1, seed: int = None):
    """Plot-data rows (axis_value, method, scv) for the sweep axis."""
    if spec.sweep_axis is None:
        raise SpecError("sweep requires a [sweep] section with axis and values")
    _, sidecar, hard_failure = run_experiment(spec, workers=workers, seed=seed)
    out = []
    for rec in sidecar["results"]:
        if rec["scv"] is not None:
            out.append({"axis_value": f"{rec['axis_value']:.10g}",
                        "method": rec["method"],
                        "scv": f"{rec['scv']:.6e}"})
    return out, sidecar, hard_failure


def write_sweep_csv(rows, path):
    path = Path(path)
    lines = ["axis_value,method,scv"]
    for row in rows:
        lines.append(f"{row['axis_value']},{row['method']},{row['scv']}")
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# verification suite


def _check_within_se(name, result, reference, ref_se, n_se=4.0):
    se = math.sqrt(result.var_hat / result.samples)
    combined = math.sqrt(se * se + ref_se * ref_se)
    dev = abs(result.p_hat - reference)
    ok = dev <= n_se * combined or dev <= 1e-15
    detail = (f"p_hat={result.p_hat:.4e} ref={reference:.4e} "
              f"dev={dev:.2e} allowed={n_se * combined:.2e}")
    return {"check": name, "passed": bool(ok), "detail": detail}


def verify_oracles(seed: int = 20240601, workers: int = 1,
                   samples: int = 200_000) -> list:
    """Closed-form edges, a moderate-rarity cross-check, and variance formulas.

    Returns one pass/fail record per check; used by the `verify` subcommand.
    """
    checks = []
    hyper = dict(DEFAULT_HYPER)
    hyper["s0"] = 20_000

    # closed-form edges: pick one branch-selection and one full-sum instance
    edge_configs = [
        ChannelConfig(M=4, m=1, mu=(0.7,) * 4, gamma_th=0.8),
        ChannelConfig(M=4, m=4, mu=(0.6,) * 4, gamma_th=2.0),
    ]
    sid = 0
    for config in edge_configs:
        exact = closed_form_outage(config)
        for method in METHODS:
            S = samples if method != "mls" else 4000
            result = run_method(method, config, S, RngStream(seed, sid),
                                hyper, workers=workers)
            sid += 1
            checks.append(_check_within_se(
                f"closed-form m={config.m}/{config.M}: {method}",
                result, exact, 0.0))

    # moderate-rarity instance against a large naive MC reference
    config = ChannelConfig(M=3, m=2, mu=(0.5,) * 3, gamma_th=0.5)
    ref = est.estimate_nmc(config, 4_000_000, RngStream(seed, sid),
                           workers=workers)
    sid += 1
    ref_se = math.sqrt(ref.var_hat / ref.samples)
    for method in METHODS:
        S = samples if method != "mls" else 4000
        result = run_method(method, config, S, RngStream(seed, sid), hyper,
                            workers=workers)
        sid += 1
        checks.append(_check_within_se(
            f"cross-check vs naive reference: {method}", result,
            ref.p_hat, ref_se))

    # closed-form single-sample variance of the two selection samplers,
    # on the 1 < m < M instance (both selection events are proper supersets
    # there) against the naive reference probability
    for method in ("uis", "pis"):
        result = run_method(method, config, samples, RngStream(seed, sid),
                            hyper, workers=workers)
        sid += 1
        ell = result.diagnostics["ell1" if method == "uis" else "ell2"]
        q = result.diagnostics["hit_fraction"]
        n = result.samples
        sample_var = ell * ell * q * (1.0 - q) * n / (n - 1)
        formula = ell * ref.p_hat - ref.p_hat * ref.p_hat
        rel = abs(sample_var / formula - 1.0)
        checks.append({
            "check": f"variance closed form: {method}",
            "passed": bool(rel <= 0.05),
            "detail": f"sample={sample_var:.4e} formula={formula:.4e} rel={rel:.3f}",
        })
    return checks
