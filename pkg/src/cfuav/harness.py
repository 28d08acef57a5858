"""Monte Carlo experiment runner: per-trial channel generation, paired scheme
evaluation, metric computation, and CSV persistence.

All schemes within a trial see identical channel draws (witnessed by the
channel_hash column), and every random quantity comes from a (seed, trial,
purpose) stream, so results are bit-identical at any level of parallelism."""

import csv
import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .orchestrator import ALL_SCHEMES, SchemeId, TrialData, run_scheme
from .pilots import assign_pilots_random, simulate_pilot_and_estimate
from .propagation import (channel_stats, draw_angular_spread, draw_channels,
                          large_scale, link_geometry, los_probability,
                          sample_los_state, spatial_correlation,
                          steering_vector)
from .receiver import channel_moments
from .scenario import ExperimentConfig, StreamKey, build_topology, trial_streams
from .powerctl import full_power

log = logging.getLogger(__name__)

CSV_COLUMNS = ("trial", "scheme", "K", "min_se", "success_rate",
               "jain_fairness", "runtime_s", "ao_iterations",
               "fp_iterations_total", "channel_hash")

_METRIC_COLUMNS = ("min_se", "success_rate", "jain_fairness", "runtime_s",
                   "ao_iterations", "fp_iterations_total")


@dataclass(frozen=True)
class MetricsRecord:
    """One (trial, scheme) result row."""

    trial: int
    scheme: str
    num_uavs: int
    min_se: float
    success_rate: float
    jain_fairness: float
    runtime_s: float
    ao_iterations: int
    fp_iterations_total: int
    channel_hash: str


def _se_array(se) -> np.ndarray:
    return np.asarray(getattr(se, "se", se), dtype=float)


def jain_fairness(se) -> float:
    """Jain index of the SE allocation, in percent. All-zero vectors count as
    perfectly uniform (100)."""
    x = _se_array(se)
    if x.size < 1:
        raise ValueError("need at least one UAV")
    total_sq = float(np.sum(x)) ** 2
    denom = x.size * float(np.sum(x ** 2))
    if denom == 0.0:
        log.debug("jain_fairness: all-zero SE vector, reporting 100")
        return 100.0
    # Cauchy-Schwarz bounds the index by 1; clip float overshoot
    return min(100.0, 100.0 * total_sq / denom)


def success_rate(se, se_min: float) -> float:
    """Percentage of UAVs meeting the SE target (boundary counts as success)."""
    if se_min < 0:
        raise ValueError("se_min must be non-negative")
    x = _se_array(se)
    return 100.0 * float(np.count_nonzero(x >= se_min)) / x.size


def min_se(se) -> float:
    x = _se_array(se)
    if x.size < 1:
        raise ValueError("empty SE vector")
    return float(np.min(x))


def prepare_trial(config: ExperimentConfig, trial_index: int) -> TrialData:
    """Generate one trial's channel world: topology, large-scale links,
    channel statistics, pilots, the realization ensemble and its estimates,
    plus cached full-power combiner moments."""
    streams = trial_streams(config, trial_index)
    topo = build_topology(config, StreamKey(config.master_seed, trial_index,
                                            "topology"))
    geom = link_geometry(topo)
    p_los = los_probability(geom)
    is_los = sample_los_state(p_los, streams["los-state"])
    ls = large_scale(geom, is_los, config, streams["shadowing"],
                     streams["rician-k"])
    n_ant = config.antennas_per_oru
    offset = config.array_azimuth_offset_deg
    a_los = steering_vector(geom, n_ant, offset)
    spread = draw_angular_spread(config, streams["angular-spread"],
                                 geom.d_2d.shape)
    corr = spatial_correlation(geom, spread, n_ant, offset)
    stats = channel_stats(ls, a_los, corr)
    assignment = assign_pilots_random(config.num_uavs, config.pilot_len,
                                      streams["pilot-assignment"],
                                      config.pilot_power_w)
    sigma2 = config.noise_power_w
    h = draw_channels(stats, config.n_channel_realizations,
                      streams["scattering"])
    est = simulate_pilot_and_estimate(h, assignment, stats, sigma2,
                                      streams["pilot-noise"])
    p_full = full_power(config.num_uavs, config.p_max_w)
    moments = channel_moments(h, est, p_full, sigma2)
    digest = hashlib.sha256(h.tobytes()).hexdigest()[:16]
    return TrialData(beta=ls.beta, stats=stats, assignment=assignment, h=h,
                     est=est, sigma2=sigma2, moments_full=moments,
                     channel_hash=digest)


def run_trial(config: ExperimentConfig, trial_index: int, schemes):
    """Evaluate the requested schemes on one trial's shared channel data.

    Returns (records, results) where results maps scheme label to the full
    SchemeResult. Runtime covers association + power control + AO only; the
    shared channel and full-power coefficient generation is outside the timer."""
    data = prepare_trial(config, trial_index)
    records = []
    results = {}
    for scheme in schemes:
        t0 = time.perf_counter()
        result = run_scheme(scheme, data, config)
        runtime = time.perf_counter() - t0
        results[scheme.label] = result
        ao_iters = result.trace.count if scheme.uses_ao else 0
        records.append(MetricsRecord(
            trial=trial_index, scheme=scheme.label, num_uavs=config.num_uavs,
            min_se=min_se(result.se), success_rate=success_rate(result.se,
                                                                config.se_min),
            jain_fairness=jain_fairness(result.se), runtime_s=runtime,
            ao_iterations=ao_iters, fp_iterations_total=result.fp_iterations,
            channel_hash=data.channel_hash))
    return records, results


def _worker(args):
    config, trial_index, labels = args
    schemes = [SchemeId(*label.split("+")) for label in labels]
    records, _ = run_trial(config, trial_index, schemes)
    return records


def run_monte_carlo(config: ExperimentConfig, schemes=None,
                    n_jobs: int = 1) -> list:
    """Run all trials of one configuration and return the metric records,
    sorted by (trial, scheme). Failed trials are logged and skipped."""
    if schemes is None:
        schemes = list(ALL_SCHEMES)
    labels = [s.label for s in schemes]
    tasks = [(config, t, labels) for t in range(config.trials)]
    records = []
    if n_jobs <= 1:
        for task in tasks:
            try:
                records.extend(_worker(task))
            except Exception:
                log.exception("trial %d failed; continuing", task[1])
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [(t, pool.submit(_worker, task))
                       for t, task in zip(range(config.trials), tasks)]
            for trial_index, fut in futures:
                try:
                    records.extend(fut.result())
                except Exception:
                    log.exception("trial %d failed; continuing", trial_index)
    records.sort(key=lambda r: (r.num_uavs, r.trial, r.scheme))
    return records


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.9g}"


def aggregate_records(records) -> list:
    """Per-(scheme, K) mean and standard error of every metric column."""
    groups = {}
    for r in records:
        groups.setdefault((r.scheme, r.num_uavs), []).append(r)
    rows = []
    for (scheme, k), rs in sorted(groups.items()):
        row = {"scheme": scheme, "K": k, "n_trials": len(rs)}
        for col in _METRIC_COLUMNS:
            vals = np.array([getattr(r, col) for r in rs], dtype=float)
            row[f"{col}_mean"] = float(np.mean(vals))
            row[f"{col}_stderr"] = (float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
                                    if len(vals) > 1 else 0.0)
        rows.append(row)
    return rows


def write_results(records, path) -> tuple:
    """Write the per-trial CSV plus a per-(scheme, K) aggregate CSV next to
    it. Returns (path, aggregate_path)."""
    path = str(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in records:
                writer.writerow([r.trial, r.scheme, r.num_uavs, _fmt(r.min_se),
                                 _fmt(r.success_rate), _fmt(r.jain_fairness),
                                 _fmt(r.runtime_s), r.ao_iterations,
                                 r.fp_iterations_total, r.channel_hash])
        stem, dot, ext = path.rpartition(".")
        agg_path = f"{stem}_aggregate.{ext}" if dot else f"{path}_aggregate"
        agg_rows = aggregate_records(records)
        header = ["scheme", "K", "n_trials"]
        for col in _METRIC_COLUMNS:
            header += [f"{col}_mean", f"{col}_stderr"]
        with open(agg_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in agg_rows:
                writer.writerow([row["scheme"], row["K"], row["n_trials"]]
                                + [_fmt(row[h]) for h in header[3:]])
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc}") from exc
    return path, agg_path


def read_results(path) -> list:
    """Parse a results CSV back into MetricsRecord rows."""
    records = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected results header in {path!r}")
        for row in reader:
            records.append(MetricsRecord(
                trial=int(row["trial"]), scheme=row["scheme"],
                num_uavs=int(row["K"]), min_se=float(row["min_se"]),
                success_rate=float(row["success_rate"]),
                jain_fairness=float(row["jain_fairness"]),
                runtime_s=float(row["runtime_s"]),
                ao_iterations=int(row["ao_iterations"]),
                fp_iterations_total=int(row["fp_iterations_total"]),
                channel_hash=row["channel_hash"]))
    return records


def dump_links(config: ExperimentConfig, trial_index: int, path) -> str:
    """Debug dump of per-link large-scale state for one trial."""
    streams = trial_streams(config, trial_index)
    topo = build_topology(config, StreamKey(config.master_seed, trial_index,
                                            "topology"))
    geom = link_geometry(topo)
    is_los = sample_los_state(los_probability(geom), streams["los-state"])
    ls = large_scale(geom, is_los, config, streams["shadowing"],
                     streams["rician-k"])
    path = str(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["uav", "oru", "beta", "rician_k_linear", "is_los"])
        for k in range(config.num_uavs):
            for l in range(config.num_orus):
                writer.writerow([k, l, _fmt(ls.beta[k, l]),
                                 _fmt(ls.rician_k_linear[k, l]),
                                 int(ls.is_los[k, l])])
    return path
